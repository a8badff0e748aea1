from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, TypedDict

import pandas as pd

type ParamValue = float | int | str | tuple[float, ...]


class Subcommand(str, Enum):
    CHSH = "chsh"
    LHV_SIMULATE = "lhv-simulate"
    FEASIBILITY = "feasibility"
    GFACTOR = "gfactor"
    SPREADING = "spreading"
    VACUUM = "vacuum"
    RANDOMFIELD = "randomfield"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class Param:
    """One configurable key: `parse` turns its text form into a value."""

    parse: Callable[[str], ParamValue]
    default: ParamValue
    help: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: Subcommand
    params: dict[str, ParamValue]
    seed: int = 12345
    format: OutputFormat = OutputFormat.CSV
    out: Path | None = None

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def resolved(self) -> dict[str, Any]:
        """JSON-ready echo of the configuration."""

        return {
            "subcommand": self.subcommand.value,
            "seed": self.seed,
            "format": self.format.value,
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.params.items())},
        }


class CheckRecord(TypedDict):
    name: str
    passed: bool
    detail: str


@dataclass
class ExperimentResult:
    table: pd.DataFrame
    checks: list[CheckRecord] = field(default_factory=list)

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckRecord(name=name, passed=bool(passed), detail=detail))

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c["passed"]]
