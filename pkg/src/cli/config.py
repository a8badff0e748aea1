"""Parameter schema, named presets and the flat key=value config file format.

Precedence, lowest first: schema defaults, preset, config file, command-line flags.
"""

import math
from pathlib import Path
from typing import Mapping

from src.cli.types import ExperimentConfig, OutputFormat, Param, ParamValue, Subcommand
from src.common.errors import UsageError

QUARTER_PI = math.pi / 4.0


def _float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise UsageError(f"expected a number, got {text!r}") from exc
    if not math.isfinite(value):
        raise UsageError(f"expected a finite number, got {text!r}")
    return value


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"expected an integer, got {text!r}") from exc


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")
    return tuple(_float(p) for p in parts)


def _choice(*options: str):
    def parse(text: str) -> str:
        if text not in options:
            raise UsageError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


CHSH_ALPHAS = (math.pi / 2.0, 0.0)
CHSH_BETAS = (QUARTER_PI, -QUARTER_PI)
GRID_ANGLES = tuple(k * QUARTER_PI for k in range(5))
UNIT_CUBE = (-1.0, 1.0, -1.0, 1.0, -1.0, 1.0)
OFFSET_BOX = (2.0, 4.0, -1.0, 1.0, -1.0, 1.0)

_ANGLES = {
    "alphas": Param(_floats, CHSH_ALPHAS, "side-A angles, radians"),
    "betas": Param(_floats, CHSH_BETAS, "side-B angles, radians"),
}
_PACKETS = {
    "eps0": Param(_float, 1.0, "initial packet width"),
    "mass": Param(_float, 1.0, "particle mass M"),
    "hbar": Param(_float, 1.0, "reduced Planck constant"),
    "box_a": Param(_floats, OFFSET_BOX, "detector A as xlo,xhi,ylo,yhi,zlo,zhi"),
    "box_b": Param(_floats, UNIT_CUBE, "detector B as xlo,xhi,ylo,yhi,zlo,zhi"),
}

SCHEMA: dict[Subcommand, dict[str, Param]] = {
    Subcommand.CHSH: {**_ANGLES, "g": Param(_float, 1.0, "visibility scaling every correlation")},
    Subcommand.LHV_SIMULATE: {
        **_ANGLES,
        **_PACKETS,
        "model": Param(_choice("cosine", "sign", "constant", "random", "product"), "cosine", "hidden-variable model"),
        "g": Param(_float, 0.5, "cosine-model visibility"),
        "n": Param(_int, 100_000, "samples per angle pair"),
        "n_models": Param(_int, 1, "number of random-response models"),
        "radius": Param(_float, 2.0, "exterior-ball radius L of the product representation"),
    },
    Subcommand.FEASIBILITY: {
        **_ANGLES,
        "g_grid": Param(_floats, tuple(k / 10.0 for k in range(11)), "visibilities to test"),
        "tol": Param(_float, 1e-6, "bisection tolerance on critical g"),
        "n": Param(_int, 20_000, "samples per angle pair when replaying the largest feasible certificate"),
    },
    Subcommand.GFACTOR: {
        **_PACKETS,
        "box_a": Param(_floats, UNIT_CUBE, "detector A as xlo,xhi,ylo,yhi,zlo,zhi"),
        "shifts": Param(_floats, (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0), "translations of detector A along x"),
        "times": Param(_floats, (0.0,), "evolution times"),
        "alpha": Param(_float, 0.0, "side-A angle"),
        "beta": Param(_float, 0.0, "side-B angle"),
    },
    Subcommand.SPREADING: {
        **_PACKETS,
        "times": Param(_floats, (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 1e3, 1e6), "evolution times"),
    },
    Subcommand.VACUUM: {
        "m": Param(_float, 1.0, "field mass"),
        "distances": Param(_floats, (0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 20.0), "spacelike separations"),
        "fit_distances": Param(_floats, (2.0, 4.0, 8.0, 16.0), "separations (units of 1/m) for the decay fit"),
        "cluster": Param(_int, 0, "1 adds the cluster-residual sweep"),
        "width": Param(_float, 0.5, "test-function width for the cluster sweep"),
    },
    Subcommand.RANDOMFIELD: {
        "m": Param(_float, 1.0, "field mass"),
        "cutoff": Param(_float, 8.0, "momentum cutoff"),
        "n_per_axis": Param(_int, 48, "lattice points per axis"),
        "damping": Param(_float, -1.0, "imaginary-time damping; negative means 8 / cutoff"),
        "samples": Param(_int, 10_000, "Monte Carlo samples"),
        "separations": Param(_floats, (0.5, 1.0, 2.0, 4.0), "separations for the continuum comparison"),
    },
}

PRESETS: dict[str, tuple[Subcommand, dict[str, ParamValue]]] = {
    "chsh-tsirelson": (Subcommand.CHSH, {"alphas": CHSH_ALPHAS, "betas": CHSH_BETAS, "g": 1.0}),
    "product-representation": (
        Subcommand.LHV_SIMULATE,
        {"model": "product", "alphas": GRID_ANGLES, "betas": GRID_ANGLES, "n": 100_000, "radius": 2.0},
    ),
    "cosine-threshold": (Subcommand.LHV_SIMULATE, {"model": "cosine", "g": 0.5}),
    "vacuum-default": (Subcommand.VACUUM, {"m": 1.0}),
    "cluster-decay": (Subcommand.VACUUM, {"m": 1.0, "cluster": 1}),
    "randomfield-default": (Subcommand.RANDOMFIELD, {"m": 1.0, "cutoff": 8.0, "n_per_axis": 48, "samples": 10_000}),
}


def read_config_file(path: Path) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; blank lines are ignored."""

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{number}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def resolve_config(
    subcommand: Subcommand,
    preset: str | None = None,
    file_values: Mapping[str, str] | None = None,
    overrides: Mapping[str, str] | None = None,
    seed: int = 12345,
    fmt: OutputFormat = OutputFormat.CSV,
    out: Path | None = None,
) -> ExperimentConfig:
    schema = SCHEMA[subcommand]
    params: dict[str, ParamValue] = {key: p.default for key, p in schema.items()}

    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; known: {', '.join(sorted(PRESETS))}")
        preset_command, preset_values = PRESETS[preset]
        if preset_command is not subcommand:
            raise UsageError(f"preset {preset!r} belongs to '{preset_command.value}', not '{subcommand.value}'")
        params.update(preset_values)

    for source in (file_values or {}, overrides or {}):
        for key, text in source.items():
            if key not in schema:
                raise UsageError(f"unknown key {key!r} for '{subcommand.value}'")
            try:
                params[key] = schema[key].parse(text)
            except UsageError as exc:
                raise UsageError(f"{key}: {exc}") from exc

    return ExperimentConfig(subcommand=subcommand, params=params, seed=seed, format=fmt, out=out)
