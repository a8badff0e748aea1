from dataclasses import dataclass, field
from enum import Enum
from typing import Any, TypedDict

import numpy.typing as npt


class GClassification(str, Enum):
    REPRESENTABLE = "Representable"
    NOT_REPRESENTABLE = "NotRepresentable"
    OPEN_GAP = "OpenGap"

    @property
    def note(self) -> str:
        match self:
            case GClassification.REPRESENTABLE:
                return "explicit cosine model sqrt(2g) cos(angle - lambda) reproduces g cos(alpha - beta)"
            case GClassification.NOT_REPRESENTABLE:
                return "CHSH combination 2*sqrt(2)*g exceeds the local bound 2"
            case GClassification.OPEN_GAP:
                return (
                    "1/2 < g <= 1/sqrt(2): existence of a bounded model is claimed "
                    "without construction; left unresolved"
                )


class DetectorSide(str, Enum):
    A = "A"
    B = "B"


class Emission(TypedDict):
    """One block of hidden variables sent from the source to both detectors."""

    block: int
    lambdas: npt.NDArray[Any]


@dataclass(frozen=True)
class CorrelationEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class ChshEstimate:
    value: float
    stderr: float
    terms: dict[tuple[int, int], CorrelationEstimate] = field(default_factory=dict)
