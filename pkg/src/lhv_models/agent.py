import logging

import mesa
import numpy as np

from src.common.errors import ModelContractError
from src.common.streams import block_rng
from src.lhv_models.hidden_variables import HiddenVariableModel, Responses
from src.lhv_models.types import DetectorSide, Emission

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-12


class SourceAgent(mesa.Agent):
    """Emits one block of hidden variables per step to every detector it feeds."""

    def __init__(
        self,
        model: mesa.Model,
        hv_model: HiddenVariableModel,
        seed: int,
        stream: int,
    ) -> None:
        super().__init__(model)

        self.hv_model = hv_model
        self.seed = seed
        self.stream = stream  # Angle-pair index in the seed-splitting grid.
        self.blocks_emitted = 0

    def emit(self, size: int) -> None:
        rng = block_rng(self.seed, self.stream, self.blocks_emitted)
        emission: Emission = {
            "block": self.blocks_emitted,
            "lambdas": self.hv_model.sample_lambda(rng, size),
        }

        for detector in self.model.grid.get_neighbors(self.pos, include_center=False):  # type: ignore
            detector.inbox.append(emission)

        self.blocks_emitted += 1


class DetectorAgent(mesa.Agent):
    """Applies its response function, at a fixed setting, to each incoming block."""

    def __init__(
        self,
        model: mesa.Model,
        side: DetectorSide,
        setting: float,
        hv_model: HiddenVariableModel,
    ) -> None:
        super().__init__(model)

        self.side = side
        self.setting = setting
        self.hv_model = hv_model

        self.inbox: list[Emission] = []
        self.outcomes: Responses = np.empty(0)
        self.max_abs_outcome = 0.0

    def step(self) -> None:
        if not self.inbox:
            return

        emission = self.inbox.pop(0)
        lambdas = emission["lambdas"]
        if self.side is DetectorSide.A:
            outcomes = self.hv_model.xi(self.setting, lambdas)
        else:
            outcomes = self.hv_model.eta(self.setting, lambdas)

        outcomes = np.asarray(outcomes, dtype=float)
        peak = float(np.max(np.abs(outcomes))) if outcomes.size else 0.0
        if not np.isfinite(peak) or peak > 1.0 + BOUND_TOLERANCE:
            raise ModelContractError(
                f"[Detector {self.side.value}] {self.hv_model.name} response reached "
                f"{peak} at setting {self.setting} in block {emission['block']}"
            )

        self.max_abs_outcome = max(self.max_abs_outcome, peak)
        self.outcomes = outcomes
