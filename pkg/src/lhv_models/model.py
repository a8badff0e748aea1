import logging
import math

import mesa
import networkx as nx
import numpy as np

from src.common.streams import merge_moments
from src.lhv_models.agent import DetectorAgent, SourceAgent
from src.lhv_models.hidden_variables import HiddenVariableModel
from src.lhv_models.types import CorrelationEstimate, DetectorSide

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 50_000

SOURCE_NODE = 0
DETECTOR_A_NODE = 1
DETECTOR_B_NODE = 2


class BellTestModel(mesa.Model):
    """A source feeding two detectors; each step runs one block of trials.

    The topology is a directed graph source -> A, source -> B. Per-block product
    statistics are merged in block order, so the estimate depends only on
    (hidden-variable model, settings, n_samples, seed, stream).
    """

    def __init__(
        self,
        hv_model: HiddenVariableModel,
        alpha: float,
        beta: float,
        n_samples: int,
        seed: int,
        stream: int = 0,
        block_size: int = DEFAULT_BLOCK_SIZE,
    ) -> None:
        super().__init__(seed=seed)

        self.hv_model = hv_model
        self.n_samples = n_samples
        self.seed = seed
        self.block_size = block_size
        self.samples_done = 0

        graph = nx.DiGraph()
        graph.add_nodes_from([SOURCE_NODE, DETECTOR_A_NODE, DETECTOR_B_NODE])
        graph.add_edge(SOURCE_NODE, DETECTOR_A_NODE)
        graph.add_edge(SOURCE_NODE, DETECTOR_B_NODE)
        self.grid = mesa.space.NetworkGrid(graph)

        self.source = SourceAgent(self, hv_model, seed, stream)
        self.detector_a = DetectorAgent(self, DetectorSide.A, alpha, hv_model)
        self.detector_b = DetectorAgent(self, DetectorSide.B, beta, hv_model)
        self.grid.place_agent(self.source, SOURCE_NODE)
        self.grid.place_agent(self.detector_a, DETECTOR_A_NODE)
        self.grid.place_agent(self.detector_b, DETECTOR_B_NODE)

        self.block_counts: list[int] = []
        self.block_means: list[float] = []
        self.block_m2s: list[float] = []

        self.datacollector = mesa.DataCollector(
            model_reporters={
                "Samples": "samples_done",
                "Mean": lambda m: m.current_estimate().mean,
                "Stderr": lambda m: m.current_estimate().stderr,
            }
        )

    def step(self) -> None:
        if self.finished():
            return

        size = min(self.block_size, self.n_samples - self.samples_done)
        self.source.emit(size)
        self.detector_a.step()
        self.detector_b.step()

        products = self.detector_a.outcomes * self.detector_b.outcomes
        mean = float(np.mean(products))
        self.block_counts.append(size)
        self.block_means.append(mean)
        self.block_m2s.append(float(np.sum((products - mean) ** 2)))
        self.samples_done += size

        self.datacollector.collect(self)
        logger.debug(
            "[BellTest] %s block %d: %d/%d samples",
            self.hv_model.name,
            len(self.block_counts),
            self.samples_done,
            self.n_samples,
        )

    def finished(self) -> bool:
        return self.samples_done >= self.n_samples

    def run(self) -> CorrelationEstimate:
        while not self.finished():
            self.step()
        return self.current_estimate()

    def current_estimate(self) -> CorrelationEstimate:
        n, mean, m2 = merge_moments(self.block_counts, self.block_means, self.block_m2s)
        stderr = 0.0
        if n > 1:
            stderr = math.sqrt(max(m2, 0.0) / (n - 1)) / math.sqrt(n)
        return CorrelationEstimate(mean=mean, stderr=stderr, n_samples=n, seed=self.seed)
