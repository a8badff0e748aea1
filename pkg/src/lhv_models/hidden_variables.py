"""Hidden-variable models: a lambda sampler plus two bounded response functions.

Every model works on blocks: `sample_lambda(rng, size)` returns an array whose
first axis indexes samples, and `xi` / `eta` map a setting plus that block to one
response per sample.
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Self, Sequence

import numpy as np
import numpy.typing as npt

from src.common.errors import DomainError, ValidationError
from src.lhv_feasibility.types import CorrelationMatrix, FeasibilityResult

Block = npt.NDArray[Any]
Responses = npt.NDArray[np.float64]

TWO_PI = 2.0 * math.pi


class HiddenVariableModel(ABC):
    name: str = "model"

    @abstractmethod
    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block: ...

    @abstractmethod
    def xi(self, alpha: float, lambdas: Block) -> Responses: ...

    @abstractmethod
    def eta(self, beta: float, lambdas: Block) -> Responses: ...


class CosineModel(HiddenVariableModel):
    """lambda uniform on [0, 2pi); xi = sqrt(2g) cos(alpha - lambda), eta likewise.

    E xi eta = g cos(alpha - beta). The amplitude sqrt(2g) stays within 1 only for
    g <= 1/2, so larger g is rejected.
    """

    name = "cosine"

    def __init__(self, g: float) -> None:
        if not 0.0 <= g <= 0.5:
            raise DomainError(f"cosine model needs 0 <= g <= 1/2, got g={g}")
        self.g = float(g)
        self.amplitude = math.sqrt(2.0 * self.g)

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        return rng.uniform(0.0, TWO_PI, size)

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        return self.amplitude * np.cos(alpha - lambdas)

    def eta(self, beta: float, lambdas: Block) -> Responses:
        return self.amplitude * np.cos(beta - lambdas)


class ConstantModel(HiddenVariableModel):
    """Setting-independent responses. (1, 1) is a deterministic strategy, (0, 0) the trivial model."""

    name = "constant"

    def __init__(self, xi_value: float = 1.0, eta_value: float = 1.0) -> None:
        self.xi_value = float(xi_value)
        self.eta_value = float(eta_value)

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        return np.zeros(size)

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        return np.full(len(lambdas), self.xi_value)

    def eta(self, beta: float, lambdas: Block) -> Responses:
        return np.full(len(lambdas), self.eta_value)


class SignModel(HiddenVariableModel):
    """Deterministic +-1 responses sign cos(setting - lambda), lambda uniform.

    Gives the triangle correlation 1 - 2|alpha - beta|/pi on [0, pi].
    """

    name = "sign"

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        return rng.uniform(0.0, TWO_PI, size)

    @staticmethod
    def _sign(values: Responses) -> Responses:
        return np.where(values >= 0.0, 1.0, -1.0)

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        return self._sign(np.cos(alpha - lambdas))

    def eta(self, beta: float, lambdas: Block) -> Responses:
        return self._sign(np.cos(beta - lambdas))


class StrategyMixtureModel(HiddenVariableModel):
    """Convex mixture of deterministic sign strategies over a finite angle set.

    lambda is the index of the strategy, drawn with probability `weights[k]`; the
    responses at alphas[i] / betas[j] are s_k[i] / t_k[j].
    """

    name = "strategy-mixture"

    def __init__(
        self,
        alphas: Sequence[float],
        betas: Sequence[float],
        signs_a: npt.ArrayLike,
        signs_b: npt.ArrayLike,
        weights: npt.ArrayLike,
    ) -> None:
        self.alphas = np.asarray(alphas, dtype=float)
        self.betas = np.asarray(betas, dtype=float)
        self.signs_a = np.asarray(signs_a, dtype=float)
        self.signs_b = np.asarray(signs_b, dtype=float)
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        if weights.sum() <= 0.0:
            raise ValidationError("mixture weights must have positive mass")
        self.weights = weights / weights.sum()
        if self.signs_a.shape != (len(self.weights), len(self.alphas)):
            raise ValidationError(f"signs_a has shape {self.signs_a.shape}")
        if self.signs_b.shape != (len(self.weights), len(self.betas)):
            raise ValidationError(f"signs_b has shape {self.signs_b.shape}")

    @classmethod
    def from_certificate(cls, result: FeasibilityResult, target: CorrelationMatrix) -> Self:
        """Replay a feasible LP certificate: strategy k with its convex weight."""

        if not result.feasible or result.weights is None:
            raise ValidationError("only a feasible certificate defines a strategy mixture")
        if target.alphas is None or target.betas is None:
            raise ValidationError("target carries no measurement angles")
        return cls(
            target.alphas,
            target.betas,
            [s.s for s in result.strategies],
            [s.t for s in result.strategies],
            result.weights,
        )

    @staticmethod
    def _column(settings: npt.NDArray[np.float64], value: float) -> int:
        matches = np.flatnonzero(np.isclose(settings, value, rtol=0.0, atol=1e-12))
        if matches.size == 0:
            raise ValidationError(f"setting {value} is not part of the strategy angle set")
        return int(matches[0])

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        return rng.choice(len(self.weights), size=size, p=self.weights)

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        return self.signs_a[lambdas, self._column(self.alphas, alpha)]

    def eta(self, beta: float, lambdas: Block) -> Responses:
        return self.signs_b[lambdas, self._column(self.betas, beta)]


class RandomResponseModel(HiddenVariableModel):
    """Finitely many hidden states with smooth random responses squashed into [-1, 1].

    xi(alpha, k) = tanh(gain * (c_k + sum_h a_kh cos(h alpha) + b_kh sin(h alpha))),
    and eta the same with its own coefficients.
    """

    name = "random-response"

    def __init__(
        self,
        weights: npt.ArrayLike,
        coeffs_a: npt.ArrayLike,
        coeffs_b: npt.ArrayLike,
        gain: float = 1.0,
    ) -> None:
        self.weights = np.asarray(weights, dtype=float)
        self.weights = self.weights / self.weights.sum()
        # shape (n_hidden, 1 + 2 * harmonics)
        self.coeffs_a = np.asarray(coeffs_a, dtype=float)
        self.coeffs_b = np.asarray(coeffs_b, dtype=float)
        self.gain = float(gain)

    @classmethod
    def random(
        cls, rng: np.random.Generator, n_hidden: int = 8, harmonics: int = 3
    ) -> Self:
        weights = rng.dirichlet(np.ones(n_hidden))
        width = 1 + 2 * harmonics
        coeffs_a = rng.normal(size=(n_hidden, width))
        coeffs_b = rng.normal(size=(n_hidden, width))
        gain = float(rng.uniform(0.5, 20.0))
        return cls(weights, coeffs_a, coeffs_b, gain)

    def _features(self, angle: float) -> npt.NDArray[np.float64]:
        harmonics = (self.coeffs_a.shape[1] - 1) // 2
        h = np.arange(1, harmonics + 1)
        return np.concatenate(([1.0], np.cos(h * angle), np.sin(h * angle)))

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        return rng.choice(len(self.weights), size=size, p=self.weights)

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        return np.tanh(self.gain * (self.coeffs_a @ self._features(alpha)))[lambdas]

    def eta(self, beta: float, lambdas: Block) -> Responses:
        return np.tanh(self.gain * (self.coeffs_b @ self._features(beta)))[lambdas]
