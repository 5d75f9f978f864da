"""
Exact noise prediction for data drawn from an isotropic Gaussian mixture.

Used as an oracle for the sampler and guidance algebra; responsibilities are evaluated in log-space
so extreme inputs never produce NaN.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import softmax

from ..errors import ConfigError, ContractError
from .conditions import Condition
from .schedule import NoiseSchedule

__all__ = ["GaussianMixture", "analytic_eps", "posterior_mean", "AnalyticDenoiser"]


@dataclass(frozen=True)
class GaussianMixture:
    """
    Mixture of isotropic Gaussians over latents of one shape.

    `text_offsets`, when given, has shape (text_dim, *latent_shape) and maps a text condition vector
    to a shift applied to every component mean; otherwise the shift is the mean of the vector.
    """
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    text_offsets: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        if weights.ndim != 1 or len(weights) == 0:
            raise ConfigError("Mixture needs a non-empty weight vector")
        if means.shape[0] != len(weights) or variances.shape != weights.shape:
            raise ConfigError("Mixture weights, means and variances disagree on the component count")
        if np.any(weights <= 0.0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"Mixture weights must be positive and sum to 1, got sum {weights.sum()!r}")
        if np.any(variances <= 0.0):
            raise ConfigError("Mixture variances must be positive")
        if self.text_offsets is not None and self.text_offsets.shape[1:] != self.shape:
            raise ConfigError(f"Text offsets shape {self.text_offsets.shape} does not match latents {self.shape}")

    @property
    def shape(self) -> tuple:
        return self.means.shape[1:]

    @property
    def num_components(self) -> int:
        return len(self.weights)

    @classmethod
    def single(cls, mean: np.ndarray, variance: float, text_offsets: Optional[np.ndarray] = None) -> "GaussianMixture":
        mean = np.asarray(mean, dtype=np.float64)
        return cls(np.ones(1), mean[None], np.array([variance]), text_offsets)

    def conditioned(self, cond: Condition) -> tuple[np.ndarray, np.ndarray]:
        """Return (log-weights, means) after applying the text shift and the structural restriction."""
        means = self.means
        if cond.text is not None:
            if self.text_offsets is not None:
                shift = np.tensordot(cond.text, self.text_offsets, axes=1)
            else:
                shift = np.full(self.shape, np.mean(cond.text))
            means = means + shift
        weights = self.weights
        if cond.structural is not None:
            mask = np.asarray(cond.structural, dtype=np.float64)
            if mask.shape != weights.shape:
                raise ContractError(
                    f"Structural condition for the analytic prior must weight {self.num_components} components, "
                    f"got shape {mask.shape}")
            if np.any(mask < 0.0) or not np.any(mask > 0.0):
                raise ContractError("Structural condition must be non-negative with at least one active component")
            weights = weights * mask
        with np.errstate(divide="ignore"):
            return np.log(weights), means


def posterior_mean(x_t: np.ndarray, t: int, schedule: NoiseSchedule, mixture: GaussianMixture,
                   cond: Condition = Condition()) -> np.ndarray:
    """E[x0 | x_t] under the mixture prior."""
    if x_t.shape != mixture.shape:
        raise ContractError(f"Latent shape {x_t.shape} does not match mixture shape {mixture.shape}")
    a = schedule.alpha_bars[t]
    if not a < 1.0:
        raise ContractError(f"Posterior undefined at alpha-bar {a}")
    log_w, means = mixture.conditioned(cond)
    sq = np.sqrt(a)
    v = a * mixture.variances + (1.0 - a)
    flat_x = x_t.reshape(-1)
    flat_mu = means.reshape(len(log_w), -1)
    dist = np.sum((flat_x[None, :] - sq * flat_mu) ** 2, axis=1)
    log_resp = log_w - 0.5 * dist / v - 0.5 * flat_x.size * np.log(v)
    gamma = softmax(log_resp)
    m = (sq * mixture.variances[:, None] * flat_x[None, :] + (1.0 - a) * flat_mu) / v[:, None]
    return (gamma @ m).reshape(x_t.shape)


def analytic_eps(x_t: np.ndarray, t: int, schedule: NoiseSchedule, mixture: GaussianMixture,
                 cond: Condition = Condition()) -> np.ndarray:
    a = schedule.alpha_bars[t]
    x0 = posterior_mean(x_t, t, schedule, mixture, cond)
    return (x_t - np.sqrt(a) * x0) / np.sqrt(1.0 - a)


class AnalyticDenoiser:
    """
    Frame-wise analytic denoiser with the shared call shape of the pair network.

    A single mixture is shared by every frame; a sequence of mixtures is indexed by frame position.
    There are no feature maps, so taps and control residuals are accepted and ignored.
    """

    def __init__(self, schedule: NoiseSchedule, mixture: GaussianMixture | Sequence[GaussianMixture],
                 component_weights: Optional[np.ndarray] = None):
        self.schedule = schedule
        self.mixture = mixture
        self.component_weights = component_weights

    def mixture_at(self, position: int) -> GaussianMixture:
        if isinstance(self.mixture, GaussianMixture):
            return self.mixture
        return self.mixture[position]

    def structural_guide(self, frames: np.ndarray) -> Optional[np.ndarray]:
        return self.component_weights

    def __call__(self, latents: np.ndarray, t: int, cond: Condition, *, positions: Optional[Sequence[int]] = None,
                 taps=None, control=None) -> np.ndarray:
        if positions is None:
            positions = range(len(latents))
        if len(positions) != len(latents):
            raise ContractError(f"{len(positions)} positions given for {len(latents)} latents")
        return np.stack([
            analytic_eps(x, t, self.schedule, self.mixture_at(p), cond)
            for x, p in zip(latents, positions)
        ])
