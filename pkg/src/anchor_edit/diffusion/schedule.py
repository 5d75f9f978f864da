"""
Noise schedule and deterministic DDIM stepping in both directions.

Step indexing: t=0 is the cleanest (data) end, sampling runs t = num_steps-1 -> 0.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigError, ContractError

__all__ = ["LatentGrid", "NoiseSchedule", "make_linear_schedule", "ddim_step", "ddim_invert_step",
           "predict_x0", "add_noise", "ddim_sample", "ddim_invert", "invert_one", "check_same_shape",
           "check_finite"]

# A single frame latent of shape (channels, height, width); stacks carry a leading frame axis.
LatentGrid = np.ndarray

EpsFn = Callable[[np.ndarray, int], np.ndarray]


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "latents"):
    if a.shape != b.shape:
        raise ContractError(f"Shape mismatch between {what}: {a.shape} vs {b.shape}")


def check_finite(x: np.ndarray, what: str = "latent") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise ContractError(f"Non-finite values in {what}")
    return x


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta, alpha and cumulative alpha-bar for the diffusion process."""
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def num_steps(self) -> int:
        return len(self.betas)

    @classmethod
    def from_betas(cls, betas) -> "NoiseSchedule":
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) < 2:
            raise ConfigError(f"Schedule needs at least 2 steps, got {betas.shape}")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ConfigError("All betas must lie in (0, 1)")
        if np.any(np.diff(betas) < 0.0):
            raise ConfigError("Betas must be non-decreasing")
        alphas = 1.0 - betas
        return cls(betas, alphas, np.cumprod(alphas))

    @classmethod
    def from_alpha_bars(cls, alpha_bars) -> "NoiseSchedule":
        """Build a schedule from an explicit, strictly decreasing alpha-bar sequence in (0, 1]."""
        alpha_bars = np.asarray(alpha_bars, dtype=np.float64)
        if alpha_bars.ndim != 1 or len(alpha_bars) < 2:
            raise ConfigError(f"Schedule needs at least 2 steps, got {alpha_bars.shape}")
        if np.any(alpha_bars <= 0.0) or np.any(alpha_bars > 1.0):
            raise ConfigError("All alpha-bars must lie in (0, 1]")
        if np.any(np.diff(alpha_bars) >= 0.0):
            raise ConfigError("Alpha-bars must be strictly decreasing")
        alphas = np.empty_like(alpha_bars)
        alphas[0] = alpha_bars[0]
        alphas[1:] = alpha_bars[1:] / alpha_bars[:-1]
        return cls(1.0 - alphas, alphas, alpha_bars)


def make_linear_schedule(num_steps: int = 50, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linearly spaced betas, inclusive of both endpoints."""
    if num_steps < 2:
        raise ConfigError(f"num_steps must be >= 2, got {num_steps}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ConfigError(f"Betas must satisfy 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    return NoiseSchedule.from_betas(np.linspace(beta_start, beta_end, num_steps))


def _check_step(x_t: np.ndarray, eps_hat: np.ndarray, t: int, lo: int, hi: int):
    check_same_shape(x_t, eps_hat, "x_t and eps_hat")
    if not lo <= t <= hi:
        raise ContractError(f"Step index {t} outside [{lo}, {hi}]")


def predict_x0(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    a_t = schedule.alpha_bars[t]
    return (x_t - np.sqrt(1.0 - a_t) * eps_hat) / np.sqrt(a_t)


def _move(x_t: np.ndarray, eps_hat: np.ndarray, t: int, target: int, schedule: NoiseSchedule) -> np.ndarray:
    x0 = predict_x0(x_t, eps_hat, t, schedule)
    a_s = schedule.alpha_bars[target]
    return np.sqrt(a_s) * x0 + np.sqrt(1.0 - a_s) * eps_hat


def ddim_step(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """x_t -> x_{t-1}"""
    _check_step(x_t, eps_hat, t, 1, schedule.num_steps - 1)
    return _move(x_t, eps_hat, t, t - 1, schedule)


def ddim_invert_step(x_t: np.ndarray, eps_hat: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    """x_t -> x_{t+1}, the mirror of `ddim_step`"""
    _check_step(x_t, eps_hat, t, 0, schedule.num_steps - 2)
    return _move(x_t, eps_hat, t, t + 1, schedule)


def add_noise(x0: np.ndarray, noise: np.ndarray, t: int, schedule: NoiseSchedule) -> np.ndarray:
    check_same_shape(x0, noise, "x0 and noise")
    a_t = schedule.alpha_bars[t]
    return np.sqrt(a_t) * x0 + np.sqrt(1.0 - a_t) * noise


def ddim_sample(x_T: np.ndarray, schedule: NoiseSchedule, eps_fn: EpsFn) -> np.ndarray:
    """Run the full deterministic sampler from the noisiest step down to t=0."""
    x = x_T
    for t in range(schedule.num_steps - 1, 0, -1):
        x = ddim_step(x, eps_fn(x, t), t, schedule)
    return x


def ddim_invert(x0: np.ndarray, schedule: NoiseSchedule, eps_fn: EpsFn, fixed_point_iters: int = 3) -> np.ndarray:
    """
    Map a clean latent to the noisiest step.

    Each step evaluates eps at timestep t+1 on the current estimate of x_{t+1}, starting from x_t and
    refining `fixed_point_iters` times, so that `ddim_sample` retraces the same eps values.
    """
    x = x0
    for t in range(schedule.num_steps - 1):
        x = invert_one(x, t, schedule, lambda guess: eps_fn(guess, t + 1), fixed_point_iters)
    return x


def invert_one(x_t: np.ndarray, t: int, schedule: NoiseSchedule, eps_at_next: Callable[[np.ndarray], np.ndarray],
               fixed_point_iters: int) -> np.ndarray:
    guess = x_t
    for _ in range(fixed_point_iters + 1):
        guess = ddim_invert_step(x_t, eps_at_next(guess), t, schedule)
    return guess
