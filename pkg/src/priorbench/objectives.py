"""The two training objectives under comparison.

Diffusion: predict the Gaussian noise mixed into a clean latent by a
scaled-linear forward process, squared error on the noise.

Rectified flow: regress the constant velocity x0 - x1 of the straight
interpolation path x_t = (1 - t) x1 + t x0, with t drawn logit-normal.
Orientation throughout: t = 0 is noise, t = 1 is data.

Both losses average four independent timestep draws per batch, and reduce
by mean over batch rows, latent dimensions, and the four draws.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .network import PriorNetwork
from .rng import SeededRng

TIMESTEP_DRAWS = 4
DEFAULT_SCHEDULE_STEPS = 1000
DEFAULT_BETA_START = 8.5e-4
DEFAULT_BETA_END = 1.2e-2


@dataclass
class NoiseSchedule:
    """Beta/alpha tables of a T-step forward process (index 0 is step k=1)."""

    betas: np.ndarray       # [T]
    alphas: np.ndarray      # [T], 1 - beta
    alpha_bars: np.ndarray  # [T], cumulative product of alpha

    @property
    def steps(self) -> int:
        return self.betas.shape[0]

    def alpha_bar_at(self, k) -> np.ndarray:
        """alpha_bar for 1-based schedule index k (scalar or array)."""
        k = np.asarray(k)
        if np.any(k < 1) or np.any(k > self.steps):
            raise ValueError(f"schedule index out of range 1..{self.steps}: {k}")
        return self.alpha_bars[k - 1]


def build_scaled_linear_schedule(steps: int = DEFAULT_SCHEDULE_STEPS,
                                 beta_start: float = DEFAULT_BETA_START,
                                 beta_end: float = DEFAULT_BETA_END) -> NoiseSchedule:
    """Schedule with beta linear in sqrt(beta) between the two endpoints."""
    if steps < 2:
        raise ConfigError(f"schedule needs at least 2 steps, got {steps}")
    if not (0.0 < beta_start < beta_end < 1.0):
        raise ConfigError(
            f"need 0 < beta_start < beta_end < 1, got ({beta_start}, {beta_end})")
    sqrt_betas = np.linspace(np.sqrt(beta_start), np.sqrt(beta_end), steps)
    betas = sqrt_betas**2
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return NoiseSchedule(betas=betas, alphas=alphas, alpha_bars=alpha_bars)


def diffusion_noising(x0: np.ndarray, k, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Forward marginal x_k = sqrt(abar_k) x0 + sqrt(1 - abar_k) eps.

    ``k`` is a 1-based schedule index, scalar or per-row [B].
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x0.shape:
        raise ValueError(f"noise shape {eps.shape} does not match latents {x0.shape}")
    abar = np.asarray(schedule.alpha_bar_at(k), dtype=np.float64)
    if abar.ndim == 1:
        abar = abar[:, None]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def sample_logit_normal_t(rng: SeededRng, n: int = 1) -> np.ndarray:
    """Timesteps t = logistic(z), z ~ N(0, 1); mass concentrates near 0.5."""
    z = rng.standard_normal(n)
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class FlowSample:
    """One draw of the rectified-flow interpolation for a batch."""

    x0: np.ndarray      # clean latents [B x D]
    x1: np.ndarray      # noise [B x D]
    t: np.ndarray       # [B] in (0, 1)
    x_t: np.ndarray     # (1 - t) x1 + t x0
    v_true: np.ndarray  # x0 - x1


def flow_make_sample(x0: np.ndarray, rng: SeededRng) -> FlowSample:
    """Draw noise and logit-normal times, then interpolate."""
    x0 = np.asarray(x0, dtype=np.float64)
    b, d = x0.shape
    x1 = rng.standard_normal(b, d)
    t = sample_logit_normal_t(rng, b)
    x_t = (1.0 - t)[:, None] * x1 + t[:, None] * x0
    return FlowSample(x0=x0, x1=x1, t=t, x_t=x_t, v_true=x0 - x1)


@dataclass
class LossReport:
    """Scalar loss, the four per-draw sub-losses, and parameter gradients."""

    value: float
    sub_losses: np.ndarray  # [TIMESTEP_DRAWS]
    grads: dict


def _accumulate(total: dict | None, grads: dict) -> dict:
    if total is None:
        return grads
    for name in total:
        total[name] += grads[name]
    return total


def diffusion_loss(x0: np.ndarray, conds: np.ndarray, net: PriorNetwork,
                   schedule: NoiseSchedule, rng: SeededRng) -> LossReport:
    """Noise-prediction MSE averaged over four independent timestep draws.

    Each draw samples a per-row schedule index k uniform on 1..T and fresh
    noise, forms x_k, and scores ||eps - net(x_k, k/T, c)||^2 averaged over
    batch rows and latent dimensions.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    b, d = x0.shape
    steps = schedule.steps
    sub_losses = np.zeros(TIMESTEP_DRAWS)
    grads = None
    for j in range(TIMESTEP_DRAWS):
        k = rng.integers(b, 1, steps)
        eps = rng.standard_normal(b, d)
        x_k = diffusion_noising(x0, k, eps, schedule)
        pred, cache = net.forward_cached(x_k, k / steps, conds)
        diff = pred - eps
        sub_losses[j] = np.mean(diff**2)
        dout = 2.0 * diff / (b * d * TIMESTEP_DRAWS)
        grads = _accumulate(grads, net.backward(cache, dout))
    return LossReport(value=float(np.mean(sub_losses)), sub_losses=sub_losses, grads=grads)


def flow_loss(x0: np.ndarray, conds: np.ndarray, net: PriorNetwork,
              rng: SeededRng) -> LossReport:
    """Velocity-regression MSE averaged over four independent (x1, t) draws."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    b, d = x0.shape
    sub_losses = np.zeros(TIMESTEP_DRAWS)
    grads = None
    for j in range(TIMESTEP_DRAWS):
        sample = flow_make_sample(x0, rng)
        pred, cache = net.forward_cached(sample.x_t, sample.t, conds)
        diff = pred - sample.v_true
        sub_losses[j] = np.mean(diff**2)
        dout = 2.0 * diff / (b * d * TIMESTEP_DRAWS)
        grads = _accumulate(grads, net.backward(cache, dout))
    return LossReport(value=float(np.mean(sub_losses)), sub_losses=sub_losses, grads=grads)
