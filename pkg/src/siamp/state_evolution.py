"""Scalar state recursion predicting the per-iteration effective noise.

In the large-system limit the per-device effective observation behaves
like the truth plus isotropic complex Gaussian noise of variance tau_t^2
per antenna; tau evolves by adding the load-scaled per-antenna MSE of the
denoiser to the channel noise floor.  The MSE expectation is estimated by
Monte Carlo over the generative model (activity case, channels, noise,
and in SI mode the previous block's effective observation).
"""

from dataclasses import dataclass

import numpy as np

from .denoiser import denoise_rows
from .errors import InvalidConfig
from .model import ScenarioConfig
from .streams import substream

STREAM_SE = "se-sampling"

__all__ = ["SeParams", "SeTrace", "se_step", "se_fixed_point"]


@dataclass(frozen=True)
class SeParams:
    """Inputs of the state recursion."""

    noise_variance: float
    load: float  # devices per pilot symbol, N/L
    num_antennas: int
    lam: float
    alpha: float
    beta: float
    gammas: np.ndarray  # support of the channel-gain distribution
    weights: np.ndarray  # matching probabilities
    sample_count: int = 100_000
    tau_prev: float | None = None  # converged level of the previous block (SI mode)

    def __post_init__(self):
        gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "weights", weights)
        if gammas.shape != weights.shape:
            raise InvalidConfig("gamma support and weights must align")
        if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0.0):
            raise InvalidConfig("gamma weights must be a distribution")
        if self.sample_count < 1:
            raise InvalidConfig("sample_count must be positive")
        if not self.noise_variance > 0.0 or not self.load > 0.0:
            raise InvalidConfig("noise_variance and load must be positive")
        if self.tau_prev is not None and not self.tau_prev > 0.0:
            raise InvalidConfig("tau_prev must be positive when given")

    @classmethod
    def from_scenario(cls, config: ScenarioConfig, sample_count: int = 100_000,
                      tau_prev: float | None = None) -> "SeParams":
        """Gains sampled from the scenario's empirical path-loss distribution."""
        gammas = np.asarray(config.path_losses, dtype=float)
        weights = np.full(gammas.shape, 1.0 / gammas.size)
        return cls(noise_variance=config.noise_variance,
                   load=config.num_devices / config.pilot_length,
                   num_antennas=config.num_antennas,
                   lam=config.activity_rate, alpha=config.persistence,
                   beta=config.beta, gammas=gammas, weights=weights,
                   sample_count=sample_count, tau_prev=tau_prev)

    @property
    def mean_gamma(self) -> float:
        return float(np.dot(self.gammas, self.weights))


@dataclass
class SeTrace:
    """tau_t^2 sequence with Monte Carlo standard errors per step."""

    tau_sq: np.ndarray
    stderr: np.ndarray
    converged: bool

    @property
    def fixed_point(self) -> float:
        return float(self.tau_sq[-1])


def _complex_std_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _sample_case(rng: np.random.Generator, params: SeParams, size: int):
    priors = np.array([
        params.alpha * params.lam,
        (1.0 - params.alpha) * params.lam,
        params.beta * (1.0 - params.lam),
        (1.0 - params.beta) * (1.0 - params.lam),
    ])
    case = rng.choice(4, size=size, p=priors)
    active_now = (case == 0) | (case == 2)
    active_prev = (case == 0) | (case == 1)
    return active_now, active_prev


def se_step(tau_sq: float, params: SeParams, variant: str,
            rng: np.random.Generator, denoiser_fn=None):
    """One recursion step: (next tau^2, Monte Carlo standard error).

    Draws (activity case, channel gain, truth, noise) per sample, applies
    the denoiser at the current tau, and averages the per-antenna squared
    error.  `denoiser_fn(x_tilde, x_true, prev_obs)` replaces the real
    denoiser when given (test hook).
    """
    if not tau_sq > 0.0:
        raise InvalidConfig(f"tau_sq must be positive, got {tau_sq}")
    if variant not in ("si", "nosi"):
        raise ValueError(f"variant must be 'si' or 'nosi', got {variant!r}")
    if variant == "si" and params.tau_prev is None:
        raise InvalidConfig("SI mode needs tau_prev in SeParams")
    s, m = params.sample_count, params.num_antennas
    tau = float(np.sqrt(tau_sq))
    active_now, active_prev = _sample_case(rng, params, s)
    if params.gammas.size == 1:
        gamma = np.full(s, params.gammas[0])
    else:
        gamma = rng.choice(params.gammas, size=s, p=params.weights)
    scale = np.sqrt(gamma)[:, None]
    x_true = np.where(active_now[:, None], scale * _complex_std_normal(rng, (s, m)), 0.0)
    x_tilde = x_true + tau * _complex_std_normal(rng, (s, m))
    prev_obs = None
    if variant == "si":
        x_prev = np.where(active_prev[:, None],
                          scale * _complex_std_normal(rng, (s, m)), 0.0)
        prev_obs = x_prev + params.tau_prev * _complex_std_normal(rng, (s, m))
    if denoiser_fn is not None:
        estimates = denoiser_fn(x_tilde, x_true, prev_obs)
    elif variant == "si":
        estimates, _ = denoise_rows(x_tilde, gamma, tau, params.lam,
                                    params.alpha, params.beta,
                                    prev_rows=prev_obs, tau_prev=params.tau_prev)
    else:
        estimates, _ = denoise_rows(x_tilde, gamma, tau, params.lam,
                                    params.alpha, params.beta)
    per_sample_mse = np.sum(np.abs(estimates - x_true) ** 2, axis=-1) / m
    next_tau_sq = params.noise_variance + params.load * float(np.mean(per_sample_mse))
    stderr = params.load * float(np.std(per_sample_mse, ddof=1) / np.sqrt(s))
    return next_tau_sq, stderr


def se_fixed_point(params: SeParams, variant: str = "nosi",
                   rng: np.random.Generator | None = None,
                   rel_tol: float = 1e-4, max_steps: int = 200,
                   denoiser_fn=None) -> SeTrace:
    """Iterate the recursion to its fixed point.

    Starts from the zero-denoiser level noise_variance + load*lam*E[gamma]
    and stops when the relative change drops below `rel_tol`.  A trace that
    fails to converge within `max_steps` is returned with converged=False.
    """
    if rng is None:
        rng = substream(0, STREAM_SE)
    tau_sq = params.noise_variance + params.load * params.lam * params.mean_gamma
    trace = [tau_sq]
    errs = [0.0]
    converged = False
    for _ in range(max_steps):
        nxt, err = se_step(tau_sq, params, variant, rng, denoiser_fn)
        trace.append(nxt)
        errs.append(err)
        if abs(nxt - tau_sq) / tau_sq < rel_tol:
            tau_sq = nxt
            converged = True
            break
        tau_sq = nxt
    return SeTrace(tau_sq=np.asarray(trace), stderr=np.asarray(errs),
                   converged=converged)
