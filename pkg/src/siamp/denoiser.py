"""MMSE denoisers for row-sparse recovery with previous-block side information.

The denoiser shrinks each device's pseudo-observation toward zero by a
data-dependent scalar.  With side information (the previous block's
converged pseudo-observation and its noise level) the shrinkage is biased
by how active the device looked one block earlier.  Everything runs in
the log domain: the likelihood factor mu overflows double precision
already at moderate antenna counts and SNRs.

`oracle_posterior_mean` is an independent implementation of the same
posterior mean built directly from the four-case Gaussian-mixture
decomposition; it exists to cross-check the closed form and shares no
helpers with it.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import InvalidConfig

__all__ = [
    "DenoiserParams",
    "SideInfo",
    "CasePosterior",
    "log_mu",
    "si_weight",
    "log_si_weight",
    "denoise_si",
    "denoise_nosi",
    "denoiser_derivative_avg",
    "case_log_likelihoods",
    "case_posteriors",
    "oracle_posterior_mean",
    "denoise_rows",
]


@dataclass(frozen=True)
class DenoiserParams:
    """Per-device denoiser inputs: channel gain, noise level, activity model."""

    gamma: float  # channel power gain of the device
    tau: float  # current pseudo-noise standard deviation
    lam: float  # marginal activity rate
    alpha: float  # P(active now | active previous block)
    beta: float  # P(active now | inactive previous block)
    num_antennas: int

    def __post_init__(self):
        if not self.tau > 0.0:
            raise InvalidConfig(f"tau must be positive, got {self.tau}")
        if not self.gamma >= 0.0:
            raise InvalidConfig(f"gamma must be nonnegative, got {self.gamma}")
        if self.num_antennas < 1:
            raise InvalidConfig("num_antennas must be a positive count")


@dataclass(frozen=True)
class SideInfo:
    """Previous block's converged pseudo-observation for one device."""

    pseudo_obs: np.ndarray  # (M,) complex
    tau_prev: float

    def __post_init__(self):
        # A degenerate side-information state indicates an upstream bug;
        # reject it instead of silently falling back to the no-SI path.
        if not np.isfinite(self.tau_prev) or self.tau_prev <= 0.0:
            raise InvalidConfig(f"tau_prev must be positive, got {self.tau_prev}")
        if not np.all(np.isfinite(self.pseudo_obs)):
            raise InvalidConfig("side-information vector has non-finite entries")


@dataclass(frozen=True)
class CasePosterior:
    """Posterior over the four joint activity cases for one device."""

    probs: np.ndarray  # (4,), order: act->act, act->inact, inact->act, inact->inact

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (4,) or np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidConfig(f"case posterior must be a length-4 distribution: {p}")


def _row_norm_sq(x: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(x) ** 2, axis=-1)


def _log_mu_from_norm(norm_sq, gamma, tau, num_antennas):
    """log mu = M*log((tau^2+gamma)/tau^2) - Delta*||x||^2, vectorized."""
    tau_sq = tau * tau
    delta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    return num_antennas * np.log((tau_sq + gamma) / tau_sq) - delta * norm_sq


def _log_or_neg_inf(p) -> float:
    return float(np.log(p)) if p > 0.0 else -np.inf


def _log_si_weight_from_norm(prev_norm_sq, gamma, tau_prev, alpha, beta,
                             num_antennas):
    """log of (beta+(1-beta)*mu_prev)/(alpha+(1-alpha)*mu_prev), stable."""
    log_mu_prev = _log_mu_from_norm(prev_norm_sq, gamma, tau_prev, num_antennas)
    num = np.logaddexp(_log_or_neg_inf(beta), _log_or_neg_inf(1.0 - beta) + log_mu_prev)
    den = np.logaddexp(_log_or_neg_inf(alpha), _log_or_neg_inf(1.0 - alpha) + log_mu_prev)
    return num - den


def log_mu(x_tilde: np.ndarray, params: DenoiserParams) -> float:
    """Log of the inactive/active likelihood factor at a pseudo-observation.

    mu itself may overflow double precision for large gamma/tau^2 and M;
    callers must stay in the log domain.
    """
    return float(_log_mu_from_norm(_row_norm_sq(np.asarray(x_tilde)),
                                   params.gamma, params.tau, params.num_antennas))


def log_si_weight(si: SideInfo, params: DenoiserParams) -> float:
    """Log of the side-information prior-odds correction factor."""
    prev_norm_sq = _row_norm_sq(np.asarray(si.pseudo_obs))
    return float(_log_si_weight_from_norm(prev_norm_sq, params.gamma, si.tau_prev,
                                          params.alpha, params.beta,
                                          params.num_antennas))


def si_weight(si: SideInfo, params: DenoiserParams) -> float:
    """The factor (beta+(1-beta)*mu_prev)/(alpha+(1-alpha)*mu_prev).

    Tends to (1-beta)/(1-alpha) when the previous-block evidence is weak
    (mu_prev large) and to beta/alpha when it strongly indicates activity
    (mu_prev -> 0).
    """
    return float(np.exp(log_si_weight(si, params)))


def _shrinkage_terms(norm_sq, gamma, tau, lam, alpha, beta, num_antennas,
                     prev_norm_sq=None, tau_prev=None):
    """Common core: linear-MMSE gain c, log-odds exponent q, Delta.

    The denoiser output is c*x/(1+exp(q)); q collects the prior odds, the
    current-block likelihood factor and (when present) the SI correction.
    """
    tau_sq = tau * tau
    c = gamma / (gamma + tau_sq)
    delta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    q = (_log_or_neg_inf((1.0 - lam) / lam)
         + _log_mu_from_norm(norm_sq, gamma, tau, num_antennas))
    if prev_norm_sq is not None:
        q = q + _log_si_weight_from_norm(prev_norm_sq, gamma, tau_prev,
                                         alpha, beta, num_antennas)
    return c, q, delta


def denoise_rows(x_rows: np.ndarray, gamma, tau: float, lam: float,
                 alpha: float, beta: float,
                 prev_rows: np.ndarray | None = None,
                 tau_prev: float | None = None):
    """Vectorized denoiser over device rows.

    Parameters
    ----------
    x_rows : (N, M) complex pseudo-observations, one row per device.
    gamma : scalar or (N,) per-device channel power gains.
    tau : current pseudo-noise standard deviation (shared by all devices).
    lam, alpha, beta : activity-model probabilities.
    prev_rows, tau_prev : previous-block pseudo-observations and their
        noise level; ``None`` selects the no-SI denoiser.

    Returns
    -------
    denoised : (N, M) complex estimates.
    deriv_avg : (N,) per-device entrywise-averaged derivatives of the
        denoiser with respect to its observation (real-valued), used for
        the residual correction term.
    """
    x_rows = np.asarray(x_rows)
    num_antennas = x_rows.shape[-1]
    gamma = np.asarray(gamma, dtype=float)
    norm_sq = _row_norm_sq(x_rows)
    prev_norm_sq = None
    if prev_rows is not None:
        prev_norm_sq = _row_norm_sq(np.asarray(prev_rows))
    c, q, delta = _shrinkage_terms(norm_sq, gamma, tau, lam, alpha, beta,
                                   num_antennas, prev_norm_sq, tau_prev)
    with np.errstate(over="ignore"):
        gain = c / (1.0 + np.exp(q))
    # Wirtinger derivative of gain(||x||^2)*x averaged over entries:
    # c*g*(1 + Delta*(||x||^2/M)*(1-g)) with g the posterior-active factor.
    g = expit(-q)
    one_minus_g = expit(q)
    deriv_avg = c * g * (1.0 + delta * (norm_sq / num_antennas) * one_minus_g)
    return np.atleast_1d(gain)[..., None] * x_rows, np.atleast_1d(deriv_avg)


def denoise_si(x_tilde: np.ndarray, si: SideInfo | None,
               params: DenoiserParams) -> np.ndarray:
    """SI-aided MMSE denoiser for one device; falls back to no-SI when
    ``si`` is None (first coherence block)."""
    if si is None:
        return denoise_nosi(x_tilde, params)
    x = np.asarray(x_tilde)
    out, _ = denoise_rows(x[None, :], params.gamma, params.tau, params.lam,
                          params.alpha, params.beta,
                          prev_rows=np.asarray(si.pseudo_obs)[None, :],
                          tau_prev=si.tau_prev)
    return out[0]


def denoise_nosi(x_tilde: np.ndarray, params: DenoiserParams) -> np.ndarray:
    """MMSE denoiser ignoring temporal correlation (single-block prior)."""
    x = np.asarray(x_tilde)
    out, _ = denoise_rows(x[None, :], params.gamma, params.tau, params.lam,
                          params.alpha, params.beta)
    return out[0]


def denoiser_derivative_avg(x_tilde: np.ndarray, si: SideInfo | None,
                            params: DenoiserParams) -> float:
    """Entrywise average of the denoiser's derivative at ``x_tilde``.

    Uses the Wirtinger convention (derivative in the observation with its
    conjugate held fixed), under which the average is real.
    """
    x = np.asarray(x_tilde)
    if si is None:
        _, d = denoise_rows(x[None, :], params.gamma, params.tau, params.lam,
                            params.alpha, params.beta)
    else:
        _, d = denoise_rows(x[None, :], params.gamma, params.tau, params.lam,
                            params.alpha, params.beta,
                            prev_rows=np.asarray(si.pseudo_obs)[None, :],
                            tau_prev=si.tau_prev)
    return float(d[0])


def _log_cgauss(x: np.ndarray, variance: float, num_antennas: int) -> float:
    """Log-pdf of an isotropic circular complex Gaussian CN(0, variance*I)."""
    norm_sq = float(_row_norm_sq(np.asarray(x)))
    return -num_antennas * float(np.log(np.pi * variance)) - norm_sq / variance


def case_log_likelihoods(x_tilde: np.ndarray, si: SideInfo,
                         params: DenoiserParams) -> np.ndarray:
    """Log joint densities of (current, previous) pseudo-observations under
    the four two-block activity cases, including the case priors.

    Case order: active->active, active->inactive, inactive->active,
    inactive->inactive.  A case with prior zero gets -inf.
    """
    m = params.num_antennas
    tau_sq = params.tau ** 2
    taup_sq = si.tau_prev ** 2
    lam, alpha, beta, gamma = params.lam, params.alpha, params.beta, params.gamma
    cur_active = _log_cgauss(x_tilde, gamma + tau_sq, m)
    cur_inactive = _log_cgauss(x_tilde, tau_sq, m)
    prev_active = _log_cgauss(si.pseudo_obs, gamma + taup_sq, m)
    prev_inactive = _log_cgauss(si.pseudo_obs, taup_sq, m)
    priors = (alpha * lam, (1.0 - alpha) * lam,
              beta * (1.0 - lam), (1.0 - beta) * (1.0 - lam))
    likes = (cur_active + prev_active, cur_inactive + prev_active,
             cur_active + prev_inactive, cur_inactive + prev_inactive)
    return np.array([_log_or_neg_inf(p) + l for p, l in zip(priors, likes)])


def case_posteriors(x_tilde: np.ndarray, si: SideInfo,
                    params: DenoiserParams) -> CasePosterior:
    """Normalized posterior over the four activity cases."""
    ll = case_log_likelihoods(x_tilde, si, params)
    probs = np.exp(ll - logsumexp(ll))
    return CasePosterior(probs=probs / probs.sum())


def oracle_posterior_mean(x_tilde: np.ndarray, si: SideInfo,
                          params: DenoiserParams) -> np.ndarray:
    """Posterior mean computed directly from the four-case mixture.

    Conditional on either case where the device is currently active, the
    mean is the linear-MMSE estimate gamma/(gamma+tau^2)*x; in the other
    two cases the signal is exactly zero.  This routine is deliberately
    independent of the closed-form shrinkage path and serves as its
    ground-truth oracle.
    """
    ll = case_log_likelihoods(x_tilde, si, params)
    with np.errstate(invalid="ignore"):
        p_active_now = np.exp(logsumexp(ll[[0, 2]]) - logsumexp(ll))
    if not np.isfinite(p_active_now):  # both logsumexp at -inf cannot happen
        raise InvalidConfig("degenerate case likelihoods")
    c = params.gamma / (params.gamma + params.tau ** 2)
    return c * p_active_now * np.asarray(x_tilde)
