"""Activity detection from converged pseudo-observations.

The likelihood-ratio test for "device active in this block" reduces to an
energy threshold on the pseudo-observation; with side information the
threshold shifts per device according to how active the device looked in
the previous block.  A single scalar `l` is shared by all devices and
blocks; sweeping it traces the false-alarm / missed-detection tradeoff.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .denoiser import (DenoiserParams, SideInfo, _log_cgauss,
                       _log_or_neg_inf, _row_norm_sq,
                       _log_si_weight_from_norm)
from .errors import InvalidConfig

__all__ = [
    "DetectionDecision",
    "DetectionMetrics",
    "DetectionReport",
    "BlockDetection",
    "llr_value",
    "llr_appendix_oracle",
    "threshold_si",
    "threshold_nosi",
    "decide",
    "compute_metrics",
    "block_detection",
    "detect_block",
    "sweep_block_counts",
    "roc_sweep",
    "RocCurve",
]


@dataclass(frozen=True)
class DetectionDecision:
    """Outcome of the activity test for a single device."""

    device: int
    llr: float
    energy: float
    threshold: float
    decision: bool


@dataclass(frozen=True)
class DetectionMetrics:
    """Aggregate detection quality for one block.

    Rates are NaN when their denominator is empty (no truly inactive or
    no truly active device in the block); such blocks are excluded from
    cross-trial aggregation.
    """

    false_alarms: int
    missed: int
    num_inactive: int
    num_active: int
    p_fa: float
    p_md: float
    nmse: float

    @property
    def p_fa_defined(self) -> bool:
        return self.num_inactive > 0

    @property
    def p_md_defined(self) -> bool:
        return self.num_active > 0


@dataclass(frozen=True)
class DetectionReport:
    """Per-device test outcomes plus block-level metrics at one `l`."""

    llr: np.ndarray  # (N,)
    energy: np.ndarray  # (N,)
    threshold: np.ndarray  # (N,)
    decisions: np.ndarray  # (N,) bool
    metrics: DetectionMetrics

    def device(self, n: int) -> DetectionDecision:
        return DetectionDecision(device=n, llr=float(self.llr[n]),
                                 energy=float(self.energy[n]),
                                 threshold=float(self.threshold[n]),
                                 decision=bool(self.decisions[n]))


@dataclass(frozen=True)
class BlockDetection:
    """Everything needed to re-threshold one block at any `l`.

    The per-device energy threshold is (l + offset_n)/delta_n, so a sweep
    over `l` never has to rerun the estimator.
    """

    energy: np.ndarray  # (N,) squared norms of converged pseudo-observations
    llr: np.ndarray  # (N,)
    delta: np.ndarray  # (N,) precision gap, positive for gamma > 0
    offset: np.ndarray  # (N,) l-independent part of the threshold numerator
    activity: np.ndarray  # (N,) bool ground truth


def _check_gamma_positive(gamma) -> None:
    if not np.all(np.asarray(gamma) > 0.0):
        raise InvalidConfig("energy thresholds require gamma > 0")


def _threshold_terms(gamma, tau, lam, alpha, beta, num_antennas,
                     prev_norm_sq=None, tau_prev=None):
    """(delta, offset) arrays with threshold(l) = (l + offset)/delta."""
    _check_gamma_positive(gamma)
    tau_sq = tau * tau
    delta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    offset = num_antennas * np.log((tau_sq + gamma) / tau_sq)
    if prev_norm_sq is not None:
        offset = offset + _log_si_weight_from_norm(prev_norm_sq, gamma, tau_prev,
                                                   alpha, beta, num_antennas)
    return delta, np.asarray(offset, dtype=float)


def llr_value(x_tilde: np.ndarray, si: SideInfo | None,
              params: DenoiserParams) -> float:
    """Log-likelihood ratio of active vs inactive for one device.

    Without side information only the current-block Gaussian pdf ratio
    remains; with it, the prior-odds correction from the previous block's
    pseudo-observation is added.  Computed in the log domain throughout.
    """
    norm_sq = _row_norm_sq(np.asarray(x_tilde))
    prev_norm_sq = None if si is None else _row_norm_sq(np.asarray(si.pseudo_obs))
    tau_prev = None if si is None else si.tau_prev
    delta, offset = _threshold_terms(params.gamma, params.tau, params.lam,
                                     params.alpha, params.beta,
                                     params.num_antennas, prev_norm_sq, tau_prev)
    return float(delta * norm_sq - offset)


def llr_appendix_oracle(x_tilde: np.ndarray, si: SideInfo,
                        params: DenoiserParams) -> float:
    """LLR via the unsimplified four-case conditional densities.

    Forms p(observations | active now) and p(observations | inactive now)
    as explicit two-case Gaussian mixtures and takes the log ratio; kept
    free of the simplified threshold algebra so it can vouch for it.
    """
    m = params.num_antennas
    tau_sq = params.tau ** 2
    taup_sq = si.tau_prev ** 2
    lam, alpha, beta, gamma = params.lam, params.alpha, params.beta, params.gamma
    cur_active = _log_cgauss(x_tilde, gamma + tau_sq, m)
    cur_inactive = _log_cgauss(x_tilde, tau_sq, m)
    prev_active = _log_cgauss(si.pseudo_obs, gamma + taup_sq, m)
    prev_inactive = _log_cgauss(si.pseudo_obs, taup_sq, m)
    log_joint_active = logsumexp([
        _log_or_neg_inf(alpha * lam) + cur_active + prev_active,
        _log_or_neg_inf(beta * (1.0 - lam)) + cur_active + prev_inactive,
    ]) - np.log(lam)
    log_joint_inactive = logsumexp([
        _log_or_neg_inf((1.0 - alpha) * lam) + cur_inactive + prev_active,
        _log_or_neg_inf((1.0 - beta) * (1.0 - lam)) + cur_inactive + prev_inactive,
    ]) - np.log(1.0 - lam)
    return float(log_joint_active - log_joint_inactive)


def threshold_si(l: float, si: SideInfo, params: DenoiserParams) -> float:
    """Energy threshold equivalent to the LLR test at level `l`, with SI."""
    prev_norm_sq = _row_norm_sq(np.asarray(si.pseudo_obs))
    delta, offset = _threshold_terms(params.gamma, params.tau, params.lam,
                                     params.alpha, params.beta,
                                     params.num_antennas, prev_norm_sq,
                                     si.tau_prev)
    return float((l + offset) / delta)


def threshold_nosi(l: float, params: DenoiserParams) -> float:
    """Energy threshold of the single-block (no-SI) detector."""
    delta, offset = _threshold_terms(params.gamma, params.tau, params.lam,
                                     params.alpha, params.beta,
                                     params.num_antennas)
    return float((l + offset) / delta)


def decide(energy: float, threshold: float) -> bool:
    """Active iff energy strictly exceeds the threshold; ties are inactive."""
    return bool(energy > threshold)


def compute_metrics(decisions: np.ndarray, activity: np.ndarray,
                    x_hat: np.ndarray | None = None,
                    x_true: np.ndarray | None = None) -> DetectionMetrics:
    """False-alarm and missed-detection rates, plus NMSE over true actives.

    A rate whose denominator is zero is reported as NaN; callers exclude
    such blocks when pooling.
    """
    decisions = np.asarray(decisions, dtype=bool)
    activity = np.asarray(activity, dtype=bool)
    if decisions.shape != activity.shape:
        raise InvalidConfig("decisions and activity must align per device")
    n_inactive = int(np.sum(~activity))
    n_active = int(np.sum(activity))
    fa = int(np.sum(decisions & ~activity))
    md = int(np.sum(~decisions & activity))
    p_fa = fa / n_inactive if n_inactive > 0 else float("nan")
    p_md = md / n_active if n_active > 0 else float("nan")
    nmse = float("nan")
    if x_hat is not None and x_true is not None and n_active > 0:
        err = _row_norm_sq(x_hat[activity] - x_true[activity]).sum()
        ref = _row_norm_sq(x_true[activity]).sum()
        nmse = float(err / ref)
    return DetectionMetrics(false_alarms=fa, missed=md, num_inactive=n_inactive,
                            num_active=n_active, p_fa=p_fa, p_md=p_md, nmse=nmse)


def block_detection(pseudo_obs: np.ndarray, tau: float, gamma, lam: float,
                    alpha: float, beta: float, activity: np.ndarray,
                    prev_obs: np.ndarray | None = None,
                    tau_prev: float | None = None) -> BlockDetection:
    """Vectorized detection state for one block (all devices at once)."""
    pseudo_obs = np.asarray(pseudo_obs)
    num_antennas = pseudo_obs.shape[-1]
    energy = _row_norm_sq(pseudo_obs)
    prev_norm_sq = None if prev_obs is None else _row_norm_sq(np.asarray(prev_obs))
    delta, offset = _threshold_terms(np.asarray(gamma, dtype=float), tau, lam,
                                     alpha, beta, num_antennas,
                                     prev_norm_sq, tau_prev)
    delta = np.broadcast_to(np.asarray(delta, dtype=float), energy.shape).copy()
    offset = np.broadcast_to(offset, energy.shape).copy()
    llr = delta * energy - offset
    return BlockDetection(energy=energy, llr=llr, delta=delta, offset=offset,
                          activity=np.asarray(activity, dtype=bool))


def detect_block(det: BlockDetection, l: float,
                 x_hat: np.ndarray | None = None,
                 x_true: np.ndarray | None = None) -> DetectionReport:
    """Apply the energy test at level `l` to a prepared block."""
    threshold = (l + det.offset) / det.delta
    decisions = det.energy > threshold
    metrics = compute_metrics(decisions, det.activity, x_hat, x_true)
    return DetectionReport(llr=det.llr, energy=det.energy, threshold=threshold,
                           decisions=decisions, metrics=metrics)


def sweep_block_counts(det: BlockDetection, l_grid: np.ndarray):
    """Error counts of one block over a grid of `l` values.

    Returns (false_alarms, missed, num_inactive, num_active) where the
    first two are arrays over the grid.
    """
    l_grid = np.asarray(l_grid, dtype=float)
    thresholds = (l_grid[:, None] + det.offset[None, :]) / det.delta[None, :]
    decisions = det.energy[None, :] > thresholds
    inactive = ~det.activity
    fa = np.sum(decisions & inactive[None, :], axis=1)
    md = np.sum(~decisions & det.activity[None, :], axis=1)
    return fa, md, int(inactive.sum()), int(det.activity.sum())


@dataclass(frozen=True)
class RocCurve:
    """Pooled tradeoff curve for one slot index, with per-trial spread."""

    l_grid: np.ndarray
    p_fa: np.ndarray
    p_md: np.ndarray
    se_p_fa: np.ndarray
    se_p_md: np.ndarray
    num_trials: int

    def p_md_at(self, target_p_fa: float) -> tuple[float, float]:
        """(p_md, se_p_md) at a target false-alarm rate, interpolating in l.

        p_fa is non-increasing in l; interpolation is linear between the
        bracketing grid points, with the larger of the two standard errors.
        """
        order = np.argsort(self.p_fa)
        pfa, pmd, se = self.p_fa[order], self.p_md[order], self.se_p_md[order]
        if target_p_fa < pfa[0] or target_p_fa > pfa[-1]:
            raise InvalidConfig(
                f"target p_fa={target_p_fa} outside swept range "
                f"[{pfa[0]:.3g}, {pfa[-1]:.3g}]")
        hi = int(np.searchsorted(pfa, target_p_fa))
        lo = max(hi - 1, 0)
        hi = min(hi, len(pfa) - 1)
        if pfa[hi] == pfa[lo]:
            w = 0.0
        else:
            w = (target_p_fa - pfa[lo]) / (pfa[hi] - pfa[lo])
        return (float((1.0 - w) * pmd[lo] + w * pmd[hi]),
                float(max(se[lo], se[hi])))


def roc_sweep(per_trial_blocks, l_grid: np.ndarray) -> list[RocCurve]:
    """Aggregate tradeoff curves per slot index over Monte Carlo trials.

    `per_trial_blocks` is a sequence over trials, each a sequence over
    slots of BlockDetection.  Rates are pooled device-block counts per
    slot; standard errors come from the per-trial rate spread.  Blocks
    whose denominator is empty are excluded from that slot's pooling.
    """
    l_grid = np.asarray(l_grid, dtype=float)
    num_slots = len(per_trial_blocks[0])
    counts = []
    for trial in per_trial_blocks:
        if len(trial) != num_slots:
            raise InvalidConfig("all trials must cover the same slots")
        counts.append([sweep_block_counts(det, l_grid) for det in trial])
    return [aggregate_slot_counts([trial[j] for trial in counts], l_grid)
            for j in range(num_slots)]


def aggregate_slot_counts(slot_counts, l_grid: np.ndarray) -> RocCurve:
    """Pool per-trial (fa, md, n_inactive, n_active) counts into one curve."""
    l_grid = np.asarray(l_grid, dtype=float)
    fa = np.zeros(len(l_grid))
    md = np.zeros(len(l_grid))
    n_inact = 0
    n_act = 0
    rates_fa, rates_md = [], []
    for fa_i, md_i, ninact_i, nact_i in slot_counts:
        fa += fa_i
        md += md_i
        n_inact += ninact_i
        n_act += nact_i
        rates_fa.append(fa_i / ninact_i if ninact_i > 0 else np.full(len(l_grid), np.nan))
        rates_md.append(md_i / nact_i if nact_i > 0 else np.full(len(l_grid), np.nan))
    rates_fa = np.asarray(rates_fa)
    rates_md = np.asarray(rates_md)
    p_fa = fa / n_inact if n_inact > 0 else np.full(len(l_grid), np.nan)
    p_md = md / n_act if n_act > 0 else np.full(len(l_grid), np.nan)
    return RocCurve(l_grid=l_grid, p_fa=p_fa, p_md=p_md,
                    se_p_fa=_rate_stderr(rates_fa), se_p_md=_rate_stderr(rates_md),
                    num_trials=len(slot_counts))


def _rate_stderr(per_trial_rates: np.ndarray) -> np.ndarray:
    """Standard error of the mean rate from per-trial variation."""
    import warnings
    valid = np.sum(~np.isnan(per_trial_rates), axis=0)
    with warnings.catch_warnings(), np.errstate(invalid="ignore",
                                                divide="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        sd = np.nanstd(per_trial_rates, axis=0, ddof=1)
        se = sd / np.sqrt(valid)
    return np.where(valid > 1, se, np.nan)
