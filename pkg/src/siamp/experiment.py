"""Monte Carlo experiment orchestration: config files, presets, seeded
trial execution, aggregation and CSV emission.

A config is a flat key = value text file (or a named preset).  Physical
presets place devices uniformly in an annulus and convert transmit power,
noise spectral density and bandwidth into per-device effective channel
gains normalized to unit noise variance; the numerical core only ever
sees linear effective units.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .amp import run_trial
from .detector import aggregate_slot_counts, sweep_block_counts
from .errors import InvalidConfig, ParseError, ValidationError
from .model import ScenarioConfig, path_loss_linear
from .state_evolution import SeParams, SeTrace, se_fixed_point
from .streams import seed_sequence, substream

STREAM_PLACEMENT = "placement"
STREAM_TRIAL = "trial"
STREAM_SE_TRACE = "se-trace"

VARIANTS = ("si", "nosi")


def default_l_grid() -> np.ndarray:
    """Threshold sweep wide enough to cover both tradeoff extremes."""
    return np.linspace(-40.0, 40.0, 161)


def annulus_gains(num_devices: int, rng: np.random.Generator,
                  cell_radius_km: float = 1.0, min_radius_km: float = 0.05,
                  tx_power_dbm: float = 23.0, noise_psd_dbm_hz: float = -169.0,
                  bandwidth_hz: float = 1e7) -> np.ndarray:
    """Effective per-device gains for uniform placement in an annulus.

    Gains are path loss times transmit power over the thermal noise
    power, so the matching noise variance is exactly 1.  The inner radius
    keeps the path-loss law away from its d -> 0 singularity.
    """
    if not 0.0 < min_radius_km < cell_radius_km:
        raise InvalidConfig("need 0 < min_radius_km < cell_radius_km")
    # uniform over the annulus area => cdf proportional to r^2
    u = rng.random(num_devices)
    radii = np.sqrt(min_radius_km ** 2
                    + u * (cell_radius_km ** 2 - min_radius_km ** 2))
    tx_watt = 10.0 ** ((tx_power_dbm - 30.0) / 10.0)
    noise_watt = 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz
    gains = np.array([path_loss_linear(r) for r in radii]) * tx_watt / noise_watt
    return gains


@dataclass(frozen=True)
class ExperimentSpec:
    """A full experiment: scenario, trial budget, sweep grid, variants."""

    scenario: ScenarioConfig
    num_trials: int
    l_grid: np.ndarray
    variants: tuple = VARIANTS
    out_dir: str | None = None
    parallelism: int = 1
    se_sample_count: int = 20_000

    def violations(self) -> list[str]:
        out = list(self.scenario.violations())
        if self.num_trials < 1:
            out.append("num_trials must be >= 1")
        if len(np.atleast_1d(self.l_grid)) == 0:
            out.append("l_grid must be nonempty")
        if not self.variants or not set(self.variants) <= set(VARIANTS):
            out.append(f"variants must be a nonempty subset of {VARIANTS}")
        if self.parallelism < 1:
            out.append("parallelism must be >= 1")
        if self.se_sample_count < 1:
            out.append("se_sample_count must be >= 1")
        return out

    def validate(self) -> "ExperimentSpec":
        bad = self.violations()
        if bad:
            raise ValidationError(bad)
        return self


# ---------------------------------------------------------------------------
# presets and config parsing

_PAPER_COMMON = dict(
    num_devices=4000, num_antennas=1, num_blocks=10, activity_rate=0.1,
    persistence=0.46, placement="annulus", cell_radius_km=1.0,
    min_radius_km=0.05, tx_power_dbm=23.0, noise_psd_dbm_hz=-169.0,
    bandwidth_hz=1e7, num_trials=50, rng_seed=12345,
)

PRESETS = {
    "paper-fig3": dict(_PAPER_COMMON, pilot_length=600),
    "paper-fig4": dict(_PAPER_COMMON, pilot_length=500, num_antennas=2),
    # desk-scale variants keep the device/pilot load of the paper setup
    # but run in minutes on one core
    "fig3-desk": dict(_PAPER_COMMON, num_devices=1000, pilot_length=150,
                      num_blocks=5, num_trials=200),
    "fig4-desk": dict(_PAPER_COMMON, num_devices=1000, pilot_length=125,
                      num_antennas=2, num_blocks=5, num_trials=200),
}

_INT_KEYS = {"num_devices", "pilot_length", "num_antennas", "num_blocks",
             "rng_seed", "amp_max_iters", "num_trials", "parallelism",
             "se_sample_count"}
_FLOAT_KEYS = {"activity_rate", "persistence", "noise_variance", "gamma",
               "amp_convergence_tol", "cell_radius_km", "min_radius_km",
               "tx_power_dbm", "noise_psd_dbm_hz", "bandwidth_hz"}
_STR_KEYS = {"preset", "placement", "variants", "l_grid", "out_dir"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

_DEFAULTS = dict(
    num_antennas=1, num_blocks=1, activity_rate=0.1, persistence=0.1,
    noise_variance=1.0, rng_seed=0, amp_max_iters=50,
    amp_convergence_tol=1e-6, num_trials=1, parallelism=1,
    se_sample_count=20_000, placement="gamma", variants="si,nosi",
    out_dir=None, l_grid=None,
)


def _parse_l_grid(text: str) -> np.ndarray:
    """Either 'start:stop:count' or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid spec must be start:stop:count")
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    return np.array([float(v) for v in text.split(",") if v.strip()])


def read_config_file(path):
    """Parse a key = value file into (values, line numbers), both by key.

    Values stay unconverted strings; the line numbers feed error
    messages."""
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', "
                                 f"got {stripped!r}")
            key, value = (s.strip() for s in stripped.split("=", 1))
            if key not in _KNOWN_KEYS:
                raise ParseError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = (value, lineno)
    return {k: v for k, (v, _) in raw.items()}, {k: ln for k, (_, ln) in raw.items()}


def spec_from_options(options: dict, source: str = "<options>") -> ExperimentSpec:
    """Build and validate an ExperimentSpec from a flat option dict.

    Preset values are applied first, explicit options override them.
    Raises ParseError on malformed values and ValidationError listing
    every violated invariant.
    """
    merged = dict(_DEFAULTS)
    preset = options.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ParseError(f"{source}: unknown preset {preset!r} "
                             f"(available: {', '.join(sorted(PRESETS))})")
        merged.update(PRESETS[preset])
    merged.update({k: v for k, v in options.items() if k != "preset"})

    converted = {}
    for key, value in merged.items():
        if value is None or not isinstance(value, str):
            converted[key] = value
            continue
        try:
            if key in _INT_KEYS:
                converted[key] = int(value)
            elif key in _FLOAT_KEYS:
                converted[key] = float(value)
            elif key == "l_grid":
                converted[key] = _parse_l_grid(value)
            else:
                converted[key] = value
        except ValueError as exc:
            raise ParseError(f"{source}: field {key!r}: {exc}") from None

    violations = []
    for key in ("num_devices", "pilot_length"):
        if key not in converted:
            violations.append(f"missing required field {key!r}")
    if violations:
        raise ValidationError(violations)

    placement = converted.get("placement", "gamma")
    noise_variance = converted.get("noise_variance", 1.0)
    if placement == "annulus":
        gains = annulus_gains(
            converted["num_devices"],
            substream(converted["rng_seed"], STREAM_PLACEMENT),
            cell_radius_km=converted.get("cell_radius_km", 1.0),
            min_radius_km=converted.get("min_radius_km", 0.05),
            tx_power_dbm=converted.get("tx_power_dbm", 23.0),
            noise_psd_dbm_hz=converted.get("noise_psd_dbm_hz", -169.0),
            bandwidth_hz=converted.get("bandwidth_hz", 1e7))
        noise_variance = 1.0  # gains are normalized to the noise floor
    elif placement == "gamma":
        if "gamma" not in converted:
            raise ValidationError(["placement 'gamma' needs a gamma value"])
        gains = np.full(converted["num_devices"], converted["gamma"], dtype=float)
    else:
        raise ParseError(f"{source}: placement must be 'annulus' or 'gamma', "
                         f"got {placement!r}")

    scenario = ScenarioConfig(
        num_devices=converted["num_devices"],
        pilot_length=converted["pilot_length"],
        num_antennas=converted["num_antennas"],
        num_blocks=converted["num_blocks"],
        activity_rate=converted["activity_rate"],
        persistence=converted["persistence"],
        noise_variance=noise_variance,
        path_losses=gains,
        rng_seed=converted["rng_seed"],
        amp_max_iters=converted["amp_max_iters"],
        amp_convergence_tol=converted["amp_convergence_tol"])

    variants = tuple(v.strip() for v in str(converted["variants"]).split(",")
                     if v.strip())
    l_grid = converted["l_grid"]
    if l_grid is None:
        l_grid = default_l_grid()
    spec = ExperimentSpec(scenario=scenario, num_trials=converted["num_trials"],
                          l_grid=np.asarray(l_grid, dtype=float),
                          variants=variants, out_dir=converted.get("out_dir"),
                          parallelism=converted["parallelism"],
                          se_sample_count=converted["se_sample_count"])
    return spec.validate()


def parse_config(path) -> ExperimentSpec:
    """Read, convert and validate a config file."""
    options, _ = read_config_file(path)
    return spec_from_options(options, source=str(path))


# ---------------------------------------------------------------------------
# experiment execution

def trial_seed(master_seed: int, index: int) -> int:
    """Independent 63-bit scenario seed for one trial."""
    state = seed_sequence(master_seed, STREAM_TRIAL, index).generate_state(1, np.uint64)
    return int(state[0] >> 1)


def _run_trial_counts(args):
    """Worker: one trial, all variants, reduced to sweep counts."""
    spec, index = args
    config = replace(spec.scenario, rng_seed=trial_seed(spec.scenario.rng_seed,
                                                        index))
    out = {}
    for variant in spec.variants:
        trial = run_trial(config, variant=variant)
        slots = []
        for j, (det, report) in enumerate(zip(trial.detections, trial.reports)):
            fa, md, n_inact, n_act = sweep_block_counts(det, spec.l_grid)
            slots.append({
                "counts": (fa, md, n_inact, n_act),
                "nmse": report.metrics.nmse,
                "tau_final": trial.blocks[j].tau_final,
            })
        out[variant] = slots
    return index, out


@dataclass
class AggregateResult:
    """Cross-trial aggregate of one experiment.

    `per_trial[variant]` keeps the raw per-trial sweep counts (arrays
    fa/md of shape (trials, slots, len(l_grid)) plus n_inactive/n_active
    of shape (trials, slots)); variants share scenario substreams, so
    paired per-trial comparisons across variants or slots are valid.
    """

    spec: ExperimentSpec
    curves: dict  # variant -> list[RocCurve] per slot
    nmse: dict  # variant -> (mean (J,), stderr (J,))
    tau_final: dict  # variant -> (mean (J,), stderr (J,))
    se_traces: dict  # variant -> list[SeTrace] per slot
    per_trial: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def p_md_per_trial(self, variant: str, slot: int,
                       target_p_fa: float) -> np.ndarray:
        """Per-trial missed-detection rates at a pooled false-alarm level.

        The threshold level is fixed once from the pooled curve (linear
        interpolation in l), then applied to every trial, preserving
        pairing across variants and slots.
        """
        curve = self.curves[variant][slot]
        order = np.argsort(curve.p_fa)
        pfa_sorted = curve.p_fa[order]
        l_sorted = curve.l_grid[order]
        if not pfa_sorted[0] <= target_p_fa <= pfa_sorted[-1]:
            raise InvalidConfig(f"target p_fa={target_p_fa} outside sweep")
        l_star = float(np.interp(target_p_fa, pfa_sorted, l_sorted))
        data = self.per_trial[variant]
        md = data["md"][:, slot, :]  # (trials, n_l)
        n_act = data["n_active"][:, slot].astype(float)
        grid = self.spec.l_grid
        rates = np.array([np.interp(l_star, grid, md[i]) for i in range(md.shape[0])])
        with np.errstate(invalid="ignore", divide="ignore"):
            out = rates / n_act
        return out


def run_experiment(spec: ExperimentSpec) -> AggregateResult:
    """Execute all trials, pool per-slot counts, attach SE predictions.

    Deterministic for a given spec regardless of parallelism: every trial
    draws from substreams of its own derived seed and results are merged
    in trial order.  Individual trial failures are recorded and skipped;
    more than 10% failures aborts the experiment.
    """
    spec.validate()
    start = time.time()
    jobs = [(spec, i) for i in range(spec.num_trials)]
    results = {}
    failures = []
    if spec.parallelism > 1:
        import multiprocessing as mp
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=spec.parallelism,
                                 mp_context=ctx) as pool:
            futures = [pool.submit(_run_trial_counts, job) for job in jobs]
            for i, fut in enumerate(futures):
                try:
                    idx, payload = fut.result()
                    results[idx] = payload
                except Exception as exc:  # noqa: BLE001 - per-trial isolation
                    failures.append((i, repr(exc)))
    else:
        for job in jobs:
            try:
                idx, payload = _run_trial_counts(job)
                results[idx] = payload
            except Exception as exc:  # noqa: BLE001 - per-trial isolation
                failures.append((job[1], repr(exc)))
    if len(failures) > 0.1 * spec.num_trials:
        raise RuntimeError(f"{len(failures)}/{spec.num_trials} trials failed: "
                           f"{failures[:3]}")

    num_slots = spec.scenario.num_blocks
    n_l = len(spec.l_grid)
    curves = {}
    nmse = {}
    tau_final = {}
    per_trial = {}
    ordered = [results[i] for i in sorted(results)]
    for variant in spec.variants:
        per_slot_curves = []
        nmse_rows = np.full((len(ordered), num_slots), np.nan)
        tau_rows = np.full((len(ordered), num_slots), np.nan)
        fa = np.zeros((len(ordered), num_slots, n_l), dtype=np.int64)
        md = np.zeros((len(ordered), num_slots, n_l), dtype=np.int64)
        n_inact = np.zeros((len(ordered), num_slots), dtype=np.int64)
        n_act = np.zeros((len(ordered), num_slots), dtype=np.int64)
        for j in range(num_slots):
            slot_counts = [trial[variant][j]["counts"] for trial in ordered]
            per_slot_curves.append(aggregate_slot_counts(slot_counts, spec.l_grid))
        for row, trial in enumerate(ordered):
            for j in range(num_slots):
                fa[row, j], md[row, j], n_inact[row, j], n_act[row, j] = \
                    trial[variant][j]["counts"]
            nmse_rows[row] = [trial[variant][j]["nmse"] for j in range(num_slots)]
            tau_rows[row] = [trial[variant][j]["tau_final"] for j in range(num_slots)]
        curves[variant] = per_slot_curves
        nmse[variant] = _nan_mean_stderr(nmse_rows)
        tau_final[variant] = _nan_mean_stderr(tau_rows)
        per_trial[variant] = {"fa": fa, "md": md, "n_inactive": n_inact,
                              "n_active": n_act}

    se_traces = {v: chained_se_traces(spec, v) for v in spec.variants}
    metadata = {
        "seed": spec.scenario.rng_seed,
        "version": __version__,
        "wall_time_s": time.time() - start,
        "num_trials": spec.num_trials,
        "completed_trials": len(results),
        "failed_trials": len(failures),
        "parallelism": spec.parallelism,
        "variants": list(spec.variants),
    }
    return AggregateResult(spec=spec, curves=curves, nmse=nmse,
                           tau_final=tau_final, se_traces=se_traces,
                           per_trial=per_trial, metadata=metadata,
                           failures=failures)


def _nan_mean_stderr(rows: np.ndarray):
    import warnings
    valid = np.sum(~np.isnan(rows), axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.where(valid > 0, np.nanmean(rows, axis=0), np.nan)
        sd = np.where(valid > 1, np.nanstd(rows, axis=0, ddof=1), np.nan)
    return mean, sd / np.sqrt(np.maximum(valid, 1))


def chained_se_traces(spec: ExperimentSpec, variant: str) -> list[SeTrace]:
    """Per-slot state-evolution predictions for one variant.

    Slot 1 always runs without side information.  Under "si" each later
    slot conditions on the previous slot's converged fixed point.
    """
    traces = []
    tau_prev = None
    for j in range(spec.scenario.num_blocks):
        mode = "nosi" if (variant == "nosi" or j == 0) else "si"
        params = SeParams.from_scenario(spec.scenario,
                                        sample_count=spec.se_sample_count,
                                        tau_prev=tau_prev)
        rng = substream(spec.scenario.rng_seed, STREAM_SE_TRACE, variant, j)
        trace = se_fixed_point(params, variant=mode, rng=rng)
        traces.append(trace)
        if variant == "si":
            tau_prev = float(np.sqrt(trace.fixed_point))
    return traces


# ---------------------------------------------------------------------------
# response-curve and threshold-curve grids

def denoiser_response_curve(gamma: float, tau: float, tau_prev: float,
                            lam: float, alpha: float, beta: float,
                            num_antennas: int, prev_magnitudes,
                            grid: np.ndarray):
    """Magnitude response |output| over a |input| grid.

    Returns rows (variant, prev_magnitude, input_magnitude,
    output_magnitude); the no-SI response is included once with
    prev_magnitude 0.  Only magnitudes matter: the denoiser is phase
    equivariant.
    """
    from .denoiser import denoise_rows as _rows
    grid = np.asarray(grid, dtype=float)
    x = np.zeros((grid.size, num_antennas), dtype=complex)
    x[:, 0] = grid
    out_rows = []
    nosi, _ = _rows(x, gamma, tau, lam, alpha, beta)
    for g, o in zip(grid, np.abs(nosi[:, 0])):
        out_rows.append(("nosi", 0.0, float(g), float(o)))
    for prev_mag in prev_magnitudes:
        prev = np.zeros((grid.size, num_antennas), dtype=complex)
        prev[:, 0] = prev_mag
        si_out, _ = _rows(x, gamma, tau, lam, alpha, beta,
                          prev_rows=prev, tau_prev=tau_prev)
        for g, o in zip(grid, np.abs(si_out[:, 0])):
            out_rows.append(("si", float(prev_mag), float(g), float(o)))
    return out_rows


def detector_threshold_curve(gamma: float, tau: float, tau_prev: float,
                             lam: float, alpha: float, beta: float,
                             num_antennas: int, l: float,
                             prev_grid: np.ndarray):
    """Energy threshold versus previous-block magnitude, with its limits.

    Returns (rows, lower_limit, upper_limit); rows are (prev_magnitude,
    threshold_si, threshold_nosi).
    """
    from .denoiser import DenoiserParams, SideInfo
    from .detector import threshold_nosi, threshold_si
    params = DenoiserParams(gamma=gamma, tau=tau, lam=lam, alpha=alpha,
                            beta=beta, num_antennas=num_antennas)
    tau_sq = tau * tau
    delta = 1.0 / tau_sq - 1.0 / (tau_sq + gamma)
    base = l + num_antennas * np.log((tau_sq + gamma) / tau_sq)
    lower = (base + np.log(beta / alpha)) / delta
    upper = (base + np.log((1.0 - beta) / (1.0 - alpha))) / delta
    t_nosi = threshold_nosi(l, params)
    rows = []
    for prev_mag in np.asarray(prev_grid, dtype=float):
        prev = np.zeros(num_antennas, dtype=complex)
        prev[0] = prev_mag
        si = SideInfo(pseudo_obs=prev, tau_prev=tau_prev)
        rows.append((float(prev_mag), threshold_si(l, si, params), t_nosi))
    return rows, float(lower), float(upper)


# ---------------------------------------------------------------------------
# CSV emission

def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def emit_csv(result: AggregateResult, out_dir) -> dict:
    """Write ROC, NMSE and SE-trace CSVs plus a metadata JSON.

    The CSV bytes are deterministic functions of (spec, seed); wall time
    and other run-dependent facts live only in metadata.json.
    """
    import os
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    roc_rows = []
    for variant in result.spec.variants:
        for j, curve in enumerate(result.curves[variant]):
            for k, l in enumerate(curve.l_grid):
                roc_rows.append((j + 1, variant, l, curve.p_fa[k], curve.p_md[k],
                                 curve.num_trials, curve.se_p_fa[k],
                                 curve.se_p_md[k]))
    paths["roc"] = os.path.join(out_dir, "roc.csv")
    _write_csv(paths["roc"],
               ["slot_j", "variant", "l", "P_FA", "P_MD", "trials",
                "se_P_FA", "se_P_MD"], roc_rows)

    nmse_rows = []
    for variant in result.spec.variants:
        mean, se = result.nmse[variant]
        tau_mean, tau_se = result.tau_final[variant]
        for j in range(len(mean)):
            nmse_rows.append((j + 1, variant, mean[j], se[j],
                              tau_mean[j], tau_se[j]))
    paths["nmse"] = os.path.join(out_dir, "nmse.csv")
    _write_csv(paths["nmse"],
               ["slot_j", "variant", "nmse", "se_nmse", "tau_final",
                "se_tau_final"], nmse_rows)

    se_rows = []
    for variant in result.spec.variants:
        for j, trace in enumerate(result.se_traces[variant]):
            for step, (tau_sq, err) in enumerate(zip(trace.tau_sq, trace.stderr)):
                se_rows.append((variant, j + 1, step, tau_sq, err))
    paths["se_trace"] = os.path.join(out_dir, "se_trace.csv")
    _write_csv(paths["se_trace"],
               ["variant", "slot_j", "step", "tau_sq", "stderr"], se_rows)

    # response/threshold grids at the experiment's own operating point:
    # median channel gain and the converged slot-1 noise level
    scenario = result.spec.scenario
    gamma = float(np.median(scenario.path_losses))
    first_variant = result.spec.variants[0]
    tau = float(np.sqrt(result.se_traces[first_variant][0].fixed_point))
    scale = np.sqrt(gamma)
    curve_kw = dict(gamma=gamma, tau=tau, tau_prev=tau,
                    lam=scenario.activity_rate, alpha=scenario.persistence,
                    beta=scenario.beta, num_antennas=scenario.num_antennas)
    grid = np.linspace(0.0, 4.0 * np.sqrt(gamma + tau * tau), 401)
    den_rows = denoiser_response_curve(
        prev_magnitudes=[1e-3 * scale, 10.0 * scale], grid=grid, **curve_kw)
    paths["denoiser_curve"] = os.path.join(out_dir, "denoiser_curve.csv")
    _write_csv(paths["denoiser_curve"],
               ["variant", "prev_abs", "input_abs", "output_abs"], den_rows)
    thr_rows, _, _ = detector_threshold_curve(l=0.0, prev_grid=grid, **curve_kw)
    paths["threshold_curve"] = os.path.join(out_dir, "threshold_curve.csv")
    _write_csv(paths["threshold_curve"],
               ["prev_abs", "threshold_si", "threshold_nosi"], thr_rows)

    paths["metadata"] = os.path.join(out_dir, "metadata.json")
    with open(paths["metadata"], "w") as fh:
        json.dump(result.metadata, fh, indent=2)
    return paths


def read_roc_csv(path):
    """Load an emitted ROC CSV back into arrays keyed by (slot, variant)."""
    import csv as _csv
    out = {}
    with open(path) as fh:
        for row in _csv.DictReader(fh):
            key = (int(row["slot_j"]), row["variant"])
            entry = out.setdefault(key, {"l": [], "p_fa": [], "p_md": [],
                                         "se_p_fa": [], "se_p_md": [],
                                         "trials": []})
            entry["l"].append(float(row["l"]))
            entry["p_fa"].append(float(row["P_FA"]))
            entry["p_md"].append(float(row["P_MD"]))
            entry["se_p_fa"].append(float(row["se_P_FA"]))
            entry["se_p_md"].append(float(row["se_P_MD"]))
            entry["trials"].append(int(row["trials"]))
    for entry in out.values():
        for key in entry:
            entry[key] = np.asarray(entry[key])
    return out
