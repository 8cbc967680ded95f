"""Synthetic massive-IoT scenario generation.

Produces Markov-correlated activity traces, i.i.d. Rayleigh channels,
complex Gaussian pilot sequences and the noisy received signal
Y = S X + Z for each coherence block, all driven by named RNG
substreams of a single master seed.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig
from .streams import substream

# substream names used by scenario generation
STREAM_PILOTS = "pilots"
STREAM_ACTIVITY = "activity"
STREAM_CHANNELS = "channels"
STREAM_NOISE = "noise"


def beta_from(lam: float, alpha: float) -> float:
    """Activation probability of a previously inactive device.

    Solves the stationarity constraint alpha*lam + beta*(1-lam) = lam for
    beta, so the marginal activity rate stays at ``lam`` in every block.

    Raises InvalidConfig if (lam, alpha) admit no valid probability.
    """
    if not 0.0 < lam < 1.0:
        raise InvalidConfig(f"activity rate must be in (0,1), got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidConfig(f"persistence must be in [0,1], got {alpha}")
    beta = lam * (1.0 - alpha) / (1.0 - lam)
    if not 0.0 <= beta <= 1.0:
        raise InvalidConfig(
            f"derived beta={beta:.6g} outside [0,1] for lam={lam}, alpha={alpha}"
        )
    return beta


def path_loss_linear(distance_km: float) -> float:
    """Linear power gain of the -128.1 - 36.7*log10(d_km) dB path loss law."""
    if not distance_km > 0.0:
        raise InvalidConfig(f"distance must be positive, got {distance_km}")
    loss_db = -128.1 - 36.7 * np.log10(distance_km)
    return float(10.0 ** (loss_db / 10.0))


@dataclass(frozen=True)
class MarkovActivityModel:
    """Two-state activity chain: lam marginal, alpha/beta transitions."""

    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise InvalidConfig(f"lam must be in (0,1), got {self.lam}")
        for name, p in (("alpha", self.alpha), ("beta", self.beta)):
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"{name} must be in [0,1], got {p}")
        resid = self.alpha * self.lam + self.beta * (1.0 - self.lam) - self.lam
        if abs(resid) > 1e-12:
            raise InvalidConfig(
                f"stationarity violated: alpha*lam + beta*(1-lam) - lam = {resid:.3e}"
            )

    @classmethod
    def from_rates(cls, lam: float, alpha: float) -> "MarkovActivityModel":
        return cls(lam=lam, alpha=alpha, beta=beta_from(lam, alpha))

    def transition_matrix(self) -> np.ndarray:
        """Rows indexed by previous state (0=inactive, 1=active)."""
        return np.array(
            [[1.0 - self.beta, self.beta], [1.0 - self.alpha, self.alpha]]
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """All system, channel, activity and algorithm parameters of one trial."""

    num_devices: int
    pilot_length: int
    num_antennas: int
    num_blocks: int
    activity_rate: float
    persistence: float
    noise_variance: float
    path_losses: np.ndarray  # shape (num_devices,), linear power gains
    rng_seed: int
    amp_max_iters: int = 50
    amp_convergence_tol: float = 1e-6

    @property
    def beta(self) -> float:
        return beta_from(self.activity_rate, self.persistence)

    def activity_model(self) -> MarkovActivityModel:
        return MarkovActivityModel.from_rates(self.activity_rate, self.persistence)

    def violations(self) -> list[str]:
        """All invariant violations (empty list when valid)."""
        out = []
        for name in ("num_devices", "pilot_length", "num_antennas", "num_blocks"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be a positive count")
        if not 0.0 < self.activity_rate < 1.0:
            out.append(f"activity_rate must be in (0,1), got {self.activity_rate}")
        if not 0.0 <= self.persistence <= 1.0:
            out.append(f"persistence must be in [0,1], got {self.persistence}")
        elif 0.0 < self.activity_rate < 1.0:
            b = self.activity_rate * (1.0 - self.persistence) / (1.0 - self.activity_rate)
            if not 0.0 <= b <= 1.0:
                out.append(f"derived beta={b:.6g} outside [0,1]")
        if not self.noise_variance > 0.0:
            out.append(f"noise_variance must be positive, got {self.noise_variance}")
        gammas = np.asarray(self.path_losses, dtype=float)
        if gammas.ndim != 1 or gammas.shape[0] != self.num_devices:
            out.append(
                f"path_losses must have shape ({self.num_devices},), got {gammas.shape}"
            )
        elif not np.all(gammas > 0.0):
            out.append("path_losses must all be positive")
        if self.amp_max_iters < 1:
            out.append("amp_max_iters must be a positive count")
        if self.amp_convergence_tol < 0.0:
            out.append("amp_convergence_tol must be nonnegative")
        return out

    def validate(self) -> "ScenarioConfig":
        bad = self.violations()
        if bad:
            raise InvalidConfig("; ".join(bad))
        return self


@dataclass(frozen=True)
class PilotMatrix:
    """L x N pilot matrix, entries i.i.d. CN(0, 1/L), fixed for a trial."""

    matrix: np.ndarray

    @property
    def pilot_length(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_devices(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class BlockTruth:
    """Ground truth of one coherence block."""

    activity: np.ndarray  # (N,) bool
    channels: np.ndarray  # (N, M) complex, drawn for every device
    effective_signal: np.ndarray  # (N, M) complex, row n = activity[n]*channels[n]


@dataclass(frozen=True)
class ReceivedBlock:
    """Noisy observation Y = S X + Z of one block, with the drawn Z kept."""

    received: np.ndarray  # (L, M) complex
    noise: np.ndarray  # (L, M) complex


@dataclass(frozen=True)
class ScenarioRealization:
    """One full J-block realization of a scenario."""

    config: ScenarioConfig
    pilots: PilotMatrix
    blocks: list[BlockTruth] = field(default_factory=list)
    received: list[ReceivedBlock] = field(default_factory=list)


def _complex_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    """I.i.d. CN(0, variance) entries; variance may broadcast over shape."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def draw_pilot_matrix(pilot_length: int, num_devices: int,
                      rng: np.random.Generator) -> PilotMatrix:
    s = _complex_gaussian(rng, (pilot_length, num_devices), 1.0 / pilot_length)
    return PilotMatrix(matrix=s)


def sample_activity_trace(model: MarkovActivityModel, num_devices: int,
                          num_blocks: int, rng: np.random.Generator) -> np.ndarray:
    """(N, J) boolean activity matrix.

    Block 1 is drawn from the stationary Bernoulli(lam) marginal; each
    later block follows the chain transitions, independently per device.
    """
    u = rng.random((num_devices, num_blocks))
    trace = np.empty((num_devices, num_blocks), dtype=bool)
    trace[:, 0] = u[:, 0] < model.lam
    for j in range(1, num_blocks):
        prev = trace[:, j - 1]
        trace[:, j] = np.where(prev, u[:, j] < model.alpha, u[:, j] < model.beta)
    return trace


def draw_block_truth(activity: np.ndarray, path_losses: np.ndarray,
                     num_antennas: int, rng: np.random.Generator) -> BlockTruth:
    """Fresh Rayleigh channels h_n ~ CN(0, gamma_n I) and X rows delta_n*h_n."""
    n = activity.shape[0]
    gammas = np.asarray(path_losses, dtype=float)
    channels = _complex_gaussian(rng, (n, num_antennas), gammas[:, None])
    effective = np.where(activity[:, None], channels, 0.0 + 0.0j)
    return BlockTruth(activity=activity.astype(bool), channels=channels,
                      effective_signal=effective)


def synthesize_block(truth: BlockTruth, pilots: PilotMatrix,
                     noise_variance: float,
                     rng: np.random.Generator) -> ReceivedBlock:
    """Y = S X + Z with Z i.i.d. CN(0, noise_variance)."""
    s = pilots.matrix
    x = truth.effective_signal
    if s.shape[1] != x.shape[0]:
        raise DimensionMismatch(
            f"pilot matrix has {s.shape[1]} devices, truth has {x.shape[0]}"
        )
    z = _complex_gaussian(rng, (s.shape[0], x.shape[1]), noise_variance)
    return ReceivedBlock(received=s @ x + z, noise=z)


def generate_scenario(config: ScenarioConfig) -> ScenarioRealization:
    """Draw pilots, activity, channels and noise for all J blocks.

    Each ingredient uses its own named substream of config.rng_seed, so
    regenerating with the same config is bit-identical and independent
    consumers cannot perturb one another.
    """
    config.validate()
    model = config.activity_model()
    pilots = draw_pilot_matrix(
        config.pilot_length, config.num_devices,
        substream(config.rng_seed, STREAM_PILOTS))
    trace = sample_activity_trace(
        model, config.num_devices, config.num_blocks,
        substream(config.rng_seed, STREAM_ACTIVITY))
    rng_ch = substream(config.rng_seed, STREAM_CHANNELS)
    rng_z = substream(config.rng_seed, STREAM_NOISE)
    blocks, received = [], []
    for j in range(config.num_blocks):
        truth = draw_block_truth(trace[:, j], config.path_losses,
                                 config.num_antennas, rng_ch)
        blocks.append(truth)
        received.append(synthesize_block(truth, pilots, config.noise_variance, rng_z))
    return ScenarioRealization(config=config, pilots=pilots,
                               blocks=blocks, received=received)


def dump_trace_csv(realization: ScenarioRealization, path) -> None:
    """Write per-device truth rows: block, device, active, channel re/im."""
    m = realization.config.num_antennas
    header = ["block", "device", "active"]
    header += [f"channel_re_{k + 1}" for k in range(m)]
    header += [f"channel_im_{k + 1}" for k in range(m)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for j, truth in enumerate(realization.blocks):
            for n in range(realization.config.num_devices):
                h = truth.channels[n]
                row = [j + 1, n, int(truth.activity[n])]
                row += [f"{v:.17g}" for v in h.real]
                row += [f"{v:.17g}" for v in h.imag]
                writer.writerow(row)
