"""Side-information-aided MMV-AMP for grant-free activity detection.

Joint device-activity detection and channel estimation across coherence
blocks with Markov-correlated activity: scenario generation, the SI-aided
iterative estimator, its state evolution, likelihood-ratio detection, and
a Monte Carlo experiment harness.
"""

__version__ = "0.1.0"

from .amp import (AmpBlockResult, AmpState, BlockSideInfo, TrialResult,
                  amp_iterate, estimate_tau, pseudo_observations, run_block,
                  run_trial)
from .denoiser import (CasePosterior, DenoiserParams, SideInfo,
                       case_log_likelihoods, case_posteriors, denoise_nosi,
                       denoise_rows, denoise_si, denoiser_derivative_avg,
                       log_mu, log_si_weight, oracle_posterior_mean, si_weight)
from .detector import (BlockDetection, DetectionDecision, DetectionMetrics,
                       DetectionReport, RocCurve, block_detection,
                       compute_metrics, decide, detect_block,
                       llr_appendix_oracle, llr_value, roc_sweep,
                       sweep_block_counts, threshold_nosi, threshold_si)
from .errors import (DimensionMismatch, InvalidConfig, NonFiniteState,
                     ParseError, SiAmpError, ValidationError)
from .experiment import (AggregateResult, ExperimentSpec, annulus_gains,
                         default_l_grid, emit_csv, parse_config,
                         run_experiment, spec_from_options)
from .model import (BlockTruth, MarkovActivityModel, PilotMatrix,
                    ReceivedBlock, ScenarioConfig, ScenarioRealization,
                    beta_from, draw_pilot_matrix, dump_trace_csv,
                    generate_scenario, path_loss_linear,
                    sample_activity_trace, synthesize_block)
from .state_evolution import SeParams, SeTrace, se_fixed_point, se_step
from .streams import seed_sequence, substream
