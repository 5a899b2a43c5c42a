"""Rate-region characterization for RIScatter: scatter nodes whose reflection-state
distributions trade backscatter information against primary-link channel shaping."""
from .channel import ChannelDraw, FadingConfig, GeometryConfig, generate_channels, perturb_csi
from .config import ConfigError, ExperimentConfig, config_from_mapping, load_config
from .detector import candidate_grid, reg_inc_gamma, transition_matrix
from .input_solver import InputSolverParams, solve_input_distribution
from .beam_solver import PgaParams, solve_beamformer
from .region import (BcdState, RegionResult, bcd_solve, benchmark_ambc, benchmark_bbc,
                     benchmark_legacy, benchmark_ris, benchmark_sr, rate_region)
from .threshold_solver import ml_thresholds, solve_bisection, solve_dp, solve_smawk

__version__ = "0.1.0"
