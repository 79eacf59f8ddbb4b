"""RIS-assisted physical-layer secret key generation: simulation and analysis."""

from .channel import ChannelBlock, Covariances, RisSchedule, aggregate, covariances, sample_block, sample_schedule
from .estimation import EstimateSet, estimate_pilot, estimate_reduced, run_round
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    emit_csv,
    emit_figure_csv,
    figure_preset,
    run_figure,
    run_point,
    run_sweep,
)
from .keygen import (
    KeyMaterial,
    PhaseQuantizer,
    ProtocolStats,
    assemble_keys,
    bits_from_level,
    match_stats,
    phase_of,
    quantize_phase,
    simulate_handshake_counts,
)
from .params import TABLE1, DerivedParams, ParamError, RandomSource, SystemParams, snr_db_to_noise_power, validate
from .theory import GaussianJointModel, build_joint_model, mi_oracle, skr_lower_bound

__version__ = "0.1.0"
