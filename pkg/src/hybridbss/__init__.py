"""Hybrid MIMO/FSO blind source separation simulator."""

from .channel import (
    ChannelMode,
    Geometry,
    MixingMatrix,
    Observation,
    apply_fso_override,
    condition_number,
    default_geometry,
    invert_2x2,
    matrix_one_norm,
    mix,
    mixing_from_geometry,
    separability_index,
)
from .config import ExperimentConfig, config_digest, load_config
from .controller import FrameReport, ModeState, SwitchPolicy, estimate_separability, step
from .metrics import (
    RunReport,
    bit_error_rate,
    evm_rms,
    export_constellation,
    suppression_db,
    symbol_error_rate,
)
from .pipeline import run_demo, run_simulate, run_sweep
from .separation import (
    CancellationResult,
    DemixResult,
    RotationSearch,
    WhiteningTransform,
    cancel_with_reference,
    complex_kurtosis,
    demix,
    find_rotation,
    resolve_ambiguity,
    whiten,
)
from .signals import (
    FilteredNoise,
    Frame,
    InterferenceKind,
    ModulationScheme,
    QamStream,
    Tone,
    add_awgn,
    build_frame,
    demodulate,
    generate_interference,
    make_pilot,
    modulate,
)

__version__ = "0.1.0"
