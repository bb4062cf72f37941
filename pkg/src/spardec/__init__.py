"""Sparse source recovery in underdetermined linear mixtures.

Core pipeline: generate or load a problem ``x = A s``, run iterative
detection-estimation (:func:`ide_solve`) or one of the baselines
(:func:`mof_solve`, :func:`mp_solve`, :func:`lp_solve`), and score the
result with the metrics module. The ``bench`` command drives the
benchmark experiments.
"""

from .baselines import MpConfig, lp_l1_norm, lp_solve, mof_solve, mp_solve
from .detection import (
    SCHEDULE_PRESETS,
    ActiveSetPartition,
    ThresholdSchedule,
    activity,
    cap_active,
    detect,
    detect_topk,
)
from .config import (
    ALGORITHMS,
    EXPERIMENTS,
    ExperimentConfig,
    apply_overrides,
    default_config,
    load_config,
)
from .estimation import (
    EstimationWorkspace,
    FrameCache,
    build_workspace,
    estimate_s_space,
    estimate_x_space,
    frame_gram_factor,
)
from .experiments import (
    RESULT_HEADER,
    ResultRow,
    run_algorithm,
    run_exp1,
    run_exp2,
    run_exp3,
    run_exp4,
    run_exp5,
    run_experiment,
    run_single,
)
from .exceptions import (
    ConfigError,
    DimensionMismatchError,
    InfeasiblePartitionError,
    InvalidParamsError,
    MaxIterationsExceededError,
    NumericalFailureError,
    RankDeficientActiveSetError,
    SdpFormatError,
    SingularSystemError,
    SpardecError,
    ZeroMixtureError,
    ZeroTruthError,
)
from .ide import ide_solve
from .lp import LpConfig, min_l1
from .metrics import (
    SnrMeasurement,
    frobenius_snr,
    relative_approx_error,
    spatial_snr,
    stopwatch,
    temporal_snr,
)
from .problem import (
    Dictionary,
    ExactKParams,
    MogParams,
    SourceVector,
    SparseProblem,
    gen_dictionary,
    gen_source_exact_k,
    gen_source_mog,
    load_problem,
    make_problem,
    perturb_dictionary,
    save_problem,
)
from .report import IterationTrace, SolveReport

__version__ = "0.1.0"

__all__ = [
    "ActiveSetPartition",
    "ConfigError",
    "Dictionary",
    "DimensionMismatchError",
    "ExactKParams",
    "InfeasiblePartitionError",
    "InvalidParamsError",
    "IterationTrace",
    "LpConfig",
    "MaxIterationsExceededError",
    "MogParams",
    "MpConfig",
    "NumericalFailureError",
    "RankDeficientActiveSetError",
    "SCHEDULE_PRESETS",
    "SdpFormatError",
    "SingularSystemError",
    "SnrMeasurement",
    "SolveReport",
    "SourceVector",
    "SparseProblem",
    "SpardecError",
    "ThresholdSchedule",
    "ZeroMixtureError",
    "ZeroTruthError",
    "activity",
    "cap_active",
    "detect",
    "detect_topk",
    "estimate_s_space",
    "estimate_x_space",
    "frame_gram_factor",
    "ALGORITHMS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "apply_overrides",
    "default_config",
    "load_config",
    "RESULT_HEADER",
    "ResultRow",
    "run_algorithm",
    "run_exp1",
    "run_exp2",
    "run_exp3",
    "run_exp4",
    "run_exp5",
    "run_experiment",
    "run_single",
    "FrameCache",
    "EstimationWorkspace",
    "build_workspace",
    "frobenius_snr",
    "gen_dictionary",
    "gen_source_exact_k",
    "gen_source_mog",
    "ide_solve",
    "load_problem",
    "lp_l1_norm",
    "lp_solve",
    "make_problem",
    "min_l1",
    "mof_solve",
    "mp_solve",
    "perturb_dictionary",
    "relative_approx_error",
    "save_problem",
    "spatial_snr",
    "stopwatch",
    "temporal_snr",
]
