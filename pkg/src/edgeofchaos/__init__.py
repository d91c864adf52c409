"""Mean-field theory of deep tanh networks at the edge of chaos.

Signal propagation in wide random networks: variance and correlation
fixed points, the order/chaos phase boundary in the
(sigma_w, sigma_b) plane, depth scales and critical slowing down, and
the practical payoff — networks initialized on the critical line train
more accurately and degrade less when data, width, or batch size are
cut in half.
"""

from .quadrature import QuadratureRule, build_rule, expect_1d, expect_2d, order_for
from .meanfield import (
    Activation,
    CriticalLine,
    DepthScales,
    FixedPointResult,
    HyperParams,
    c_fixed_points,
    c_map_step,
    chi1,
    critical_line,
    critical_sigma_w,
    depth_scales,
    get_activation,
    linear_activation,
    q_fixed_point,
    q_map_step,
    tanh_activation,
)
from .criticality import (
    ExponentEntry,
    ExponentialFit,
    PowerLawFit,
    Trajectory,
    exponent_table,
    fit_exponential,
    fit_power_law,
    trajectory,
)
from .propagator import (
    PHASE_PRESETS,
    CorrelationMatrix,
    NetworkArchitecture,
    RandomNetwork,
    correlation_matrix,
    empirical_q_trajectory,
    forward,
    init_network,
    jacobian,
    normalize_rows,
    propagate_experiment,
    resize_experiment,
)
from .trainer import (
    LOSSES,
    TRAINING_PHASES,
    AccuracyCurve,
    TanhMLPClassifier,
    TrainConfig,
    default_arch,
    gradient,
    phase_comparison,
    resize_training_experiment,
    train,
)
from .data import (
    Dataset,
    bundled_mnist_paths,
    default_data_dir,
    desk_split,
    label_proportions,
    load_mnist,
    save_idx,
    subsample,
    synthetic_gaussian,
)

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule", "build_rule", "expect_1d", "expect_2d", "order_for",
    "Activation", "HyperParams", "FixedPointResult", "DepthScales",
    "CriticalLine", "tanh_activation", "linear_activation", "get_activation",
    "q_map_step", "q_fixed_point", "c_map_step", "c_fixed_points", "chi1",
    "critical_sigma_w", "critical_line", "depth_scales",
    "Trajectory", "PowerLawFit", "ExponentialFit", "ExponentEntry",
    "trajectory", "fit_power_law", "fit_exponential", "exponent_table",
    "PHASE_PRESETS", "NetworkArchitecture", "RandomNetwork",
    "CorrelationMatrix", "init_network", "forward", "jacobian",
    "correlation_matrix", "normalize_rows", "propagate_experiment",
    "resize_experiment", "empirical_q_trajectory",
    "LOSSES", "TRAINING_PHASES", "TrainConfig", "AccuracyCurve",
    "TanhMLPClassifier",
    "default_arch", "train", "gradient", "phase_comparison",
    "resize_training_experiment",
    "Dataset", "load_mnist", "save_idx", "subsample", "label_proportions",
    "synthetic_gaussian", "desk_split", "default_data_dir",
    "bundled_mnist_paths",
    "__version__",
]
