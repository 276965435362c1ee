//! Network-parameterized topology optimization with adjoint sensitivities.

mod net;
mod optimize;
mod presets;
mod problem;

pub use net::{DesignNet, Theta, DEFAULT_GAIN, DEFAULT_HIDDEN, N_IN, N_OUT, THETA_RANGES};
pub use optimize::{
    block_average, initial_net, optimize, pearson, transfer_infer, OptimizationTrace, OuterConfig, TraceRow,
};
pub use presets::{Load, Preset};
pub use problem::{
    adjoint_gradient, evaluate, evaluate_theta, objective, penalize, theta_gradient, volume_constraint,
    Evaluation, Mode, ObjectiveKind, ToProblem, C_MIN_RATIO,
};
