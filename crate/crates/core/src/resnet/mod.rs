//! Residual networks: the discrete recursion, the continuous flow, parameter
//! containers with their norms, sampling/extension operators and state bounds.

mod format;
mod forward;
mod params;
mod path;

use thiserror::Error;

pub use format::{read_binary, read_json, write_binary, write_json, ParamsJson};
pub use forward::{
    continuous_flow, discrete_forward, permute_params, preprocess, residual_field, rk4_dense, state_bound,
    DenseSolution, Integrator, StateTrajectory,
};
pub use params::{
    mat_norm, project_mat, project_vec, random_mat, random_vec, vec_norm, DiscreteParams, Dims, LayerParams,
    ParamBudget, PreprocessParams,
};
pub use path::{
    extend_params, grid_time, interval_index, l2_path_distance, sample_params, ContinuousParams, FourierMode,
    FourierPath, ParamPath,
};

#[derive(Debug, Error)]
pub enum ResnetError {
    #[error("input has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("a network needs at least one layer")]
    ZeroLayers,
    #[error("widths must be positive")]
    ZeroWidth,
    #[error("integration needs at least one step")]
    ZeroSteps,
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("budget `{0}` must be positive and finite, got {1}")]
    Budget(&'static str, f64),
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
    #[error("coordinate index {index} out of range for width {n}")]
    Index { index: usize, n: usize },
    #[error("parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
