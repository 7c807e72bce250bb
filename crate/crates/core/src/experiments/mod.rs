//! Desk-scale experiment harnesses: dataset generation, gap-vs-S fitting,
//! depth refinement, activation comparison and the discretization rate study.

pub mod compare;
pub mod convergence;
pub mod data;
pub mod depth;
pub mod fit;
pub mod gap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::ActivationError;
use crate::io::IoError;
use crate::resnet::{DiscreteParams, Dims, LayerParams, PreprocessParams, ResnetError};
use crate::train::TrainError;

pub use compare::{activation_comparison, ArmSummary, ComparisonReport, ComparisonStudy, CurvePoint, OffsetMode};
pub use convergence::{convergence_rate_study, forward_error, ConvergenceReport};
pub use data::{generate_dataset, DataSource, Dataset, DatasetSpec, Teacher};
pub use depth::{depth_refinement, DepthReport, DepthRun, DepthStudy};
pub use fit::{fit_inverse_sqrt, loglog_slope, spearman, FitResult};
pub use gap::{gap_vs_samples, ArchFit, Exclusion, GapRecord, GapReport, GapStudy};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Resnet(#[from] ResnetError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Fixed-step architecture `(T, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arch {
    pub horizon: f64,
    pub layers: usize,
}

/// Worker count: `RESFLOW_THREADS` if set to a positive integer, else all cores.
pub fn worker_count() -> usize {
    std::env::var("RESFLOW_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `f` on a pool sized by [`worker_count`].
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn fan_in_mat<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let s = scale / (cols as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-s..=s))
}

/// Student initialization: weight entries uniform in `+-scale / sqrt(fan_in)`, zero biases.
pub fn init_student<R: Rng + ?Sized>(
    dims: Dims,
    arch: Arch,
    scale: f64,
    rng: &mut R,
) -> Result<DiscreteParams, ResnetError> {
    let pre = init_pre(dims, scale, rng);
    let layers = (0..arch.layers).map(|_| init_layer(dims, scale, rng)).collect();
    DiscreteParams::new(pre, layers, arch.horizon)
}

pub(crate) fn init_pre<R: Rng + ?Sized>(dims: Dims, scale: f64, rng: &mut R) -> PreprocessParams {
    PreprocessParams {
        u: fan_in_mat(dims.n, dims.n_d, scale, rng),
        a: DVector::zeros(dims.n),
    }
}

fn init_layer<R: Rng + ?Sized>(dims: Dims, scale: f64, rng: &mut R) -> LayerParams {
    LayerParams {
        v: fan_in_mat(dims.m, dims.n, scale, rng),
        w: fan_in_mat(dims.n, dims.m, scale, rng),
        b: DVector::zeros(dims.m),
        c: DVector::zeros(dims.n),
    }
}

/// Mean of the last `window` entries (all of them if there are fewer).
pub(crate) fn tail_mean(v: &[f64], window: usize) -> f64 {
    let k = window.clamp(1, v.len().max(1));
    let tail = &v[v.len().saturating_sub(k)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}
