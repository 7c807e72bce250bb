//! Discretization error of the sampled network against the continuous flow.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::loglog_slope;
use super::{with_pool, ExperimentError};
use crate::activation::ActivationSpec;
use crate::resnet::{discrete_forward, grid_time, rk4_dense, sample_params, ContinuousParams, DenseSolution};

/// RK4 steps of the reference solution.
pub const REFERENCE_STEPS: usize = 4096;
/// Points per layer interval (endpoints included) on which the sup is taken.
pub const SUBGRID_POINTS: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub l_grid: Vec<usize>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln E` against `ln tau_L`.
    pub slope: Option<f64>,
    /// Set when every error is zero and no slope can be fitted.
    pub slope_skipped: bool,
    pub strictly_decreasing: bool,
}

/// `max_d max_l sup_{t in [t_{l-1}, t_l]} ||x^l(d) - x(t; d)||_inf` for the
/// `layers`-layer sampling of `path`, with the sup taken on the sub-grid.
pub fn forward_error(
    path: &ContinuousParams,
    act: &ActivationSpec,
    inputs: &[DVector<f64>],
    reference: &[DenseSolution],
    layers: usize,
) -> Result<f64, ExperimentError> {
    let disc = sample_params(path, layers)?;
    let horizon = path.horizon();
    let mut worst = 0.0f64;
    for (d, sol) in inputs.iter().zip(reference) {
        let traj = discrete_forward(&disc, act, d)?;
        for l in 1..=layers {
            let t0 = grid_time(l - 1, horizon, layers);
            let t1 = grid_time(l, horizon, layers);
            for j in 0..SUBGRID_POINTS {
                let t = t0 + (t1 - t0) * j as f64 / (SUBGRID_POINTS - 1) as f64;
                let e = (&traj.states[l] - sol.eval(t)).amax();
                worst = worst.max(e);
            }
        }
    }
    Ok(worst)
}

/// Reference solutions for each input.
pub fn reference_solutions(
    path: &ContinuousParams,
    act: &ActivationSpec,
    inputs: &[DVector<f64>],
    steps: usize,
) -> Result<Vec<DenseSolution>, ExperimentError> {
    inputs.iter().map(|d| Ok(rk4_dense(path, act, d, steps)?)).collect()
}

pub fn convergence_rate_study(
    path: &ContinuousParams,
    act: &ActivationSpec,
    inputs: &[DVector<f64>],
    l_grid: &[usize],
) -> Result<ConvergenceReport, ExperimentError> {
    if l_grid.len() < 4 {
        return Err(ExperimentError::Precondition(format!("L_grid needs at least 4 points, got {}", l_grid.len())));
    }
    if l_grid[0] == 0 || l_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Precondition("L_grid must be positive and ascending".into()));
    }
    let ratio = l_grid[1] as f64 / l_grid[0] as f64;
    if l_grid.windows(2).any(|w| (w[1] as f64 / w[0] as f64 - ratio).abs() > 1e-12) {
        return Err(ExperimentError::Precondition("L_grid must be geometric".into()));
    }
    if inputs.is_empty() {
        return Err(ExperimentError::Precondition("need at least one input".into()));
    }
    let reference = reference_solutions(path, act, inputs, REFERENCE_STEPS)?;
    let errors: Vec<f64> = with_pool(|| {
        l_grid
            .par_iter()
            .map(|&l| forward_error(path, act, inputs, &reference, l))
            .collect::<Result<_, _>>()
    })?;
    let taus: Vec<f64> = l_grid.iter().map(|&l| path.horizon() / l as f64).collect();
    let all_zero = errors.iter().all(|&e| e == 0.0);
    Ok(ConvergenceReport {
        l_grid: l_grid.to_vec(),
        slope: if all_zero { None } else { loglog_slope(&taus, &errors) },
        slope_skipped: all_zero,
        strictly_decreasing: errors.windows(2).all(|w| w[1] < w[0]),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::catalog;
    use crate::resnet::{Dims, FourierPath, LayerParams, ParamPath, PreprocessParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inputs() -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![0.3, -0.5]), DVector::from_vec(vec![-0.8, 0.1])]
    }

    #[test]
    fn zero_field_skips_slope() {
        let dims = Dims::new(2, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pre = PreprocessParams::random(dims, 1.0, &mut rng);
        let path = ContinuousParams::new(pre, ParamPath::Constant(LayerParams::zeros(2, 3)), 1.0).unwrap();
        let act = catalog("ReLU", &[]).unwrap();
        let r = convergence_rate_study(&path, &act, &inputs(), &[4, 8, 16, 32]).unwrap();
        assert!(r.errors.iter().all(|&e| e == 0.0));
        assert!(r.slope_skipped && r.slope.is_none());
    }

    #[test]
    fn constant_path_is_first_order() {
        let dims = Dims::new(2, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pre = PreprocessParams::random(dims, 1.0, &mut rng);
        let layer = LayerParams::random(2, 3, 1.0, &mut rng);
        let path = ContinuousParams::new(pre, ParamPath::Constant(layer), 1.0).unwrap();
        let act = catalog("TReLU", &[0.5]).unwrap();
        let r = convergence_rate_study(&path, &act, &inputs(), &[4, 8, 16, 32, 64]).unwrap();
        assert!(r.slope.unwrap() >= 0.9, "{r:?}");
    }

    #[test]
    fn grid_preconditions() {
        let dims = Dims::new(2, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pre = PreprocessParams::random(dims, 1.0, &mut rng);
        let fp = FourierPath::random(dims, 3, 1.0, 1.0, &mut rng);
        let path = ContinuousParams::new(pre, ParamPath::Fourier(fp), 1.0).unwrap();
        let act = catalog("ReLU", &[]).unwrap();
        assert!(convergence_rate_study(&path, &act, &inputs(), &[4, 8, 16]).is_err());
        assert!(convergence_rate_study(&path, &act, &inputs(), &[4, 8, 16, 64]).is_err());
    }
}
