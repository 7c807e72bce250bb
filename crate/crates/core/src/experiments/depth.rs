//! Depth refinement at fixed horizon: every depth starts from the same smooth
//! parameter path, sampled at its own layer grid.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convergence::{forward_error, reference_solutions, REFERENCE_STEPS};
use super::data::{Dataset, DatasetSpec};
use super::gap::{is_divergence, seed_dataset, Exclusion};
use super::{init_pre, with_pool, Arch, ExperimentError};
use crate::activation::ActivationConfig;
use crate::resnet::{sample_params, ContinuousParams, Dims, FourierPath, ParamPath};
use crate::seed::{derive_seed, rng_for};
use crate::train::{sgd_train, LossSpec, TrainConfig};

fn default_modes() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthStudy {
    pub horizon: f64,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub data: DatasetSpec,
    pub train: TrainConfig,
    pub width: usize,
    pub activation: ActivationConfig,
    pub loss: LossSpec,
    /// Sup/H^1 budget of the random initial path.
    pub init_bound: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRun {
    pub layers: usize,
    pub seed: u64,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
    pub train_curve: Vec<f64>,
    pub test_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub horizon: f64,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
    pub runs: Vec<DepthRun>,
    pub exclusions: Vec<Exclusion>,
    pub mean_final_train: Vec<f64>,
    pub mean_final_test: Vec<f64>,
    /// `|m(L_{k+1}) - m(L_k)|` of the seed-mean final train loss.
    pub train_diffs: Vec<f64>,
    pub test_diffs: Vec<f64>,
    /// Pairs `i < j` of train differences with `diff_j < diff_i`.
    pub shrinking_pairs: usize,
    pub total_pairs: usize,
    /// Whether the train differences strictly decrease along the grid.
    pub strict_chain: bool,
    /// Forward error of the untrained first-seed network against its continuous path, per depth.
    pub init_forward_errors: Vec<f64>,
}

impl DepthStudy {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Precondition(m.to_string()));
        if self.l_grid.is_empty() || self.l_grid[0] == 0 || self.l_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("L_grid must be nonempty, positive and strictly ascending");
        }
        if self.seeds.is_empty() || self.width == 0 {
            return bad("seeds must be nonempty and width positive");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if !(self.init_bound > 0.0 && self.init_bound.is_finite()) {
            return bad("init_bound must be positive");
        }
        self.activation.build()?;
        self.train.validate()?;
        Ok(())
    }

    /// Continuous initial path for one seed.
    pub fn init_path(&self, seed: u64, dims: Dims) -> Result<ContinuousParams, ExperimentError> {
        let mut rng = rng_for(seed, &[0xDE97]);
        let pre = init_pre(dims, 1.0, &mut rng);
        let fp = FourierPath::random(dims, self.modes, self.init_bound, self.horizon, &mut rng);
        Ok(ContinuousParams::new(pre, ParamPath::Fourier(fp), self.horizon)?)
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn depth_refinement(study: &DepthStudy) -> Result<DepthReport, ExperimentError> {
    study.validate()?;
    let act = study.activation.build()?;
    let jobs: Vec<(usize, usize)> = (0..study.seeds.len())
        .flat_map(|k| (0..study.l_grid.len()).map(move |l| (k, l)))
        .collect();
    let (data, outcomes, init_forward_errors) = with_pool(|| -> Result<_, ExperimentError> {
        let data: Vec<Dataset> = study
            .seeds
            .par_iter()
            .map(|&seed| seed_dataset(&study.data, seed, study.data.s_train))
            .collect::<Result<_, _>>()?;
        let outcomes: Vec<Result<DepthRun, Exclusion>> = jobs
            .par_iter()
            .map(|&(ki, li)| {
                let seed = study.seeds[ki];
                let layers = study.l_grid[li];
                let ds = &data[ki];
                let dims = Dims::new(ds.input_dim(), ds.output_dim(), study.width)?;
                let init = sample_params(&study.init_path(seed, dims)?, layers)?;
                let mut cfg = study.train.clone();
                // identical batch order at every depth
                cfg.seed = derive_seed(seed, &[0]);
                match sgd_train(&init, &act, &study.loss, &ds.train, Some(&ds.test), &cfg) {
                    Ok(out) => {
                        let train_curve: Vec<f64> = out.log.iter().map(|e| e.train_loss).collect();
                        let test_curve: Vec<f64> = out.log.iter().map(|e| e.test_loss).collect();
                        Ok(Ok(DepthRun {
                            layers,
                            seed,
                            final_train_loss: *train_curve.last().unwrap(),
                            final_test_loss: *test_curve.last().unwrap(),
                            train_curve,
                            test_curve,
                        }))
                    }
                    Err(e) if is_divergence(&e) => Ok(Err(Exclusion {
                        s: ds.train.len(),
                        seed,
                        arch: Arch { horizon: study.horizon, layers },
                        reason: e.to_string(),
                    })),
                    Err(e) => Err(ExperimentError::from(e)),
                }
            })
            .collect::<Result<_, ExperimentError>>()?;
        let ds = &data[0];
        let dims = Dims::new(ds.input_dim(), ds.output_dim(), study.width)?;
        let path = study.init_path(study.seeds[0], dims)?;
        let inputs: Vec<DVector<f64>> = ds.test.iter().take(16).map(|s| s.d.clone()).collect();
        let reference = reference_solutions(&path, &act, &inputs, REFERENCE_STEPS)?;
        let errs = study
            .l_grid
            .par_iter()
            .map(|&l| forward_error(&path, &act, &inputs, &reference, l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((data, outcomes, errs))
    })?;
    drop(data);
    let mut runs = Vec::new();
    let mut exclusions = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(x) => exclusions.push(x),
        }
    }
    let per_l = |f: fn(&DepthRun) -> f64| -> Vec<f64> {
        study
            .l_grid
            .iter()
            .map(|&l| mean(runs.iter().filter(|r| r.layers == l).map(f)))
            .collect()
    };
    let mean_final_train = per_l(|r| r.final_train_loss);
    let mean_final_test = per_l(|r| r.final_test_loss);
    let diffs = |m: &[f64]| m.windows(2).map(|w| (w[1] - w[0]).abs()).collect::<Vec<f64>>();
    let train_diffs = diffs(&mean_final_train);
    let test_diffs = diffs(&mean_final_test);
    let k = train_diffs.len();
    let shrinking_pairs = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter(|&(i, j)| train_diffs[j] < train_diffs[i])
        .count();
    Ok(DepthReport {
        horizon: study.horizon,
        l_grid: study.l_grid.clone(),
        runs,
        exclusions,
        strict_chain: train_diffs.windows(2).all(|w| w[1] < w[0]),
        total_pairs: k * k.saturating_sub(1) / 2,
        shrinking_pairs,
        mean_final_train,
        mean_final_test,
        train_diffs,
        test_diffs,
        init_forward_errors,
    })
}
