//! Generalization gap against training-set size, with the `mu / sqrt(S)` fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{generate_dataset, Dataset, DatasetSpec};
use super::fit::{fit_inverse_sqrt, loglog_slope, spearman, FitResult};
use super::{init_student, tail_mean, with_pool, Arch, ExperimentError};
use crate::activation::ActivationConfig;
use crate::resnet::Dims;
use crate::seed::{derive_seed, rng_for};
use crate::train::{sgd_train, LossSpec, TrainConfig, TrainError};

fn default_window() -> usize {
    10
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapStudy {
    pub archs: Vec<Arch>,
    #[serde(rename = "S_grid")]
    pub s_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `s_train` is replaced by the largest grid size; smaller sizes use prefixes.
    pub data: DatasetSpec,
    pub train: TrainConfig,
    /// Hidden width `m` of the student.
    pub width: usize,
    pub activation: ActivationConfig,
    pub loss: LossSpec,
    /// Number of final epochs averaged into the reported losses.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_scale")]
    pub init_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    #[serde(rename = "S")]
    pub s: usize,
    pub gap: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub seed: u64,
    pub arch: Arch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    #[serde(rename = "S")]
    pub s: usize,
    pub seed: u64,
    pub arch: Arch,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchFit {
    pub arch: Arch,
    /// Seed-averaged gap per grid size (NaN if every run at that size was excluded).
    pub mean_gaps: Vec<f64>,
    /// Adjacent grid pairs over which the mean gap strictly decreases.
    pub decreasing_pairs: usize,
    pub spearman: f64,
    pub loglog_slope: Option<f64>,
    pub fit: Option<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    #[serde(rename = "S_grid")]
    pub s_grid: Vec<usize>,
    pub records: Vec<GapRecord>,
    pub exclusions: Vec<Exclusion>,
    pub fits: Vec<ArchFit>,
}

impl GapStudy {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Precondition(m.to_string()));
        if self.s_grid.len() < 3 {
            return bad("S_grid needs at least 3 points");
        }
        if self.s_grid.windows(2).any(|w| w[0] >= w[1]) || self.s_grid[0] == 0 {
            return bad("S_grid must be positive and strictly ascending");
        }
        if self.archs.is_empty() || self.seeds.is_empty() {
            return bad("archs and seeds must be nonempty");
        }
        if self.width == 0 || self.window == 0 {
            return bad("width and window must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        self.activation.build()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Data stream of one seed, shared by every architecture and grid size.
pub(crate) fn seed_dataset(base: &DatasetSpec, seed: u64, s_train: usize) -> Result<Dataset, ExperimentError> {
    let mut spec = base.clone();
    spec.seed = derive_seed(base.seed, &[seed]);
    spec.s_train = s_train;
    generate_dataset(&spec)
}

pub(crate) fn is_divergence(e: &TrainError) -> bool {
    matches!(e, TrainError::Divergence { .. } | TrainError::NonFiniteGradient { .. })
}

enum JobOutcome {
    Done(GapRecord),
    Excluded(Exclusion),
}

pub fn gap_vs_samples(study: &GapStudy) -> Result<GapReport, ExperimentError> {
    study.validate()?;
    let act = study.activation.build()?;
    let s_max = *study.s_grid.last().unwrap();
    let jobs: Vec<(usize, usize, usize)> = (0..study.archs.len())
        .flat_map(|a| (0..study.s_grid.len()).flat_map(move |s| (0..study.seeds.len()).map(move |k| (a, s, k))))
        .collect();
    let outcomes: Vec<JobOutcome> = with_pool(|| -> Result<_, ExperimentError> {
        let data: Vec<Dataset> = study
            .seeds
            .par_iter()
            .map(|&seed| seed_dataset(&study.data, seed, s_max))
            .collect::<Result<_, _>>()?;
        jobs.par_iter()
            .map(|&(ai, si, ki)| {
                let arch = study.archs[ai];
                let s = study.s_grid[si];
                let seed = study.seeds[ki];
                let ds = &data[ki];
                let dims = Dims::new(ds.input_dim(), ds.output_dim(), study.width)?;
                // same initialization across grid sizes for a given (seed, arch)
                let init = init_student(dims, arch, study.init_scale, &mut rng_for(seed, &[0x1417, ai as u64]))?;
                let mut cfg = study.train.clone();
                cfg.seed = derive_seed(seed, &[ai as u64, s as u64]);
                match sgd_train(&init, &act, &study.loss, &ds.train[..s], Some(&ds.test), &cfg) {
                    Ok(out) => {
                        let tr: Vec<f64> = out.log.iter().map(|e| e.train_loss).collect();
                        let te: Vec<f64> = out.log.iter().map(|e| e.test_loss).collect();
                        let train_loss = tail_mean(&tr, study.window);
                        let test_loss = tail_mean(&te, study.window);
                        Ok(JobOutcome::Done(GapRecord {
                            s,
                            gap: test_loss - train_loss,
                            train_loss,
                            test_loss,
                            seed,
                            arch,
                        }))
                    }
                    Err(e) if is_divergence(&e) => {
                        Ok(JobOutcome::Excluded(Exclusion { s, seed, arch, reason: e.to_string() }))
                    }
                    Err(e) => Err(e.into()),
                }
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;
    let mut records = Vec::new();
    let mut exclusions = Vec::new();
    for o in outcomes {
        match o {
            JobOutcome::Done(r) => records.push(r),
            JobOutcome::Excluded(x) => exclusions.push(x),
        }
    }
    let fits = study
        .archs
        .iter()
        .map(|arch| summarize_arch(*arch, &study.s_grid, &records))
        .collect();
    Ok(GapReport { s_grid: study.s_grid.clone(), records, exclusions, fits })
}

/// Seed-averaged gaps, monotonicity counts and the fit for one architecture.
pub fn summarize_arch(arch: Arch, s_grid: &[usize], records: &[GapRecord]) -> ArchFit {
    let mean_gaps: Vec<f64> = s_grid
        .iter()
        .map(|&s| {
            let g: Vec<f64> = records.iter().filter(|r| r.arch == arch && r.s == s).map(|r| r.gap).collect();
            if g.is_empty() {
                f64::NAN
            } else {
                g.iter().sum::<f64>() / g.len() as f64
            }
        })
        .collect();
    let decreasing_pairs = mean_gaps.windows(2).filter(|w| w[1] < w[0]).count();
    let (xs, ys): (Vec<f64>, Vec<f64>) = s_grid
        .iter()
        .zip(&mean_gaps)
        .filter(|(_, g)| g.is_finite())
        .map(|(&s, &g)| (s as f64, g))
        .unzip();
    ArchFit {
        arch,
        decreasing_pairs,
        spearman: if xs.len() >= 2 { spearman(&xs, &ys) } else { f64::NAN },
        loglog_slope: loglog_slope(&xs, &ys),
        fit: fit_inverse_sqrt(&xs, &ys).ok(),
        mean_gaps,
    }
}
