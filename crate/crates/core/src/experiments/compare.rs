//! Matched-seed comparison of a leaky ReLU against the dead-zone activation
//! `psi_{a,b;alpha,beta}` with fixed or learnable offsets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, DatasetSpec};
use super::gap::{is_divergence, seed_dataset, Exclusion, GapRecord};
use super::{init_student, tail_mean, with_pool, Arch, ExperimentError};
use crate::activation::catalog;
use crate::resnet::Dims;
use crate::seed::{derive_seed, rng_for};
use crate::train::{sgd_train, LossSpec, TrainConfig};

pub const BASELINE_ARM: &str = "baseline";
pub const STRUCTURED_ARM: &str = "structured";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffsetMode {
    Fixed { alpha: f64, beta: f64 },
    /// Offsets start at the given values and are trained.
    Learnable { alpha: f64, beta: f64 },
}

fn default_slopes() -> [f64; 2] {
    [1.0, 0.05]
}

fn default_window() -> usize {
    10
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonStudy {
    pub offsets: OffsetMode,
    /// Slopes `(a, b)` of the positive and negative branches.
    #[serde(default = "default_slopes")]
    pub slopes: [f64; 2],
    pub archs: Vec<Arch>,
    pub seeds: Vec<u64>,
    pub data: DatasetSpec,
    pub train: TrainConfig,
    pub width: usize,
    pub loss: LossSpec,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_scale")]
    pub init_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub arm: String,
    pub arch: Arch,
    pub seed: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub gap: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub arch: Arch,
    pub runs: usize,
    pub late_mean_train: f64,
    pub late_mean_test: f64,
    pub late_mean_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub curves: Vec<CurvePoint>,
    /// Late-epoch records per run, tagged with the arm.
    pub records: Vec<(String, GapRecord)>,
    pub summaries: Vec<ArmSummary>,
    pub exclusions: Vec<(String, Exclusion)>,
}

impl ComparisonStudy {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Precondition(m.to_string()));
        if self.archs.is_empty() || self.seeds.is_empty() {
            return bad("archs and seeds must be nonempty");
        }
        if self.width == 0 || self.window == 0 {
            return bad("width and window must be positive");
        }
        let (OffsetMode::Fixed { alpha, beta } | OffsetMode::Learnable { alpha, beta }) = self.offsets;
        if !(alpha >= 0.0 && beta >= 0.0) {
            return bad("offsets alpha, beta must be >= 0");
        }
        catalog("DeadZoneLeaky", &[self.slopes[0], self.slopes[1], alpha, beta])?;
        self.train.validate()?;
        Ok(())
    }
}

pub fn activation_comparison(study: &ComparisonStudy) -> Result<ComparisonReport, ExperimentError> {
    study.validate()?;
    let [a, b] = study.slopes;
    let (alpha, beta, learn) = match study.offsets {
        OffsetMode::Fixed { alpha, beta } => (alpha, beta, false),
        OffsetMode::Learnable { alpha, beta } => (alpha, beta, true),
    };
    let arms = [
        (BASELINE_ARM, catalog("DeadZoneLeaky", &[a, b, 0.0, 0.0])?, false),
        (STRUCTURED_ARM, catalog("DeadZoneLeaky", &[a, b, alpha, beta])?, learn),
    ];
    let jobs: Vec<(usize, usize, usize)> = (0..study.archs.len())
        .flat_map(|ai| (0..study.seeds.len()).flat_map(move |k| (0..2).map(move |arm| (ai, k, arm))))
        .collect();
    let outcomes = with_pool(|| -> Result<Vec<_>, ExperimentError> {
        let data: Vec<Dataset> = study
            .seeds
            .par_iter()
            .map(|&seed| seed_dataset(&study.data, seed, study.data.s_train))
            .collect::<Result<_, _>>()?;
        jobs.par_iter()
            .map(|&(ai, ki, arm)| {
                let arch = study.archs[ai];
                let seed = study.seeds[ki];
                let ds = &data[ki];
                let (name, act, learn) = &arms[arm];
                let dims = Dims::new(ds.input_dim(), ds.output_dim(), study.width)?;
                // both arms share init and batch order
                let init = init_student(dims, arch, study.init_scale, &mut rng_for(seed, &[0xC0, ai as u64]))?;
                let mut cfg = study.train.clone();
                cfg.seed = derive_seed(seed, &[ai as u64]);
                cfg.learn_offsets = *learn;
                let s = ds.train.len();
                match sgd_train(&init, act, &study.loss, &ds.train, Some(&ds.test), &cfg) {
                    Ok(out) => {
                        let curve: Vec<CurvePoint> = out
                            .log
                            .iter()
                            .map(|e| CurvePoint {
                                arm: name.to_string(),
                                arch,
                                seed,
                                epoch: e.epoch,
                                train_loss: e.train_loss,
                                test_loss: e.test_loss,
                                gap: e.test_loss - e.train_loss,
                                alpha: e.alpha,
                                beta: e.beta,
                            })
                            .collect();
                        let tr: Vec<f64> = out.log.iter().map(|e| e.train_loss).collect();
                        let te: Vec<f64> = out.log.iter().map(|e| e.test_loss).collect();
                        let (train_loss, test_loss) = (tail_mean(&tr, study.window), tail_mean(&te, study.window));
                        let rec = GapRecord { s, gap: test_loss - train_loss, train_loss, test_loss, seed, arch };
                        Ok(Ok((name.to_string(), curve, rec)))
                    }
                    Err(e) if is_divergence(&e) => {
                        Ok(Err((name.to_string(), Exclusion { s, seed, arch, reason: e.to_string() })))
                    }
                    Err(e) => Err(e.into()),
                }
            })
            .collect()
    })?;
    let mut curves = Vec::new();
    let mut records = Vec::new();
    let mut exclusions = Vec::new();
    for o in outcomes {
        match o {
            Ok((arm, c, r)) => {
                curves.extend(c);
                records.push((arm, r));
            }
            Err(x) => exclusions.push(x),
        }
    }
    let mut summaries = Vec::new();
    for arch in &study.archs {
        for (name, _, _) in &arms {
            let rs: Vec<&GapRecord> =
                records.iter().filter(|(a, r)| a == name && r.arch == *arch).map(|(_, r)| r).collect();
            let avg = |f: fn(&GapRecord) -> f64| {
                if rs.is_empty() {
                    f64::NAN
                } else {
                    rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64
                }
            };
            summaries.push(ArmSummary {
                arm: name.to_string(),
                arch: *arch,
                runs: rs.len(),
                late_mean_train: avg(|r| r.train_loss),
                late_mean_test: avg(|r| r.test_loss),
                late_mean_gap: avg(|r| r.gap),
            });
        }
    }
    Ok(ComparisonReport { curves, records, summaries, exclusions })
}
