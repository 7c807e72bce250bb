//! Synthetic and file-backed datasets with `||d||_2 + ||g||_2 <= 2`.

use std::path::PathBuf;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::activation::{ActivationConfig, ActivationSpec};
use crate::io::idx::load_idx;
use crate::resnet::{DiscreteParams, Dims};
use crate::seed::rng_for;
use crate::train::{predict, Sample};

/// Bound on `||d||_2 + ||g||_2` for every generated sample.
pub const DATA_BOUND: f64 = 2.0;

const STREAM_TEACHER: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_PILOT: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub s_train: usize,
    pub s_test: usize,
    pub seed: u64,
    pub source: DataSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Labels from a fixed random network, output-rescaled into the unit ball.
    TeacherNet {
        n_d: usize,
        n: usize,
        m: usize,
        layers: usize,
        horizon: f64,
        activation: ActivationConfig,
        b_theta: f64,
        /// Standard deviation of additive Gaussian label noise.
        noise: f64,
    },
    /// `classes` isotropic Gaussians with means on a circle in the first two coordinates.
    GaussianMixture {
        n_d: usize,
        classes: usize,
        radius: f64,
        sigma: f64,
        /// Probability that a label is replaced by a uniformly random class.
        label_noise: f64,
    },
    TwoMoons {
        noise: f64,
    },
    MnistSubset {
        images: PathBuf,
        labels: PathBuf,
        classes: Vec<u8>,
    },
}

/// Teacher network with the fixed affine map `g = scale (x^L - center)` applied to its outputs.
#[derive(Debug, Clone)]
pub struct Teacher {
    pub params: DiscreteParams,
    pub activation: ActivationSpec,
    pub center: DVector<f64>,
    pub scale: f64,
}

impl Teacher {
    /// Noise-free label, clamped into the unit ball.
    pub fn label(&self, d: &DVector<f64>) -> DVector<f64> {
        clamp_ball((predict(&self.params, &self.activation, d) - &self.center) * self.scale)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub teacher: Option<Teacher>,
}

impl Dataset {
    pub fn input_dim(&self) -> usize {
        self.train[0].d.len()
    }

    pub fn output_dim(&self) -> usize {
        self.train[0].g.len()
    }
}

fn clamp_ball(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 1.0 {
        v /= n;
    }
    v
}

fn unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = dir.norm();
        if n > 1e-12 {
            let r: f64 = rng.random::<f64>().powf(1.0 / dim as f64);
            return dir * (r / n);
        }
    }
}

fn one_hot(k: usize, classes: usize) -> DVector<f64> {
    let mut g = DVector::zeros(classes);
    g[k] = 1.0;
    g
}

fn validate(spec: &DatasetSpec) -> Result<(), ExperimentError> {
    let bad = |m: String| Err(ExperimentError::Precondition(m));
    if spec.s_train == 0 || spec.s_test == 0 {
        return bad("s_train and s_test must be positive".into());
    }
    match &spec.source {
        DataSource::TeacherNet { noise, b_theta, .. } => {
            if !(*noise >= 0.0 && noise.is_finite()) {
                return bad(format!("noise = {noise} must be >= 0"));
            }
            if !(*b_theta > 0.0 && b_theta.is_finite()) {
                return bad(format!("b_theta = {b_theta} must be positive"));
            }
        }
        DataSource::GaussianMixture { n_d, classes, sigma, label_noise, .. } => {
            if *n_d < 2 || *classes < 2 {
                return bad("gaussian_mixture needs n_d >= 2 and classes >= 2".into());
            }
            if !(*sigma >= 0.0) || !(0.0..=1.0).contains(label_noise) {
                return bad("sigma must be >= 0 and label_noise in [0, 1]".into());
            }
        }
        DataSource::TwoMoons { noise } => {
            if !(*noise >= 0.0) {
                return bad(format!("noise = {noise} must be >= 0"));
            }
        }
        DataSource::MnistSubset { classes, .. } => {
            if classes.is_empty() {
                return bad("mnist_subset needs at least one class".into());
            }
        }
    }
    Ok(())
}

/// Draws train and test sets from independent streams keyed by `spec.seed`.
///
/// Samples are generated sequentially, so a smaller `s_train` yields a prefix
/// of a larger one and the test set does not depend on `s_train`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset, ExperimentError> {
    validate(spec)?;
    match &spec.source {
        DataSource::TeacherNet { n_d, n, m, layers, horizon, activation, b_theta, noise } => {
            let act = activation.build()?;
            let dims = Dims::new(*n_d, *n, *m)?;
            let mut rng = rng_for(spec.seed, &[STREAM_TEACHER]);
            let params = DiscreteParams::random(dims, *layers, *horizon, *b_theta, &mut rng)?;
            let mut pilot = rng_for(spec.seed, &[STREAM_PILOT]);
            let outs: Vec<DVector<f64>> =
                (0..512).map(|_| predict(&params, &act, &unit_ball(*n_d, &mut pilot))).collect();
            let center = outs.iter().fold(DVector::zeros(*n), |acc, x| acc + x) / outs.len() as f64;
            let peak = outs.iter().map(|x| (x - &center).norm()).fold(0.0, f64::max);
            // leave headroom for noise before the ball clamp bites
            let scale = if peak > 0.0 { 0.8 / peak } else { 1.0 };
            let teacher = Teacher { params, activation: act, center, scale };
            let draw = |count: usize, stream: u64| {
                let mut rng = rng_for(spec.seed, &[stream]);
                (0..count)
                    .map(|_| {
                        let d = unit_ball(*n_d, &mut rng);
                        let mut g = teacher.label(&d);
                        if *noise > 0.0 {
                            g += DVector::from_fn(*n, |_, _| noise * rng.sample::<f64, _>(StandardNormal));
                        }
                        Sample { d, g: clamp_ball(g) }
                    })
                    .collect::<Vec<_>>()
            };
            let train = draw(spec.s_train, STREAM_TRAIN);
            let test = draw(spec.s_test, STREAM_TEST);
            Ok(Dataset { train, test, teacher: Some(teacher) })
        }
        DataSource::GaussianMixture { n_d, classes, radius, sigma, label_noise } => {
            let draw = |count: usize, stream: u64| {
                let mut rng = rng_for(spec.seed, &[stream]);
                (0..count)
                    .map(|_| {
                        let k = rng.random_range(0..*classes);
                        let theta = std::f64::consts::TAU * k as f64 / *classes as f64;
                        let mut d = DVector::from_fn(*n_d, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
                        d[0] += radius * theta.cos();
                        d[1] += radius * theta.sin();
                        let label = if rng.random::<f64>() < *label_noise { rng.random_range(0..*classes) } else { k };
                        Sample { d: clamp_ball(d), g: one_hot(label, *classes) }
                    })
                    .collect::<Vec<_>>()
            };
            Ok(Dataset { train: draw(spec.s_train, STREAM_TRAIN), test: draw(spec.s_test, STREAM_TEST), teacher: None })
        }
        DataSource::TwoMoons { noise } => {
            let draw = |count: usize, stream: u64| {
                let mut rng = rng_for(spec.seed, &[stream]);
                (0..count)
                    .map(|_| {
                        let k = rng.random_range(0..2usize);
                        let t = std::f64::consts::PI * rng.random::<f64>();
                        let (mut x, mut y) = if k == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
                        x += noise * rng.sample::<f64, _>(StandardNormal);
                        y += noise * rng.sample::<f64, _>(StandardNormal);
                        // centre the two arcs on the origin and shrink into the unit ball
                        let d = DVector::from_vec(vec![(x - 0.5) / 1.6, (y - 0.25) / 1.6]);
                        Sample { d: clamp_ball(d), g: one_hot(k, 2) }
                    })
                    .collect::<Vec<_>>()
            };
            Ok(Dataset { train: draw(spec.s_train, STREAM_TRAIN), test: draw(spec.s_test, STREAM_TEST), teacher: None })
        }
        DataSource::MnistSubset { images, labels, classes } => {
            if !images.exists() || !labels.exists() {
                return Err(ExperimentError::Precondition(format!(
                    "mnist_subset needs IDX files, missing {} or {}",
                    images.display(),
                    labels.display()
                )));
            }
            let mut all = load_idx(images, labels, classes, usize::MAX)?;
            let need = spec.s_train + spec.s_test;
            if all.len() < need {
                return Err(ExperimentError::Precondition(format!(
                    "mnist_subset has {} samples, {need} requested",
                    all.len()
                )));
            }
            all.shuffle(&mut rng_for(spec.seed, &[STREAM_TRAIN]));
            let test = all.split_off(spec.s_train);
            Ok(Dataset { train: all, test: test.into_iter().take(spec.s_test).collect(), teacher: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn teacher_spec(noise: f64) -> DatasetSpec {
        DatasetSpec {
            s_train: 64,
            s_test: 32,
            seed: 5,
            source: DataSource::TeacherNet {
                n_d: 3,
                n: 2,
                m: 4,
                layers: 3,
                horizon: 1.0,
                activation: ActivationConfig { name: "ReLU".into(), params: vec![] },
                b_theta: 1.0,
                noise,
            },
        }
    }

    fn bound_ok(s: &[Sample]) -> bool {
        s.iter().all(|x| x.d.norm() + x.g.norm() <= DATA_BOUND + 1e-12)
    }

    #[test]
    fn teacher_is_deterministic_and_labels_reproduce() {
        let a = generate_dataset(&teacher_spec(0.0)).unwrap();
        let b = generate_dataset(&teacher_spec(0.0)).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        let t = a.teacher.as_ref().unwrap();
        for s in &a.train {
            assert_eq!(t.label(&s.d), s.g);
        }
        assert!(bound_ok(&a.train) && bound_ok(&a.test));
        assert_ne!(a.train[0].d, a.test[0].d);
    }

    #[test]
    fn train_sets_are_nested() {
        let big = generate_dataset(&teacher_spec(0.1)).unwrap();
        let mut spec = teacher_spec(0.1);
        spec.s_train = 10;
        let small = generate_dataset(&spec).unwrap();
        assert_eq!(&big.train[..10], &small.train[..]);
        assert_eq!(big.test, small.test);
    }

    #[test]
    fn mixture_respects_data_bound() {
        let spec = DatasetSpec {
            s_train: 10_000,
            s_test: 10,
            seed: 1,
            source: DataSource::GaussianMixture { n_d: 2, classes: 3, radius: 0.8, sigma: 0.5, label_noise: 0.1 },
        };
        let ds = generate_dataset(&spec).unwrap();
        let worst = ds.train.iter().map(|x| x.d.norm() + x.g.norm()).fold(0.0, f64::max);
        assert!(worst <= DATA_BOUND, "{worst}");
    }

    #[test]
    fn two_moons_bound_and_missing_mnist() {
        let spec = DatasetSpec { s_train: 500, s_test: 5, seed: 2, source: DataSource::TwoMoons { noise: 0.1 } };
        assert!(bound_ok(&generate_dataset(&spec).unwrap().train));
        let spec = DatasetSpec {
            s_train: 5,
            s_test: 5,
            seed: 2,
            source: DataSource::MnistSubset {
                images: "/nonexistent/images".into(),
                labels: "/nonexistent/labels".into(),
                classes: vec![0, 1],
            },
        };
        let err = generate_dataset(&spec).unwrap_err().to_string();
        assert!(err.contains("IDX"), "{err}");
    }
}
