//! Losses with local Lipschitz envelopes, reverse-mode gradients through the
//! discrete recursion, and a momentum-SGD training loop.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::ActivationSpec;
use crate::resnet::{preprocess, DiscreteParams, LayerParams, PreprocessParams, ResnetError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss dimensions disagree: x has {x}, g has {g}")]
    Dimension { x: usize, g: usize },
    #[error("cross-entropy targets must be nonnegative")]
    NegativeTarget,
    #[error("non-finite gradient at layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("training diverged at step {step}")]
    Divergence { step: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Resnet(#[from] ResnetError),
}

/// One labelled example `(d, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub d: DVector<f64>,
    pub g: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Ramp,
    CrossEntropy,
}

/// Loss `l(x, g)` on network outputs. `margin` is used by the ramp loss only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
    #[serde(default = "unit_margin")]
    pub margin: f64,
}

fn unit_margin() -> f64 {
    1.0
}

impl LossSpec {
    pub fn squared() -> Self {
        Self {
            kind: LossKind::Squared,
            margin: 1.0,
        }
    }

    pub fn ramp(margin: f64) -> Self {
        Self {
            kind: LossKind::Ramp,
            margin,
        }
    }

    pub fn cross_entropy() -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            margin: 1.0,
        }
    }

    fn check(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<(), TrainError> {
        if x.len() != g.len() {
            return Err(TrainError::Dimension { x: x.len(), g: g.len() });
        }
        if self.kind == LossKind::CrossEntropy && g.iter().any(|&v| v < 0.0) {
            return Err(TrainError::NegativeTarget);
        }
        Ok(())
    }

    /// Margin `u` and the index pair whose difference defines it (`n >= 2`).
    fn ramp_margin(x: &DVector<f64>, g: &DVector<f64>) -> (f64, usize, Option<usize>) {
        if x.len() == 1 {
            let s = if g[0] < 0.0 { -1.0 } else { 1.0 };
            return (s * x[0], 0, None);
        }
        let y = g.argmax().0;
        let mut j = if y == 0 { 1 } else { 0 };
        for k in 0..x.len() {
            if k != y && x[k] > x[j] {
                j = k;
            }
        }
        (x[y] - x[j], y, Some(j))
    }

    pub fn value(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<f64, TrainError> {
        self.check(x, g)?;
        Ok(match self.kind {
            LossKind::Squared => (x - g).norm_squared(),
            LossKind::Ramp => {
                let (u, _, _) = Self::ramp_margin(x, g);
                (1.0 - u / self.margin).clamp(0.0, 1.0)
            }
            LossKind::CrossEntropy => {
                let lse = log_sum_exp(x);
                g.iter().zip(x.iter()).map(|(gi, xi)| gi * (lse - xi)).sum::<f64>().max(0.0)
            }
        })
    }

    /// Gradient in `x`; on the flat pieces of the ramp (and at its corners) it is 0.
    pub fn grad(&self, x: &DVector<f64>, g: &DVector<f64>) -> Result<DVector<f64>, TrainError> {
        self.check(x, g)?;
        Ok(match self.kind {
            LossKind::Squared => (x - g) * 2.0,
            LossKind::Ramp => {
                let (u, y, j) = Self::ramp_margin(x, g);
                let mut out = DVector::zeros(x.len());
                if u > 0.0 && u < self.margin {
                    let s = -1.0 / self.margin;
                    match j {
                        None => out[0] = s * if g[0] < 0.0 { -1.0 } else { 1.0 },
                        Some(j) => {
                            out[y] = s;
                            out[j] = -s;
                        }
                    }
                }
                out
            }
            LossKind::CrossEntropy => {
                let p = softmax(x);
                p * g.sum() - g
            }
        })
    }

    /// Local Lipschitz factor with `|l(x, g) - l(x2, g)| <= kappa * ||x - x2||_2`.
    pub fn kappa(&self, x: &DVector<f64>, x2: &DVector<f64>, g: &DVector<f64>) -> f64 {
        match self.kind {
            LossKind::Squared => (x - g).norm() + (x2 - g).norm(),
            LossKind::Ramp => self.ramp_lip(x.len()),
            LossKind::CrossEntropy => std::f64::consts::SQRT_2 * g.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    fn ramp_lip(&self, n: usize) -> f64 {
        if n == 1 {
            1.0 / self.margin
        } else {
            std::f64::consts::SQRT_2 / self.margin
        }
    }

    /// `(B_l, B_kappa)` over states with `||x||_inf <= b_out` and targets with
    /// `||g||_2 <= b_in`. Cross-entropy assumes probability-vector targets.
    pub fn envelope(&self, n: usize, b_out: f64, b_in: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Squared => {
                let r = (n as f64).sqrt() * b_out + b_in;
                (r * r, 2.0 * r)
            }
            LossKind::Ramp => (1.0, self.ramp_lip(n)),
            LossKind::CrossEntropy => ((n as f64).ln() + 2.0 * b_out, std::f64::consts::SQRT_2),
        }
    }
}

fn log_sum_exp(x: &DVector<f64>) -> f64 {
    let m = x.max();
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(x: &DVector<f64>) -> DVector<f64> {
    let m = x.max();
    let e = x.map(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

pub fn loss_eval(spec: &LossSpec, x: &DVector<f64>, g: &DVector<f64>) -> Result<f64, TrainError> {
    spec.value(x, g)
}

/// Gradients of a scalar loss with respect to every parameter block, plus the
/// shared dead-zone offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub d_pre: PreprocessParams,
    pub d_layers: Vec<LayerParams>,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub loss_value: f64,
}

impl GradientBundle {
    pub fn zeros_like(p: &DiscreteParams) -> Self {
        let d = p.dims();
        Self {
            d_pre: PreprocessParams::zeros(d.n_d, d.n),
            d_layers: vec![LayerParams::zeros(d.n, d.m); p.num_layers()],
            d_alpha: 0.0,
            d_beta: 0.0,
            loss_value: 0.0,
        }
    }

    pub fn add_assign(&mut self, o: &GradientBundle) {
        self.d_pre.u += &o.d_pre.u;
        self.d_pre.a += &o.d_pre.a;
        for (a, b) in self.d_layers.iter_mut().zip(&o.d_layers) {
            a.v += &b.v;
            a.w += &b.w;
            a.b += &b.b;
            a.c += &b.c;
        }
        self.d_alpha += o.d_alpha;
        self.d_beta += o.d_beta;
        self.loss_value += o.loss_value;
    }

    pub fn scale(&mut self, s: f64) {
        self.d_pre.u *= s;
        self.d_pre.a *= s;
        for l in &mut self.d_layers {
            l.v *= s;
            l.w *= s;
            l.b *= s;
            l.c *= s;
        }
        self.d_alpha *= s;
        self.d_beta *= s;
        self.loss_value *= s;
    }
}

/// Reverse accumulation of `d l(x^L(d), g) / d Theta`.
pub fn backprop(
    params: &DiscreteParams,
    act: &ActivationSpec,
    spec: &LossSpec,
    d: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<GradientBundle, TrainError> {
    let dims = params.dims();
    if d.len() != dims.n_d {
        return Err(ResnetError::Dimension {
            expected: dims.n_d,
            got: d.len(),
        }
        .into());
    }
    let tau = params.tau();
    let pre = params.pre();
    let z0 = &pre.u * d + &pre.a;
    let mut xs = Vec::with_capacity(params.num_layers() + 1);
    let mut zs = Vec::with_capacity(params.num_layers());
    xs.push(z0.map(|z| act.eval(z)));
    for layer in params.layers() {
        let x = xs.last().unwrap();
        let z = &layer.v * x + &layer.b;
        let h = z.map(|v| act.eval(v));
        let next = x + (&layer.w * h + &layer.c) * tau;
        zs.push(z);
        xs.push(next);
    }
    let x_out = xs.last().unwrap();
    let loss_value = spec.value(x_out, g)?;
    let mut gx = spec.grad(x_out, g)?;

    let mut out = GradientBundle::zeros_like(params);
    out.loss_value = loss_value;
    for l in (0..params.num_layers()).rev() {
        let layer = &params.layers()[l];
        let z = &zs[l];
        let h = z.map(|v| act.eval(v));
        let dl = &mut out.d_layers[l];
        dl.c = &gx * tau;
        dl.w = &dl.c * h.transpose();
        let gh = layer.w.transpose() * &gx * tau;
        let gz = gh.component_mul(&z.map(|v| act.deriv(v)));
        dl.v = &gz * xs[l].transpose();
        dl.b = gz.clone();
        out.d_alpha += gh.dot(&z.map(|v| act.d_alpha(v)));
        out.d_beta += gh.dot(&z.map(|v| act.d_beta(v)));
        gx += layer.v.transpose() * &gz;
        if !dl.w.iter().chain(dl.v.iter()).chain(gx.iter()).all(|x| x.is_finite()) {
            return Err(TrainError::NonFiniteGradient { layer: l });
        }
    }
    let gz0 = gx.component_mul(&z0.map(|v| act.deriv(v)));
    out.d_pre.u = &gz0 * d.transpose();
    out.d_pre.a = gz0;
    out.d_alpha += gx.dot(&z0.map(|v| act.d_alpha(v)));
    out.d_beta += gx.dot(&z0.map(|v| act.d_beta(v)));
    Ok(out)
}

/// Forward output `x^L(d)` only.
pub fn predict(params: &DiscreteParams, act: &ActivationSpec, d: &DVector<f64>) -> DVector<f64> {
    let tau = params.tau();
    let mut x = preprocess(params.pre(), act, d);
    for layer in params.layers() {
        let h = (&layer.v * &x + &layer.b).map(|v| act.eval(v));
        x = &x + (&layer.w * h + &layer.c) * tau;
    }
    x
}

/// Mean loss over a dataset.
pub fn mean_loss(
    params: &DiscreteParams,
    act: &ActivationSpec,
    spec: &LossSpec,
    data: &[Sample],
) -> Result<f64, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut s = 0.0;
    for smp in data {
        s += spec.value(&predict(params, act, &smp.d), &smp.g)?;
    }
    Ok(s / data.len() as f64)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Clip to this `B_Theta` after every step.
    #[serde(default)]
    pub projection: Option<f64>,
    /// Train the shared dead-zone offsets `alpha`, `beta` (projected to `>= 0`).
    #[serde(default)]
    pub learn_offsets: bool,
    /// Divide residual-layer gradients by `tau`, so the step acts on the
    /// parameter path rather than on individual layers.
    #[serde(default)]
    pub depth_scaled_lr: bool,
    /// Evaluate the test loss each epoch when a test set is given.
    #[serde(default = "default_true")]
    pub eval_test: bool,
    /// Record wall-clock milliseconds in the log (breaks byte determinism).
    #[serde(default)]
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            momentum: 0.9,
            epochs: 30,
            batch_size: 32,
            seed: 0,
            projection: None,
            learn_offsets: false,
            depth_scaled_lr: false,
            eval_test: true,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::Config(format!("lr = {} must be >= 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::Config(format!("momentum = {} must be in [0, 1)", self.momentum)));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be positive".into()));
        }
        if let Some(b) = self.projection {
            if !(b > 0.0 && b.is_finite()) {
                return Err(TrainError::Config(format!("projection = {b} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when no test set was supplied.
    pub test_loss: f64,
    pub param_inf_norm: f64,
    pub wall_ms: u64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: DiscreteParams,
    pub activation: ActivationSpec,
    pub log: Vec<EpochLog>,
}

/// RNG driving the batch order of one epoch: stream `epoch` of the seed.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

struct Velocity {
    pre: PreprocessParams,
    layers: Vec<LayerParams>,
    alpha: f64,
    beta: f64,
}

#[inline]
fn momentum_update_mat(p: &mut DMatrix<f64>, v: &mut DMatrix<f64>, g: &DMatrix<f64>, mu: f64, lr: f64) {
    v.zip_apply(g, |vi, gi| *vi = mu * *vi + gi);
    p.zip_apply(v, |pi, vi| *pi -= lr * vi);
}

#[inline]
fn momentum_update_vec(p: &mut DVector<f64>, v: &mut DVector<f64>, g: &DVector<f64>, mu: f64, lr: f64) {
    v.zip_apply(g, |vi, gi| *vi = mu * *vi + gi);
    p.zip_apply(v, |pi, vi| *pi -= lr * vi);
}

/// Momentum SGD (`v <- mu v + grad`, `p <- p - lr v`) on the mean batch loss.
pub fn sgd_train(
    params: &DiscreteParams,
    act: &ActivationSpec,
    spec: &LossSpec,
    train: &[Sample],
    test: Option<&[Sample]>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let start = Instant::now();
    let mut p = params.clone();
    let mut act = act.clone();
    let learn_offsets = cfg.learn_offsets && act.has_offsets();
    let dims = p.dims();
    let mut vel = Velocity {
        pre: PreprocessParams::zeros(dims.n_d, dims.n),
        layers: vec![LayerParams::zeros(dims.n, dims.m); p.num_layers()],
        alpha: 0.0,
        beta: 0.0,
    };
    let layer_lr = if cfg.depth_scaled_lr { cfg.lr / p.tau() } else { cfg.lr };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut epoch_rng(cfg.seed, epoch));
        for batch in order.chunks(cfg.batch_size) {
            let mut acc = GradientBundle::zeros_like(&p);
            for &i in batch {
                let s = &train[i];
                acc.add_assign(&backprop(&p, &act, spec, &s.d, &s.g)?);
            }
            acc.scale(1.0 / batch.len() as f64);
            if !acc.loss_value.is_finite() {
                return Err(TrainError::Divergence { step });
            }
            let mu = cfg.momentum;
            let pre = p.pre_mut();
            momentum_update_mat(&mut pre.u, &mut vel.pre.u, &acc.d_pre.u, mu, cfg.lr);
            momentum_update_vec(&mut pre.a, &mut vel.pre.a, &acc.d_pre.a, mu, cfg.lr);
            for ((layer, v), g) in p.layers_mut().iter_mut().zip(&mut vel.layers).zip(&acc.d_layers) {
                momentum_update_mat(&mut layer.v, &mut v.v, &g.v, mu, layer_lr);
                momentum_update_mat(&mut layer.w, &mut v.w, &g.w, mu, layer_lr);
                momentum_update_vec(&mut layer.b, &mut v.b, &g.b, mu, layer_lr);
                momentum_update_vec(&mut layer.c, &mut v.c, &g.c, mu, layer_lr);
            }
            if learn_offsets {
                vel.alpha = mu * vel.alpha + acc.d_alpha;
                vel.beta = mu * vel.beta + acc.d_beta;
                act = act.with_offsets(act.alpha - cfg.lr * vel.alpha, act.beta - cfg.lr * vel.beta);
            }
            if let Some(b) = cfg.projection {
                p.project(b);
            }
            if !p.is_finite() {
                return Err(TrainError::Divergence { step });
            }
            step += 1;
        }
        let train_loss = mean_loss(&p, &act, spec, train)?;
        let test_loss = match test {
            Some(t) if cfg.eval_test && !t.is_empty() => mean_loss(&p, &act, spec, t)?,
            _ => f64::NAN,
        };
        if !train_loss.is_finite() {
            return Err(TrainError::Divergence { step });
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            test_loss,
            param_inf_norm: p.inf_norm(),
            wall_ms: if cfg.record_wall_time {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
            alpha: act.alpha,
            beta: act.beta,
        });
    }
    Ok(TrainOutcome {
        params: p,
        activation: act,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::catalog;
    use crate::resnet::Dims;
    use rand::Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn loss_examples() {
        let sq = LossSpec::squared();
        assert_eq!(sq.value(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(sq.value(&v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 1.0);
        assert!(matches!(sq.value(&v(&[1.0]), &v(&[0.0, 0.0])), Err(TrainError::Dimension { .. })));
        let ramp = LossSpec::ramp(1.0);
        assert_eq!(ramp.value(&v(&[2.0]), &v(&[1.0])).unwrap(), 0.0);
        assert_eq!(ramp.value(&v(&[-2.0]), &v(&[1.0])).unwrap(), 1.0);
        assert_eq!(ramp.value(&v(&[0.5, 0.0]), &v(&[1.0, 0.0])).unwrap(), 0.5);
        let ce = LossSpec::cross_entropy();
        let val = ce.value(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((val - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-6;
        for spec in [LossSpec::squared(), LossSpec::ramp(1.0), LossSpec::cross_entropy()] {
            for _ in 0..200 {
                let x = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
                let mut g = DVector::zeros(3);
                g[rng.random_range(0..3)] = 1.0;
                let grad = spec.grad(&x, &g).unwrap();
                for i in 0..3 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (spec.value(&xp, &g).unwrap() - spec.value(&xm, &g).unwrap()) / (2.0 * h);
                    // skip points at ramp corners or margin ties
                    if spec.kind == LossKind::Ramp && (fd - grad[i]).abs() > 1e-4 {
                        continue;
                    }
                    assert!((fd - grad[i]).abs() < 1e-6, "{:?}", spec.kind);
                }
            }
        }
    }

    #[test]
    fn one_layer_hand_gradient() {
        let (u, a, vv, w, b, c) = (0.8, 0.1, 0.5, 0.7, 0.2, -0.3);
        let pre = PreprocessParams {
            u: DMatrix::from_element(1, 1, u),
            a: DVector::from_element(1, a),
        };
        let layer = LayerParams {
            v: DMatrix::from_element(1, 1, vv),
            w: DMatrix::from_element(1, 1, w),
            b: DVector::from_element(1, b),
            c: DVector::from_element(1, c),
        };
        let t = 0.5;
        let p = DiscreteParams::new(pre, vec![layer], t).unwrap();
        let act = catalog("ReLU", &[]).unwrap();
        let (d, g) = (1.0, 2.0);
        let gb = backprop(&p, &act, &LossSpec::squared(), &v(&[d]), &v(&[g])).unwrap();
        let x0 = u * d + a;
        let z = vv * x0 + b;
        let x1 = x0 + t * (w * z + c);
        let r = 2.0 * (x1 - g);
        assert!((gb.loss_value - (x1 - g).powi(2)).abs() < 1e-15);
        assert!((gb.d_layers[0].c[0] - r * t).abs() < 1e-15);
        assert!((gb.d_layers[0].w[(0, 0)] - r * t * z).abs() < 1e-15);
        assert!((gb.d_layers[0].v[(0, 0)] - r * t * w * x0).abs() < 1e-15);
        assert!((gb.d_layers[0].b[0] - r * t * w).abs() < 1e-15);
        assert!((gb.d_pre.u[(0, 0)] - r * (1.0 + t * w * vv) * d).abs() < 1e-15);
        assert!((gb.d_pre.a[0] - r * (1.0 + t * w * vv)).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_at_target_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = DiscreteParams::random(Dims::new(2, 3, 4).unwrap(), 3, 1.0, 1.0, &mut rng).unwrap();
        for l in p.layers_mut() {
            l.w.fill(0.0);
            l.c.fill(0.0);
        }
        let act = catalog("ReLU", &[]).unwrap();
        let d = v(&[0.3, -0.6]);
        let g = preprocess(p.pre(), &act, &d);
        let gb = backprop(&p, &act, &LossSpec::squared(), &d, &g).unwrap();
        assert_eq!(gb.loss_value, 0.0);
        assert!(gb.d_layers.iter().all(|l| l.w.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn predict_matches_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = DiscreteParams::random(Dims::new(3, 2, 4).unwrap(), 5, 1.0, 1.0, &mut rng).unwrap();
        let act = catalog("ELU", &[]).unwrap();
        let d = v(&[0.1, 0.2, -0.3]);
        let tr = crate::resnet::discrete_forward(&p, &act, &d).unwrap();
        assert_eq!(predict(&p, &act, &d), *tr.last());
    }

    fn tiny_data(rng: &mut ChaCha8Rng, s: usize) -> Vec<Sample> {
        (0..s)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                Sample {
                    d: v(&[x]),
                    g: v(&[0.5 * x]),
                }
            })
            .collect()
    }

    #[test]
    fn zero_lr_leaves_params_unchanged_and_runs_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = DiscreteParams::random(Dims::new(1, 1, 3).unwrap(), 2, 1.0, 0.5, &mut rng).unwrap();
        let data = tiny_data(&mut rng, 40);
        let act = catalog("ReLU", &[]).unwrap();
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = sgd_train(&p, &act, &LossSpec::squared(), &data, None, &cfg).unwrap();
        assert_eq!(out.params, p);
        assert!(out.log.iter().all(|e| e.test_loss.is_nan()));
        let cfg = TrainConfig { lr: 0.05, ..cfg };
        let a = sgd_train(&p, &act, &LossSpec::squared(), &data, Some(&data), &cfg).unwrap();
        let b = sgd_train(&p, &act, &LossSpec::squared(), &data, Some(&data), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(format!("{:?}", a.log), format!("{:?}", b.log));
    }

    #[test]
    fn divergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DiscreteParams::random(Dims::new(1, 1, 3).unwrap(), 2, 1.0, 1.0, &mut rng).unwrap();
        let data = tiny_data(&mut rng, 16);
        let cfg = TrainConfig {
            lr: 1e6,
            momentum: 0.0,
            epochs: 5,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let err = sgd_train(&p, &catalog("ReLU", &[]).unwrap(), &LossSpec::squared(), &data, None, &cfg).unwrap_err();
        assert!(matches!(err, TrainError::Divergence { .. }), "{err}");
    }

    #[test]
    fn learnable_offsets_stay_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = DiscreteParams::random(Dims::new(1, 1, 4).unwrap(), 2, 1.0, 1.0, &mut rng).unwrap();
        let data = tiny_data(&mut rng, 64);
        let act = catalog("DeadZoneLeaky", &[1.0, 0.05, 0.01, 0.01]).unwrap();
        let cfg = TrainConfig {
            lr: 0.2,
            epochs: 10,
            batch_size: 8,
            learn_offsets: true,
            ..TrainConfig::default()
        };
        let out = sgd_train(&p, &act, &LossSpec::squared(), &data, None, &cfg).unwrap();
        assert!(out.log.iter().all(|e| e.alpha >= 0.0 && e.beta >= 0.0));
        assert!(out.activation.alpha >= 0.0 && out.activation.beta >= 0.0);
    }

    #[test]
    fn projection_enforces_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = DiscreteParams::random(Dims::new(1, 1, 4).unwrap(), 2, 1.0, 0.3, &mut rng).unwrap();
        let data = tiny_data(&mut rng, 64);
        let cfg = TrainConfig {
            lr: 0.5,
            epochs: 5,
            batch_size: 8,
            projection: Some(0.3),
            ..TrainConfig::default()
        };
        let out = sgd_train(&p, &catalog("ReLU", &[]).unwrap(), &LossSpec::squared(), &data, None, &cfg).unwrap();
        assert!(out.log.iter().all(|e| e.param_inf_norm <= 0.3 + 1e-12));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { momentum: 1.0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { lr: -1.0, ..TrainConfig::default() }.validate().is_err());
    }
}
