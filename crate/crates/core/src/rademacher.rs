//! Empirical Rademacher complexity of finite function classes
//!
//! `R_Z(G) = (1/S) E_eps sup_g sum_s eps_s g(z_s)`
//!
//! by exact enumeration or Monte Carlo, a contraction checker for structured
//! activations, and the closed-form soft-threshold class with a brute-force oracle.

use nalgebra::DVector;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{catalog, ActivationSpec};
use crate::resnet::{discrete_forward, DiscreteParams, ResnetError};

/// Largest sample count accepted by exact enumeration (2^24 sign vectors).
pub const EXACT_MAX_S: usize = 24;
/// Largest sample count accepted by the soft-threshold brute force.
pub const BRUTEFORCE_MAX_S: usize = 20;

#[derive(Debug, Error)]
pub enum RademacherError {
    #[error("class needs at least one function and one sample")]
    Empty,
    #[error("function {0} has a different number of samples")]
    Ragged(usize),
    #[error("non-finite value for function {0}")]
    NonFinite(usize),
    #[error("S = {s} exceeds the enumeration budget {max}")]
    Budget { s: usize, max: usize },
    #[error("Monte Carlo needs at least 100 draws, got {0}")]
    Draws(usize),
    #[error("soft-threshold class needs positive eta, gamma, alpha, beta with max(alpha, beta) < gamma and S >= 1")]
    Precondition,
    #[error("all networks in a grid must share one architecture")]
    Architecture,
    #[error(transparent)]
    Resnet(#[from] ResnetError),
}

/// Finite class evaluated on a sample: `values[j][s] = g_j(z_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedClass {
    values: Vec<Vec<f64>>,
    labels: Option<Vec<String>>,
}

impl EvaluatedClass {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, RademacherError> {
        let s = values.first().map_or(0, Vec::len);
        if s == 0 {
            return Err(RademacherError::Empty);
        }
        for (j, row) in values.iter().enumerate() {
            if row.len() != s {
                return Err(RademacherError::Ragged(j));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(RademacherError::NonFinite(j));
            }
        }
        Ok(Self { values, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn num_functions(&self) -> usize {
        self.values.len()
    }

    pub fn num_samples(&self) -> usize {
        self.values[0].len()
    }

    /// `psi` applied to every entry.
    pub fn map_activation(&self, act: &ActivationSpec) -> Self {
        Self {
            values: self.values.iter().map(|r| act.apply_elementwise(r)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Class containing the functions of both arguments.
    pub fn union(&self, other: &Self) -> Result<Self, RademacherError> {
        let mut v = self.values.clone();
        v.extend(other.values.iter().cloned());
        Self::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub value: f64,
    pub kind: EstimatorKind,
    /// Number of sign vectors drawn; 0 for exact enumeration.
    pub draws: usize,
    /// 95% normal-approximation half-width; 0 for exact enumeration.
    pub half_width: f64,
}

/// Partial sums `sum_{s in bits} eps_s v_s` over all sign patterns of a bit block,
/// laid out `[pattern * functions + j]`. Bit set means `eps = +1`.
fn partial_sums(values: &[Vec<f64>], offset: usize, bits: usize) -> Vec<f64> {
    let k = values.len();
    let mut out = vec![0.0; k << bits];
    for pattern in 0..(1usize << bits) {
        for (j, row) in values.iter().enumerate() {
            let mut acc = 0.0;
            for b in 0..bits {
                let v = row[offset + b];
                if pattern >> b & 1 == 1 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            out[pattern * k + j] = acc;
        }
    }
    out
}

/// Exact expectation over all `2^S` sign vectors.
///
/// Sign vectors are split into a low and a high bit block; every sum is
/// formed in a fixed order and the reduction over high blocks is ordered, so
/// the result does not depend on the thread count.
pub fn rademacher_exact(cls: &EvaluatedClass) -> Result<RademacherEstimate, RademacherError> {
    let s = cls.num_samples();
    if s > EXACT_MAX_S {
        return Err(RademacherError::Budget { s, max: EXACT_MAX_S });
    }
    let k = cls.num_functions();
    let lo_bits = s / 2;
    let hi_bits = s - lo_bits;
    let lo = partial_sums(&cls.values, 0, lo_bits);
    let hi = partial_sums(&cls.values, lo_bits, hi_bits);
    let per_hi: Vec<f64> = (0..(1usize << hi_bits))
        .into_par_iter()
        .map(|h| {
            let hrow = &hi[h * k..(h + 1) * k];
            let mut sum = 0.0;
            for l in 0..(1usize << lo_bits) {
                let lrow = &lo[l * k..(l + 1) * k];
                let mut best = f64::NEG_INFINITY;
                for j in 0..k {
                    let v = lrow[j] + hrow[j];
                    if v > best {
                        best = v;
                    }
                }
                sum += best;
            }
            sum
        })
        .collect();
    let total: f64 = per_hi.iter().sum();
    let value = total / (1u64 << s) as f64 / s as f64;
    Ok(RademacherEstimate {
        value,
        kind: EstimatorKind::Exact,
        draws: 0,
        half_width: 0.0,
    })
}

const MC_CHUNK: usize = 4096;

/// Monte-Carlo estimate from `draws` uniform sign vectors.
pub fn rademacher_mc(cls: &EvaluatedClass, draws: usize, seed: u64) -> Result<RademacherEstimate, RademacherError> {
    if draws < 100 {
        return Err(RademacherError::Draws(draws));
    }
    let s = cls.num_samples();
    let chunks = draws.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(draws - c * MC_CHUNK);
            let mut eps = vec![0.0; s];
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..n {
                for e in eps.iter_mut() {
                    *e = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                let best = cls
                    .values
                    .iter()
                    .map(|row| row.iter().zip(&eps).map(|(v, e)| v * e).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
                    / s as f64;
                sum += best;
                sum2 += best * best;
            }
            (sum, sum2)
        })
        .collect();
    let (sum, sum2) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(RademacherEstimate {
        value: mean,
        kind: EstimatorKind::MonteCarlo,
        draws,
        half_width: 1.96 * var.sqrt() / n.sqrt(),
    })
}

/// Outcome of comparing `R(psi o G)` with `Lip * R(G)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    #[serde(rename = "S")]
    pub s: usize,
    pub activation: String,
    pub r_g: f64,
    /// `R(psi o G)`, the left-hand side.
    pub r_psi_g: f64,
    /// `Lip * R(G)`.
    pub rhs_classic: f64,
    pub slack: f64,
    /// `slack * S / (Lip1 alpha + Lip2 beta)`; absent when that coefficient is 0.
    #[serde(rename = "implied_C")]
    pub implied_c: Option<f64>,
    /// `min(S, Lip S R(G) / (Lip1 alpha + Lip2 beta))`.
    #[serde(rename = "bound_on_C")]
    pub bound_on_c: Option<f64>,
}

impl ContractionReport {
    /// Whether `implied_C` lies in `[-tol, bound_on_C + tol]` (vacuously true without a structural term).
    pub fn implied_in_range(&self, tol: f64) -> bool {
        match (self.implied_c, self.bound_on_c) {
            (Some(c), Some(b)) => c >= -tol && c <= b + tol,
            _ => true,
        }
    }

    /// Largest admissible constant satisfying the refined inequality.
    pub fn certified_c(&self) -> Option<f64> {
        match (self.implied_c, self.bound_on_c) {
            (Some(c), Some(b)) => Some(c.clamp(0.0, b)),
            _ => None,
        }
    }
}

pub fn contraction_check(cls: &EvaluatedClass, act: &ActivationSpec) -> Result<ContractionReport, RademacherError> {
    let s = cls.num_samples();
    let r_g = rademacher_exact(cls)?.value;
    let r_psi_g = rademacher_exact(&cls.map_activation(act))?.value;
    let lip = act.lip();
    let rhs_classic = lip * r_g;
    let slack = rhs_classic - r_psi_g;
    let denom = act.structural_coefficient();
    let (implied_c, bound_on_c) = if denom > 0.0 {
        let sf = s as f64;
        (Some(slack * sf / denom), Some(sf.min(lip * sf * r_g / denom)))
    } else {
        (None, None)
    };
    Ok(ContractionReport {
        s,
        activation: act.name().to_string(),
        r_g,
        r_psi_g,
        rhs_classic,
        slack,
        implied_c,
        bound_on_c,
    })
}

/// Soft-threshold class `{c1 ||.||_2 + c2 : (c1, c2) in [0, eta] x [alpha, gamma] or [-eta, 0] x [-gamma, -beta]}`
/// with `psi` the asymmetric soft threshold with offsets `alpha`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftThresholdClassSpec {
    pub eta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "S")]
    pub s: usize,
}

impl SoftThresholdClassSpec {
    pub fn validate(&self) -> Result<(), RademacherError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if pos(self.eta) && pos(self.gamma) && pos(self.alpha) && pos(self.beta) && self.alpha.max(self.beta) < self.gamma && self.s >= 1 {
            Ok(())
        } else {
            Err(RademacherError::Precondition)
        }
    }

    pub fn activation(&self) -> ActivationSpec {
        catalog("SoftThresholdAsym", &[self.alpha, self.beta]).expect("validated offsets")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example33Values {
    pub r_g: f64,
    pub r_psi_g: f64,
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn central_binomial(s: usize) -> BigUint {
    binomial(s as u64 - 1, (s / 2) as u64)
}

/// Closed forms
/// `R(G) = (eta + gamma) C(S-1, floor(S/2)) / 2^(S-1)` and
/// `R(psi o G) = (2 eta + 2 gamma - alpha - beta) C(S-1, floor(S/2)) / 2^S`.
pub fn example33_closed_form(spec: &SoftThresholdClassSpec) -> Result<Example33Values, RademacherError> {
    spec.validate()?;
    let binom = central_binomial(spec.s).to_f64().unwrap();
    let two_s = 2f64.powi(spec.s as i32);
    Ok(Example33Values {
        r_g: (spec.eta + spec.gamma) * binom * 2.0 / two_s,
        r_psi_g: (2.0 * spec.eta + 2.0 * spec.gamma - spec.alpha - spec.beta) * binom / two_s,
    })
}

/// The same closed forms in exact rational arithmetic (inputs converted exactly from `f64`).
pub fn example33_closed_form_exact(spec: &SoftThresholdClassSpec) -> Result<(BigRational, BigRational), RademacherError> {
    spec.validate()?;
    let q = |x: f64| BigRational::from_float(x).expect("finite");
    let binom = BigRational::from_integer(central_binomial(spec.s).into());
    let two_s = BigRational::from_integer(num_bigint::BigInt::one() << spec.s);
    let two = BigRational::from_integer(2.into());
    let r_g = (q(spec.eta) + q(spec.gamma)) * &binom * &two / &two_s;
    let r_psi = (&two * q(spec.eta) + &two * q(spec.gamma) - q(spec.alpha) - q(spec.beta)) * &binom / &two_s;
    Ok((r_g, r_psi))
}

/// Scalars usable by the brute-force oracle.
pub trait OracleScalar:
    Clone + PartialOrd + Signed + FromPrimitive + for<'a> std::ops::AddAssign<&'a Self> + for<'a> std::ops::SubAssign<&'a Self>
{
}
impl<T> OracleScalar for T where
    T: Clone + PartialOrd + Signed + FromPrimitive + for<'a> std::ops::AddAssign<&'a T> + for<'a> std::ops::SubAssign<&'a T>
{
}

fn soft_threshold<T: OracleScalar>(x: &T, alpha: &T, beta: &T) -> T {
    let up = x.clone() - alpha.clone();
    let down = -x.clone() - beta.clone();
    let zero = T::zero();
    let p1 = if up > zero { up } else { zero.clone() };
    let p2 = if down > zero { down } else { zero };
    p1 - p2
}

fn pmax<T: OracleScalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// Brute-force `(R(G), R(psi o G))` for the soft-threshold class, generic in the scalar type.
///
/// Samples are copies of the first basis vector of R^2. For every sign vector
/// the supremum over each parameter rectangle is taken over the rectangle
/// corners and the edge points where `c1 ||z|| + c2` crosses a kink of `psi`;
/// the objective is piecewise linear in `(c1, c2)` between those points.
pub fn example33_bruteforce_generic<T: OracleScalar>(eta: T, gamma: T, alpha: T, beta: T, s: usize) -> Result<(T, T), RademacherError> {
    if s == 0 {
        return Err(RademacherError::Precondition);
    }
    if s > BRUTEFORCE_MAX_S {
        return Err(RademacherError::Budget { s, max: BRUTEFORCE_MAX_S });
    }
    let zero = T::zero();
    let one = T::one();
    let z = [one.clone(), zero.clone()];
    let norm_sq = z.iter().fold(zero.clone(), |acc, v| acc + v.clone() * v.clone());
    assert!(norm_sq == one, "samples must have unit norm");
    let norms = vec![one.clone(); s];

    // rectangles [c1_lo, c1_hi] x [c2_lo, c2_hi]
    let rects = [
        (zero.clone(), eta.clone(), alpha.clone(), gamma.clone()),
        (-eta.clone(), zero.clone(), -gamma.clone(), -beta.clone()),
    ];
    let kinks = [alpha.clone(), -beta.clone()];
    let mut candidates: Vec<(T, T)> = Vec::new();
    for (a_lo, a_hi, b_lo, b_hi) in &rects {
        for c1 in [a_lo, a_hi] {
            for c2 in [b_lo, b_hi] {
                candidates.push((c1.clone(), c2.clone()));
            }
            for k in &kinks {
                // c1 * 1 + c2 = k on the vertical edge at c1
                let c2 = k.clone() - c1.clone();
                if &c2 >= b_lo && &c2 <= b_hi {
                    candidates.push((c1.clone(), c2));
                }
            }
        }
        for c2 in [b_lo, b_hi] {
            for k in &kinks {
                let c1 = k.clone() - c2.clone();
                if &c1 >= a_lo && &c1 <= a_hi {
                    candidates.push((c1, c2.clone()));
                }
            }
        }
    }

    // per-candidate values (g(z_i), psi(g(z_i))) do not depend on the sign pattern
    let evaluated: Vec<Vec<(T, T)>> = candidates
        .iter()
        .map(|(c1, c2)| {
            norms
                .iter()
                .map(|n| {
                    let val = c1.clone() * n.clone() + c2.clone();
                    let pv = soft_threshold(&val, &alpha, &beta);
                    (val, pv)
                })
                .collect()
        })
        .collect();
    let mut sum_g = zero.clone();
    let mut sum_psi = zero.clone();
    for pattern in 0..(1u64 << s) {
        let mut best_g: Option<T> = None;
        let mut best_psi: Option<T> = None;
        for values in &evaluated {
            let mut og = zero.clone();
            let mut op = zero.clone();
            for (i, (val, pv)) in values.iter().enumerate() {
                if pattern >> i & 1 == 1 {
                    og += val;
                    op += pv;
                } else {
                    og -= val;
                    op -= pv;
                }
            }
            best_g = Some(match best_g {
                None => og,
                Some(b) => pmax(b, og),
            });
            best_psi = Some(match best_psi {
                None => op,
                Some(b) => pmax(b, op),
            });
        }
        sum_g = sum_g + best_g.unwrap();
        sum_psi = sum_psi + best_psi.unwrap();
    }
    let denom = T::from_u64(1u64 << s).unwrap() * T::from_usize(s).unwrap();
    Ok((sum_g / denom.clone(), sum_psi / denom))
}

pub fn example33_bruteforce(spec: &SoftThresholdClassSpec) -> Result<Example33Values, RademacherError> {
    spec.validate()?;
    let (r_g, r_psi_g) = example33_bruteforce_generic(spec.eta, spec.gamma, spec.alpha, spec.beta, spec.s)?;
    Ok(Example33Values { r_g, r_psi_g })
}

pub fn example33_bruteforce_exact(spec: &SoftThresholdClassSpec) -> Result<(BigRational, BigRational), RademacherError> {
    spec.validate()?;
    let q = |x: f64| BigRational::from_float(x).expect("finite");
    example33_bruteforce_generic(q(spec.eta), q(spec.gamma), q(spec.alpha), q(spec.beta), spec.s)
}

fn check_grid(grid: &[DiscreteParams]) -> Result<(), RademacherError> {
    let first = grid.first().ok_or(RademacherError::Empty)?;
    let (dims, l) = (first.dims(), first.num_layers());
    if grid.iter().any(|p| p.dims() != dims || p.num_layers() != l) {
        return Err(RademacherError::Architecture);
    }
    Ok(())
}

/// `values[j][s] = x^layer_coord(d_s; Theta_j)` for each layer index in `layers`.
pub fn hypothesis_class_eval_layers(
    grid: &[DiscreteParams],
    act: &ActivationSpec,
    coord: usize,
    data: &[DVector<f64>],
    layers: &[usize],
) -> Result<Vec<EvaluatedClass>, RademacherError> {
    check_grid(grid)?;
    let n = grid[0].dims().n;
    if coord >= n {
        return Err(ResnetError::Index { index: coord, n }.into());
    }
    let l_total = grid[0].num_layers();
    if let Some(&bad) = layers.iter().find(|&&l| l > l_total) {
        return Err(ResnetError::Index { index: bad, n: l_total + 1 }.into());
    }
    let mut out = vec![Vec::with_capacity(grid.len()); layers.len()];
    for p in grid {
        let mut rows = vec![Vec::with_capacity(data.len()); layers.len()];
        for d in data {
            let tr = discrete_forward(p, act, d)?;
            for (r, &l) in rows.iter_mut().zip(layers) {
                r.push(tr.states[l][coord]);
            }
        }
        for (o, r) in out.iter_mut().zip(rows) {
            o.push(r);
        }
    }
    out.into_iter().map(EvaluatedClass::new).collect()
}

/// Finite sub-family of the output-coordinate class: `values[j][s] = x^L_coord(d_s; Theta_j)`.
pub fn hypothesis_class_eval(
    grid: &[DiscreteParams],
    act: &ActivationSpec,
    coord: usize,
    data: &[DVector<f64>],
) -> Result<EvaluatedClass, RademacherError> {
    check_grid(grid)?;
    let l = grid[0].num_layers();
    Ok(hypothesis_class_eval_layers(grid, act, coord, data, &[l])?.remove(0))
}
