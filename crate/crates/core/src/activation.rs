//! Structured activation functions.
//!
//! Every activation here is written as
//!
//! ```text
//! psi(x) = phi1(x - alpha) - phi2(-x - beta)
//! ```
//!
//! where `phi1`, `phi2` are nondecreasing, Lipschitz, and vanish on `(-inf, 0]`.
//! The offsets `alpha`, `beta >= 0` open a dead zone `[-beta, alpha]` on which
//! `psi` is identically zero. The bound calculators use the structural
//! coefficient `Lip(phi1) * alpha + Lip(phi2) * beta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("unknown activation `{0}`")]
    UnknownName(String),
    #[error("activation `{name}` expects {expected} parameter(s), got {got}")]
    Arity {
        name: String,
        expected: &'static str,
        got: usize,
    },
    #[error("activation `{name}`: parameter `{param}` = {value} is outside {range}")]
    OutOfRange {
        name: String,
        param: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Shape of a monotone piece on `[0, inf)`; every piece is zero on `(-inf, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PieceShape {
    /// `phi = 0`.
    Zero,
    /// `phi(x) = slope * x` for `x >= 0`.
    Linear { slope: f64 },
    /// `phi(x) = scale * (1 - exp(-x))` for `x >= 0`.
    ExpSaturating { scale: f64 },
    /// `phi(x) = tanh(x)` for `x >= 0`.
    Tanh,
}

/// One of the two monotone building blocks of an [`ActivationSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonePiece {
    pub shape: PieceShape,
    pub lip: f64,
}

impl MonotonePiece {
    pub fn zero() -> Self {
        Self {
            shape: PieceShape::Zero,
            lip: 0.0,
        }
    }

    pub fn linear(slope: f64) -> Self {
        Self {
            shape: PieceShape::Linear { slope },
            lip: slope,
        }
    }

    pub fn exp_saturating(scale: f64) -> Self {
        Self {
            shape: PieceShape::ExpSaturating { scale },
            lip: scale,
        }
    }

    pub fn tanh() -> Self {
        Self {
            shape: PieceShape::Tanh,
            lip: 1.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.shape {
            PieceShape::Zero => 0.0,
            PieceShape::Linear { slope } => slope * x,
            PieceShape::ExpSaturating { scale } => -scale * (-x).exp_m1(),
            PieceShape::Tanh => x.tanh(),
        }
    }

    /// Derivative with the convention `phi'(0) = 0` (the flat side of the kink).
    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.shape {
            PieceShape::Zero => 0.0,
            PieceShape::Linear { slope } => slope,
            PieceShape::ExpSaturating { scale } => scale * (-x).exp(),
            PieceShape::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Catalog families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivationKind {
    ReLU,
    PReLU,
    TReLU,
    ELU,
    TEReLU,
    SoftThresholdSym,
    SoftThresholdAsym,
    Tanh,
    DeadZoneLeaky,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 9] = [
        ActivationKind::ReLU,
        ActivationKind::PReLU,
        ActivationKind::TReLU,
        ActivationKind::ELU,
        ActivationKind::TEReLU,
        ActivationKind::SoftThresholdSym,
        ActivationKind::SoftThresholdAsym,
        ActivationKind::Tanh,
        ActivationKind::DeadZoneLeaky,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::ReLU => "ReLU",
            ActivationKind::PReLU => "PReLU",
            ActivationKind::TReLU => "TReLU",
            ActivationKind::ELU => "ELU",
            ActivationKind::TEReLU => "TEReLU",
            ActivationKind::SoftThresholdSym => "SoftThresholdSym",
            ActivationKind::SoftThresholdAsym => "SoftThresholdAsym",
            ActivationKind::Tanh => "Tanh",
            ActivationKind::DeadZoneLeaky => "DeadZoneLeaky",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ActivationError> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| ActivationError::UnknownName(name.to_string()))
    }

    /// Representative parameters used by catalog sweeps and tests.
    pub fn default_params(self) -> Vec<f64> {
        match self {
            ActivationKind::ReLU | ActivationKind::Tanh => vec![],
            ActivationKind::PReLU => vec![0.25],
            ActivationKind::TReLU => vec![0.5],
            ActivationKind::ELU => vec![1.0],
            ActivationKind::TEReLU => vec![0.5, 0.3, 1.0],
            ActivationKind::SoftThresholdSym => vec![1.0],
            ActivationKind::SoftThresholdAsym => vec![0.5, 0.25],
            ActivationKind::DeadZoneLeaky => vec![1.0, 0.05, 0.2, 0.1],
        }
    }
}

/// Serialized form of an activation: `{name, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationConfig {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl ActivationConfig {
    pub fn build(&self) -> Result<ActivationSpec, ActivationError> {
        catalog(&self.name, &self.params)
    }
}

/// An activation `psi = phi1(. - alpha) - phi2(-. - beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub params: Vec<f64>,
    pub phi1: MonotonePiece,
    pub phi2: MonotonePiece,
    pub alpha: f64,
    pub beta: f64,
}

fn check_range(
    name: &str,
    param: &'static str,
    value: f64,
    ok: bool,
    range: &'static str,
) -> Result<(), ActivationError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ActivationError::OutOfRange {
            name: name.to_string(),
            param,
            value,
            range,
        })
    }
}

fn positive(name: &str, param: &'static str, v: f64) -> Result<f64, ActivationError> {
    check_range(name, param, v, v > 0.0, "(0, inf)")?;
    Ok(v)
}

fn nonnegative(name: &str, param: &'static str, v: f64) -> Result<f64, ActivationError> {
    check_range(name, param, v, v >= 0.0, "[0, inf)")?;
    Ok(v)
}

fn arity(name: &str, params: &[f64], lo: usize, hi: usize, expected: &'static str) -> Result<(), ActivationError> {
    if params.len() < lo || params.len() > hi {
        return Err(ActivationError::Arity {
            name: name.to_string(),
            expected,
            got: params.len(),
        });
    }
    Ok(())
}

/// Builds a catalog activation from its name and parameter list.
///
/// | name | params |
/// |------|--------|
/// | `ReLU` | none |
/// | `PReLU` | `a1` in `[0, 1]` |
/// | `TReLU` | `lambda > 0` |
/// | `ELU` | optional `a2 > 0` (default 1) |
/// | `TEReLU` | `lambda1, lambda2 > 0`, optional `a2 > 0` (default 1) |
/// | `SoftThresholdSym` | `lambda > 0` |
/// | `SoftThresholdAsym` | `lambda1, lambda2 > 0` |
/// | `Tanh` | none |
/// | `DeadZoneLeaky` | `a > 0, b >= 0, alpha >= 0, beta >= 0` |
pub fn catalog(name: &str, params: &[f64]) -> Result<ActivationSpec, ActivationError> {
    let kind = ActivationKind::from_name(name)?;
    let (phi1, phi2, alpha, beta) = match kind {
        ActivationKind::ReLU => {
            arity(name, params, 0, 0, "0")?;
            // phi2 = 0, so beta never contributes; it is pinned to 0.
            (MonotonePiece::linear(1.0), MonotonePiece::zero(), 0.0, 0.0)
        }
        ActivationKind::PReLU => {
            arity(name, params, 1, 1, "1")?;
            let a1 = params[0];
            check_range(name, "a1", a1, (0.0..=1.0).contains(&a1), "[0, 1]")?;
            (MonotonePiece::linear(1.0), MonotonePiece::linear(a1), 0.0, 0.0)
        }
        ActivationKind::TReLU => {
            arity(name, params, 1, 1, "1")?;
            let lambda = positive(name, "lambda", params[0])?;
            (MonotonePiece::linear(1.0), MonotonePiece::zero(), lambda, 0.0)
        }
        ActivationKind::ELU => {
            arity(name, params, 0, 1, "0 or 1")?;
            let a2 = positive(name, "a2", params.first().copied().unwrap_or(1.0))?;
            (
                MonotonePiece::linear(1.0),
                MonotonePiece::exp_saturating(a2),
                0.0,
                0.0,
            )
        }
        ActivationKind::TEReLU => {
            arity(name, params, 2, 3, "2 or 3")?;
            let l1 = positive(name, "lambda1", params[0])?;
            let l2 = positive(name, "lambda2", params[1])?;
            let a2 = positive(name, "a2", params.get(2).copied().unwrap_or(1.0))?;
            (
                MonotonePiece::linear(1.0),
                MonotonePiece::exp_saturating(a2),
                l1,
                l2,
            )
        }
        ActivationKind::SoftThresholdSym => {
            arity(name, params, 1, 1, "1")?;
            let lambda = positive(name, "lambda", params[0])?;
            (
                MonotonePiece::linear(1.0),
                MonotonePiece::linear(1.0),
                lambda,
                lambda,
            )
        }
        ActivationKind::SoftThresholdAsym => {
            arity(name, params, 2, 2, "2")?;
            let l1 = positive(name, "lambda1", params[0])?;
            let l2 = positive(name, "lambda2", params[1])?;
            (MonotonePiece::linear(1.0), MonotonePiece::linear(1.0), l1, l2)
        }
        ActivationKind::Tanh => {
            arity(name, params, 0, 0, "0")?;
            (MonotonePiece::tanh(), MonotonePiece::tanh(), 0.0, 0.0)
        }
        ActivationKind::DeadZoneLeaky => {
            arity(name, params, 4, 4, "4")?;
            let a = positive(name, "a", params[0])?;
            let b = nonnegative(name, "b", params[1])?;
            let alpha = nonnegative(name, "alpha", params[2])?;
            let beta = nonnegative(name, "beta", params[3])?;
            (MonotonePiece::linear(a), MonotonePiece::linear(b), alpha, beta)
        }
    };
    Ok(ActivationSpec {
        kind,
        params: params.to_vec(),
        phi1,
        phi2,
        alpha,
        beta,
    })
}

impl ActivationSpec {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn config(&self) -> ActivationConfig {
        ActivationConfig {
            name: self.name().to_string(),
            params: self.params.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.phi1.eval(x - self.alpha) - self.phi2.eval(-x - self.beta)
    }

    /// Almost-everywhere derivative; at kinks the flat-side value is used,
    /// so the derivative is 0 everywhere on the closed dead zone.
    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.phi1.deriv(x - self.alpha) + self.phi2.deriv(-x - self.beta)
    }

    /// `d psi / d alpha` at `x`.
    #[inline]
    pub fn d_alpha(&self, x: f64) -> f64 {
        -self.phi1.deriv(x - self.alpha)
    }

    /// `d psi / d beta` at `x`.
    #[inline]
    pub fn d_beta(&self, x: f64) -> f64 {
        self.phi2.deriv(-x - self.beta)
    }

    pub fn lip(&self) -> f64 {
        self.phi1.lip.max(self.phi2.lip)
    }

    /// `Lip(phi1) * alpha + Lip(phi2) * beta`, the coefficient of the
    /// negative structural term.
    pub fn structural_coefficient(&self) -> f64 {
        self.phi1.lip * self.alpha + self.phi2.lip * self.beta
    }

    /// Whether the dead-zone offsets may be moved by training.
    pub fn has_offsets(&self) -> bool {
        matches!(self.kind, ActivationKind::DeadZoneLeaky)
    }

    /// Returns a copy with new dead-zone offsets, clamped at zero.
    pub fn with_offsets(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.clone();
        out.alpha = alpha.max(0.0);
        out.beta = beta.max(0.0);
        if out.kind == ActivationKind::DeadZoneLeaky && out.params.len() == 4 {
            out.params[2] = out.alpha;
            out.params[3] = out.beta;
        }
        out
    }

    pub fn apply_elementwise(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn apply_deriv(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.deriv(x)).collect()
    }

    /// Points where `psi` is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = Vec::new();
        if !matches!(self.phi1.shape, PieceShape::Zero) {
            k.push(self.alpha);
        }
        if !matches!(self.phi2.shape, PieceShape::Zero) {
            k.push(-self.beta);
        }
        k.dedup();
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Piecewise closed forms straight from the catalog table.
    fn closed_form(spec: &ActivationSpec, x: f64) -> f64 {
        let p = &spec.params;
        match spec.kind {
            ActivationKind::ReLU => {
                if x >= 0.0 {
                    x
                } else {
                    0.0
                }
            }
            ActivationKind::PReLU => {
                if x >= 0.0 {
                    x
                } else {
                    p[0] * x
                }
            }
            ActivationKind::TReLU => {
                if x >= p[0] {
                    x - p[0]
                } else {
                    0.0
                }
            }
            ActivationKind::ELU => {
                let a2 = p.first().copied().unwrap_or(1.0);
                if x >= 0.0 {
                    x
                } else {
                    a2 * (x.exp() - 1.0)
                }
            }
            ActivationKind::TEReLU => {
                let a2 = p.get(2).copied().unwrap_or(1.0);
                if x >= p[0] {
                    x - p[0]
                } else if x > -p[1] {
                    0.0
                } else {
                    a2 * ((x + p[1]).exp() - 1.0)
                }
            }
            ActivationKind::SoftThresholdSym => {
                if x >= p[0] {
                    x - p[0]
                } else if x > -p[0] {
                    0.0
                } else {
                    x + p[0]
                }
            }
            ActivationKind::SoftThresholdAsym => {
                if x >= p[0] {
                    x - p[0]
                } else if x > -p[1] {
                    0.0
                } else {
                    x + p[1]
                }
            }
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::DeadZoneLeaky => {
                let (a, b, al, be) = (p[0], p[1], p[2], p[3]);
                if x >= al {
                    a * (x - al)
                } else if x > -be {
                    0.0
                } else {
                    b * (x + be)
                }
            }
        }
    }

    fn all_catalog() -> Vec<ActivationSpec> {
        ActivationKind::ALL
            .iter()
            .map(|k| catalog(k.name(), &k.default_params()).unwrap())
            .collect()
    }

    #[test]
    fn catalog_examples() {
        let relu = catalog("ReLU", &[]).unwrap();
        assert_eq!(relu.apply_elementwise(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        let st = catalog("SoftThresholdSym", &[1.0]).unwrap();
        assert_eq!(st.apply_elementwise(&[2.0, 0.5, -2.0]), vec![1.0, 0.0, -1.0]);
        let leaky = catalog("DeadZoneLeaky", &[1.0, 0.05, 0.0, 0.0]).unwrap();
        assert!((leaky.eval(-10.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn elementwise_examples() {
        let relu = catalog("ReLU", &[]).unwrap();
        assert_eq!(relu.apply_elementwise(&[-1.0, 3.0]), vec![0.0, 3.0]);
        let s = catalog("SoftThresholdAsym", &[0.5, 0.5]).unwrap();
        assert_eq!(s.apply_elementwise(&[0.2, -0.2]), vec![0.0, 0.0]);
        let t = catalog("Tanh", &[]).unwrap();
        assert_eq!(t.apply_elementwise(&[0.0]), vec![0.0]);
    }

    #[test]
    fn derivative_examples() {
        let relu = catalog("ReLU", &[]).unwrap();
        assert_eq!(relu.apply_deriv(&[-1.0, 2.0]), vec![0.0, 1.0]);
        let leaky = catalog("DeadZoneLeaky", &[1.0, 0.05, 0.0, 0.0]).unwrap();
        assert_eq!(leaky.apply_deriv(&[-3.0]), vec![0.05]);
        let st = catalog("SoftThresholdSym", &[1.0]).unwrap();
        assert_eq!(st.apply_deriv(&[0.0]), vec![0.0]);
        assert_eq!(relu.deriv(0.0), 0.0);
    }

    #[test]
    fn bad_names_and_params() {
        assert_eq!(
            catalog("Swish", &[]).unwrap_err(),
            ActivationError::UnknownName("Swish".into())
        );
        assert!(matches!(
            catalog("PReLU", &[1.5]),
            Err(ActivationError::OutOfRange { param: "a1", .. })
        ));
        assert!(matches!(
            catalog("SoftThresholdSym", &[0.0]),
            Err(ActivationError::OutOfRange { .. })
        ));
        assert!(matches!(catalog("TReLU", &[]), Err(ActivationError::Arity { .. })));
        assert!(matches!(
            catalog("DeadZoneLeaky", &[1.0, 0.05, -0.1, 0.0]),
            Err(ActivationError::OutOfRange { param: "alpha", .. })
        ));
    }

    #[test]
    fn elu_default_scale() {
        let a = catalog("ELU", &[]).unwrap();
        let b = catalog("ELU", &[1.0]).unwrap();
        assert_eq!(a.eval(-2.0), b.eval(-2.0));
        assert_eq!(a.lip(), 1.0);
    }

    #[test]
    fn tanh_has_no_structural_term() {
        let t = catalog("Tanh", &[]).unwrap();
        assert_eq!(t.structural_coefficient(), 0.0);
        assert_eq!(t.lip(), 1.0);
    }

    #[test]
    fn composite_matches_closed_forms() {
        let xs = grid(-10.0, 10.0, 1000);
        for spec in all_catalog() {
            for &x in &xs {
                let direct = spec.phi1.eval(x - spec.alpha) - spec.phi2.eval(-x - spec.beta);
                assert!((spec.eval(x) - direct).abs() <= 1e-12);
                assert!(
                    (spec.eval(x) - closed_form(&spec, x)).abs() <= 1e-12,
                    "{} at {x}: {} vs {}",
                    spec.name(),
                    spec.eval(x),
                    closed_form(&spec, x)
                );
            }
        }
    }

    #[test]
    fn pieces_vanish_are_monotone_and_lipschitz() {
        let nonpos = grid(-10.0, 0.0, 200);
        let xs = grid(-10.0, 10.0, 400);
        for spec in all_catalog() {
            for piece in [spec.phi1, spec.phi2] {
                assert!(nonpos.iter().all(|&x| piece.eval(x) == 0.0));
                for w in xs.windows(2) {
                    let (a, b) = (piece.eval(w[0]), piece.eval(w[1]));
                    assert!(b >= a);
                    assert!((b - a).abs() <= piece.lip * (w[1] - w[0]) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn monotone_and_lipschitz_on_grid() {
        let xs = grid(-10.0, 10.0, 1000);
        for spec in all_catalog() {
            let vals: Vec<f64> = xs.iter().map(|&x| spec.eval(x)).collect();
            for w in vals.windows(2) {
                assert!(w[1] >= w[0], "{} not monotone", spec.name());
            }
            let lip = spec.lip();
            // all pairs on a coarser subgrid, plus all neighbours above
            for i in (0..xs.len()).step_by(7) {
                for j in (0..xs.len()).step_by(11) {
                    let lhs = (vals[i] - vals[j]).abs();
                    assert!(lhs <= lip * (xs[i] - xs[j]).abs() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dead_zone_is_zero() {
        for spec in all_catalog() {
            if spec.alpha > 0.0 && spec.beta > 0.0 {
                for x in grid(-spec.beta, spec.alpha, 50) {
                    assert_eq!(spec.eval(x.clamp(-spec.beta, spec.alpha)), 0.0);
                }
            }
        }
    }

    #[test]
    fn finite_difference_matches_derivative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for spec in all_catalog() {
            let kinks = spec.kinks();
            let mut checked = 0;
            while checked < 1000 {
                let x: f64 = rng.random_range(-10.0..10.0);
                if kinks.iter().any(|k| (x - k).abs() < 1e-3) {
                    continue;
                }
                let fd = (spec.eval(x + h) - spec.eval(x - h)) / (2.0 * h);
                assert!(
                    (fd - spec.deriv(x)).abs() <= 1e-4,
                    "{} at {x}: fd {fd} vs {}",
                    spec.name(),
                    spec.deriv(x)
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn offset_derivatives_match_finite_differences() {
        let spec = catalog("DeadZoneLeaky", &[1.0, 0.05, 0.3, 0.2]).unwrap();
        let h = 1e-6;
        for &x in &[-2.0, -0.1, 0.1, 1.5] {
            let fa = (spec.with_offsets(0.3 + h, 0.2).eval(x) - spec.with_offsets(0.3 - h, 0.2).eval(x)) / (2.0 * h);
            let fb = (spec.with_offsets(0.3, 0.2 + h).eval(x) - spec.with_offsets(0.3, 0.2 - h).eval(x)) / (2.0 * h);
            assert!((fa - spec.d_alpha(x)).abs() < 1e-6);
            assert!((fb - spec.d_beta(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn config_round_trip() {
        let spec = catalog("TEReLU", &[0.5, 0.3]).unwrap();
        let json = serde_json::to_string(&spec.config()).unwrap();
        let back: ActivationConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), spec);
    }
}
