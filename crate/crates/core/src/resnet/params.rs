use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ResnetError;

/// Induced infinity norm: the largest absolute row sum.
pub fn mat_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Rescales every row whose l1 norm exceeds `bound`.
pub fn project_mat(m: &mut DMatrix<f64>, bound: f64) {
    for i in 0..m.nrows() {
        let s: f64 = m.row(i).iter().map(|x| x.abs()).sum();
        if s > bound {
            let f = bound / s;
            m.row_mut(i).iter_mut().for_each(|x| *x *= f);
        }
    }
}

pub fn project_vec(v: &mut DVector<f64>, bound: f64) {
    v.iter_mut().for_each(|x| *x = x.clamp(-bound, bound));
}

/// Random matrix whose rows have l1 norm at most `bound`.
pub fn random_mat<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> DMatrix<f64> {
    let mut m: DMatrix<f64> = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0));
    for i in 0..rows {
        let s: f64 = m.row(i).iter().map(|x| x.abs()).sum();
        // target row norm uniform in (0, bound]
        let target = bound * (1.0 - rng.random::<f64>());
        if s > 0.0 {
            let f = target / s;
            m.row_mut(i).iter_mut().for_each(|x| *x *= f);
        }
    }
    m
}

pub fn random_vec<R: Rng + ?Sized>(len: usize, bound: f64, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-bound..=bound))
}

/// Data and parameter bounds `B_Theta`, `B_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBudget {
    pub b_theta: f64,
    pub b_in: f64,
}

impl ParamBudget {
    pub fn new(b_theta: f64, b_in: f64) -> Result<Self, ResnetError> {
        if !(b_theta > 0.0 && b_theta.is_finite()) {
            return Err(ResnetError::Budget("b_theta", b_theta));
        }
        if !(b_in > 0.0 && b_in.is_finite()) {
            return Err(ResnetError::Budget("b_in", b_in));
        }
        Ok(Self { b_theta, b_in })
    }
}

/// Widths `(n_d, n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub n_d: usize,
    pub n: usize,
    pub m: usize,
}

impl Dims {
    pub fn new(n_d: usize, n: usize, m: usize) -> Result<Self, ResnetError> {
        if n_d == 0 || n == 0 || m == 0 {
            return Err(ResnetError::ZeroWidth);
        }
        Ok(Self { n_d, n, m })
    }
}

/// Preprocessing layer `(U, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessParams {
    pub u: DMatrix<f64>,
    pub a: DVector<f64>,
}

impl PreprocessParams {
    pub fn zeros(n_d: usize, n: usize) -> Self {
        Self {
            u: DMatrix::zeros(n, n_d),
            a: DVector::zeros(n),
        }
    }

    pub fn random<R: Rng + ?Sized>(dims: Dims, bound: f64, rng: &mut R) -> Self {
        Self {
            u: random_mat(dims.n, dims.n_d, bound, rng),
            a: random_vec(dims.n, bound, rng),
        }
    }

    pub fn inf_norm(&self) -> f64 {
        mat_norm(&self.u).max(vec_norm(&self.a))
    }

    pub fn project(&mut self, bound: f64) {
        project_mat(&mut self.u, bound);
        project_vec(&mut self.a, bound);
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.a.iter()).all(|x| x.is_finite())
    }
}

/// One residual layer `(V, W, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl LayerParams {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            v: DMatrix::zeros(m, n),
            w: DMatrix::zeros(n, m),
            b: DVector::zeros(m),
            c: DVector::zeros(n),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            v: random_mat(m, n, bound, rng),
            w: random_mat(n, m, bound, rng),
            b: random_vec(m, bound, rng),
            c: random_vec(n, bound, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.v.ncols()
    }

    pub fn m(&self) -> usize {
        self.v.nrows()
    }

    pub fn inf_norm(&self) -> f64 {
        mat_norm(&self.v)
            .max(mat_norm(&self.w))
            .max(vec_norm(&self.b))
            .max(vec_norm(&self.c))
    }

    pub fn project(&mut self, bound: f64) {
        project_mat(&mut self.v, bound);
        project_mat(&mut self.w, bound);
        project_vec(&mut self.b, bound);
        project_vec(&mut self.c, bound);
    }

    pub fn is_finite(&self) -> bool {
        self.v
            .iter()
            .chain(self.w.iter())
            .chain(self.b.iter())
            .chain(self.c.iter())
            .all(|x| x.is_finite())
    }

    /// `self + s * other`, blockwise.
    pub fn axpy(&self, s: f64, other: &LayerParams) -> LayerParams {
        LayerParams {
            v: &self.v + &other.v * s,
            w: &self.w + &other.w * s,
            b: &self.b + &other.b * s,
            c: &self.c + &other.c * s,
        }
    }

    pub fn scale(&self, s: f64) -> LayerParams {
        LayerParams {
            v: &self.v * s,
            w: &self.w * s,
            b: &self.b * s,
            c: &self.c * s,
        }
    }

    fn check_shape(&self, n: usize, m: usize) -> Result<(), ResnetError> {
        let ok = self.v.shape() == (m, n)
            && self.w.shape() == (n, m)
            && self.b.len() == m
            && self.c.len() == n;
        if ok {
            Ok(())
        } else {
            Err(ResnetError::Shape(format!(
                "layer blocks V {:?}, W {:?}, b {}, c {} do not match n = {n}, m = {m}",
                self.v.shape(),
                self.w.shape(),
                self.b.len(),
                self.c.len()
            )))
        }
    }
}

/// Full discrete parameter bundle with horizon `T`; `tau = T / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteParams {
    pre: PreprocessParams,
    layers: Vec<LayerParams>,
    horizon: f64,
}

impl DiscreteParams {
    pub fn new(pre: PreprocessParams, layers: Vec<LayerParams>, horizon: f64) -> Result<Self, ResnetError> {
        if layers.is_empty() {
            return Err(ResnetError::ZeroLayers);
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ResnetError::Horizon(horizon));
        }
        let n = pre.u.nrows();
        if pre.a.len() != n {
            return Err(ResnetError::Shape(format!(
                "U has {n} rows but a has length {}",
                pre.a.len()
            )));
        }
        let m = layers[0].m();
        for layer in &layers {
            layer.check_shape(n, m)?;
        }
        if n == 0 || m == 0 || pre.u.ncols() == 0 {
            return Err(ResnetError::ZeroWidth);
        }
        Ok(Self { pre, layers, horizon })
    }

    pub fn zeros(dims: Dims, layers: usize, horizon: f64) -> Result<Self, ResnetError> {
        Self::new(
            PreprocessParams::zeros(dims.n_d, dims.n),
            vec![LayerParams::zeros(dims.n, dims.m); layers],
            horizon,
        )
    }

    /// Random parameters with `||Theta||_inf <= bound`.
    pub fn random<R: Rng + ?Sized>(
        dims: Dims,
        layers: usize,
        horizon: f64,
        bound: f64,
        rng: &mut R,
    ) -> Result<Self, ResnetError> {
        let pre = PreprocessParams::random(dims, bound, rng);
        let layers = (0..layers)
            .map(|_| LayerParams::random(dims.n, dims.m, bound, rng))
            .collect();
        Self::new(pre, layers, horizon)
    }

    pub fn pre(&self) -> &PreprocessParams {
        &self.pre
    }

    pub fn pre_mut(&mut self) -> &mut PreprocessParams {
        &mut self.pre
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    /// Mutable layer access; shapes are not rechecked, so callers must keep them.
    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    /// Simultaneous mutable access to the pre-layer and the residual layers.
    pub fn split_mut(&mut self) -> (&mut PreprocessParams, &mut [LayerParams]) {
        (&mut self.pre, &mut self.layers)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.layers.len() as f64
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n_d: self.pre.u.ncols(),
            n: self.pre.u.nrows(),
            m: self.layers[0].m(),
        }
    }

    pub fn inf_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(LayerParams::inf_norm)
            .fold(self.pre.inf_norm(), f64::max)
    }

    pub fn project(&mut self, bound: f64) {
        self.pre.project(bound);
        self.layers.iter_mut().for_each(|l| l.project(bound));
    }

    pub fn is_finite(&self) -> bool {
        self.pre.is_finite() && self.layers.iter().all(LayerParams::is_finite)
    }

    pub fn num_scalars(&self) -> usize {
        let d = self.dims();
        d.n * d.n_d + d.n + self.layers.len() * (2 * d.n * d.m + d.m + d.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norms() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 0.5]);
        assert_eq!(mat_norm(&m), 3.0);
        assert_eq!(vec_norm(&DVector::from_vec(vec![-4.0, 1.0])), 4.0);
    }

    #[test]
    fn total_norm_is_blockwise_max() {
        let mut p = DiscreteParams::zeros(Dims::new(2, 2, 3).unwrap(), 3, 1.0).unwrap();
        p.pre_mut().a[1] = -0.7;
        p.layers_mut()[2].w[(1, 2)] = 1.3;
        p.layers_mut()[2].w[(1, 0)] = -0.2;
        assert!((p.inf_norm() - 1.5).abs() < 1e-15);
        assert_eq!(p.tau(), 1.0 / 3.0);
    }

    #[test]
    fn random_respects_budget_and_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = Dims::new(3, 4, 5).unwrap();
        for _ in 0..50 {
            let p = DiscreteParams::random(dims, 4, 1.0, 0.7, &mut rng).unwrap();
            assert!(p.inf_norm() <= 0.7 + 1e-12);
            let mut q = DiscreteParams::random(dims, 4, 1.0, 3.0, &mut rng).unwrap();
            q.project(0.5);
            assert!(q.inf_norm() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_construction() {
        let dims = Dims::new(2, 2, 2).unwrap();
        assert!(matches!(DiscreteParams::zeros(dims, 0, 1.0), Err(ResnetError::ZeroLayers)));
        assert!(matches!(DiscreteParams::zeros(dims, 2, 0.0), Err(ResnetError::Horizon(_))));
        let bad = DiscreteParams::new(
            PreprocessParams::zeros(2, 2),
            vec![LayerParams::zeros(3, 2)],
            1.0,
        );
        assert!(matches!(bad, Err(ResnetError::Shape(_))));
        assert!(ParamBudget::new(0.0, 1.0).is_err());
    }
}
