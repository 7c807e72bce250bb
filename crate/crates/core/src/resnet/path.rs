use std::borrow::Cow;

use rand::Rng;

use super::params::{mat_norm, vec_norm, DiscreteParams, Dims, LayerParams, PreprocessParams};
use super::ResnetError;

/// One sinusoidal mode `amplitude * sin(freq * t + phase)`, applied entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMode {
    pub amplitude: LayerParams,
    pub freq: f64,
    pub phase: f64,
}

/// Closed-form path `base + sum_k amplitude_k * sin(freq_k t + phase_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPath {
    pub base: LayerParams,
    pub modes: Vec<FourierMode>,
}

impl FourierPath {
    pub fn eval(&self, t: f64) -> LayerParams {
        let mut out = self.base.clone();
        for mode in &self.modes {
            out = out.axpy((mode.freq * t + mode.phase).sin(), &mode.amplitude);
        }
        out
    }

    /// Upper bounds `(sup_t ||Theta(t)||, sup_t ||Theta'(t)||)` from the triangle inequality.
    pub fn sup_bounds(&self) -> (f64, f64) {
        let value = self.base.inf_norm() + self.modes.iter().map(|m| m.amplitude.inf_norm()).sum::<f64>();
        let deriv = self
            .modes
            .iter()
            .map(|m| m.freq.abs() * m.amplitude.inf_norm())
            .sum::<f64>();
        (value, deriv)
    }

    /// Random smooth path with `modes` harmonics `freq_k = k * pi / T`, scaled so
    /// that both the sup norm and the H^1 norm are at most `bound`.
    pub fn random<R: Rng + ?Sized>(
        dims: Dims,
        modes: usize,
        bound: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Self {
        let base = LayerParams::random(dims.n, dims.m, 1.0, rng);
        let modes: Vec<FourierMode> = (1..=modes)
            .map(|k| FourierMode {
                amplitude: LayerParams::random(dims.n, dims.m, 1.0 / k as f64, rng),
                freq: k as f64 * std::f64::consts::PI / horizon,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        let mut path = FourierPath { base, modes };
        let (a, d) = path.sup_bounds();
        let worst = a.max((horizon * (a * a + d * d)).sqrt());
        if worst > 0.0 {
            let f = bound / worst;
            path.base = path.base.scale(f);
            for m in &mut path.modes {
                m.amplitude = m.amplitude.scale(f);
            }
        }
        path
    }
}

/// Representations of a time-dependent parameter path on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamPath {
    Constant(LayerParams),
    /// Value `layers[l]` on `[lT/L, (l+1)T/L)`, last interval closed.
    PiecewiseConstant(Vec<LayerParams>),
    /// Linear interpolation between knots on a uniform grid over `[0, T]`.
    Linear(Vec<LayerParams>),
    Fourier(FourierPath),
}

/// Index of the interval `[lT/L, (l+1)T/L)` containing `t`, clamped to `0..L`.
///
/// Grid times computed as `l * T / L` land in interval `l` despite rounding.
pub fn interval_index(t: f64, horizon: f64, intervals: usize) -> usize {
    let s = t / horizon * intervals as f64;
    let idx = (s + 1e-9 * s.abs().max(1.0)).floor();
    if idx <= 0.0 {
        0
    } else {
        (idx as usize).min(intervals - 1)
    }
}

/// Grid time `t_l = l T / L`.
#[inline]
pub fn grid_time(l: usize, horizon: f64, intervals: usize) -> f64 {
    l as f64 * horizon / intervals as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousParams {
    pre: PreprocessParams,
    path: ParamPath,
    horizon: f64,
}

impl ContinuousParams {
    pub fn new(pre: PreprocessParams, path: ParamPath, horizon: f64) -> Result<Self, ResnetError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ResnetError::Horizon(horizon));
        }
        match &path {
            ParamPath::PiecewiseConstant(v) if v.is_empty() => return Err(ResnetError::ZeroLayers),
            ParamPath::Linear(v) if v.len() < 2 => {
                return Err(ResnetError::Shape("linear path needs at least two knots".into()))
            }
            _ => {}
        }
        let blocks: Vec<LayerParams> = match &path {
            ParamPath::Constant(p) => vec![p.clone()],
            ParamPath::PiecewiseConstant(v) | ParamPath::Linear(v) => v.clone(),
            ParamPath::Fourier(f) => std::iter::once(f.base.clone())
                .chain(f.modes.iter().map(|m| m.amplitude.clone()))
                .collect(),
        };
        // shape check through a discrete bundle
        DiscreteParams::new(pre.clone(), blocks, horizon)?;
        Ok(Self { pre, path, horizon })
    }

    pub fn pre(&self) -> &PreprocessParams {
        &self.pre
    }

    pub fn path(&self) -> &ParamPath {
        &self.path
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dims(&self) -> Dims {
        let l = self.at(0.0);
        Dims {
            n_d: self.pre.u.ncols(),
            n: self.pre.u.nrows(),
            m: l.m(),
        }
    }

    /// Parameter value `Theta(t)`.
    pub fn at(&self, t: f64) -> Cow<'_, LayerParams> {
        match &self.path {
            ParamPath::Constant(p) => Cow::Borrowed(p),
            ParamPath::PiecewiseConstant(layers) => {
                Cow::Borrowed(&layers[interval_index(t, self.horizon, layers.len())])
            }
            ParamPath::Linear(knots) => {
                let k = knots.len() - 1;
                let s = (t / self.horizon).clamp(0.0, 1.0) * k as f64;
                let i = (s.floor() as usize).min(k - 1);
                let w = s - i as f64;
                if w == 0.0 {
                    Cow::Borrowed(&knots[i])
                } else if w == 1.0 {
                    Cow::Borrowed(&knots[i + 1])
                } else {
                    Cow::Owned(knots[i].scale(1.0 - w).axpy(w, &knots[i + 1]))
                }
            }
            ParamPath::Fourier(f) => Cow::Owned(f.eval(t)),
        }
    }

    /// `||Theta||_C` approximated on a uniform grid of `points + 1` times, maxed with the pre block.
    pub fn sup_norm(&self, points: usize) -> f64 {
        let inner = match &self.path {
            ParamPath::PiecewiseConstant(layers) => layers.iter().map(LayerParams::inf_norm).fold(0.0, f64::max),
            _ => (0..=points)
                .map(|k| self.at(grid_time(k, self.horizon, points)).inf_norm())
                .fold(0.0, f64::max),
        };
        inner.max(self.pre.inf_norm())
    }

    /// Max over blocks of the H^1 norm, by trapezoidal quadrature of the squared
    /// block norms and of the squared difference quotients.
    ///
    /// For a piecewise-constant path the grid is its own layer grid, so the
    /// derivative part is the discrete difference-quotient seminorm.
    pub fn h1_norm(&self, points: usize) -> f64 {
        let (values, h): (Vec<LayerParams>, f64) = match &self.path {
            ParamPath::PiecewiseConstant(layers) => (layers.clone(), self.horizon / layers.len() as f64),
            _ => (
                (0..=points)
                    .map(|k| self.at(grid_time(k, self.horizon, points)).into_owned())
                    .collect(),
                self.horizon / points as f64,
            ),
        };
        let blocks: [fn(&LayerParams, &LayerParams) -> f64; 4] = [
            |p, q| mat_norm(&(&p.v - &q.v)),
            |p, q| mat_norm(&(&p.w - &q.w)),
            |p, q| vec_norm(&(&p.b - &q.b)),
            |p, q| vec_norm(&(&p.c - &q.c)),
        ];
        let zero = LayerParams::zeros(values[0].n(), values[0].m());
        blocks
            .iter()
            .map(|norm| {
                let sq: Vec<f64> = values.iter().map(|v| norm(v, &zero).powi(2)).collect();
                let l2 = if sq.len() == 1 {
                    sq[0] * self.horizon
                } else {
                    let inner: f64 = sq.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
                    inner * h
                };
                let deriv: f64 = values
                    .windows(2)
                    .map(|w| (norm(&w[1], &w[0]) / h).powi(2) * h)
                    .sum();
                (l2 + deriv).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Full continuous norm: max of pre block, sup norm and H^1 norm.
    pub fn total_norm(&self, points: usize) -> f64 {
        self.sup_norm(points).max(self.h1_norm(points))
    }
}

/// Sampling operator: layer `l` is the path at `t_l = lT/L`.
pub fn sample_params(cont: &ContinuousParams, layers: usize) -> Result<DiscreteParams, ResnetError> {
    if layers == 0 {
        return Err(ResnetError::ZeroLayers);
    }
    let t = cont.horizon();
    let ls = (0..layers)
        .map(|l| cont.at(grid_time(l, t, layers)).into_owned())
        .collect();
    DiscreteParams::new(cont.pre().clone(), ls, t)
}

/// Piecewise-constant extension of discrete layers to `[0, T]`.
pub fn extend_params(disc: &DiscreteParams) -> ContinuousParams {
    ContinuousParams {
        pre: disc.pre().clone(),
        path: ParamPath::PiecewiseConstant(disc.layers().to_vec()),
        horizon: disc.horizon(),
    }
}

/// `sup`-block-norm L^2 distance `(int_0^T ||P(t) - Q(t)||^2 dt)^{1/2}` by the midpoint rule.
pub fn l2_path_distance(p: &ContinuousParams, q: &ContinuousParams, cells: usize) -> f64 {
    let t = p.horizon();
    let h = t / cells as f64;
    let sum: f64 = (0..cells)
        .map(|k| {
            let tm = (k as f64 + 0.5) * h;
            let a = p.at(tm);
            let b = q.at(tm);
            a.axpy(-1.0, &b).inf_norm().powi(2)
        })
        .sum();
    (sum * h).sqrt()
}
