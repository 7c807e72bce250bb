use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::params::{DiscreteParams, LayerParams, ParamBudget, PreprocessParams};
use super::path::{grid_time, ContinuousParams};
use super::ResnetError;
use crate::activation::ActivationSpec;

/// States `x^0 .. x^L` (or sampled `x(t_k)`) with their times.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: Vec<DVector<f64>>,
    pub times: Vec<f64>,
}

impl StateTrajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

fn check_input(pre: &PreprocessParams, d: &DVector<f64>) -> Result<(), ResnetError> {
    if d.len() != pre.u.ncols() {
        return Err(ResnetError::Dimension {
            expected: pre.u.ncols(),
            got: d.len(),
        });
    }
    Ok(())
}

/// `x^0 = psi(U d + a)`.
pub fn preprocess(pre: &PreprocessParams, act: &ActivationSpec, d: &DVector<f64>) -> DVector<f64> {
    (&pre.u * d + &pre.a).map(|z| act.eval(z))
}

/// Vector field `W psi(V x + b) + c`.
pub fn residual_field(layer: &LayerParams, act: &ActivationSpec, x: &DVector<f64>) -> DVector<f64> {
    let h = (&layer.v * x + &layer.b).map(|z| act.eval(z));
    &layer.w * h + &layer.c
}

#[inline]
fn euler_step(x: &DVector<f64>, f: &DVector<f64>, h: f64) -> DVector<f64> {
    x + f * h
}

/// Discrete recursion `x^{l+1} = x^l + tau (W^l psi(V^l x^l + b^l) + c^l)`.
pub fn discrete_forward(
    params: &DiscreteParams,
    act: &ActivationSpec,
    d: &DVector<f64>,
) -> Result<StateTrajectory, ResnetError> {
    check_input(params.pre(), d)?;
    let l_total = params.num_layers();
    let t = params.horizon();
    let tau = params.tau();
    let mut states = Vec::with_capacity(l_total + 1);
    states.push(preprocess(params.pre(), act, d));
    for layer in params.layers() {
        let x = states.last().unwrap();
        let next = euler_step(x, &residual_field(layer, act, x), tau);
        states.push(next);
    }
    let times = (0..=l_total).map(|l| grid_time(l, t, l_total)).collect();
    Ok(StateTrajectory { states, times })
}

fn field_at(cont: &ContinuousParams, act: &ActivationSpec, t: f64, x: &DVector<f64>) -> DVector<f64> {
    residual_field(&cont.at(t), act, x)
}

fn rk4_step(
    cont: &ContinuousParams,
    act: &ActivationSpec,
    t: f64,
    x: &DVector<f64>,
    h: f64,
    k1: DVector<f64>,
) -> DVector<f64> {
    let k2 = field_at(cont, act, t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = field_at(cont, act, t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = field_at(cont, act, t + h, &(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step integration of `dx/dt = W(t) psi(V(t) x + b(t)) + c(t)` from `x(0) = psi(U d + a)`.
pub fn continuous_flow(
    params: &ContinuousParams,
    act: &ActivationSpec,
    d: &DVector<f64>,
    integrator: Integrator,
    steps: usize,
) -> Result<StateTrajectory, ResnetError> {
    Ok(integrate(params, act, d, integrator, steps)?.trajectory)
}

/// RK4 solution with stored slopes for cubic Hermite dense output.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub trajectory: StateTrajectory,
    slopes: Vec<DVector<f64>>,
    horizon: f64,
}

impl DenseSolution {
    /// State at any `t` in `[0, T]`; exact at grid times.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let steps = self.slopes.len() - 1;
        let h = self.horizon / steps as f64;
        let s = (t / h).clamp(0.0, steps as f64);
        let k = (s.floor() as usize).min(steps - 1);
        let th = s - k as f64;
        let st = &self.trajectory.states;
        if th == 0.0 {
            return st[k].clone();
        }
        if th == 1.0 {
            return st[k + 1].clone();
        }
        let h00 = 2.0 * th.powi(3) - 3.0 * th.powi(2) + 1.0;
        let h10 = th.powi(3) - 2.0 * th.powi(2) + th;
        let h01 = -2.0 * th.powi(3) + 3.0 * th.powi(2);
        let h11 = th.powi(3) - th.powi(2);
        &st[k] * h00 + &self.slopes[k] * (h10 * h) + &st[k + 1] * h01 + &self.slopes[k + 1] * (h11 * h)
    }
}

fn integrate(
    params: &ContinuousParams,
    act: &ActivationSpec,
    d: &DVector<f64>,
    integrator: Integrator,
    steps: usize,
) -> Result<DenseSolution, ResnetError> {
    if steps == 0 {
        return Err(ResnetError::ZeroSteps);
    }
    check_input(params.pre(), d)?;
    let t_end = params.horizon();
    let h = t_end / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    states.push(preprocess(params.pre(), act, d));
    times.push(0.0);
    for k in 0..steps {
        let t = grid_time(k, t_end, steps);
        let x = states.last().unwrap();
        let f = field_at(params, act, t, x);
        let next = match integrator {
            Integrator::Euler => euler_step(x, &f, h),
            Integrator::Rk4 => rk4_step(params, act, t, x, h, f.clone()),
        };
        slopes.push(f);
        let t_next = grid_time(k + 1, t_end, steps);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ResnetError::NonFinite { time: t_next });
        }
        states.push(next);
        times.push(t_next);
    }
    slopes.push(field_at(params, act, t_end, states.last().unwrap()));
    Ok(DenseSolution {
        trajectory: StateTrajectory { states, times },
        slopes,
        horizon: t_end,
    })
}

/// RK4 reference with dense output.
pub fn rk4_dense(
    params: &ContinuousParams,
    act: &ActivationSpec,
    d: &DVector<f64>,
    steps: usize,
) -> Result<DenseSolution, ResnetError> {
    integrate(params, act, d, Integrator::Rk4, steps)
}

/// State bound `[Lip B (B_in + 1) + t (Lip B^2 + B)] exp(t Lip B^2)` at `t = T * l_over_L`.
pub fn state_bound(budget: &ParamBudget, act: &ActivationSpec, horizon: f64, l_over_l: f64) -> f64 {
    let lip = act.lip();
    let b = budget.b_theta;
    let t = horizon * l_over_l;
    (lip * b * (budget.b_in + 1.0) + t * (lip * b * b + b)) * (t * lip * b * b).exp()
}

/// Parameters whose forward states are the original states with coordinates
/// `i1`, `i2` (0-based) swapped. The `b` blocks are untouched.
pub fn permute_params(disc: &DiscreteParams, i1: usize, i2: usize) -> Result<DiscreteParams, ResnetError> {
    let n = disc.dims().n;
    for i in [i1, i2] {
        if i >= n {
            return Err(ResnetError::Index { index: i, n });
        }
    }
    let mut out = disc.clone();
    if i1 == i2 {
        return Ok(out);
    }
    let pre = out.pre_mut();
    pre.u.swap_rows(i1, i2);
    pre.a.swap_rows(i1, i2);
    for layer in out.layers_mut() {
        layer.v.swap_columns(i1, i2);
        layer.w.swap_rows(i1, i2);
        layer.c.swap_rows(i1, i2);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::catalog;
    use crate::resnet::params::Dims;
    use crate::resnet::path::{extend_params, ParamPath};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn relu() -> ActivationSpec {
        catalog("ReLU", &[]).unwrap()
    }

    fn scalar_layer(v: f64, w: f64, b: f64, c: f64) -> LayerParams {
        LayerParams {
            v: DMatrix::from_element(1, 1, v),
            w: DMatrix::from_element(1, 1, w),
            b: DVector::from_element(1, b),
            c: DVector::from_element(1, c),
        }
    }

    #[test]
    fn zero_residual_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dims = Dims::new(3, 2, 4).unwrap();
        let mut p = DiscreteParams::random(dims, 6, 1.0, 1.0, &mut rng).unwrap();
        for l in p.layers_mut() {
            l.w.fill(0.0);
            l.c.fill(0.0);
        }
        let d = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let tr = discrete_forward(&p, &relu(), &d).unwrap();
        assert_eq!(tr.states.len(), 7);
        assert!(tr.states.iter().all(|x| *x == tr.states[0]));
    }

    #[test]
    fn one_step_hand_computation() {
        let pre = PreprocessParams {
            u: DMatrix::from_element(1, 1, 1.0),
            a: DVector::zeros(1),
        };
        let p = DiscreteParams::new(pre, vec![scalar_layer(1.0, 1.0, 0.0, 0.0)], 1.0).unwrap();
        let tr = discrete_forward(&p, &relu(), &DVector::from_element(1, 1.0)).unwrap();
        assert_eq!(tr.states[0][0], 1.0);
        assert_eq!(tr.states[1][0], 2.0);
        assert_eq!(tr.times, vec![0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = DiscreteParams::zeros(Dims::new(2, 2, 2).unwrap(), 1, 1.0).unwrap();
        let err = discrete_forward(&p, &relu(), &DVector::zeros(3)).unwrap_err();
        assert!(matches!(err, ResnetError::Dimension { expected: 2, got: 3 }));
    }

    #[test]
    fn constant_rhs_is_integrated_exactly() {
        for t_end in [0.5, 1.0, 2.0] {
            let c = ContinuousParams::new(
                PreprocessParams::zeros(1, 1),
                ParamPath::Constant(scalar_layer(0.0, 1.0, 1.0, 0.0)),
                t_end,
            )
            .unwrap();
            for integ in [Integrator::Euler, Integrator::Rk4] {
                let tr = continuous_flow(&c, &relu(), &DVector::zeros(1), integ, 8).unwrap();
                assert!((tr.last()[0] - t_end).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_field_keeps_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = Dims::new(2, 3, 3).unwrap();
        let mut layer = LayerParams::random(3, 3, 1.0, &mut rng);
        layer.w.fill(0.0);
        layer.c.fill(0.0);
        let c = ContinuousParams::new(PreprocessParams::random(dims, 1.0, &mut rng), ParamPath::Constant(layer), 1.0).unwrap();
        let d = DVector::from_vec(vec![0.4, 0.1]);
        for integ in [Integrator::Euler, Integrator::Rk4] {
            let tr = continuous_flow(&c, &relu(), &d, integ, 5).unwrap();
            assert!(tr.states.iter().all(|x| *x == tr.states[0]));
        }
    }

    #[test]
    fn discrete_forward_is_euler_on_extension() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let act = catalog("SoftThresholdSym", &[0.1]).unwrap();
        for l in [1usize, 3, 8, 24] {
            let dims = Dims::new(3, 4, 5).unwrap();
            let p = DiscreteParams::random(dims, l, 1.3, 1.0, &mut rng).unwrap();
            let d = DVector::from_fn(3, |_, _| rng.random_range(-0.5..0.5));
            let a = discrete_forward(&p, &act, &d).unwrap();
            let b = continuous_flow(&extend_params(&p), &act, &d, Integrator::Euler, l).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dense_output_exact_at_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dims = Dims::new(2, 2, 3).unwrap();
        let f = crate::resnet::path::FourierPath::random(dims, 3, 1.0, 1.0, &mut rng);
        let c = ContinuousParams::new(PreprocessParams::random(dims, 1.0, &mut rng), ParamPath::Fourier(f), 1.0).unwrap();
        let d = DVector::from_vec(vec![0.5, -0.5]);
        let sol = rk4_dense(&c, &relu(), &d, 64).unwrap();
        assert_eq!(sol.eval(0.25), sol.trajectory.states[16]);
        let fine = rk4_dense(&c, &relu(), &d, 1024).unwrap();
        let t = 0.3337;
        assert!((sol.eval(t) - fine.eval(t)).amax() < 1e-6);
    }

    #[test]
    fn state_bound_values() {
        let budget = ParamBudget::new(1.0, 1.0).unwrap();
        let v = state_bound(&budget, &relu(), 1.0, 1.0);
        assert!((v - 4.0 * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(state_bound(&budget, &relu(), 1.0, 0.0), 2.0);
        let mut prev = 0.0;
        for k in 0..10 {
            let v = state_bound(&budget, &relu(), 1.0, k as f64 / 9.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn permutation_identity_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = DiscreteParams::random(Dims::new(2, 4, 3).unwrap(), 3, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(permute_params(&p, 2, 2).unwrap(), p);
        let q = permute_params(&p, 0, 3).unwrap();
        assert_ne!(q, p);
        assert_eq!(permute_params(&q, 0, 3).unwrap(), p);
        assert!(matches!(permute_params(&p, 0, 4), Err(ResnetError::Index { index: 4, n: 4 })));
    }
}
