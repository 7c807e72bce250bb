//! Closed-form generalization bounds for the discrete and continuous models,
//! the `M` factor, and the layer-wise complexity recursion.
//!
//! Discrete bound with `tau = T / L` and `D = Lip1 alpha + Lip2 beta`:
//!
//! ```text
//! 2 sqrt2 n Bk B M / sqrt S + 4 Bl sqrt(2 ln(4/delta) / S)
//!   - 2 sqrt2 n Bk B D exp(T Lip B^2) / S * tau * sum_l C^l
//! ```
//!
//! The printed continuous bound drops the `2 sqrt2 n Bk B` prefactor from the
//! negative term; [`Convention`] selects either form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::ActivationSpec;
use crate::resnet::{state_bound, ParamBudget};
use crate::train::LossSpec;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("`{0}` = {1} is out of range")]
    Range(&'static str, f64),
    #[error("expected {expected} slack constants, got {got}")]
    SlackLength { expected: usize, got: usize },
    #[error("slack constant C[{index}] = {value} is outside [0, {upper}]")]
    Slack { index: usize, value: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    AsPrinted,
    MatchDiscrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampMode {
    Reject,
    Clamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub n_d: usize,
    pub horizon: f64,
    /// Number of layers; ignored by the continuous bound.
    pub layers: usize,
    pub s: usize,
    pub delta: f64,
    pub budget: ParamBudget,
    pub act: ActivationSpec,
    pub b_kappa: f64,
    pub b_ell: f64,
    /// `C^1 .. C^L` for the discrete bound, or a single `C` for the continuous one.
    pub c_slack: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub leading: f64,
    pub concentration: f64,
    pub structural: f64,
    pub total: f64,
    pub m_factor: f64,
}

/// `M = (Lip B_in sqrt(2 ln 2 n_d) + 1 + T (1 + 2 Lip B)) exp(2 T Lip B^2)`.
pub fn m_factor(horizon: f64, act: &ActivationSpec, n_d: usize, budget: &ParamBudget) -> f64 {
    let lip = act.lip();
    let b = budget.b_theta;
    let massart = (2.0 * (2.0 * n_d as f64).ln()).sqrt();
    (lip * budget.b_in * massart + 1.0 + horizon * (1.0 + 2.0 * lip * b)) * (2.0 * horizon * lip * b * b).exp()
}

/// Upper end of the admissible slack interval, `min(sqrt S (1 + 2 Lip B) / (2 D), S)`.
pub fn slack_upper(inputs: &BoundInputs) -> f64 {
    let s = inputs.s as f64;
    let denom = inputs.act.structural_coefficient();
    if denom <= 0.0 {
        return s;
    }
    (s.sqrt() * (1.0 + 2.0 * inputs.act.lip() * inputs.budget.b_theta) / (2.0 * denom)).min(s)
}

impl BoundInputs {
    fn validate(&self) -> Result<(), BoundError> {
        if self.n == 0 {
            return Err(BoundError::Range("n", 0.0));
        }
        if self.n_d == 0 {
            return Err(BoundError::Range("n_d", 0.0));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(BoundError::Range("horizon", self.horizon));
        }
        if self.s == 0 {
            return Err(BoundError::Range("S", 0.0));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundError::Range("delta", self.delta));
        }
        if !(self.b_kappa >= 0.0 && self.b_kappa.is_finite()) {
            return Err(BoundError::Range("b_kappa", self.b_kappa));
        }
        if !(self.b_ell >= 0.0 && self.b_ell.is_finite()) {
            return Err(BoundError::Range("b_ell", self.b_ell));
        }
        Ok(())
    }

    fn checked_slack(&self, expected: usize, clamp: ClampMode) -> Result<Vec<f64>, BoundError> {
        if self.c_slack.len() != expected {
            return Err(BoundError::SlackLength {
                expected,
                got: self.c_slack.len(),
            });
        }
        let upper = slack_upper(self);
        self.c_slack
            .iter()
            .enumerate()
            .map(|(index, &value)| match clamp {
                ClampMode::Clamp if !value.is_nan() => Ok(value.clamp(0.0, upper)),
                _ if (0.0..=upper).contains(&value) => Ok(value),
                _ => Err(BoundError::Slack { index, value, upper }),
            })
            .collect()
    }

    fn shared_terms(&self) -> (f64, f64, f64) {
        let s = self.s as f64;
        let m = m_factor(self.horizon, &self.act, self.n_d, &self.budget);
        let leading = 2.0 * std::f64::consts::SQRT_2 * self.n as f64 * self.b_kappa * self.budget.b_theta * m / s.sqrt();
        let concentration = 4.0 * self.b_ell * (2.0 * (4.0 / self.delta).ln() / s).sqrt();
        (leading, concentration, m)
    }

    fn exp_growth(&self) -> f64 {
        let b = self.budget.b_theta;
        (self.horizon * self.act.lip() * b * b).exp()
    }

    fn prefactor(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.n as f64 * self.b_kappa * self.budget.b_theta
    }
}

pub fn discrete_bound(inputs: &BoundInputs, clamp: ClampMode) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    if inputs.layers == 0 {
        return Err(BoundError::Range("layers", 0.0));
    }
    let c = inputs.checked_slack(inputs.layers, clamp)?;
    let (leading, concentration, m) = inputs.shared_terms();
    let tau = inputs.horizon / inputs.layers as f64;
    let c_sum: f64 = c.iter().sum();
    let structural = -inputs.prefactor() * inputs.act.structural_coefficient() * inputs.exp_growth() / inputs.s as f64 * tau * c_sum;
    Ok(BoundReport {
        leading,
        concentration,
        structural,
        total: leading + concentration + structural,
        m_factor: m,
    })
}

pub fn continuous_bound(inputs: &BoundInputs, convention: Convention, clamp: ClampMode) -> Result<BoundReport, BoundError> {
    inputs.validate()?;
    let c = inputs.checked_slack(1, clamp)?[0];
    let (leading, concentration, m) = inputs.shared_terms();
    let pre = match convention {
        Convention::AsPrinted => 1.0,
        Convention::MatchDiscrete => inputs.prefactor(),
    };
    let structural = -pre * inputs.act.structural_coefficient() * inputs.exp_growth() * inputs.horizon / inputs.s as f64 * c;
    Ok(BoundReport {
        leading,
        concentration,
        structural,
        total: leading + concentration + structural,
        m_factor: m,
    })
}

/// Per-layer complexity bounds `R^0 .. R^L`:
///
/// ```text
/// R^0     = Lip B (B_in sqrt(2 ln 2 n_d) + 1) / sqrt S
/// R^{l+1} = R^l (1 + 2 tau Lip B^2) + max(tau B (1 + 2 Lip B) / sqrt S - tau B D C^{l+1} / S, 0)
/// ```
pub fn layered_recursion(inputs: &BoundInputs, clamp: ClampMode) -> Result<Vec<f64>, BoundError> {
    inputs.validate()?;
    if inputs.layers == 0 {
        return Err(BoundError::Range("layers", 0.0));
    }
    let c = inputs.checked_slack(inputs.layers, clamp)?;
    let lip = inputs.act.lip();
    let b = inputs.budget.b_theta;
    let sq = (inputs.s as f64).sqrt();
    let s = inputs.s as f64;
    let denom = inputs.act.structural_coefficient();
    let tau = inputs.horizon / inputs.layers as f64;
    let massart = (2.0 * (2.0 * inputs.n_d as f64).ln()).sqrt();
    let mut out = Vec::with_capacity(inputs.layers + 1);
    out.push(lip * b * (inputs.budget.b_in * massart + 1.0) / sq);
    let growth = 1.0 + 2.0 * tau * lip * b * b;
    let push = tau * b * (1.0 + 2.0 * lip * b) / sq;
    for cl in c {
        let prev = *out.last().unwrap();
        out.push(prev * growth + (push - tau * b * denom * cl / s).max(0.0));
    }
    Ok(out)
}

/// Depth-independent envelope `(B / sqrt S) M` of the recursion with `C = 0`
/// (valid for `Lip <= 1`).
pub fn depth_envelope(inputs: &BoundInputs) -> f64 {
    inputs.budget.b_theta / (inputs.s as f64).sqrt() * m_factor(inputs.horizon, &inputs.act, inputs.n_d, &inputs.budget)
}

/// `(B_l, B_kappa)` for a loss over the state ball of radius `B_out(T)`.
pub fn loss_constants(loss: &LossSpec, n: usize, budget: &ParamBudget, act: &ActivationSpec, horizon: f64) -> (f64, f64) {
    let b_out = state_bound(budget, act, horizon, 1.0);
    loss.envelope(n, b_out, budget.b_in)
}
