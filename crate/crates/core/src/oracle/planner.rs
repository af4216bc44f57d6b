//! Step-size and horizon selection from the convergence rates.
//!
//! The rates hold up to universal constants. They are exposed as
//! [`PlannerConstants::multiplier`] (the constant hidden in `T ≳ …`) and
//! [`PlannerConstants::c0`] (the step-size cap). Absolute step counts depend
//! on these conventions; their scaling in `ε, d, σ, C_LSI` does not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConstants {
    /// Cap constant: `η < c0·min(…)`.
    pub c0: f64,
    /// Constant multiplying the horizon expression.
    pub multiplier: f64,
    /// Plans that need more steps than this are reported as infeasible.
    pub max_steps: usize,
}

impl Default for PlannerConstants {
    fn default() -> Self {
        Self {
            c0: 0.1,
            multiplier: 1.0,
            max_steps: 1_000_000_000,
        }
    }
}

/// Inputs of the pairwise planner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwisePlanInputs {
    pub c_lsi: f64,
    pub l_v: f64,
    pub l_w: f64,
    pub sigma: f64,
    pub dim: usize,
    /// `KL(μ₀ ‖ π)`.
    pub kl0: f64,
}

/// Inputs of the neural-network planner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfnnPlanInputs {
    pub c_lsi: f64,
    pub l_u: f64,
    pub sigma: f64,
    pub dim: usize,
    /// Initial excess energy `E(μ₀) − E(π)`.
    pub e0: f64,
    pub m: f64,
    pub r: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanInputs {
    Pairwise(PairwisePlanInputs),
    Mfnn(MfnnPlanInputs),
}

/// A step size and horizon with
/// `η·T·σ²/(8 C_LSI) = log(3·gap₀/ε)` and `η` below the cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub eta: f64,
    pub steps: usize,
    pub epsilon: f64,
    /// `log(3·gap₀/ε)`.
    pub log_factor: f64,
    /// Horizon from the rate expression alone.
    pub rate_steps: usize,
    pub step_cap: f64,
    /// `step_cap − eta`, always positive.
    pub cap_margin: f64,
    /// Whether the cap forced a longer horizon than the rate expression.
    pub cap_binding: bool,
    pub constants: PlannerConstants,
    pub inputs: PlanInputs,
}

/// Smoothness `(B + R)LR + λ + M²R²` of the network drift in `x`.
pub fn mfnn_lipschitz(b: f64, r: f64, l: f64, lambda: f64, m: f64) -> f64 {
    (b + r) * l * r + lambda + m * m * r * r
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_epsilon(epsilon: f64, gap0: f64) -> Result<f64> {
    let upper = 3.0 * gap0.min(1.0);
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(Error::Infeasible(format!(
            "epsilon must lie in (0, {upper}), got {epsilon}"
        )));
    }
    Ok((3.0 * gap0 / epsilon).ln())
}

/// Shared tail: horizon from the rate, lengthened until `η` clears the cap.
#[allow(clippy::too_many_arguments)]
fn finish(
    rate: f64,
    log_factor: f64,
    c_lsi: f64,
    sigma: f64,
    step_cap: f64,
    epsilon: f64,
    constants: PlannerConstants,
    inputs: PlanInputs,
) -> Result<SchedulePlan> {
    positive("c0", constants.c0)?;
    positive("multiplier", constants.multiplier)?;
    let budget = 8.0 * c_lsi * log_factor / (sigma * sigma);
    let raw = (constants.multiplier * rate * log_factor).ceil().max(1.0);
    // Smallest T with budget/T strictly below the cap.
    let capped = (budget / step_cap).floor() + 1.0;
    let steps_f = raw.max(capped);
    if !(steps_f.is_finite() && steps_f <= constants.max_steps as f64) {
        return Err(Error::Infeasible(format!(
            "the horizon {steps_f:.3e} exceeds the limit of {} steps",
            constants.max_steps
        )));
    }
    let steps = steps_f as usize;
    let eta = budget / steps as f64;
    Ok(SchedulePlan {
        eta,
        steps,
        epsilon,
        log_factor,
        rate_steps: raw as usize,
        step_cap,
        cap_margin: step_cap - eta,
        cap_binding: capped > raw,
        constants,
        inputs,
    })
}

/// Schedule for a pairwise functional with `L = L_V + L_W`:
/// `T ≳ max(C²d³L²/ε², C²d²L²/(σ²ε), C³L³/σ⁶)·log(3KL₀/ε)`,
/// `η = 8C·log(3KL₀/ε)/(σ²T)` and `η < c0·min(C/σ², σ⁴/(C²L³))`.
pub fn plan_schedule_pairwise(
    inputs: PairwisePlanInputs,
    epsilon: f64,
    constants: PlannerConstants,
) -> Result<SchedulePlan> {
    let PairwisePlanInputs {
        c_lsi,
        l_v,
        l_w,
        sigma,
        dim,
        kl0,
    } = inputs;
    for (name, v) in [("C_LSI", c_lsi), ("L_V + L_W", l_v + l_w), ("sigma", sigma), ("KL0", kl0)] {
        positive(name, v)?;
    }
    if l_v < 0.0 || l_w < 0.0 || dim == 0 {
        return Err(Error::Infeasible("smoothness constants and dimension must be positive".into()));
    }
    let log_factor = check_epsilon(epsilon, kl0)?;
    let (c, l, d, s2) = (c_lsi, l_v + l_w, dim as f64, sigma * sigma);
    let rate = [
        c * c * d.powi(3) * l * l / (epsilon * epsilon),
        c * c * d * d * l * l / (s2 * epsilon),
        c.powi(3) * l.powi(3) / s2.powi(3),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let cap = constants.c0 * (c / s2).min(s2 * s2 / (c * c * l.powi(3)));
    finish(rate, log_factor, c, sigma, cap, epsilon, constants, PlanInputs::Pairwise(inputs))
}

/// Schedule for the two-layer network:
/// `T ≳ max(C³d²L_u²M²R²(B+R)²/(σ⁴ε²), C²(σ²L_u²d + L_uM²R²(B+R)²)/(σ⁴ε), L_u³C³/σ⁶)·log(3E₀/ε)`,
/// `η = 8C·log(3E₀/ε)/(σ²T)` and `η < c0·min(C/σ², σ⁴/(C²L_u³))`.
pub fn plan_schedule_mfnn(inputs: MfnnPlanInputs, epsilon: f64, constants: PlannerConstants) -> Result<SchedulePlan> {
    let MfnnPlanInputs {
        c_lsi,
        l_u,
        sigma,
        dim,
        e0,
        m,
        r,
        b,
    } = inputs;
    for (name, v) in [("C_LSI", c_lsi), ("L_u", l_u), ("sigma", sigma), ("E0", e0), ("M", m), ("R", r), ("B", b)] {
        positive(name, v)?;
    }
    if dim == 0 {
        return Err(Error::Infeasible("dimension must be positive".into()));
    }
    let log_factor = check_epsilon(epsilon, e0)?;
    let (c, d, s2) = (c_lsi, dim as f64, sigma * sigma);
    let k = m * m * r * r * (b + r) * (b + r);
    let rate = [
        c.powi(3) * d * d * l_u * l_u * k / (s2 * s2 * epsilon * epsilon),
        c * c * (s2 * l_u * l_u * d + l_u * k) / (s2 * s2 * epsilon),
        l_u.powi(3) * c.powi(3) / s2.powi(3),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let cap = constants.c0 * (c / s2).min(s2 * s2 / (c * c * l_u.powi(3)));
    finish(rate, log_factor, c, sigma, cap, epsilon, constants, PlanInputs::Mfnn(inputs))
}
