//! Green's function of `u'''' = -y` under `u'(0) = u'(1) = u''(0) = 0`,
//! `u(0) = ∫ a u`, its envelopes and the cone constants.
//!
//! For `y >= 0` the solution is
//!
//! ```text
//! u(t) = ∫ [G(t, s) + W(s)] y(s) ds,   W(s) = 1/(1-α) ∫ a(τ) G(τ, s) dτ
//! ```
//!
//! with `G(t, s) = (t³(1-s)² - (t-s)³)/6` for `s <= t` and `t³(1-s)²/6`
//! otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::quadrature::Quadrature;

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { what, value })
    }
}

/// `G(t, s)` without range checks. At `t == s` the `s <= t` branch is used.
#[inline]
pub fn green_unchecked(t: f64, s: f64) -> f64 {
    let c = t * t * t * (1.0 - s) * (1.0 - s);
    if s <= t {
        let d = t - s;
        (c - d * d * d) / 6.0
    } else {
        c / 6.0
    }
}

pub fn green(t: f64, s: f64) -> Result<f64> {
    check_unit("t", t)?;
    check_unit("s", s)?;
    Ok(green_unchecked(t, s))
}

/// Lower envelope factor: `ρ(t) s(1-s)² <= G(t, s)`.
pub fn rho(t: f64) -> Result<f64> {
    check_unit("t", t)?;
    Ok(if t <= 0.5 {
        t * t * t / 6.0
    } else {
        t * t * (1.0 - t) / 6.0
    })
}

/// `s(1-s)²/6`, the `t`-uniform upper envelope of `G`.
#[inline]
pub fn upper_envelope(s: f64) -> f64 {
    s * (1.0 - s) * (1.0 - s) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    pub theta: f64,
    /// `∫₀¹ a`
    pub alpha: f64,
    /// `∫_θ^{1-θ} a`
    pub beta: f64,
    /// `θ³(1 - α + β)`
    pub gamma: f64,
}

impl ConeConstants {
    /// Measures α and β without enforcing `0 < α < 1` or `a >= 0`.
    pub fn measure(a: &Expression, theta: f64, q: &Quadrature) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidConfig(format!("theta = {theta} not in (0, 1/2)")));
        }
        let alpha = q.integrate(|t| a.eval(t))?;
        let beta = q.integrate_on(|t| a.eval(t), theta, 1.0 - theta)?;
        Ok(Self {
            theta,
            alpha,
            beta,
            gamma: theta.powi(3) * (1.0 - alpha + beta),
        })
    }

    /// The cone test `min_{[θ,1-θ]} u >= γ ‖u‖∞` on sampled values.
    pub fn contains(&self, nodes: &[f64], values: &[f64], slack: f64) -> bool {
        self.cone_margin(nodes, values) >= -slack
    }

    /// `min_{[θ,1-θ]} u - γ max u`; negative when the cone test fails.
    /// Returns `-inf` if any value is negative.
    pub fn cone_margin(&self, nodes: &[f64], values: &[f64]) -> f64 {
        if values.iter().any(|v| *v < 0.0) {
            return f64::NEG_INFINITY;
        }
        let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let inner = nodes
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= self.theta && **t <= 1.0 - self.theta)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        if inner.is_infinite() {
            return 0.0;
        }
        inner - self.gamma * norm
    }
}

/// Cone constants with the weight hypotheses enforced.
pub fn cone_constants(a: &Expression, theta: f64, q: &Quadrature) -> Result<ConeConstants> {
    for &t in q.nodes() {
        let value = a.eval(t)?;
        if value < 0.0 {
            return Err(Error::NegativeWeight { t, value });
        }
    }
    let c = ConeConstants::measure(a, theta, q)?;
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return Err(Error::HypothesisViolation(format!(
            "∫a = {} must lie in (0, 1)",
            c.alpha
        )));
    }
    Ok(c)
}

/// `1/(1-α) ∫ a(τ) G(τ, s) dτ`, splitting the integral at the kink `τ = s`.
pub fn kernel_weight(s: f64, a: &Expression, alpha: f64, q: &Quadrature) -> Result<f64> {
    check_unit("s", s)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::HypothesisViolation(format!("alpha = {alpha} not in [0, 1)")));
    }
    if a.is_constant() && a.eval(0.0)? == 0.0 {
        return Ok(0.0);
    }
    let integrand = |tau: f64| Ok(a.eval(tau)? * green_unchecked(tau, s));
    let left = q.integrate_on(integrand, 0.0, s)?;
    let right = q.integrate_on(integrand, s, 1.0)?;
    Ok((left + right) / (1.0 - alpha))
}

pub fn kernel_eval(t: f64, s: f64, a: &Expression, alpha: f64, q: &Quadrature) -> Result<f64> {
    Ok(green(t, s)? + kernel_weight(s, a, alpha, q)?)
}
