//! Hypothesis checks, growth limits of `f(u)/u` and existence constants.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expr::Expression;
use crate::kernel::ConeConstants;
use crate::quadrature::Quadrature;

/// Ratios above this on the ladder, reached monotonically, count as divergence.
pub const DIVERGENCE_CUTOFF: f64 = 1e6;
/// Relative spread of the ladder tail below which the limit is taken as settled.
pub const STABILIZATION_SPREAD: f64 = 1e-3;
/// An extrapolated limit below this fraction of the observed ratios is zero.
pub const ZERO_FRACTION: f64 = 1e-3;

pub const DEFAULT_U_MAX: f64 = 1e3;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// A user-declared or estimated limit of `f(u)/u`.
///
/// Serialised as a number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Infinite,
}

impl Serialize for Limit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Limit::Finite(v) => s.serialize_f64(*v),
            Limit::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) if v.is_finite() && v >= 0.0 => Ok(Limit::Finite(v)),
            Raw::Number(v) => Err(serde::de::Error::custom(format!("invalid limit {v}"))),
            Raw::Text(t) => Limit::parse(&t)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid limit {t:?}"))),
        }
    }
}

impl Limit {
    /// `"inf"`/`"infinity"` or a nonnegative number.
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "divergent" => Some(Limit::Infinite),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(Limit::Finite),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub f: Expression,
    pub a: Expression,
    pub theta: f64,
    pub cone: ConeConstants,
    /// Declared limits override the numerical estimates in [`certificate`].
    pub declared_f0: Option<Limit>,
    pub declared_finf: Option<Limit>,
}

impl Problem {
    /// Builds a problem and measures its cone constants. The hypotheses are
    /// not enforced here; see [`validate_hypotheses`].
    pub fn new(f: Expression, a: Expression, theta: f64, q: &Quadrature) -> Result<Self> {
        let cone = ConeConstants::measure(&a, theta, q)?;
        Ok(Self {
            f,
            a,
            theta,
            cone,
            declared_f0: None,
            declared_finf: None,
        })
    }

    pub fn parse(f_text: &str, a_text: &str, theta: f64, q: &Quadrature) -> Result<Self> {
        let f = Expression::parse(f_text, "u")?;
        let a = Expression::parse(a_text, "t")?;
        Self::new(f, a, theta, q)
    }

    pub fn alpha(&self) -> f64 {
        self.cone.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// `f` continuous and nonnegative on `[0, ∞)`.
    H1,
    /// `a` continuous and nonnegative with `0 < ∫a < 1`.
    H2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    pub message: String,
    /// First sample point where it was seen (`u` for H1, `t` for H2).
    pub at: Option<f64>,
    /// Number of offending samples.
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sample_sign(
    e: &Expression,
    points: impl Iterator<Item = f64>,
    hypothesis: Hypothesis,
    name: &str,
    out: &mut Vec<Violation>,
) {
    let mut negative: Option<Violation> = None;
    let mut undefined: Option<Violation> = None;
    for x in points {
        match e.eval(x) {
            Ok(v) if v < 0.0 => {
                let entry = negative.get_or_insert_with(|| Violation {
                    hypothesis,
                    message: format!("{name}({x}) = {v} is negative"),
                    at: Some(x),
                    count: 0,
                });
                entry.count += 1;
            }
            Ok(_) => {}
            Err(err) => {
                let entry = undefined.get_or_insert_with(|| Violation {
                    hypothesis,
                    message: format!("{name}({x}) is undefined: {err}"),
                    at: Some(x),
                    count: 0,
                });
                entry.count += 1;
            }
        }
    }
    out.extend(negative);
    out.extend(undefined);
}

/// Samples `f` on `[0, u_max]` and `a` on `[0, 1]` at `n_samples` uniform
/// points each, and checks `0 < α < 1`.
pub fn validate_hypotheses(p: &Problem, u_max: f64, n_samples: usize) -> ValidationReport {
    let n = n_samples.max(2);
    let mut violations = Vec::new();
    let f_points = (0..n).map(|i| u_max * i as f64 / (n - 1) as f64);
    sample_sign(&p.f, f_points, Hypothesis::H1, "f", &mut violations);
    let a_points = (0..n).map(|i| i as f64 / (n - 1) as f64);
    sample_sign(&p.a, a_points, Hypothesis::H2, "a", &mut violations);
    let alpha = p.cone.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        violations.push(Violation {
            hypothesis: Hypothesis::H2,
            message: format!("∫a = {alpha} is not in (0, 1)"),
            at: None,
            count: 1,
        });
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthKind {
    Finite,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub kind: GrowthKind,
    pub value: Option<f64>,
    /// `false` when the ladder tail neither settled nor diverged; `value`
    /// is then only the last ratio.
    pub stabilized: bool,
    /// `(u, f(u)/u)` along the ladder.
    pub samples: Vec<(f64, f64)>,
}

impl GrowthEstimate {
    pub fn limit(&self) -> Option<Limit> {
        match (self.kind, self.stabilized, self.value) {
            (GrowthKind::Divergent, _, _) => Some(Limit::Infinite),
            (GrowthKind::Finite, true, Some(v)) => Some(Limit::Finite(v)),
            _ => None,
        }
    }

    /// Whether the limit is zero relative to the ratios actually observed.
    pub fn is_zero(&self) -> bool {
        if self.kind != GrowthKind::Finite || !self.stabilized {
            return false;
        }
        let tail = self.tail_scale();
        self.value.is_some_and(|v| v <= ZERO_FRACTION * tail)
    }

    fn tail_scale(&self) -> f64 {
        self.samples
            .iter()
            .rev()
            .take(3)
            .fold(0.0f64, |m, (_, r)| m.max(r.abs()))
    }
}

/// Aitken extrapolation of the last three entries.
fn aitken(r1: f64, r2: f64, r3: f64) -> Option<f64> {
    let (d1, d2) = (r2 - r1, r3 - r2);
    let denom = d2 - d1;
    if d1 * d2 > 0.0 && d2.abs() < d1.abs() && denom != 0.0 {
        Some(r3 - d2 * d2 / denom)
    } else {
        None
    }
}

fn estimate_on_ladder(f: &Expression, ladder: &[f64]) -> Result<GrowthEstimate> {
    let mut samples = Vec::with_capacity(ladder.len());
    for &u in ladder {
        samples.push((u, f.eval(u)? / u));
    }
    let r: Vec<f64> = samples.iter().map(|(_, r)| *r).collect();
    let n = r.len();
    let increasing = r[n.saturating_sub(4)..].windows(2).all(|w| w[0] < w[1]);
    if increasing && r[n - 1] > DIVERGENCE_CUTOFF {
        return Ok(GrowthEstimate {
            kind: GrowthKind::Divergent,
            value: None,
            stabilized: true,
            samples,
        });
    }
    let (r1, r2, r3) = (r[n - 3], r[n - 2], r[n - 1]);
    let scale = r1.abs().max(r2.abs()).max(r3.abs());
    let spread = r1.max(r2).max(r3) - r1.min(r2).min(r3);
    let (d1, d2) = (r2 - r1, r3 - r2);
    let (value, stabilized) = if scale == 0.0 {
        (0.0, true)
    } else if spread < STABILIZATION_SPREAD * scale {
        (aitken(r1, r2, r3).unwrap_or(r3), true)
    } else if d1 * d2 > 0.0 && d2.abs() <= 0.5 * d1.abs() {
        // increments shrink geometrically; extrapolate
        (aitken(r1, r2, r3).unwrap_or(r3), true)
    } else {
        (r3, false)
    };
    Ok(GrowthEstimate {
        kind: GrowthKind::Finite,
        value: Some(value.max(0.0)),
        stabilized,
        samples,
    })
}

/// `lim_{u→0+} f(u)/u` on the ladder `u = 10⁻¹, …, 10⁻⁸`.
pub fn estimate_f0(f: &Expression) -> Result<GrowthEstimate> {
    let ladder: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
    estimate_on_ladder(f, &ladder)
}

/// `lim_{u→∞} f(u)/u` on the ladder `u = 10¹, …, 10⁸`.
pub fn estimate_finf(f: &Expression) -> Result<GrowthEstimate> {
    let ladder: Vec<f64> = (1..=8).map(|k| 10f64.powi(k)).collect();
    estimate_on_ladder(f, &ladder)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Superlinear,
    Sublinear,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Largest `ε` with `ε / (6(1-α)) <= 1`.
    pub epsilon_max: f64,
    /// Smallest `δ` (equivalently `λ`) making the lower shell estimate `>= 1`.
    pub delta_min: f64,
    pub classification: Classification,
    pub f0: Option<Limit>,
    pub finf: Option<Limit>,
}

/// `(θ⁶/36) (1-α+β)²/(1-α) (1-2θ)(½+θ-θ²)`, the factor multiplying `δ`.
pub fn lower_shell_factor(c: &ConeConstants) -> f64 {
    let th = c.theta;
    th.powi(6) / 36.0 * (1.0 - c.alpha + c.beta).powi(2) / (1.0 - c.alpha)
        * (1.0 - 2.0 * th)
        * (0.5 + th - th * th)
}

fn classify(f0: Option<Limit>, finf: Option<Limit>, f0_zero: bool, finf_zero: bool) -> Classification {
    match (f0, finf) {
        (Some(Limit::Finite(_)), Some(Limit::Infinite)) if f0_zero => Classification::Superlinear,
        (Some(Limit::Infinite), Some(Limit::Finite(_))) if finf_zero => Classification::Sublinear,
        _ => Classification::Indeterminate,
    }
}

/// Estimated (or declared) limits, classification and shell thresholds.
pub fn certificate(p: &Problem) -> Result<Certificate> {
    let (f0, f0_zero) = match p.declared_f0 {
        Some(l) => (Some(l), l == Limit::Finite(0.0)),
        None => {
            let e = estimate_f0(&p.f)?;
            (e.limit(), e.is_zero())
        }
    };
    let (finf, finf_zero) = match p.declared_finf {
        Some(l) => (Some(l), l == Limit::Finite(0.0)),
        None => {
            let e = estimate_finf(&p.f)?;
            (e.limit(), e.is_zero())
        }
    };
    // report the snapped value when the estimate is zero relative to the tail
    let snap = |l: Option<Limit>, zero: bool| if zero { Some(Limit::Finite(0.0)) } else { l };
    Ok(Certificate {
        epsilon_max: 6.0 * (1.0 - p.cone.alpha),
        delta_min: 1.0 / lower_shell_factor(&p.cone),
        classification: classify(f0, finf, f0_zero, finf_zero),
        f0: snap(f0, f0_zero),
        finf: snap(finf, finf_zero),
    })
}
