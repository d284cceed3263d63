//! Composite quadrature rules on [0, 1].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    CompositeSimpson,
    CompositeGaussLegendre,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::CompositeSimpson => "simpson",
            Rule::CompositeGaussLegendre => "gauss",
        })
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simpson" | "composite-simpson" => Ok(Rule::CompositeSimpson),
            "gauss" | "gauss-legendre" | "composite-gauss-legendre" => {
                Ok(Rule::CompositeGaussLegendre)
            }
            other => Err(Error::InvalidConfig(format!("unknown quadrature rule `{other}`"))),
        }
    }
}

/// Nodes and positive weights of a composite rule on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: Rule,
    panels: usize,
    points_per_panel: usize,
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

pub fn make_quadrature(rule: Rule, panels: usize, points_per_panel: usize) -> Result<Quadrature> {
    if panels == 0 {
        return Err(Error::InvalidConfig("panels must be at least 1".into()));
    }
    let h = 1.0 / panels as f64;
    let (nodes, weights) = match rule {
        Rule::CompositeSimpson => {
            if points_per_panel != 3 {
                return Err(Error::InvalidConfig(format!(
                    "Simpson's rule uses 3 points per panel, got {points_per_panel}"
                )));
            }
            let n = 2 * panels + 1;
            let step = h / 2.0;
            let nodes: Vec<f64> = (0..n)
                .map(|i| if i == n - 1 { 1.0 } else { i as f64 * step })
                .collect();
            let weights = (0..n)
                .map(|i| {
                    let c = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    c * h / 6.0
                })
                .collect();
            (nodes, weights)
        }
        Rule::CompositeGaussLegendre => {
            if !(2..=10).contains(&points_per_panel) {
                return Err(Error::InvalidConfig(format!(
                    "Gauss-Legendre needs 2..=10 points per panel, got {points_per_panel}"
                )));
            }
            let (x, w) = gauss_legendre(points_per_panel);
            let mut nodes = Vec::with_capacity(panels * points_per_panel);
            let mut weights = Vec::with_capacity(panels * points_per_panel);
            for k in 0..panels {
                let lo = k as f64 * h;
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push(lo + h * (xi + 1.0) / 2.0);
                    weights.push(h * wi / 2.0);
                }
            }
            (nodes, weights)
        }
    };
    Ok(Quadrature {
        nodes,
        weights,
        rule,
        panels,
        points_per_panel,
    })
}

impl Quadrature {
    /// Composite Gauss-Legendre, 8 panels of 4 points.
    pub fn default_rule() -> Self {
        make_quadrature(Rule::CompositeGaussLegendre, 8, 4).expect("valid default rule")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn points_per_panel(&self) -> usize {
        self.points_per_panel
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Panel index that owns node `j`; only meaningful for Gauss rules.
    pub fn panel_of(&self, j: usize) -> usize {
        j / self.points_per_panel
    }

    pub fn integrate<F>(&self, mut g: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(*x)?;
        }
        Ok(acc)
    }

    /// Integral over `[lo, hi]` through the affine image of the rule.
    pub fn integrate_on<F>(&self, mut g: F, lo: f64, hi: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        if lo == 0.0 && hi == 1.0 {
            return self.integrate(g);
        }
        let len = hi - lo;
        if len == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(lo + len * x)?;
        }
        Ok(len * acc)
    }

    /// Infallible variant of [`Quadrature::integrate`] for plain closures.
    pub fn sum<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * g(*x))
            .sum()
    }

    /// Infallible variant of [`Quadrature::integrate_on`]; `lo <= hi` is assumed.
    pub fn sum_on<F: FnMut(f64) -> f64>(&self, mut g: F, lo: f64, hi: f64) -> f64 {
        let len = hi - lo;
        if len == 0.0 {
            return 0.0;
        }
        len * self.sum(|x| g(lo + len * x))
    }
}

pub fn integrate<F>(g: F, q: &Quadrature) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    q.integrate(g)
}

pub fn integrate_on<F>(g: F, lo: f64, hi: f64, q: &Quadrature) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    q.integrate_on(g, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss8x4() -> Quadrature {
        make_quadrature(Rule::CompositeGaussLegendre, 8, 4).unwrap()
    }

    #[test]
    fn simpson_single_panel() {
        let q = make_quadrature(Rule::CompositeSimpson, 1, 3).unwrap();
        assert_eq!(q.nodes(), &[0.0, 0.5, 1.0]);
        let w = q.weights();
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-16);
        assert!((w[1] - 4.0 / 6.0).abs() < 1e-16);
        assert!((w[2] - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn two_point_gauss() {
        let q = make_quadrature(Rule::CompositeGaussLegendre, 1, 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((q.nodes()[0] - (1.0 - r) / 2.0).abs() < 1e-15);
        assert!((q.nodes()[1] - (1.0 + r) / 2.0).abs() < 1e-15);
        assert!((q.weights()[0] - 0.5).abs() < 1e-15);
        assert!((q.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        let q = gauss8x4();
        assert_eq!(q.len(), 32);
        let s: f64 = q.weights().iter().sum();
        assert!((s - 1.0).abs() <= 1e-15);
        for rule in [(Rule::CompositeSimpson, 3), (Rule::CompositeGaussLegendre, 7)] {
            for panels in [1, 3, 17] {
                let q = make_quadrature(rule.0, panels, rule.1).unwrap();
                let s: f64 = q.weights().iter().sum();
                assert!((s - 1.0).abs() <= 1e-14);
                assert!(q.weights().iter().all(|w| *w > 0.0));
                assert!(q.nodes().windows(2).all(|p| p[0] < p[1]));
                assert!(q.nodes().iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(make_quadrature(Rule::CompositeGaussLegendre, 0, 4).is_err());
        assert!(make_quadrature(Rule::CompositeGaussLegendre, 4, 1).is_err());
        assert!(make_quadrature(Rule::CompositeGaussLegendre, 4, 11).is_err());
        assert!(make_quadrature(Rule::CompositeSimpson, 4, 4).is_err());
        assert!("trapezoid".parse::<Rule>().is_err());
    }

    #[test]
    fn integrals() {
        let q = gauss8x4();
        let v = integrate(|s| Ok(s * s), &q).unwrap();
        assert!((v - 1.0 / 3.0).abs() <= 1e-12);
        let v = integrate(|_| Ok(1.0), &q).unwrap();
        assert!((v - 1.0).abs() <= 1e-15);
        let v = integrate(|s| Ok(s * (1.0 - s).powi(2)), &q).unwrap();
        assert!((v - 1.0 / 12.0).abs() <= 1e-12);
    }

    #[test]
    fn integrals_on_subinterval() {
        let q = gauss8x4();
        let v = integrate_on(|t| Ok(t * t), 0.25, 0.75, &q).unwrap();
        assert!((v - (0.75f64.powi(3) - 0.25f64.powi(3)) / 3.0).abs() <= 1e-12);
        assert!((v - 0.13541666666666666).abs() <= 1e-12);
        assert_eq!(integrate_on(|t| Ok(t.exp()), 0.3, 0.3, &q).unwrap(), 0.0);
        let v = integrate_on(|s| Ok(s * (1.0 - s).powi(2)), 0.25, 0.75, &q).unwrap();
        assert!((v - 0.057291666666666664).abs() <= 1e-12);
        assert!(matches!(
            integrate_on(|_| Ok(1.0), 0.6, 0.4, &q),
            Err(Error::InvalidRange { .. })
        ));
        let whole = integrate_on(|s| Ok(s.sin()), 0.0, 1.0, &q).unwrap();
        assert_eq!(whole, integrate(|s| Ok(s.sin()), &q).unwrap());
    }

    #[test]
    fn errors_propagate() {
        let q = gauss8x4();
        let r = integrate(|_| Err(Error::Domain("boom".into())), &q);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
