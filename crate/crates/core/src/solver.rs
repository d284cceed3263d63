//! Nyström discretisation of the Hammerstein operator
//!
//! ```text
//! (A u)(t) = ∫ [G(t, s) + W(s)] f(u(s)) ds
//! ```
//!
//! on the quadrature nodes, with damped Picard and Newton iterations for
//! its fixed points and residual diagnostics against the differential form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis::Problem;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::kernel::{green_unchecked, kernel_weight};
use crate::quadrature::{gauss_legendre, make_quadrature, Quadrature, Rule};

/// Sup norm above which an iteration is declared diverged.
pub const OVERFLOW_GUARD: f64 = 1e12;
pub const DEFAULT_POSITIVITY: f64 = 1e-6;
pub const DEFAULT_RESIDUAL_POINTS: usize = 401;
/// Absolute slack in the cone test of a computed solution.
pub const CONE_SLACK: f64 = 1e-10;

/// Gauss points per panel for the exact integrals in [`NystromOperator::resample`].
const FINE_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), values.len(), "nodes and values differ in length");
        Self { nodes, values }
    }

    pub fn constant(nodes: &[f64], c: f64) -> Self {
        Self::new(nodes.to_vec(), vec![c; nodes.len()])
    }

    pub fn from_fn(nodes: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self::new(nodes.to_vec(), nodes.iter().map(|t| f(*t)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn distance(&self, other: &DiscreteFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Picard,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max |δ⁴u/h⁴ + f(u)|` over interior grid points.
    pub ode_residual: f64,
    /// `|u'(0)|, |u'(1)|, |u''(0)|, |u(0) - ∫ a u|`.
    pub bc_residuals: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: DiscreteFunction,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// `‖u - Au‖∞` at the returned iterate.
    pub fp_residual: f64,
    pub ode_residual: f64,
    pub bc_residuals: [f64; 4],
    pub in_cone: bool,
    /// Converged with `‖u‖∞` at or above the positivity threshold.
    pub positive: bool,
    pub method: Method,
    /// Constant initial guess, when the run came from a multi-start ladder.
    pub start: Option<f64>,
    /// `‖u - Au‖∞` before each update.
    pub trace: Vec<f64>,
}

impl SolveReport {
    pub fn norm(&self) -> f64 {
        self.solution.sup_norm()
    }
}

/// Values of a continuous extension on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformProfile {
    pub values: Vec<f64>,
}

impl UniformProfile {
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: uniform_grid(m).into_iter().map(f).collect(),
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        uniform_grid(self.values.len())
    }
}

pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| if i + 1 == m { 1.0 } else { i as f64 / (m - 1) as f64 })
        .collect()
}

pub struct NystromOperator {
    quad: Quadrature,
    /// `K[i][j] = (G(t_i, s_j) + W(s_j)) w_j`
    kmatrix: DMatrix<f64>,
    /// `W(s_j)`
    weights: Vec<f64>,
    problem: Problem,
}

pub fn build_operator(p: &Problem, q: &Quadrature) -> Result<NystromOperator> {
    let nodes = q.nodes();
    let weights = nodes
        .iter()
        .map(|&s| kernel_weight(s, &p.a, p.cone.alpha, q))
        .collect::<Result<Vec<_>>>()?;
    let n = nodes.len();
    let kmatrix = DMatrix::from_fn(n, n, |i, j| {
        (green_unchecked(nodes[i], nodes[j]) + weights[j]) * q.weights()[j]
    });
    Ok(NystromOperator {
        quad: q.clone(),
        kmatrix,
        weights,
        problem: p.clone(),
    })
}

fn eval_all(f: &Expression, u: &[f64]) -> Result<Vec<f64>> {
    u.iter().map(|x| f.eval(*x)).collect()
}

/// Central difference with step `max(1e-6, 1e-6 |u|)`, one-sided when the
/// backward point leaves the domain of `f`.
fn derivative(f: &Expression, u: f64) -> Result<f64> {
    let h = (1e-6 * u.abs()).max(1e-6);
    let fwd = f.eval(u + h)?;
    match f.eval(u - h) {
        Ok(bwd) => Ok((fwd - bwd) / (2.0 * h)),
        Err(_) => Ok((fwd - f.eval(u)?) / h),
    }
}

impl NystromOperator {
    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn nodes(&self) -> &[f64] {
        self.quad.nodes()
    }

    pub fn kmatrix(&self) -> &DMatrix<f64> {
        &self.kmatrix
    }

    /// Cached `W(s_j)`.
    pub fn kernel_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    fn apply_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let y = DVector::from_vec(eval_all(&self.problem.f, u)?);
        Ok((&self.kmatrix * y).as_slice().to_vec())
    }

    pub fn apply(&self, u: &DiscreteFunction) -> Result<DiscreteFunction> {
        self.check_nodes(u)?;
        Ok(DiscreteFunction::new(
            self.nodes().to_vec(),
            self.apply_values(&u.values)?,
        ))
    }

    fn check_nodes(&self, u: &DiscreteFunction) -> Result<()> {
        if u.nodes.len() != self.nodes().len() {
            return Err(Error::InvalidConfig(format!(
                "function has {} nodes, operator has {}",
                u.nodes.len(),
                self.nodes().len()
            )));
        }
        Ok(())
    }

    /// Natural extension `Σ_j (G(t, s_j) + W(s_j)) w_j f(u_j)` at arbitrary `t`.
    pub fn interpolate(&self, u: &DiscreteFunction, ts: &[f64]) -> Result<Vec<f64>> {
        let y = eval_all(&self.problem.f, &u.values)?;
        let s = self.nodes();
        let w = self.quad.weights();
        Ok(ts
            .iter()
            .map(|&t| {
                (0..s.len())
                    .map(|j| (green_unchecked(t, s[j]) + self.weights[j]) * w[j] * y[j])
                    .sum()
            })
            .collect())
    }

    /// Index range of the nodes that belong to panel `k`.
    fn panel_nodes(&self, k: usize) -> std::ops::Range<usize> {
        match self.quad.rule() {
            Rule::CompositeGaussLegendre => {
                let p = self.quad.points_per_panel();
                k * p..(k + 1) * p
            }
            Rule::CompositeSimpson => 2 * k..2 * k + 3,
        }
    }

    /// Smooth extension of a grid function to a uniform grid of `m` points.
    ///
    /// The forcing `f(u_j)` is interpolated by one polynomial per panel and
    /// integrated exactly against the kernel, so the extension satisfies
    /// `u'''' = -ŷ` with `ŷ` the piecewise interpolant. This keeps the
    /// fourth differences meaningful; the bare natural extension has point
    /// masses at the nodes in its fourth derivative.
    pub fn resample(&self, u: &DiscreteFunction, m: usize) -> Result<UniformProfile> {
        self.check_nodes(u)?;
        let y = eval_all(&self.problem.f, &u.values)?;
        let forcing = PanelForcing::new(self, &y);
        let c0 = forcing.integrate(|s| kernel_weight(s, &self.problem.a, self.problem.cone.alpha, &self.quad))?;
        let moment = forcing.integrate(|s| Ok((1.0 - s) * (1.0 - s)))?;
        let values = uniform_grid(m)
            .into_iter()
            .map(|t| c0 + t * t * t * moment / 6.0 - forcing.cubic_history(t) / 6.0)
            .collect();
        Ok(UniformProfile { values })
    }

    /// Resamples `u` to `m` points and evaluates the differential residuals.
    pub fn diagnose(&self, u: &DiscreteFunction, m: usize) -> Result<ResidualReport> {
        let m = if m.is_multiple_of(2) { m + 1 } else { m };
        residuals(&self.resample(u, m)?, &self.problem)
    }

    fn report(
        &self,
        values: Vec<f64>,
        method: Method,
        iterations: usize,
        converged: bool,
        diverged: bool,
        trace: Vec<f64>,
    ) -> SolveReport {
        let solution = DiscreteFunction::new(self.nodes().to_vec(), values);
        let fp_residual = match self.apply_values(&solution.values) {
            Ok(au) => au
                .iter()
                .zip(&solution.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
            Err(_) => f64::INFINITY,
        };
        let finite = solution.values.iter().all(|v| v.is_finite());
        let diag = if finite && !diverged {
            self.diagnose(&solution, DEFAULT_RESIDUAL_POINTS).ok()
        } else {
            None
        };
        let (ode_residual, bc_residuals) = diag.map_or((f64::INFINITY, [f64::INFINITY; 4]), |d| {
            (d.ode_residual, d.bc_residuals)
        });
        let in_cone = finite && self.problem.cone.contains(self.nodes(), &solution.values, CONE_SLACK);
        SolveReport {
            converged,
            diverged,
            iterations,
            fp_residual,
            ode_residual,
            bc_residuals,
            in_cone,
            positive: converged && solution.sup_norm() >= DEFAULT_POSITIVITY,
            method,
            start: None,
            trace,
            solution,
        }
    }
}

/// Piecewise-polynomial forcing, one interpolant per panel.
struct PanelForcing {
    panels: usize,
    /// Per panel: interpolation nodes and values.
    pieces: Vec<(Vec<f64>, Vec<f64>)>,
    fine_x: Vec<f64>,
    fine_w: Vec<f64>,
}

impl PanelForcing {
    fn new(op: &NystromOperator, y: &[f64]) -> Self {
        let panels = op.quad.panels();
        let nodes = op.nodes();
        let pieces = (0..panels)
            .map(|k| {
                let r = op.panel_nodes(k);
                (nodes[r.clone()].to_vec(), y[r].to_vec())
            })
            .collect();
        let (fine_x, fine_w) = gauss_legendre(FINE_POINTS);
        Self {
            panels,
            pieces,
            fine_x,
            fine_w,
        }
    }

    fn eval(&self, k: usize, s: f64) -> f64 {
        let (xs, ys) = &self.pieces[k];
        let mut acc = 0.0;
        for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
            let mut l = 1.0;
            for (j, xj) in xs.iter().enumerate() {
                if i != j {
                    l *= (s - xj) / (xi - xj);
                }
            }
            acc += l * yi;
        }
        acc
    }

    fn panel_bounds(&self, k: usize) -> (f64, f64) {
        let h = 1.0 / self.panels as f64;
        (k as f64 * h, if k + 1 == self.panels { 1.0 } else { (k + 1) as f64 * h })
    }

    fn integrate_piece<G: FnMut(f64) -> Result<f64>>(&self, k: usize, lo: f64, hi: f64, mut g: G) -> Result<f64> {
        let half = (hi - lo) / 2.0;
        let mut acc = 0.0;
        for (x, w) in self.fine_x.iter().zip(&self.fine_w) {
            let s = lo + half * (x + 1.0);
            acc += w * g(s)? * self.eval(k, s);
        }
        Ok(half * acc)
    }

    /// `∫₀¹ g ŷ`
    fn integrate<G: FnMut(f64) -> Result<f64>>(&self, mut g: G) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..self.panels {
            let (lo, hi) = self.panel_bounds(k);
            acc += self.integrate_piece(k, lo, hi, &mut g)?;
        }
        Ok(acc)
    }

    /// `∫₀ᵗ (t - s)³ ŷ(s) ds`
    fn cubic_history(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.panels {
            let (lo, hi) = self.panel_bounds(k);
            if lo >= t {
                break;
            }
            let hi = hi.min(t);
            acc += self
                .integrate_piece(k, lo, hi, |s| Ok((t - s).powi(3)))
                .expect("infallible integrand");
        }
        acc
    }
}

/// Differential residuals of a uniformly sampled profile.
///
/// The interior residual uses the 5-point fourth difference; the derivative
/// conditions use 5-point one-sided differences (exact on quartics) and the
/// nonlocal condition uses composite Simpson on the grid.
pub fn residuals(profile: &UniformProfile, p: &Problem) -> Result<ResidualReport> {
    let u = &profile.values;
    let m = u.len();
    if m < 5 {
        return Err(Error::InvalidConfig(format!("need at least 5 grid points, got {m}")));
    }
    let h = profile.h();
    let h4 = h.powi(4);
    let mut ode: f64 = 0.0;
    for i in 2..m - 2 {
        let d4 = (u[i - 2] - 4.0 * u[i - 1] + 6.0 * u[i] - 4.0 * u[i + 1] + u[i + 2]) / h4;
        ode = ode.max((d4 + p.f.eval(u[i])?).abs());
    }
    let n = m - 1;
    let du0 = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h);
    let du1 = (25.0 * u[n] - 48.0 * u[n - 1] + 36.0 * u[n - 2] - 16.0 * u[n - 3] + 3.0 * u[n - 4])
        / (12.0 * h);
    let d2u0 = (35.0 * u[0] - 104.0 * u[1] + 114.0 * u[2] - 56.0 * u[3] + 11.0 * u[4]) / (12.0 * h * h);
    let nodes = profile.nodes();
    let mut au = Vec::with_capacity(m);
    for (t, v) in nodes.iter().zip(u) {
        au.push(p.a.eval(*t)? * v);
    }
    let integral = if m % 2 == 1 {
        let q = make_quadrature(Rule::CompositeSimpson, n / 2, 3)?;
        q.weights().iter().zip(&au).map(|(w, x)| w * x).sum::<f64>()
    } else {
        // trapezoid fallback for an even point count
        h * (au.iter().sum::<f64>() - 0.5 * (au[0] + au[n]))
    };
    Ok(ResidualReport {
        ode_residual: ode,
        bc_residuals: [du0.abs(), du1.abs(), d2u0.abs(), (u[0] - integral).abs()],
    })
}

pub fn picard(
    op: &NystromOperator,
    u0: &DiscreteFunction,
    omega: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::InvalidConfig(format!("omega = {omega} not in (0, 1]")));
    }
    op.check_nodes(u0)?;
    let mut u = u0.values.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    loop {
        let au = op.apply_values(&u)?;
        let r = au.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        trace.push(r);
        if r <= tol {
            converged = true;
            break;
        }
        if iterations == max_iter {
            break;
        }
        for (ui, ai) in u.iter_mut().zip(&au) {
            *ui = (1.0 - omega) * *ui + omega * ai;
        }
        iterations += 1;
        let norm = sup_norm(&u);
        if !norm.is_finite() || norm > OVERFLOW_GUARD {
            diverged = true;
            break;
        }
    }
    Ok(op.report(u, Method::Picard, iterations, converged, diverged, trace))
}

/// Newton on `F(u) = u - Au` with a halving line search on `‖F‖∞`.
pub fn newton(op: &NystromOperator, u0: &DiscreteFunction, tol: f64, max_iter: usize) -> Result<SolveReport> {
    op.check_nodes(u0)?;
    let n = op.nodes().len();
    let residual = |u: &[f64]| -> Result<Vec<f64>> {
        let au = op.apply_values(u)?;
        Ok(u.iter().zip(&au).map(|(a, b)| a - b).collect())
    };
    let mut u = u0.values.clone();
    let mut fu = residual(&u)?;
    let mut norm_f = sup_norm(&fu);
    let mut trace = vec![norm_f];
    let mut converged = norm_f <= tol;
    let mut diverged = false;
    let mut iterations = 0;
    while !converged && iterations < max_iter {
        let mut jac = op.kmatrix.clone();
        for j in 0..n {
            let d = derivative(&op.problem.f, u[j])?;
            jac.column_mut(j).scale_mut(-d);
        }
        for i in 0..n {
            jac[(i, i)] += 1.0;
        }
        let rhs = -DVector::from_column_slice(&fu);
        let step = jac.lu().solve(&rhs).ok_or(Error::SingularJacobian)?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian);
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a + lambda * s).collect();
            if let Ok(ft) = residual(&trial) {
                let nt = sup_norm(&ft);
                if nt < norm_f {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, ft, nt)) = accepted else {
            break;
        };
        u = trial;
        fu = ft;
        norm_f = nt;
        iterations += 1;
        trace.push(norm_f);
        converged = norm_f <= tol;
        let norm = sup_norm(&u);
        if !norm.is_finite() || norm > OVERFLOW_GUARD {
            diverged = true;
            break;
        }
    }
    Ok(op.report(u, Method::Newton, iterations, converged, diverged, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Auto,
    Picard,
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub strategy: Strategy,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: Vec<f64>,
    pub positivity: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            omega: 0.8,
            tol: 1e-10,
            max_iter: 500,
            starts: vec![0.1, 1.0, 10.0, 100.0],
            positivity: DEFAULT_POSITIVITY,
        }
    }
}

/// Outcome of one start in [`solve_auto`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub start: f64,
    pub method: Method,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub norm: f64,
    pub fp_residual: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoReport {
    pub report: SolveReport,
    pub attempts: Vec<Attempt>,
}

/// Multi-start search for a nontrivial fixed point.
pub fn solve_auto(op: &NystromOperator, config: &SolveConfig) -> AutoReport {
    let mut attempts = Vec::new();
    let mut fallback: Option<SolveReport> = None;
    let methods: &[Method] = match config.strategy {
        Strategy::Auto => &[Method::Picard, Method::Newton],
        Strategy::Picard => &[Method::Picard],
        Strategy::Newton => &[Method::Newton],
    };
    for &c in &config.starts {
        let u0 = DiscreteFunction::constant(op.nodes(), c);
        for &method in methods {
            let run = match method {
                Method::Picard => picard(op, &u0, config.omega, config.tol, config.max_iter),
                Method::Newton => newton(op, &u0, config.tol, config.max_iter),
            };
            match run {
                Ok(mut report) => {
                    report.start = Some(c);
                    report.positive = report.converged && report.norm() >= config.positivity;
                    attempts.push(Attempt {
                        start: c,
                        method,
                        converged: report.converged,
                        diverged: report.diverged,
                        iterations: report.iterations,
                        norm: report.norm(),
                        fp_residual: report.fp_residual,
                        error: None,
                    });
                    if report.positive {
                        return AutoReport { report, attempts };
                    }
                    let keep = match &fallback {
                        None => true,
                        Some(prev) => report.converged && !prev.converged,
                    };
                    if keep {
                        fallback = Some(report);
                    }
                }
                Err(err) => attempts.push(Attempt {
                    start: c,
                    method,
                    converged: false,
                    diverged: false,
                    iterations: 0,
                    norm: f64::NAN,
                    fp_residual: f64::NAN,
                    error: Some(err.to_string()),
                }),
            }
        }
    }
    let report = fallback.unwrap_or_else(|| {
        let zeros = vec![0.0; op.nodes().len()];
        op.report(zeros, methods[0], 0, false, false, Vec::new())
    });
    AutoReport { report, attempts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(f: &str, a: &str) -> NystromOperator {
        let q = Quadrature::default_rule();
        let p = Problem::parse(f, a, 0.25, &q).unwrap();
        build_operator(&p, &q).unwrap()
    }

    fn closed_form(t: f64) -> f64 {
        t.powi(3) / 18.0 - t.powi(4) / 24.0
    }

    #[test]
    fn degenerate_weight_gives_green_matrix() {
        let op = op("u", "0");
        let (s, w) = (op.nodes(), op.quadrature().weights());
        for i in 0..s.len() {
            for j in 0..s.len() {
                assert_eq!(op.kmatrix()[(i, j)], green_unchecked(s[i], s[j]) * w[j]);
            }
        }
        assert!(op.kmatrix().iter().all(|k| *k >= -1e-14));
    }

    #[test]
    fn last_column_vanishes() {
        let op = op("u^2*(exp(-u)+1)", "t^2");
        assert_eq!(op.kmatrix().shape(), (32, 32));
        let last = op.kmatrix().column(31).amax();
        // s_32 = 1 - 0.0087..., so the column is small but nonzero
        assert!(last < 1e-5, "{last}");
        assert!(op.kmatrix().iter().all(|k| *k >= -1e-14));
    }

    #[test]
    fn apply_constant_forcing() {
        // the kink at s = t is not resolved by the fixed node set
        let op = op("0*u+1", "0");
        let u = DiscreteFunction::constant(op.nodes(), 3.0);
        let v = op.apply(&u).unwrap();
        for (t, x) in v.nodes.iter().zip(&v.values) {
            assert!((x - closed_form(*t)).abs() < 1e-5, "{t} {x}");
        }
        let zero = op_zero();
        let v = zero.apply(&DiscreteFunction::constant(zero.nodes(), 5.0)).unwrap();
        assert!(v.values.iter().all(|x| *x == 0.0));
    }

    fn op_zero() -> NystromOperator {
        op("0*u", "t")
    }

    #[test]
    fn picard_trivial() {
        let op = op_zero();
        let r = picard(&op, &DiscreteFunction::constant(op.nodes(), 1.0), 1.0, 1e-10, 50).unwrap();
        assert!(r.converged && r.iterations <= 2);
        assert_eq!(r.norm(), 0.0);
        assert!(!r.positive);
    }

    #[test]
    fn picard_rejects_bad_omega() {
        let op = op_zero();
        let u0 = DiscreteFunction::constant(op.nodes(), 1.0);
        assert!(picard(&op, &u0, 0.0, 1e-10, 5).is_err());
        assert!(picard(&op, &u0, 1.5, 1e-10, 5).is_err());
    }

    #[test]
    fn picard_diverges_on_superlinear_from_above() {
        let op = op("u^2*(exp(-u)+1)", "t^2");
        let r = picard(&op, &DiscreteFunction::constant(op.nodes(), 1000.0), 1.0, 1e-10, 500).unwrap();
        assert!(r.diverged && !r.converged);
    }

    #[test]
    fn newton_affine_one_step() {
        let op = op("0*u+2", "t");
        let u0 = DiscreteFunction::constant(op.nodes(), 7.0);
        let r = newton(&op, &u0, 1e-12, 20).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        let expect = op.apply(&u0).unwrap();
        assert!(r.solution.distance(&expect) < 1e-15);
    }

    #[test]
    fn residuals_of_closed_form() {
        let q = Quadrature::default_rule();
        let p = Problem::parse("0*u+1", "0", 0.25, &q).unwrap();
        let profile = UniformProfile::from_fn(401, closed_form);
        let r = residuals(&profile, &p).unwrap();
        // rounding in the fourth difference at h = 1/400 is about 1e-6
        assert!(r.ode_residual <= 1e-5, "{}", r.ode_residual);
        assert!(r.bc_residuals.iter().all(|b| *b <= 1e-6), "{:?}", r.bc_residuals);

        let p = Problem::parse("u^2*(exp(-u)+1)", "t^2", 0.25, &q).unwrap();
        let r = residuals(&UniformProfile::from_fn(401, |_| 0.0), &p).unwrap();
        assert_eq!(r.ode_residual, 0.0);
        assert_eq!(r.bc_residuals, [0.0; 4]);
    }

    #[test]
    fn resample_reproduces_constant_forcing() {
        let op = op("0*u+1", "0");
        let u = DiscreteFunction::constant(op.nodes(), 0.0);
        let prof = op.resample(&u, 101).unwrap();
        for (t, v) in prof.nodes().iter().zip(&prof.values) {
            assert!((v - closed_form(*t)).abs() < 1e-14);
        }
    }

    #[test]
    fn auto_trivial() {
        let op = op_zero();
        let out = solve_auto(&op, &SolveConfig::default());
        assert!(out.report.converged && !out.report.positive);
        assert_eq!(out.attempts.len(), 8);
    }
}
