//! Finite-difference route to the same boundary value problem.
//!
//! Nothing here touches the Green's function: the linear problem
//! `u'''' = -y` is discretised on a uniform grid with the 5-point stencil,
//! second-order one-sided rows for `u'(0) = u'(1) = u''(0) = 0`, and a
//! dense trapezoid row for `u(0) = ∫ a u`. [`formula_solve_linear`] is the
//! integral-representation route it is compared against.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::kernel::{green_unchecked, kernel_weight};
use crate::quadrature::Quadrature;
use crate::solver::{sup_norm, uniform_grid, DiscreteFunction};

/// LU factors of a band matrix with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    /// Row `i` of U; entry `k` sits in column `i + k`.
    upper: Vec<Vec<f64>>,
    /// Multipliers of elimination step `k`.
    lower: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl BandLu {
    /// `rows[i][j]` holds the entry in column `i + j - kl`.
    pub fn factor(rows: &[Vec<f64>], kl: usize, ku: usize) -> Result<Self> {
        let n = rows.len();
        let mm = kl + ku + 1;
        let mut a: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                assert_eq!(r.len(), mm, "band row has the wrong width");
                r.clone()
            })
            .collect();
        // left-align the first kl rows, whose leading entries fall off the matrix
        let mut l = kl;
        for row in a.iter_mut().take(kl.min(n)) {
            row.rotate_left(l);
            for v in row.iter_mut().skip(mm - l) {
                *v = 0.0;
            }
            l -= 1;
        }
        let mut lower = vec![vec![0.0; kl]; n];
        let mut pivots = vec![0; n];
        let mut l = kl;
        for k in 0..n {
            if l < n {
                l += 1;
            }
            let mut piv = k;
            for j in k + 1..l {
                if a[j][0].abs() > a[piv][0].abs() {
                    piv = j;
                }
            }
            pivots[k] = piv;
            if a[piv][0] == 0.0 {
                return Err(Error::SingularSystem { row: k });
            }
            a.swap(k, piv);
            for i in k + 1..l {
                let m = a[i][0] / a[k][0];
                lower[k][i - k - 1] = m;
                for j in 1..mm {
                    a[i][j - 1] = a[i][j] - m * a[k][j];
                }
                a[i][mm - 1] = 0.0;
            }
        }
        Ok(Self {
            n,
            kl,
            upper: a,
            lower,
            pivots,
        })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mm = self.upper.first().map_or(1, Vec::len);
        let mut l = self.kl;
        for k in 0..n {
            b.swap(k, self.pivots[k]);
            if l < n {
                l += 1;
            }
            for j in k + 1..l {
                b[j] -= self.lower[k][j - k - 1] * b[k];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in 1..l {
                acc -= self.upper[i][k] * b[k + i];
            }
            b[i] = acc / self.upper[i][0];
            if l < mm {
                l += 1;
            }
        }
    }
}

/// Banded block plus one dense last row and one last column:
///
/// ```text
/// [ A  b ] [x]   [r]
/// [ cᵀ d ] [z] = [ρ]
/// ```
#[derive(Debug, Clone)]
pub struct BorderedBand {
    pub kl: usize,
    pub ku: usize,
    /// Rows of `A` in the layout expected by [`BandLu::factor`].
    pub band: Vec<Vec<f64>>,
    pub border_col: Vec<f64>,
    pub border_row: Vec<f64>,
    pub corner: f64,
}

impl BorderedBand {
    pub fn dim(&self) -> usize {
        self.band.len() + 1
    }

    /// Eliminates the border against the factored band.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let big_n = self.band.len();
        let lu = BandLu::factor(&self.band, self.kl, self.ku)?;
        let mut x1 = rhs[..big_n].to_vec();
        lu.solve(&mut x1);
        let mut x2 = self.border_col.clone();
        lu.solve(&mut x2);
        let dot = |v: &[f64]| self.border_row.iter().zip(v).map(|(c, x)| c * x).sum::<f64>();
        let schur = self.corner - dot(&x2);
        if schur == 0.0 || !schur.is_finite() {
            return Err(Error::SingularSystem { row: big_n });
        }
        let z = (rhs[big_n] - dot(&x1)) / schur;
        let mut out: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b * z).collect();
        out.push(z);
        Ok(out)
    }
}

/// The discretised linear problem on `n` uniform points.
#[derive(Debug, Clone)]
pub struct FdSystem {
    pub n: usize,
    pub h: f64,
    pub matrix: BorderedBand,
    pub rhs: Vec<f64>,
    /// Trapezoid weights times `a(t_i)`, the dense nonlocal row.
    pub nonlocal: Vec<f64>,
}

fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { h / 2.0 } else { h })
        .collect()
}

const STENCIL: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

impl FdSystem {
    /// Assembles the system for `u'''' + y = 0`; `extra_diag[i]` is added to
    /// interior row `i` after scaling by `h⁴` (Newton linearisations).
    pub fn assemble(y: &[f64], a: &Expression, extra_diag: Option<&[f64]>) -> Result<Self> {
        let n = y.len();
        if n < 21 {
            return Err(Error::InvalidConfig(format!("n = {n} must be at least 21")));
        }
        let h = 1.0 / (n - 1) as f64;
        let h4 = h.powi(4);
        let grid = uniform_grid(n);
        let tw = trapezoid_weights(n);
        let mut nonlocal = Vec::with_capacity(n);
        for (t, w) in grid.iter().zip(&tw) {
            nonlocal.push(w * a.eval(*t)?);
        }
        let big_n = n - 1;
        let (kl, ku) = (2, 2);
        let mut band = vec![vec![0.0; kl + ku + 1]; big_n];
        let mut border_col = vec![0.0; big_n];
        let mut set = |row: usize, col: usize, v: f64| {
            if col == big_n {
                border_col[row] = v;
            } else {
                band[row][col + kl - row] = v;
            }
        };
        // u'(0) = 0: (-3u0 + 4u1 - u2) / 2h
        set(0, 0, -3.0);
        set(0, 1, 4.0);
        set(0, 2, -1.0);
        // u''(0) = 0: (2u0 - 5u1 + 4u2 - u3) / h²
        set(1, 0, 2.0);
        set(1, 1, -5.0);
        set(1, 2, 4.0);
        set(1, 3, -1.0);
        let mut rhs = vec![0.0; n];
        for i in 2..=n - 3 {
            for (k, c) in STENCIL.iter().enumerate() {
                let mut v = *c;
                if k == 2 {
                    if let Some(d) = extra_diag {
                        v += h4 * d[i];
                    }
                }
                set(i, i + k - 2, v);
            }
            rhs[i] = -h4 * y[i];
        }
        // u'(1) = 0: (3u_{n-1} - 4u_{n-2} + u_{n-3}) / 2h
        set(n - 2, n - 3, 1.0);
        set(n - 2, n - 2, -4.0);
        set(n - 2, n - 1, 3.0);
        let mut border_row: Vec<f64> = nonlocal[..big_n].iter().map(|w| -w).collect();
        border_row[0] += 1.0;
        let corner = -nonlocal[big_n];
        Ok(Self {
            n,
            h,
            matrix: BorderedBand {
                kl,
                ku,
                band,
                border_col,
                border_row,
                corner,
            },
            rhs,
            nonlocal,
        })
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        self.matrix.solve(&self.rhs)
    }
}

/// `u(0) - Σ w_i a(t_i) u_i` with trapezoid weights.
pub fn nonlocal_defect(u: &[f64], a: &Expression) -> Result<f64> {
    let n = u.len();
    let grid = uniform_grid(n);
    let tw = trapezoid_weights(n);
    let mut acc = 0.0;
    for ((t, w), v) in grid.iter().zip(&tw).zip(u) {
        acc += w * a.eval(*t)? * v;
    }
    Ok(u[0] - acc)
}

pub fn fd_solve_linear(y: &dyn Fn(f64) -> f64, a: &Expression, n: usize) -> Result<DiscreteFunction> {
    let grid = uniform_grid(n.max(1));
    let forcing: Vec<f64> = grid.iter().map(|t| y(*t)).collect();
    let sys = FdSystem::assemble(&forcing, a, None)?;
    Ok(DiscreteFunction::new(grid, sys.solve()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdNonlinear {
    pub solution: DiscreteFunction,
    pub converged: bool,
    pub iterations: usize,
    /// `‖step‖∞` of the last Newton update.
    pub last_step: f64,
}

/// Step tolerance for FD Newton, relative to `max(1, ‖u‖∞)`.
pub const FD_NEWTON_TOL: f64 = 1e-10;
pub const FD_NEWTON_MAX: usize = 100;
/// Relative step below which a non-contracting iteration counts as converged.
pub const FD_NEWTON_FLOOR: f64 = 1e-7;

fn fd_derivative(f: &Expression, u: f64) -> Result<f64> {
    let h = (1e-6 * u.abs()).max(1e-6);
    let fwd = f.eval(u + h)?;
    match f.eval(u - h) {
        Ok(bwd) => Ok((fwd - bwd) / (2.0 * h)),
        Err(_) => Ok((fwd - f.eval(u)?) / h),
    }
}

/// Newton on the finite-difference system with `y = f(u)`, starting from
/// `u0` on an `n`-point uniform grid.
pub fn fd_solve_nonlinear(
    f: &Expression,
    a: &Expression,
    n: usize,
    u0: &DiscreteFunction,
) -> Result<FdNonlinear> {
    if u0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "initial guess has {} points, expected {n}",
            u0.len()
        )));
    }
    let mut u = u0.values.clone();
    let mut last_step = f64::INFINITY;
    let mut prev_step = f64::INFINITY;
    for it in 1..=FD_NEWTON_MAX {
        let fu: Vec<f64> = u.iter().map(|x| f.eval(*x)).collect::<Result<_>>()?;
        let dfu: Vec<f64> = u.iter().map(|x| fd_derivative(f, *x)).collect::<Result<_>>()?;
        // linearise f(u + δ) ≈ f(u) + f'(u) δ and solve for the next iterate
        let forcing: Vec<f64> = fu.iter().zip(&dfu).zip(&u).map(|((y, d), x)| y - d * x).collect();
        let sys = FdSystem::assemble(&forcing, a, Some(&dfu))?;
        let next = sys.solve()?;
        last_step = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u = next;
        if !last_step.is_finite() {
            break;
        }
        let scale = sup_norm(&u).max(1.0);
        // the system's condition grows like n⁴; once the step stops
        // contracting near the rounding floor, further iterations only wander
        let stalled = last_step <= FD_NEWTON_FLOOR * scale && last_step > 0.5 * prev_step;
        prev_step = last_step;
        if last_step <= FD_NEWTON_TOL * scale || stalled {
            return Ok(FdNonlinear {
                solution: DiscreteFunction::new(u0.nodes.clone(), u),
                converged: true,
                iterations: it,
                last_step,
            });
        }
    }
    Ok(FdNonlinear {
        solution: DiscreteFunction::new(u0.nodes.clone(), u),
        converged: false,
        iterations: FD_NEWTON_MAX,
        last_step,
    })
}

/// `u(t) = ∫ [G(t, s) + W(s)] y(s) ds` at each evaluation node, with the
/// `G` part split at `s = t`.
pub fn formula_solve_linear(
    y: &dyn Fn(f64) -> f64,
    a: &Expression,
    q: &Quadrature,
    eval_nodes: &[f64],
) -> Result<DiscreteFunction> {
    let alpha = q.integrate(|t| a.eval(t))?;
    let mut weight_part = 0.0;
    for (s, w) in q.nodes().iter().zip(q.weights()) {
        weight_part += w * kernel_weight(*s, a, alpha, q)? * y(*s);
    }
    let values = eval_nodes
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::OutOfDomain { what: "t", value: t });
            }
            let g = |s: f64| green_unchecked(t, s) * y(s);
            Ok(q.sum_on(g, 0.0, t) + q.sum_on(g, t, 1.0) + weight_part)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteFunction::new(eval_nodes.to_vec(), values))
}

/// Order of convergence from two errors at step sizes `h` and `h/2`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Sup-norm gap between the two routes on an `n`-point grid.
pub fn path_gap(y: &dyn Fn(f64) -> f64, a: &Expression, q: &Quadrature, n: usize) -> Result<f64> {
    let fd = fd_solve_linear(y, a, n)?;
    let formula = formula_solve_linear(y, a, q, &fd.nodes)?;
    Ok(sup_norm(
        &fd.values
            .iter()
            .zip(&formula.values)
            .map(|(x, z)| x - z)
            .collect::<Vec<_>>(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(t: f64) -> f64 {
        t.powi(3) / 18.0 - t.powi(4) / 24.0
    }

    fn t_expr(text: &str) -> Expression {
        Expression::parse(text, "t").unwrap()
    }

    #[test]
    fn band_lu_matches_dense() {
        // pentadiagonal with a weak diagonal forces pivoting
        let n = 9;
        let dense = |i: usize, j: usize| -> f64 {
            let d = j as i64 - i as i64;
            match d {
                0 => 0.1 + i as f64 * 0.01,
                -2..=2 => 1.0 + (i + 2 * j) as f64 * 0.1,
                _ => 0.0,
            }
        };
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..5)
                    .map(|k| {
                        let j = i as i64 + k as i64 - 2;
                        if (0..n as i64).contains(&j) {
                            dense(i, j as usize)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 2.0).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense(i, j) * x[j]).sum()).collect();
        BandLu::factor(&rows, 2, 2).unwrap().solve(&mut b);
        for (got, want) in b.iter().zip(&x) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let rows = vec![vec![0.0, 0.0, 0.0]; 3];
        assert!(matches!(BandLu::factor(&rows, 1, 1), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn zero_forcing() {
        let u = fd_solve_linear(&|_| 0.0, &t_expr("t^2"), 101).unwrap();
        assert!(u.sup_norm() <= 1e-12);
        let q = Quadrature::default_rule();
        let u = formula_solve_linear(&|_| 0.0, &t_expr("t"), &q, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(u.sup_norm(), 0.0);
    }

    #[test]
    fn constant_forcing_closed_form() {
        let u = fd_solve_linear(&|_| 1.0, &t_expr("0"), 401).unwrap();
        for (t, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - closed_form(*t)).abs() <= 1e-5);
        }
        let q = Quadrature::default_rule();
        let nodes = uniform_grid(101);
        let u = formula_solve_linear(&|_| 1.0, &t_expr("0"), &q, &nodes).unwrap();
        for (t, v) in u.nodes.iter().zip(&u.values) {
            assert!((v - closed_form(*t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn nonlocal_row_is_exact() {
        for a in ["t", "t^2", "0.5"] {
            let a = t_expr(a);
            let u = fd_solve_linear(&|s| 1.0 + s * s, &a, 201).unwrap();
            assert!(nonlocal_defect(&u.values, &a).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn second_order_convergence() {
        let q = Quadrature::default_rule();
        let a = t_expr("t^2");
        let y = |s: f64| s * (1.0 - s);
        let e1 = path_gap(&y, &a, &q, 201).unwrap();
        let e2 = path_gap(&y, &a, &q, 401).unwrap();
        let order = observed_order(e1, e2);
        assert!((1.9..2.2).contains(&order), "order {order}, errors {e1} {e2}");
    }

    #[test]
    fn nonlinear_reduces_to_linear() {
        let f = Expression::parse("0*u+1", "u").unwrap();
        let n = 401;
        let u0 = DiscreteFunction::constant(&uniform_grid(n), 0.0);
        let r = fd_solve_nonlinear(&f, &t_expr("0"), n, &u0).unwrap();
        assert!(r.converged);
        for (t, v) in r.solution.nodes.iter().zip(&r.solution.values) {
            assert!((v - closed_form(*t)).abs() <= 1e-5);
        }
        let zero = Expression::parse("0*u", "u").unwrap();
        let r = fd_solve_nonlinear(&zero, &t_expr("t"), n, &u0).unwrap();
        assert!(r.converged && r.solution.sup_norm() == 0.0);
    }

    #[test]
    fn small_grids_rejected() {
        assert!(fd_solve_linear(&|_| 1.0, &t_expr("t"), 11).is_err());
    }
}
