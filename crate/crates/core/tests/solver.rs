use bvp4::analysis::Problem;
use bvp4::quadrature::{make_quadrature, Rule};
use bvp4::solver::{build_operator, newton, picard, solve_auto, DiscreteFunction, NystromOperator, SolveConfig, Strategy};

const F42: &str = "sqrt(1+u)+sin(u)";

fn operator(f: &str, a: &str, panels: usize) -> NystromOperator {
    let q = make_quadrature(Rule::CompositeGaussLegendre, panels, 4).unwrap();
    let p = Problem::parse(f, a, 0.25, &q).unwrap();
    build_operator(&p, &q).unwrap()
}

/// Solution extended to a common uniform grid.
fn profile(panels: usize) -> Vec<f64> {
    let op = operator(F42, "t", panels);
    let r = solve_auto(&op, &SolveConfig::default()).report;
    assert!(r.positive);
    op.resample(&r.solution, 401).unwrap().values
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn grid_convergence_sublinear() {
    let (u8, u16, u32) = (profile(8), profile(16), profile(32));
    let (d1, d2) = (dist(&u8, &u16), dist(&u16, &u32));
    assert!(d1 / d2 >= 4.0, "{d1:e} {d2:e}");
}

#[test]
fn newton_agrees_with_picard() {
    let op = operator(F42, "t", 8);
    let u0 = DiscreteFunction::constant(op.nodes(), 1.0);
    let p = picard(&op, &u0, 0.8, 1e-12, 500).unwrap();
    let n = newton(&op, &u0, 1e-12, 50).unwrap();
    assert!(p.converged && n.converged);
    assert!(p.solution.distance(&n.solution) <= 1e-9);
    assert!(n.iterations < p.iterations);
}

#[test]
fn superlinear_needs_large_start() {
    let op = operator("u^2*(exp(-u)+1)", "t^2", 8);
    let auto = solve_auto(&op, &SolveConfig::default());
    assert!(auto.report.positive && auto.report.in_cone);
    assert_eq!(auto.report.start, Some(100.0));
    assert!((auto.report.norm() - 289.098).abs() < 1e-2);
    // smaller starts fall to the trivial solution or blow up
    assert!(auto.attempts.len() > 1);
    assert!(auto.attempts[..auto.attempts.len() - 1].iter().all(|a| !a.converged || a.norm < 1e-6));
}

#[test]
fn strategy_restricts_methods() {
    let op = operator(F42, "t", 8);
    let cfg = SolveConfig { strategy: Strategy::Newton, ..SolveConfig::default() };
    let auto = solve_auto(&op, &cfg);
    assert!(auto.attempts.iter().all(|a| a.method == bvp4::solver::Method::Newton));
    assert!(auto.report.positive);
}
