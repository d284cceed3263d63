use bvp4::analysis::Problem;
use bvp4::expr::Expression;
use bvp4::kernel::{green, rho, upper_envelope};
use bvp4::quadrature::{make_quadrature, Quadrature, Rule};
use bvp4::solver::{build_operator, DiscreteFunction, NystromOperator};
use proptest::prelude::*;

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("u".to_string()),
        (0.0f64..20.0).prop_map(|x| format!("{x}")),
        (1u32..9).prop_map(|k| k.to_string()),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a}){op}({b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (prop::sample::select(vec!["exp", "sin", "cos", "sqrt", "log", "abs"]), inner)
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

fn op41() -> NystromOperator {
    let q = Quadrature::default_rule();
    let p = Problem::parse("u^2*(exp(-u)+1)", "t^2", 0.25, &q).unwrap();
    build_operator(&p, &q).unwrap()
}

proptest! {
    #[test]
    fn print_parse_round_trip(text in expr_text(), u in -5.0f64..50.0) {
        let e = Expression::parse(&text, "u").unwrap();
        let printed = e.to_string();
        let back = Expression::parse(&printed, "u").unwrap();
        prop_assert_eq!(back.to_string(), printed);
        match (e.eval(u), back.eval(u)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn gauss_is_exact_for_polynomials(
        panels in 1usize..12,
        points in 2usize..=10,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..20),
    ) {
        let q = make_quadrature(Rule::CompositeGaussLegendre, panels, points).unwrap();
        let c = &coeffs[..coeffs.len().min(2 * points)];
        let approx = q.sum(|x| c.iter().rev().fold(0.0, |acc, k| acc * x + k));
        let exact: f64 = c.iter().enumerate().map(|(k, ck)| ck / (k + 1) as f64).sum();
        prop_assert!((approx - exact).abs() <= 1e-13, "{} vs {}", approx, exact);
    }

    #[test]
    fn simpson_is_exact_for_cubics(panels in 1usize..40, c in prop::array::uniform4(-1.0f64..1.0)) {
        let q = make_quadrature(Rule::CompositeSimpson, panels, 3).unwrap();
        let approx = q.sum(|x| c[0] + x * (c[1] + x * (c[2] + x * c[3])));
        let exact = c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0;
        prop_assert!((approx - exact).abs() <= 1e-14);
    }

    #[test]
    fn green_within_envelopes(t in 0.0f64..=1.0, s in 0.0f64..=1.0) {
        let g = green(t, s).unwrap();
        let env = s * (1.0 - s) * (1.0 - s);
        prop_assert!(g >= -1e-15);
        prop_assert!(rho(t).unwrap() * env - 1e-14 <= g);
        prop_assert!(g <= upper_envelope(s) + 1e-14);
    }

    #[test]
    fn operator_preserves_cone(values in prop::collection::vec(0.0f64..50.0, 32)) {
        let op = op41();
        let v = op.apply(&DiscreteFunction::new(op.nodes().to_vec(), values)).unwrap();
        let cone = op.problem().cone;
        prop_assert!(cone.cone_margin(&v.nodes, &v.values) >= -1e-10);
    }

    #[test]
    fn operator_is_monotone(
        base in prop::collection::vec(0.0f64..20.0, 32),
        bump in prop::collection::vec(0.0f64..5.0, 32),
    ) {
        // f is nondecreasing on [0, ∞) and the kernel is nonnegative
        let op = op41();
        let nodes = op.nodes().to_vec();
        let upper: Vec<f64> = base.iter().zip(&bump).map(|(x, d)| x + d).collect();
        let lo = op.apply(&DiscreteFunction::new(nodes.clone(), base)).unwrap();
        let hi = op.apply(&DiscreteFunction::new(nodes, upper)).unwrap();
        for (x, y) in lo.values.iter().zip(&hi.values) {
            prop_assert!(x <= y);
        }
    }
}
