use qsp_core::families::{CantorSolution, M7Spec, MatrixFamily, ParamFn};
use qsp_core::kce::{
    kce_residual, marginal_kce_residual, square_worst_residual, verify_grid, TimeGrid,
};
use qsp_core::{BinaryOp, StochKind};

fn continuous() -> TimeGrid {
    TimeGrid::default_continuous()
}

fn ten_points() -> TimeGrid {
    TimeGrid::uniform(0.0, 4.5, 10).unwrap()
}

fn m2() -> MatrixFamily {
    MatrixFamily::M2 {
        h: CantorSolution::Ratio(ParamFn::pow_decay(3.0).discrete()),
    }
}

fn m4() -> MatrixFamily {
    MatrixFamily::M4 {
        psi: ParamFn::pow_decay(2.0).discrete(),
    }
}

fn m5() -> MatrixFamily {
    MatrixFamily::M5 {
        phi: ParamFn::exp_decay(0.7),
    }
}

fn worst(fam: &MatrixFamily, op: &BinaryOp, grid: &TimeGrid) -> f64 {
    grid.triples()
        .into_iter()
        .map(|(s, tau, t)| kce_residual(fam, op, s, tau, t).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn twelve_a_families_solve_the_equation() {
    let op = BinaryOp::modular(2);
    let m6 = MatrixFamily::m6(1.7).unwrap();
    for fam in [MatrixFamily::M3, m5(), m6] {
        let r = worst(&fam, &op, &continuous());
        assert!(r <= 1e-9, "{}: {r}", fam.id());
        let rep = verify_grid(&fam, &op, &continuous(), StochKind::S12, 1e-9).unwrap();
        assert!(rep.verdict, "{}", fam.id());
    }
    let rep = verify_grid(&m4(), &op, &TimeGrid::default_discrete(), StochKind::S12, 1e-9).unwrap();
    assert!(rep.verdict);
}

#[test]
fn m1_is_13_a() {
    let op = BinaryOp::modular(2);
    let rep = verify_grid(&MatrixFamily::M1, &op, &continuous(), StochKind::S13, 1e-9).unwrap();
    assert!(rep.verdict);
    assert_eq!(rep.worst_residual, 0.0);
}

#[test]
fn m2_fails_the_full_equation_but_is_stochastic() {
    let op = BinaryOp::modular(2);
    let rep = verify_grid(&m2(), &op, &TimeGrid::default_discrete(), StochKind::S13, 1e-9).unwrap();
    assert!(rep.stochasticity_ok());
    assert!(rep.domain_violations.is_empty());
    assert!(rep.worst_residual > 0.1);
    assert!(!rep.verdict);
}

#[test]
fn m2_entry_000_obeys_the_reduced_equation() {
    let fam = m2();
    let grid = TimeGrid::default_discrete();
    for (s, tau, t) in grid.triples() {
        let f = |a, b| fam.eval_cubic(a, b).unwrap().get(0, 0, 0);
        let rhs = 4.0 * f(s, tau) * f(tau, t) - f(tau, t) - f(s, tau) + 0.5;
        assert!((f(s, t) - rhs).abs() <= 1e-12);
        let h = |a, b| 4.0 * f(a, b) - 1.0;
        assert!((h(s, t) - h(s, tau) * h(tau, t)).abs() <= 1e-12);
    }
}

#[test]
fn m4_and_m5_reduced_equations() {
    let grid = TimeGrid::default_discrete();
    let fam = m4();
    for (s, tau, t) in grid.triples() {
        let g = |a, b| 4.0 * fam.eval_cubic(a, b).unwrap().get(1, 0, 1) - 1.0;
        assert!((g(s, t) - 0.5 * g(s, tau) * g(tau, t)).abs() <= 1e-12);
    }
    let fam = m5();
    for (s, tau, t) in continuous().triples() {
        // the (0,0,0) entry of the product under mod 2 reproduces g
        let prod = fam
            .eval_cubic(s, tau)
            .unwrap()
            .star(&fam.eval_cubic(tau, t).unwrap(), &BinaryOp::modular(2))
            .unwrap();
        let g = fam.eval_cubic(s, t).unwrap().get(0, 0, 0);
        assert!((prod.get(0, 0, 0) - g).abs() <= 1e-12);
    }
}

#[test]
fn m2_range_and_bound() {
    let fam = m2();
    for (s, t) in TimeGrid::default_discrete().pairs() {
        let p = fam.eval_cubic(s, t).unwrap();
        assert!(p.get(0, 0, 0) <= 1.0 / 3.0 + 1e-15);
        assert!(p.entries().iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

fn square_families() -> Vec<MatrixFamily> {
    vec![
        MatrixFamily::Q1 {
            g: ParamFn::expr("1/2 + cos(t)/4").unwrap(),
        },
        MatrixFamily::Q2 {
            psi: ParamFn::exp_decay(1.0),
        },
        MatrixFamily::q3(2.2).unwrap(),
        MatrixFamily::Q4 {
            psi: ParamFn::expr("1/(1+t)").unwrap(),
        },
        MatrixFamily::Q5 {
            f: ParamFn::expr("abs(sin(t))").unwrap(),
        },
        MatrixFamily::q6(3.0, 1.0, ParamFn::exp_decay(0.5)).unwrap(),
        MatrixFamily::q7(1.3, ParamFn::expr("exp(-t)").unwrap()).unwrap(),
        MatrixFamily::Rot,
        MatrixFamily::Zero,
        MatrixFamily::Cantor(CantorSolution::Zero),
        MatrixFamily::Cantor(CantorSolution::Ratio(ParamFn::exp_decay(1.0))),
        MatrixFamily::cantor_step(2.0).unwrap(),
    ]
}

#[test]
fn square_families_solve_the_square_equation() {
    for fam in square_families() {
        let (r, triple) = square_worst_residual(&fam, &ten_points()).unwrap();
        assert!(r <= 1e-12, "{}: {r} at {triple:?}", fam.id());
        let pairs = ten_points().pairs();
        if !matches!(fam, MatrixFamily::Zero) {
            assert!(fam.validate_domain(&pairs).is_empty(), "{}", fam.id());
        }
    }
}

#[test]
fn marginals_solve_the_square_equation() {
    let op = BinaryOp::modular(2);
    for fam in [MatrixFamily::M1, MatrixFamily::M3, m5(), MatrixFamily::m6(1.7).unwrap()] {
        for (s, tau, t) in continuous().triples() {
            let cubic = kce_residual(&fam, &op, s, tau, t).unwrap();
            let square = marginal_kce_residual(&fam, s, tau, t).unwrap();
            assert!(square <= cubic * 2.0 + 1e-12, "{}", fam.id());
        }
    }
}

fn half() -> MatrixFamily {
    MatrixFamily::Q5 {
        f: ParamFn::constant(0.5),
    }
}

#[test]
fn m7_specs_solve_the_max_equation() {
    let op = BinaryOp::max(2);
    let specs = [
        M7Spec::new(
            MatrixFamily::Q1 {
                g: ParamFn::constant(0.3),
            },
            MatrixFamily::Zero,
        )
        .unwrap(),
        M7Spec::new(half(), half()).unwrap(),
        M7Spec::new(
            MatrixFamily::Q2 {
                psi: ParamFn::exp_decay(1.0),
            },
            MatrixFamily::Zero,
        )
        .unwrap(),
    ];
    for spec in specs {
        let fam = MatrixFamily::M7(spec);
        let r = worst(&fam, &op, &continuous());
        assert!(r <= 1e-9, "{r}");
    }
}
