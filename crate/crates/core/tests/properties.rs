use proptest::prelude::*;
use qsp_core::stochasticity::{check_kind, sample, square_class};
use qsp_core::{BinaryOp, CubicMatrix, SquareMatrix, StochKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cubic(m: usize) -> impl Strategy<Value = CubicMatrix> {
    prop::collection::vec(-1.0..1.0f64, m * m * m).prop_map(move |d| CubicMatrix::new(m, d).unwrap())
}

fn pair() -> impl Strategy<Value = (CubicMatrix, CubicMatrix)> {
    (1usize..=4).prop_flat_map(|m| (cubic(m), cubic(m)))
}

fn triple() -> impl Strategy<Value = (CubicMatrix, CubicMatrix, CubicMatrix)> {
    (1usize..=4).prop_flat_map(|m| (cubic(m), cubic(m), cubic(m)))
}

fn ops(m: usize) -> Vec<BinaryOp> {
    vec![BinaryOp::modular(m), BinaryOp::max(m)]
}

fn sampled(kind: StochKind, m: usize, seed: u64) -> CubicMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(kind, m, &mut || rng.gen())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn products_are_associative((a, b, c) in triple()) {
        let m = a.m();
        for op in ops(m) {
            let left = a.star(&b, &op).unwrap().star(&c, &op).unwrap();
            let right = a.star(&b.star(&c, &op).unwrap(), &op).unwrap();
            prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
        }
        let left = a.star0(&b).unwrap().star0(&c).unwrap();
        let right = a.star0(&b.star0(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn products_are_bilinear((a, b, c) in triple(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let op = BinaryOp::modular(a.m());
        let combo = &(x * &a) + &(y * &b);
        let lhs = combo.star(&c, &op).unwrap();
        let rhs = &(x * &a.star(&c, &op).unwrap()) + &(y * &b.star(&c, &op).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        let lhs = c.star(&combo, &op).unwrap();
        let rhs = &(x * &c.star(&a, &op).unwrap()) + &(y * &c.star(&b, &op).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn marginal_is_multiplicative((a, b) in pair()) {
        for op in ops(a.m()) {
            let lhs = a.star(&b, &op).unwrap().marginal_q();
            let rhs = a.marginal_q().matmul(&b.marginal_q()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12, "{}", op.name());
        }
    }

    #[test]
    fn pair_kinds_match_marginal_classes(m in 1usize..=4, seed in any::<u64>()) {
        let a = sampled(StochKind::S12, m, seed);
        prop_assert!(square_class(&a.marginal_q(), 1e-12).left);
        let a = sampled(StochKind::S23, m, seed);
        prop_assert!(square_class(&a.marginal_q(), 1e-12).right);
        let a = sampled(StochKind::S13, m, seed);
        prop_assert!((a.marginal_q().total() - m as f64).abs() <= 1e-12);
        let a = sampled(StochKind::S1, m, seed);
        prop_assert!(a.marginal_q().col_sums().iter().all(|s| (s - m as f64).abs() <= 1e-12));
        let a = sampled(StochKind::S3, m, seed);
        prop_assert!(a.marginal_q().row_sums().iter().all(|s| (s - m as f64).abs() <= 1e-12));
        let a = sampled(StochKind::S2, m, seed);
        prop_assert!(a.marginal_q().max_abs_diff(&SquareMatrix::filled(m, 1.0)).unwrap() <= 1e-12);
    }

    #[test]
    fn kinds_are_convex(m in 1usize..=4, seed in any::<u64>(), w in 0.0..=1.0f64) {
        for kind in StochKind::ALL {
            let a = sampled(kind, m, seed);
            let b = sampled(kind, m, seed.wrapping_add(1));
            let c = &(w * &a) + &((1.0 - w) * &b);
            prop_assert!(check_kind(&c, kind, 1e-12).holds, "{kind}");
        }
    }

    #[test]
    fn closed_kinds_stay_closed(m in 1usize..=4, seed in any::<u64>()) {
        let op = BinaryOp::modular(m);
        for kind in [StochKind::S12, StochKind::S23, StochKind::Twice] {
            let a = sampled(kind, m, seed);
            let b = sampled(kind, m, seed ^ 0x9e37_79b9);
            let c = a.star(&b, &op).unwrap();
            let check = check_kind(&c, kind, 1e-12);
            prop_assert!(check.holds, "{kind}: {}", check.max_violation);
        }
    }
}

#[test]
fn preimages_partition_the_square() {
    for m in 1..=5 {
        for op in ops(m) {
            let mut seen = vec![false; m * m];
            for j in 0..m {
                for &(l, n) in op.preimage(j) {
                    assert_eq!(op.apply(l, n), j);
                    assert!(!seen[l * m + n]);
                    seen[l * m + n] = true;
                }
            }
            assert!(seen.into_iter().all(|x| x));
        }
    }
}

#[test]
fn marginal_correspondence_converse_fails_for_13() {
    // total m without (1,3)-stochasticity
    let mut a = CubicMatrix::zeros(2);
    a.set(0, 0, 0, 1.0);
    a.set(1, 0, 0, 1.0);
    assert_eq!(a.marginal_q().total(), 2.0);
    assert!(!check_kind(&a, StochKind::S13, 1e-9).holds);
}

#[test]
fn thirteen_is_not_closed() {
    let op = BinaryOp::modular(2);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let found = (0..1000).any(|_| {
        let a = sample(StochKind::S13, 2, &mut || rng.gen());
        let b = sample(StochKind::S13, 2, &mut || rng.gen());
        !check_kind(&a.star(&b, &op).unwrap(), StochKind::S13, 1e-9).holds
    });
    assert!(found);
}
