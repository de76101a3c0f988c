use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schur_core::freeseries::FormalSeries;
use schur_core::funccalc::{
    certify_schur, eval_at_contraction, eval_at_row_tuple, eval_colligation_resolvent,
    eval_colligation_series, row_contraction_check, von_neumann_check, Mode, OperatorTuple,
    SchurFunction,
};
use schur_core::matops::{c64, identity, max_abs, zeros, Matrix};
use schur_core::random::{
    random_coisometric_colligation, random_commuting_tuple, random_contraction, random_row_tuple,
    scaled_jordan,
};
use schur_core::realization::eval_ball;
use schur_core::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn von_neumann_single(seed in any::<u64>(), k in 1usize..6, n in 1usize..4) {
        let mut g = rng(seed);
        let rho = 0.95 * g.random::<f64>();
        let t = OperatorTuple::single(random_contraction(&mut g, k, rho)).unwrap();
        let u = random_coisometric_colligation(&mut g, 1, n, 1, 1);
        let vn = von_neumann_check(&SchurFunction::Colligation(u), &t, Mode::Commuting).unwrap();
        prop_assert!(vn.pass && vn.norm <= 1.0 + 1e-8);
    }

    #[test]
    fn von_neumann_free(seed in any::<u64>(), k in 1usize..5, n in 1usize..4) {
        let mut g = rng(seed);
        let rho = 0.95 * g.random::<f64>();
        let t = random_row_tuple(&mut g, 2, k, rho);
        let u = random_coisometric_colligation(&mut g, 2, n, 1 + n, 1);
        let vn = von_neumann_check(&SchurFunction::Colligation(u), &t, Mode::Free).unwrap();
        prop_assert!(vn.pass && vn.norm <= 1.0 + 1e-8);
    }

    #[test]
    fn resolvent_matches_series(seed in any::<u64>(), d in 1usize..4, k in 1usize..5, n in 1usize..4) {
        let mut g = rng(seed);
        let rho = 0.9 * g.random::<f64>();
        let t = random_row_tuple(&mut g, d, k, rho);
        let u = random_coisometric_colligation(&mut g, d, n, 1 + (d - 1) * n, 1);
        let closed = eval_colligation_resolvent(&u, &t).unwrap();
        let series = eval_colligation_series(&u, &t, 100_000).unwrap();
        prop_assert!(max_abs(&(closed - series.value)) <= 1e-9);
    }

    #[test]
    fn scalar_tuples_reduce_to_points(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        // T_j = z_j I recovers the pointwise transfer function.
        let mut g = rng(seed);
        let z = schur_core::random::random_ball_point(&mut g, d, 0.9);
        let t = OperatorTuple::new(z.iter().map(|&zj| identity(2) * zj).collect(), true).unwrap();
        let u = random_coisometric_colligation(&mut g, d, n, 1 + (d - 1) * n, 1);
        let lhs = eval_colligation_resolvent(&u, &t).unwrap();
        let rhs = schur_core::matops::kron(&eval_ball(&u, &z).unwrap(), &identity(2));
        prop_assert!(max_abs(&(lhs - rhs)) <= 1e-12);
    }

    #[test]
    fn commuting_tuples_commute(seed in any::<u64>(), d in 2usize..4, k in 1usize..5) {
        let t = random_commuting_tuple(&mut rng(seed), d, k, 0.9);
        prop_assert!(t.commuting_residual() <= 1e-10);
        prop_assert!(row_contraction_check(&t).row_norm <= 0.9 + 1e-12);
    }
}

#[test]
fn polynomial_at_jordan_block() {
    // (1 + z)/2 at J = [[0,0],[s,0]].
    let s = FormalSeries::scalar(1, true, &[(&[], 0.5), (&[1], 0.5)]).unwrap();
    let j = scaled_jordan(2, 0.8);
    let v = eval_at_contraction(&s, &j).unwrap();
    let expected = identity(2) * c64(0.5, 0.0) + &j * c64(0.5, 0.0);
    assert!(max_abs(&(v - expected)) < 1e-15);
}

#[test]
fn free_and_commuting_modes_differ() {
    let s = FormalSeries::scalar(2, false, &[(&[1, 2], 1.0)]).unwrap();
    let a = Matrix::from_fn(2, 2, |r, c| {
        if r == 1 && c == 0 {
            c64(0.5, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let b = a.transpose();
    let t = OperatorTuple::new(vec![a.clone(), b.clone()], false).unwrap();
    let free = eval_at_row_tuple(&s, &t, Mode::Free).unwrap();
    assert!(max_abs(&(free - &a * &b)) < 1e-15);
    assert!(eval_at_row_tuple(&s, &t, Mode::Commuting).is_err());
}

#[test]
fn false_commuting_claim_is_rejected() {
    let a = scaled_jordan(2, 0.5);
    let b = a.transpose();
    assert!(matches!(
        OperatorTuple::new(vec![a, b], true),
        Err(Error::NotCommuting { .. })
    ));
}

#[test]
fn non_strict_tuples_are_rejected() {
    let s = FormalSeries::scalar(1, true, &[(&[1], 1.0)]).unwrap();
    assert!(matches!(
        eval_at_contraction(&s, &identity(2)),
        Err(Error::NotStrict { .. })
    ));
}

#[test]
fn uncertified_functions_are_rejected() {
    let s = FormalSeries::scalar(1, true, &[(&[], 0.8), (&[1], 0.8)]).unwrap();
    let f = SchurFunction::Series(s);
    assert!(!certify_schur(&f, 4).unwrap().certified);
    let t = OperatorTuple::single(zeros(2, 2)).unwrap();
    assert!(matches!(
        von_neumann_check(&f, &t, Mode::Commuting),
        Err(Error::Uncertified { .. })
    ));
}

#[test]
fn inner_monomial_is_certified() {
    let f = SchurFunction::Series(FormalSeries::scalar(2, true, &[(&[1, 2], 1.0)]).unwrap());
    let cert = certify_schur(&f, 4).unwrap();
    assert!(cert.certified, "norm {}", cert.norm);
}
