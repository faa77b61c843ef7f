use matmoment::hermitian::{
    frechet_exp, frechet_log, matrix_exp, matrix_log, scrambled_divide, scrambled_multiply, HermitianMatrix,
};
use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;

type H = HermitianMatrix<f64>;

fn hermitian(n: usize, scale: f64) -> impl Strategy<Value = H> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        let m = DMatrix::from_fn(n, n, |i, j| Complex::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        let h = H::hermitian_part(&m).unwrap();
        let norm = h.norm().max(1e-3);
        h.scale(scale / norm)
    })
}

/// `XX* + shift·I`.
fn positive(n: usize, shift: f64) -> impl Strategy<Value = H> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        let x = DMatrix::from_fn(n, n, |i, j| Complex::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        H::hermitian_part(&(&x * x.adjoint())).unwrap().add(&H::scalar(n, shift))
    })
}

fn tr(a: &H, b: &H) -> Complex<f64> {
    (a.as_matrix() * b.as_matrix()).trace()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scrambled_multiply_is_linear(c in positive(3, 0.1), d1 in hermitian(3, 1.0), d2 in hermitian(3, 1.0), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let lhs = scrambled_multiply(&c, &d1.scale(a).add(&d2.scale(b))).unwrap();
        let rhs = scrambled_multiply(&c, &d1).unwrap().scale(a).add(&scrambled_multiply(&c, &d2).unwrap().scale(b));
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn scrambled_maps_are_self_adjoint(c in positive(4, 0.1), d1 in hermitian(4, 1.0), d2 in hermitian(4, 1.0)) {
        let m1 = scrambled_multiply(&c, &d1).unwrap();
        let m2 = scrambled_multiply(&c, &d2).unwrap();
        prop_assert!((tr(&d1, &m2) - tr(&m1, &d2)).norm() <= 1e-10 * (1.0 + m1.norm() * d2.norm()));
        let q1 = scrambled_divide(&c, &d1).unwrap();
        let q2 = scrambled_divide(&c, &d2).unwrap();
        prop_assert!((tr(&d1, &q2) - tr(&q1, &d2)).norm() <= 1e-10 * (1.0 + q1.norm() * d2.norm()));
    }

    #[test]
    fn multiply_and_divide_are_inverse(a in positive(4, 0.2), d in hermitian(4, 1.0)) {
        let there = scrambled_multiply(&a, &scrambled_divide(&a, &d).unwrap()).unwrap();
        let back = scrambled_divide(&a, &scrambled_multiply(&a, &d).unwrap()).unwrap();
        prop_assert!(there.sub(&d).norm() <= 1e-10 * d.norm());
        prop_assert!(back.sub(&d).norm() <= 1e-10 * d.norm());
    }

    #[test]
    fn trace_identity(a in positive(4, 0.2), d in hermitian(4, 1.0)) {
        let t = tr(&a, &frechet_log(&a, &d).unwrap());
        prop_assert!((t - Complex::new(d.trace(), 0.0)).norm() <= 1e-10 * d.norm());
    }

    #[test]
    fn frechet_derivatives_match_central_differences(a in hermitian(4, 1.0), p in positive(3, 0.5), d in hermitian(4, 1.0), e in hermitian(3, 1.0)) {
        let eps = 1e-5;
        let fd = matrix_exp(&a.add(&d.scale(eps))).unwrap().sub(&matrix_exp(&a.sub(&d.scale(eps))).unwrap()).scale(0.5 / eps);
        prop_assert!(fd.sub(&frechet_exp(&a, &d).unwrap()).norm() <= 1e-6 * d.norm());
        // Scaled so that ‖P‖ ≤ 1 with eigenvalues bounded away from zero.
        let p = p.scale(1.0 / p.eigh().unwrap().max_abs());
        let p = p.add(&H::scalar(3, 0.25)).scale(0.8);
        let fd = matrix_log(&p.add(&e.scale(eps))).unwrap().sub(&matrix_log(&p.sub(&e.scale(eps))).unwrap()).scale(0.5 / eps);
        prop_assert!(fd.sub(&frechet_log(&p, &e).unwrap()).norm() <= 1e-6 * e.norm());
    }

    #[test]
    fn scrambled_divide_preserves_positivity(c in positive(4, 0.05), d in positive(4, 0.0)) {
        let q = scrambled_divide(&c, &d).unwrap();
        prop_assert!(q.min_eigenvalue().unwrap() >= -1e-12 * (1.0 + q.norm()));
    }

    #[test]
    fn exp_log_round_trips(h in hermitian(4, 2.0), p in positive(4, 0.1)) {
        let prod = matrix_exp(&h).unwrap().as_matrix() * matrix_exp(&h.scale(-1.0)).unwrap().as_matrix();
        prop_assert!((prod - DMatrix::identity(4, 4)).norm() <= 1e-10);
        let back = matrix_exp(&matrix_log(&p).unwrap()).unwrap();
        prop_assert!(back.sub(&p).norm() <= 1e-10 * p.norm());
    }
}

#[test]
fn frechet_exp_of_commuting_pair_is_product() {
    let a = H::from_real_diagonal(&[0.3, -1.2, 0.7]);
    let d = H::from_real_diagonal(&[1.0, 2.0, -0.5]);
    let expected = H::from_real_diagonal(&[0.3f64.exp(), 2.0 * (-1.2f64).exp(), -0.5 * 0.7f64.exp()]);
    assert!(frechet_exp(&a, &d).unwrap().sub(&expected).norm() < 1e-14);
}

/// `M_C` is a Schur product with the logarithmic-mean matrix, which is
/// indefinite for distinct eigenvalues (`L(a, b)² > ab`), so it can map a
/// positive semidefinite `Δ` outside the cone.
#[test]
fn scrambled_multiply_need_not_preserve_positivity() {
    let e4 = 4.0f64.exp();
    let c = H::from_real_diagonal(&[1.0, e4]);
    let d = H::from_real_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
    let m = scrambled_multiply(&c, &d).unwrap();
    let l = (e4 - 1.0) / 4.0;
    let expected = H::from_real_rows(2, &[1.0, l, l, e4]).unwrap();
    assert!(m.sub(&expected).norm() < 1e-12 * e4);
    assert!(m.min_eigenvalue().unwrap() < -1.0);
}
