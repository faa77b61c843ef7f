use std::sync::OnceLock;

use matmoment::hermitian::HermitianMatrix;
use matmoment::operator::range::RangeBasis;
use matmoment::problems::array::{angle_grid, array_necessary_matrix, lag_moments, ArraySpec};
use matmoment::problems::{nonequispaced_array_problem, partial_trace_problem};
use matmoment::scalar::frobenius;
use matmoment::{entropy, EntropyKind, GridKind, MatrixDensity, MomentOperator, SupportGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use proptest::prelude::*;

type Op = MomentOperator<f64>;
type Density = MatrixDensity<f64>;

fn array_op() -> &'static Op {
    static OP: OnceLock<Op> = OnceLock::new();
    OP.get_or_init(|| nonequispaced_array_problem(&ArraySpec::default_on(angle_grid(16, 4).unwrap()).unwrap()).unwrap())
}

fn partial_trace_op() -> &'static Op {
    static OP: OnceLock<Op> = OnceLock::new();
    OP.get_or_init(|| partial_trace_problem(2, 3).unwrap())
}

fn hermitian_from(v: &[f64], m: usize) -> HermitianMatrix<f64> {
    let x = DMatrix::from_fn(m, m, |i, j| Complex::new(v[2 * (i * m + j)], v[2 * (i * m + j) + 1]));
    HermitianMatrix::hermitian_part(&x).unwrap()
}

fn positive_from(v: &[f64], m: usize, shift: f64) -> HermitianMatrix<f64> {
    let x = DMatrix::from_fn(m, m, |i, j| Complex::new(v[2 * (i * m + j)], v[2 * (i * m + j) + 1]));
    HermitianMatrix::hermitian_part(&(&x * x.adjoint()))
        .unwrap()
        .add(&HermitianMatrix::scalar(m, shift))
}

/// Density whose node samples come from consecutive chunks of `v`.
fn density_from(v: &[f64], nodes: usize, m: usize, positive: bool) -> Density {
    let chunk = 2 * m * m;
    Density::from_fn(nodes, |j| {
        let s = &v[(j * chunk) % v.len()..][..chunk];
        if positive {
            positive_from(s, m, 0.01)
        } else {
            hermitian_from(s, m)
        }
    })
    .unwrap()
}

fn coords(op: &Op) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0f64..1.0, op.range_dim()).prop_map(DVector::from_vec)
}

fn samples(op: &Op) -> impl Strategy<Value = Vec<f64>> {
    let chunk = 2 * op.m() * op.m();
    prop::collection::vec(-1.0f64..1.0, chunk * op.nodes().min(64))
}

fn check_adjoint_identity(op: &Op, c: &DVector<f64>, v: &[f64]) -> Result<(), TestCaseError> {
    let lambda = op.dual(c.clone()).unwrap();
    let rho = density_from(v, op.nodes(), op.m(), false);
    let lhs = op.pairing(lambda.matrix(), &op.apply(&rho).unwrap());
    let rhs = op
        .adjoint(&lambda)
        .unwrap()
        .weighted_inner(&rho, op.grid().weights())
        .unwrap();
    prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_identity_array(c in coords(array_op()), v in samples(array_op())) {
        check_adjoint_identity(array_op(), &c, &v)?;
    }

    #[test]
    fn adjoint_identity_partial_trace(c in coords(partial_trace_op()), v in samples(partial_trace_op())) {
        check_adjoint_identity(partial_trace_op(), &c, &v)?;
    }

    #[test]
    fn operator_and_adjoint_are_linear(c1 in coords(array_op()), c2 in coords(array_op()), v1 in samples(array_op()), v2 in samples(array_op()), a in -3.0f64..3.0) {
        let op = array_op();
        let (r1, r2) = (density_from(&v1, op.nodes(), 1, false), density_from(&v2, op.nodes(), 1, false));
        let lhs = op.apply(&r1.scale(a).add(&r2).unwrap()).unwrap();
        let rhs = op.apply(&r1).unwrap() * Complex::new(a, 0.0) + op.apply(&r2).unwrap();
        prop_assert!(frobenius(&(lhs - &rhs)) <= 1e-12 * (1.0 + frobenius(&rhs)));
        let lhs = op.adjoint_coords(&(&c1 * a + &c2)).unwrap();
        let rhs = op.adjoint_coords(&c1).unwrap().scale(a).add(&op.adjoint_coords(&c2).unwrap()).unwrap();
        prop_assert!(lhs.sup_distance(&rhs).unwrap() <= 1e-12 * (1.0 + rhs.sup_norm()));
    }

    #[test]
    fn dual_feasible_pairs_nonnegatively(c in coords(array_op()), v in samples(array_op())) {
        let op = array_op();
        // Shift towards the interior until L*(λ) is positive.
        let start = op.fit_adjoint_to_identity(1.0).unwrap();
        let lambda = op.dual(&start * 2.0 + c * 0.3).unwrap();
        prop_assume!(op.is_dual_feasible(&lambda, 0.0).unwrap().0);
        let rho = density_from(&v, op.nodes(), 1, true);
        let value = op.functional_c(&op.apply(&rho).unwrap(), &lambda).unwrap();
        prop_assert!(value >= -1e-12);
    }

    #[test]
    fn moments_of_positive_densities_lie_in_range(v in samples(partial_trace_op())) {
        let op = partial_trace_op();
        let r = op.apply(&density_from(&v, op.nodes(), op.m(), true)).unwrap();
        let (_, residual) = op.project(&r).unwrap();
        prop_assert!(residual <= 1e-10 * frobenius(&r));
    }

    #[test]
    fn positive_array_moments_pass_necessary_test(v in samples(array_op())) {
        let op = array_op();
        let r = op.apply(&density_from(&v, op.nodes(), 1, true)).unwrap();
        let positions = matmoment::problems::array::default_positions::<f64>();
        let (_, ok) = array_necessary_matrix(&lag_moments(&r, &positions).unwrap()).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn partial_trace_preserves_trace(v in samples(partial_trace_op())) {
        let op = partial_trace_op();
        let rho = density_from(&v, op.nodes(), op.m(), false);
        // The state is the (constant) sample at node 0; each node sees it.
        let state = Density::constant(op.nodes(), rho.samples()[0].clone());
        let r = op.apply(&state).unwrap();
        prop_assert!((r.trace().re - rho.samples()[0].trace()).abs() <= 1e-14 * (1.0 + rho.samples()[0].norm()));
    }

    #[test]
    fn relative_entropy_is_nonnegative(v in prop::collection::vec(-1.0f64..1.0, 8 * 12), w in prop::collection::vec(-1.0f64..1.0, 8 * 12)) {
        let grid = SupportGrid::build(GridKind::Interval1d, &[(0.0, 1.0)], 3, 4).unwrap();
        let rho = density_from(&v, grid.len(), 2, true);
        let sigma = density_from(&w, grid.len(), 2, true);
        let mass = |d: &Density| grid.weights().iter().zip(d.samples()).map(|(w, s)| w * s.trace()).sum::<f64>();
        let sigma = sigma.scale(mass(&rho) / mass(&sigma));
        prop_assert!(entropy(&rho, &grid, EntropyKind::Relative(&sigma)).unwrap() >= -1e-10);
    }
}

#[test]
fn array_range_dimension_is_seven() {
    assert_eq!(array_op().range_dim(), 7);
}

#[test]
fn partial_trace_range_is_all_hermitian() {
    assert_eq!(partial_trace_problem::<f64>(2, 2).unwrap().range_dim(), 4);
}

#[test]
fn range_basis_is_idempotent() {
    for op in [array_op(), partial_trace_op()] {
        let again = RangeBasis::from_elements(op.basis().elements()).unwrap();
        assert_eq!(again.dim(), op.range_dim());
        assert!(op.basis().max_principal_angle_sine(&again) <= 1e-8);
        assert!(again.max_principal_angle_sine(op.basis()) <= 1e-8);
    }
}

#[test]
fn identity_dual_gives_gram_of_manifold() {
    let op = array_op();
    let (lambda, residual) = op.dual_from_matrix(&DMatrix::identity(3, 3)).unwrap();
    assert!(residual < 1e-12);
    let adj = op.adjoint(&lambda).unwrap();
    for s in adj.samples() {
        assert!((s.trace() - 3.0).abs() < 1e-12);
    }
}

#[test]
fn identity_start_is_dual_feasible() {
    let op = array_op();
    let lambda = op.dual(op.fit_adjoint_to_identity(1.0).unwrap()).unwrap();
    let adj = op.adjoint(&lambda).unwrap();
    for s in adj.samples() {
        assert!((s.trace() - 1.0).abs() < 1e-10);
    }
    assert!(op.is_dual_feasible(&lambda, 0.5).unwrap().0);
}

#[test]
fn gauss_legendre_is_exact_for_degree_two_q_minus_one() {
    for order in 2..=10 {
        let grid = SupportGrid::<f64>::build(GridKind::Interval1d, &[(-1.0, 2.0)], 3, order).unwrap();
        let deg = 2 * order - 1;
        let exact = (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
        let got = grid.integrate(|p| p[0].powi(deg as i32));
        assert!(
            (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
            "order {order}: {got} vs {exact}"
        );
    }
}
