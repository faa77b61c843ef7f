//! Homotopy continuation for entropy-extremal moment matching.
//!
//! Given `R` in the range of a [`MomentOperator`], the solvers integrate
//!
//! ```text
//! dλ/dt = Dh(λ)⁻¹ (R − h(λ))       (feedback form, t ∈ [0, ∞))
//! dλ/dτ = Dh(λ)⁻¹ (R − h(λ₀))      (τ form, τ ∈ [0, 1])
//! ```
//!
//! in range-basis coordinates, where `Dh` is the derivative of `h`. Along the feedback flow
//! `V = ‖R − h(λ)‖²` decays like `e^{−2t}`; when `R` is not strictly
//! feasible the flow leaves the dual cone or `λ` blows up, which is reported
//! as a divergence status rather than an error.

mod family;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::entropy::{entropy, EntropyKind};
use crate::operator::{DualVariable, MatrixDensity, MomentOperator};
use crate::scalar::{ComplexMatrix, Real};

use family::{evaluate, EvalFailure, Evaluation};
pub use family::{Definiteness, Family};

/// Newton iterations allowed after the flow has converged. Polishing runs
/// until `V` reaches rounding level or stops decreasing.
const POLISH_ITERATIONS: usize = 5;
/// Drift of the τ-form moment path tolerated per step, relative to `‖R − R₀‖`.
const TAU_DRIFT: f64 = 1e-3;

/// Solver settings.
#[derive(Clone, Debug)]
pub struct SolveConfig<T: Real> {
    /// Convergence threshold on `V`.
    pub tol: T,
    pub t_max: T,
    /// Initial (and largest) step.
    pub h0: T,
    /// Step size below which the run is declared divergent.
    pub h_min: T,
    /// Relative floor on `min-eig L*(λ)` for rational kinds.
    pub pos_floor: T,
    pub lambda_max: T,
    /// Largest tolerated `‖R − P(R)‖ / ‖R‖`.
    pub range_residual_tol: T,
    pub newton_polish: bool,
    /// Permit rational kinds on two-dimensional grids.
    pub torus_override: bool,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-10),
            t_max: T::of(60.0),
            h0: T::of(0.1),
            h_min: T::of(1e-12),
            pos_floor: T::of(1e-10),
            lambda_max: T::of(1e8),
            range_residual_tol: T::of(1e-8),
            newton_polish: true,
            torus_override: false,
        }
    }
}

impl<T: Real> SolveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.tol,
            self.t_max,
            self.h0,
            self.h_min,
            self.pos_floor,
            self.lambda_max,
            self.range_residual_tol,
        ];
        if positive.iter().any(|v| !(*v > T::zero() && v.is_finite())) {
            return Err(Error::invalid("solver settings must be positive and finite"));
        }
        if self.tol >= T::one() {
            return Err(Error::invalid("tol must be below 1"));
        }
        if self.h_min > self.h0 {
            return Err(Error::invalid("h_min exceeds h0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    DivergedUnbounded,
    DivergedBoundary,
    NotInRange,
    MaxTimeExceeded,
}

impl SolveStatus {
    pub fn is_divergence(self) -> bool {
        matches!(
            self,
            SolveStatus::DivergedUnbounded | SolveStatus::DivergedBoundary | SolveStatus::MaxTimeExceeded
        )
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One accepted point of a solve: time (or τ), `V`, smallest eigenvalue of
/// `L*(λ)` over the grid and `‖λ‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint<T: Real> {
    pub t: T,
    pub v: T,
    pub min_eig: T,
    pub lambda_norm: T,
}

#[derive(Clone, Debug)]
pub struct SolveReport<T: Real> {
    pub status: SolveStatus,
    pub family: &'static str,
    /// Last accepted dual variable.
    pub lambda_hat: DualVariable<T>,
    /// Family density at `λ̂`, present when converged.
    pub density: Option<MatrixDensity<T>>,
    pub v_final: T,
    pub trace: Vec<TracePoint<T>>,
    /// The family's entropy functional at the solution, when converged.
    pub entropy_value: Option<T>,
    /// `⟨λ̂, h(λ̂)⟩`; equals `m · measure` for the rational family.
    pub duality_pairing: T,
    pub fitted_v_slope: Option<T>,
    /// Accepted integration steps.
    pub iterations: usize,
    pub newton_iterations: usize,
    /// `‖R − P(R)‖ / ‖R‖`.
    pub range_residual: T,
}

/// `J = ∇h` at `λ` in range coordinates, with the sign its family predicts.
#[derive(Clone, Debug)]
pub struct Jacobian<T: Real> {
    pub matrix: DMatrix<T>,
    pub definiteness: Definiteness,
}

fn eval_or_error<T: Real>(
    op: &MomentOperator<T>,
    family: &Family<T>,
    lambda: &DualVariable<T>,
    want_jacobian: bool,
) -> Result<Evaluation<T>> {
    if lambda.coords().len() != op.range_dim() {
        return Err(Error::dim(format!(
            "{} coordinates for range dimension {}",
            lambda.coords().len(),
            op.range_dim()
        )));
    }
    evaluate(op, family, lambda.coords(), want_jacobian, T::zero())?.map_err(EvalFailure::into_error)
}

/// The density the family assigns to `λ`, sampled on the grid.
pub fn family_density<T: Real>(op: &MomentOperator<T>, lambda: &DualVariable<T>, family: &Family<T>) -> Result<MatrixDensity<T>> {
    Ok(eval_or_error(op, family, lambda, false)?.density)
}

/// `h(λ) = L(family_density(λ))`.
pub fn h_map<T: Real>(op: &MomentOperator<T>, lambda: &DualVariable<T>, family: &Family<T>) -> Result<ComplexMatrix<T>> {
    let ev = eval_or_error(op, family, lambda, false)?;
    op.apply(&ev.density)
}

/// Jacobian of `h` at `λ` in range coordinates.
///
/// Rational kinds use the positive-definite convention
/// `J(δ) = L(Λ⁻¹ L*(δ) Λ⁻¹)`, which is the *negative* of the derivative of
/// `λ ↦ L(Λ⁻¹)`; exponential kinds return the derivative itself, which is
/// negative definite. For families with a symmetric Jacobian a Cholesky
/// factorization of `±J` is attempted; failure means `λ` is too close to the
/// boundary of the dual cone.
pub fn jacobian<T: Real>(op: &MomentOperator<T>, lambda: &DualVariable<T>, family: &Family<T>) -> Result<Jacobian<T>> {
    let ev = eval_or_error(op, family, lambda, true)?;
    let matrix = ev.jacobian.expect("requested");
    let definiteness = family.definiteness();
    if family.has_symmetric_jacobian(op.m()) && signed(&matrix, definiteness).cholesky().is_none() {
        return Err(Error::JacobianNotDefinite);
    }
    Ok(Jacobian { matrix, definiteness })
}

fn signed<T: Real>(j: &DMatrix<T>, d: Definiteness) -> DMatrix<T> {
    match d {
        Definiteness::Positive => j.clone(),
        Definiteness::Negative => -j,
    }
}

/// Starting point: zero for exponential kinds; for rational kinds the
/// least-squares fit of `L*(λ) ≈ I`, which must be strictly dual feasible.
pub fn default_dual_start<T: Real>(op: &MomentOperator<T>, family: &Family<T>) -> Result<DualVariable<T>> {
    if !family.is_rational() {
        return op.dual(DVector::zeros(op.range_dim()));
    }
    let coords = op.fit_adjoint_to_identity(T::one()).map_err(|_| Error::DualStartNotFound)?;
    let lambda = op.dual(coords)?;
    let adj = op.adjoint(&lambda)?;
    let (min, _) = adj.min_eigenvalue()?;
    let mean = adj.samples().iter().fold(T::zero(), |a, s| a + s.trace()) / T::of_usize(op.nodes() * op.m());
    if !(min > T::threshold(1e-6) * mean) {
        return Err(Error::DualStartNotFound);
    }
    Ok(lambda)
}

/// Least-squares slope of `log V` against `t` over the trace points with
/// `V > 1e-13`.
///
/// A converged tail needs at least ten such points, and `V` must have
/// dropped by six orders of magnitude across them; otherwise the run did not
/// settle and no rate is reported.
pub fn lyapunov_slope<T: Real>(trace: &[TracePoint<T>]) -> Result<T> {
    let floor = T::of(1e-13);
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|p| p.v > floor && p.v.is_finite())
        .map(|p| (p.t.as_f64(), p.v.as_f64().ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientTrace(pts.len()));
    }
    let (first, last) = (pts[0].1, pts[pts.len() - 1].1);
    if last - first > -(1e6f64).ln() {
        return Err(Error::InsufficientTrace(0));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientTrace(pts.len()));
    }
    Ok(T::of(sxy / sxx))
}

/// Shared state of one solve.
struct Solver<'a, T: Real> {
    op: &'a MomentOperator<T>,
    family: &'a Family<T>,
    cfg: &'a SolveConfig<T>,
    target: DVector<T>,
    /// Threshold on `V` that counts as converged.
    v_tol: T,
    /// Rounding-level slack for the monotonicity test on `V`.
    v_noise: T,
    symmetric: bool,
}

/// An accepted point together with its evaluation.
struct State<T: Real> {
    coords: DVector<T>,
    ev: Evaluation<T>,
    v: T,
}

impl<'a, T: Real> Solver<'a, T> {
    fn eval(&self, coords: &DVector<T>) -> Result<Option<Evaluation<T>>> {
        Ok(evaluate(self.op, self.family, coords, true, self.cfg.pos_floor)?.ok())
    }

    fn v_of(&self, ev: &Evaluation<T>) -> T {
        (&self.target - &ev.h).norm_squared()
    }

    fn state(&self, coords: DVector<T>) -> Result<Option<State<T>>> {
        Ok(self.eval(&coords)?.map(|ev| {
            let v = self.v_of(&ev);
            State { coords, ev, v }
        }))
    }

    /// `J⁻¹ rhs`, or `None` when `J` has lost its sign-definiteness (or is
    /// singular).
    fn apply_inverse(&self, ev: &Evaluation<T>, rhs: &DVector<T>) -> Option<DVector<T>> {
        let j = ev.jacobian.as_ref()?;
        let x = if self.symmetric {
            match self.family.definiteness() {
                Definiteness::Positive => j.clone().cholesky()?.solve(rhs),
                Definiteness::Negative => -(-j).cholesky()?.solve(rhs),
            }
        } else {
            j.clone().lu().solve(rhs)?
        };
        // For rational kinds `J` is the positive map δ ↦ L(Λ⁻¹ L*(δ) Λ⁻¹);
        // the derivative of `Λ ↦ Λ⁻¹` is its negative.
        let x = if self.family.is_rational() { -x } else { x };
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    fn trace_point(&self, t: T, s: &State<T>) -> TracePoint<T> {
        TracePoint {
            t,
            v: s.v,
            min_eig: s.ev.min_eig,
            lambda_norm: s.coords.norm(),
        }
    }

    /// One classical RK4 step for `dλ/ds = field(λ)`, where `field` is
    /// `J⁻¹ · rhs(h(λ))`. Returns `None` if any stage leaves the domain.
    fn rk4(&self, s: &State<T>, step: T, rhs: &dyn Fn(&DVector<T>) -> DVector<T>) -> Result<Option<State<T>>> {
        let two = T::of(2.0);
        let half = step / two;
        let Some(k1) = self.apply_inverse(&s.ev, &rhs(&s.ev.h)) else {
            return Ok(None);
        };
        let mut ks = vec![k1];
        for (i, a) in [half, half, step].into_iter().enumerate() {
            let probe = &s.coords + &ks[i] * a;
            let Some(ev) = self.eval(&probe)? else { return Ok(None) };
            let Some(k) = self.apply_inverse(&ev, &rhs(&ev.h)) else {
                return Ok(None);
            };
            ks.push(k);
        }
        let incr = (&ks[0] + &ks[1] * two + &ks[2] * two + &ks[3]) * (step / T::of(6.0));
        let next = &s.coords + incr;
        let Some(state) = self.state(next)? else { return Ok(None) };
        if self.apply_inverse(&state.ev, &rhs(&state.ev.h)).is_none() {
            return Ok(None);
        }
        Ok(Some(state))
    }

    /// Newton iterations toward `goal` while they reduce the residual.
    fn newton(&self, mut s: State<T>, goal: &DVector<T>, stop: T, max_iter: usize) -> Result<(State<T>, usize)> {
        let mut done = 0;
        let mut res = (goal - &s.ev.h).norm_squared();
        while done < max_iter && res > stop {
            let Some(dx) = self.apply_inverse(&s.ev, &(goal - &s.ev.h)) else {
                break;
            };
            let Some(next) = self.state(&s.coords + dx)? else { break };
            let next_res = (goal - &next.ev.h).norm_squared();
            if !(next_res < res) {
                break;
            }
            s = next;
            res = next_res;
            done += 1;
        }
        Ok((s, done))
    }

    fn polish(&self, s: State<T>) -> Result<(State<T>, usize)> {
        if !self.cfg.newton_polish {
            return Ok((s, 0));
        }
        let target = self.target.clone();
        self.newton(s, &target, self.v_noise, POLISH_ITERATIONS)
    }

    fn finish(
        &self,
        status: SolveStatus,
        s: State<T>,
        trace: Vec<TracePoint<T>>,
        iterations: usize,
        newton_iterations: usize,
        range_residual: T,
    ) -> Result<SolveReport<T>> {
        let status = if status == SolveStatus::Converged && s.v > self.v_tol {
            SolveStatus::MaxTimeExceeded
        } else {
            status
        };
        let duality_pairing = s.coords.dot(&s.ev.h);
        let (density, entropy_value, fitted_v_slope) = if status == SolveStatus::Converged {
            let grid = self.op.grid();
            let value = match self.family {
                Family::Rational | Family::WeightedRational { .. } => entropy(&s.ev.density, grid, EntropyKind::Burg)?,
                Family::Exponential | Family::WeightedExponential { .. } => {
                    entropy(&s.ev.density, grid, EntropyKind::VonNeumann)?
                }
                Family::PriorExponential { log_sigma } => {
                    let own = entropy(&s.ev.density, grid, EntropyKind::VonNeumann)?;
                    let cross =
                        s.ev.density
                            .samples()
                            .iter()
                            .zip(log_sigma)
                            .zip(grid.weights())
                            .fold(T::zero(), |a, ((r, l), &w)| a + w * r.trace_product(l));
                    own - cross
                }
            };
            (Some(s.ev.density.clone()), Some(value), lyapunov_slope(&trace).ok())
        } else {
            (None, None, None)
        };
        Ok(SolveReport {
            status,
            family: self.family.name(),
            lambda_hat: self.op.dual(s.coords)?,
            density,
            v_final: s.v,
            trace,
            entropy_value,
            duality_pairing,
            fitted_v_slope,
            iterations,
            newton_iterations,
            range_residual,
        })
    }
}

enum Prepared<'a, T: Real> {
    Ready(Solver<'a, T>, State<T>, T),
    OutOfRange(SolveReport<T>),
}

fn prepare<'a, T: Real>(
    op: &'a MomentOperator<T>,
    r: &ComplexMatrix<T>,
    family: &'a Family<T>,
    cfg: &'a SolveConfig<T>,
    start: Option<&DualVariable<T>>,
) -> Result<Prepared<'a, T>> {
    cfg.validate()?;
    family.check_against(op)?;
    if family.is_rational() && op.grid().dimension() == 2 && !cfg.torus_override {
        return Err(Error::DimensionRestriction);
    }
    let (target, residual) = op.project(r)?;
    let r_norm = crate::scalar::frobenius(r);
    let range_residual = if r_norm > T::zero() { residual / r_norm } else { residual };
    let start = match start {
        Some(s) => s.clone(),
        None => default_dual_start(op, family)?,
    };
    if start.coords().len() != op.range_dim() {
        return Err(Error::dim("starting point has the wrong number of coordinates"));
    }
    let eps = T::default_epsilon();
    let noise = T::of(64.0) * eps * (r_norm + T::one());
    let solver = Solver {
        op,
        family,
        cfg,
        v_tol: cfg.tol * (r_norm * r_norm).min(T::one()),
        v_noise: noise * noise,
        symmetric: family.has_symmetric_jacobian(op.m()),
        target,
    };
    let state = match evaluate(op, family, start.coords(), true, cfg.pos_floor)? {
        Ok(ev) => {
            let v = solver.v_of(&ev);
            State {
                coords: start.coords().clone(),
                ev,
                v,
            }
        }
        Err(_) if family.is_rational() => return Err(Error::DualStartNotFound),
        Err(f) => return Err(f.into_error()),
    };
    if range_residual > cfg.range_residual_tol {
        let trace = vec![solver.trace_point(T::zero(), &state)];
        let report = solver.finish(SolveStatus::NotInRange, state, trace, 0, 0, range_residual)?;
        return Ok(Prepared::OutOfRange(report));
    }
    Ok(Prepared::Ready(solver, state, range_residual))
}

/// Integrates the feedback form from the default start.
///
/// Convergence means `V ≤ tol · min(1, ‖R‖²)`, which guarantees both
/// `V ≤ tol` and `‖R − h(λ̂)‖ ≤ √tol · ‖R‖`.
pub fn solve<T: Real>(
    op: &MomentOperator<T>,
    r: &ComplexMatrix<T>,
    family: &Family<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveReport<T>> {
    solve_from(op, r, family, cfg, None)
}

/// [`solve`] from an explicit starting point (strictly dual feasible for
/// rational kinds).
pub fn solve_from<T: Real>(
    op: &MomentOperator<T>,
    r: &ComplexMatrix<T>,
    family: &Family<T>,
    cfg: &SolveConfig<T>,
    start: Option<&DualVariable<T>>,
) -> Result<SolveReport<T>> {
    let (solver, mut s, range_residual) = match prepare(op, r, family, cfg, start)? {
        Prepared::Ready(a, b, c) => (a, b, c),
        Prepared::OutOfRange(report) => return Ok(report),
    };
    let mut trace = vec![solver.trace_point(T::zero(), &s)];
    let target = solver.target.clone();
    let field = move |h: &DVector<T>| &target - h;
    let mut t = T::zero();
    let mut h = cfg.h0;
    let mut steps = 0;
    let status = loop {
        if s.v <= solver.v_tol {
            break SolveStatus::Converged;
        }
        if s.coords.norm() > cfg.lambda_max {
            break SolveStatus::DivergedUnbounded;
        }
        if t >= cfg.t_max {
            break SolveStatus::MaxTimeExceeded;
        }
        match solver.rk4(&s, h, &field)? {
            Some(next) if next.v <= s.v + solver.v_noise => {
                s = next;
                t += h;
                steps += 1;
                trace.push(solver.trace_point(t, &s));
                h = (h * T::of(2.0)).min(cfg.h0);
            }
            _ => {
                h /= T::of(2.0);
                if h < cfg.h_min {
                    break SolveStatus::DivergedBoundary;
                }
            }
        }
    };
    let (s, polished) = if status == SolveStatus::Converged {
        solver.polish(s)?
    } else {
        (s, 0)
    };
    solver.finish(status, s, trace, steps, polished, range_residual)
}

/// Integrates the τ form over `[0, 1]` from the default start, correcting
/// drift off the straight moment path `R₀ + τ (R − R₀)` by Newton steps.
pub fn solve_tau<T: Real>(
    op: &MomentOperator<T>,
    r: &ComplexMatrix<T>,
    family: &Family<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveReport<T>> {
    solve_tau_from(op, r, family, cfg, None)
}

pub fn solve_tau_from<T: Real>(
    op: &MomentOperator<T>,
    r: &ComplexMatrix<T>,
    family: &Family<T>,
    cfg: &SolveConfig<T>,
    start: Option<&DualVariable<T>>,
) -> Result<SolveReport<T>> {
    let (solver, mut s, range_residual) = match prepare(op, r, family, cfg, start)? {
        Prepared::Ready(a, b, c) => (a, b, c),
        Prepared::OutOfRange(report) => return Ok(report),
    };
    let mut trace = vec![solver.trace_point(T::zero(), &s)];
    let r0 = s.ev.h.clone();
    let dr = &solver.target - &r0;
    let dr_norm = dr.norm();
    let drift_tol = T::of(TAU_DRIFT) * dr_norm + solver.v_noise.sqrt();
    let dr_field = dr.clone();
    let field = move |_: &DVector<T>| dr_field.clone();
    let mut tau = T::zero();
    let mut h = cfg.h0;
    let mut steps = 0;
    let mut corrections = 0;
    let status = loop {
        if s.coords.norm() > cfg.lambda_max {
            break SolveStatus::DivergedUnbounded;
        }
        if tau >= T::one() {
            break SolveStatus::Converged;
        }
        let rest = T::one() - tau;
        let finishing = h >= rest * (T::one() - T::of(1e-9));
        let step = if finishing { rest } else { h };
        let goal = &r0 + &dr * (tau + step);
        let accepted = match solver.rk4(&s, step, &field)? {
            Some(next) if (&goal - &next.ev.h).norm() <= drift_tol => {
                let stop = (T::of(1e-3) * drift_tol).powi(2);
                let (next, n) = solver.newton(next, &goal, stop, 2)?;
                corrections += n;
                Some(next)
            }
            _ => None,
        };
        match accepted {
            Some(next) => {
                s = next;
                tau = if finishing { T::one() } else { tau + step };
                steps += 1;
                trace.push(solver.trace_point(tau, &s));
                h = (h * T::of(2.0)).min(cfg.h0);
            }
            None => {
                h /= T::of(2.0);
                if h < cfg.h_min {
                    break SolveStatus::DivergedBoundary;
                }
            }
        }
    };
    let (s, polished) = if status == SolveStatus::Converged {
        // Full Newton toward R regardless of the polish flag: the τ path only
        // tracks R to the drift tolerance.
        let target = solver.target.clone();
        let stop = if cfg.newton_polish { solver.v_noise } else { solver.v_tol };
        solver.newton(s, &target, stop, POLISH_ITERATIONS)?
    } else {
        (s, 0)
    };
    let mut report = solver.finish(status, s, trace, steps, polished + corrections, range_residual)?;
    // The τ form does not follow e^{−2t}; no decay rate applies.
    report.fitted_v_slope = None;
    Ok(report)
}
