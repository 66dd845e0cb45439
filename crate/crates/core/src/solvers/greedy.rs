//! Closed-form coordinate minimization of `uᴴQu` over unit-modulus `u`.
//!
//! With the other coordinates fixed, `uᴴQu = Q_ii + 2 Re(ū_i w_i) + const`
//! where `w_i = Σ_{k≠i} Q_ik u_k`, minimized by `u_i = −w_i/|w_i|`.
//! Converges to a local minimum that depends on the starting point.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{check_unit_modulus, ComplexMatrix, ComplexVector};
use crate::problem::{quadratic_form, LiftedProblem};

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub u: ComplexVector,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Replaces `u[i]` by its closed-form minimizer and returns the change in
/// `uᴴQu`. A zero coupling leaves `u[i]` untouched.
/// Fails with a domain error when the coupling is not finite.
pub fn coordinate_step(q: &ComplexMatrix, u: &mut ComplexVector, i: usize) -> Result<f64> {
    let mut w = Complex64::new(0.0, 0.0);
    for k in (0..u.len()).filter(|&k| k != i) {
        w += q[(i, k)] * u[k];
    }
    let r = w.norm();
    if !r.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite coupling at coordinate {i}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let next = -w / r;
    let change = 2.0 * ((next.conj() * w).re - (u[i].conj() * w).re);
    u[i] = next;
    Ok(change)
}

pub fn greedy_coordinate_solve(
    problem: &LiftedProblem,
    u0: &ComplexVector,
    max_sweeps: usize,
    tol: f64,
) -> Result<GreedyOutcome> {
    greedy_on_matrix(problem.q(), u0, max_sweeps, tol)
}

pub fn greedy_on_matrix(
    q: &ComplexMatrix,
    u0: &ComplexVector,
    max_sweeps: usize,
    tol: f64,
) -> Result<GreedyOutcome> {
    let n = q.nrows();
    if u0.len() != n {
        return Err(Error::Dimension(format!(
            "u0 has length {}, Q is {n}x{n}",
            u0.len()
        )));
    }
    check_unit_modulus(u0, 1e-9)?;
    let mut u = u0.clone();
    let mut objective = quadratic_form(q, &u).re;
    let floor = 1e-12 * (1.0 + q.norm());
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < max_sweeps {
        let start = objective;
        for i in 0..n {
            let change = coordinate_step(q, &mut u, i).map_err(|e| Error::SolverFailure {
                reason: e.to_string(),
                sweeps,
                objective_trace: vec![objective],
            })?;
            debug_assert!(
                change <= floor,
                "greedy update increased the objective by {change:e}"
            );
            objective += change;
        }
        sweeps += 1;
        objective = quadratic_form(q, &u).re;
        if (start - objective).abs() <= tol * objective.abs().max(floor) {
            converged = true;
            break;
        }
    }
    Ok(GreedyOutcome {
        u,
        objective,
        sweeps,
        converged,
    })
}
