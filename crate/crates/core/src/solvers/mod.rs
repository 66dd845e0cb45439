//! Solvers for the homogenized phase problem.
//!
//! [`bcd_lifting_solve`] relaxes `min uᴴQu, |u_i| = 1` to the SDP
//! `min tr(QU), U ⪰ 0, diag(U) = 1` and solves it by block-coordinate descent,
//! then reads a vector off the leading eigenvector of `U`.
//! [`estimate_phases`] is the full pipeline used by the experiments.

pub mod bcd;
pub mod eigen;
pub mod greedy;
pub mod oracle;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{project_unit_modulus, ComplexMatrix, ComplexVector};
use crate::problem::{homogenize, qcqp_objective, LiftedProblem};

pub use bcd::{bcd_sdp, trace_product, BcdOutcome, BcdSettings};
pub use eigen::{extract_phases, leading_eigenvector, LeadingEigen, HOMOGENIZER_FLOOR};
pub use greedy::{coordinate_step, greedy_coordinate_solve, greedy_on_matrix, GreedyOutcome};
pub use oracle::brute_force_oracle;

/// Rank-1 gaps above this flag the solution as weakly rank-1.
pub const WEAK_RANK1_GAP: f64 = 0.05;

const FALLBACK_SWEEPS: usize = 1000;
const FALLBACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LiftedSolution {
    /// The SDP iterate: Hermitian PSD with unit diagonal.
    pub u_matrix: ComplexMatrix,
    /// Leading eigenvector used for extraction, length M+1. For an inert
    /// homogenizer (plain PhaseCut) it is the leading eigenvector of the M×M
    /// block with a trailing 1 appended.
    pub leading_vector: ComplexVector,
    /// `leading_vector` pushed entrywise to unit modulus.
    pub u: ComplexVector,
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// `1 − λ₁/tr(U)` on the matrix the eigenvector came from.
    pub rank1_gap: f64,
    pub weak_rank1: bool,
    pub eigen_converged: bool,
    pub eigen_degenerate: bool,
}

impl LiftedSolution {
    /// Final `tr(QU)`.
    pub fn objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace holds the initial objective")
    }
}

pub fn bcd_lifting_solve(
    problem: &LiftedProblem,
    settings: &BcdSettings,
) -> Result<LiftedSolution> {
    let outcome = bcd_sdp(problem.q(), settings)?;
    let m = problem.m_dim();

    let (leading_vector, eig, dim) = if problem.homogenizer_inert() && m > 0 {
        let block = outcome.u.view((0, 0), (m, m)).into_owned();
        let eig = leading_eigenvector(&block)?;
        let v = ComplexVector::from_fn(m + 1, |i, _| {
            if i < m {
                eig.vector[i]
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        (v, eig, m)
    } else {
        let eig = leading_eigenvector(&outcome.u)?;
        (eig.vector.clone(), eig, m + 1)
    };

    let rank1_gap = (1.0 - eig.value / dim as f64).max(0.0);
    Ok(LiftedSolution {
        u: project_unit_modulus(&leading_vector, HOMOGENIZER_FLOOR),
        leading_vector,
        u_matrix: outcome.u,
        objective_trace: outcome.objective_trace,
        sweeps: outcome.sweeps,
        converged: outcome.converged,
        rank1_gap,
        weak_rank1: rank1_gap > WEAK_RANK1_GAP,
        eigen_converged: eig.converged,
        eigen_degenerate: eig.degenerate,
    })
}

/// Phases read off a lifted solution, with the re-projected `u = (φ, 1)`.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub phi: ComplexVector,
    pub u: ComplexVector,
    /// `qcqp_objective(u)` (σ²-scaled MAP cost).
    pub objective: f64,
    /// True when the eigenvector had no usable homogenizing entry and the
    /// phases came from a greedy descent seeded by it instead.
    pub used_fallback: bool,
    pub solution: LiftedSolution,
}

/// BCD on the lifted problem, leading eigenvector, de-homogenization.
pub fn estimate_phases(problem: &LiftedProblem, settings: &BcdSettings) -> Result<PhaseEstimate> {
    let solution = bcd_lifting_solve(problem, settings)?;
    let (phi, used_fallback) = dehomogenize(problem, &solution)?;
    let u = homogenize(&phi);
    let objective = qcqp_objective(&u, problem)?;
    Ok(PhaseEstimate {
        phi,
        u,
        objective,
        used_fallback,
        solution,
    })
}

/// Phases from the leading eigenvector. When its homogenizing entry is too
/// small to divide out, a greedy descent seeded from the eigenvector (last
/// entry reset to 1) supplies the phases instead.
pub(crate) fn dehomogenize(
    problem: &LiftedProblem,
    solution: &LiftedSolution,
) -> Result<(ComplexVector, bool)> {
    match extract_phases(&solution.leading_vector) {
        Ok(phi) => Ok((phi, false)),
        Err(Error::DegenerateHomogenization(mag)) => {
            log::debug!("homogenizing entry {mag:e} too small; falling back to greedy descent");
            let mut seed = solution.u.clone();
            let last = seed.len() - 1;
            seed[last] = Complex64::new(1.0, 0.0);
            let refined = greedy_coordinate_solve(problem, &seed, FALLBACK_SWEEPS, FALLBACK_TOL)?;
            Ok((extract_phases(&refined.u)?, true))
        }
        Err(e) => Err(e),
    }
}
