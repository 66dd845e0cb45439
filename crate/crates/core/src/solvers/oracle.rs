//! Exhaustive grid search for tiny QCQPs, used as a test oracle.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::ComplexVector;
use crate::problem::{quadratic_form, LiftedProblem};

pub const MAX_ORACLE_PHASES: usize = 4;
pub const MAX_ORACLE_GRID: usize = 128;

/// Best grid point of `uᴴQu` with `u_{M+1} = 1` and every other angle on
/// `{2πk/grid − π}`. Ties keep the first grid point in odometer order.
pub fn brute_force_oracle(
    problem: &LiftedProblem,
    grid_points_per_phase: usize,
) -> Result<(ComplexVector, f64)> {
    let m = problem.m_dim();
    if m > MAX_ORACLE_PHASES {
        return Err(Error::OracleTooLarge(format!(
            "M = {m} exceeds {MAX_ORACLE_PHASES}"
        )));
    }
    if grid_points_per_phase == 0 || grid_points_per_phase > MAX_ORACLE_GRID {
        return Err(Error::OracleTooLarge(format!(
            "grid of {grid_points_per_phase} points per phase outside 1..={MAX_ORACLE_GRID}"
        )));
    }
    let g = grid_points_per_phase;
    let phasors: Vec<Complex64> = (0..g)
        .map(|k| Complex64::cis(2.0 * PI * k as f64 / g as f64 - PI))
        .collect();

    let mut idx = vec![0usize; m];
    let mut u = ComplexVector::from_element(m + 1, Complex64::new(1.0, 0.0));
    let mut best_u = u.clone();
    let mut best = f64::INFINITY;
    loop {
        for (slot, &k) in idx.iter().enumerate() {
            u[slot] = phasors[k];
        }
        let v = quadratic_form(problem.q(), &u).re;
        if v < best {
            best = v;
            best_u.copy_from(&u);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok((best_u, best));
            }
            idx[pos] += 1;
            if idx[pos] < g {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
