//! Row-by-row block-coordinate descent for
//! `min tr(QU)  s.t.  U ⪰ 0, diag(U) = 1`.
//!
//! Each step rewrites one row/column of `U` in closed form. With `B` the
//! principal submatrix of `U` without row `i` and `q` the off-diagonal part of
//! column `i` of `Q`, the new column is `−√((1−ν)/γ) · B q` where
//! `γ = qᴴ B q`, or zero when `γ ≤ 0`. The barrier parameter `ν` keeps the
//! Schur complement `1 − yᴴ B⁻¹ y = ν` strictly positive.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{require_hermitian, ComplexMatrix, RngSeed};
use crate::problem::HERMITIAN_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcdSettings {
    pub max_sweeps: usize,
    /// Stop when the relative objective change over one sweep drops below this.
    pub objective_tol: f64,
    pub barrier_nu: f64,
    /// Used only when `shuffle` is on.
    pub seed: RngSeed,
    /// Random sweep order instead of cyclic 1..n.
    pub shuffle: bool,
}

impl Default for BcdSettings {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            objective_tol: 1e-6,
            barrier_nu: 1e-3,
            seed: RngSeed(0),
            shuffle: false,
        }
    }
}

impl BcdSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.barrier_nu) {
            return Err(Error::Config(format!(
                "barrier_nu must lie in [0, 1), got {}",
                self.barrier_nu
            )));
        }
        if self.objective_tol.is_nan() || self.objective_tol < 0.0 {
            return Err(Error::Config(format!(
                "objective_tol must be nonnegative, got {}",
                self.objective_tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Raw BCD result on a Hermitian cost matrix.
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub u: ComplexMatrix,
    /// `tr(QU)` at the start and after every sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl BcdOutcome {
    pub fn objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("trace holds the initial objective")
    }
}

/// `Re tr(QU)` for Hermitian `Q`, `U`.
pub fn trace_product(q: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
    q.iter().zip(u.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}

/// Runs BCD from `U = I` on any Hermitian `q`.
pub fn bcd_sdp(q: &ComplexMatrix, settings: &BcdSettings) -> Result<BcdOutcome> {
    settings.validate()?;
    require_hermitian(q, HERMITIAN_TOL)?;
    let n = q.nrows();
    let mut u = ComplexMatrix::identity(n, n);
    let mut trace = vec![trace_product(q, &u)];
    if n <= 1 {
        return Ok(BcdOutcome {
            u,
            objective_trace: trace,
            sweeps: 0,
            converged: true,
        });
    }

    let scale: f64 = (0..n).map(|i| q[(i, i)].norm()).sum::<f64>() + q.norm();
    let floor = 1e-12 * (1.0 + scale);
    let shrink = 1.0 - settings.barrier_nu;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = settings.seed.rng();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < settings.max_sweeps {
        if settings.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            col.copy_from_slice(q.column(i).as_slice());
            col[i] = Complex64::new(0.0, 0.0);

            // c = U q restricted to the rows other than i; U is Hermitian so
            // c_k = ⟨U[:, k], q⟩ with contiguous columns.
            let us = u.as_slice();
            for (k, ck) in c.iter_mut().enumerate() {
                if k == i {
                    *ck = Complex64::new(0.0, 0.0);
                    continue;
                }
                let uk = &us[k * n..(k + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in uk.iter().zip(col.iter()) {
                    acc += a.conj() * b;
                }
                *ck = acc;
            }
            let gamma: f64 = c
                .iter()
                .zip(col.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum();
            if !gamma.is_finite() {
                return Err(Error::SolverFailure {
                    reason: format!("non-finite γ at coordinate {i}"),
                    sweeps,
                    objective_trace: trace,
                });
            }
            let alpha = if gamma > 0.0 {
                -(shrink / gamma).sqrt()
            } else {
                0.0
            };
            for k in 0..n {
                if k == i {
                    continue;
                }
                let v = c[k] * alpha;
                u[(k, i)] = v;
                u[(i, k)] = v.conj();
            }
            u[(i, i)] = Complex64::new(1.0, 0.0);
        }
        sweeps += 1;

        let f = trace_product(q, &u);
        if !f.is_finite() {
            return Err(Error::SolverFailure {
                reason: "non-finite objective".into(),
                sweeps,
                objective_trace: trace,
            });
        }
        let prev = *trace.last().unwrap();
        trace.push(f);

        #[cfg(debug_assertions)]
        if sweeps % 50 == 0 {
            let min_eig = crate::numeric::hermitian_eigenvalues(&u)[0];
            debug_assert!(
                min_eig >= -1e-8,
                "BCD iterate lost PSD-ness: λ_min = {min_eig:e}"
            );
        }

        if (prev - f).abs() <= settings.objective_tol * f.abs().max(floor) {
            converged = true;
            break;
        }
    }

    Ok(BcdOutcome {
        u,
        objective_trace: trace,
        sweeps,
        converged,
    })
}
