//! Built-in invariant suite behind `priorcut verify`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::model::{generate_instance, pseudo_inverse, GenerationConfig, PhaseSource};
use crate::numeric::{
    circular_gaussian, hermitian_eigenvalues, AngleVector, ComplexMatrix, ComplexVector,
    RealMatrix, RngSeed,
};
use crate::priors::{
    mahalanobis_phase_distance, mvm_unnormalized_log_density, precision_from_mvm, precision_markov,
    MarkovChainParams, MvmParams, PhasePrecision,
};
use crate::problem::{build_m, build_q, LiftedProblem};
use crate::solvers::{
    bcd_lifting_solve, brute_force_oracle, estimate_phases, extract_phases, leading_eigenvector,
    BcdSettings,
};

const VERIFY_SEED: RngSeed = RngSeed(0x5eed);

type Check = fn() -> Result<CheckResult>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Runs every check. Errors inside a check count as a failure of that check.
pub fn run_all() -> Vec<CheckResult> {
    let checks: [(&'static str, Check); 6] = [
        ("log_density_equivalence", log_density_equivalence),
        ("phasecut_reduction", phasecut_reduction),
        ("markov_precision_pd", markov_precision_pd),
        ("bcd_invariants", bcd_invariants),
        ("rank1_roundtrip", rank1_roundtrip),
        ("oracle_agreement", oracle_agreement),
    ];
    checks
        .iter()
        .map(|(name, check)| {
            check().unwrap_or_else(|e| CheckResult::new(name, false, format!("error: {e}")))
        })
        .collect()
}

fn random_phases<R: Rng>(m: usize, rng: &mut R) -> Result<AngleVector> {
    AngleVector::new((0..m).map(|_| rng.random_range(-PI..PI)).collect())
}

/// Log-density differences match negated Mahalanobis differences.
pub fn log_density_equivalence() -> Result<CheckResult> {
    let mut rng = VERIFY_SEED.derive(1).rng();
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let m = rng.random_range(2..=8);
        let kappa: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
        let mut delta = RealMatrix::zeros(m, m);
        for i in 0..m {
            for k in i + 1..m {
                let v = rng.random_range(-0.3..0.3);
                delta[(i, k)] = v;
                delta[(k, i)] = v;
            }
        }
        let params = MvmParams::new(kappa, delta, AngleVector::zeros(m))?;
        let precision = precision_from_mvm(&params);
        let (t1, t2) = (random_phases(m, &mut rng)?, random_phases(m, &mut rng)?);
        let dl = mvm_unnormalized_log_density(&t1, &params)?
            - mvm_unnormalized_log_density(&t2, &params)?;
        let dd = mahalanobis_phase_distance(&t1.to_phasors(), &precision)?
            - mahalanobis_phase_distance(&t2.to_phasors(), &precision)?;
        worst = worst.max((dl + dd).abs());
    }
    Ok(CheckResult::new(
        "log_density_equivalence",
        worst <= 1e-9,
        format!("max deviation {worst:.3e} over 200 cases"),
    ))
}

fn instance_m_matrix(m: usize, k: usize, sigma_n_sq: f64, seed: RngSeed) -> Result<ComplexMatrix> {
    let inst = generate_instance(&GenerationConfig {
        m,
        k,
        sigma_n_sq,
        phases: PhaseSource::Vm1d { kappa: 1.0 },
        seed,
    })?;
    let pinv = pseudo_inverse(&inst.a);
    build_m(&inst.y, &inst.a, &pinv.matrix)
}

/// A zero precision leaves Q = [[M, 0], [0, 0]] exactly.
pub fn phasecut_reduction() -> Result<CheckResult> {
    for t in 0..10 {
        let m = 4 + t;
        let mm = instance_m_matrix(m, 2, 0.2, VERIFY_SEED.derive(100 + t as u64))?;
        let q = build_q(&mm, &PhasePrecision::zeros(m), 0.2)?;
        let zero = Complex64::new(0.0, 0.0);
        let exact = (0..m).all(|i| {
            q.q()[(i, m)] == zero
                && q.q()[(m, i)] == zero
                && (0..m).all(|k| q.q()[(i, k)] == mm[(i, k)])
        }) && q.q()[(m, m)] == zero;
        if !exact {
            return Ok(CheckResult::new(
                "phasecut_reduction",
                false,
                format!("M = {m}: Q differs from [[M, 0], [0, 0]]"),
            ));
        }
    }
    Ok(CheckResult::new(
        "phasecut_reduction",
        true,
        "10 instances, exact block structure".into(),
    ))
}

/// The Markov-chain precision is positive definite for chain lengths 2..512.
pub fn markov_precision_pd() -> Result<CheckResult> {
    for len in [2, 3, 8, 64, 256, 512] {
        let p = precision_markov(&MarkovChainParams::new(0.8, 0.1, len)?)?;
        if !p.is_positive_definite() {
            return Ok(CheckResult::new(
                "markov_precision_pd",
                false,
                format!("not PD at length {len}"),
            ));
        }
    }
    Ok(CheckResult::new(
        "markov_precision_pd",
        true,
        "a = 0.8, σ² = 0.1, lengths 2..512".into(),
    ))
}

fn informed_problem(m: usize, k: usize, sigma_n_sq: f64, seed: RngSeed) -> Result<LiftedProblem> {
    let mm = instance_m_matrix(m, k, sigma_n_sq, seed)?;
    build_q(
        &mm,
        &precision_from_mvm(&MvmParams::independent(1.0, m)),
        sigma_n_sq,
    )
}

/// BCD keeps its objective non-increasing and its iterate feasible.
pub fn bcd_invariants() -> Result<CheckResult> {
    let settings = BcdSettings::default();
    let mut worst_rise = 0.0_f64;
    let mut worst_diag = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    for t in 0..20 {
        let m = 2 + t % 7;
        let p = informed_problem(
            m,
            1 + m / 3,
            0.05 + 0.03 * t as f64,
            VERIFY_SEED.derive(200 + t as u64),
        )?;
        let sol = bcd_lifting_solve(&p, &settings)?;
        for w in sol.objective_trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        for i in 0..=m {
            worst_diag = worst_diag.max((sol.u_matrix[(i, i)] - 1.0).norm());
        }
        min_eig = min_eig.min(hermitian_eigenvalues(&sol.u_matrix)[0]);
    }
    let passed = worst_rise <= 1e-9 && worst_diag <= 1e-12 && min_eig >= -1e-8;
    Ok(CheckResult::new(
        "bcd_invariants",
        passed,
        format!("max rise {worst_rise:.3e}, max |diag − 1| {worst_diag:.3e}, min eigenvalue {min_eig:.3e}"),
    ))
}

/// A rank-1 lift `uuᴴ` returns the phases `u_{1:M} conj(u_last)`.
pub fn rank1_roundtrip() -> Result<CheckResult> {
    let mut rng = VERIFY_SEED.derive(3).rng();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let u = ComplexVector::from_fn(n, |_, _| {
            let z = circular_gaussian(&mut rng, 1.0);
            z / z.norm()
        });
        let eig = leading_eigenvector(&(&u * u.adjoint()))?;
        let phi = extract_phases(&eig.vector)?;
        let last = u[n - 1].conj();
        for i in 0..n - 1 {
            worst = worst.max((phi[i] - u[i] * last).norm());
        }
    }
    Ok(CheckResult::new(
        "rank1_roundtrip",
        worst <= 1e-8,
        format!("max deviation {worst:.3e} over 50 lifts"),
    ))
}

/// The informed pipeline lands within 0.05(|oracle| + 1) of a 64-point grid
/// search at M = 3.
pub fn oracle_agreement() -> Result<CheckResult> {
    let settings = BcdSettings::default();
    let mut worst = f64::NEG_INFINITY;
    for t in 0..20 {
        let s2 = if t % 2 == 0 { 0.05 } else { 0.3 };
        let p = informed_problem(3, 2, s2, VERIFY_SEED.derive(400 + t as u64))?;
        let (_, oracle) = brute_force_oracle(&p, 64)?;
        let est = estimate_phases(&p, &settings)?;
        worst = worst.max((est.objective - oracle) / (oracle.abs() + 1.0));
    }
    Ok(CheckResult::new(
        "oracle_agreement",
        worst <= 0.05,
        format!("max relative excess over the oracle {worst:.3e} over 20 instances"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
