//! Leading eigenvector of a Hermitian PSD matrix by power iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{project_unit_modulus, ComplexMatrix, ComplexVector};

pub const EIGENVALUE_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const MAX_POWER_ITERATIONS: usize = 10_000;
const SECOND_EIGENVALUE_ITERATIONS: usize = 300;
const DEGENERACY_RATIO: f64 = 1e-9;

/// Homogenizing entries below this magnitude cannot be divided out.
pub const HOMOGENIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LeadingEigen {
    /// Unit 2-norm.
    pub vector: ComplexVector,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration limit was hit; `vector` is then the last iterate.
    pub converged: bool,
    /// λ₁/λ₂ within 1 + 1e-9: the leading eigenspace is not one-dimensional.
    pub degenerate: bool,
}

fn normalize(v: &mut ComplexVector) -> f64 {
    let n = v.norm();
    if n > 0.0 {
        *v /= Complex64::new(n, 0.0);
    }
    n
}

/// Deterministic start used whenever all-ones is unusable.
fn pattern_vector(n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |k, _| {
        let t = k as f64 + 1.0;
        Complex64::new(1.0 + 0.5 * (1.3 * t).sin(), 0.5 * (0.7 * t).cos())
    })
}

struct PowerRun {
    vector: ComplexVector,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn power_iterate(u: &ComplexMatrix, mut v: ComplexVector, max_iter: usize) -> PowerRun {
    normalize(&mut v);
    let mut uv = u * &v;
    let mut lambda = v.dotc(&uv).re;
    for it in 1..=max_iter {
        let mut next = uv.clone();
        if normalize(&mut next) == 0.0 {
            // v lies in the null space; every vector is an eigenvector for 0
            return PowerRun {
                vector: v,
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let u_next = u * &next;
        let next_lambda = next.dotc(&u_next).re;
        let residual = (&u_next - &next * Complex64::new(next_lambda, 0.0)).norm();
        let scale = next_lambda.abs().max(f64::MIN_POSITIVE);
        let settled = (next_lambda - lambda).abs() <= EIGENVALUE_TOL * scale
            && residual <= RESIDUAL_TOL * scale;
        v = next;
        uv = u_next;
        lambda = next_lambda;
        if settled {
            return PowerRun {
                vector: v,
                value: lambda,
                iterations: it,
                converged: true,
            };
        }
    }
    PowerRun {
        vector: v,
        value: lambda,
        iterations: max_iter,
        converged: false,
    }
}

/// Largest eigenvalue of `U − λ vvᴴ` seen by a short power iteration on the
/// complement of `v`. Returns the Rayleigh quotient on `U` and the final vector.
fn second_eigen(u: &ComplexMatrix, v: &ComplexVector) -> (f64, ComplexVector) {
    let project = |w: &mut ComplexVector| {
        let c = v.dotc(w);
        *w -= v * c;
    };
    let mut w = pattern_vector(u.nrows());
    project(&mut w);
    if normalize(&mut w) == 0.0 {
        return (f64::NEG_INFINITY, w);
    }
    let mut mu = w.dotc(&(u * &w)).re;
    for _ in 0..SECOND_EIGENVALUE_ITERATIONS {
        let mut next = u * &w;
        project(&mut next);
        if normalize(&mut next) == 0.0 {
            break;
        }
        let next_mu = next.dotc(&(u * &next)).re;
        w = next;
        let done = (next_mu - mu).abs() <= EIGENVALUE_TOL * next_mu.abs().max(f64::MIN_POSITIVE);
        mu = next_mu;
        if done {
            break;
        }
    }
    (mu, w)
}

pub fn leading_eigenvector(u: &ComplexMatrix) -> Result<LeadingEigen> {
    if !u.is_square() || u.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "leading eigenvector needs a nonempty square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let n = u.nrows();
    let ones = ComplexVector::from_element(n, Complex64::new(1.0, 0.0));
    let start = if (u * &ones).norm() <= 1e-14 * u.norm() && u.norm() > 0.0 {
        pattern_vector(n)
    } else {
        ones
    };
    let mut run = power_iterate(u, start, MAX_POWER_ITERATIONS);
    let mut iterations = run.iterations;

    let (mut mu, w) = second_eigen(u, &run.vector);
    if mu > run.value * (1.0 + DEGENERACY_RATIO) && mu > 0.0 {
        // the start vector missed the leading eigenspace
        let retry = power_iterate(u, w, MAX_POWER_ITERATIONS);
        iterations += retry.iterations;
        run = retry;
        mu = second_eigen(u, &run.vector).0;
    }
    let degenerate = n == 1 || mu >= run.value * (1.0 - DEGENERACY_RATIO);
    Ok(LeadingEigen {
        vector: run.vector,
        value: run.value,
        iterations,
        converged: run.converged,
        degenerate: degenerate && n > 1,
    })
}

/// `φ_i = u_i · conj(u_last)/|u_last|`, each entry then pushed to unit modulus
/// (entries below 1e-12 in modulus become 1).
pub fn extract_phases(u: &ComplexVector) -> Result<ComplexVector> {
    let n = u.len();
    if n < 2 {
        return Err(Error::Dimension(format!(
            "need at least two entries, got {n}"
        )));
    }
    let last = u[n - 1];
    if last.norm() < HOMOGENIZER_FLOOR {
        return Err(Error::DegenerateHomogenization(last.norm()));
    }
    let rot = last.conj() / last.norm();
    let phi = u.rows(0, n - 1).map(|z| z * rot);
    Ok(project_unit_modulus(&phi, HOMOGENIZER_FLOOR))
}
