//! The homogenized MAP problem.
//!
//! For fixed phases the ML signal is `A⁺ Diag(φ) y`; substituting it back
//! leaves a quadratic in `φ`. Appending a unit entry, `u = (φ, 1)`, turns the
//! whole MAP cost into `uᴴ Q u` with
//!
//! ```text
//! Q = [ M + σ² Γ⁻¹      −σ² Γ⁻¹ 1 ]
//!     [ −σ² 1ᵀ Γ⁻¹    σ² Σ Γ⁻¹_ik ]
//! ```
//!
//! and `M = Diag(ȳ) (I − A A⁺) Diag(y)`. `Q` is the MAP cost scaled by σ²;
//! every objective reported from a [`LiftedProblem`] uses that scaling.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{recover_signal, ProblemInstance};
use crate::numeric::{check_unit_modulus, require_hermitian, ComplexMatrix, ComplexVector};
use crate::priors::{mahalanobis_phase_distance, PhasePrecision};

pub const HERMITIAN_TOL: f64 = 1e-10;

/// Residual norm below which a noiseless model counts as consistent.
pub const NOISELESS_RESIDUAL_TOL: f64 = 1e-9;

/// The (M+1)×(M+1) Hermitian matrix of the homogenized QCQP.
#[derive(Debug, Clone)]
pub struct LiftedProblem {
    q: ComplexMatrix,
    m_dim: usize,
    sigma_n_sq: f64,
    precision: PhasePrecision,
}

impl LiftedProblem {
    pub fn q(&self) -> &ComplexMatrix {
        &self.q
    }

    /// Number of phases M (Q is (M+1)×(M+1)).
    pub fn m_dim(&self) -> usize {
        self.m_dim
    }

    pub fn sigma_n_sq(&self) -> f64 {
        self.sigma_n_sq
    }

    pub fn precision(&self) -> &PhasePrecision {
        &self.precision
    }

    /// True when the homogenizing coordinate has an all-zero row and column,
    /// which happens for the uninformative prior (plain PhaseCut) and for σ² = 0.
    pub fn homogenizer_inert(&self) -> bool {
        let n = self.m_dim;
        (0..=n).all(|k| self.q[(n, k)] == Complex64::new(0.0, 0.0))
    }

    /// Wraps an arbitrary Hermitian matrix, for solver tests. Carries a zero
    /// prior of matching size.
    pub fn from_matrix(q: ComplexMatrix) -> Result<Self> {
        require_hermitian(&q, HERMITIAN_TOL)?;
        let n = q.nrows();
        if n == 0 {
            return Err(Error::Dimension("empty Q".into()));
        }
        Ok(Self {
            q,
            m_dim: n - 1,
            sigma_n_sq: 0.0,
            precision: PhasePrecision::zeros(n - 1),
        })
    }
}

fn symmetrize(m: &mut ComplexMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for k in (i + 1)..n {
            let avg = 0.5 * (m[(i, k)] + m[(k, i)].conj());
            m[(i, k)] = avg;
            m[(k, i)] = avg.conj();
        }
    }
}

/// `Diag(ȳ) (I − A A⁺) Diag(y)`, Hermitian positive semidefinite.
pub fn build_m(
    y: &ComplexVector,
    a: &ComplexMatrix,
    a_pinv: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let m = y.len();
    if a.nrows() != m || a_pinv.ncols() != m || a_pinv.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "y has length {m}, A is {}x{}, A⁺ is {}x{}",
            a.nrows(),
            a.ncols(),
            a_pinv.nrows(),
            a_pinv.ncols()
        )));
    }
    let mut out = -(a * a_pinv);
    for i in 0..m {
        out[(i, i)] += 1.0;
    }
    for i in 0..m {
        for k in 0..m {
            out[(i, k)] *= y[i].conj() * y[k];
        }
    }
    require_hermitian(&out, HERMITIAN_TOL)?;
    symmetrize(&mut out);
    Ok(out)
}

pub fn build_q(
    m_mat: &ComplexMatrix,
    precision: &PhasePrecision,
    sigma_n_sq: f64,
) -> Result<LiftedProblem> {
    if !sigma_n_sq.is_finite() || sigma_n_sq < 0.0 {
        return Err(Error::Domain(format!(
            "sigma_n_sq must be finite and nonnegative, got {sigma_n_sq}"
        )));
    }
    let m = precision.dim();
    if m_mat.nrows() != m || m_mat.ncols() != m {
        return Err(Error::Dimension(format!(
            "M-matrix is {}x{}, precision is {m}x{m}",
            m_mat.nrows(),
            m_mat.ncols()
        )));
    }
    require_hermitian(m_mat, HERMITIAN_TOL)?;

    let p = precision.matrix();
    let mut q = ComplexMatrix::zeros(m + 1, m + 1);
    q.view_mut((0, 0), (m, m)).copy_from(m_mat);
    if sigma_n_sq > 0.0 && !precision.is_zero() {
        for i in 0..m {
            for k in 0..m {
                q[(i, k)] += sigma_n_sq * p[(i, k)];
            }
            let row_sum: f64 = p.row(i).sum();
            q[(i, m)] = Complex64::new(-sigma_n_sq * row_sum, 0.0);
            q[(m, i)] = q[(i, m)].conj();
        }
        q[(m, m)] = Complex64::new(sigma_n_sq * precision.entry_sum(), 0.0);
    }
    require_hermitian(&q, HERMITIAN_TOL)?;
    Ok(LiftedProblem {
        q,
        m_dim: m,
        sigma_n_sq,
        precision: precision.clone(),
    })
}

/// `uᴴ Q u` without preconditions; the imaginary part is discarded.
pub fn quadratic_form(q: &ComplexMatrix, u: &ComplexVector) -> Complex64 {
    let qu = q * u;
    u.dotc(&qu)
}

/// `Re(uᴴ Q u)` for unit-modulus `u` of length M+1 (σ²-scaled MAP cost).
pub fn qcqp_objective(u: &ComplexVector, problem: &LiftedProblem) -> Result<f64> {
    if u.len() != problem.q.nrows() {
        return Err(Error::Dimension(format!(
            "u has length {}, Q is {}x{}",
            u.len(),
            problem.q.nrows(),
            problem.q.ncols()
        )));
    }
    check_unit_modulus(u, 1e-9)?;
    let v = quadratic_form(&problem.q, u);
    assert!(
        v.im.abs() <= 1e-9 * v.re.abs().max(1.0),
        "uᴴQu has imaginary part {:e}; Q is not Hermitian",
        v.im
    );
    Ok(v.re)
}

/// The unscaled MAP cost `(1/σ²)‖y − Diag(φ)ᴴ A x̂(φ)‖² + ‖φ − 1‖²_Γ`.
///
/// `a_pinv` must be the pseudo-inverse of `instance.a`, and the prior must have
/// zero mean phases (absorb them into the instance first). With σ² = 0 the
/// data term becomes a hard consistency check: the prior term is returned if
/// the residual vanishes, `+∞` otherwise.
pub fn map_objective(
    phi: &ComplexVector,
    instance: &ProblemInstance,
    precision: &PhasePrecision,
    a_pinv: &ComplexMatrix,
) -> Result<f64> {
    if !precision.mean_phases().is_zero() {
        return Err(Error::Precondition(
            "map_objective expects a zero-mean prior; absorb the mean phases first".into(),
        ));
    }
    let x_hat = recover_signal(phi, &instance.y, a_pinv)?;
    let ax = &instance.a * x_hat;
    let residual = &instance.y - phi.map(|z| z.conj()).component_mul(&ax);
    let prior = mahalanobis_phase_distance(phi, precision)?;
    let misfit = residual.norm_squared();
    if instance.sigma_n_sq == 0.0 {
        return Ok(if misfit.sqrt() <= NOISELESS_RESIDUAL_TOL {
            prior
        } else {
            f64::INFINITY
        });
    }
    Ok(misfit / instance.sigma_n_sq + prior)
}

/// `(φ, 1)`.
pub fn homogenize(phi: &ComplexVector) -> ComplexVector {
    let m = phi.len();
    ComplexVector::from_fn(m + 1, |i, _| {
        if i < m {
            phi[i]
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}
