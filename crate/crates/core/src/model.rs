//! Observation model `y = Diag(φ)ᴴ A x + n` with `φ_m = e^{jθ_m}`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{
    check_unit_modulus, circular_gaussian, AngleVector, ComplexMatrix, ComplexVector, RngSeed,
};
use crate::priors::{
    sample_markov_phases, sample_mvm_gibbs, sample_vm1d, MarkovChainParams, MvmParams,
};

/// Gibbs sweeps used to draw phases from a coupled multivariate prior.
pub const GIBBS_SWEEPS: usize = 200;

/// How the true phases θ are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    /// i.i.d. VM(0, κ).
    Vm1d { kappa: f64 },
    /// AR(1) chain.
    Markov { a: f64, sigma_theta_sq: f64 },
    /// Multivariate Von Mises, drawn by Gibbs sampling.
    Mvm(MvmParams),
    /// Uniform on (−π, π]^M.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub m: usize,
    pub k: usize,
    pub sigma_n_sq: f64,
    pub phases: PhaseSource,
    pub seed: RngSeed,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.m < self.k {
            return Err(Error::Config(format!(
                "need M >= K >= 1, got M = {}, K = {}",
                self.m, self.k
            )));
        }
        if !self.sigma_n_sq.is_finite() || self.sigma_n_sq < 0.0 {
            return Err(Error::Config(format!(
                "sigma_n_sq must be finite and nonnegative, got {}",
                self.sigma_n_sq
            )));
        }
        match &self.phases {
            PhaseSource::Vm1d { kappa } if kappa.is_nan() || *kappa < 0.0 => Err(Error::Config(
                format!("vm1d kappa must be >= 0, got {kappa}"),
            )),
            PhaseSource::Markov { a, sigma_theta_sq } => {
                MarkovChainParams::new(*a, *sigma_theta_sq, self.m).map(|_| ())
            }
            PhaseSource::Mvm(p) if p.dim() != self.m => Err(Error::Config(format!(
                "custom prior has dimension {}, expected M = {}",
                p.dim(),
                self.m
            ))),
            _ => Ok(()),
        }
    }
}

/// Ground truth plus the observation it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: ComplexMatrix,
    pub x_true: ComplexVector,
    pub theta_true: AngleVector,
    pub y: ComplexVector,
    pub sigma_n_sq: f64,
    pub seed: RngSeed,
}

impl ProblemInstance {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }
}

fn draw_phases<R: Rng + ?Sized>(
    source: &PhaseSource,
    m: usize,
    rng: &mut R,
) -> Result<AngleVector> {
    match source {
        PhaseSource::Vm1d { kappa } => {
            let raw = (0..m)
                .map(|_| sample_vm1d(0.0, *kappa, rng))
                .collect::<Result<Vec<_>>>()?;
            AngleVector::new(raw)
        }
        PhaseSource::Markov { a, sigma_theta_sq } => {
            let params = MarkovChainParams::new(*a, *sigma_theta_sq, m)?;
            Ok(sample_markov_phases(&params, rng))
        }
        PhaseSource::Mvm(params) => sample_mvm_gibbs(params, GIBBS_SWEEPS, rng),
        PhaseSource::Uniform => {
            let raw = (0..m)
                .map(|_| sample_vm1d(0.0, 0.0, rng))
                .collect::<Result<Vec<_>>>()?;
            AngleVector::new(raw)
        }
    }
}

/// Draws an instance. The draw order is fixed: A (row by row), x, θ, n.
///
/// All draws are circular Gaussian. A has entry variance 1/M, x has unit
/// variance and the noise has variance σ_n².
pub fn generate_instance(config: &GenerationConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let (m, k) = (config.m, config.k);
    let mut rng = config.seed.rng();

    let a_var = 1.0 / m as f64;
    let mut a = ComplexMatrix::zeros(m, k);
    for i in 0..m {
        for j in 0..k {
            a[(i, j)] = circular_gaussian(&mut rng, a_var);
        }
    }
    let x_true = ComplexVector::from_fn(k, |_, _| circular_gaussian(&mut rng, 1.0));
    let theta_true = draw_phases(&config.phases, m, &mut rng)?;
    let noise = ComplexVector::from_fn(m, |_, _| circular_gaussian(&mut rng, config.sigma_n_sq));

    let ax = &a * &x_true;
    let y = ComplexVector::from_fn(m, |i, _| Complex64::cis(-theta_true[i]) * ax[i] + noise[i]);

    Ok(ProblemInstance {
        a,
        x_true,
        theta_true,
        y,
        sigma_n_sq: config.sigma_n_sq,
        seed: config.seed,
    })
}

/// Rewrites the model for prior mean phases μ so the solver can assume μ = 0.
///
/// With `ϑ = θ − μ`, `Diag(e^{jθ})ᴴ A = Diag(e^{jϑ})ᴴ Diag(e^{−jμ}) A`, so the
/// returned matrix is `Diag(e^{−jμ}) A`.
pub fn absorb_mean_phases(a: &ComplexMatrix, mu: &AngleVector) -> Result<ComplexMatrix> {
    if a.nrows() != mu.len() {
        return Err(Error::Dimension(format!(
            "A has {} rows, mu has length {}",
            a.nrows(),
            mu.len()
        )));
    }
    let mut out = a.clone();
    for (i, &t) in mu.iter().enumerate() {
        if t != 0.0 {
            let u = Complex64::cis(-t);
            out.row_mut(i).iter_mut().for_each(|z| *z *= u);
        }
    }
    Ok(out)
}

/// Moore–Penrose pseudo-inverse with its numerical rank.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: ComplexMatrix,
    pub rank: usize,
    /// True when the numerical rank is below the column count.
    pub rank_deficient: bool,
}

/// SVD pseudo-inverse; singular values below `1e-12 · σ_max` count as zero.
pub fn pseudo_inverse(a: &ComplexMatrix) -> PseudoInverse {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return PseudoInverse {
            matrix: ComplexMatrix::zeros(k, m),
            rank: 0,
            rank_deficient: k > 0,
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("U requested");
    let v_t = svd.v_t.expect("V requested");
    let s_max = svd.singular_values.max();
    let cutoff = 1e-12 * s_max;

    let mut pinv = ComplexMatrix::zeros(k, m);
    let mut rank = 0;
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        rank += 1;
        // A⁺ = Σ_i v_i u_iᴴ / s_i
        let v_col = v_t.row(idx).adjoint();
        let u_col = u.column(idx);
        pinv += (v_col * u_col.adjoint()) / Complex64::new(s, 0.0);
    }
    PseudoInverse {
        matrix: pinv,
        rank,
        rank_deficient: rank < k,
    }
}

/// Maximum-likelihood signal for fixed phases: `A⁺ Diag(φ) y`.
pub fn recover_signal(
    phi: &ComplexVector,
    y: &ComplexVector,
    a_pinv: &ComplexMatrix,
) -> Result<ComplexVector> {
    if phi.len() != y.len() || a_pinv.ncols() != y.len() {
        return Err(Error::Dimension(format!(
            "phi has length {}, y has length {}, A⁺ is {}x{}",
            phi.len(),
            y.len(),
            a_pinv.nrows(),
            a_pinv.ncols()
        )));
    }
    check_unit_modulus(phi, 1e-9)?;
    let rotated = phi.component_mul(y);
    Ok(a_pinv * rotated)
}
