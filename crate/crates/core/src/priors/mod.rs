//! Multivariate Von Mises phase priors.
//!
//! The multivariate density is
//! `p(θ) ∝ exp(κᵀc − sᵀΔs − cᵀΔc)` with `c_m = cos(θ_m − μ_m)` and
//! `s_m = sin(θ_m − μ_m)`. Its normalizing constant has no closed form and is
//! never computed: everything downstream works with differences of log
//! densities or with argmins.
//!
//! With μ = 0, maximizing this density over θ is the same as minimizing the
//! Mahalanobis distance `(φ − 1)ᴴ Γ⁻¹ (φ − 1)` over unit-modulus `φ = e^{jθ}`,
//! where the precision `Γ⁻¹` carries Δ off the diagonal and
//! `κ_i/2 − Σ_{l≠i} Δ_il` on it. [`precision_from_mvm`] builds that matrix.

pub mod bessel;

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::{check_unit_modulus, wrap_angle, AngleVector, ComplexVector, RealMatrix};

pub use bessel::{bessel_i0, bessel_i1, ln_bessel_i0};

const SYMMETRY_TOL: f64 = 1e-12;

fn max_asymmetry(m: &RealMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in (i + 1)..n {
            worst = worst.max((m[(i, k)] - m[(k, i)]).abs());
        }
    }
    worst
}

/// Parameters (κ, Δ, μ) of the multivariate Von Mises density.
#[derive(Debug, Clone, PartialEq)]
pub struct MvmParams {
    kappa: Vec<f64>,
    delta: RealMatrix,
    mu: AngleVector,
}

impl MvmParams {
    pub fn new(kappa: Vec<f64>, delta: RealMatrix, mu: AngleVector) -> Result<Self> {
        let m = kappa.len();
        if delta.nrows() != m || delta.ncols() != m || mu.len() != m {
            return Err(Error::Dimension(format!(
                "kappa has length {m}, delta is {}x{}, mu has length {}",
                delta.nrows(),
                delta.ncols(),
                mu.len()
            )));
        }
        if kappa.iter().any(|k| !k.is_finite()) || delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Domain("non-finite kappa or delta entry".into()));
        }
        if let Some(i) = (0..m).find(|&i| delta[(i, i)] != 0.0) {
            return Err(Error::Domain(format!(
                "delta must have an exactly zero diagonal (delta[{i},{i}] = {})",
                delta[(i, i)]
            )));
        }
        let asym = max_asymmetry(&delta);
        if asym > SYMMETRY_TOL {
            return Err(Error::Domain(format!(
                "delta is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self { kappa, delta, mu })
    }

    /// Independent Von Mises phases with a common concentration and zero mean.
    pub fn independent(kappa: f64, m: usize) -> Self {
        Self {
            kappa: vec![kappa; m],
            delta: RealMatrix::zeros(m, m),
            mu: AngleVector::zeros(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn delta(&self) -> &RealMatrix {
        &self.delta
    }

    pub fn mu(&self) -> &AngleVector {
        &self.mu
    }
}

/// The precision matrix Γ_φ⁻¹ of the phase prior, plus the prior mean phases
/// (absorbed into the mixing matrix before solving).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePrecision {
    matrix: RealMatrix,
    mean_phases: AngleVector,
}

impl PhasePrecision {
    pub fn new(matrix: RealMatrix, mean_phases: AngleVector) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != mean_phases.len() {
            return Err(Error::Dimension(format!(
                "precision is {}x{}, mean phases have length {}",
                matrix.nrows(),
                matrix.ncols(),
                mean_phases.len()
            )));
        }
        let asym = max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL {
            return Err(Error::Domain(format!(
                "precision is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self {
            matrix,
            mean_phases,
        })
    }

    /// The uninformative prior. Solving with it is plain PhaseCut.
    pub fn zeros(m: usize) -> Self {
        Self {
            matrix: RealMatrix::zeros(m, m),
            mean_phases: AngleVector::zeros(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }

    pub fn mean_phases(&self) -> &AngleVector {
        &self.mean_phases
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }

    /// `Σ_{ik} (Γ⁻¹)_{ik}`.
    pub fn entry_sum(&self) -> f64 {
        self.matrix.sum()
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.matrix.clone()).is_some()
    }
}

/// AR(1) phase chain `θ_1 ~ N(0, σ²)`, `θ_i = a θ_{i-1} + ω_i`, `ω_i ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovChainParams {
    a: f64,
    sigma_theta_sq: f64,
    len: usize,
}

impl MarkovChainParams {
    pub fn new(a: f64, sigma_theta_sq: f64, len: usize) -> Result<Self> {
        if !sigma_theta_sq.is_finite() || sigma_theta_sq <= 0.0 {
            return Err(Error::Domain(format!(
                "sigma_theta_sq must be positive and finite, got {sigma_theta_sq}"
            )));
        }
        if !a.is_finite() {
            return Err(Error::Domain(format!(
                "AR coefficient must be finite, got {a}"
            )));
        }
        if len == 0 {
            return Err(Error::Domain(
                "Markov chain needs at least one phase".into(),
            ));
        }
        Ok(Self {
            a,
            sigma_theta_sq,
            len,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma_theta_sq(&self) -> f64 {
        self.sigma_theta_sq
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

fn require_concentration(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Domain(format!(
            "concentration must be finite and nonnegative, got {kappa}"
        )));
    }
    Ok(())
}

/// Normalized 1D Von Mises log-density `κ cos(θ − μ) − ln(2π I0(κ))`.
pub fn vm1d_log_density(theta: f64, mu: f64, kappa: f64) -> Result<f64> {
    require_concentration(kappa)?;
    Ok(kappa * (theta - mu).cos() - (2.0 * PI).ln() - ln_bessel_i0(kappa))
}

/// Exponent of the multivariate density, without the normalizing constant.
pub fn mvm_unnormalized_log_density(theta: &AngleVector, params: &MvmParams) -> Result<f64> {
    let m = params.dim();
    if theta.len() != m {
        return Err(Error::Dimension(format!(
            "theta has length {}, params have dimension {m}",
            theta.len()
        )));
    }
    let (s, c): (Vec<f64>, Vec<f64>) = theta
        .iter()
        .zip(params.mu.iter())
        .map(|(&t, &mu)| (t - mu).sin_cos())
        .unzip();
    let linear: f64 = params.kappa.iter().zip(&c).map(|(k, c)| k * c).sum();
    let mut quad = 0.0;
    for i in 0..m {
        for k in 0..m {
            quad += params.delta[(i, k)] * (s[i] * s[k] + c[i] * c[k]);
        }
    }
    Ok(linear - quad)
}

/// Γ⁻¹ with off-diagonal Δ_ik and diagonal κ_i/2 − Σ_{l≠i} Δ_il.
pub fn precision_from_mvm(params: &MvmParams) -> PhasePrecision {
    let m = params.dim();
    let mut p = params.delta.clone();
    for i in 0..m {
        let off: f64 = (0..m)
            .filter(|&l| l != i)
            .map(|l| params.delta[(i, l)])
            .sum();
        p[(i, i)] = 0.5 * params.kappa[i] - off;
    }
    PhasePrecision {
        matrix: p,
        mean_phases: params.mu.clone(),
    }
}

/// Tridiagonal precision of the AR(1) chain: `(1 + a²)/(2σ²)` on the diagonal
/// except the last entry `1/(2σ²)`, and `−a/(2σ²)` on both first off-diagonals.
pub fn precision_markov(params: &MarkovChainParams) -> Result<PhasePrecision> {
    let m = params.len;
    if m < 2 {
        return Err(Error::Domain(format!(
            "Markov precision needs M >= 2, got {m}"
        )));
    }
    let scale = 1.0 / (2.0 * params.sigma_theta_sq);
    let mut p = RealMatrix::zeros(m, m);
    for i in 0..m {
        p[(i, i)] = if i + 1 == m {
            scale
        } else {
            (1.0 + params.a * params.a) * scale
        };
        if i + 1 < m {
            p[(i, i + 1)] = -params.a * scale;
            p[(i + 1, i)] = -params.a * scale;
        }
    }
    Ok(PhasePrecision {
        matrix: p,
        mean_phases: AngleVector::zeros(m),
    })
}

/// `(φ − 1)ᴴ Γ⁻¹ (φ − 1)` for unit-modulus `φ`.
pub fn mahalanobis_phase_distance(phi: &ComplexVector, precision: &PhasePrecision) -> Result<f64> {
    let m = precision.dim();
    if phi.len() != m {
        return Err(Error::Dimension(format!(
            "phi has length {}, precision is {m}x{m}",
            phi.len()
        )));
    }
    check_unit_modulus(phi, 1e-9)?;
    let d: Vec<Complex64> = phi.iter().map(|z| z - 1.0).collect();
    let mut acc = 0.0;
    for i in 0..m {
        let row: Complex64 = d
            .iter()
            .enumerate()
            .map(|(k, dk)| dk * precision.matrix[(i, k)])
            .sum();
        acc += (d[i].conj() * row).re;
    }
    Ok(acc)
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    // u in [0, 1) gives (−π, π]
    PI * (1.0 - 2.0 * u)
}

/// One draw from VM(μ, κ) by the Best–Fisher rejection sampler
/// (wrapped-Cauchy envelope). κ = 0 is uniform on (−π, π].
pub fn sample_vm1d<R: Rng + ?Sized>(mu: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    require_concentration(kappa)?;
    if !mu.is_finite() {
        return Err(Error::Domain(format!(
            "mean angle must be finite, got {mu}"
        )));
    }
    if kappa < 1e-12 {
        return Ok(uniform_angle(rng));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let dev = f.clamp(-1.0, 1.0).acos();
            let theta = if u3 < 0.5 { mu - dev } else { mu + dev };
            return wrap_angle(theta);
        }
    }
}

/// Draws one AR(1) phase chain. The recursion runs on unwrapped reals; only the
/// output is wrapped.
pub fn sample_markov_phases<R: Rng + ?Sized>(
    params: &MarkovChainParams,
    rng: &mut R,
) -> AngleVector {
    let sd = params.sigma_theta_sq.sqrt();
    let mut prev = 0.0;
    let raw: Vec<f64> = (0..params.len)
        .map(|i| {
            let w: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
            prev = if i == 0 { w } else { params.a * prev + w };
            prev
        })
        .collect();
    AngleVector::new(raw).expect("AR(1) draws are finite")
}

/// Approximate draw from the multivariate density by systematic-scan Gibbs
/// sampling. Each full conditional is a 1D Von Mises: with centered angles
/// `ϑ = θ − μ`, `ϑ_i | rest ~ VM(arg w, |w|)` where
/// `w = κ_i − 2 Σ_{k≠i} Δ_ik e^{jϑ_k}`.
pub fn sample_mvm_gibbs<R: Rng + ?Sized>(
    params: &MvmParams,
    sweeps: usize,
    rng: &mut R,
) -> Result<AngleVector> {
    let m = params.dim();
    if params.kappa.iter().any(|&k| k < 0.0) {
        return Err(Error::Domain(
            "Gibbs sampling needs nonnegative concentrations".into(),
        ));
    }
    let mut centered = vec![0.0_f64; m];
    let mut phasors = vec![Complex64::new(1.0, 0.0); m];
    for _ in 0..sweeps.max(1) {
        for i in 0..m {
            let mut w = Complex64::new(params.kappa[i], 0.0);
            for k in (0..m).filter(|&k| k != i) {
                w -= 2.0 * params.delta[(i, k)] * phasors[k];
            }
            let t = sample_vm1d(w.arg(), w.norm(), rng)?;
            centered[i] = t;
            phasors[i] = Complex64::cis(t);
        }
    }
    AngleVector::new(
        centered
            .iter()
            .zip(params.mu.iter())
            .map(|(t, mu)| t + mu)
            .collect(),
    )
}
