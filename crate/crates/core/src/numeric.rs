//! Numeric types shared across the crate: dense complex matrices and angle
//! handling, plus the seeded RNG.
//!
//! Storage is dense everywhere. Matrices are plain `nalgebra` values; the
//! crate never resizes them after construction.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;
pub type RealMatrix = DMatrix<f64>;

/// The generator used for every random draw in the crate.
pub type PriorRng = Xoshiro256PlusPlus;

/// Recorded in output metadata so runs can be reproduced across builds.
pub const RNG_NAME: &str = "xoshiro256plusplus";
pub const SEED_MIX_NAME: &str = "splitmix64";

const TWO_PI: f64 = 2.0 * PI;

/// 64-bit seed. Identical seed and identical config produce bit-identical
/// instances.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> PriorRng {
        PriorRng::seed_from_u64(self.0)
    }

    /// Child seed for stream `index`: `splitmix64(seed + index)`.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0.wrapping_add(index)))
    }
}

impl std::fmt::Display for RngSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Wraps a finite angle into the half-open interval (-π, π]; -π maps to π.
pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot wrap non-finite angle {x}")));
    }
    if x > -PI && x <= PI {
        return Ok(x);
    }
    let mut r = x.rem_euclid(TWO_PI);
    // rem_euclid may round up to exactly 2π for tiny negative inputs
    if r >= TWO_PI {
        r -= TWO_PI;
    }
    if r > PI {
        r -= TWO_PI;
    }
    if r <= -PI {
        r += TWO_PI;
    }
    Ok(r)
}

/// Angles in (-π, π]. Wrapping is applied on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector(Vec<f64>);

impl AngleVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        let wrapped = angles
            .into_iter()
            .map(wrap_angle)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(wrapped))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `[e^{jθ_1}, ..., e^{jθ_M}]`.
    pub fn to_phasors(&self) -> ComplexVector {
        ComplexVector::from_iterator(self.0.len(), self.0.iter().map(|&t| Complex64::cis(t)))
    }

    /// Angles of a phasor vector. Zero entries map to angle 0.
    pub fn from_phasors(phi: &ComplexVector) -> Self {
        let angles = phi
            .iter()
            .map(|z| if z.norm() == 0.0 { 0.0 } else { z.arg() })
            .map(|t| if t <= -PI { PI } else { t })
            .collect();
        Self(angles)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&t| t == 0.0)
    }
}

impl std::ops::Index<usize> for AngleVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Largest entrywise deviation `|Q_ik - conj(Q_ki)|`.
pub fn hermitian_asymmetry(q: &ComplexMatrix) -> Result<f64> {
    if !q.is_square() {
        return Err(Error::Dimension(format!(
            "Hermitian check needs a square matrix, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let n = q.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for k in i..n {
            worst = worst.max((q[(i, k)] - q[(k, i)].conj()).norm());
        }
    }
    Ok(worst)
}

pub fn hermitian_check(q: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(hermitian_asymmetry(q)? <= tol)
}

pub fn require_hermitian(q: &ComplexMatrix, tol: f64) -> Result<()> {
    let asymmetry = hermitian_asymmetry(q)?;
    if asymmetry > tol {
        return Err(Error::NotHermitian { asymmetry, tol });
    }
    Ok(())
}

/// Ascending eigenvalues of a Hermitian matrix (dense Jacobi/QR via nalgebra).
pub fn hermitian_eigenvalues(q: &ComplexMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(q.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn check_unit_modulus(v: &ComplexVector, tol: f64) -> Result<()> {
    for (i, z) in v.iter().enumerate() {
        let dev = (z.norm() - 1.0).abs();
        if dev.is_nan() || dev > tol {
            return Err(Error::Precondition(format!(
                "entry {i} has modulus {} (tolerance {tol:e})",
                z.norm()
            )));
        }
    }
    Ok(())
}

/// Entrywise `z / |z|`; entries smaller than `floor` in modulus become 1.
pub fn project_unit_modulus(v: &ComplexVector, floor: f64) -> ComplexVector {
    v.map(|z| {
        let r = z.norm();
        if r < floor {
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    })
}

/// One draw of a circular complex Gaussian with the given variance: real and
/// imaginary parts are i.i.d. N(0, variance / 2).
pub fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn real_to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
