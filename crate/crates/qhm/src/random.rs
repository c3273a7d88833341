//! Deterministic random test data: band-limited smooth elements and exactly
//! skew-adjoint coefficient matrices.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connection::skew_symmetrize;
use crate::element::{AlgebraElement, ZakProfile};
use crate::error::{QhmError, Result};
use crate::matrix::{AlgebraMatrix, AlgebraVector};
use crate::params::{AlgebraParams, Truncation};

/// Shape of the random ensemble: base-sector plane waves up to x-frequency
/// `m_max` and y-frequency `n0`, plus a Gaussian layer per winding up to
/// `p0`, all with magnitudes decaying geometrically in the total degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomProfile {
    pub p0: i64,
    pub n0: i64,
    pub m_max: i64,
    pub decay: f64,
    pub width: f64,
    pub center_lo: f64,
    pub center_hi: f64,
}

impl Default for RandomProfile {
    fn default() -> Self {
        // m_max = 1 keeps the seam extrapolation of the plane-wave part two
        // orders below the 1e-8 smoothness bound and stays valid down to
        // Nx = 16 for the convergence runs.
        RandomProfile {
            p0: 1,
            n0: 4,
            m_max: 1,
            decay: 0.5,
            width: 0.35,
            center_lo: 0.35,
            center_hi: 0.65,
        }
    }
}

impl RandomProfile {
    pub fn validate(&self) -> Result<()> {
        if self.p0 < 0 || self.n0 < 0 || self.m_max < 0 {
            return Err(QhmError::InvalidParams("profile bands must be nonnegative".into()));
        }
        if !(self.decay.is_finite() && self.decay > 0.0 && self.decay <= 1.0) {
            return Err(QhmError::InvalidParams(format!("decay must lie in (0,1], got {}", self.decay)));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(QhmError::InvalidParams("width must be positive".into()));
        }
        if !(self.center_lo.is_finite()
            && self.center_hi.is_finite()
            && self.center_lo <= self.center_hi)
        {
            return Err(QhmError::InvalidParams("center range is empty".into()));
        }
        Ok(())
    }
}

fn unit_disc(rng: &mut ChaCha8Rng) -> Complex64 {
    // Fixed draw order keeps the stream layout stable across runs.
    let re = rng.gen_range(-1.0..1.0);
    let im = rng.gen_range(-1.0..1.0);
    Complex64::new(re, im)
}

/// Seed-deterministic smooth element within the profile's bands.
pub fn random_element(
    params: AlgebraParams,
    trunc: Truncation,
    seed: u64,
    profile: &RandomProfile,
) -> Result<AlgebraElement> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = AlgebraElement::zeros(params, trunc)?;
    for m in -profile.m_max..=profile.m_max {
        for n in -profile.n0..=profile.n0 {
            let z = unit_disc(&mut rng) * profile.decay.powi((m.abs() + n.abs()) as i32);
            let wave = AlgebraElement::fourier_element(params, trunc, m, n)?;
            acc = acc.add(&wave.scale(z))?;
        }
    }
    for p in 1..=profile.p0 {
        for &sign in &[1i64, -1] {
            let p = sign * p;
            let center = rng.gen_range(profile.center_lo..=profile.center_hi);
            let mut h_coeffs = Vec::new();
            for n in -profile.n0..=profile.n0 {
                let z = unit_disc(&mut rng) * profile.decay.powi((p.abs() + n.abs()) as i32);
                h_coeffs.push((n, z));
            }
            let layer = ZakProfile {
                p,
                center,
                width: profile.width,
                h_coeffs,
            };
            let out = AlgebraElement::zak_element(params, trunc, &layer)?;
            acc = acc.add(&out.element)?;
        }
    }
    Ok(acc)
}

/// Seed-deterministic q x q matrix, exactly skew-adjoint by construction.
pub fn random_skew_matrix(
    params: AlgebraParams,
    trunc: Truncation,
    seed: u64,
    q: usize,
    profile: &RandomProfile,
) -> Result<AlgebraMatrix> {
    if q == 0 {
        return Err(QhmError::InvalidParams("matrix size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(q * q);
    for _ in 0..q * q {
        let sub = rng.gen::<u64>();
        entries.push(random_element(params, trunc, sub, profile)?);
    }
    Ok(skew_symmetrize(&AlgebraMatrix::from_entries(q, entries)?))
}

/// Seed-deterministic module vector of length q.
pub fn random_vector(
    params: AlgebraParams,
    trunc: Truncation,
    seed: u64,
    q: usize,
    profile: &RandomProfile,
) -> Result<AlgebraVector> {
    if q == 0 {
        return Err(QhmError::InvalidParams("vector length must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(q);
    for _ in 0..q {
        let sub = rng.gen::<u64>();
        entries.push(random_element(params, trunc, sub, profile)?);
    }
    AlgebraVector::from_entries(entries)
}
