//! Discretized left-regular representation used as an independent oracle
//! for the deformed product and the involution.
//!
//! The representation acts on functions of (x, y, p). It never shifts the
//! x-argument of the vector, so on a fixed x-sample grid the operator is
//! block-diagonal over samples; within a block it is a banded convolution
//! in the (winding, y-frequency) indices with coefficients given by the
//! element evaluated at sample-plus-shift points.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{e, AlgebraElement};
use crate::error::{QhmError, Result};

/// Discretization window: x-samples on [-x_half, x_half], y-frequencies in
/// [-ny, ny], vector windings in [-pv, pv].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepGrid {
    pub x_half: f64,
    pub mx: usize,
    pub ny: i64,
    pub pv: i64,
}

impl Default for RepGrid {
    fn default() -> Self {
        // Step 2*3/24 = 1/4 keeps every sample on the working x-grid for
        // any Nx divisible by 4, so zero-shift evaluations are exact node
        // fetches.
        RepGrid {
            x_half: 3.0,
            mx: 24,
            ny: 12,
            pv: 3,
        }
    }
}

impl RepGrid {
    pub fn validate_extents(&self) -> Result<()> {
        if self.mx == 0 || self.ny <= 0 || self.pv <= 0 {
            return Err(QhmError::InvalidParams("rep grid extents must be positive".into()));
        }
        if !(self.x_half.is_finite() && self.x_half > 0.0) {
            return Err(QhmError::InvalidParams("x-window half-width must be positive".into()));
        }
        Ok(())
    }

    pub fn validate(&self, el: &AlgebraElement) -> Result<()> {
        self.validate_extents()?;
        let p = el.params();
        let t = el.trunc();
        let margin = (t.interp_order / 2) as f64 / t.nx as f64;
        let need = 1.0 + p.hbar * (2 * t.p_max) as f64 * p.mu.abs() + margin;
        if self.x_half < need {
            return Err(QhmError::Precondition(format!(
                "x-window half-width {} is too small for the winding shifts (need >= {need})",
                self.x_half
            )));
        }
        Ok(())
    }

    pub fn sample(&self, a: usize) -> f64 {
        -self.x_half + a as f64 * (2.0 * self.x_half / self.mx as f64)
    }

    pub fn block_dim(&self) -> usize {
        ((2 * self.pv + 1) * (2 * self.ny + 1)) as usize
    }

    fn idx(&self, p: i64, n: i64) -> usize {
        ((p + self.pv) * (2 * self.ny + 1) + (n + self.ny)) as usize
    }
}

fn fnv1a(el: &AlgebraElement) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |bits: u64| {
        for b in bits.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for z in el.coeff().iter() {
        eat(z.re.to_bits());
        eat(z.im.to_bits());
    }
    h
}

/// Block-diagonal matrix over x-samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOperator {
    grid: RepGrid,
    dim: usize,
    blocks: Vec<Vec<Complex64>>,
    source_hash: u64,
}

/// Vector in the sampled representation space, one dense chunk per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RepVector {
    grid: RepGrid,
    blocks: Vec<Vec<Complex64>>,
}

impl RepVector {
    pub fn zeros(grid: RepGrid) -> Self {
        let d = grid.block_dim();
        RepVector {
            grid,
            blocks: vec![vec![Complex64::new(0.0, 0.0); d]; grid.mx],
        }
    }

    pub fn norm(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(QhmError::Mismatch("rep vectors live on different grids".into()));
        }
        let mut out = self.clone();
        for (ob, bb) in out.blocks.iter_mut().zip(&other.blocks) {
            for (o, b) in ob.iter_mut().zip(bb) {
                *o -= *b;
            }
        }
        Ok(out)
    }

    /// Smallest (p-radius, n-radius) band containing every nonzero entry.
    pub fn support(&self) -> (i64, i64) {
        let (mut pr, mut nr) = (0i64, 0i64);
        for block in &self.blocks {
            for p in -self.grid.pv..=self.grid.pv {
                for n in -self.grid.ny..=self.grid.ny {
                    if block[self.grid.idx(p, n)] != Complex64::new(0.0, 0.0) {
                        pr = pr.max(p.abs());
                        nr = nr.max(n.abs());
                    }
                }
            }
        }
        (pr, nr)
    }
}

/// Deterministic trial vector supported on |p| <= p_rad, |n| <= n_rad.
pub fn random_rep_vector(grid: RepGrid, seed: u64, p_rad: i64, n_rad: i64) -> Result<RepVector> {
    if p_rad > grid.pv || n_rad > grid.ny || p_rad < 0 || n_rad < 0 {
        return Err(QhmError::Precondition(format!(
            "trial support ({p_rad},{n_rad}) exceeds the grid bands ({},{})",
            grid.pv, grid.ny
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = RepVector::zeros(grid);
    for block in v.blocks.iter_mut() {
        for p in -p_rad..=p_rad {
            for n in -n_rad..=n_rad {
                let re = rng.gen_range(-1.0..1.0);
                let im = rng.gen_range(-1.0..1.0);
                block[grid.idx(p, n)] = Complex64::new(re, im);
            }
        }
    }
    Ok(v)
}

impl RepOperator {
    pub fn grid(&self) -> RepGrid {
        self.grid
    }

    pub fn source_hash(&self) -> u64 {
        self.source_hash
    }

    pub fn block(&self, a: usize) -> &[Complex64] {
        &self.blocks[a]
    }

    pub fn apply(&self, v: &RepVector) -> Result<RepVector> {
        if v.grid != self.grid {
            return Err(QhmError::Mismatch("operator and vector grids differ".into()));
        }
        let d = self.dim;
        let mut out = RepVector::zeros(self.grid);
        for ((ob, block), vb) in out.blocks.iter_mut().zip(&self.blocks).zip(&v.blocks) {
            for (row, o) in ob.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                let base = row * d;
                for (col, x) in vb.iter().enumerate() {
                    acc += block[base + col] * x;
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> RepOperator {
        let d = self.dim;
        let mut out = self.clone();
        for (ob, block) in out.blocks.iter_mut().zip(&self.blocks) {
            for row in 0..d {
                for col in 0..d {
                    ob[row * d + col] = block[col * d + row].conj();
                }
            }
        }
        out
    }

    /// Largest per-block Frobenius distance.
    pub fn distance(&self, other: &RepOperator) -> Result<f64> {
        if self.grid != other.grid {
            return Err(QhmError::Mismatch("operators live on different grids".into()));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
            worst = worst.max(d2.sqrt());
        }
        Ok(worst)
    }
}

/// Matrix of the representation on the sampled basis. Within the block of
/// sample x_a, the entry coupling column (p', n2) to row (p, n) is
/// component (p - p', n - n2) of the element evaluated at
/// x_a + hbar (p + p') mu, times the phase e((n - n2) hbar (p + p') nu).
pub fn build_rep(el: &AlgebraElement, grid: &RepGrid) -> Result<RepOperator> {
    grid.validate(el)?;
    let d = grid.block_dim();
    let params = *el.params();
    let trunc = *el.trunc();
    let m_cap = (2 * grid.ny).min(trunc.n_max);
    let blocks: Vec<Vec<Complex64>> = (0..grid.mx)
        .into_par_iter()
        .map(|a| {
            let x_a = grid.sample(a);
            let mut block = vec![Complex64::new(0.0, 0.0); d * d];
            for p in -grid.pv..=grid.pv {
                for pp in -grid.pv..=grid.pv {
                    let r = p - pp;
                    if r.abs() > trunc.p_max || el.slice_is_zero(r) {
                        continue;
                    }
                    let s = (p + pp) as f64;
                    let x = x_a + params.hbar * params.mu * s;
                    let rate = params.hbar * params.nu * s;
                    for m in -m_cap..=m_cap {
                        let val = el.eval_component(r, m, x);
                        if val == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let w = val * e(m as f64 * rate);
                        let lo = (-grid.ny).max(-grid.ny - m);
                        let hi = grid.ny.min(grid.ny - m);
                        for n2 in lo..=hi {
                            block[grid.idx(p, n2 + m) * d + grid.idx(pp, n2)] = w;
                        }
                    }
                }
            }
            block
        })
        .collect();
    Ok(RepOperator {
        grid: *grid,
        dim: d,
        blocks,
        source_hash: fnv1a(el),
    })
}

/// Homomorphism residual: max over trial vectors v of
/// ||rep(phi star psi) v - rep(phi) rep(psi) v|| / ||v||. Trial vectors must
/// keep enough band margin that the intermediate vector is never clipped.
pub fn oracle_check_product(
    phi: &AlgebraElement,
    psi: &AlgebraElement,
    grid: &RepGrid,
    trials: &[RepVector],
) -> Result<f64> {
    if phi.params() != psi.params() || phi.trunc() != psi.trunc() {
        return Err(QhmError::Mismatch("oracle factors must share parameters".into()));
    }
    if trials.is_empty() {
        return Err(QhmError::Precondition("need at least one trial vector".into()));
    }
    let (p_phi, n_phi) = (phi.p_support(), phi.n_support());
    let (p_psi, n_psi) = (psi.p_support(), psi.n_support());
    let p_allow = grid.pv - p_phi - p_psi;
    let n_allow = grid.ny - n_phi - n_psi;
    if p_allow < 0 || n_allow < 0 {
        return Err(QhmError::Precondition(format!(
            "grid bands ({},{}) leave no interior for supports ({p_phi},{n_phi})+({p_psi},{n_psi})",
            grid.pv, grid.ny
        )));
    }
    let prod = crate::star::star(phi, psi, *phi.trunc())?;
    let rep_prod = build_rep(&prod, grid)?;
    let rep_phi = build_rep(phi, grid)?;
    let rep_psi = build_rep(psi, grid)?;
    let mut worst = 0.0f64;
    for v in trials {
        let (pr, nr) = v.support();
        if pr > p_allow || nr > n_allow {
            return Err(QhmError::Precondition(format!(
                "trial support ({pr},{nr}) violates the interior margin ({p_allow},{n_allow})"
            )));
        }
        let norm = v.norm();
        if norm == 0.0 {
            continue;
        }
        let lhs = rep_prod.apply(v)?;
        let rhs = rep_phi.apply(&rep_psi.apply(v)?)?;
        worst = worst.max(lhs.sub(&rhs)?.norm() / norm);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{AlgebraParams, Truncation};
    use crate::random::{random_element, RandomProfile};

    fn dp() -> AlgebraParams {
        AlgebraParams::default()
    }

    fn dt() -> Truncation {
        Truncation::default()
    }

    fn grid() -> RepGrid {
        RepGrid::default()
    }

    #[test]
    fn identity_maps_to_the_identity_matrix() {
        let id = AlgebraElement::identity(dp(), dt()).unwrap();
        let op = build_rep(&id, &grid()).unwrap();
        let d = grid().block_dim();
        for a in 0..grid().mx {
            let block = op.block(a);
            for row in 0..d {
                for col in 0..d {
                    let want = if row == col { 1.0 } else { 0.0 };
                    assert_eq!(block[row * d + col], Complex64::new(want, 0.0), "a={a}");
                }
            }
        }
    }

    #[test]
    fn frequency_shift_structure() {
        let g = grid();
        let f01 = AlgebraElement::fourier_element(dp(), dt(), 0, 1).unwrap();
        let op = build_rep(&f01, &g).unwrap();
        let d = g.block_dim();
        let block = op.block(5);
        for p in -g.pv..=g.pv {
            for n2 in -g.ny..=g.ny {
                for pr in -g.pv..=g.pv {
                    for n in -g.ny..=g.ny {
                        let got = block[g.idx(pr, n) * d + g.idx(p, n2)];
                        if pr == p && n == n2 + 1 {
                            let want = e(2.0 * p as f64 * dp().hbar * dp().nu);
                            assert!((got - want).norm() <= 1e-12, "p={p} n2={n2}");
                        } else {
                            assert_eq!(got, Complex64::new(0.0, 0.0), "p={p} n={n} n2={n2}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn star_property_of_the_representation() {
        let el = random_element(dp(), dt(), 31, &RandomProfile::default()).unwrap();
        let lhs = build_rep(&el.involution(), &grid()).unwrap();
        let rhs = build_rep(&el, &grid()).unwrap().adjoint();
        let dist = lhs.distance(&rhs).unwrap();
        assert!(dist <= 1e-10 * el.sup_bound().max(1.0), "{dist}");
    }

    #[test]
    fn oracle_is_exact_on_identity_and_base_sector() {
        let g = grid();
        let id = AlgebraElement::identity(dp(), dt()).unwrap();
        let v = random_rep_vector(g, 3, g.pv, g.ny).unwrap();
        let r = oracle_check_product(&id, &id, &g, &[v]).unwrap();
        assert_eq!(r, 0.0);

        // Base-sector factors with base-sector trials touch only zero-shift
        // evaluations, which are exact node fetches.
        let phi = AlgebraElement::fourier_element(dp(), dt(), 1, 2)
            .unwrap()
            .add(&AlgebraElement::fourier_element(dp(), dt(), 2, -1).unwrap())
            .unwrap();
        let psi = AlgebraElement::fourier_element(dp(), dt(), 1, -3)
            .unwrap()
            .add(&AlgebraElement::fourier_element(dp(), dt(), 0, 2).unwrap())
            .unwrap();
        let trials: Vec<RepVector> = (0..3)
            .map(|s| random_rep_vector(g, s, 0, g.ny - 5).unwrap())
            .collect();
        let r = oracle_check_product(&phi, &psi, &g, &trials).unwrap();
        assert!(r <= 1e-10, "{r}");
    }

    #[test]
    fn oracle_passes_on_random_banded_elements() {
        let g = grid();
        let prof = RandomProfile::default();
        let phi = random_element(dp(), dt(), 101, &prof).unwrap();
        let psi = random_element(dp(), dt(), 202, &prof).unwrap();
        let p_allow = g.pv - phi.p_support() - psi.p_support();
        let n_allow = g.ny - phi.n_support() - psi.n_support();
        assert!(p_allow >= 1 && n_allow >= 1, "margins {p_allow},{n_allow}");
        let trials: Vec<RepVector> = (0..3)
            .map(|s| random_rep_vector(g, 40 + s, p_allow, n_allow).unwrap())
            .collect();
        let r = oracle_check_product(&phi, &psi, &g, &trials).unwrap();
        assert!(r <= 1e-5, "{r}");
    }

    #[test]
    fn margin_violations_are_rejected() {
        let g = grid();
        let prof = RandomProfile::default();
        let phi = random_element(dp(), dt(), 7, &prof).unwrap();
        let psi = random_element(dp(), dt(), 8, &prof).unwrap();
        let wide = random_rep_vector(g, 1, g.pv, g.ny).unwrap();
        assert!(matches!(
            oracle_check_product(&phi, &psi, &g, &[wide]),
            Err(QhmError::Precondition(_))
        ));
        let tiny = RepGrid { x_half: 1.0, ..g };
        assert!(build_rep(&phi, &tiny).is_err());
    }

    #[test]
    fn rep_vector_support_and_hash() {
        let g = grid();
        let v = random_rep_vector(g, 9, 1, 2).unwrap();
        assert_eq!(v.support(), (1, 2));
        let a = AlgebraElement::fourier_element(dp(), dt(), 1, 0).unwrap();
        let b = AlgebraElement::fourier_element(dp(), dt(), 0, 1).unwrap();
        let ra = build_rep(&a, &g).unwrap();
        let rb = build_rep(&b, &g).unwrap();
        assert_ne!(ra.source_hash(), rb.source_hash());
        assert_eq!(ra.source_hash(), build_rep(&a, &g).unwrap().source_hash());
    }
}
