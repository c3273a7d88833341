//! The finite algebra element and its pointwise operations.
//!
//! An element stores the component tensor coeff(p, n, i) = phi_{p,n}(x_i)
//! with x_i = i/nx, where Phi(x, y, p) = sum_n phi_{p,n}(x) e(n y). Crossing
//! the unit cell in x is exact index bookkeeping, not a phase: the defining
//! quasi-periodicity Phi(x+k, y, p) = e(c k p y) Phi(x, y, p) becomes
//! phi_{p,n}(x0 + k) = phi_{p, n - k c p}(x0) at component level, so integer
//! grid translations are error-free and only fractional shifts interpolate.

use ndarray::Array3;
use num_complex::Complex64;

use crate::error::{QhmError, Result};
use crate::grid::{punctured_predictor, ShiftPlan};
use crate::params::{AlgebraParams, Truncation};

/// e(t) = exp(2 pi i t).
pub fn e(t: f64) -> Complex64 {
    Complex64::cis(std::f64::consts::TAU * t)
}

/// Smooth constructor profile for a p != 0 sector: a Gaussian bump of given
/// center/width convolved across unit translates, modulated by a finite list
/// of fiber Fourier coefficients.
#[derive(Debug, Clone)]
pub struct ZakProfile {
    pub p: i64,
    pub center: f64,
    pub width: f64,
    /// (m, h_hat_m) pairs; duplicates accumulate.
    pub h_coeffs: Vec<(i64, Complex64)>,
}

/// Result of the Zak constructor: the element plus a flag telling whether a
/// numerically meaningful part of the fiber band fell outside the stored
/// window and was dropped.
#[derive(Debug, Clone)]
pub struct ZakOutcome {
    pub element: AlgebraElement,
    pub n_truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub(crate) params: AlgebraParams,
    pub(crate) trunc: Truncation,
    /// Indexed [p + p_max][n + n_max][i].
    pub(crate) coeff: Array3<Complex64>,
}

impl AlgebraElement {
    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn coeff(&self) -> &Array3<Complex64> {
        &self.coeff
    }

    pub fn zeros(params: AlgebraParams, trunc: Truncation) -> Result<Self> {
        params.validate()?;
        trunc.validate()?;
        let coeff = Array3::zeros((trunc.p_len(), trunc.n_len(), trunc.nx));
        Ok(AlgebraElement { params, trunc, coeff })
    }

    /// Wrap a raw component tensor. The tensor must already have shape
    /// (2 p_max + 1, 2 n_max + 1, nx) and finite entries.
    pub fn from_parts(params: AlgebraParams, trunc: Truncation, coeff: Array3<Complex64>) -> Result<Self> {
        params.validate()?;
        trunc.validate()?;
        let want = (trunc.p_len(), trunc.n_len(), trunc.nx);
        if coeff.dim() != want {
            return Err(QhmError::Mismatch(format!(
                "tensor shape {:?} does not match truncation {:?}",
                coeff.dim(),
                want
            )));
        }
        if coeff.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QhmError::Precondition("non-finite coefficient".into()));
        }
        Ok(AlgebraElement { params, trunc, coeff })
    }

    /// Multiplicative unit: the constant function 1 in the p = 0 sector.
    pub fn identity(params: AlgebraParams, trunc: Truncation) -> Result<Self> {
        let mut el = Self::zeros(params, trunc)?;
        let (pi, ni) = (el.p_index(0), el.n_index(0));
        for i in 0..trunc.nx {
            el.coeff[[pi, ni, i]] = Complex64::new(1.0, 0.0);
        }
        Ok(el)
    }

    /// Plane wave e(m x + n y) in the p = 0 sector.
    pub fn fourier_element(params: AlgebraParams, trunc: Truncation, m: i64, n: i64) -> Result<Self> {
        if n.unsigned_abs() > trunc.n_max as u64 {
            return Err(QhmError::Precondition(format!(
                "fiber frequency n = {n} exceeds band n_max = {}",
                trunc.n_max
            )));
        }
        if (trunc.nx as u64) < trunc.interp_order as u64 * (m.unsigned_abs() + 1) {
            return Err(QhmError::Precondition(format!(
                "nx = {} cannot resolve base frequency m = {m} at order {}",
                trunc.nx, trunc.interp_order
            )));
        }
        let mut el = Self::zeros(params, trunc)?;
        let (pi, ni) = (el.p_index(0), el.n_index(n));
        for i in 0..trunc.nx {
            let x = i as f64 / trunc.nx as f64;
            el.coeff[[pi, ni, i]] = e(m as f64 * x);
        }
        Ok(el)
    }

    /// Gaussian Zak-type constructor for a p0 != 0 sector.
    ///
    /// Realizes Phi(x, y, p0) = sum_k g(x - k) e(c k p0 y) h(y) with
    /// g(u) = exp(-pi ((u - center)/width)^2) and h(y) = sum_m h_hat_m e(m y),
    /// which at component level is the closed form
    ///   phi_{p0,n}(x) = sum_k g(x - k) h_hat_{n - c k p0}.
    /// The quasi-periodicity then holds exactly: shifting x by one reindexes
    /// k, which shifts the h_hat subscript by c p0. The k-sum is cut off once
    /// the Gaussian tail on [0,1) drops below 1e-20 relative to max|h_hat|;
    /// if even the widest admissible cutoff leaves a tail above 1e-12 the
    /// profile is rejected. Fiber frequencies pushed outside the stored band
    /// are dropped; `n_truncated` reports whether anything numerically
    /// meaningful (above 1e-14 relative) was lost.
    pub fn zak_element(params: AlgebraParams, trunc: Truncation, profile: &ZakProfile) -> Result<ZakOutcome> {
        params.validate()?;
        trunc.validate()?;
        if profile.p == 0 || profile.p.unsigned_abs() > trunc.p_max as u64 {
            return Err(QhmError::Precondition(format!(
                "profile winding p = {} must be nonzero and within |p| <= {}",
                profile.p, trunc.p_max
            )));
        }
        if !(profile.width > 0.0) || !profile.width.is_finite() || !profile.center.is_finite() {
            return Err(QhmError::Precondition("profile center/width must be finite, width > 0".into()));
        }
        let max_h = profile
            .h_coeffs
            .iter()
            .map(|(_, z)| z.norm())
            .fold(0.0f64, f64::max);
        let mut el = Self::zeros(params, trunc)?;
        if max_h == 0.0 {
            return Ok(ZakOutcome { element: el, n_truncated: false });
        }

        let g_peak = |k: i64| -> f64 {
            // max over x in [0,1) of exp(-pi ((x - k - center)/width)^2)
            let lo = -(k as f64) - profile.center;
            let hi = lo + 1.0;
            let dist = if lo > 0.0 {
                lo
            } else if hi < 0.0 {
                -hi
            } else {
                0.0
            };
            (-std::f64::consts::PI * (dist / profile.width).powi(2)).exp()
        };
        const K_MAX: i64 = 12;
        let mut k_cut = K_MAX;
        for k in 1..=K_MAX {
            if g_peak(k + 1).max(g_peak(-(k + 1))) <= 1e-20 {
                k_cut = k;
                break;
            }
        }
        let tail = g_peak(k_cut + 1).max(g_peak(-(k_cut + 1)));
        if tail > 1e-12 {
            return Err(QhmError::Precondition(format!(
                "width {} too large: translate tail {tail:.3e} at cutoff {k_cut} exceeds 1e-12 of max|h|",
                profile.width
            )));
        }

        let nx = trunc.nx;
        let cp = params.c * profile.p;
        let pi = el.p_index(profile.p);
        let mut n_truncated = false;
        for k in -k_cut..=k_cut {
            let peak = g_peak(k);
            for &(m, h) in &profile.h_coeffs {
                if h == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let n = m + cp * k;
                if n.unsigned_abs() > trunc.n_max as u64 {
                    if peak * h.norm() > 1e-14 * max_h {
                        n_truncated = true;
                    }
                    continue;
                }
                let ni = el.n_index(n);
                for i in 0..nx {
                    let u = i as f64 / nx as f64 - k as f64 - profile.center;
                    let g = (-std::f64::consts::PI * (u / profile.width).powi(2)).exp();
                    el.coeff[[pi, ni, i]] += h * g;
                }
            }
        }
        Ok(ZakOutcome { element: el, n_truncated })
    }

    /// Pointwise linear combination sum_j coeffs[j] * elems[j].
    pub fn linear_combine(coeffs: &[Complex64], elems: &[&AlgebraElement]) -> Result<AlgebraElement> {
        if elems.is_empty() || coeffs.len() != elems.len() {
            return Err(QhmError::Precondition(
                "linear_combine needs equally many coefficients and elements, at least one".into(),
            ));
        }
        let first = elems[0];
        for el in &elems[1..] {
            if el.params != first.params || el.trunc != first.trunc {
                return Err(QhmError::Mismatch("linear_combine operands disagree in params or truncation".into()));
            }
        }
        let mut out = Array3::zeros(first.coeff.dim());
        for (c, el) in coeffs.iter().zip(elems) {
            out.zip_mut_with(&el.coeff, |a, b| *a += c * b);
        }
        Ok(AlgebraElement { params: first.params, trunc: first.trunc, coeff: out })
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        Self::linear_combine(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)], &[self, other])
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        Self::linear_combine(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], &[self, other])
    }

    pub fn scale(&self, z: Complex64) -> AlgebraElement {
        let mut out = self.clone();
        out.coeff.mapv_inplace(|v| z * v);
        out
    }

    pub fn zero_like(&self) -> AlgebraElement {
        AlgebraElement {
            params: self.params,
            trunc: self.trunc,
            coeff: Array3::zeros(self.coeff.dim()),
        }
    }

    /// Apply f(p, n, i, value) to every stored coefficient.
    pub fn map_indexed(&self, f: impl Fn(i64, i64, usize, Complex64) -> Complex64) -> AlgebraElement {
        let mut out = self.zero_like();
        for p in -self.trunc.p_max..=self.trunc.p_max {
            for n in -self.trunc.n_max..=self.trunc.n_max {
                for i in 0..self.trunc.nx {
                    let v = self.coeff[[self.p_index(p), self.n_index(n), i]];
                    out.coeff[[self.p_index(p), self.n_index(n), i]] = f(p, n, i, v);
                }
            }
        }
        out
    }

    #[inline]
    pub(crate) fn p_index(&self, p: i64) -> usize {
        (p + self.trunc.p_max) as usize
    }

    #[inline]
    pub(crate) fn n_index(&self, n: i64) -> usize {
        (n + self.trunc.n_max) as usize
    }

    /// Stored coefficient, zero outside the window.
    pub fn get(&self, p: i64, n: i64, i: usize) -> Complex64 {
        if p.unsigned_abs() > self.trunc.p_max as u64 || n.unsigned_abs() > self.trunc.n_max as u64 || i >= self.trunc.nx
        {
            return Complex64::new(0.0, 0.0);
        }
        self.coeff[[self.p_index(p), self.n_index(n), i]]
    }

    /// Value of component (p, n) at the global grid node g (which may lie in
    /// any unit cell). Crossing cells shifts the fiber index by c*p per cell:
    /// phi_{p,n}(x0 + W) = phi_{p, n - W c p}(x0).
    #[inline]
    pub(crate) fn fetch(&self, p: i64, n: i64, g: i64) -> Complex64 {
        let nx = self.trunc.nx as i64;
        let w = g.div_euclid(nx);
        let local = g.rem_euclid(nx) as usize;
        let row = n - w * self.params.c * p;
        if p.unsigned_abs() > self.trunc.p_max as u64 || row.unsigned_abs() > self.trunc.n_max as u64 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeff[[self.p_index(p), self.n_index(row), local]]
    }

    /// Component value phi_{p,n}(x) at an arbitrary real x, via an exact
    /// node fetch when x lands on the grid and a centered barycentric
    /// stencil otherwise. Stencil nodes outside [0,1) resolve through the
    /// same index bookkeeping as `fetch`.
    pub fn eval_component(&self, p: i64, n: i64, x: f64) -> Complex64 {
        if p.unsigned_abs() > self.trunc.p_max as u64 {
            return Complex64::new(0.0, 0.0);
        }
        let nx = self.trunc.nx;
        let xi = x * nx as f64;
        let k = xi.floor();
        if xi == k {
            return self.fetch(p, n, k as i64);
        }
        let order = self.trunc.interp_order;
        let half = (order / 2) as i64;
        let frac = xi - k;
        let base = k as i64;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..order as i64 {
            let lambda = if j % 2 == 0 {
                crate::grid::binomial(order - 1, j as usize)
            } else {
                -crate::grid::binomial(order - 1, j as usize)
            };
            let c = lambda / (frac + (half - 1 - j) as f64);
            num += c * self.fetch(p, n, base - (half - 1) + j);
            den += c;
        }
        num / den
    }

    /// Full evaluation Phi(x, y, p) = sum_n phi_{p,n}(x) e(n y); zero
    /// outside the stored p window.
    pub fn eval(&self, x: f64, y: f64, p: i64) -> Complex64 {
        if p.unsigned_abs() > self.trunc.p_max as u64 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -self.trunc.n_max..=self.trunc.n_max {
            let c = self.eval_component(p, n, x);
            if c != Complex64::new(0.0, 0.0) {
                acc += c * e(n as f64 * y);
            }
        }
        acc
    }

    /// Adjoint: Phi*(x,y,p) = conj(Phi(x,y,-p)), i.e. componentwise
    /// coeff*(p,n,i) = conj(coeff(-p,-n,i)).
    pub fn involution(&self) -> AlgebraElement {
        let mut out = self.zero_like();
        for p in -self.trunc.p_max..=self.trunc.p_max {
            for n in -self.trunc.n_max..=self.trunc.n_max {
                for i in 0..self.trunc.nx {
                    out.coeff[[self.p_index(p), self.n_index(n), i]] =
                        self.coeff[[self.p_index(-p), self.n_index(-n), i]].conj();
                }
            }
        }
        out
    }

    /// tau(Phi) = int_0^1 int_T Phi(x,y,0) dx dy: the (p,n) = (0,0)
    /// component averaged over the grid (trapezoid = midpoint on a uniform
    /// periodic grid, spectrally accurate for smooth data).
    pub fn trace(&self) -> Complex64 {
        let (pi, ni) = (self.p_index(0), self.n_index(0));
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.trunc.nx {
            acc += self.coeff[[pi, ni, i]];
        }
        acc / self.trunc.nx as f64
    }

    /// Discrete L2 norm sqrt((1/nx) sum |coeff|^2). By Parseval this is the
    /// GNS norm sqrt(tau(Phi* x Phi)) of the stored band; the identification
    /// is cross-checked against the product route in tests.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeff.iter().map(|z| z.norm_sqr()).sum();
        (s / self.trunc.nx as f64).sqrt()
    }

    /// Crude operator-norm bound sum_p max_i sum_n |coeff(p,n,i)|; heuristic
    /// only, never used as an acceptance threshold.
    pub fn sup_bound(&self) -> f64 {
        let mut total = 0.0;
        for p in -self.trunc.p_max..=self.trunc.p_max {
            let mut best = 0.0f64;
            for i in 0..self.trunc.nx {
                let mut row = 0.0;
                for n in -self.trunc.n_max..=self.trunc.n_max {
                    row += self.coeff[[self.p_index(p), self.n_index(n), i]].norm();
                }
                best = best.max(row);
            }
            total += best;
        }
        total
    }

    /// Smoothness diagnostic at the cell seam. For each component the value
    /// at x = 1 is predicted from a symmetric stencil that straddles the
    /// seam but excludes it (half the nodes from the tail of the cell, half
    /// from the next cell via the index bookkeeping) and compared against
    /// the exact bookkeeping value phi_{p, n - c p}(0). Returns the max
    /// deviation over all components.
    pub fn seam_residual(&self) -> f64 {
        let nx = self.trunc.nx as i64;
        let (offsets, coeffs, denom) = punctured_predictor(self.trunc.interp_order);
        let mut worst = 0.0f64;
        for p in -self.trunc.p_max..=self.trunc.p_max {
            for n in -self.trunc.n_max..=self.trunc.n_max {
                let mut num = Complex64::new(0.0, 0.0);
                for (c, &o) in coeffs.iter().zip(&offsets) {
                    num += *c * self.fetch(p, n, nx + o);
                }
                let predicted = num / denom;
                let actual = self.fetch(p, n, nx);
                worst = worst.max((predicted - actual).norm());
            }
        }
        worst
    }

    /// Largest |p| carrying a nonzero slice (0 when the element is zero).
    pub fn p_support(&self) -> i64 {
        let mut s = 0;
        for p in -self.trunc.p_max..=self.trunc.p_max {
            if !self.slice_is_zero(p) {
                s = s.max(p.abs());
            }
        }
        s
    }

    /// Largest |n| carrying a nonzero row (0 when the element is zero).
    pub fn n_support(&self) -> i64 {
        let mut s = 0;
        for p in -self.trunc.p_max..=self.trunc.p_max {
            for n in -self.trunc.n_max..=self.trunc.n_max {
                if !self.row_is_zero(p, n) {
                    s = s.max(n.abs());
                }
            }
        }
        s
    }

    pub(crate) fn slice_is_zero(&self, p: i64) -> bool {
        let pi = self.p_index(p);
        self.coeff
            .index_axis(ndarray::Axis(0), pi)
            .iter()
            .all(|z| *z == Complex64::new(0.0, 0.0))
    }

    pub(crate) fn row_is_zero(&self, p: i64, n: i64) -> bool {
        let (pi, ni) = (self.p_index(p), self.n_index(n));
        (0..self.trunc.nx).all(|i| self.coeff[[pi, ni, i]] == Complex64::new(0.0, 0.0))
    }

    /// Interpolation table: component (p, n_logical) evaluated at
    /// x_i + sigma/nx for all i, where `plan` encodes the fixed shift sigma.
    /// Exact fetches on node hits; otherwise one barycentric pass with the
    /// plan's precomputed coefficients.
    pub(crate) fn shifted_row(&self, p: i64, n: i64, plan: &ShiftPlan, out: &mut [Complex64]) {
        let nx = self.trunc.nx;
        debug_assert_eq!(out.len(), nx);
        if plan.node_hit {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.fetch(p, n, i as i64 + plan.first);
            }
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut num = Complex64::new(0.0, 0.0);
            for (j, c) in plan.coeffs.iter().enumerate() {
                num += *c * self.fetch(p, n, i as i64 + plan.first + j as i64);
            }
            *o = num / plan.denom;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp() -> AlgebraParams {
        AlgebraParams::default()
    }

    fn dt() -> Truncation {
        Truncation::default()
    }

    fn zak_default() -> AlgebraElement {
        let profile = ZakProfile {
            p: 1,
            center: 0.5,
            width: 0.15,
            h_coeffs: vec![(0, Complex64::new(1.0, 0.0))],
        };
        let out = AlgebraElement::zak_element(dp(), dt(), &profile).unwrap();
        assert!(!out.n_truncated);
        out.element
    }

    #[test]
    fn identity_unit_values() {
        let id = AlgebraElement::identity(dp(), dt()).unwrap();
        assert_eq!(id.trace(), Complex64::new(1.0, 0.0));
        assert_eq!(id.eval(0.37, 0.2, 0), Complex64::new(1.0, 0.0));
        assert_eq!(id.eval(0.37, 0.2, 1), Complex64::new(0.0, 0.0));
        assert_eq!(id.l2_norm(), 1.0);
        assert_eq!(id.seam_residual(), 0.0);
    }

    #[test]
    fn fourier_matches_plane_wave() {
        let f = AlgebraElement::fourier_element(dp(), dt(), 1, 0).unwrap();
        for &(x, y) in &[(0.1, 0.9), (0.73, 0.2), (0.5, 0.0)] {
            let got = f.eval(x, y, 0);
            let want = e(x);
            assert!((got - want).norm() <= 1e-10, "({x},{y}): {got} vs {want}");
        }
        let f00 = AlgebraElement::fourier_element(dp(), dt(), 0, 0).unwrap();
        let id = AlgebraElement::identity(dp(), dt()).unwrap();
        assert_eq!(f00, id);
        assert!(f.trace().norm() <= 1e-14);
    }

    #[test]
    fn fourier_band_checks() {
        assert!(AlgebraElement::fourier_element(dp(), dt(), 0, 17).is_err());
        // nx = 64, order 8: |m| <= 7 resolvable.
        assert!(AlgebraElement::fourier_element(dp(), dt(), 8, 0).is_err());
        assert!(AlgebraElement::fourier_element(dp(), dt(), 7, 0).is_ok());
    }

    #[test]
    fn eval_derived_value() {
        let f = AlgebraElement::fourier_element(dp(), dt(), 1, 1).unwrap();
        let got = f.eval(0.25, 0.25, 0);
        assert!((got - Complex64::new(-1.0, 0.0)).norm() <= 1e-13, "{got}");
    }

    #[test]
    fn eval_respects_quasi_periodicity() {
        let el = zak_default();
        let (x, y) = (0.31, 0.77);
        let lhs = el.eval(x + 1.0, y, 1);
        let rhs = e(dp().c as f64 * 1.0 * y) * el.eval(x, y, 1);
        assert!((lhs - rhs).norm() <= 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn linear_combine_basics() {
        let f = AlgebraElement::fourier_element(dp(), dt(), 1, 2).unwrap();
        let z = zak_default();
        let same = AlgebraElement::linear_combine(
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            &[&f, &z],
        )
        .unwrap();
        assert_eq!(same, f);
        let cancel = f.sub(&f).unwrap();
        assert_eq!(cancel.l2_norm(), 0.0);
        let two = AlgebraElement::identity(dp(), dt())
            .unwrap()
            .scale(Complex64::new(2.0, 0.0));
        assert_eq!(two.eval(0.3, 0.6, 0), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn involution_is_an_involution() {
        let el = zak_default();
        assert_eq!(el.involution().involution(), el);
        let id = AlgebraElement::identity(dp(), dt()).unwrap();
        assert_eq!(id.involution(), id);
    }

    #[test]
    fn involution_flips_winding() {
        let el = zak_default();
        let star = el.involution();
        assert_eq!(el.p_support(), 1);
        assert_eq!(star.p_support(), 1);
        assert!(star.slice_is_zero(1));
        assert!(!star.slice_is_zero(-1));
    }

    #[test]
    fn norms() {
        let z = AlgebraElement::zeros(dp(), dt()).unwrap();
        assert_eq!(z.l2_norm(), 0.0);
        let f = AlgebraElement::fourier_element(dp(), dt(), 2, 3).unwrap();
        assert!((f.l2_norm() - 1.0).abs() <= 1e-15);
        assert!(f.sup_bound() >= 1.0 - 1e-12);
    }

    #[test]
    fn seam_residual_fourier_converges_at_stencil_order() {
        let mut res = Vec::new();
        for nx in [32usize, 64] {
            let t = Truncation { nx, ..dt() };
            let f = AlgebraElement::fourier_element(dp(), t, 2, 1).unwrap();
            res.push(f.seam_residual());
        }
        assert!(res[0] > 0.0 && res[0] < 1e-4);
        // Order-8 stencil: halving h should shrink the residual by ~2^8;
        // allow generous slack for constants.
        assert!(res[0] / res[1] >= 64.0, "ratios {res:?}");
    }

    #[test]
    fn zak_seam_is_tiny() {
        let el = zak_default();
        assert!(el.seam_residual() < 1e-10, "{}", el.seam_residual());
    }

    #[test]
    fn zak_rejects_wide_profiles() {
        let profile = ZakProfile {
            p: 1,
            center: 0.5,
            width: 5.0,
            h_coeffs: vec![(0, Complex64::new(1.0, 0.0))],
        };
        assert!(AlgebraElement::zak_element(dp(), dt(), &profile).is_err());
    }

    #[test]
    fn zak_empty_profile_is_zero() {
        let profile = ZakProfile { p: 1, center: 0.5, width: 0.2, h_coeffs: vec![] };
        let out = AlgebraElement::zak_element(dp(), dt(), &profile).unwrap();
        assert_eq!(out.element.l2_norm(), 0.0);
        assert!(!out.n_truncated);
    }

    #[test]
    fn zak_flags_band_overflow() {
        let t = Truncation { n_max: 1, nx: 64, p_max: 3, interp_order: 8 };
        let profile = ZakProfile {
            p: 3,
            center: 0.5,
            width: 0.2,
            h_coeffs: vec![(0, Complex64::new(1.0, 0.0))],
        };
        // c*p = 3 pushes the k = 1 translate to n = 3, outside n_max = 1.
        let out = AlgebraElement::zak_element(dp(), t, &profile).unwrap();
        assert!(out.n_truncated);
    }

    #[test]
    fn fetch_uses_index_bookkeeping() {
        let el = zak_default();
        let nx = el.trunc.nx as i64;
        // One cell to the right: row n picks up stored row n - c*p.
        for n in -3..=3i64 {
            for i in 0..4usize {
                let lhs = el.fetch(1, n, nx + i as i64);
                let rhs = el.get(1, n - 1, i);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn trace_of_star_free_cases() {
        // Direct trace of constructors; product-based checks live with star.
        let zak = zak_default();
        assert_eq!(zak.trace(), Complex64::new(0.0, 0.0));
    }
}
