use serde::{Deserialize, Serialize};

use crate::error::{QhmError, Result};

/// Structure constants of one algebra in the family.
///
/// `c` is the integer bundle twist, `hbar` the deformation parameter (zero is
/// allowed and gives a commutative fiberwise product), `mu`/`nu` steer the
/// product's x-shift and phase directions, and `alpha` is the metric scale
/// entering the third derivation and the curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraParams {
    pub c: i64,
    pub hbar: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl AlgebraParams {
    pub fn new(c: i64, hbar: f64, mu: f64, nu: f64, alpha: f64) -> Result<Self> {
        let p = AlgebraParams { c, hbar, mu, nu, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 {
            return Err(QhmError::InvalidParams(format!("c must be >= 1, got {}", self.c)));
        }
        for (name, v) in [("hbar", self.hbar), ("mu", self.mu), ("nu", self.nu), ("alpha", self.alpha)] {
            if !v.is_finite() {
                return Err(QhmError::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if self.mu * self.mu + self.nu * self.nu <= 0.0 {
            return Err(QhmError::InvalidParams("mu^2 + nu^2 must be positive".into()));
        }
        if self.alpha <= 1.0 {
            return Err(QhmError::InvalidParams(format!("alpha must be > 1, got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for AlgebraParams {
    /// Generic desk-scale constants: irrational-looking shifts, unit twist.
    fn default() -> Self {
        AlgebraParams {
            c: 1,
            hbar: 0.3791,
            mu: std::f64::consts::FRAC_1_SQRT_2,
            nu: 1.0 / 3.0f64.sqrt(),
            alpha: 2.0,
        }
    }
}

/// Finite storage window: winding `|p| <= p_max`, fiber frequency
/// `|n| <= n_max`, and `nx` uniform grid nodes x_i = i/nx on [0,1).
/// `interp_order` is the (even) width of the local stencils used for
/// off-grid evaluation and x-differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub p_max: i64,
    pub n_max: i64,
    pub nx: usize,
    pub interp_order: usize,
}

impl Truncation {
    pub fn new(p_max: i64, n_max: i64, nx: usize, interp_order: usize) -> Result<Self> {
        let t = Truncation { p_max, n_max, nx, interp_order };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_max < 1 {
            return Err(QhmError::InvalidTruncation(format!("p_max must be >= 1, got {}", self.p_max)));
        }
        if self.n_max < 1 {
            return Err(QhmError::InvalidTruncation(format!("n_max must be >= 1, got {}", self.n_max)));
        }
        if self.interp_order < 4 || self.interp_order % 2 != 0 {
            return Err(QhmError::InvalidTruncation(format!(
                "interp_order must be even and >= 4, got {}",
                self.interp_order
            )));
        }
        if self.nx < 2 * self.interp_order {
            return Err(QhmError::InvalidTruncation(format!(
                "nx must be >= 2*interp_order = {}, got {}",
                2 * self.interp_order,
                self.nx
            )));
        }
        Ok(())
    }

    /// Number of stored p slices.
    pub fn p_len(&self) -> usize {
        (2 * self.p_max + 1) as usize
    }

    /// Number of stored n rows.
    pub fn n_len(&self) -> usize {
        (2 * self.n_max + 1) as usize
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { p_max: 3, n_max: 16, nx: 64, interp_order: 8 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_params_are_valid() {
        AlgebraParams::default().validate().unwrap();
        Truncation::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        assert!(AlgebraParams::new(0, 0.1, 1.0, 0.0, 2.0).is_err());
        assert!(AlgebraParams::new(1, 0.1, 0.0, 0.0, 2.0).is_err());
        assert!(AlgebraParams::new(1, 0.1, 1.0, 0.0, 1.0).is_err());
        assert!(AlgebraParams::new(1, f64::NAN, 1.0, 0.0, 2.0).is_err());
        // hbar = 0 is a legal degenerate regime.
        assert!(AlgebraParams::new(1, 0.0, 1.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn rejects_bad_truncation() {
        assert!(Truncation::new(0, 1, 64, 8).is_err());
        assert!(Truncation::new(1, 0, 64, 8).is_err());
        assert!(Truncation::new(1, 1, 64, 7).is_err());
        assert!(Truncation::new(1, 1, 64, 2).is_err());
        assert!(Truncation::new(1, 1, 15, 8).is_err());
        assert!(Truncation::new(1, 1, 16, 8).is_ok());
    }
}
