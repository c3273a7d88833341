//! The sigma-matrix differential calculus: one- and two-forms as element
//! triples, the differentials, the 1x1 -> 2 product, and the two-form inner
//! product carrying the reference-trace constant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::element::AlgebraElement;
use crate::error::{QhmError, Result};
use crate::star::{star, trace_star};
use crate::symmetry::delta;

/// Product of two basis sigmas: a scalar times either a sigma or the
/// identity matrix (whose coordinate is dropped in the two-form calculus).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliProduct {
    Identity,
    Sigma(u8),
}

/// sigma_1 sigma_2 = i sigma_3 and cyclic; reversed pairs negate; equal
/// indices square to the identity.
pub fn pauli_mul(j: u8, k: u8) -> Result<(Complex64, PauliProduct)> {
    if !(1..=3).contains(&j) || !(1..=3).contains(&k) {
        return Err(QhmError::Precondition(format!("sigma indices must be 1..=3, got ({j},{k})")));
    }
    if j == k {
        return Ok((Complex64::new(1.0, 0.0), PauliProduct::Identity));
    }
    let third = 6 - j - k;
    let positive = matches!((j, k), (1, 2) | (2, 3) | (3, 1));
    let coeff = if positive {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    Ok((coeff, PauliProduct::Sigma(third)))
}

fn check_triple(c: &[AlgebraElement; 3]) -> Result<()> {
    for el in &c[1..] {
        if el.params() != c[0].params() || el.trunc() != c[0].trunc() {
            return Err(QhmError::Mismatch(
                "form components must share parameters and truncation".into(),
            ));
        }
    }
    Ok(())
}

/// Coordinates a_1, a_2, a_3 of sum a_j (x) sigma_j.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub(crate) c: [AlgebraElement; 3],
}

/// Coordinates along sigma_1..sigma_3 of the traceless representative; the
/// identity-matrix coordinate is annihilated by construction and never
/// stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    pub(crate) c: [AlgebraElement; 3],
}

macro_rules! form_common {
    ($name:ident) => {
        impl $name {
            pub fn from_components(c: [AlgebraElement; 3]) -> Result<Self> {
                check_triple(&c)?;
                Ok($name { c })
            }

            pub fn zero_like(model: &AlgebraElement) -> Self {
                $name {
                    c: [model.zero_like(), model.zero_like(), model.zero_like()],
                }
            }

            /// 1-based coordinate accessor matching the sigma labels.
            pub fn coord(&self, j: u8) -> &AlgebraElement {
                &self.c[(j - 1) as usize]
            }

            pub fn components(&self) -> &[AlgebraElement; 3] {
                &self.c
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                Ok($name {
                    c: [
                        self.c[0].add(&other.c[0])?,
                        self.c[1].add(&other.c[1])?,
                        self.c[2].add(&other.c[2])?,
                    ],
                })
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                Ok($name {
                    c: [
                        self.c[0].sub(&other.c[0])?,
                        self.c[1].sub(&other.c[1])?,
                        self.c[2].sub(&other.c[2])?,
                    ],
                })
            }

            pub fn scale(&self, z: Complex64) -> Self {
                $name {
                    c: [self.c[0].scale(z), self.c[1].scale(z), self.c[2].scale(z)],
                }
            }

            pub fn l2_norm(&self) -> f64 {
                self.c.iter().map(|el| el.l2_norm().powi(2)).sum::<f64>().sqrt()
            }
        }
    };
}

form_common!(OneForm);
form_common!(TwoForm);

/// Scalar of the reference trace entering the two-form inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormsConfig {
    pub c_d: f64,
}

impl Default for FormsConfig {
    fn default() -> Self {
        FormsConfig { c_d: 1.0 }
    }
}

impl FormsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_d.is_finite() && self.c_d > 0.0) {
            return Err(QhmError::InvalidParams(format!("c_d must be positive, got {}", self.c_d)));
        }
        Ok(())
    }
}

/// Which sign the (1/alpha)-term on the third coordinate of the one-form
/// differential carries. Standard is the unique choice under which the
/// differential squares to zero, given [delta1, delta2] = -(i/alpha) delta3;
/// Flipped is retained only as a falsifier control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaTermSign {
    Standard,
    Flipped,
}

/// Differential on elements: a |-> (delta_1 a, delta_2 a, delta_3 a).
pub fn d0(a: &AlgebraElement) -> Result<OneForm> {
    Ok(OneForm {
        c: [delta(1, a)?, delta(2, a)?, delta(3, a)?],
    })
}

/// Product Omega^1 x Omega^1 -> Omega^2. Only the cross terms survive (the
/// identity coordinate from equal sigma indices is dropped):
/// b3 = i(w1 n2 - w2 n1), b1 = i(w2 n3 - w3 n2), b2 = i(w3 n1 - w1 n3).
pub fn mul11(omega: &OneForm, eta: &OneForm) -> Result<TwoForm> {
    if omega.c[0].params() != eta.c[0].params() || omega.c[0].trunc() != eta.c[0].trunc() {
        return Err(QhmError::Mismatch("one-form operands must share parameters".into()));
    }
    let t = *omega.c[0].trunc();
    let i = Complex64::new(0.0, 1.0);
    let cross = |a: usize, b: usize| -> Result<AlgebraElement> {
        Ok(star(&omega.c[a], &eta.c[b], t)?
            .sub(&star(&omega.c[b], &eta.c[a], t)?)?
            .scale(i))
    };
    Ok(TwoForm {
        c: [cross(1, 2)?, cross(2, 0)?, cross(0, 1)?],
    })
}

/// Differential Omega^1 -> Omega^2 with an explicit sign on the alpha term.
pub fn d1form_signed(omega: &OneForm, sign: AlphaTermSign) -> Result<TwoForm> {
    let i = Complex64::new(0.0, 1.0);
    let alpha = omega.c[0].params().alpha;
    let s = match sign {
        AlphaTermSign::Standard => -1.0 / alpha,
        AlphaTermSign::Flipped => 1.0 / alpha,
    };
    let b1 = delta(3, &omega.c[1])?
        .scale(-i)
        .add(&delta(2, &omega.c[2])?.scale(i))?;
    let b2 = delta(3, &omega.c[0])?
        .scale(i)
        .add(&delta(1, &omega.c[2])?.scale(-i))?;
    let b3 = delta(2, &omega.c[0])?
        .scale(-i)
        .add(&delta(1, &omega.c[1])?.scale(i))?
        .add(&omega.c[2].scale(Complex64::new(s, 0.0)))?;
    Ok(TwoForm { c: [b1, b2, b3] })
}

pub fn d1form(omega: &OneForm) -> Result<TwoForm> {
    d1form_signed(omega, AlphaTermSign::Standard)
}

/// Inner product on two-forms: cfg.c_d * sum_j tau(theta_j* (star) theta'_j).
/// The half in the reference-trace constant cancels against the trace of
/// sigma_j squared, leaving per-coordinate weight c_d.
pub fn two_form_inner(theta: &TwoForm, theta2: &TwoForm, cfg: &FormsConfig) -> Result<Complex64> {
    cfg.validate()?;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        acc += trace_star(&theta.c[j].involution(), &theta2.c[j])?;
    }
    Ok(cfg.c_d * acc)
}

/// Left-multiply every coordinate by a fixed element (a . omega).
pub fn left_mul_oneform(a: &AlgebraElement, omega: &OneForm) -> Result<OneForm> {
    let t = *a.trunc();
    Ok(OneForm {
        c: [
            star(a, &omega.c[0], t)?,
            star(a, &omega.c[1], t)?,
            star(a, &omega.c[2], t)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::ZakProfile;
    use crate::params::{AlgebraParams, Truncation};

    fn dp() -> AlgebraParams {
        AlgebraParams::default()
    }

    fn dt() -> Truncation {
        Truncation::default()
    }

    fn id() -> AlgebraElement {
        AlgebraElement::identity(dp(), dt()).unwrap()
    }

    fn smooth() -> AlgebraElement {
        let profile = ZakProfile {
            p: 1,
            center: 0.5,
            width: 0.35,
            h_coeffs: vec![(0, Complex64::new(0.7, 0.2)), (-1, Complex64::new(0.1, -0.4))],
        };
        let z = AlgebraElement::zak_element(dp(), dt(), &profile).unwrap().element;
        z.add(&AlgebraElement::fourier_element(dp(), dt(), 1, 2).unwrap())
            .unwrap()
    }

    #[test]
    fn pauli_table() {
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(pauli_mul(1, 2).unwrap(), (i, PauliProduct::Sigma(3)));
        assert_eq!(pauli_mul(2, 3).unwrap(), (i, PauliProduct::Sigma(1)));
        assert_eq!(pauli_mul(3, 1).unwrap(), (i, PauliProduct::Sigma(2)));
        assert_eq!(pauli_mul(2, 1).unwrap(), (-i, PauliProduct::Sigma(3)));
        assert_eq!(pauli_mul(3, 3).unwrap(), (Complex64::new(1.0, 0.0), PauliProduct::Identity));
        assert!(pauli_mul(0, 2).is_err());
        for j in 1..=3u8 {
            for k in 1..=3u8 {
                if j != k {
                    let (a, ta) = pauli_mul(j, k).unwrap();
                    let (b, tb) = pauli_mul(k, j).unwrap();
                    assert_eq!(a, -b);
                    assert_eq!(ta, tb);
                }
            }
        }
    }

    #[test]
    fn d0_on_plane_waves() {
        let zero = id().zero_like();
        let da = d0(&id()).unwrap();
        assert_eq!(da.c, [zero.clone(), zero.clone(), zero.clone()]);

        let f10 = AlgebraElement::fourier_element(dp(), dt(), 1, 0).unwrap();
        let g = d0(&f10).unwrap();
        let tau = Complex64::new(std::f64::consts::TAU, 0.0);
        let err = g.coord(1).sub(&f10.scale(tau)).unwrap().l2_norm();
        assert!(err <= 1e-8, "{err}");
        assert_eq!(g.coord(2), &zero);
        assert_eq!(g.coord(3), &zero);

        let f01 = AlgebraElement::fourier_element(dp(), dt(), 0, 1).unwrap();
        let g = d0(&f01).unwrap();
        assert_eq!(g.coord(1), &zero);
        assert_eq!(g.coord(2), &f01.scale(tau));
        assert_eq!(g.coord(3), &zero);
    }

    #[test]
    fn mul11_structure() {
        let a = smooth();
        let b = AlgebraElement::fourier_element(dp(), dt(), 0, 2).unwrap();
        let zero = a.zero_like();

        let wa = OneForm::from_components([a.clone(), zero.clone(), zero.clone()]).unwrap();
        let same = mul11(&wa, &wa).unwrap();
        assert_eq!(same.c, [zero.clone(), zero.clone(), zero.clone()]);

        let wb = OneForm::from_components([zero.clone(), b.clone(), zero.clone()]).unwrap();
        let prod = mul11(&wa, &wb).unwrap();
        assert_eq!(prod.coord(1), &zero);
        assert_eq!(prod.coord(2), &zero);
        let want = star(&a, &b, dt()).unwrap().scale(Complex64::new(0.0, 1.0));
        assert_eq!(prod.coord(3), &want);

        let ones = OneForm::from_components([id(), id(), id()]).unwrap();
        let sq = mul11(&ones, &ones).unwrap();
        assert_eq!(sq.c, [zero.clone(), zero.clone(), zero]);
    }

    #[test]
    fn d1form_constant_coordinates() {
        let zero = id().zero_like();
        let w3 = OneForm::from_components([zero.clone(), zero.clone(), id()]).unwrap();
        let out = d1form(&w3).unwrap();
        assert_eq!(out.coord(1), &zero);
        assert_eq!(out.coord(2), &zero);
        let want = id().scale(Complex64::new(-1.0 / dp().alpha, 0.0));
        assert_eq!(out.coord(3), &want);

        let w1 = OneForm::from_components([id(), zero.clone(), zero.clone()]).unwrap();
        let out = d1form(&w1).unwrap();
        assert_eq!(out.c, [zero.clone(), zero.clone(), zero]);
    }

    #[test]
    fn differential_squares_to_zero() {
        let a = smooth();
        let dd = d1form(&d0(&a).unwrap()).unwrap();
        let rel = dd.l2_norm() / a.l2_norm();
        assert!(rel <= 1e-6, "{rel}");
    }

    #[test]
    fn flipped_alpha_sign_breaks_the_complex() {
        let a = smooth();
        let dd = d1form_signed(&d0(&a).unwrap(), AlphaTermSign::Flipped).unwrap();
        let rel = dd.l2_norm() / a.l2_norm();
        assert!(rel >= 1e-1, "{rel}");
    }

    #[test]
    fn leibniz_into_two_forms() {
        let a = smooth();
        let b = AlgebraElement::fourier_element(dp(), dt(), 1, 1)
            .unwrap()
            .add(&AlgebraElement::fourier_element(dp(), dt(), 0, 2).unwrap())
            .unwrap();
        let db = d0(&b).unwrap();
        let lhs = d1form(&left_mul_oneform(&a, &db).unwrap()).unwrap();
        let rhs = mul11(&d0(&a).unwrap(), &db).unwrap();
        let rel = lhs.sub(&rhs).unwrap().l2_norm() / rhs.l2_norm().max(1.0);
        assert!(rel <= 1e-6, "{rel}");
    }

    #[test]
    fn inner_product_values() {
        let cfg = FormsConfig::default();
        let zero = id().zero_like();
        let t1 = TwoForm::from_components([id(), zero.clone(), zero.clone()]).unwrap();
        let got = two_form_inner(&t1, &t1, &cfg).unwrap();
        assert!((got - Complex64::new(1.0, 0.0)).norm() <= 1e-12, "{got}");

        let a = smooth();
        let t2 = TwoForm::from_components([zero.clone(), a, zero.clone()]).unwrap();
        let ortho = two_form_inner(&t1, &t2, &cfg).unwrap();
        assert_eq!(ortho, Complex64::new(0.0, 0.0));

        let scaled = FormsConfig { c_d: 3.5 };
        let got = two_form_inner(&t1, &t1, &scaled).unwrap();
        assert!((got - Complex64::new(3.5, 0.0)).norm() <= 1e-12, "{got}");
    }

    #[test]
    fn inner_product_is_hermitian_and_positive() {
        let cfg = FormsConfig::default();
        let a = smooth();
        let b = AlgebraElement::fourier_element(dp(), dt(), 2, 1).unwrap();
        let zero = a.zero_like();
        let t1 = TwoForm::from_components([a.clone(), b.clone(), zero.clone()]).unwrap();
        let t2 = TwoForm::from_components([b.clone(), zero.clone(), a.clone()]).unwrap();
        let fwd = two_form_inner(&t1, &t2, &cfg).unwrap();
        let bwd = two_form_inner(&t2, &t1, &cfg).unwrap();
        assert!((fwd - bwd.conj()).norm() <= 1e-10 * (1.0 + fwd.norm()), "{fwd} vs {bwd}");
        let diag = two_form_inner(&t1, &t1, &cfg).unwrap();
        assert!(diag.im.abs() <= 1e-10 * (1.0 + diag.re.abs()));
        assert!(diag.re >= -1e-10);
    }
}
