//! Hermitian structure on the free module A^q, compatible connections in
//! both formulations, both curvatures, both Yang-Mills functionals, and the
//! proportionality report tying them together.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::element::AlgebraElement;
use crate::error::{QhmError, Result};
use crate::forms::{
    d1form_signed, mul11, two_form_inner, AlphaTermSign, FormsConfig, OneForm, TwoForm,
};
use crate::matrix::{AlgebraMatrix, AlgebraVector};
use crate::params::Truncation;
use crate::star::star;
use crate::symmetry::derive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub q: usize,
}

impl ModuleSpec {
    pub fn new(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(QhmError::InvalidParams("module rank q must be >= 1".into()));
        }
        Ok(ModuleSpec { q })
    }
}

/// Standard Hermitian structure: herm(xi, eta) = sum_j xi_j* (star) eta_j.
pub fn herm(xi: &AlgebraVector, eta: &AlgebraVector) -> Result<AlgebraElement> {
    if xi.len() != eta.len() {
        return Err(QhmError::Mismatch("vector lengths differ".into()));
    }
    let t = *xi.get(0).trunc();
    let mut acc = star(&xi.get(0).involution(), eta.get(0), t)?;
    for j in 1..xi.len() {
        acc = acc.add(&star(&xi.get(j).involution(), eta.get(j), t)?)?;
    }
    Ok(acc)
}

/// Exact skew part (M - M*)/2; subtraction makes the result skew entrywise
/// at the bit level.
pub fn skew_symmetrize(m: &AlgebraMatrix) -> AlgebraMatrix {
    m.sub(&m.involution())
        .expect("matrix minus its involution shares shape")
        .scale(Complex64::new(0.5, 0.0))
}

/// A compatible connection on A^q: nabla_j = d_j (entrywise) + A_j (star),
/// with each coefficient matrix skew-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    spec: ModuleSpec,
    a: [AlgebraMatrix; 3],
}

const SKEW_TOL: f64 = 1e-12;

impl Connection {
    pub fn spec(&self) -> ModuleSpec {
        self.spec
    }

    /// 1-based coefficient accessor.
    pub fn coeff(&self, j: u8) -> &AlgebraMatrix {
        &self.a[(j - 1) as usize]
    }

    pub fn trunc(&self) -> &Truncation {
        self.a[0].get(0, 0).trunc()
    }

    /// nabla_j xi = d_j(xi) componentwise + A_j (star) xi.
    pub fn apply(&self, j: u8, xi: &AlgebraVector) -> Result<AlgebraVector> {
        let t = *self.trunc();
        let mut out = Vec::with_capacity(xi.len());
        for k in 0..xi.len() {
            out.push(derive(j, xi.get(k))?);
        }
        let derived = AlgebraVector::from_entries(out)?;
        derived.add(&self.a[(j - 1) as usize].apply(xi, t)?)
    }

    /// The spectral-side maps: i * nabla_j.
    pub fn apply_tilde(&self, j: u8, xi: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(self.apply(j, xi)?.scale(Complex64::new(0.0, 1.0)))
    }
}

pub fn make_connection(
    spec: ModuleSpec,
    a1: AlgebraMatrix,
    a2: AlgebraMatrix,
    a3: AlgebraMatrix,
) -> Result<Connection> {
    for (j, m) in [(1, &a1), (2, &a2), (3, &a3)] {
        if m.q() != spec.q {
            return Err(QhmError::Mismatch(format!(
                "coefficient {j} has size {}, module rank is {}",
                m.q(),
                spec.q
            )));
        }
        let defect = m.skew_defect();
        if !(defect <= SKEW_TOL) {
            return Err(QhmError::Precondition(format!(
                "coefficient {j} is not skew-adjoint: ||A + A*|| = {defect:e}"
            )));
        }
    }
    Ok(Connection {
        spec,
        a: [
            skew_symmetrize(&a1),
            skew_symmetrize(&a2),
            skew_symmetrize(&a3),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureCR {
    pub f13: AlgebraMatrix,
    pub f23: AlgebraMatrix,
    pub f12: AlgebraMatrix,
}

/// Multiplier form of the curvature:
/// F13 = d1 A3 - d3 A1 + [A1, A3], F23 likewise, and
/// F12 = d1 A2 - d2 A1 + [A1, A2] + (1/alpha) A3 (the derivation bracket
/// [d1, d2] = -(1/alpha) d3 contributes the last term).
pub fn cr_curvature(conn: &Connection) -> Result<CurvatureCR> {
    let t = *conn.trunc();
    let alpha = conn.a[0].get(0, 0).params().alpha;
    let d = |j: u8, m: &AlgebraMatrix| m.map(|el| derive(j, el));
    let (a1, a2, a3) = (&conn.a[0], &conn.a[1], &conn.a[2]);
    let f13 = d(1, a3)?.sub(&d(3, a1)?)?.add(&a1.commutator(a3, t)?)?;
    let f23 = d(2, a3)?.sub(&d(3, a2)?)?.add(&a2.commutator(a3, t)?)?;
    let f12 = d(1, a2)?
        .sub(&d(2, a1)?)?
        .add(&a1.commutator(a2, t)?)?
        .add(&a3.scale(Complex64::new(1.0 / alpha, 0.0)))?;
    Ok(CurvatureCR { f13, f23, f12 })
}

/// -tau(Tr(F13^2 + F23^2 + F12^2)); nonnegative for skew F.
pub fn ym_cr(conn: &Connection) -> Result<f64> {
    ym_cr_value(&cr_curvature(conn)?)
}

/// Same functional from an already-computed curvature.
pub fn ym_cr_value(f: &CurvatureCR) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in [&f.f13, &f.f23, &f.f12] {
        acc += m.trace_product(m)?;
    }
    let value = -acc;
    if value.im.abs() > 1e-10 * (1.0 + value.re.abs()) {
        return Err(QhmError::Precondition(format!(
            "curvature functional has a non-real value: {value}"
        )));
    }
    Ok(value.re)
}

/// q x q matrix of OneForms, omega^(kj) representing the connection on the
/// spectral side: l-coordinate (i A_l)_{kj}.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConnection {
    q: usize,
    entries: Vec<OneForm>,
}

impl SpectralConnection {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, row: usize, col: usize) -> &OneForm {
        &self.entries[row * self.q + col]
    }
}

pub fn to_spectral(conn: &Connection) -> Result<SpectralConnection> {
    let q = conn.spec.q;
    let i = Complex64::new(0.0, 1.0);
    let mut entries = Vec::with_capacity(q * q);
    for row in 0..q {
        for col in 0..q {
            entries.push(OneForm::from_components([
                conn.a[0].get(row, col).scale(i),
                conn.a[1].get(row, col).scale(i),
                conn.a[2].get(row, col).scale(i),
            ])?);
        }
    }
    Ok(SpectralConnection { q, entries })
}

/// q x q matrix of TwoForms.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSpectral {
    q: usize,
    entries: Vec<TwoForm>,
}

impl CurvatureSpectral {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, row: usize, col: usize) -> &TwoForm {
        &self.entries[row * self.q + col]
    }

    pub fn scale(&self, z: Complex64) -> Self {
        CurvatureSpectral {
            q: self.q,
            entries: self.entries.iter().map(|t| t.scale(z)).collect(),
        }
    }
}

/// Theta_mj = d1form(omega^(mj)) + sum_k mul11(omega^(mk), omega^(kj)):
/// the forms-calculus composition, computed independently of cr_curvature.
pub fn spectral_theta(omega: &SpectralConnection) -> Result<CurvatureSpectral> {
    spectral_theta_signed(omega, AlphaTermSign::Standard)
}

/// Same composition with an explicit sign choice for the alpha term of the
/// one-form differential; Flipped exists as a falsifier control.
pub fn spectral_theta_signed(
    omega: &SpectralConnection,
    sign: AlphaTermSign,
) -> Result<CurvatureSpectral> {
    let q = omega.q;
    let mut entries = Vec::with_capacity(q * q);
    for m in 0..q {
        for j in 0..q {
            let mut th = d1form_signed(omega.get(m, j), sign)?;
            for k in 0..q {
                th = th.add(&mul11(omega.get(m, k), omega.get(k, j))?)?;
            }
            entries.push(th);
        }
    }
    Ok(CurvatureSpectral { q, entries })
}

/// Half the squared curvature norm: (1/2) sum_{m,j} <Theta_mj, Theta_mj>.
/// This is the normalization under which the two functionals are
/// proportional with constant c_d/2 for every rank.
pub fn ym_spectral(theta: &CurvatureSpectral, cfg: &FormsConfig) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for th in &theta.entries {
        acc += two_form_inner(th, th, cfg)?;
    }
    let value = 0.5 * acc;
    if value.im.abs() > 1e-10 * (1.0 + value.re.abs()) {
        return Err(QhmError::Precondition(format!(
            "spectral functional has a non-real value: {value}"
        )));
    }
    if value.re < -1e-10 * (1.0 + value.re.abs()) {
        return Err(QhmError::Precondition(format!(
            "spectral functional is negative: {}",
            value.re
        )));
    }
    Ok(value.re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncSummary {
    #[serde(rename = "P")]
    pub p: i64,
    #[serde(rename = "N")]
    pub n: i64,
    #[serde(rename = "Nx")]
    pub nx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YMReport {
    pub ym_cr: f64,
    pub ym_spectral: f64,
    pub c_d: f64,
    pub predicted_ratio: f64,
    pub residual: f64,
    pub trunc: TruncSummary,
    pub seeds: Vec<u64>,
}

/// Evaluates both functionals on one connection and reports the relative
/// deviation from the predicted proportionality.
pub fn equivalence_report(conn: &Connection, cfg: &FormsConfig, seeds: &[u64]) -> Result<YMReport> {
    equivalence_report_signed(conn, cfg, seeds, AlphaTermSign::Standard)
}

/// Same report with the alpha-term sign of the spectral differential forced.
/// The flipped variant is the falsifier control: on any connection whose
/// curvature mixes the central direction the residual becomes O(1).
pub fn equivalence_report_signed(
    conn: &Connection,
    cfg: &FormsConfig,
    seeds: &[u64],
    sign: AlphaTermSign,
) -> Result<YMReport> {
    cfg.validate()?;
    let v = ym_cr(conn)?;
    let vt = ym_spectral(&spectral_theta_signed(&to_spectral(conn)?, sign)?, cfg)?;
    let predicted_ratio = cfg.c_d / 2.0;
    let residual = (vt - predicted_ratio * v).abs() / (1.0 + v.abs());
    let t = conn.trunc();
    Ok(YMReport {
        ym_cr: v,
        ym_spectral: vt,
        c_d: cfg.c_d,
        predicted_ratio,
        residual,
        trunc: TruncSummary {
            p: t.p_max,
            n: t.n_max,
            nx: t.nx,
        },
        seeds: seeds.to_vec(),
    })
}
