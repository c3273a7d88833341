//! Square matrices (and column vectors) with algebra-element entries.
//! These model the endomorphisms of the free module on which connections
//! live. Products use the deformed product entrywise.

use num_complex::Complex64;

use crate::element::AlgebraElement;
use crate::error::{QhmError, Result};
use crate::params::Truncation;
use crate::star::{star, trace_star};

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraMatrix {
    q: usize,
    entries: Vec<AlgebraElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraVector {
    entries: Vec<AlgebraElement>,
}

fn check_uniform(entries: &[AlgebraElement]) -> Result<()> {
    let first = &entries[0];
    for el in &entries[1..] {
        if el.params() != first.params() || el.trunc() != first.trunc() {
            return Err(QhmError::Mismatch(
                "matrix entries must share parameters and truncation".into(),
            ));
        }
    }
    Ok(())
}

impl AlgebraMatrix {
    /// Row-major entries, length q*q.
    pub fn from_entries(q: usize, entries: Vec<AlgebraElement>) -> Result<Self> {
        if q == 0 || entries.len() != q * q {
            return Err(QhmError::Mismatch(format!(
                "expected {} entries for q = {q}, got {}",
                q * q,
                entries.len()
            )));
        }
        check_uniform(&entries)?;
        Ok(AlgebraMatrix { q, entries })
    }

    pub fn zeros_like(model: &AlgebraElement, q: usize) -> Self {
        AlgebraMatrix {
            q,
            entries: vec![model.zero_like(); q * q],
        }
    }

    pub fn identity_like(model: &AlgebraElement, q: usize) -> Result<Self> {
        let id = AlgebraElement::identity(*model.params(), *model.trunc())?;
        let mut m = Self::zeros_like(model, q);
        for j in 0..q {
            *m.get_mut(j, j) = id.clone();
        }
        Ok(m)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, row: usize, col: usize) -> &AlgebraElement {
        &self.entries[row * self.q + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut AlgebraElement {
        &mut self.entries[row * self.q + col]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.sub(b))
    }

    fn zip(
        &self,
        other: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> Result<AlgebraElement>,
    ) -> Result<Self> {
        if self.q != other.q {
            return Err(QhmError::Mismatch("matrix sizes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(AlgebraMatrix { q: self.q, entries })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        AlgebraMatrix {
            q: self.q,
            entries: self.entries.iter().map(|el| el.scale(z)).collect(),
        }
    }

    /// Conjugate transpose with the entrywise involution.
    pub fn involution(&self) -> Self {
        let mut out = self.clone();
        for row in 0..self.q {
            for col in 0..self.q {
                *out.get_mut(row, col) = self.get(col, row).involution();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self, out_trunc: Truncation) -> Result<Self> {
        if self.q != other.q {
            return Err(QhmError::Mismatch("matrix sizes differ".into()));
        }
        let mut out = AlgebraMatrix {
            q: self.q,
            entries: Vec::with_capacity(self.q * self.q),
        };
        for row in 0..self.q {
            for col in 0..self.q {
                let mut acc = star(self.get(row, 0), other.get(0, col), out_trunc)?;
                for k in 1..self.q {
                    acc = acc.add(&star(self.get(row, k), other.get(k, col), out_trunc)?)?;
                }
                out.entries.push(acc);
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &Self, out_trunc: Truncation) -> Result<Self> {
        self.mul(other, out_trunc)?.sub(&other.mul(self, out_trunc)?)
    }

    /// tau(Tr(A B)) without forming the product matrix.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.q != other.q {
            return Err(QhmError::Mismatch("matrix sizes differ".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.q {
            for k in 0..self.q {
                acc += trace_star(self.get(j, k), other.get(k, j))?;
            }
        }
        Ok(acc)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|el| el.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// || A + A* || in the entrywise l2 norm; zero iff skew-adjoint.
    pub fn skew_defect(&self) -> f64 {
        match self.add(&self.involution()) {
            Ok(s) => s.l2_norm(),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn apply(&self, v: &AlgebraVector, out_trunc: Truncation) -> Result<AlgebraVector> {
        if self.q != v.len() {
            return Err(QhmError::Mismatch("matrix/vector sizes differ".into()));
        }
        let mut entries = Vec::with_capacity(self.q);
        for row in 0..self.q {
            let mut acc = star(self.get(row, 0), v.get(0), out_trunc)?;
            for k in 1..self.q {
                acc = acc.add(&star(self.get(row, k), v.get(k), out_trunc)?)?;
            }
            entries.push(acc);
        }
        Ok(AlgebraVector { entries })
    }

    pub fn map(&self, f: impl Fn(&AlgebraElement) -> Result<AlgebraElement>) -> Result<Self> {
        let entries = self.entries.iter().map(&f).collect::<Result<Vec<_>>>()?;
        check_uniform(&entries)?;
        Ok(AlgebraMatrix { q: self.q, entries })
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }
}

impl AlgebraVector {
    pub fn from_entries(entries: Vec<AlgebraElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(QhmError::Mismatch("vector must be non-empty".into()));
        }
        check_uniform(&entries)?;
        Ok(AlgebraVector { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, j: usize) -> &AlgebraElement {
        &self.entries[j]
    }

    pub fn get_mut(&mut self, j: usize) -> &mut AlgebraElement {
        &mut self.entries[j]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(QhmError::Mismatch("vector sizes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(AlgebraVector { entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> Self {
        AlgebraVector {
            entries: self.entries.iter().map(|el| el.scale(z)).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|el| el.l2_norm().powi(2)).sum::<f64>().sqrt()
    }
}
