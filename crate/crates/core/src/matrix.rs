//! Dense matrices over a local field: multiplication, characteristic
//! polynomials, determinants, and linear solves with valuation pivoting.
//!
//! Sizes here are tiny (at most 8x8 plus a right-hand side), so everything
//! is written for clarity over asymptotics. The characteristic polynomial
//! uses the Faddeev-LeVerrier recurrence; its divisions by small integers
//! cost a few container bits of precision, which the working-precision
//! guard absorbs.

use crate::error::{Error, Result};
use crate::local::{LocalElement, LocalField};
use crate::poly::LocalPolynomial;

#[derive(Clone, Debug)]
pub struct LocalMatrix {
    field: LocalField,
    n: usize,
    entries: Vec<LocalElement>, // row-major
}

impl LocalMatrix {
    pub fn new(field: LocalField, n: usize, entries: Vec<LocalElement>) -> Self {
        assert_eq!(entries.len(), n * n);
        LocalMatrix { field, n, entries }
    }

    pub fn zero(field: &LocalField, n: usize) -> Self {
        LocalMatrix {
            field: field.clone(),
            n,
            entries: vec![field.zero(); n * n],
        }
    }

    pub fn identity(field: &LocalField, n: usize) -> Self {
        let mut m = Self::zero(field, n);
        for i in 0..n {
            *m.at_mut(i, i) = field.one();
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &LocalElement {
        &self.entries[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut LocalElement {
        &mut self.entries[i * self.n + j]
    }

    pub fn add(&self, other: &Self) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        LocalMatrix {
            field: self.field.clone(),
            n: self.n,
            entries,
        }
    }

    pub fn add_scalar_diagonal(&self, c: &LocalElement) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            *m.at_mut(i, i) = m.at(i, i).add(c);
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zero(&self.field, n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_exactly_zero() {
                    continue;
                }
                for j in 0..n {
                    *out.at_mut(i, j) = out.at(i, j).add(&a.mul(other.at(k, j)));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[LocalElement]) -> Vec<LocalElement> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = self.field.zero();
                for (j, x) in v.iter().enumerate().take(n) {
                    acc = acc.add(&self.at(i, j).mul(x));
                }
                acc
            })
            .collect()
    }

    pub fn trace(&self) -> LocalElement {
        let mut acc = self.field.zero();
        for i in 0..self.n {
            acc = acc.add(self.at(i, i));
        }
        acc
    }

    /// Characteristic polynomial det(T*I - M), monic of degree n, via the
    /// Faddeev-LeVerrier recurrence.
    pub fn charpoly(&self) -> Result<LocalPolynomial> {
        let n = self.n;
        let mut coeffs = vec![self.field.zero(); n + 1];
        coeffs[n] = self.field.one();
        let mut mk = self.clone();
        let mut ck = mk.trace().neg();
        if n >= 1 {
            coeffs[n - 1] = ck.clone();
        }
        for k in 2..=n {
            mk = self.mul(&mk.add_scalar_diagonal(&ck));
            ck = mk.trace().neg().div(&self.field.integer(k as i128))?;
            coeffs[n - k] = ck.clone();
        }
        Ok(LocalPolynomial::new(self.field.clone(), coeffs))
    }

    pub fn det(&self) -> Result<LocalElement> {
        let c0 = self.charpoly()?.coeff(0);
        Ok(if self.n % 2 == 1 { c0.neg() } else { c0 })
    }

    /// Solve M x = b by Gaussian elimination, choosing in each column the
    /// pivot of minimal valuation so that eliminations only ever multiply
    /// by integral ratios. Fails if some pivot column is indistinguishable
    /// from zero at working precision.
    pub fn solve(&self, b: &[LocalElement]) -> Result<Vec<LocalElement>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut a = self.entries.clone();
        let mut rhs = b.to_vec();
        let mut row_of_col = vec![usize::MAX; n];
        let mut used = vec![false; n];
        for col in 0..n {
            let mut best: Option<(usize, i64)> = None;
            for (r, flag) in used.iter().enumerate() {
                if *flag {
                    continue;
                }
                let e = &a[r * n + col];
                if e.is_zero_to_precision() {
                    continue;
                }
                let v = e.valuation()?;
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((r, v));
                }
            }
            let (piv, _) = best.ok_or_else(|| {
                Error::insufficient(
                    format!("linear solve: no usable pivot in column {col}"),
                    self.field.working_precision(),
                )
            })?;
            used[piv] = true;
            row_of_col[col] = piv;
            let inv = a[piv * n + col].inv()?;
            for r in 0..n {
                if r == piv {
                    continue;
                }
                let factor = a[r * n + col].mul(&inv);
                if factor.is_zero_to_precision() {
                    continue;
                }
                for c in 0..n {
                    let t = factor.mul(&a[piv * n + c]);
                    a[r * n + c] = a[r * n + c].sub(&t);
                }
                let t = factor.mul(&rhs[piv]);
                rhs[r] = rhs[r].sub(&t);
            }
        }
        let mut x = vec![self.field.zero(); n];
        for col in 0..n {
            let r = row_of_col[col];
            x[col] = rhs[r].div(&a[r * n + col])?;
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2(prec: i64) -> LocalField {
        LocalField::unramified(1, prec).unwrap()
    }

    fn from_ints(field: &LocalField, n: usize, vals: &[i128]) -> LocalMatrix {
        let entries = vals.iter().map(|&v| field.integer(v)).collect();
        LocalMatrix::new(field.clone(), n, entries)
    }

    #[test]
    fn charpoly_of_companion_matrix_recovers_the_polynomial() {
        // companion matrix of t^3 - 2t + 6
        let k = q2(64);
        let m = from_ints(&k, 3, &[0, 0, -6, 1, 0, 2, 0, 1, 0]);
        let cp = m.charpoly().unwrap();
        assert!(cp.coeff(0).eq_to_precision(&k.integer(6)));
        assert!(cp.coeff(1).eq_to_precision(&k.integer(-2)));
        assert!(cp.coeff(2).eq_to_precision(&k.integer(0)));
        assert!(cp.coeff(3).eq_to_precision(&k.one()));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let k = q2(64);
        let m = from_ints(&k, 3, &[2, 1, 0, -3, 4, 5, 1, 1, 7]);
        // det = 2*(28-5) - 1*(-21-5) + 0 = 46 + 26 = 72
        let d = m.det().unwrap();
        assert!(d.eq_to_precision(&k.integer(72)));
    }

    #[test]
    fn solve_round_trips_with_mixed_valuations() {
        let k = q2(64);
        let m = from_ints(&k, 3, &[2, 8, 1, 4, 2, 0, 1, 0, 16]);
        let x_true = vec![k.integer(3), k.integer(-1), k.integer(5)];
        let b = m.mul_vec(&x_true);
        let x = m.solve(&b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!(got.eq_to_precision(want));
        }
    }

    #[test]
    fn solve_reports_singular_systems_as_precision_failures() {
        let k = q2(32);
        let m = from_ints(&k, 2, &[1, 2, 2, 4]);
        match m.solve(&[k.one(), k.zero()]) {
            Err(Error::InsufficientPrecision { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
