//! Polynomials over a 2-adic local field, their Newton polygons, and the
//! residual polynomials attached to polygon segments.
//!
//! The polygon code certifies its output: a coefficient that is only known
//! to be zero below some precision contributes no point, which is sound
//! only when its precision bound lies on or above the computed hull. When
//! that fails the polygon is not trustworthy and an error is returned
//! instead of a guess.

use crate::error::{Error, Result};
use crate::fqpoly::FqPoly;
use crate::local::{LocalElement, LocalField};
use num_rational::Ratio;

#[derive(Clone, Debug)]
pub struct LocalPolynomial {
    field: LocalField,
    coeffs: Vec<LocalElement>, // little-endian; trailing exact zeros trimmed
}

impl LocalPolynomial {
    pub fn new(field: LocalField, mut coeffs: Vec<LocalElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_exactly_zero()) {
            coeffs.pop();
        }
        LocalPolynomial { field, coeffs }
    }

    pub fn from_integers(field: &LocalField, cs: &[i128]) -> Self {
        let coeffs = cs.iter().map(|&c| field.integer(c)).collect();
        Self::new(field.clone(), coeffs)
    }

    pub fn zero(field: &LocalField) -> Self {
        Self::new(field.clone(), Vec::new())
    }

    pub fn field(&self) -> &LocalField {
        &self.field
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> LocalElement {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn coeffs(&self) -> &[LocalElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Leading coefficient is exactly one (constructed, not approximate).
    pub fn is_monic_to_precision(&self) -> bool {
        self.coeffs
            .last()
            .is_some_and(|c| c.sub(&self.field.one()).is_zero_to_precision())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect();
        Self::new(self.field.clone(), coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).sub(&other.coeff(i))).collect();
        Self::new(self.field.clone(), coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.field);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Self::new(self.field.clone(), out)
    }

    pub fn mul_scalar(&self, c: &LocalElement) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a.mul(c)).collect();
        Self::new(self.field.clone(), coeffs)
    }

    pub fn eval(&self, x: &LocalElement) -> LocalElement {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.mul(&self.field.integer(i as i128)))
            .collect();
        Self::new(self.field.clone(), coeffs)
    }

    /// Quotient and remainder by a divisor whose leading coefficient is a
    /// unit (in particular any monic divisor). Precision flows through the
    /// element arithmetic.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let d = divisor
            .degree()
            .ok_or_else(|| Error::Internal("division by the zero polynomial".into()))?;
        let lead_inv = divisor.coeffs[d].inv()?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= d {
            return Ok((Self::zero(&self.field), self.clone()));
        }
        let mut quo = vec![self.field.zero(); rem.len() - d];
        for i in (d..rem.len()).rev() {
            let q = rem[i].mul(&lead_inv);
            quo[i - d] = q.clone();
            for (j, b) in divisor.coeffs.iter().enumerate() {
                rem[i - d + j] = rem[i - d + j].sub(&q.mul(b));
            }
        }
        rem.truncate(d);
        Ok((
            Self::new(self.field.clone(), quo),
            Self::new(self.field.clone(), rem),
        ))
    }

    /// Substitute t -> a + t (Taylor shift by a).
    pub fn shift(&self, a: &LocalElement) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // synthetic division: repeated evaluation-style accumulation
        for j in 0..n {
            for i in (j..n.saturating_sub(1)).rev() {
                let t = c[i + 1].mul(a);
                c[i] = c[i].add(&t);
            }
        }
        Self::new(self.field.clone(), c)
    }

    /// Substitute t -> c * t.
    pub fn scale(&self, c: &LocalElement) -> Self {
        let mut pow = self.field.one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a.mul(&pow));
            pow = pow.mul(c);
        }
        Self::new(self.field.clone(), out)
    }

    /// Substitute t -> pi^k * t and divide the whole polynomial by
    /// pi^(k * deg), keeping a monic polynomial monic.
    pub fn scale_by_pi_power_monic(&self, k: i64) -> Self {
        let n = match self.degree() {
            Some(n) => n as i64,
            None => return self.clone(),
        };
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a.mul_pi_power(k * (i as i64 - n)))
            .collect();
        Self::new(self.field.clone(), out)
    }

    /// Expansion of self in powers of a monic divisor: self = sum a_j g^j
    /// with deg a_j < deg g.
    pub fn adic_expansion(&self, g: &Self) -> Result<Vec<Self>> {
        let mut rest = self.clone();
        let mut out = Vec::new();
        while !rest.is_zero() && rest.degree() >= g.degree() {
            let (q, r) = rest.div_rem(g)?;
            out.push(r);
            rest = q;
        }
        out.push(rest);
        Ok(out)
    }

    /// Map the polynomial through an unramified residue enlargement.
    pub fn map_coefficients(&self, map: &crate::local::UnramifiedMap) -> Self {
        let coeffs = self.coeffs.iter().map(|c| map.apply(c)).collect();
        Self::new(map.target.clone(), coeffs)
    }
}

/// One segment of a lower Newton polygon, from (start, start_val) spanning
/// `length` columns with the given slope. Roots attached to the segment
/// have valuation -slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonSegment {
    pub slope: Ratio<i64>,
    pub length: usize,
    pub start: usize,
    pub start_val: i64,
}

impl LocalPolynomial {
    /// Certified lower Newton polygon. Coefficients that are exact zeros
    /// contribute nothing; coefficients that are zero only to precision are
    /// sound exactly when their precision bound does not dip below the hull,
    /// otherwise the polygon is rejected.
    pub fn newton_polygon(&self) -> Result<Vec<PolygonSegment>> {
        let mut known: Vec<(usize, i64)> = Vec::new();
        let mut bounded: Vec<(usize, i64)> = Vec::new(); // zero-to-precision
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_exactly_zero() {
                continue;
            }
            if c.is_zero_to_precision() {
                bounded.push((i, c.precision()));
            } else {
                known.push((i, c.valuation()?));
            }
        }
        if known.len() < 2 {
            return Err(Error::Internal(
                "Newton polygon needs at least two known coefficients".into(),
            ));
        }
        // lower convex hull, left to right (Andrew's monotone chain, lower)
        let mut hull: Vec<(usize, i64)> = Vec::new();
        for &p in &known {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // keep b only if it turns strictly upward: cross > 0
                let cross = (b.0 as i128 - a.0 as i128) * (p.1 as i128 - a.1 as i128)
                    - (b.1 as i128 - a.1 as i128) * (p.0 as i128 - a.0 as i128);
                if cross <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let hull_value = |i: usize| -> Ratio<i64> {
            // value of the hull's lower envelope at column i (clamped ends)
            if i <= hull[0].0 {
                return Ratio::from_integer(hull[0].1);
            }
            for w in hull.windows(2) {
                let (x0, y0) = (w[0].0 as i64, w[0].1);
                let (x1, y1) = (w[1].0 as i64, w[1].1);
                if (i as i64) <= x1 {
                    return Ratio::new(y0 * (x1 - i as i64) + y1 * (i as i64 - x0), x1 - x0);
                }
            }
            Ratio::from_integer(hull.last().unwrap().1)
        };
        for &(i, bound) in &bounded {
            if i < hull[0].0 {
                // a hidden coefficient left of the first exact corner could
                // carry an extra segment the hull cannot represent
                return Err(Error::insufficient(
                    format!("Newton polygon: coefficient of t^{i} left of the hull is indistinct"),
                    bound,
                ));
            }
            if Ratio::from_integer(bound) < hull_value(i) {
                return Err(Error::insufficient(
                    format!("Newton polygon: coefficient of t^{i} is indistinct below the hull"),
                    bound,
                ));
            }
        }
        let mut segments = Vec::new();
        for w in hull.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            segments.push(PolygonSegment {
                slope: Ratio::new(y1 - y0, (x1 - x0) as i64),
                length: x1 - x0,
                start: x0,
                start_val: y0,
            });
        }
        Ok(segments)
    }

    /// Residual polynomial of a polygon segment with slope -h/eps in lowest
    /// terms: R(y) = sum_j res(c_{start + j*eps} / pi^(start_val - j*h)) y^j.
    /// Off-hull lattice coefficients reduce to zero automatically.
    pub fn residual_polynomial(&self, seg: &PolygonSegment) -> Result<FqPoly> {
        let h = -*seg.slope.numer();
        let eps = *seg.slope.denom();
        debug_assert!(eps >= 1);
        let steps = seg.length as i64 / eps;
        let k = self.field.residue_field();
        let mut out = Vec::with_capacity(steps as usize + 1);
        for j in 0..=steps {
            let i = seg.start + (j * eps) as usize;
            let want = seg.start_val - j * h;
            let c = self.coeff(i);
            let r = if c.is_exactly_zero() {
                crate::residue::ResidueElement::ZERO
            } else if c.is_zero_to_precision() {
                if c.precision() <= want {
                    return Err(Error::insufficient(
                        format!("residual coefficient at t^{i} unknown"),
                        c.precision(),
                    ));
                }
                crate::residue::ResidueElement::ZERO
            } else {
                c.mul_pi_power(-want).residue()?
            };
            out.push(r);
        }
        Ok(FqPoly::new(k, out))
    }
}
