//! Univariate polynomials over the binary residue fields, with complete
//! factorization: squarefree decomposition (characteristic-2 variant),
//! distinct-degree splitting by Frobenius powering, and equal-degree
//! splitting by the additive trace map.

use crate::error::{Error, Result};
use crate::residue::{ResidueElement, ResidueField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense polynomial, little-endian coefficients, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqPoly {
    pub field: ResidueField,
    coeffs: Vec<ResidueElement>,
}

impl FqPoly {
    pub fn new(field: ResidueField, mut coeffs: Vec<ResidueElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        FqPoly { field, coeffs }
    }

    pub fn zero(field: ResidueField) -> Self {
        FqPoly { field, coeffs: Vec::new() }
    }

    pub fn constant(field: ResidueField, c: ResidueElement) -> Self {
        Self::new(field, vec![c])
    }

    pub fn one(field: ResidueField) -> Self {
        Self::constant(field, ResidueElement::ONE)
    }

    /// c * x^k
    pub fn monomial(field: ResidueField, c: ResidueElement, k: usize) -> Self {
        let mut coeffs = vec![ResidueElement::ZERO; k + 1];
        coeffs[k] = c;
        Self::new(field, coeffs)
    }

    pub fn x(field: ResidueField) -> Self {
        Self::monomial(field, ResidueElement::ONE, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ResidueElement::ONE
    }

    /// None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> ResidueElement {
        self.coeffs.get(i).copied().unwrap_or(ResidueElement::ZERO)
    }

    pub fn coeffs(&self) -> &[ResidueElement] {
        &self.coeffs
    }

    pub fn leading(&self) -> ResidueElement {
        self.coeffs.last().copied().unwrap_or(ResidueElement::ZERO)
    }

    pub fn add(&self, other: &FqPoly) -> FqPoly {
        debug_assert_eq!(self.field, other.field);
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.field.add(self.coeff(i), other.coeff(i)));
        }
        FqPoly::new(self.field, out)
    }

    /// Subtraction and addition coincide in characteristic 2.
    pub fn sub(&self, other: &FqPoly) -> FqPoly {
        self.add(other)
    }

    pub fn mul(&self, other: &FqPoly) -> FqPoly {
        debug_assert_eq!(self.field, other.field);
        if self.is_zero() || other.is_zero() {
            return FqPoly::zero(self.field);
        }
        let mut out = vec![ResidueElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = self.field.add(out[i + j], self.field.mul(a, b));
            }
        }
        FqPoly::new(self.field, out)
    }

    pub fn mul_scalar(&self, c: ResidueElement) -> FqPoly {
        let out = self.coeffs.iter().map(|&a| self.field.mul(a, c)).collect();
        FqPoly::new(self.field, out)
    }

    /// Quotient and remainder; divisor must be nonzero.
    pub fn div_rem(&self, divisor: &FqPoly) -> (FqPoly, FqPoly) {
        debug_assert_eq!(self.field, divisor.field);
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let d = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= d {
            return (FqPoly::zero(self.field), self.clone());
        }
        let lead_inv = self.field.inv(divisor.leading()).expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let mut quo = vec![ResidueElement::ZERO; rem.len() - d];
        for i in (d..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = self.field.mul(rem[i], lead_inv);
            quo[i - d] = q;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let t = self.field.mul(q, b);
                rem[i - d + j] = self.field.add(rem[i - d + j], t);
            }
        }
        (FqPoly::new(self.field, quo), FqPoly::new(self.field, rem))
    }

    pub fn rem(&self, divisor: &FqPoly) -> FqPoly {
        self.div_rem(divisor).1
    }

    /// Exact division; panics if the remainder is nonzero.
    pub fn div_exact(&self, divisor: &FqPoly) -> FqPoly {
        let (q, r) = self.div_rem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn monic(&self) -> FqPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.mul_scalar(self.field.inv(self.leading()).expect("nonzero leading coefficient"))
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &FqPoly) -> FqPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Formal derivative; in characteristic 2 only odd-degree terms survive.
    pub fn derivative(&self) -> FqPoly {
        let mut out = Vec::new();
        for i in 1..self.coeffs.len() {
            if i % 2 == 1 {
                out.push(self.coeffs[i]);
            } else {
                out.push(ResidueElement::ZERO);
            }
        }
        FqPoly::new(self.field, out)
    }

    pub fn eval(&self, x: ResidueElement) -> ResidueElement {
        let mut acc = ResidueElement::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = self.field.add(self.field.mul(acc, x), c);
        }
        acc
    }

    /// self^exp mod modulus, by square and multiply.
    pub fn pow_mod(&self, exp: u128, modulus: &FqPoly) -> FqPoly {
        let mut base = self.rem(modulus);
        let mut acc = FqPoly::one(self.field);
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(modulus);
            }
            base = base.mul(&base).rem(modulus);
            e >>= 1;
        }
        acc
    }

    /// Square root of a polynomial all of whose terms have even degree
    /// (every coefficient of odd degree is zero). In characteristic 2 such a
    /// polynomial is the square of the polynomial with square-rooted
    /// coefficients at halved exponents.
    fn even_part_sqrt(&self) -> FqPoly {
        let mut out = Vec::new();
        for i in (0..self.coeffs.len()).step_by(2) {
            out.push(self.field.sqrt(self.coeffs[i]));
        }
        FqPoly::new(self.field, out)
    }

    /// Squarefree decomposition of a nonzero polynomial: monic pairwise
    /// coprime squarefree parts with their multiplicities, sorted by
    /// multiplicity. The leading coefficient is discarded.
    pub fn squarefree_decomposition(&self) -> Vec<(FqPoly, usize)> {
        assert!(!self.is_zero());
        let f = self.monic();
        if f.degree() == Some(0) {
            return Vec::new();
        }
        let deriv = f.derivative();
        let mut out = Vec::new();
        if deriv.is_zero() {
            // f = g(x)^2 exactly
            for (h, m) in f.even_part_sqrt().squarefree_decomposition() {
                out.push((h, 2 * m));
            }
            return out;
        }
        let mut c = f.gcd(&deriv);
        let mut w = f.div_exact(&c);
        let mut i = 1usize;
        while !w.is_one() {
            let y = w.gcd(&c);
            let z = w.div_exact(&y);
            if !z.is_one() {
                out.push((z, i));
            }
            i += 1;
            c = c.div_exact(&y);
            w = y;
        }
        if !c.is_one() {
            // remaining part is a square
            for (h, m) in c.even_part_sqrt().squarefree_decomposition() {
                out.push((h, 2 * m));
            }
        }
        out.sort_by_key(|&(_, m)| m);
        out
    }

    /// Distinct-degree splitting of a monic squarefree polynomial: pairs
    /// (product of all irreducible factors of degree d, d).
    fn distinct_degree(&self) -> Vec<(FqPoly, usize)> {
        let field = self.field;
        let q = field.order();
        let mut f = self.monic();
        let mut out = Vec::new();
        let mut h = FqPoly::x(field); // x^(q^d) mod f, incrementally
        let mut d = 0usize;
        while f.degree().unwrap_or(0) > 0 {
            d += 1;
            if 2 * d > f.degree().unwrap() {
                // what is left is irreducible
                out.push((f.clone(), f.degree().unwrap()));
                break;
            }
            h = h.pow_mod(q, &f);
            let g = f.gcd(&h.add(&FqPoly::x(field)));
            if g.degree().unwrap_or(0) > 0 {
                out.push((g.clone(), d));
                f = f.div_exact(&g);
                h = h.rem(&f);
            }
        }
        out
    }

    /// Equal-degree splitting: factor a monic squarefree product of
    /// irreducibles all of degree d. Uses the absolute trace map
    /// T(g) = g + g^2 + ... + g^(2^(nd-1)) mod f, which lands each factor
    /// field in F_2 and splits f with probability about 1/2 per trial.
    fn equal_degree(&self, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<FqPoly>> {
        let f = self.monic();
        let deg = f.degree().unwrap_or(0);
        if deg == d {
            return Ok(vec![f]);
        }
        debug_assert!(deg.is_multiple_of(d));
        let n = self.field.degree();
        let mask = if self.field.degree() == 64 { u64::MAX } else { (1u64 << self.field.degree()) - 1 };
        for _ in 0..10_000 {
            let g = FqPoly::new(
                self.field,
                (0..deg).map(|_| ResidueElement(rng.gen::<u64>() & mask)).collect(),
            );
            if g.degree().unwrap_or(0) == 0 {
                continue;
            }
            let c = f.gcd(&g);
            let split = if c.degree().unwrap_or(0) > 0 && c.degree() < f.degree() {
                c
            } else {
                let mut trace = g.clone();
                let mut p = g.clone();
                for _ in 1..(n * d) {
                    p = p.mul(&p).rem(&f);
                    trace = trace.add(&p);
                }
                let w = f.gcd(&trace);
                if w.degree().unwrap_or(0) == 0 || w.degree() == f.degree() {
                    continue;
                }
                w
            };
            let other = f.div_exact(&split);
            let mut out = split.equal_degree(d, rng)?;
            out.extend(other.equal_degree(d, rng)?);
            return Ok(out);
        }
        Err(Error::Internal(format!(
            "equal-degree splitting failed to converge (degree {deg}, blocks of {d})"
        )))
    }

    /// Complete factorization into monic irreducibles with multiplicities,
    /// sorted by (degree, coefficients). The leading coefficient is dropped;
    /// callers needing it should read `leading()` first.
    pub fn factor(&self) -> Result<Vec<(FqPoly, usize)>> {
        assert!(!self.is_zero());
        let mut rng = ChaCha8Rng::seed_from_u64(0x005e_edf0_fac7);
        let mut out: Vec<(FqPoly, usize)> = Vec::new();
        for (sf, mult) in self.squarefree_decomposition() {
            for (block, d) in sf.distinct_degree() {
                for irr in block.equal_degree(d, &mut rng)? {
                    out.push((irr, mult));
                }
            }
        }
        out.sort_by(|a, b| {
            (a.0.coeffs.len(), &a.0.coeffs).cmp(&(b.0.coeffs.len(), &b.0.coeffs))
        });
        Ok(out)
    }

    /// Roots in the coefficient field, with multiplicities.
    pub fn roots(&self) -> Result<Vec<(ResidueElement, usize)>> {
        let mut out = Vec::new();
        for (irr, mult) in self.factor()? {
            if irr.degree() == Some(1) {
                // monic linear x + r has root r (characteristic 2)
                out.push((irr.coeff(0), mult));
            }
        }
        Ok(out)
    }

    pub fn is_irreducible(&self) -> Result<bool> {
        if self.degree().unwrap_or(0) == 0 {
            return Ok(false);
        }
        let fs = self.factor()?;
        Ok(fs.len() == 1 && fs[0].1 == 1)
    }
}
