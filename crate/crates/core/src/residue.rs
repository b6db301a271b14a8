//! Finite fields of characteristic two.
//!
//! `ResidueField` models F_{2^n} as F_2[x]/(m) for a monic irreducible m,
//! with elements stored as bit-vectors (bit i = coefficient of x^i).  The
//! default modulus for each degree is the lexicographically smallest monic
//! irreducible with nonzero constant term, so encodings are reproducible
//! across runs and machines.  Degrees up to 63 are supported; construction
//! verifies irreducibility, by exhaustive trial division at small degree and
//! by the derandomized Rabin criterion beyond that.

use crate::error::{Error, Result};

/// Fixed default moduli for degrees 1..=16: lexicographically smallest monic
/// irreducible binary polynomial with constant term 1, encoded with bit i as
/// the coefficient of x^i.
#[rustfmt::skip]
pub const DEFAULT_MODULI: [u64; 16] = [
    0x3,     0x7,     0xb,     0x13,
    0x25,    0x43,    0x83,    0x11b,
    0x203,   0x409,   0x805,   0x1009,
    0x201b,  0x4021,  0x8003,  0x1002b,
];

/// An element of F_{2^n}, as coefficients of the power basis packed into bits.
/// Context-free: arithmetic goes through the owning `ResidueField`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(transparent)]
pub struct ResidueElement(pub u64);

impl ResidueElement {
    pub const ZERO: ResidueElement = ResidueElement(0);
    pub const ONE: ResidueElement = ResidueElement(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// F_{2^n} with a fixed monic irreducible modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidueField {
    n: u32,
    modulus: u64,
}

#[inline]
fn poly_deg(p: u64) -> i32 {
    63 - p.leading_zeros() as i32 // -1 semantics unused: callers guard p != 0
}

/// Carry-less product of two binary polynomials (degrees < 64).
#[inline]
fn clmul(a: u64, b: u64) -> u128 {
    let mut r: u128 = 0;
    let a = a as u128;
    let mut b = b;
    while b != 0 {
        let i = b.trailing_zeros();
        r ^= a << i;
        b &= b - 1;
    }
    r
}

/// Remainder of a binary polynomial (degree < 128) modulo m (degree <= 63).
fn poly_rem(mut a: u128, m: u64) -> u64 {
    debug_assert!(m != 0);
    let dm = 127 - (m as u128).leading_zeros() as i32;
    while a >> dm != 0 {
        let da = 127 - a.leading_zeros() as i32;
        a ^= (m as u128) << (da - dm);
    }
    a as u64
}

/// gcd of binary polynomials.
fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = poly_rem(a as u128, b);
        a = b;
        b = r;
    }
    a
}

/// Irreducibility over F_2 by exhaustive trial division (degree <= 20).
fn irreducible_trial_division(p: u64) -> bool {
    let n = poly_deg(p);
    if n <= 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    for d in 1..=(n / 2) {
        for q in (1u64 << d)..(1u64 << (d + 1)) {
            if poly_rem(p as u128, q) == 0 {
                return false;
            }
        }
    }
    true
}

/// Rabin irreducibility test: p (degree n) is irreducible iff
/// x^(2^n) == x mod p and gcd(x^(2^(n/q)) - x, p) = 1 for every prime q | n.
fn irreducible_rabin(p: u64) -> bool {
    let n = poly_deg(p);
    if n <= 0 {
        return false;
    }
    let n = n as u32;
    let sq = |a: u64| poly_rem(clmul(a, a), p);
    let frob_pow = |k: u32| {
        // x^(2^k) mod p
        let mut a = if n == 1 { poly_rem(2u128, p) } else { 2u64 };
        for _ in 0..k {
            a = sq(a);
        }
        a
    };
    let x = if n == 1 { poly_rem(2u128, p) } else { 2u64 };
    if frob_pow(n) != x {
        return false;
    }
    let mut m = n;
    let mut q = 2;
    let mut primes = Vec::new();
    while m > 1 {
        if m.is_multiple_of(q) {
            primes.push(q);
            while m.is_multiple_of(q) {
                m /= q;
            }
        }
        q += 1;
    }
    for q in primes {
        let g = poly_gcd(frob_pow(n / q) ^ x, p);
        if poly_deg(g) > 0 {
            return false;
        }
    }
    true
}

impl ResidueField {
    /// Field with the fixed default modulus for this degree.
    pub fn new(n: usize) -> Result<ResidueField> {
        if n == 0 || n > 63 {
            return Err(Error::ResidueFieldTooLarge(n));
        }
        if n <= 16 {
            return ResidueField::with_modulus(n, DEFAULT_MODULI[n - 1]);
        }
        // Same deterministic rule as the table, found at runtime.
        for m in ((1u64 << n) | 1..).step_by(2) {
            if m >> n != 1 {
                break;
            }
            if irreducible_rabin(m) {
                return ResidueField::with_modulus(n, m);
            }
        }
        Err(Error::Internal(format!("no irreducible modulus of degree {n} found")))
    }

    /// Field with a caller-supplied monic modulus (bit i = coefficient of x^i).
    pub fn with_modulus(n: usize, modulus: u64) -> Result<ResidueField> {
        if n == 0 || n > 63 {
            return Err(Error::ResidueFieldTooLarge(n));
        }
        if poly_deg(modulus) != n as i32 {
            return Err(Error::Descriptor(format!(
                "modulus {modulus:#b} does not have degree {n}"
            )));
        }
        let ok = if n <= 16 { irreducible_trial_division(modulus) } else { irreducible_rabin(modulus) };
        if !ok {
            let factor = (1..=n as i32 / 2)
                .flat_map(|d| (1u64 << d)..(1u64 << (d + 1)))
                .find(|&q| poly_rem(modulus as u128, q) == 0)
                .unwrap_or(0);
            return Err(Error::ReducibleModulus { degree: n, factor });
        }
        Ok(ResidueField { n: n as u32, modulus })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// 2^n as u128 (fits: n <= 63).
    #[inline]
    pub fn order(&self) -> u128 {
        1u128 << self.n
    }

    #[inline]
    pub fn contains(&self, a: ResidueElement) -> bool {
        self.n == 64 || a.0 >> self.n == 0
    }

    pub fn element(&self, bits: u64) -> ResidueElement {
        debug_assert!(self.contains(ResidueElement(bits)));
        ResidueElement(bits)
    }

    /// The class of x, a multiplicative generator of the power basis.
    pub fn gen(&self) -> ResidueElement {
        if self.n == 1 {
            // x == 1 mod (x + 1)
            ResidueElement(self.modulus & 1)
        } else {
            ResidueElement(2)
        }
    }

    #[inline]
    pub fn add(&self, a: ResidueElement, b: ResidueElement) -> ResidueElement {
        ResidueElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: ResidueElement, b: ResidueElement) -> ResidueElement {
        ResidueElement(poly_rem(clmul(a.0, b.0), self.modulus))
    }

    pub fn square(&self, a: ResidueElement) -> ResidueElement {
        self.mul(a, a)
    }

    pub fn pow(&self, a: ResidueElement, mut e: u128) -> ResidueElement {
        if e == 0 {
            return ResidueElement::ONE;
        }
        let mut base = a;
        let mut acc = ResidueElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; None for zero.
    pub fn inv(&self, a: ResidueElement) -> Option<ResidueElement> {
        if a.is_zero() {
            return None;
        }
        Some(self.pow(a, self.order() - 2))
    }

    /// Frobenius x -> x^2 (a field automorphism).
    pub fn frobenius(&self, a: ResidueElement) -> ResidueElement {
        self.square(a)
    }

    /// Inverse of Frobenius: the unique square root.
    pub fn sqrt(&self, a: ResidueElement) -> ResidueElement {
        self.pow(a, self.order() / 2)
    }

    /// Whether a is a cube.  In F_{2^n}^x cubing is onto iff 3 does not
    /// divide 2^n - 1, i.e. iff n is odd; otherwise the cubes are the index-3
    /// subgroup picked out by u^((2^n-1)/3) = 1.  Zero is a cube.
    pub fn is_cube(&self, a: ResidueElement) -> bool {
        if a.is_zero() {
            return true;
        }
        let q1 = self.order() - 1;
        if !q1.is_multiple_of(3) {
            return true;
        }
        self.pow(a, q1 / 3) == ResidueElement::ONE
    }

    /// A cube root, when one exists.
    ///
    /// When gcd(3, 2^n - 1) = 1 the root is u^(3^-1 mod 2^n-1); when 3 | 2^n-1
    /// but 9 does not, u^(3^-1 mod (2^n-1)/3) works for cubes; in the rare
    /// 9 | 2^n - 1 fields (6 | n) we fall back to exhaustive search over the
    /// cyclic group generated by the element.
    pub fn cube_root(&self, a: ResidueElement) -> Option<ResidueElement> {
        if a.is_zero() {
            return Some(ResidueElement::ZERO);
        }
        let q1 = self.order() - 1;
        if !q1.is_multiple_of(3) {
            let inv3 = mod_inverse(3, q1)?;
            return Some(self.pow(a, inv3));
        }
        if !self.is_cube(a) {
            return None;
        }
        if !(q1 / 3).is_multiple_of(3) {
            let inv3 = mod_inverse(3, q1 / 3)?;
            let r = self.pow(a, inv3);
            // r^3 = a * (a^((q-1)/3))^k = a for cubes
            debug_assert_eq!(self.pow(r, 3), a);
            return Some(r);
        }
        // 9 | q-1: write q-1 = 3^s * m with 3 not dividing m. Then
        // r0 = a^(3^-1 mod m) cubes to a times an element of the Sylow
        // 3-subgroup, and every cube root of a lies in r0 * Sylow. The Sylow
        // subgroup has at most 3^4 = 81 elements for n <= 63, so scan it.
        let mut s = 0u32;
        let mut m = q1;
        while m.is_multiple_of(3) {
            m /= 3;
            s += 1;
        }
        let alpha = mod_inverse(3, m)?;
        let r0 = self.pow(a, alpha);
        let z = {
            let mut c = ResidueElement(2);
            loop {
                let w = self.pow(c, q1 / 3);
                if w != ResidueElement::ONE {
                    break self.pow(c, m); // order exactly 3^s
                }
                c = ResidueElement(c.0 + 1);
            }
        };
        let mut r = r0;
        for _ in 0..3u128.pow(s) {
            if self.pow(r, 3) == a {
                return Some(r);
            }
            r = self.mul(r, z);
        }
        None
    }

    /// Iterator over all field elements (intended for small n, e.g. tests).
    pub fn elements(&self) -> impl Iterator<Item = ResidueElement> {
        (0..(1u64 << self.n)).map(ResidueElement)
    }

    /// Absolute trace to F_2.
    pub fn trace(&self, a: ResidueElement) -> ResidueElement {
        let mut acc = a;
        let mut x = a;
        for _ in 1..self.n {
            x = self.square(x);
            acc = self.add(acc, x);
        }
        acc
    }

    /// An element of multiplicative order 3 (primitive cube root of unity).
    /// Exists iff n is even.
    pub fn cube_root_of_unity(&self) -> Option<ResidueElement> {
        let q1 = self.order() - 1;
        if !q1.is_multiple_of(3) {
            return None;
        }
        // x^((q-1)/3) has order dividing 3; walk generators until order exactly 3.
        for bits in 2..(1u64 << self.n) {
            let c = self.pow(ResidueElement(bits), q1 / 3);
            if c != ResidueElement::ONE && !c.is_zero() {
                return Some(c);
            }
        }
        None
    }

    /// Deterministic embedding of a subfield: finds the lexicographically
    /// smallest root of `sub`'s modulus in this field and returns the image
    /// of each of `sub`'s basis powers, so elements map F_2-linearly.
    pub fn embedding_from(&self, sub: &ResidueField) -> Result<ResidueEmbedding> {
        if !self.degree().is_multiple_of(sub.degree()) {
            return Err(Error::Internal(format!(
                "F_2^{} is not a subfield of F_2^{}",
                sub.degree(),
                self.degree()
            )));
        }
        // Root of sub.modulus in self, by minimizing bits: evaluate the modulus
        // on candidates produced from the Frobenius orbit of a systematic root.
        let root = self
            .roots_of_subfield_modulus(sub)
            .into_iter()
            .min()
            .ok_or_else(|| Error::Internal("no root of subfield modulus found".into()))?;
        let mut basis_images = Vec::with_capacity(sub.degree());
        let mut p = ResidueElement::ONE;
        for _ in 0..sub.degree() {
            basis_images.push(p);
            p = self.mul(p, root);
        }
        Ok(ResidueEmbedding { from_degree: sub.degree(), basis_images })
    }

    fn roots_of_subfield_modulus(&self, sub: &ResidueField) -> Vec<ResidueElement> {
        // Find one root by factoring gcd(x^(2^d) - x, m(x)) implicitly:
        // brute force over Frobenius orbits of a split element.  Desk scale:
        // solve m(r) = 0 by scanning a basis of the d-torsion of Frobenius.
        // The subfield has 2^d elements; its members are exactly the roots of
        // x^(2^d) = x.  We scan candidates from the kernel of (F^d - id),
        // which we get by linear algebra over F_2.
        let n = self.degree();
        let d = sub.degree();
        // Matrix of F^d - id in the power basis.
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = self.element(1 << j);
            for _ in 0..d {
                v = self.square(v);
            }
            cols.push(v.0 ^ (1 << j));
        }
        // Kernel basis by Gaussian elimination on the transposed system.
        let kernel = f2_kernel(&cols, n);
        // Subfield elements = F_2-span of kernel; evaluate sub.modulus on each.
        let mut roots = Vec::new();
        let k = kernel.len();
        for mask in 0..(1u64 << k) {
            let mut cand = 0u64;
            for (i, b) in kernel.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    cand ^= b;
                }
            }
            let c = ResidueElement(cand);
            if self.eval_f2_poly(sub.modulus(), c).is_zero() {
                roots.push(c);
            }
        }
        roots
    }

    /// Evaluate a polynomial with F_2 coefficients (bit-packed) at a point.
    pub fn eval_f2_poly(&self, poly_bits: u64, x: ResidueElement) -> ResidueElement {
        let mut acc = ResidueElement::ZERO;
        for i in (0..64).rev() {
            if poly_bits >> i & 1 == 1 {
                acc = self.add(self.mul(acc, x), ResidueElement::ONE);
            } else if !acc.is_zero() {
                acc = self.mul(acc, x);
            }
        }
        acc
    }
}

/// Kernel basis of the F_2-linear map whose column j (as bits) is cols[j],
/// acting on F_2^n.
fn f2_kernel(cols: &[u64], n: usize) -> Vec<u64> {
    let mut basis: Vec<(u64, u64)> = Vec::new(); // (image, preimage), images with distinct top bits
    let mut kernel = Vec::new();
    for (j, &col) in cols.iter().enumerate().take(n) {
        let mut img = col;
        let mut pre = 1u64 << j;
        loop {
            let mut changed = false;
            for &(bi, bp) in &basis {
                if img != 0 && img >> (63 - bi.leading_zeros()) & 1 == 1 {
                    img ^= bi;
                    pre ^= bp;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if img == 0 {
            kernel.push(pre);
        } else {
            basis.push((img, pre));
        }
    }
    kernel
}

/// F_2-linear embedding F_{2^d} -> F_{2^n} determined by the image of the
/// power basis of the subfield.
#[derive(Debug, Clone)]
pub struct ResidueEmbedding {
    from_degree: usize,
    basis_images: Vec<ResidueElement>,
}

impl ResidueEmbedding {
    pub fn apply(&self, big: &ResidueField, a: ResidueElement) -> ResidueElement {
        let mut acc = ResidueElement::ZERO;
        for (i, &img) in self.basis_images.iter().enumerate() {
            if a.0 >> i & 1 == 1 {
                acc = big.add(acc, img);
            }
        }
        acc
    }

    pub fn from_degree(&self) -> usize {
        self.from_degree
    }
}

pub(crate) fn mod_inverse(a: u128, m: u128) -> Option<u128> {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(((t % m as i128 + m as i128) % m as i128) as u128)
}
