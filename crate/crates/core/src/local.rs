//! Exact arithmetic in finite extensions of the 2-adic field.
//!
//! A field is presented as an Eisenstein extension of its maximal unramified
//! subfield U: K = U(pi) where pi^e + c_{e-1} pi^{e-1} + ... + c_0 = 0 with
//! every c_i divisible by 2 and c_0 divisible exactly once. U itself is
//! Z_2[omega] for the 0/1 integer lift of the residue-field modulus. The
//! unramified case is folded in uniformly as e = 1 with relation pi - 2 = 0.
//!
//! An element is A * pi^(-s) where A = sum a_ij omega^j pi^i over i < e,
//! j < n, with a_ij held in Z/2^m (u128 containers, wrapping arithmetic).
//! Valuations read off exactly from such an array: within one pi-row the
//! omega-coordinates cannot cancel 2-adically because they are independent
//! over the residue field, and across rows the candidate valuations
//! e*v2(a_ij) + i are pairwise distinct mod e. Two precision quantities are
//! tracked per element: `abs`, the pi-adic absolute precision of the value,
//! and `bits`, how many low bits of each container are still meaningful.
//! Dividing by the uniformizer through the co-uniformizer identity
//! pi * (pi^(e-1) + c_{e-1} pi^(e-2) + ... + c_1) = -c_0 = -2u_0
//! costs one container bit (the final exact halving); everything else is
//! erosion-free.

use crate::error::{Error, Result};
use crate::residue::{ResidueElement, ResidueField};
use std::sync::Arc;

/// Extra container bits beyond the requested working precision, absorbing
/// bounded cancellation before a computation must be declared imprecise.
const GUARD_BITS: u32 = 16;

/// Containers are u128; wrapping arithmetic is exact mod 2^m for m <= 127.
const MAX_CONTAINER_BITS: u32 = 127;

#[derive(Debug)]
struct FieldInner {
    residue: ResidueField,
    e: usize,
    /// container bits per coefficient
    m: u32,
    /// requested pi-adic working precision
    prec: i64,
    /// c_0 .. c_{e-1}, each an element of O_U (length-n coefficient vector)
    eis: Vec<Vec<u128>>,
    /// inverse of the unit -c_0 / 2
    u0_inv: Vec<u128>,
}

/// A finite extension of Q_2 with exact structure constants.
#[derive(Clone, Debug)]
pub struct LocalField {
    inner: Arc<FieldInner>,
}

impl PartialEq for LocalField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.residue == other.inner.residue
                && self.inner.e == other.inner.e
                && self.inner.m == other.inner.m
                && self.inner.eis == other.inner.eis)
    }
}
impl Eq for LocalField {}

#[derive(Clone, Debug)]
enum Repr {
    /// Indistinguishable from zero below pi^abs; abs = i64::MAX marks an
    /// exact zero.
    Zero { abs: i64 },
    Raw { arr: Vec<u128>, s: i64, bits: u32, abs: i64 },
}

/// An element of a [`LocalField`], with tracked precision.
#[derive(Clone, Debug)]
pub struct LocalElement {
    field: LocalField,
    repr: Repr,
}

impl FieldInner {
    fn n(&self) -> usize {
        self.residue.degree()
    }

    fn mask(&self) -> u128 {
        (1u128 << self.m) - 1
    }

    // ---- arithmetic on O_U coefficient vectors (length n, mod 2^m) ----

    fn u_zero(&self) -> Vec<u128> {
        vec![0; self.n()]
    }

    fn u_one(&self) -> Vec<u128> {
        let mut v = self.u_zero();
        v[0] = 1;
        v
    }

    fn u_add(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.wrapping_add(y) & self.mask())
            .collect()
    }

    fn u_sub(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.wrapping_sub(y) & self.mask())
            .collect()
    }

    fn u_neg(&self, a: &[u128]) -> Vec<u128> {
        a.iter().map(|&x| x.wrapping_neg() & self.mask()).collect()
    }

    fn u_scale(&self, a: &[u128], c: u128) -> Vec<u128> {
        a.iter().map(|&x| x.wrapping_mul(c) & self.mask()).collect()
    }

    /// Product in Z[omega]/(modulus, 2^m). The modulus has 0/1 coefficients,
    /// so omega^n = -(sum of omega^j over set low bits j).
    fn u_mul(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        let n = self.n();
        let mut tmp = vec![0u128; 2 * n - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                tmp[i + j] = tmp[i + j].wrapping_add(x.wrapping_mul(y));
            }
        }
        let modulus = self.residue.modulus();
        for k in (n..2 * n - 1).rev() {
            let t = tmp[k];
            if t == 0 {
                continue;
            }
            tmp[k] = 0;
            for j in 0..n {
                if modulus >> j & 1 == 1 {
                    tmp[k - n + j] = tmp[k - n + j].wrapping_sub(t);
                }
            }
        }
        tmp.truncate(n);
        tmp.iter_mut().for_each(|x| *x &= self.mask());
        tmp
    }

    fn u_res(&self, a: &[u128]) -> ResidueElement {
        let mut bits = 0u64;
        for (j, &x) in a.iter().enumerate() {
            bits |= ((x & 1) as u64) << j;
        }
        ResidueElement(bits)
    }

    fn u_lift(&self, r: ResidueElement) -> Vec<u128> {
        (0..self.n()).map(|j| (r.0 >> j & 1) as u128).collect()
    }

    /// 2-adic valuation of an O_U element from its coordinates; None if the
    /// container is entirely zero.
    fn u_v2(&self, a: &[u128]) -> Option<u32> {
        a.iter()
            .filter(|&&x| x != 0)
            .map(|&x| x.trailing_zeros())
            .min()
    }

    /// Newton inversion of a unit of O_U to full container precision.
    fn u_inv(&self, a: &[u128]) -> Option<Vec<u128>> {
        let r = self.u_res(a);
        let rinv = self.residue.inv(r)?;
        let mut y = self.u_lift(rinv);
        let two = self.u_scale(&self.u_one(), 2);
        let iters = (self.m as f64).log2().ceil() as usize + 1;
        for _ in 0..iters {
            let t = self.u_sub(&two, &self.u_mul(a, &y));
            y = self.u_mul(&y, &t);
        }
        debug_assert_eq!(self.u_mul(a, &y), self.u_one());
        Some(y)
    }

    fn u_halve_exact(&self, a: &[u128]) -> Vec<u128> {
        debug_assert!(a.iter().all(|&x| x & 1 == 0), "inexact halving");
        a.iter().map(|&x| x >> 1).collect()
    }

    // ---- arithmetic on full K-arrays (e rows of O_U vectors) ----

    fn row<'a>(&self, arr: &'a [u128], i: usize) -> &'a [u128] {
        let n = self.n();
        &arr[i * n..(i + 1) * n]
    }

    fn k_zero(&self) -> Vec<u128> {
        vec![0; self.e * self.n()]
    }

    fn k_add(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.wrapping_add(y) & self.mask())
            .collect()
    }

    fn k_sub(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.wrapping_sub(y) & self.mask())
            .collect()
    }

    fn k_neg(&self, a: &[u128]) -> Vec<u128> {
        a.iter().map(|&x| x.wrapping_neg() & self.mask()).collect()
    }

    /// Reduce a pi-polynomial of arbitrary row count to e rows via
    /// pi^e = -(c_{e-1} pi^{e-1} + ... + c_0).
    fn k_reduce(&self, rows: &mut Vec<Vec<u128>>) {
        while rows.len() > self.e {
            let t = rows.pop().unwrap();
            if t.iter().all(|&x| x == 0) {
                continue;
            }
            let k = rows.len(); // popped row was pi^k with k >= e
            for i in 0..self.e {
                let prod = self.u_mul(&t, &self.eis[i]);
                let idx = k - self.e + i;
                rows[idx] = self.u_sub(&rows[idx], &prod);
            }
        }
        while rows.len() < self.e {
            rows.push(self.u_zero());
        }
    }

    fn rows_of(&self, arr: &[u128]) -> Vec<Vec<u128>> {
        (0..self.e).map(|i| self.row(arr, i).to_vec()).collect()
    }

    fn rows_to_arr(&self, rows: Vec<Vec<u128>>) -> Vec<u128> {
        let mut out = Vec::with_capacity(self.e * self.n());
        for r in rows {
            out.extend(r);
        }
        out
    }

    fn k_mul(&self, a: &[u128], b: &[u128]) -> Vec<u128> {
        let e = self.e;
        let mut conv: Vec<Vec<u128>> = vec![self.u_zero(); 2 * e - 1];
        for i in 0..e {
            let ra = self.row(a, i);
            if ra.iter().all(|&x| x == 0) {
                continue;
            }
            for j in 0..e {
                let rb = self.row(b, j);
                if rb.iter().all(|&x| x == 0) {
                    continue;
                }
                let p = self.u_mul(ra, rb);
                conv[i + j] = self.u_add(&conv[i + j], &p);
            }
        }
        self.k_reduce(&mut conv);
        self.rows_to_arr(conv)
    }

    /// Multiply by the uniformizer.
    fn k_mul_pi(&self, a: &[u128]) -> Vec<u128> {
        let mut rows = vec![self.u_zero()];
        rows.extend(self.rows_of(a));
        self.k_reduce(&mut rows);
        self.rows_to_arr(rows)
    }

    /// Exact division by the uniformizer; requires valuation >= 1.
    /// Costs one container bit.
    fn k_div_pi(&self, a: &[u128]) -> Vec<u128> {
        // pi * Q = -c_0 = 2 u_0 for Q = pi^(e-1) + sum_i c_{i+1} pi^i, so
        // x / pi = (x * Q * u0_inv) / 2 with the halving exact.
        let q = {
            let mut rows: Vec<Vec<u128>> = Vec::with_capacity(self.e);
            for i in 0..self.e - 1 {
                rows.push(self.eis[i + 1].clone());
            }
            rows.push(self.u_one());
            self.rows_to_arr(rows)
        };
        let t = self.k_mul(a, &q);
        let mut out = Vec::with_capacity(self.e * self.n());
        for i in 0..self.e {
            let w = self.u_mul(self.row(&t, i), &self.u0_inv);
            out.extend(self.u_halve_exact(&w));
        }
        out
    }

    /// Exact valuation of a coefficient array; None if all containers are 0.
    fn k_val(&self, arr: &[u128]) -> Option<i64> {
        let mut best: Option<i64> = None;
        for i in 0..self.e {
            if let Some(v2) = self.u_v2(self.row(arr, i)) {
                let cand = self.e as i64 * v2 as i64 + i as i64;
                best = Some(best.map_or(cand, |b: i64| b.min(cand)));
            }
        }
        best
    }
}

impl LocalField {
    /// An Eisenstein extension of the unramified field with residue degree n.
    /// `eis` lists the non-leading coefficients c_0 .. c_{e-1} of the monic
    /// relation pi^e + c_{e-1} pi^{e-1} + ... + c_0 = 0, each an integer
    /// combination of omega-powers. None means the unramified field itself.
    pub fn new(n: usize, eis: Option<Vec<Vec<i64>>>, prec: i64) -> Result<Self> {
        let residue = ResidueField::new(n)?;
        Self::with_residue_field(residue, eis, prec)
    }

    pub fn with_residue_field(
        residue: ResidueField,
        eis: Option<Vec<Vec<i64>>>,
        prec: i64,
    ) -> Result<Self> {
        if prec < 4 {
            return Err(Error::Descriptor("precision must be at least 4".into()));
        }
        let coeffs = eis.unwrap_or_else(|| vec![vec![-2]]);
        let e = coeffs.len();
        if e == 0 {
            return Err(Error::Descriptor(
                "an Eisenstein relation needs at least the constant coefficient".into(),
            ));
        }
        let m = (prec as u32).div_ceil(e as u32) + GUARD_BITS;
        if m > MAX_CONTAINER_BITS {
            return Err(Error::Descriptor(format!(
                "working precision {prec} exceeds the container limit for ramification {e}"
            )));
        }
        let n = residue.degree();
        let mask = (1u128 << m) - 1;
        let mut eis_vecs = Vec::with_capacity(e);
        for c in &coeffs {
            if c.len() > n {
                return Err(Error::Descriptor(format!(
                    "Eisenstein coefficient has {} omega-digits but the residue degree is {n}",
                    c.len()
                )));
            }
            let mut v = vec![0u128; n];
            for (j, &x) in c.iter().enumerate() {
                v[j] = (x as i128 as u128) & mask;
            }
            eis_vecs.push(v);
        }
        // Eisenstein conditions: 2 | c_i for all i, 4 does not divide c_0.
        let probe = FieldInner {
            residue,
            e,
            m,
            prec,
            eis: eis_vecs.clone(),
            u0_inv: vec![0; n],
        };
        for (i, c) in eis_vecs.iter().enumerate() {
            let v2 = probe.u_v2(c);
            match v2 {
                Some(0) | None if i == 0 => {
                    return Err(Error::NotEisenstein(format!(
                        "constant coefficient must have valuation exactly 1, got {v2:?}"
                    )))
                }
                Some(0) => {
                    return Err(Error::NotEisenstein(format!(
                        "coefficient of pi^{i} is a unit"
                    )))
                }
                _ => {}
            }
            if i == 0 && v2 != Some(1) {
                return Err(Error::NotEisenstein(
                    "constant coefficient must have valuation exactly 1".into(),
                ));
            }
        }
        let u0 = probe.u_halve_exact(&probe.u_neg(&eis_vecs[0]));
        let u0_inv = probe
            .u_inv(&u0)
            .ok_or_else(|| Error::NotEisenstein("constant coefficient is not 2 * unit".into()))?;
        Ok(LocalField {
            inner: Arc::new(FieldInner {
                residue,
                e,
                m,
                prec,
                eis: eis_vecs,
                u0_inv,
            }),
        })
    }

    /// The unramified extension of Q_2 with residue degree n.
    pub fn unramified(n: usize, prec: i64) -> Result<Self> {
        Self::new(n, None, prec)
    }

    pub fn residue_field(&self) -> ResidueField {
        self.inner.residue
    }

    pub fn residue_degree(&self) -> usize {
        self.inner.residue.degree()
    }

    pub fn ramification_index(&self) -> usize {
        self.inner.e
    }

    pub fn is_unramified(&self) -> bool {
        self.inner.e == 1
    }

    pub fn working_precision(&self) -> i64 {
        self.inner.prec
    }

    /// Degree over Q_2.
    pub fn degree(&self) -> usize {
        self.inner.e * self.residue_degree()
    }

    // ---- element constructors ----

    fn make(&self, arr: Vec<u128>, s: i64, bits: u32, abs: i64) -> LocalElement {
        let f = &self.inner;
        let container = f.e as i64 * bits as i64 - s;
        let abs = abs.min(container);
        match f.k_val(&arr) {
            None => LocalElement {
                field: self.clone(),
                repr: Repr::Zero { abs },
            },
            Some(v) if v - s >= abs => LocalElement {
                field: self.clone(),
                repr: Repr::Zero { abs },
            },
            Some(v) => {
                // shed denominator powers when the container has room to pay
                let mut arr = arr;
                let mut s = s;
                let mut bits = bits;
                let mut v = v;
                while s > 0 && v >= 1 && f.e as i64 * (bits - 1) as i64 - (s - 1) >= abs {
                    arr = f.k_div_pi(&arr);
                    s -= 1;
                    bits -= 1;
                    v -= 1;
                }
                LocalElement {
                    field: self.clone(),
                    repr: Repr::Raw { arr, s, bits, abs },
                }
            }
        }
    }

    fn fresh(&self, arr: Vec<u128>) -> LocalElement {
        let m = self.inner.m;
        let e = self.inner.e as i64;
        self.make(arr, 0, m, e * m as i64)
    }

    pub fn zero(&self) -> LocalElement {
        LocalElement {
            field: self.clone(),
            repr: Repr::Zero { abs: i64::MAX },
        }
    }

    pub fn one(&self) -> LocalElement {
        self.integer(1)
    }

    pub fn integer(&self, c: i128) -> LocalElement {
        if c == 0 {
            return self.zero();
        }
        let f = &self.inner;
        let mut arr = f.k_zero();
        arr[0] = (c as u128) & f.mask();
        self.fresh(arr)
    }

    /// The canonical uniformizer pi (equals 2 when the field is unramified
    /// with the default relation pi - 2 = 0).
    pub fn uniformizer(&self) -> LocalElement {
        let f = &self.inner;
        if f.e == 1 {
            let arr = f.k_neg(&f.eis[0].clone());
            self.fresh(arr)
        } else {
            let mut arr = f.k_zero();
            arr[f.n()] = 1;
            self.fresh(arr)
        }
    }

    /// The Teichmuller-style lift of a residue element (0/1 coordinates).
    pub fn lift_residue(&self, r: ResidueElement) -> LocalElement {
        if r.is_zero() {
            return self.zero();
        }
        let f = &self.inner;
        debug_assert!(r.0 < (1u64 << f.n()) || f.n() >= 64);
        let mut arr = f.k_zero();
        for (j, slot) in arr.iter_mut().enumerate().take(f.n()) {
            *slot = (r.0 >> j & 1) as u128;
        }
        self.fresh(arr)
    }

    /// The lift of the residue-field generator (the class of omega).
    pub fn omega(&self) -> LocalElement {
        let g = if self.residue_degree() >= 2 {
            ResidueElement(2)
        } else {
            ResidueElement::ONE
        };
        self.lift_residue(g)
    }

    /// sum_k lift(digits[k]) * pi^(val + k), an exact finite digit expansion.
    pub fn from_digits(&self, val: i64, digits: &[u64]) -> Result<LocalElement> {
        let f = &self.inner;
        let n = f.n();
        for &d in digits {
            if n < 64 && d >= (1u64 << n) {
                return Err(Error::Descriptor(format!(
                    "digit {d:#x} out of range for residue degree {n}"
                )));
            }
        }
        let mut arr = f.k_zero();
        for &d in digits.iter().rev() {
            arr = f.k_mul_pi(&arr);
            let lift: Vec<u128> = (0..n).map(|j| (d >> j & 1) as u128).collect();
            for j in 0..n {
                arr[j] = arr[j].wrapping_add(lift[j]) & f.mask();
            }
        }
        let x = self.fresh(arr);
        Ok(x.mul_pi_power(val))
    }
}

impl LocalElement {
    pub fn field(&self) -> &LocalField {
        &self.field
    }

    /// Absolute pi-adic precision: the value is known modulo pi^precision().
    pub fn precision(&self) -> i64 {
        match &self.repr {
            Repr::Zero { abs } => *abs,
            Repr::Raw { abs, .. } => *abs,
        }
    }

    /// True when every digit below the precision cap vanishes.
    pub fn is_zero_to_precision(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    pub fn is_exactly_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero { abs: i64::MAX })
    }

    /// Exact valuation. Errors on an exact zero and on an element that is
    /// indistinguishable from zero at its precision.
    pub fn valuation(&self) -> Result<i64> {
        match &self.repr {
            Repr::Zero { abs: i64::MAX } => Err(Error::ValuationOfZero),
            Repr::Zero { abs } => Err(Error::insufficient(
                "valuation of an element indistinguishable from zero",
                *abs,
            )),
            Repr::Raw { arr, s, .. } => {
                let v = self.field.inner.k_val(arr).expect("nonzero raw element");
                Ok(v - s)
            }
        }
    }

    /// Valuation when visible, else the precision bound (a sound lower
    /// bound for the true valuation in both cases).
    fn val_floor(&self) -> i64 {
        match &self.repr {
            Repr::Zero { abs } => *abs,
            Repr::Raw { arr, s, .. } => {
                self.field.inner.k_val(arr).expect("nonzero raw element") - s
            }
        }
    }

    pub fn add(&self, other: &LocalElement) -> LocalElement {
        debug_assert_eq!(self.field, other.field);
        let f = &self.field.inner;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs }, _) => other.clamp_precision(*abs),
            (_, Repr::Zero { abs }) => self.clamp_precision(*abs),
            (
                Repr::Raw { arr: a1, s: s1, bits: b1, abs: a1p },
                Repr::Raw { arr: a2, s: s2, bits: b2, abs: a2p },
            ) => {
                let s = (*s1).max(*s2);
                let mut x1 = a1.clone();
                for _ in 0..s - s1 {
                    x1 = f.k_mul_pi(&x1);
                }
                let mut x2 = a2.clone();
                for _ in 0..s - s2 {
                    x2 = f.k_mul_pi(&x2);
                }
                let arr = f.k_add(&x1, &x2);
                self.field
                    .make(arr, s, (*b1).min(*b2), (*a1p).min(*a2p))
            }
        }
    }

    pub fn neg(&self) -> LocalElement {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::Raw { arr, s, bits, abs } => {
                let f = &self.field.inner;
                self.field.make(f.k_neg(arr), *s, *bits, *abs)
            }
        }
    }

    pub fn sub(&self, other: &LocalElement) -> LocalElement {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &LocalElement) -> LocalElement {
        debug_assert_eq!(self.field, other.field);
        let f = &self.field.inner;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs }, _) => {
                // a literal zero stays literal no matter the cofactor
                let abs_out = if *abs == i64::MAX {
                    i64::MAX
                } else {
                    abs.saturating_add(other.val_floor())
                };
                LocalElement {
                    field: self.field.clone(),
                    repr: Repr::Zero { abs: abs_out },
                }
            }
            (_, Repr::Zero { abs }) => {
                let abs_out = if *abs == i64::MAX {
                    i64::MAX
                } else {
                    abs.saturating_add(self.val_floor())
                };
                LocalElement {
                    field: self.field.clone(),
                    repr: Repr::Zero { abs: abs_out },
                }
            }
            (
                Repr::Raw { arr: a1, s: s1, bits: b1, abs: p1 },
                Repr::Raw { arr: a2, s: s2, bits: b2, abs: p2 },
            ) => {
                let v1 = self.val_floor();
                let v2 = other.val_floor();
                let abs = (p1.saturating_add(v2)).min(p2.saturating_add(v1));
                let arr = f.k_mul(a1, a2);
                self.field.make(arr, s1 + s2, (*b1).min(*b2), abs)
            }
        }
    }

    /// Multiply by pi^k for any integer k; negative k only grows the stored
    /// denominator, so it never erodes container precision.
    pub fn mul_pi_power(&self, k: i64) -> LocalElement {
        let f = &self.field.inner;
        match &self.repr {
            Repr::Zero { abs } => LocalElement {
                field: self.field.clone(),
                repr: Repr::Zero {
                    abs: if *abs == i64::MAX { i64::MAX } else { abs.saturating_add(k) },
                },
            },
            Repr::Raw { arr, s, bits, abs } => {
                if k >= 0 {
                    let mut a = arr.clone();
                    for _ in 0..k {
                        a = f.k_mul_pi(&a);
                    }
                    self.field.make(a, *s, *bits, abs.saturating_add(k))
                } else {
                    self.field
                        .make(arr.clone(), s - k, *bits, abs.saturating_add(k))
                }
            }
        }
    }

    /// Inverse of a nonzero element.
    pub fn inv(&self) -> Result<LocalElement> {
        let f = &self.field.inner;
        let (arr, s, bits, abs) = match &self.repr {
            Repr::Zero { abs: i64::MAX } => return Err(Error::DivisionByZero),
            Repr::Zero { abs } => {
                return Err(Error::insufficient(
                    "inverting an element indistinguishable from zero",
                    *abs,
                ))
            }
            Repr::Raw { arr, s, bits, abs } => (arr, *s, *bits, *abs),
        };
        let d = f.k_val(arr).expect("nonzero raw element");
        let v = d - s;
        // strip pi^d to expose the unit part, then Newton-invert it
        let mut unit = arr.clone();
        for _ in 0..d {
            unit = f.k_div_pi(&unit);
        }
        let bits_u = bits - d as u32;
        let r = f.u_res(f.row(&unit, 0));
        let rinv = f.residue.inv(r).expect("unit has invertible residue");
        let mut y = self.field.lift_residue(rinv).raw_arr();
        let two = {
            let mut t = f.k_zero();
            t[0] = 2;
            t
        };
        let target = (f.e as u32) * bits_u;
        let mut good: u32 = 1; // v(1 - unit*y) >= 1 from the residue inverse
        while good < target {
            let t = f.k_sub(&two, &f.k_mul(&unit, &y));
            y = f.k_mul(&y, &t);
            good = good.saturating_mul(2);
        }
        // 1/x = y * pi^(-v); relative precision is preserved: abs - 2v
        let abs_out = abs - 2 * v;
        let out = self.field.make(y, 0, bits_u, i64::MAX);
        Ok(out.mul_pi_power(-v).clamp_precision(abs_out))
    }

    pub fn div(&self, other: &LocalElement) -> Result<LocalElement> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, k: i64) -> Result<LocalElement> {
        if k == 0 {
            return Ok(self.field.one());
        }
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut acc = self.field.one();
        let mut b = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Ok(acc)
    }

    fn raw_arr(&self) -> Vec<u128> {
        match &self.repr {
            Repr::Zero { .. } => self.field.inner.k_zero(),
            Repr::Raw { arr, .. } => arr.clone(),
        }
    }

    /// Cap the absolute precision (used when mixing with less precise data).
    pub fn clamp_precision(&self, abs: i64) -> LocalElement {
        match &self.repr {
            Repr::Zero { abs: a } => LocalElement {
                field: self.field.clone(),
                repr: Repr::Zero { abs: (*a).min(abs) },
            },
            Repr::Raw { arr, s, bits, abs: a } => {
                self.field.make(arr.clone(), *s, *bits, (*a).min(abs))
            }
        }
    }

    /// Image in the residue field; requires valuation >= 0 (trusted at the
    /// element's precision).
    pub fn residue(&self) -> Result<ResidueElement> {
        let f = &self.field.inner;
        match &self.repr {
            Repr::Zero { abs } => {
                if *abs >= 1 {
                    Ok(ResidueElement::ZERO)
                } else {
                    Err(Error::insufficient("residue of an imprecise zero", *abs))
                }
            }
            Repr::Raw { arr, s, abs, .. } => {
                if *abs < 1 {
                    return Err(Error::insufficient("residue needs precision >= 1", *abs));
                }
                let v = f.k_val(arr).expect("nonzero raw element") - s;
                if v < 0 {
                    return Err(Error::Internal(
                        "residue of a non-integral element".into(),
                    ));
                }
                if v > 0 {
                    return Ok(ResidueElement::ZERO);
                }
                let mut a = arr.clone();
                for _ in 0..*s {
                    a = f.k_div_pi(&a);
                }
                Ok(f.u_res(f.row(&a, 0)))
            }
        }
    }

    /// The first `count` pi-adic digits starting at pi^start (residue bits
    /// per digit). Requires valuation >= start.
    pub fn digits(&self, start: i64, count: usize) -> Result<Vec<u64>> {
        let mut x = self.mul_pi_power(-start);
        if x.val_floor() < 0 {
            return Err(Error::Internal(format!(
                "digit expansion from pi^{start} of an element of lower valuation"
            )));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            if x.precision() < 1 {
                return Err(Error::insufficient(
                    "digit expansion exceeded available precision",
                    x.precision(),
                ));
            }
            let d = x.residue()?;
            out.push(d.0);
            let lift = self.field.lift_residue(d);
            x = x.sub(&lift).mul_pi_power(-1);
        }
        Ok(out)
    }

    /// True when 3 | v(x) and the unit part reduces to a cube of the residue
    /// field: exactly the cubes of this field (Hensel, residue char 2).
    pub fn is_cube(&self) -> Result<bool> {
        let v = self.valuation()?;
        if v.rem_euclid(3) != 0 {
            return Ok(false);
        }
        let unit = self.mul_pi_power(-v);
        Ok(self.field.residue_field().is_cube(unit.residue()?))
    }

    /// True when the element becomes a cube in the maximal unramified
    /// extension: there every unit is a cube, so only 3 | v(x) matters.
    pub fn is_cube_unramified(&self) -> Result<bool> {
        Ok(self.valuation()?.rem_euclid(3) == 0)
    }

    /// Hensel cube root. Requires `is_cube`.
    pub fn cube_root(&self) -> Result<LocalElement> {
        let v = self.valuation()?;
        if v.rem_euclid(3) != 0 {
            return Err(Error::NotACube(format!("valuation {v} is not divisible by 3")));
        }
        let t = v.div_euclid(3);
        let unit = self.mul_pi_power(-3 * t);
        let r = unit.residue()?;
        let k = self.field.residue_field();
        let r3 = k
            .cube_root(r)
            .ok_or_else(|| Error::NotACube("residue is not a cube".into()))?;
        let mut y = self.field.lift_residue(r3);
        let three = self.field.integer(3);
        let target = unit.precision();
        // v(y^3 - unit) >= 1 and doubles each step
        let mut good: i64 = 1;
        while good < target {
            let y2 = y.mul(&y);
            let fval = y2.mul(&y).sub(&unit);
            let dfinv = three.mul(&y2).inv()?;
            y = y.sub(&fval.mul(&dfinv));
            good = good.saturating_mul(2);
        }
        let y = y.mul_pi_power(t);
        debug_assert!(y.mul(&y).mul(&y).sub(self).is_zero_to_precision());
        Ok(y)
    }

    /// Whether self and other agree to their common precision.
    pub fn eq_to_precision(&self, other: &LocalElement) -> bool {
        self.sub(other).is_zero_to_precision()
    }
}

/// A ring embedding into a field with enlarged residue degree (same
/// ramification, same Eisenstein relation transported coefficient-wise).
pub struct UnramifiedMap {
    pub source: LocalField,
    pub target: LocalField,
    pub residue_map: crate::residue::ResidueEmbedding,
    /// images of omega^j in O_{U'}
    omega_pows: Vec<Vec<u128>>,
}

impl UnramifiedMap {
    pub fn apply(&self, x: &LocalElement) -> LocalElement {
        assert_eq!(*x.field(), self.source);
        let src = &self.source.inner;
        let tgt = &self.target.inner;
        match &x.repr {
            Repr::Zero { abs } => LocalElement {
                field: self.target.clone(),
                repr: Repr::Zero { abs: *abs },
            },
            Repr::Raw { arr, s, bits, abs } => {
                let mut rows = Vec::with_capacity(tgt.e);
                for i in 0..src.e {
                    let row = src.row(arr, i);
                    let mut acc = tgt.u_zero();
                    for (j, &c) in row.iter().enumerate() {
                        if c != 0 {
                            acc = tgt.u_add(&acc, &tgt.u_scale(&self.omega_pows[j], c));
                        }
                    }
                    rows.push(acc);
                }
                self.target.make(tgt.rows_to_arr(rows), *s, *bits, *abs)
            }
        }
    }

    pub fn apply_residue(&self, r: ResidueElement) -> ResidueElement {
        self.residue_map.apply(&self.target.residue_field(), r)
    }
}

impl LocalField {
    /// Enlarge the residue field by the given degree factor, keeping the
    /// ramification structure. Returns the embedding.
    pub fn enlarge_unramified(&self, factor: usize) -> Result<UnramifiedMap> {
        let f = &self.inner;
        let n = f.n();
        let n2 = n * factor;
        let big = ResidueField::new(n2)?;
        let residue_map = big.embedding_from(&f.residue)?;
        // Hensel-lift the embedded residue root of the source modulus to an
        // exact root what in O_{U'}; omega |-> what defines the embedding.
        let root_res = residue_map.apply(
            &big,
            if n >= 2 { ResidueElement(2) } else { ResidueElement::ONE },
        );
        // target field shares e and prec; build a probe for U'-arithmetic
        let probe = FieldInner {
            residue: big,
            e: f.e,
            m: f.m,
            prec: f.prec,
            eis: vec![vec![0; n2]; f.e],
            u0_inv: vec![0; n2],
        };
        let modulus = f.residue.modulus();
        let eval = |y: &[u128]| -> (Vec<u128>, Vec<u128>) {
            // m(y) and m'(y) for the 0/1 lift of the source modulus
            let mut val = probe.u_zero();
            let mut der = probe.u_zero();
            let mut pow = probe.u_one(); // y^j
            let mut jpow = probe.u_zero(); // j * y^(j-1)
            for j in 0..=n {
                if modulus >> j & 1 == 1 {
                    val = probe.u_add(&val, &pow);
                    der = probe.u_add(&der, &jpow);
                }
                jpow = probe.u_scale(&pow, (j + 1) as u128);
                pow = probe.u_mul(&pow, y);
            }
            (val, der)
        };
        let mut what = probe.u_lift(root_res);
        for _ in 0..(f.m as f64).log2().ceil() as usize + 2 {
            let (val, der) = eval(&what);
            let dinv = probe
                .u_inv(&der)
                .ok_or_else(|| Error::Internal("inseparable residue modulus".into()))?;
            what = probe.u_sub(&what, &probe.u_mul(&val, &dinv));
        }
        let (val, _) = eval(&what);
        if val.iter().any(|&x| x != 0) {
            return Err(Error::Internal(
                "Hensel lift of the residue generator failed to converge".into(),
            ));
        }
        let mut omega_pows = Vec::with_capacity(n);
        let mut pow = probe.u_one();
        for _ in 0..n {
            omega_pows.push(pow.clone());
            pow = probe.u_mul(&pow, &what);
        }
        // transport the Eisenstein coefficients
        let map_u = |c: &[u128]| -> Vec<u128> {
            let mut acc = probe.u_zero();
            for (j, &x) in c.iter().enumerate() {
                if x != 0 {
                    acc = probe.u_add(&acc, &probe.u_scale(&omega_pows[j], x));
                }
            }
            acc
        };
        let eis2: Vec<Vec<u128>> = f.eis.iter().map(|c| map_u(c)).collect();
        let u0 = probe.u_halve_exact(&probe.u_neg(&eis2[0]));
        let u0_inv = probe
            .u_inv(&u0)
            .ok_or_else(|| Error::Internal("transported relation lost Eisenstein shape".into()))?;
        let target = LocalField {
            inner: Arc::new(FieldInner {
                residue: big,
                e: f.e,
                m: f.m,
                prec: f.prec,
                eis: eis2,
                u0_inv,
            }),
        };
        Ok(UnramifiedMap {
            source: self.clone(),
            target,
            residue_map,
            omega_pows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: i64 = 64;

    fn q2() -> LocalField {
        LocalField::unramified(1, PREC).unwrap()
    }

    /// Q_2(sqrt(2)) via pi^2 - 2.
    fn q2_sqrt2() -> LocalField {
        LocalField::new(1, Some(vec![vec![-2], vec![0]]), PREC).unwrap()
    }

    #[test]
    fn integer_arithmetic_in_q2() {
        let k = q2();
        let a = k.integer(7);
        let b = k.integer(9);
        assert!(a.mul(&b).eq_to_precision(&k.integer(63)));
        assert_eq!(k.integer(48).valuation().unwrap(), 4);
        assert_eq!(k.integer(1).valuation().unwrap(), 0);
        assert!(k.integer(0).is_exactly_zero());
        assert!(matches!(
            k.integer(0).valuation(),
            Err(Error::ValuationOfZero)
        ));
    }

    #[test]
    fn digits_of_small_integers_match_binary() {
        let k = q2();
        let x = k.integer(11);
        assert_eq!(x.digits(0, 5).unwrap(), vec![1, 1, 0, 1, 0]);
        let y = k.integer(-1);
        assert_eq!(y.digits(0, 4).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn inversion_round_trips() {
        let k = q2();
        for c in [3i128, 5, 7, -9, 1023] {
            let x = k.integer(c);
            let y = x.inv().unwrap();
            assert!(x.mul(&y).eq_to_precision(&k.one()), "c = {c}");
        }
        // non-unit: 1/6 has valuation -1
        let s = k.integer(6).inv().unwrap();
        assert_eq!(s.valuation().unwrap(), -1);
        assert!(s.mul(&k.integer(6)).eq_to_precision(&k.one()));
    }

    #[test]
    fn ramified_quadratic_has_square_root_of_two() {
        let k = q2_sqrt2();
        let pi = k.uniformizer();
        assert_eq!(pi.valuation().unwrap(), 1);
        assert_eq!(k.integer(2).valuation().unwrap(), 2);
        assert!(pi.mul(&pi).eq_to_precision(&k.integer(2)));
        // (1 + pi)(1 - pi) = 1 - 2 = -1
        let a = k.one().add(&pi);
        let b = k.one().sub(&pi);
        assert!(a.mul(&b).eq_to_precision(&k.integer(-1)));
        let ainv = a.inv().unwrap();
        assert!(a.mul(&ainv).eq_to_precision(&k.one()));
    }

    #[test]
    fn mixed_field_with_residue_degree_two() {
        // residue F_4, pi^2 + 2*omega*pi + 2 = 0
        let k = LocalField::new(2, Some(vec![vec![2], vec![0, 2]]), PREC).unwrap();
        let pi = k.uniformizer();
        let om = k.omega();
        assert_eq!(pi.valuation().unwrap(), 1);
        assert_eq!(om.valuation().unwrap(), 0);
        assert_eq!(om.residue().unwrap(), ResidueElement(2));
        // pi^2 = -2*omega*pi - 2
        let lhs = pi.mul(&pi);
        let rhs = k
            .integer(-2)
            .mul(&om)
            .mul(&pi)
            .add(&k.integer(-2));
        assert!(lhs.eq_to_precision(&rhs));
        // omega is an exact root of the 0/1 lift of the residue modulus
        let w2 = om.mul(&om).add(&om).add(&k.one());
        assert!(w2.is_zero_to_precision());
    }

    #[test]
    fn eisenstein_validation_rejects_bad_relations() {
        // unit constant coefficient
        assert!(matches!(
            LocalField::new(1, Some(vec![vec![1], vec![0]]), PREC),
            Err(Error::NotEisenstein(_))
        ));
        // constant coefficient divisible by 4
        assert!(matches!(
            LocalField::new(1, Some(vec![vec![4], vec![2]]), PREC),
            Err(Error::NotEisenstein(_))
        ));
        // unit middle coefficient
        assert!(matches!(
            LocalField::new(1, Some(vec![vec![2], vec![3]]), PREC),
            Err(Error::NotEisenstein(_))
        ));
    }

    #[test]
    fn digit_round_trip_through_from_digits() {
        let k = q2_sqrt2();
        let digits = vec![1u64, 0, 1, 1, 0, 1, 1, 1];
        let x = k.from_digits(-2, &digits).unwrap();
        assert_eq!(x.valuation().unwrap(), -2);
        assert_eq!(x.digits(-2, digits.len()).unwrap(), digits);
    }

    #[test]
    fn subtraction_cancellation_yields_zero_to_precision() {
        let k = q2();
        let x = k.integer(12345);
        let d = x.sub(&x);
        assert!(d.is_zero_to_precision());
        assert!(d.valuation().is_err());
        // adding the loss back keeps arithmetic sound
        let y = x.add(&d);
        assert!(y.eq_to_precision(&x));
    }

    #[test]
    fn valuation_is_multiplicative_and_ultrametric() {
        let k = q2_sqrt2();
        let pi = k.uniformizer();
        let samples = [
            k.integer(3),
            k.integer(10),
            pi.clone(),
            pi.mul(&k.integer(7)),
            k.integer(5).add(&pi),
            k.integer(2).inv().unwrap(),
        ];
        for a in &samples {
            for b in &samples {
                let va = a.valuation().unwrap();
                let vb = b.valuation().unwrap();
                assert_eq!(a.mul(b).valuation().unwrap(), va + vb);
                let s = a.add(b);
                if let Ok(vs) = s.valuation() {
                    assert!(vs >= va.min(vb));
                }
            }
        }
    }

    #[test]
    fn cube_detection_and_roots_in_q2() {
        let k = q2();
        // 2 is not a cube (valuation 1), 8 is (2^3), -8 is ((-2)^3)
        assert!(!k.integer(2).is_cube().unwrap());
        assert!(k.integer(8).is_cube().unwrap());
        assert!(k.integer(-8).is_cube().unwrap());
        let r = k.integer(-8).cube_root().unwrap();
        assert!(r.mul(&r).mul(&r).eq_to_precision(&k.integer(-8)));
        assert!(r.eq_to_precision(&k.integer(-2)));
        let r27 = k.integer(27).cube_root().unwrap();
        assert!(r27.eq_to_precision(&k.integer(3)));
        // units of Q_2 are all cubes (cubing is bijective on 1 + 2Z_2)
        for c in [3i128, 5, 7, 9, 11, 13] {
            assert!(k.integer(c).is_cube().unwrap(), "c = {c}");
            let r = k.integer(c).cube_root().unwrap();
            assert!(r.mul(&r).mul(&r).eq_to_precision(&k.integer(c)));
        }
        // in the unramified closure only the valuation matters
        assert!(!k.integer(2).is_cube_unramified().unwrap());
        assert!(k.integer(24).is_cube_unramified().unwrap());
    }

    #[test]
    fn cube_root_with_nontrivial_residue_field() {
        // residue F_4: units whose residue is a non-cube exist (omega is a
        // generator of F_4^*, which has order 3, so omega is not a cube)
        let k = LocalField::unramified(2, PREC).unwrap();
        let om = k.omega();
        assert!(!om.is_cube().unwrap());
        assert!(om.is_cube_unramified().unwrap());
        let x = om.mul(&om).mul(&om); // omega^3 is a cube
        assert!(x.is_cube().unwrap());
        let r = x.cube_root().unwrap();
        assert!(r.mul(&r).mul(&r).eq_to_precision(&x));
    }

    #[test]
    fn unramified_enlargement_is_a_ring_embedding() {
        let k = q2_sqrt2();
        let map = k.enlarge_unramified(3).unwrap();
        assert_eq!(map.target.residue_degree(), 3);
        assert_eq!(map.target.ramification_index(), 2);
        let pi = k.uniformizer();
        let samples = [
            k.integer(7),
            pi.clone(),
            k.integer(3).add(&pi),
            k.integer(5).inv().unwrap(),
        ];
        for a in &samples {
            for b in &samples {
                let lhs = map.apply(&a.mul(b));
                let rhs = map.apply(a).mul(&map.apply(b));
                assert!(lhs.eq_to_precision(&rhs));
                let lhs = map.apply(&a.add(b));
                let rhs = map.apply(a).add(&map.apply(b));
                assert!(lhs.eq_to_precision(&rhs));
            }
            assert_eq!(
                map.apply(a).valuation().unwrap(),
                a.valuation().unwrap()
            );
        }
        // residues transport through the residue embedding
        let u = k.integer(5).add(&pi);
        assert_eq!(
            map.apply(&u).residue().unwrap(),
            map.apply_residue(u.residue().unwrap())
        );
    }

    #[test]
    fn enlargement_turns_nonsplit_units_into_cubes() {
        // 2^1 - 1 = 1: every unit of Q_2 is a cube; but over residue F_4 the
        // lift of omega is not. Enlarging F_4 -> F_16 keeps it a non-cube
        // (16 - 1 = 15, cubes have index 3), while F_4 -> F_64 makes every
        // F_4-residue a cube since x |-> x^3 maps F_64 onto the 21-element
        // subgroup containing F_4^*.
        let k = LocalField::unramified(2, PREC).unwrap();
        let om = k.omega();
        let to16 = k.enlarge_unramified(2).unwrap();
        assert!(!to16.apply(&om).is_cube().unwrap());
        let to64 = k.enlarge_unramified(3).unwrap();
        assert!(to64.apply(&om).is_cube().unwrap());
    }

    #[test]
    fn precision_erosion_is_reported_not_papered_over() {
        let k = LocalField::unramified(1, 8).unwrap();
        // (1 + 2^k) - 1 for k near the precision cap leaves little room
        let x = k.integer(1 + (1 << 20));
        let d = x.sub(&k.one());
        // 2^20 is beyond the 8-digit working precision plus guard? the guard
        // is 16 bits, so 20 < 8 + 16 = 24 digits are still representable
        assert_eq!(d.valuation().unwrap(), 20);
        let tiny = k.integer(1 + (1 << 30)).sub(&k.one());
        assert!(tiny.is_zero_to_precision());
        assert!(matches!(
            tiny.valuation(),
            Err(Error::InsufficientPrecision { .. })
        ));
    }

    #[test]
    fn division_by_pi_round_trips() {
        for k in [q2(), q2_sqrt2()] {
            let pi = k.uniformizer();
            let x = k.integer(13).add(&pi.mul(&k.integer(5)));
            let y = x.mul(&pi).mul_pi_power(-1);
            assert!(y.eq_to_precision(&x));
            let z = x.mul_pi_power(-3).mul(&pi.pow(3).unwrap());
            assert!(z.eq_to_precision(&x));
        }
    }
}
