//! Quotient algebras K[t]/(f) for monic integral f over a local field,
//! with the norm, valuation, and residue transport that are valid once f
//! is known to cut out a totally ramified field extension, plus one
//! optional ramified cubic layer on top.
//!
//! Nothing here decides irreducibility; that is `factor_profile`'s job.
//! The payoff in the other direction is `eisenstein_certificate`: if the
//! characteristic polynomial of some element is Eisenstein, the algebra
//! is a field, totally ramified of full degree over the base, and that
//! conclusion does not lean on how the element was found.

use crate::error::{Error, Result};
use crate::local::{LocalElement, LocalField};
use crate::matrix::LocalMatrix;
use crate::poly::LocalPolynomial;
use crate::profile::{factor_profile, BranchOracle, ChainWitness, FactorAnalysis};
use crate::residue::{mod_inverse, ResidueElement};
use num_rational::Ratio;

/// Newton steps allowed for cube root extraction. The error valuation
/// doubles each step, so this dwarfs any working precision in use.
const CUBE_ROOT_BUDGET: usize = 64;

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Residue class of a polynomial modulo the algebra's modulus, kept
/// reduced below the modulus degree.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    poly: LocalPolynomial,
}

impl AlgebraElement {
    pub fn poly(&self) -> &LocalPolynomial {
        &self.poly
    }
}

/// K[t]/(f) for a monic f with integral coefficients.
#[derive(Clone, Debug)]
pub struct QuotientAlgebra {
    base: LocalField,
    modulus: LocalPolynomial,
    degree: usize,
    oracle: Option<BranchOracle>,
}

impl QuotientAlgebra {
    pub fn new(modulus: LocalPolynomial) -> Result<Self> {
        let degree = modulus
            .degree()
            .ok_or_else(|| Error::Internal("quotient by the zero polynomial".into()))?;
        if degree < 1 {
            return Err(Error::Internal("quotient modulus must be nonconstant".into()));
        }
        if !modulus.is_monic_to_precision() {
            return Err(Error::Internal("quotient modulus must be monic".into()));
        }
        // integral generator keeps val_floor sound
        if modulus.coeffs().iter().any(|c| coeff_floor(c) < 0) {
            return Err(Error::Internal(
                "quotient modulus must have integral coefficients".into(),
            ));
        }
        let base = modulus.field().clone();
        Ok(QuotientAlgebra { base, modulus, degree, oracle: None })
    }

    /// Same algebra, but valuations and unit residues are answered by the
    /// branch oracle of the modulus instead of by norm determinants. The
    /// oracle reads the chain data coefficientwise, so it keeps working
    /// where deep determinants would exhaust the container.
    pub fn with_oracle(modulus: LocalPolynomial, oracle: BranchOracle) -> Result<Self> {
        let mut alg = Self::new(modulus)?;
        alg.oracle = Some(oracle);
        Ok(alg)
    }

    pub fn base(&self) -> &LocalField {
        &self.base
    }

    pub fn modulus(&self) -> &LocalPolynomial {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement { poly: LocalPolynomial::zero(&self.base) }
    }

    pub fn one(&self) -> AlgebraElement {
        self.integer(1)
    }

    pub fn integer(&self, c: i128) -> AlgebraElement {
        self.embed(&self.base.integer(c))
    }

    pub fn embed(&self, c: &LocalElement) -> AlgebraElement {
        AlgebraElement {
            poly: LocalPolynomial::new(self.base.clone(), vec![c.clone()]),
        }
    }

    /// The class of t.
    pub fn generator(&self) -> AlgebraElement {
        AlgebraElement {
            poly: LocalPolynomial::from_integers(&self.base, &[0, 1]),
        }
    }

    pub fn from_poly(&self, p: &LocalPolynomial) -> Result<AlgebraElement> {
        debug_assert_eq!(p.field(), &self.base);
        let (_, r) = p.div_rem(&self.modulus)?;
        Ok(AlgebraElement { poly: r })
    }

    pub fn add(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { poly: a.poly.add(&b.poly) }
    }

    pub fn sub(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { poly: a.poly.sub(&b.poly) }
    }

    pub fn neg(&self, a: &AlgebraElement) -> AlgebraElement {
        AlgebraElement { poly: LocalPolynomial::zero(&self.base).sub(&a.poly) }
    }

    pub fn mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        self.from_poly(&a.poly.mul(&b.poly))
    }

    /// Inverse through the characteristic polynomial: chi(b) = 0 gives
    /// b^{-1} = -(b^{d-1} + c_{d-1} b^{d-2} + ... + c_1) / c_0. Powers and
    /// one scalar division preserve relative precision, where an
    /// elimination solve on the multiplication matrix would drain it.
    pub fn inv(&self, b: &AlgebraElement) -> Result<AlgebraElement> {
        if self.oracle.is_some() {
            if let Ok(v) = self.valuation(b) {
                // peel the uniformizer power off first: the norm of a deep
                // element sinks below working precision long before its
                // unit part does
                let (fwd, k) = if v >= 0 {
                    (self.generator_inverse()?, v)
                } else {
                    (self.generator(), -v)
                };
                let shift = self.pow(&fwd, k)?;
                let u = self.mul(b, &shift)?;
                let ui = self.unit_inv(&u)?;
                return self.mul(&ui, &shift);
            }
        }
        let chi = self.charpoly(b)?;
        let c0 = chi.coeff(0);
        if c0.is_zero_to_precision() {
            return Err(if c0.is_exactly_zero() {
                Error::DivisionByZero
            } else {
                Error::insufficient("inverse needs a visible norm", c0.precision())
            });
        }
        let mut q = self.one();
        for i in (1..self.degree).rev() {
            q = self.mul(&q, b)?;
            q = self.add(&q, &self.embed(&chi.coeff(i)));
        }
        let s = c0.inv()?.neg();
        Ok(AlgebraElement { poly: q.poly.mul_scalar(&s) })
    }

    pub fn div(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
        self.mul(a, &self.inv(b)?)
    }

    pub fn pow(&self, w: &AlgebraElement, k: i64) -> Result<AlgebraElement> {
        if k < 0 {
            // invert first: the solve is cheapest on the smallest element,
            // and products afterwards preserve relative precision
            return self.pow(&self.inv(w)?, -k);
        }
        let mut acc = self.one();
        let mut base = w.clone();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base)?;
            }
            k >>= 1;
            if k > 0 {
                base = self.mul(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// Evaluate a base-coefficient polynomial at an algebra element by
    /// Horner's rule.
    pub fn eval_poly(&self, p: &LocalPolynomial, w: &AlgebraElement) -> Result<AlgebraElement> {
        let mut acc = self.zero();
        for c in p.coeffs().iter().rev() {
            acc = self.mul(&acc, w)?;
            acc = self.add(&acc, &self.embed(c));
        }
        Ok(acc)
    }

    pub fn is_zero_to_precision(&self, a: &AlgebraElement) -> bool {
        a.poly.coeffs().iter().all(|c| c.is_zero_to_precision())
    }

    pub fn eq_to_precision(&self, a: &AlgebraElement, b: &AlgebraElement) -> bool {
        self.is_zero_to_precision(&self.sub(a, b))
    }

    /// Matrix of multiplication by w on the power basis 1, t, .., t^(d-1).
    pub fn mult_matrix(&self, w: &AlgebraElement) -> Result<LocalMatrix> {
        let d = self.degree;
        let mut entries = vec![self.base.zero(); d * d];
        let mut cur = w.poly.clone();
        for j in 0..d {
            for i in 0..d {
                entries[i * d + j] = cur.coeff(i);
            }
            if j + 1 < d {
                // cur := t * cur mod f
                let mut cs = vec![self.base.zero()];
                cs.extend(cur.coeffs().iter().cloned());
                cur = self
                    .from_poly(&LocalPolynomial::new(self.base.clone(), cs))?
                    .poly;
            }
        }
        Ok(LocalMatrix::new(self.base.clone(), d, entries))
    }

    /// Smallest pi power that clears every coordinate denominator, from
    /// certified valuation floors. Zero for integral coordinates.
    fn coord_denominator(&self, w: &AlgebraElement) -> i64 {
        w.poly
            .coeffs()
            .iter()
            .map(|c| if c.is_exactly_zero() { 0 } else { (-coeff_floor(c)).max(0) })
            .max()
            .unwrap_or(0)
    }

    /// Multiply every coordinate by pi^k, an exact digit shift. As an
    /// algebra element this is w * pi^k.
    fn coord_scale(&self, w: &AlgebraElement, k: i64) -> AlgebraElement {
        let coeffs = w.poly.coeffs().iter().map(|c| c.mul_pi_power(k)).collect();
        AlgebraElement {
            poly: LocalPolynomial::new(self.base.clone(), coeffs),
        }
    }

    /// Characteristic polynomial of multiplication by w, monic of the
    /// algebra degree. Equals the minimal polynomial whenever w generates.
    /// Computed on the integral rescale w * pi^s, whose eigenvalues are
    /// those of w times pi^s, and unscaled coefficientwise.
    pub fn charpoly(&self, w: &AlgebraElement) -> Result<LocalPolynomial> {
        let s = self.coord_denominator(w);
        let chi = self.mult_matrix(&self.coord_scale(w, s))?.charpoly()?;
        if s == 0 {
            return Ok(chi);
        }
        let d = self.degree;
        let coeffs = chi
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c.mul_pi_power(-s * (d as i64 - i as i64)))
            .collect();
        Ok(LocalPolynomial::new(self.base.clone(), coeffs))
    }

    /// Determinant of multiplication by w, the algebra norm down to K.
    /// Scaled the same way as the characteristic polynomial.
    pub fn norm(&self, w: &AlgebraElement) -> Result<LocalElement> {
        let s = self.coord_denominator(w);
        let det = self.mult_matrix(&self.coord_scale(w, s))?.det()?;
        Ok(det.mul_pi_power(-s * self.degree as i64))
    }

    /// Valuation normalized so a uniformizer of the extension has value 1
    /// and the base uniformizer has value d. Answered by the branch
    /// oracle when one is attached, otherwise as the base valuation of
    /// the norm; either way it is the honest extension valuation exactly
    /// when the algebra is a totally ramified field over K.
    pub fn valuation(&self, w: &AlgebraElement) -> Result<i64> {
        if let Some(o) = &self.oracle {
            let v = o.valuation(&w.poly)? * Ratio::from_integer(self.degree as i64);
            if !v.is_integer() {
                return Err(Error::Internal(format!(
                    "branch valuation {v} is not integral in the extension"
                )));
            }
            return Ok(v.to_integer());
        }
        self.norm(w)?.valuation()
    }

    /// Certified lower bound on the valuation, from coefficient
    /// precisions and integrality of the generator. Exact zero reports
    /// i64::MAX.
    pub fn val_floor(&self, w: &AlgebraElement) -> i64 {
        let d = self.degree as i64;
        w.poly
            .coeffs()
            .iter()
            .map(coeff_floor)
            .min()
            .map_or(i64::MAX, |m| if m == i64::MAX { i64::MAX } else { d * m })
    }

    /// Residue of a valuation-zero element. In a totally ramified
    /// extension the residue field does not move and the norm of a unit
    /// reduces to the d-th power of its residue, so the residue is
    /// recovered by undoing that power (gcd(d, 2^n - 1) = 1 is required
    /// and automatic for 2-power d).
    pub fn unit_residue(&self, w: &AlgebraElement) -> Result<ResidueElement> {
        if let Some(o) = &self.oracle {
            return o.unit_residue(&w.poly);
        }
        let nm = self.norm(w)?;
        if nm.valuation()? != 0 {
            return Err(Error::Internal("unit residue of a non-unit".into()));
        }
        let r = nm.residue()?;
        let kf = self.base.residue_field();
        let q1 = kf.order() - 1;
        if q1 == 1 {
            return Ok(r);
        }
        let e = mod_inverse(self.degree as u128, q1).ok_or_else(|| {
            Error::Internal(format!(
                "degree {} is not invertible modulo the residue group order",
                self.degree
            ))
        })?;
        Ok(kf.pow(r, e))
    }

    /// Whether a valuation-zero element is a cube. Since 3 is a unit
    /// here, Hensel reduces the question to the residue.
    pub fn unit_is_cube(&self, w: &AlgebraElement) -> Result<bool> {
        Ok(self.base.residue_field().is_cube(self.unit_residue(w)?))
    }

    /// Inverse of a valuation-zero element by the multiplicative Newton
    /// iteration z -> z (2 - w z), seeded from the residue. Nothing but
    /// products, so relative precision survives where an elimination
    /// solve would drain it.
    pub fn unit_inv(&self, w: &AlgebraElement) -> Result<AlgebraElement> {
        let r = self.unit_residue(w)?;
        let ri = self
            .base
            .residue_field()
            .inv(r)
            .ok_or_else(|| Error::Internal("unit residue of zero".into()))?;
        let mut z = self.embed(&self.base.lift_residue(ri));
        for _ in 0..CUBE_ROOT_BUDGET {
            let err = self.sub(&self.one(), &self.mul(w, &z)?);
            if self.is_zero_to_precision(&err) {
                return Ok(z);
            }
            // z (1 + err) halves the distance quadratically
            z = self.mul(&z, &self.add(&self.one(), &err))?;
        }
        Err(Error::insufficient(
            "unit inversion stalled",
            self.base.working_precision(),
        ))
    }

    /// Cube root of a valuation-zero element. Newton runs on the inverse
    /// root, z -> z (1 + (1 - w z^3)/3), so the loop is multiplication
    /// only and the root comes back as w z^2 at the end. The quadratic
    /// term carries a factor 2/3, which in residue characteristic 2 buys
    /// extra digits on top of the doubling.
    pub fn cube_root_of_unit(&self, w: &AlgebraElement) -> Result<AlgebraElement> {
        let r = self.unit_residue(w)?;
        let ri = self
            .base
            .residue_field()
            .inv(r)
            .ok_or_else(|| Error::Internal("unit residue of zero".into()))?;
        let seed = self
            .base
            .residue_field()
            .cube_root(ri)
            .ok_or_else(|| Error::NotACube("unit residue has no cube root".into()))?;
        let third = self.base.integer(3).inv()?;
        let mut z = self.embed(&self.base.lift_residue(seed));
        for _ in 0..CUBE_ROOT_BUDGET {
            let z2 = self.mul(&z, &z)?;
            let err = self.sub(&self.one(), &self.mul(w, &self.mul(&z2, &z)?)?);
            if self.is_zero_to_precision(&err) {
                return self.mul(w, &z2);
            }
            let step = AlgebraElement {
                poly: err.poly.mul_scalar(&third),
            };
            z = self.mul(&z, &self.add(&self.one(), &step))?;
        }
        Err(Error::insufficient(
            "cube root iteration stalled",
            self.base.working_precision(),
        ))
    }

    /// Inverse of the generator, read off the modulus relation: f(t) = 0
    /// gives t^{-1} = -(t^{d-1} + f_{d-1} t^{d-2} + ... + f_1) / f_0. The
    /// coordinates are exact quotients of the modulus coefficients.
    pub fn generator_inverse(&self) -> Result<AlgebraElement> {
        let s = self.modulus.coeff(0).inv()?.neg();
        let coeffs = (1..=self.degree)
            .map(|i| self.modulus.coeff(i).mul(&s))
            .collect();
        Ok(AlgebraElement {
            poly: LocalPolynomial::new(self.base.clone(), coeffs),
        })
    }

    /// Cube root of anything whose valuation is divisible by 3. The root
    /// is produced as y * t^a * pi^b with y a unit; the generator and the
    /// base uniformizer span the needed valuation whenever
    /// gcd(v(t), degree) divides it, and powers of t^{-1} come from the
    /// modulus relation, so no deep inverse is ever solved for.
    pub fn cube_root(&self, w: &AlgebraElement) -> Result<AlgebraElement> {
        let v = self.valuation(w)?;
        if v.rem_euclid(3) != 0 {
            return Err(Error::NotACube(format!("valuation {v} is prime to 3")));
        }
        let target = v / 3;
        let g = self.valuation(&self.generator())?;
        let d = self.degree as i64;
        let gg = gcd(g, d);
        if target.rem_euclid(gg) != 0 {
            return Err(Error::Internal(format!(
                "cube root valuation {target} lies outside the monomial lattice"
            )));
        }
        let step = d / gg;
        let a = if step == 1 {
            0
        } else {
            let ginv = mod_inverse((g / gg).rem_euclid(step) as u128, step as u128)
                .expect("coprime after dividing out the gcd");
            ((target / gg).rem_euclid(step) as u128 * ginv % step as u128) as i64
        };
        let b = (target - g * a) / d;
        let gi = self.generator_inverse()?;
        let unit = self.coord_scale(&self.mul(w, &self.pow(&gi, 3 * a)?)?, -3 * b);
        let y = self.cube_root_of_unit(&unit)?;
        let root = self.mul(&y, &self.pow(&self.generator(), a)?)?;
        Ok(self.coord_scale(&root, b))
    }

    /// Build a valuation-1 element from a chain witness: the witness key
    /// g satisfies v(g(t)) = h/d with h prime to d, so g(t)^x pi^y has
    /// valuation hx + dy = 1 for a Bezout pair (x, y). The result is
    /// verified before it is returned.
    pub fn uniformizer_from_witness(&self, witness: &ChainWitness) -> Result<AlgebraElement> {
        let d = self.degree as i64;
        if *witness.valuation.denom() != d {
            return Err(Error::Internal(format!(
                "witness valuation denominator {} does not match the degree {d}",
                witness.valuation.denom()
            )));
        }
        let h = *witness.valuation.numer();
        // choose the Bezout pair with a positive key exponent so the power
        // stays integral; the leftover pi power is an exact digit shift
        let x = mod_inverse(h.rem_euclid(d) as u128, d as u128).ok_or_else(|| {
            Error::Internal(
                "witness valuation numerator shares a factor with the degree".into(),
            )
        })? as i64;
        let y = (1 - h * x) / d;
        let key_value = self.from_poly(&witness.key)?;
        let powed = self.pow(&key_value, x)?;
        let shifted = powed
            .poly
            .coeffs()
            .iter()
            .map(|c| c.mul_pi_power(y))
            .collect();
        let cand = AlgebraElement {
            poly: LocalPolynomial::new(self.base.clone(), shifted),
        };
        let v = self.valuation(&cand)?;
        if v != 1 {
            return Err(Error::Internal(format!(
                "witness produced valuation {v} instead of a uniformizer"
            )));
        }
        Ok(cand)
    }

    /// Characteristic polynomial of w, verified Eisenstein: monic, every
    /// lower coefficient of positive valuation, constant term of
    /// valuation exactly 1. Success proves the modulus is irreducible
    /// with a totally ramified root field, and stays irreducible over
    /// every unramified extension of the base.
    pub fn eisenstein_certificate(&self, w: &AlgebraElement) -> Result<LocalPolynomial> {
        let chi = self.charpoly(w)?;
        debug_assert!(chi.is_monic_to_precision());
        for i in 0..self.degree {
            let c = chi.coeff(i);
            let floor = coeff_floor(&c);
            if floor < 1 {
                if c.is_zero_to_precision() {
                    return Err(Error::insufficient(
                        format!("Eisenstein check: coefficient {i} is indistinct"),
                        floor,
                    ));
                }
                return Err(Error::NotEisenstein(format!(
                    "coefficient {i} has valuation {floor}"
                )));
            }
            if i == 0 {
                match c.valuation() {
                    Ok(1) => {}
                    Ok(v) => {
                        return Err(Error::NotEisenstein(format!(
                            "constant term has valuation {v}"
                        )))
                    }
                    Err(_) => {
                        // indistinct constant term: ruled out if the bound
                        // already exceeds 1, otherwise just not visible
                        if c.precision() > 1 {
                            return Err(Error::NotEisenstein(
                                "constant term valuation exceeds 1".into(),
                            ));
                        }
                        return Err(Error::insufficient(
                            "Eisenstein check: constant term is indistinct",
                            c.precision(),
                        ));
                    }
                }
            }
        }
        Ok(chi)
    }
}

/// The same field presented on the power basis of a uniformizer.
///
/// A quotient by a wildly ramified irreducible is usable through its
/// branch oracle, but the generator's powers usually span a shallow
/// suborder: unit coordinates carry genuine denominators, and every
/// product pays those denominators in absolute precision. A totally
/// ramified extension is monogenic in any uniformizer, so switching the
/// basis once makes units integral and their arithmetic free. The switch
/// costs one characteristic polynomial and one linear solve, paid at
/// construction and never per element.
pub struct EisensteinModel {
    alg: QuotientAlgebra,
    generator_image: AlgebraElement,
}

impl EisensteinModel {
    /// Rebase a modulus onto the power basis of the uniformizer its
    /// factor analysis certifies.
    pub fn new(modulus: LocalPolynomial, analysis: &FactorAnalysis) -> Result<Self> {
        let witness = analysis.witness.as_ref().ok_or_else(|| {
            Error::Internal("an Eisenstein model needs an irreducible analysis".into())
        })?;
        let oracle = analysis.oracle.clone().ok_or_else(|| {
            Error::Internal("an Eisenstein model needs an irreducible analysis".into())
        })?;
        let presented = QuotientAlgebra::with_oracle(modulus, oracle)?;
        let d = presented.degree();
        let pi = presented.uniformizer_from_witness(witness)?;
        let eis = presented.eisenstein_certificate(&pi)?;
        // the relation is Eisenstein, so its own profile is a single
        // polygon segment of slope 1/d, and its oracle certifies every
        // later valuation from the coordinates alone
        let eis_analysis = factor_profile(&eis)?;
        let eis_oracle = eis_analysis.oracle.ok_or_else(|| {
            Error::Internal("an Eisenstein relation must profile irreducible".into())
        })?;
        let alg = QuotientAlgebra::with_oracle(eis, eis_oracle)?;
        // one solve expresses the old generator on the new basis: the
        // matrix columns are the uniformizer powers on the old one
        let base = presented.base().clone();
        let mut entries = vec![base.zero(); d * d];
        let mut col = presented.one();
        for j in 0..d {
            for i in 0..d {
                entries[i * d + j] = col.poly.coeff(i);
            }
            if j + 1 < d {
                col = presented.mul(&col, &pi)?;
            }
        }
        let m = LocalMatrix::new(base.clone(), d, entries);
        let mut rhs = vec![base.zero(); d];
        rhs[1] = base.one();
        let coords = m.solve(&rhs)?;
        let generator_image = AlgebraElement {
            poly: LocalPolynomial::new(base, coords),
        };
        let model = EisensteinModel { alg, generator_image };
        let check = model.convert(presented.modulus())?;
        if !model.alg.is_zero_to_precision(&check) {
            return Err(Error::Internal(
                "rebased generator fails its defining relation".into(),
            ));
        }
        Ok(model)
    }

    /// Carry a polynomial in the presentation generator over to the
    /// uniformizer basis by Horner evaluation at the generator image.
    pub fn convert(&self, w: &LocalPolynomial) -> Result<AlgebraElement> {
        self.alg.eval_poly(w, &self.generator_image)
    }

    /// The working algebra on the uniformizer basis. Its generator is a
    /// uniformizer, so `cube_root` and friends run on integral
    /// coordinates here.
    pub fn algebra(&self) -> &QuotientAlgebra {
        &self.alg
    }

    /// The presentation generator expressed on the uniformizer basis.
    pub fn generator_image(&self) -> &AlgebraElement {
        &self.generator_image
    }
}

/// c0 + c1 z + c2 z^2 in a cubic layer.
#[derive(Clone, Debug)]
pub struct CubicElement {
    c: [AlgebraElement; 3],
}

impl CubicElement {
    pub fn coeffs(&self) -> &[AlgebraElement; 3] {
        &self.c
    }
}

/// One ramified cubic on top of a quotient algebra: A[z]/(z^3 - b) where
/// v(b) is prime to 3. The slope certificate makes the layer totally
/// ramified of degree 3 over A whenever A is a field, so valuations
/// triple below and v(z) = v(b).
pub struct CubicLayer {
    base: QuotientAlgebra,
    b: AlgebraElement,
    vb: i64,
}

impl CubicLayer {
    pub fn new(base: QuotientAlgebra, b: AlgebraElement) -> Result<Self> {
        let vb = base.valuation(&b)?;
        if vb.rem_euclid(3) == 0 {
            return Err(Error::Internal(format!(
                "cubic layer needs a valuation prime to 3, got {vb}"
            )));
        }
        Ok(CubicLayer { base, b, vb })
    }

    pub fn base(&self) -> &QuotientAlgebra {
        &self.base
    }

    pub fn b_valuation(&self) -> i64 {
        self.vb
    }

    pub fn one(&self) -> CubicElement {
        self.embed(&self.base.one())
    }

    pub fn embed(&self, a: &AlgebraElement) -> CubicElement {
        CubicElement { c: [a.clone(), self.base.zero(), self.base.zero()] }
    }

    /// The class of z.
    pub fn z(&self) -> CubicElement {
        CubicElement { c: [self.base.zero(), self.base.one(), self.base.zero()] }
    }

    pub fn from_coeffs(&self, c: [AlgebraElement; 3]) -> CubicElement {
        CubicElement { c }
    }

    pub fn add(&self, a: &CubicElement, b: &CubicElement) -> CubicElement {
        CubicElement {
            c: [
                self.base.add(&a.c[0], &b.c[0]),
                self.base.add(&a.c[1], &b.c[1]),
                self.base.add(&a.c[2], &b.c[2]),
            ],
        }
    }

    pub fn sub(&self, a: &CubicElement, b: &CubicElement) -> CubicElement {
        CubicElement {
            c: [
                self.base.sub(&a.c[0], &b.c[0]),
                self.base.sub(&a.c[1], &b.c[1]),
                self.base.sub(&a.c[2], &b.c[2]),
            ],
        }
    }

    pub fn mul(&self, a: &CubicElement, b: &CubicElement) -> Result<CubicElement> {
        let p = |i: usize, j: usize| self.base.mul(&a.c[i], &b.c[j]);
        let e0 = self.base.add(
            &p(0, 0)?,
            &self.base.mul(&self.b, &self.base.add(&p(1, 2)?, &p(2, 1)?))?,
        );
        let e1 = self.base.add(
            &self.base.add(&p(0, 1)?, &p(1, 0)?),
            &self.base.mul(&self.b, &p(2, 2)?)?,
        );
        let e2 = self.base.add(&self.base.add(&p(0, 2)?, &p(1, 1)?), &p(2, 0)?);
        Ok(CubicElement { c: [e0, e1, e2] })
    }

    /// Norm down to the base algebra:
    /// c0^3 + b c1^3 + b^2 c2^3 - 3 b c0 c1 c2.
    pub fn norm(&self, w: &CubicElement) -> Result<AlgebraElement> {
        let a = &self.base;
        let cube = |x: &AlgebraElement| a.mul(&a.mul(x, x)?, x);
        let mut acc = cube(&w.c[0])?;
        acc = a.add(&acc, &a.mul(&self.b, &cube(&w.c[1])?)?);
        let b2 = a.mul(&self.b, &self.b)?;
        acc = a.add(&acc, &a.mul(&b2, &cube(&w.c[2])?)?);
        let triple = a.mul(
            &a.mul(&a.integer(3), &self.b)?,
            &a.mul(&a.mul(&w.c[0], &w.c[1])?, &w.c[2])?,
        )?;
        Ok(a.sub(&acc, &triple))
    }

    /// Norm all the way down to K.
    pub fn absolute_norm(&self, w: &CubicElement) -> Result<LocalElement> {
        self.base.norm(&self.norm(w)?)
    }

    /// Inverse through the adjugate: w times
    /// (c0^2 - b c1 c2, b c2^2 - c0 c1, c1^2 - c0 c2) equals N(w).
    pub fn inv(&self, w: &CubicElement) -> Result<CubicElement> {
        let a = &self.base;
        let [c0, c1, c2] = &w.c;
        let adj = [
            a.sub(&a.mul(c0, c0)?, &a.mul(&self.b, &a.mul(c1, c2)?)?),
            a.sub(&a.mul(&self.b, &a.mul(c2, c2)?)?, &a.mul(c0, c1)?),
            a.sub(&a.mul(c1, c1)?, &a.mul(c0, c2)?),
        ];
        let ninv = a.inv(&self.norm(w)?)?;
        Ok(CubicElement {
            c: [
                a.mul(&adj[0], &ninv)?,
                a.mul(&adj[1], &ninv)?,
                a.mul(&adj[2], &ninv)?,
            ],
        })
    }

    /// Valuation with the layer uniformizer at 1: base elements scale by
    /// 3 and v(z) = v(b). The three monomial contributions are distinct
    /// mod 3, so the minimum is unique and exact; indistinct slots must
    /// provably sit above it.
    pub fn valuation(&self, w: &CubicElement) -> Result<i64> {
        let mut best: Option<i64> = None;
        let mut floors: Vec<i64> = Vec::new();
        for (i, ci) in w.c.iter().enumerate() {
            let shift = i as i64 * self.vb;
            if ci.poly.is_zero() {
                continue;
            }
            if self.base.is_zero_to_precision(ci) {
                floors.push(3 * self.base.val_floor(ci) + shift);
                continue;
            }
            let v = 3 * self.base.valuation(ci)? + shift;
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        let best = match best {
            Some(v) => v,
            None => {
                return Err(match floors.iter().min() {
                    None => Error::ValuationOfZero,
                    Some(&f) => Error::insufficient(
                        "cubic layer valuation of an indistinct element",
                        f,
                    ),
                })
            }
        };
        for f in floors {
            if f <= best {
                return Err(Error::insufficient(
                    "cubic layer valuation: an indistinct coefficient could dominate",
                    f,
                ));
            }
        }
        Ok(best)
    }

    pub fn is_zero_to_precision(&self, w: &CubicElement) -> bool {
        w.c.iter().all(|ci| self.base.is_zero_to_precision(ci))
    }

    pub fn eq_to_precision(&self, a: &CubicElement, b: &CubicElement) -> bool {
        self.is_zero_to_precision(&self.sub(a, b))
    }
}

/// Valuation if visible, absolute precision otherwise; a sound per
/// coefficient lower bound either way.
fn coeff_floor(c: &LocalElement) -> i64 {
    if c.is_zero_to_precision() {
        c.precision()
    } else {
        c.valuation().expect("visible elements have exact valuation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{factor_profile, ProfileVerdict};

    fn q2(prec: i64) -> LocalField {
        LocalField::unramified(1, prec).unwrap()
    }

    fn kernel_octic(field: &LocalField) -> LocalPolynomial {
        LocalPolynomial::from_integers(field, &[-108, 0, 0, 0, 36, 0, 0, 0, 1])
    }

    #[test]
    fn norm_and_valuation_of_simple_elements() {
        let k = q2(48);
        let alg = QuotientAlgebra::new(LocalPolynomial::from_integers(&k, &[-2, 0, 0, 0, 1]))
            .unwrap();
        let t = alg.generator();
        assert!(alg.norm(&alg.integer(3)).unwrap().eq_to_precision(&k.integer(81)));
        assert!(alg.norm(&t).unwrap().eq_to_precision(&k.integer(-2)));
        assert_eq!(alg.valuation(&t).unwrap(), 1);
        assert_eq!(alg.valuation(&alg.integer(6)).unwrap(), 4);
        assert_eq!(alg.val_floor(&alg.zero()), i64::MAX);
    }

    #[test]
    fn norm_is_multiplicative_across_products() {
        let k = q2(48);
        let alg = QuotientAlgebra::new(kernel_octic(&k)).unwrap();
        let a = alg.add(&alg.generator(), &alg.one());
        let b = alg
            .from_poly(&LocalPolynomial::from_integers(&k, &[3, 2, 0, 1]))
            .unwrap();
        // product of (1 + root) over all roots, read off the coefficients
        assert!(alg.norm(&a).unwrap().eq_to_precision(&k.integer(-71)));
        let lhs = alg.norm(&alg.mul(&a, &b).unwrap()).unwrap();
        let rhs = alg.norm(&a).unwrap().mul(&alg.norm(&b).unwrap());
        assert!(lhs.eq_to_precision(&rhs));
    }

    #[test]
    fn inverses_and_negative_powers_round_trip() {
        let k = q2(48);
        let alg = QuotientAlgebra::new(kernel_octic(&k)).unwrap();
        let w = alg
            .from_poly(&LocalPolynomial::from_integers(&k, &[3, 2, 0, 1]))
            .unwrap();
        let wi = alg.inv(&w).unwrap();
        assert!(alg.eq_to_precision(&alg.mul(&w, &wi).unwrap(), &alg.one()));
        let back = alg.mul(&alg.pow(&w, -2).unwrap(), &alg.pow(&w, 2).unwrap()).unwrap();
        assert!(alg.eq_to_precision(&back, &alg.one()));
    }

    #[test]
    fn witness_uniformizer_certifies_the_kernel_octic() {
        let k = q2(64);
        let gamma = kernel_octic(&k);
        let analysis = factor_profile(&gamma).unwrap();
        assert_eq!(
            analysis.profile.verdict,
            ProfileVerdict::Irreducible { ramification: 8 }
        );
        let witness = analysis.witness.expect("irreducible verdict carries a witness");
        let alg = QuotientAlgebra::new(gamma).unwrap();
        // the root generates with valuation 2: norm is the constant term
        assert_eq!(alg.valuation(&alg.generator()).unwrap(), 2);
        let pi = alg.uniformizer_from_witness(&witness).unwrap();
        assert_eq!(alg.valuation(&pi).unwrap(), 1);
        let chi = alg.eisenstein_certificate(&pi).unwrap();
        assert_eq!(chi.degree(), Some(8));
        assert_eq!(chi.coeff(0).valuation().unwrap(), 1);
    }

    #[test]
    fn unit_residue_inverts_the_norm_power_twist() {
        let k = LocalField::unramified(2, 32).unwrap();
        let alg = QuotientAlgebra::new(LocalPolynomial::from_integers(&k, &[-2, 0, 1]))
            .unwrap();
        let omega = alg.embed(&k.omega());
        let expected = k.omega().residue().unwrap();
        assert_eq!(alg.unit_residue(&omega).unwrap(), expected);
        assert!(alg.unit_is_cube(&alg.one()).unwrap());
    }

    #[test]
    fn cube_roots_split_off_the_uniformizer() {
        let k = q2(96);
        let gamma = kernel_octic(&k);
        let analysis = factor_profile(&gamma).unwrap();
        let presented =
            QuotientAlgebra::with_oracle(gamma.clone(), analysis.oracle.clone().unwrap())
                .unwrap();
        let u = presented.add(&presented.one(), &presented.generator());
        let u3 = presented.pow(&u, 3).unwrap();
        // residue field F_2 leaves a unique cube root of a principal unit
        let y = presented.cube_root_of_unit(&u3).unwrap();
        assert!(presented.eq_to_precision(&y, &u));

        // deep roots run on the rebased uniformizer basis, where unit
        // coordinates are integral and products stop paying denominators
        let model = EisensteinModel::new(gamma, &analysis).unwrap();
        let alg = model.algebra();
        let th = model.generator_image();
        assert_eq!(alg.valuation(th).unwrap(), 2);
        // carrying over is multiplicative
        let cu = model.convert(u.poly()).unwrap();
        let cu3 = model.convert(u3.poly()).unwrap();
        assert!(alg.eq_to_precision(&cu3, &alg.pow(&cu, 3).unwrap()));

        let pi = alg.generator();
        let x = alg.mul(&cu3, &alg.pow(&pi, 6).unwrap()).unwrap();
        let y = alg.cube_root(&x).unwrap();
        assert_eq!(alg.valuation(&y).unwrap(), 2);
        let y3 = alg.pow(&y, 3).unwrap();
        assert!(alg.eq_to_precision(&y3, &x));
        let bad = alg.mul(&cu3, &pi).unwrap();
        assert!(matches!(alg.cube_root(&bad), Err(Error::NotACube(_))));
    }

    #[test]
    fn cubic_layer_arithmetic_matches_closed_forms() {
        let k = q2(48);
        let alg = QuotientAlgebra::new(LocalPolynomial::from_integers(&k, &[-2, 0, 0, 0, 1]))
            .unwrap();
        let layer = CubicLayer::new(alg.clone(), alg.integer(2)).unwrap();
        assert_eq!(layer.b_valuation(), 4);
        let z = layer.z();
        assert_eq!(layer.valuation(&z).unwrap(), 4);
        assert!(layer
            .base()
            .eq_to_precision(&layer.norm(&z).unwrap(), &alg.integer(2)));
        assert!(layer.absolute_norm(&z).unwrap().eq_to_precision(&k.integer(16)));

        let w = layer.add(&layer.one(), &z);
        assert!(layer
            .base()
            .eq_to_precision(&layer.norm(&w).unwrap(), &alg.integer(3)));
        assert_eq!(layer.valuation(&w).unwrap(), 0);
        let wi = layer.inv(&w).unwrap();
        assert!(layer.eq_to_precision(&layer.mul(&w, &wi).unwrap(), &layer.one()));

        let mixed = layer.from_coeffs([alg.integer(2), alg.one(), alg.generator()]);
        let mi = layer.inv(&mixed).unwrap();
        assert!(layer.eq_to_precision(&layer.mul(&mixed, &mi).unwrap(), &layer.one()));
        // 2 sits at 3 * 4, z at 4: the z slot wins
        let two_plus_z = layer.add(&layer.embed(&alg.integer(2)), &z);
        assert_eq!(layer.valuation(&two_plus_z).unwrap(), 4);
    }

    #[test]
    fn charpoly_of_a_generator_feeds_back_irreducible() {
        // s^2 + s^3 in K[s]/(s^8 - 2) has eight distinct conjugates, so
        // its characteristic polynomial is irreducible of degree 8 with
        // root valuation 2/8; profiling it must reach past first order.
        let k = q2(64);
        let alg = QuotientAlgebra::new(LocalPolynomial::from_integers(
            &k,
            &[-2, 0, 0, 0, 0, 0, 0, 0, 1],
        ))
        .unwrap();
        let s = alg.generator();
        let w = alg.add(&alg.mul(&s, &s).unwrap(), &alg.pow(&s, 3).unwrap());
        let chi = alg.charpoly(&w).unwrap();
        assert_eq!(chi.degree(), Some(8));
        assert_eq!(chi.coeff(0).valuation().unwrap(), 2);
        let analysis = factor_profile(&chi).unwrap();
        assert_eq!(
            analysis.profile.verdict,
            ProfileVerdict::Irreducible { ramification: 8 }
        );
        assert!(analysis.profile.chain_length >= 2);
        let witness = analysis.witness.unwrap();
        assert_eq!(*witness.valuation.denom(), 8);
    }
}
