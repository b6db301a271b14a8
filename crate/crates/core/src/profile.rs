//! Decides whether a monic integral polynomial over K stays irreducible
//! over the maximal unramified extension of K, by Newton polygons of
//! increasing order.
//!
//! The driver follows one branch of the root cluster with a chain of key
//! polynomials. Verdicts rest on two kinds of certificates:
//!
//! * irreducibility: a chain quantity g(theta), rational in a root theta,
//!   whose valuation has denominator equal to deg f. The denominator of
//!   any such valuation divides the ramification of K(theta), so the
//!   extension has full degree and f is irreducible even unramified-ly.
//! * reducibility: an exact divisibility by a key polynomial, a t-power,
//!   or two root sub-clusters distinguished by valuation or residue data.
//!   Valuations and residues are stable under the Galois action over the
//!   unramified closure, so roots of an irreducible polynomial can never
//!   be told apart this way.
//!
//! Every step certifies that coefficients known only to limited precision
//! cannot change the outcome; otherwise the error asks for more precision
//! instead of guessing. Degrees here are powers of two, which keeps every
//! residual-root obstruction visible: an irreducible residual factor of
//! degree at least 2 over a perfect field of characteristic 2 always has
//! distinct roots, hence witnesses two sub-clusters.

use crate::error::{Error, Result};
use crate::fqpoly::FqPoly;
use crate::local::{LocalElement, LocalField};
use crate::poly::{LocalPolynomial, PolygonSegment};
use crate::residue::ResidueElement;
use num_rational::Ratio;
use serde::Serialize;

const SHIFT_BUDGET: usize = 64;
const CHAIN_BUDGET: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidualPart {
    pub degree: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileSegment {
    /// valuation of the roots attached to the segment, as (numer, denom)
    pub root_valuation: (i64, i64),
    pub length: usize,
    pub residual: Vec<ResidualPart>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitReason {
    /// t^power divides the polynomial exactly
    TPower { power: usize },
    /// two root clusters with different valuations of a chain quantity
    DistinctSlopes { order: usize },
    /// two root clusters with different residues of a chain quantity
    SplitResidual { order: usize },
    /// a key polynomial of smaller degree divides exactly
    KeyDivides { order: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileVerdict {
    Irreducible { ramification: usize },
    Reducible { reason: SplitReason },
}

/// Serializable summary of the analysis: the first-order polygon of the
/// input together with the verdict and how deep the chain had to go.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorProfile {
    pub t_power: usize,
    pub segments: Vec<ProfileSegment>,
    pub verdict: ProfileVerdict,
    pub chain_length: usize,
}

/// The final chain element backing an irreducibility verdict: a monic key
/// polynomial g and the exact valuation of g(theta), whose denominator
/// equals the degree. Feeds the uniformizer search in field towers.
#[derive(Clone, Debug)]
pub struct ChainWitness {
    pub key: LocalPolynomial,
    pub valuation: Ratio<i64>,
}

#[derive(Debug)]
pub struct FactorAnalysis {
    pub profile: FactorProfile,
    pub witness: Option<ChainWitness>,
    /// Valuation oracle along the branch, present exactly when the verdict
    /// is irreducible.
    pub oracle: Option<BranchOracle>,
}

/// Exact valuation and residue queries along the branch cut out by a
/// completed key chain. Because the chain of an irreducible polynomial
/// realizes every valuation class of the extension, the dominant term of
/// any expansion is unique, and reading it off costs nothing in working
/// precision no matter how deep the queried value sits. Valuations are in
/// base units, so the branch root generates value group (1/degree) Z.
#[derive(Clone, Debug)]
pub struct BranchOracle {
    levels: Vec<Level>,
}

impl BranchOracle {
    /// Exact valuation of p at the branch root.
    pub fn valuation(&self, p: &LocalPolynomial) -> Result<Ratio<i64>> {
        match dominant(&self.levels, p)? {
            Dom::Val(v, _) => Ok(v),
            Dom::Bound(b) => Err(Error::insufficient(
                "branch valuation is hidden below a precision bound",
                b.floor().to_integer(),
            )),
            Dom::Nothing => Err(Error::ValuationOfZero),
        }
    }

    /// Residue of a valuation-zero value at the branch root.
    pub fn unit_residue(&self, p: &LocalPolynomial) -> Result<ResidueElement> {
        match dominant(&self.levels, p)? {
            Dom::Val(v, u) => {
                if v != Ratio::from_integer(0) {
                    return Err(Error::Internal(format!(
                        "residue of a non-unit with valuation {v}"
                    )));
                }
                Ok(u)
            }
            Dom::Bound(b) => Err(Error::insufficient(
                "unit residue is hidden below a precision bound",
                b.floor().to_integer(),
            )),
            Dom::Nothing => Err(Error::ValuationOfZero),
        }
    }
}

/// One frozen link of the key chain. The relation
/// key^delta = pi^(rep.pi) * t^(rep.keys[0]) * (lower keys) * sigma
/// holds at the residue level and drives the twist bookkeeping.
#[derive(Clone, Debug)]
struct Level {
    key: LocalPolynomial,
    mu: Ratio<i64>,
    delta: i64,
    sigma: ResidueElement,
    rep: Exps,
}

/// Exponent vector of a monomial pi^pi * prod keys[l]^e_l, where keys[0]
/// is t itself.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Exps {
    pi: i64,
    keys: Vec<i64>,
}

impl Exps {
    fn zero(n: usize) -> Self {
        Exps {
            pi: 0,
            keys: vec![0; n],
        }
    }
    fn add_mul(&mut self, other: &Exps, c: i64) {
        self.pi += c * other.pi;
        for (a, b) in self.keys.iter_mut().zip(&other.keys) {
            *a += c * b;
        }
    }
}

enum Dom {
    /// exact valuation and the residue of the value against its canonical
    /// monomial representative
    Val(Ratio<i64>, ResidueElement),
    /// the whole part is indistinct from zero; valuation at least this
    Bound(Ratio<i64>),
    /// exactly zero
    Nothing,
}

/// First-order view of a single coefficient as a polygon column.
fn coefficient_dom(c: &LocalElement) -> Result<Dom> {
    if c.is_exactly_zero() {
        return Ok(Dom::Nothing);
    }
    if c.is_zero_to_precision() {
        return Ok(Dom::Bound(Ratio::from_integer(c.precision())));
    }
    let v = c.valuation()?;
    let unit = c.mul_pi_power(-v).residue()?;
    Ok(Dom::Val(Ratio::from_integer(v), unit))
}

fn lcm(a: i64, b: i64) -> i64 {
    fn gcd(mut a: i64, mut b: i64) -> i64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.abs()
    }
    a / gcd(a, b) * b
}

/// Group denominator of the value lattice spanned by the frozen levels.
fn group_den(levels: &[Level]) -> i64 {
    levels.iter().map(|l| l.delta).product()
}

/// Canonical digits of a value in the lattice: value = pi + sum d_l mu_l
/// with 0 <= d_l < delta_l, digits chosen top level first.
fn canonical(levels: &[Level], mut val: Ratio<i64>) -> Exps {
    let mut e = Exps::zero(levels.len());
    for l in (0..levels.len()).rev() {
        let g_below: i64 = levels[..l].iter().map(|x| x.delta).product();
        let mut digit = None;
        for d in 0..levels[l].delta {
            let rest = val - Ratio::from_integer(d) * levels[l].mu;
            if (rest * Ratio::from_integer(g_below)).is_integer() {
                digit = Some(d);
                break;
            }
        }
        let d = digit.expect("value lies in the lattice of the chain");
        e.keys[l] = d;
        val -= Ratio::from_integer(d) * levels[l].mu;
    }
    debug_assert!(val.is_integer());
    e.pi = val.to_integer();
    e
}

/// Residue of a valuation-zero monomial, reduced with the frozen relations
/// key^delta -> rep * sigma and the uniqueness of canonical digits.
fn reduce(levels: &[Level], field: &LocalField, mut e: Exps) -> ResidueElement {
    let k = field.residue_field();
    let mut acc = ResidueElement::ONE;
    for l in (0..levels.len()).rev() {
        let d = levels[l].delta;
        let q = e.keys[l].div_euclid(d);
        e.keys[l] = e.keys[l].rem_euclid(d);
        if q != 0 {
            let s = if q > 0 {
                k.pow(levels[l].sigma, q as u128)
            } else {
                let inv = k.inv(levels[l].sigma).expect("chain residues are nonzero");
                k.pow(inv, (-q) as u128)
            };
            acc = k.mul(acc, s);
            e.add_mul(&levels[l].rep, q);
        }
    }
    debug_assert!(e.pi == 0 && e.keys.iter().all(|&x| x == 0));
    acc
}

/// Monomial with the given exponents as an actual polynomial.
fn rep_poly(levels: &[Level], field: &LocalField, e: &Exps) -> LocalPolynomial {
    let mut out = LocalPolynomial::new(
        field.clone(),
        vec![field.one().mul_pi_power(e.pi)],
    );
    for (l, &d) in e.keys.iter().enumerate() {
        for _ in 0..d {
            out = out.mul(&levels[l].key);
        }
    }
    out
}

/// Dominant term of a polynomial along the branch: its exact valuation at
/// a branch root, plus the residue against the canonical representative.
/// Expansion digits at each level have pairwise distinct values modulo the
/// lattice below, so the minimum is unique and exact whenever it is
/// visible above the precision bounds of the unknown terms.
fn dominant(levels: &[Level], a: &LocalPolynomial) -> Result<Dom> {
    if levels.len() == 1 {
        let mu0 = levels[0].mu;
        let mut best: Option<(Ratio<i64>, ResidueElement)> = None;
        let mut bound: Option<Ratio<i64>> = None;
        for (i, c) in a.coeffs().iter().enumerate() {
            if c.is_exactly_zero() {
                continue;
            }
            let weight = Ratio::from_integer(i as i64) * mu0;
            if c.is_zero_to_precision() {
                let b = Ratio::from_integer(c.precision()) + weight;
                bound = Some(bound.map_or(b, |x: Ratio<i64>| x.min(b)));
            } else {
                let v = Ratio::from_integer(c.valuation()?) + weight;
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    let unit = c.mul_pi_power(-c.valuation()?).residue()?;
                    best = Some((v, unit));
                }
            }
        }
        return finish_dom(best, bound);
    }
    let (lower, top) = levels.split_at(levels.len() - 1);
    let top = &top[0];
    let parts = a.adic_expansion(&top.key)?;
    let mut best: Option<(Ratio<i64>, ResidueElement)> = None;
    let mut bound: Option<Ratio<i64>> = None;
    for (d, part) in parts.iter().enumerate() {
        let weight = Ratio::from_integer(d as i64) * top.mu;
        match dominant(lower, part)? {
            Dom::Nothing => {}
            Dom::Bound(b) => {
                let b = b + weight;
                bound = Some(bound.map_or(b, |x: Ratio<i64>| x.min(b)));
            }
            Dom::Val(v, u) => {
                let v = v + weight;
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, u));
                }
            }
        }
    }
    finish_dom(best, bound)
}

fn finish_dom(
    best: Option<(Ratio<i64>, ResidueElement)>,
    bound: Option<Ratio<i64>>,
) -> Result<Dom> {
    match (best, bound) {
        (None, None) => Ok(Dom::Nothing),
        (None, Some(b)) => Ok(Dom::Bound(b)),
        (Some((v, u)), None) => Ok(Dom::Val(v, u)),
        (Some((v, u)), Some(b)) => {
            if b <= v {
                Err(Error::insufficient(
                    "a coefficient known only to precision could dominate the branch value",
                    b.floor().to_integer(),
                ))
            } else {
                Ok(Dom::Val(v, u))
            }
        }
    }
}

/// Lower convex hull of (j, value) points; returns vertex list.
fn lower_hull(points: &[(i64, Ratio<i64>)]) -> Vec<(i64, Ratio<i64>)> {
    let mut hull: Vec<(i64, Ratio<i64>)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // keep b only if the path a -> b -> p turns strictly upward
            let lhs = (b.1 - a.1) * Ratio::from_integer(p.0 - a.0);
            let rhs = (p.1 - a.1) * Ratio::from_integer(b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn hull_value(hull: &[(i64, Ratio<i64>)], j: i64) -> Ratio<i64> {
    if j <= hull[0].0 {
        return hull[0].1;
    }
    for w in hull.windows(2) {
        if j <= w[1].0 {
            let t = Ratio::new(j - w[0].0, w[1].0 - w[0].0);
            return w[0].1 + (w[1].1 - w[0].1) * t;
        }
    }
    hull.last().unwrap().1
}

/// Shape of the branch polygon over one expansion, with every coefficient
/// known only to a precision bound accounted for.
enum BranchShape {
    /// valuations split across two or more certified segments
    Split,
    /// one segment spanning every column: slope -mu from (0, v0)
    Single { v0: Ratio<i64>, mu: Ratio<i64> },
}

/// Certified polygon analysis of expansion columns. Exact columns give
/// points; imprecise columns must stay above the hull. A column left of
/// the leftmost exact point is sound only when its bound clears the
/// extension of the steepest segment: the line of that slope through the
/// left vertex supports the whole configuration (later slopes are
/// shallower by convexity), so a strictly higher left column forces an
/// extra, steeper segment in the true polygon, a certified split. A bound
/// at or below the extension could merge with the first segment, so it is
/// a precision failure, not a verdict.
fn branch_polygon(doms: &[Dom], field: &LocalField) -> Result<BranchShape> {
    let mut points = Vec::new();
    for (j, d) in doms.iter().enumerate() {
        if let Dom::Val(v, _) = d {
            points.push((j as i64, *v));
        }
    }
    if points.len() < 2 {
        return Err(Error::insufficient(
            "polygon needs at least two exact corner valuations",
            field.working_precision(),
        ));
    }
    let hull = lower_hull(&points);
    let (j0, v0) = hull[0];
    let mu_first = (hull[0].1 - hull[1].1) / Ratio::from_integer(hull[1].0 - hull[0].0);
    let mut left_cluster = false;
    for (j, d) in doms.iter().enumerate() {
        if let Dom::Bound(b) = d {
            let j = j as i64;
            if j < j0 {
                let ext = v0 + mu_first * Ratio::from_integer(j0 - j);
                if *b <= ext {
                    return Err(Error::insufficient(
                        "imprecise low column could merge with the first segment",
                        field.working_precision(),
                    ));
                }
                left_cluster = true;
            } else if *b < hull_value(&hull, j) {
                return Err(Error::insufficient(
                    "imprecise expansion coefficient below the polygon hull",
                    field.working_precision(),
                ));
            }
        }
    }
    if left_cluster || hull.len() > 2 {
        return Ok(BranchShape::Split);
    }
    debug_assert_eq!(j0, 0, "single certified segment must span every column");
    Ok(BranchShape::Single { v0, mu: mu_first })
}

/// Residue-level splitting pattern of a residual polynomial: either a pure
/// power of one linear factor (continue the chain) or a certified split.
enum ResidualShape {
    Pure(ResidueElement, usize),
    Split,
}

fn residual_shape(r: &FqPoly) -> Result<ResidualShape> {
    let deg = r.degree().unwrap_or(0);
    let roots = r.roots()?;
    let total: usize = roots.iter().map(|(_, m)| m).sum();
    if roots.len() == 1 && total == deg {
        let (root, m) = roots[0];
        Ok(ResidualShape::Pure(root, m))
    } else {
        // several rational roots, or an irreducible factor of degree >= 2
        // whose roots are distinct because the residue field is perfect
        Ok(ResidualShape::Split)
    }
}

fn strip_t_power(f: &LocalPolynomial) -> (usize, LocalPolynomial) {
    let mut k = 0;
    while k < f.coeffs().len() && f.coeffs()[k].is_exactly_zero() {
        k += 1;
    }
    let rest = LocalPolynomial::new(f.field().clone(), f.coeffs()[k..].to_vec());
    (k, rest)
}

fn describe_first_order(f: &LocalPolynomial) -> Result<Vec<ProfileSegment>> {
    if f.degree().map_or(0, |d| d) < 1 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for seg in f.newton_polygon()? {
        let residual = f.residual_polynomial(&seg)?;
        let mut parts: Vec<ResidualPart> = residual
            .factor()?
            .into_iter()
            .map(|(g, m)| ResidualPart {
                degree: g.degree().unwrap_or(0),
                multiplicity: m,
            })
            .collect();
        parts.sort_by_key(|p| (p.degree, p.multiplicity));
        out.push(ProfileSegment {
            root_valuation: (-*seg.slope.numer(), *seg.slope.denom()),
            length: seg.length,
            residual: parts,
        });
    }
    Ok(out)
}

/// Full analysis of a monic integral polynomial whose degree is a power of
/// two: does it remain irreducible over the maximal unramified extension,
/// and what does its first-order polygon look like.
pub fn factor_profile(f: &LocalPolynomial) -> Result<FactorAnalysis> {
    let field = f.field().clone();
    let n = f
        .degree()
        .ok_or_else(|| Error::Internal("factor profile of the zero polynomial".into()))?;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Internal(format!(
            "factor profile expects degree a power of two at least 2, got {n}"
        )));
    }
    if !f.is_monic_to_precision() {
        return Err(Error::Internal("factor profile expects a monic polynomial".into()));
    }
    let (t_power, stripped) = strip_t_power(f);
    let segments = describe_first_order(&stripped)?;
    if t_power > 0 {
        return Ok(FactorAnalysis {
            profile: FactorProfile {
                t_power,
                segments,
                verdict: ProfileVerdict::Reducible {
                    reason: SplitReason::TPower { power: t_power },
                },
                chain_length: 0,
            },
            witness: None,
            oracle: None,
        });
    }

    // first order: shift until the single segment has a fractional slope
    let mut cur = stripped;
    let mut chain_length = 0usize;
    let wall = loop {
        chain_length += 1;
        if chain_length > SHIFT_BUDGET {
            return Err(Error::insufficient(
                "first-order shift budget exhausted without a decision",
                field.working_precision(),
            ));
        }
        let doms: Vec<Dom> = cur
            .coeffs()
            .iter()
            .map(coefficient_dom)
            .collect::<Result<_>>()?;
        let (v0, mu) = match branch_polygon(&doms, &field)? {
            BranchShape::Split => {
                return done(
                    t_power,
                    segments,
                    ProfileVerdict::Reducible {
                        reason: SplitReason::DistinctSlopes { order: 1 },
                    },
                    chain_length,
                );
            }
            BranchShape::Single { v0, mu } => (v0, mu),
        };
        if mu < Ratio::from_integer(0) {
            return Err(Error::Internal(
                "factor profile expects an integral polynomial (negative root valuation)".into(),
            ));
        }
        let h = *mu.numer();
        let eps = *mu.denom();
        if eps as usize == n {
            let t_key = LocalPolynomial::new(field.clone(), vec![field.zero(), field.one()]);
            let oracle = BranchOracle {
                levels: vec![Level {
                    key: t_key.clone(),
                    mu,
                    delta: eps,
                    sigma: ResidueElement::ONE,
                    rep: Exps { pi: h, keys: Vec::new() },
                }],
            };
            return done_with_witness(
                t_power,
                segments,
                n,
                chain_length,
                ChainWitness { key: t_key, valuation: mu },
                oracle,
            );
        }
        let seg = PolygonSegment {
            slope: -mu,
            length: n,
            start: 0,
            start_val: v0.to_integer(),
        };
        let residual = cur.residual_polynomial(&seg)?;
        match residual_shape(&residual)? {
            ResidualShape::Split => {
                return done(
                    t_power,
                    segments,
                    ProfileVerdict::Reducible {
                        reason: SplitReason::SplitResidual { order: 1 },
                    },
                    chain_length,
                );
            }
            ResidualShape::Pure(rho, _m) => {
                if eps == 1 {
                    // classical shift t -> pi^h (rho + t), monic normalized
                    let lift = field.lift_residue(rho);
                    cur = cur.scale_by_pi_power_monic(h).shift(&lift);
                } else {
                    break (h, eps, rho);
                }
            }
        }
    };

    // higher order: chain of key polynomials
    let (h, eps, rho) = wall;
    let t_poly = LocalPolynomial::new(field.clone(), vec![field.zero(), field.one()]);
    let mut levels = vec![Level {
        key: t_poly,
        mu: Ratio::new(h, eps),
        delta: eps,
        sigma: rho,
        rep: Exps {
            pi: h,
            keys: Vec::new(),
        },
    }];
    let mut top = {
        // t^eps - rho_lift * pi^h
        let mut coeffs = vec![field.zero(); eps as usize + 1];
        coeffs[0] = field.lift_residue(rho).mul_pi_power(h).neg();
        coeffs[eps as usize] = field.one();
        LocalPolynomial::new(field.clone(), coeffs)
    };
    let mut den = eps;

    loop {
        chain_length += 1;
        if chain_length > CHAIN_BUDGET {
            return Err(Error::insufficient(
                "key chain budget exhausted without a decision",
                field.working_precision(),
            ));
        }
        let order = levels.len() + 1;
        let parts = cur.adic_expansion(&top)?;
        let m = parts.len() - 1;
        debug_assert_eq!(
            m * top.degree().unwrap(),
            n,
            "expansion length mismatch in the key chain"
        );
        let mut doms = Vec::with_capacity(parts.len());
        for p in &parts {
            doms.push(dominant(&levels, p)?);
        }
        // exact divisibility by the key
        let j_min = doms
            .iter()
            .position(|d| !matches!(d, Dom::Nothing))
            .expect("monic top part is nonzero");
        if j_min >= 1 {
            return done(
                t_power,
                segments,
                ProfileVerdict::Reducible {
                    reason: SplitReason::KeyDivides { order },
                },
                chain_length,
            );
        }
        let (v0, mu) = match branch_polygon(&doms, &field)? {
            BranchShape::Split => {
                return done(
                    t_power,
                    segments,
                    ProfileVerdict::Reducible {
                        reason: SplitReason::DistinctSlopes { order },
                    },
                    chain_length,
                );
            }
            BranchShape::Single { v0, mu } => (v0, mu),
        };
        if mu <= Ratio::from_integer(0) {
            return Err(Error::Internal("key chain lost slope positivity".into()));
        }
        den = lcm(den, *mu.denom());
        if den as usize == n {
            let mut chain = levels.clone();
            chain.push(Level {
                key: top.clone(),
                mu,
                delta: *(mu * Ratio::from_integer(group_den(&levels))).denom(),
                sigma: ResidueElement::ONE,
                rep: Exps::zero(levels.len()),
            });
            return done_with_witness(
                t_power,
                segments,
                n,
                chain_length,
                ChainWitness {
                    key: top,
                    valuation: mu,
                },
                BranchOracle { levels: chain },
            );
        }
        let g = group_den(&levels);
        let delta = *(mu * Ratio::from_integer(g)).denom();
        // residual along the grid 0, delta, ..., m; the endpoints are
        // lattice points, so delta divides m and v0 = mu * m
        debug_assert_eq!(m as i64 % delta, 0);
        debug_assert_eq!(v0, mu * Ratio::from_integer(m as i64));
        let steps = m as i64 / delta;
        let base_exp = canonical(&levels, v0);
        let step_exp = canonical(&levels, mu * Ratio::from_integer(delta));
        let kf = field.residue_field();
        let mut rcoeffs = Vec::with_capacity(steps as usize + 1);
        for r in 0..=steps {
            let j = (r * delta) as usize;
            let line = v0 - mu * Ratio::from_integer(r * delta);
            let c = match &doms[j] {
                Dom::Nothing => ResidueElement::ZERO,
                Dom::Bound(b) => {
                    if *b <= line {
                        return Err(Error::insufficient(
                            "imprecise coefficient exactly on the polygon line",
                            field.working_precision(),
                        ));
                    }
                    ResidueElement::ZERO
                }
                Dom::Val(v, u) => {
                    if *v > line {
                        ResidueElement::ZERO
                    } else {
                        // twist: residue of canonical(v_j) against the
                        // normalization canonical(v0) shifted r grid steps
                        let mut e = canonical(&levels, *v);
                        e.add_mul(&base_exp, -1);
                        e.add_mul(&step_exp, r);
                        kf.mul(*u, reduce(&levels, &field, e))
                    }
                }
            };
            rcoeffs.push(c);
        }
        let residual = FqPoly::new(kf, rcoeffs);
        match residual_shape(&residual)? {
            ResidualShape::Split => {
                return done(
                    t_power,
                    segments,
                    ProfileVerdict::Reducible {
                        reason: SplitReason::SplitResidual { order },
                    },
                    chain_length,
                );
            }
            ResidualShape::Pure(sigma, _k) => {
                debug_assert!(sigma != ResidueElement::ZERO);
                let lift = field.lift_residue(sigma);
                if delta == 1 {
                    let corr = rep_poly(&levels, &field, &canonical(&levels, mu))
                        .mul_scalar(&lift);
                    top = top.sub(&corr);
                } else {
                    let rep = canonical(&levels, mu * Ratio::from_integer(delta));
                    let corr = rep_poly(&levels, &field, &rep).mul_scalar(&lift);
                    let mut grown = LocalPolynomial::new(field.clone(), vec![field.one()]);
                    for _ in 0..delta {
                        grown = grown.mul(&top);
                    }
                    levels.push(Level {
                        key: top,
                        mu,
                        delta,
                        sigma,
                        rep,
                    });
                    top = grown.sub(&corr);
                }
            }
        }
    }
}

fn done(
    t_power: usize,
    segments: Vec<ProfileSegment>,
    verdict: ProfileVerdict,
    chain_length: usize,
) -> Result<FactorAnalysis> {
    Ok(FactorAnalysis {
        profile: FactorProfile {
            t_power,
            segments,
            verdict,
            chain_length,
        },
        witness: None,
        oracle: None,
    })
}

fn done_with_witness(
    t_power: usize,
    segments: Vec<ProfileSegment>,
    n: usize,
    chain_length: usize,
    witness: ChainWitness,
    oracle: BranchOracle,
) -> Result<FactorAnalysis> {
    Ok(FactorAnalysis {
        profile: FactorProfile {
            t_power,
            segments,
            verdict: ProfileVerdict::Irreducible { ramification: n },
            chain_length,
        },
        witness: Some(witness),
        oracle: Some(oracle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREC: i64 = 96;

    fn q2() -> LocalField {
        LocalField::unramified(1, PREC).unwrap()
    }

    fn octic(field: &LocalField, cs: &[i128]) -> LocalPolynomial {
        LocalPolynomial::from_integers(field, cs)
    }

    #[test]
    fn kernel_octic_of_the_wild_curve_is_irreducible() {
        // t^8 + 36 t^4 - 108, the kernel polynomial of y^2 = x^3 + 2x.
        // Hand-checked chain: slope 1/4, then key refinements t^4 - 2,
        // t^4 - 4t^2 - 2, ... until a slope with denominator 8 certifies
        // full ramification.
        let k = q2();
        let f = octic(&k, &[-108, 0, 0, 0, 36, 0, 0, 0, 1]);
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Irreducible { ramification: 8 }
        );
        let w = a.witness.unwrap();
        assert_eq!(*w.valuation.denom(), 8);
        assert_eq!(w.key.degree(), Some(4));
        // first-order evidence: one segment, roots of valuation 1/4,
        // residual (y + 1)^2
        assert_eq!(a.profile.segments.len(), 1);
        assert_eq!(a.profile.segments[0].root_valuation, (1, 4));
        assert_eq!(a.profile.segments[0].length, 8);
        assert_eq!(
            a.profile.segments[0].residual,
            vec![ResidualPart {
                degree: 1,
                multiplicity: 2
            }]
        );
    }

    #[test]
    fn pure_eighth_root_is_irreducible_at_first_order() {
        let k = q2();
        let f = octic(&k, &[-2, 0, 0, 0, 0, 0, 0, 0, 1]);
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Irreducible { ramification: 8 }
        );
        assert_eq!(a.profile.chain_length, 1);
        assert_eq!(a.witness.unwrap().valuation, Ratio::new(1, 8));
    }

    #[test]
    fn t_power_forces_a_reducible_verdict() {
        // kernel polynomial shape for a4 = 0: t^2 (t^6 + 108 a6)
        let k = q2();
        let f = octic(&k, &[0, 0, 108, 0, 0, 0, 0, 0, 1]);
        let a = factor_profile(&f).unwrap();
        assert_eq!(a.profile.t_power, 2);
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::TPower { power: 2 }
            }
        );
    }

    #[test]
    fn distinct_first_order_slopes_split() {
        // (t^4 - 2)(t^4 - 8): root valuations 1/4 and 3/4
        let k = q2();
        let a4 = octic(&k, &[-2, 0, 0, 0, 1]);
        let b4 = octic(&k, &[-8, 0, 0, 0, 1]);
        let f = a4.mul(&b4);
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::DistinctSlopes { order: 1 }
            }
        );
        assert_eq!(a.profile.segments.len(), 2);
    }

    #[test]
    fn split_residue_classes_over_a_bigger_residue_field() {
        // over the unramified quadratic field, 2w and 2w^2 are unit
        // multiples of 2 with different residues; the two quartics stay
        // in one polygon segment but the residual has two distinct roots
        let k = LocalField::unramified(2, PREC).unwrap();
        let w = k.omega();
        let w2 = w.mul(&w);
        let two = k.integer(2);
        let mut c1 = vec![k.zero(); 5];
        c1[0] = two.mul(&w).neg();
        c1[4] = k.one();
        let mut c2 = vec![k.zero(); 5];
        c2[0] = two.mul(&w2).neg();
        c2[4] = k.one();
        let f = LocalPolynomial::new(k.clone(), c1).mul(&LocalPolynomial::new(k.clone(), c2));
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::SplitResidual { order: 1 }
            }
        );
    }

    #[test]
    fn product_with_the_initial_key_splits_at_order_two() {
        // (t^4 - 2)(t^4 - 6): both slope 1/4, both residual root 1. The
        // chain's first key t^4 - 2 divides the product, so the low
        // expansion column cancels far below the rest of the polygon and
        // certifies an extra steep segment.
        let k = q2();
        let f = octic(&k, &[-2, 0, 0, 0, 1]).mul(&octic(&k, &[-6, 0, 0, 0, 1]));
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::DistinctSlopes { order: 2 }
            }
        );
    }

    #[test]
    fn second_order_polygon_separates_close_quartics() {
        // (t^4 - 4t - 2)(t^4 - 4t^3 - 2): same first-order data, but the
        // key t^4 - 2 evaluates with valuations 9/4 vs 11/4 on the two
        // clusters, so the order-2 polygon has two segments
        let k = q2();
        let g = octic(&k, &[-2, -4, 0, 0, 1]);
        let h = octic(&k, &[-2, 0, 0, -4, 1]);
        let f = g.mul(&h);
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::DistinctSlopes { order: 2 }
            }
        );
    }

    #[test]
    fn sign_twins_split_after_one_refinement() {
        // (t^4 - 4t - 2)(t^4 + 4t - 2): residues cannot see the sign, but
        // one refinement turns the key into the first factor, whose
        // cancellation in the low column then certifies the split
        let k = q2();
        let g = octic(&k, &[-2, -4, 0, 0, 1]);
        let h = octic(&k, &[-2, 4, 0, 0, 1]);
        let f = g.mul(&h);
        let a = factor_profile(&f).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Reducible {
                reason: SplitReason::DistinctSlopes { order: 2 }
            }
        );
    }

    #[test]
    fn unit_shift_loop_reaches_fractional_slopes() {
        // f(t) = (t - 1)^8 - 2: roots are 1 + 2^(1/8); the first polygon
        // sees slope 0, one shift moves to t^8 - 2
        let k = q2();
        let shifted = octic(&k, &[-2, 0, 0, 0, 0, 0, 0, 0, 1]).shift(&k.integer(-1));
        let a = factor_profile(&shifted).unwrap();
        assert_eq!(
            a.profile.verdict,
            ProfileVerdict::Irreducible { ramification: 8 }
        );
        assert!(a.profile.chain_length >= 2);
    }

    #[test]
    fn unramified_octic_splits_over_the_unramified_closure() {
        // an irreducible-mod-2 octic generates the unramified degree-8
        // extension, which splits completely over the closure; the level-0
        // residual is irreducible of degree 8, hence a certified split
        let k = q2();
        // x^8 + x^4 + x^3 + x + 1 is irreducible over F2 (degree-8 default
        // modulus pattern 0x11b without the x^9 term: verify by residual)
        let f = octic(&k, &[1, 1, 0, 1, 1, 0, 0, 0, 1]);
        let a = factor_profile(&f).unwrap();
        match &a.profile.verdict {
            ProfileVerdict::Reducible {
                reason: SplitReason::SplitResidual { order: 1 },
            } => {}
            other => panic!("expected a first-order residual split, got {other:?}"),
        }
    }
}
