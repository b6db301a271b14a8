//! Exact 2-adic arithmetic and classification of the mod-3 Galois
//! representation of an elliptic curve with wild (non-abelian) inertia.
//!
//! The library is organized bottom-up:
//! residue fields of characteristic 2, polynomials over them, 2-adic local
//! fields with exact valuation bookkeeping, quotient algebras for field
//! towers, Newton-polygon factor profiles, the curve-model pipeline, and
//! finally the finite matrix groups over F_3 together with their character
//! tables and the classifier that ties everything together.

pub mod curve;
pub mod error;
pub mod fqpoly;
pub mod local;
pub mod matrix;
pub mod poly;
pub mod profile;
pub mod residue;
pub mod tower;

pub use error::{Error, Result};
pub use fqpoly::FqPoly;
pub use local::{LocalElement, LocalField, UnramifiedMap};
pub use poly::{LocalPolynomial, PolygonSegment};
pub use profile::{BranchOracle, ChainWitness, FactorAnalysis, FactorProfile, ProfileVerdict, SplitReason};
pub use residue::{ResidueElement, ResidueField};
pub use tower::{AlgebraElement, CubicElement, CubicLayer, EisensteinModel, QuotientAlgebra};
