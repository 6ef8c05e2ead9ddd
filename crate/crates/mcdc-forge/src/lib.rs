//! Test-data generation for class models constrained with OCL.
//!
//! The pipeline: parse a class model and its constraints, reformulate each
//! constraint into the variants required by modified condition/decision
//! coverage, then solve each variant into a concrete object configuration
//! with local search. Search can be seeded from a repository of previously
//! solved variants and from constraint-derived reduced value ranges, and a
//! benchmark harness compares the solver strategies statistically.

pub mod bench;
pub mod cbr;
pub mod fitness;
mod hash;
pub mod mcdc;
pub mod model;
pub mod ocl;
pub mod ranges;
pub mod search;

pub use mcdc::McdcVariant;
pub use model::{AttrType, ClassModel, ObjectConfiguration, Value};
pub use ocl::{OclConstraint, OclExpr};
