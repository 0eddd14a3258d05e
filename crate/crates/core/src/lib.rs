//! Semi-relaxed optimal transport: scaling solvers, rounding onto the
//! transport polytope, exact oracles and closed-form convergence bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cost;
pub mod divergence;
pub mod error;
pub mod exact;
pub mod harness;
pub mod instance;
pub mod io;
pub mod measure;
pub mod plan;
pub mod rounding;
pub mod solvers;

pub use cost::CostMatrix;
pub use error::{Error, Result};
pub use instance::{generate_instance, GeneratorParams, ProblemInstance};
pub use measure::DiscreteMeasure;
pub use plan::TransportPlan;
