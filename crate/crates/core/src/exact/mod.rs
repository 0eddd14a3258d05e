//! Ground-truth oracles: exact transport LP, brute force for tiny problems and
//! a continuation reference for the unregularized semi-relaxed optimum.

mod brute;
mod network_simplex;
mod reference;

pub use brute::{brute_force_ot_uniform, BRUTE_FORCE_MAX_N};
pub use network_simplex::{solve_ot_exact, LpSolution, LpStatus};
pub use reference::{kl_srot_reference, KlSrotReference, ReferenceConfig, ReferenceStage};
