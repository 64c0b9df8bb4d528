//! `ppv`: a small probabilistic programming language with an executable
//! density semantics, a score-estimator SVI engine, and static analyses that
//! check the assumptions SVI makes on model-guide pairs.

pub mod absint;
pub mod analyses;
pub mod cli;
pub mod density;
pub mod lang;
pub mod rng;
pub mod svi;
pub mod zone;
