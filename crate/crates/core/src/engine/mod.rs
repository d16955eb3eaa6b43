//! Atom-graph engine: generation from finite map presentations, rule-by-rule
//! validation, and the structural analyses (boundary types, main/auxiliary
//! roles, chains, trunk/stump/root decomposition, infeasibility scan).

mod analysis;
mod generate;
mod validate;

pub use analysis::{
    chain_check, classify_types, decompose, infeasibility_scan, mark_main_auxiliary, ChainError,
    ChainVerdict, Decomposition, InfeasibleFinding, Role, RoleError, TransportViolation,
    TypeReport,
};
pub use generate::{generate, GenerateError};
pub use validate::{validate, RuleResult, ValidationReport};
