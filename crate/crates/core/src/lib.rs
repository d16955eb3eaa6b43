//! Combinatorial core for annulus-like wandering regions of branched
//! self-coverings of surfaces.
//!
//! A region is modelled by its *atom graph*: the decomposition of the region
//! into compact bands (atoms) between integer level curves of a Lyapunov
//! coordinate that drops by one under the map. Atoms are glued along circles,
//! carry covering data onto their images, and may contain singular
//! (branch) points. On top of the atom graph the crate builds the oriented
//! Reeb tree of the level decomposition and classifies the ideal boundary
//! (the space of ends) on the attractor and repeller sides.
//!
//! The crate is `no_std` (with `alloc`); everything here is exact integer
//! combinatorics. Numerical companions live in the `wander-atlas` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod engine;
pub mod iso;
pub mod model;
pub mod reeb;

pub use engine::{
    chain_check, classify_types, decompose, generate, infeasibility_scan, mark_main_auxiliary,
    validate, ChainError, ChainVerdict, Decomposition, GenerateError, InfeasibleFinding, Role,
    RoleError, TypeReport, ValidationReport,
};
pub use model::{
    Atom, AtomGraph, AtomId, Circle, CircleId, EventSide, MapSpec, SingularEvent, SingularPoint,
};
pub use reeb::{build_reeb, classify, enumerate_ends, export_dot, EndCensus, EndSpace, ReebTree};
