//! Exhaustive search for matchings meeting envy and utility constraints.

pub mod alpha;
pub mod engine;
pub mod spec;

pub use alpha::max_dmms_alpha;
pub use engine::{enumerate_complete_matchings, find_matching, find_matching_with, for_each_solution};
pub use spec::{
    EnvyConstraint, SearchOptions, SearchOutcome, SearchSpec, SearchStatus, UtilityFloor, DEFAULT_NODE_BUDGET,
    DEFAULT_TIME_BUDGET_SECS,
};
