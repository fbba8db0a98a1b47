//! Fair many-to-many matching between two sides of a market.

pub mod error;
pub mod experiments;
pub mod fairness;
pub mod generate;
pub mod instance;
pub mod io;
pub mod matchers;
pub mod paperbench;
pub mod ratio;
pub mod search;

pub use error::{Error, LowerBound, Result};
pub use instance::{derive_ordinal, matching_status, Instance, Matching, MatchingStatus, PreferenceProfile, RawInstance, Side};
pub use ratio::Ratio;
