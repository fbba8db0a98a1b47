//! Named instances and verifiers for the existence and impossibility claims.

pub mod claims;
pub mod instances;

pub use claims::{
    build_counterexample, verify_claim, ClaimId, Counterexample, VerificationResult, Verdict, VerifyOptions,
};
