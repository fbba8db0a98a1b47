//! Constructive matchers.

pub mod classic;
pub mod d2;
pub mod ordering;
pub mod restricted;
pub mod three_phase;
pub mod weak;

pub use classic::classic_round_robin;
pub use d2::{d2_dmms_def1, d2_dmms_def1_for};
pub use ordering::{gcd, mod_inverse, round_robin_ordering, RoundRobinOrdering};
pub use restricted::{
    from_rank_space, general_rr_with, general_sd_def1, restricted_rr, restricted_rr_coprime, restricted_rr_lead_agent,
};
pub use three_phase::three_phase_rr;
pub use weak::weak_mms_matching;
