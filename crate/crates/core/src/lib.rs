//! Core of the rating platform: the like/dislike ledger, gas metering, a
//! small proof-of-work chain that carries ratings, hashed identities and
//! input validation.

pub mod chain;
pub mod digest;
pub mod gas;
pub mod identity;
pub mod ledger;
pub mod validation;

pub use digest::Hash32;
pub use ledger::{LedgerState, RateOutcome, ResourceId, ResourceRating, UserId, Vote};
