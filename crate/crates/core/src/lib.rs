//! Non-solutions of mixed equations over free groups.
//!
//! The crate evaluates words of `G * <x>` over the free group `F_k`, runs
//! seeded random walks, and certifies that a candidate `g` is a non-solution
//! (for one word, or for every word whose constants lie in a ball) using
//! exact overlap computations in the Cayley tree.

pub mod engine;
pub mod error;
pub mod geom;
pub mod group;
pub mod mixed;
pub mod par;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
pub use group::{BackendSpec, CayleyGroup, GroupElement};
pub use mixed::MixedWord;

/// Default element-count budget for enumeration-backed operations.
pub const DEFAULT_BUDGET: u64 = 1_000_000;
