//! Text-to-layout interior scene synthesis.
//!
//! A free-form design brief goes through a chain of language-model agents that
//! propose objects and their relative placements as a [`scene::SceneGraph`].
//! The graph is repaired by deterministic rules in [`corrector`], laid out by
//! the depth-grouped backtracking solver in [`solver`], furnished with assets
//! from an embedding index ([`retrieval`]) and written out as an inspectable,
//! replayable bundle ([`compose`]). [`eval`] scores the results.

pub mod agents;
pub mod compose;
pub mod corrector;
pub mod eval;
pub mod retrieval;
pub mod schema;
pub mod scene;
pub mod solver;

pub use scene::SceneError;
