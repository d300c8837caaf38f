//! Test support: random scene-graph generators and brute-force reference
//! implementations of the layout problem.
//!
//! The reference code only shares data types with the library. Edge
//! predicates, cluster extents and the search are written from scratch here so
//! that agreement between the two is meaningful.

pub mod assets;
pub mod fixtures;
pub mod gen;
pub mod oracle;
pub mod scenes;
pub mod script;

pub use gen::{random_graph, GraphParams};
pub use oracle::{Oracle, Verdict};
