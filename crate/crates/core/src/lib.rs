//! Migration of relational databases into property knowledge graphs, with
//! translation of conjunctive SQL queries into a pattern-based Cypher subset
//! and differential verification of the result.
//!
//! The pipeline:
//!
//! 1. [`relational`] ingests schema dumps, CSV bundles, and key manifests,
//!    and classifies tables as entity or linking from their key constraints.
//! 2. [`repair`] fixes missing primary keys, missing or incorrect foreign
//!    keys, duplicate rows, empty tables, and label-namespace collisions.
//! 3. [`construct`] builds the in-memory [`graph`] store: entity rows become
//!    labeled nodes, linking rows become typed edges, and remaining foreign
//!    keys materialize as `*_HAS_*` edges.
//! 4. [`sql`] parses the conjunctive SQL subset; [`cypher`] rewrites parse
//!    trees into pattern-based Cypher.
//! 5. [`exec`] runs both query forms against both stores; [`eval`] computes
//!    execution accuracy and valid score and drives the consistency
//!    check-and-repair loop.
//!
//! [`workload`] loads benchmark-style workloads and generates randomized
//! desk-scale instances for differential testing; [`pipeline`] binds the
//! passes together.

pub mod construct;
pub mod cypher;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod pipeline;
pub mod relational;
pub mod repair;
pub mod sql;
pub mod value;
pub mod workload;

pub use value::{Value, ValueKey};
