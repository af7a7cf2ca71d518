//! Completion and structural analysis of order-4 latin hypercuboids.
//!
//! The crate models n-ary quasigroups of order 4 and their MDS-code graphs,
//! completes partial tables (latin hypercuboids) to full latin hypercubes,
//! classifies quasigroups structurally (reducibility, canonical
//! decomposition, semilinearity), and reproduces the completability facts by
//! exhaustive and seeded sampled search at desk scale.

pub mod algebra;
pub mod completion;
pub mod fileio;
pub mod qcore;
pub mod structure;
pub mod verify;

pub use qcore::{
    hamming_distance, pointwise_disjoint, CodeError, CodeSet, HypercuboidTable, QuasigroupTable,
    Shape, TableError, ValidationResult,
};
