//! Exact and empirical engine for weighted zero-sum problems over `Z_n`.
//!
//! - [`group`]: residues, sequences, weight sets.
//! - [`decision`]: weighted Davenport / Erdős Z-sequence decisions with witnesses.
//! - [`invariants`]: exhaustive computation of the associated constants.
//! - [`constructions`]: certified extremal sequences.
//! - [`sumsets`]: subset sums, sumsets and additive-combinatorics law checks.
//! - [`montecarlo`]: seeded random-sequence experiments and exact formulas.

pub mod bits;
pub mod constructions;
pub mod decision;
pub mod error;
pub mod group;
pub mod invariants;
pub mod montecarlo;
pub mod sumsets;

pub use error::{Error, Result};
pub use group::{Modulus, Residue, WeightKind, WeightSet, WitnessVector, ZnSequence};

/// Schema tag carried by every serialized payload.
pub const SCHEMA: &str = "zerosum/1";
