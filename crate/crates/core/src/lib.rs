//! Dissimilarity self-organizing maps with exact accelerated representation.
//!
//! The batch DSOM alternates an affectation phase (each individual goes to the
//! node with the closest prototype) with a representation phase (each node
//! picks the data point minimizing its neighborhood-weighted dissimilarity
//! sum). The representation phase dominates the cost; [`representation`]
//! offers a naive search, a partial-sums search and branch-and-bound variants
//! that all return identical prototypes.

pub mod dissim;
pub mod error;
pub mod experiment;
pub mod representation;
pub mod som;
pub mod topology;

pub use dissim::{levenshtein, levenshtein_matrix, sq_euclidean_matrix, DissimilarityMatrix};
pub use error::{Error, Result};
pub use experiment::{
    gen_uniform, run_experiment, verify_equivalence, DatasetSpec, ExperimentConfig, RunReport,
    Verdict,
};
pub use representation::{
    parse_strategy_list, BoundKind, RepresentationPhase, RepresentationStats, Representer, Strategy,
};
pub use som::{affect_all, energy, init_prototypes, run_dsom, run_dsom_with, MapState, RunOutput};
pub use topology::{Layout, MapGraph, NeighborhoodSchedule, NeighborhoodTable};
