//! Numerical machinery for locating the condensation transition
//! d_{k,cond} in random graph k-coloring: random-graph ensembles with
//! exact small-instance oracles, the sigma-core, Warning Propagation and
//! reduced graphs, decorated trees with exact counting and the Bethe free
//! entropy, the multi-type branching process, scalar/vector/distributional
//! fixed points, and the Sigma_k root finder.

#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

pub mod cluster;
pub mod dtree;
pub mod error;
pub mod exact;
pub mod fixpoint;
pub mod graph;
pub mod gw;
pub mod popdyn;
pub mod rng;
pub mod sigma_core;
pub mod wp;

pub use cluster::{cluster_brute, compare_tree_stats, predicates, sandwich_check, ClusterResult};
pub use dtree::{
    bethe_free_entropy, bp_merge, bp_merge_restricted, dp_count, DecoratedTree, SimplexPoint,
    VertexType,
};
pub use error::{Error, Result};
pub use exact::{count_colorings_exact, potts_partition, ColoringCount};
pub use fixpoint::{
    find_dcond, iterate_vector_f, scalar_fixed_point, sigma, sigma_curve, theorem_interval,
    DcondResult, ScalarFixedPoint, SigmaCurve, SigmaEstimate,
};
pub use graph::{
    forb, gen_gnm, gen_gnp, gen_planted_m, gen_planted_p, monochrome_edges, overlap,
    prob_proper_gnm, Coloring, Graph, OverlapMatrix,
};
pub use gw::{
    estimate_free_entropy, mean_matrix, params_at_fixed_point, q_table, sample_tree, GwParams,
    MeanMatrix, TypeCompat,
};
pub use popdyn::{bethe_functional, hard_fields, popdyn_run, HardFields, Population, PopdynReport};
pub use sigma_core::{core, CoreResult};
pub use wp::{
    log_legal_colorings_reduced, reduced_graph, wp_run, ColorLists, ReduceMode, ReducedGraph,
    WpState, WpVariant,
};
