//! Capability identification over Function Decomposition (FD) graphs.
//!
//! The pipeline runs graph → basic slice sets → metrics → composite
//! selection. [`synthesis`] covers the bottom-up construction of core
//! function sets from directive/function associations.

pub mod composite;
pub mod corpus;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod par;
pub mod report;
pub mod slicer;
pub mod synthesis;

pub use composite::{
    implementation_order, rank_slices, refine_slice, select_capability_set, CapabilityReport,
    CompositeError, GuardMode, Guards, RankSummary, Ranking, RejectReason, SelectOptions,
};
pub use graph::{
    parse_fd_graph, Diagnostic, EdgeKind, FdEdge, FdGraph, FdNode, GraphDocument, GraphError,
    NodeId, NodeKind, Severity, ValidationReport,
};
pub use metrics::{
    directive_coupling, node_cohesion, node_coupling, pearson_correlation, relevance_from_raw,
    slice_statistics, MetricsError, Relevance, SliceMetrics,
};
pub use par::Execution;
pub use slicer::{
    enumerate_basic_slice_sets, enumerate_permutations, ordered_slice_count, orphan_nodes,
    resolve_shared_directives, BasicSliceSet, Slice, SliceError, DEFAULT_MAX_BASIC_SETS,
};
pub use synthesis::{core_function_sets, CoreFunctionSet, SynthError, SynthInput};
