//! Asynchronous gossip Nash-equilibrium seeking for games whose costs are
//! only partially coupled.
//!
//! An interference graph says whose actions enter whose cost. Players keep
//! estimates only of their interference neighbors and refresh them by
//! pairwise gossip over a communication graph, which may be pruned down to
//! a maximal triangle-free spanning subgraph of the interference graph.
//!
//! * [`graph`]: graph validation and the triangle-free construction.
//! * [`game`]: costs, pseudo-gradient, projections, regularity estimates.
//! * [`indexing`]: the stacked estimate space and its gossip matrices.
//! * [`engine`]: the simulator, both the graphical and fully coupled variants.
//! * [`spectral`]: contraction factor, rate bounds, timing model.
//! * [`oracle`]: reference equilibria.
//! * [`config`], [`bench`] and [`commands`]: run configuration, the wireless ad-hoc
//!   network benchmark, and report/trace emission used by the CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod commands;
pub mod config;
pub mod engine;
pub mod game;
pub mod graph;
pub mod indexing;
pub mod oracle;
pub mod spectral;

pub use engine::{run, run_full_coupling, Engine, InitRule, RunOptions, RunTrace, StepSizePolicy};
pub use game::{ActionInterval, CostModel, GameSpec, WanetParams};
pub use graph::{
    maximal_triangle_free_spanning_subgraph, validate_communication, validate_interference, CommGraph, EdgeOrder,
    InterferenceGraph, PlayerGraph,
};
pub use indexing::{IndexMap, PairDistribution};
