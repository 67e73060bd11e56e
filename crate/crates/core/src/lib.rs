//! Random-cluster model on n×n boxes of the square lattice.
//!
//! Exact measures on small instances, heat-bath Glauber dynamics with the
//! identity coupling, exact sampling by monotone coupling from the past,
//! planar duality, and Monte Carlo estimators for connectivity decay, spatial
//! mixing and coupling-time scaling.

pub mod acceptance;
pub mod boundary;
pub mod config;
mod dsu;
pub mod duality;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod oracle;
pub mod stats;

pub use acceptance::{CriterionReport, Suite};
pub use boundary::{induced_condition, BoundaryCondition, InducedCondition, Wiring};
pub use config::{components, connected, gamma_region, is_cut_edge, ConnectivityView, CutSearch, RcConfig};
pub use duality::{critical_point, dual_config, dual_p, sample_via_dual, DualBox};
pub use dynamics::{
    cftp_coupled, cftp_sample, continuous_schedule, coupling_time, CftpOutcome, Chain, CouplingReport, DrawStream,
    Dynamics, RcParams, TimeMode, UpdateDraw, CFTP_DEFAULT_CAP,
};
pub use error::{Error, Result};
pub use estimators::{
    axis_pairs, estimate_decay, estimate_spatial_mixing, estimate_spatial_mixing_with, fit_mixing_scaling,
    sandwich_replicas, sandwich_run, DecayEstimate, PairGroup, Sampler, SandwichSummary, ScalingFit, SpatialBackend,
    SpatialEstimate, SpatialOptions,
};
pub use lattice::{BoxRegion, DualGraph, EdgeGraph, EdgeId, Lattice, Rect, Side, VertexId};
pub use oracle::{exact_measure, transition_matrix, tv_curve, Conditioning, ExactMeasure, TransitionMatrix};
