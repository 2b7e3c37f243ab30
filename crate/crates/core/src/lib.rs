//! Biased preferential attachment networks, multi-hop referral simulation
//! and the closed-form bias thresholds of the model.

pub mod bpa;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod loader;
pub mod recursion;
pub mod referral;
pub mod stats;
pub mod theory;

pub use bpa::{generate_bpa, sample_degree_proportional, AlphaTrace, BpaParams, DegreeSampler};
pub use error::{BpaError, ExperimentError, GraphError, ReferralError, TheoryError};
pub use graph::{Color, GroupStats, KHopCount, KHopCounter, LabeledGraph, NodeId};
pub use loader::{load_edge_list, LabelSpec, LoadReport};
pub use recursion::{recursion_oracle, sequence_integrator, RecursionTrace};
pub use referral::{
    gain_ratios, sample_attributes, simulate, simulate_acceptance, simulate_linear, simulate_popularity,
    simulate_random, GainLedger, NodeAttributes, StrategyKind,
};
pub use stats::Summary;
pub use theory::{
    betas, case_probabilities, one_hop_ratio, one_hop_share, solve_alpha_star, threshold_predicate, two_hop_ratio,
    Betas, CaseProbabilities, TheoryPoint,
};
