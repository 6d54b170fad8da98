//! Sample reweighting for bias mitigation.
//!
//! Training rows are weighted per (sensitive group, class) slot. Weights are
//! either equal, computed from the data ([`reweight::deterministic_weights`]),
//! or evolved by a two-objective genetic algorithm ([`ga`]). Weighting
//! strategies are compared by the hypervolume of their test-set
//! (predictive, fairness) Pareto fronts ([`pareto`]) and by nonparametric
//! significance tests ([`stats`]).

pub mod dataset;
pub mod ga;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod pareto;
pub mod reweight;
pub mod seed;
pub mod stats;
