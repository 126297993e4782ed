//! Contours, chains and clusters on a partition of `[-T, T]` into `N`
//! intervals of length `b`, their activities, and the polymer expansion of the
//! partition function.
//!
//! Intervals are indexed `0..N` and partition points (time-points) `0..=N`;
//! interval `k` joins time-points `k` and `k + 1`.

mod activity;
mod bounds;
mod enumerate;
mod expansion;
mod identity;
mod polymer;

pub use activity::{estimate_activities_shared, estimate_activity, estimate_unchecked, kappa_eval, sample_chi, write_activity_csv, ActivityBatch, ActivityEstimate, ActivityModel, ChiSample};
pub use bounds::{calibrate_epsilon, cluster_bound, convergence_diagnostic, epsilon_from_lambda, fit_c, pair_decay, tree_graph_bound_check, tree_graph_random, ConvergenceParams, ConvergenceReport, ConvergenceRow, TreeGraphCheck};
pub use enumerate::{enumerate_clusters, enumerate_components};
pub use expansion::{correlation_f, log_z_series, timepoints_of_intervals, ursell, z_cluster_sum, z_collections, z_excluding, z_gradient, z_standard_error, Polymer, ZSum};
pub use identity::{cluster_sum_estimate, direct_spec, z_identity_check, ClusterSum, ZIdentityReport};
pub use polymer::{decompose, Chain, Cluster, Component, ComponentKind, Contour, Partition1D};
