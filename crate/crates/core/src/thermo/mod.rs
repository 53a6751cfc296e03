//! Pressure, potentials, Gibbs measures and ergodic averages.

pub mod ergodic;
pub mod gibbs;
pub mod modulus;
pub mod potential;
pub mod pressure;

pub use ergodic::{entropy_estimate, equilibrium_check, ergodic_stats, lyapunov_estimate, DepthEstimate, EquilibriumCheck, ErgodicStats};
pub use gibbs::{default_truncation_depth, gibbs_ratio, transfer_operator_solve, EigenData, GibbsApproximation};
pub use modulus::{fit_slope, max_log_ratio, measure_modulus, measure_modulus_sweep, ModulusEstimate, ModulusSweep};
pub use potential::{birkhoff_sum, birkhoff_sums, potential_pressure, AffineProbability, BirkhoffSum, Potential, PotentialKind};
pub use pressure::{conformal_similarity_dimension, log_lengths, pressure, solve_similarity_dimension, DimensionEstimate, PressureEstimate};
