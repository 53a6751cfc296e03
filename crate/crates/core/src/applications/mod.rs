//! Place-dependent Bernoulli convolutions, the slanted baker map and
//! Furstenberg-like measures.

pub mod baker;
pub mod bc;
pub mod chaos;
pub mod furstenberg;
pub mod stats;

pub use baker::{baker_orbit, baker_vs_bc, ks_baker_bc, BakerOrbit, BakerSpec};
pub use bc::{
    bc_bounds, bc_chaos_game, bc_chaos_game_stream, bc_entropy_lyapunov, bc_region_classify, bc_region_scan,
    stationarity_check, stationarity_residual, BcBounds, BcErgodic, BcSamples, PlaceDepBC, RegionCell, RegionClass,
    TRANSVERSALITY_INTERVAL,
};
pub use chaos::{cell_seed, ifs_chaos_game, stream_rng};
pub use furstenberg::{
    cocycle_lyapunov, cocycle_lyapunov_uniform, furstenberg_dimension, furstenberg_gibbs, furstenberg_gibbs_norm,
    furstenberg_gibbs_operator, furstenberg_pressure, CocycleLyapunov, FurstenbergDimension, FurstenbergGibbs,
    FurstenbergPressure, FurstenbergSpec,
};
pub use stats::{ks_two_sample, ks_uniform, MeanEstimate, Welford};
