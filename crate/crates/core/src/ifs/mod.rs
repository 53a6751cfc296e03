//! Parametrized interval IFS: maps, families and constructors.

pub mod constructors;
pub mod family;
pub mod map;

pub use constructors::{
    bernoulli_convolution_family, linear_fractional_family, mobius_contraction_norm, mobius_family,
    vertical_translate_family, EntryParam,
};
pub use family::{
    AssumptionViolation, AssumptionsReport, CylinderInterval, HolderEstimates, IFSFamily, Interval,
    ParamBox, Projection, ProjectionGradient,
};
pub use map::{compose, Homography, MapSpec, ParamExpr};
