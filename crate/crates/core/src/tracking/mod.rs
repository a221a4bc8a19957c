//! Density local-control: per-time-step fixed-point construction of the
//! external potential that makes a system follow a prescribed density, plus
//! the scalar (dipole, observable) tracking variants.

mod scalar;
mod target;
mod tracker;

pub use scalar::{
    population_climb_field, run_population_climb, track_dipole, track_scalar, DipoleTarget,
    EpsilonTrajectory, ScalarOp, ScalarTarget,
};
pub use target::{
    make_target_split2, make_target_split4, make_target_translate, CosinePath, DensityTarget,
    Path, SampledTarget, ShiftedSumTarget,
};
pub use tracker::{
    replay, track_density, track_density_system, FieldTrajectory, InteractingSystem,
    TrackedStep, TrackedSystem, TrackingConfig, TrackingOutcome,
};
