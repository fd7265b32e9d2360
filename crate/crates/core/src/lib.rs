//! Simulation library for bounded-delay packet scheduling.
//!
//! Unit packets arrive over discrete time, each with a release time, a
//! deadline and a value; one packet may be sent per step. The crate provides
//! the MG online policy (with EDF_alpha and Greedy as special cases), an exact
//! offline optimum, seeded instance generators including an adversarial
//! lower-bound family, and a harness that measures empirical competitive
//! ratios.
//!
//! Everything is generic over the value type (`f32` or `f64`, see
//! [`Scalar`]); the `*64` aliases below fix it to `f64`, which is what the
//! file formats and the CLI use.

pub mod analysis;
pub mod error;
pub mod generators;
pub mod io;
pub mod model;
pub mod offline;
pub mod policies;
pub mod provisional;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{
    classify_variants, validate_instance, Instance, InstanceMeta, Packet, TimeBound, Variant,
    VariantClass,
};
pub use offline::{
    brute_force_optimal, empirical_ratio, offline_optimal, OffSchedule, RatioReport,
};
pub use policies::{simulate, PolicyKind, PolicyParams, SimulationTrace};
pub use provisional::{optimal_provisional_schedule, ProvisionalSchedule};
pub use scalar::{Scalar, PHI, PHI_SQUARED};

pub type Packet64 = Packet<f64>;
pub type Instance64 = Instance<f64>;
pub type PolicyParams64 = PolicyParams<f64>;
pub type SimulationTrace64 = SimulationTrace<f64>;
pub type ProvisionalSchedule64 = ProvisionalSchedule<f64>;
pub type OffSchedule64 = OffSchedule<f64>;
pub type RatioReport64 = RatioReport<f64>;

pub type Packet32 = Packet<f32>;
pub type Instance32 = Instance<f32>;
pub type PolicyParams32 = PolicyParams<f32>;
