//! Equilibrium computation for linear-Gaussian estimation with
//! self-interested sensors.
//!
//! A receiver wants the least-mean-square estimate of a Gaussian state `x`,
//! but each measurement passes through a sensor that prefers the receiver to
//! track `x + theta` for a private Gaussian bias `theta`. With the sensor
//! moving first (declaring an affine messaging policy the receiver can see),
//! the resulting leader-follower equilibria reduce to small trust-region
//! problems solved by symmetric eigendecomposition. This crate implements
//! those reductions and the surrounding estimation machinery:
//!
//! - [`gaussian`]: validated covariance containers, eigen/LMS/Schur
//!   primitives, seeded sampling.
//! - [`static_single`]: one sensor, one shot, optional receiver side channel.
//! - [`dynamic`]: the time-varying filtering analogue, with a per-step
//!   equilibrium embedded in a predict/side-update/sensor-update filter.
//! - [`multi_sync`]: many sensors reporting simultaneously, symmetric
//!   equilibrium and best-response machinery.
//! - [`herding`]: the cooperative-sensor variant of the synchronous game and
//!   its comparison baselines.
//! - [`async_seq`]: sensors reporting one at a time, each seeing the
//!   transcript so far.
//!
//! All solvers are deterministic; every Monte Carlo helper takes an explicit
//! seed and derives independent sub-streams from it, so identical inputs
//! reproduce identical outputs.

pub mod async_seq;
pub mod dynamic;
pub mod error;
pub mod gaussian;
pub mod herding;
pub mod multi_sync;
pub mod static_single;

pub use async_seq::{
    AsyncSyncRow, SequentialConfig, SequentialEquilibrium, SequentialMc, SequentialStep,
    StepPolicy,
};
pub use error::{Error, Result};
pub use gaussian::{Block, EigPair, JointGaussian, LmsGain, SymMatrix};
pub use herding::{BreakFromHerdWitness, HerdingReport};
pub use multi_sync::{MultiSensorConfig, SensorPolicy, SymmetricEquilibrium};
pub use static_single::{AffineSensorPolicy, EquilibriumReport, TrustRegionProblem};
