//! Zero-temperature dynamics and entanglement entropy of the Ohmic
//! spin-boson model, computed from a polaron-type unitary transformation,
//! together with independent numerical oracles for every analytic step.
//!
//! Every numerical type is generic over [`Real`] (`f64` or `f32`); the
//! aliases below fix the common choices.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod io;
pub mod model;
pub mod oracles;
pub mod quadrature;
pub mod scalar;
pub mod self_energy;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = model::ModelParams<f64>;
pub type Model = model::RenormalizedModel<f64>;
pub type Evaluator = self_energy::SelfEnergy<f64>;
pub type Regime = self_energy::RegimeReport<f64>;
pub type Dynamics = dynamics::BlochDynamics<f64>;
pub type Trajectory = dynamics::BlochTrajectory<f64>;
pub type Entropy = entropy::EntropySeries<f64>;
pub type Kernel = oracles::MemoryKernel<f64>;
pub type Bath = oracles::DiscretizedBath<f64>;

pub type Params32 = model::ModelParams<f32>;
pub type Model32 = model::RenormalizedModel<f32>;
pub type Evaluator32 = self_energy::SelfEnergy<f32>;
pub type Dynamics32 = dynamics::BlochDynamics<f32>;
pub type Trajectory32 = dynamics::BlochTrajectory<f32>;
