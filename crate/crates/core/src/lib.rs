//! Split-step quantum walks with inhomogeneous coins: simulation, spectral
//! analysis of the homogeneous limit, scattering data and the weak limit law
//! of `X_t / t`.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound_states;
pub mod coin;
pub mod config;
pub mod error;
pub mod evolution;
pub mod field;
pub mod io;
pub mod kitagawa;
pub mod limit_law;
pub mod pipeline;
pub mod registry;
pub mod scattering;
pub mod scenarios;
pub mod spectral;
pub mod stats;

pub use coin::{CoinMatrix, ShiftParams, Spinor};
pub use error::{Error, Result};
pub use evolution::{Direction, LocalTransfer, PositionDistribution, WalkerState, Window};
pub use field::{Asymptotics, CoinField, CoinProfile, Decay, ModelTag};
pub use spectral::{BandModel, DispersionData};
