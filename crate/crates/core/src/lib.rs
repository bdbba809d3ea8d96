//! Dynamic phasor modeling of single-phase grid-forming converters.
//!
//! The crate is organised bottom-up:
//!
//! - [`phasor`]: windowed Fourier coefficients and their product rules
//! - [`plant`]: grid source, converter voltage and the lumped line
//! - [`power`]: quarter-period delay power measurement and the delay line
//! - [`control`]: virtual synchronous machine, reactive droop and the
//!   steady-state operating point
//! - [`poly`] and [`small_signal`]: rational transfer functions, the
//!   closed-loop characteristic polynomial, root finding and stability
//! - [`sim`]: fixed-step nonlinear and linearized simulators
//! - [`reproduce`]: the four-model agreement matrix and damping locus

pub mod control;
pub mod error;
pub mod phasor;
pub mod plant;
pub mod poly;
pub mod power;
pub mod profile;
pub mod reproduce;
pub mod sim;
pub mod small_signal;

pub use control::{ControllerState, OperatingPoint, VsmParams};
pub use error::{Error, Result};
pub use phasor::PhasorSet;
pub use plant::CircuitParams;
pub use poly::{Polynomial, RationalFunction};
pub use power::DelayLine;
pub use sim::{SimConfig, SimTrace, SimVariant};
pub use small_signal::{ModelVariant, Stability};

pub use num_complex::Complex64;
