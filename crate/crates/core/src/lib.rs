//! Variable-length lossy source coding with the normalized cumulant
//! generating function (CGF) of codeword lengths as the rate criterion and a
//! bounded excess-distortion probability.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`probability`] | finite PMFs, Shannon/Rényi entropy, majorization |
//! | [`covering`] | distortion balls, the greedy cover and `G^{D,ε}_α(X)` |
//! | [`codec`] | codeword enumeration, stochastic/deterministic/prefix codes, exact metrics |
//! | [`ratedistortion`] | Blahut-Arimoto at fixed slope, tilted information, dispersion, `R_{D,ε}`, `H_{D,ε}` |
//! | [`blocklength`] | product sources and normalized blocklength-n quantities |
//! | [`verify`] | executable inequality checks and the verification suite |
//!
//! All logarithms are base 2. Quantities that may be `+∞` (infeasible
//! instances) are carried as [`Extended`] instead of a raw float.
//!
//! Heavy inner loops take an [`Exec`] argument. With the default `parallel`
//! feature they run on rayon; without it every [`Exec`] runs sequentially.

pub mod blocklength;
pub mod codec;
pub mod covering;
mod error;
mod exec;
mod extended;
pub mod format;
pub mod probability;
pub mod ratedistortion;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use extended::Extended;
