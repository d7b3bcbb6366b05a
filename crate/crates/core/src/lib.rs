//! Strictly stable Lévy processes with index α ∈ (1,2) and a numerical
//! realization of their Tanaka formula.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`]: validated triplet `(α, c₊, c₋)` and every derived constant.
//! - [`spectral`]: Lévy symbol, characteristic function, transition density
//!   by Fourier inversion, the generator as a Fourier multiplier and as a
//!   direct integral, negative moments and the local-time existence integral.
//! - [`kernel`]: the Tanaka kernel `F`, its derivative, mollifiers, the
//!   smoothed kernels `F ∗ ρₙ` and the jump compensator of `F`.
//! - [`pathsim`]: exact-marginal and jump-decomposition path simulation.
//! - [`localtime`]: occupation and Tanaka local-time estimators plus the
//!   discretized martingale part.
//! - [`experiments`]: seeded, config-driven verification experiments and
//!   deterministic reports, driven by the `stable-tanaka` binary.

pub mod error;
pub mod experiments;
pub mod kernel;
pub mod localtime;
pub mod params;
pub mod pathsim;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use params::StableParams;
