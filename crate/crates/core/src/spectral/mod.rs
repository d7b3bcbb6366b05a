//! Fourier-side machinery: Lévy symbol, characteristic function, transition
//! density, the generator as a multiplier and as a direct integral, negative
//! moments and the local-time existence integral.

mod density;
mod generator;
mod grid;
mod moments;
mod symbol;

pub use density::{density_at, transition_density, InversionRule, TAIL_BOUND};
pub use generator::{
    generator_apply, generator_apply_windowed, generator_apply_with, generator_quadrature, Affine, Gaussian,
    GeneratorQuadrature, SmoothFunction, Wave, Window, DECAY_THRESHOLD,
};
pub use grid::{forward, inverse, Grid, GridFunction, Spectrum};
pub use moments::{negative_moment_bound, negative_moment_constant, NegativeMoment};
pub use symbol::{char_function, existence_integral, existence_integrand, levy_symbol};
