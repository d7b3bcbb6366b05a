//! Gamma function on the whole real line minus the poles.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

/// Γ(x) for any real `x` that is not a non-positive integer.
///
/// Positive arguments go through `exp(ln Γ(x))`; negative arguments use the
/// reflection Γ(x) = π / (sin(πx) Γ(1−x)), so no evaluation ever happens
/// next to a pole. Returns NaN at the poles.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma(x).exp()
    } else if x == x.floor() {
        f64::NAN
    } else {
        PI / ((PI * x).sin() * ln_gamma(1.0 - x).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integers_and_half_integers() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(-1.5), 4.0 * PI.sqrt() / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn reflection_matches_mpmath() {
        // mpmath, 30 digits
        assert_relative_eq!(gamma(-0.2), -5.821_148_568_626_516_6, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.8), -5.738_554_639_998_504_8, max_relative = 1e-13);
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }
}
