use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{symbol_constants, StableParams};
use crate::quad::{adaptive_breakpoints, Tolerance};

/// Lévy symbol η(u) = −d|u|^α (1 − iβ sgn(u) tan(πα/2)).
pub fn levy_symbol(params: &StableParams, u: f64) -> Complex64 {
    symbol_from_constants(params.alpha(), params.d(), params.beta(), u)
}

fn symbol_from_constants(alpha: f64, d: f64, beta: f64, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let modulus = d * u.abs().powf(alpha);
    let tan = (0.5 * std::f64::consts::PI * alpha).tan();
    Complex64::new(-modulus, modulus * beta * u.signum() * tan)
}

/// E[e^{iuX_t}] = e^{tη(u)}.
pub fn char_function(params: &StableParams, u: f64, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    Ok((levy_symbol(params, u) * t).exp())
}

/// Re(1/(1 − η(u))) for the symbol with constants `(α, d, β)`.
pub fn existence_integrand(alpha: f64, d: f64, beta: f64, u: f64) -> f64 {
    let a = d * u.abs().powf(alpha);
    let tan = (0.5 * std::f64::consts::PI * alpha).tan();
    let im = a * beta * tan;
    (1.0 + a) / ((1.0 + a) * (1.0 + a) + im * im)
}

/// Partial integral ∫_{−u_max}^{u_max} Re(1/(1 − η(u))) du.
///
/// Accepts any index in (0,1) ∪ (1,2): the integral converges as
/// `u_max → ∞` exactly when α > 1.
pub fn existence_integral(alpha: f64, c_plus: f64, c_minus: f64, u_max: f64) -> Result<f64> {
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::Domain(format!("cutoff must be positive and finite, got {u_max}")));
    }
    let (d, beta) = symbol_constants(alpha, c_plus, c_minus)?;
    // Geometric breakpoints keep each adaptive piece well scaled.
    let mut points = vec![0.0];
    let mut b = 1e-2;
    while b < u_max {
        points.push(b);
        b *= 10.0;
    }
    points.push(u_max);
    let tol = Tolerance::new(1e-12, 1e-12);
    let q = adaptive_breakpoints(|u| existence_integrand(alpha, d, beta, u), &points, &tol);
    // η(−u) = conj η(u), so the integrand is even.
    Ok(2.0 * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn vanishes_at_origin() {
        let p = StableParams::new(1.4, 2.0, 0.5).unwrap();
        assert_eq!(levy_symbol(&p, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn symmetric_symbol_is_real() {
        let p = StableParams::symmetric(1.5).unwrap();
        for u in [-3.0, -0.1, 0.7, 12.0] {
            let eta = levy_symbol(&p, u);
            assert_eq!(eta.im, 0.0);
            assert_relative_eq!(eta.re, -p.d() * f64::abs(u).powf(1.5), max_relative = 1e-15);
        }
    }

    #[test]
    fn char_function_basics() {
        let p = StableParams::new(1.7, 1.0, 0.2).unwrap();
        assert_eq!(char_function(&p, 3.0, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        assert!(char_function(&p, 1.0, -1.0).is_err());
        let (u, s, t) = (1.3, 0.4, 0.9);
        let lhs = char_function(&p, u, s + t).unwrap();
        let rhs = char_function(&p, u, s).unwrap() * char_function(&p, u, t).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
        assert_relative_eq!(
            char_function(&p, u, t).unwrap().norm(),
            (-p.d() * t * f64::abs(u).powf(1.7)).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn existence_integrand_at_zero_is_one() {
        assert_eq!(existence_integrand(1.5, 3.0, 0.4, 0.0), 1.0);
    }

    #[test]
    fn existence_integral_symmetric_closed_form() {
        // β = 0: ∫ 1/(1 + d|u|^α) du over ℝ = 2 d^{−1/α} (π/α)/sin(π/α)
        let p = StableParams::symmetric(1.5).unwrap();
        let exact = 2.0 * p.d().powf(-1.0 / 1.5) * (std::f64::consts::PI / 1.5)
            / (std::f64::consts::PI / 1.5).sin();
        let tail = 2.0 * 1e12f64.powf(-0.5) / (0.5 * p.d());
        let partial = existence_integral(1.5, 1.0, 1.0, 1e12).unwrap();
        assert_relative_eq!(partial, exact - tail, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn hermitian_and_dissipative(alpha in 1.01f64..1.99, cp in 0.0f64..3.0, cm in 0.0f64..3.0, u in -50.0f64..50.0) {
            prop_assume!(cp + cm > 1e-3);
            let p = StableParams::new(alpha, cp, cm).unwrap();
            let a = levy_symbol(&p, u);
            let b = levy_symbol(&p, -u);
            prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm());
            prop_assert!(a.re <= 0.0);
        }
    }
}
