//! Validated stable triplet `(b_α, 0, ν_α)` and its derived constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// `c(a) = Γ(a+1) sin(πa/2) / π`, evaluated for any real `a` off the poles.
pub fn c_of(a: f64) -> f64 {
    gamma(a + 1.0) * (0.5 * PI * a).sin() / PI
}

/// Symbol constants `(d, β)` for any index in (0,2) \ {1}.
///
/// Only the existence-integral scan needs indices below one; everything else
/// goes through [`StableParams`].
pub fn symbol_constants(alpha: f64, c_plus: f64, c_minus: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(Error::Domain(format!("index {alpha} outside (0,1) ∪ (1,2)")));
    }
    check_coefficients(c_plus, c_minus)?;
    let total = c_plus + c_minus;
    Ok((total / (2.0 * c_of(alpha)), (c_plus - c_minus) / total))
}

fn check_coefficients(c_plus: f64, c_minus: f64) -> Result<()> {
    if !(c_plus.is_finite() && c_minus.is_finite()) || c_plus < 0.0 || c_minus < 0.0 {
        return Err(Error::Domain(format!(
            "Lévy density coefficients must be finite and non-negative, got c+ = {c_plus}, c- = {c_minus}"
        )));
    }
    if c_plus + c_minus <= 0.0 {
        return Err(Error::Domain("c+ + c- must be positive".into()));
    }
    Ok(())
}

/// Raw triplet inputs as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub alpha: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl RawParams {
    pub fn validate(self) -> Result<StableParams> {
        StableParams::new(self.alpha, self.c_plus, self.c_minus)
    }
}

/// Strictly stable process of index α ∈ (1,2) with Lévy density
/// `c₊ h^{−α−1}` on (0,∞) and `c₋ |h|^{−α−1}` on (−∞,0).
///
/// Constructed once through [`StableParams::new`]; all fields are derived
/// there and never change afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableParams {
    alpha: f64,
    c_plus: f64,
    c_minus: f64,
    beta: f64,
    d: f64,
    b_alpha: f64,
    c_alpha: f64,
    big_d: f64,
}

impl StableParams {
    pub fn new(alpha: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("index α = {alpha} outside the open interval (1,2)")));
        }
        check_coefficients(c_plus, c_minus)?;
        let total = c_plus + c_minus;
        let beta = (c_plus - c_minus) / total;
        let c_alpha = c_of(alpha);
        let d = total / (2.0 * c_alpha);
        let b_alpha = -(c_plus - c_minus) / (alpha - 1.0);
        let tan = (0.5 * PI * alpha).tan();
        let c_neg = c_of(-alpha);
        let big_d = c_neg / (d * (1.0 + beta * beta * tan * tan));
        if !(d > 0.0 && big_d > 0.0 && big_d.is_finite()) {
            return Err(Error::Domain(format!(
                "derived constants lost positivity (d = {d}, D(α) = {big_d}) at α = {alpha}"
            )));
        }
        Ok(Self { alpha, c_plus, c_minus, beta, d, b_alpha, c_alpha, big_d })
    }

    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0, 1.0)
    }

    /// Parameters with unit total mass `c₊ + c₋ = 2` and skewness `beta`.
    pub fn with_skewness(alpha: f64, beta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("skewness {beta} outside [-1,1]")));
        }
        Self::new(alpha, 1.0 + beta, 1.0 - beta)
    }

    pub fn raw(&self) -> RawParams {
        RawParams { alpha: self.alpha, c_plus: self.c_plus, c_minus: self.c_minus }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    /// β = (c₊ − c₋)/(c₊ + c₋).
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Scale d = (c₊ + c₋)/(2c(α)).
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Drift b_α = −(c₊ − c₋)/(α − 1), i.e. minus the mean of the big jumps.
    pub fn b_alpha(&self) -> f64 {
        self.b_alpha
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    /// Kernel constant D(α) = c(−α) / (d (1 + β² tan²(πα/2))).
    pub fn big_d(&self) -> f64 {
        self.big_d
    }

    pub fn tan_half_pi_alpha(&self) -> f64 {
        (0.5 * PI * self.alpha).tan()
    }

    pub fn total_mass_coefficient(&self) -> f64 {
        self.c_plus + self.c_minus
    }

    /// Lévy density ν_α at `h ≠ 0`.
    pub fn levy_density(&self, h: f64) -> f64 {
        let c = if h > 0.0 { self.c_plus } else { self.c_minus };
        c * h.abs().powf(-self.alpha - 1.0)
    }

    /// ν_α({|h| > eps}) = (c₊ + c₋) eps^{−α} / α.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        self.total_mass_coefficient() * eps.powf(-self.alpha) / self.alpha
    }

    /// ∫_{|h|>eps} h ν_α(dh) = (c₊ − c₋) eps^{1−α}/(α − 1).
    pub fn tail_first_moment(&self, eps: f64) -> f64 {
        (self.c_plus - self.c_minus) * eps.powf(1.0 - self.alpha) / (self.alpha - 1.0)
    }

    /// σ²(eps) = ∫_{|h|≤eps} h² ν_α(dh) = (c₊ + c₋) eps^{2−α}/(2 − α).
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        self.total_mass_coefficient() * eps.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }
}
