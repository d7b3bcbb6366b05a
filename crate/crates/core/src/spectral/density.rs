use std::f64::consts::PI;

use num_complex::Complex64;

use super::grid::{plan, Grid, GridFunction};
use super::symbol::levy_symbol;
use crate::error::{Error, Result};
use crate::params::StableParams;

/// Largest allowed modulus of e^{tη} at the frequency cutoff.
pub const TAIL_BOUND: f64 = 1e-12;

/// Frequency-side discretization of the inversion integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionRule {
    /// Trapezoid step in frequency.
    pub du: f64,
    /// Largest frequency summed.
    pub u_max: f64,
}

impl InversionRule {
    /// The rule dual to `grid`: step `π/L`, cutoff `π/Δx`.
    ///
    /// The resulting density is the `2L`-periodization of `p_t`, which makes
    /// its trapezoid mass over one period exactly one.
    pub fn dual_to(grid: &Grid) -> Self {
        Self { du: PI / grid.half_width(), u_max: grid.frequency_cutoff() }
    }
}

fn check_resolution(params: &StableParams, t: f64, u_max: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("transition density needs t > 0, got {t}")));
    }
    let tail = (-params.d() * t * u_max.powf(params.alpha())).exp();
    if tail >= TAIL_BOUND {
        return Err(Error::Resolution(format!(
            "|e^(tη)| = {tail:e} at the frequency cutoff {u_max}; refine the grid"
        )));
    }
    Ok(())
}

/// p_t on `grid`, by trapezoid inversion of e^{tη} on the dual frequency grid.
///
/// Returns the real part; the imaginary residue is checked to be at
/// round-off level. The tails of `p_t` beyond `±L` wrap around (period `2L`).
pub fn transition_density(params: &StableParams, t: f64, grid: &Grid) -> Result<GridFunction> {
    let rule = InversionRule::dual_to(grid);
    check_resolution(params, t, rule.u_max)?;
    let n = grid.n_points();
    let x0 = grid.x(0);
    // p(x_j) = (du/2π) Σ_k e^{tη(u_k)} e^{−iu_k x_0} e^{−2πijk/N}
    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let u = grid.frequency(k);
            let weight = if k == n / 2 { 0.5 } else { 1.0 };
            let phase = Complex64::new(0.0, -u * x0).exp();
            (levy_symbol(params, u) * t).exp() * phase * weight
        })
        .collect();
    // The Nyquist bin stands for both ±π/Δx.
    let ny = grid.frequency(n / 2);
    buf[n / 2] += (levy_symbol(params, -ny) * t).exp() * Complex64::new(0.0, ny * x0).exp() * 0.5;
    plan(n, false).process(&mut buf);
    let scale = rule.du / (2.0 * PI);
    let peak = buf.iter().fold(0.0f64, |m, c| m.max(c.re.abs())) * scale;
    let residue = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs())) * scale;
    if residue > 1e-9 * peak.max(1e-300) {
        return Err(Error::Resolution(format!("imaginary residue {residue:e} in density inversion")));
    }
    GridFunction::new(*grid, buf.iter().map(|c| c.re * scale).collect())
}

/// p_t(y) at an arbitrary point with an explicit trapezoid rule,
/// `(du/π) [½ + Σ_{k≥1} Re(e^{−iu_k y} e^{tη(u_k)})]`.
pub fn density_at(params: &StableParams, t: f64, y: f64, rule: &InversionRule) -> Result<f64> {
    check_resolution(params, t, rule.u_max)?;
    let ratio = rule.u_max / rule.du;
    let steps = (ratio + 1e-9).floor() as usize;
    // A cutoff landing on a node is the trapezoid endpoint.
    let on_node = (ratio - ratio.round()).abs() < 1e-9;
    let mut sum = 0.5;
    for k in 1..=steps {
        let u = rule.du * k as f64;
        let z = (levy_symbol(params, u) * t).exp() * Complex64::new(0.0, -u * y).exp();
        sum += if k == steps && on_node { 0.5 * z.re } else { z.re };
    }
    Ok(sum * rule.du / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_density_is_even_and_normalized() {
        let p = StableParams::symmetric(1.5).unwrap();
        let g = Grid::new(40.0, 1 << 12).unwrap();
        let dens = transition_density(&p, 1.0, &g).unwrap();
        assert_relative_eq!(dens.integral(), 1.0, epsilon = 1e-10);
        let v = dens.values();
        let n = v.len();
        for j in 1..n / 2 {
            assert!((v[j] - v[n - j]).abs() < 1e-12, "asymmetry at {j}");
        }
    }

    #[test]
    fn matches_pointwise_sum_and_closed_form_peak() {
        let p = StableParams::symmetric(1.5).unwrap();
        let g = Grid::new(20.0, 1 << 10).unwrap();
        let dens = transition_density(&p, 1.0, &g).unwrap();
        let rule = InversionRule::dual_to(&g);
        for j in [3usize, 300, 512, 700] {
            let direct = density_at(&p, 1.0, g.x(j), &rule).unwrap();
            assert!((direct - dens.values()[j]).abs() < 1e-12);
        }
        // p_1(0) = Γ(1 + 1/α) / (π d^{1/α}), plus the images at ±40k, where
        // p_1(x) ≈ |x|^{−5/2}: 2ζ(5/2)·40^{−5/2}
        let peak = crate::special::gamma(1.0 + 1.0 / 1.5) / (PI * p.d().powf(1.0 / 1.5));
        let images = 2.0 * 1.341_487_257_250_917_2 * 40f64.powf(-2.5);
        assert_relative_eq!(dens.values()[512], peak + images, max_relative = 1e-4);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = StableParams::symmetric(1.5).unwrap();
        let g = Grid::new(400.0, 256).unwrap();
        assert!(matches!(transition_density(&p, 1.0, &g), Err(Error::Resolution(_))));
        assert!(matches!(transition_density(&p, 0.0, &g), Err(Error::Domain(_))));
    }
}
