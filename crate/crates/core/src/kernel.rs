//! The Tanaka kernel `F(x) = D(α)(1 − β sgn x)|x|^{α−1}`, its mollified
//! versions `F_n = F∗ρ_n`, and the jump compensator
//! `G_ε(x) = ∫_{|h|>ε} {F(x+h) − F(x)} ν_α(dh)` used by the martingale part.

use std::sync::OnceLock;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::StableParams;
use crate::quad::{adaptive, adaptive_to_infinity, power_singular_with, GaussLegendre, Quadrature, Tolerance};
use crate::spectral::SmoothFunction;

/// Left-continuous signum: `sgn(0) = −1`.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// F(x) = D(α)(1 − β sgn(x))|x|^{α−1}.
pub fn kernel_f(params: &StableParams, x: f64) -> f64 {
    params.big_d() * (1.0 - params.beta() * sgn(x)) * x.abs().powf(params.alpha() - 1.0)
}

/// F′(x) = (α−1)D(α)(sgn(x) − β)|x|^{α−2}, undefined at the origin.
pub fn kernel_f_prime(params: &StableParams, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("F′ is singular at 0 and needs finite x, got {x}")));
    }
    let alpha = params.alpha();
    Ok((alpha - 1.0) * params.big_d() * (sgn(x) - params.beta()) * x.abs().powf(alpha - 2.0))
}

/// Default ε₀ of the increment bound, the midpoint of `(0, (α−1) ∧ (2−α))`.
pub fn default_eps0(alpha: f64) -> f64 {
    0.5 * (alpha - 1.0).min(2.0 - alpha)
}

/// The bound `8D²(|x|^{α−ε₀−2}|h|^{α+ε₀} ∧ |h|^{2α−2})` on `|F(x+h) − F(x)|²`.
pub fn increment_bound(params: &StableParams, x: f64, h: f64, eps0: f64) -> f64 {
    let alpha = params.alpha();
    let near = x.abs().powf(alpha - eps0 - 2.0) * h.abs().powf(alpha + eps0);
    let far = h.abs().powf(2.0 * alpha - 2.0);
    8.0 * params.big_d().powi(2) * near.min(far)
}

/// ∫_{−1}^{1} exp(−1/(1−x²)) dx.
pub fn bump_normalization() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        let tol = Tolerance::new(1e-15, 1e-14);
        adaptive(raw_bump, -1.0, 1.0, &tol).value
    })
}

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// The mollifier ρ_n(x) = nρ(nx), with ρ the normalized standard bump on (−1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MollifierSpec {
    n: u32,
}

impl MollifierSpec {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mollifier index must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Half-width of the support, `1/n`.
    pub fn radius(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn density(&self, x: f64) -> f64 {
        let n = self.n as f64;
        n * raw_bump(n * x) / bump_normalization()
    }

    /// ρ_n′(x).
    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.n as f64;
        let z = n * x;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - z * z;
        n * n * raw_bump(z) / bump_normalization() * (-2.0 * z / (w * w))
    }

    /// ρ_n″(x).
    pub fn second_derivative(&self, x: f64) -> f64 {
        let n = self.n as f64;
        let z = n * x;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - z * z;
        let g1 = -2.0 * z / (w * w);
        let g2 = -(2.0 + 6.0 * z * z) / (w * w * w);
        n * n * n * raw_bump(z) / bump_normalization() * (g1 * g1 + g2)
    }
}

/// Accuracy demanded of the mollified kernel, relative to `D(α)(|x|^{α−1} + 1)`.
const SMOOTH_TOL: f64 = 1e-9;

/// Range of `u` in `y = r·tanh(u)` beyond which the bump is below e^{−100}.
const TANH_RANGE: f64 = 3.0;

/// `∫ F(x − y) w(y) dy` over the mollifier support, where `w` is ρ_n or one
/// of its derivatives.
///
/// With `y = r·tanh(u)` the bump decays doubly exponentially in `u` and the
/// integrand is analytic except at the cusp of F; Gauss–Legendre panels are
/// graded towards that cusp when it lies inside the support.
fn convolve<W: Fn(f64) -> f64>(params: &StableParams, moll: MollifierSpec, x: f64, weight: W) -> Result<f64> {
    let r = moll.radius();
    let p = params.alpha() - 1.0;
    let integrand = |u: f64| {
        let y = r * u.tanh();
        let sech = 1.0 / u.cosh();
        kernel_f(params, x - y) * weight(y) * r * sech * sech
    };
    let with_rule = |rule: &GaussLegendre| {
        if x.abs() < r {
            let cusp = (x / r).atanh();
            power_singular_with(rule, integrand, cusp, TANH_RANGE.max(cusp + 1.0), p)
                - power_singular_with(rule, integrand, cusp, (-TANH_RANGE).min(cusp - 1.0), p)
        } else {
            rule.integrate_panels(integrand, -TANH_RANGE, TANH_RANGE, 12)
        }
    };
    let fine = with_rule(GaussLegendre::g20());
    let coarse = with_rule(GaussLegendre::g14());
    let scale = params.big_d() * (x.abs().powf(p) + 1.0) * moll.n() as f64;
    let err = (fine - coarse).abs();
    if !(err <= SMOOTH_TOL * scale) {
        return Err(Error::Tolerance { estimate: err, tolerance: SMOOTH_TOL * scale });
    }
    Ok(fine)
}

/// F_n(x) = (F∗ρ_n)(x).
pub fn smooth_f(params: &StableParams, moll: MollifierSpec, x: f64) -> Result<f64> {
    convolve(params, moll, x, |y| moll.density(y))
}

/// F_n′(x) = (F∗ρ_n′)(x).
pub fn smooth_f_prime(params: &StableParams, moll: MollifierSpec, x: f64) -> Result<f64> {
    convolve(params, moll, x, |y| moll.derivative(y))
}

/// F_n″(x) = (F∗ρ_n″)(x).
pub fn smooth_f_second(params: &StableParams, moll: MollifierSpec, x: f64) -> Result<f64> {
    convolve(params, moll, x, |y| moll.second_derivative(y))
}

/// F_n as a [`SmoothFunction`]; quadrature failures surface as NaN.
#[derive(Debug, Clone, Copy)]
pub struct SmoothKernel {
    pub params: StableParams,
    pub moll: MollifierSpec,
}

impl SmoothFunction for SmoothKernel {
    fn value(&self, x: f64) -> f64 {
        smooth_f(&self.params, self.moll, x).unwrap_or(f64::NAN)
    }

    fn first(&self, x: f64) -> f64 {
        smooth_f_prime(&self.params, self.moll, x).unwrap_or(f64::NAN)
    }

    fn second(&self, x: f64) -> f64 {
        smooth_f_second(&self.params, self.moll, x).unwrap_or(f64::NAN)
    }
}

/// G_ε(x) with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensator {
    pub value: f64,
    pub error_estimate: f64,
}

/// One side of G_ε: `c ∫_ε^{h_max} {F(x + s·h) − F(x)} h^{−α−1} dh` for the
/// sign `s`, split at the kink `h = −s·x` when it falls inside.
fn compensator_side(params: &StableParams, x: f64, eps: f64, h_max: f64, sign: f64, tol: &Tolerance) -> Quadrature {
    let alpha = params.alpha();
    let c = if sign > 0.0 { params.c_plus() } else { params.c_minus() };
    if c == 0.0 {
        return Quadrature::ZERO;
    }
    let fx = kernel_f(params, x);
    let integrand = |h: f64| c * (kernel_f(params, x + sign * h) - fx) * h.powf(-alpha - 1.0);
    let mut points = vec![eps];
    let mut b = eps * 10.0;
    while b < h_max {
        points.push(b);
        b *= 10.0;
    }
    points.push(h_max);
    let kink = -sign * x;
    if kink > eps && kink < h_max {
        points.push(kink);
        points.sort_by(f64::total_cmp);
    }
    let piece_tol = Tolerance { abs: tol.abs / points.len() as f64, ..*tol };
    let mut q = Quadrature::ZERO;
    for w in points.windows(2) {
        q = q.combine(adaptive(integrand, w[0], w[1], &piece_tol));
    }
    // Beyond h_max only the power growth of F matters: the −F(x) part is
    // exact and the F(x + s·h) part is integrated after h ↦ 1/h.
    let growth = adaptive_to_infinity(|h: f64| c * kernel_f(params, x + sign * h) * h.powf(-alpha - 1.0), h_max, &piece_tol);
    let mut q = q.combine(growth);
    q.value -= fx * c * h_max.powf(-alpha) / alpha;
    q
}

/// G_ε(x) = ∫_{|h|>ε} {F(x+h) − F(x)} ν_α(dh), with the range `|h| > h_max`
/// handled through F's power growth.
///
/// Logs a warning when `|x| < ε`: the kink of F then sits inside the cut-off
/// region and the small-jump closure is at its least accurate.
pub fn compensator_density(params: &StableParams, x: f64, eps: f64, h_max: f64) -> Result<Compensator> {
    if !(eps > 0.0 && eps < 1.0 && h_max > 1.0 && h_max.is_finite() && x.is_finite()) {
        return Err(Error::Domain(format!("need 0 < eps < 1 < h_max and finite x, got eps={eps}, h_max={h_max}, x={x}")));
    }
    if x.abs() < eps {
        warn!("compensator at |x| = {} below the jump cutoff {eps}", x.abs());
    }
    let tol = COMPENSATOR_TOL;
    let q = compensator_side(params, x, eps, h_max, 1.0, &tol).combine(compensator_side(params, x, eps, h_max, -1.0, &tol));
    let target = tol.target(q.value) * ACCEPT_FACTOR;
    if !(q.value.is_finite() && q.error <= target) {
        return Err(Error::Tolerance { estimate: q.error, tolerance: target });
    }
    Ok(Compensator { value: q.value, error_estimate: q.error })
}

const COMPENSATOR_TOL: Tolerance = Tolerance::new(1e-9, 1e-10);
// The quadrature aims at COMPENSATOR_TOL; results are accepted up to this multiple.
const ACCEPT_FACTOR: f64 = 10.0;

/// Cut-off beyond which [`compensator_density`] uses the power-growth tail.
pub const COMPENSATOR_H_MAX: f64 = 1e3;

/// Tabulated G_ε for fast repeated evaluation along paths.
///
/// Stores `H(x) = G_ε(x) + F(x)·ν({|h|>ε})`, which is continuous with a
/// bounded derivative, on nodes `x = ε sinh(ξ)` and interpolates with
/// four-point Lagrange polynomials. Outside the table G_ε is computed directly.
#[derive(Debug, Clone)]
pub struct CompensatorTable {
    params: StableParams,
    eps: f64,
    step: f64,
    xi_max: f64,
    values: Vec<f64>,
}

impl CompensatorTable {
    pub const DEFAULT_STEP: f64 = 0.01;

    /// Builds the table for `|x| ≤ x_max`.
    pub fn new(params: &StableParams, eps: f64, x_max: f64) -> Result<Self> {
        Self::with_step(params, eps, x_max, Self::DEFAULT_STEP)
    }

    pub fn with_step(params: &StableParams, eps: f64, x_max: f64, step: f64) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite() && step > 0.0) {
            return Err(Error::Domain(format!("table needs x_max > 0 and step > 0, got {x_max}, {step}")));
        }
        let xi_max = (x_max / eps).asinh();
        // Two extra nodes on each side keep the stencil inside the table.
        let half = (xi_max / step).ceil() as usize + 2;
        let mut values = Vec::with_capacity(2 * half + 1);
        let mass = params.tail_mass(eps);
        for k in 0..=2 * half {
            let xi = (k as f64 - half as f64) * step;
            let x = eps * xi.sinh();
            let g = compensator_density_quiet(params, x, eps)?;
            values.push(g + kernel_f(params, x) * mass);
        }
        Ok(Self { params: *params, eps, step, xi_max: half as f64 * step, values })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Largest |x| covered by interpolation.
    pub fn x_max(&self) -> f64 {
        self.eps * (self.xi_max - 2.0 * self.step).sinh()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// G_ε(x).
    pub fn eval(&self, x: f64) -> Result<f64> {
        let mass = self.params.tail_mass(self.eps);
        if x.abs() > self.x_max() {
            return compensator_density_quiet(&self.params, x, self.eps);
        }
        Ok(self.interpolate(x) - kernel_f(&self.params, x) * mass)
    }

    fn interpolate(&self, x: f64) -> f64 {
        let pos = ((x / self.eps).asinh() + self.xi_max) / self.step;
        let i = (pos.floor() as usize).clamp(1, self.values.len() - 3);
        let t = pos - i as f64;
        let v = &self.values[i - 1..i + 3];
        // Lagrange weights on nodes −1, 0, 1, 2.
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3]
    }
}

/// As [`compensator_density`] without the small-|x| warning, for tabulation.
fn compensator_density_quiet(params: &StableParams, x: f64, eps: f64) -> Result<f64> {
    if x.abs() < eps {
        let tol = COMPENSATOR_TOL;
        let q = compensator_side(params, x, eps, COMPENSATOR_H_MAX, 1.0, &tol)
            .combine(compensator_side(params, x, eps, COMPENSATOR_H_MAX, -1.0, &tol));
        let target = tol.target(q.value) * ACCEPT_FACTOR;
        if !(q.value.is_finite() && q.error <= target) {
            return Err(Error::Tolerance { estimate: q.error, tolerance: target });
        }
        return Ok(q.value);
    }
    compensator_density(params, x, eps, COMPENSATOR_H_MAX).map(|c| c.value)
}
