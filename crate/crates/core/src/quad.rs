//! Quadrature rules used throughout the crate.
//!
//! Three tools cover every integral here:
//!
//! - [`GaussLegendre`]: fixed rules for smooth integrands on panels.
//! - [`adaptive`]: globally adaptive 21-point Gauss–Kronrod with bisection of
//!   the worst interval (QUADPACK `qag` style).
//! - [`power_singular`]: integrands behaving like `(y − a)^p` at one endpoint,
//!   handled by a power substitution followed by geometrically graded
//!   Gauss–Legendre panels.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn g20() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    /// Shared 14-point rule, the companion of [`g20`](Self::g20) for error estimates.
    pub fn g14() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(14))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }

    /// ∫ₐᵇ f with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// ∫ₐᵇ f over `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                self.integrate(&mut f, lo, lo + h)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Requested accuracy for adaptive quadrature: stop once the error estimate
/// is below `max(abs, rel · |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Quadrature {
    pub const ZERO: Quadrature = Quadrature { value: 0.0, error: 0.0, evaluations: 0, converged: true };

    /// Turns a non-converged result into a tolerance error.
    pub fn require(self, tol: &Tolerance) -> Result<Quadrature> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Tolerance { estimate: self.error, tolerance: tol.target(self.value) })
        }
    }

    pub fn combine(self, other: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, factor: f64) -> Quadrature {
        Quadrature { value: self.value * factor, error: self.error * factor.abs(), ..self }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// 21-point Kronrod estimate and its error against the embedded 10-point
/// Gauss rule, with the QUADPACK error scaling.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    let mut f1 = [0.0; 10];
    let mut f2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let v1 = f(mid - x);
        let v2 = f(mid + x);
        f1[j] = v1;
        f2[j] = v2;
        kronrod += WGK[j] * (v1 + v2);
        abs_sum += WGK[j] * (v1.abs() + v2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (v1 + v2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    (value, err)
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Interval {}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are tolerated (slowly). Always returns the best estimate;
/// `converged` tells whether `tol` was met.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Quadrature {
    if a == b {
        return Quadrature::ZERO;
    }
    let (value, error) = gk21(&mut f, a, b);
    let mut evaluations = 21;
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    while total_err > tol.target(total) && heap.len() < tol.max_intervals {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running updates.
    let value: f64 = heap.iter().map(|i| i.value).sum();
    let error: f64 = heap.iter().map(|i| i.error).sum();
    let converged = value.is_finite() && error <= tol.target(value);
    Quadrature { value, error, evaluations, converged }
}

/// ∫ₐ^∞ f through the map `y = a + (1 − s)/s`, s ∈ (0, 1].
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: &Tolerance) -> Quadrature {
    adaptive(
        |s| {
            let y = a + (1.0 - s) / s;
            f(y) / (s * s)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Adaptive integration over consecutive breakpoints `points[0] < points[1] < …`.
pub fn adaptive_breakpoints<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: &Tolerance) -> Quadrature {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let piece_tol = Tolerance { abs: tol.abs / pieces, ..*tol };
    points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| adaptive(&mut f, w[0], w[1], &piece_tol))
        .fold(Quadrature::ZERO, Quadrature::combine)
}

const GRADING_RATIO: f64 = 0.15;
const GRADING_LEVELS: usize = 14;
const TOP_PANELS: usize = 6;

/// ∫ₐᵇ f where `f(y)` behaves like `|y − a|^p · smooth` near `a`, `p > −1`.
///
/// Substitutes `y = a + (b − a) s^{1/(p+1)}`, which makes the integrand
/// bounded in `s`, then integrates on panels graded geometrically towards
/// `s = 0` to absorb the remaining non-smooth terms. `b < a` is allowed.
pub fn power_singular<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, p: f64) -> f64 {
    power_singular_with(GaussLegendre::g20(), f, a, b, p)
}

/// [`power_singular`] with a caller-chosen panel rule; comparing two rules
/// gives an error estimate.
pub fn power_singular_with<F: FnMut(f64) -> f64>(rule: &GaussLegendre, mut f: F, a: f64, b: f64, p: f64) -> f64 {
    debug_assert!(p > -1.0);
    if a == b {
        return 0.0;
    }
    let q = 1.0 / (p + 1.0);
    let len = b - a;
    let mut g = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let y = a + len * s.powf(q);
        f(y) * len * q * s.powf(q - 1.0)
    };
    // The top level carries most of the mass; it gets several panels.
    let mut total = rule.integrate_panels(&mut g, GRADING_RATIO, 1.0, TOP_PANELS);
    let mut hi = GRADING_RATIO;
    for _ in 1..GRADING_LEVELS {
        let lo = hi * GRADING_RATIO;
        total += rule.integrate(&mut g, lo, hi);
        hi = lo;
    }
    total + rule.integrate(&mut g, 0.0, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(7);
        // degree 13 is the limit for 7 nodes
        let v = rule.integrate(|x| x.powi(12) + x.powi(13), -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 13.0, max_relative = 1e-14);
        let w: f64 = rule.weights.iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_and_peaked() {
        let tol = Tolerance::new(1e-12, 1e-12);
        let q = adaptive(f64::sin, 0.0, PI, &tol);
        assert!(q.converged);
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-12);

        let q = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, &tol);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(q.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let tol = Tolerance { abs: 1e-15, rel: 1e-15, max_intervals: 3 };
        let q = adaptive(|x: f64| x.powf(-0.9), 0.0, 1.0, &tol);
        assert!(!q.converged);
        assert!(matches!(q.require(&tol), Err(Error::Tolerance { .. })));
    }

    #[test]
    fn infinite_range() {
        let tol = Tolerance::new(1e-12, 1e-12);
        let q = adaptive_to_infinity(|x| (-x).exp(), 0.0, &tol);
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-10);
        let q = adaptive_to_infinity(|x| x.powf(-2.5), 1.0, &tol);
        assert_relative_eq!(q.value, 1.0 / 1.5, max_relative = 1e-10);
    }

    #[test]
    fn power_singular_endpoint() {
        // ∫₀¹ y^{-0.8} cos y dy = Σ (−1)^k / ((2k)! (2k + 0.2)), summed in mpmath
        let v = power_singular(|y: f64| y.powf(-0.8) * y.cos(), 0.0, 1.0, -0.8);
        assert_relative_eq!(v, 4.782_426_891_048_143_8, max_relative = 1e-11);
        // reversed orientation and a root singularity: ∫₂⁰ (2 − y)^{0.5} dy = −(2/3)·2^{1.5}
        let v = power_singular(|y: f64| (2.0 - y).powf(0.5), 2.0, 0.0, 0.5);
        assert_relative_eq!(v, -(2.0 / 3.0) * 2f64.powf(1.5), max_relative = 1e-12);
    }
}
