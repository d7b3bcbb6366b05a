//! Local-time estimators at a level `a`.
//!
//! - occupation: `V^{a,n}_t = ∫₀^t ρ_n(X_s − a) ds` by a Riemann sum over the path grid;
//! - Tanaka: `F(X_t − a) − F(X_0 − a) − M^a_t`, with the martingale part
//!   `M^a_t = Σ_jumps {F(X_{s−} − a + ΔX) − F(X_{s−} − a)} − ∫₀^t G_ε(X_s − a) ds`
//!   (plus the Brownian-proxy increments of F in gaussian mode when included).
//!   The time integral uses the trapezoid rule between the state at `t_i`
//!   and the pre-jump state at `t_{i+1}`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_f, CompensatorTable, MollifierSpec};
use crate::params::StableParams;
use crate::pathsim::PathSample;
use crate::quad::{adaptive_to_infinity, power_singular, Tolerance};
use crate::spectral::negative_moment_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Occupation,
    Tanaka,
}

/// Whether the Brownian-proxy increments of F count towards the martingale part.
///
/// `Include` gives the better Tanaka estimator but then M also carries the
/// proxy's Itô drift `½σ²F″`, a bias of order `ε^{1/2} log(1/ε)` at the
/// starting level. With `Drop`, M is exactly the compensated jump integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallJumpInM {
    #[default]
    Include,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n: Option<u32>,
    pub eps: Option<f64>,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeEstimate {
    pub level: f64,
    pub horizon: f64,
    pub value: f64,
    pub method: Method,
    pub discretization: Discretization,
}

/// Default mollifier index for a jump cutoff: `n = ε^{−1/2}`, rounded.
pub fn default_mollifier(eps: f64) -> MollifierSpec {
    let n = eps.powf(-0.5).round().max(1.0) as u32;
    MollifierSpec::new(n).expect("n ≥ 1")
}

/// `∫₀^t ρ_n(X_s − a) ds` by left Riemann sums over the path grid, up to `t`
/// (clipped to the horizon).
pub fn occupation_until(path: &PathSample, a: f64, moll: MollifierSpec, t: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..path.len() - 1 {
        let (t0, t1) = (path.times[i], path.times[i + 1].min(t));
        if t0 >= t {
            break;
        }
        sum += moll.density(path.values[i] - a) * (t1 - t0);
    }
    sum
}

/// V^{a,n}_T for the whole path.
pub fn occupation_estimator(path: &PathSample, a: f64, moll: MollifierSpec) -> Result<LocalTimeEstimate> {
    if path.len() < 2 {
        return Err(Error::Empty("path"));
    }
    let r = moll.radius();
    let inside = path.values.iter().filter(|v| (*v - a).abs() < r).count();
    if inside < 10 {
        warn!("only {inside} grid points within the mollifier support around level {a}");
    }
    let mut steps: Vec<f64> = path.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    steps.sort_by(f64::total_cmp);
    let typical = steps[steps.len() / 2];
    if typical > 2.0 * r {
        warn!("typical step {typical:.3e} exceeds the mollifier width {:.3e}", 2.0 * r);
    }
    let horizon = path.config.horizon;
    Ok(LocalTimeEstimate {
        level: a,
        horizon,
        value: occupation_until(path, a, moll, horizon),
        method: Method::Occupation,
        discretization: Discretization { n: Some(moll.n()), eps: None, n_steps: path.config.n_steps },
    })
}

/// Martingale-part integrator for one parameter set and jump cutoff, with a
/// tabulated compensator shared across paths and levels.
#[derive(Debug, Clone)]
pub struct MartingaleIntegrator {
    params: StableParams,
    table: CompensatorTable,
    small_jump: SmallJumpInM,
}

/// Half-width of the compensator table built by [`MartingaleIntegrator::new`].
pub const TABLE_RANGE: f64 = 1e4;

impl MartingaleIntegrator {
    pub fn new(params: &StableParams, eps: f64, small_jump: SmallJumpInM) -> Result<Self> {
        Ok(Self { params: *params, table: CompensatorTable::new(params, eps, TABLE_RANGE)?, small_jump })
    }

    pub fn with_table(params: &StableParams, table: CompensatorTable, small_jump: SmallJumpInM) -> Self {
        Self { params: *params, table, small_jump }
    }

    pub fn eps(&self) -> f64 {
        self.table.eps()
    }

    fn check(&self, path: &PathSample) -> Result<()> {
        path.jumps()?;
        if (path.config.eps - self.eps()).abs() > 1e-15 * self.eps() {
            return Err(Error::Config(format!(
                "path cutoff {} differs from the compensator cutoff {}",
                path.config.eps,
                self.eps()
            )));
        }
        Ok(())
    }

    /// M^a at each time in `checkpoints` (ascending; each snapped to the last
    /// grid time not after it).
    pub fn trajectory(&self, path: &PathSample, a: f64, checkpoints: &[f64]) -> Result<Vec<f64>> {
        self.check(path)?;
        let sizes = path.jump_sizes()?;
        let f = |x: f64| kernel_f(&self.params, x - a);
        let include = self.small_jump == SmallJumpInM::Include;
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut cp = checkpoints.iter().peekable();
        let mut m = 0.0;
        // G at the left end of the current interval, carried over when no jump intervenes
        let mut g_left = self.table.eval(path.values[0] - a)?;
        for i in 0..path.len() - 1 {
            while let Some(&&t) = cp.peek() {
                if path.times[i] <= t && t < path.times[i + 1] {
                    out.push(m);
                    cp.next();
                } else {
                    break;
                }
            }
            let dt = path.times[i + 1] - path.times[i];
            let pre_jump = path.values[i + 1] - sizes[i + 1];
            // Trapezoid in time: the jump at t_{i+1} sees the state after the
            // proxy move, so a left sum would be biased by the cusp of G_ε.
            let g_right = self.table.eval(pre_jump - a)?;
            m -= 0.5 * (g_left + g_right) * dt;
            g_left = if sizes[i + 1] == 0.0 { g_right } else { self.table.eval(path.values[i + 1] - a)? };
            if include {
                let before_proxy = pre_jump - path.proxy_increment(i);
                m += f(pre_jump) - f(before_proxy);
            }
            if sizes[i + 1] != 0.0 {
                m += f(path.values[i + 1]) - f(pre_jump);
            }
        }
        out.extend(cp.map(|_| m));
        Ok(out)
    }

    /// M^a_T.
    pub fn martingale(&self, path: &PathSample, a: f64) -> Result<f64> {
        Ok(self.trajectory(path, a, &[path.config.horizon])?[0])
    }

    /// F(X_T − a) − F(X_0 − a) − M^a_T.
    pub fn tanaka(&self, path: &PathSample, a: f64) -> Result<LocalTimeEstimate> {
        let m = self.martingale(path, a)?;
        let value = kernel_f(&self.params, path.terminal() - a) - kernel_f(&self.params, path.values[0] - a) - m;
        Ok(LocalTimeEstimate {
            level: a,
            horizon: path.config.horizon,
            value,
            method: Method::Tanaka,
            discretization: Discretization { n: None, eps: Some(self.eps()), n_steps: path.config.n_steps },
        })
    }
}

fn integrator_for(params: &StableParams, path: &PathSample) -> Result<MartingaleIntegrator> {
    path.jumps()?;
    MartingaleIntegrator::new(params, path.config.eps, SmallJumpInM::Include)
}

/// M^a_T for a jump-decomposition path (builds a compensator table; reuse a
/// [`MartingaleIntegrator`] for many paths).
pub fn martingale_part(params: &StableParams, path: &PathSample, a: f64) -> Result<f64> {
    integrator_for(params, path)?.martingale(path, a)
}

/// The Tanaka right-hand side F(X_T − a) − F(X_0 − a) − M^a_T.
pub fn tanaka_estimator(params: &StableParams, path: &PathSample, a: f64) -> Result<LocalTimeEstimate> {
    integrator_for(params, path)?.tanaka(path, a)
}

/// 201 uniform levels over `[min X − 1, max X + 1]`.
pub fn default_level_grid(path: &PathSample) -> Vec<f64> {
    let (lo, hi) = path_range(path);
    let (lo, hi) = (lo - 1.0, hi + 1.0);
    (0..201).map(|k| lo + (hi - lo) * k as f64 / 200.0).collect()
}

fn path_range(path: &PathSample) -> (f64, f64) {
    path.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Relative residual `|∫g(a)V^{a,n}_T da − ∫₀^T g(X_s) ds| / |∫₀^T g(X_s) ds|`,
/// the level integral by the trapezoid rule on `a_grid`.
///
/// The residual is absolute when the right side vanishes.
pub fn occupation_formula_check<G: Fn(f64) -> f64>(
    path: &PathSample,
    g: G,
    a_grid: &[f64],
    moll: MollifierSpec,
) -> Result<f64> {
    let horizon = path.config.horizon;
    occupation_formula_check_with(path, g, a_grid, moll.radius(), |a| Ok(occupation_until(path, a, moll, horizon)))
}

/// [`occupation_formula_check`] for any level estimator `a ↦ L̂^a_T`; the grid
/// must reach `margin` beyond the path's range.
pub fn occupation_formula_check_with<G, E>(
    path: &PathSample,
    g: G,
    a_grid: &[f64],
    margin: f64,
    mut estimate: E,
) -> Result<f64>
where
    G: Fn(f64) -> f64,
    E: FnMut(f64) -> Result<f64>,
{
    if a_grid.len() < 2 {
        return Err(Error::Empty("level grid"));
    }
    let (lo, hi) = (a_grid[0], a_grid[a_grid.len() - 1]);
    let (path_lo, path_hi) = path_range(path);
    if lo > path_lo - margin || hi < path_hi + margin {
        return Err(Error::Coverage { lo, hi, path_lo, path_hi });
    }
    let mut weighted = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let w = g(a);
        weighted.push(if w == 0.0 { 0.0 } else { w * estimate(a)? });
    }
    let lhs: f64 = a_grid.windows(2).zip(weighted.windows(2)).map(|(a, v)| 0.5 * (a[1] - a[0]) * (v[0] + v[1])).sum();
    let rhs: f64 = (0..path.len() - 1).map(|i| g(path.values[i]) * (path.times[i + 1] - path.times[i])).sum();
    let diff = (lhs - rhs).abs();
    Ok(if rhs == 0.0 { diff } else { diff / rhs.abs() })
}

/// Hat function of half-width `width` centred at `center`, peak one.
pub fn hat(center: f64, width: f64) -> impl Fn(f64) -> f64 {
    move |x| (1.0 - (x - center).abs() / width).max(0.0)
}

/// The proof's bound on E[(M^a_t)²]:
/// `8D² ∫₀^t E ∫ (|X_s − a|^{α−ε₀−2}|h|^{α+ε₀} 1_{|h|≤1} + |h|^{2α−2} 1_{|h|>1}) ν(dh) ds`,
/// with `E|X_s − a|^{−γ} ≤ S(α,γ)s^{−γ/α}`, `γ = 2 + ε₀ − α`; each integral by quadrature.
pub fn martingale_l2_bound(params: &StableParams, t: f64, eps0: f64) -> Result<f64> {
    let alpha = params.alpha();
    if !(eps0 > 0.0 && eps0 < (alpha - 1.0).min(2.0 - alpha)) {
        return Err(Error::Domain(format!("ε₀ = {eps0} outside (0, (α−1)∧(2−α))")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("bound needs t > 0, got {t}")));
    }
    let gamma = 2.0 + eps0 - alpha;
    let tol = Tolerance::new(1e-12, 1e-12);
    let mass = params.total_mass_coefficient();
    // ∫_{|h|≤1} |h|^{α+ε₀} ν(dh) and ∫_{|h|>1} |h|^{2α−2} ν(dh)
    let near = mass * power_singular(|h: f64| h.powf(eps0 - 1.0), 0.0, 1.0, eps0 - 1.0);
    let far = mass * adaptive_to_infinity(|h: f64| h.powf(alpha - 3.0), 1.0, &tol).require(&tol)?.value;
    let s = negative_moment_bound(params, gamma, 1.0)?.constant;
    let time = power_singular(|u: f64| u.powf(-gamma / alpha), 0.0, t, -gamma / alpha);
    Ok(8.0 * params.big_d().powi(2) * (t * far + s * time * near))
}
