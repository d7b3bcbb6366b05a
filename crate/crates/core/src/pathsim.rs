//! Path simulation, two ways.
//!
//! `simulate_path_marginal` sums exact stable increments (Chambers–Mallows–Stuck).
//! `simulate_path_jumpdecomp` realizes the Lévy–Itô decomposition: jumps with
//! `|h| > ε` from a Poisson measure, their compensating drift, and the small
//! jumps either dropped or replaced by a Brownian term of matching variance.
//! Jump instants are inserted into the time grid so that pre-jump values are
//! exact grid values.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::StableParams;

/// How jumps with `|h| ≤ ε` enter a jump-decomposition path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallJumpMode {
    Drop,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Marginal,
    JumpDecomposition,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Marginal => "marginal",
            Scheme::JumpDecomposition => "jump-decomposition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub n_steps: usize,
    pub eps: f64,
    pub small_jump_mode: SmallJumpMode,
    pub seed: u64,
    pub x0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { horizon: 1.0, n_steps: 1024, eps: 1e-3, small_jump_mode: SmallJumpMode::Gaussian, seed: 0, x0: 0.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_steps == 0 || self.horizon / self.n_steps as f64 >= 1.0 {
            return Err(Error::Config(format!(
                "step T/n_steps must lie in (0, 1), got {} / {}",
                self.horizon, self.n_steps
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Config(format!("jump cutoff eps must lie in (0, 1), got {}", self.eps)));
        }
        if !self.x0.is_finite() {
            return Err(Error::Config("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }
}

/// A recorded big jump; `index` is the position in `times` of the jump
/// instant, where `values[index]` is the post-jump value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Big jumps; `None` for marginal paths.
    pub jumps: Option<Vec<Jump>>,
    pub scheme: Scheme,
    /// Compensating drift per unit time (jump-decomposition only).
    pub drift: f64,
    /// Small-jump (Brownian proxy) increment over each interval
    /// `[t_i, t_{i+1}]`; empty for marginal paths and in drop mode.
    pub proxy: Vec<f64>,
    pub config: SimConfig,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("paths are never empty")
    }

    pub fn jumps(&self) -> Result<&[Jump]> {
        self.jumps.as_deref().ok_or_else(|| Error::MissingJumps(self.scheme.name().into()))
    }

    /// Proxy increment over interval `i`, zero when none was drawn.
    pub fn proxy_increment(&self, i: usize) -> f64 {
        self.proxy.get(i).copied().unwrap_or(0.0)
    }

    /// Jump size landing at grid index `i` (post-jump value `values[i]`),
    /// as a dense vector over all indices.
    pub fn jump_sizes(&self) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        for j in self.jumps()? {
            out[j.index] += j.size;
        }
        Ok(out)
    }

    /// The same path translated by `c`.
    pub fn shifted(&self, c: f64) -> PathSample {
        let mut p = self.clone();
        for v in &mut p.values {
            *v += c;
        }
        p.config.x0 += c;
        p
    }

    /// Value at the latest grid time not after `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t).max(1) - 1;
        self.values[i]
    }

    pub fn csv(&self) -> String {
        let mut out = format!(
            "# scheme={} horizon={} n_steps={} eps={} seed={}\ntime,value\n",
            self.scheme.name(),
            self.config.horizon,
            self.config.n_steps,
            self.config.eps,
            self.config.seed
        );
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }

    /// Jumps, drift and configuration for the JSON sidecar.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "scheme": self.scheme,
            "config": self.config,
            "drift": self.drift,
            "jumps": self.jumps,
            "proxy_total": self.proxy.iter().sum::<f64>(),
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.csv()).map_err(|source| Error::Io { path: csv_path.clone(), source })?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&json_path, json).map_err(|source| Error::Io { path: json_path.clone(), source })?;
        Ok((csv_path, json_path))
    }
}

/// Independent generator for path `stream` of a run seeded with `seed`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Chambers–Mallows–Stuck constants for the law with CF `exp(dt·η(u))`.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    shift: f64,
    factor: f64,
}

impl StableSampler {
    pub fn new(params: &StableParams, dt: f64) -> Self {
        let alpha = params.alpha();
        let zeta = params.beta() * params.tan_half_pi_alpha();
        let shift = zeta.atan() / alpha;
        let scale = (params.d() * dt).powf(1.0 / alpha);
        let factor = scale * (1.0 + zeta * zeta).powf(0.5 / alpha);
        Self { alpha, shift, factor }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let v = FRAC_PI_2 * (2.0 * rng.random::<f64>() - 1.0);
        let w: f64 = Exp1.sample(rng);
        let arg = a * (v + self.shift);
        self.factor * arg.sin() / v.cos().powf(1.0 / a) * ((v - arg).cos() / w).powf((1.0 - a) / a)
    }
}

/// One draw with characteristic function `exp(dt·η(u))`.
pub fn sample_stable_increment<R: Rng + ?Sized>(params: &StableParams, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("increment needs dt > 0, got {dt}")));
    }
    Ok(StableSampler::new(params, dt).sample(rng))
}

/// Sums of exact increments on the uniform grid; uses stream 0 of `config.seed`.
pub fn simulate_path_marginal(params: &StableParams, config: &SimConfig) -> Result<PathSample> {
    simulate_path_marginal_stream(params, config, 0)
}

pub fn simulate_path_marginal_stream(params: &StableParams, config: &SimConfig, stream: u64) -> Result<PathSample> {
    config.validate()?;
    let mut rng = path_rng(config.seed, stream);
    let dt = config.dt();
    let sampler = StableSampler::new(params, dt);
    let mut times = Vec::with_capacity(config.n_steps + 1);
    let mut values = Vec::with_capacity(config.n_steps + 1);
    times.push(0.0);
    values.push(config.x0);
    let mut x = config.x0;
    for k in 1..=config.n_steps {
        x += sampler.sample(&mut rng);
        times.push(grid_time(config, k));
        values.push(x);
    }
    Ok(PathSample { times, values, jumps: None, scheme: Scheme::Marginal, drift: 0.0, proxy: Vec::new(), config: *config })
}

fn grid_time(config: &SimConfig, k: usize) -> f64 {
    if k == config.n_steps {
        config.horizon
    } else {
        config.horizon * k as f64 / config.n_steps as f64
    }
}

/// Lévy–Itô path with cutoff `config.eps`; uses stream 0 of `config.seed`.
pub fn simulate_path_jumpdecomp(params: &StableParams, config: &SimConfig) -> Result<PathSample> {
    simulate_path_jumpdecomp_stream(params, config, 0)
}

pub fn simulate_path_jumpdecomp_stream(params: &StableParams, config: &SimConfig, stream: u64) -> Result<PathSample> {
    config.validate()?;
    let mut rng = path_rng(config.seed, stream);
    let alpha = params.alpha();
    let eps = config.eps;
    let rate = params.tail_mass(eps);
    let p_plus = params.c_plus() / params.total_mass_coefficient();
    let drift = -params.tail_first_moment(eps);
    let sigma = match config.small_jump_mode {
        SmallJumpMode::Gaussian => params.small_jump_variance(eps).sqrt(),
        SmallJumpMode::Drop => 0.0,
    };
    let gaps = Exp::new(rate).map_err(|e| Error::Domain(format!("jump rate {rate}: {e}")))?;

    let expected = (rate * config.horizon) as usize;
    let capacity = config.n_steps + expected + expected / 8 + 16;
    let mut times = Vec::with_capacity(capacity);
    let mut values = Vec::with_capacity(capacity);
    let mut proxy = Vec::with_capacity(if sigma > 0.0 { capacity } else { 0 });
    let mut jumps = Vec::with_capacity(expected + expected / 8 + 16);
    times.push(0.0);
    values.push(config.x0);

    let mut x = config.x0;
    let mut t = 0.0;
    let mut next_jump = gaps.sample(&mut rng);
    let advance = |to: f64, x: &mut f64, t: &mut f64, rng: &mut ChaCha8Rng, proxy: &mut Vec<f64>| {
        let dt = to - *t;
        *x += drift * dt;
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            let dw = sigma * dt.sqrt() * z;
            *x += dw;
            proxy.push(dw);
        }
        *t = to;
    };
    for k in 1..=config.n_steps {
        let grid = grid_time(config, k);
        while next_jump < grid {
            if next_jump > t {
                advance(next_jump, &mut x, &mut t, &mut rng, &mut proxy);
                times.push(t);
                values.push(x);
            }
            // A jump coinciding with the previous instant lands on it.
            let u: f64 = rng.random();
            let magnitude = eps * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha);
            let size = if u < p_plus { magnitude } else { -magnitude };
            x += size;
            let index = values.len() - 1;
            values[index] = x;
            jumps.push(Jump { time: times[index], size, index });
            next_jump += gaps.sample(&mut rng);
        }
        advance(grid, &mut x, &mut t, &mut rng, &mut proxy);
        times.push(t);
        values.push(x);
    }
    Ok(PathSample {
        times,
        values,
        jumps: Some(jumps),
        scheme: Scheme::JumpDecomposition,
        drift,
        proxy,
        config: *config,
    })
}

/// Mean of `e^{iux}` with the standard errors of its real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCf {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

pub fn empirical_char_function(samples: &[f64], u: f64) -> Result<EmpiricalCf> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let re: crate::stats::Moments = samples.iter().map(|x| (u * x).cos()).collect();
    let im: crate::stats::Moments = samples.iter().map(|x| (u * x).sin()).collect();
    Ok(EmpiricalCf { value: Complex64::new(re.mean(), im.mean()), stderr_re: re.stderr(), stderr_im: im.stderr() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::char_function;
    use crate::stats::{ks_two_sample, mean_stderr};

    fn draws(params: &StableParams, dt: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = path_rng(seed, 0);
        let s = StableSampler::new(params, dt);
        (0..n).map(|_| s.sample(&mut rng)).collect()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = [
            SimConfig { horizon: 0.0, ..Default::default() },
            SimConfig { n_steps: 0, ..Default::default() },
            SimConfig { horizon: 4.0, n_steps: 2, ..Default::default() },
            SimConfig { eps: 1.0, ..Default::default() },
            SimConfig { x0: f64::NAN, ..Default::default() },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn sampler_matches_the_characteristic_function() {
        for (alpha, cp, cm) in [(1.5, 1.0, 1.0), (1.3, 1.0, 0.0), (1.7, 0.2, 1.5)] {
            let p = StableParams::new(alpha, cp, cm).unwrap();
            let x = draws(&p, 0.7, 50_000, 11);
            for u in [0.5, 1.0, 2.0] {
                let cf = empirical_char_function(&x, u).unwrap();
                let exact = char_function(&p, u, 0.7).unwrap();
                assert!((cf.value.re - exact.re).abs() < 4.0 * cf.stderr_re, "{alpha} {u} re");
                assert!((cf.value.im - exact.im).abs() < 4.0 * cf.stderr_im, "{alpha} {u} im");
            }
            let (m, s) = mean_stderr(&x).unwrap();
            assert!(m.abs() < 4.0 * s, "mean {m} ± {s}");
        }
    }

    #[test]
    fn sampler_scaling() {
        let p = StableParams::new(1.6, 1.0, 0.4).unwrap();
        let a = draws(&p, 2.0, 20_000, 1);
        let b: Vec<f64> = draws(&p, 1.0, 20_000, 2).iter().map(|x| x * 2f64.powf(1.0 / 1.6)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 1e-3);
        assert!(sample_stable_increment(&p, 0.0, &mut path_rng(0, 0)).is_err());
    }

    #[test]
    fn empirical_cf_trivial_cases() {
        let z = empirical_char_function(&[0.0; 10], 3.0).unwrap();
        assert_eq!(z.value, Complex64::new(1.0, 0.0));
        assert_eq!(z.stderr_re, 0.0);
        let z = empirical_char_function(&[1.0, -2.0, 7.5], 0.0).unwrap();
        assert_eq!(z.value, Complex64::new(1.0, 0.0));
        assert!(empirical_char_function(&[], 1.0).is_err());
    }

    #[test]
    fn marginal_paths_are_deterministic_and_shift_equivariant() {
        let p = StableParams::symmetric(1.5).unwrap();
        let c = SimConfig { n_steps: 64, seed: 9, ..Default::default() };
        let a = simulate_path_marginal(&p, &c).unwrap();
        let b = simulate_path_marginal(&p, &c).unwrap();
        assert_eq!(a, b);
        let shifted = simulate_path_marginal(&p, &SimConfig { x0: 2.5, ..c }).unwrap();
        for (u, v) in a.values.iter().zip(&shifted.values) {
            assert!((v - u - 2.5).abs() < 1e-12);
        }
        assert_eq!(a.times.len(), 65);
        assert_eq!(*a.times.last().unwrap(), 1.0);
        assert!(matches!(a.jumps(), Err(Error::MissingJumps(_))));
    }

    #[test]
    fn marginal_terminal_law() {
        let p = StableParams::new(1.4, 1.0, 0.5).unwrap();
        let c = SimConfig { n_steps: 8, seed: 3, ..Default::default() };
        let ends: Vec<f64> = (0..4000).map(|k| simulate_path_marginal_stream(&p, &c, k).unwrap().terminal()).collect();
        let single = draws(&p, 1.0, 4000, 77);
        assert!(ks_two_sample(&ends, &single).unwrap().p_value > 1e-3);
    }

    #[test]
    fn increments_are_stationary() {
        let p = StableParams::new(1.5, 1.5, 0.5).unwrap();
        let c = SimConfig { n_steps: 16, seed: 4, ..Default::default() };
        let mut early = Vec::new();
        let mut late = Vec::new();
        for k in 0..3000 {
            let path = simulate_path_marginal_stream(&p, &c, k).unwrap();
            early.push(path.values[4] - path.values[0]);
            late.push(path.values[16] - path.values[12]);
        }
        assert!(ks_two_sample(&early, &late).unwrap().p_value > 1e-3);
    }

    #[test]
    fn jump_paths_reconstruct_exactly() {
        let p = StableParams::new(1.5, 2.0, 0.5).unwrap();
        let c = SimConfig { n_steps: 100, eps: 0.05, seed: 5, x0: 0.3, ..Default::default() };
        let path = simulate_path_jumpdecomp(&p, &c).unwrap();
        let jumps = path.jumps().unwrap();
        assert!(!jumps.is_empty());
        assert!(path.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(path.values[0], 0.3);
        assert_eq!(path.proxy.len(), path.len() - 1);
        let sizes = path.jump_sizes().unwrap();
        let mut x = path.values[0];
        for i in 0..path.len() - 1 {
            x += path.drift * (path.times[i + 1] - path.times[i]) + path.proxy_increment(i) + sizes[i + 1];
            assert!((x - path.values[i + 1]).abs() < 1e-12 * (1.0 + x.abs()));
        }
        let total = 0.3
            + jumps.iter().map(|j| j.size).sum::<f64>()
            + path.drift * c.horizon
            + path.proxy.iter().sum::<f64>();
        assert!((total - path.terminal()).abs() < 1e-10);
        for j in jumps {
            assert!(j.size.abs() > c.eps);
            assert_eq!(path.times[j.index], j.time);
        }
    }

    #[test]
    fn jump_counts_and_signs() {
        let p = StableParams::new(1.5, 1.0, 0.0).unwrap();
        let c = SimConfig { n_steps: 10, eps: 0.01, seed: 6, small_jump_mode: SmallJumpMode::Drop, ..Default::default() };
        let expected = p.tail_mass(0.01);
        let counts: Vec<f64> = (0..2000)
            .map(|k| {
                let path = simulate_path_jumpdecomp_stream(&p, &c, k).unwrap();
                assert!(path.proxy.is_empty());
                let jumps = path.jumps().unwrap();
                assert!(jumps.iter().all(|j| j.size > 0.0));
                jumps.len() as f64
            })
            .collect();
        let (m, s) = mean_stderr(&counts).unwrap();
        assert!((m - expected).abs() < 4.0 * s, "{m} vs {expected}");
    }

    #[test]
    fn csv_and_sidecar() {
        let p = StableParams::symmetric(1.5).unwrap();
        let c = SimConfig { n_steps: 16, eps: 0.1, ..Default::default() };
        let path = simulate_path_jumpdecomp(&p, &c).unwrap();
        let csv = path.csv();
        assert!(csv.starts_with("# scheme=jump-decomposition"));
        assert_eq!(csv.lines().nth(1).unwrap(), "time,value");
        assert_eq!(csv.lines().count(), path.len() + 2);
        let dir = tempfile::tempdir().unwrap();
        let (_, json) = path.write(dir.path(), "path").unwrap();
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(side["jumps"].as_array().unwrap().len(), path.jumps().unwrap().len());
        assert_eq!(side["config"]["small_jump_mode"], "gaussian");
    }
}
