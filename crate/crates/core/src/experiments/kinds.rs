//! Defaults, validation and runners for each experiment kind.

use rayon::prelude::*;

use super::{Curve, ExperimentSpec, Kind, ParamSpec, Recorder, RefinementLevel, Verdict};
use crate::error::{Error, Result};
use crate::kernel::{default_eps0, smooth_f, MollifierSpec};
use crate::localtime::{
    default_level_grid, default_mollifier, hat, martingale_l2_bound, occupation_formula_check,
    occupation_formula_check_with, occupation_until, MartingaleIntegrator, SmallJumpInM,
};
use crate::params::StableParams;
use crate::pathsim::{
    empirical_char_function, path_rng, simulate_path_jumpdecomp_stream, simulate_path_marginal_stream, SimConfig,
    StableSampler,
};
use crate::quad::Tolerance;
use crate::spectral::{
    char_function, existence_integral, generator_apply, generator_apply_windowed, generator_quadrature,
    negative_moment_bound, transition_density, Gaussian, Grid, GridFunction, SmoothFunction, Window,
};
use crate::stats::{ks_two_sample, median, Moments};

/// Agreement demanded between the spectral and direct generators.
const ORACLE_TOLERANCE: f64 = 1e-4;
/// KS verdicts pass above this p-value.
const KS_LEVEL: f64 = 1e-3;
const MASS_TOLERANCE: f64 = 1e-6;
const SYMMETRY_TOLERANCE: f64 = 1e-8;
const SCALING_TOLERANCE: f64 = 1e-6;
/// Convergent partial integrals may move less than this between cutoffs.
const EXISTENCE_STEP: f64 = 1e-2;
/// Divergent partial integrals must grow by more than this per decade.
const DIVERGENCE_GROWTH: f64 = 0.1;
const NONNEGATIVITY_SLACK: f64 = 0.05;
const NONNEGATIVITY_FRACTION: f64 = 0.01;
const TOTAL_TIME_TOLERANCE: f64 = 0.02;

fn skew(alpha: f64, beta: f64) -> ParamSpec {
    ParamSpec::Skewness { alpha, beta }
}

fn coef(alpha: f64, c_plus: f64, c_minus: f64) -> ParamSpec {
    ParamSpec::Coefficients { alpha, c_plus, c_minus }
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn req<T: Clone>(slot: &Option<T>, name: &str) -> Result<T> {
    slot.clone().ok_or_else(|| Error::Config(format!("setting `{name}` missing")))
}

pub(super) fn with_defaults(mut spec: ExperimentSpec) -> ExperimentSpec {
    let s = &mut spec.settings;
    let default_params: Vec<ParamSpec>;
    let mut sim = spec.sim.unwrap_or_default();
    let user_sim = spec.sim.is_some();
    match spec.kind {
        Kind::GeneratorIdentity => {
            default_params =
                vec![skew(1.2, 0.0), skew(1.5, 0.0), skew(1.5, 0.5), skew(1.8, -1.0), skew(1.3, 1.0)];
            fill(&mut s.threshold, 1e-2);
            fill(&mut s.grid_half_width, 40.0);
            fill(&mut s.grid_points, 1 << 14);
            fill(&mut s.eval_radius, 10.0);
            fill(&mut s.bump_n, 1);
            fill(&mut s.oracle_params, vec![skew(1.5, 0.0), skew(1.5, 0.5), skew(1.8, -0.5)]);
            fill(&mut s.oracle_points, 20);
        }
        Kind::SamplerValidation => {
            default_params = vec![coef(1.5, 1.0, 1.0), coef(1.5, 1.5, 0.5), coef(1.5, 1.0, 0.0), coef(1.5, 0.0, 1.0)];
            fill(&mut s.samples, 100_000);
            fill(&mut s.dt, 1.0);
            fill(&mut s.u_values, vec![0.5, 1.0, 2.0, 4.0]);
            fill(&mut s.threshold, 4.0);
            fill(&mut s.scheme_samples, 10_000);
            if !user_sim {
                sim.n_steps = 64;
            }
        }
        Kind::MartingaleZeroMean => {
            default_params = vec![coef(1.5, 1.0, 1.0)];
            fill(&mut s.paths, 10_000);
            fill(&mut s.levels, vec![0.0, 0.5]);
            fill(&mut s.checkpoints, vec![0.25, 0.5, 1.0]);
            fill(&mut s.threshold, 4.0);
            // The proxy increments carry their Itô drift, so only the jump part is a martingale.
            fill(&mut s.small_jump_in_m, SmallJumpInM::Drop);
            if !user_sim {
                sim.n_steps = 4096;
            }
        }
        Kind::EstimatorAgreement => {
            default_params = vec![coef(1.5, 1.0, 1.0)];
            if spec.refinement.is_empty() {
                spec.refinement = (0..3)
                    .map(|k| RefinementLevel { eps: 4e-3 / (1 << k) as f64, n: 8 << k, n_steps: 1024 << k })
                    .collect();
            }
            fill(&mut s.paths, 2_000);
            fill(&mut s.levels, vec![0.0]);
            fill(&mut s.threshold, 0.1);
            fill(&mut s.small_jump_in_m, SmallJumpInM::Include);
        }
        Kind::OccupationFormula => {
            default_params = vec![coef(1.5, 1.0, 1.0)];
            if !user_sim {
                sim.n_steps = 4096;
            }
            fill(&mut s.paths, 100);
            fill(&mut s.mollifier_n, default_mollifier(sim.eps).n());
            fill(&mut s.hat_width, 1.0);
            fill(&mut s.threshold, 0.05);
            fill(&mut s.small_jump_in_m, SmallJumpInM::Include);
        }
        Kind::MomentTests => {
            default_params = vec![coef(1.5, 1.0, 1.0)];
            fill(&mut s.gammas, vec![0.3, 0.5, 0.7]);
            fill(&mut s.times, vec![0.5, 1.0]);
            fill(&mut s.xs, vec![0.0, 1.0]);
            fill(&mut s.samples, 100_000);
            fill(&mut s.threshold, 4.0);
        }
        Kind::ExistenceScan => {
            default_params = vec![coef(1.5, 1.0, 1.0)];
            fill(&mut s.alphas, vec![1.2, 1.5, 1.8, 0.9]);
            fill(&mut s.cutoffs, vec![1e2, 1e4, 1e6]);
            fill(&mut s.threshold, EXISTENCE_STEP);
        }
        Kind::DensityReport => {
            default_params = vec![coef(1.5, 1.0, 1.0), coef(1.5, 1.5, 0.5)];
            fill(&mut s.times, vec![0.5, 1.0, 2.0]);
            fill(&mut s.grid_half_width, 40.0);
            fill(&mut s.grid_points, 1 << 14);
        }
    }
    if spec.params.is_empty() {
        spec.params = default_params;
    }
    // the spec seed is the one that counts
    sim.seed = spec.seed;
    spec.sim = Some(sim);
    spec
}

fn config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn nonempty<T>(v: &Option<Vec<T>>, name: &str) -> Result<()> {
    match v {
        Some(v) if v.is_empty() => Err(Error::Config(format!("`{name}` must not be empty"))),
        _ => Ok(()),
    }
}

pub(super) fn validate(spec: &ExperimentSpec) -> Result<()> {
    if spec.kind != Kind::ExistenceScan {
        for p in &spec.params {
            p.resolve().map_err(config)?;
        }
    }
    let sim = spec.sim.unwrap_or_default();
    sim.validate().map_err(config)?;
    let s = &spec.settings;
    for p in s.oracle_params.iter().flatten() {
        p.resolve().map_err(config)?;
    }
    for r in &spec.refinement {
        SimConfig { eps: r.eps, n_steps: r.n_steps, ..sim }.validate().map_err(config)?;
        MollifierSpec::new(r.n).map_err(config)?;
    }
    nonempty(&s.levels, "levels")?;
    nonempty(&s.checkpoints, "checkpoints")?;
    nonempty(&s.u_values, "u_values")?;
    nonempty(&s.gammas, "gammas")?;
    nonempty(&s.times, "times")?;
    nonempty(&s.xs, "xs")?;
    nonempty(&s.alphas, "alphas")?;
    if let Some(p) = s.paths {
        if p < 2 {
            return Err(Error::Config(format!("need at least 2 paths, got {p}")));
        }
    }
    if let Some(n) = s.samples {
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 samples, got {n}")));
        }
    }
    if let Some(c) = &s.checkpoints {
        if c.windows(2).any(|w| w[1] < w[0]) || c.iter().any(|t| !(*t >= 0.0 && *t <= sim.horizon)) {
            return Err(Error::Config("checkpoints must be ascending within [0, horizon]".into()));
        }
    }
    if let Some(c) = &s.cutoffs {
        if c.len() < 2 || c.windows(2).any(|w| !(w[1] > w[0])) || c[0] <= 0.0 {
            return Err(Error::Config("cutoffs must be at least two ascending positive values".into()));
        }
    }
    if let Some(g) = &s.gammas {
        if g.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(Error::Config("gammas must lie in (0,1)".into()));
        }
    }
    if let Some(t) = &s.times {
        if t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Config("times must be positive".into()));
        }
    }
    if let Some(w) = s.hat_width {
        if !(w > 0.0) {
            return Err(Error::Config("hat_width must be positive".into()));
        }
    }
    if let Some(n) = s.mollifier_n {
        MollifierSpec::new(n).map_err(config)?;
    }
    if let (Some(h), Some(n)) = (s.grid_half_width, s.grid_points) {
        Grid::new(h, n).map_err(config)?;
    }
    if spec.kind == Kind::EstimatorAgreement && spec.refinement.len() < 2 {
        return Err(Error::Config("estimator agreement needs at least two refinement levels".into()));
    }
    Ok(())
}

pub(super) fn run(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    match spec.kind {
        Kind::GeneratorIdentity => generator_identity(spec, rec),
        Kind::SamplerValidation => sampler_validation(spec, rec),
        Kind::MartingaleZeroMean => martingale_zero_mean(spec, rec),
        Kind::EstimatorAgreement => estimator_agreement(spec, rec),
        Kind::OccupationFormula => occupation_formula(spec, rec),
        Kind::MomentTests => moment_tests(spec, rec),
        Kind::ExistenceScan => existence_scan(spec, rec),
        Kind::DensityReport => density_report(spec, rec),
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn generator_identity(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let grid = Grid::new(req(&s.grid_half_width, "grid_half_width")?, req(&s.grid_points, "grid_points")?)?;
    let moll = MollifierSpec::new(req(&s.bump_n, "bump_n")?)?;
    let half = grid.half_width();
    let window = Window { inner: 0.5 * half, outer: 0.75 * half };
    let radius = req(&s.eval_radius, "eval_radius")?;
    let threshold = req(&s.threshold, "threshold")?;
    for p in &spec.params {
        let params = p.resolve()?;
        let label = p.label();
        rec.check(&format!("generator-identity[{label}]"), |rec| {
            let out = generator_apply_windowed(
                &params,
                &grid,
                |x| smooth_f(&params, moll, x).unwrap_or(f64::NAN),
                window,
                radius,
            )?;
            let mut curve = Curve::new(&["x", "generator", "phi"]);
            let (mut err, mut peak) = (0.0f64, 0.0f64);
            for (x, v) in out {
                let phi = moll.density(x);
                err = err.max((v - phi).abs());
                peak = peak.max(phi.abs());
                curve.push(vec![x, v, phi]);
            }
            let rel = finite(err / peak, "generator identity error")?;
            rec.stat(format!("identity_rel_error[{label}]"), rel);
            rec.curve(format!("identity[{label}]"), curve);
            Ok(Verdict::below(format!("generator-identity[{label}]"), rel, threshold))
        })?;
    }

    let points = req(&s.oracle_points, "oracle_points")?;
    let bump = Gaussian::standard();
    // far tighter than the criterion; the skewed far tail cannot reach 1e-10
    let tol = Tolerance::new(1e-9, 1e-7);
    for p in req(&s.oracle_params, "oracle_params")? {
        let params = p.resolve()?;
        let label = p.label();
        rec.check(&format!("generator-oracle[{label}]"), |rec| {
            let f = GridFunction::from_fn(grid, |x| bump.value(x))?;
            let spectral = generator_apply(&params, &f)?;
            let indices: Vec<usize> = (0..points)
                .map(|k| {
                    let x = -4.0 + 8.0 * k as f64 / (points.max(2) - 1) as f64;
                    ((x + half) / grid.spacing()).round() as usize
                })
                .collect();
            let mut scale = 0.0f64;
            let mut pairs = Vec::with_capacity(indices.len());
            for &j in &indices {
                let direct = generator_quadrature(&params, &bump, grid.x(j), 1e-4, f64::INFINITY, &tol)?.value;
                scale = scale.max(spectral.values()[j].abs());
                pairs.push((grid.x(j), spectral.values()[j], direct));
            }
            let err = pairs.iter().fold(0.0f64, |m, &(_, a, b)| m.max((a - b).abs()));
            let rel = finite(err / scale, "oracle error")?;
            let mut curve = Curve::new(&["x", "spectral", "direct"]);
            for (x, a, b) in pairs {
                curve.push(vec![x, a, b]);
            }
            rec.curve(format!("oracle[{label}]"), curve);
            rec.stat(format!("oracle_rel_error[{label}]"), rel);
            Ok(Verdict::below(format!("generator-oracle[{label}]"), rel, ORACLE_TOLERANCE))
        })?;
    }
    Ok(())
}

fn z_score(diff: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        diff.abs() / stderr
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::MAX
    }
}

fn sampler_validation(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let n = req(&s.samples, "samples")?;
    let dt = req(&s.dt, "dt")?;
    let threshold = req(&s.threshold, "threshold")?;
    let us = req(&s.u_values, "u_values")?;
    for (idx, p) in spec.params.iter().enumerate() {
        let params = p.resolve()?;
        let label = p.label();
        let sampler = StableSampler::new(&params, dt);
        let mut rng = path_rng(spec.seed, idx as u64);
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let mut worst = 0.0f64;
        for &u in &us {
            let emp = empirical_char_function(&draws, u)?;
            let exact = char_function(&params, u, dt)?;
            let zr = z_score(emp.value.re - exact.re, emp.stderr_re);
            let zi = z_score(emp.value.im - exact.im, emp.stderr_im);
            rec.stat(format!("cf_z_re[{label},u={u}]"), zr);
            rec.stat(format!("cf_z_im[{label},u={u}]"), zi);
            worst = worst.max(zr).max(zi);
        }
        rec.verdict(Verdict::below(format!("sampler-cf[{label}]"), worst, threshold));
    }

    let m = req(&s.scheme_samples, "scheme_samples")?;
    if m > 0 {
        let p = spec.params[0];
        let params = p.resolve()?;
        let sim = spec.sim.unwrap_or_default();
        // distinct seeds keep the two samples independent
        let marginal_sim = SimConfig { seed: sim.seed.wrapping_add(1), ..sim };
        let jump: Vec<f64> = (0..m as u64)
            .into_par_iter()
            .map(|k| simulate_path_jumpdecomp_stream(&params, &sim, k).map(|p| p.terminal()))
            .collect::<Result<_>>()?;
        let marginal: Vec<f64> = (0..m as u64)
            .into_par_iter()
            .map(|k| simulate_path_marginal_stream(&params, &marginal_sim, k).map(|p| p.terminal()))
            .collect::<Result<_>>()?;
        let ks = ks_two_sample(&jump, &marginal)?;
        rec.stat(format!("ks_statistic[{}]", p.label()), ks.statistic);
        rec.stat(format!("ks_p_value[{}]", p.label()), ks.p_value);
        rec.verdict(Verdict::above(format!("scheme-agreement[{}]", p.label()), ks.p_value, KS_LEVEL));
    }
    Ok(())
}

fn martingale_zero_mean(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let p = spec.params[0];
    let params = p.resolve()?;
    let sim = spec.sim.unwrap_or_default();
    let paths = req(&s.paths, "paths")?;
    let levels = req(&s.levels, "levels")?;
    let checkpoints = req(&s.checkpoints, "checkpoints")?;
    let threshold = req(&s.threshold, "threshold")?;
    let integ = MartingaleIntegrator::new(&params, sim.eps, req(&s.small_jump_in_m, "small_jump_in_m")?)?;
    let per_path: Vec<Vec<f64>> = (0..paths as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path_jumpdecomp_stream(&params, &sim, k)?;
            let mut row = Vec::with_capacity(levels.len() * checkpoints.len());
            for &a in &levels {
                row.extend(integ.trajectory(&path, a, &checkpoints)?);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let eps0 = default_eps0(params.alpha());
    for (i, &a) in levels.iter().enumerate() {
        for (j, &t) in checkpoints.iter().enumerate() {
            let col = i * checkpoints.len() + j;
            let m: Moments = per_path.iter().map(|r| r[col]).collect();
            let sq: Moments = per_path.iter().map(|r| r[col] * r[col]).collect();
            let tag = format!("a={a},t={t}");
            rec.stat(format!("mean_M[{tag}]"), m.mean());
            rec.stat(format!("stderr_M[{tag}]"), m.stderr());
            rec.stat(format!("second_moment_M[{tag}]"), sq.mean());
            rec.verdict(Verdict::below(format!("martingale-zero-mean[{tag}]"), z_score(m.mean(), m.stderr()), threshold));
            if t > 0.0 {
                let bound = martingale_l2_bound(&params, t, eps0)?;
                rec.stat(format!("l2_bound[{tag}]"), bound);
                rec.verdict(Verdict::below(format!("martingale-l2-bound[{tag}]"), sq.mean() / bound, 2.0));
            }
        }
    }
    Ok(())
}

fn estimator_agreement(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let params = spec.params[0].resolve()?;
    let base = spec.sim.unwrap_or_default();
    let paths = req(&s.paths, "paths")?;
    let levels = req(&s.levels, "levels")?;
    let threshold = req(&s.threshold, "threshold")?;
    let mode = req(&s.small_jump_in_m, "small_jump_in_m")?;
    let mut d2 = vec![Vec::new(); levels.len()];
    let mut curve = Curve::new(&["level", "a", "eps", "n", "n_steps", "msd", "msd_stderr", "mean_tanaka", "mean_occupation"]);
    let last = spec.refinement.len() - 1;
    for (r, rung) in spec.refinement.iter().enumerate() {
        let sim = SimConfig { eps: rung.eps, n_steps: rung.n_steps, ..base };
        let moll = MollifierSpec::new(rung.n)?;
        let integ = MartingaleIntegrator::new(&params, rung.eps, mode)?;
        let rows: Vec<Vec<(f64, f64)>> = (0..paths as u64)
            .into_par_iter()
            .map(|k| {
                let path = simulate_path_jumpdecomp_stream(&params, &sim, k)?;
                levels
                    .iter()
                    .map(|&a| {
                        let tan = integ.tanaka(&path, a)?.value;
                        Ok((tan, occupation_until(&path, a, moll, sim.horizon)))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (i, &a) in levels.iter().enumerate() {
            let diff: Moments = rows.iter().map(|row| (row[i].0 - row[i].1).powi(2)).collect();
            let tan: Moments = rows.iter().map(|row| row[i].0).collect();
            let occ: Moments = rows.iter().map(|row| row[i].1).collect();
            let tag = format!("a={a},level={r}");
            rec.stat(format!("msd[{tag}]"), diff.mean());
            rec.stat(format!("msd_stderr[{tag}]"), diff.stderr());
            rec.stat(format!("mean_tanaka[{tag}]"), tan.mean());
            rec.stat(format!("stderr_tanaka[{tag}]"), tan.stderr());
            rec.stat(format!("mean_occupation[{tag}]"), occ.mean());
            rec.stat(format!("stderr_occupation[{tag}]"), occ.stderr());
            curve.push(vec![
                r as f64,
                a,
                rung.eps,
                rung.n as f64,
                rung.n_steps as f64,
                diff.mean(),
                diff.stderr(),
                tan.mean(),
                occ.mean(),
            ]);
            d2[i].push(diff.mean());
            if r == last {
                let rel = (tan.mean() - occ.mean()).abs() / occ.mean().abs();
                rec.verdict(Verdict::below(format!("estimator-mean-agreement[a={a}]"), rel, threshold));
                let floor = -NONNEGATIVITY_SLACK * tan.mean();
                let below = rows.iter().filter(|row| row[i].0 < floor).count() as f64 / rows.len() as f64;
                rec.stat(format!("tanaka_negative_fraction[a={a}]"), below);
                rec.verdict(Verdict::below(format!("tanaka-nonnegativity[a={a}]"), below, NONNEGATIVITY_FRACTION));
            }
        }
    }
    for (i, &a) in levels.iter().enumerate() {
        for k in 1..d2[i].len() {
            rec.verdict(Verdict::below(
                format!("estimator-l2-decrease[a={a},level={}->{k}]", k - 1),
                d2[i][k] / d2[i][k - 1],
                1.0,
            ));
        }
    }
    rec.curve("refinement", curve);
    Ok(())
}

fn occupation_formula(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let params = spec.params[0].resolve()?;
    let sim = spec.sim.unwrap_or_default();
    let paths = req(&s.paths, "paths")?;
    let moll = MollifierSpec::new(req(&s.mollifier_n, "mollifier_n")?)?;
    let width = req(&s.hat_width, "hat_width")?;
    let threshold = req(&s.threshold, "threshold")?;
    let integ = MartingaleIntegrator::new(&params, sim.eps, req(&s.small_jump_in_m, "small_jump_in_m")?)?;
    let rows: Vec<[f64; 3]> = (0..paths as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path_jumpdecomp_stream(&params, &sim, k)?;
            let grid = default_level_grid(&path);
            let g = hat(median(&path.values)?, width);
            let occ = occupation_formula_check(&path, &g, &grid, moll)?;
            let tan = occupation_formula_check_with(&path, &g, &grid, 0.0, |a| Ok(integ.tanaka(&path, a)?.value))?;
            let total = occupation_formula_check(&path, |_| 1.0, &grid, moll)?;
            Ok([occ, tan, total])
        })
        .collect::<Result<_>>()?;
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let mut curve = Curve::new(&["path", "hat_occupation", "hat_tanaka", "total_time"]);
    for (k, r) in rows.iter().enumerate() {
        curve.push(vec![k as f64, r[0], r[1], r[2]]);
    }
    rec.curve("residuals", curve);
    for (c, name, limit) in [
        (0, "occupation-formula-hat[occupation]", threshold),
        (1, "occupation-formula-hat[tanaka]", threshold),
        (2, "occupation-formula-total-time[occupation]", TOTAL_TIME_TOLERANCE),
    ] {
        let med = median(&column(c))?;
        rec.stat(format!("median_residual[{name}]"), med);
        rec.verdict(Verdict::below(name, med, limit));
    }
    Ok(())
}

fn moment_tests(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let params = spec.params[0].resolve()?;
    let n = req(&s.samples, "samples")?;
    let sigmas = req(&s.threshold, "threshold")?;
    for (ti, &t) in req(&s.times, "times")?.iter().enumerate() {
        let sampler = StableSampler::new(&params, t);
        let mut rng = path_rng(spec.seed, ti as u64);
        let draws: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        for &gamma in &req(&s.gammas, "gammas")? {
            let bound = negative_moment_bound(&params, gamma, t)?.bound;
            for &x in &req(&s.xs, "xs")? {
                let m: Moments = draws.iter().map(|v| (v - x).abs().powf(-gamma)).collect();
                let tag = format!("gamma={gamma},t={t},x={x}");
                rec.stat(format!("empirical[{tag}]"), m.mean());
                rec.stat(format!("stderr[{tag}]"), m.stderr());
                rec.stat(format!("bound[{tag}]"), bound);
                let allowed = bound * (1.0 + sigmas * m.stderr() / m.mean());
                rec.verdict(Verdict::below(format!("negative-moment-bound[{tag}]"), m.mean(), allowed));
            }
        }
    }
    Ok(())
}

fn existence_scan(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let (c_plus, c_minus) = match spec.params[0] {
        ParamSpec::Coefficients { c_plus, c_minus, .. } => (c_plus, c_minus),
        ParamSpec::Skewness { beta, .. } => (1.0 + beta, 1.0 - beta),
    };
    let cutoffs = req(&s.cutoffs, "cutoffs")?;
    let threshold = req(&s.threshold, "threshold")?;
    for alpha in req(&s.alphas, "alphas")? {
        let mut curve = Curve::new(&["cutoff", "partial_integral"]);
        if alpha > 1.0 {
            let values: Vec<f64> =
                cutoffs.iter().map(|&u| existence_integral(alpha, c_plus, c_minus, u)).collect::<Result<_>>()?;
            for (u, v) in cutoffs.iter().zip(&values) {
                rec.stat(format!("partial_integral[alpha={alpha},cutoff={u:e}]"), *v);
                curve.push(vec![*u, *v]);
            }
            let step = values.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
            rec.verdict(Verdict::below(format!("existence-converges[alpha={alpha}]"), step, threshold));
        } else {
            let decades = (cutoffs[cutoffs.len() - 1] / cutoffs[0]).log10().round() as i32;
            let mut u = cutoffs[0];
            let mut prev = existence_integral(alpha, c_plus, c_minus, u)?;
            curve.push(vec![u, prev]);
            let mut growth = f64::INFINITY;
            for _ in 0..decades.max(1) {
                u *= 10.0;
                let v = existence_integral(alpha, c_plus, c_minus, u)?;
                curve.push(vec![u, v]);
                growth = growth.min(v / prev - 1.0);
                prev = v;
            }
            rec.stat(format!("min_decade_growth[alpha={alpha}]"), growth);
            rec.verdict(Verdict::above(format!("existence-diverges[alpha={alpha}]"), growth, DIVERGENCE_GROWTH));
        }
        rec.curve(format!("existence[alpha={alpha}]"), curve);
    }
    Ok(())
}

fn density_report(spec: &ExperimentSpec, rec: &mut Recorder) -> Result<()> {
    let s = &spec.settings;
    let grid = Grid::new(req(&s.grid_half_width, "grid_half_width")?, req(&s.grid_points, "grid_points")?)?;
    let n = grid.n_points();
    for p in &spec.params {
        let params: StableParams = p.resolve()?;
        let label = p.label();
        for t in req(&s.times, "times")? {
            let tag = format!("{label},t={t}");
            let mut dens = None;
            rec.check(&format!("density-mass[{tag}]"), |rec| {
                let d = transition_density(&params, t, &grid)?;
                let mass = d.integral();
                rec.stat(format!("mass[{tag}]"), mass);
                let v = Verdict::below(format!("density-mass[{tag}]"), (mass - 1.0).abs(), MASS_TOLERANCE);
                dens = Some(d);
                Ok(v)
            })?;
            let Some(d) = dens else { continue };
            let peak = d.max_abs();
            if params.beta() == 0.0 {
                let v = d.values();
                let asym = (1..n).fold(0.0f64, |m, j| m.max((v[j] - v[n - j]).abs())) / peak;
                rec.stat(format!("asymmetry[{tag}]"), asym);
                rec.verdict(Verdict::below(format!("density-symmetry[{tag}]"), asym, SYMMETRY_TOLERANCE));
            }
            if t != 1.0 {
                // p_t(x) = t^{−1/α} p_1(t^{−1/α} x): compare against p_1 on the rescaled grid
                let scale = t.powf(-1.0 / params.alpha());
                rec.check(&format!("density-self-similarity[{tag}]"), |rec| {
                    let unit_grid = Grid::new(grid.half_width() * scale, n)?;
                    let unit = transition_density(&params, 1.0, &unit_grid)?;
                    let err = d
                        .values()
                        .iter()
                        .zip(unit.values())
                        .fold(0.0f64, |m, (a, b)| m.max((a - scale * b).abs()))
                        / peak;
                    rec.stat(format!("scaling_error[{tag}]"), err);
                    Ok(Verdict::below(format!("density-self-similarity[{tag}]"), err, SCALING_TOLERANCE))
                })?;
            } else {
                let mut curve = Curve::new(&["x", "density"]);
                for (x, v) in grid.points().zip(d.values()) {
                    curve.push(vec![x, *v]);
                }
                rec.curve(format!("density[{label}]"), curve);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentSpec, Kind};
    use crate::error::Error;

    #[test]
    fn defaults_fill_every_kind() {
        for kind in [
            Kind::GeneratorIdentity,
            Kind::MartingaleZeroMean,
            Kind::OccupationFormula,
            Kind::EstimatorAgreement,
            Kind::SamplerValidation,
            Kind::MomentTests,
            Kind::ExistenceScan,
            Kind::DensityReport,
        ] {
            let s = super::with_defaults(ExperimentSpec::new(kind, 5));
            assert!(!s.params.is_empty());
            assert_eq!(s.sim.unwrap().seed, 5);
            super::validate(&s).unwrap();
        }
    }

    #[test]
    fn bad_ranges_are_config_errors() {
        let mut s = ExperimentSpec::new(Kind::MomentTests, 1);
        s.settings.gammas = Some(vec![1.5]);
        assert!(matches!(run_experiment(&s), Err(Error::Config(_))));
        let mut s = ExperimentSpec::new(Kind::MartingaleZeroMean, 1);
        s.params = vec![super::coef(2.5, 1.0, 1.0)];
        assert!(matches!(run_experiment(&s), Err(Error::Config(_))));
        let mut s = ExperimentSpec::new(Kind::EstimatorAgreement, 1);
        s.refinement = vec![super::RefinementLevel { eps: 1e-3, n: 4, n_steps: 8 }];
        assert!(matches!(run_experiment(&s), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_sampler_config_passes_trivially() {
        let mut s = ExperimentSpec::new(Kind::SamplerValidation, 1);
        s.settings.dt = Some(1e-300);
        s.settings.u_values = Some(vec![0.0]);
        s.settings.samples = Some(100);
        s.settings.scheme_samples = Some(0);
        let r = run_experiment(&s).unwrap();
        assert!(r.passed());
        assert!(r.statistics.values().all(|z| *z == 0.0));
    }

    #[test]
    fn small_martingale_run() {
        let mut s = ExperimentSpec::new(Kind::MartingaleZeroMean, 2);
        s.sim = Some(crate::pathsim::SimConfig { n_steps: 64, eps: 0.05, ..Default::default() });
        s.settings.paths = Some(200);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.verdicts.len(), 12);
        assert!(r.verdicts.iter().all(|v| v.margin.is_finite()));
        assert!(r.statistics.contains_key("mean_M[a=0.5,t=0.25]"));
    }

    #[test]
    fn moment_bound_holds_on_a_small_sample() {
        let mut s = ExperimentSpec::new(Kind::MomentTests, 3);
        s.settings.samples = Some(5_000);
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.verdicts.len(), 12);
        assert!(r.passed(), "{:?}", r.verdicts.iter().filter(|v| !v.passed).collect::<Vec<_>>());
    }
}
