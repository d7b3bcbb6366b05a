use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use stable_tanaka::experiments::{emit_report, run_experiment, ExperimentSpec, Kind, ParamSpec, ReportFormat};
use stable_tanaka::kernel::MollifierSpec;
use stable_tanaka::localtime::{default_mollifier, occupation_until, MartingaleIntegrator, SmallJumpInM};
use stable_tanaka::pathsim::{simulate_path_jumpdecomp, simulate_path_marginal, SimConfig, SmallJumpMode};
use stable_tanaka::{Error, Result};

/// Default output directory when `--out` is not given.
const OUT_ENV: &str = "STABLE_TANAKA_OUT";

#[derive(Parser)]
#[command(name = "stable-tanaka", version, about = "Stable processes, their Tanaka kernel and local times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (JSON).
    Run {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value`, dotted keys, JSON values; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value = "json", value_parser = ["json", "csv-bundle"])]
        format: String,
    },
    /// Transition-density report (curve plus mass, symmetry and scaling checks).
    Density {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        times: Vec<f64>,
        #[arg(long, default_value_t = 40.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1 << 14)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one path and write it as CSV plus a JSON sidecar.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Exact-marginal increments instead of the jump decomposition.
        #[arg(long)]
        marginal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local-time curve a ↦ L̂^a along one simulated path, both estimators.
    Localtime {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = -2.0)]
        from: f64,
        #[arg(long, default_value_t = 2.0)]
        to: f64,
        #[arg(long, default_value_t = 81)]
        levels: usize,
        /// Mollifier index; defaults to eps^{-1/2}.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Skewness in [-1,1] with c+ + c- = 2; ignored when both coefficients are set.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long)]
    c_plus: Option<f64>,
    #[arg(long)]
    c_minus: Option<f64>,
}

impl ParamArgs {
    fn spec(&self) -> ParamSpec {
        match (self.c_plus, self.c_minus) {
            (Some(c_plus), Some(c_minus)) => ParamSpec::Coefficients { alpha: self.alpha, c_plus, c_minus },
            _ => ParamSpec::Skewness { alpha: self.alpha, beta: self.beta },
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1024)]
    n_steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Drop the small jumps instead of the Brownian proxy.
    #[arg(long)]
    drop_small_jumps: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            horizon: self.horizon,
            n_steps: self.n_steps,
            eps: self.eps,
            small_jump_mode: if self.drop_small_jumps { SmallJumpMode::Drop } else { SmallJumpMode::Gaussian },
            seed: self.seed,
            x0: self.x0,
        }
    }
}

fn out_dir(flag: Option<PathBuf>, spec: Option<&ExperimentSpec>) -> PathBuf {
    flag.or_else(|| spec.and_then(|s| s.output.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("stable-tanaka-out"))
}

/// Runs a spec, writes the report, and prints one line per verdict.
fn run_and_emit(spec: &ExperimentSpec, out: PathBuf, format: ReportFormat) -> Result<bool> {
    let report = run_experiment(spec)?;
    for v in &report.verdicts {
        println!(
            "{} {} value={:.6e} threshold={:.6e} margin={:.3e}",
            if v.passed { "PASS" } else { "FAIL" },
            v.criterion,
            v.value,
            v.threshold,
            v.margin
        );
    }
    for p in emit_report(&report, format, &out)? {
        info!("wrote {}", p.display());
    }
    Ok(report.passed())
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { spec, seed, out, overrides, format } => {
            let mut overrides = overrides;
            if let Some(seed) = seed {
                overrides.push(format!("seed={seed}"));
            }
            let spec = ExperimentSpec::load(&spec, &overrides)?;
            let dir = out_dir(out, Some(&spec));
            run_and_emit(&spec, dir, format.parse()?)
        }
        Command::Density { params, times, half_width, points, out } => {
            let mut spec = ExperimentSpec::new(Kind::DensityReport, 0);
            spec.params = vec![params.spec()];
            spec.settings.times = Some(times);
            spec.settings.grid_half_width = Some(half_width);
            spec.settings.grid_points = Some(points);
            run_and_emit(&spec, out_dir(out, None), ReportFormat::CsvBundle)
        }
        Command::Simulate { params, sim, marginal, out } => {
            let p = params.spec().resolve().map_err(|e| Error::Config(e.to_string()))?;
            let config = sim.config();
            config.validate()?;
            let path = if marginal { simulate_path_marginal(&p, &config)? } else { simulate_path_jumpdecomp(&p, &config)? };
            let (csv, sidecar) = path.write(&out_dir(out, None), &format!("path-seed{}", config.seed))?;
            println!("{}\n{}", csv.display(), sidecar.display());
            Ok(true)
        }
        Command::Localtime { params, sim, from, to, levels, n, out } => {
            let p = params.spec().resolve().map_err(|e| Error::Config(e.to_string()))?;
            let config = sim.config();
            config.validate()?;
            if !(levels >= 2 && to > from) {
                return Err(Error::Config("need at least two levels and to > from".into()));
            }
            let moll = match n {
                Some(n) => MollifierSpec::new(n).map_err(|e| Error::Config(e.to_string()))?,
                None => default_mollifier(config.eps),
            };
            let path = simulate_path_jumpdecomp(&p, &config)?;
            let integ = MartingaleIntegrator::new(&p, config.eps, SmallJumpInM::Include)?;
            let mut csv = String::from("a,tanaka,occupation\n");
            for k in 0..levels {
                let a = from + (to - from) * k as f64 / (levels - 1) as f64;
                let tan = integ.tanaka(&path, a)?.value;
                let occ = occupation_until(&path, a, moll, config.horizon);
                csv.push_str(&format!("{a},{tan},{occ}\n"));
            }
            let dir = out_dir(out, None);
            fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
            let file = dir.join(format!("localtime-seed{}.csv", config.seed));
            write(file.clone(), &csv)?;
            let meta = serde_json::json!({
                "params": params.spec(),
                "sim": config,
                "mollifier_n": moll.n(),
                "small_jump_in_m": SmallJumpInM::Include,
            });
            write(dir.join(format!("localtime-seed{}.json", config.seed)), &serde_json::to_string_pretty(&meta)?)?;
            println!("{}", file.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
