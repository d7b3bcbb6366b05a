//! Seeded, config-driven verification experiments and their reports.
//!
//! A spec names one of eight kinds. Every setting left out takes the
//! kind's default, which is the desk-scale acceptance setup, so
//! `{"kind": "martingale-zero-mean", "seed": 1}` is a complete spec.

mod kinds;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::localtime::SmallJumpInM;
use crate::params::StableParams;
use crate::pathsim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    GeneratorIdentity,
    MartingaleZeroMean,
    OccupationFormula,
    EstimatorAgreement,
    SamplerValidation,
    MomentTests,
    ExistenceScan,
    DensityReport,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::GeneratorIdentity => "generator-identity",
            Kind::MartingaleZeroMean => "martingale-zero-mean",
            Kind::OccupationFormula => "occupation-formula",
            Kind::EstimatorAgreement => "estimator-agreement",
            Kind::SamplerValidation => "sampler-validation",
            Kind::MomentTests => "moment-tests",
            Kind::ExistenceScan => "existence-scan",
            Kind::DensityReport => "density-report",
        }
    }
}

/// A parameter set, either by Lévy-density coefficients or by index and
/// skewness (then `c₊ + c₋ = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ParamSpec {
    Coefficients { alpha: f64, c_plus: f64, c_minus: f64 },
    Skewness { alpha: f64, beta: f64 },
}

impl ParamSpec {
    pub fn resolve(&self) -> Result<StableParams> {
        match *self {
            ParamSpec::Coefficients { alpha, c_plus, c_minus } => StableParams::new(alpha, c_plus, c_minus),
            ParamSpec::Skewness { alpha, beta } => StableParams::with_skewness(alpha, beta),
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            ParamSpec::Coefficients { alpha, .. } | ParamSpec::Skewness { alpha, .. } => alpha,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ParamSpec::Coefficients { alpha, c_plus, c_minus } => format!("alpha={alpha},c+={c_plus},c-={c_minus}"),
            ParamSpec::Skewness { alpha, beta } => format!("alpha={alpha},beta={beta}"),
        }
    }
}

/// One rung of a refinement schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementLevel {
    pub eps: f64,
    pub n: u32,
    pub n_steps: usize,
}

/// Kind-specific knobs; unset ones take the kind's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub paths: Option<usize>,
    pub samples: Option<usize>,
    pub levels: Option<Vec<f64>>,
    pub checkpoints: Option<Vec<f64>>,
    pub threshold: Option<f64>,
    pub grid_half_width: Option<f64>,
    pub grid_points: Option<usize>,
    pub eval_radius: Option<f64>,
    pub bump_n: Option<u32>,
    pub oracle_params: Option<Vec<ParamSpec>>,
    pub oracle_points: Option<usize>,
    pub dt: Option<f64>,
    pub u_values: Option<Vec<f64>>,
    pub scheme_samples: Option<usize>,
    pub gammas: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    pub xs: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<f64>>,
    pub mollifier_n: Option<u32>,
    pub hat_width: Option<f64>,
    pub small_jump_in_m: Option<SmallJumpInM>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub seed: u64,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub refinement: Vec<RefinementLevel>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub settings: Settings,
}

impl ExperimentSpec {
    pub fn new(kind: Kind, seed: u64) -> Self {
        Self { kind, seed, params: Vec::new(), sim: None, refinement: Vec::new(), output: None, settings: Settings::default() }
    }

    /// Parses a JSON spec, applying `key=value` overrides first. Keys are
    /// dotted paths (`sim.n_steps`, `settings.paths`); values are JSON,
    /// falling back to a plain string.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("spec is not valid JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid spec: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, overrides)
    }
}

fn apply_override(root: &mut Value, item: &str) -> Result<()> {
    let (key, raw) = item.split_once('=').ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just set")
            }
            _ => return Err(Error::Config(format!("override `{key}`: `{part}` is not inside an object"))),
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Err(Error::Config(format!("empty override key in `{item}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// pass when value < threshold
    Below,
    /// pass when value > threshold
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    /// Distance to the threshold, positive when passing.
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn below(criterion: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(criterion.into(), value, threshold, Comparison::Below)
    }

    pub fn above(criterion: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(criterion.into(), value, threshold, Comparison::Above)
    }

    fn make(criterion: String, value: f64, threshold: f64, comparison: Comparison) -> Self {
        let margin = match comparison {
            Comparison::Below => threshold - value,
            Comparison::Above => value - threshold,
        };
        Self { criterion, passed: margin > 0.0, value, threshold, comparison, margin, note: None }
    }

    /// A FAIL for a computation that stopped on a numerical error.
    fn from_numeric(criterion: impl Into<String>, err: &Error) -> Option<Self> {
        let mut v = match *err {
            Error::Tolerance { estimate, tolerance } => Self::below(criterion, estimate, tolerance),
            Error::NonDecaying { boundary, max } => {
                Self::below(criterion, boundary / max, crate::spectral::DECAY_THRESHOLD)
            }
            Error::Resolution(_) | Error::NonFinite(_) => Self::below(criterion, 1.0, 0.0),
            _ => return None,
        };
        v.passed = false;
        v.note = Some(err.to_string());
        Some(v)
    }
}

/// Plot-ready table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: Kind,
    /// The spec with every default filled in.
    pub inputs: Value,
    pub statistics: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub curves: BTreeMap<String, Curve>,
    pub versions: BTreeMap<String, String>,
    /// Kept out of the report file (it would break byte-for-byte
    /// reproducibility) and written next to it instead.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    fn check_finite(&self) -> Result<()> {
        for (k, v) in &self.statistics {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("statistics.{k}")));
            }
        }
        for v in &self.verdicts {
            if !(v.value.is_finite() && v.threshold.is_finite() && v.margin.is_finite()) {
                return Err(Error::NonFinite(format!("verdict {}", v.criterion)));
            }
        }
        for (name, c) in &self.curves {
            if c.rows.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("curve {name}")));
            }
        }
        Ok(())
    }
}

/// Collects statistics and verdicts while an experiment runs.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    statistics: BTreeMap<String, f64>,
    verdicts: Vec<Verdict>,
    curves: BTreeMap<String, Curve>,
}

impl Recorder {
    pub(crate) fn stat(&mut self, key: impl Into<String>, value: f64) {
        self.statistics.insert(key.into(), value);
    }

    pub(crate) fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub(crate) fn curve(&mut self, name: impl Into<String>, c: Curve) {
        self.curves.insert(name.into(), c);
    }

    /// Records the verdict of `f`, turning numerical errors into FAILs.
    pub(crate) fn check<F: FnOnce(&mut Recorder) -> Result<Verdict>>(&mut self, criterion: &str, f: F) -> Result<()> {
        match f(self) {
            Ok(v) => self.verdicts.push(v),
            Err(e) => match Verdict::from_numeric(criterion, &e) {
                Some(v) => self.verdicts.push(v),
                None => return Err(e),
            },
        }
        Ok(())
    }
}

/// Fills defaults, validates, runs, and assembles the report. Config
/// problems surface before any computation starts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let spec = kinds::with_defaults(spec.clone());
    kinds::validate(&spec)?;
    let inputs = serde_json::to_value(&spec)?;
    let start = Instant::now();
    let mut rec = Recorder::default();
    kinds::run(&spec, &mut rec)?;
    let mut versions = BTreeMap::new();
    versions.insert("stable-tanaka".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("report-schema".to_string(), "1".to_string());
    Ok(ExperimentReport {
        kind: spec.kind,
        inputs,
        statistics: rec.statistics,
        verdicts: rec.verdicts,
        curves: rec.curves,
        versions,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `<kind>.json` with everything inline.
    Json,
    /// `<kind>/summary.json` without curves plus one CSV per curve.
    CsvBundle,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv-bundle" => Ok(Self::CsvBundle),
            other => Err(Error::Config(format!("unknown report format `{other}` (json or csv-bundle)"))),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn to_sorted_json<T: Serialize>(v: &T) -> Result<String> {
    // serde_json's map type is ordered by key, so going through Value sorts
    // every object.
    let value = serde_json::to_value(v)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

/// Writes the report under `dir` and returns the files written. Refuses
/// reports holding non-finite numbers. Wall time goes to
/// `<kind>.timing.json`.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    report.check_finite()?;
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let name = report.kind.name();
    let mut written = Vec::new();
    match format {
        ReportFormat::Json => {
            let p = dir.join(format!("{name}.json"));
            write(&p, &to_sorted_json(report)?)?;
            written.push(p);
        }
        ReportFormat::CsvBundle => {
            let sub = dir.join(name);
            fs::create_dir_all(&sub).map_err(|source| Error::Io { path: sub.clone(), source })?;
            let mut summary = serde_json::to_value(report)?;
            if let Some(obj) = summary.as_object_mut() {
                obj.remove("curves");
                obj.insert("curve_files".into(), report.curves.keys().map(|k| format!("{}.csv", file_stem(k))).collect());
            }
            let p = sub.join("summary.json");
            write(&p, &to_sorted_json(&summary)?)?;
            written.push(p);
            for (k, c) in &report.curves {
                let p = sub.join(format!("{}.csv", file_stem(k)));
                write(&p, &c.csv())?;
                written.push(p);
            }
        }
    }
    let timing = serde_json::json!({ "kind": name, "wall_time_s": report.wall_time_s });
    let p = dir.join(format!("{name}.timing.json"));
    write(&p, &to_sorted_json(&timing)?)?;
    written.push(p);
    Ok(written)
}

fn file_stem(curve: &str) -> String {
    curve.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let spec = ExperimentSpec::from_json(
            r#"{"kind": "martingale-zero-mean", "seed": 3}"#,
            &["sim.n_steps=64".into(), "settings.paths=10".into(), "seed=9".into()],
        )
        .unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.sim.unwrap().n_steps, 64);
        assert_eq!(spec.settings.paths, Some(10));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentSpec::from_json("{", &[]), Err(Error::Config(_))));
        assert!(matches!(ExperimentSpec::from_json(r#"{"kind": "nope", "seed": 1}"#, &[]), Err(Error::Config(_))));
        assert!(matches!(ExperimentSpec::from_json(r#"{"kind": "moment-tests"}"#, &[]), Err(Error::Config(_))));
        assert!(matches!(
            ExperimentSpec::from_json(r#"{"kind": "moment-tests", "seed": 1, "settings": {"pathz": 3}}"#, &[]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ExperimentSpec::from_json(r#"{"kind": "moment-tests", "seed": 1}"#, &["nokey".into()]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn params_accept_both_forms() {
        let a: ParamSpec = serde_json::from_str(r#"{"alpha": 1.5, "beta": 0.5}"#).unwrap();
        let b: ParamSpec = serde_json::from_str(r#"{"alpha": 1.5, "c_plus": 1.5, "c_minus": 0.5}"#).unwrap();
        assert_eq!(a.resolve().unwrap(), b.resolve().unwrap());
        assert!(serde_json::from_str::<ParamSpec>(r#"{"alpha": 1.5}"#).is_err());
    }

    #[test]
    fn verdict_margins() {
        let v = Verdict::below("x", 0.5, 1.0);
        assert!(v.passed && v.margin == 0.5);
        let v = Verdict::above("y", 0.5, 1.0);
        assert!(!v.passed && v.margin == -0.5);
        let v = Verdict::from_numeric("z", &Error::Tolerance { estimate: 2.0, tolerance: 1.0 }).unwrap();
        assert!(!v.passed && v.note.is_some());
        assert!(Verdict::from_numeric("w", &Error::Config("bad".into())).is_none());
    }

    fn small_report() -> ExperimentReport {
        let spec = ExperimentSpec::from_json(
            r#"{"kind": "existence-scan", "seed": 0, "settings": {"alphas": [1.5], "cutoffs": [10, 100]}}"#,
            &[],
        )
        .unwrap();
        run_experiment(&spec).unwrap()
    }

    #[test]
    fn emission_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let fa = emit_report(&small_report(), ReportFormat::Json, &a).unwrap();
        let fb = emit_report(&small_report(), ReportFormat::Json, &b).unwrap();
        assert_eq!(fs::read(&fa[0]).unwrap(), fs::read(&fb[0]).unwrap());
        let text = fs::read_to_string(&fa[0]).unwrap();
        assert!(text.find("\"curves\"").unwrap() < text.find("\"verdicts\"").unwrap());
    }

    #[test]
    fn nan_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = small_report();
        r.statistics.insert("bad".into(), f64::NAN);
        assert!(matches!(emit_report(&r, ReportFormat::Json, dir.path()), Err(Error::NonFinite(_))));
        assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn csv_bundle_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::from_json(
            r#"{"kind": "density-report", "seed": 0, "settings": {"grid_points": 1024, "grid_half_width": 20}}"#,
            &[],
        )
        .unwrap();
        let r = run_experiment(&spec).unwrap();
        let files = emit_report(&r, ReportFormat::CsvBundle, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert!(names.contains(&"summary.json".to_string()));
        assert!(names.iter().any(|n| n.starts_with("density") && n.ends_with(".csv")));
        let csv = fs::read_to_string(files.iter().find(|p| p.extension().unwrap() == "csv").unwrap()).unwrap();
        assert!(csv.starts_with("x,"));
        assert_eq!(csv.lines().count(), 1025);
    }
}
