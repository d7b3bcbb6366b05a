//! Acceptance suite: every verification criterion at full desk scale,
//! driven through the experiment harness. Each test prints one PASS/FAIL
//! line; run with `--nocapture` to see them.

use std::sync::OnceLock;

use stable_tanaka::experiments::{run_experiment, ExperimentReport, ExperimentSpec, Kind, Verdict};

fn run(kind: Kind, seed: u64) -> ExperimentReport {
    run_experiment(&ExperimentSpec::new(kind, seed)).expect("experiment runs")
}

/// Prints the summary line for the verdicts whose names start with one of
/// `prefixes` and asserts they all pass.
fn judge(title: &str, report: &ExperimentReport, prefixes: &[&str]) {
    let picked: Vec<&Verdict> =
        report.verdicts.iter().filter(|v| prefixes.iter().any(|p| v.criterion.starts_with(p))).collect();
    assert!(!picked.is_empty(), "{title}: no verdicts matched {prefixes:?}");
    let failed: Vec<&&Verdict> = picked.iter().filter(|v| !v.passed).collect();
    let worst = picked.iter().min_by(|a, b| (a.margin / a.threshold.abs().max(f64::MIN_POSITIVE))
        .total_cmp(&(b.margin / b.threshold.abs().max(f64::MIN_POSITIVE))))
        .expect("nonempty");
    println!(
        "{} {title}: {}/{} checks pass; tightest {} value={:.4e} threshold={:.4e}",
        if failed.is_empty() { "PASS" } else { "FAIL" },
        picked.len() - failed.len(),
        picked.len(),
        worst.criterion,
        worst.value,
        worst.threshold,
    );
    for v in &failed {
        println!("    failed {} value={:.6e} threshold={:.6e} margin={:.3e}", v.criterion, v.value, v.threshold, v.margin);
    }
    assert!(failed.is_empty(), "{title}: {} of {} checks failed", failed.len(), picked.len());
}

fn generator_report() -> &'static ExperimentReport {
    static R: OnceLock<ExperimentReport> = OnceLock::new();
    R.get_or_init(|| run(Kind::GeneratorIdentity, 1))
}

fn sampler_report() -> &'static ExperimentReport {
    static R: OnceLock<ExperimentReport> = OnceLock::new();
    R.get_or_init(|| run(Kind::SamplerValidation, 3))
}

#[test]
fn generator_identity() {
    judge("generator identity", generator_report(), &["generator-identity["]);
}

#[test]
fn generator_oracle_equivalence() {
    judge("generator oracle equivalence", generator_report(), &["generator-oracle["]);
}

#[test]
fn sampler_characteristic_function() {
    judge("sampler validation", sampler_report(), &["sampler-cf["]);
}

#[test]
fn scheme_agreement() {
    judge("scheme agreement", sampler_report(), &["scheme-agreement["]);
}

#[test]
fn martingale_zero_mean() {
    let r = run(Kind::MartingaleZeroMean, 5);
    judge("martingale property", &r, &["martingale-zero-mean["]);
}

#[test]
fn estimator_agreement() {
    let r = run(Kind::EstimatorAgreement, 6);
    judge("estimator agreement", &r, &["estimator-l2-decrease[", "estimator-mean-agreement["]);
}

#[test]
fn occupation_time_formula() {
    let r = run(Kind::OccupationFormula, 7);
    judge("occupation-time formula", &r, &["occupation-formula-"]);
}

#[test]
fn negative_moment_bound() {
    let r = run(Kind::MomentTests, 8);
    judge("negative-moment bound", &r, &["negative-moment-bound["]);
}

#[test]
fn existence_integral() {
    let r = run(Kind::ExistenceScan, 9);
    judge("existence integral", &r, &["existence-"]);
}

#[test]
fn density_sanity() {
    let r = run(Kind::DensityReport, 10);
    judge("density sanity", &r, &["density-"]);
}
