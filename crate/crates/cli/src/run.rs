//! Subcommand drivers.

use std::io::Write;
use std::path::{Path, PathBuf};

use cic::dgp::{gen_stm, qq_invariance_diagnostic, StmConfig, Transform};
use cic::estimator::estimate;
use cic::fold::derive_seed;
use cic::validation::{coverage_study, orthogonality_check, CoverageReport, OrthogonalityReport, Perturbation};
use serde::Serialize;

use crate::config::{Format, RunConfig, SubcommandKind};
use crate::error::CliError;
use crate::ingest::{ingest_csv, write_csv};
use crate::output::{coverage_tsv, estimate_tsv, json, validate_tsv};

pub const SIMULATE_DEFAULT_N: usize = 1000;
pub const COVERAGE_DEFAULT_N: usize = 2000;
/// Largest admissible |Phi'(0)| in units of its Monte Carlo standard error.
pub const ORTHOGONALITY_Z_MAX: f64 = 3.0;
pub const QQ_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityCheck {
    pub perturbation: usize,
    pub z: f64,
    pub pass: bool,
    pub report: OrthogonalityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub design: String,
    pub seed: u64,
    pub checks: Vec<OrthogonalityCheck>,
    pub qq_deviation: f64,
    pub qq_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageSummary {
    pub design: String,
    pub n: usize,
    pub seed: u64,
    pub report: CoverageReport,
}

/// Runs a checked configuration. `Ok(false)` means the run completed but a
/// validation check failed.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool, CliError> {
    match cfg.check()? {
        SubcommandKind::Estimate => run_estimate(cfg, stdout).map(|()| true),
        SubcommandKind::Simulate => run_simulate(cfg, stdout).map(|()| true),
        SubcommandKind::Validate => run_validate(cfg, stdout),
        SubcommandKind::Coverage => run_coverage(cfg, stdout).map(|()| true),
    }
}

fn emit(cfg: &RunConfig, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => write_file(path, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run_estimate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let input = cfg.input.as_deref().expect("checked");
    let data = ingest_csv(input)?;
    let report = estimate(&data, &cfg.estimand, &cfg.crossfit)?;
    let text = match cfg.format {
        Format::Json => json("estimate", &report)?,
        Format::Tsv => estimate_tsv(&report),
    };
    emit(cfg, stdout, &text)
}

/// `data.csv` -> `data.oracle.json`.
pub fn default_oracle_path(output: &Path) -> PathBuf {
    output.with_extension("oracle.json")
}

fn run_simulate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = cfg.dgp.as_ref().expect("checked");
    let design = spec.resolve(SIMULATE_DEFAULT_N, cfg.crossfit.seed)?;
    let (data, truth) = gen_stm(&design)?;
    let mut csv = Vec::new();
    write_csv(&data, &mut csv)?;
    let oracle = json("simulate", &truth)?;
    match &cfg.output {
        Some(path) => {
            write_file(path, &csv)?;
            let oracle_path = cfg.oracle.clone().unwrap_or_else(|| default_oracle_path(path));
            write_file(&oracle_path, oracle.as_bytes())
        }
        None => {
            stdout.write_all(&csv).map_err(|e| CliError::Io(e.to_string()))?;
            match &cfg.oracle {
                Some(path) => write_file(path, oracle.as_bytes()),
                None => Ok(()),
            }
        }
    }
}

/// Baseline outcomes spanning the bulk of `Y0` for the bridge diagnostic.
fn qq_grids(design: &StmConfig) -> (Vec<f64>, Vec<f64>) {
    let u_grid = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    let y_grid = (0..9).map(|i| design.beta0.apply(-2.0 + 0.5 * f64::from(i))).collect();
    (u_grid, y_grid)
}

fn run_validate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let spec = cfg.dgp.as_ref().expect("checked");
    let seed = cfg.crossfit.seed;
    let design = spec.resolve(cfg.validate.mc_size, seed)?;
    let opts = &cfg.validate;
    let mut checks = Vec::with_capacity(opts.perturbations);
    for k in 0..opts.perturbations {
        let mut pert = Perturbation::random_bounded(derive_seed(seed, k as u64));
        if design.beta1 == Transform::Exp {
            pert = pert.with_relative_gamma();
        }
        let report = orthogonality_check(&design, &pert, opts.step, opts.mc_size, derive_seed(seed, 1000 + k as u64))?;
        let z = if report.phi_prime_se > 0.0 { report.phi_prime_0 / report.phi_prime_se } else { 0.0 };
        let pass = report.phi_prime_0 == 0.0 || z.abs() <= ORTHOGONALITY_Z_MAX;
        checks.push(OrthogonalityCheck { perturbation: k, z, pass, report });
    }
    let (u_grid, y_grid) = qq_grids(&design);
    let qq_deviation = qq_invariance_diagnostic(&design, &u_grid, &y_grid);
    let qq_pass = qq_deviation <= QQ_TOLERANCE;
    let pass = qq_pass && checks.iter().all(|c| c.pass);
    let summary = ValidationSummary { design: spec.label(), seed, checks, qq_deviation, qq_pass, pass };
    let text = match cfg.format {
        Format::Json => json("validate", &summary)?,
        Format::Tsv => validate_tsv(&summary),
    };
    emit(cfg, stdout, &text)?;
    Ok(pass)
}

fn run_coverage(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = cfg.dgp.as_ref().expect("checked");
    let seed = cfg.crossfit.seed;
    let design = spec.resolve(COVERAGE_DEFAULT_N, seed)?;
    let report = coverage_study(&design, &cfg.crossfit, cfg.coverage.replications, seed)?;
    let summary = CoverageSummary { design: spec.label(), n: design.n, seed, report };
    let text = match cfg.format {
        Format::Json => json("coverage", &summary)?,
        Format::Tsv => coverage_tsv(&summary),
    };
    emit(cfg, stdout, &text)
}
