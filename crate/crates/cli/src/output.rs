//! Report emission: versioned JSON envelopes and TSV tables.

use std::fmt::Write as _;

use cic::{EstimandSpec, GTildeDescriptor, Report};
use serde::Serialize;

use crate::error::CliError;
use crate::run::{CoverageSummary, ValidationSummary};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    result: &'a T,
}

/// Pretty JSON with a trailing newline. Field order follows the struct
/// definitions and floats print in shortest round-trip form, so equal inputs
/// give equal bytes.
pub fn json<T: Serialize>(command: &str, result: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Envelope { schema_version: SCHEMA_VERSION, command, result })
        .map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn estimand_label(spec: &EstimandSpec) -> String {
    match spec {
        EstimandSpec::Att => "att".into(),
        EstimandSpec::Cdt { y } => format!("cdt(y={y})"),
        EstimandSpec::Qtt { tau } => format!("qtt(tau={tau})"),
        EstimandSpec::General { gtilde: GTildeDescriptor::Mean } => "general-mean".into(),
        EstimandSpec::General { gtilde: GTildeDescriptor::Cdf { y } } => format!("general-cdf(y={y})"),
        EstimandSpec::General { gtilde: GTildeDescriptor::Quantile { tau } } => format!("general-quantile(tau={tau})"),
    }
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join("\t"));
    out.push('\n');
}

pub fn estimate_tsv(r: &Report) -> String {
    let mut out = String::new();
    row(&mut out, &["estimand", "theta_hat", "sigma2_hat", "ci_lo", "ci_hi", "n", "folds", "reps", "alpha", "seed"].map(String::from));
    row(
        &mut out,
        &[
            estimand_label(&r.estimand),
            r.theta_hat.to_string(),
            r.sigma2_hat.to_string(),
            r.ci_lo.to_string(),
            r.ci_hi.to_string(),
            r.n.to_string(),
            r.folds.to_string(),
            r.reps.to_string(),
            r.alpha.to_string(),
            r.seed.to_string(),
        ],
    );
    out
}

pub fn validate_tsv(s: &ValidationSummary) -> String {
    let mut out = String::new();
    row(
        &mut out,
        &["perturbation", "phi0", "phi0_se", "phi_prime_0", "phi_prime_se", "z", "phi_second_mid", "phi_second_closed", "pass"]
            .map(String::from),
    );
    for c in &s.checks {
        let r = &c.report;
        row(
            &mut out,
            &[
                c.perturbation.to_string(),
                r.phi0.to_string(),
                r.phi0_se.to_string(),
                r.phi_prime_0.to_string(),
                r.phi_prime_se.to_string(),
                c.z.to_string(),
                r.phi_second_mid.to_string(),
                r.phi_second_closed.to_string(),
                c.pass.to_string(),
            ],
        );
    }
    out.push('\n');
    row(&mut out, &["design", "qq_deviation", "qq_pass", "pass"].map(String::from));
    row(&mut out, &[s.design.clone(), s.qq_deviation.to_string(), s.qq_pass.to_string(), s.pass.to_string()]);
    out
}

pub fn coverage_tsv(s: &CoverageSummary) -> String {
    let r = &s.report;
    let mut out = String::new();
    row(
        &mut out,
        &["design", "n", "n_reps", "covered", "cover_rate", "mean_ci_width", "rmse", "mean_bias", "bias_se", "att_true"]
            .map(String::from),
    );
    row(
        &mut out,
        &[
            s.design.clone(),
            s.n.to_string(),
            r.n_reps.to_string(),
            r.covered.to_string(),
            r.cover_rate.to_string(),
            r.mean_ci_width.to_string(),
            r.rmse.to_string(),
            r.mean_bias.to_string(),
            r.bias_se.to_string(),
            r.att_true.to_string(),
        ],
    );
    out.push('\n');
    row(&mut out, &["rep", "theta_hat", "ci_lo", "ci_hi", "covered"].map(String::from));
    for x in &r.rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", x.rep, x.theta_hat, x.ci_lo, x.ci_hi, x.covered);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_has_version_first() {
        let s = json("estimate", &serde_json::json!({"x": 1.5})).unwrap();
        assert!(s.starts_with("{\n  \"schema_version\": 1,\n  \"command\": \"estimate\""));
        assert!(s.ends_with("}\n"));
    }

    #[test]
    fn labels() {
        assert_eq!(estimand_label(&EstimandSpec::Qtt { tau: 0.5 }), "qtt(tau=0.5)");
        assert_eq!(estimand_label(&EstimandSpec::General { gtilde: GTildeDescriptor::Mean }), "general-mean");
    }
}
