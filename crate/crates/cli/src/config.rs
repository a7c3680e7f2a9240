//! Run configuration: a JSON file, flags layered on top, then per-subcommand
//! requirements.

use std::path::{Path, PathBuf};

use cic::dgp::{Effect, StmConfig, PRESETS};
use cic::estimator::CrossFitConfig;
use cic::{EstimandSpec, GTildeDescriptor};
use serde::{Deserialize, Serialize};

use crate::args::{Command, CrossFitArgs, DgpArgs, EstimandKind, FormatArg, OutputArgs};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcommandKind {
    Estimate,
    Simulate,
    Validate,
    Coverage,
}

impl SubcommandKind {
    pub fn name(self) -> &'static str {
        match self {
            SubcommandKind::Estimate => "estimate",
            SubcommandKind::Simulate => "simulate",
            SubcommandKind::Validate => "validate",
            SubcommandKind::Coverage => "coverage",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Tsv,
}

/// A shipped design, optionally adjusted, or a fully custom one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpSpec {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub trend: Option<f64>,
    pub effect: Option<f64>,
    pub pi: Option<f64>,
    /// Takes precedence over `name`; its `n` and `seed` are still overridden.
    pub custom: Option<StmConfig>,
}

impl DgpSpec {
    /// Label used in reports.
    pub fn label(&self) -> String {
        match (&self.custom, &self.name) {
            (Some(_), _) => "custom".into(),
            (None, Some(name)) => name.clone(),
            (None, None) => "unnamed".into(),
        }
    }

    pub fn resolve(&self, default_n: usize, seed: u64) -> Result<StmConfig, CliError> {
        let n = self.n.unwrap_or(default_n);
        let mut cfg = match (&self.custom, self.name.as_deref()) {
            (Some(custom), _) => StmConfig { n, seed, ..custom.clone() },
            (None, Some("did")) => StmConfig::did(
                n,
                self.trend.unwrap_or(1.0),
                self.effect.unwrap_or(2.0),
                self.pi.unwrap_or(0.5),
                seed,
            ),
            (None, Some(name)) => {
                if self.trend.is_some() || self.pi.is_some() {
                    return Err(CliError::Config(format!("trend and pi only apply to the did design, not `{name}`")));
                }
                StmConfig::preset(name, n, seed).ok_or_else(|| {
                    CliError::Config(format!("unknown design `{name}`; expected one of {}", PRESETS.join(", ")))
                })?
            }
            (None, None) => return Err(CliError::Config("a design is required (--dgp or `dgp` in the config)".into())),
        };
        if let (Some(delta), None) = (self.effect, &self.custom) {
            cfg.effect = Effect::Additive { delta };
        }
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub mc_size: usize,
    pub step: f64,
    pub perturbations: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { mc_size: 20_000, step: 0.05, perturbations: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageOptions {
    pub replications: usize,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        CoverageOptions { replications: 100 }
    }
}

/// Everything a run needs. `crossfit.seed` seeds every subcommand: the
/// estimator, the simulated dataset, the validation draws or the coverage
/// schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<SubcommandKind>,
    pub input: Option<PathBuf>,
    pub dgp: Option<DgpSpec>,
    pub estimand: EstimandSpec,
    pub crossfit: CrossFitConfig,
    pub output: Option<PathBuf>,
    /// Oracle JSON path of `simulate`.
    pub oracle: Option<PathBuf>,
    pub format: Format,
    pub validate: ValidateOptions,
    pub coverage: CoverageOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: None,
            input: None,
            dgp: None,
            estimand: EstimandSpec::Att,
            crossfit: CrossFitConfig::default(),
            output: None,
            oracle: None,
            format: Format::Json,
            validate: ValidateOptions::default(),
            coverage: CoverageOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Layers the flags of `command` over `self`.
    pub fn apply(mut self, command: Option<&Command>) -> Result<Self, CliError> {
        let Some(command) = command else {
            return Ok(self);
        };
        let kind = match command {
            Command::Estimate(_) => SubcommandKind::Estimate,
            Command::Simulate(_) => SubcommandKind::Simulate,
            Command::Validate(_) => SubcommandKind::Validate,
            Command::Coverage(_) => SubcommandKind::Coverage,
        };
        if let Some(from_file) = self.subcommand {
            if from_file != kind {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    from_file.name(),
                    kind.name()
                )));
            }
        }
        self.subcommand = Some(kind);
        match command {
            Command::Estimate(a) => {
                set(&mut self.input, a.input.clone());
                if let Some(kind) = a.estimand {
                    self.estimand = estimand(kind, a.y, a.tau)?;
                } else if a.y.is_some() || a.tau.is_some() {
                    return Err(CliError::Config("--y and --tau need --estimand".into()));
                }
                set_to(&mut self.crossfit.seed, a.seed);
                self.apply_crossfit(&a.crossfit);
                self.apply_output(&a.out);
            }
            Command::Simulate(a) => {
                self.apply_dgp(&a.dgp);
                set_to(&mut self.crossfit.seed, a.seed);
                set(&mut self.output, a.output.clone());
                set(&mut self.oracle, a.oracle.clone());
            }
            Command::Validate(a) => {
                self.apply_dgp(&a.dgp);
                set_to(&mut self.crossfit.seed, a.seed);
                set_to(&mut self.validate.mc_size, a.mc_size);
                set_to(&mut self.validate.step, a.step);
                set_to(&mut self.validate.perturbations, a.perturbations);
                self.apply_output(&a.out);
            }
            Command::Coverage(a) => {
                self.apply_dgp(&a.dgp);
                set_to(&mut self.crossfit.seed, a.seed);
                set_to(&mut self.coverage.replications, a.replications);
                self.apply_crossfit(&a.crossfit);
                self.apply_output(&a.out);
            }
        }
        Ok(self)
    }

    fn apply_crossfit(&mut self, a: &CrossFitArgs) {
        set_to(&mut self.crossfit.folds, a.folds);
        set_to(&mut self.crossfit.reps, a.reps);
        set(&mut self.crossfit.cv_folds, a.cv_folds);
        set_to(&mut self.crossfit.alpha, a.alpha);
        if a.no_stratify {
            self.crossfit.stratify = false;
        }
    }

    fn apply_output(&mut self, a: &OutputArgs) {
        set(&mut self.output, a.output.clone());
        if let Some(f) = a.format {
            self.format = match f {
                FormatArg::Json => Format::Json,
                FormatArg::Tsv => Format::Tsv,
            };
        }
    }

    fn apply_dgp(&mut self, a: &DgpArgs) {
        let spec = self.dgp.get_or_insert_with(DgpSpec::default);
        if let Some(name) = &a.dgp {
            spec.name = Some(name.clone());
            spec.custom = None;
        }
        set(&mut spec.n, a.n);
        set(&mut spec.trend, a.trend);
        set(&mut spec.effect, a.effect);
        set(&mut spec.pi, a.pi);
    }

    /// Checks the fields the chosen subcommand needs.
    pub fn check(&self) -> Result<SubcommandKind, CliError> {
        let kind = self.subcommand.ok_or_else(|| CliError::Config("no subcommand given".into()))?;
        self.crossfit.check()?;
        match kind {
            SubcommandKind::Estimate => {
                if self.input.is_none() {
                    return Err(CliError::Config("estimate needs --input".into()));
                }
                self.estimand.check()?;
            }
            SubcommandKind::Simulate | SubcommandKind::Validate | SubcommandKind::Coverage => {
                if self.dgp.as_ref().is_none_or(|d| d.name.is_none() && d.custom.is_none()) {
                    return Err(CliError::Config(format!("{} needs --dgp", kind.name())));
                }
            }
        }
        if kind == SubcommandKind::Validate {
            let v = &self.validate;
            if v.mc_size < 100 || v.perturbations == 0 || !(v.step > 0.0 && v.step < 0.25) {
                return Err(CliError::Config(format!(
                    "validate needs mc_size >= 100, perturbations >= 1 and step in (0, 0.25); got {v:?}"
                )));
            }
        }
        if kind == SubcommandKind::Coverage && self.coverage.replications < 2 {
            return Err(CliError::Config("coverage needs at least 2 replications".into()));
        }
        Ok(kind)
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn set_to<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn estimand(kind: EstimandKind, y: Option<f64>, tau: Option<f64>) -> Result<EstimandSpec, CliError> {
    let spec = match kind {
        EstimandKind::Att => EstimandSpec::Att,
        EstimandKind::Mean => EstimandSpec::General { gtilde: GTildeDescriptor::Mean },
        EstimandKind::Cdt => EstimandSpec::Cdt { y: y.ok_or_else(|| CliError::Config("cdt needs --y".into()))? },
        EstimandKind::Qtt => EstimandSpec::Qtt { tau: tau.ok_or_else(|| CliError::Config("qtt needs --tau".into()))? },
    };
    let stray = match kind {
        EstimandKind::Cdt => tau.is_some(),
        EstimandKind::Qtt => y.is_some(),
        EstimandKind::Att | EstimandKind::Mean => y.is_some() || tau.is_some(),
    };
    if stray {
        return Err(CliError::Config("--y belongs to cdt and --tau to qtt".into()));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"subcommand": "estimate", "inptu": "x.csv"}"#).is_err());
        assert!(RunConfig::from_json(r#"{"crossfit": {"fold": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"dgp": {"name": "did", "size": 3}}"#).is_err());
    }

    #[test]
    fn required_fields_per_subcommand() {
        let c = RunConfig::from_json(r#"{"subcommand": "estimate"}"#).unwrap();
        assert!(matches!(c.check(), Err(CliError::Config(_))));
        let c = RunConfig::from_json(r#"{"subcommand": "estimate", "input": "d.csv"}"#).unwrap();
        assert_eq!(c.check().unwrap(), SubcommandKind::Estimate);
        let c = RunConfig::from_json(r#"{"subcommand": "coverage"}"#).unwrap();
        assert!(c.check().is_err());
        let c = RunConfig::from_json(r#"{"subcommand": "coverage", "dgp": {"name": "did"}}"#).unwrap();
        assert!(c.check().is_ok());
        assert!(RunConfig::default().check().is_err());
    }

    #[test]
    fn config_round_trip() {
        let c = RunConfig::from_json(
            r#"{"subcommand": "estimate", "input": "d.csv", "estimand": {"kind": "qtt", "tau": 0.25},
                "crossfit": {"folds": 3, "seed": 9}, "format": "tsv"}"#,
        )
        .unwrap();
        assert_eq!(c.estimand, EstimandSpec::Qtt { tau: 0.25 });
        assert_eq!((c.crossfit.folds, c.crossfit.seed, c.crossfit.reps), (3, 9, 1));
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn dgp_resolution() {
        let did = DgpSpec { name: Some("did".into()), trend: Some(0.5), effect: Some(1.0), ..Default::default() };
        let cfg = did.resolve(100, 4).unwrap();
        assert_eq!((cfg.n, cfg.seed), (100, 4));
        assert_eq!(cfg.effect, Effect::Additive { delta: 1.0 });
        let typo = DgpSpec { name: Some("dd".into()), ..Default::default() };
        assert!(matches!(typo.resolve(10, 0), Err(CliError::Config(_))));
        let trend = DgpSpec { name: Some("stm-exp".into()), trend: Some(1.0), ..Default::default() };
        assert!(trend.resolve(10, 0).is_err());
    }

    #[test]
    fn estimand_flags() {
        assert_eq!(estimand(EstimandKind::Cdt, Some(1.5), None).unwrap(), EstimandSpec::Cdt { y: 1.5 });
        assert!(estimand(EstimandKind::Qtt, None, None).is_err());
        assert!(estimand(EstimandKind::Att, None, Some(0.5)).is_err());
    }
}
