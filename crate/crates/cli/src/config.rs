//! TOML scenario files.
//!
//! Positions (tree parents, table contexts) are 1-based; symbols are
//! 0-based integers below the alphabet size. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use mdc_core::dependency::{calibrate_window, CalibratedWindow};
use mdc_core::process::{build_causal_tree, build_independent, build_markov, build_uniform, DEFAULT_LAG_DECAY};
use mdc_core::{lipschitz_vector_oracle, Alphabet, Budget, ProcessSpec, SensitivityVector, StepKernel, TargetFunction};

use crate::error::CliError;

pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const MAX_ALPHABET: usize = 64;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: usize,
    /// Required for families that do not imply it.
    pub alphabet: Option<usize>,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    pub family: FamilyConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Uniform when `marginals` is absent; else one shared row or one per step.
    Independent { marginals: Option<Vec<Vec<f64>>> },
    Markov { transition: Vec<Vec<f64>>, init: Vec<f64> },
    /// `parent[j]` is the 1-based parent of node `j + 1`, or 0 for a root.
    Tree {
        parent: Vec<usize>,
        edge_kernels: Vec<Vec<Vec<f64>>>,
        root: Vec<f64>,
    },
    /// Recency-weighted copy kernel tuned so that `‖H‖₁ = alpha`.
    Window {
        width: usize,
        alpha: f64,
        lag_decay: Option<f64>,
    },
    Table { steps: Vec<TableStep> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableStep {
    /// 1-based positions read by this step.
    #[serde(default)]
    pub context: Vec<usize>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    Sum,
    Count { symbol: usize },
    Parity { symbol: usize },
    Terminal {
        symbol: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    Constant { value: f64 },
    /// Values over all trajectories in lexicographic order.
    Table { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SensitivityConfig {
    /// `"declared"` or `"oracle"`.
    Named(String),
    Vector(Vec<f64>),
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig::Named("declared".into())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub t: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub n_samples: u64,
}

fn default_budget() -> u64 {
    mdc_core::process::DEFAULT_BUDGET
}

fn default_samples() -> u64 {
    DEFAULT_SAMPLES
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: default_budget(),
            t: None,
            n_samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub horizons: Vec<usize>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that do not need a built process.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.horizon == 0 {
            return Err(config_err("horizon: must be at least 1"));
        }
        let a = self.alphabet_size()?;
        if a == 0 || a > MAX_ALPHABET {
            return Err(config_err(format!("alphabet: must be in 1..={MAX_ALPHABET}, got {a}")));
        }
        match &self.family {
            FamilyConfig::Window { width, alpha, lag_decay } => {
                if *width == 0 {
                    return Err(config_err("family.width: must be at least 1"));
                }
                if !(alpha.is_finite() && (0.0..1.0).contains(alpha)) {
                    return Err(config_err(format!("family.alpha: must be in [0, 1), got {alpha}")));
                }
                if let Some(d) = lag_decay {
                    if !(d.is_finite() && *d > 0.0) {
                        return Err(config_err(format!("family.lag_decay: must be positive, got {d}")));
                    }
                }
            }
            FamilyConfig::Tree { parent, .. } if parent.len() != self.horizon => {
                return Err(config_err(format!(
                    "family.parent: has {} entries, horizon is {}",
                    parent.len(),
                    self.horizon
                )));
            }
            FamilyConfig::Table { steps } if steps.len() != self.horizon => {
                return Err(config_err(format!(
                    "family.steps: has {} entries, horizon is {}",
                    steps.len(),
                    self.horizon
                )));
            }
            _ => {}
        }
        match &self.target {
            TargetConfig::Count { symbol } | TargetConfig::Parity { symbol } | TargetConfig::Terminal { symbol, .. }
                if *symbol >= a =>
            {
                return Err(config_err(format!("target.symbol: {symbol} outside alphabet of size {a}")));
            }
            TargetConfig::Terminal { scale, .. } if !scale.is_finite() => {
                return Err(config_err("target.scale: must be finite"));
            }
            TargetConfig::Constant { value } if !value.is_finite() => {
                return Err(config_err("target.value: must be finite"));
            }
            _ => {}
        }
        match &self.sensitivity {
            SensitivityConfig::Named(s) if s != "declared" && s != "oracle" => {
                return Err(config_err(format!("sensitivity: expected \"declared\", \"oracle\" or a vector, got {s:?}")));
            }
            SensitivityConfig::Vector(v) if v.len() != self.horizon => {
                return Err(config_err(format!("sensitivity: has {} entries, horizon is {}", v.len(), self.horizon)));
            }
            SensitivityConfig::Vector(v) if v.iter().any(|c| !(c.is_finite() && *c >= 0.0)) => {
                return Err(config_err("sensitivity: entries must be finite and >= 0"));
            }
            _ => {}
        }
        if self.run.n_samples < mdc_core::montecarlo::MIN_TAIL_SAMPLES {
            return Err(config_err(format!(
                "run.n_samples: must be at least {}",
                mdc_core::montecarlo::MIN_TAIL_SAMPLES
            )));
        }
        if let Some(t) = &self.run.t {
            validate_t(t).map_err(|m| config_err(format!("run.t: {m}")))?;
        }
        if let Some(s) = &self.sweep {
            if s.horizons.is_empty() {
                return Err(config_err("sweep.horizons: must not be empty"));
            }
            if s.horizons[0] == 0 || s.horizons.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config_err("sweep.horizons: must be positive and strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> Result<usize, CliError> {
        let implied = match &self.family {
            FamilyConfig::Markov { init, .. } => Some(init.len()),
            FamilyConfig::Tree { root, .. } => Some(root.len()),
            FamilyConfig::Independent { marginals: Some(m) } => m.first().map(Vec::len),
            _ => None,
        };
        match (self.alphabet, implied) {
            (Some(a), Some(b)) if a != b => Err(config_err(format!(
                "alphabet: declared {a} but the family implies {b}"
            ))),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(config_err(format!(
                "missing field `alphabet` (required for the {} family)",
                self.family_name()
            ))),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            FamilyConfig::Independent { .. } => "independent",
            FamilyConfig::Markov { .. } => "markov",
            FamilyConfig::Tree { .. } => "tree",
            FamilyConfig::Window { .. } => "window",
            FamilyConfig::Table { .. } => "table",
        }
    }

    /// Copy of this config at another horizon, for sweeps.
    pub fn at_horizon(&self, n: usize) -> Result<Self, CliError> {
        if !matches!(self.family, FamilyConfig::Window { .. }) {
            return Err(config_err("sweep: only the window family can be swept"));
        }
        if matches!(self.target, TargetConfig::Table { .. }) {
            return Err(config_err("sweep: table targets are tied to one horizon"));
        }
        if matches!(self.sensitivity, SensitivityConfig::Vector(_)) {
            return Err(config_err("sweep: explicit sensitivity vectors are tied to one horizon"));
        }
        let mut c = self.clone();
        c.horizon = n;
        c.alphabet = Some(self.alphabet_size()?);
        Ok(c)
    }
}

pub fn validate_t(t: &[f64]) -> Result<(), String> {
    if t.is_empty() {
        return Err("must not be empty".into());
    }
    match t.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        Some(v) => Err(format!("{v} must be finite and >= 0")),
        None => Ok(()),
    }
}

/// A config turned into core objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ProcessSpec,
    pub target: TargetFunction,
    pub sensitivity: SensitivityVector,
    pub calibration: Option<CalibratedWindow>,
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig, budget: Budget) -> Result<Self, CliError> {
        let spec_and_cal = build_spec(cfg, budget)?;
        let (spec, calibration) = spec_and_cal;
        let a = spec.alphabet();
        let target = build_target(cfg, a)?;
        let sensitivity = match &cfg.sensitivity {
            SensitivityConfig::Vector(v) => SensitivityVector::new(v.clone())?,
            SensitivityConfig::Named(s) if s == "oracle" => lipschitz_vector_oracle(&target, a, cfg.horizon, budget)?,
            SensitivityConfig::Named(_) => match target.declared() {
                Some(c) => c.clone(),
                None => {
                    return Err(config_err(
                        "sensitivity: target has no declared sensitivity; use \"oracle\" or a vector",
                    ))
                }
            },
        };
        Ok(Self {
            spec,
            target,
            sensitivity,
            calibration,
        })
    }
}

/// Builds only the process, calibrating window kernels.
pub fn build_spec(cfg: &ScenarioConfig, budget: Budget) -> Result<(ProcessSpec, Option<CalibratedWindow>), CliError> {
    let n = cfg.horizon;
    let a = Alphabet::new(cfg.alphabet_size()?)?;
    let spec = match &cfg.family {
        FamilyConfig::Independent { marginals: None } => build_uniform(a, n)?,
        FamilyConfig::Independent { marginals: Some(m) } => build_independent(a, n, m)?,
        FamilyConfig::Markov { transition, init } => build_markov(transition, init, n)?,
        FamilyConfig::Tree {
            parent,
            edge_kernels,
            root,
        } => {
            let parent: Vec<Option<usize>> = parent.iter().map(|&p| p.checked_sub(1)).collect();
            build_causal_tree(&parent, edge_kernels, root)?
        }
        FamilyConfig::Window { width, alpha, lag_decay } => {
            let cal = calibrate_window(a, *width, n, *alpha, lag_decay.unwrap_or(DEFAULT_LAG_DECAY), budget)?;
            return Ok((cal.spec.clone(), Some(cal)));
        }
        FamilyConfig::Table { steps } => {
            let kernels = steps
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    if let Some(&bad) = s.context.iter().find(|&&p| p == 0) {
                        return Err(config_err(format!("family.steps[{}].context: position {bad} is not 1-based", j + 1)));
                    }
                    let ctx = s.context.iter().map(|p| p - 1).collect();
                    StepKernel::new(a, j, ctx, s.table.clone())
                        .map_err(|e| config_err(format!("family.steps[{}]: {e}", j + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ProcessSpec::from_steps(a, kernels)?
        }
    };
    Ok((spec, None))
}

fn build_target(cfg: &ScenarioConfig, a: Alphabet) -> Result<TargetFunction, CliError> {
    let n = cfg.horizon;
    Ok(match &cfg.target {
        TargetConfig::Sum => TargetFunction::symbol_sum_over(n, a),
        TargetConfig::Count { symbol } => TargetFunction::count(n, *symbol),
        TargetConfig::Parity { symbol } => TargetFunction::parity(n, *symbol),
        TargetConfig::Terminal { symbol, scale } => TargetFunction::terminal_indicator(n, *symbol, *scale),
        TargetConfig::Constant { value } => TargetFunction::constant(n, *value),
        TargetConfig::Table { values } => {
            TargetFunction::table(a, n, values.clone()).map_err(|e| config_err(format!("target.values: {e}")))?
        }
    })
}
