//! JSON experiment specification shared by every experiment kind.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use splitrx::modem::{make_constellation, Scheme, SerMethod, MIN_MC_TRIALS};

/// What an experiment sweeps and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// MI against a uniform splitting ratio.
    MiVsRho,
    /// MI-optimal uniform ratio against received power.
    OptRhoVsPower,
    /// Splitting and conventional MI against received power at fixed ratios.
    MiVsPower,
    /// MI joint processing gain against received power.
    GainVsPower,
    /// Average MI over Rayleigh realizations for several splitting strategies.
    MultiAntennaMi,
    /// Average MI-optimal fraction of antennas wired to CD (simplified receiver).
    K1RatioVsK,
    /// SER against a uniform splitting ratio.
    SerVsRho,
    /// SER joint processing gain against received power.
    SerGainVsPower,
    /// Average SER-optimal number of antennas wired to CD (simplified receiver).
    K1VsK,
    /// Half-space description of the ML decision regions.
    DecisionRegions,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::MiVsRho => "mi-vs-rho",
            ExperimentKind::OptRhoVsPower => "opt-rho-vs-power",
            ExperimentKind::MiVsPower => "mi-vs-power",
            ExperimentKind::GainVsPower => "gain-vs-power",
            ExperimentKind::MultiAntennaMi => "multi-antenna-mi",
            ExperimentKind::K1RatioVsK => "k1-ratio-vs-k",
            ExperimentKind::SerVsRho => "ser-vs-rho",
            ExperimentKind::SerGainVsPower => "ser-gain-vs-power",
            ExperimentKind::K1VsK => "k1-vs-k",
            ExperimentKind::DecisionRegions => "decision-regions",
        }
    }

    fn needs_rho(self) -> bool {
        matches!(
            self,
            ExperimentKind::MiVsRho
                | ExperimentKind::OptRhoVsPower
                | ExperimentKind::MiVsPower
                | ExperimentKind::GainVsPower
                | ExperimentKind::SerVsRho
                | ExperimentKind::SerGainVsPower
                | ExperimentKind::DecisionRegions
        )
    }

    fn needs_constellations(self) -> bool {
        matches!(
            self,
            ExperimentKind::SerVsRho
                | ExperimentKind::SerGainVsPower
                | ExperimentKind::K1VsK
                | ExperimentKind::DecisionRegions
        )
    }

    fn uses_rayleigh(self) -> bool {
        matches!(
            self,
            ExperimentKind::MultiAntennaMi | ExperimentKind::K1RatioVsK | ExperimentKind::K1VsK
        )
    }
}

/// A list of values or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Grid::Range { start, stop, step }
    }

    /// Grid values; range points are `start + i·step` rounded to 12 decimals.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub scheme: Scheme,
    pub m: usize,
}

fn unit() -> Vec<f64> {
    vec![1.0]
}

fn single_antenna() -> Vec<usize> {
    vec![1]
}

/// Parameter grid. Noise settings are the cross product of `sigma1_sq` and `sigma2_sq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Grid>,
    pub power: Grid,
    #[serde(default = "single_antenna")]
    pub k: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constellations: Vec<ConstellationSpec>,
    #[serde(default = "unit")]
    pub sigma1_sq: Vec<f64>,
    #[serde(default = "unit")]
    pub sigma2_sq: Vec<f64>,
}

/// How mutual information is evaluated at interior ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiEval {
    MonteCarlo,
    FormulaEi,
    FormulaLog,
}

impl MiEval {
    pub fn as_str(self) -> &'static str {
        match self {
            MiEval::MonteCarlo => "monte_carlo",
            MiEval::FormulaEi => "formula_ei",
            MiEval::FormulaLog => "formula_log",
        }
    }
}

fn default_mi() -> Vec<MiEval> {
    vec![MiEval::MonteCarlo]
}

fn default_samples() -> u64 {
    1_000_000
}

fn default_bins() -> usize {
    splitrx::mi::DEFAULT_BINS
}

fn default_trials() -> u64 {
    1_000_000
}

fn default_realizations() -> u64 {
    1000
}

/// Estimator knobs; only those relevant to the experiment kind are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimator {
    #[serde(default = "default_mi")]
    pub mi: Vec<MiEval>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub ser: SerMethod,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_realizations")]
    pub realizations: u64,
}

impl Default for Estimator {
    fn default() -> Self {
        Self {
            mi: default_mi(),
            samples: default_samples(),
            bins: default_bins(),
            ser: SerMethod::default(),
            trials: default_trials(),
            realizations: default_realizations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    /// Figure this experiment reproduces, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub sweep: Sweep,
    #[serde(default)]
    pub estimator: Estimator,
    pub seed: u64,
    /// Output directory; the CLI `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Desk-scale wall-clock budget on one core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_budget_s: Option<f64>,
}

/// One offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecErrors(pub Vec<FieldError>);

impl SpecErrors {
    pub fn fields(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.field.as_str()).collect()
    }
}

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid experiment spec:")?;
        for e in &self.0 {
            write!(f, "\n  {}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

#[derive(Default)]
struct Checker(Vec<FieldError>);

impl Checker {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: &str, values: &[f64]) {
        if values.is_empty() {
            self.fail(field, "grid is empty");
        } else if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            self.fail(field, format!("values must be positive and finite, found {v}"));
        }
    }
}

impl ExperimentSpec {
    pub fn rho_values(&self) -> Vec<f64> {
        self.sweep.rho.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn power_values(&self) -> Vec<f64> {
        self.sweep.power.values()
    }

    /// Checks every field and reports all offending ones at once.
    pub fn validate(&self) -> Result<(), SpecErrors> {
        let mut c = Checker::default();
        let kind = self.kind;
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_')
        {
            c.fail("name", "must be a non-empty identifier of [A-Za-z0-9_-]");
        }

        if let Grid::Range { step, start, stop } = &self.sweep.power {
            if !(*step > 0.0) || stop < start {
                c.fail("sweep.power", "range needs step > 0 and start ≤ stop");
            }
        }
        c.positive("sweep.power", &self.power_values());
        c.positive("sweep.sigma1_sq", &self.sweep.sigma1_sq);
        c.positive("sweep.sigma2_sq", &self.sweep.sigma2_sq);

        if self.sweep.k.is_empty() {
            c.fail("sweep.k", "grid is empty");
        } else if self.sweep.k.contains(&0) {
            c.fail("sweep.k", "antenna counts must be positive");
        } else if matches!(kind, ExperimentKind::MultiAntennaMi | ExperimentKind::K1RatioVsK | ExperimentKind::K1VsK)
            && self.sweep.k.iter().any(|&k| k < 2)
        {
            c.fail("sweep.k", "simplified-receiver experiments need at least 2 antennas");
        }

        if kind.needs_rho() {
            match &self.sweep.rho {
                None => c.fail("sweep.rho", format!("required for {}", kind.as_str())),
                Some(g) => {
                    let v = g.values();
                    if v.is_empty() {
                        c.fail("sweep.rho", "grid is empty");
                    } else if v.iter().any(|r| !(0.0..=1.0).contains(r)) {
                        c.fail("sweep.rho", "ratios must lie in [0, 1]");
                    } else if kind == ExperimentKind::SerGainVsPower && !(v.contains(&0.0) && v.contains(&1.0)) {
                        c.fail("sweep.rho", "the gain grid must contain both 0 and 1");
                    }
                }
            }
        }

        if kind.needs_constellations() {
            if self.sweep.constellations.is_empty() {
                c.fail("sweep.constellations", format!("required for {}", kind.as_str()));
            }
            for (i, cs) in self.sweep.constellations.iter().enumerate() {
                if let Err(e) = make_constellation(cs.scheme, cs.m) {
                    c.fail(&format!("sweep.constellations[{i}]"), e.to_string());
                }
            }
        }

        let e = &self.estimator;
        let mi_kinds = matches!(
            kind,
            ExperimentKind::MiVsRho
                | ExperimentKind::OptRhoVsPower
                | ExperimentKind::MiVsPower
                | ExperimentKind::GainVsPower
                | ExperimentKind::MultiAntennaMi
        );
        if mi_kinds {
            if e.mi.is_empty() {
                c.fail("estimator.mi", "list at least one evaluation method");
            }
            if kind == ExperimentKind::OptRhoVsPower && !e.mi.contains(&MiEval::MonteCarlo) {
                c.fail("estimator.mi", "opt-rho-vs-power needs monte_carlo");
            }
            if kind == ExperimentKind::MultiAntennaMi && e.mi.contains(&MiEval::MonteCarlo) {
                c.fail("estimator.mi", "multi-antenna-mi averages formulas only");
            }
            if e.mi.contains(&MiEval::MonteCarlo) {
                if e.samples < 10_000 {
                    c.fail("estimator.samples", "need at least 10000 samples");
                }
                if e.bins < 8 {
                    c.fail("estimator.bins", "need at least 8 bins per axis");
                }
            }
        }
        if matches!(kind, ExperimentKind::SerVsRho | ExperimentKind::SerGainVsPower | ExperimentKind::K1VsK) {
            let min = match e.ser {
                SerMethod::MonteCarlo => MIN_MC_TRIALS,
                SerMethod::ImportanceSampling => self
                    .sweep
                    .constellations
                    .iter()
                    .map(|cs| cs.m as u64 * 128)
                    .max()
                    .unwrap_or(0),
            };
            if e.trials < min.max(1) {
                c.fail("estimator.trials", format!("need at least {min} trials for this method"));
            }
        }
        if kind.uses_rayleigh() && e.realizations == 0 {
            c.fail("estimator.realizations", "must be positive");
        }
        if let Some(b) = self.runtime_budget_s {
            if !(b > 0.0) {
                c.fail("runtime_budget_s", "must be positive");
            }
        }

        if c.0.is_empty() {
            Ok(())
        } else {
            Err(SpecErrors(c.0))
        }
    }
}
