//! Scenario configuration, read from TOML. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Op, C64};
use crate::oscillator::OscillatorParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Highest level tracked, `n = 0..=levels`.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Local error tolerance of the time integrator.
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub tasks: Vec<Task>,
    pub system: System,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: Output,
}

fn default_levels() -> usize {
    3
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Phases,
    Validate,
    Sweep,
    LoopCheck,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum System {
    Oscillator(OscillatorSpec),
    Cranked(CrankedSpec),
    Schedule(ScheduleSpec),
}

#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSpec {
    pub M: f64,
    pub Omega: f64,
    pub m: f64,
    pub omega: f64,
}

impl OscillatorSpec {
    pub fn params(&self) -> crate::error::Result<OscillatorParams> {
        OscillatorParams::derive(self.M, self.Omega, self.m, self.omega)
    }
}

/// Complex matrix as separate real and imaginary row tables.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn to_op(&self, what: &str) -> Result<Op, ConfigError> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return Err(ConfigError::Invalid(format!("{what}.re must be a non-empty square table")));
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|r| r.len() != n) {
                return Err(ConfigError::Invalid(format!("{what}.im must match the shape of {what}.re")));
            }
        }
        let im = |i: usize, j: usize| self.im.as_ref().map_or(0.0, |m| m[i][j]);
        let op = Op::from_fn(n, |i, j| C64::new(self.re[i][j], im(i, j)));
        if op.check_hermitian().is_err() {
            return Err(ConfigError::Invalid(format!("{what} is not Hermitian")));
        }
        Ok(op.hermitize())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CrankedSpec {
    pub h0: MatrixSpec,
    pub k: MatrixSpec,
}

/// `H(t) = Σ cⱼ(t) Aⱼ` with coefficient tables
/// `c(t) = Σ polyₖ tᵏ + Σ a cos(ft) + Σ a sin(ft)`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub terms: Vec<TermSpec>,
    /// Initial invariant; required for the phases task.
    #[serde(default)]
    pub invariant0: Option<MatrixSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub poly: Vec<f64>,
    /// `[amplitude, frequency]` pairs.
    #[serde(default)]
    pub cos: Vec<[f64; 2]>,
    #[serde(default)]
    pub sin: Vec<[f64; 2]>,
}

impl TermSpec {
    pub fn coefficient(&self, t: f64) -> f64 {
        let poly = self.poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let cos: f64 = self.cos.iter().map(|[a, f]| a * (f * t).cos()).sum();
        let sin: f64 = self.sin.iter().map(|[a, f]| a * (f * t).sin()).sum();
        poly + cos + sin
    }
}

#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default)]
    pub N: Option<usize>,
    #[serde(default)]
    pub N_int: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Defaults to one period of the oscillator Hamiltonian.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
}

/// Each parameter is a fixed value, a list, or an inclusive linear range.
#[allow(non_snake_case)]
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub M: Option<Axis>,
    #[serde(default)]
    pub Omega: Option<Axis>,
    #[serde(default)]
    pub m: Option<Axis>,
    #[serde(default)]
    pub omega: Option<Axis>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        match self {
            Axis::Value(v) => Ok(vec![*v]),
            Axis::List(v) if !v.is_empty() => Ok(v.clone()),
            Axis::List(_) => Err(ConfigError::Invalid("sweep lists must not be empty".into())),
            Axis::Range(r) if r.count == 1 => Ok(vec![r.from]),
            Axis::Range(r) if r.count >= 2 => {
                let h = (r.to - r.from) / (r.count - 1) as f64;
                Ok((0..r.count).map(|i| if i + 1 == r.count { r.to } else { r.from + h * i as f64 }).collect())
            }
            Axis::Range(_) => Err(ConfigError::Invalid("sweep range count must be at least 1".into())),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_csv")]
    pub csv_path: String,
    #[serde(default = "default_report")]
    pub report_path: String,
    #[serde(default = "default_sweep")]
    pub sweep_path: String,
}

fn default_sweep() -> String {
    "sweep.csv".into()
}

fn default_csv() -> String {
    "phases.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for Output {
    fn default() -> Self {
        Output { csv_path: default_csv(), report_path: default_report(), sweep_path: default_sweep() }
    }
}

/// Defaults applied after parsing.
pub const DEFAULT_TRUNCATION: usize = 120;
pub const DEFAULT_STEPS: usize = 2048;

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn truncation(&self) -> usize {
        self.truncation.N.unwrap_or(DEFAULT_TRUNCATION)
    }

    pub fn steps(&self) -> usize {
        self.grid.steps.unwrap_or(DEFAULT_STEPS)
    }

    /// Validates everything that can be checked without computing.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.tasks.is_empty() {
            return Err(ConfigError::Invalid("tasks must list at least one task".into()));
        }
        let mut sorted = self.tasks.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.tasks.len() {
            return Err(ConfigError::Invalid("tasks must not repeat".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ConfigError::Invalid("tol must be positive".into()));
        }
        if self.steps() < 4 || !self.steps().is_multiple_of(2) {
            return Err(ConfigError::Invalid("grid.steps must be even and at least 4".into()));
        }
        if let Some(t) = self.grid.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Invalid("grid.t_max must be positive".into()));
            }
        }
        if let Some(ni) = self.truncation.N_int {
            if ni + 4 > self.truncation() {
                return Err(ConfigError::Invalid("truncation.N_int must be at most N - 4".into()));
            }
            if self.levels >= ni {
                return Err(ConfigError::Invalid("levels must lie inside the interior block truncation.N_int".into()));
            }
        }
        match &self.system {
            System::Oscillator(o) => {
                o.params().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if self.grid.t_max.is_some() {
                    return Err(ConfigError::Invalid("oscillator runs cover one period; remove grid.t_max".into()));
                }
                if self.truncation() < crate::oscillator::MIN_DIM {
                    return Err(ConfigError::Invalid(format!(
                        "truncation.N must be at least {}",
                        crate::oscillator::MIN_DIM
                    )));
                }
            }
            System::Cranked(c) => {
                c.h0.to_op("system.cranked.h0")?;
                c.k.to_op("system.cranked.k")?;
                if c.h0.dim() != c.k.dim() {
                    return Err(ConfigError::Invalid("system.cranked.h0 and k differ in size".into()));
                }
                self.require_t_max("cranked")?;
            }
            System::Schedule(s) => {
                let Some(first) = s.terms.first() else {
                    return Err(ConfigError::Invalid("system.schedule.terms must not be empty".into()));
                };
                let dim = first.matrix.dim();
                for (j, t) in s.terms.iter().enumerate() {
                    t.matrix.to_op(&format!("system.schedule.terms[{j}].matrix"))?;
                    if t.matrix.dim() != dim {
                        return Err(ConfigError::Invalid("schedule term matrices differ in size".into()));
                    }
                }
                if let Some(i0) = &s.invariant0 {
                    i0.to_op("system.schedule.invariant0")?;
                    if i0.dim() != dim {
                        return Err(ConfigError::Invalid("system.schedule.invariant0 has the wrong size".into()));
                    }
                } else if self.tasks.contains(&Task::Phases) {
                    return Err(ConfigError::Invalid("the phases task needs system.schedule.invariant0".into()));
                }
                self.require_t_max("schedule")?;
            }
        }
        let is_osc = matches!(self.system, System::Oscillator(_));
        if self.tasks.contains(&Task::Sweep) {
            if !is_osc {
                return Err(ConfigError::Invalid("sweep needs an oscillator system".into()));
            }
            if self.sweep.is_none() {
                return Err(ConfigError::Invalid("the sweep task needs a [sweep] table".into()));
            }
        }
        if let Some(s) = &self.sweep {
            for axis in [&s.M, &s.Omega, &s.m, &s.omega].into_iter().flatten() {
                axis.values()?;
            }
        }
        if is_osc && self.tasks.contains(&Task::Validate) && !self.tasks.contains(&Task::Phases) {
            return Err(ConfigError::Invalid(
                "validate compares the phases task against closed forms; add phases".into(),
            ));
        }
        Ok(())
    }

    fn require_t_max(&self, what: &str) -> Result<(), ConfigError> {
        if self.grid.t_max.is_none() {
            return Err(ConfigError::Invalid(format!("a {what} system needs grid.t_max")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
tasks = ["phases", "validate"]
[system.oscillator]
M = 1.0
Omega = 3.0
m = 2.0
omega = 1.0
"#;

    #[test]
    fn parses_minimal_oscillator() {
        let c = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(c.levels, 3);
        assert_eq!(c.truncation(), DEFAULT_TRUNCATION);
        assert_eq!(c.output.csv_path, "phases.csv");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{BASE}\n[grid]\nsteps = 64\nstep = 3\n");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Parse(_))));
        let text = BASE.replace("omega = 1.0", "omega = 1.0\nphase = 2");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn names_the_mass_constraint() {
        let text = BASE.replace("m = 2.0", "m = 0.5");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("must exceed the oscillator mass M"), "{err}");
    }

    #[test]
    fn axes() {
        let r = Axis::Range(RangeSpec { from: 1.0, to: 2.0, count: 3 });
        assert_eq!(r.values().unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(Axis::Value(4.0).values().unwrap(), vec![4.0]);
        assert!(Axis::List(vec![]).values().is_err());
    }

    #[test]
    fn coefficient_tables() {
        let t = TermSpec {
            matrix: MatrixSpec { re: vec![vec![1.0]], im: None },
            poly: vec![1.0, 2.0, 3.0],
            cos: vec![[2.0, 1.0]],
            sin: vec![[1.0, 2.0]],
        };
        let x: f64 = 0.7;
        let expected = 1.0 + 2.0 * x + 3.0 * x * x + 2.0 * x.cos() + (2.0 * x).sin();
        assert!((t.coefficient(x) - expected).abs() < 1e-15);
    }

    #[test]
    fn cranked_requires_hermitian_and_t_max() {
        let text = r#"
tasks = ["phases"]
[system.cranked]
h0 = { re = [[1.0, 0.5], [0.5, -1.0]] }
k = { re = [[0.5, 0.0], [0.0, -0.5]] }
"#;
        assert!(ScenarioConfig::from_toml(text).unwrap_err().to_string().contains("t_max"));
        let ok = format!("{text}\n[grid]\nt_max = 6.0\n");
        assert!(ScenarioConfig::from_toml(&ok).is_ok());
        let bad = ok.replace("[[1.0, 0.5], [0.5, -1.0]]", "[[1.0, 0.5], [0.2, -1.0]]");
        assert!(ScenarioConfig::from_toml(&bad).unwrap_err().to_string().contains("Hermitian"));
    }
}
