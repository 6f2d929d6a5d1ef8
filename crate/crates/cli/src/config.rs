//! Experiment configuration files (TOML, `config_version = 1`).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Control,
    Estimate,
    Bcr,
    Gvp,
    Verify,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Control => "control",
            Kind::Estimate => "estimate",
            Kind::Bcr => "bcr",
            Kind::Gvp => "gvp",
            Kind::Verify => "verify",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    /// Multiplier turning bits into this base.
    pub fn from_bits(self) -> f64 {
        match self {
            LogBase::Two => 1.0,
            LogBase::E => std::f64::consts::LN_2,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(CliError::Config(format!("log base must be `2` or `e`, got `{other}`"))),
        }
    }
}

/// A scalar, a list, or a comma-separated string such as `"0.001,0.1,1,10"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl AlphaSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            AlphaSpec::One(a) => vec![*a],
            AlphaSpec::Many(v) => v.clone(),
            AlphaSpec::Text(s) => parse_list(s, "alpha")?,
        };
        if v.is_empty() {
            return Err(CliError::Config("alpha sweep list is empty".into()));
        }
        if let Some(a) = v.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(CliError::Config(format!("alpha must be positive and finite, got {a}")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    One(u64),
    Many(Vec<u64>),
    Text(String),
}

impl SeedSpec {
    pub fn values(&self) -> Result<Vec<u64>, CliError> {
        let v = match self {
            SeedSpec::One(s) => vec![*s],
            SeedSpec::Many(v) => v.clone(),
            SeedSpec::Text(s) => parse_list(s, "seeds")?,
        };
        if v.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        Ok(v)
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| CliError::Config(format!("cannot parse `{x}` in {what} list `{s}`")))
        })
        .collect()
}

/// Symbol labels, or just the alphabet size.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphabetSpec {
    Size(usize),
    Symbols(Vec<String>),
}

impl AlphabetSpec {
    pub fn labels(&self) -> Vec<String> {
        match self {
            AlphabetSpec::Size(n) => (0..*n).map(|i| i.to_string()).collect(),
            AlphabetSpec::Symbols(s) => s.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AlphabetSpec::Size(n) => *n,
            AlphabetSpec::Symbols(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Stationary control problem: tables do not depend on the history.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub actions: AlphabetSpec,
    pub observations: AlphabetSpec,
    /// Reference policy; uniform when omitted.
    pub reference: Option<Vec<f64>>,
    /// One observation distribution per action.
    pub environment: Vec<Vec<f64>>,
    pub action_reward: Option<Vec<f64>>,
    /// One row of observation rewards per action.
    pub observation_reward: Option<Vec<Vec<f64>>>,
}

/// Prediction of an i.i.d. source drawn from a finite family.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub prior: Vec<f64>,
    /// One symbol distribution per parameter.
    pub sources: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    #[default]
    Bandit,
    Mdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Mixture,
    Posterior,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcrSection {
    #[serde(default)]
    pub environment: EnvironmentKind,
    /// The agent's prior over parameters.
    pub prior: Vec<f64>,
    /// Distribution the environment draws its parameter from; defaults to `prior`.
    pub true_prior: Option<Vec<f64>>,
    #[serde(default)]
    pub sampling: Sampling,
    pub likelihood_floor: Option<f64>,
    /// Bandit: `means[theta][arm]`.
    pub means: Option<Vec<Vec<f64>>>,
    /// MDP: `transitions[theta][state][action][next_state]`.
    pub transitions: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    /// MDP: `reward_symbols[state][action][next_state]`.
    pub reward_symbols: Option<Vec<Vec<Vec<usize>>>>,
    pub reward_values: Option<Vec<f64>>,
    #[serde(default)]
    pub initial_state: usize,
    pub discount: Option<f64>,
    /// Use bounded-rational controllers at the experiment's alphas instead of greedy ones.
    #[serde(default)]
    pub soft_controllers: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IoSpec {
    Output,
    Disclosed,
    Undisclosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Controlled,
    Estimated,
}

/// One variable of a causal model, in causal order.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSection {
    pub name: String,
    pub symbols: AlphabetSpec,
    pub io: IoSpec,
    /// Defaults to `controlled` for outputs and `estimated` for inputs.
    pub mode: Option<ModeSpec>,
    /// Conditional rows, one per history of the preceding variables (first
    /// variable most significant). A single row applies to every history.
    pub table: Option<Vec<Vec<f64>>>,
    /// CSV file with the rows of `table`, relative to the config file.
    pub table_file: Option<PathBuf>,
    /// Target utility rows, same layout as `table`; zero when omitted.
    pub utility: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Suite names to run; all when omitted.
    pub suites: Option<Vec<String>>,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_id() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub config_version: u32,
    pub kind: Option<Kind>,
    #[serde(default = "default_id")]
    pub id: String,
    pub alpha: Option<AlphaSpec>,
    pub seeds: Option<SeedSpec>,
    pub horizon: Option<usize>,
    pub output: Option<PathBuf>,
    pub log_base: Option<LogBase>,
    pub control: Option<ControlSection>,
    pub estimate: Option<EstimateSection>,
    pub bcr: Option<BcrSection>,
    #[serde(default, rename = "variable")]
    pub variables: Vec<VariableSection>,
    pub verify: Option<VerifySection>,
    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Empty config of the given kind, as used when no file is supplied.
    pub fn empty(kind: Kind) -> Self {
        Self {
            config_version: CONFIG_VERSION,
            kind: Some(kind),
            id: kind.as_str().into(),
            alpha: None,
            seeds: None,
            horizon: None,
            output: None,
            log_base: None,
            control: None,
            estimate: None,
            bcr: None,
            variables: Vec::new(),
            verify: None,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_str_with_overrides(text: &str, overrides: &[(String, String)], origin: &str) -> Result<Self, CliError> {
        let text = if overrides.is_empty() {
            text.to_string()
        } else {
            let mut doc: toml::Table =
                toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            for (key, value) in overrides {
                set_path(&mut doc, key, value)?;
            }
            toml::to_string(&doc).map_err(|e| CliError::Config(format!("{origin}: {e}")))?
        };
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        if config.config_version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "{origin}: unsupported config_version {} (this build reads {CONFIG_VERSION})",
                config.config_version
            )));
        }
        Ok(config)
    }
}

/// Reads and parses a config file, applying `key=value` overrides first.
pub fn parse_config(path: &Path, overrides: &[(String, String)]) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_str_with_overrides(&text, overrides, &path.display().to_string())?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(config)
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn set_path(doc: &mut toml::Table, key: &str, raw: &str) -> Result<(), CliError> {
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::Config(format!("empty override key `{key}`")))?;
    let mut table = doc;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Reads numeric CSV rows (no header).
pub fn read_table_file(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|x| {
                x.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{} line {}: `{x}` is not a number", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_forms() {
        assert_eq!(AlphaSpec::One(0.5).values().unwrap(), vec![0.5]);
        assert_eq!(
            AlphaSpec::Text("0.001,0.1,1,10".into()).values().unwrap(),
            vec![0.001, 0.1, 1.0, 10.0]
        );
        assert!(AlphaSpec::Many(vec![]).values().is_err());
        assert!(AlphaSpec::One(0.0).values().is_err());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let text = "kind = \"control\"\n[control]\nactions = 2\nobservations = 1\nenvironment = [[1.0], [1.0]]\n";
        let c = ExperimentConfig::from_str_with_overrides(
            text,
            &[("control.action_reward".into(), "[1, 0]".into()), ("id".into(), "renamed".into())],
            "inline",
        )
        .unwrap();
        assert_eq!(c.id, "renamed");
        assert_eq!(c.control.unwrap().action_reward, Some(vec![1.0, 0.0]));
    }

    #[test]
    fn unknown_keys_list_the_valid_ones() {
        let err = ExperimentConfig::from_str_with_overrides("kind = \"control\"\nhorizn = 3\n", &[], "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("horizn") && msg.contains("horizon"), "{msg}");
    }

    #[test]
    fn version_is_checked() {
        assert!(ExperimentConfig::from_str_with_overrides("config_version = 2\n", &[], "inline").is_err());
    }
}
