//! Optional TOML config file. Keys mirror the long flag names (dashes or
//! underscores); a flag given on the command line always wins over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A list of ensemble sizes written either as a single number, an array or a
/// comma separated string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SizeList {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

impl SizeList {
    pub fn into_vec(self) -> CliResult<Vec<usize>> {
        match self {
            SizeList::One(m) => Ok(vec![m]),
            SizeList::Many(v) => Ok(v),
            SizeList::Text(s) => parse_list(&s, "ensemble size"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    #[serde(alias = "seed")]
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub data: Option<PathBuf>,
    pub query: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub generator: Option<String>,
    pub noise: Option<String>,
    #[serde(alias = "n_train")]
    pub n: Option<usize>,
    #[serde(alias = "n_test")]
    pub n_test: Option<usize>,
    pub grid: Option<usize>,
    pub m: Option<SizeList>,
    pub neurons: Option<usize>,
    pub alpha: Option<f64>,
    pub activation: Option<String>,
    pub scale: Option<String>,
    pub estimators: Option<String>,
    pub form: Option<String>,
    pub reps: Option<usize>,
    #[serde(alias = "gt_reps")]
    pub gt_reps: Option<usize>,
    pub z: Option<f64>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub draws: Option<usize>,
    pub generations: Option<usize>,
    pub values: Option<String>,
    #[serde(alias = "noise_free")]
    pub noise_free: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }
}

/// Flag if given, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let out: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| CliError::Usage(format!("bad {what} '{p}': {e}"))))
        .collect::<CliResult<_>>()?;
    if out.is_empty() {
        return Err(CliError::Usage(format!("empty {what} list")));
    }
    Ok(out)
}

/// Resolved settings of a run as recorded in its manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Resolved(pub serde_json::Map<String, serde_json::Value>);

impl Resolved {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.0.insert(key.into(), serde_json::to_value(value).expect("serializable setting"));
        self
    }
}
