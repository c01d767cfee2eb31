//! Experiment specs: the TOML files that fully determine a run.
//!
//! ```toml
//! name = "tree tail"          # optional, defaults to the operation
//! operation = "cluster-tail"
//! seed = 7
//! replicas = 100000           # optional, per-operation default
//! jobs = 4                    # optional, worker threads; not echoed
//! out = "runs/tree-tail"      # optional; not echoed
//!
//! [params]                    # operation parameters, see `critfrog <op> --help`
//! topology = "tree:2"
//! size_cap = 1000000
//! ```
//!
//! Values given on the command line override the file. The echoed
//! `spec.toml` in every output directory lists every parameter with its
//! resolved value, so replaying it reproduces the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_SEED: u64 = 1;

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub operation: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentSpec {
    pub fn new(operation: &str) -> Self {
        ExperimentSpec {
            name: None,
            operation: operation.to_string(),
            seed: DEFAULT_SEED,
            replicas: None,
            jobs: None,
            out: None,
            params: toml::Table::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::spec("spec", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            HarnessError::spec(if field == "." { "spec".to_string() } else { field }, e.into_inner().message().trim())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.operation)
    }

    /// The spec as echoed into outputs: everything that can change a result,
    /// nothing that cannot (worker count, output location).
    pub fn echo(&self) -> ExperimentSpec {
        ExperimentSpec { jobs: None, out: None, ..self.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("specs are representable in TOML")
    }
}

/// Deserializes operation parameters from defaults, then the spec's
/// `[params]` table, then command-line overrides, reporting the offending
/// field on failure.
pub fn merge_params<P, A>(file: &toml::Table, cli: &A) -> Result<P>
where
    P: Serialize + DeserializeOwned + Default,
    A: Serialize,
{
    let mut merged = toml::Table::try_from(P::default()).expect("defaults are representable in TOML");
    merged.extend(file.clone());
    let overrides = toml::Table::try_from(cli).map_err(|e| HarnessError::spec("arguments", e.to_string()))?;
    merged.extend(overrides);
    serde_path_to_error::deserialize(toml::Value::Table(merged)).map_err(|e| {
        let field = format!("params.{}", e.path());
        HarnessError::spec(field.trim_end_matches(".."), e.into_inner().to_string())
    })
}

/// A comma-separated list on the command line, an array in TOML.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|e| format!("{x:?}: {e}")))
            .collect::<std::result::Result<_, _>>()
            .map(List)
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            x.fmt(f)?;
        }
        Ok(())
    }
}

impl<T> std::ops::Deref for List<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> From<Vec<T>> for List<T> {
    fn from(v: Vec<T>) -> Self {
        List(v)
    }
}

/// The command-line form of a parameter type: optional parameters take
/// their inner type as a flag value.
pub trait CliValue {
    type Arg: Clone + Send + Sync + 'static;
}

macro_rules! cli_self {
    ($($t:ty),*) => {$(
        impl CliValue for $t {
            type Arg = $t;
        }
    )*};
}

cli_self!(
    f64,
    u64,
    u32,
    usize,
    bool,
    String,
    critfrog_core::Topology,
    critfrog_core::fpp::PassageDistribution,
    critfrog_core::percolation::Ratio
);

impl<T: Clone + Send + Sync + 'static> CliValue for List<T> {
    type Arg = List<T>;
}

impl<T: CliValue> CliValue for Option<T> {
    type Arg = T::Arg;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct P {
        a: u64,
        b: Option<f64>,
        xs: List<u64>,
    }

    impl Default for P {
        fn default() -> Self {
            P { a: 3, b: None, xs: List(vec![1, 2]) }
        }
    }

    #[derive(Serialize, Default)]
    struct A {
        #[serde(skip_serializing_if = "Option::is_none")]
        a: Option<u64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    }

    #[test]
    fn cli_overrides_file_overrides_defaults() {
        let file: toml::Table = toml::from_str("a = 5\nxs = [7]").unwrap();
        let p: P = merge_params(&file, &A::default()).unwrap();
        assert_eq!(p, P { a: 5, b: None, xs: List(vec![7]) });
        let p: P = merge_params(&file, &A { a: Some(9), b: Some(0.5) }).unwrap();
        assert_eq!(p, P { a: 9, b: Some(0.5), xs: List(vec![7]) });
    }

    #[test]
    fn errors_name_the_field() {
        let file: toml::Table = toml::from_str("a = \"many\"").unwrap();
        let e = merge_params::<P, _>(&file, &A::default()).unwrap_err().to_string();
        assert!(e.contains("params.a"), "{e}");
        let file: toml::Table = toml::from_str("c = 1").unwrap();
        let e = merge_params::<P, _>(&file, &A::default()).unwrap_err().to_string();
        assert!(e.contains("unknown field `c`"), "{e}");
        let e = ExperimentSpec::parse("operation = \"cfm\"\nseed = \"x\"").unwrap_err().to_string();
        assert!(e.contains("`seed`"), "{e}");
    }

    #[test]
    fn echo_drops_runtime_only_fields_and_round_trips() {
        let mut s = ExperimentSpec::new("cfm");
        s.jobs = Some(4);
        s.out = Some("somewhere".into());
        s.params.insert("m".into(), toml::Value::Integer(2));
        let echo = s.echo();
        assert_eq!(echo.jobs, None);
        assert_eq!(echo.out, None);
        assert_eq!(ExperimentSpec::parse(&echo.to_toml()).unwrap(), echo);
    }

    #[test]
    fn lists_parse_from_commas() {
        assert_eq!("16, 32,64".parse::<List<u64>>().unwrap(), List(vec![16, 32, 64]));
        assert!("16,x".parse::<List<u64>>().is_err());
        assert_eq!(List(vec![1, 2]).to_string(), "1,2");
    }
}
