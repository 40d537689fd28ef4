//! On-disk instance format: JSON with weights as decimal strings so files
//! mean the same thing on every platform.

use bplp_core::problems::{Edge, Params, ProblemError, ProblemInstance};
use bplp_core::rational::parse_decimal;
use bplp_core::ProblemKind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const INSTANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(with = "kind_name")]
    pub kind: ProblemKind,
    pub num_nodes: usize,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub params: ParamsRecord,
    #[serde(default)]
    pub noise: NoiseRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub weight: String,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ParamsRecord {
    #[default]
    None,
    ShortestPath { source: usize, sink: usize },
    OddCycles { cycles: Vec<Vec<usize>> },
    VertexCover { budgets: Vec<u32> },
    Flow { demands: Vec<i64>, capacities: Vec<u32> },
}

/// Per-variable perturbation drawn uniformly from `(0, magnitude]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub seed: u64,
    pub magnitude: String,
}

impl Default for NoiseRecord {
    fn default() -> Self {
        NoiseRecord { seed: 0, magnitude: "0".into() }
    }
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported instance version {0} (expected {INSTANCE_VERSION})")]
    Version(u32),
    #[error("bad decimal {value:?} in {field}")]
    Decimal { field: String, value: String },
    #[error("noise magnitude must be a finite value >= 0, got {0}")]
    NoiseMagnitude(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

mod kind_name {
    use super::*;

    pub fn serialize<S: Serializer>(k: &ProblemKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ProblemKind, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Shortest decimal that reads back as the same `f64`.
pub fn format_decimal(x: f64) -> String {
    format!("{x}")
}

/// Parses a decimal string; the value is rounded once to the nearest `f64`.
pub fn parse_weight(field: &str, s: &str) -> Result<f64, FileError> {
    let bad = || FileError::Decimal { field: field.to_string(), value: s.to_string() };
    parse_decimal(s).map_err(|_| bad())?;
    s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| FileError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.version != INSTANCE_VERSION {
            return Err(FileError::Version(file.version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance files always serialize");
        s.push('\n');
        s
    }

    pub fn from_instance(instance: &ProblemInstance, noise_seed: u64, noise_magnitude: f64) -> Self {
        let params = match &instance.params {
            Params::None => ParamsRecord::None,
            Params::ShortestPath { source, sink } => ParamsRecord::ShortestPath { source: *source, sink: *sink },
            Params::OddCycles { cycles } => ParamsRecord::OddCycles { cycles: cycles.clone() },
            Params::VertexCover { budgets } => ParamsRecord::VertexCover { budgets: budgets.clone() },
            Params::Flow { demands, capacities } => ParamsRecord::Flow {
                demands: demands.clone(),
                capacities: capacities.clone(),
            },
        };
        InstanceFile {
            version: INSTANCE_VERSION,
            kind: instance.kind,
            num_nodes: instance.num_nodes,
            edges: instance
                .edges
                .iter()
                .map(|e| EdgeRecord { u: e.u, v: e.v, weight: format_decimal(e.weight), directed: e.directed })
                .collect(),
            params,
            noise: NoiseRecord { seed: noise_seed, magnitude: format_decimal(noise_magnitude) },
        }
    }

    /// The validated instance.
    pub fn to_instance(&self) -> Result<ProblemInstance, FileError> {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| Ok(Edge::new(e.u, e.v, parse_weight(&format!("edges[{k}].weight"), &e.weight)?, e.directed)))
            .collect::<Result<Vec<_>, FileError>>()?;
        let params = match &self.params {
            ParamsRecord::None => Params::None,
            ParamsRecord::ShortestPath { source, sink } => Params::ShortestPath { source: *source, sink: *sink },
            ParamsRecord::OddCycles { cycles } => Params::OddCycles { cycles: cycles.clone() },
            ParamsRecord::VertexCover { budgets } => Params::VertexCover { budgets: budgets.clone() },
            ParamsRecord::Flow { demands, capacities } => Params::Flow {
                demands: demands.clone(),
                capacities: capacities.clone(),
            },
        };
        let instance = ProblemInstance { kind: self.kind, num_nodes: self.num_nodes, edges, params };
        instance.validate()?;
        Ok(instance)
    }

    pub fn noise_magnitude(&self) -> Result<f64, FileError> {
        let m = parse_weight("noise.magnitude", &self.noise.magnitude)?;
        if m < 0.0 {
            return Err(FileError::NoiseMagnitude(self.noise.magnitude.clone()));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_round_trip_through_f64() {
        for x in [0.1, 1e-7, 3.0, 123456.789, 5e-324, 1.7976931348623157e308] {
            assert_eq!(parse_weight("w", &format_decimal(x)).unwrap(), x);
        }
        assert!(parse_weight("w", "1e3").is_ok());
        assert!(parse_weight("w", "NaN").is_err());
        assert!(parse_weight("w", "inf").is_err());
        assert!(parse_weight("w", "0x10").is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match InstanceFile::parse("{\n  \"version\": 1,\n  oops\n}") {
            Err(FileError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_is_checked() {
        let text = r#"{"version": 7, "kind": "tsp", "num_nodes": 0, "edges": []}"#;
        assert!(matches!(InstanceFile::parse(text), Err(FileError::Version(7))));
    }
}
