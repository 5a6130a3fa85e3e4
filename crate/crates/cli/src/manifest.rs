use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Everything needed to reproduce one run. Command-line invocations are
/// turned into a manifest before execution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub subcommand: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))
    }

    /// Overlays `other` on `self`: set fields and parameters of `other` win.
    pub fn merged(mut self, other: RunManifest) -> RunManifest {
        if !other.subcommand.is_empty() {
            self.subcommand = other.subcommand;
        }
        self.parameters.extend(other.parameters);
        self.seed = other.seed.or(self.seed);
        self.tolerance = other.tolerance.or(self.tolerance);
        self.samples = other.samples.or(self.samples);
        self.output = other.output.or(self.output);
        self
    }
}

/// `key=value`, where the value is read as JSON when possible and as a
/// plain string otherwise.
pub fn parse_param(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("parameter `{s}` is not of the form key=value")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_unknown_keys() {
        let mut m = RunManifest {
            subcommand: "metric".into(),
            seed: Some(7),
            tolerance: Some(1e-9),
            samples: Some(100),
            output: Some("out.json".into()),
            ..Default::default()
        };
        m.parameters.insert("domain".into(), Value::String("tetrablock".into()));
        m.parameters.insert("z".into(), serde_json::json!([[0.1, 0.2], [0.0, 0.0], [0.0, 0.0]]));
        let s = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"subcommand":"metric","colour":"red"}"#;
        assert!(serde_json::from_str::<RunManifest>(bad).is_err());
    }

    #[test]
    fn params_and_merge() {
        assert_eq!(parse_param("grid=64").unwrap().1, Value::from(64));
        assert_eq!(parse_param("suite=lemma41").unwrap().1, Value::String("lemma41".into()));
        assert!(parse_param("grid").is_err());
        let base = RunManifest {
            subcommand: "metric".into(),
            seed: Some(1),
            ..Default::default()
        };
        let over = RunManifest {
            seed: Some(2),
            ..Default::default()
        };
        let m = base.merged(over);
        assert_eq!((m.subcommand.as_str(), m.seed), ("metric", Some(2)));
    }
}
