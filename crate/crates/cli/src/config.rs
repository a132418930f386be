//! Run configuration: a TOML file merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use signfit::classifier::TreeParams;
use signfit::kinematics::{Camera, HandBasis, Skeleton};
use signfit::metrics_synth::SynthSpec;
use signfit::optimizer::SequenceConfig;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraOverrides {
    pub focal: Option<f64>,
    pub principal_point: Option<[f64; 2]>,
    pub root_depth: Option<f64>,
}

impl CameraOverrides {
    pub fn is_empty(&self) -> bool {
        *self == CameraOverrides::default()
    }

    pub fn apply(&self, mut cam: Camera) -> Camera {
        if let Some(f) = self.focal {
            cam.focal = f;
        }
        if let Some([u, v]) = self.principal_point {
            cam.principal_point = (u, v);
        }
        if let Some(d) = self.root_depth {
            cam.root_depth = d;
        }
        cam
    }
}

/// Everything that influences a run. Written back into every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Skeleton JSON; the shipped upper body when absent.
    pub skeleton: Option<PathBuf>,
    /// Hand pose basis JSON; raw axis-angles when absent.
    pub hand_basis: Option<PathBuf>,
    pub fps: f64,
    pub seed: u64,
    pub sequential: bool,
    pub camera: CameraOverrides,
    pub sequence: SequenceConfig,
    pub tree: TreeParams,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            skeleton: None,
            hand_basis: None,
            fps: 25.0,
            seed: 0,
            sequential: false,
            camera: CameraOverrides::default(),
            sequence: SequenceConfig::default(),
            tree: TreeParams::default(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }

    /// Applies `key.path=value` assignments; values are TOML literals, and
    /// anything that does not parse as one is taken as a string.
    pub fn with_overrides(self, assignments: &[String]) -> Result<Self, Failure> {
        if assignments.is_empty() {
            return Ok(self);
        }
        let mut root = toml::Value::try_from(&self).map_err(|e| Failure::input(e.to_string()))?;
        for a in assignments {
            let (key, raw) = a
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("--set expects key=value, got {a:?}")))?;
            let value = parse_literal(raw.trim());
            set_path(&mut root, key.trim(), value)?;
        }
        root.try_into().map_err(|e| Failure::input(format!("--set: {e}")))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serialises")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serialises")
    }

    pub fn skeleton(&self) -> Result<Skeleton, Failure> {
        match &self.skeleton {
            Some(p) => Ok(Skeleton::load(p)?),
            None => Ok(Skeleton::default_upper_body()),
        }
    }

    pub fn basis(&self) -> Result<Option<HandBasis>, Failure> {
        Ok(self.hand_basis.as_ref().map(HandBasis::load).transpose()?)
    }

    pub fn execution(&self) -> signfit::par::Execution {
        if self.sequential {
            signfit::par::Execution::Sequential
        } else {
            signfit::par::Execution::Parallel
        }
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), Failure> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Failure::input("empty --set key"))?;
    let mut node = root;
    for p in parts {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Failure::input(format!("--set {key}: {p:?} is not a table")))?;
        node = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| Failure::input(format!("--set {key}: parent is not a table")))?
        .insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = RunConfig::default()
            .with_overrides(&[
                "sequence.fit.objective.weights.lambda_s=12.5".into(),
                "seed=9".into(),
                "camera.root_depth=4".into(),
            ])
            .unwrap();
        assert_eq!(cfg.sequence.fit.objective.weights.lambda_s, 12.5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.camera.root_depth, Some(4.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::default().with_overrides(&["no_such_field=1".into()]).is_err());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn echoed_toml_round_trips() {
        let cfg = RunConfig::default().with_overrides(&["sequence.focal=3000.0".into()]).unwrap();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
