//! Scenario configuration: one JSON document plus `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("bad override '{0}': expected key=value")]
    OverrideSyntax(String),
    #[error("override '{key}' cannot be applied: {why}")]
    OverridePath { key: String, why: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseName {
    KahlerPseudo,
    KahlerPara,
    QuatPseudo,
    QuatPara,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [Self::KahlerPara, Self::KahlerPseudo, Self::QuatPara, Self::QuatPseudo];

    pub fn is_quat(self) -> bool {
        matches!(self, Self::QuatPseudo | Self::QuatPara)
    }

    pub fn is_para(self) -> bool {
        matches!(self, Self::KahlerPara | Self::QuatPara)
    }

    /// Real dimension of the model space.
    pub fn dim(self, n: usize) -> usize {
        if self.is_quat() {
            4 * n
        } else {
            2 * n
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::KahlerPseudo => "kahler-pseudo",
            Self::KahlerPara => "kahler-para",
            Self::QuatPseudo => "quat-pseudo",
            Self::QuatPara => "quat-para",
        }
    }
}

/// A vector given as components, as a unit vector "eK" (1-based), or by seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Components(Vec<f64>),
    Unit(String),
    Seeded { seed: u64 },
}

impl VectorSpec {
    /// Components in dimension `d`; `None` for the seeded form.
    pub fn components(&self, d: usize, what: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self {
            Self::Components(v) => {
                if v.len() != d {
                    return Err(ConfigError::Invalid(format!("{what} has {} components, expected {d}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ConfigError::Invalid(format!("{what} has non-finite components")));
                }
                Ok(Some(v.clone()))
            }
            Self::Unit(name) => {
                let k: usize = name
                    .strip_prefix('e')
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| ConfigError::Invalid(format!("{what} = '{name}' is not of the form eK")))?;
                if k == 0 || k > d {
                    return Err(ConfigError::Invalid(format!("{what} = e{k} outside 1..={d}")));
                }
                Ok(Some((0..d).map(|i| if i + 1 == k { 1.0 } else { 0.0 }).collect()))
            }
            Self::Seeded { .. } => Ok(None),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta1: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta2: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta3: Option<VectorSpec>,
}

/// Named tolerances and their defaults.
pub const TOLERANCES: [(&str, f64); 11] = [
    ("theorem", 1e-9),
    ("jacobi", 1e-10),
    ("brackets", 1e-10),
    ("homomorphism", 1e-9),
    ("membership", 1e-12),
    ("trace", 1e-13),
    ("chain", 1e-10),
    ("zeta", 1e-9),
    ("closed_form", 1e-6),
    ("escape_width", 1e-4),
    ("escape_time", 1e-3),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: CaseName,
    pub n: usize,
    #[serde(default)]
    pub s: usize,
    pub xi: VectorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaSpec>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("linhom-out")
}

impl ScenarioConfig {
    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| TOLERANCES.iter().find(|(k, _)| *k == name).map(|(_, v)| *v))
            .expect("known tolerance name")
    }

    pub fn dim(&self) -> usize {
        self.case.dim(self.n)
    }

    pub fn zetas(&self) -> Vec<(&'static str, &VectorSpec)> {
        let mut out = Vec::new();
        if let Some(z) = &self.zeta {
            for (name, v) in [("zeta1", &z.zeta1), ("zeta2", &z.zeta2), ("zeta3", &z.zeta3)] {
                if let Some(v) = v {
                    out.push((name, v));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n < 2 {
            return bad(format!("n = {} < 2 (model dimension must be at least {})", self.n, self.case.dim(2)));
        }
        if !self.case.is_para() && self.s > self.n {
            return bad(format!("split s = {} exceeds n = {}", self.s, self.n));
        }
        if self.case.is_para() && self.s != 0 {
            return bad(format!("split s = {} given for the para case {}", self.s, self.case.as_str()));
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCES.iter().any(|(name, _)| name == k) {
                return bad(format!("unknown tolerance '{k}'"));
            }
            if !(v.is_finite() && *v > 0.0) {
                return bad(format!("tolerance '{k}' must be positive"));
            }
        }
        let d = self.dim();
        self.xi.components(d, "xi")?;
        for (name, z) in self.zetas() {
            if !self.case.is_quat() && name != "zeta1" {
                return bad(format!("{name} is only meaningful for the quaternionic cases"));
            }
            if z.components(d, name)?.is_none() {
                return bad(format!("{name} must be given by components"));
            }
        }
        Ok(())
    }
}

/// Parses `key=value`; the value is read as JSON and falls back to a string.
/// Keys are dotted paths; `zeta1`..`zeta3` abbreviate `zeta.zetaK` and
/// `seed` abbreviates `xi.seed`.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::OverrideSyntax(spec.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::OverrideSyntax(spec.into()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let path: Vec<String> = match key {
        "zeta1" | "zeta2" | "zeta3" => vec!["zeta".into(), key.into()],
        "seed" => vec!["xi".into(), "seed".into()],
        _ => key.split('.').map(String::from).collect(),
    };
    if path[0] == "xi" && path.len() == 2 {
        // replacing the representation of xi entirely
        doc["xi"] = Value::Object(Default::default());
    }
    let mut cur = doc;
    for (i, seg) in path.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            Value::Null => {
                *cur = Value::Object(Default::default());
                cur.as_object_mut().unwrap()
            }
            _ => {
                return Err(ConfigError::OverridePath { key: key.into(), why: format!("'{seg}' is not inside an object") })
            }
        };
        if i + 1 == path.len() {
            obj.insert(seg.clone(), value);
            return Ok(());
        }
        cur = obj.entry(seg.clone()).or_insert(Value::Null);
    }
    unreachable!("path has at least one segment")
}

pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.into(), source })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ScenarioConfig =
        serde_json::from_value(doc).map_err(|source| ConfigError::Json { path: path.into(), source })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> Result<ScenarioConfig, ConfigError> {
        let c: ScenarioConfig = serde_json::from_value(v).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn vector_forms() {
        let c = parse(json!({"case": "quat-pseudo", "n": 2, "xi": "e1"})).unwrap();
        assert_eq!(c.xi.components(8, "xi").unwrap().unwrap()[0], 1.0);
        let c = parse(json!({"case": "kahler-para", "n": 2, "xi": {"seed": 7}})).unwrap();
        assert_eq!(c.xi, VectorSpec::Seeded { seed: 7 });
        let c = parse(json!({"case": "kahler-para", "n": 2, "xi": [1.0, 0.0, 0.0, 0.0]})).unwrap();
        assert_eq!(c.s, 0);
        assert!(parse(json!({"case": "kahler-para", "n": 2, "xi": [1.0]})).is_err());
        assert!(parse(json!({"case": "quat-para", "n": 2, "xi": "e9"})).is_err());
    }

    #[test]
    fn validation() {
        assert!(parse(json!({"case": "quat-para", "n": 1, "xi": "e1"})).is_err());
        assert!(parse(json!({"case": "kahler-pseudo", "n": 2, "s": 3, "xi": "e1"})).is_err());
        assert!(parse(json!({"case": "kahler-para", "n": 2, "xi": "e1", "tolerances": {"bogus": 1.0}})).is_err());
        assert!(parse(json!({"case": "kahler-para", "n": 2, "xi": "e1", "zeta": {"zeta2": "e1"}})).is_err());
        assert!(parse(json!({"case": "kahler-para", "n": 2, "xi": "e1", "extra": 1})).is_err());
        let c = parse(json!({"case": "kahler-para", "n": 2, "xi": "e1", "tolerances": {"jacobi": 1e-6}})).unwrap();
        assert_eq!(c.tol("jacobi"), 1e-6);
        assert_eq!(c.tol("chain"), 1e-10);
    }

    #[test]
    fn overrides() {
        let mut doc = json!({"case": "quat-pseudo", "n": 2, "s": 0, "xi": "e1"});
        apply_override(&mut doc, "zeta1=e5").unwrap();
        apply_override(&mut doc, "n=3").unwrap();
        apply_override(&mut doc, "tolerances.jacobi=1e-8").unwrap();
        assert_eq!(doc["zeta"]["zeta1"], json!("e5"));
        assert_eq!(doc["n"], json!(3));
        assert_eq!(doc["tolerances"]["jacobi"], json!(1e-8));
        apply_override(&mut doc, "seed=4").unwrap();
        assert_eq!(doc["xi"], json!({"seed": 4}));
        assert!(matches!(apply_override(&mut doc, "novalue"), Err(ConfigError::OverrideSyntax(_))));
        assert!(matches!(apply_override(&mut doc, "n.x=1"), Err(ConfigError::OverridePath { .. })));
    }
}
