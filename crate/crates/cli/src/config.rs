use std::path::{Path, PathBuf};

use kabe::adjust::{GaConfig, NnConfig};
use kabe::baselines::{CartConfig, TransformPolicy};
use kabe::eval::MethodParams;
use kabe::{BkConfig, MethodSpec};
use serde::Deserialize;

use crate::Failure;

/// Experiment description read from JSON; see `config.schema.json`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub fss: bool,
    #[serde(default)]
    pub bk: BkConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub nn: NnConfig,
    #[serde(default)]
    pub cart: CartConfig,
    #[serde(default)]
    pub transform: TransformPolicy,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn params(&self) -> MethodParams {
        MethodParams {
            bk: self.bk,
            ga: self.ga.clone(),
            nn: self.nn.clone(),
            cart: self.cart,
            transform: self.transform,
        }
    }

    /// A config assembled from flags alone.
    pub fn from_flags(datasets: Vec<String>, methods: Vec<MethodSpec>) -> Self {
        ExperimentConfig {
            datasets,
            methods,
            seed: default_seed(),
            fss: false,
            bk: BkConfig::default(),
            ga: GaConfig::default(),
            nn: NnConfig::default(),
            cart: CartConfig::default(),
            transform: TransformPolicy::default(),
            out: None,
        }
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

pub fn parse(text: &str, path: &Path) -> Result<ExperimentConfig, Failure> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        Failure::config(format!(
            "{}:{}:{}: {}",
            path.display(),
            e.line(),
            e.column(),
            strip_position(&e.to_string())
        ))
    })?;
    let at = |key: &str, msg: String| {
        Failure::config(format!("{}:{}: {msg}", path.display(), line_of(text, key)))
    };
    if cfg.datasets.is_empty() {
        return Err(at("datasets", "at least one dataset is required".into()));
    }
    if cfg.methods.is_empty() {
        return Err(at("methods", "at least one method is required".into()));
    }
    for (key, res) in [
        ("bk", cfg.bk.validate()),
        ("ga", cfg.ga.validate()),
        ("nn", cfg.nn.validate()),
    ] {
        res.map_err(|e| at(key, e.to_string()))?;
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    parse(&text, path)
}

fn strip_position(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |i| &msg[..i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = parse(
            r#"{"datasets": ["albrecht"], "methods": ["kabe", "abe-1"]}"#,
            Path::new("c.json"),
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.methods, vec![MethodSpec::Kabe, MethodSpec::AbeK(1)]);
        assert_eq!(cfg.bk.min_leaf_size, 3);
    }

    #[test]
    fn errors_are_line_anchored() {
        let text = "{\n  \"datasets\": [\"albrecht\"],\n  \"methods\": [\"knn\"]\n}";
        let err = parse(text, Path::new("c.json")).unwrap_err();
        assert!(err.message.starts_with("c.json:3:"), "{}", err.message);

        let text = "{\n  \"datasets\": [],\n  \"methods\": [\"kabe\"]\n}";
        let err = parse(text, Path::new("c.json")).unwrap_err();
        assert!(err.message.starts_with("c.json:2:"), "{}", err.message);

        let text = "{\n  \"datasets\": [\"a\"],\n  \"methods\": [\"kabe\"],\n  \"colour\": 1\n}";
        assert_eq!(parse(text, Path::new("c.json")).unwrap_err().code, 2);
    }

    #[test]
    fn bundled_config_parses() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/public.json");
        let cfg = load(&path).unwrap();
        assert_eq!(cfg.datasets.len(), 3);
        assert_eq!(cfg.methods.len(), 11);
    }

    #[test]
    fn nested_unknown_field_rejected() {
        let text = "{\n  \"datasets\": [\"a\"],\n  \"methods\": [\"kabe\"],\n  \"bk\": {\"restart\": 2}\n}";
        let err = parse(text, Path::new("c.json")).unwrap_err();
        assert!(err.message.starts_with("c.json:4:"), "{}", err.message);
    }
}
