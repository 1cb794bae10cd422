use std::path::Path;

use anyhow::{Context, Result};
use glyphline::neuralnet::SolverConfig;
use glyphline::pipeline::StageConfig;
use serde::{Deserialize, Serialize};

use crate::args::GlobalArgs;
use crate::UsageError;

/// Contents of a `--config` file. Missing tables take the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: StageConfig,
    pub solver: Option<SolverConfig>,
}

impl FileConfig {
    /// TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        };
        Ok(parsed)
    }

    /// The config file (if any) with command-line overrides applied, validated.
    pub fn resolve(global: &GlobalArgs) -> Result<Self> {
        let mut cfg = match &global.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = global.scale {
            cfg.pipeline.scale_mode = s;
        }
        if let Some(r) = global.reading_order {
            cfg.pipeline.reading_order = r;
        }
        cfg.pipeline.validate().map_err(|e| UsageError(e.to_string()))?;
        if let Some(s) = &cfg.solver {
            s.validate().map_err(|e| UsageError(e.to_string()))?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glyphline::pipeline::{ReadingOrder, ScaleMode};

    #[test]
    fn toml_and_json_read_the_same_fields() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        std::fs::write(&t, "[pipeline]\nscale_mode = \"256\"\n\n[solver]\nmax_iter = 50\n").unwrap();
        let j = dir.path().join("c.json");
        std::fs::write(&j, r#"{"pipeline": {"scale_mode": "256"}, "solver": {"max_iter": 50}}"#).unwrap();
        let a = FileConfig::load(&t).unwrap();
        assert_eq!(a, FileConfig::load(&j).unwrap());
        assert_eq!(a.pipeline.scale_mode, ScaleMode::Long256);
        assert_eq!(a.solver.unwrap().max_iter, 50);
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"pipeline": {"reading_order": "rl"}}"#).unwrap();
        let global = GlobalArgs {
            config: Some(p),
            reading_order: Some(ReadingOrder::Auto),
            ..Default::default()
        };
        assert_eq!(FileConfig::resolve(&global).unwrap().pipeline.reading_order, ReadingOrder::Auto);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"pipline": {}}"#).unwrap();
        let err = FileConfig::load(&p).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        std::fs::write(&p, r#"{"pipeline": {"seal_blur_sigma": -1.0}}"#).unwrap();
        let global = GlobalArgs {
            config: Some(p),
            ..Default::default()
        };
        assert!(FileConfig::resolve(&global).unwrap_err().downcast_ref::<UsageError>().is_some());
    }
}
