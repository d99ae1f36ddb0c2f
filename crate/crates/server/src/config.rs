//! Optional TOML config. API keys never live here: `credential_env` names
//! the environment variable that holds one.

use std::path::{Path, PathBuf};

use reasonchat::nl::BackendConfig;
use reasonchat::RccConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub rcc: RccSection,
    #[serde(default)]
    pub service: ServiceSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    #[serde(default = "default_credential_env")]
    pub credential_env: String,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub context_turns: Option<usize>,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: None,
            credential_env: default_credential_env(),
            timeout_secs: None,
            max_retries: None,
            context_turns: None,
        }
    }
}

fn default_credential_env() -> String {
    "REASONCHAT_API_KEY".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RccSection {
    pub p_jump: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    pub addr: Option<String>,
    pub log_dir: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

const SECRET_KEYS: [&str; 5] = ["api_key", "apikey", "key", "token", "secret"];

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        for section in raw.values().filter_map(|v| v.as_table()) {
            if let Some(k) = section.keys().find(|k| SECRET_KEYS.contains(&k.to_lowercase().as_str())) {
                return Err(format!("`{k}` looks like a credential; set it in the environment and name the variable in credential_env"));
            }
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn rcc(&self) -> RccConfig {
        match self.rcc.p_jump {
            Some(p) => RccConfig { p_jump: p },
            None => RccConfig::default(),
        }
    }

    /// Live backend settings, if an endpoint is configured.
    pub fn live(&self) -> Option<BackendConfig> {
        let b = &self.backend;
        let endpoint = b.endpoint.clone()?;
        let model = b.model.clone().unwrap_or_else(|| "gpt-4".into());
        let mut cfg = BackendConfig::live(endpoint, model, &b.credential_env);
        if let Some(t) = b.timeout_secs {
            cfg.timeout_secs = t;
        }
        if let Some(r) = b.max_retries {
            cfg.max_retries = r;
        }
        if let Some(c) = b.context_turns {
            cfg.context_turns = c;
        }
        Some(cfg)
    }
}
