use std::path::{Path, PathBuf};

use fluid_core::StoreUri;
use serde::{Deserialize, Serialize};

pub const ENV_STORE_PATH: &str = "FLUID_STORE_PATH";
pub const ENV_BIND_ADDR: &str = "FLUID_BIND_ADDR";
pub const ENV_ADVERTISED_URI: &str = "FLUID_ADVERTISED_URI";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("invalid config {0}: {1}")]
    Parse(PathBuf, serde_json::Error),
    #[error("invalid advertised uri: {0}")]
    Uri(#[from] fluid_core::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind_address: String,
    pub store_path: PathBuf,
    pub advertised_uri: Option<StoreUri>,
    pub federation_ttl_seconds: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind_address: "127.0.0.1:8080".into(),
            store_path: PathBuf::from("fluid-store"),
            advertised_uri: None,
            federation_ttl_seconds: 30,
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.into(), e))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.into(), e))
    }

    /// Applies `FLUID_*` overrides from `lookup` (normally the process env).
    pub fn with_env(mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(p) = lookup(ENV_STORE_PATH) {
            self.store_path = p.into();
        }
        if let Some(b) = lookup(ENV_BIND_ADDR) {
            self.bind_address = b;
        }
        if let Some(u) = lookup(ENV_ADVERTISED_URI) {
            self.advertised_uri = Some(StoreUri::parse(&u)?);
        }
        Ok(self)
    }

    /// The advertised URI, or one derived from the bind address.
    pub fn effective_uri(&self, bound: std::net::SocketAddr) -> StoreUri {
        self.advertised_uri
            .clone()
            .unwrap_or_else(|| StoreUri::parse(&format!("http://{bound}")).expect("socket address is a valid host"))
    }
}
