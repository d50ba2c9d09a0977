use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and get the same bytes back.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, InputHash>,
    pub config: Value,
}

impl RunManifest {
    pub fn new(command: &'static str, config: Value) -> Self {
        Self {
            tool: "cfbounds",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            inputs: BTreeMap::new(),
            config,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.insert(
            role.to_string(),
            InputHash {
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(bytes)),
            },
        );
    }
}
