use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{csv_bytes, write_atomic};
use crate::diagnostics::NfeLedger;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command invocation. The `config` snapshot is fully
/// resolved (seed, inline mixture), so feeding the manifest back as a config
/// reproduces every CSV byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub artifact_version: String,
    pub command: String,
    pub seed_derivation: String,
    pub config: ExperimentConfig,
    /// Output file name to schema version.
    pub schemas: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub ledgers: BTreeMap<String, NfeLedger>,
    pub diagnostics: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Owns the output directory for one command. Every write goes through here.
pub(crate) struct RunWriter {
    dir: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn new(command: &str, config: &ExperimentConfig, dir: PathBuf) -> Self {
        Self {
            dir,
            started: Instant::now(),
            manifest: RunManifest {
                artifact: env!("CARGO_PKG_NAME").to_string(),
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                seed_derivation: crate::rng::DERIVATION.to_string(),
                config: config.clone(),
                schemas: BTreeMap::new(),
                outputs: Vec::new(),
                ledgers: BTreeMap::new(),
                diagnostics: serde_json::Value::Object(Default::default()),
                timings_ms: BTreeMap::new(),
            },
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, schema: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.register(name, schema);
        Ok(())
    }

    pub fn register(&mut self, name: &str, schema: &str) {
        self.manifest.schemas.insert(name.to_string(), schema.to_string());
        self.manifest.outputs.push(name.to_string());
    }

    pub fn csv<R: AsRef<[String]>>(&mut self, name: &str, schema: (&str, &[&str]), rows: &[R]) -> Result<()> {
        let bytes = csv_bytes(schema.1, rows)?;
        self.bytes(name, schema.0, &bytes)
    }

    pub fn ledger(&mut self, key: &str, ledger: NfeLedger) {
        self.manifest.ledgers.insert(key.to_string(), ledger);
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut self.manifest.diagnostics {
            map.insert(key.to_string(), v);
        }
        Ok(())
    }

    pub fn timed<T>(&mut self, key: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.manifest
            .timings_ms
            .insert(key.to_string(), t.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest
            .timings_ms
            .insert("total".into(), self.started.elapsed().as_secs_f64() * 1e3);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        write_atomic(&self.dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(self.manifest)
    }
}
