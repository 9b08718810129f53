//! Content-addressed product cache.
//!
//! A product is stored under the SHA-256 of the canonical JSON of every
//! input that can change it. Entries are the product's own JSON, so a hit
//! deserializes to exactly the value that was stored.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const CACHE_ENV: &str = "GUIDESPEC_CACHE_DIR";

/// Canonical form: object keys sorted, floats in shortest round-trip form.
pub fn canonical(value: &Value) -> String {
    // serde_json's default map is ordered by key.
    value.to_string()
}

pub fn digest(value: &Value) -> String {
    hex::encode(Sha256::digest(canonical(value).as_bytes()))
}

/// Inputs of the sampled band functions.
pub fn bands_inputs(cfg: &RunConfig) -> Value {
    let d = &cfg.discretization;
    json!({
        "product": "bands",
        "version": env!("CARGO_PKG_VERSION"),
        "cell": cfg.geometry.cell,
        "symbol": cfg.operator.symbol,
        "a": cfg.operator.a,
        "rho": cfg.operator.rho,
        "overrides": cfg.operator.overrides,
        "hole_bc": cfg.operator.hole_bc,
        "n": d.n,
        "m_grid": d.m_grid,
        "band_count": d.band_count,
        "eigen": cfg.eigen(),
    })
}

/// Inputs of the dispersion sweep; the trust ceiling enters through the
/// band key.
pub fn dispersion_inputs(cfg: &RunConfig) -> Value {
    json!({
        "product": "dispersion",
        "version": env!("CARGO_PKG_VERSION"),
        "bands": digest(&bands_inputs(cfg)),
        "geometry": cfg.geometry,
        "operator": cfg.operator,
        "sweep": cfg.sweep(),
        "tolerances": cfg.tolerances,
        "eigen": cfg.eigen(),
    })
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// Directory from the environment, else `fallback`.
    pub fn from_env(fallback: &Path) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Cache::new(d),
            _ => Cache::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A stored product; unreadable or stale entries count as misses.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put<T: Serialize>(&self, key: &str, value: &T) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string(value).map_err(std::io::Error::other)?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(tmp, self.path(key))
    }
}
