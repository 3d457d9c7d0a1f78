//! Run configuration (TOML).
//!
//! ```toml
//! schema_version = 1
//! inputs = ["masks"]          # mask files or directories of *.json files
//! output = "out"
//! metadata = "metadata.csv"   # optional
//! threads = 0                 # 0 uses every core
//! mm_per_px = 0.1             # optional fixed scale when no reference is used
//!
//! [filter]
//! pca_sd = 4.5
//!
//! [architecture]
//! concavity = 0.5
//!
//! [reference]                 # optional; enables reference detection
//! diameter_mm = 80.0
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::architecture::ArchitectureConfig;
use crate::berry_filter::{FilterConfig, ReferenceSpec};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    #[serde(default)]
    pub metadata: Option<PathBuf>,
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub mm_per_px: Option<f64>,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub architecture: ArchitectureConfig,
    #[serde(default)]
    pub reference: Option<ReferenceSpec>,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, output: PathBuf) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            inputs,
            output,
            metadata: None,
            threads: 0,
            mm_per_px: None,
            filter: FilterConfig::default(),
            architecture: ArchitectureConfig::default(),
            reference: None,
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        fix(&mut self.output);
        if let Some(m) = self.metadata.as_mut() {
            fix(m);
        }
    }

    /// Checks values and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.filter.validate()?;
        self.architecture.validate()?;
        if let Some(r) = &self.reference {
            r.validate()?;
        }
        if let Some(s) = self.mm_per_px {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("mm_per_px must be positive, got {s}")));
            }
        }
        if self.inputs.is_empty() {
            return Err(Error::Config("no inputs configured".into()));
        }
        for p in self.inputs.iter().chain(self.metadata.iter()) {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form; equal configs hash equally.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_resolves_paths() {
        let cfg = RunConfig::from_toml("schema_version = 1\ninputs = [\"m\"]\noutput = \"o\"\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.inputs, vec![PathBuf::from("/base/m")]);
        assert_eq!(cfg.output, PathBuf::from("/base/o"));
        assert_eq!(cfg.filter, FilterConfig::default());
        assert!(cfg.reference.is_none());
    }

    #[test]
    fn sections_override_defaults() {
        let text = "schema_version = 1\ninputs = [\"/x\"]\noutput = \"/o\"\n[filter]\npca_sd = 2.0\n[architecture]\nconcavity = 0.3\n[reference]\ndiameter_mm = 20.0\n";
        let cfg = RunConfig::from_toml(text, Path::new("/")).unwrap();
        assert_eq!(cfg.filter.pca_sd, 2.0);
        assert_eq!(cfg.architecture.concavity, 0.3);
        assert_eq!(cfg.reference.unwrap().diameter_mm, 20.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("schema_version = 1\ninputs = []\noutput = \"o\"\nbogus = 1\n", Path::new("/")).is_err());
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(vec![dir.path().to_path_buf()], dir.path().join("out"));
        cfg.validate().unwrap();
        cfg.schema_version = 2;
        assert!(cfg.validate().is_err());
        cfg.schema_version = 1;
        cfg.architecture.concavity = 0.0;
        assert!(cfg.validate().is_err());
        cfg.architecture.concavity = 0.5;
        cfg.inputs.push(dir.path().join("missing"));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_is_stable() {
        let a = RunConfig::new(vec!["/a".into()], "/o".into());
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.filter.pca_sd = 3.0;
        assert_ne!(a.hash(), b.hash());
    }
}
