use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PolynomialSystem;
use crate::error::{Error, Result};

/// Version tag written into every JSON document this crate produces.
pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the generator behind [`PolynomialSystem::sample`].
pub const RNG_ALGORITHM_ID: &str = "chacha20";

/// On-disk form of a system: one `[exponents, scaled coefficient]` list per polynomial.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SystemFile {
    pub schema_version: u32,
    pub d: usize,
    pub degrees: Vec<u32>,
    pub polys: Vec<Vec<(Vec<u32>, f64)>>,
}

impl SystemFile {
    pub fn from_system(sys: &PolynomialSystem) -> Self {
        let polys = sys.polys().iter().map(|p| p.terms().map(|(k, c)| (k.exponents().to_vec(), c)).collect()).collect();
        Self { schema_version: SCHEMA_VERSION, d: sys.dim(), degrees: sys.degrees(), polys }
    }

    pub fn to_system(&self) -> Result<PolynomialSystem> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        PolynomialSystem::from_terms(self.d, &self.degrees, &self.polys)
    }
}

/// Enough to regenerate a sampled system without storing its coefficients.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GenerationRecord {
    pub schema_version: u32,
    pub d: usize,
    pub degrees: Vec<u32>,
    pub seed: u64,
    pub rng_algorithm: String,
}

impl GenerationRecord {
    pub fn new(d: usize, degrees: Vec<u32>, seed: u64) -> Self {
        Self { schema_version: SCHEMA_VERSION, d, degrees, seed, rng_algorithm: RNG_ALGORITHM_ID.into() }
    }

    pub fn regenerate(&self) -> Result<PolynomialSystem> {
        if self.rng_algorithm != RNG_ALGORITHM_ID {
            return Err(Error::InvalidParameter(format!("unknown rng algorithm '{}'", self.rng_algorithm)));
        }
        PolynomialSystem::sample(self.d, &self.degrees, self.seed)
    }
}

impl PolynomialSystem {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SystemFile::from_system(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SystemFile>(s)?.to_system()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
