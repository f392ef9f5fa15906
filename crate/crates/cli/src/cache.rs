//! Normalizing constants of truncated families, computed once per
//! (distribution, lattice settings, seed) and shared between readers.

use std::collections::HashMap;
use std::sync::RwLock;

use mvdist_core::density::{NormalizerKey, TruncatedDensity};
use mvdist_core::{DistributionSpec, ProbabilityEstimate, QmcConfig, Result};

#[derive(Debug, Default)]
pub struct NormalizerCache {
    map: RwLock<HashMap<NormalizerKey, ProbabilityEstimate>>,
}

impl NormalizerCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Truncated density for `spec`, integrating the box only on a miss.
    pub fn density(
        &self,
        spec: &DistributionSpec,
        qmc: &QmcConfig,
        seed: u64,
    ) -> Result<TruncatedDensity> {
        let key = NormalizerKey::new(spec, qmc, seed);
        if let Some(&z) = self.map.read().unwrap().get(&key) {
            return TruncatedDensity::with_normalizer(spec, z);
        }
        let mut map = self.map.write().unwrap();
        // another writer may have filled the slot while we waited
        if let Some(&z) = map.get(&key) {
            return TruncatedDensity::with_normalizer(spec, z);
        }
        let density = TruncatedDensity::new(spec, qmc, seed)?;
        map.insert(key, density.normalizer());
        Ok(density)
    }
}
