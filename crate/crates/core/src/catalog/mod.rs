// Copyright 2026 The chunkcache Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Video catalogs: popularity, sizes and retention curves.

mod retention;
mod scenario;

pub use retention::{
    fit_lambda_to_watch_time, truncated_exponential_mean, RetentionCurve, Tabulated, MAX_ABS_LAMBDA,
};
pub use scenario::{
    build_class_scenario, synthetic_catalog, ClassSpec, ClassTable, PopularityBand, ScenarioOptions,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoFile {
    pub size: f64,
    pub popularity: f64,
    pub retention: RetentionCurve,
}

/// An immutable catalog with popularities summing to one, sorted in
/// decreasing order (rank 0 is the most popular file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct Catalog {
    files: Vec<VideoFile>,
    uniform_size: bool,
}

impl Catalog {
    /// Validates and sorts `files`. Popularities must sum to one within 1e-9
    /// and are renormalized exactly. With `uniform_size` every file must have
    /// the same size.
    pub fn new(mut files: Vec<VideoFile>, uniform_size: bool) -> Result<Self> {
        if files.is_empty() {
            return Err(Error::InvalidCatalog("catalog is empty".into()));
        }
        for (i, f) in files.iter().enumerate() {
            if !(f.size.is_finite() && f.size > 0.0) {
                return Err(Error::InvalidCatalog(format!(
                    "file {i} has size {}",
                    f.size
                )));
            }
            if !(f.popularity.is_finite() && f.popularity >= 0.0) {
                return Err(Error::InvalidCatalog(format!(
                    "file {i} has popularity {}",
                    f.popularity
                )));
            }
        }
        let total: f64 = files.iter().map(|f| f.popularity).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidCatalog(format!(
                "popularities sum to {total}, not 1"
            )));
        }
        for f in &mut files {
            f.popularity /= total;
        }
        if uniform_size {
            let s = files[0].size;
            if files.iter().any(|f| f.size != s) {
                return Err(Error::InvalidCatalog(
                    "uniform_size is set but file sizes differ".into(),
                ));
            }
        }
        files.sort_by(|a, b| b.popularity.total_cmp(&a.popularity));
        Ok(Self {
            files,
            uniform_size,
        })
    }

    /// Equal-size catalog from a popularity vector and one shared curve.
    pub fn uniform(popularity: &[f64], size: f64, curve: RetentionCurve) -> Result<Self> {
        let files = popularity
            .iter()
            .map(|&p| VideoFile {
                size,
                popularity: p,
                retention: curve.clone(),
            })
            .collect();
        Self::new(files, true)
    }

    pub fn files(&self) -> &[VideoFile] {
        &self.files
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn is_uniform_size(&self) -> bool {
        self.uniform_size
    }

    /// Common file size `S`, or an error when sizes differ.
    pub fn common_size(&self) -> Result<f64> {
        let s = self.files[0].size;
        if self.files.iter().all(|f| f.size == s) {
            Ok(s)
        } else {
            Err(Error::InvalidCatalog(
                "this computation needs equal file sizes".into(),
            ))
        }
    }

    pub fn total_size(&self) -> f64 {
        self.files.iter().map(|f| f.size).sum()
    }

    pub fn mean_size(&self) -> f64 {
        self.total_size() / self.len() as f64
    }

    pub fn popularities(&self) -> impl Iterator<Item = f64> + '_ {
        self.files.iter().map(|f| f.popularity)
    }

    /// Returns a copy with every size replaced by `size`.
    pub fn with_uniform_size(&self, size: f64) -> Result<Self> {
        let files = self
            .files
            .iter()
            .map(|f| VideoFile { size, ..f.clone() })
            .collect();
        Self::new(files, true)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `p_i ∝ i^{-α}` for ranks `1..=m`, normalized.
pub fn zipf_popularity(m: usize, alpha: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain {
            what: "catalog size",
            value: 0.0,
            domain: "M >= 1",
        });
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Domain {
            what: "zipf exponent",
            value: alpha,
            domain: "[0, inf)",
        });
    }
    let weights: Vec<f64> = (1..=m).map(|i| (i as f64).powf(-alpha)).collect();
    // Smallest terms first for a tighter sum.
    let total: f64 = weights.iter().rev().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogRepr {
    #[serde(default)]
    uniform_size: bool,
    files: Vec<VideoFile>,
}

impl TryFrom<CatalogRepr> for Catalog {
    type Error = Error;

    fn try_from(repr: CatalogRepr) -> Result<Self> {
        Self::new(repr.files, repr.uniform_size)
    }
}

impl From<Catalog> for CatalogRepr {
    fn from(c: Catalog) -> Self {
        Self {
            uniform_size: c.uniform_size,
            files: c.files,
        }
    }
}
