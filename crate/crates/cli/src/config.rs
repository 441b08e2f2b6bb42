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

//! JSON configuration files.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};

use chunkcache::catalog::{build_class_scenario, synthetic_catalog, ClassTable, ScenarioOptions};
use chunkcache::sim::DeviationThresholds;
use chunkcache::{Catalog, RetentionCurve};

/// Where the catalog comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Ten popularity/duration classes with fitted retention curves.
    Classes {
        num_files: usize,
        #[serde(default = "default_alpha")]
        zipf_alpha: f64,
        /// Sizes proportional to class duration unless set.
        #[serde(default)]
        uniform_size: bool,
    },
    /// Equal sizes and one truncated-exponential curve for every file, given
    /// by its parameter or by the mean watch-time.
    Synthetic {
        num_files: usize,
        #[serde(default = "default_alpha")]
        zipf_alpha: f64,
        lambda: Option<f64>,
        watch_time: Option<f64>,
    },
    /// A catalog written by `gen-catalog`.
    File { path: String },
}

fn default_alpha() -> f64 {
    0.8
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Classes { num_files, .. } => {
                ensure!(*num_files > 0, "num_files must be positive")
            }
            Self::Synthetic {
                num_files,
                lambda,
                watch_time,
                ..
            } => {
                ensure!(*num_files > 0, "num_files must be positive");
                ensure!(
                    lambda.is_some() != watch_time.is_some(),
                    "synthetic scenario needs exactly one of lambda and watch_time"
                );
            }
            Self::File { .. } => {}
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Catalog> {
        self.validate()?;
        Ok(match self {
            Self::Classes {
                num_files,
                zipf_alpha,
                uniform_size,
            } => build_class_scenario(
                ScenarioOptions {
                    num_files: *num_files,
                    zipf_alpha: *zipf_alpha,
                    uniform_size: *uniform_size,
                },
                &ClassTable::measured(),
            )?,
            Self::Synthetic {
                num_files,
                zipf_alpha,
                lambda,
                watch_time,
            } => {
                let curve = match (lambda, watch_time) {
                    (Some(l), None) => RetentionCurve::truncated_exponential(*l)?,
                    (None, Some(w)) => RetentionCurve::with_mean_watch_time(*w)?,
                    _ => unreachable!("checked by validate"),
                };
                synthetic_catalog(*num_files, *zipf_alpha, curve)?
            }
            Self::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading catalog {path}"))?;
                Catalog::from_json(&text)?
            }
        })
    }
}

/// Cache size, absolute or as a fraction of the catalog size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CacheSize {
    Capacity(f64),
    COverSm(f64),
}

impl CacheSize {
    pub fn resolve(&self, catalog: &Catalog) -> Result<f64> {
        let c = match *self {
            Self::Capacity(c) => c,
            Self::COverSm(r) => {
                ensure!(r > 0.0 && r <= 1.0, "c_over_sm must lie in (0, 1], got {r}");
                r * catalog.total_size()
            }
        };
        ensure!(
            c.is_finite() && c >= 0.0,
            "capacity must be non-negative, got {c}"
        );
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticMethod {
    #[default]
    Bisection,
    ActiveSet,
    MostPopular,
}

/// Configuration of a single-point command (`static-opt`, `che`,
/// `simulate`, `validate`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub scenario: ScenarioSpec,
    pub cache: CacheSize,
    #[serde(default = "one")]
    pub chunks: usize,
    #[serde(default = "one_f")]
    pub nu: f64,
    #[serde(default = "default_requests")]
    pub requests: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: StaticMethod,
    #[serde(default = "default_thresholds")]
    pub thresholds: Thresholds,
    /// Files checked by `validate`; the top decile when absent.
    pub top_files: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub hit_rate: f64,
    pub traffic_relative: f64,
}

impl From<Thresholds> for DeviationThresholds {
    fn from(t: Thresholds) -> Self {
        Self {
            hit_rate: t.hit_rate,
            traffic_relative: t.traffic_relative,
        }
    }
}

fn default_thresholds() -> Thresholds {
    let d = DeviationThresholds::default();
    Thresholds {
        hit_rate: d.hit_rate,
        traffic_relative: d.traffic_relative,
    }
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

pub(crate) fn default_requests() -> u64 {
    1_000_000
}

pub(crate) fn default_warmup() -> f64 {
    chunkcache::sim::DEFAULT_WARMUP_FRACTION
}

impl PointConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        ensure!(self.chunks >= 1, "chunks must be at least 1");
        ensure!(
            self.nu > 0.0 && self.nu <= 1.0,
            "nu must lie in (0, 1], got {}",
            self.nu
        );
        ensure!(self.requests >= 1, "requests must be at least 1");
        ensure!(
            (0.0..1.0).contains(&self.warmup_fraction),
            "warmup_fraction must lie in [0, 1)"
        );
        Ok(())
    }
}

/// Reads and parses a JSON config file.
pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
