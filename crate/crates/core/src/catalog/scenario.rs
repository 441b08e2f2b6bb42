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

//! Scenario builders, including the class table measured on a YouTube trace
//! (five popularity bands, each split into short and long videos).

use serde::{Deserialize, Serialize};

use super::{zipf_popularity, Catalog, RetentionCurve, VideoFile};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub avg_watch_time: f64,
    pub population_fraction: f64,
    pub avg_duration_sec: f64,
}

/// Classes sharing one popularity band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityBand {
    pub name: String,
    pub classes: Vec<ClassSpec>,
}

impl PopularityBand {
    pub fn fraction(&self) -> f64 {
        self.classes.iter().map(|c| c.population_fraction).sum()
    }
}

/// Popularity bands ordered from the most to the least popular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTable {
    pub bands: Vec<PopularityBand>,
}

/// (average watch-time, population fraction, average duration in seconds).
type ClassRow = (f64, f64, f64);

/// Rows of the measured table as (band, [small class, large class]).
const MEASURED_CLASSES: [(&str, [ClassRow; 2]); 5] = [
    ("highest", [(0.72, 0.145, 124.0), (0.65, 0.053, 235.0)]),
    ("high", [(0.67, 0.152, 130.0), (0.60, 0.047, 222.0)]),
    ("medium", [(0.64, 0.153, 128.0), (0.57, 0.045, 223.0)]),
    ("low", [(0.60, 0.162, 112.0), (0.47, 0.036, 220.0)]),
    ("lowest", [(0.52, 0.179, 81.0), (0.37, 0.020, 220.0)]),
];

impl ClassTable {
    /// The measured YouTube class table. Its population fractions add up to
    /// 0.992 as published; they are rescaled to sum to one.
    pub fn measured() -> Self {
        let raw_total: f64 = MEASURED_CLASSES
            .iter()
            .flat_map(|(_, cls)| cls.iter().map(|c| c.1))
            .sum();
        let bands = MEASURED_CLASSES
            .iter()
            .map(|(name, cls)| PopularityBand {
                name: (*name).to_string(),
                classes: cls
                    .iter()
                    .map(|&(w, f, d)| ClassSpec {
                        avg_watch_time: w,
                        population_fraction: f / raw_total,
                        avg_duration_sec: d,
                    })
                    .collect(),
            })
            .collect();
        Self { bands }
    }

    /// One band with one class.
    pub fn single(avg_watch_time: f64, avg_duration_sec: f64) -> Self {
        Self {
            bands: vec![PopularityBand {
                name: "all".into(),
                classes: vec![ClassSpec {
                    avg_watch_time,
                    population_fraction: 1.0,
                    avg_duration_sec,
                }],
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() || self.bands.iter().any(|b| b.classes.is_empty()) {
            return Err(Error::InvalidClassTable(
                "every band needs at least one class".into(),
            ));
        }
        let mut total = 0.0;
        for c in self.bands.iter().flat_map(|b| &b.classes) {
            if !(c.avg_watch_time > 0.0 && c.avg_watch_time < 1.0) {
                return Err(Error::InvalidClassTable(format!(
                    "watch-time {} outside (0, 1)",
                    c.avg_watch_time
                )));
            }
            if !(c.population_fraction >= 0.0 && c.population_fraction <= 1.0) {
                return Err(Error::InvalidClassTable(format!(
                    "population fraction {} outside [0, 1]",
                    c.population_fraction
                )));
            }
            if !(c.avg_duration_sec.is_finite() && c.avg_duration_sec > 0.0) {
                return Err(Error::InvalidClassTable(format!(
                    "duration {} must be positive",
                    c.avg_duration_sec
                )));
            }
            total += c.population_fraction;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidClassTable(format!(
                "population fractions sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// `(band, class)` of every popularity rank.
    ///
    /// Bands take contiguous rank quantiles in table order. Inside a band,
    /// ranks are dealt to classes by a weighted round robin: each rank goes to
    /// the class furthest behind its share, ties to the lower class index.
    pub fn assign(&self, m: usize) -> Result<Vec<(usize, usize)>> {
        self.validate()?;
        let mut out = Vec::with_capacity(m);
        let mut cumulative = 0.0;
        let mut start = 0usize;
        for (b, band) in self.bands.iter().enumerate() {
            cumulative += band.fraction();
            let end = if b + 1 == self.bands.len() {
                m
            } else {
                ((cumulative * m as f64).round() as usize).clamp(start, m)
            };
            let band_total = band.fraction();
            let shares: Vec<f64> = band
                .classes
                .iter()
                .map(|c| {
                    if band_total > 0.0 {
                        c.population_fraction / band_total
                    } else {
                        1.0 / band.classes.len() as f64
                    }
                })
                .collect();
            let mut dealt = vec![0usize; shares.len()];
            for j in 0..end - start {
                let pick = (0..shares.len())
                    .max_by(|&x, &y| {
                        let dx = (j + 1) as f64 * shares[x] - dealt[x] as f64;
                        let dy = (j + 1) as f64 * shares[y] - dealt[y] as f64;
                        dx.total_cmp(&dy).then(y.cmp(&x))
                    })
                    .expect("band has classes");
                dealt[pick] += 1;
                out.push((b, pick));
            }
            start = end;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub num_files: usize,
    pub zipf_alpha: f64,
    /// Equal sizes (chunk-LRU experiments) instead of sizes proportional to
    /// the class duration (static-optimum experiments).
    pub uniform_size: bool,
}

/// Catalog with Zipf popularity whose files take the watch-time (through a
/// fitted truncated exponential curve) and the duration of their class.
/// Sizes are normalized so that the average file has size 1.
pub fn build_class_scenario(opts: ScenarioOptions, table: &ClassTable) -> Result<Catalog> {
    let popularity = zipf_popularity(opts.num_files, opts.zipf_alpha)?;
    let classes = table.assign(opts.num_files)?;
    let curves: Vec<Vec<RetentionCurve>> = table
        .bands
        .iter()
        .map(|band| {
            band.classes
                .iter()
                .map(|c| RetentionCurve::with_mean_watch_time(c.avg_watch_time))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let durations: Vec<f64> = classes
        .iter()
        .map(|&(b, c)| table.bands[b].classes[c].avg_duration_sec)
        .collect();
    let mean_duration = durations.iter().sum::<f64>() / durations.len() as f64;
    let files = popularity
        .iter()
        .zip(&classes)
        .zip(&durations)
        .map(|((&p, &(b, c)), &d)| VideoFile {
            size: if opts.uniform_size {
                1.0
            } else {
                d / mean_duration
            },
            popularity: p,
            retention: curves[b][c].clone(),
        })
        .collect();
    Catalog::new(files, opts.uniform_size)
}

/// Equal-size Zipf catalog where every file shares `curve`.
pub fn synthetic_catalog(m: usize, alpha: f64, curve: RetentionCurve) -> Result<Catalog> {
    Catalog::uniform(&zipf_popularity(m, alpha)?, 1.0, curve)
}
