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

//! Request-level simulation of chunk-LRU under the independent reference
//! model with viewing abandonment.
//!
//! Each request picks a file with probability `p_i` and an abandonment point
//! `b` from the file's retention curve. The viewer then reads chunks
//! `1..=k̄` in order, `k̄ = min{k : x_k >= b}`; every chunk access updates the
//! cache, and a miss fetches the whole chunk from the core network. The part
//! of the view beyond `ν` is always fetched from the core network and never
//! cached.

mod cache;

pub use cache::{CacheState, ChunkKey, Touch, SIZE_UNIT};

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::Serialize;

use crate::catalog::Catalog;
use crate::che::{traffic_chunk_lru, ChunkScheme};
use crate::error::{Error, Result};
use crate::static_opt::{no_cache_traffic, TrafficResult};

pub const DEFAULT_WARMUP_FRACTION: f64 = 0.2;

/// Statistics of the measured (post-warmup) part of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    /// Requests after warmup.
    pub requests: u64,
    pub warmup_discarded: u64,
    /// `hits[k][i]` and `accesses[k][i]` for chunk `k` of file `i`.
    pub hits: Vec<Vec<u64>>,
    pub accesses: Vec<Vec<u64>>,
    /// Core traffic from chunk misses, summed over measured requests.
    pub miss_traffic: f64,
    /// Core traffic from the uncached tail, summed over measured requests.
    pub tail_traffic: f64,
    /// Mean core traffic per measured request; normalized by the analytic
    /// no-cache traffic.
    pub traffic: TrafficResult,
}

impl SimReport {
    /// Empirical hit rate, `None` when the chunk was never accessed.
    pub fn hit_rate(&self, chunk: usize, file: usize) -> Option<f64> {
        let n = self.accesses[chunk][file];
        (n > 0).then(|| self.hits[chunk][file] as f64 / n as f64)
    }

    pub fn num_chunks(&self) -> usize {
        self.hits.len()
    }
}

/// Chunk-LRU cache fed by an IRM request stream, advanced one request at a
/// time.
pub struct Simulator<'a> {
    catalog: &'a Catalog,
    splits: Vec<f64>,
    cache: CacheState,
    /// `sizes[i * n + k]` in fixed-point units.
    sizes: Vec<u64>,
    sampler: WeightedAliasIndex<f64>,
    rng: crate::rng::StreamRng,
    hits: Vec<Vec<u64>>,
    accesses: Vec<Vec<u64>>,
    miss_units: u128,
    tail_traffic: f64,
    measured: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        catalog: &'a Catalog,
        scheme: &ChunkScheme,
        capacity: f64,
        seed: u64,
    ) -> Result<Self> {
        let m = catalog.len();
        let n = scheme.num_chunks();
        let cache = CacheState::new(capacity, m, n)?;
        let mut sizes = Vec::with_capacity(m * n);
        let mut largest = (0.0_f64, 0u64);
        for f in catalog.files() {
            for (_, w) in scheme.chunks() {
                let units = cache::to_units(w * f.size);
                if units > largest.1 {
                    largest = (w * f.size, units);
                }
                sizes.push(units);
            }
        }
        if largest.1 > cache::to_units(capacity) {
            return Err(Error::Config(format!(
                "chunk of size {} exceeds the cache capacity {capacity}",
                largest.0
            )));
        }
        let sampler = WeightedAliasIndex::new(catalog.popularities().collect())
            .map_err(|e| Error::InvalidCatalog(format!("popularity sampler: {e}")))?;
        Ok(Self {
            catalog,
            splits: scheme.splits().to_vec(),
            cache,
            sizes,
            sampler,
            rng: crate::rng::stream(seed, 0),
            hits: vec![vec![0; m]; n],
            accesses: vec![vec![0; m]; n],
            miss_units: 0,
            tail_traffic: 0.0,
            measured: 0,
        })
    }

    pub fn cache(&self) -> &CacheState {
        &self.cache
    }

    /// Serves one request; statistics are recorded only when `measured`.
    pub fn step(&mut self, measured: bool) {
        let n = self.splits.len() - 1;
        let nu = self.splits[n];
        let i = self.sampler.sample(&mut self.rng);
        let file = &self.catalog.files()[i];
        let b = file.retention.sample_abandonment(self.rng.random::<f64>());
        // Chunks 1..=k̄ are read; k̄ = N when the view passes ν.
        let below = self.splits[1..].partition_point(|&x| x < b);
        let read = (below + 1).min(n);
        for k in 0..read {
            let key = ChunkKey {
                file: i as u32,
                chunk: k as u32,
            };
            let hit = self.cache.touch(key) == Touch::Hit;
            if !hit {
                let units = self.sizes[i * n + k];
                self.cache.insert_units(key, units, |_| {});
                if measured {
                    self.miss_units += units as u128;
                }
            }
            if measured {
                self.accesses[k][i] += 1;
                self.hits[k][i] += u64::from(hit);
            }
        }
        if measured {
            self.measured += 1;
            if b > nu {
                self.tail_traffic += (b - nu) * file.size;
            }
        }
    }

    /// Statistics of the measured requests so far.
    pub fn report(&self, warmup_discarded: u64) -> SimReport {
        let miss_traffic = self.miss_units as f64 / SIZE_UNIT;
        let per_request = if self.measured > 0 {
            (miss_traffic + self.tail_traffic) / self.measured as f64
        } else {
            0.0
        };
        SimReport {
            requests: self.measured,
            warmup_discarded,
            hits: self.hits.clone(),
            accesses: self.accesses.clone(),
            miss_traffic,
            tail_traffic: self.tail_traffic,
            traffic: TrafficResult::new(per_request, no_cache_traffic(self.catalog)),
        }
    }
}

/// Runs `num_requests` requests, discarding statistics of the first
/// `floor(warmup_fraction * num_requests)`.
pub fn run_simulation(
    catalog: &Catalog,
    scheme: &ChunkScheme,
    capacity: f64,
    num_requests: u64,
    seed: u64,
    warmup_fraction: f64,
) -> Result<SimReport> {
    if num_requests == 0 {
        return Err(Error::Config("at least one request is required".into()));
    }
    if !(0.0..1.0).contains(&warmup_fraction) {
        return Err(Error::Domain {
            what: "warmup fraction",
            value: warmup_fraction,
            domain: "[0, 1)",
        });
    }
    let mut sim = Simulator::new(catalog, scheme, capacity, seed)?;
    let warmup = (warmup_fraction * num_requests as f64).floor() as u64;
    for r in 0..num_requests {
        sim.step(r >= warmup);
    }
    Ok(sim.report(warmup))
}

/// Acceptance thresholds of a simulation-versus-Che comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviationThresholds {
    pub hit_rate: f64,
    pub traffic_relative: f64,
}

impl Default for DeviationThresholds {
    fn default() -> Self {
        Self {
            hit_rate: 0.02,
            traffic_relative: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    /// `max_k |ĥ_{k,i} - h_{k,i}|` per file rank, over accessed chunks.
    pub per_file_max: Vec<f64>,
    /// Largest entry of `per_file_max` over the top decile of files.
    pub top_decile_max: f64,
    pub sim_traffic: f64,
    pub che_traffic: f64,
    /// `|B_sim - B_che| / B_che` on normalized traffic.
    pub traffic_relative: f64,
    /// True when the top-decile or traffic deviation exceeds the thresholds.
    /// Expected when the cache holds only a few files.
    pub exceeds_thresholds: bool,
}

impl DeviationReport {
    /// Largest per-file deviation over the `top` most popular files.
    pub fn max_over_top(&self, top: usize) -> f64 {
        self.per_file_max[..top.min(self.per_file_max.len())]
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// Runs one simulation and the matching Che prediction and reports their
/// deviation.
pub fn compare_sim_to_che(
    catalog: &Catalog,
    scheme: &ChunkScheme,
    capacity: f64,
    num_requests: u64,
    seed: u64,
    thresholds: DeviationThresholds,
) -> Result<DeviationReport> {
    let che = traffic_chunk_lru(catalog, scheme, capacity)?;
    let sim = run_simulation(
        catalog,
        scheme,
        capacity,
        num_requests,
        seed,
        DEFAULT_WARMUP_FRACTION,
    )?;
    let per_file_max: Vec<f64> = (0..catalog.len())
        .map(|i| {
            (0..scheme.num_chunks())
                .filter_map(|k| sim.hit_rate(k, i).map(|h| (h - che.hit_rates[k][i]).abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    let decile = catalog.len().div_ceil(10);
    let top_decile_max = per_file_max[..decile]
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b));
    let che_traffic = che.traffic.normalized;
    let sim_traffic = sim.traffic.normalized;
    let traffic_relative = if che_traffic > 0.0 {
        (sim_traffic - che_traffic).abs() / che_traffic
    } else {
        sim_traffic.abs()
    };
    Ok(DeviationReport {
        exceeds_thresholds: top_decile_max > thresholds.hit_rate
            || traffic_relative > thresholds.traffic_relative,
        per_file_max,
        top_decile_max,
        sim_traffic,
        che_traffic,
        traffic_relative,
    })
}
