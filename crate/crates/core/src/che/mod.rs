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

//! Che-approximation model of chunk-LRU.
//!
//! Every video is split at `0 = x_0 <= x_1 <= ... <= x_N = ν`; the first `N`
//! chunks are managed by one LRU list and the tail `[ν, 1]` is never cached.
//! Chunk `k` of video `i` is requested at rate `p_i R_i(x_{k-1})`, and under
//! Che's approximation it is found in the cache with probability
//! `h_{k,i} = 1 - e^{-p_i R_i(x_{k-1}) t_C}`, where the characteristic time
//! `t_C` makes the expected occupancy equal the capacity.
//!
//! All functions require equal file sizes. Capacities are in the same unit as
//! the sizes; time is measured in requests.

mod continuum;
mod subsplit;
mod tail_drop;

pub use continuum::{characteristic_time_bounds, nu_direction_derivative, ContinuumModel};
pub use subsplit::{check_subsplit_condition, SubsplitCheck, SubsplitGrid};
pub use tail_drop::{infinitesimal_bound, optimize_tail_drop, NuSearch, TailDropOptimum};

use serde::Serialize;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::roots::{expand_upper, newton_bisect};
use crate::static_opt::{no_cache_traffic, TrafficResult};

/// Hit rates are kept below one by this margin.
pub const HIT_RATE_CEILING: f64 = 1.0 - 1e-15;

const ROOT_RTOL: f64 = 1e-12;

/// Split points `x_0 = 0 <= ... <= x_N = ν` of the cacheable part of a video.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChunkScheme {
    splits: Vec<f64>,
}

impl ChunkScheme {
    pub fn new(splits: Vec<f64>) -> Result<Self> {
        if splits.len() < 2 {
            return Err(Error::InvalidScheme("need at least one chunk".into()));
        }
        if splits[0] != 0.0 {
            return Err(Error::InvalidScheme("first split must be 0".into()));
        }
        if splits.iter().any(|x| !x.is_finite()) || splits.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidScheme(
                "split points must be non-decreasing".into(),
            ));
        }
        let nu = splits[splits.len() - 1];
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::InvalidScheme(format!(
                "tail drop factor {nu} outside (0, 1]"
            )));
        }
        Ok(Self { splits })
    }

    /// `n` chunks of width `ν / n`.
    pub fn equal(n: usize, nu: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidScheme("need at least one chunk".into()));
        }
        let mut splits: Vec<f64> = (0..=n).map(|k| nu * k as f64 / n as f64).collect();
        splits[n] = nu;
        Self::new(splits)
    }

    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    pub fn nu(&self) -> f64 {
        self.splits[self.splits.len() - 1]
    }

    pub fn num_chunks(&self) -> usize {
        self.splits.len() - 1
    }

    /// `(start, width)` of every cacheable chunk.
    pub fn chunks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.splits.windows(2).map(|w| (w[0], w[1] - w[0]))
    }

    /// True when every split point of `self` is also one of `finer`'s, with
    /// the same tail drop factor and strictly more points.
    pub fn is_refined_by(&self, finer: &ChunkScheme) -> bool {
        self.nu() == finer.nu()
            && finer.splits.len() > self.splits.len()
            && self.splits.iter().all(|x| finer.splits.contains(x))
    }
}

/// Che prediction for one scheme and capacity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChePrediction {
    /// Characteristic time in requests; infinite when the cache holds every
    /// cacheable chunk.
    pub t_c: f64,
    /// `hit_rates[k][i]`: chunk `k` (0-based) of the file of rank `i`.
    pub hit_rates: Vec<Vec<f64>>,
    pub traffic: TrafficResult,
    pub saturated: bool,
}

impl ChePrediction {
    /// `S Σ_k Δx_k Σ_i h_{k,i}`, the expected occupied space.
    pub fn expected_occupancy(&self, scheme: &ChunkScheme, size: f64) -> f64 {
        scheme
            .chunks()
            .zip(&self.hit_rates)
            .map(|((_, w), h)| w * h.iter().sum::<f64>())
            .sum::<f64>()
            * size
    }
}

/// Request rates `p_i R_i(x_{k-1})` per chunk, with chunk widths.
struct ChunkRates {
    widths: Vec<f64>,
    rates: Vec<Vec<f64>>,
}

impl ChunkRates {
    fn new(catalog: &Catalog, scheme: &ChunkScheme) -> Self {
        let (starts, widths): (Vec<f64>, Vec<f64>) = scheme.chunks().unzip();
        let rates = starts
            .iter()
            .map(|&x| {
                catalog
                    .files()
                    .iter()
                    .map(|f| f.popularity * f.retention.value(x))
                    .collect()
            })
            .collect();
        Self { widths, rates }
    }

    /// Largest occupancy reachable: every chunk with a positive rate cached.
    fn cacheable_mass(&self) -> f64 {
        self.widths
            .iter()
            .zip(&self.rates)
            .map(|(w, r)| w * r.iter().filter(|&&a| a > 0.0).count() as f64)
            .sum()
    }

    /// Occupancy (in file sizes) at time `t` and its derivative in `t`.
    fn occupancy(&self, t: f64) -> (f64, f64) {
        let mut occ = 0.0;
        let mut d = 0.0;
        for (w, rates) in self.widths.iter().zip(&self.rates) {
            let (mut o, mut g) = (0.0, 0.0);
            for &a in rates {
                let e = (-a * t).exp();
                o += -(-a * t).exp_m1();
                g += a * e;
            }
            occ += w * o;
            d += w * g;
        }
        (occ, d)
    }
}

/// Root of `occupancy(t) = target` for an increasing concave occupancy.
pub(crate) fn solve_occupancy<F: FnMut(f64) -> (f64, f64)>(
    mut occupancy: F,
    target: f64,
    mass: f64,
) -> Result<f64> {
    if target <= 0.0 {
        return Ok(0.0);
    }
    if target >= mass * (1.0 - 1e-12) {
        return Err(Error::InfiniteCharacteristicTime {
            capacity_files: target,
            cacheable_mass: mass,
        });
    }
    let (_, slope0) = occupancy(0.0);
    // The tangent at 0 lies above a concave occupancy, so this start is left
    // of the root.
    let start = target / slope0;
    let hi = expand_upper(|t| occupancy(t).0 - target, start, 1100).ok_or(
        Error::InfiniteCharacteristicTime {
            capacity_files: target,
            cacheable_mass: mass,
        },
    )?;
    let lo = if hi > start { 0.5 * hi } else { 0.0 };
    Ok(newton_bisect(
        |t| {
            let (o, d) = occupancy(t);
            (o - target, d)
        },
        lo,
        hi,
        ROOT_RTOL,
        400,
    ))
}

/// Characteristic time `t_C` of chunk-LRU: the root of
/// `C/S = Σ_k Δx_k Σ_i (1 - e^{-p_i R_i(x_{k-1}) t})`.
pub fn solve_characteristic_time(
    catalog: &Catalog,
    scheme: &ChunkScheme,
    capacity: f64,
) -> Result<f64> {
    let size = catalog.common_size()?;
    let rates = ChunkRates::new(catalog, scheme);
    solve_occupancy(
        |t| rates.occupancy(t),
        capacity / size,
        rates.cacheable_mass(),
    )
}

fn tail_traffic_per_size(catalog: &Catalog, nu: f64) -> f64 {
    catalog
        .files()
        .iter()
        .map(|f| f.popularity * f.retention.integral(nu, 1.0))
        .sum()
}

fn check_capacity_vs_nu(catalog: &Catalog, nu: f64, capacity: f64, size: f64) -> Result<()> {
    if !(capacity.is_finite() && capacity >= 0.0) {
        return Err(Error::Domain {
            what: "capacity",
            value: capacity,
            domain: "[0, inf)",
        });
    }
    let nu_min = capacity / (catalog.len() as f64 * size);
    if nu < nu_min * (1.0 - 1e-12) {
        return Err(Error::InvalidScheme(format!(
            "tail drop factor {nu} is below C/(M S) = {nu_min}"
        )));
    }
    Ok(())
}

/// Expected chunk-LRU traffic per request,
/// `S Σ_i p_i (Σ_k R_i(x_{k-1}) (1 - h_{k,i}) Δx_k + ∫_ν^1 R_i)`.
///
/// When the capacity reaches the cacheable mass the cache holds every
/// cacheable chunk: `t_C` is reported as infinite, hit rates as 1 and only
/// the tail is fetched from the core network.
pub fn traffic_chunk_lru(
    catalog: &Catalog,
    scheme: &ChunkScheme,
    capacity: f64,
) -> Result<ChePrediction> {
    let size = catalog.common_size()?;
    check_capacity_vs_nu(catalog, scheme.nu(), capacity, size)?;
    let rates = ChunkRates::new(catalog, scheme);
    let target = capacity / size;
    let mass = rates.cacheable_mass();
    let tail = tail_traffic_per_size(catalog, scheme.nu());
    let nc = no_cache_traffic(catalog);

    if target >= mass * (1.0 - 1e-12) {
        let hit_rates = rates
            .rates
            .iter()
            .map(|r| r.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect())
            .collect();
        return Ok(ChePrediction {
            t_c: f64::INFINITY,
            hit_rates,
            traffic: TrafficResult::new(size * tail, nc),
            saturated: true,
        });
    }

    let t_c = solve_occupancy(|t| rates.occupancy(t), target, mass)?;
    let hit_rates: Vec<Vec<f64>> = rates
        .rates
        .iter()
        .map(|r| {
            r.iter()
                .map(|&a| (-(-a * t_c).exp_m1()).clamp(0.0, HIT_RATE_CEILING))
                .collect()
        })
        .collect();
    let cached_part: f64 = rates
        .widths
        .iter()
        .zip(rates.rates.iter().zip(&hit_rates))
        .map(|(w, (r, h))| w * r.iter().zip(h).map(|(a, h)| a * (1.0 - h)).sum::<f64>())
        .sum();
    Ok(ChePrediction {
        t_c,
        hit_rates,
        traffic: TrafficResult::new(size * (cached_part + tail), nc),
        saturated: false,
    })
}

/// Classic whole-file LRU under Che's approximation: a miss fetches the
/// whole file whatever part of it is watched, so `B = S Σ_i p_i e^{-p_i t_C}`
/// with `C/S = Σ_i (1 - e^{-p_i t_C})`. Solved by plain bisection.
pub fn standard_lru_traffic(catalog: &Catalog, capacity: f64) -> Result<ChePrediction> {
    let size = catalog.common_size()?;
    let target = capacity / size;
    let m = catalog.len() as f64;
    let nc = no_cache_traffic(catalog);
    let p: Vec<f64> = catalog.popularities().collect();
    if target >= m * (1.0 - 1e-12) {
        return Ok(ChePrediction {
            t_c: f64::INFINITY,
            hit_rates: vec![vec![1.0; p.len()]],
            traffic: TrafficResult::new(0.0, nc),
            saturated: true,
        });
    }
    let occupancy = |t: f64| p.iter().map(|&pi| -(-pi * t).exp_m1()).sum::<f64>();
    let mut hi = 1.0 / p[0];
    while occupancy(hi) < target {
        hi *= 2.0;
    }
    let (lo, hi) = crate::roots::bisect(|t| occupancy(t) - target, 0.0, hi, 1e-15, 400);
    let t_c = 0.5 * (lo + hi);
    let hits: Vec<f64> = p
        .iter()
        .map(|&pi| (-(-pi * t_c).exp_m1()).clamp(0.0, HIT_RATE_CEILING))
        .collect();
    let b = size
        * p.iter()
            .zip(&hits)
            .map(|(pi, h)| pi * (1.0 - h))
            .sum::<f64>();
    Ok(ChePrediction {
        t_c,
        hit_rates: vec![hits],
        traffic: TrafficResult::new(b, nc),
        saturated: false,
    })
}
