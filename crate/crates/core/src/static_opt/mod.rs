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

//! Full-information static allocation: which prefix of every video to keep
//! so that core-network traffic per request is minimal.
//!
//! With non-increasing retention the optimal stored set of video `i` is a
//! prefix `[0, η_i]`, obtained by thresholding the marginal value
//! `p_i R_i(τ)` against a common water level `μ`.

mod waterfill;

pub use waterfill::{exp_prefix_closed_form, waterfill_active_set, waterfill_bisection};

use serde::Serialize;

use crate::catalog::Catalog;
use crate::error::{Error, Result};

/// Stored prefix per file plus the water level that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrefixAllocation {
    pub eta: Vec<f64>,
    pub mu: f64,
    pub used_capacity: f64,
}

impl PrefixAllocation {
    pub(crate) fn new(catalog: &Catalog, eta: Vec<f64>, mu: f64) -> Self {
        let used_capacity = catalog
            .files()
            .iter()
            .zip(&eta)
            .map(|(f, &e)| f.size * e)
            .sum();
        Self {
            eta,
            mu,
            used_capacity,
        }
    }

    /// Per-file rows `(rank, p, η, traffic contribution)` for export.
    pub fn rows(&self, catalog: &Catalog) -> Vec<AllocationRow> {
        let nc = no_cache_traffic(catalog);
        catalog
            .files()
            .iter()
            .zip(&self.eta)
            .enumerate()
            .map(|(rank, (f, &eta))| {
                let b = f.size * f.popularity * f.retention.integral(eta, 1.0);
                AllocationRow {
                    file_rank: rank + 1,
                    p: f.popularity,
                    eta,
                    contribution_to_b: b,
                    contribution_normalized: if nc > 0.0 { b / nc } else { 0.0 },
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AllocationRow {
    pub file_rank: usize,
    pub p: f64,
    pub eta: f64,
    pub contribution_to_b: f64,
    pub contribution_normalized: f64,
}

/// Core traffic per request, absolute and relative to the no-cache traffic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrafficResult {
    pub absolute: f64,
    pub normalized: f64,
}

impl TrafficResult {
    pub fn new(absolute: f64, no_cache: f64) -> Self {
        let normalized = if no_cache > 0.0 {
            absolute / no_cache
        } else {
            0.0
        };
        Self {
            absolute,
            normalized,
        }
    }
}

/// `B_nc = Σ S_i p_i ∫_0^1 R_i`: traffic per request without a cache.
pub fn no_cache_traffic(catalog: &Catalog) -> f64 {
    catalog
        .files()
        .iter()
        .map(|f| f.size * f.popularity * f.retention.mean_watch_time())
        .sum()
}

/// `B = Σ S_i p_i ∫_{η_i}^1 R_i`. Cache-fill traffic is not counted.
pub fn traffic_static(catalog: &Catalog, allocation: &PrefixAllocation) -> TrafficResult {
    let absolute = catalog
        .files()
        .iter()
        .zip(&allocation.eta)
        .map(|(f, &eta)| f.size * f.popularity * f.retention.integral(eta.clamp(0.0, 1.0), 1.0))
        .sum();
    TrafficResult::new(absolute, no_cache_traffic(catalog))
}

pub(crate) fn check_capacity(catalog: &Catalog, capacity: f64) -> Result<f64> {
    if !(capacity.is_finite() && capacity >= 0.0) {
        return Err(Error::Domain {
            what: "capacity",
            value: capacity,
            domain: "[0, total catalog size]",
        });
    }
    let total = catalog.total_size();
    if capacity > total * (1.0 + 1e-12) {
        return Err(Error::Capacity { capacity, total });
    }
    Ok(total)
}

/// Stores whole files in decreasing popularity order; the first file that
/// does not fit gets the remaining space as a prefix.
pub fn most_popular_baseline(catalog: &Catalog, capacity: f64) -> Result<PrefixAllocation> {
    check_capacity(catalog, capacity)?;
    let mut left = capacity;
    let mut mu = 0.0;
    let eta = catalog
        .files()
        .iter()
        .map(|f| {
            if left <= 0.0 {
                0.0
            } else if f.size <= left {
                left -= f.size;
                1.0
            } else {
                let e = left / f.size;
                left = 0.0;
                mu = f.popularity;
                e
            }
        })
        .collect();
    Ok(PrefixAllocation::new(catalog, eta, mu))
}

/// Largest number of slices the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_SLICES: usize = 1_000_000;

/// Brute-force reference: every file is cut into `grid` equal slices worth
/// `p_i R_i(midpoint)` per unit of space, and the cache is filled with the
/// densest slices first (the last one fractionally).
pub fn brute_force_allocation_oracle(
    catalog: &Catalog,
    capacity: f64,
    grid: usize,
) -> Result<PrefixAllocation> {
    check_capacity(catalog, capacity)?;
    let slices = catalog.len().saturating_mul(grid);
    if grid == 0 || slices > BRUTE_FORCE_MAX_SLICES {
        return Err(Error::Resource(format!(
            "{} files x {grid} slices exceeds {BRUTE_FORCE_MAX_SLICES}",
            catalog.len()
        )));
    }
    let mut order: Vec<(f64, u32, u32)> = Vec::with_capacity(slices);
    for (i, f) in catalog.files().iter().enumerate() {
        for k in 0..grid {
            let mid = (k as f64 + 0.5) / grid as f64;
            order.push((f.popularity * f.retention.value(mid), i as u32, k as u32));
        }
    }
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Whole slices are counted exactly; at most one slice is taken in part.
    let mut whole = vec![0usize; catalog.len()];
    let mut partial = (0usize, 0.0);
    let mut left = capacity;
    let mut mu = order.first().map_or(0.0, |s| s.0);
    for &(density, i, _) in &order {
        if left <= 0.0 {
            break;
        }
        let cost = catalog.files()[i as usize].size / grid as f64;
        mu = density;
        if cost <= left + 1e-12 * capacity {
            whole[i as usize] += 1;
            left -= cost;
        } else {
            partial = (i as usize, left / cost);
            break;
        }
    }
    let mut eta: Vec<f64> = whole.iter().map(|&n| n as f64 / grid as f64).collect();
    eta[partial.0] = (eta[partial.0] + partial.1 / grid as f64).min(1.0);
    Ok(PrefixAllocation::new(catalog, eta, mu))
}

/// Largest violation of the water-level optimality conditions:
/// full files must have `p R(1) >= μ`, empty files `p R(0) <= μ`, and
/// partial files `p R(η) = μ`.
pub fn kkt_violation(catalog: &Catalog, allocation: &PrefixAllocation) -> f64 {
    let mu = allocation.mu;
    catalog
        .files()
        .iter()
        .zip(&allocation.eta)
        .map(|(f, &eta)| {
            let p = f.popularity;
            if eta >= 1.0 - 1e-12 {
                (mu - p * f.retention.value(1.0)).max(0.0)
            } else if eta <= 1e-12 {
                (p * f.retention.value(0.0) - mu).max(0.0)
            } else {
                (p * f.retention.value(eta) - mu).abs()
            }
        })
        .fold(0.0, f64::max)
}
