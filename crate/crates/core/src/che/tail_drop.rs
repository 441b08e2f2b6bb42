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

//! Choice of the tail drop factor `ν`.
//!
//! Both searches scan a uniform grid on `[C/(M S), 1]` and refine around the
//! best grid point with golden-section search. The objective is not known to
//! be unimodal, which is why the grid comes first.

use serde::Serialize;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::roots::golden_section_min;
use crate::static_opt::{no_cache_traffic, TrafficResult};

use super::subsplit::linspace;
use super::{traffic_chunk_lru, ChunkScheme, ContinuumModel};

/// Grid size and final tolerance of the `ν` search.
#[derive(Clone, Copy, Debug)]
pub struct NuSearch {
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for NuSearch {
    fn default() -> Self {
        Self {
            grid_points: 256,
            tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailDropOptimum {
    pub nu: f64,
    pub traffic: TrafficResult,
    pub t_c: f64,
}

fn nu_range(catalog: &Catalog, capacity: f64) -> Result<(f64, f64)> {
    let size = catalog.common_size()?;
    let total = catalog.len() as f64 * size;
    if !(capacity.is_finite() && capacity >= 0.0 && capacity <= total) {
        return Err(Error::Capacity { capacity, total });
    }
    Ok((size, capacity / total))
}

/// Minimises `objective(ν) -> (traffic per size, t_C)` over `[lo, 1]`.
fn search<F: FnMut(f64) -> Result<(f64, f64)>>(
    mut objective: F,
    lo: f64,
    opts: NuSearch,
) -> Result<(f64, f64, f64)> {
    // ν = 0 carries no cacheable part at all; keep the search off it.
    let lo = lo.max(1e-9);
    if lo >= 1.0 {
        let (b, t) = objective(1.0)?;
        return Ok((1.0, b, t));
    }
    let grid = linspace(lo, 1.0, opts.grid_points.max(2));
    let mut values = Vec::with_capacity(grid.len());
    for &nu in &grid {
        values.push(objective(nu)?.0);
    }
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let mut failure = None;
    let (nu, val) = golden_section_min(
        |nu| match objective(nu) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        opts.tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (nu, val) = if values[best] < val {
        (grid[best], values[best])
    } else {
        (nu, val)
    };
    let (_, t) = objective(nu)?;
    Ok((nu, val, t))
}

/// Lower bound on chunk-LRU traffic over all schemes: the infinitesimal-chunk
/// traffic minimised over `ν`.
pub fn infinitesimal_bound(
    catalog: &Catalog,
    capacity: f64,
    opts: NuSearch,
) -> Result<TailDropOptimum> {
    let (size, lo) = nu_range(catalog, capacity)?;
    let (nu, per_size, t_c) = search(
        |nu| {
            let (t, b) = ContinuumModel::new(catalog, nu)?.evaluate(capacity)?;
            Ok((b, t))
        },
        lo,
        opts,
    )?;
    Ok(TailDropOptimum {
        nu,
        traffic: TrafficResult::new(per_size * size, no_cache_traffic(catalog)),
        t_c,
    })
}

/// Best tail drop factor for `n` equal chunks.
pub fn optimize_tail_drop(
    catalog: &Catalog,
    capacity: f64,
    n: usize,
    opts: NuSearch,
) -> Result<TailDropOptimum> {
    let (size, lo) = nu_range(catalog, capacity)?;
    let (nu, per_size, t_c) = search(
        |nu| {
            let p = traffic_chunk_lru(catalog, &ChunkScheme::equal(n, nu)?, capacity)?;
            Ok((p.traffic.absolute / size, p.t_c))
        },
        lo,
        opts,
    )?;
    Ok(TailDropOptimum {
        nu,
        traffic: TrafficResult::new(per_size * size, no_cache_traffic(catalog)),
        t_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{synthetic_catalog, RetentionCurve};

    const FAST: NuSearch = NuSearch {
        grid_points: 24,
        tol: 1e-4,
    };

    #[test]
    fn constant_retention_keeps_whole_files() {
        let c = synthetic_catalog(100, 0.8, RetentionCurve::Constant).unwrap();
        let opt = infinitesimal_bound(&c, 10.0, FAST).unwrap();
        assert!(opt.nu > 1.0 - 1e-3, "{opt:?}");
    }

    #[test]
    fn retention_reaching_zero_drops_a_tail() {
        let c = synthetic_catalog(
            100,
            0.8,
            RetentionCurve::with_mean_watch_time(0.61).unwrap(),
        )
        .unwrap();
        let opt = infinitesimal_bound(&c, 10.0, FAST).unwrap();
        assert!(opt.nu < 1.0 - 1e-3, "{opt:?}");
        let one = optimize_tail_drop(&c, 10.0, 1, FAST).unwrap();
        assert!(one.traffic.absolute >= opt.traffic.absolute);
    }

    #[test]
    fn full_capacity_is_free() {
        let c =
            synthetic_catalog(20, 0.8, RetentionCurve::with_mean_watch_time(0.5).unwrap()).unwrap();
        let opt = infinitesimal_bound(&c, 20.0, FAST).unwrap();
        assert_eq!(opt.nu, 1.0);
        assert!(opt.traffic.absolute.abs() < 1e-12);
        assert!(infinitesimal_bound(&c, 21.0, FAST).is_err());
    }
}
