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

//! Water-level solvers for the optimal prefix allocation.

use super::{check_capacity, PrefixAllocation};
use crate::catalog::{Catalog, RetentionCurve, VideoFile};
use crate::error::Result;

const MAX_BISECTION_STEPS: usize = 200;

/// Stored prefix of one file at water level `μ`: `sup { τ : p R(τ) >= μ }`.
fn prefix_at(file: &VideoFile, mu: f64) -> f64 {
    if mu <= 0.0 {
        1.0
    } else if file.popularity <= 0.0 {
        0.0
    } else {
        file.retention.upper_inverse(mu / file.popularity)
    }
}

/// `[-(1/λ) ln(μ/p (1 - e^{-λ}) + e^{-λ})]^+`, the prefix of a truncated
/// exponential file at water level `μ`, capped at 1.
pub fn exp_prefix_closed_form(lambda: f64, mu: f64, p: f64) -> f64 {
    if lambda == 0.0 {
        return (1.0 - mu / p).clamp(0.0, 1.0);
    }
    let e = (-lambda).exp();
    (-(mu / p * (1.0 - e) + e).ln() / lambda).clamp(0.0, 1.0)
}

/// Spreads `residual` capacity over files in index order, raising each from
/// `low[i]` towards `high[i]`.
fn fill_in_index_order(
    catalog: &Catalog,
    low: &[f64],
    high: &[f64],
    mut residual: f64,
) -> Vec<f64> {
    let mut eta = low.to_vec();
    for (i, f) in catalog.files().iter().enumerate() {
        if residual <= 0.0 {
            break;
        }
        let room = (high[i] - low[i]).max(0.0) * f.size;
        if room <= 0.0 {
            continue;
        }
        let add = room.min(residual);
        eta[i] += add / f.size;
        residual -= add;
    }
    eta
}

fn edge_cases(catalog: &Catalog, capacity: f64, total: f64) -> Option<PrefixAllocation> {
    let m = catalog.len();
    if capacity <= 0.0 {
        let mu = catalog
            .files()
            .iter()
            .map(|f| f.popularity)
            .fold(0.0, f64::max);
        return Some(PrefixAllocation::new(catalog, vec![0.0; m], mu));
    }
    if capacity >= total {
        return Some(PrefixAllocation::new(catalog, vec![1.0; m], 0.0));
    }
    None
}

/// Water level by bisection on the non-increasing map `μ ↦ Σ S_i η_i(μ)`.
///
/// Bisection runs until the bracket stops shrinking. If the map jumps inside
/// the final bracket (a retention plateau sitting exactly at the water level)
/// the leftover capacity goes to the plateau files in index order, so the
/// cache is always filled exactly.
pub fn waterfill_bisection(catalog: &Catalog, capacity: f64) -> Result<PrefixAllocation> {
    let total = check_capacity(catalog, capacity)?;
    if let Some(a) = edge_cases(catalog, capacity, total) {
        return Ok(a);
    }
    let used = |mu: f64| -> f64 {
        catalog
            .files()
            .iter()
            .map(|f| f.size * prefix_at(f, mu))
            .sum()
    };
    let p_max = catalog
        .files()
        .iter()
        .map(|f| f.popularity)
        .fold(0.0, f64::max);
    // used(lo) >= capacity >= used(hi)
    let (mut lo, mut hi) = (0.0, 2.0 * p_max);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if used(mid) >= capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let high: Vec<f64> = catalog.files().iter().map(|f| prefix_at(f, lo)).collect();
    let low: Vec<f64> = catalog.files().iter().map(|f| prefix_at(f, hi)).collect();
    let base: f64 = catalog
        .files()
        .iter()
        .zip(&low)
        .map(|(f, e)| f.size * e)
        .sum();
    let eta = fill_in_index_order(catalog, &low, &high, capacity - base);
    Ok(PrefixAllocation::new(catalog, eta, 0.5 * (lo + hi)))
}

/// `p R` extended to the whole real line: linear outside `[0, 1]` with the
/// boundary slope (or slope `-p` where the curve is flat at the boundary), so
/// its inverse is defined for every water level.
struct ExtendedValue<'a> {
    size: f64,
    p: f64,
    curve: &'a RetentionCurve,
    top: f64,
    bottom: f64,
    slope_start: f64,
    slope_end: f64,
}

impl<'a> ExtendedValue<'a> {
    fn new(file: &'a VideoFile) -> Self {
        let p = file.popularity;
        let (s0, s1) = file.retention.boundary_slopes();
        let fallback = if p > 0.0 { -p } else { -1.0 };
        let slope = |s: f64| {
            if p * s < 0.0 && (p * s).is_finite() {
                p * s
            } else {
                fallback
            }
        };
        Self {
            size: file.size,
            p,
            curve: &file.retention,
            top: p * file.retention.value(0.0),
            bottom: p * file.retention.value(1.0),
            slope_start: slope(s0),
            slope_end: slope(s1),
        }
    }

    fn inverse(&self, mu: f64) -> f64 {
        if mu > self.top {
            (mu - self.top) / self.slope_start
        } else if mu < self.bottom {
            1.0 + (mu - self.bottom) / self.slope_end
        } else {
            self.curve.upper_inverse(mu / self.p)
        }
    }
}

/// Active-set waterfilling.
///
/// Each round solves the interior equation `Σ S_i ψ_i^{-1}(μ) = C^{(k)}` over
/// the files still active, where `ψ_i` is `p_i R_i` extended beyond `[0, 1]`.
/// If the clamped solution overfills the cache, files whose inverse fell
/// below 0 are fixed at 0; if it underfills, files above 1 are stored whole
/// and their size leaves the budget. Every round fixes at least one file, so
/// there are at most `M` rounds.
pub fn waterfill_active_set(catalog: &Catalog, capacity: f64) -> Result<PrefixAllocation> {
    let total = check_capacity(catalog, capacity)?;
    if let Some(a) = edge_cases(catalog, capacity, total) {
        return Ok(a);
    }
    let ext: Vec<ExtendedValue> = catalog.files().iter().map(ExtendedValue::new).collect();
    let tol = 1e-9 * total;
    let mut eta = vec![0.0; catalog.len()];
    let mut active: Vec<usize> = (0..catalog.len()).collect();
    let mut budget = capacity;
    let mut mu = 0.0;

    while !active.is_empty() {
        let demand = |mu: f64| -> f64 {
            active
                .iter()
                .map(|&i| ext[i].size * ext[i].inverse(mu))
                .sum()
        };
        // demand is decreasing and unbounded both ways.
        let mut width = 1.0;
        let max_top = active.iter().map(|&i| ext[i].top).fold(f64::MIN, f64::max);
        let min_bottom = active
            .iter()
            .map(|&i| ext[i].bottom)
            .fold(f64::MAX, f64::min);
        let (mut lo, mut hi) = (min_bottom - width, max_top + width);
        while demand(lo) < budget || demand(hi) > budget {
            width *= 2.0;
            lo = min_bottom - width;
            hi = max_top + width;
        }
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if demand(mid) >= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu = 0.5 * (lo + hi);

        let (mut below, mut above, mut interior) = (Vec::new(), Vec::new(), Vec::new());
        for &i in &active {
            let x = ext[i].inverse(mu);
            if x < 0.0 {
                below.push(i);
            } else if x > 1.0 {
                above.push(i);
            } else {
                interior.push(i);
            }
        }
        let delta: f64 = above.iter().map(|&i| ext[i].size).sum::<f64>()
            + interior
                .iter()
                .map(|&i| ext[i].size * ext[i].inverse(mu))
                .sum::<f64>()
            - budget;

        // An empty interior alone does not end the search: with plateau
        // curves the files straddling μ still have to be fixed first.
        let settle = delta.abs() <= tol
            || (delta > 0.0 && below.is_empty())
            || (delta < 0.0 && above.is_empty());
        if settle {
            // Clamp every remaining file at the final bracket and hand any
            // leftover (plateaus at the water level) out in index order.
            let mut low = vec![0.0; catalog.len()];
            let mut high = vec![0.0; catalog.len()];
            for &i in &active {
                low[i] = ext[i].inverse(hi).clamp(0.0, 1.0);
                high[i] = ext[i].inverse(lo).clamp(0.0, 1.0);
            }
            let base: f64 = active.iter().map(|&i| ext[i].size * low[i]).sum();
            let filled = fill_in_index_order(catalog, &low, &high, budget - base);
            for &i in &active {
                eta[i] = filled[i];
            }
            break;
        }
        if delta > 0.0 {
            for &i in &below {
                eta[i] = 0.0;
            }
            active.retain(|i| !below.contains(i));
        } else {
            for &i in &above {
                eta[i] = 1.0;
                budget -= ext[i].size;
            }
            active.retain(|i| !above.contains(i));
        }
    }
    Ok(PrefixAllocation::new(catalog, eta, mu.max(0.0)))
}
