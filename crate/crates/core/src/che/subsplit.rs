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

//! Sufficient condition under which splitting a chunk never increases the
//! chunk-LRU traffic: `ξ(τ) = Σ_i p_i R_i(τ) e^{-p_i R_i(τ) t}` strictly
//! decreasing in `τ` for every `t` in the characteristic-time bounds.

use serde::Serialize;

use crate::catalog::Catalog;
use crate::error::Result;

use super::characteristic_time_bounds;

/// Grid on which the condition is checked.
#[derive(Clone, Copy, Debug)]
pub struct SubsplitGrid {
    pub tau_points: usize,
    pub t_points: usize,
}

impl Default for SubsplitGrid {
    fn default() -> Self {
        Self {
            tau_points: 200,
            t_points: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SubsplitCheck {
    pub holds: bool,
    /// Smallest `ξ(τ_j) - ξ(τ_{j+1})` over the grid; positive when the
    /// condition holds.
    pub margin: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

pub fn check_subsplit_condition(
    catalog: &Catalog,
    nu: f64,
    capacity: f64,
    grid: SubsplitGrid,
) -> Result<SubsplitCheck> {
    let (t_lo, t_hi) = characteristic_time_bounds(catalog, nu, capacity)?;
    let taus = linspace(0.0, 1.0, grid.tau_points.max(2));
    let ts = if t_hi > t_lo {
        linspace(t_lo, t_hi, grid.t_points.max(2))
    } else {
        vec![t_lo]
    };
    // R_i(τ_j), shared across all t.
    let rows: Vec<Vec<f64>> = taus
        .iter()
        .map(|&tau| {
            catalog
                .files()
                .iter()
                .map(|f| f.popularity * f.retention.value(tau))
                .collect()
        })
        .collect();
    let mut margin = f64::INFINITY;
    for &t in &ts {
        let xi: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().map(|&a| a * (-a * t).exp()).sum())
            .collect();
        for w in xi.windows(2) {
            margin = margin.min(w[0] - w[1]);
        }
    }
    Ok(SubsplitCheck {
        holds: margin > 0.0,
        margin,
        t_lo,
        t_hi,
    })
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|j| a + (b - a) * j as f64 / (n - 1) as f64)
        .collect();
    v[n - 1] = b;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{synthetic_catalog, RetentionCurve};

    #[test]
    fn constant_retention_fails_with_zero_margin() {
        let c = synthetic_catalog(50, 0.8, RetentionCurve::Constant).unwrap();
        let r = check_subsplit_condition(&c, 0.5, 5.0, SubsplitGrid::default()).unwrap();
        assert!(!r.holds);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn steep_retention_at_small_cache_holds() {
        let c = synthetic_catalog(
            100,
            0.8,
            RetentionCurve::truncated_exponential(-3.0).unwrap(),
        )
        .unwrap();
        let r = check_subsplit_condition(&c, 0.5, 1.0, SubsplitGrid::default()).unwrap();
        assert!(r.t_lo < r.t_hi);
        assert!(r.holds, "{r:?}");
    }
}
