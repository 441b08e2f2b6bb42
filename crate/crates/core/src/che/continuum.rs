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

//! Infinitesimal-chunk limit: chunks of vanishing width on `[0, ν]`.
//!
//! Sums over chunks become integrals over the watch position, discretised
//! with one composite Gauss-Legendre rule whose panels include every knot of
//! the tabulated curves, so piecewise-linear kinks and jumps sit on panel
//! edges.

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::quad::CompositeRule;

use super::{solve_occupancy, tail_traffic_per_size, ChunkRates, ChunkScheme};

const PANELS: usize = 16;

/// Request rates `p_i R_i(x)` sampled on the quadrature nodes of `[0, ν]`.
#[derive(Clone, Debug)]
pub struct ContinuumModel {
    nu: f64,
    weights: Vec<f64>,
    /// `rates[j * m + i] = p_i R_i(x_j)`.
    rates: Vec<f64>,
    m: usize,
    mass: f64,
    tail: f64,
    size: f64,
}

impl ContinuumModel {
    pub fn new(catalog: &Catalog, nu: f64) -> Result<Self> {
        let size = catalog.common_size()?;
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::Domain {
                what: "tail drop factor",
                value: nu,
                domain: "(0, 1]",
            });
        }
        let mut knots: Vec<f64> = catalog
            .files()
            .iter()
            .flat_map(|f| f.retention.breakpoints().iter().map(|k| k.0))
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let rule = CompositeRule::new(0.0, nu, PANELS, &knots);
        let m = catalog.len();
        let mut rates = Vec::with_capacity(rule.len() * m);
        let mut mass = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let mut positive = 0usize;
            for f in catalog.files() {
                let a = f.popularity * f.retention.value(x);
                positive += usize::from(a > 0.0);
                rates.push(a);
            }
            mass += w * positive as f64;
        }
        Ok(Self {
            nu,
            weights: rule.weights,
            rates,
            m,
            mass,
            tail: tail_traffic_per_size(catalog, nu),
            size,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Capacity (in file sizes) above which every cacheable position is held.
    pub fn cacheable_mass(&self) -> f64 {
        self.mass
    }

    fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.weights
            .iter()
            .copied()
            .zip(self.rates.chunks_exact(self.m))
    }

    /// `Σ_i ∫_0^ν (1 - e^{-p_i R_i(x) t}) dx` and its derivative in `t`,
    /// which is also `Σ_i ∫_0^ν p_i R_i e^{-p_i R_i t} dx`.
    pub fn occupancy(&self, t: f64) -> (f64, f64) {
        let mut occ = 0.0;
        let mut d = 0.0;
        for (w, row) in self.rows() {
            let (mut o, mut g) = (0.0, 0.0);
            for &a in row {
                let x = -a * t;
                o -= x.exp_m1();
                g += a * x.exp();
            }
            occ += w * o;
            d += w * g;
        }
        (occ, d)
    }

    /// `Σ_i ∫_0^ν p_i² R_i² e^{-p_i R_i t} dx`.
    fn second_moment(&self, t: f64) -> f64 {
        self.rows()
            .map(|(w, row)| w * row.iter().map(|&a| a * a * (-a * t).exp()).sum::<f64>())
            .sum()
    }

    /// Characteristic time for capacity `capacity`.
    pub fn characteristic_time(&self, capacity: f64) -> Result<f64> {
        solve_occupancy(|t| self.occupancy(t), capacity / self.size, self.mass)
    }

    /// Traffic per request divided by `S` at characteristic time `t`:
    /// `Σ_i ∫_0^ν p_i R_i e^{-p_i R_i t} + Σ_i p_i ∫_ν^1 R_i`. An infinite
    /// `t` leaves only the tail.
    pub fn traffic_per_size(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return self.tail;
        }
        self.occupancy(t).1 + self.tail
    }

    /// Characteristic time and traffic per size, saturating when the
    /// capacity covers the whole cacheable mass.
    pub fn evaluate(&self, capacity: f64) -> Result<(f64, f64)> {
        let target = capacity / self.size;
        if target >= self.mass * (1.0 - 1e-12) {
            return Ok((f64::INFINITY, self.tail));
        }
        let t = self.characteristic_time(capacity)?;
        Ok((t, self.traffic_per_size(t)))
    }
}

/// Bounds `(t_lo, t_hi)` on the characteristic time of any chunk-LRU scheme
/// with tail drop factor `ν`. `t_lo` treats `[0, ν]` as one chunk,
/// `C/S = ν Σ_i (1 - e^{-p_i t})`; `t_hi` is the infinitesimal-chunk limit,
/// `C/S = Σ_i ∫_0^ν (1 - e^{-p_i R_i(x) t}) dx`.
pub fn characteristic_time_bounds(catalog: &Catalog, nu: f64, capacity: f64) -> Result<(f64, f64)> {
    let coarse = ChunkScheme::new(vec![0.0, nu])?;
    let size = catalog.common_size()?;
    let rates = ChunkRates::new(catalog, &coarse);
    let t_lo = solve_occupancy(
        |t| rates.occupancy(t),
        capacity / size,
        rates.cacheable_mass(),
    )?;
    let t_hi = ContinuumModel::new(catalog, nu)?.characteristic_time(capacity)?;
    Ok((t_lo, t_hi.max(t_lo)))
}

/// Derivative of the infinitesimal-chunk traffic per size with respect to
/// `ν`, taken along the capacity constraint (so `t_C` moves with `ν`):
///
/// `q(ν) = -Σ_i (1 - e^{-p_i R_i(ν) t}) p_i R_i(ν)
///        + [∫Σ p²R² e^{-pRt}] [Σ_i (1 - e^{-p_i R_i(ν) t})] / [∫Σ pR e^{-pRt}]`.
pub fn nu_direction_derivative(catalog: &Catalog, nu: f64, capacity: f64) -> Result<f64> {
    let model = ContinuumModel::new(catalog, nu)?;
    let t = model.characteristic_time(capacity)?;
    let (_, first) = model.occupancy(t);
    let second = model.second_moment(t);
    let mut edge_hits = 0.0;
    let mut edge_loss = 0.0;
    for f in catalog.files() {
        let a = f.popularity * f.retention.value(nu);
        let h = -(-a * t).exp_m1();
        edge_hits += h;
        edge_loss += h * a;
    }
    Ok(-edge_loss + second * edge_hits / first)
}
