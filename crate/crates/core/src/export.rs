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

//! CSV tables for plotting.
//!
//! Every file starts with one comment line naming the table and its schema
//! version, followed by an ordinary header row. Missing values are written
//! as `NA`. Read the files back with `#` as the comment character.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::che::ChePrediction;
use crate::error::Result;
use crate::sim::SimReport;

pub const SCHEMA_VERSION: u32 = 1;

/// Serializes `None` as `NA`.
pub fn na<S: Serializer, T: Serialize>(
    value: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => v.serialize(s),
        None => s.serialize_str("NA"),
    }
}

/// Serializes a chunk count, `None` standing for infinitesimal chunks.
pub fn count_or_inf<S: Serializer>(
    value: &Option<usize>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => s.serialize_u64(*v as u64),
        None => s.serialize_str("inf"),
    }
}

/// Writes the schema comment line and `rows` with a header row.
pub fn write_csv<W: Write, R: Serialize>(mut out: W, table: &str, rows: &[R]) -> Result<()> {
    writeln!(out, "# chunkcache {table} schema v{SCHEMA_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One chunk's hit rate; shared by analytic and simulated results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitRateRow {
    pub source: &'static str,
    pub file_rank: usize,
    pub chunk: usize,
    #[serde(serialize_with = "na")]
    pub hit_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrafficSummaryRow {
    pub source: &'static str,
    pub b_absolute: f64,
    pub b_normalized: f64,
    #[serde(serialize_with = "na")]
    pub t_c: Option<f64>,
}

/// Best tail drop factor for one capacity and chunk count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailDropRow {
    pub c_over_sm: f64,
    /// `None` for the infinitesimal-chunk bound.
    #[serde(serialize_with = "count_or_inf")]
    pub n: Option<usize>,
    #[serde(serialize_with = "na")]
    pub nu_star: Option<f64>,
    #[serde(serialize_with = "na")]
    pub b_normalized: Option<f64>,
    #[serde(serialize_with = "na")]
    pub t_c: Option<f64>,
}

pub fn che_hit_rows(prediction: &ChePrediction) -> Vec<HitRateRow> {
    let mut rows = Vec::new();
    for (k, per_file) in prediction.hit_rates.iter().enumerate() {
        for (i, &h) in per_file.iter().enumerate() {
            rows.push(HitRateRow {
                source: "che",
                file_rank: i + 1,
                chunk: k + 1,
                hit_rate: Some(h),
            });
        }
    }
    rows
}

pub fn sim_hit_rows(report: &SimReport) -> Vec<HitRateRow> {
    let mut rows = Vec::new();
    for k in 0..report.num_chunks() {
        for i in 0..report.hits[k].len() {
            rows.push(HitRateRow {
                source: "sim",
                file_rank: i + 1,
                chunk: k + 1,
                hit_rate: report.hit_rate(k, i),
            });
        }
    }
    rows
}

pub fn che_summary(prediction: &ChePrediction) -> TrafficSummaryRow {
    TrafficSummaryRow {
        source: "che",
        b_absolute: prediction.traffic.absolute,
        b_normalized: prediction.traffic.normalized,
        t_c: prediction.t_c.is_finite().then_some(prediction.t_c),
    }
}

pub fn sim_summary(report: &SimReport) -> TrafficSummaryRow {
    TrafficSummaryRow {
        source: "sim",
        b_absolute: report.traffic.absolute,
        b_normalized: report.traffic.normalized,
        t_c: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_comment_header_and_na() {
        let rows = vec![
            TailDropRow {
                c_over_sm: 0.1,
                n: Some(4),
                nu_star: Some(0.5),
                b_normalized: Some(0.25),
                t_c: Some(12.0),
            },
            TailDropRow {
                c_over_sm: 0.2,
                n: None,
                nu_star: None,
                b_normalized: None,
                t_c: None,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, "nu_star", &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# chunkcache nu_star schema v1\nc_over_sm,n,nu_star,b_normalized,t_c\n0.1,4,0.5,0.25,12.0\n0.2,inf,NA,NA,NA\n"
        );
    }
}
