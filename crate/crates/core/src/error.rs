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

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid retention curve: {0}")]
    InvalidCurve(String),

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid class table: {0}")]
    InvalidClassTable(String),

    #[error("capacity {capacity} exceeds the catalog size {total}")]
    Capacity { capacity: f64, total: f64 },

    /// The characteristic-time equation has no finite root because the cache
    /// can hold every cacheable chunk.
    #[error(
        "characteristic time diverges: capacity {capacity_files} (in file sizes) \
         reaches the cacheable mass {cacheable_mass}"
    )]
    InfiniteCharacteristicTime {
        capacity_files: f64,
        cacheable_mass: f64,
    },

    #[error("invalid chunk scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_unit_interval(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        })
    }
}
