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

//! Analytics for partial (chunk-level) video caching.
//!
//! The crate answers two questions about a cache in front of a video store:
//! how much core-network traffic the best static partial allocation saves
//! when popularity and audience retention are known ([`static_opt`]), and how
//! close an LRU policy that works on the first chunks of each video gets to
//! that figure ([`che`] for the analytic model, [`sim`] for an event-driven
//! check of it).
//!
//! Everything is expressed per video request. Positions inside a video are
//! normalized to `[0, 1]`; sizes and capacities share one unit (bytes, or
//! "average video sizes" in the bundled scenarios).

pub mod catalog;
pub mod che;
mod error;
pub mod export;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod sim;
pub mod static_opt;

pub use catalog::{Catalog, ClassSpec, ClassTable, PopularityBand, RetentionCurve, VideoFile};
pub use che::{ChePrediction, ChunkScheme};
pub use error::{Error, Result};
pub use sim::{CacheState, ChunkKey, SimReport};
pub use static_opt::{PrefixAllocation, TrafficResult};
