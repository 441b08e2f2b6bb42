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

use std::collections::VecDeque;

use chunkcache::catalog::synthetic_catalog;
use chunkcache::che::{traffic_chunk_lru, ChunkScheme};
use chunkcache::export::{sim_hit_rows, write_csv};
use chunkcache::sim::{
    compare_sim_to_che, run_simulation, CacheState, ChunkKey, DeviationThresholds, Touch,
};
use chunkcache::{Catalog, RetentionCurve};
use proptest::prelude::*;

/// Reference LRU kept as a plain list, most recent first.
struct NaiveLru {
    capacity: f64,
    entries: VecDeque<(ChunkKey, f64)>,
}

impl NaiveLru {
    fn used(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    fn touch(&mut self, key: ChunkKey) -> bool {
        match self.entries.iter().position(|e| e.0 == key) {
            Some(pos) => {
                let e = self.entries.remove(pos).unwrap();
                self.entries.push_front(e);
                true
            }
            None => false,
        }
    }

    fn insert(&mut self, key: ChunkKey, size: f64) -> Vec<ChunkKey> {
        let mut evicted = Vec::new();
        while self.used() + size > self.capacity + 1e-9 {
            evicted.push(self.entries.pop_back().unwrap().0);
        }
        self.entries.push_front((key, size));
        evicted
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lru_matches_naive_list(ops in prop::collection::vec((0u32..12, 0u32..3, 1u32..=8), 1..400)) {
        // Sizes are multiples of 1/8 so both sides round identically.
        let mut fast = CacheState::new(2.0, 12, 3).unwrap();
        let mut slow = NaiveLru { capacity: 2.0, entries: VecDeque::new() };
        for (file, chunk, eighths) in ops {
            let key = ChunkKey { file, chunk };
            let size = eighths as f64 / 8.0;
            let hit = fast.touch(key) == Touch::Hit;
            prop_assert_eq!(hit, slow.touch(key));
            if !hit {
                let a = fast.insert_with_eviction(key, size).unwrap();
                let b = slow.insert(key, size);
                prop_assert_eq!(a, b);
            }
            prop_assert!(fast.occupancy() <= fast.capacity());
            prop_assert!((fast.occupancy() - slow.used()).abs() < 1e-12);
        }
        let order: Vec<ChunkKey> = slow.entries.iter().map(|e| e.0).collect();
        prop_assert_eq!(fast.keys_by_recency(), order);
        prop_assert!(fast.check_invariants().is_ok());
    }
}

#[test]
fn traffic_accounting_identity() {
    let c =
        synthetic_catalog(50, 0.8, RetentionCurve::with_mean_watch_time(0.55).unwrap()).unwrap();
    let s = ChunkScheme::new(vec![0.0, 0.1, 0.3, 0.7]).unwrap();
    let r = run_simulation(&c, &s, 8.0, 100_000, 4, 0.2).unwrap();
    let total = r.traffic.absolute * r.requests as f64;
    assert!((total - (r.miss_traffic + r.tail_traffic)).abs() < 1e-9 * total);
    for k in 0..s.num_chunks() {
        for i in 0..c.len() {
            assert!(r.hits[k][i] <= r.accesses[k][i]);
        }
    }
    // Chunk k is read only by views that reach its start.
    let first: u64 = r.accesses[0].iter().sum();
    assert_eq!(first, r.requests);
}

#[test]
fn never_requested_chunks_stay_cold() {
    let curve =
        RetentionCurve::tabulated(vec![(0.0, 1.0), (0.5, 0.4), (0.5, 0.0), (1.0, 0.0)]).unwrap();
    let c = synthetic_catalog(20, 0.8, curve).unwrap();
    let s = ChunkScheme::equal(4, 0.8).unwrap();
    let r = run_simulation(&c, &s, 4.0, 50_000, 1, 0.2).unwrap();
    assert!(r.accesses[3].iter().all(|&n| n == 0));
    assert_eq!(r.tail_traffic, 0.0);
    let che = traffic_chunk_lru(&c, &s, 4.0).unwrap();
    assert!(che.hit_rates[3].iter().all(|&h| h == 0.0));
}

#[test]
fn single_file_comparison_has_no_traffic_deviation() {
    let c = Catalog::uniform(&[1.0], 1.0, RetentionCurve::Constant).unwrap();
    let s = ChunkScheme::equal(1, 1.0).unwrap();
    let d = compare_sim_to_che(&c, &s, 1.0, 10_000, 0, DeviationThresholds::default()).unwrap();
    assert_eq!(d.sim_traffic, 0.0);
    assert_eq!(d.che_traffic, 0.0);
    assert_eq!(d.traffic_relative, 0.0);
}

#[test]
fn tiny_cache_comparison_completes() {
    // Two files' worth of cache is far from the regime the Che model targets;
    // the deviation is reported, not bounded.
    let c = synthetic_catalog(
        200,
        0.8,
        RetentionCurve::with_mean_watch_time(0.61).unwrap(),
    )
    .unwrap();
    let s = ChunkScheme::equal(4, 0.6).unwrap();
    let d = compare_sim_to_che(&c, &s, 2.0, 200_000, 0, DeviationThresholds::default()).unwrap();
    assert!(d.traffic_relative.is_finite() && d.top_decile_max.is_finite());
    assert_eq!(d.per_file_max.len(), 200);
}

/// Whole-file LRU hit rates against the single-chunk Che model, every file,
/// at 10^6 requests.
#[test]
fn whole_file_lru_matches_che_per_file() {
    let c = synthetic_catalog(200, 0.8, RetentionCurve::Constant).unwrap();
    let s = ChunkScheme::equal(1, 1.0).unwrap();
    let d = compare_sim_to_che(&c, &s, 50.0, 1_000_000, 0, DeviationThresholds::default()).unwrap();
    assert!(
        d.max_over_top(200) <= 0.02,
        "max per-file deviation {}",
        d.max_over_top(200)
    );
}

/// Same comparison with ten times the requests: the remaining deviation is
/// sampling noise, not model bias.
#[test]
fn whole_file_lru_matches_che_per_file_long_run() {
    let c = synthetic_catalog(200, 0.8, RetentionCurve::Constant).unwrap();
    let s = ChunkScheme::equal(1, 1.0).unwrap();
    let d =
        compare_sim_to_che(&c, &s, 50.0, 10_000_000, 0, DeviationThresholds::default()).unwrap();
    assert!(
        d.max_over_top(200) <= 0.02,
        "max per-file deviation {}",
        d.max_over_top(200)
    );
    assert!(d.traffic_relative < 0.01);
}

#[test]
fn hit_rate_csv_marks_unvisited_chunks() {
    let curve =
        RetentionCurve::tabulated(vec![(0.0, 1.0), (0.5, 0.4), (0.5, 0.0), (1.0, 0.0)]).unwrap();
    let c = synthetic_catalog(3, 0.8, curve).unwrap();
    let r = run_simulation(&c, &ChunkScheme::equal(2, 1.0).unwrap(), 1.0, 1000, 2, 0.2).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, "hit_rates", &sim_hit_rows(&r)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# chunkcache hit_rates schema v1"));
    assert_eq!(lines.next(), Some("source,file_rank,chunk,hit_rate"));
    assert!(text.contains("sim,1,2,NA"));
}
