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

//! LRU list of variable-size chunks.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sizes are stored as integer multiples of `1 / SIZE_UNIT` so that
/// occupancy bookkeeping is exact.
pub const SIZE_UNIT: f64 = (1u64 << 40) as f64;

const NIL: u32 = u32::MAX;

/// Identifies chunk `chunk` (0-based) of the file of rank `file`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ChunkKey {
    pub file: u32,
    pub chunk: u32,
}

/// Result of [`CacheState::touch`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Touch {
    Hit,
    Absent,
}

#[derive(Clone, Debug)]
struct Node {
    key: ChunkKey,
    size: u64,
    prev: u32,
    next: u32,
}

/// Recency-ordered cache over a fixed key space of `files x chunks` keys.
///
/// Entries live in a slab forming a doubly linked list (head = most recent);
/// a dense table maps every key to its slab slot, so touches, inserts and
/// evictions are O(1).
#[derive(Clone, Debug)]
pub struct CacheState {
    capacity: u64,
    used: u64,
    chunks_per_file: u32,
    slot_of: Vec<u32>,
    nodes: Vec<Node>,
    free: Vec<u32>,
    head: u32,
    tail: u32,
    len: usize,
}

pub(crate) fn to_units(x: f64) -> u64 {
    (x * SIZE_UNIT).round() as u64
}

impl CacheState {
    /// Empty cache of `capacity` (in the same unit as chunk sizes) for keys
    /// with `file < num_files` and `chunk < chunks_per_file`.
    pub fn new(capacity: f64, num_files: usize, chunks_per_file: usize) -> Result<Self> {
        if !(capacity.is_finite() && capacity >= 0.0)
            || capacity * SIZE_UNIT >= u64::MAX as f64 / 4.0
        {
            return Err(Error::Domain {
                what: "cache capacity",
                value: capacity,
                domain: "[0, 2^22)",
            });
        }
        let keys = num_files
            .checked_mul(chunks_per_file)
            .filter(|&k| k < NIL as usize)
            .ok_or_else(|| {
                Error::Resource(format!("{num_files} x {chunks_per_file} chunk keys"))
            })?;
        Ok(Self {
            capacity: to_units(capacity),
            used: 0,
            chunks_per_file: chunks_per_file as u32,
            slot_of: vec![NIL; keys],
            nodes: Vec::new(),
            free: Vec::new(),
            head: NIL,
            tail: NIL,
            len: 0,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity as f64 / SIZE_UNIT
    }

    pub fn occupancy(&self) -> f64 {
        self.used as f64 / SIZE_UNIT
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn index(&self, key: ChunkKey) -> usize {
        assert!(
            key.chunk < self.chunks_per_file,
            "chunk index {} out of range",
            key.chunk
        );
        key.file as usize * self.chunks_per_file as usize + key.chunk as usize
    }

    pub fn contains(&self, key: ChunkKey) -> bool {
        self.slot_of[self.index(key)] != NIL
    }

    fn unlink(&mut self, slot: u32) {
        let (prev, next) = {
            let n = &self.nodes[slot as usize];
            (n.prev, n.next)
        };
        match prev {
            NIL => self.head = next,
            p => self.nodes[p as usize].next = next,
        }
        match next {
            NIL => self.tail = prev,
            n => self.nodes[n as usize].prev = prev,
        }
    }

    fn push_front(&mut self, slot: u32) {
        let old = self.head;
        {
            let n = &mut self.nodes[slot as usize];
            n.prev = NIL;
            n.next = old;
        }
        match old {
            NIL => self.tail = slot,
            o => self.nodes[o as usize].prev = slot,
        }
        self.head = slot;
    }

    /// Moves `key` to the most recent position if present.
    pub fn touch(&mut self, key: ChunkKey) -> Touch {
        let slot = self.slot_of[self.index(key)];
        if slot == NIL {
            return Touch::Absent;
        }
        if slot != self.head {
            self.unlink(slot);
            self.push_front(slot);
        }
        Touch::Hit
    }

    fn evict_lru(&mut self) -> ChunkKey {
        let slot = self.tail;
        self.unlink(slot);
        let Node { key, size, .. } = self.nodes[slot as usize];
        let idx = self.index(key);
        self.slot_of[idx] = NIL;
        self.used -= size;
        self.len -= 1;
        self.free.push(slot);
        key
    }

    pub(crate) fn insert_units<F: FnMut(ChunkKey)>(
        &mut self,
        key: ChunkKey,
        size: u64,
        mut on_evict: F,
    ) {
        debug_assert!(size <= self.capacity);
        let idx = self.index(key);
        if self.slot_of[idx] != NIL {
            self.touch(key);
            return;
        }
        while self.capacity - self.used < size {
            on_evict(self.evict_lru());
        }
        let node = Node {
            key,
            size,
            prev: NIL,
            next: NIL,
        };
        let slot = match self.free.pop() {
            Some(s) => {
                self.nodes[s as usize] = node;
                s
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        self.slot_of[idx] = slot;
        self.push_front(slot);
        self.used += size;
        self.len += 1;
        debug_assert!(self.used <= self.capacity);
    }

    /// Stores `key` as the most recent entry after evicting the fewest least
    /// recent entries that make room for it. Returns the evicted keys, least
    /// recent first. Inserting a key already present only refreshes it.
    pub fn insert_with_eviction(&mut self, key: ChunkKey, size: f64) -> Result<Vec<ChunkKey>> {
        let units = to_units(size);
        if size.is_nan() || size < 0.0 || units > self.capacity {
            return Err(Error::Config(format!(
                "chunk of size {size} does not fit in a cache of capacity {}",
                self.capacity()
            )));
        }
        let mut evicted = Vec::new();
        self.insert_units(key, units, |k| evicted.push(k));
        Ok(evicted)
    }

    /// Keys from most to least recent.
    pub fn keys_by_recency(&self) -> Vec<ChunkKey> {
        let mut out = Vec::with_capacity(self.len);
        let mut s = self.head;
        while s != NIL {
            out.push(self.nodes[s as usize].key);
            s = self.nodes[s as usize].next;
        }
        out
    }

    /// Full consistency walk: list links, key table, length and occupancy.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut count = 0usize;
        let mut total = 0u64;
        let mut prev = NIL;
        let mut s = self.head;
        while s != NIL {
            let n = &self.nodes[s as usize];
            if n.prev != prev {
                return Err(format!("broken back link at slot {s}"));
            }
            if self.slot_of[self.index(n.key)] != s {
                return Err(format!("key table disagrees for {:?}", n.key));
            }
            count += 1;
            total += n.size;
            if count > self.len {
                return Err("cycle in recency list".into());
            }
            prev = s;
            s = n.next;
        }
        if prev != self.tail {
            return Err("tail pointer mismatch".into());
        }
        if count != self.len || self.slot_of.iter().filter(|&&x| x != NIL).count() != count {
            return Err(format!(
                "length mismatch: list {count}, recorded {}",
                self.len
            ));
        }
        if total != self.used {
            return Err(format!("occupancy mismatch: {total} vs {}", self.used));
        }
        if self.used > self.capacity {
            return Err("occupancy above capacity".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(file: u32) -> ChunkKey {
        ChunkKey { file, chunk: 0 }
    }

    #[test]
    fn evicts_exactly_the_least_recent() {
        let mut c = CacheState::new(1.0, 3, 1).unwrap();
        c.insert_with_eviction(key(0), 0.5).unwrap();
        c.insert_with_eviction(key(1), 0.5).unwrap();
        assert_eq!(c.insert_with_eviction(key(2), 0.5).unwrap(), vec![key(0)]);
        assert_eq!(c.keys_by_recency(), vec![key(2), key(1)]);
    }

    #[test]
    fn minimum_eviction() {
        let mut c = CacheState::new(1.0, 3, 1).unwrap();
        c.insert_with_eviction(key(0), 0.3).unwrap();
        c.insert_with_eviction(key(1), 0.5).unwrap();
        assert_eq!(c.insert_with_eviction(key(2), 0.4).unwrap(), vec![key(0)]);
        assert!((c.occupancy() - 0.9).abs() < 1e-12);
        c.check_invariants().unwrap();
    }

    #[test]
    fn touch_reorders_and_signals_absence() {
        let mut c = CacheState::new(1.0, 3, 1).unwrap();
        assert_eq!(c.touch(key(0)), Touch::Absent);
        assert!(c.is_empty());
        c.insert_with_eviction(key(0), 0.5).unwrap();
        c.insert_with_eviction(key(1), 0.5).unwrap();
        assert_eq!(c.touch(key(0)), Touch::Hit);
        assert_eq!(c.insert_with_eviction(key(2), 0.5).unwrap(), vec![key(1)]);
    }

    #[test]
    fn oversize_chunk_is_rejected() {
        let mut c = CacheState::new(1.0, 1, 1).unwrap();
        assert!(matches!(
            c.insert_with_eviction(key(0), 1.5),
            Err(Error::Config(_))
        ));
        assert!(CacheState::new(-1.0, 1, 1).is_err());
    }
}
