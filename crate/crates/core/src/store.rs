//! Fact stores with open addressing and double hashing.

use rustc_hash::FxHashMap;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline]
pub fn hash_tuple(t: &[u32]) -> u64 {
    let mut h = 0x9e3779b97f4a7c15u64 ^ t.len() as u64;
    for &x in t {
        h = mix64(h ^ x as u64);
    }
    h
}

/// Tuples plus an open-addressing membership set. Slot value 0 is empty,
/// otherwise tuple index + 1. Probe sequence h1 + i*h2 with h2 odd over a
/// power-of-two table.
#[derive(Clone, Debug, PartialEq)]
pub struct FactStore {
    pub arity: usize,
    data: Vec<u32>,
    len: usize,
    slots: Vec<u32>,
}

impl FactStore {
    pub fn with_capacity(arity: usize, tuples: usize) -> FactStore {
        let cap = (tuples.max(4) * 2).next_power_of_two();
        FactStore {
            arity,
            data: Vec::with_capacity(tuples * arity),
            len: 0,
            slots: vec![0; cap],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn tuple(&self, i: usize) -> &[u32] {
        &self.data[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len).map(move |i| self.tuple(i))
    }

    /// Finds the slot holding `t` or the empty slot where it would go.
    #[inline]
    fn probe(&self, t: &[u32]) -> (usize, bool) {
        let h = hash_tuple(t);
        let mask = self.slots.len() - 1;
        let h2 = ((h >> 32) as usize) | 1;
        let mut i = h as usize & mask;
        loop {
            let s = self.slots[i];
            if s == 0 {
                return (i, false);
            }
            if self.tuple(s as usize - 1) == t {
                return (i, true);
            }
            i = (i + h2) & mask;
        }
    }

    #[inline]
    pub fn contains(&self, t: &[u32]) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        if self.arity == 0 {
            return self.len > 0;
        }
        self.probe(t).1
    }

    /// Returns false if already present.
    pub fn insert(&mut self, t: &[u32]) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        if self.arity == 0 {
            let fresh = self.len == 0;
            self.len = 1;
            return fresh;
        }
        if (self.len + 1) * 2 > self.slots.len() {
            self.grow();
        }
        let (i, found) = self.probe(t);
        if found {
            return false;
        }
        self.data.extend_from_slice(t);
        self.len += 1;
        self.slots[i] = self.len as u32;
        true
    }

    fn grow(&mut self) {
        let cap = self.slots.len() * 2;
        self.slots = vec![0; cap];
        for k in 0..self.len {
            let (i, _) = self.probe(self.tuple(k));
            self.slots[i] = k as u32 + 1;
        }
    }

    pub fn clear(&mut self) {
        if self.len == 0 {
            return;
        }
        self.slots.fill(0);
        self.data.clear();
        self.len = 0;
    }
}

/// A static store with precomputed indexes for partially bound lookups.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticStore {
    pub facts: FactStore,
    indexes: FxHashMap<u64, FxHashMap<u64, Vec<u32>>>,
}

pub fn key_hash(t: &[u32], mask: u64) -> u64 {
    let mut h = 0x51ed270b27e5a9d3u64;
    for (i, &x) in t.iter().enumerate() {
        if mask >> i & 1 == 1 {
            h = mix64(h ^ x as u64);
        }
    }
    h
}

pub fn bound_key_hash(vals: &[u32]) -> u64 {
    let mut h = 0x51ed270b27e5a9d3u64;
    for &x in vals {
        h = mix64(h ^ x as u64);
    }
    h
}

impl StaticStore {
    pub fn new(arity: usize) -> StaticStore {
        StaticStore {
            facts: FactStore::with_capacity(arity, 4),
            indexes: FxHashMap::default(),
        }
    }

    pub fn insert(&mut self, t: &[u32]) {
        self.facts.insert(t);
    }

    pub fn add_index(&mut self, mask: u64) {
        let full = crate::compiler::full_mask(self.facts.arity);
        if mask == 0 || mask == full || self.indexes.contains_key(&mask) {
            return;
        }
        let mut idx: FxHashMap<u64, Vec<u32>> = FxHashMap::default();
        for (i, t) in self.facts.iter().enumerate() {
            idx.entry(key_hash(t, mask)).or_default().push(i as u32);
        }
        self.indexes.insert(mask, idx);
    }

    /// Candidate tuple indexes for the bound values under `mask`; callers
    /// verify the bound positions.
    pub fn candidates(&self, mask: u64, bound: &[u32]) -> Option<&[u32]> {
        let idx = self.indexes.get(&mask)?;
        Some(idx.get(&bound_key_hash(bound)).map(Vec::as_slice).unwrap_or(&[]))
    }
}
