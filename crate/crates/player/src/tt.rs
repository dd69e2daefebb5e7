//! Transposition table: a hash map plus a doubly linked recency list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

const NIL: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eviction {
    /// Drop the least recently visited entry.
    Lru,
    /// Drop a uniformly random entry.
    Random,
}

struct Entry<V> {
    key: u64,
    value: V,
    prev: usize,
    next: usize,
}

pub struct LinkedTT<V> {
    entries: Vec<Option<Entry<V>>>,
    free: Vec<usize>,
    map: FxHashMap<u64, usize>,
    head: usize,
    tail: usize,
    capacity: Option<usize>,
    eviction: Eviction,
    rng: ChaCha8Rng,
    pinned: Option<u64>,
    evictions: u64,
}

impl<V> LinkedTT<V> {
    /// `capacity` of None is unbounded; a bound must be at least 1.
    pub fn new(capacity: Option<usize>, eviction: Eviction, seed: u64) -> LinkedTT<V> {
        LinkedTT {
            entries: Vec::new(),
            free: Vec::new(),
            map: FxHashMap::default(),
            head: NIL,
            tail: NIL,
            capacity: capacity.map(|c| c.max(1)),
            eviction,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pinned: None,
            evictions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    /// Protect one key from eviction (the search root).
    pub fn pin(&mut self, key: Option<u64>) {
        self.pinned = key;
    }

    pub fn contains(&self, key: u64) -> bool {
        self.map.contains_key(&key)
    }

    pub fn peek(&self, key: u64) -> Option<&V> {
        self.map.get(&key).map(|&i| &self.entries[i].as_ref().unwrap().value)
    }

    pub fn get_mut(&mut self, key: u64) -> Option<&mut V> {
        let i = *self.map.get(&key)?;
        Some(&mut self.entries[i].as_mut().unwrap().value)
    }

    fn e(&mut self, i: usize) -> &mut Entry<V> {
        self.entries[i].as_mut().unwrap()
    }

    fn unlink(&mut self, i: usize) {
        let (p, n) = {
            let e = self.e(i);
            (e.prev, e.next)
        };
        if p == NIL {
            self.head = n;
        } else {
            self.e(p).next = n;
        }
        if n == NIL {
            self.tail = p;
        } else {
            self.e(n).prev = p;
        }
    }

    fn push_front(&mut self, i: usize) {
        let h = self.head;
        {
            let e = self.e(i);
            e.prev = NIL;
            e.next = h;
        }
        if h == NIL {
            self.tail = i;
        } else {
            self.e(h).prev = i;
        }
        self.head = i;
    }

    /// Move to the front of the recency list.
    pub fn touch(&mut self, key: u64) -> bool {
        let Some(&i) = self.map.get(&key) else { return false };
        if self.head != i {
            self.unlink(i);
            self.push_front(i);
        }
        true
    }

    pub fn remove(&mut self, key: u64) -> Option<V> {
        let i = self.map.remove(&key)?;
        self.unlink(i);
        self.free.push(i);
        self.entries[i].take().map(|e| e.value)
    }

    /// Returns the stored value, inserting at the front when absent and
    /// evicting when over capacity. The boolean is true on insertion.
    pub fn get_or_insert_with(&mut self, key: u64, make: impl FnOnce() -> V) -> (&mut V, bool) {
        if self.touch(key) {
            let i = self.map[&key];
            return (&mut self.entries[i].as_mut().unwrap().value, false);
        }
        let entry = Entry { key, value: make(), prev: NIL, next: NIL };
        let i = match self.free.pop() {
            Some(i) => {
                self.entries[i] = Some(entry);
                i
            }
            None => {
                self.entries.push(Some(entry));
                self.entries.len() - 1
            }
        };
        self.map.insert(key, i);
        self.push_front(i);
        while self.capacity.is_some_and(|c| self.map.len() > c) {
            if !self.evict_one(key) {
                break;
            }
        }
        (&mut self.entries[i].as_mut().unwrap().value, true)
    }

    fn evict_one(&mut self, keep: u64) -> bool {
        let protected = |k: u64, pinned: Option<u64>| k == keep || Some(k) == pinned;
        let victim = match self.eviction {
            Eviction::Lru => {
                let mut i = self.tail;
                while i != NIL && protected(self.entries[i].as_ref().unwrap().key, self.pinned) {
                    i = self.entries[i].as_ref().unwrap().prev;
                }
                i
            }
            Eviction::Random => {
                let live = self.map.len();
                if live <= 2 && self.map.keys().all(|&k| protected(k, self.pinned)) {
                    NIL
                } else {
                    loop {
                        let i = self.rng.gen_range(0..self.entries.len());
                        if let Some(e) = &self.entries[i] {
                            if !protected(e.key, self.pinned) {
                                break i;
                            }
                        }
                    }
                }
            }
        };
        if victim == NIL {
            return false;
        }
        let key = self.entries[victim].as_ref().unwrap().key;
        self.remove(key);
        self.evictions += 1;
        true
    }

    /// Keys from most to least recently visited.
    pub fn keys_by_recency(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len());
        let mut i = self.head;
        while i != NIL {
            let e = self.entries[i].as_ref().unwrap();
            out.push(e.key);
            i = e.next;
        }
        out
    }

    pub fn values(&self) -> impl Iterator<Item = (u64, &V)> {
        self.entries.iter().flatten().map(|e| (e.key, &e.value))
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.free.clear();
        self.map.clear();
        self.head = NIL;
        self.tail = NIL;
    }
}
