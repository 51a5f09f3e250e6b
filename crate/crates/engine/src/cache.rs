//! Soft-state cache with idle-time expiry and a byte budget. Anything in
//! it can disappear at any moment; callers recompute on a miss.

use std::collections::HashMap;
use std::hash::Hash;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

struct Entry<V> {
    value: V,
    bytes: usize,
    last_access: Instant,
}

pub struct Cache<K, V> {
    entries: Mutex<HashMap<K, Entry<V>>>,
    idle: Duration,
    budget: usize,
}

impl<K: Eq + Hash + Clone, V: Clone> Cache<K, V> {
    pub fn new(idle: Duration, budget: usize) -> Self {
        Cache { entries: Mutex::new(HashMap::new()), idle, budget }
    }

    pub fn get(&self, key: &K) -> Option<V> {
        let mut map = self.entries.lock();
        let now = Instant::now();
        match map.get_mut(key) {
            Some(e) if now.duration_since(e.last_access) <= self.idle => {
                e.last_access = now;
                Some(e.value.clone())
            }
            Some(_) => {
                map.remove(key);
                None
            }
            None => None,
        }
    }

    /// Stores `value` unless it alone exceeds the budget; evicts expired
    /// entries, then least recently used ones, to make room.
    pub fn insert(&self, key: K, value: V, bytes: usize) {
        if bytes > self.budget {
            return;
        }
        let mut map = self.entries.lock();
        let now = Instant::now();
        map.retain(|_, e| now.duration_since(e.last_access) <= self.idle);
        map.remove(&key);
        let mut used: usize = map.values().map(|e| e.bytes).sum();
        while used + bytes > self.budget {
            let Some(oldest) = map.iter().min_by_key(|(_, e)| e.last_access).map(|(k, _)| k.clone()) else {
                break;
            };
            used -= map.remove(&oldest).map_or(0, |e| e.bytes);
        }
        map.insert(key, Entry { value, bytes, last_access: now });
    }

    pub fn lookup_or_compute<E>(&self, key: K, bytes: impl Fn(&V) -> usize, produce: impl FnOnce() -> Result<V, E>) -> Result<V, E> {
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let v = produce()?;
        self.insert(key, v.clone(), bytes(&v));
        Ok(v)
    }

    pub fn remove(&self, key: &K) {
        self.entries.lock().remove(key);
    }

    pub fn retain(&self, mut keep: impl FnMut(&K) -> bool) {
        self.entries.lock().retain(|k, _| keep(k));
    }

    pub fn clear(&self) {
        self.entries.lock().clear();
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
