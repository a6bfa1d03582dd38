use fixedbitset::FixedBitSet;
use rand::Rng;

use crate::ItemId;

/// Fixed-capacity store of distinct items, with a record of every item the
/// node has ever held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cache {
    items: Vec<ItemId>,
    members: FixedBitSet,
    seen: FixedBitSet,
    capacity: usize,
}

impl Cache {
    /// Empty cache; `universe` pre-sizes the membership bitsets.
    pub fn new(capacity: usize, universe: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity),
            members: FixedBitSet::with_capacity(universe),
            seen: FixedBitSet::with_capacity(universe),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    pub fn free_slots(&self) -> usize {
        self.capacity.saturating_sub(self.items.len())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.members.contains(item as usize)
    }

    /// Whether the item has been in this cache at any point.
    pub fn has_seen(&self, item: ItemId) -> bool {
        self.seen.contains(item as usize)
    }

    /// Adds `item` if absent and a slot is free. Returns whether it was added.
    pub fn insert(&mut self, item: ItemId) -> bool {
        if self.contains(item) || self.is_full() {
            return false;
        }
        let bit = item as usize;
        if bit >= self.members.len() {
            self.members.grow(bit + 1);
            self.seen.grow(bit + 1);
        }
        self.members.insert(bit);
        self.seen.insert(bit);
        self.items.push(item);
        true
    }

    /// Removes every listed item that is present.
    pub fn remove_all(&mut self, items: &[ItemId]) {
        let mut removed = false;
        for &item in items {
            if self.contains(item) {
                self.members.set(item as usize, false);
                removed = true;
            }
        }
        if removed {
            let members = &self.members;
            self.items.retain(|&x| members.contains(x as usize));
        }
    }

    /// Removes `item` from the cache and forgets that it was ever seen.
    pub(crate) fn purge(&mut self, item: ItemId) {
        self.remove_all(&[item]);
        if (item as usize) < self.seen.len() {
            self.seen.set(item as usize, false);
        }
    }

    /// `min(k, len)` distinct items drawn uniformly without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<ItemId> {
        let mut pool = self.items.clone();
        partial_shuffle(&mut pool, k, rng);
        pool.truncate(k);
        pool
    }
}

/// Moves a uniform `min(k, len)`-subset, in uniform order, to the front.
pub(crate) fn partial_shuffle<T, R: Rng + ?Sized>(xs: &mut [T], k: usize, rng: &mut R) {
    let len = xs.len() as u32;
    for i in 0..(k as u32).min(len) {
        xs.swap(i as usize, rng.gen_range(i..len) as usize);
    }
}

#[derive(Default)]
struct Scratch {
    marks: Vec<bool>,
    list: Vec<ItemId>,
}

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> = std::cell::RefCell::new(Scratch::default());
}

/// Calls `f` with the items of `set` marked in a reusable bitset and an
/// empty reusable list.
pub(crate) fn with_scratch<T>(set: &[ItemId], f: impl FnOnce(&[bool], &mut Vec<ItemId>) -> T) -> T {
    SCRATCH.with(|scratch| {
        let Scratch { marks, list } = &mut *scratch.borrow_mut();
        for &x in set {
            if x as usize >= marks.len() {
                marks.resize(x as usize + 1, false);
            }
            marks[x as usize] = true;
        }
        list.clear();
        let out = f(marks, list);
        for &x in set {
            marks[x as usize] = false;
        }
        out
    })
}

/// The items a node ships in one gossip message.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExchangeBuffer {
    items: Vec<ItemId>,
}

impl ExchangeBuffer {
    /// `s` uniform items of `cache`, or the whole cache if it holds fewer.
    pub fn draw<R: Rng + ?Sized>(cache: &Cache, s: usize, rng: &mut R) -> Self {
        Self {
            items: cache.sample(s, rng),
        }
    }

    /// Like [`ExchangeBuffer::draw`], reusing this buffer's allocation.
    pub(crate) fn redraw<R: Rng + ?Sized>(&mut self, cache: &Cache, s: usize, rng: &mut R) {
        self.items.clear();
        self.items.extend_from_slice(cache.items());
        partial_shuffle(&mut self.items, s, rng);
        self.items.truncate(s);
    }

    pub fn from_items(items: Vec<ItemId>) -> Self {
        Self { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
