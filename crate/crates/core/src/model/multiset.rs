use alloc::collections::BTreeMap;

use super::StateId;

/// A multiset of agent states. Zero counts are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateMultiset {
    counts: BTreeMap<StateId, u32>,
}

impl StateMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(state: StateId, n: u32) -> Self {
        let mut m = Self::new();
        m.insert(state, n);
        m
    }

    pub fn count(&self, state: StateId) -> u32 {
        self.counts.get(&state).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, state: StateId, n: u32) {
        if n > 0 {
            *self.counts.entry(state).or_insert(0) += n;
        }
    }

    /// Removes up to `n` copies of `state`; returns how many were removed.
    pub fn remove(&mut self, state: StateId, n: u32) -> u32 {
        let Some(c) = self.counts.get_mut(&state) else {
            return 0;
        };
        let taken = n.min(*c);
        *c -= taken;
        if *c == 0 {
            self.counts.remove(&state);
        }
        taken
    }

    pub fn add_all(&mut self, other: &StateMultiset) {
        self.add_scaled(other, 1);
    }

    pub fn add_scaled(&mut self, other: &StateMultiset, factor: u32) {
        if factor == 0 {
            return;
        }
        for (&s, &n) in &other.counts {
            self.insert(s, n * factor);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, u32)> + '_ {
        self.counts.iter().map(|(&s, &n)| (s, n))
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.counts.keys().copied()
    }

    /// Number of distinct states present.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&n| n as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn is_submultiset_of(&self, other: &StateMultiset) -> bool {
        self.iter().all(|(s, n)| other.count(s) >= n)
    }
}

impl FromIterator<(StateId, u32)> for StateMultiset {
    fn from_iter<I: IntoIterator<Item = (StateId, u32)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (s, n) in iter {
            m.insert(s, n);
        }
        m
    }
}

impl FromIterator<StateId> for StateMultiset {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        iter.into_iter().map(|s| (s, 1)).collect()
    }
}
