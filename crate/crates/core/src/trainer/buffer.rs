use std::collections::VecDeque;

use rand::Rng;

use crate::env::RoutingState;

/// FIFO store of visited states; the oldest entry is dropped when full.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    entries: VecDeque<RoutingState>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            entries: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, state: RoutingState) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(state);
    }

    pub fn iter(&self) -> impl Iterator<Item = &RoutingState> {
        self.entries.iter()
    }

    /// `min(k, len)` distinct entries chosen uniformly.
    pub fn sample<R: Rng>(&self, rng: &mut R, k: usize) -> Vec<&RoutingState> {
        rand::seq::index::sample(rng, self.entries.len(), k.min(self.entries.len()))
            .into_iter()
            .map(|i| &self.entries[i])
            .collect()
    }
}
