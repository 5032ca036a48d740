//! Bounded FIFO experience replay.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    buf: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            buf: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }

    /// Uniform draw of `n` distinct entries; `None` until `n` are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if n == 0 || n > self.buf.len() {
            return None;
        }
        Some(index::sample(rng, self.buf.len(), n).into_iter().map(|i| &self.buf[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(i: usize) -> Transition {
        Transition {
            state: vec![i as f64],
            action: i,
            reward: 0.0,
            next_state: vec![],
            done: false,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut m = ReplayMemory::new(3);
        for i in 0..5 {
            m.push(t(i));
        }
        assert_eq!(m.len(), 3);
        assert_eq!(m.iter().map(|x| x.action).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn warm_up_blocks_sampling() {
        let mut m = ReplayMemory::new(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        m.push(t(0));
        assert!(m.sample(2, &mut rng).is_none());
        m.push(t(1));
        assert_eq!(m.sample(2, &mut rng).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn never_exceeds_capacity_and_samples_distinct(cap in 1usize..50, pushes in 0usize..200, n in 1usize..50, seed: u64) {
            let mut m = ReplayMemory::new(cap);
            for i in 0..pushes {
                m.push(t(i));
                prop_assert!(m.len() <= cap);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Some(s) = m.sample(n, &mut rng) {
                let mut ids: Vec<usize> = s.iter().map(|x| x.action).collect();
                ids.sort_unstable();
                ids.dedup();
                prop_assert_eq!(ids.len(), n);
            } else {
                prop_assert!(n > m.len());
            }
        }
    }
}
