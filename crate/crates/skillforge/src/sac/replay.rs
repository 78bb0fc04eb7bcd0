//! Fixed-capacity transition ring buffer.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// One stored transition. `terminated` marks true episode ends; time-limit
/// truncations are stored as non-terminal so they still bootstrap.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminated: bool,
}

pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            data: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.data[idx]
    }

    /// Uniform indices with replacement; requires `len() >= batch`.
    pub fn sample_indices(&self, rng: &mut ChaCha12Rng, batch: usize) -> Vec<usize> {
        assert!(self.data.len() >= batch, "buffer smaller than batch");
        (0..batch)
            .map(|_| rng.random_range(0..self.data.len()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn t(r: f64) -> Transition {
        Transition {
            obs: vec![r],
            action: vec![0.0],
            reward: r,
            next_obs: vec![r],
            terminated: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(t(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| buf.get(i).reward).collect();
        // Slots 0 and 1 were overwritten by transitions 3 and 4.
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..50 {
            buf.push(t(i as f64));
        }
        let mut r1 = ChaCha12Rng::seed_from_u64(9);
        let mut r2 = ChaCha12Rng::seed_from_u64(9);
        assert_eq!(buf.sample_indices(&mut r1, 16), buf.sample_indices(&mut r2, 16));
    }
}
