use rand::seq::index;
use rand::Rng;

use crate::error::{Result, SolverError};
use crate::features::FeatureVector;

pub const DEFAULT_CAPACITY: usize = 1 << 16;

/// Fixed-capacity FIFO ring of (features, target) samples.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<(FeatureVector, f64)>,
    capacity: usize,
    cursor: usize,
}

impl Default for ReplayBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 12)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, x: FeatureVector, target: f64) {
        if self.items.len() < self.capacity {
            self.items.push((x, target));
        } else {
            self.items[self.cursor] = (x, target);
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &(FeatureVector, f64)> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// `k` uniform draws: with replacement while the buffer holds fewer than
    /// `k` items, without replacement otherwise.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<(FeatureVector, f64)>> {
        if self.items.is_empty() {
            return Err(SolverError::EmptyBuffer);
        }
        let n = self.items.len();
        if n < k {
            Ok((0..k).map(|_| self.items[rng.gen_range(0..n)]).collect())
        } else {
            Ok(index::sample(rng, n, k)
                .into_iter()
                .map(|i| self.items[i])
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::NUM_FEATURES;
    use crate::rng;

    fn fv(v: f64) -> FeatureVector {
        FeatureVector([v; NUM_FEATURES])
    }

    #[test]
    fn overflow_evicts_oldest() {
        let mut b = ReplayBuffer::default();
        for k in 0..=DEFAULT_CAPACITY {
            b.push(fv(k as f64), k as f64);
        }
        assert_eq!(b.len(), DEFAULT_CAPACITY);
        assert!(b.iter().all(|(_, y)| *y != 0.0));
        assert_eq!(b.iter().next().unwrap().1, 1.0);
        assert_eq!(b.iter().last().unwrap().1, DEFAULT_CAPACITY as f64);
    }

    #[test]
    fn fifo_order_small_ring() {
        let mut b = ReplayBuffer::new(3);
        for k in 0..7 {
            b.push(fv(0.0), k as f64);
        }
        let order: Vec<f64> = b.iter().map(|(_, y)| *y).collect();
        assert_eq!(order, vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn single_item() {
        let mut b = ReplayBuffer::new(8);
        b.push(fv(0.5), 2.0);
        let mut r = rng::stream(0, &[]);
        assert_eq!(b.sample(1, &mut r).unwrap(), vec![(fv(0.5), 2.0)]);
        assert_eq!(b.sample(4, &mut r).unwrap().len(), 4);
    }

    #[test]
    fn empty_is_an_error() {
        let b = ReplayBuffer::new(8);
        let mut r = rng::stream(0, &[]);
        assert!(matches!(b.sample(1, &mut r), Err(SolverError::EmptyBuffer)));
    }

    #[test]
    fn without_replacement_when_large_enough() {
        let mut b = ReplayBuffer::new(100);
        for k in 0..50 {
            b.push(fv(0.0), k as f64);
        }
        let mut r = rng::stream(1, &[]);
        let mut got: Vec<i64> = b
            .sample(50, &mut r)
            .unwrap()
            .iter()
            .map(|(_, y)| *y as i64)
            .collect();
        got.sort();
        assert_eq!(got, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn uniform_within_three_sigma() {
        let mut b = ReplayBuffer::new(10);
        for k in 0..10 {
            b.push(fv(0.0), k as f64);
        }
        let mut r = rng::stream(2, &[]);
        let mut counts = [0usize; 10];
        let mut drawn = 0usize;
        while drawn < 100_000 {
            for (_, y) in b.sample(1, &mut r).unwrap() {
                counts[y as usize] += 1;
                drawn += 1;
            }
        }
        let p = 0.1;
        let mean = drawn as f64 * p;
        let sd = (drawn as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sd, "{counts:?}");
        }
    }
}
