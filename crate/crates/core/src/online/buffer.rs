use crate::datasets::SamplePair;
use crate::numerics::RandomStream;

/// Every slot's received sample pairs, in arrival order.
#[derive(Clone, Debug, Default)]
pub struct SlotBuffer {
    slots: Vec<Vec<SamplePair>>,
}

impl SlotBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, batch: Vec<SamplePair>) {
        self.slots.push(batch);
    }

    /// Number of stored slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, k: usize) -> &[SamplePair] {
        &self.slots[k]
    }

    /// Pairs of slots `range`, flattened in arrival order.
    pub fn collect(&self, range: std::ops::Range<usize>) -> Vec<SamplePair> {
        self.slots[range].iter().flatten().cloned().collect()
    }

    /// Appearance counts `Z_k` of `n_task` slot draws with replacement.
    pub fn sample_counts(&self, n_task: usize, rng: &mut RandomStream) -> Vec<usize> {
        let mut z = vec![0; self.slots.len()];
        if !z.is_empty() {
            for _ in 0..n_task {
                z[rng.index(self.slots.len())] += 1;
            }
        }
        z
    }
}
