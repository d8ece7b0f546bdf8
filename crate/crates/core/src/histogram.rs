use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Fixed-width histogram over non-negative integers. Bin `b` covers
/// `[b * width, (b + 1) * width)` and is keyed by its lower bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: u64,
    pub counts: BTreeMap<u64, usize>,
}

impl Histogram {
    pub fn new(bin_width: u64) -> Self {
        assert!(bin_width > 0, "histogram bin width must be positive");
        Self {
            bin_width,
            counts: BTreeMap::new(),
        }
    }

    pub fn from_values(bin_width: u64, values: impl IntoIterator<Item = u64>) -> Self {
        let mut h = Self::new(bin_width);
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn bin_of(&self, value: u64) -> u64 {
        value / self.bin_width * self.bin_width
    }

    pub fn add(&mut self, value: u64) {
        *self.counts.entry(self.bin_of(value)).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}
