//! Lookup table for drawing negative samples with probability
//! proportional to `count^power`.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct UnigramTable {
    table: Vec<u32>,
    power: f64,
}

impl UnigramTable {
    /// Fills `size` slots so that ordinal `i` occupies a share of about
    /// `counts[i]^power / Σ counts^power`.
    pub fn new(counts: &[u64], power: f64, size: usize) -> Self {
        assert!(!counts.is_empty(), "empty vocabulary");
        assert!(size > 0, "table size must be positive");
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let mut table = Vec::with_capacity(size);
        let last = counts.len() - 1;
        let mut i = 0usize;
        let mut cum = weights[0] / total;
        for a in 0..size {
            table.push(i as u32);
            if (a + 1) as f64 / size as f64 > cum && i < last {
                i += 1;
                cum += weights[i] / total;
            }
        }
        Self { table, power }
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table[rng.random_range(0..self.table.len())] as usize
    }

    /// Fraction of table slots held by each ordinal.
    pub fn shares(&self, vocab_size: usize) -> Vec<f64> {
        let mut hist = vec![0u64; vocab_size];
        for &t in &self.table {
            hist[t as usize] += 1;
        }
        hist.into_iter()
            .map(|h| h as f64 / self.table.len() as f64)
            .collect()
    }
}

/// The target law `count^power / Σ count^power`.
pub fn unigram_law(counts: &[u64], power: f64) -> Vec<f64> {
    let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
