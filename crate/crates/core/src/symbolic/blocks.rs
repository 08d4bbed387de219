use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{SymbolWord, SymbolicError};

/// Dense count tables are used when `base^k` is at most this.
const DENSE_LIMIT: u128 = 1 << 20;
/// Windows per parallel task.
const CHUNK: usize = 1 << 18;

/// Sliding-window counts of `k`-blocks. A block is keyed by its base-`M`
/// value with the first symbol most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    base: u64,
    block_length: usize,
    counts: BTreeMap<u128, u64>,
    total: u64,
}

pub fn block_frequencies(x: &SymbolWord, k: usize) -> Result<BlockStats, SymbolicError> {
    if k == 0 || k > x.len() || k > 31 {
        return Err(SymbolicError::BlockTooLong { k, len: x.len() });
    }
    let bytes = x.to_bytes();
    Ok(BlockStats::count(&bytes, x.alphabet() as u64, k))
}

impl BlockStats {
    /// Counts over an arbitrary symbol slice with `symbols[i] < base`.
    /// Caller guarantees `1 ≤ k ≤ symbols.len()` and `base^k < 2^128`.
    pub(crate) fn count<S>(symbols: &[S], base: u64, k: usize) -> Self
    where
        S: Copy + Into<u64> + Sync,
    {
        let windows = symbols.len() + 1 - k;
        let space = (base as u128).checked_pow(k as u32);
        let top = (base as u128).pow(k as u32 - 1);
        let ranges: Vec<(usize, usize)> = (0..windows)
            .step_by(CHUNK)
            .map(|a| (a, (a + CHUNK).min(windows)))
            .collect();
        let roll = |a: usize, b: usize, visit: &mut dyn FnMut(u128)| {
            let mut key: u128 = 0;
            for &s in &symbols[a..a + k - 1] {
                key = key * base as u128 + s.into() as u128;
            }
            for i in a..b {
                key = (key % top) * base as u128 + symbols[i + k - 1].into() as u128;
                visit(key);
            }
        };
        let counts: BTreeMap<u128, u64> = match space {
            Some(space) if space <= DENSE_LIMIT => {
                let size = space as usize;
                let table = ranges
                    .par_iter()
                    .map(|&(a, b)| {
                        let mut t = vec![0u64; size];
                        roll(a, b, &mut |key| t[key as usize] += 1);
                        t
                    })
                    .reduce(
                        || vec![0u64; size],
                        |mut x, y| {
                            for (u, v) in x.iter_mut().zip(y) {
                                *u += v;
                            }
                            x
                        },
                    );
                table
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(key, c)| (key as u128, c))
                    .collect()
            }
            _ => {
                let map = ranges
                    .par_iter()
                    .map(|&(a, b)| {
                        let mut m: HashMap<u128, u64> = HashMap::new();
                        roll(a, b, &mut |key| *m.entry(key).or_default() += 1);
                        m
                    })
                    .reduce(HashMap::new, |mut x, y| {
                        for (key, c) in y {
                            *x.entry(key).or_default() += c;
                        }
                        x
                    });
                map.into_iter().collect()
            }
        };
        Self {
            base,
            block_length: k,
            counts,
            total: windows as u64,
        }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<u128, u64> {
        &self.counts
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn key_of(&self, block: &[u8]) -> u128 {
        block
            .iter()
            .fold(0u128, |k, &s| k * self.base as u128 + s as u128)
    }

    pub fn decode(&self, mut key: u128) -> Vec<u64> {
        let mut out = vec![0u64; self.block_length];
        for slot in out.iter_mut().rev() {
            *slot = (key % self.base as u128) as u64;
            key /= self.base as u128;
        }
        out
    }

    pub fn count_of(&self, block: &[u8]) -> u64 {
        if block.len() != self.block_length {
            return 0;
        }
        self.counts.get(&self.key_of(block)).copied().unwrap_or(0)
    }

    pub fn frequency(&self, block: &[u8]) -> f64 {
        self.count_of(block) as f64 / self.total as f64
    }

    /// `(k−1)`-block counts obtained by dropping the last symbol of each
    /// counted `k`-block. They differ from a direct scan only in the final
    /// window. For `k = 1` this is a single empty block.
    pub fn prefix_marginal(&self) -> BTreeMap<u128, u64> {
        let mut out = BTreeMap::new();
        for (&key, &c) in &self.counts {
            *out.entry(key / self.base as u128).or_default() += c;
        }
        out
    }

    /// Same as [`Self::prefix_marginal`] but dropping the first symbol.
    pub fn suffix_marginal(&self) -> BTreeMap<u128, u64> {
        let top = (self.base as u128).pow(self.block_length as u32 - 1);
        let mut out = BTreeMap::new();
        for (&key, &c) in &self.counts {
            *out.entry(key % top).or_default() += c;
        }
        out
    }

    fn label(&self, key: u128) -> String {
        let digits = self.decode(key);
        if self.base <= 10 {
            digits.iter().map(|d| char::from(b'0' + *d as u8)).collect()
        } else {
            digits
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    /// CSV with header `block,count,frequency`, blocks in key order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("block,count,frequency\n");
        for (&key, &c) in &self.counts {
            let _ = writeln!(
                s,
                "{},{},{:.9}",
                self.label(key),
                c,
                c as f64 / self.total as f64
            );
        }
        s
    }

    /// Compares every possible block's frequency with the uniform value
    /// `M^{-k}`, under the hypothesis of an iid uniform source.
    ///
    /// Sliding-window counts of a self-overlapping block are positively
    /// correlated, so the standard deviation uses the overlap-corrected
    /// variance `p(1−p) + 2 Σ_{d<k} (c_d p M^{-d} − p²)` where `c_d = 1` iff
    /// the block has period `d`. The naive iid deviation `√(p(1−p)/n)` is
    /// reported alongside.
    pub fn uniform_bands(&self, sigmas: f64) -> BandCheck {
        let k = self.block_length;
        let n = self.total as f64;
        let space = (self.base as u128).pow(k as u32);
        let p = 1.0 / space as f64;
        let mut violations = Vec::new();
        let mut max_z: f64 = 0.0;
        let mut max_z_naive: f64 = 0.0;
        let exhaustive = space <= DENSE_LIMIT;
        let keys: Box<dyn Iterator<Item = u128>> = if exhaustive {
            Box::new(0..space)
        } else {
            Box::new(self.counts.keys().copied().collect::<Vec<_>>().into_iter())
        };
        for key in keys {
            let count = self.counts.get(&key).copied().unwrap_or(0);
            let digits = self.decode(key);
            let mut var = p * (1.0 - p);
            for d in 1..k {
                let periodic = (0..k - d).all(|i| digits[i] == digits[i + d]);
                let c = if periodic { 1.0 } else { 0.0 };
                var += 2.0 * (c * p * (self.base as f64).powi(-(d as i32)) - p * p);
            }
            let sd = (var / n).sqrt();
            let sd_naive = (p * (1.0 - p) / n).sqrt();
            let freq = count as f64 / n;
            let z = (freq - p) / sd;
            max_z = max_z.max(z.abs());
            max_z_naive = max_z_naive.max(((freq - p) / sd_naive).abs());
            if z.abs() > sigmas {
                violations.push(BandViolation {
                    block: self.label(key),
                    count,
                    frequency: freq,
                    expected: p,
                    z,
                });
            }
        }
        BandCheck {
            block_length: k,
            total: self.total,
            sigmas,
            exhaustive,
            max_abs_z: max_z,
            max_abs_z_naive: max_z_naive,
            pass: violations.is_empty(),
            violations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BandViolation {
    pub block: String,
    pub count: u64,
    pub frequency: f64,
    pub expected: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandCheck {
    pub block_length: usize,
    pub total: u64,
    pub sigmas: f64,
    /// Whether unseen blocks were checked too.
    pub exhaustive: bool,
    pub max_abs_z: f64,
    pub max_abs_z_naive: f64,
    pub pass: bool,
    pub violations: Vec<BandViolation>,
}
