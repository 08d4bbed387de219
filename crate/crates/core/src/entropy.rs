//! Empirical entropy in nats: the conditional plug-in estimator, an LZ78
//! incremental-parsing estimator, the Abramov identity for induced processes,
//! and the `h ≥ d(J)·log 2` verdict.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Rational;
use crate::symbolic::{block_frequencies, induce, BlockStats, PairWord, SymbolWord, SymbolicError};
use crate::tail::Tail;

/// LZ78 needs this many symbols before its value means anything.
pub const LZ_MIN_SAMPLE: usize = 10_000;
/// Default verdict tolerance in nats.
pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("sample of length {len} is too short (need at least {required})")]
    InsufficientSample { len: usize, required: usize },
    #[error("block length {k} invalid for a sample of length {len}")]
    InvalidBlockLength { k: usize, len: usize },
    #[error("{distinct} distinct symbols at block length {k} overflow the block key")]
    AlphabetTooLarge { distinct: usize, k: usize },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plugin,
    Lz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub method: Method,
    /// Plug-in only.
    pub block_length: Option<usize>,
    /// Nats, within `[0, log M]`.
    pub value: f64,
    /// The estimator's output before clamping to `[0, log M]`.
    pub raw_value: f64,
    pub sample_length: usize,
    pub alphabet_size: u64,
    /// Scale of the plug-in sampling bias, `(D_k − D_{k−1}) / 2n` with `D`
    /// the number of distinct observed blocks.
    pub bias_scale: Option<f64>,
    pub warning: Option<String>,
}

fn shannon(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let n = total as f64;
    let mut h = 0.0;
    for c in counts.filter(|&c| c > 0) {
        let p = c as f64 / n;
        h -= p * p.ln();
    }
    h
}

/// `H(k-blocks) − H((k−1)-blocks)`, with the `(k−1)`-block distribution
/// taken as the marginal of the counted `k`-blocks, so the value is the
/// empirical conditional entropy of a symbol given its `k−1` predecessors.
fn conditional_from_stats(stats: &BlockStats) -> (f64, f64, usize) {
    let total = stats.total();
    let hk = shannon(stats.counts().values().copied(), total);
    let marginal = stats.prefix_marginal();
    let hk1 = shannon(marginal.values().copied(), total);
    let bias = (stats.distinct() as f64 - marginal.len() as f64) / (2.0 * total as f64);
    (hk - hk1, bias, stats.distinct())
}

fn finish_plugin(raw: f64, bias: f64, k: usize, len: usize, alphabet: u64) -> EntropyEstimate {
    let cap = (alphabet as f64).ln();
    let required = 100usize.saturating_mul((alphabet as usize).saturating_pow(k as u32));
    let warning = (len < required).then(|| {
        format!("sample length {len} below 100·M^k = {required}; plug-in bias may dominate")
    });
    EntropyEstimate {
        method: Method::Plugin,
        block_length: Some(k),
        value: raw.clamp(0.0, cap),
        raw_value: raw,
        sample_length: len,
        alphabet_size: alphabet,
        bias_scale: Some(bias),
        warning,
    }
}

pub fn plugin_entropy(x: &SymbolWord, k: usize) -> Result<EntropyEstimate, EntropyError> {
    if k == 0 || k > x.len() {
        return Err(EntropyError::InvalidBlockLength { k, len: x.len() });
    }
    let stats = block_frequencies(x, k)?;
    let (raw, bias, _) = conditional_from_stats(&stats);
    Ok(finish_plugin(raw, bias, k, x.len(), x.alphabet() as u64))
}

/// Relabels arbitrary symbols as `0..D` in increasing order.
fn compact(symbols: &[u64]) -> (Vec<u32>, u64) {
    let mut ids: BTreeMap<u64, u32> = symbols.iter().map(|&s| (s, 0)).collect();
    for (i, v) in ids.values_mut().enumerate() {
        *v = i as u32;
    }
    let out = symbols.iter().map(|s| ids[s]).collect();
    (out, ids.len() as u64)
}

#[derive(Clone, Copy)]
struct Id(u32);

impl From<Id> for u64 {
    fn from(v: Id) -> u64 {
        v.0 as u64
    }
}

/// Plug-in conditional entropy over an arbitrary symbol sequence; the
/// alphabet is the set of symbols that occur.
pub fn plugin_entropy_symbols(symbols: &[u64], k: usize) -> Result<EntropyEstimate, EntropyError> {
    if k == 0 || k > symbols.len() {
        return Err(EntropyError::InvalidBlockLength {
            k,
            len: symbols.len(),
        });
    }
    let (ids, distinct) = compact(symbols);
    let base = distinct.max(2);
    if (base as u128).checked_pow(k as u32).is_none() {
        return Err(EntropyError::AlphabetTooLarge {
            distinct: distinct as usize,
            k,
        });
    }
    let ids: Vec<Id> = ids.into_iter().map(Id).collect();
    let stats = BlockStats::count(&ids, base, k);
    let (raw, bias, _) = conditional_from_stats(&stats);
    Ok(finish_plugin(raw, bias, k, symbols.len(), distinct.max(1)))
}

/// Block entropy rate `H_k / k`.
pub fn block_entropy_rate(x: &SymbolWord, k: usize) -> Result<f64, EntropyError> {
    if k == 0 || k > x.len() {
        return Err(EntropyError::InvalidBlockLength { k, len: x.len() });
    }
    let stats = block_frequencies(x, k)?;
    Ok(shannon(stats.counts().values().copied(), stats.total()) / k as f64)
}

/// `H_k` and `H_k − H_{k−1}` for `k = 1..=k_max`.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyProfileRow {
    pub k: usize,
    pub block_entropy: f64,
    pub conditional: f64,
}

pub fn entropy_profile(x: &SymbolWord, k_max: usize) -> Result<Vec<EntropyProfileRow>, EntropyError> {
    (1..=k_max)
        .map(|k| {
            if k > x.len() {
                return Err(EntropyError::InvalidBlockLength { k, len: x.len() });
            }
            let stats = block_frequencies(x, k)?;
            let hk = shannon(stats.counts().values().copied(), stats.total());
            let (cond, _, _) = conditional_from_stats(&stats);
            Ok(EntropyProfileRow {
                k,
                block_entropy: hk,
                conditional: cond,
            })
        })
        .collect()
}

pub fn profile_csv(rows: &[EntropyProfileRow]) -> String {
    let mut s = String::from("k,block_entropy,conditional,rate\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.9},{:.9},{:.9}",
            r.k,
            r.block_entropy,
            r.conditional,
            r.block_entropy / r.k as f64
        );
    }
    s
}

/// Number of phrases in the LZ78 parse, counting a trailing incomplete
/// phrase as one.
pub fn lz78_phrase_count(x: &SymbolWord) -> usize {
    let m = x.alphabet() as usize;
    // children[node][symbol]; 0 means absent (the root is never a child).
    let mut children: Vec<[u32; 4]> = vec![[0; 4]];
    let mut node = 0usize;
    let mut phrases = 0usize;
    for s in x.iter() {
        let s = s as usize;
        debug_assert!(s < m);
        let next = children[node][s];
        if next == 0 {
            children.push([0; 4]);
            children[node][s] = (children.len() - 1) as u32;
            phrases += 1;
            node = 0;
        } else {
            node = next as usize;
        }
    }
    if node != 0 {
        phrases += 1;
    }
    phrases
}

/// `c·ln(c)/L` with `c` the LZ78 phrase count.
pub fn lz_entropy(x: &SymbolWord) -> Result<EntropyEstimate, EntropyError> {
    if x.len() < LZ_MIN_SAMPLE {
        return Err(EntropyError::InsufficientSample {
            len: x.len(),
            required: LZ_MIN_SAMPLE,
        });
    }
    let c = lz78_phrase_count(x) as f64;
    let raw = c * c.ln() / x.len() as f64;
    let cap = (x.alphabet() as f64).ln();
    Ok(EntropyEstimate {
        method: Method::Lz,
        block_length: None,
        value: raw.clamp(0.0, cap),
        raw_value: raw,
        sample_length: x.len(),
        alphabet_size: x.alphabet() as u64,
        bias_scale: None,
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbramovReport {
    pub h_full: f64,
    pub h_induced: f64,
    pub visit_fraction: f64,
    /// `|h_induced · visit_fraction − h_full|`.
    pub discrepancy: f64,
    pub k: usize,
    pub visits: usize,
}

/// Compares the plug-in entropy of a pair process with that of its induced
/// process on `E`, rescaled by the visit frequency. The induced symbol at a
/// visit is the visited pair together with the return time.
pub fn abramov_check<E: Fn(u8, u8) -> bool>(
    pair: &PairWord,
    e: E,
    k: usize,
) -> Result<AbramovReport, EntropyError> {
    let induced = induce(pair, e)?;
    let full: Vec<u64> = pair.codes().into_iter().map(u64::from).collect();
    let h_full = plugin_entropy_symbols(&full, k)?.value;
    let process = induced.process_symbols();
    let h_induced = plugin_entropy_symbols(&process, k)?.value;
    let visit_fraction = induced.visit_fraction();
    Ok(AbramovReport {
        h_full,
        h_induced,
        visit_fraction,
        discrepancy: (h_induced * visit_fraction - h_full).abs(),
        k,
        visits: induced.visits(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    /// `d(J) = 1 − d(R∞)`, exact.
    pub d_j_exact: Rational,
    #[serde(rename = "d_J")]
    pub d_j: f64,
    pub bound_nats: f64,
    pub estimate_nats: f64,
    pub k: usize,
    #[serde(rename = "L")]
    pub len: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Plug-in entropy of the first `len` symbols of `x` at block length `k`
/// against `d(J)·log 2 − tolerance`.
pub fn entropy_bound_verdict(
    x: &SymbolWord,
    tail: &Tail,
    k: usize,
    len: usize,
    tolerance: f64,
) -> Result<VerdictReport, EntropyError> {
    if len > x.len() {
        return Err(EntropyError::InsufficientSample {
            len: x.len(),
            required: len,
        });
    }
    let d_j_exact = Rational::one() - tail.density();
    let d_j = d_j_exact.to_f64();
    let bound = d_j * LN_2;
    let estimate = plugin_entropy(&x.prefix(len), k)?.value;
    Ok(VerdictReport {
        d_j_exact,
        d_j,
        bound_nats: bound,
        estimate_nats: estimate,
        k,
        len,
        tolerance,
        pass: estimate >= bound - tolerance,
    })
}
