//! Shift-space utilities: packed words, the ρ metric and d̄ estimates, seeded
//! fair-bit streams, selection along position sets, itineraries, the 1-block
//! recoding Ψ, inducing, and de Bruijn words.

mod blocks;
mod debruijn;
mod ops;
mod random;
mod word;

pub use blocks::{block_frequencies, BandCheck, BandViolation, BlockStats};
pub use debruijn::{debruijn, DEBRUIJN_MAX_LEN};
pub use ops::{
    dbar_estimate, induce, itinerary, recode_psi, rho_distance, select_along, Division,
    InducedWord, PairWord,
};
pub use random::bernoulli_stream;
pub use word::{RunLengthWord, SymbolWord};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("alphabet size {0} not supported (expected 2, 3 or 4)")]
    InvalidAlphabet(u8),
    #[error("symbol {symbol} out of range for alphabet size {alphabet}")]
    InvalidSymbol { symbol: u8, alphabet: u8 },
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: u8, right: u8 },
    #[error("window {window} exceeds available length {available}")]
    WindowTooLarge { window: usize, available: usize },
    #[error("block length {k} invalid for a word of length {len}")]
    BlockTooLong { k: usize, len: usize },
    #[error("symbol {symbol} at position {position} has no class")]
    UnclassifiedSymbol { position: u64, symbol: u8 },
    #[error("inducing set is never visited")]
    EmptyInducedSet,
    #[error("de Bruijn word of alphabet {alphabet} and order {order} is too large")]
    OrderTooLarge { alphabet: u8, order: u32 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid division: {0}")]
    InvalidDivision(String),
}
