use std::fmt;

use serde::{Deserialize, Serialize};

use super::SymbolicError;

/// A finite prefix of a point of the one-sided full shift over `{0..M-1}`,
/// packed one bit per symbol for `M = 2` and two bits otherwise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymbolWord {
    alphabet: u8,
    len: usize,
    data: Vec<u64>,
}

impl SymbolWord {
    pub fn new(alphabet: u8) -> Result<Self, SymbolicError> {
        Self::with_capacity(alphabet, 0)
    }

    pub fn with_capacity(alphabet: u8, capacity: usize) -> Result<Self, SymbolicError> {
        if !(2..=4).contains(&alphabet) {
            return Err(SymbolicError::InvalidAlphabet(alphabet));
        }
        let per_word = 64 / bits_for(alphabet);
        Ok(Self {
            alphabet,
            len: 0,
            data: Vec::with_capacity(capacity.div_ceil(per_word)),
        })
    }

    pub fn from_symbols(alphabet: u8, symbols: &[u8]) -> Result<Self, SymbolicError> {
        let mut w = Self::with_capacity(alphabet, symbols.len())?;
        for &s in symbols {
            w.push(s)?;
        }
        Ok(w)
    }

    /// Raw byte import: one symbol per byte.
    pub fn from_bytes(alphabet: u8, bytes: &[u8]) -> Result<Self, SymbolicError> {
        Self::from_symbols(alphabet, bytes)
    }

    /// Raw byte export: one symbol per byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.iter().collect()
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = Self::with_capacity(2, bits.len()).expect("binary alphabet");
        for &b in bits {
            w.push_unchecked(b as u8);
        }
        w
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn bits(&self) -> usize {
        bits_for(self.alphabet)
    }

    /// Packed storage; bits past `len` are zero.
    pub(crate) fn packed(&self) -> &[u64] {
        &self.data
    }

    pub fn push(&mut self, symbol: u8) -> Result<(), SymbolicError> {
        if symbol >= self.alphabet {
            return Err(SymbolicError::InvalidSymbol {
                symbol,
                alphabet: self.alphabet,
            });
        }
        self.push_unchecked(symbol);
        Ok(())
    }

    fn push_unchecked(&mut self, symbol: u8) {
        let bits = self.bits();
        let per_word = 64 / bits;
        let (word, slot) = (self.len / per_word, self.len % per_word);
        if word == self.data.len() {
            self.data.push(0);
        }
        self.data[word] |= (symbol as u64) << (slot * bits);
        self.len += 1;
    }

    pub fn extend_from_slice(&mut self, symbols: &[u8]) -> Result<(), SymbolicError> {
        for &s in symbols {
            self.push(s)?;
        }
        Ok(())
    }

    /// # Panics
    /// If `i >= len`.
    pub fn get(&self, i: usize) -> u8 {
        assert!(i < self.len, "index {i} out of range for word of length {}", self.len);
        let bits = self.bits();
        let per_word = 64 / bits;
        let mask = (1u64 << bits) - 1;
        ((self.data[i / per_word] >> ((i % per_word) * bits)) & mask) as u8
    }

    pub fn set(&mut self, i: usize, symbol: u8) -> Result<(), SymbolicError> {
        if symbol >= self.alphabet {
            return Err(SymbolicError::InvalidSymbol {
                symbol,
                alphabet: self.alphabet,
            });
        }
        assert!(i < self.len);
        let bits = self.bits();
        let per_word = 64 / bits;
        let shift = (i % per_word) * bits;
        let mask = ((1u64 << bits) - 1) << shift;
        let cell = &mut self.data[i / per_word];
        *cell = (*cell & !mask) | ((symbol as u64) << shift);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// The first `len` symbols.
    pub fn prefix(&self, len: usize) -> SymbolWord {
        let len = len.min(self.len);
        let mut out = Self::with_capacity(self.alphabet, len).expect("valid alphabet");
        for i in 0..len {
            out.push_unchecked(self.get(i));
        }
        out
    }

    /// Run-length form for small words.
    pub fn to_run_length(&self) -> RunLengthWord {
        let mut runs: Vec<(u8, u64)> = Vec::new();
        for s in self.iter() {
            match runs.last_mut() {
                Some((sym, n)) if *sym == s => *n += 1,
                _ => runs.push((s, 1)),
            }
        }
        RunLengthWord {
            alphabet: self.alphabet,
            runs,
        }
    }

    pub fn from_run_length(rl: &RunLengthWord) -> Result<Self, SymbolicError> {
        let mut w = Self::new(rl.alphabet)?;
        for &(s, n) in &rl.runs {
            for _ in 0..n {
                w.push(s)?;
            }
        }
        Ok(w)
    }
}

fn bits_for(alphabet: u8) -> usize {
    if alphabet == 2 {
        1
    } else {
        2
    }
}

impl fmt::Debug for SymbolWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 64;
        let head: String = self
            .iter()
            .take(SHOWN)
            .map(|s| char::from(b'0' + s))
            .collect();
        let more = if self.len > SHOWN { "…" } else { "" };
        write!(f, "SymbolWord(M={}, len={}, {head}{more})", self.alphabet, self.len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLengthWord {
    pub alphabet: u8,
    pub runs: Vec<(u8, u64)>,
}
