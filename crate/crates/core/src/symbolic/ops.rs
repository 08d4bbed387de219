use serde::{Deserialize, Serialize};

use super::{SymbolWord, SymbolicError};
use crate::tail::PositionSet;

fn same_alphabet(x: &SymbolWord, y: &SymbolWord) -> Result<(), SymbolicError> {
    if x.alphabet() != y.alphabet() {
        return Err(SymbolicError::AlphabetMismatch {
            left: x.alphabet(),
            right: y.alphabet(),
        });
    }
    Ok(())
}

/// Number of differing symbols among the first `n` of `x` and `y`
/// (same alphabet, both at least `n` long).
fn mismatches(x: &SymbolWord, y: &SymbolWord, n: usize) -> u64 {
    let bits = x.bits();
    let per_word = 64 / bits;
    let (full, rest) = (n / per_word, n % per_word);
    let lane_mask: u64 = if bits == 1 { !0 } else { 0x5555_5555_5555_5555 };
    let diff = |a: u64, b: u64| {
        let d = a ^ b;
        if bits == 1 {
            d
        } else {
            (d | (d >> 1)) & lane_mask
        }
    };
    let (xp, yp) = (x.packed(), y.packed());
    let mut total: u64 = (0..full)
        .map(|i| diff(xp[i], yp[i]).count_ones() as u64)
        .sum();
    if rest > 0 {
        let keep = (1u64 << (rest * bits)) - 1;
        total += (diff(xp[full], yp[full]) & keep).count_ones() as u64;
    }
    total
}

/// `2^{-k}` for the first index `k` where `x` and `y` differ, or `0` if they
/// agree on their common prefix.
pub fn rho_distance(x: &SymbolWord, y: &SymbolWord) -> Result<f64, SymbolicError> {
    same_alphabet(x, y)?;
    let n = x.len().min(y.len());
    Ok((0..n)
        .find(|&i| x.get(i) != y.get(i))
        .map_or(0.0, |k| 0.5f64.powi(k as i32)))
}

/// Fraction of disagreeing positions among the first `window`.
pub fn dbar_estimate(x: &SymbolWord, y: &SymbolWord, window: usize) -> Result<f64, SymbolicError> {
    same_alphabet(x, y)?;
    let available = x.len().min(y.len());
    if window > available {
        return Err(SymbolicError::WindowTooLarge { window, available });
    }
    if window == 0 {
        return Ok(0.0);
    }
    Ok(mismatches(x, y, window) as f64 / window as f64)
}

/// `(x_j)` for `j ∈ J`, `j < upto`, in increasing order.
pub fn select_along<S: PositionSet + ?Sized>(
    x: &SymbolWord,
    set: &S,
    upto: usize,
) -> Result<SymbolWord, SymbolicError> {
    if upto > x.len() {
        return Err(SymbolicError::WindowTooLarge {
            window: upto,
            available: x.len(),
        });
    }
    let mut out = SymbolWord::new(x.alphabet())?;
    for j in 0..upto {
        if set.contains(j as u64) {
            out.push(x.get(j))?;
        }
    }
    Ok(out)
}

/// A division `K = (K_0, K_1)`: each block of `block_len` symbols is assigned
/// class 0, class 1, or none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Division {
    alphabet: u8,
    block_len: usize,
    classes: Vec<Option<u8>>,
}

impl Division {
    /// `classes` is indexed by the base-`alphabet` value of a block, first
    /// symbol most significant.
    pub fn new(
        alphabet: u8,
        block_len: usize,
        classes: Vec<Option<u8>>,
    ) -> Result<Self, SymbolicError> {
        if !(2..=4).contains(&alphabet) {
            return Err(SymbolicError::InvalidAlphabet(alphabet));
        }
        let expected = (alphabet as usize).checked_pow(block_len as u32);
        if block_len == 0 || expected != Some(classes.len()) {
            return Err(SymbolicError::InvalidDivision(format!(
                "expected {alphabet}^{block_len} entries, got {}",
                classes.len()
            )));
        }
        if classes.iter().flatten().any(|&c| c > 1) {
            return Err(SymbolicError::InvalidDivision("class labels must be 0 or 1".into()));
        }
        for label in 0..2u8 {
            if !classes.contains(&Some(label)) {
                return Err(SymbolicError::InvalidDivision(format!("class {label} is empty")));
            }
        }
        Ok(Self {
            alphabet,
            block_len,
            classes,
        })
    }

    /// Single-symbol division from a per-symbol table.
    pub fn from_symbol_classes(
        alphabet: u8,
        classes: &[Option<u8>],
    ) -> Result<Self, SymbolicError> {
        Self::new(alphabet, 1, classes.to_vec())
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn classes(&self) -> &[Option<u8>] {
        &self.classes
    }

    pub fn class_of(&self, block: &[u8]) -> Option<u8> {
        if block.len() != self.block_len || block.iter().any(|&s| s >= self.alphabet) {
            return None;
        }
        let key = block
            .iter()
            .fold(0usize, |k, &s| k * self.alphabet as usize + s as usize);
        self.classes[key]
    }

    /// Blocks in class `label`, as base-`alphabet` keys.
    pub fn members(&self, label: u8) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&k| self.classes[k] == Some(label))
            .collect()
    }
}

/// The class word `(class(x_j))_{j ∈ J, j < upto}`. Position `j` refers to
/// the block `x[j·r .. (j+1)·r]` where `r` is the division's block length.
pub fn itinerary<S: PositionSet + ?Sized>(
    x: &SymbolWord,
    division: &Division,
    set: &S,
    upto: usize,
) -> Result<SymbolWord, SymbolicError> {
    if x.alphabet() != division.alphabet() {
        return Err(SymbolicError::AlphabetMismatch {
            left: x.alphabet(),
            right: division.alphabet(),
        });
    }
    let r = division.block_len();
    let available = x.len() / r;
    if upto > available {
        return Err(SymbolicError::WindowTooLarge {
            window: upto,
            available,
        });
    }
    let mut out = SymbolWord::new(2)?;
    let mut block = vec![0u8; r];
    for j in 0..upto {
        if !set.contains(j as u64) {
            continue;
        }
        for (i, b) in block.iter_mut().enumerate() {
            *b = x.get(j * r + i);
        }
        let class = division
            .class_of(&block)
            .ok_or(SymbolicError::UnclassifiedSymbol {
                position: j as u64,
                symbol: block[0],
            })?;
        out.push(class)?;
    }
    Ok(out)
}

/// A word over `{0,1,2} × {0,1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairWord {
    first: SymbolWord,
    second: SymbolWord,
}

impl PairWord {
    pub fn new(first: SymbolWord, second: SymbolWord) -> Result<Self, SymbolicError> {
        if first.len() != second.len() {
            return Err(SymbolicError::LengthMismatch {
                left: first.len(),
                right: second.len(),
            });
        }
        if second.alphabet() != 2 {
            return Err(SymbolicError::AlphabetMismatch {
                left: second.alphabet(),
                right: 2,
            });
        }
        let mut f = SymbolWord::with_capacity(3, first.len())?;
        for s in first.iter() {
            f.push(s)?;
        }
        Ok(Self { first: f, second })
    }

    pub fn from_pairs(pairs: &[(u8, u8)]) -> Result<Self, SymbolicError> {
        let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        Self::new(SymbolWord::from_symbols(3, &a)?, SymbolWord::from_symbols(2, &b)?)
    }

    /// Pairs a binary word with the indicator of `set` on `[0, len)`.
    pub fn with_indicator<S: PositionSet + ?Sized>(
        x: &SymbolWord,
        set: &S,
    ) -> Result<Self, SymbolicError> {
        let bits: Vec<bool> = (0..x.len() as u64).map(|j| set.contains(j)).collect();
        Self::new(x.clone(), SymbolWord::from_bits(&bits))
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn get(&self, i: usize) -> (u8, u8) {
        (self.first.get(i), self.second.get(i))
    }

    pub fn first(&self) -> &SymbolWord {
        &self.first
    }

    pub fn second(&self) -> &SymbolWord {
        &self.second
    }

    /// `2a + b` in `0..6`.
    pub fn codes(&self) -> Vec<u8> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.get(i);
                2 * a + b
            })
            .collect()
    }
}

/// `Ψ(a, 1) = (a, 1)`, `Ψ(a, 0) = (2, 0)`, applied positionwise.
pub fn recode_psi(pair: &PairWord) -> PairWord {
    let mut first = SymbolWord::with_capacity(3, pair.len()).expect("ternary");
    for i in 0..pair.len() {
        let (a, b) = pair.get(i);
        first
            .push(if b == 1 { a } else { 2 })
            .expect("symbol below 3");
    }
    PairWord {
        first,
        second: pair.second.clone(),
    }
}

/// Visits of a pair word to a set `E` of pairs, with return times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedWord {
    pub positions: Vec<u64>,
    pub symbols: Vec<(u8, u8)>,
    /// `gaps[i] = positions[i+1] − positions[i]`; one fewer than visits.
    pub gaps: Vec<u64>,
    pub source_len: usize,
}

impl InducedWord {
    pub fn visits(&self) -> usize {
        self.positions.len()
    }

    pub fn visit_fraction(&self) -> f64 {
        self.positions.len() as f64 / self.source_len as f64
    }

    /// First coordinates at the visits, over the smallest alphabet (at least
    /// binary) that holds them.
    pub fn first_coordinate(&self) -> SymbolWord {
        let alphabet = self.symbols.iter().map(|p| p.0 + 1).max().unwrap_or(2).max(2);
        let a: Vec<u8> = self.symbols.iter().map(|p| p.0).collect();
        SymbolWord::from_symbols(alphabet, &a).expect("first coordinate below 3")
    }

    /// The induced process symbol at each visit that has a successor:
    /// the pair code together with the return time, as `code + 6·gap`.
    pub fn process_symbols(&self) -> Vec<u64> {
        self.gaps
            .iter()
            .zip(&self.symbols)
            .map(|(&g, &(a, b))| (2 * a + b) as u64 + 6 * g)
            .collect()
    }
}

pub fn induce<E: Fn(u8, u8) -> bool>(pair: &PairWord, e: E) -> Result<InducedWord, SymbolicError> {
    let mut positions = Vec::new();
    let mut symbols = Vec::new();
    for i in 0..pair.len() {
        let p = pair.get(i);
        if e(p.0, p.1) {
            positions.push(i as u64);
            symbols.push(p);
        }
    }
    if positions.is_empty() {
        return Err(SymbolicError::EmptyInducedSet);
    }
    let gaps = positions.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(InducedWord {
        positions,
        symbols,
        gaps,
        source_len: pair.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{bernoulli_stream, block_frequencies};
    use proptest::prelude::*;

    fn word(m: u8, s: &[u8]) -> SymbolWord {
        SymbolWord::from_symbols(m, s).unwrap()
    }

    #[test]
    fn rho_examples() {
        let x = word(4, &[0, 1, 2, 3]);
        assert_eq!(rho_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(rho_distance(&x, &word(4, &[1, 1, 2, 3])).unwrap(), 1.0);
        assert_eq!(rho_distance(&x, &word(4, &[0, 1, 2, 0])).unwrap(), 0.125);
        assert_eq!(rho_distance(&x, &word(4, &[0, 1])).unwrap(), 0.0);
        assert!(matches!(
            rho_distance(&x, &word(2, &[0])),
            Err(SymbolicError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn dbar_examples() {
        let x = bernoulli_stream(1, 1000);
        assert_eq!(dbar_estimate(&x, &x, 1000).unwrap(), 0.0);
        let bits: Vec<bool> = x.iter().map(|b| b == 0).collect();
        let y = SymbolWord::from_bits(&bits);
        assert_eq!(dbar_estimate(&x, &y, 1000).unwrap(), 1.0);
        assert_eq!(dbar_estimate(&x, &y, 37).unwrap(), 1.0);
        assert!(matches!(
            dbar_estimate(&x, &y, 1001),
            Err(SymbolicError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn select_all_is_identity_and_even_positions() {
        let x = bernoulli_stream(5, 500);
        assert_eq!(select_along(&x, &|_| true, 500).unwrap(), x);
        let even = select_along(&x, &|j: u64| j.is_multiple_of(2), 500).unwrap();
        assert_eq!(even.len(), 250);
        assert_eq!(even.get(3), x.get(6));
    }

    #[test]
    fn itinerary_examples() {
        let div = Division::from_symbol_classes(4, &[Some(0), Some(1), Some(0), Some(1)]).unwrap();
        let x = word(4, &[1, 3, 1, 3]);
        assert_eq!(itinerary(&x, &div, &|_| true, 4).unwrap().to_bytes(), vec![1; 4]);

        let partial = Division::from_symbol_classes(4, &[Some(0), Some(1), None, None]).unwrap();
        let y = word(4, &[0, 2, 1]);
        assert!(itinerary(&y, &partial, &|j: u64| j != 1, 3).is_ok());
        assert_eq!(
            itinerary(&y, &partial, &|_| true, 3),
            Err(SymbolicError::UnclassifiedSymbol { position: 1, symbol: 2 })
        );
    }

    #[test]
    fn division_validation() {
        assert!(Division::from_symbol_classes(2, &[Some(0), Some(0)]).is_err());
        assert!(Division::from_symbol_classes(2, &[Some(0), Some(2)]).is_err());
        assert!(Division::new(2, 2, vec![Some(0), Some(1)]).is_err());
        let d = Division::new(2, 2, vec![Some(0), None, None, Some(1)]).unwrap();
        assert_eq!(d.class_of(&[1, 1]), Some(1));
        assert_eq!(d.class_of(&[0, 1]), None);
        let x = word(2, &[0, 0, 1, 1, 0]);
        assert_eq!(itinerary(&x, &d, &|_| true, 2).unwrap().to_bytes(), vec![0, 1]);
    }

    #[test]
    fn psi_examples() {
        let p = PairWord::from_pairs(&[(1, 1), (0, 0), (1, 0), (2, 1)]).unwrap();
        let q = recode_psi(&p);
        assert_eq!(q.get(0), (1, 1));
        assert_eq!(q.get(1), (2, 0));
        assert_eq!(q.get(2), (2, 0));
        assert_eq!(q.get(3), (2, 1));
    }

    #[test]
    fn induce_examples() {
        let p = PairWord::from_pairs(&[(0, 1), (1, 0), (1, 1), (0, 1)]).unwrap();
        let all = induce(&p, |_, _| true).unwrap();
        assert_eq!(all.positions, vec![0, 1, 2, 3]);
        assert_eq!(all.gaps, vec![1, 1, 1]);
        let j = induce(&p, |_, b| b == 1).unwrap();
        assert_eq!(j.positions, vec![0, 2, 3]);
        assert_eq!(j.gaps, vec![2, 1]);
        assert_eq!(j.first_coordinate().to_bytes(), vec![0, 1, 0]);
        assert_eq!(induce(&p, |a, _| a == 2), Err(SymbolicError::EmptyInducedSet));
    }

    #[test]
    fn selection_along_evens_keeps_bands() {
        let x = bernoulli_stream(9, 2_000_000);
        let even = select_along(&x, &|j: u64| j.is_multiple_of(2), x.len()).unwrap();
        for k in 1..=8 {
            let check = block_frequencies(&even, k).unwrap().uniform_bands(4.0);
            assert!(check.pass, "k={k}: {check:?}");
        }
    }

    fn pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
        proptest::collection::vec((0u8..3, 0u8..2), 1..200)
    }

    proptest! {
        #[test]
        fn psi_idempotent(p in pairs()) {
            let w = PairWord::from_pairs(&p).unwrap();
            let once = recode_psi(&w);
            prop_assert_eq!(recode_psi(&once), once);
        }

        #[test]
        fn psi_only_sees_j_coordinates(p in pairs(), noise in proptest::collection::vec(0u8..3, 200)) {
            let w = PairWord::from_pairs(&p).unwrap();
            let q: Vec<(u8, u8)> = p
                .iter()
                .zip(&noise)
                .map(|(&(a, b), &n)| if b == 1 { (a, b) } else { (n, b) })
                .collect();
            let v = PairWord::from_pairs(&q).unwrap();
            prop_assert_eq!(recode_psi(&w), recode_psi(&v));
        }

        #[test]
        fn selection_partition_reassembles(raw in proptest::collection::vec(0u8..4, 0..300), m in 1u64..7) {
            let x = word(4, &raw);
            let inside = |j: u64| j.is_multiple_of(m);
            let outside = |j: u64| !j.is_multiple_of(m);
            let a = select_along(&x, &inside, x.len()).unwrap();
            let b = select_along(&x, &outside, x.len()).unwrap();
            let (mut ia, mut ib) = (0, 0);
            for j in 0..x.len() {
                let s = if inside(j as u64) { ia += 1; a.get(ia - 1) } else { ib += 1; b.get(ib - 1) };
                prop_assert_eq!(s, x.get(j));
            }
            prop_assert_eq!(ia + ib, x.len());
        }

        #[test]
        fn dbar_triangle(
            m in 2u8..=4,
            a in proptest::collection::vec(0u8..4, 150),
            b in proptest::collection::vec(0u8..4, 150),
            c in proptest::collection::vec(0u8..4, 150),
            n in 0usize..=150,
        ) {
            let f = |v: &Vec<u8>| word(m, &v.iter().map(|s| s % m).collect::<Vec<_>>());
            let (x, y, z) = (f(&a), f(&b), f(&c));
            let xy = dbar_estimate(&x, &y, n).unwrap();
            let yz = dbar_estimate(&y, &z, n).unwrap();
            let xz = dbar_estimate(&x, &z, n).unwrap();
            prop_assert!(xz <= xy + yz + 1e-12);
            let slow = (0..n).filter(|&i| x.get(i) != y.get(i)).count();
            if n > 0 {
                prop_assert_eq!(xy, slow as f64 / n as f64);
            }
        }
    }
}
