//! Plaque systems on symbolic models: flip-flop families (two sign classes),
//! double flip-flop families (sign × label), the combinator turning the first
//! into the second, and the division `K = (K_0, K_1)` of a double family.
//!
//! Plaques are cylinders `[w]` of a one-sided shift. A plaque system fixes an
//! alphabet, a locally constant integer potential and, per class, which
//! blocks realise it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Rational;
use crate::symbolic::{debruijn, Division, SymbolicError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlipflopError {
    #[error("repetition ℓ = {ell} gives α′ = {alpha_prime}, which is not positive")]
    InsufficientRepetition { ell: usize, alpha_prime: Rational },
    #[error("label classes overlap or one is empty: {0}")]
    ClassesOverlap(String),
    #[error("no repetition count up to {max} reaches the target bound {target}")]
    NoRepetition { max: usize, target: Rational },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `Plus` for non-negative values.
    pub fn of(value: i64) -> Sign {
        if value >= 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// One of the four classes `(sign, label)` of a double family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Class {
    pub sign: Sign,
    pub label: u8,
}

impl Class {
    pub const ALL: [Class; 4] = [
        Class::new(Sign::Plus, 0),
        Class::new(Sign::Plus, 1),
        Class::new(Sign::Minus, 0),
        Class::new(Sign::Minus, 1),
    ];

    pub const fn new(sign: Sign, label: u8) -> Self {
        Self { sign, label }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.sign, self.label)
    }
}

/// The cylinder `[w]_0` of all points beginning with `w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cylinder {
    pub alphabet: u8,
    pub word: Vec<u8>,
}

impl Cylinder {
    pub fn root(alphabet: u8) -> Self {
        Self {
            alphabet,
            word: Vec::new(),
        }
    }

    pub fn new(alphabet: u8, word: Vec<u8>) -> Self {
        Self { alphabet, word }
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    /// Diameter in the metric `ρ(x, y) = 2^{-min{k : x_k ≠ y_k}}`.
    pub fn diameter(&self) -> f64 {
        0.5f64.powi(self.word.len() as i32)
    }

    pub fn contains(&self, other: &Cylinder) -> bool {
        other.word.starts_with(&self.word)
    }

    pub fn extend(&self, suffix: &[u8]) -> Cylinder {
        let mut word = self.word.clone();
        word.extend_from_slice(suffix);
        Cylinder::new(self.alphabet, word)
    }

    /// `σ^n [w] = [w_n w_{n+1} …]`.
    pub fn shift(&self, n: usize) -> Cylinder {
        Cylinder::new(self.alphabet, self.word[n.min(self.word.len())..].to_vec())
    }

    /// Whether this cylinder contains some cylinder `[b…]`, i.e. `w` and `b`
    /// agree on their common length.
    pub fn meets_block(&self, block: &[u8]) -> bool {
        let n = self.word.len().min(block.len());
        self.word[..n] == block[..n]
    }
}

/// Order `⌈log₂(1/δ)⌉ + 1` of the words a δ-dense orbit segment must visit.
pub fn density_order(delta: f64) -> u32 {
    assert!(delta > 0.0 && delta <= 1.0, "δ must lie in (0, 1]");
    (1.0 / delta).log2().ceil() as u32 + 1
}

/// A flip-flop family on a symbolic model: `k`-blocks with positive or
/// negative potential sum.
pub trait PlaqueSystem {
    fn alphabet(&self) -> u8;
    /// `k`: each plaque step spans this many symbols.
    fn step(&self) -> usize;
    /// `α`: every `k`-block of sign `s` has potential average `s·v` with
    /// `v ≥ α`.
    fn alpha(&self) -> Rational;
    /// `‖φ‖_∞`, in potential units.
    fn potential_sup(&self) -> i64;
    fn potential(&self, symbol: u8) -> i64;
    /// The involution exchanging the two sign classes.
    fn flip(&self, symbol: u8) -> u8;
    /// The `k`-block used when refining towards `sign`.
    fn sign_block(&self, sign: Sign) -> Vec<u8>;
    fn sign_of(&self, block: &[u8]) -> Option<Sign>;
    /// `ζ_i`.
    fn diameter_bound(&self, i: usize) -> f64;

    /// A sub-plaque of `plaque` whose image under `f^{|w|}` is a plaque of
    /// the requested sign.
    fn refine(&self, plaque: &Cylinder, sign: Sign) -> Cylinder {
        plaque.extend(&self.sign_block(sign))
    }

    /// Extends `plaque` by a de Bruijn word visiting every word of length
    /// [`density_order`]`(δ)`, padded to a multiple of `k`, then a block of
    /// the target sign. Returns the sub-plaque and the number of appended
    /// symbols.
    fn sojourn(&self, plaque: &Cylinder, delta: f64, target: Sign) -> Result<(Cylinder, usize), SymbolicError> {
        let mut word = debruijn(self.alphabet(), density_order(delta))?.to_bytes();
        while word.len() % self.step() != 0 {
            word.push(0);
        }
        word.extend(self.sign_block(target));
        Ok((plaque.extend(&word), word.len()))
    }
}

/// A double flip-flop family: `r`-blocks in four classes.
pub trait DoublePlaqueSystem {
    fn alphabet(&self) -> u8;
    /// `r`.
    fn step(&self) -> usize;
    /// `α′`: every `r`-block of class `(s, ·)` has potential average `s·v`
    /// with `v ≥ α′`.
    fn alpha(&self) -> Rational;
    fn potential_sup(&self) -> i64;
    fn potential(&self, symbol: u8) -> i64;
    fn flip(&self, symbol: u8) -> u8;
    /// The `r`-block used when refining towards `class`.
    fn class_block(&self, class: Class) -> Vec<u8>;
    fn classify(&self, block: &[u8]) -> Option<Class>;
    fn diameter_bound(&self, i: usize) -> f64;

    fn block_potential(&self, block: &[u8]) -> i64 {
        block.iter().map(|&s| self.potential(s)).sum()
    }

    fn refine(&self, plaque: &Cylinder, class: Class) -> Cylinder {
        plaque.extend(&self.class_block(class))
    }

    /// As [`PlaqueSystem::sojourn`], landing in `target`.
    fn sojourn(&self, plaque: &Cylinder, delta: f64, target: Class) -> Result<(Cylinder, usize), SymbolicError> {
        let mut word = debruijn(self.alphabet(), density_order(delta))?.to_bytes();
        while word.len() % self.step() != 0 {
            word.push(0);
        }
        word.extend(self.class_block(target));
        Ok((plaque.extend(&word), word.len()))
    }

    /// All `r`-blocks in `class`, as cylinder words.
    fn class_members(&self, class: Class) -> Vec<Vec<u8>> {
        let m = self.alphabet() as usize;
        let r = self.step();
        let mut out = Vec::new();
        let mut block = vec![0u8; r];
        for code in 0..m.pow(r as u32) {
            let mut c = code;
            for slot in block.iter_mut().rev() {
                *slot = (c % m) as u8;
                c /= m;
            }
            if self.classify(&block) == Some(class) {
                out.push(block.clone());
            }
        }
        out
    }
}

/// Exhaustive check that the four class unions are pairwise disjoint and
/// nonempty. Unions of `r`-cylinders are clopen, so disjoint sets have
/// disjoint closures.
pub fn check_disjoint_classes<D: DoublePlaqueSystem + ?Sized>(double: &D) -> Result<(), FlipflopError> {
    let sets: Vec<(Class, BTreeSet<Vec<u8>>)> = Class::ALL
        .iter()
        .map(|&c| (c, double.class_members(c).into_iter().collect()))
        .collect();
    for (i, (a, sa)) in sets.iter().enumerate() {
        if sa.is_empty() {
            return Err(FlipflopError::ClassesOverlap(format!("class {a} is empty")));
        }
        for (b, sb) in &sets[i + 1..] {
            if let Some(w) = sa.intersection(sb).next() {
                return Err(FlipflopError::ClassesOverlap(format!(
                    "classes {a} and {b} share the cylinder {w:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Whether `f^r(plaque)` contains a plaque of every class. `plaque` must be
/// at least `r` symbols deep.
pub fn image_meets_all_classes<D: DoublePlaqueSystem + ?Sized>(double: &D, plaque: &Cylinder) -> bool {
    let image = plaque.shift(double.step());
    Class::ALL.iter().all(|&c| {
        double
            .class_members(c)
            .iter()
            .any(|b| image.meets_block(b))
    })
}

/// `K_0 = ⋃_s D(s, 0)`, `K_1 = ⋃_s D(s, 1)` on `r`-blocks.
pub fn division_of<D: DoublePlaqueSystem + ?Sized>(double: &D) -> Result<Division, FlipflopError> {
    let m = double.alphabet() as usize;
    let r = double.step();
    let mut classes: Vec<Option<u8>> = vec![None; m.pow(r as u32)];
    let key = |b: &[u8]| b.iter().fold(0usize, |k, &s| k * m + s as usize);
    for label in 0..2u8 {
        for sign in [Sign::Plus, Sign::Minus] {
            for b in double.class_members(Class::new(sign, label)) {
                let slot = &mut classes[key(&b)];
                if slot.is_some_and(|l| l != label) {
                    return Err(FlipflopError::ClassesOverlap(format!(
                        "block {b:?} lies in both K_0 and K_1"
                    )));
                }
                *slot = Some(label);
            }
        }
    }
    for label in 0..2u8 {
        if !classes.contains(&Some(label)) {
            return Err(FlipflopError::ClassesOverlap(format!("K_{label} is empty")));
        }
    }
    Ok(Division::new(double.alphabet(), r, classes)?)
}

/// The double family obtained from a flip-flop family by repeating a sign
/// `ℓ` times and encoding the label in the terminal sign: label 0 keeps the
/// repeated sign, label 1 flips it.
#[derive(Debug, Clone)]
pub struct DerivedDouble<S> {
    base: S,
    ell: usize,
    alpha_prime: Rational,
}

/// `α′ = (ℓα − ‖φ‖_∞)/(ℓ + 1)`, the worst class average.
pub fn derived_alpha<S: PlaqueSystem + ?Sized>(system: &S, ell: usize) -> Rational {
    let l = Rational::new(ell as i64, 1);
    let sup = Rational::new(system.potential_sup(), 1);
    (l * system.alpha() - sup) / Rational::new(ell as i64 + 1, 1)
}

pub fn double_from_flipflop<S: PlaqueSystem>(system: S, ell: usize) -> Result<DerivedDouble<S>, FlipflopError> {
    let alpha_prime = derived_alpha(&system, ell);
    if ell == 0 || alpha_prime <= Rational::zero() {
        return Err(FlipflopError::InsufficientRepetition { ell, alpha_prime });
    }
    Ok(DerivedDouble {
        base: system,
        ell,
        alpha_prime,
    })
}

/// Smallest `ℓ ≤ max` with `α′ ≥ α/2`.
pub fn choose_repetition<S: PlaqueSystem + ?Sized>(system: &S, max: usize) -> Result<usize, FlipflopError> {
    let target = system.alpha() * Rational::new(1, 2);
    (1..=max)
        .find(|&ell| derived_alpha(system, ell) >= target)
        .ok_or(FlipflopError::NoRepetition { max, target })
}

impl<S: PlaqueSystem> DerivedDouble<S> {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn base(&self) -> &S {
        &self.base
    }

    /// Sign word of length `ℓ + 1` realising `class`.
    pub fn sign_pattern(&self, class: Class) -> Vec<Sign> {
        let mut p = vec![class.sign; self.ell];
        p.push(if class.label == 0 {
            class.sign
        } else {
            class.sign.flip()
        });
        p
    }
}

impl<S: PlaqueSystem> DoublePlaqueSystem for DerivedDouble<S> {
    fn alphabet(&self) -> u8 {
        self.base.alphabet()
    }

    fn step(&self) -> usize {
        self.base.step() * (self.ell + 1)
    }

    fn alpha(&self) -> Rational {
        self.alpha_prime.clone()
    }

    fn potential_sup(&self) -> i64 {
        self.base.potential_sup()
    }

    fn potential(&self, symbol: u8) -> i64 {
        self.base.potential(symbol)
    }

    fn flip(&self, symbol: u8) -> u8 {
        self.base.flip(symbol)
    }

    fn class_block(&self, class: Class) -> Vec<u8> {
        self.sign_pattern(class)
            .into_iter()
            .flat_map(|s| self.base.sign_block(s))
            .collect()
    }

    fn classify(&self, block: &[u8]) -> Option<Class> {
        let k = self.base.step();
        if block.len() != self.step() {
            return None;
        }
        let signs: Option<Vec<Sign>> = block.chunks(k).map(|c| self.base.sign_of(c)).collect();
        let signs = signs?;
        let s = signs[0];
        if signs[..self.ell].iter().any(|&t| t != s) {
            return None;
        }
        let label = u8::from(signs[self.ell] != s);
        Some(Class::new(s, label))
    }

    fn diameter_bound(&self, i: usize) -> f64 {
        self.base.diameter_bound(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-letter shift with `φ = +1` on 0 and `−1` on 1.
    #[derive(Debug, Clone)]
    struct Coin;

    impl PlaqueSystem for Coin {
        fn alphabet(&self) -> u8 {
            2
        }
        fn step(&self) -> usize {
            1
        }
        fn alpha(&self) -> Rational {
            Rational::one()
        }
        fn potential_sup(&self) -> i64 {
            1
        }
        fn potential(&self, s: u8) -> i64 {
            if s == 0 {
                1
            } else {
                -1
            }
        }
        fn flip(&self, s: u8) -> u8 {
            1 - s
        }
        fn sign_block(&self, sign: Sign) -> Vec<u8> {
            vec![u8::from(sign == Sign::Minus)]
        }
        fn sign_of(&self, block: &[u8]) -> Option<Sign> {
            Some(if block[0] == 0 { Sign::Plus } else { Sign::Minus })
        }
        fn diameter_bound(&self, i: usize) -> f64 {
            0.5f64.powi(i as i32)
        }
    }

    /// Every block is `(+, 0)`.
    struct Degenerate;

    impl DoublePlaqueSystem for Degenerate {
        fn alphabet(&self) -> u8 {
            2
        }
        fn step(&self) -> usize {
            1
        }
        fn alpha(&self) -> Rational {
            Rational::one()
        }
        fn potential_sup(&self) -> i64 {
            1
        }
        fn potential(&self, _: u8) -> i64 {
            1
        }
        fn flip(&self, s: u8) -> u8 {
            s
        }
        fn class_block(&self, _: Class) -> Vec<u8> {
            vec![0]
        }
        fn classify(&self, _: &[u8]) -> Option<Class> {
            Some(Class::new(Sign::Plus, 0))
        }
        fn diameter_bound(&self, i: usize) -> f64 {
            0.5f64.powi(i as i32)
        }
    }

    #[test]
    fn coin_combinator() {
        assert!(matches!(
            double_from_flipflop(Coin, 1),
            Err(FlipflopError::InsufficientRepetition { ell: 1, .. })
        ));
        let d = double_from_flipflop(Coin, 2).unwrap();
        assert_eq!(d.step(), 3);
        assert_eq!(d.alpha(), Rational::new(1, 3));
        assert_eq!(d.class_block(Class::new(Sign::Plus, 1)), vec![0, 0, 1]);
        assert_eq!(d.classify(&[1, 1, 1]), Some(Class::new(Sign::Minus, 0)));
        assert_eq!(d.classify(&[0, 1, 1]), None);
        check_disjoint_classes(&d).unwrap();
        let div = division_of(&d).unwrap();
        assert_eq!(div.class_of(&[1, 1, 0]), Some(1));
        assert_eq!(div.class_of(&[0, 1, 0]), None);
        assert_eq!(choose_repetition(&Coin, 10).unwrap(), 3);
    }

    #[test]
    fn degenerate_division_overlaps() {
        assert!(matches!(
            division_of(&Degenerate),
            Err(FlipflopError::ClassesOverlap(_))
        ));
        assert!(check_disjoint_classes(&Degenerate).is_err());
    }

    #[test]
    fn cylinders() {
        let c = Cylinder::new(4, vec![1, 2, 3]);
        assert_eq!(c.diameter(), 0.125);
        assert!(Cylinder::root(4).contains(&c));
        assert!(c.shift(1).meets_block(&[2, 3, 0]));
        assert!(!c.shift(1).meets_block(&[3]));
        assert_eq!(density_order(0.5), 2);
        assert_eq!(density_order(1.0 / 64.0), 7);
    }

    #[test]
    fn sojourn_lands_in_target() {
        let d = double_from_flipflop(Coin, 2).unwrap();
        let target = Class::new(Sign::Minus, 1);
        let (p, n) = d.sojourn(&Cylinder::root(2), 0.25, target).unwrap();
        assert_eq!(n % 3, 0);
        assert_eq!(d.classify(&p.word[n - 3..]), Some(target));
    }
}
