use crate::exact::Rational;
use crate::flipflop::{Class, DoublePlaqueSystem, PlaqueSystem, Sign};
use crate::symbolic::Division;

/// The full shift on four letters `(sign, label)`, encoded as
/// `(+,0)=0, (+,1)=1, (−,0)=2, (−,1)=3`, with potential `φ = ±1` by sign.
///
/// It is both a flip-flop family (step 1, `α = 1`) and a double flip-flop
/// family (step 1, `α′ = 1`) whose plaques are cylinders classified by their
/// leading symbol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ShiftModel;

impl ShiftModel {
    pub const ALPHABET: u8 = 4;

    pub fn new() -> Self {
        ShiftModel
    }

    pub fn symbol(class: Class) -> u8 {
        2 * u8::from(class.sign == Sign::Minus) + class.label
    }

    /// # Panics
    /// If `symbol > 3`.
    pub fn class(symbol: u8) -> Class {
        assert!(symbol < 4, "symbol {symbol} outside the four-letter alphabet");
        let sign = if symbol < 2 { Sign::Plus } else { Sign::Minus };
        Class::new(sign, symbol & 1)
    }

    pub fn phi(symbol: u8) -> i64 {
        if symbol < 2 {
            1
        } else {
            -1
        }
    }

    /// `η_i`.
    pub fn eta(i: usize) -> f64 {
        0.5f64.powi(i as i32)
    }

    /// `K_0 = {(+,0), (−,0)}`, `K_1 = {(+,1), (−,1)}`.
    pub fn native_division() -> Division {
        Division::from_symbol_classes(4, &[Some(0), Some(1), Some(0), Some(1)])
            .expect("both classes nonempty")
    }
}

impl PlaqueSystem for ShiftModel {
    fn alphabet(&self) -> u8 {
        Self::ALPHABET
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

    fn potential(&self, symbol: u8) -> i64 {
        Self::phi(symbol)
    }

    fn flip(&self, symbol: u8) -> u8 {
        symbol ^ 2
    }

    fn sign_block(&self, sign: Sign) -> Vec<u8> {
        vec![Self::symbol(Class::new(sign, 0))]
    }

    fn sign_of(&self, block: &[u8]) -> Option<Sign> {
        match block {
            [s] if *s < 4 => Some(Self::class(*s).sign),
            _ => None,
        }
    }

    fn diameter_bound(&self, i: usize) -> f64 {
        0.5f64.powi(i as i32)
    }
}

impl DoublePlaqueSystem for ShiftModel {
    fn alphabet(&self) -> u8 {
        Self::ALPHABET
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

    fn potential(&self, symbol: u8) -> i64 {
        Self::phi(symbol)
    }

    fn flip(&self, symbol: u8) -> u8 {
        symbol ^ 2
    }

    fn class_block(&self, class: Class) -> Vec<u8> {
        vec![Self::symbol(class)]
    }

    fn classify(&self, block: &[u8]) -> Option<Class> {
        match block {
            [s] if *s < 4 => Some(Self::class(*s)),
            _ => None,
        }
    }

    fn diameter_bound(&self, i: usize) -> f64 {
        0.5f64.powi(i as i32)
    }
}

/// The double family of the four-letter shift.
pub fn shiftmodel_plaques() -> ShiftModel {
    ShiftModel
}
