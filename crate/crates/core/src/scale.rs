//! Scales `T_n = κ_n · T_{n-1}` and the lattice of regular intervals.
//!
//! A scale is stored as a finite prefix `κ_0..κ_D`, `T_0..T_D`. The growth
//! condition `κ_{n+1}/κ_n → ∞` is a statement about the infinite sequence and
//! cannot be witnessed or violated by a finite prefix; any prefix that passes
//! the divisibility checks extends to a sequence satisfying it (for example by
//! continuing with `κ_{n+1} = 3(n+2)κ_n`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on periods. `T_n` grows super-exponentially, so anything
/// past this is almost certainly a configuration mistake.
pub const DEFAULT_PERIOD_BOUND: u64 = 1 << 62;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScaleError {
    #[error("divisibility violation: {0}")]
    DivisibilityViolation(String),
    #[error("factor sequence is empty")]
    Empty,
    #[error("period T_{level} exceeds the bound {bound}")]
    PeriodOverflow { level: usize, bound: u64 },
    #[error("level {level} out of range 0..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },
}

/// The serialized form: `{"factors": [...], "t0": N}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScaleSpec {
    pub factors: Vec<u64>,
    pub t0: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScaleSpec", into = "ScaleSpec")]
pub struct Scale {
    factors: Vec<u64>,
    periods: Vec<u64>,
}

impl Scale {
    pub fn new(factors: &[u64], t0: u64) -> Result<Self, ScaleError> {
        Self::with_bound(factors, t0, DEFAULT_PERIOD_BOUND)
    }

    pub fn with_bound(factors: &[u64], t0: u64, bound: u64) -> Result<Self, ScaleError> {
        let Some(&k0) = factors.first() else {
            return Err(ScaleError::Empty);
        };
        if k0 != 3 {
            return Err(ScaleError::DivisibilityViolation(format!(
                "κ_0 must be 3, got {k0}"
            )));
        }
        if t0 == 0 || !t0.is_multiple_of(3) {
            return Err(ScaleError::DivisibilityViolation(format!(
                "T_0 must be a positive multiple of 3, got {t0}"
            )));
        }
        if t0 > bound {
            return Err(ScaleError::PeriodOverflow { level: 0, bound });
        }
        let mut periods = Vec::with_capacity(factors.len());
        periods.push(t0);
        for n in 1..factors.len() {
            let (prev, cur) = (factors[n - 1], factors[n]);
            if cur == 0 || cur % (3 * prev) != 0 {
                return Err(ScaleError::DivisibilityViolation(format!(
                    "κ_{n} = {cur} is not a positive multiple of 3·κ_{} = {}",
                    n - 1,
                    3 * prev
                )));
            }
            let t = periods[n - 1]
                .checked_mul(cur)
                .filter(|&t| t <= bound)
                .ok_or(ScaleError::PeriodOverflow { level: n, bound })?;
            periods.push(t);
        }
        Ok(Self {
            factors: factors.to_vec(),
            periods,
        })
    }

    /// The scale used throughout the examples and the acceptance suite:
    /// factors `(3, 9, 27, 81, 243)`, `T_0 = 3`.
    pub fn default_scale() -> Self {
        Self::new(&[3, 9, 27, 81, 243], 3).expect("default scale is valid")
    }

    pub fn depth(&self) -> usize {
        self.factors.len() - 1
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn factor(&self, n: usize) -> u64 {
        self.factors[n]
    }

    pub fn period(&self, n: usize) -> u64 {
        self.periods[n]
    }

    pub fn t0(&self) -> u64 {
        self.periods[0]
    }

    pub fn spec(&self) -> ScaleSpec {
        ScaleSpec {
            factors: self.factors.clone(),
            t0: self.t0(),
        }
    }

    fn check_level(&self, level: usize) -> Result<(), ScaleError> {
        if level > self.depth() {
            return Err(ScaleError::LevelOutOfRange {
                level,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// The unique `T_level`-regular interval containing `position`.
    pub fn enclosing_regular(
        &self,
        level: usize,
        position: u64,
    ) -> Result<RegularInterval, ScaleError> {
        self.check_level(level)?;
        let t = self.periods[level];
        Ok(RegularInterval::new(level, position / t, t))
    }

    /// The `κ_{level}` intervals of level `level - 1` that tile `interval`.
    pub fn children(&self, interval: &RegularInterval) -> Vec<RegularInterval> {
        if interval.level == 0 {
            return Vec::new();
        }
        let level = interval.level - 1;
        let t = self.periods[level];
        let k = self.factors[interval.level];
        (0..k)
            .map(|i| RegularInterval::new(level, interval.index * k + i, t))
            .collect()
    }
}

impl TryFrom<ScaleSpec> for Scale {
    type Error = ScaleError;

    fn try_from(spec: ScaleSpec) -> Result<Self, Self::Error> {
        Scale::new(&spec.factors, spec.t0)
    }
}

impl From<Scale> for ScaleSpec {
    fn from(scale: Scale) -> Self {
        scale.spec()
    }
}

/// `[k·T_n, (k+1)·T_n − 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegularInterval {
    pub level: usize,
    pub index: u64,
    pub start: u64,
    /// Inclusive.
    pub end: u64,
}

impl RegularInterval {
    fn new(level: usize, index: u64, period: u64) -> Self {
        Self {
            level,
            index,
            start: index * period,
            end: (index + 1) * period - 1,
        }
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, position: u64) -> bool {
        (self.start..=self.end).contains(&position)
    }
}

/// Make a scale from a factor list and `T_0`.
pub fn make_scale(factors: &[u64], t0: u64) -> Result<Scale, ScaleError> {
    Scale::new(factors, t0)
}
