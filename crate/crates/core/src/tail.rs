//! The rational sparsely long tail `R_∞ = ⋃_{n≥1} (A_n + T_n ℕ)` built on a
//! scale, with `A_n = [T_n/3, T_n/3 + T_{n-1} − 1]`.
//!
//! Everything here is analytic: membership, components and skeletons are
//! answered with modular arithmetic in `O(depth)`. The infinite union is
//! truncated at the scale depth, which is exact for positions below `T_depth`
//! and makes the truncated set periodic with period `T_depth`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Rational;
use crate::scale::{RegularInterval, Scale};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TailError {
    #[error("level {level} out of range (valid: {valid})")]
    LevelOutOfRange { level: usize, valid: String },
    #[error("range {upto} exceeds T_depth = {limit}")]
    RangeTooLarge { upto: u64, limit: u64 },
    #[error("scale depth must be at least 1")]
    DepthZero,
}

/// Anything that can answer "is `j` in the set?".
pub trait PositionSet {
    fn contains(&self, j: u64) -> bool;
}

impl<F: Fn(u64) -> bool> PositionSet for F {
    fn contains(&self, j: u64) -> bool {
        self(j)
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
}

impl Interval {
    pub fn new(start: u64, end: u64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: u64) -> bool {
        self.start <= j && j <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tail {
    scale: Scale,
    /// `blocks[n - 1] = A_n`.
    blocks: Vec<Interval>,
}

impl Tail {
    /// The canonical construction.
    pub fn build(scale: &Scale) -> Result<Self, TailError> {
        if scale.depth() < 1 {
            return Err(TailError::DepthZero);
        }
        let blocks = (1..=scale.depth())
            .map(|n| {
                let start = scale.period(n) / 3;
                Interval::new(start, start + scale.period(n - 1) - 1)
            })
            .collect();
        Ok(Self {
            scale: scale.clone(),
            blocks,
        })
    }

    /// A tail with arbitrary blocks. Nothing is validated; this exists for
    /// fault injection against [`verify_tail`].
    pub fn from_blocks(scale: &Scale, blocks: Vec<Interval>) -> Self {
        Self {
            scale: scale.clone(),
            blocks,
        }
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Interval] {
        &self.blocks
    }

    /// `A_n` for `1 ≤ n ≤ depth`.
    pub fn block(&self, n: usize) -> Interval {
        self.blocks[n - 1]
    }

    fn hits_level(&self, n: usize, j: u64) -> bool {
        self.block(n).contains(j % self.scale.period(n))
    }

    pub fn contains(&self, j: u64) -> bool {
        (1..=self.depth()).any(|n| self.hits_level(n, j))
    }

    /// The maximal interval of `R_∞` containing `j`: the translate of `A_m` for
    /// the largest `m` that hits `j`. It is `T_{m-1}`-regular.
    pub fn component_of(&self, j: u64) -> Option<RegularInterval> {
        let m = (1..=self.depth()).rev().find(|&n| self.hits_level(n, j))?;
        let period = self.scale.period(m);
        let base = j - j % period;
        let level = m - 1;
        let start = base + self.block(m).start;
        let size = self.scale.period(level);
        Some(RegularInterval {
            level,
            index: start / size,
            start,
            end: start + size - 1,
        })
    }

    /// Membership in the skeleton `R_n = ⋃_{i>n} (A_i + T_i ℕ)`, `0 ≤ n < depth`.
    pub fn skeleton_contains(&self, n: usize, j: u64) -> Result<bool, TailError> {
        if n >= self.depth() {
            return Err(TailError::LevelOutOfRange {
                level: n,
                valid: format!("0..{}", self.depth()),
            });
        }
        Ok((n + 1..=self.depth()).any(|i| self.hits_level(i, j)))
    }

    /// Exact density of the truncated tail via `d_{n+1} = d_n + (1 − d_n)/κ_{n+1}`.
    pub fn density(&self) -> Rational {
        let mut d = Rational::zero();
        for n in 1..=self.depth() {
            let kappa = Rational::from_u64s(self.scale.factor(n), 1);
            let step = Rational((Rational::one() - d.clone()).0 / kappa.0);
            d = d + step;
        }
        d
    }

    /// `Q_n = ⋃_{i≤n} (A_i + T_i ℕ)` as explicit progressions, with
    /// `d̄(R_∞ △ Q_n) ≤ Σ_{i>n} 1/κ_i`.
    pub fn rational_approx(&self, n: usize) -> Result<RationalApprox, TailError> {
        if n < 1 || n > self.depth() {
            return Err(TailError::LevelOutOfRange {
                level: n,
                valid: format!("1..={}", self.depth()),
            });
        }
        let mut groups = Vec::with_capacity(n);
        for i in 1..=n {
            let block = self.block(i);
            groups.push(ProgressionGroup {
                modulus: self.scale.period(i),
                offsets: (block.start..=block.end).collect(),
            });
        }
        let mut error_bound = Rational::zero();
        for i in n + 1..=self.depth() {
            error_bound = error_bound + Rational::from_u64s(1, self.scale.factor(i));
        }
        Ok(RationalApprox {
            level: n,
            groups,
            error_bound,
        })
    }

    /// Characteristic word of `ℕ ∖ R_∞` restricted to `[0, len)`; bit 1 marks J.
    pub fn complement_indicator(&self, len: u64) -> Vec<bool> {
        (0..len).map(|j| !self.contains(j)).collect()
    }
}

impl PositionSet for Tail {
    fn contains(&self, j: u64) -> bool {
        Tail::contains(self, j)
    }
}

/// Offsets sharing one modulus: `⋃_a (a + b ℕ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionGroup {
    pub modulus: u64,
    /// Sorted, each `< modulus`.
    pub offsets: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalApprox {
    pub level: usize,
    pub groups: Vec<ProgressionGroup>,
    pub error_bound: Rational,
}

impl RationalApprox {
    /// All `(offset, modulus)` pairs.
    pub fn progressions(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.offsets.iter().map(move |&a| (a, g.modulus)))
    }

    pub fn contains(&self, j: u64) -> bool {
        self.groups.iter().any(|g| {
            let r = j % g.modulus;
            g.offsets.binary_search(&r).is_ok()
        })
    }
}

impl PositionSet for RationalApprox {
    fn contains(&self, j: u64) -> bool {
        RationalApprox::contains(self, j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailViolation {
    /// A component that is not a regular interval of the scale.
    NonRegularComponent { start: u64, end: u64 },
    /// Position 0 belongs to the tail.
    ContainsZero,
    /// `R_{n-1} ∩ I` leaves the middle third of `I`.
    OutsideMiddleThird { level: usize, window: u64 },
    /// `R_{n-1} ∩ I` is empty.
    EmptyIntersection { level: usize, window: u64 },
    /// `|R_{n-1} ∩ I| / T_n > 1/κ_n`.
    TooDense {
        level: usize,
        window: u64,
        count: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCount {
    pub size: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSparsity {
    pub level: usize,
    pub windows_checked: u64,
    pub min_ratio: Option<Rational>,
    pub max_ratio: Option<Rational>,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailReport {
    pub upto: u64,
    pub pass: bool,
    pub components: Vec<ComponentCount>,
    pub levels: Vec<LevelSparsity>,
    pub violations: Vec<TailViolation>,
}

/// A maximal run of the set inside `[0, upto)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: u64,
    pub end: u64,
    /// The run reaches `upto − 1` and the set continues past it.
    pub truncated: bool,
}

/// Scan `[0, upto)` for maximal runs of `set`.
pub fn runs<S: PositionSet + ?Sized>(set: &S, upto: u64) -> Vec<Run> {
    let mut out = Vec::new();
    let mut open: Option<u64> = None;
    for j in 0..upto {
        match (set.contains(j), open) {
            (true, None) => open = Some(j),
            (false, Some(s)) => {
                out.push(Run {
                    start: s,
                    end: j - 1,
                    truncated: false,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push(Run {
            start: s,
            end: upto - 1,
            truncated: set.contains(upto),
        });
    }
    out
}

/// Level of a run if it is `T_i`-regular for some `i`.
fn regular_level(scale: &Scale, start: u64, end: u64) -> Option<usize> {
    let len = end - start + 1;
    scale
        .periods()
        .iter()
        .position(|&t| t == len && start.is_multiple_of(t))
}

/// Check the three tail axioms for `set` on `[0, upto)`.
///
/// Works for any membership oracle: components and skeletons are recovered
/// by scanning, not taken from the canonical construction.
pub fn verify_tail<S: PositionSet + ?Sized>(
    scale: &Scale,
    set: &S,
    upto: u64,
) -> Result<TailReport, TailError> {
    let limit = scale.period(scale.depth());
    if upto > limit {
        return Err(TailError::RangeTooLarge { upto, limit });
    }
    let mut violations = Vec::new();
    if set.contains(0) {
        violations.push(TailViolation::ContainsZero);
    }

    let mut census: BTreeMap<u64, u64> = BTreeMap::new();
    // (level, start, end) of every complete regular component.
    let mut leveled = Vec::new();
    for run in runs(set, upto) {
        if run.truncated {
            continue;
        }
        *census.entry(run.end - run.start + 1).or_default() += 1;
        match regular_level(scale, run.start, run.end) {
            Some(level) => leveled.push((level, run.start, run.end)),
            None => violations.push(TailViolation::NonRegularComponent {
                start: run.start,
                end: run.end,
            }),
        }
    }

    let mut levels = Vec::new();
    for n in 1..=scale.depth() {
        let t = scale.period(n);
        let windows = upto / t;
        if windows == 0 {
            continue;
        }
        let kappa = scale.factor(n);
        let mut covered = vec![false; windows as usize];
        // (count, min, max) of R_{n-1} per window.
        let mut stats: Vec<(u64, u64, u64)> = vec![(0, u64::MAX, 0); windows as usize];
        for &(level, start, end) in &leveled {
            if level >= n {
                let first = start / t;
                let last = (end / t).min(windows - 1);
                if first < windows {
                    for w in first..=last {
                        covered[w as usize] = true;
                    }
                }
            } else if level + 1 == n {
                let w = start / t;
                if w < windows && end / t == w {
                    let s = &mut stats[w as usize];
                    s.0 += end - start + 1;
                    s.1 = s.1.min(start);
                    s.2 = s.2.max(end);
                }
            }
        }
        let mut checked = 0;
        let mut min_count = u64::MAX;
        let mut max_count = 0;
        for w in 0..windows {
            if covered[w as usize] {
                continue;
            }
            checked += 1;
            let (count, lo, hi) = stats[w as usize];
            let a = w * t;
            let b = a + t - 1;
            min_count = min_count.min(count);
            max_count = max_count.max(count);
            if count == 0 {
                violations.push(TailViolation::EmptyIntersection {
                    level: n,
                    window: w,
                });
                continue;
            }
            if lo < a + t / 3 || hi > b - t / 3 {
                violations.push(TailViolation::OutsideMiddleThird {
                    level: n,
                    window: w,
                });
            }
            if count * kappa > t {
                violations.push(TailViolation::TooDense {
                    level: n,
                    window: w,
                    count,
                });
            }
        }
        levels.push(LevelSparsity {
            level: n,
            windows_checked: checked,
            min_ratio: (checked > 0).then(|| Rational::from_u64s(min_count, t)),
            max_ratio: (checked > 0).then(|| Rational::from_u64s(max_count, t)),
            bound: Rational::from_u64s(1, kappa),
        });
    }

    Ok(TailReport {
        upto,
        pass: violations.is_empty(),
        components: census
            .into_iter()
            .map(|(size, count)| ComponentCount { size, count })
            .collect(),
        levels,
        violations,
    })
}
