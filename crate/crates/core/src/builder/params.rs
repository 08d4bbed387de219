use serde::{Deserialize, Serialize};

use super::BuildError;
use crate::exact::Rational;
use crate::flipflop::density_order;
use crate::scale::Scale;

/// Average bands `α_0..α_D` for `T_n`-windows and density targets
/// `δ_1..δ_D` for tail components of size `T_n`.
///
/// Components of size `T_0` carry no density requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlParams {
    pub alpha: Vec<Rational>,
    /// `delta[n − 1]` is `δ_n`.
    pub delta: Vec<Rational>,
}

impl ControlParams {
    pub fn alpha(&self, level: usize) -> &Rational {
        &self.alpha[level]
    }

    /// `δ` for components of size `T_level`, if any.
    pub fn delta(&self, level: usize) -> Option<&Rational> {
        level.checked_sub(1).and_then(|i| self.delta.get(i))
    }

    /// Length of the words that must all occur in a component of size
    /// `T_level`; `0` when there is no requirement.
    pub fn required_order(&self, level: usize) -> u32 {
        self.delta(level).map_or(0, |d| density_order(d.to_f64()))
    }

    pub fn validate(&self, scale: &Scale) -> Result<(), BuildError> {
        let depth = scale.depth();
        let bad = |m: String| Err(BuildError::InvalidParams(m));
        if self.alpha.len() != depth + 1 {
            return bad(format!("expected {} α entries, got {}", depth + 1, self.alpha.len()));
        }
        if self.delta.len() != depth {
            return bad(format!("expected {depth} δ entries, got {}", self.delta.len()));
        }
        let zero = Rational::zero();
        if self.alpha.iter().any(|a| *a <= zero) {
            return bad("every α must be positive".into());
        }
        if self.alpha.windows(2).any(|w| w[1] > w[0]) {
            return bad("α must be nonincreasing".into());
        }
        if self.delta.iter().any(|d| *d <= zero || *d > Rational::one()) {
            return bad("every δ must lie in (0, 1]".into());
        }
        if self.delta.windows(2).any(|w| w[1] > w[0]) {
            return bad("δ must be nonincreasing".into());
        }
        Ok(())
    }
}

/// `α_0 = 1/2`, `α_n = 4/κ_n`, and `δ_n = 2^{-L_n}` with `L_n` the largest
/// `L` such that `g^{L+1} + L ≤ T_n`, so a de Bruijn word of order `L + 1`
/// over `g` letters fits in a component of size `T_n`.
pub fn default_params(scale: &Scale, granularity: u64) -> Result<ControlParams, BuildError> {
    let mut alpha = vec![Rational::new(1, 2)];
    for n in 1..=scale.depth() {
        alpha.push(Rational::from_u64s(4, scale.factor(n)));
    }
    // Keep the sequence nonincreasing when κ_1 is small.
    for n in 1..alpha.len() {
        if alpha[n] > alpha[n - 1] {
            alpha[n] = alpha[n - 1].clone();
        }
    }
    let mut delta = Vec::new();
    for n in 1..=scale.depth() {
        let t = scale.period(n) as u128;
        let g = granularity as u128;
        let fits = |l: u32| g.checked_pow(l + 1).is_some_and(|p| p + l as u128 <= t);
        if !fits(0) {
            return Err(BuildError::Infeasible(format!(
                "no density word fits a component of size T_{n} = {t}"
            )));
        }
        let mut l = 0u32;
        while fits(l + 1) {
            l += 1;
        }
        delta.push(Rational::from_u64s(1, 1u64 << l));
    }
    Ok(ControlParams { alpha, delta })
}
