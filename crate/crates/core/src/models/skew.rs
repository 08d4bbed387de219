use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::flipflop::Sign;

/// North–south circle maps on `[0, 1)`.
///
/// `g₋` is the Möbius map `u ↦ λu` read through the chart `u = tan(πt)`:
/// it fixes `0` with multiplier `λ` and `1/2` with multiplier `1/λ`.
/// `g₊(t) = g₋(t + 1/2) − 1/2 (mod 1)` swaps the roles of the fixed points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewSystem {
    lambda: f64,
}

/// `t mod 1` in `[0, 1)`.
fn wrap(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// A fiber point stored as an offset from the nearer of the two fixed
/// points, so that points close to either one keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberPoint {
    /// Offset measured from `1/2` rather than from `0`.
    pub half: bool,
    /// In `[−1/4, 1/4]`.
    pub offset: f64,
}

impl FiberPoint {
    pub fn from_t(t: f64) -> Self {
        let t = wrap(t);
        let c = t - 0.5;
        if c.abs() <= 0.25 {
            FiberPoint {
                half: true,
                offset: c,
            }
        } else {
            FiberPoint {
                half: false,
                offset: t - t.round(),
            }
        }
    }

    pub fn t(self) -> f64 {
        if self.half {
            0.5 + self.offset
        } else {
            wrap(self.offset)
        }
    }

    fn normalize(self) -> Self {
        if self.offset.abs() <= 0.25 {
            self
        } else {
            FiberPoint {
                half: !self.half,
                offset: self.offset - 0.5f64.copysign(self.offset),
            }
        }
    }

    /// `t + 1/2`.
    fn swap(self) -> Self {
        FiberPoint {
            half: !self.half,
            offset: self.offset,
        }
    }
}

/// `g₋` with multiplier `lambda` at 0 and `1/lambda` at 1/2.
fn mobius(lambda: f64, p: FiberPoint) -> FiberPoint {
    let offset = if p.half {
        (PI * p.offset).tan().atan2(lambda) / PI
    } else {
        (lambda * (PI * p.offset).tan()).atan() / PI
    };
    FiberPoint {
        half: p.half,
        offset,
    }
    .normalize()
}

fn mobius_derivative(lambda: f64, p: FiberPoint) -> f64 {
    let (s, c) = (PI * p.offset).sin_cos();
    if p.half {
        lambda / (s * s + lambda * lambda * c * c)
    } else {
        lambda / (c * c + lambda * lambda * s * s)
    }
}

impl SkewSystem {
    /// # Panics
    /// Unless `0 < lambda < 1`.
    pub fn new(lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda < 1.0, "λ must lie in (0, 1), got {lambda}");
        Self { lambda }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn g_minus(&self, t: f64) -> f64 {
        mobius(self.lambda, FiberPoint::from_t(t)).t()
    }

    pub fn g_minus_inverse(&self, t: f64) -> f64 {
        mobius(1.0 / self.lambda, FiberPoint::from_t(t)).t()
    }

    pub fn g_plus(&self, t: f64) -> f64 {
        self.apply(Sign::Plus, FiberPoint::from_t(t)).t()
    }

    pub fn g(&self, sign: Sign, t: f64) -> f64 {
        self.apply(sign, FiberPoint::from_t(t)).t()
    }

    pub fn derivative(&self, sign: Sign, t: f64) -> f64 {
        self.derivative_at(sign, FiberPoint::from_t(t))
    }

    pub fn log_derivative(&self, sign: Sign, t: f64) -> f64 {
        self.derivative(sign, t).ln()
    }

    pub fn apply(&self, sign: Sign, p: FiberPoint) -> FiberPoint {
        match sign {
            Sign::Minus => mobius(self.lambda, p),
            Sign::Plus => mobius(self.lambda, p.swap()).swap(),
        }
    }

    pub fn derivative_at(&self, sign: Sign, p: FiberPoint) -> f64 {
        match sign {
            Sign::Minus => mobius_derivative(self.lambda, p),
            Sign::Plus => mobius_derivative(self.lambda, p.swap()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkewOrbit {
    /// `t_0 … t_L`.
    pub fiber: Vec<f64>,
    /// `s_i = log g′_{sign_i}(t_i)` for `i < L`.
    pub log_derivative: Vec<f64>,
}

/// `t_{i+1} = g_{sign_i}(t_i)` for `i < len`.
///
/// # Panics
/// If `len > signs.len()`.
pub fn skew_orbit(sys: &SkewSystem, signs: &[Sign], t0: f64, len: usize) -> SkewOrbit {
    assert!(len <= signs.len(), "orbit length {len} exceeds base length {}", signs.len());
    let mut fiber = Vec::with_capacity(len + 1);
    let mut log_derivative = Vec::with_capacity(len);
    let mut p = FiberPoint::from_t(t0);
    fiber.push(p.t());
    for &s in &signs[..len] {
        log_derivative.push(sys.derivative_at(s, p).ln());
        p = sys.apply(s, p);
        fiber.push(p.t());
    }
    SkewOrbit {
        fiber,
        log_derivative,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovSummary {
    pub exponent: f64,
    /// `(n, mean of the first n terms)`.
    pub running: Vec<(usize, f64)>,
}

/// Plain arithmetic means of `series` overall and at each checkpoint
/// (checkpoints past the end are skipped).
///
/// # Panics
/// If `series` is empty.
pub fn lyapunov_summary(series: &[f64], checkpoints: &[usize]) -> LyapunovSummary {
    assert!(!series.is_empty(), "empty series");
    let mut prefix = 0.0;
    let mut sums = Vec::with_capacity(series.len() + 1);
    sums.push(0.0);
    for &s in series {
        prefix += s;
        sums.push(prefix);
    }
    let running = checkpoints
        .iter()
        .filter(|&&n| n >= 1 && n <= series.len())
        .map(|&n| (n, sums[n] / n as f64))
        .collect();
    LyapunovSummary {
        exponent: prefix / series.len() as f64,
        running,
    }
}

/// CSV `step,t,logderiv,running_mean`, one row per step.
pub fn orbit_csv(orbit: &SkewOrbit) -> String {
    let mut s = String::from("step,t,logderiv,running_mean\n");
    let mut sum = 0.0;
    for (i, &d) in orbit.log_derivative.iter().enumerate() {
        sum += d;
        let _ = writeln!(
            s,
            "{},{:.15e},{:.15e},{:.15e}",
            i,
            orbit.fiber[i],
            d,
            sum / (i + 1) as f64
        );
    }
    s
}
