use std::collections::HashMap;

use super::certificate::{pack_bits, CERTIFICATE_FORMAT};
use super::{BuildError, Certificate, ComponentLevel, ControlParams, ItineraryRecord, LevelWindows};
use crate::flipflop::{Class, DoublePlaqueSystem, Sign};
use crate::scale::Scale;
use crate::symbolic::{block_frequencies, debruijn, SymbolWord};
use crate::tail::Tail;

/// Fraction of `α_n` the greedy ramp aims for within each window.
const RAMP: f64 = 0.75;

/// Longest level-0 window for which all sign patterns are searched.
const LEVEL0_SEARCH_MAX: usize = 20;

struct Fill {
    symbols: Vec<u8>,
    sum: i64,
    order: u32,
}

struct Ctx<'a, D: ?Sized> {
    sys: &'a D,
    scale: &'a Scale,
    params: &'a ControlParams,
    z: &'a SymbolWord,
    len: u64,
    r: usize,
    alpha: Vec<f64>,
    /// Index of the tail sub-window inside each level-`n` window.
    tail_index: Vec<u64>,
    /// `[sign][label]`.
    blocks: [[Vec<u8>; 2]; 2],
    potentials: [[i64; 2]; 2],
    fills: HashMap<(usize, Sign), Fill>,
    out: Vec<u8>,
    sums: Vec<Vec<i64>>,
    orders: Vec<Vec<u32>>,
    classes: Vec<bool>,
    driving: Vec<bool>,
}

fn sign_index(s: Sign) -> usize {
    match s {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

/// Largest `ℓ` such that every word of length `ℓ` over `alphabet` occurs in
/// `symbols`.
fn achieved_order(symbols: &[u8], alphabet: u8) -> u32 {
    let word = SymbolWord::from_symbols(alphabet, symbols).expect("symbols within alphabet");
    let mut order = 0;
    loop {
        let next = order + 1;
        let needed = (alphabet as u64).pow(next) + next as u64 - 1;
        if needed > symbols.len() as u64 || next > 12 {
            return order;
        }
        let stats = block_frequencies(&word, next as usize).expect("block fits");
        if stats.distinct() as u64 != (alphabet as u64).pow(next) {
            return order;
        }
        order = next;
    }
}

impl<D: DoublePlaqueSystem + ?Sized> Ctx<'_, D> {
    fn emit(&mut self, symbols: &[u8], start_step: u64) {
        let room = ((self.len - start_step) as usize).saturating_mul(self.r);
        self.out.extend_from_slice(&symbols[..symbols.len().min(room)]);
    }

    fn fill(&mut self, level: usize, orientation: Sign) -> Result<&Fill, BuildError> {
        if !self.fills.contains_key(&(level, orientation)) {
            let size = self.scale.period(level) as usize * self.r;
            let order = self.params.required_order(level);
            let mut symbols = Vec::with_capacity(size);
            if order > 0 {
                let db = debruijn(self.sys.alphabet(), order)
                    .map_err(|_| BuildError::DensityInfeasible { size: size as u64, order })?;
                if db.len() > size {
                    return Err(BuildError::DensityInfeasible {
                        size: size as u64,
                        order,
                    });
                }
                for s in db.iter() {
                    symbols.push(if orientation == Sign::Plus { s } else { self.sys.flip(s) });
                }
            }
            let db_sum: i64 = symbols.iter().map(|&s| self.sys.potential(s)).sum();
            let plus = self.blocks[0][0][0];
            let minus = self.sys.flip(plus);
            let mut pad_sign = if order == 0 {
                orientation
            } else if db_sum != 0 {
                Sign::of(db_sum).flip()
            } else {
                orientation.flip()
            };
            while symbols.len() < size {
                symbols.push(if pad_sign == Sign::Plus { plus } else { minus });
                pad_sign = pad_sign.flip();
            }
            let sum = symbols.iter().map(|&s| self.sys.potential(s)).sum();
            let achieved = achieved_order(&symbols, self.sys.alphabet());
            self.fills.insert(
                (level, orientation),
                Fill {
                    symbols,
                    sum,
                    order: achieved,
                },
            );
        }
        Ok(&self.fills[&(level, orientation)])
    }

    fn component(&mut self, level: usize, start: u64, orientation: Sign) -> Result<i64, BuildError> {
        let t = self.scale.period(level);
        let (symbols, sum, order) = {
            let f = self.fill(level, orientation)?;
            (f.symbols.clone(), f.sum, f.order)
        };
        self.emit(&symbols, start);
        if start + t <= self.len {
            self.orders[level].push(order);
            return Ok(sum);
        }
        let written = ((self.len - start) as usize) * self.r;
        Ok(symbols[..written].iter().map(|&s| self.sys.potential(s)).sum())
    }

    /// Greedy signs for a level-0 window: each step moves the partial sum
    /// towards the ramp, ties going to `target`. If a complete window ends
    /// outside its band, every sign pattern is tried and the in-band sum
    /// nearest `tau` wins.
    fn level0_signs(&self, labels: &[usize], tau: f64, target: Sign, complete: bool) -> Vec<Sign> {
        let t = labels.len();
        let pot = |s: Sign, label: usize| self.potentials[sign_index(s)][label];
        let mut p = 0i64;
        let mut signs = Vec::with_capacity(t);
        for (i, &label) in labels.iter().enumerate() {
            let d = tau * (i + 1) as f64 / t as f64;
            let cost = |s: Sign| ((p + pot(s, label)) as f64 - d).abs();
            let other = target.flip();
            let s = if cost(other) < cost(target) { other } else { target };
            p += pot(s, label);
            signs.push(s);
        }
        let length = (self.r * t) as u64;
        let bound = &self.params.alpha[0];
        if !complete || bound.bounds_average(p, length) || t > LEVEL0_SEARCH_MAX {
            return signs;
        }
        let pattern = |mask: u32| -> Vec<Sign> {
            (0..t)
                .map(|i| if mask >> i & 1 == 0 { target } else { target.flip() })
                .collect()
        };
        let mut best: Option<(f64, u32)> = None;
        for mask in 0..1u32 << t {
            let sum: i64 = pattern(mask).into_iter().zip(labels).map(|(s, &l)| pot(s, l)).sum();
            if bound.bounds_average(sum, length) {
                let cost = (sum as f64 - tau).abs();
                if best.is_none_or(|(c, _)| cost < c) {
                    best = Some((cost, mask));
                }
            }
        }
        best.map_or(signs, |(_, mask)| pattern(mask))
    }

    fn window(&mut self, level: usize, start: u64, target: Sign) -> Result<i64, BuildError> {
        let t = self.scale.period(level);
        let tau = target.value() as f64 * RAMP * self.alpha[level] * (self.r as u64 * t) as f64;
        let mut p: i64 = 0;
        if level == 0 {
            let labels: Vec<usize> = (start..(start + t).min(self.len))
                .map(|j| self.z.get(j as usize) as usize)
                .collect();
            let signs = self.level0_signs(&labels, tau, target, start + t <= self.len);
            for (i, (&label, s)) in labels.iter().zip(signs).enumerate() {
                let block = self.blocks[sign_index(s)][label].clone();
                self.emit(&block, start + i as u64);
                p += self.potentials[sign_index(s)][label];
                self.classes.push(label == 1);
                self.driving.push(label == 1);
            }
        } else {
            let k = self.scale.factor(level);
            let sub = self.scale.period(level - 1);
            for i in 0..k {
                let s0 = start + i * sub;
                if s0 >= self.len {
                    break;
                }
                let d = tau * (i + 1) as f64 / k as f64;
                let gap = d - p as f64;
                let s = if gap > 0.0 {
                    Sign::Plus
                } else if gap < 0.0 {
                    Sign::Minus
                } else {
                    target
                };
                p += if i == self.tail_index[level] {
                    self.component(level - 1, s0, s)?
                } else {
                    self.window(level - 1, s0, s)?
                };
            }
        }
        if start + t <= self.len {
            let bound = &self.params.alpha[level];
            if !bound.bounds_average(p, self.r as u64 * t) {
                return Err(BuildError::ControlInfeasible {
                    level,
                    index: start / t,
                    sum: p,
                    bound: bound.clone(),
                });
            }
            self.sums[level].push(p);
        }
        Ok(p)
    }
}

/// Builds `len` steps of a point whose non-tail regular windows obey the
/// `α` bands, whose tail components contain every word of their density
/// order, and whose class at each `j ∈ J` is the driving bit `z_j`.
pub fn build_controlled_point<D: DoublePlaqueSystem + ?Sized>(
    double: &D,
    tail: &Tail,
    params: &ControlParams,
    z: &SymbolWord,
    len: u64,
    seed: Option<u64>,
) -> Result<(SymbolWord, Certificate), BuildError> {
    let scale = tail.scale();
    params.validate(scale)?;
    let depth = scale.depth();
    if len == 0 {
        return Err(BuildError::InvalidParams("prefix length must be positive".into()));
    }
    let limit = scale.period(depth);
    if len > limit {
        return Err(BuildError::PrefixTooLong { len, limit });
    }
    if (z.len() as u64) < len || z.alphabet() != 2 {
        return Err(BuildError::DrivingStream {
            len: z.len(),
            needed: len,
        });
    }
    let r = double.step();
    let mut tail_index = vec![0u64; depth + 1];
    for (n, slot) in tail_index.iter_mut().enumerate().skip(1) {
        let b = tail.block(n);
        let sub = scale.period(n - 1);
        if !b.start.is_multiple_of(sub) || b.len() != sub {
            return Err(BuildError::InvalidParams(format!(
                "tail block A_{n} = [{}, {}] is not a T_{}-regular interval",
                b.start,
                b.end,
                n - 1
            )));
        }
        *slot = b.start / sub;
    }
    let mut blocks: [[Vec<u8>; 2]; 2] = Default::default();
    let mut potentials = [[0i64; 2]; 2];
    for sign in [Sign::Plus, Sign::Minus] {
        for label in 0..2u8 {
            let class = Class::new(sign, label);
            let b = double.class_block(class);
            if b.len() != r || double.classify(&b) != Some(class) {
                return Err(BuildError::ModelRefusal(format!(
                    "refinement towards {class} did not produce a plaque of that class"
                )));
            }
            potentials[sign_index(sign)][label as usize] = double.block_potential(&b);
            blocks[sign_index(sign)][label as usize] = b;
        }
    }
    let mut ctx = Ctx {
        sys: double,
        scale,
        params,
        z,
        len,
        r,
        alpha: params.alpha.iter().map(|a| a.to_f64()).collect(),
        tail_index,
        blocks,
        potentials,
        fills: HashMap::new(),
        out: Vec::with_capacity(len as usize * r),
        sums: vec![Vec::new(); depth + 1],
        orders: vec![Vec::new(); depth],
        classes: Vec::new(),
        driving: Vec::new(),
    };
    ctx.window(depth, 0, Sign::Plus)?;
    debug_assert_eq!(ctx.out.len() as u64, len * r as u64);

    let word = SymbolWord::from_symbols(double.alphabet(), &ctx.out)
        .map_err(|e| BuildError::ModelRefusal(e.to_string()))?;
    let windows = ctx
        .sums
        .into_iter()
        .enumerate()
        .map(|(level, sums)| LevelWindows {
            level,
            period: scale.period(level),
            alpha: params.alpha[level].clone(),
            sums,
        })
        .collect();
    let components = ctx
        .orders
        .into_iter()
        .enumerate()
        .map(|(level, orders)| ComponentLevel {
            level,
            size: scale.period(level),
            required_order: params.required_order(level),
            orders,
        })
        .collect();
    let certificate = Certificate {
        format: CERTIFICATE_FORMAT.to_string(),
        scale: scale.clone(),
        params: params.clone(),
        step: r,
        alphabet: double.alphabet(),
        prefix_length: len,
        seed,
        windows,
        components,
        itinerary: ItineraryRecord {
            count: ctx.classes.len() as u64,
            classes: pack_bits(&ctx.classes),
            driving: pack_bits(&ctx.driving),
        },
    };
    Ok((word, certificate))
}
