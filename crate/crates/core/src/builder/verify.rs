use rayon::prelude::*;
use serde::Serialize;

use super::certificate::unpack_bits;
use super::{Certificate, ControlParams};
use crate::exact::Rational;
use crate::flipflop::DoublePlaqueSystem;
use crate::symbolic::{Division, SymbolWord};
use crate::tail::{runs, Tail};

/// At most this many violations are kept in a report; the count is exact.
pub const MAX_REPORTED_VIOLATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WindowBand {
        level: usize,
        index: u64,
        sum: i64,
        length: u64,
        bound: Rational,
    },
    ComponentIncomplete {
        start: u64,
        size: u64,
        required: u32,
        achieved: u32,
    },
    IrregularComponent {
        start: u64,
        size: u64,
    },
    UnclassifiedSymbol {
        position: u64,
    },
    ItineraryMismatch {
        position: u64,
        class: u8,
        driving: u8,
    },
    Shape {
        detail: String,
    },
    CertificateMismatch {
        field: String,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub prefix_length: u64,
    /// Non-exempt complete windows checked, per level.
    pub windows_checked: Vec<u64>,
    pub components_checked: u64,
    pub itinerary_checked: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

/// What the verifier recomputed from the word alone.
#[derive(Debug, Clone, Default)]
struct Recomputed {
    sums: Vec<Vec<i64>>,
    orders: Vec<Vec<u32>>,
    classes: Vec<bool>,
    driving: Vec<bool>,
}

struct Collector {
    count: u64,
    kept: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, v: Violation) {
        self.count += 1;
        if self.kept.len() < MAX_REPORTED_VIOLATIONS {
            self.kept.push(v);
        }
    }
}

/// Largest `ℓ` such that all `M^ℓ` words of length `ℓ` occur in `symbols`,
/// by a rolling scan with a seen-table.
fn complete_order(symbols: &[u8], alphabet: u8) -> u32 {
    let m = alphabet as usize;
    let mut order = 0u32;
    for l in 1u32.. {
        let space = match m.checked_pow(l) {
            Some(s) if s <= 1 << 24 => s,
            _ => break,
        };
        if space + l as usize - 1 > symbols.len() {
            break;
        }
        let mut seen = vec![false; space];
        let mut distinct = 0usize;
        let mut key = 0usize;
        let top = space / m;
        for (i, &s) in symbols.iter().enumerate() {
            key = (key % top) * m + s as usize;
            if i + 1 >= l as usize && !seen[key] {
                seen[key] = true;
                distinct += 1;
            }
        }
        if distinct < space {
            break;
        }
        order = l;
    }
    order
}

/// Recomputes every window sum, component order and itinerary bit of `x`
/// and checks them against the bands, density orders and driving stream.
/// If a certificate is given it is compared record by record.
pub fn verify_certificate<D: DoublePlaqueSystem + ?Sized>(
    x: &SymbolWord,
    double: &D,
    tail: &Tail,
    params: &ControlParams,
    z: &SymbolWord,
    division: &Division,
    certificate: Option<&Certificate>,
) -> VerifyReport {
    let scale = tail.scale();
    let depth = scale.depth();
    let r = double.step();
    let mut out = Collector {
        count: 0,
        kept: Vec::new(),
    };
    let shape = |detail: String| Violation::Shape { detail };
    if !x.len().is_multiple_of(r) {
        out.push(shape(format!("word length {} is not a multiple of r = {r}", x.len())));
    }
    if params.alpha.len() != depth + 1 || params.delta.len() != depth {
        out.push(shape("parameters do not match the scale depth".into()));
        return finish(out, 0, vec![], 0, 0);
    }
    let len = (x.len() / r) as u64;
    if len > scale.period(depth) {
        out.push(shape(format!("prefix {len} exceeds T_{depth}")));
        return finish(out, len, vec![], 0, 0);
    }
    let symbols = x.to_bytes();
    let mut rec = Recomputed::default();

    // Window sums, aggregated level by level.
    let table: Vec<i64> = (0..double.alphabet()).map(|s| double.potential(s)).collect();
    let steps: Vec<i64> = symbols[..len as usize * r]
        .par_chunks(r)
        .map(|c| c.iter().map(|&s| table[s as usize]).sum())
        .collect();
    let mut level_sums: Vec<Vec<i64>> = Vec::with_capacity(depth + 1);
    level_sums.push(
        steps
            .par_chunks_exact(scale.t0() as usize)
            .map(|c| c.iter().sum())
            .collect(),
    );
    for n in 1..=depth {
        let k = scale.factor(n) as usize;
        let next = level_sums[n - 1]
            .par_chunks_exact(k)
            .map(|c| c.iter().sum())
            .collect();
        level_sums.push(next);
    }
    let mut windows_checked = Vec::with_capacity(depth + 1);
    for (n, sums) in level_sums.iter().enumerate() {
        let t = scale.period(n);
        let bound = &params.alpha[n];
        let checked: Vec<(u64, i64, bool)> = sums
            .par_iter()
            .enumerate()
            .filter_map(|(w, &sum)| {
                let start = w as u64 * t;
                let end = start + t - 1;
                let exempt = tail.contains(start)
                    && tail.component_of(start).is_some_and(|c| c.end >= end);
                (!exempt).then(|| (w as u64, sum, bound.bounds_average(sum, r as u64 * t)))
            })
            .collect();
        windows_checked.push(checked.len() as u64);
        for &(index, sum, ok) in &checked {
            if !ok {
                out.push(Violation::WindowBand {
                    level: n,
                    index,
                    sum,
                    length: r as u64 * t,
                    bound: bound.clone(),
                });
            }
        }
        rec.sums.push(checked.into_iter().map(|c| c.1).collect());
    }

    // Tail components, found as maximal runs of tail positions.
    rec.orders = vec![Vec::new(); depth];
    let complete: Vec<_> = runs(tail, len).into_iter().filter(|run| !run.truncated).collect();
    let alphabet = double.alphabet();
    let orders: Vec<(u64, u64, Option<usize>, u32)> = complete
        .par_iter()
        .map(|run| {
            let size = run.end - run.start + 1;
            let level = (0..depth).find(|&m| scale.period(m) == size);
            let seg = &symbols[run.start as usize * r..(run.end as usize + 1) * r];
            (run.start, size, level, complete_order(seg, alphabet))
        })
        .collect();
    for &(start, size, level, achieved) in &orders {
        let Some(level) = level else {
            out.push(Violation::IrregularComponent { start, size });
            continue;
        };
        let required = params.required_order(level);
        if achieved < required {
            out.push(Violation::ComponentIncomplete {
                start,
                size,
                required,
                achieved,
            });
        }
        rec.orders[level].push(achieved);
    }

    // Itinerary over J.
    let mut itinerary_checked = 0u64;
    if (z.len() as u64) < len {
        out.push(shape(format!(
            "driving stream has {} bits, prefix needs {len}",
            z.len()
        )));
    } else {
        for j in 0..len {
            if tail.contains(j) {
                continue;
            }
            itinerary_checked += 1;
            let block = &symbols[j as usize * r..(j as usize + 1) * r];
            let driving = z.get(j as usize);
            rec.driving.push(driving == 1);
            match division.class_of(block) {
                None => {
                    out.push(Violation::UnclassifiedSymbol { position: j });
                    rec.classes.push(false);
                }
                Some(class) => {
                    if class != driving {
                        out.push(Violation::ItineraryMismatch {
                            position: j,
                            class,
                            driving,
                        });
                    }
                    rec.classes.push(class == 1);
                }
            }
        }
    }

    if let Some(cert) = certificate {
        compare(cert, &rec, len, r, double.alphabet(), tail, params, &mut out);
    }
    finish(out, len, windows_checked, complete.len() as u64, itinerary_checked)
}

#[allow(clippy::too_many_arguments)]
fn compare(
    cert: &Certificate,
    rec: &Recomputed,
    len: u64,
    r: usize,
    alphabet: u8,
    tail: &Tail,
    params: &ControlParams,
    out: &mut Collector,
) {
    let mut mismatch = |field: &str, detail: String| {
        out.push(Violation::CertificateMismatch {
            field: field.to_string(),
            detail,
        })
    };
    if cert.prefix_length != len {
        mismatch("prefix_length", format!("{} vs recomputed {len}", cert.prefix_length));
    }
    if cert.step != r || cert.alphabet != alphabet {
        mismatch("step", format!("certificate r = {}, M = {}", cert.step, cert.alphabet));
    }
    if &cert.scale != tail.scale() {
        mismatch("scale", "certificate scale differs".into());
    }
    if &cert.params != params {
        mismatch("params", "certificate parameters differ".into());
    }
    let first_diff = |a: &[i64], b: &[i64]| a.iter().zip(b).position(|(x, y)| x != y);
    if cert.windows.len() != rec.sums.len() {
        mismatch("windows", format!("{} levels vs {}", cert.windows.len(), rec.sums.len()));
    }
    for (lw, sums) in cert.windows.iter().zip(&rec.sums) {
        if lw.sums.len() != sums.len() {
            mismatch(
                "windows",
                format!("level {}: {} records vs {} recomputed", lw.level, lw.sums.len(), sums.len()),
            );
        } else if let Some(i) = first_diff(&lw.sums, sums) {
            mismatch(
                "windows",
                format!("level {} record {i}: {} vs recomputed {}", lw.level, lw.sums[i], sums[i]),
            );
        }
    }
    if cert.components.len() != rec.orders.len() {
        mismatch("components", format!("{} levels vs {}", cert.components.len(), rec.orders.len()));
    }
    for (cl, orders) in cert.components.iter().zip(&rec.orders) {
        if &cl.orders != orders {
            let at = cl.orders.iter().zip(orders).position(|(a, b)| a != b);
            mismatch(
                "components",
                format!(
                    "size {}: {} records vs {} recomputed, first difference at {at:?}",
                    cl.size,
                    cl.orders.len(),
                    orders.len()
                ),
            );
        }
    }
    let count = cert.itinerary.count as usize;
    if count != rec.classes.len() {
        mismatch("itinerary", format!("{count} records vs {} recomputed", rec.classes.len()));
        return;
    }
    for (name, hex_bits, bits) in [
        ("itinerary.classes", &cert.itinerary.classes, &rec.classes),
        ("itinerary.driving", &cert.itinerary.driving, &rec.driving),
    ] {
        match unpack_bits(hex_bits, count) {
            Err(e) => mismatch(name, e),
            Ok(v) => {
                if let Some(i) = v.iter().zip(bits.iter()).position(|(a, b)| a != b) {
                    mismatch(name, format!("record {i} differs"));
                }
            }
        }
    }
}

fn finish(
    out: Collector,
    len: u64,
    windows_checked: Vec<u64>,
    components_checked: u64,
    itinerary_checked: u64,
) -> VerifyReport {
    VerifyReport {
        pass: out.count == 0,
        prefix_length: len,
        windows_checked,
        components_checked,
        itinerary_checked,
        violation_count: out.count,
        violations: out.kept,
    }
}
