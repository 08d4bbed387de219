use std::path::Path;

use flipflop_core::builder::{
    build_controlled_point, default_params, empirical_integral, verify_certificate, BuildError, Certificate,
};
use flipflop_core::entropy::{
    abramov_check, entropy_bound_verdict, entropy_profile, lz_entropy, plugin_entropy, profile_csv,
};
use flipflop_core::exact::Rational;
use flipflop_core::flipflop::{
    check_disjoint_classes, choose_repetition, derived_alpha, division_of, double_from_flipflop,
    DoublePlaqueSystem,
};
use flipflop_core::models::{lyapunov_summary, orbit_csv, sign_word, skew_orbit, ShiftModel, SkewSystem};
use flipflop_core::scale::Scale;
use flipflop_core::selftest::{run_selftest, ABRAMOV_TOLERANCE};
use flipflop_core::symbolic::{bernoulli_stream, dbar_estimate, recode_psi, PairWord, SymbolWord};
use flipflop_core::tail::{verify_tail, Tail};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::report::{read_file, write_file};
use crate::CliError;

/// What a command produced: pass flag, result body and optional timings.
pub struct Outcome {
    pub pass: bool,
    pub result: Value,
    pub timings: Option<Value>,
}

impl Outcome {
    fn new(pass: bool, result: Value) -> Self {
        Self {
            pass,
            result,
            timings: None,
        }
    }
}

fn tail_of(scale: &Scale) -> Result<Tail, CliError> {
    Tail::build(scale).map_err(|e| CliError::Config(e.to_string()))
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

fn build_error(e: BuildError) -> CliError {
    match e {
        BuildError::ControlInfeasible { .. } | BuildError::DensityInfeasible { .. } | BuildError::Infeasible(_) => {
            CliError::Infeasible(e.to_string())
        }
        BuildError::ModelRefusal(_) => CliError::Internal(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

fn read_word(path: &Path) -> Result<SymbolWord, CliError> {
    let bytes = read_file(path)?;
    SymbolWord::from_bytes(ShiftModel::ALPHABET, &bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// `length` from the config, capped by and defaulting to `available`.
fn sample_length(cfg: &RunConfig, available: usize) -> Result<usize, CliError> {
    match cfg.length {
        None => Ok(available),
        Some(l) if l as usize <= available => Ok(l as usize),
        Some(l) => Err(CliError::Config(format!("length {l} exceeds the word length {available}"))),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn scale_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = cfg.scale()?;
    Ok(Outcome::new(
        true,
        json!({ "factors": s.factors(), "periods": s.periods(), "depth": s.depth() }),
    ))
}

pub fn tail_build(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let blocks: Vec<Value> = tail
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| json!({ "level": i + 1, "start": b.start, "end": b.end, "modulus": scale.period(i + 1) }))
        .collect();
    Ok(Outcome::new(
        true,
        json!({ "blocks": blocks, "density": tail.density().to_string() }),
    ))
}

pub fn tail_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let upto = cfg.upto.unwrap_or(scale.period(scale.depth()));
    let report = verify_tail(&scale, &tail, upto).map_err(|e| CliError::Config(e.to_string()))?;
    let result = serde_json::to_value(&report).map_err(internal)?;
    Ok(Outcome::new(report.pass, result))
}

pub fn tail_density(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let d = tail.density();
    let complement = Rational::one() - d.clone();
    Ok(Outcome::new(
        true,
        json!({
            "density": d.to_string(),
            "decimal": format!("{:.6}", d.to_f64()),
            "complement": complement.to_string(),
            "bound_nats": complement.to_f64() * std::f64::consts::LN_2,
        }),
    ))
}

pub fn tail_approx(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let level = cfg.level.unwrap_or(1);
    let q = tail.rational_approx(level).map_err(|e| CliError::Config(e.to_string()))?;
    let len = cfg.upto.unwrap_or(scale.period(scale.depth()));
    let limit = scale.period(scale.depth());
    if len > limit {
        return Err(CliError::Config(format!("upto {len} exceeds T_depth = {limit}")));
    }
    let r = SymbolWord::from_bits(&(0..len).map(|j| tail.contains(j)).collect::<Vec<_>>());
    let qw = SymbolWord::from_bits(&(0..len).map(|j| q.contains(j)).collect::<Vec<_>>());
    let dbar = dbar_estimate(&r, &qw, len as usize).map_err(internal)?;
    let pass = dbar <= q.error_bound.to_f64();
    Ok(Outcome::new(
        pass,
        json!({
            "level": level,
            "progressions": q.progressions().count(),
            "groups": q.groups.iter().map(|g| json!({ "modulus": g.modulus, "offsets": g.offsets.len() })).collect::<Vec<_>>(),
            "error_bound": q.error_bound.to_string(),
            "window": len,
            "dbar": dbar,
        }),
    ))
}

pub fn point_build(cfg: &RunConfig, out: Option<&Path>, cert_path: Option<&Path>) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let len = cfg.length.unwrap_or(scale.period(scale.depth()));
    let params = default_params(&scale, ShiftModel::ALPHABET as u64).map_err(build_error)?;
    let z = bernoulli_stream(cfg.seed, len as usize);
    let (x, cert) =
        build_controlled_point(&ShiftModel, &tail, &params, &z, len, Some(cfg.seed)).map_err(build_error)?;
    let bytes = x.to_bytes();
    if let Some(p) = out {
        write_file(p, &bytes)?;
    }
    let cert_json = serde_json::to_string(&cert).map_err(internal)?;
    if let Some(p) = cert_path {
        write_file(p, cert_json.as_bytes())?;
    }
    let checkpoints: Vec<u64> = scale.periods().iter().copied().chain([len]).collect();
    let means = empirical_integral(&x, ShiftModel::phi, &checkpoints);
    Ok(Outcome::new(
        true,
        json!({
            "length": len,
            "word_sha256": sha256_hex(&bytes),
            "certificate_sha256": sha256_hex(cert_json.as_bytes()),
            "windows": cert.windows.iter().map(|w| json!({ "level": w.level, "count": w.sums.len(), "alpha": w.alpha.to_string() })).collect::<Vec<_>>(),
            "components": cert.components.iter().map(|c| json!({ "size": c.size, "count": c.orders.len(), "required_order": c.required_order, "min_order": c.orders.iter().min() })).collect::<Vec<_>>(),
            "itinerary_count": cert.itinerary.count,
            "birkhoff": means,
        }),
    ))
}

pub fn point_verify(cfg: &RunConfig, input: &Path, cert_path: Option<&Path>, seed_flag: bool) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let x = read_word(input)?;
    let cert: Option<Certificate> = match cert_path {
        Some(p) => Some(
            serde_json::from_slice(&read_file(p)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    // The driving stream comes from the certificate's seed unless a seed is
    // given explicitly.
    let seed = match (&cert, seed_flag) {
        (Some(c), false) => c.seed.unwrap_or(cfg.seed),
        _ => cfg.seed,
    };
    let params = default_params(&scale, ShiftModel::ALPHABET as u64).map_err(build_error)?;
    let z = bernoulli_stream(seed, x.len());
    let report = verify_certificate(
        &x,
        &ShiftModel,
        &tail,
        &params,
        &z,
        &ShiftModel::native_division(),
        cert.as_ref(),
    );
    let mut result = serde_json::to_value(&report).map_err(internal)?;
    result["driving_seed"] = json!(seed);
    result["word_sha256"] = json!(sha256_hex(&x.to_bytes()));
    Ok(Outcome::new(report.pass, result))
}

pub fn entropy_estimate(cfg: &RunConfig, input: &Path, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let x = read_word(input)?;
    let len = sample_length(cfg, x.len())?;
    let w = x.prefix(len);
    let plugin = plugin_entropy(&w, cfg.k).map_err(|e| CliError::Config(e.to_string()))?;
    let lz = lz_entropy(&w).map_err(|e| CliError::Config(e.to_string()))?;
    let rows = entropy_profile(&w, cfg.k).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(p) = csv {
        write_file(p, profile_csv(&rows).as_bytes())?;
    }
    Ok(Outcome::new(
        true,
        json!({ "length": len, "plugin": plugin, "lz": lz, "profile": rows }),
    ))
}

pub fn entropy_bound(cfg: &RunConfig, input: &Path) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let x = read_word(input)?;
    let len = sample_length(cfg, x.len())?;
    let v = entropy_bound_verdict(&x, &tail, cfg.k, len, cfg.tolerance).map_err(|e| CliError::Config(e.to_string()))?;
    let result = serde_json::to_value(&v).map_err(internal)?;
    Ok(Outcome::new(v.pass, result))
}

pub fn entropy_abramov(cfg: &RunConfig, input: &Path) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let tail = tail_of(&scale)?;
    let x = read_word(input)?;
    let len = sample_length(cfg, x.len())?;
    let labels: Vec<u8> = (0..len).map(|i| x.get(i) & 1).collect();
    let labels = SymbolWord::from_symbols(2, &labels).map_err(internal)?;
    let pair = PairWord::with_indicator(&labels, &|j: u64| !tail.contains(j)).map_err(internal)?;
    let a = abramov_check(&recode_psi(&pair), |_, b| b == 1, cfg.k).map_err(|e| CliError::Config(e.to_string()))?;
    let pass = a.discrepancy <= ABRAMOV_TOLERANCE;
    let mut result = serde_json::to_value(&a).map_err(internal)?;
    result["length"] = json!(len);
    result["tolerance"] = json!(ABRAMOV_TOLERANCE);
    Ok(Outcome::new(pass, result))
}

pub fn skew_run(cfg: &RunConfig, input: Option<&Path>, csv: Option<&Path>) -> Result<Outcome, CliError> {
    let signs = match input {
        Some(p) => sign_word(&read_word(p)?),
        None => sign_word(&{
            // Fair signs: symbol 0 (+) or 2 (−).
            let bits = bernoulli_stream(cfg.seed, cfg.steps);
            let symbols: Vec<u8> = bits.iter().map(|b| 2 * b).collect();
            SymbolWord::from_symbols(ShiftModel::ALPHABET, &symbols).map_err(internal)?
        }),
    };
    if signs.len() < cfg.steps {
        return Err(CliError::Config(format!(
            "steps {} exceed the {} available signs",
            cfg.steps,
            signs.len()
        )));
    }
    let sys = SkewSystem::new(cfg.lambda);
    let orbit = skew_orbit(&sys, &signs, cfg.fiber_t0, cfg.steps);
    if let Some(p) = csv {
        write_file(p, orbit_csv(&orbit).as_bytes())?;
    }
    let checkpoints: Vec<usize> = (1..=9).map(|e| 10usize.pow(e)).collect();
    let summary = lyapunov_summary(&orbit.log_derivative, &checkpoints);
    Ok(Outcome::new(
        true,
        json!({ "lambda": cfg.lambda, "steps": cfg.steps, "t0": cfg.fiber_t0, "exponent": summary.exponent, "running": summary.running }),
    ))
}

pub fn flipflop_demo() -> Result<Outcome, CliError> {
    let ells: Vec<Value> = (1..=4)
        .map(|ell| json!({ "ell": ell, "alpha_prime": derived_alpha(&ShiftModel, ell).to_string() }))
        .collect();
    let chosen = choose_repetition(&ShiftModel, 10).map_err(internal)?;
    let double = double_from_flipflop(ShiftModel, 2).map_err(internal)?;
    let disjoint = check_disjoint_classes(&double).is_ok();
    let division = division_of(&double).map_err(internal)?;
    let k1 = division.members(1).len();
    let k0 = division.members(0).len();
    Ok(Outcome::new(
        disjoint,
        json!({
            "repetitions": ells,
            "chosen_repetition": chosen,
            "double": {
                "ell": 2,
                "r": double.step(),
                "alpha_prime": DoublePlaqueSystem::alpha(&double).to_string(),
                "classes_disjoint": disjoint,
                "k0_blocks": k0,
                "k1_blocks": k1,
            },
        }),
    ))
}

pub fn selftest(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scale = cfg.scale()?;
    let (report, timings) = run_selftest(&scale, cfg.profile, cfg.seed);
    Ok(Outcome {
        pass: report.pass,
        result: serde_json::to_value(&report).map_err(internal)?,
        timings: Some(serde_json::to_value(&timings).map_err(internal)?),
    })
}
