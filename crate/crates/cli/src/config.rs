use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use flipflop_core::scale::Scale;
use flipflop_core::selftest::Profile;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Settings gathered from a flat `key = value` file and command-line
/// flags. Unset keys are `None`; flags win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub values: BTreeMap<String, String>,
}

pub const KEYS: &[&str] = &[
    "factors", "t0", "seed", "length", "k", "tolerance", "upto", "level", "lambda", "steps",
    "fiber_t0", "profile", "threads",
];

impl Overrides {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        debug_assert!(KEYS.contains(&key));
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("invalid value `{v}` for {key}: {e}")))
            })
            .transpose()
    }
}

/// The resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub factors: Vec<u64>,
    pub t0: u64,
    pub seed: u64,
    pub length: Option<u64>,
    pub k: usize,
    pub tolerance: f64,
    pub upto: Option<u64>,
    pub level: Option<usize>,
    pub lambda: f64,
    pub steps: usize,
    pub fiber_t0: f64,
    pub profile: Profile,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            factors: vec![3, 9, 27, 81, 243],
            t0: 3,
            seed: 2024,
            length: None,
            k: 8,
            tolerance: flipflop_core::entropy::DEFAULT_TOLERANCE,
            upto: None,
            level: None,
            lambda: flipflop_core::selftest::SKEW_LAMBDA,
            steps: 100_000,
            fiber_t0: 0.1,
            profile: Profile::Quick,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = Self::default();
        if let Some(f) = o.values.get("factors") {
            c.factors = f
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("invalid factors `{f}`: {e}")))?;
        }
        if let Some(v) = o.get("t0")? {
            c.t0 = v;
        }
        if let Some(v) = o.get("seed")? {
            c.seed = v;
        }
        c.length = o.get("length")?;
        if let Some(v) = o.get("k")? {
            c.k = v;
        }
        if let Some(v) = o.get("tolerance")? {
            c.tolerance = v;
        }
        c.upto = o.get("upto")?;
        c.level = o.get("level")?;
        if let Some(v) = o.get("lambda")? {
            c.lambda = v;
        }
        if let Some(v) = o.get("steps")? {
            c.steps = v;
        }
        if let Some(v) = o.get("fiber_t0")? {
            c.fiber_t0 = v;
        }
        if let Some(p) = o.values.get("profile") {
            c.profile = match p.as_str() {
                "quick" => Profile::Quick,
                "full" => Profile::Full,
                other => return Err(CliError::Config(format!("unknown profile `{other}`"))),
            };
        }
        c.threads = o.get("threads")?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.length == Some(0) {
            return bad("length must be positive");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return bad("tolerance must be a nonnegative number");
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad("lambda must lie in (0, 1)");
        }
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if !(0.0..1.0).contains(&self.fiber_t0) {
            return bad("fiber_t0 must lie in [0, 1)");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        if self.upto == Some(0) {
            return bad("upto must be positive");
        }
        self.scale()?;
        Ok(())
    }

    pub fn scale(&self) -> Result<Scale, CliError> {
        Scale::new(&self.factors, self.t0).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 over the canonical `key=value` lines of the resolved config.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let mut canonical = String::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                canonical.push_str(&format!("{k}={v}\n"));
            }
        }
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let o = Overrides::parse("# run\nseed = 7\nfactors = 3, 9, 27\nk=4 # short\n").unwrap();
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.factors, vec![3, 9, 27]);
        assert_eq!(c.k, 4);
    }

    #[test]
    fn flags_override_file() {
        let mut o = Overrides::parse("seed = 7").unwrap();
        o.set("seed", Some(9));
        assert_eq!(RunConfig::resolve(&o).unwrap().seed, 9);
        o.set::<u64>("seed", None);
        assert_eq!(RunConfig::resolve(&o).unwrap().seed, 9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Overrides::parse("colour = red").is_err());
        assert!(Overrides::parse("seed").is_err());
        assert!(Overrides::parse("seed = 1\nseed = 2").is_err());
        for text in ["length = 0", "seed = x", "lambda = 1.5", "factors = 2,4", "profile = slow"] {
            let o = Overrides::parse(text).unwrap();
            assert!(RunConfig::resolve(&o).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
