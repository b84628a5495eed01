//! Experiment plumbing: specs, reports, the suite runner and on-disk caches.
//!
//! An [`ExperimentSpec`] names a suite and fixes every knob that affects its
//! numbers. [`run`] executes it with randomness drawn from per-check streams
//! derived from the seed, so the same spec on the same version always gives
//! the same [`Report`] apart from its timestamp. [`report_hash`] hashes the
//! canonical JSON with the timestamp removed.

pub mod cache;
pub mod suites;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::growth::CalibrationConstants;
use crate::splittings::BallBounds;
use crate::{Error, Result};

pub use suites::Check;

/// The named suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Growth,
    Farey,
    Bgi,
    Axioms,
    Pairgraph,
    Delta,
    Example43,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Farey, Suite::Growth, Suite::Example43, Suite::Bgi, Suite::Axioms, Suite::Pairgraph, Suite::Delta];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Growth => "growth",
            Suite::Farey => "farey",
            Suite::Bgi => "bgi",
            Suite::Axioms => "axioms",
            Suite::Pairgraph => "pairgraph",
            Suite::Delta => "delta",
            Suite::Example43 => "example43",
        }
    }

    /// The rank a suite runs in by default.
    pub fn default_rank(self) -> usize {
        match self {
            Suite::Farey => 2,
            _ => 3,
        }
    }

    /// Default truncation bounds: sphere size three and separating spheres
    /// up to size four. Templates of the non-separating graph ignore the
    /// separating bound, so every suite can share one cache header.
    pub fn default_bounds(self) -> BallBounds {
        BallBounds::new(3).with_separating(4)
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse { what: "suite", detail: s.to_string(), offset: None })
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub suite: Suite,
    pub rank: usize,
    /// Ball radii compared by the radius-stability checks.
    pub radii: Vec<usize>,
    /// Overrides of named sample counts and sizes; see each suite for keys.
    pub samples: BTreeMap<String, usize>,
    pub seed: u64,
    pub bounds: BallBounds,
    /// Where the JSON report goes.
    pub output: Option<PathBuf>,
    /// Persist measured constants to the cache directory.
    pub calibrate: bool,
}

impl ExperimentSpec {
    pub fn new(suite: Suite) -> Self {
        ExperimentSpec {
            suite,
            rank: suite.default_rank(),
            radii: vec![2, 3],
            samples: BTreeMap::new(),
            seed: 1,
            bounds: suite.default_bounds(),
            output: None,
            calibrate: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sample(mut self, key: &str, value: usize) -> Self {
        self.samples.insert(key.to_string(), value);
        self
    }

    /// A named count, or its default.
    pub fn count(&self, key: &str, default: usize) -> usize {
        self.samples.get(key).copied().unwrap_or(default)
    }

    /// The random stream of one check: SHA-256 of the seed and the tag.
    pub fn rng(&self, tag: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(tag.as_bytes());
        let d = h.finalize();
        let mut b = [0u8; 8];
        b.copy_from_slice(&d[..8]);
        ChaCha8Rng::seed_from_u64(u64::from_le_bytes(b))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        let ranks: &[usize] = match self.suite {
            Suite::Farey => &[2],
            Suite::Growth => &[2, 3],
            _ => &[3],
        };
        if !ranks.contains(&self.rank) {
            return bad(format!("suite {} runs in rank {:?}, got {}", self.suite, ranks, self.rank));
        }
        if self.radii.len() != 2 || self.radii[0] == 0 || self.radii[0] >= self.radii[1] {
            return bad(format!("radii must be two increasing positive values, got {:?}", self.radii));
        }
        if self.bounds.max_size == 0 || !(0.0..=1.0).contains(&self.bounds.unknown_fraction) {
            return bad("bounds must have a positive size and an unknown fraction in [0, 1]".into());
        }
        if let Some((k, _)) = self.samples.iter().find(|(_, &v)| v == 0) {
            return bad(format!("sample count {} must be positive", k));
        }
        Ok(())
    }
}

/// Where and how a report was produced. Only `timestamp` varies between
/// identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub parallel: bool,
    pub timestamp: u64,
}

impl Environment {
    pub fn current() -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Environment { version: env!("CARGO_PKG_VERSION").to_string(), parallel: crate::par::is_parallel(), timestamp }
    }
}

/// The outcome of one run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub spec: ExperimentSpec,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub constants: CalibrationConstants,
    pub environment: Environment,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty-printed JSON with object keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = format!("suite {} (seed {}): {}\n", self.suite, self.spec.seed, verdict(self.pass));
        for c in &self.checks {
            out.push_str(&format!("  {} {}: {}\n", verdict(c.pass), c.name, c.summary));
        }
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// SHA-256 of the canonical report JSON without the timestamp, in hex.
pub fn report_hash(report: &Report) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if let Some(env) = v.get_mut("environment").and_then(Value::as_object_mut) {
        env.remove("timestamp");
    }
    let bytes = serde_json::to_vec(&v)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{:02x}", b)).collect())
}

/// Execute the named suite.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let out = match spec.suite {
        Suite::Farey => suites::farey_suite(spec)?,
        Suite::Growth => suites::growth_suite(spec)?,
        Suite::Example43 => suites::fibonacci_suite(spec)?,
        Suite::Bgi => suites::bgi_suite(spec)?,
        Suite::Axioms => suites::axioms_suite(spec)?,
        Suite::Pairgraph => suites::pairgraph_suite(spec)?,
        Suite::Delta => suites::delta_suite(spec)?,
    };
    let pass = out.checks.iter().all(|c| c.pass);
    Ok(Report {
        suite: spec.suite,
        spec: spec.clone(),
        pass,
        checks: out.checks,
        constants: out.constants,
        environment: Environment::current(),
    })
}

/// Run, write the report to `spec.output` if set, and store the measured
/// constants under `cache_dir` only when `spec.calibrate` is set.
pub fn run_and_persist(spec: &ExperimentSpec, cache_dir: Option<&Path>) -> Result<Report> {
    let report = run(spec)?;
    if let Some(path) = &spec.output {
        fs::write(path, report.to_json()?)?;
    }
    if spec.calibrate {
        let dir = cache_dir.ok_or_else(|| Error::Precondition("calibration needs a cache directory".into()))?;
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("constants-{}.json", spec.suite));
        cache::save_constants(&path, &report.constants, spec.rank, &spec.bounds)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = ExperimentSpec::new(Suite::Farey);
        s.rank = 3;
        assert!(matches!(run(&s), Err(Error::Precondition(_))));
        let mut s = ExperimentSpec::new(Suite::Bgi);
        s.radii = vec![3, 2];
        assert!(s.validate().is_err());
        assert!(ExperimentSpec::new(Suite::Farey).with_sample("model_pairs", 0).validate().is_err());
    }

    #[test]
    fn streams_depend_on_seed_and_tag() {
        use rand::Rng;
        let a = ExperimentSpec::new(Suite::Farey);
        let x: u64 = a.rng("x").gen();
        assert_eq!(x, a.rng("x").gen::<u64>());
        assert_ne!(x, a.rng("y").gen::<u64>());
        assert_ne!(x, a.clone().with_seed(2).rng("x").gen::<u64>());
    }

    fn small_farey() -> ExperimentSpec {
        ExperimentSpec::new(Suite::Farey)
            .with_sample("adjacency_height", 5)
            .with_sample("distance_height", 6)
            .with_sample("model_pairs", 8)
    }

    #[test]
    fn trivial_farey_run_passes() {
        let r = run(&small_farey()).unwrap();
        assert!(r.pass, "{}", r.summary());
        assert_eq!(r.checks.len(), 3);
    }

    #[test]
    fn identical_specs_hash_identically() {
        let s = small_farey();
        let mut a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(report_hash(&a).unwrap(), report_hash(&b).unwrap());
        a.environment.timestamp += 100;
        assert_eq!(report_hash(&a).unwrap(), report_hash(&b).unwrap());
        let c = run(&s.clone().with_seed(9)).unwrap();
        assert_ne!(report_hash(&a).unwrap(), report_hash(&c).unwrap());
    }

    #[test]
    fn constants_are_written_only_when_calibrating() {
        let dir = std::env::temp_dir().join(format!("freesplit-io-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let s = small_farey();
        run_and_persist(&s, Some(&dir)).unwrap();
        assert!(!dir.join("constants-farey.json").exists());
        let mut s = s;
        s.calibrate = true;
        run_and_persist(&s, Some(&dir)).unwrap();
        assert!(dir.join("constants-farey.json").exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
