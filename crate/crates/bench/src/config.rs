//! Benchmark configuration: a flat `key = value` file plus overrides.
//!
//! ```text
//! # lasso-logistic on synthetic data
//! dataset = synthetic
//! n = 1000
//! d = 500
//! density = 0.05
//! loss = logistic
//! lambda1 = 1e-5
//! blocks = 8
//! batch = 8
//! epochs = 30
//! solvers = avrbcd, avrbcd-ac, katyusha, svrg, mrbcd2, mrbcd3
//! seeds = 0..10
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use avrbcd::LossKind;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::synth::SynthSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverId {
    Avrbcd,
    AvrbcdAc,
    Avrbcd1,
    Katyusha,
    Svrg,
    Mrbcd2,
    Mrbcd3,
}

impl SolverId {
    pub const ALL: [SolverId; 7] = [
        Self::Avrbcd,
        Self::AvrbcdAc,
        Self::Avrbcd1,
        Self::Katyusha,
        Self::Svrg,
        Self::Mrbcd2,
        Self::Mrbcd3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Avrbcd => "avrbcd",
            Self::AvrbcdAc => "avrbcd-ac",
            Self::Avrbcd1 => "avrbcd1",
            Self::Katyusha => "katyusha",
            Self::Svrg => "svrg",
            Self::Mrbcd2 => "mrbcd2",
            Self::Mrbcd3 => "mrbcd3",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .iter()
            .copied()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown solver `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synthetic(SynthSpec),
    LibSvm(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Theory,
    Practical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub loss: LossKind,
    pub lambda1: f64,
    pub lambda2: f64,
    pub blocks: usize,
    /// Inner steps per epoch for the block methods; default `n B / batch`.
    pub m: Option<usize>,
    pub batch: usize,
    pub epochs: usize,
    pub solvers: Vec<SolverId>,
    pub seeds: Vec<u64>,
    pub step_mode: StepMode,
    /// AVRBCD practical step `multiplier / (L_max α₂)`.
    pub step_multiplier: f64,
    /// Upper bound `η ≤ step_cap / L_max` for the practical step, if set.
    pub step_cap: Option<f64>,
    /// Force the active-set rule on every AVRBCD-family solver.
    pub active_set: bool,
    /// Reuse the pre-step `μ` after the active-set snapshot step instead of
    /// recomputing it.
    pub active_set_reuse: bool,
    /// SVRG step `svrg_step / L_max`.
    pub svrg_step: f64,
    /// MRBCD step `mrbcd_step / L_max`.
    pub mrbcd_step: f64,
    pub last_snapshot: bool,
    pub ref_tol: f64,
    pub ref_max_epochs: usize,
    pub output: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            name: "bench".into(),
            dataset: DatasetSpec::Synthetic(SynthSpec::default()),
            loss: LossKind::Logistic,
            lambda1: 1e-5,
            lambda2: 0.0,
            blocks: 8,
            m: None,
            batch: 8,
            epochs: 30,
            solvers: vec![SolverId::Avrbcd, SolverId::AvrbcdAc, SolverId::Katyusha, SolverId::Svrg, SolverId::Mrbcd2, SolverId::Mrbcd3],
            seeds: (0..10).collect(),
            step_mode: StepMode::Practical,
            step_multiplier: 4.0,
            step_cap: None,
            active_set: false,
            active_set_reuse: false,
            svrg_step: 0.5,
            mrbcd_step: 4.0,
            last_snapshot: false,
            ref_tol: 1e-12,
            ref_max_epochs: 10_000,
            output: PathBuf::from("bench-out"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.into(),
        msg: e.to_string(),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            msg: format!("expected true/false, got `{v}`"),
        }),
    }
}

/// `0..10`, `1,5,9` or a single seed.
fn parse_seeds(v: &str) -> Result<Vec<u64>, ConfigError> {
    if let Some((a, b)) = v.split_once("..") {
        let a: u64 = parse_num("seeds", a.trim())?;
        let b: u64 = parse_num("seeds", b.trim())?;
        return Ok((a..b).collect());
    }
    v.split(',').map(|s| parse_num("seeds", s.trim())).collect()
}

impl BenchConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: k + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides, then revalidates.
    pub fn with_overrides<'a>(mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<Self, ConfigError> {
        for o in overrides {
            let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("override `{o}` is not key=value")))?;
            self.set(key.trim(), value.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    fn synth_mut(&mut self) -> &mut SynthSpec {
        if !matches!(self.dataset, DatasetSpec::Synthetic(_)) {
            self.dataset = DatasetSpec::Synthetic(SynthSpec::default());
        }
        match &mut self.dataset {
            DatasetSpec::Synthetic(s) => s,
            DatasetSpec::LibSvm(_) => unreachable!(),
        }
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "name" => self.name = v.into(),
            "dataset" => {
                self.dataset = if v == "synthetic" {
                    match &self.dataset {
                        DatasetSpec::Synthetic(s) => DatasetSpec::Synthetic(*s),
                        DatasetSpec::LibSvm(_) => DatasetSpec::Synthetic(SynthSpec::default()),
                    }
                } else {
                    DatasetSpec::LibSvm(PathBuf::from(v))
                }
            }
            "n" => self.synth_mut().n = parse_num(key, v)?,
            "d" => self.synth_mut().d = parse_num(key, v)?,
            "density" => self.synth_mut().density = parse_num(key, v)?,
            "support" => self.synth_mut().support = parse_num(key, v)?,
            "flip" => self.synth_mut().flip = parse_num(key, v)?,
            "decay" => self.synth_mut().decay = parse_num(key, v)?,
            "data_seed" => self.synth_mut().seed = parse_num(key, v)?,
            "loss" => {
                self.loss = match v {
                    "logistic" => LossKind::Logistic,
                    "ridge-logistic" => LossKind::RidgeLogistic { lambda2: self.lambda2 },
                    "squared" => LossKind::SquaredError,
                    _ => {
                        return Err(ConfigError::Value {
                            key: key.into(),
                            msg: format!("unknown loss `{v}`"),
                        })
                    }
                }
            }
            "lambda1" => self.lambda1 = parse_num(key, v)?,
            "lambda2" => {
                self.lambda2 = parse_num(key, v)?;
                if let LossKind::RidgeLogistic { .. } = self.loss {
                    self.loss = LossKind::RidgeLogistic { lambda2: self.lambda2 };
                }
            }
            "blocks" => self.blocks = parse_num(key, v)?,
            "m" => self.m = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "batch" => self.batch = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "solvers" => {
                self.solvers = v
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|msg| ConfigError::Value { key: key.into(), msg })?
            }
            "seeds" => self.seeds = parse_seeds(v)?,
            "step_mode" => {
                self.step_mode = match v {
                    "theory" => StepMode::Theory,
                    "practical" => StepMode::Practical,
                    _ => {
                        return Err(ConfigError::Value {
                            key: key.into(),
                            msg: format!("expected theory or practical, got `{v}`"),
                        })
                    }
                }
            }
            "step_multiplier" => self.step_multiplier = parse_num(key, v)?,
            "step_cap" => self.step_cap = if v == "none" { None } else { Some(parse_num(key, v)?) },
            "active_set" => self.active_set = parse_bool(key, v)?,
            "active_set_reuse" => self.active_set_reuse = parse_bool(key, v)?,
            "svrg_step" => self.svrg_step = parse_num(key, v)?,
            "mrbcd_step" => self.mrbcd_step = parse_num(key, v)?,
            "last_snapshot" => self.last_snapshot = parse_bool(key, v)?,
            "ref_tol" => self.ref_tol = parse_num(key, v)?,
            "ref_max_epochs" => self.ref_max_epochs = parse_num(key, v)?,
            "output" => self.output = PathBuf::from(v),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) {
            return bad("lambda1 and lambda2 must be nonnegative");
        }
        if self.lambda2 > 0.0 && !matches!(self.loss, LossKind::RidgeLogistic { .. }) {
            return bad("lambda2 > 0 requires loss = ridge-logistic");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if self.solvers.is_empty() {
            return bad("solvers must be nonempty");
        }
        if self.blocks == 0 || self.batch == 0 || self.m == Some(0) {
            return bad("blocks, batch and m must be positive");
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            if s.n == 0 || s.d == 0 || !(0.0..=1.0).contains(&s.density) {
                return bad("synthetic data needs n, d > 0 and density in [0, 1]");
            }
        }
        Ok(())
    }

    /// Inner steps per epoch for the block solvers.
    pub fn inner_steps(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| (n * self.blocks / self.batch).max(1))
    }

    /// Canonical `key=value` listing of everything that affects results.
    pub fn canonical(&self) -> String {
        let mut kv = BTreeMap::new();
        match &self.dataset {
            DatasetSpec::Synthetic(s) => {
                kv.insert("dataset", "synthetic".to_string());
                kv.insert("n", s.n.to_string());
                kv.insert("d", s.d.to_string());
                kv.insert("density", s.density.to_string());
                kv.insert("support", s.support.to_string());
                kv.insert("flip", s.flip.to_string());
                kv.insert("decay", s.decay.to_string());
                kv.insert("data_seed", s.seed.to_string());
            }
            DatasetSpec::LibSvm(p) => {
                kv.insert("dataset", p.display().to_string());
            }
        }
        kv.insert("loss", format!("{:?}", self.loss));
        kv.insert("lambda1", self.lambda1.to_string());
        kv.insert("blocks", self.blocks.to_string());
        kv.insert("m", format!("{:?}", self.m));
        kv.insert("batch", self.batch.to_string());
        kv.insert("epochs", self.epochs.to_string());
        kv.insert("solvers", self.solvers.iter().map(|s| s.name()).collect::<Vec<_>>().join(","));
        kv.insert("seeds", format!("{:?}", self.seeds));
        kv.insert("step_mode", format!("{:?}", self.step_mode));
        kv.insert("step_multiplier", self.step_multiplier.to_string());
        kv.insert("step_cap", format!("{:?}", self.step_cap));
        kv.insert("active_set", self.active_set.to_string());
        kv.insert("active_set_reuse", self.active_set_reuse.to_string());
        kv.insert("svrg_step", self.svrg_step.to_string());
        kv.insert("mrbcd_step", self.mrbcd_step.to_string());
        kv.insert("last_snapshot", self.last_snapshot.to_string());
        kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Short digest of [`Self::canonical`].
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.canonical().as_bytes())[..8])
    }

    /// Digest of the problem definition only (data, loss, penalty); keys the
    /// reference-optimum cache.
    pub fn problem_hash(&self) -> String {
        let canon = self.canonical();
        let problem: String = canon
            .lines()
            .filter(|l| ["dataset=", "n=", "d=", "density=", "support=", "flip=", "decay=", "data_seed=", "loss=", "lambda1="].iter().any(|p| l.starts_with(p)))
            .map(|l| format!("{l}\n"))
            .collect();
        hex::encode(&Sha256::digest(format!("{problem}ref_tol={}\n", self.ref_tol).as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example() {
        let cfg = BenchConfig::parse(
            "# comment\nn = 200\nd = 50\nloss = ridge-logistic\nlambda2 = 1e-8\nlambda1=1e-4\nsolvers = avrbcd, svrg\nseeds = 0..3\n",
        )
        .unwrap();
        assert_eq!(cfg.loss, LossKind::RidgeLogistic { lambda2: 1e-8 });
        assert_eq!(cfg.solvers, vec![SolverId::Avrbcd, SolverId::Svrg]);
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.inner_steps(200), 200);
        match cfg.dataset {
            DatasetSpec::Synthetic(s) => assert_eq!((s.n, s.d), (200, 50)),
            _ => panic!(),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(BenchConfig::parse("nonsense"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(BenchConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(BenchConfig::parse("lambda1 = -1").is_err());
        assert!(BenchConfig::parse("epochs = 0").is_err());
        assert!(BenchConfig::parse("seeds = ").is_err());
        assert!(BenchConfig::parse("lambda2 = 0.1").is_err());
        assert!(BenchConfig::parse("solvers = fista").is_err());
    }

    #[test]
    fn overrides_change_hash() {
        let a = BenchConfig::default();
        let b = a.clone().with_overrides(["epochs=5"]).unwrap();
        assert_eq!(b.epochs, 5);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.problem_hash(), b.problem_hash());
        let c = a.clone().with_overrides(["lambda1=0.1"]).unwrap();
        assert_ne!(a.problem_hash(), c.problem_hash());
        assert_eq!(a.hash(), BenchConfig::default().hash());
    }
}
