use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "SPEED")]
    Speed,
    #[serde(rename = "IDENTITY_31")]
    Identity,
    #[serde(rename = "REGEN_TAIL")]
    RegenTail,
    #[serde(rename = "LIMIT_T")]
    LimitT,
    #[serde(rename = "LIMIT_X")]
    LimitX,
    #[serde(rename = "CRITGW")]
    Critgw,
    #[serde(rename = "PERPETUITY")]
    Perpetuity,
}

impl ExperimentKind {
    /// Experiment id folded into every random stream of the run.
    pub fn stream_id(self) -> u64 {
        match self {
            ExperimentKind::Speed => 1,
            ExperimentKind::Identity => 2,
            ExperimentKind::RegenTail => 3,
            ExperimentKind::LimitT => 4,
            ExperimentKind::LimitX => 5,
            ExperimentKind::Critgw => 6,
            ExperimentKind::Perpetuity => 7,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritgwCheck {
    #[default]
    All,
    Moments,
    Lt,
    Theta,
    Tail,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Maximal KS distance for limit checks.
    pub ks: Option<f64>,
    /// Minimal KS p-value for equality-in-law checks.
    pub pvalue: Option<f64>,
    /// Allowed absolute error of a Hill index.
    pub hill: Option<f64>,
    /// Standard errors allowed between a Monte Carlo mean and its target.
    pub se: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    /// JSON lines, one record per replica.
    pub raw: Option<PathBuf>,
    pub qq: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Required by every kind except CRITGW.
    #[serde(default)]
    pub spec: Option<EnvSpec>,
    pub seed: u64,
    pub replicas: usize,
    /// Sites for LIMIT_T, steps for SPEED and LIMIT_X, generations for CRITGW.
    #[serde(default)]
    pub n: Option<u64>,
    /// Increasing sizes run along the same trajectories; the last one is `n`.
    #[serde(default)]
    pub ladder: Option<Vec<u64>>,
    /// IDENTITY_31: blocks on the walk side.
    #[serde(default)]
    pub n_blocks: Option<u64>,
    /// IDENTITY_31: blocks on the branching side, defaults to `n_blocks`.
    #[serde(default)]
    pub n_blocks_branching: Option<u64>,
    /// Regeneration cycles used to estimate norming constants.
    #[serde(default)]
    pub cycles: Option<usize>,
    /// CRITGW: which family of checks.
    #[serde(default)]
    pub check: CritgwCheck,
    /// PERPETUITY truncation tolerance.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, spec: Option<EnvSpec>, seed: u64, replicas: usize) -> Self {
        ExperimentConfig {
            kind,
            spec,
            seed,
            replicas,
            n: None,
            ladder: None,
            n_blocks: None,
            n_blocks_branching: None,
            cycles: None,
            check: CritgwCheck::All,
            eps: None,
            budget: None,
            workers: 1,
            tolerance: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::InvalidParam(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::InvalidParam("replicas must be >= 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidParam("workers must be >= 1".into()));
        }
        let needs_spec = self.kind != ExperimentKind::Critgw;
        if needs_spec && self.spec.is_none() {
            return Err(Error::InvalidParam(format!("{:?} needs an environment spec", self.kind)));
        }
        match self.kind {
            ExperimentKind::Identity if self.n_blocks.is_none() => {
                Err(Error::InvalidParam("IDENTITY_31 needs n_blocks".into()))
            }
            ExperimentKind::Speed | ExperimentKind::LimitT | ExperimentKind::LimitX
                if self.n.is_none() && self.ladder.is_none() =>
            {
                Err(Error::InvalidParam(format!("{:?} needs n or ladder", self.kind)))
            }
            _ => Ok(()),
        }?;
        if let Some(l) = &self.ladder {
            if l.is_empty() || l.windows(2).any(|w| w[0] >= w[1]) || l[0] < 1 {
                return Err(Error::InvalidParam("ladder must be nonempty, positive and increasing".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn env(&self) -> Result<&EnvSpec> {
        self.spec.as_ref().ok_or_else(|| Error::InvalidParam("missing environment spec".into()))
    }

    /// The sizes to run, ending with the headline size.
    pub fn sizes(&self) -> Vec<u64> {
        match (&self.ladder, self.n) {
            (Some(l), Some(n)) if *l.last().expect("validated") != n => {
                let mut v: Vec<u64> = l.iter().copied().filter(|x| *x < n).collect();
                v.push(n);
                v
            }
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        }
    }
}
