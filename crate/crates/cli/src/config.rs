//! Experiment configuration files.

use std::path::PathBuf;

use anyhow::{bail, Context};
use mclt_core::convtest::Component;
use mclt_core::levy::{SubordinatorSpec, WeightFunction};
use mclt_core::mclt::ArraySpec;
use mclt_core::skorohod::TripleKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub seed: u64,
    pub samples: usize,
    #[serde(default)]
    pub array: Option<ArraySpec>,
    #[serde(default)]
    pub subordinator: Option<SubordinatorSpec>,
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            lo: -3.0,
            hi: 3.0,
            step: 0.25,
        }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        mclt_core::convtest::lambda_grid(self.lo, self.hi, self.step)
    }
}

/// Expected value of a Monte Carlo mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reference {
    Named(NamedReference),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedReference {
    OneOverN,
}

impl Reference {
    pub fn value(&self, n: u64) -> f64 {
        match self {
            Reference::Named(NamedReference::OneOverN) => 1.0 / n as f64,
            Reference::Value(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `(A, W ∘ A)` for the experiment's subordinator.
    Subordinated,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSource {
    Counterexample,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindebergCase {
    pub alpha: f64,
    pub beta: f64,
    pub expect_holds: bool,
}

fn one() -> f64 {
    1.0
}

fn first_cell() -> usize {
    1
}

fn ecf_threshold() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    CounterexampleM1 {
        n_list: Vec<u32>,
        delta: f64,
        t_end: f64,
    },
    EcfLinnik {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        lambda: LambdaGrid,
        #[serde(default = "ecf_threshold")]
        threshold: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    KsCompensator {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    Fdd {
        n_ladder: Vec<u64>,
        times: Vec<f64>,
        weights: Vec<f64>,
        component: Component,
        target: TargetKind,
        #[serde(default)]
        samples: Option<usize>,
    },
    HypC {
        n_ladder: Vec<u64>,
        t: f64,
        reference: Reference,
        #[serde(default)]
        samples: Option<usize>,
    },
    HypD {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    Lindeberg {
        cases: Vec<LindebergCase>,
        epsilon: f64,
        n_ladder: Vec<u64>,
    },
    Mcleish {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        epsilons: Vec<f64>,
        bound: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    ZeroQv {
        n: u64,
        alpha: f64,
        beta: f64,
        #[serde(default = "first_cell")]
        first: usize,
        #[serde(default)]
        samples: Option<usize>,
    },
    TransformCf {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        weight: WeightFunction,
        #[serde(default)]
        lambda: LambdaGrid,
        #[serde(default = "ecf_threshold")]
        threshold: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    Rescaling {
        #[serde(default)]
        specs: Option<Vec<SubordinatorSpec>>,
        intervals: Vec<[f64; 2]>,
        #[serde(default)]
        samples: Option<usize>,
    },
    Standardization {
        n_ladder: Vec<u64>,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    Lenglart {
        n_ladder: Vec<u64>,
        epsilon: f64,
        eta: f64,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    Tightness {
        source: PathSource,
        kind: TripleKind,
        n_list: Vec<u64>,
        delta_list: Vec<f64>,
        t_end: f64,
        epsilon: f64,
        #[serde(default)]
        samples: Option<usize>,
    },
    JumpDecomposition {
        n_ladder: Vec<u64>,
        #[serde(default)]
        samples: Option<usize>,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::CounterexampleM1 { .. } => "counterexample_m1",
            CheckSpec::EcfLinnik { .. } => "ecf_linnik",
            CheckSpec::KsCompensator { .. } => "ks_compensator",
            CheckSpec::Fdd { .. } => "fdd",
            CheckSpec::HypC { .. } => "hyp_c",
            CheckSpec::HypD { .. } => "hyp_d",
            CheckSpec::Lindeberg { .. } => "lindeberg",
            CheckSpec::Mcleish { .. } => "mcleish",
            CheckSpec::ZeroQv { .. } => "zero_qv",
            CheckSpec::TransformCf { .. } => "transform_cf",
            CheckSpec::Rescaling { .. } => "rescaling",
            CheckSpec::Standardization { .. } => "standardization",
            CheckSpec::Lenglart { .. } => "lenglart",
            CheckSpec::Tightness { .. } => "tightness",
            CheckSpec::JumpDecomposition { .. } => "jump_decomposition",
        }
    }

    fn ladder(&self) -> Option<&[u64]> {
        match self {
            CheckSpec::EcfLinnik { n_ladder, .. }
            | CheckSpec::KsCompensator { n_ladder, .. }
            | CheckSpec::Fdd { n_ladder, .. }
            | CheckSpec::HypC { n_ladder, .. }
            | CheckSpec::HypD { n_ladder, .. }
            | CheckSpec::Lindeberg { n_ladder, .. }
            | CheckSpec::Mcleish { n_ladder, .. }
            | CheckSpec::TransformCf { n_ladder, .. }
            | CheckSpec::Standardization { n_ladder, .. }
            | CheckSpec::Lenglart { n_ladder, .. }
            | CheckSpec::JumpDecomposition { n_ladder, .. } => Some(n_ladder),
            CheckSpec::Tightness { n_list, .. } => Some(n_list),
            _ => None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config; schema errors carry the offending line.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("line {}: {e}", e.line()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.experiment_id.is_empty() || self.experiment_id.contains(['/', '\\']) {
            bail!("experiment_id must be a non-empty file name");
        }
        if self.samples == 0 {
            bail!("samples must be at least 1");
        }
        for (i, c) in self.checks.iter().enumerate() {
            if let Some(ladder) = c.ladder() {
                if ladder.is_empty() {
                    bail!("check {i} ({}): n ladder must not be empty", c.name());
                }
                if ladder.windows(2).any(|w| w[1] <= w[0]) {
                    bail!("check {i} ({}): n ladder must be strictly increasing", c.name());
                }
            }
        }
        Ok(())
    }
}
