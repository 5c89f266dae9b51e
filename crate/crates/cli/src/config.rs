//! Run configuration: built-in defaults, overlaid by an optional JSON file,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use reassembly::compatibility::{load_model, DEFAULT_LEARNERS, DEFAULT_THRESHOLD};
use reassembly::composition::{ComposeConfig, Solver};
use reassembly::pairwise::PairwiseConfig;
use reassembly::pipeline::{Scorer, DEFAULT_IMAGE_SIDE};
use reassembly::shredder::ShredParams;
use reassembly::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Target piece count; when unset, `shred.num_cuts` cuts are made.
    pub pieces: Option<usize>,
    pub image_side: u32,
    pub pixel_noise: f64,
    pub shred: ShredParams,
    pub pairwise: PairwiseConfig,
    /// `oracle`, `oracle:<noise>` or `model:<path>`.
    pub scorer: String,
    pub threshold: f64,
    pub solvers: Vec<Solver>,
    pub compose: ComposeConfig,
    /// Loop-closure tolerance overrides; by default they follow the
    /// puzzle's canvas diagonal.
    pub closure_angle_deg: Option<f64>,
    pub closure_shift_px: Option<f64>,
    pub learners: usize,
    /// Worker threads; all cores when unset.
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            pieces: None,
            image_side: DEFAULT_IMAGE_SIDE,
            pixel_noise: 0.0,
            shred: ShredParams::default(),
            pairwise: PairwiseConfig::default(),
            scorer: "oracle:0".into(),
            threshold: DEFAULT_THRESHOLD,
            solvers: vec![Solver::Hlm],
            compose: ComposeConfig::default(),
            closure_angle_deg: None,
            closure_shift_px: None,
            learners: DEFAULT_LEARNERS,
            workers: None,
            out: None,
        }
    }
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub pieces: Option<usize>,
    pub solver: Option<String>,
    pub scorer: Option<String>,
    pub threshold: Option<f64>,
    pub theta_m: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Recursively overlays `patch` on `base`, rejecting keys `base` lacks.
fn overlay(base: &mut Value, patch: Value, at: &str) -> Result<(), String> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let here = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() => overlay(slot, v, &here)?,
                    Some(slot) => *slot = v,
                    None => return Err(format!("unknown setting `{here}`")),
                }
            }
            Ok(())
        }
        (_, _) => Err(format!("`{at}` must be an object")),
    }
}

pub fn parse_solvers(s: &str) -> Result<Vec<Solver>> {
    if s == "all" {
        return Ok(Solver::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in s.split(',') {
        let solver = Solver::from_str(name.trim())?;
        if !out.contains(&solver) {
            out.push(solver);
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            None => Self::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Format {
                    path: path.into(),
                    msg: format!("cannot read config: {e}"),
                })?;
                let patch: Value = serde_json::from_str(&text).map_err(|e| Error::Format {
                    path: path.into(),
                    msg: e.to_string(),
                })?;
                let mut merged = serde_json::to_value(Self::default())?;
                overlay(&mut merged, patch, "").map_err(|msg| Error::Format { path: path.into(), msg })?;
                serde_json::from_value(merged).map_err(|e| Error::Format {
                    path: path.into(),
                    msg: e.to_string(),
                })?
            }
        };
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.pieces {
            cfg.pieces = Some(v);
        }
        if let Some(v) = &flags.solver {
            cfg.solvers = parse_solvers(v)?;
        }
        if let Some(v) = &flags.scorer {
            cfg.scorer = v.clone();
        }
        if let Some(v) = flags.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = flags.theta_m {
            cfg.compose.theta_m = v;
        }
        if let Some(v) = flags.workers {
            cfg.workers = Some(v);
        }
        if let Some(v) = &flags.out {
            cfg.out = Some(v.clone());
        }
        cfg.compose.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            bail!(Error::Parameter("at least one solver is required".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            bail!(Error::Parameter(format!("threshold {} is outside [0, 1]", self.threshold)));
        }
        if self.workers == Some(0) {
            bail!(Error::Parameter("workers must be at least 1".into()));
        }
        if self.learners == 0 {
            bail!(Error::Parameter("learners must be at least 1".into()));
        }
        if self.pieces == Some(0) {
            bail!(Error::Parameter("pieces must be at least 1".into()));
        }
        self.scorer_kind()?;
        Ok(())
    }

    fn scorer_kind(&self) -> Result<ScorerSpec> {
        let s = self.scorer.as_str();
        if s == "oracle" {
            return Ok(ScorerSpec::Oracle(0.0));
        }
        if let Some(noise) = s.strip_prefix("oracle:") {
            let noise: f64 = noise
                .parse()
                .ok()
                .filter(|n| (0.0..=1.0).contains(n))
                .ok_or_else(|| Error::Parameter(format!("oracle noise in `{s}` must be a number in [0, 1]")))?;
            return Ok(ScorerSpec::Oracle(noise));
        }
        if let Some(path) = s.strip_prefix("model:") {
            return Ok(ScorerSpec::Model(PathBuf::from(path)));
        }
        bail!(Error::Parameter(format!(
            "unknown scorer `{s}` (expected oracle, oracle:<noise> or model:<path>)"
        )))
    }

    /// The scorer, loading its model file if it has one.
    pub fn scorer(&self) -> Result<Scorer> {
        Ok(match self.scorer_kind()? {
            ScorerSpec::Oracle(noise) => Scorer::Oracle { noise },
            ScorerSpec::Model(path) => Scorer::Model(load_model(&path).with_context(|| "loading the scorer model")?),
        })
    }

    pub fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

enum ScorerSpec {
    Oracle(f64),
    Model(PathBuf),
}
