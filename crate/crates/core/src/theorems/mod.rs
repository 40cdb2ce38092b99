//! Desk-scale checks of the entropy identities and inequalities.
//!
//! Deterministic checks run on quadrature and closed forms only. Statistical
//! checks compare Monte Carlo tables at each `k` with `3σ` slack and report
//! the worst `k`.

mod exact;
mod report;
mod stat;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::microstates::Sampler;
use crate::rng::mix;
use crate::spectra::SpectralMeasure;

pub use report::{fmt_num, num, CheckReport, Relation, Table, Tier};

/// Identifier of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    Chain,
    MonoY,
    VsJoint,
    MaxBound,
    MonoB,
    Gen,
    Subadd,
    FreeB,
    Cov1,
    CovGen,
    Brown,
    Conj,
    Max,
    FreeCrit,
    Block,
}

impl CheckId {
    pub const ALL: [CheckId; 15] = [
        CheckId::Chain,
        CheckId::MonoY,
        CheckId::VsJoint,
        CheckId::MaxBound,
        CheckId::MonoB,
        CheckId::Gen,
        CheckId::Subadd,
        CheckId::FreeB,
        CheckId::Cov1,
        CheckId::CovGen,
        CheckId::Brown,
        CheckId::Conj,
        CheckId::Max,
        CheckId::FreeCrit,
        CheckId::Block,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            CheckId::Chain => "T-CHAIN",
            CheckId::MonoY => "T-MONO-Y",
            CheckId::VsJoint => "T-VS-JOINT",
            CheckId::MaxBound => "T-MAXBOUND",
            CheckId::MonoB => "T-MONO-B",
            CheckId::Gen => "T-GEN",
            CheckId::Subadd => "T-SUBADD",
            CheckId::FreeB => "T-FREE-B",
            CheckId::Cov1 => "T-COV1",
            CheckId::CovGen => "T-COVGEN",
            CheckId::Brown => "T-BROWN",
            CheckId::Conj => "T-CONJ",
            CheckId::Max => "T-MAX",
            CheckId::FreeCrit => "T-FREECRIT",
            CheckId::Block => "T-BLOCK",
        }
    }

    pub fn tier(self) -> Tier {
        match self {
            CheckId::Cov1 | CheckId::CovGen | CheckId::Brown | CheckId::Conj | CheckId::Max | CheckId::Block => {
                Tier::Deterministic
            }
            _ => Tier::Statistical,
        }
    }

    /// Comma-separated list of every tag.
    pub fn list() -> String {
        Self::ALL.iter().map(|c| c.tag()).collect::<Vec<_>>().join(", ")
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&c| c == self).unwrap() as u64
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.tag() == up)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown check '{s}'; available: {}", Self::list())))
    }
}

/// Settings shared by all checks. Unset `l`, `eps` and `radius` fall back to
/// per-check defaults.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub seed: u64,
    pub k_list: Vec<usize>,
    pub samples: usize,
    pub pool: usize,
    pub sampler: String,
    pub l: Option<usize>,
    pub eps: Option<f64>,
    pub radius: Option<f64>,
    /// `c²` for the maximal-entropy bound and the block identity.
    pub variance: f64,
    /// Law used by the one-variable checks.
    pub measure: SpectralMeasure,
    /// Map for the one-variable change of variables.
    pub map: String,
    /// One-variable polynomial for the Jacobian check.
    pub poly: String,
    /// Matrix size for the Jacobian check.
    pub jacobian_k: usize,
    pub block_n: usize,
    pub block_order: usize,
    pub brown_t: Vec<f64>,
    /// Step of the central difference in the conjugate-variable check.
    pub step: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            k_list: vec![2, 3, 4, 5, 6],
            samples: 20_000,
            pool: 8,
            sampler: "auto".into(),
            l: None,
            eps: None,
            radius: None,
            variance: 1.0,
            measure: SpectralMeasure::Semicircle { variance: 1.0 },
            map: "identity".into(),
            poly: "t1 + 0.2 t1^3".into(),
            jacobian_k: 6,
            block_n: 1,
            block_order: 2,
            brown_t: vec![0.25, 1.0],
            step: 0.01,
        }
    }
}

impl CheckConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub(crate) fn sampler(&self) -> Result<Sampler> {
        self.sampler.parse()
    }

    /// Seed owned by check `id`.
    pub fn seed_for(&self, id: CheckId) -> u64 {
        mix(self.seed, 0x7e57 + id.index())
    }
}

/// Runs one check.
pub fn check(id: CheckId, cfg: &CheckConfig) -> Result<CheckReport> {
    let seed = cfg.seed_for(id);
    let mut r = match id {
        CheckId::Cov1 => exact::cov1(cfg),
        CheckId::CovGen => exact::cov_gen(cfg, seed),
        CheckId::Brown => exact::brown(cfg),
        CheckId::Conj => exact::conj(cfg),
        CheckId::Max => exact::max(),
        CheckId::Block => exact::block(cfg),
        CheckId::Chain => stat::chain(cfg, seed),
        CheckId::MonoY => stat::mono_y(cfg, seed),
        CheckId::VsJoint => stat::vs_joint(cfg, seed),
        CheckId::MaxBound => stat::max_bound(cfg, seed),
        CheckId::MonoB => stat::mono_b(cfg, seed),
        CheckId::Gen => stat::generated(cfg, seed),
        CheckId::Subadd => stat::subadd(cfg, seed),
        CheckId::FreeB => stat::free_b(cfg, seed),
        CheckId::FreeCrit => stat::free_crit(cfg, seed),
    }?;
    r.seed = seed;
    Ok(r)
}

/// Runs several checks in parallel; reports come back in the order given.
pub fn check_all(ids: &[CheckId], cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    ids.par_iter().map(|&id| check(id, cfg)).collect()
}
