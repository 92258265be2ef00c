//! Regional colocation miners.
//!
//! Both miners share the atomic phase: every partition with enough instances
//! of each candidate feature gets one Monte Carlo test, and the significant
//! ones form a [`SignificanceGraph`] over partition adjacency. They differ in
//! how a region grows from the highest-pi vertex of each connected component:
//!
//! * [`Method::Ssrcm`] re-tests every union `r_final ∪ {r_g}` against the null
//!   ensemble, costing one participation index and one significance test per
//!   visited vertex.
//! * [`Method::MultComp`] never re-tests. A union of `n + 1` partitions is
//!   accepted when every member's stored atomic p-value is at most
//!   `alpha / (n + 1)` (Bonferroni).
//!
//! Growth visits vertices depth-first with neighbors in ascending partition id
//! order; only accepted vertices are expanded, so every emitted region stays
//! connected.

mod atomic;
mod graph;
mod growth;
mod pipeline;

pub use atomic::{find_atomic_partitions, MiningContext};
pub use graph::{build_significance_graph, SignificanceGraph};
pub use growth::{grow_region_multcomp, grow_region_ssrcm};
pub use pipeline::{
    generate_candidates, mine, mine_with_ensemble, DistanceRange, JobResult, MethodOutcome,
    MinerConfig, MiningRun,
};

use crate::colocation::{Candidate, ColocationError};
use crate::rational::Rational;
use crate::significance::SignificanceError;
use crate::spatial::PartitionId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_MIN_INSTANCES: usize = 3;
pub const DEFAULT_REPLICATES: usize = 99;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MineError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Significance(#[from] SignificanceError),
    #[error(transparent)]
    Colocation(#[from] ColocationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ssrcm,
    #[serde(rename = "multcomp")]
    MultComp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ssrcm => "ssrcm",
            Method::MultComp => "multcomp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ssrcm" => Ok(Method::Ssrcm),
            "multcomp" | "multcomp-rcm" => Ok(Method::MultComp),
            other => Err(format!(
                "unknown method `{other}` (expected ssrcm or multcomp)"
            )),
        }
    }
}

/// Outcome of the atomic test of one partition. `p_value` is reused verbatim
/// by the Bonferroni check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicResult {
    pub partition: PartitionId,
    pub candidate: Candidate,
    pub d: f64,
    pub pi: Rational,
    pub p_value: Rational,
    pub exceed_count: u64,
    pub significant: bool,
}

/// Work performed by one (candidate, distance, method) job.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostCounters {
    pub significance_tests: u64,
    pub pi_computations: u64,
    /// Stored p-value comparisons made by the Bonferroni check.
    pub threshold_checks: u64,
    /// Significance threshold in force at each step: the atomic phase, the
    /// seed of each grown component, then every union attempt.
    pub threshold_history: Vec<Rational>,
}

impl CostCounters {
    pub fn merge(&mut self, other: &CostCounters) {
        self.significance_tests += other.significance_tests;
        self.pi_computations += other.pi_computations;
        self.threshold_checks += other.threshold_checks;
        self.threshold_history
            .extend_from_slice(&other.threshold_history);
    }
}

/// A grown region for one candidate at one distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalPattern {
    pub method: Method,
    pub candidate: Candidate,
    pub d: f64,
    pub region: BTreeSet<PartitionId>,
    /// Atomic results of the region's partitions, ascending partition id.
    pub per_partition: Vec<AtomicResult>,
    /// Participation index of the whole region (SSRCM only).
    pub region_pi: Option<Rational>,
    /// p-value of the last accepted region test (SSRCM only).
    pub region_p_value: Option<Rational>,
    /// Bonferroni threshold the final region satisfies (MultComp only).
    pub final_threshold: Option<Rational>,
    pub n: usize,
    /// Set on the largest pattern of a job.
    pub largest: bool,
    pub warnings: Vec<String>,
}
