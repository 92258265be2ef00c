use super::{
    build_significance_graph, find_atomic_partitions, grow_region_multcomp, grow_region_ssrcm,
    AtomicResult, CostCounters, Method, MineError, MiningContext, RegionalPattern,
    DEFAULT_MIN_INSTANCES, DEFAULT_REPLICATES,
};
use crate::colocation::Candidate;
use crate::rational::Rational;
use crate::significance::{pcf_up_to, validate_alpha, NullEnsemble, PCF_CLUSTER_THRESHOLD};
use crate::spatial::{Dataset, FeatureId, PartitionId, PartitionSet, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    pub alpha: Rational,
    pub replicates: usize,
    pub seed: u64,
    pub min_instances: usize,
    pub methods: Vec<Method>,
    /// Raise `replicates` so that `alpha / n_max` stays attainable, with
    /// `n_max` the number of partitions.
    pub auto_scale_replicates: bool,
    pub pcf_check: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            alpha: Rational::new(1, 20),
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            min_instances: DEFAULT_MIN_INSTANCES,
            methods: vec![Method::Ssrcm, Method::MultComp],
            auto_scale_replicates: false,
            pcf_check: true,
        }
    }
}

impl MinerConfig {
    /// Replicate count actually used for `n_partitions` partitions.
    pub fn effective_replicates(&self, n_partitions: usize) -> Result<usize, MineError> {
        validate_alpha(self.alpha)?;
        if self.replicates == 0 {
            return Err(MineError::Parameter("replicates must be at least 1".into()));
        }
        let mut r = self.replicates;
        if self.auto_scale_replicates {
            let needed = Rational::new(
                n_partitions.max(1) as u64 * self.alpha.denom(),
                self.alpha.numer(),
            );
            r = r.max(needed.ceil() as usize - 1);
        }
        if self.alpha < Rational::new(1, r as u64 + 1) {
            return Err(MineError::Parameter(format!(
                "alpha {} is below the smallest attainable p-value 1/{}; increase replicates",
                self.alpha,
                r + 1
            )));
        }
        Ok(r)
    }
}

/// Distances `lb, lb + step, ..., <= ub`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRange {
    pub lb: f64,
    pub ub: f64,
    pub step: f64,
}

impl DistanceRange {
    pub const DEFAULT_STEP: f64 = 10.0;

    pub fn new(lb: f64, ub: f64, step: f64) -> Result<Self, MineError> {
        let r = DistanceRange { lb, ub, step };
        r.validate()?;
        Ok(r)
    }

    pub fn single(d: f64) -> Result<Self, MineError> {
        Self::new(d, d, Self::DEFAULT_STEP)
    }

    pub fn validate(&self) -> Result<(), MineError> {
        let ok = self.lb.is_finite() && self.ub.is_finite() && self.step.is_finite();
        if !ok || self.lb <= 0.0 || self.ub < self.lb || self.step <= 0.0 {
            return Err(MineError::Parameter(format!(
                "distance range needs 0 < lb <= ub and step > 0, got lb={} ub={} step={}",
                self.lb, self.ub, self.step
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.ub - self.lb) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.lb + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub counters: CostCounters,
    /// Largest first; ties broken by lowest partition id.
    pub patterns: Vec<RegionalPattern>,
    pub warnings: Vec<String>,
}

impl MethodOutcome {
    pub fn largest(&self) -> Option<&RegionalPattern> {
        self.patterns.iter().find(|p| p.largest)
    }
}

/// Results of one (candidate, distance) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub candidate: Candidate,
    pub d: f64,
    pub atomic: Vec<AtomicResult>,
    pub outcomes: Vec<MethodOutcome>,
    pub warnings: Vec<String>,
}

impl JobResult {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningRun {
    pub alpha: Rational,
    pub replicates: usize,
    pub seed: u64,
    pub jobs: Vec<JobResult>,
}

impl MiningRun {
    /// Counters of `method` summed over all jobs.
    pub fn total_counters(&self, method: Method) -> CostCounters {
        let mut total = CostCounters::default();
        for o in self.jobs.iter().filter_map(|j| j.outcome(method)) {
            total.merge(&o.counters);
        }
        total
    }
}

/// Pairs (and triples when `max_size >= 3`) of features such that at least
/// one partition holds `min_instances` instances of every member.
pub fn generate_candidates(
    dataset: &Dataset,
    max_size: usize,
    min_instances: usize,
) -> Vec<Candidate> {
    let counts = dataset.partition_feature_counts();
    let mut per_partition: BTreeMap<PartitionId, BTreeSet<FeatureId>> = BTreeMap::new();
    for (&(p, f), &c) in &counts {
        if c >= min_instances {
            per_partition.entry(p).or_default().insert(f);
        }
    }
    let mut out = BTreeSet::new();
    for feats in per_partition.values() {
        let v: Vec<FeatureId> = feats.iter().copied().collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                out.insert(vec![v[i], v[j]]);
                if max_size >= 3 {
                    for k in j + 1..v.len() {
                        out.insert(vec![v[i], v[j], v[k]]);
                    }
                }
            }
        }
    }
    out.into_iter()
        .map(|f| Candidate::new(f).expect("distinct sorted features"))
        .collect()
}

/// Simulates the null ensemble for the features of `candidates` and mines
/// every (candidate, distance) pair. `dataset` must already be assigned to
/// `partitions`.
pub fn mine(
    dataset: &Dataset,
    partitions: &PartitionSet,
    candidates: &[Candidate],
    distances: &[f64],
    config: &MinerConfig,
) -> Result<MiningRun, MineError> {
    let replicates = config.effective_replicates(partitions.len())?;
    let features: BTreeSet<FeatureId> = candidates
        .iter()
        .flat_map(|c| c.features().iter().copied())
        .collect();
    let ensemble =
        NullEnsemble::generate_for(dataset, partitions, replicates, config.seed, &features)?;
    mine_with_ensemble(
        dataset, partitions, &ensemble, candidates, distances, config,
    )
}

/// As [`mine`], with a prebuilt ensemble whose replicate count must match the
/// configuration.
pub fn mine_with_ensemble(
    dataset: &Dataset,
    partitions: &PartitionSet,
    ensemble: &NullEnsemble,
    candidates: &[Candidate],
    distances: &[f64],
    config: &MinerConfig,
) -> Result<MiningRun, MineError> {
    let replicates = config.effective_replicates(partitions.len())?;
    if ensemble.replicates() != replicates {
        return Err(MineError::Parameter(format!(
            "null ensemble holds {} replicates, configuration needs {replicates}",
            ensemble.replicates()
        )));
    }
    if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(MineError::Parameter(format!(
            "distance must be positive, got {d}"
        )));
    }
    if let Some(f) = candidates
        .iter()
        .flat_map(|c| c.features())
        .find(|f| !ensemble.features().contains(f))
    {
        return Err(MineError::Parameter(format!(
            "null ensemble does not simulate feature {}",
            dataset.feature_name(*f)
        )));
    }
    let ctx = MiningContext::new(dataset, partitions, ensemble);
    let jobs: Vec<(&Candidate, f64)> = candidates
        .iter()
        .flat_map(|c| distances.iter().map(move |&d| (c, d)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(c, d)| run_job(&ctx, c, d, config, replicates))
        .collect::<Result<Vec<_>, MineError>>()?;
    Ok(MiningRun {
        alpha: config.alpha,
        replicates,
        seed: ensemble.seed(),
        jobs: results,
    })
}

fn run_job(
    ctx: &MiningContext<'_>,
    candidate: &Candidate,
    d: f64,
    config: &MinerConfig,
    replicates: usize,
) -> Result<JobResult, MineError> {
    let mut base = CostCounters::default();
    let atomic = find_atomic_partitions(
        ctx,
        candidate,
        d,
        config.alpha,
        config.min_instances,
        &mut base,
    )?;
    let graph = build_significance_graph(&atomic, ctx.partitions);
    let by_id: BTreeMap<PartitionId, AtomicResult> =
        atomic.iter().map(|a| (a.partition, a.clone())).collect();
    let components = graph.components();

    let mut outcomes = Vec::new();
    for &method in &config.methods {
        let mut counters = base.clone();
        let mut patterns = Vec::new();
        for comp in &components {
            let p = match method {
                Method::Ssrcm => grow_region_ssrcm(
                    ctx,
                    candidate,
                    d,
                    &graph,
                    comp,
                    &by_id,
                    config.alpha,
                    &mut counters,
                )?,
                Method::MultComp => grow_region_multcomp(
                    candidate,
                    d,
                    &graph,
                    comp,
                    &by_id,
                    config.alpha,
                    replicates,
                    &mut counters,
                )?,
            };
            patterns.push(p);
        }
        patterns.sort_by(|a, b| {
            b.n.cmp(&a.n)
                .then_with(|| a.region.first().cmp(&b.region.first()))
        });
        if let Some(first) = patterns.first_mut() {
            first.largest = true;
        }
        let warnings = patterns
            .iter()
            .flat_map(|p| p.warnings.iter().cloned())
            .collect();
        outcomes.push(MethodOutcome {
            method,
            counters,
            patterns,
            warnings,
        });
    }

    let warnings = if config.pcf_check {
        clustering_warnings(ctx, candidate, d, &atomic)
    } else {
        Vec::new()
    };
    Ok(JobResult {
        candidate: candidate.clone(),
        d,
        atomic,
        outcomes,
        warnings,
    })
}

/// Flags candidate features whose observed pattern inside a tested partition
/// looks clustered at distance `d`, which undermines the CSR null.
fn clustering_warnings(
    ctx: &MiningContext<'_>,
    candidate: &Candidate,
    d: f64,
    atomic: &[AtomicResult],
) -> Vec<String> {
    let mut out = Vec::new();
    for a in atomic {
        let part = ctx.partitions.get(a.partition);
        let area = part.shape.area();
        let region: BTreeSet<PartitionId> = [a.partition].into();
        let pts = ctx.observed(candidate, &region);
        for &f in candidate.features() {
            let locs: Vec<Point> = pts
                .iter()
                .filter(|i| i.feature == f)
                .map(|i| i.location)
                .collect();
            if let Ok(g) = pcf_up_to(&locs, area, d) {
                if g > PCF_CLUSTER_THRESHOLD {
                    out.push(format!(
                        "feature {} in partition {} looks clustered at d={d} (pcf {g:.3} > {PCF_CLUSTER_THRESHOLD}); CSR null may be inappropriate",
                        ctx.dataset.feature_name(f),
                        part.label
                    ));
                }
            }
        }
    }
    out
}
