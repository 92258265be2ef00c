use super::{AtomicResult, CostCounters, MineError};
use crate::colocation::{pi_of_points, Candidate};
use crate::rational::Rational;
use crate::significance::{significance_test, NullEnsemble, SignificanceOutcome};
use crate::spatial::{Dataset, FeatureInstance, PartitionId, PartitionSet};
use std::collections::{BTreeMap, BTreeSet};

/// Observed data grouped by partition plus the null ensemble, shared by every
/// job of a mining run.
pub struct MiningContext<'a> {
    pub dataset: &'a Dataset,
    pub partitions: &'a PartitionSet,
    pub ensemble: &'a NullEnsemble,
    by_partition: BTreeMap<PartitionId, Vec<FeatureInstance>>,
}

impl<'a> MiningContext<'a> {
    /// `dataset` must already be assigned to `partitions`.
    pub fn new(
        dataset: &'a Dataset,
        partitions: &'a PartitionSet,
        ensemble: &'a NullEnsemble,
    ) -> Self {
        let mut by_partition: BTreeMap<PartitionId, Vec<FeatureInstance>> = BTreeMap::new();
        for inst in &dataset.instances {
            if let Some(p) = inst.partition {
                by_partition.entry(p).or_default().push(*inst);
            }
        }
        MiningContext {
            dataset,
            partitions,
            ensemble,
            by_partition,
        }
    }

    /// Observed instances of the candidate's features inside `region`.
    pub fn observed(
        &self,
        candidate: &Candidate,
        region: &BTreeSet<PartitionId>,
    ) -> Vec<FeatureInstance> {
        region
            .iter()
            .filter_map(|p| self.by_partition.get(p))
            .flatten()
            .filter(|i| candidate.contains(i.feature))
            .copied()
            .collect()
    }

    pub fn count_in(&self, partition: PartitionId, candidate: &Candidate) -> Vec<usize> {
        let pts = self
            .by_partition
            .get(&partition)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        candidate
            .features()
            .iter()
            .map(|f| pts.iter().filter(|i| i.feature == *f).count())
            .collect()
    }

    /// Regional participation index of the observed data.
    pub fn observed_pi(
        &self,
        candidate: &Candidate,
        region: &BTreeSet<PartitionId>,
        d: f64,
    ) -> Result<Rational, MineError> {
        Ok(pi_of_points(&self.observed(candidate, region), candidate, d)?.1)
    }

    /// One observed-pi computation plus one Monte Carlo test of `region`,
    /// both recorded in `counters`.
    pub fn test_region(
        &self,
        candidate: &Candidate,
        region: &BTreeSet<PartitionId>,
        d: f64,
        alpha: Rational,
        counters: &mut CostCounters,
    ) -> Result<SignificanceOutcome, MineError> {
        let pi_obs = self.observed_pi(candidate, region, d)?;
        counters.pi_computations += 1;
        let outcome = significance_test(candidate, region, d, pi_obs, self.ensemble, alpha)?;
        counters.significance_tests += 1;
        Ok(outcome)
    }
}

/// Tests every partition holding at least `min_instances` instances of each
/// candidate feature. Partitions failing that filter are skipped without a
/// test. Results come back in ascending partition id.
pub fn find_atomic_partitions(
    ctx: &MiningContext<'_>,
    candidate: &Candidate,
    d: f64,
    alpha: Rational,
    min_instances: usize,
    counters: &mut CostCounters,
) -> Result<Vec<AtomicResult>, MineError> {
    counters.threshold_history.push(alpha);
    let mut out = Vec::new();
    for pid in ctx.partitions.ids() {
        if ctx
            .count_in(pid, candidate)
            .iter()
            .any(|&c| c < min_instances)
        {
            continue;
        }
        let region: BTreeSet<PartitionId> = [pid].into();
        let outcome = ctx.test_region(candidate, &region, d, alpha, counters)?;
        out.push(AtomicResult {
            partition: pid,
            candidate: candidate.clone(),
            d,
            pi: outcome.pi_obs,
            p_value: outcome.p_value,
            exceed_count: outcome.exceed_count,
            significant: outcome.significant,
        });
    }
    Ok(out)
}
