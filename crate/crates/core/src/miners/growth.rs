use super::{
    AtomicResult, CostCounters, Method, MineError, MiningContext, RegionalPattern,
    SignificanceGraph,
};
use crate::colocation::Candidate;
use crate::rational::Rational;
use crate::spatial::PartitionId;
use std::collections::{BTreeMap, BTreeSet};

enum Visit {
    Accepted,
    Rejected,
    Halt,
}

/// Depth-first walk from `start`. Each vertex is offered to `visit` once;
/// only accepted vertices have their neighbors explored.
fn traverse<E>(
    graph: &SignificanceGraph,
    start: PartitionId,
    mut visit: impl FnMut(PartitionId) -> Result<Visit, E>,
) -> Result<(), E> {
    let mut seen: BTreeSet<PartitionId> = [start].into();
    let mut stack: Vec<(PartitionId, usize)> = vec![(start, 0)];
    while let Some(top) = stack.last_mut() {
        let (v, k) = *top;
        let nbrs = graph.neighbors(v);
        if k >= nbrs.len() {
            stack.pop();
            continue;
        }
        top.1 += 1;
        let u = nbrs[k];
        if !seen.insert(u) {
            continue;
        }
        match visit(u)? {
            Visit::Accepted => stack.push((u, 0)),
            Visit::Rejected => {}
            Visit::Halt => return Ok(()),
        }
    }
    Ok(())
}

/// Vertex of `component` with the highest atomic pi; ties go to the lowest id.
fn start_vertex(
    component: &[PartitionId],
    atomic: &BTreeMap<PartitionId, AtomicResult>,
) -> PartitionId {
    let mut best = component[0];
    for &v in &component[1..] {
        if atomic[&v].pi > atomic[&best].pi {
            best = v;
        }
    }
    best
}

fn pattern(
    method: Method,
    candidate: &Candidate,
    d: f64,
    region: BTreeSet<PartitionId>,
    atomic: &BTreeMap<PartitionId, AtomicResult>,
) -> RegionalPattern {
    let per_partition = region.iter().map(|p| atomic[p].clone()).collect();
    RegionalPattern {
        method,
        candidate: candidate.clone(),
        d,
        n: region.len(),
        region,
        per_partition,
        region_pi: None,
        region_p_value: None,
        final_threshold: None,
        largest: false,
        warnings: Vec::new(),
    }
}

fn check_component(
    component: &[PartitionId],
    atomic: &BTreeMap<PartitionId, AtomicResult>,
) -> Result<(), MineError> {
    if component.is_empty() {
        return Err(MineError::Parameter("empty component".into()));
    }
    if let Some(p) = component.iter().find(|p| !atomic.contains_key(p)) {
        return Err(MineError::Parameter(format!(
            "partition {p} has no atomic result"
        )));
    }
    Ok(())
}

/// Grows one region from `component` by re-testing each union against the
/// null ensemble. A component with more than one vertex first re-validates
/// its start vertex, then offers each reachable vertex in DFS order; rejected
/// vertices are skipped and the walk continues.
#[allow(clippy::too_many_arguments)]
pub fn grow_region_ssrcm(
    ctx: &MiningContext<'_>,
    candidate: &Candidate,
    d: f64,
    graph: &SignificanceGraph,
    component: &[PartitionId],
    atomic: &BTreeMap<PartitionId, AtomicResult>,
    alpha: Rational,
    counters: &mut CostCounters,
) -> Result<RegionalPattern, MineError> {
    check_component(component, atomic)?;
    let start = start_vertex(component, atomic);
    let mut region: BTreeSet<PartitionId> = [start].into();
    let mut region_pi = atomic[&start].pi;
    let mut region_p = atomic[&start].p_value;

    if component.len() > 1 {
        counters.threshold_history.push(alpha);
        let seed = ctx.test_region(candidate, &region, d, alpha, counters)?;
        region_pi = seed.pi_obs;
        region_p = seed.p_value;
        traverse(graph, start, |u| -> Result<Visit, MineError> {
            let mut trial = region.clone();
            trial.insert(u);
            counters.threshold_history.push(alpha);
            let outcome = ctx.test_region(candidate, &trial, d, alpha, counters)?;
            if outcome.significant {
                region = trial;
                region_pi = outcome.pi_obs;
                region_p = outcome.p_value;
                Ok(Visit::Accepted)
            } else {
                Ok(Visit::Rejected)
            }
        })?;
    }

    let mut out = pattern(Method::Ssrcm, candidate, d, region, atomic);
    out.region_pi = Some(region_pi);
    out.region_p_value = Some(region_p);
    Ok(out)
}

/// Grows one region from `component` using stored atomic p-values only. A
/// union of `n + 1` partitions is accepted when each member's p-value is at
/// most `alpha / (n + 1)`. Growth stops once that threshold would fall below
/// the smallest attainable p-value `1 / (replicates + 1)`.
pub fn grow_region_multcomp(
    candidate: &Candidate,
    d: f64,
    graph: &SignificanceGraph,
    component: &[PartitionId],
    atomic: &BTreeMap<PartitionId, AtomicResult>,
    alpha: Rational,
    replicates: usize,
    counters: &mut CostCounters,
) -> Result<RegionalPattern, MineError> {
    check_component(component, atomic)?;
    let start = start_vertex(component, atomic);
    let mut region: BTreeSet<PartitionId> = [start].into();
    let mut threshold = alpha;
    let floor = Rational::new(1, replicates as u64 + 1);
    let mut warnings = Vec::new();

    if component.len() > 1 {
        counters.threshold_history.push(alpha);
        counters.threshold_checks += 1;
        traverse(graph, start, |u| {
            let next = alpha.div_int(region.len() as u64 + 1);
            if next < floor {
                warnings.push(format!(
                    "p-value granularity exhausted: threshold {next} is below 1/{} at region size {}",
                    replicates + 1,
                    region.len() + 1
                ));
                return Ok::<_, MineError>(Visit::Halt);
            }
            counters.threshold_history.push(next);
            let mut trial = region.clone();
            trial.insert(u);
            let mut passed = true;
            for p in &trial {
                counters.threshold_checks += 1;
                if atomic[p].p_value > next {
                    passed = false;
                    break;
                }
            }
            if passed {
                region = trial;
                threshold = next;
                Ok(Visit::Accepted)
            } else {
                Ok(Visit::Rejected)
            }
        })?;
    }

    let mut out = pattern(Method::MultComp, candidate, d, region, atomic);
    out.final_threshold = Some(threshold);
    out.warnings = warnings;
    Ok(out)
}
