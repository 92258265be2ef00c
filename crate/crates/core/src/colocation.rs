//! Colocation candidates, clique enumeration, participation ratios and
//! participation indices (global and regional).

use crate::rational::Rational;
use crate::spatial::{
    build_neighbor_graph, FeatureId, FeatureInstance, GraphError, NeighborGraph, PartitionId,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ColocationError {
    #[error("candidate must have 2 or 3 distinct features, got {0}")]
    BadCandidateSize(usize),
    #[error("candidate features must be distinct")]
    DuplicateFeature,
    #[error("feature {0} is not part of the candidate")]
    NotInCandidate(FeatureId),
    #[error("feature {0} has no instances in scope; participation ratio undefined")]
    UndefinedRatio(FeatureId),
    #[error("no candidate feature has instances in scope")]
    EmptyScope,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Sorted set of two or three distinct feature ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate(Vec<FeatureId>);

impl Candidate {
    pub fn new(features: impl IntoIterator<Item = FeatureId>) -> Result<Self, ColocationError> {
        let mut fs: Vec<FeatureId> = features.into_iter().collect();
        let n = fs.len();
        fs.sort_unstable();
        fs.dedup();
        if fs.len() != n {
            return Err(ColocationError::DuplicateFeature);
        }
        if !(2..=3).contains(&n) {
            return Err(ColocationError::BadCandidateSize(n));
        }
        Ok(Candidate(fs))
    }

    pub fn features(&self) -> &[FeatureId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: FeatureId) -> bool {
        self.0.binary_search(&f).is_ok()
    }

    pub fn position(&self, f: FeatureId) -> Option<usize> {
        self.0.binary_search(&f).ok()
    }

    pub fn is_subset_of(&self, other: &Candidate) -> bool {
        self.0.iter().all(|f| other.contains(*f))
    }
}

/// One instance per candidate feature, in candidate feature order, pairwise
/// joined in the neighbor graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clique {
    pub members: Vec<usize>,
}

/// All cliques of the candidate in `graph`, in lexicographic member order.
/// Size-3 cliques are found by edge join: for every (f0, f1) edge the two
/// endpoint neighbor lists are intersected on f2.
pub fn enumerate_cliques(candidate: &Candidate, graph: &NeighborGraph) -> Vec<Clique> {
    let fs = candidate.features();
    let mut out = Vec::new();
    for i in 0..graph.len() {
        if graph.feature(i) != fs[0] || !graph.is_active(i) {
            continue;
        }
        let ni = graph.neighbors(i);
        for &j in ni {
            let j = j as usize;
            if graph.feature(j) != fs[1] {
                continue;
            }
            if fs.len() == 2 {
                out.push(Clique {
                    members: vec![i, j],
                });
                continue;
            }
            let nj = graph.neighbors(j);
            let (mut a, mut b) = (0, 0);
            while a < ni.len() && b < nj.len() {
                match ni[a].cmp(&nj[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        let k = ni[a] as usize;
                        if graph.feature(k) == fs[2] {
                            out.push(Clique {
                                members: vec![i, j, k],
                            });
                        }
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
    }
    out
}

/// Distinct instances of `feature` appearing in at least one clique, over the
/// number of instances of `feature` in scope.
pub fn participation_ratio(
    feature: FeatureId,
    candidate: &Candidate,
    cliques: &[Clique],
    instance_count: usize,
) -> Result<Rational, ColocationError> {
    let col = candidate
        .position(feature)
        .ok_or(ColocationError::NotInCandidate(feature))?;
    if instance_count == 0 {
        return Err(ColocationError::UndefinedRatio(feature));
    }
    let participating: BTreeSet<usize> = cliques.iter().map(|c| c.members[col]).collect();
    Ok(Rational::new(
        participating.len() as u64,
        instance_count as u64,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRatio {
    pub feature: FeatureId,
    pub participating: u64,
    /// Instances of the feature in scope. Zero marks an absent feature.
    pub total: u64,
}

impl FeatureRatio {
    pub fn ratio(&self) -> Option<Rational> {
        (self.total > 0).then(|| Rational::new(self.participating, self.total))
    }

    pub fn is_absent(&self) -> bool {
        self.total == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiResult {
    pub candidate: Candidate,
    pub region: Option<BTreeSet<PartitionId>>,
    pub per_feature: Vec<FeatureRatio>,
    pub pi: Rational,
}

#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    StudyArea,
    Region(&'a BTreeSet<PartitionId>),
}

impl Scope<'_> {
    fn includes(&self, inst: &FeatureInstance) -> bool {
        match self {
            Scope::StudyArea => true,
            Scope::Region(r) => inst.partition.is_some_and(|p| r.contains(&p)),
        }
    }
}

/// Participation index of `candidate` over `scope`. Only instances inside the
/// scope count, in both numerators and denominators, and cliques never reach
/// outside it. A candidate feature with no instances in scope forces `pi = 0`.
pub fn participation_index(
    instances: &[FeatureInstance],
    candidate: &Candidate,
    scope: Scope<'_>,
    d: f64,
) -> Result<PiResult, ColocationError> {
    let local: Vec<FeatureInstance> = instances
        .iter()
        .filter(|inst| candidate.contains(inst.feature) && scope.includes(inst))
        .copied()
        .collect();
    let (per_feature, pi) = pi_of_points(&local, candidate, d)?;
    if per_feature.iter().all(FeatureRatio::is_absent) {
        return Err(ColocationError::EmptyScope);
    }
    Ok(PiResult {
        candidate: candidate.clone(),
        region: match scope {
            Scope::StudyArea => None,
            Scope::Region(r) => Some(r.clone()),
        },
        per_feature,
        pi,
    })
}

/// Participation index over every instance in `points` (no scope filtering).
/// Returns zero when any candidate feature is missing, including the empty set.
pub fn pi_of_points(
    points: &[FeatureInstance],
    candidate: &Candidate,
    d: f64,
) -> Result<(Vec<FeatureRatio>, Rational), ColocationError> {
    let fs = candidate.features();
    let mut totals = vec![0u64; fs.len()];
    for p in points {
        if let Some(k) = candidate.position(p.feature) {
            totals[k] += 1;
        }
    }
    let graph = build_neighbor_graph(points, d, None)?;
    let mut seen = vec![vec![false; points.len()]; fs.len()];
    if totals.iter().all(|&t| t > 0) {
        for clique in enumerate_cliques(candidate, &graph) {
            for (k, &m) in clique.members.iter().enumerate() {
                seen[k][m] = true;
            }
        }
    }
    let per_feature: Vec<FeatureRatio> = fs
        .iter()
        .enumerate()
        .map(|(k, &f)| FeatureRatio {
            feature: f,
            participating: seen[k].iter().filter(|&&s| s).count() as u64,
            total: totals[k],
        })
        .collect();
    let pi = per_feature
        .iter()
        .map(|r| r.ratio().unwrap_or(Rational::ZERO))
        .min()
        .unwrap_or(Rational::ZERO);
    Ok((per_feature, pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Point;

    fn inst(f: u32, x: f64, y: f64) -> FeatureInstance {
        FeatureInstance::new(FeatureId(f), Point::new(x, y))
    }

    #[test]
    fn candidate_validation() {
        assert!(Candidate::new([FeatureId(0)]).is_err());
        assert!(Candidate::new([FeatureId(0), FeatureId(0)]).is_err());
        assert!(Candidate::new([FeatureId(0), FeatureId(1), FeatureId(2), FeatureId(3)]).is_err());
        let c = Candidate::new([FeatureId(2), FeatureId(0)]).unwrap();
        assert_eq!(c.features(), &[FeatureId(0), FeatureId(2)]);
    }

    #[test]
    fn empty_graph_has_no_cliques() {
        let g = build_neighbor_graph(&[], 1.0, None).unwrap();
        let c = Candidate::new([FeatureId(0), FeatureId(1), FeatureId(2)]).unwrap();
        assert!(enumerate_cliques(&c, &g).is_empty());
    }

    #[test]
    fn triangle_requires_all_three_edges() {
        let pts = [
            inst(0, 0.0, 0.0),
            inst(1, 1.0, 0.0),
            inst(2, 0.5, 0.8),
            inst(2, 5.0, 0.0),
        ];
        let g = build_neighbor_graph(&pts, 1.5, None).unwrap();
        let c = Candidate::new([FeatureId(0), FeatureId(1), FeatureId(2)]).unwrap();
        let cliques = enumerate_cliques(&c, &g);
        assert_eq!(
            cliques,
            vec![Clique {
                members: vec![0, 1, 2]
            }]
        );
    }

    #[test]
    fn ratio_without_cliques_is_zero() {
        let c = Candidate::new([FeatureId(0), FeatureId(1)]).unwrap();
        assert_eq!(
            participation_ratio(FeatureId(0), &c, &[], 5).unwrap(),
            Rational::new(0, 5)
        );
        assert_eq!(
            participation_ratio(FeatureId(0), &c, &[], 0),
            Err(ColocationError::UndefinedRatio(FeatureId(0)))
        );
        assert_eq!(
            participation_ratio(FeatureId(7), &c, &[], 3),
            Err(ColocationError::NotInCandidate(FeatureId(7)))
        );
    }

    #[test]
    fn absent_feature_gives_zero_pi() {
        let c = Candidate::new([FeatureId(0), FeatureId(1)]).unwrap();
        let r = participation_index(&[inst(0, 0.0, 0.0)], &c, Scope::StudyArea, 1.0).unwrap();
        assert_eq!(r.pi, Rational::ZERO);
        assert!(r.per_feature[1].is_absent());
        assert_eq!(
            participation_index(&[inst(2, 0.0, 0.0)], &c, Scope::StudyArea, 1.0).unwrap_err(),
            ColocationError::EmptyScope
        );
    }

    #[test]
    fn region_with_no_cliques_has_zero_pi() {
        let c = Candidate::new([FeatureId(0), FeatureId(1)]).unwrap();
        let pts = [
            inst(0, 0.0, 0.0).in_partition(PartitionId(0)),
            inst(1, 100.0, 0.0).in_partition(PartitionId(0)),
        ];
        let region: BTreeSet<_> = [PartitionId(0)].into();
        let r = participation_index(&pts, &c, Scope::Region(&region), 1.0).unwrap();
        assert_eq!(r.pi, Rational::ZERO);
    }
}
