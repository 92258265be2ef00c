use super::AtomicResult;
use crate::spatial::{PartitionId, PartitionSet};
use std::collections::{BTreeMap, BTreeSet};

/// Significant partitions joined by shared boundaries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignificanceGraph {
    adjacency: BTreeMap<PartitionId, Vec<PartitionId>>,
}

impl SignificanceGraph {
    pub fn from_adjacency(adjacency: BTreeMap<PartitionId, Vec<PartitionId>>) -> Self {
        let mut adjacency = adjacency;
        for nbrs in adjacency.values_mut() {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        SignificanceGraph { adjacency }
    }

    pub fn vertices(&self) -> impl Iterator<Item = PartitionId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn contains(&self, v: PartitionId) -> bool {
        self.adjacency.contains_key(&v)
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, v: PartitionId) -> &[PartitionId] {
        self.adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components, each sorted, ordered by their smallest vertex.
    pub fn components(&self) -> Vec<Vec<PartitionId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in self.vertices() {
            if !seen.insert(v) {
                continue;
            }
            let mut comp = vec![v];
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if seen.insert(w) {
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Keeps the significant partitions and the adjacency edges among them.
pub fn build_significance_graph(
    atomic: &[AtomicResult],
    partitions: &PartitionSet,
) -> SignificanceGraph {
    let significant: BTreeSet<PartitionId> = atomic
        .iter()
        .filter(|a| a.significant)
        .map(|a| a.partition)
        .collect();
    let adjacency = significant
        .iter()
        .map(|&v| {
            let nbrs = partitions
                .neighbors(v)
                .iter()
                .copied()
                .filter(|u| significant.contains(u))
                .collect();
            (v, nbrs)
        })
        .collect();
    SignificanceGraph { adjacency }
}
