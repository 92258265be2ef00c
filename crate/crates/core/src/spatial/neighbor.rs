use super::{FeatureId, FeatureInstance, PartitionId};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("neighbor distance must be a positive finite number, got {0}")]
    BadDistance(f64),
}

/// Instance-level neighbor graph. Node `i` is `instances[i]` of the slice the
/// graph was built from; an edge joins two instances of different feature
/// types within `distance` of each other. Inactive nodes (outside the region
/// filter) have no edges.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    distance: f64,
    features: Vec<FeatureId>,
    active: Vec<bool>,
    adjacency: Vec<Vec<u32>>,
}

impl NeighborGraph {
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, i: usize) -> FeatureId {
        self.features[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// Sorted neighbor indices of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nbrs)| {
            nbrs.iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }
}

/// Builds the neighbor graph with a uniform grid of cell size `d`, so each
/// point only examines the 3x3 block of cells around it. With a region
/// filter, only instances assigned to one of the region's partitions take
/// part; edges never leave the region.
pub fn build_neighbor_graph(
    instances: &[FeatureInstance],
    d: f64,
    region: Option<&BTreeSet<PartitionId>>,
) -> Result<NeighborGraph, GraphError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(GraphError::BadDistance(d));
    }
    let active: Vec<bool> = instances
        .iter()
        .map(|inst| match region {
            None => true,
            Some(r) => inst.partition.is_some_and(|p| r.contains(&p)),
        })
        .collect();

    let cell_of = |inst: &FeatureInstance| -> (i64, i64) {
        (
            (inst.location.x / d).floor() as i64,
            (inst.location.y / d).floor() as i64,
        )
    };
    let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (i, inst) in instances.iter().enumerate() {
        if active[i] {
            cells.entry(cell_of(inst)).or_default().push(i as u32);
        }
    }

    let d2 = d * d;
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); instances.len()];
    for (i, inst) in instances.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let (cx, cy) = cell_of(inst);
        let nbrs = &mut adjacency[i];
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = cells.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    let other = &instances[j as usize];
                    if j as usize != i
                        && other.feature != inst.feature
                        && inst.location.dist2(&other.location) <= d2
                    {
                        nbrs.push(j);
                    }
                }
            }
        }
        nbrs.sort_unstable();
    }

    Ok(NeighborGraph {
        distance: d,
        features: instances.iter().map(|i| i.feature).collect(),
        active,
        adjacency,
    })
}
