//! Feature instances, polygon partitions and instance-level neighbor graphs.

pub mod geometry;
mod ingest;
mod neighbor;
mod partition;

pub use geometry::{BBox, Containment, Point, Polygon, Ring, Shape};
pub use ingest::{
    load_instances, load_partitions, parse_partitions, read_instances, ColumnSchema, CoordMode,
    IngestError, Projection, RowError,
};
pub use neighbor::{build_neighbor_graph, GraphError, NeighborGraph};
pub use partition::{Partition, PartitionSet, DEFAULT_ADJACENCY_TOLERANCE};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartitionId(pub u32);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl fmt::Display for PartitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureType {
    pub id: FeatureId,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureInstance {
    pub feature: FeatureId,
    pub location: Point,
    /// `None` until assigned, or when the point lies outside the study area.
    pub partition: Option<PartitionId>,
}

impl FeatureInstance {
    pub fn new(feature: FeatureId, location: Point) -> Self {
        FeatureInstance {
            feature,
            location,
            partition: None,
        }
    }

    pub fn in_partition(mut self, partition: PartitionId) -> Self {
        self.partition = Some(partition);
        self
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DatasetError {
    #[error("feature name must be nonempty")]
    EmptyFeatureName,
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}

/// Feature catalog plus instances. Feature ids are assigned in sorted name
/// order, so they do not depend on input row order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    features: Vec<FeatureType>,
    pub instances: Vec<FeatureInstance>,
    projection: Option<Projection>,
}

impl Dataset {
    pub fn from_records<S, I>(records: I) -> Result<Self, DatasetError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, Point)>,
    {
        let records: Vec<(S, Point)> = records.into_iter().collect();
        let mut names: Vec<&str> = Vec::new();
        for (name, p) in &records {
            let name = name.as_ref();
            if name.is_empty() {
                return Err(DatasetError::EmptyFeatureName);
            }
            if !p.is_finite() {
                return Err(DatasetError::NonFinite { x: p.x, y: p.y });
            }
            names.push(name);
        }
        names.sort_unstable();
        names.dedup();
        let features: Vec<FeatureType> = names
            .iter()
            .enumerate()
            .map(|(i, n)| FeatureType {
                id: FeatureId(i as u32),
                name: n.to_string(),
            })
            .collect();
        let index: BTreeMap<&str, FeatureId> =
            features.iter().map(|f| (f.name.as_str(), f.id)).collect();
        let instances = records
            .iter()
            .map(|(name, p)| FeatureInstance::new(index[name.as_ref()], *p))
            .collect();
        Ok(Dataset {
            features,
            instances,
            projection: None,
        })
    }

    /// Builds a dataset from an explicit catalog; used by generators that
    /// already hold feature ids.
    pub fn from_parts(features: Vec<String>, instances: Vec<FeatureInstance>) -> Self {
        let features = features
            .into_iter()
            .enumerate()
            .map(|(i, name)| FeatureType {
                id: FeatureId(i as u32),
                name,
            })
            .collect();
        Dataset {
            features,
            instances,
            projection: None,
        }
    }

    pub fn features(&self) -> &[FeatureType] {
        &self.features
    }

    pub fn feature_id(&self, name: &str) -> Option<FeatureId> {
        self.features.iter().find(|f| f.name == name).map(|f| f.id)
    }

    pub fn feature_name(&self, id: FeatureId) -> &str {
        &self.features[id.0 as usize].name
    }

    pub fn projection(&self) -> Option<Projection> {
        self.projection
    }

    pub(crate) fn set_projection(&mut self, projection: Option<Projection>) {
        self.projection = projection;
    }

    /// Instance counts keyed by (partition, feature). Unassigned instances are
    /// not counted.
    pub fn partition_feature_counts(&self) -> BTreeMap<(PartitionId, FeatureId), usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            if let Some(p) = inst.partition {
                *counts.entry((p, inst.feature)).or_insert(0) += 1;
            }
        }
        counts
    }
}
