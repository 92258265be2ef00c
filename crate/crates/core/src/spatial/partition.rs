use super::geometry::{collinear_overlap, BBox, Point, Shape};
use super::{Dataset, PartitionId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Minimum shared boundary length (meters) for two partitions to be adjacent.
pub const DEFAULT_ADJACENCY_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub id: PartitionId,
    /// The `id` value from the source file.
    pub label: String,
    pub shape: Shape,
    pub bbox: BBox,
    pub neighbors: BTreeSet<PartitionId>,
}

impl Partition {
    pub fn new(id: PartitionId, label: String, shape: Shape) -> Self {
        let bbox = shape.bbox();
        Partition {
            id,
            label,
            shape,
            bbox,
            neighbors: BTreeSet::new(),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bbox.contains(p) && self.shape.contains(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    partitions: Vec<Partition>,
    pub crs_note: String,
}

impl PartitionSet {
    /// Partitions must already carry dense ids `0..n` in order.
    pub fn new(partitions: Vec<Partition>, crs_note: String) -> Self {
        debug_assert!(partitions
            .iter()
            .enumerate()
            .all(|(i, p)| p.id.0 as usize == i));
        PartitionSet {
            partitions,
            crs_note,
        }
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn get(&self, id: PartitionId) -> &Partition {
        &self.partitions[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PartitionId> + '_ {
        self.partitions.iter().map(|p| p.id)
    }

    /// Lowest-id partition covering `p`, boundary included.
    pub fn locate(&self, p: Point) -> Option<PartitionId> {
        self.partitions
            .iter()
            .find(|part| part.contains(p))
            .map(|part| part.id)
    }

    /// Tags every instance with the partition containing it. Points on a
    /// shared edge go to the lowest partition id; points outside every polygon
    /// stay unassigned.
    pub fn assign(&self, dataset: &mut Dataset) {
        for inst in &mut dataset.instances {
            inst.partition = self.locate(inst.location);
        }
    }

    /// Fills neighbor sets: two partitions are adjacent when their boundaries
    /// share more than `tolerance` meters of collinear segment. Corner contact
    /// alone never qualifies.
    pub fn derive_adjacency(&mut self, tolerance: f64) {
        let n = self.partitions.len();
        for p in &mut self.partitions {
            p.neighbors.clear();
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let shared = shared_boundary_length(&self.partitions[i], &self.partitions[j]);
                if shared > tolerance {
                    let (a, b) = (self.partitions[i].id, self.partitions[j].id);
                    self.partitions[i].neighbors.insert(b);
                    self.partitions[j].neighbors.insert(a);
                }
            }
        }
    }

    pub fn with_adjacency(mut self, tolerance: f64) -> Self {
        self.derive_adjacency(tolerance);
        self
    }

    pub fn neighbors(&self, id: PartitionId) -> &BTreeSet<PartitionId> {
        &self.get(id).neighbors
    }

    /// Partition pairs whose interiors overlap, found by sampling
    /// `samples_per_partition` interior points of each partition and testing
    /// them against every other polygon.
    pub fn overlapping_pairs(
        &self,
        samples_per_partition: usize,
        seed: u64,
    ) -> Vec<(PartitionId, PartitionId)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut found = BTreeSet::new();
        for part in &self.partitions {
            let b = part.bbox;
            if b.width() <= 0.0 || b.height() <= 0.0 {
                continue;
            }
            let mut accepted = 0;
            let mut attempts = 0;
            while accepted < samples_per_partition && attempts < samples_per_partition * 1000 {
                attempts += 1;
                let p = Point::new(
                    rng.random_range(b.min.x..b.max.x),
                    rng.random_range(b.min.y..b.max.y),
                );
                if part.shape.containment(p) != super::Containment::Inside {
                    continue;
                }
                accepted += 1;
                for other in &self.partitions {
                    if other.id != part.id
                        && other.bbox.contains(p)
                        && other.shape.containment(p) == super::Containment::Inside
                    {
                        let pair = (part.id.min(other.id), part.id.max(other.id));
                        found.insert(pair);
                    }
                }
            }
        }
        found.into_iter().collect()
    }

    /// Human-readable problems that do not stop processing: self-intersecting
    /// rings, zero-area partitions and sampled interior overlaps.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        for p in &self.partitions {
            if !p.shape.is_simple() {
                warnings.push(format!(
                    "partition `{}` has a self-intersecting ring",
                    p.label
                ));
            }
            if p.shape.area() <= 0.0 {
                warnings.push(format!("partition `{}` has zero area", p.label));
            }
        }
        for (a, b) in self.overlapping_pairs(64, 0) {
            warnings.push(format!(
                "partitions `{}` and `{}` overlap",
                self.get(a).label,
                self.get(b).label
            ));
        }
        warnings
    }
}

fn shared_boundary_length(a: &Partition, b: &Partition) -> f64 {
    let scale = a.bbox.magnitude().max(b.bbox.magnitude());
    let eps = 1e-9 * scale;
    if !a.bbox.expanded(eps).intersects(&b.bbox) {
        return 0.0;
    }
    let window_a = b.bbox.expanded(eps);
    let window_b = a.bbox.expanded(eps);
    let segs_b: Vec<(Point, Point)> = b
        .shape
        .segments()
        .filter(|(p, q)| segment_touches(&window_b, *p, *q))
        .collect();
    let mut total = 0.0;
    for (p, q) in a
        .shape
        .segments()
        .filter(|(p, q)| segment_touches(&window_a, *p, *q))
    {
        for (r, s) in &segs_b {
            total += collinear_overlap(p, q, *r, *s, eps);
        }
    }
    total
}

fn segment_touches(window: &BBox, p: Point, q: Point) -> bool {
    let mut b = BBox::empty();
    b.extend(p);
    b.extend(q);
    b.intersects(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{FeatureId, Polygon};

    fn grid(rows: u32, cols: u32) -> PartitionSet {
        let mut parts = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c;
                let poly = Polygon::rect(
                    Point::new(c as f64 * 100.0, r as f64 * 100.0),
                    Point::new((c + 1) as f64 * 100.0, (r + 1) as f64 * 100.0),
                );
                parts.push(Partition::new(
                    PartitionId(id),
                    id.to_string(),
                    Shape::new(vec![poly]),
                ));
            }
        }
        PartitionSet::new(parts, String::new())
    }

    #[test]
    fn full_edge_makes_neighbors_corner_does_not() {
        let ps = grid(2, 2).with_adjacency(DEFAULT_ADJACENCY_TOLERANCE);
        assert!(ps.neighbors(PartitionId(0)).contains(&PartitionId(1)));
        assert!(ps.neighbors(PartitionId(1)).contains(&PartitionId(0)));
        // 0 and 3 touch only at (100, 100).
        assert!(!ps.neighbors(PartitionId(0)).contains(&PartitionId(3)));
    }

    #[test]
    fn short_overlap_below_tolerance_is_ignored() {
        let a = Polygon::rect(Point::new(0.0, 0.0), Point::new(10.0, 10.0));
        let b = Polygon::rect(Point::new(10.0, 9.5), Point::new(20.0, 20.0));
        let ps = PartitionSet::new(
            vec![
                Partition::new(PartitionId(0), "a".into(), Shape::new(vec![a])),
                Partition::new(PartitionId(1), "b".into(), Shape::new(vec![b])),
            ],
            String::new(),
        )
        .with_adjacency(1.0);
        assert!(ps.neighbors(PartitionId(0)).is_empty());
    }

    #[test]
    fn assignment_tie_break_and_outside() {
        let ps = grid(1, 6);
        let mut ds = Dataset::from_parts(
            vec!["A".into()],
            vec![
                crate::spatial::FeatureInstance::new(FeatureId(0), Point::new(50.0, 50.0)),
                crate::spatial::FeatureInstance::new(FeatureId(0), Point::new(-5.0, 50.0)),
                // Shared edge of partitions 3 and 4.
                crate::spatial::FeatureInstance::new(FeatureId(0), Point::new(400.0, 50.0)),
            ],
        );
        ps.assign(&mut ds);
        assert_eq!(ds.instances[0].partition, Some(PartitionId(0)));
        assert_eq!(ds.instances[1].partition, None);
        assert_eq!(ds.instances[2].partition, Some(PartitionId(3)));
    }

    #[test]
    fn grid_has_no_overlaps() {
        assert!(grid(3, 3).overlapping_pairs(32, 1).is_empty());
        assert!(grid(3, 3).validation_warnings().is_empty());
    }

    #[test]
    fn overlap_is_detected() {
        let a = Polygon::rect(Point::new(0.0, 0.0), Point::new(10.0, 10.0));
        let b = Polygon::rect(Point::new(5.0, 5.0), Point::new(15.0, 15.0));
        let ps = PartitionSet::new(
            vec![
                Partition::new(PartitionId(0), "a".into(), Shape::new(vec![a])),
                Partition::new(PartitionId(1), "b".into(), Shape::new(vec![b])),
            ],
            String::new(),
        );
        assert_eq!(
            ps.overlapping_pairs(64, 3),
            vec![(PartitionId(0), PartitionId(1))]
        );
    }
}
