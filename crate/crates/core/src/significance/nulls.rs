use super::SignificanceError;
use crate::spatial::{
    Dataset, FeatureId, FeatureInstance, Partition, PartitionId, PartitionSet, Point,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

const MAX_REJECTIONS_PER_POINT: usize = 100_000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for one (partition, feature, simulation) cell.
pub fn stream_seed(
    master: u64,
    partition: PartitionId,
    feature: FeatureId,
    simulation: usize,
) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ u64::from(partition.0));
    h = splitmix64(h ^ u64::from(feature.0));
    splitmix64(h ^ simulation as u64)
}

/// Draws `count` points uniformly inside the partition by rejection from its
/// bounding box.
pub fn sample_uniform_in_partition(
    partition: &Partition,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Point>, SignificanceError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let b = partition.bbox;
    if partition.shape.area() <= 0.0 || b.width() <= 0.0 || b.height() <= 0.0 {
        return Err(SignificanceError::DegeneratePartition(partition.id));
    }
    let mut out = Vec::with_capacity(count);
    let mut misses = 0usize;
    while out.len() < count {
        let p = Point::new(
            rng.random_range(b.min.x..b.max.x),
            rng.random_range(b.min.y..b.max.y),
        );
        if partition.shape.contains(p) {
            out.push(p);
            misses = 0;
        } else {
            misses += 1;
            if misses > MAX_REJECTIONS_PER_POINT {
                return Err(SignificanceError::SamplingExhausted(partition.id));
            }
        }
    }
    Ok(out)
}

/// `R` complete-spatial-randomness replicates per partition. Each replicate
/// holds, for every simulated feature, exactly as many points as observed in
/// that partition, placed uniformly inside the partition polygon. Points of
/// replicate `i` in partition `g` for feature `f` depend only on
/// `(seed, g, f, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullEnsemble {
    replicates: usize,
    seed: u64,
    features: BTreeSet<FeatureId>,
    partitions: BTreeMap<PartitionId, Vec<Vec<FeatureInstance>>>,
}

impl NullEnsemble {
    /// Simulates every feature present in `dataset`.
    pub fn generate(
        dataset: &Dataset,
        partitions: &PartitionSet,
        replicates: usize,
        seed: u64,
    ) -> Result<Self, SignificanceError> {
        let features = dataset.features().iter().map(|f| f.id).collect();
        Self::generate_for(dataset, partitions, replicates, seed, &features)
    }

    /// Simulates only `features`; their points are identical to what
    /// [`NullEnsemble::generate`] would produce for them.
    pub fn generate_for(
        dataset: &Dataset,
        partitions: &PartitionSet,
        replicates: usize,
        seed: u64,
        features: &BTreeSet<FeatureId>,
    ) -> Result<Self, SignificanceError> {
        if replicates == 0 {
            return Err(SignificanceError::ZeroReplicates);
        }
        let counts = dataset.partition_feature_counts();
        let mut per_partition: BTreeMap<PartitionId, Vec<(FeatureId, usize)>> = BTreeMap::new();
        for part in partitions.partitions() {
            per_partition.insert(part.id, Vec::new());
        }
        for (&(p, f), &c) in &counts {
            if features.contains(&f) {
                if let Some(v) = per_partition.get_mut(&p) {
                    v.push((f, c));
                }
            }
        }

        let jobs: Vec<(PartitionId, usize)> = per_partition
            .keys()
            .flat_map(|&p| (0..replicates).map(move |i| (p, i)))
            .collect();
        let sims: Vec<Vec<FeatureInstance>> = jobs
            .par_iter()
            .map(|&(p, i)| {
                let part = partitions.get(p);
                let mut pts = Vec::new();
                for &(f, c) in &per_partition[&p] {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, p, f, i));
                    for loc in sample_uniform_in_partition(part, c, &mut rng)? {
                        pts.push(FeatureInstance::new(f, loc).in_partition(p));
                    }
                }
                Ok(pts)
            })
            .collect::<Result<_, SignificanceError>>()?;

        let mut partitions_out: BTreeMap<PartitionId, Vec<Vec<FeatureInstance>>> = BTreeMap::new();
        for ((p, _), sim) in jobs.into_iter().zip(sims) {
            partitions_out.entry(p).or_default().push(sim);
        }
        Ok(NullEnsemble {
            replicates,
            seed,
            features: features.clone(),
            partitions: partitions_out,
        })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn features(&self) -> &BTreeSet<FeatureId> {
        &self.features
    }

    pub fn covers(&self, partition: PartitionId) -> bool {
        self.partitions.contains_key(&partition)
    }

    pub fn simulation(&self, partition: PartitionId, index: usize) -> Option<&[FeatureInstance]> {
        self.partitions
            .get(&partition)
            .and_then(|sims| sims.get(index))
            .map(Vec::as_slice)
    }

    /// The `index`-th replicate of every partition in `region`, merged and
    /// restricted to `features`. Region iteration order does not matter
    /// because replicates are paired by index.
    pub fn union_simulation(
        &self,
        region: &BTreeSet<PartitionId>,
        index: usize,
        features: &[FeatureId],
    ) -> Result<Vec<FeatureInstance>, SignificanceError> {
        let mut out = Vec::new();
        for &p in region {
            let sim = self
                .simulation(p, index)
                .ok_or(SignificanceError::NotCovered(p))?;
            out.extend(
                sim.iter()
                    .filter(|i| features.contains(&i.feature))
                    .copied(),
            );
        }
        Ok(out)
    }

    /// Cache key over the inputs that determine an ensemble.
    pub fn cache_key(
        dataset: &Dataset,
        partitions: &PartitionSet,
        replicates: usize,
        seed: u64,
        features: &BTreeSet<FeatureId>,
    ) -> String {
        let mut h = Sha256::new();
        let mut rows: Vec<(u32, u32, u64, u64)> = dataset
            .instances
            .iter()
            .filter_map(|i| {
                i.partition.map(|p| {
                    (
                        p.0,
                        i.feature.0,
                        i.location.x.to_bits(),
                        i.location.y.to_bits(),
                    )
                })
            })
            .collect();
        rows.sort_unstable();
        for r in rows {
            h.update(format!("{},{},{},{};", r.0, r.1, r.2, r.3));
        }
        for part in partitions.partitions() {
            h.update(format!("P{}:{};", part.id.0, part.label));
            for (a, b) in part.shape.segments() {
                h.update(format!(
                    "{},{},{},{};",
                    a.x.to_bits(),
                    a.y.to_bits(),
                    b.x.to_bits(),
                    b.y.to_bits()
                ));
            }
        }
        h.update(format!("R{replicates};S{seed};F{features:?}"));
        hex::encode(h.finalize())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{Polygon, Shape};

    fn two_cells() -> PartitionSet {
        let parts = (0..2)
            .map(|i| {
                let poly = Polygon::rect(
                    Point::new(i as f64 * 10.0, 0.0),
                    Point::new((i + 1) as f64 * 10.0, 10.0),
                );
                Partition::new(PartitionId(i), i.to_string(), Shape::new(vec![poly]))
            })
            .collect();
        PartitionSet::new(parts, String::new())
    }

    fn dataset(ps: &PartitionSet) -> Dataset {
        let mut recs = Vec::new();
        for k in 0..7 {
            recs.push(("A", Point::new(1.0 + k as f64, 5.0)));
        }
        for k in 0..3 {
            recs.push(("A", Point::new(11.0 + k as f64, 5.0)));
            recs.push(("B", Point::new(11.0 + k as f64, 6.0)));
        }
        let mut ds = Dataset::from_records(recs).unwrap();
        ps.assign(&mut ds);
        ds
    }

    #[test]
    fn counts_match_observed_and_points_inside() {
        let ps = two_cells();
        let ds = dataset(&ps);
        let ens = NullEnsemble::generate(&ds, &ps, 99, 7).unwrap();
        let a = ds.feature_id("A").unwrap();
        for i in 0..99 {
            let sim = ens.simulation(PartitionId(0), i).unwrap();
            assert_eq!(sim.iter().filter(|p| p.feature == a).count(), 7);
            assert!(sim
                .iter()
                .all(|p| ps.get(PartitionId(0)).contains(p.location)));
        }
    }

    #[test]
    fn same_seed_same_points() {
        let ps = two_cells();
        let ds = dataset(&ps);
        let a = NullEnsemble::generate(&ds, &ps, 1, 42).unwrap();
        let b = NullEnsemble::generate(&ds, &ps, 1, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = NullEnsemble::generate(&ds, &ps, 1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn restricted_generation_matches_full() {
        let ps = two_cells();
        let ds = dataset(&ps);
        let a = ds.feature_id("A").unwrap();
        let full = NullEnsemble::generate(&ds, &ps, 5, 3).unwrap();
        let only_a = NullEnsemble::generate_for(&ds, &ps, 5, 3, &[a].into()).unwrap();
        for i in 0..5 {
            let f: Vec<_> = full
                .simulation(PartitionId(1), i)
                .unwrap()
                .iter()
                .filter(|p| p.feature == a)
                .copied()
                .collect();
            assert_eq!(f, only_a.simulation(PartitionId(1), i).unwrap());
        }
    }

    #[test]
    fn union_count_is_sum_of_parts() {
        let ps = two_cells();
        let ds = dataset(&ps);
        let ens = NullEnsemble::generate(&ds, &ps, 10, 1).unwrap();
        let region: BTreeSet<_> = [PartitionId(0), PartitionId(1)].into();
        let fs: Vec<_> = ds.features().iter().map(|f| f.id).collect();
        for i in 0..10 {
            assert_eq!(ens.union_simulation(&region, i, &fs).unwrap().len(), 7 + 6);
        }
    }

    #[test]
    fn zero_replicates_and_degenerate_polygon_fail() {
        let ps = two_cells();
        let ds = dataset(&ps);
        assert!(matches!(
            NullEnsemble::generate(&ds, &ps, 0, 1),
            Err(SignificanceError::ZeroReplicates)
        ));
        let flat = Polygon::rect(Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        let ps = PartitionSet::new(
            vec![Partition::new(
                PartitionId(0),
                "0".into(),
                Shape::new(vec![flat]),
            )],
            String::new(),
        );
        let mut ds = Dataset::from_records([("A", Point::new(5.0, 0.0))]).unwrap();
        ps.assign(&mut ds);
        assert!(matches!(
            NullEnsemble::generate(&ds, &ps, 3, 1),
            Err(SignificanceError::DegeneratePartition(PartitionId(0)))
        ));
    }

    #[test]
    fn cache_round_trip() {
        let ps = two_cells();
        let ds = dataset(&ps);
        let ens = NullEnsemble::generate(&ds, &ps, 3, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.json");
        ens.save(&path).unwrap();
        assert_eq!(NullEnsemble::load(&path).unwrap(), ens);
        let fs = ens.features().clone();
        let k1 = NullEnsemble::cache_key(&ds, &ps, 3, 9, &fs);
        assert_eq!(k1, NullEnsemble::cache_key(&ds, &ps, 3, 9, &fs));
        assert_ne!(k1, NullEnsemble::cache_key(&ds, &ps, 4, 9, &fs));
    }
}
