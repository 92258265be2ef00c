//! Synthetic datasets with planted regional colocations.
//!
//! The study area is a `rows x cols` grid of square cells, cell `r * cols + c`
//! being partition `r * cols + c`. For every planted pattern and every
//! partition of its region, `instances_per_cell` reference points are drawn
//! uniformly inside the cell (far enough from its edges that the placement
//! circle stays inside). Around each reference point one instance of every
//! feature of the pattern is placed uniformly in a circle of diameter `d_g`,
//! so all instances of one circle are pairwise within `d_g`. CSR noise adds
//! `noise` instances of every feature to every partition.

use crate::colocation::Candidate;
use crate::miners::RegionalPattern;
use crate::provenance::Provenance;
use crate::rational::Rational;
use crate::spatial::{
    Dataset, FeatureInstance, Partition, PartitionId, PartitionSet, Point, Polygon, Shape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    /// Partition ids of the planted region; must be 4-connected on the grid.
    pub region: Vec<u32>,
    /// Feature names, 2 or 3 of them.
    pub candidate: Vec<String>,
    pub instances_per_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rows: u32,
    pub cols: u32,
    /// Cell side length in meters.
    pub cell_size: f64,
    pub features: Vec<String>,
    /// Largest number of partitions a planted region may span.
    pub l_max: usize,
    pub planted: Vec<PlantedSpec>,
    /// Circle diameter in meters.
    pub d_g: f64,
    /// CSR instances of every feature in every partition.
    pub noise: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: 3,
            cols: 3,
            cell_size: 1000.0,
            features: vec!["A".into(), "B".into(), "C".into()],
            l_max: 4,
            planted: Vec::new(),
            d_g: 50.0,
            noise: 10,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn partition_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::Config(m));
        if self.rows == 0 || self.cols == 0 {
            return err("grid needs at least one row and one column".into());
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return err(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            ));
        }
        if !(self.d_g.is_finite() && self.d_g > 0.0) {
            return err(format!("d_g must be positive, got {}", self.d_g));
        }
        if self.d_g >= self.cell_size {
            return err(format!(
                "d_g ({}) must be smaller than cell_size ({}) so circles fit inside a cell",
                self.d_g, self.cell_size
            ));
        }
        let names: BTreeSet<&str> = self.features.iter().map(String::as_str).collect();
        if names.len() != self.features.len() || names.is_empty() {
            return err("feature names must be non-empty and distinct".into());
        }
        let n = self.partition_count() as u32;
        for (k, p) in self.planted.iter().enumerate() {
            if p.instances_per_cell == 0 {
                return err(format!(
                    "planted pattern {k}: instances_per_cell must be at least 1"
                ));
            }
            let cand: BTreeSet<&str> = p.candidate.iter().map(String::as_str).collect();
            if cand.len() != p.candidate.len() || !(2..=3).contains(&cand.len()) {
                return err(format!(
                    "planted pattern {k}: candidate needs 2 or 3 distinct features"
                ));
            }
            if let Some(f) = cand.iter().find(|f| !names.contains(*f)) {
                return err(format!("planted pattern {k}: unknown feature `{f}`"));
            }
            let region: BTreeSet<u32> = p.region.iter().copied().collect();
            if region.is_empty() || region.len() != p.region.len() {
                return err(format!(
                    "planted pattern {k}: region must list distinct partitions"
                ));
            }
            if let Some(id) = region.iter().find(|&&id| id >= n) {
                return err(format!(
                    "planted pattern {k}: partition {id} outside the {n}-cell grid"
                ));
            }
            if region.len() > self.l_max {
                return err(format!(
                    "planted pattern {k}: region spans {} partitions, more than l_max = {}",
                    region.len(),
                    self.l_max
                ));
            }
            if !self.is_connected(&region) {
                return err(format!(
                    "planted pattern {k}: region {:?} is not connected",
                    p.region
                ));
            }
        }
        Ok(())
    }

    fn is_connected(&self, region: &BTreeSet<u32>) -> bool {
        let Some(&first) = region.first() else {
            return false;
        };
        let mut seen: BTreeSet<u32> = [first].into();
        let mut stack = vec![first];
        while let Some(v) = stack.pop() {
            let (r, c) = (v / self.cols, v % self.cols);
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(v - self.cols);
            }
            if r + 1 < self.rows {
                nbrs.push(v + self.cols);
            }
            if c > 0 {
                nbrs.push(v - 1);
            }
            if c + 1 < self.cols {
                nbrs.push(v + 1);
            }
            for u in nbrs {
                if region.contains(&u) && seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        seen.len() == region.len()
    }

    fn cell_bounds(&self, id: u32) -> (Point, Point) {
        let (r, c) = ((id / self.cols) as f64, (id % self.cols) as f64);
        let min = Point::new(c * self.cell_size, r * self.cell_size);
        (
            min,
            Point::new(min.x + self.cell_size, min.y + self.cell_size),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub region: Vec<u32>,
    pub candidate: Vec<String>,
}

/// Planted (region, candidate) pairs. Every other pair is a negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub planted: Vec<PlantedTruth>,
}

impl GroundTruth {
    /// True when `partition` lies in a region planted with `candidate` or with
    /// a superset of it (subsets of a planted clique are colocated as well).
    pub fn is_planted(
        &self,
        dataset: &Dataset,
        partition: PartitionId,
        candidate: &Candidate,
    ) -> bool {
        self.planted.iter().any(|t| {
            t.region.contains(&partition.0)
                && candidate
                    .features()
                    .iter()
                    .all(|f| t.candidate.iter().any(|n| n == dataset.feature_name(*f)))
        })
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub partitions: PartitionSet,
    pub truth: GroundTruth,
}

/// Builds the grid, planted circles and noise. Output depends only on
/// `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut names = config.features.clone();
    names.sort();
    let fid = |name: &str| {
        crate::spatial::FeatureId(
            names
                .iter()
                .position(|n| n == name)
                .expect("validated feature") as u32,
        )
    };

    let radius = config.d_g / 2.0;
    let mut instances = Vec::new();
    for p in &config.planted {
        for &cell in &p.region {
            let (min, max) = config.cell_bounds(cell);
            for _ in 0..p.instances_per_cell {
                let center = Point::new(
                    rng.random_range(min.x + radius..max.x - radius),
                    rng.random_range(min.y + radius..max.y - radius),
                );
                for f in &p.candidate {
                    let r = radius * rng.random::<f64>().sqrt();
                    let theta = 2.0 * PI * rng.random::<f64>();
                    let loc = Point::new(center.x + r * theta.cos(), center.y + r * theta.sin());
                    instances.push(FeatureInstance::new(fid(f), loc));
                }
            }
        }
    }
    for cell in 0..config.partition_count() as u32 {
        let (min, max) = config.cell_bounds(cell);
        for f in &names {
            for _ in 0..config.noise {
                let loc = Point::new(
                    rng.random_range(min.x..max.x),
                    rng.random_range(min.y..max.y),
                );
                instances.push(FeatureInstance::new(fid(f), loc));
            }
        }
    }

    let parts = (0..config.partition_count() as u32)
        .map(|id| {
            let (min, max) = config.cell_bounds(id);
            Partition::new(
                PartitionId(id),
                id.to_string(),
                Shape::new(vec![Polygon::rect(min, max)]),
            )
        })
        .collect();
    let partitions = PartitionSet::new(parts, "planar synthetic grid in meters".into())
        .with_adjacency(crate::spatial::DEFAULT_ADJACENCY_TOLERANCE);
    let mut dataset = Dataset::from_parts(names, instances);
    partitions.assign(&mut dataset);

    let truth = GroundTruth {
        planted: config
            .planted
            .iter()
            .map(|p| {
                let mut region = p.region.clone();
                region.sort_unstable();
                let mut candidate = p.candidate.clone();
                candidate.sort();
                PlantedTruth { region, candidate }
            })
            .collect(),
    };
    Ok(SynthOutput {
        dataset,
        partitions,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FprScore {
    pub false_positives: u64,
    pub true_negatives: u64,
}

impl FprScore {
    /// `FP / (FP + TN)`, zero when there are no negatives.
    pub fn fpr(&self) -> Rational {
        let denom = self.false_positives + self.true_negatives;
        if denom == 0 {
            Rational::ZERO
        } else {
            Rational::new(self.false_positives, denom)
        }
    }
}

/// Scores reported (partition, candidate) pairs against the truth. The
/// universe is every partition crossed with every candidate in `candidates`;
/// a pair is reported when it lies in any emitted pattern for that candidate.
pub fn score_fpr(
    patterns: &[RegionalPattern],
    truth: &GroundTruth,
    dataset: &Dataset,
    partitions: &PartitionSet,
    candidates: &[Candidate],
) -> FprScore {
    let reported: BTreeSet<(PartitionId, &Candidate)> = patterns
        .iter()
        .flat_map(|p| p.region.iter().map(move |&g| (g, &p.candidate)))
        .collect();
    let mut score = FprScore {
        false_positives: 0,
        true_negatives: 0,
    };
    for c in candidates {
        for g in partitions.ids() {
            if truth.is_planted(dataset, g, c) {
                continue;
            }
            if reported.contains(&(g, c)) {
                score.false_positives += 1;
            } else {
                score.true_negatives += 1;
            }
        }
    }
    score
}

/// Writes `<stem>.csv`, `<stem>.geojson` and `<stem>.truth.json` into `dir`
/// and returns their paths. The GeoJSON and truth files carry the config hash
/// and seed.
pub fn write_output(
    out: &SynthOutput,
    config: &SynthConfig,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let prov = Provenance::new(config, config.seed);

    let csv_path = dir.join(format!("{stem}.csv"));
    let mut csv = String::from("feature,x,y\n");
    for i in &out.dataset.instances {
        csv.push_str(&format!(
            "{},{},{}\n",
            out.dataset.feature_name(i.feature),
            i.location.x,
            i.location.y
        ));
    }
    std::fs::write(&csv_path, csv).map_err(io(&csv_path))?;

    let geo_path = dir.join(format!("{stem}.geojson"));
    let features: Vec<_> = out
        .partitions
        .partitions()
        .iter()
        .map(|p| {
            let (min, max) = (p.bbox.min, p.bbox.max);
            json!({
                "type": "Feature",
                "properties": { "id": p.id.0 },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[
                        [min.x, min.y], [max.x, min.y], [max.x, max.y], [min.x, max.y], [min.x, min.y]
                    ]]
                }
            })
        })
        .collect();
    let geo = json!({ "type": "FeatureCollection", "metadata": prov, "features": features });
    std::fs::write(&geo_path, pretty(&geo)).map_err(io(&geo_path))?;

    let truth_path = dir.join(format!("{stem}.truth.json"));
    let truth = json!({ "provenance": prov, "config": config, "truth": out.truth });
    std::fs::write(&truth_path, pretty(&truth)).map_err(io(&truth_path))?;
    Ok(vec![csv_path, geo_path, truth_path])
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colocation::enumerate_cliques;
    use crate::spatial::{
        build_neighbor_graph, parse_partitions, read_instances, ColumnSchema, FeatureId,
    };

    fn planted_config() -> SynthConfig {
        SynthConfig {
            planted: vec![PlantedSpec {
                region: vec![0, 1],
                candidate: vec!["A".into(), "B".into(), "C".into()],
                instances_per_cell: 4,
            }],
            noise: 0,
            seed: 9,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn planted_cells_hold_enough_instances_and_cliques() {
        let cfg = planted_config();
        let out = generate(&cfg).unwrap();
        let cand = Candidate::new([FeatureId(0), FeatureId(1), FeatureId(2)]).unwrap();
        for cell in [0u32, 1] {
            let pts: Vec<_> = out
                .dataset
                .instances
                .iter()
                .filter(|i| i.partition == Some(PartitionId(cell)))
                .copied()
                .collect();
            for f in 0..3 {
                assert!(pts.iter().filter(|i| i.feature == FeatureId(f)).count() >= 4);
            }
            let g = build_neighbor_graph(&pts, cfg.d_g, None).unwrap();
            assert!(enumerate_cliques(&cand, &g).len() >= 4);
        }
        assert!(out.dataset.instances.iter().all(|i| i.partition.is_some()));
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&planted_config()).unwrap();
        let b = generate(&planted_config()).unwrap();
        assert_eq!(a.dataset.instances, b.dataset.instances);
    }

    #[test]
    fn disconnected_region_rejected() {
        let mut cfg = planted_config();
        cfg.planted[0].region = vec![0, 2];
        assert!(
            matches!(generate(&cfg), Err(SynthError::Config(m)) if m.contains("not connected"))
        );
        cfg.planted[0].region = vec![0, 4];
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn oversized_region_and_bad_values_rejected() {
        let mut cfg = planted_config();
        cfg.l_max = 1;
        assert!(generate(&cfg).is_err());
        let mut cfg = planted_config();
        cfg.d_g = 0.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = planted_config();
        cfg.planted[0].instances_per_cell = 0;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn fpr_formula() {
        let cfg = SynthConfig {
            rows: 2,
            cols: 5,
            noise: 3,
            ..SynthConfig::default()
        };
        let out = generate(&cfg).unwrap();
        let cand = Candidate::new([FeatureId(0), FeatureId(1)]).unwrap();
        let pattern = |ids: &[u32]| RegionalPattern {
            method: crate::miners::Method::MultComp,
            candidate: cand.clone(),
            d: 1.0,
            region: ids.iter().map(|&i| PartitionId(i)).collect(),
            per_partition: Vec::new(),
            region_pi: None,
            region_p_value: None,
            final_threshold: None,
            n: ids.len(),
            largest: true,
            warnings: Vec::new(),
        };
        let none = score_fpr(
            &[],
            &out.truth,
            &out.dataset,
            &out.partitions,
            std::slice::from_ref(&cand),
        );
        assert_eq!(none.fpr(), Rational::ZERO);
        let one = score_fpr(
            &[pattern(&[3])],
            &out.truth,
            &out.dataset,
            &out.partitions,
            std::slice::from_ref(&cand),
        );
        assert_eq!((one.false_positives, one.true_negatives), (1, 9));
        assert_eq!(one.fpr(), Rational::new(1, 10));

        let mut truth = out.truth.clone();
        truth.planted.push(PlantedTruth {
            region: vec![3],
            candidate: vec!["A".into(), "B".into(), "C".into()],
        });
        let exact = score_fpr(
            &[pattern(&[3])],
            &truth,
            &out.dataset,
            &out.partitions,
            &[cand],
        );
        assert_eq!(exact.false_positives, 0);
    }

    #[test]
    fn written_files_reingest() {
        let cfg = planted_config();
        let out = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_output(&out, &cfg, dir.path(), "toy").unwrap();
        let ds = read_instances(
            std::fs::File::open(&paths[0]).unwrap(),
            &ColumnSchema::default(),
        )
        .unwrap();
        assert_eq!(ds.instances.len(), out.dataset.instances.len());
        let ps = parse_partitions(&std::fs::read_to_string(&paths[1]).unwrap(), None).unwrap();
        assert_eq!(ps.len(), 9);
        assert_eq!(ps.neighbors(PartitionId(4)).len(), 0);
        let ps = ps.with_adjacency(crate::spatial::DEFAULT_ADJACENCY_TOLERANCE);
        assert_eq!(ps.neighbors(PartitionId(4)).len(), 4);
        let truth: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&paths[2]).unwrap()).unwrap();
        assert_eq!(truth["provenance"]["seed"], 9);
    }
}
