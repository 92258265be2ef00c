#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regcoloc::colocation::Candidate;
use regcoloc::spatial::{
    Dataset, FeatureId, FeatureInstance, Partition, PartitionId, PartitionSet, Point, Polygon,
    Shape,
};
use std::collections::BTreeSet;

pub fn inst(f: u32, x: f64, y: f64) -> FeatureInstance {
    FeatureInstance::new(FeatureId(f), Point::new(x, y))
}

pub fn cand(fs: &[u32]) -> Candidate {
    Candidate::new(fs.iter().map(|&f| FeatureId(f))).unwrap()
}

/// `rows x cols` grid of square cells, partition `r * cols + c`.
pub fn grid(rows: u32, cols: u32, cell: f64) -> PartitionSet {
    let parts = (0..rows * cols)
        .map(|id| {
            let (r, c) = ((id / cols) as f64, (id % cols) as f64);
            let min = Point::new(c * cell, r * cell);
            let shape = Shape::new(vec![Polygon::rect(
                min,
                Point::new(min.x + cell, min.y + cell),
            )]);
            Partition::new(PartitionId(id), id.to_string(), shape)
        })
        .collect();
    PartitionSet::new(parts, String::new()).with_adjacency(1e-6)
}

/// Three 100 x 100 partitions side by side and the two-feature layout with
/// 17 A, 12 B and 9 A-B cliques at d = 10: globally pr(A) = 9/17, pr(B) =
/// 8/12; in the middle partition pr(A) = 4/4, pr(B) = 3/4.
pub fn toy_layout() -> (Dataset, PartitionSet) {
    let ps = grid(1, 3, 100.0);
    let (a, b) = (0, 1);
    // r2: one B shared by two A, two more pairs, one lone B.
    let mut v = vec![
        inst(b, 120.0, 50.0),
        inst(a, 115.0, 50.0),
        inst(a, 125.0, 50.0),
        inst(b, 150.0, 50.0),
        inst(a, 155.0, 50.0),
        inst(b, 180.0, 50.0),
        inst(a, 185.0, 50.0),
        inst(b, 140.0, 80.0),
    ];
    // r1: five pairs, eight lone A, three lone B.
    for (x, y) in [
        (10.0, 10.0),
        (30.0, 10.0),
        (50.0, 10.0),
        (70.0, 10.0),
        (10.0, 30.0),
    ] {
        v.push(inst(a, x, y));
        v.push(inst(b, x + 5.0, y));
    }
    for (x, y) in [
        (30.0, 30.0),
        (50.0, 30.0),
        (70.0, 30.0),
        (10.0, 50.0),
        (30.0, 50.0),
        (50.0, 50.0),
        (70.0, 50.0),
        (10.0, 70.0),
    ] {
        v.push(inst(a, x, y));
    }
    for (x, y) in [(30.0, 70.0), (50.0, 70.0), (70.0, 70.0)] {
        v.push(inst(b, x, y));
    }
    let mut ds = Dataset::from_parts(vec!["A".into(), "B".into()], v);
    ps.assign(&mut ds);
    (ds, ps)
}

/// Instances of `n_features` types placed uniformly in `[0, side]^2`.
pub fn random_instances(
    rng: &mut ChaCha8Rng,
    n: usize,
    n_features: u32,
    side: f64,
) -> Vec<FeatureInstance> {
    (0..n)
        .map(|_| {
            let f = rng.random_range(0..n_features);
            inst(f, rng.random_range(0.0..side), rng.random_range(0.0..side))
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All-pairs neighbor relation.
pub fn brute_neighbors(points: &[FeatureInstance], d: f64) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].feature != points[j].feature
                && points[i].location.dist(&points[j].location) <= d
            {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Every clique of `candidate` by exhaustive search, members in candidate
/// feature order.
pub fn brute_cliques(
    points: &[FeatureInstance],
    candidate: &Candidate,
    d: f64,
) -> BTreeSet<Vec<usize>> {
    let by_feature: Vec<Vec<usize>> = candidate
        .features()
        .iter()
        .map(|f| {
            (0..points.len())
                .filter(|&i| points[i].feature == *f)
                .collect()
        })
        .collect();
    let close = |i: usize, j: usize| points[i].location.dist(&points[j].location) <= d;
    let mut out = BTreeSet::new();
    match by_feature.len() {
        2 => {
            for &i in &by_feature[0] {
                for &j in &by_feature[1] {
                    if close(i, j) {
                        out.insert(vec![i, j]);
                    }
                }
            }
        }
        3 => {
            for &i in &by_feature[0] {
                for &j in &by_feature[1] {
                    if !close(i, j) {
                        continue;
                    }
                    for &k in &by_feature[2] {
                        if close(i, k) && close(j, k) {
                            out.insert(vec![i, j, k]);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Participation index from the brute-force cliques, as (numerator,
/// denominator) of the minimum ratio; `None` when a feature is absent.
pub fn brute_pi(points: &[FeatureInstance], candidate: &Candidate, d: f64) -> Option<(u64, u64)> {
    let cliques = brute_cliques(points, candidate, d);
    let mut best: Option<(u64, u64)> = None;
    for (k, f) in candidate.features().iter().enumerate() {
        let total = points.iter().filter(|p| p.feature == *f).count() as u64;
        if total == 0 {
            return None;
        }
        let part = cliques.iter().map(|c| c[k]).collect::<BTreeSet<_>>().len() as u64;
        best = match best {
            Some((n, m)) if n * total <= part * m => Some((n, m)),
            _ => Some((part, total)),
        };
    }
    best
}
