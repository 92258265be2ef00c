mod common;

use common::*;
use regcoloc::colocation::{enumerate_cliques, participation_index, pi_of_points, Scope};
use regcoloc::miners::{mine, Method, MinerConfig};
use regcoloc::rational::Rational;
use regcoloc::significance::{
    monte_carlo_p_value, significance_test, NullEnsemble, SignificanceOutcome,
};
use regcoloc::spatial::{build_neighbor_graph, PartitionId};
use std::collections::BTreeSet;

#[test]
fn toy_layout_global_and_regional_pi() {
    let (ds, _) = toy_layout();
    let ab = cand(&[0, 1]);
    let global = participation_index(&ds.instances, &ab, Scope::StudyArea, 10.0).unwrap();
    assert_eq!(global.pi, Rational::new(9, 17));
    assert_eq!(global.per_feature[1].ratio(), Some(Rational::new(8, 12)));
    let r2: BTreeSet<_> = [PartitionId(1)].into();
    let regional = participation_index(&ds.instances, &ab, Scope::Region(&r2), 10.0).unwrap();
    assert_eq!(regional.pi, Rational::new(3, 4));
    assert_eq!(regional.per_feature[0].ratio(), Some(Rational::ONE));
    let r3: BTreeSet<_> = [PartitionId(2)].into();
    assert!(participation_index(&ds.instances, &ab, Scope::Region(&r3), 10.0).is_err());
}

#[test]
fn neighbor_graph_matches_all_pairs() {
    let mut r = rng(11);
    for trial in 0..200 {
        let n = 1 + trial % 60;
        let pts = random_instances(&mut r, n, 3, 100.0);
        for d in [1.0, 7.5, 20.0, 60.0] {
            let g = build_neighbor_graph(&pts, d, None).unwrap();
            let edges: BTreeSet<_> = g.edges().collect();
            assert_eq!(edges, brute_neighbors(&pts, d), "n={n} d={d}");
        }
    }
}

#[test]
fn cliques_match_exhaustive_search() {
    let mut r = rng(12);
    for trial in 0..200 {
        let pts = random_instances(&mut r, 1 + trial % 60, 4, 100.0);
        for d in [5.0, 15.0, 40.0] {
            let g = build_neighbor_graph(&pts, d, None).unwrap();
            for c in [
                cand(&[0, 1]),
                cand(&[1, 3]),
                cand(&[0, 1, 2]),
                cand(&[1, 2, 3]),
            ] {
                let got: Vec<Vec<usize>> = enumerate_cliques(&c, &g)
                    .into_iter()
                    .map(|k| k.members)
                    .collect();
                let sorted: Vec<_> = got
                    .iter()
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                assert_eq!(got, sorted, "cliques come out sorted and unique");
                assert_eq!(
                    got.into_iter().collect::<BTreeSet<_>>(),
                    brute_cliques(&pts, &c, d)
                );
            }
        }
    }
}

#[test]
fn pi_matches_exhaustive_search() {
    let mut r = rng(13);
    for trial in 0..150 {
        let pts = random_instances(&mut r, 2 + trial % 50, 3, 100.0);
        for c in [cand(&[0, 1]), cand(&[0, 1, 2])] {
            let (_, pi) = pi_of_points(&pts, &c, 20.0).unwrap();
            let expected =
                brute_pi(&pts, &c, 20.0).map_or(Rational::ZERO, |(n, m)| Rational::new(n, m));
            assert_eq!(pi, expected);
        }
    }
}

#[test]
fn grid_adjacency_oracle() {
    let ps = grid(3, 3, 10.0);
    let mut edges = 0;
    for id in ps.ids() {
        let (r, c) = (id.0 / 3, id.0 % 3);
        let expected: BTreeSet<PartitionId> = [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)]
            .iter()
            .filter_map(|(dr, dc)| {
                let (rr, cc) = (r as i32 + dr, c as i32 + dc);
                ((0..3).contains(&rr) && (0..3).contains(&cc))
                    .then(|| PartitionId((rr * 3 + cc) as u32))
            })
            .collect();
        assert_eq!(ps.neighbors(id), &expected);
        edges += expected.len();
    }
    assert_eq!(ps.neighbors(PartitionId(4)).len(), 4);
    assert_eq!(edges / 2, 12);
}

#[test]
fn p_value_counts_ties_as_exceedances() {
    let (ds, ps) = toy_layout();
    let ens = NullEnsemble::generate(&ds, &ps, 19, 5).unwrap();
    let ab = cand(&[0, 1]);
    let r1: BTreeSet<_> = [PartitionId(0)].into();
    let nulls = regcoloc::significance::null_participation_indices(&ab, &r1, 10.0, &ens).unwrap();
    for obs in nulls.iter().copied().chain([Rational::ZERO, Rational::ONE]) {
        let out = significance_test(&ab, &r1, 10.0, obs, &ens, Rational::new(1, 20)).unwrap();
        let exceed = nulls.iter().filter(|&&x| x >= obs).count() as u64;
        assert_eq!(out.exceed_count, exceed);
        assert_eq!(out.p_value, monte_carlo_p_value(exceed, 19));
    }
}

#[test]
fn p_value_arithmetic_table() {
    let alpha = Rational::new(1, 20);
    for r in [1u64, 4, 99] {
        for k in 0..=r {
            let out = SignificanceOutcome::from_counts(k, r, Rational::ONE, alpha);
            assert_eq!(out.p_value, Rational::new(k + 1, r + 1));
        }
    }
    for k in 0..=99 {
        assert_eq!(
            SignificanceOutcome::from_counts(k, 99, Rational::ONE, alpha).significant,
            k < 5
        );
    }
}

#[test]
fn toy_layout_mines_end_to_end() {
    let (ds, ps) = toy_layout();
    let cfg = MinerConfig {
        min_instances: 1,
        replicates: 99,
        ..MinerConfig::default()
    };
    let run = mine(&ds, &ps, &[cand(&[0, 1])], &[10.0], &cfg).unwrap();
    let job = &run.jobs[0];
    assert_eq!(job.atomic.len(), 2);
    assert_eq!(job.atomic[1].pi, Rational::new(3, 4));
    for m in [Method::Ssrcm, Method::MultComp] {
        assert!(job.outcome(m).is_some());
    }
}
