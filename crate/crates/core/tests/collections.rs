// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modgeo::bqf::Discriminant;
use modgeo::collections::{
    build_full, measure, ratios, subcollection, CollectionKind, GeodesicCollection,
    SubcollectionRule, SubcollectionSpec,
};
use modgeo::observables::cusp_indicator;
use modgeo::Error;

fn full(d: i64) -> GeodesicCollection {
    build_full(&Discriminant::new(d as i128).unwrap())
}

fn explicit(g: &GeodesicCollection, indices: Vec<usize>) -> GeodesicCollection {
    subcollection(
        g,
        &SubcollectionSpec {
            rule: SubcollectionRule::Explicit { indices },
            seed: 0,
        },
    )
    .unwrap()
}

fn tube(g: &GeodesicCollection, r: f64) -> Result<GeodesicCollection, Error> {
    subcollection(
        g,
        &SubcollectionSpec {
            rule: SubcollectionRule::Tube { orbit_d: 5, r },
            seed: 0,
        },
    )
}

#[test]
fn cusp_measure_matches_excursion_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 25 {
        let d = rng.random_range(50..200_000i64);
        if !common::is_discriminant(d) {
            continue;
        }
        let g = full(d);
        for y in [1.0, 1.5, 2.0, 3.0] {
            let step = 1e-3;
            let f = cusp_indicator(y, 0.0).unwrap();
            let got = measure(&g, &f, step).unwrap();
            let (time, excursions) = common::cusp_time(d, y);
            let expected = time / g.total_length;
            // The midpoint rule misplaces each of the two crossings of an
            // excursion by at most half a step.
            let tol = excursions as f64 * step / g.total_length + 1e-12;
            assert!(
                (got - expected).abs() <= tol,
                "d = {d}, Y = {y}: {got} vs {expected} (tol {tol})"
            );
        }
        checked += 1;
    }
}

#[test]
fn spec_examples() {
    let g5 = full(5);
    assert_eq!(g5.len(), 1);
    assert!((g5.total_length - 1.9248).abs() < 1e-4);
    let g40 = full(40);
    assert_eq!(g40.len(), 2);
    assert!((g40.total_length - 14.547).abs() < 1e-3);
    let f = cusp_indicator(2.0, 0.0).unwrap();
    let a = measure(&g40, &f, 1e-2).unwrap();
    let b = measure(&g40, &f, 1e-2).unwrap();
    assert!((a - b).abs() <= 1e-9);
}

#[test]
fn total_length_is_additive() {
    let g = full(4 * 2021);
    assert!(g.len() >= 4, "{}", g.len());
    let n = g.len();
    let left = explicit(&g, (0..n / 2).collect());
    let right = explicit(&g, (n / 2..n).collect());
    assert!((left.total_length + right.total_length - g.total_length).abs() < 1e-9);
    for m in &g.members {
        assert_eq!(m.period, g.period());
    }
    let (phi, _) = ratios(&left, &g).unwrap();
    assert!((phi - n as f64 / (n / 2) as f64).abs() < 1e-12);
}

#[test]
fn random_fraction_overshoots_by_at_most_one_member() {
    let g = full(4 * 2021);
    for (seed, q) in [(1u64, 0.1), (2, 0.33), (3, 0.5), (4, 0.9)] {
        let sub = subcollection(
            &g,
            &SubcollectionSpec {
                rule: SubcollectionRule::RandomFraction { q },
                seed,
            },
        )
        .unwrap();
        assert_eq!(sub.kind, CollectionKind::RandomFraction);
        assert!(sub.total_length >= q * g.total_length * (1.0 - 1e-12));
        assert!(sub.total_length - g.period() < q * g.total_length);
        let distinct: BTreeSet<usize> = sub.class_indices().into_iter().collect();
        assert_eq!(distinct.len(), sub.len());
    }
    assert!(subcollection(
        &g,
        &SubcollectionSpec {
            rule: SubcollectionRule::RandomFraction { q: 0.0 },
            seed: 0,
        },
    )
    .is_err());
}

#[test]
fn tube_rule_is_monotone_in_r() {
    for n in [31i64, 45, 77] {
        let g = full(n * n + 4);
        let mut prev: BTreeSet<usize> = BTreeSet::new();
        for r in [0.02, 0.05, 0.1, 0.2] {
            let cur: BTreeSet<usize> = match tube(&g, r) {
                Ok(s) => s.class_indices().into_iter().collect(),
                Err(Error::EmptySubcollection) => BTreeSet::new(),
                Err(e) => panic!("{e}"),
            };
            assert!(prev.is_subset(&cur), "n = {n}, r = {r}");
            prev = cur;
        }
    }
}

#[test]
fn empty_tube_is_reported() {
    let g = full(4 * 1001);
    assert!(matches!(tube(&g, 1e-6), Err(Error::EmptySubcollection)));
}

#[test]
fn measure_requires_members_and_fine_steps() {
    let g = full(5);
    let f = cusp_indicator(1.0, 0.0).unwrap();
    assert!(matches!(
        measure(&g, &f, 1.0),
        Err(Error::StepTooCoarse { .. })
    ));
    let summary = serde_json::to_value(g.summary()).unwrap();
    assert_eq!(summary["kind"], "full");
    assert_eq!(summary["d"], 5);
}

#[test]
fn fine_tube_path_finds_the_orbit_itself() {
    for d in [5i64, 13, 29] {
        let g = full(d);
        let sub = subcollection(
            &g,
            &SubcollectionSpec {
                rule: SubcollectionRule::Tube {
                    orbit_d: d as i128,
                    r: 1e-9,
                },
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(sub.class_indices(), vec![0], "d = {d}");
    }
}

#[test]
fn fine_tube_path_is_within_direct_sampling() {
    use modgeo::collections::{fine_tube_subcollection, tube_subcollection, FINE_TUBE_RADIUS};
    use modgeo::observables::principal_geodesic;
    use modgeo::surface::{OrbitTube, TubeIndex};

    let p5 = principal_geodesic(5).unwrap();
    let coarse = OrbitTube::new(&p5, FINE_TUBE_RADIUS).unwrap();
    let coarse_index = TubeIndex::new(&coarse, FINE_TUBE_RADIUS + coarse.delta);
    let indices = |s: Result<GeodesicCollection, Error>| -> BTreeSet<usize> {
        match s {
            Ok(s) => s.class_indices().into_iter().collect(),
            Err(Error::EmptySubcollection) => BTreeSet::new(),
            Err(e) => panic!("{e}"),
        }
    };
    let r = 0.008;
    for d in [5i64, 4 * 1001, 1009] {
        let g = full(d);
        let tube = OrbitTube::new(&p5, 1.25 * r).unwrap();
        let index = TubeIndex::new(&tube, 1.25 * r + tube.delta);
        let fine = indices(fine_tube_subcollection(&g, &coarse_index, r));
        let wide = indices(tube_subcollection(&g, &index, 1.25 * r));
        assert!(fine.is_subset(&wide), "d = {d}");
    }
}
