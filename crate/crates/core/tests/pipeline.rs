//! Cut, first approximation and absorption over every enumerated surface.

use std::collections::BTreeMap;

use normcut::cut_complex::{cut_along, CutError};
use normcut::gi_decomposition::{catalog, run_surface, GIDecomposition, GIError, RegionKind, Stage, TinyType};
use normcut::normal_surface::{enumerate_admissible, NormalSurfaceVector};
use normcut::signature::Signature;
use normcut::triangulation::Triangulation;

const FIXTURES: [(&str, u64); 7] = [
    ("one_tet_a", 2),
    ("one_tet_b", 2),
    ("two_tet_a", 2),
    ("two_tet_b", 2),
    ("two_tet_c", 2),
    ("three_tet_a", 1),
    ("three_tet_b", 1),
];

fn load(name: &str) -> Triangulation {
    let path = format!("{}/data/{name}.tri", env!("CARGO_MANIFEST_DIR"));
    Triangulation::parse(&std::fs::read_to_string(path).expect("fixture")).expect("parse")
}

fn decompositions(tri: &Triangulation, k: u64) -> Vec<(NormalSurfaceVector<i64>, GIDecomposition)> {
    enumerate_admissible::<i64>(tri, k, 40.0)
        .expect("enumerate")
        .into_iter()
        .filter_map(|v| match cut_along(tri, &v) {
            Err(CutError::OneSided) => None,
            Err(e) => panic!("cut failed on {v}: {e}"),
            Ok(cc) => Some((v, GIDecomposition::assemble_first(&cc).expect("first approximation"))),
        })
        .collect()
}

#[test]
fn zero_surface_gives_one_guts_component() {
    for (name, _) in FIXTURES {
        let tri = load(name);
        let d = run_surface(&tri, &NormalSurfaceVector::<i64>::zero(tri.tet_count())).expect("run");
        assert_eq!(d.regions().len(), 1, "{name}");
        assert_eq!(d.regions()[0].kind, RegionKind::Guts);
        assert_eq!(d.annulus_count(), 0);
        assert!(d.steps().is_empty());
        let g = d.guts();
        assert_eq!(g.len(), 1);
        // the vertex ball is plugged back: the whole closed manifold
        assert!(g[0].plugged);
        assert!(g[0].boundary_inventory.is_empty(), "{name}");
        assert!(g[0].homology[3].rank == 1, "{name}");
    }
}

#[test]
fn absorption_reaches_fixed_point_monotonically() {
    for (name, k) in FIXTURES {
        let tri = load(name);
        for (v, mut d) in decompositions(&tri, k) {
            let euler = d.boundary_euler_total();
            let mut count = d.annulus_count();
            while d.absorb_once().expect("absorb step") {
                let now = d.annulus_count();
                assert!(now < count, "{name} {v}: annuli {count} -> {now}");
                assert_eq!(d.boundary_euler_total(), euler, "{name} {v}");
                count = now;
            }
            assert!(d.detect_tiny().iter().all(|c| c.tiny == TinyType::Unknown), "{name} {v}");
        }
    }
}

#[test]
fn frontier_annuli_are_annuli_on_both_sides() {
    for (name, k) in FIXTURES {
        let tri = load(name);
        for (v, d) in decompositions(&tri, k) {
            for r in 0..d.regions().len() {
                for a in d.region_manifold(r).pattern_annuli {
                    assert_eq!((a.euler_char, a.circles), (0, 2), "{name} {v} region {r}");
                }
            }
            for inc in d.frontier_annuli() {
                let kinds = inc.regions.map(|r| d.regions()[r].kind);
                assert_eq!(kinds, [RegionKind::Guts, RegionKind::IBundle], "{name} {v}");
            }
        }
    }
}

#[test]
fn ibundle_descriptors_after_absorption() {
    for (name, k) in FIXTURES {
        let tri = load(name);
        for (v, d) in decompositions(&tri, k) {
            let d = d.absorb().expect("absorb");
            assert_eq!(d.stage(), Stage::BallPlugged);
            for b in d.ibundles() {
                assert_eq!(b.vertical_boundary_annuli, b.base_boundary_circles, "{name} {v}");
                if b.base_boundary_circles > 0 {
                    assert!(b.base_euler < 0, "{name} {v}: {b:?}");
                }
                if b.pure {
                    assert_eq!(d.fiber_twisted(b.region), Some(b.twisted), "{name} {v}");
                }
            }
        }
    }
}

#[test]
fn catalog_matches_replay_and_bound() {
    for (name, k) in FIXTURES {
        let tri = load(name);
        let cat = catalog(&tri, k, 40.0).expect("catalog");
        assert!(cat.within_bound(), "{name}: {} > {}", cat.size(), cat.bound());
        // sequential replay, one surface at a time
        let mut replay: BTreeMap<Signature, usize> = BTreeMap::new();
        for v in enumerate_admissible::<i64>(&tri, k, 40.0).expect("enumerate") {
            match run_surface(&tri, &v) {
                Ok(d) => {
                    for g in d.guts() {
                        *replay.entry(g.signature).or_insert(0) += 1;
                    }
                }
                Err(GIError::Cut(CutError::OneSided)) => {}
                Err(e) => panic!("{name} {v}: {e}"),
            }
        }
        let got: BTreeMap<Signature, usize> = cat.entries.iter().map(|e| (e.signature.clone(), e.multiplicity)).collect();
        assert_eq!(got, replay, "{name}");
    }
}

#[test]
fn catalog_at_zero_is_the_closed_manifold() {
    let tri = load("two_tet_b");
    let cat = catalog(&tri, 0, 40.0).expect("catalog");
    assert_eq!(cat.size(), 1);
    let d = run_surface(&tri, &NormalSurfaceVector::<i64>::zero(2)).expect("run");
    assert_eq!(cat.entries[0].signature, d.guts()[0].signature);
}
