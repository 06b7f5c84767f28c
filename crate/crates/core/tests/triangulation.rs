use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use normcut::normal_surface::build_surface;
use normcut::triangulation::{normalize_text, Gluing, Perm4, Triangulation, TriangulationError};

const BUNDLED: [&str; 7] = ["one_tet_a", "one_tet_b", "two_tet_a", "two_tet_b", "two_tet_c", "three_tet_a", "three_tet_b"];

fn text(name: &str) -> String {
    std::fs::read_to_string(format!("{}/data/{name}.tri", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// A closed gluing table with a random pairing of faces and random maps.
fn random_closed(t: usize, rng: &mut ChaCha8Rng) -> Triangulation {
    let mut slots: Vec<(usize, u8)> = (0..t).flat_map(|i| (0..4).map(move |f| (i, f))).collect();
    slots.shuffle(rng);
    let mut gl = vec![[None; 4]; t];
    for pair in slots.chunks(2) {
        let ((i, f), (j, g)) = (pair[0], pair[1]);
        let mut rest: Vec<u8> = (0..4).filter(|&v| v != g).collect();
        rest.shuffle(rng);
        let mut p = [0u8; 4];
        p[f as usize] = g;
        for (v, r) in (0..4u8).filter(|&v| v != f).zip(rest) {
            p[v as usize] = r;
        }
        let perm = Perm4(p);
        gl[i][f as usize] = Some(Gluing { tet: j, perm });
        gl[j][g as usize] = Some(Gluing { tet: i, perm: perm.inverse() });
    }
    Triangulation::from_gluings(gl).expect("involution by construction")
}

/// Orientability by trying every sign assignment.
fn orientable_exhaustive(tri: &Triangulation) -> bool {
    let t = tri.tet_count();
    (0u32..1 << t).any(|mask| {
        let s = |i: usize| if mask >> i & 1 == 1 { -1i8 } else { 1 };
        (0..t).all(|i| (0..4u8).all(|f| {
            let g = tri.glued(i, f);
            s(g.tet) == -s(i) * g.perm.sign()
        }))
    })
}

#[test]
fn one_tetrahedron_table() {
    let tri = Triangulation::parse("# self-glued\n0:1023 0:1023 0:2031 0:1302\n").unwrap();
    assert_eq!(tri.tet_count(), 1);
    assert!(tri.is_valid());
}

#[test]
fn parse_errors() {
    assert_eq!(Triangulation::parse(""), Err(TriangulationError::Empty));
    assert!(matches!(Triangulation::parse("1:0123 1:1023 - -\n0:0123 - - -\n"), Err(TriangulationError::GluedTwice { .. })));
    assert!(matches!(Triangulation::parse("5:0123 - - -\n"), Err(TriangulationError::OutOfRange { .. })));
    assert!(matches!(Triangulation::parse("0:1023 0:1023 0:2031\n"), Err(TriangulationError::Malformed { .. })));
    assert!(matches!(Triangulation::parse("0:1123 - - -\n"), Err(TriangulationError::Malformed { .. })));
}

#[test]
fn bundled_tables_are_valid() {
    for name in BUNDLED {
        let r = Triangulation::parse(&text(name)).unwrap().validate();
        assert!(r.is_valid(), "{name}: {r:?}");
        assert_eq!((r.vertex_count, r.vertex_link_euler), (1, 2));
    }
}

#[test]
fn odd_swap_breaks_orientability() {
    // face 0 <-> face 1 composed with the swap of vertices 2 and 3
    let tri = Triangulation::parse("0:1032 0:1032 0:2031 0:1302\n").unwrap();
    assert!(!tri.validate().orientable);
    assert!(!orientable_exhaustive(&tri));
    assert!(!tri.is_valid());
}

#[test]
fn vertex_link_vectors() {
    for name in BUNDLED {
        let tri = Triangulation::parse(&text(name)).unwrap();
        let v = tri.vertex_link::<i64>().unwrap();
        for tet in 0..tri.tet_count() {
            assert!((0..4).all(|c| *v.triangle(tet, c) == 1));
            assert!((0..3).all(|q| *v.quad(tet, q) == 0));
        }
        let s = build_surface(&tri, &v).unwrap();
        assert_eq!((s.components.len(), s.euler_char), (1, 2), "{name}");
        assert!(s.components[0].is_vertex_linking);
    }
    let open = Triangulation::parse("- - - -\n- - - -\n").unwrap();
    assert!(open.vertex_link::<i64>().is_err());
}

proptest! {
    #[test]
    fn orientation_matches_exhaustive_search(t in 1usize..=7, seed in any::<u64>()) {
        let tri = random_closed(t, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(tri.validate().orientable, orientable_exhaustive(&tri));
        prop_assert_eq!(tri.orientation().is_some(), orientable_exhaustive(&tri));
    }

    #[test]
    fn validation_is_invariant_under_relabelling(t in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tri = random_closed(t, &mut rng);
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(&mut rng);
        prop_assert_eq!(tri.validate(), tri.relabel(&order).validate());
    }

    #[test]
    fn bundled_relabelling_keeps_validity(idx in 0usize..BUNDLED.len(), seed in any::<u64>()) {
        let tri = Triangulation::parse(&text(BUNDLED[idx])).unwrap();
        let mut order: Vec<usize> = (0..tri.tet_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(tri.relabel(&order).is_valid());
    }

    #[test]
    fn serialize_reproduces_normalized_text(t in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clean = random_closed(t, &mut rng).serialize();
        // sprinkle comments, blank lines and extra spaces
        let mut noisy = String::from("# header\n");
        for line in clean.lines() {
            if rng.gen_bool(0.3) {
                noisy.push_str("\n   # note\n");
            }
            let pad = " ".repeat(rng.gen_range(0..3));
            noisy.push_str(&format!("{pad}{}{pad}\n", line.split(' ').collect::<Vec<_>>().join("   ")));
        }
        let tri = Triangulation::parse(&noisy).unwrap();
        prop_assert_eq!(tri.serialize(), normalize_text(&noisy));
        prop_assert_eq!(tri.serialize(), clean);
    }
}
