use proptest::prelude::*;

use normcut::normal_surface::{
    build_surface, enumerate_admissible, is_admissible, strip_vertex_linking, NormalSurfaceVector, DEFAULT_GUARD_BITS,
};
use normcut::triangulation::Triangulation;

type V = NormalSurfaceVector<i64>;

const SMALL: [&str; 5] = ["one_tet_a", "one_tet_b", "two_tet_a", "two_tet_b", "two_tet_c"];

fn load(name: &str) -> Triangulation {
    let path = format!("{}/data/{name}.tri", env!("CARGO_MANIFEST_DIR"));
    Triangulation::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Quad type `q` splits the vertices into `{0, q+1}` and the other two.
fn quad_block_of(q: usize, v: u8) -> bool {
    v == 0 || v as usize == q + 1
}

/// Arcs of the disc pattern on face `f` cutting off corner `v`.
fn arcs(c: &[u64], i: usize, f: u8, v: u8) -> u64 {
    let tri = c[7 * i + v as usize];
    // a quad meets face f around v when v is alone in its block within the face
    let quads: u64 = (0..3)
        .filter(|&q| {
            let same = (0..4u8).filter(|&w| w != f && w != v && quad_block_of(q, w) == quad_block_of(q, v)).count();
            same == 0
        })
        .map(|q| c[7 * i + 4 + q])
        .sum();
    tri + quads
}

fn admissible_oracle(tri: &Triangulation, c: &[u64]) -> bool {
    let t = tri.tet_count();
    let quads_ok = (0..t).all(|i| (4..7).filter(|&q| c[7 * i + q] > 0).count() <= 1);
    quads_ok
        && (0..t).all(|i| {
            (0..4u8).all(|f| {
                let g = tri.glued(i, f);
                (0..4u8).filter(|&v| v != f).all(|v| arcs(c, i, f, v) == arcs(c, g.tet, g.perm.apply(f), g.perm.apply(v)))
            })
        })
}

/// Every admissible stripped vector with coordinates `<= k`, by exhaustion.
fn brute_force(tri: &Triangulation, k: u64) -> Vec<Vec<u64>> {
    let t = tri.tet_count();
    // per-tetrahedron blocks obeying the quad constraint
    let mut blocks = Vec::new();
    let tris: Vec<[u64; 4]> = (0..(k + 1).pow(4))
        .map(|mut n| {
            let mut b = [0; 4];
            for x in &mut b {
                *x = n % (k + 1);
                n /= k + 1;
            }
            b
        })
        .collect();
    for tr in &tris {
        blocks.push([tr[0], tr[1], tr[2], tr[3], 0, 0, 0]);
        for q in 0..3 {
            for m in 1..=k {
                let mut b = [tr[0], tr[1], tr[2], tr[3], 0, 0, 0];
                b[4 + q] = m;
                blocks.push(b);
            }
        }
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; t];
    loop {
        let c: Vec<u64> = idx.iter().flat_map(|&b| blocks[b]).collect();
        let stripped = (0..t).any(|i| (0..4).any(|v| c[7 * i + v] == 0));
        if stripped && admissible_oracle(tri, &c) {
            out.push(c);
        }
        let Some(pos) = (0..t).find(|&p| idx[p] + 1 < blocks.len()) else { break };
        idx[pos] += 1;
        idx[..pos].iter_mut().for_each(|x| *x = 0);
    }
    out.sort();
    out
}

fn as_u64(v: &V) -> Vec<u64> {
    v.coords().iter().map(|&c| c as u64).collect()
}

#[test]
fn lone_triangle_is_not_admissible() {
    let tri = load("one_tet_a");
    let v = V::from_u64(&[1, 0, 0, 0, 0, 0, 0]).unwrap();
    assert!(!is_admissible(&tri, &v).unwrap());
}

#[test]
fn two_quad_types_violate_the_quad_constraint() {
    let tri = load("one_tet_a");
    let v = V::from_u64(&[0, 0, 0, 0, 1, 1, 0]).unwrap();
    assert!(!is_admissible(&tri, &v).unwrap());
    assert!(!admissible_oracle(&tri, &[0, 0, 0, 0, 1, 1, 0]));
}

#[test]
fn length_mismatch_is_an_error() {
    let tri = load("two_tet_a");
    assert!(is_admissible(&tri, &V::zero(1)).is_err());
    assert!(V::parse("1 2 3").is_err());
    assert!(V::parse("0 0 0 -1 0 0 0").is_err());
}

#[test]
fn doubled_link_has_two_spheres() {
    for name in SMALL {
        let tri = load(name);
        let v = V::vertex_link(tri.tet_count()).scale(&2);
        assert!(is_admissible(&tri, &v).unwrap());
        let s = build_surface(&tri, &v).unwrap();
        assert_eq!(s.components.len(), 2);
        assert!(s.components.iter().all(|c| c.euler_char == 2 && c.is_vertex_linking && c.orientable));
        assert_eq!(s.euler_char, 4);
    }
}

#[test]
fn strip_removes_whole_links_only() {
    let quad = V::from_u64(&[0, 0, 0, 0, 0, 2, 0]).unwrap();
    let with_links = quad.add(&V::vertex_link(1).scale(&3));
    assert_eq!(strip_vertex_linking(&with_links), quad);
    let uneven = V::from_u64(&[2, 1, 3, 1, 0, 0, 1]).unwrap();
    assert_eq!(strip_vertex_linking(&uneven).coords(), &[1, 0, 2, 0, 0, 0, 1]);
    assert!(strip_vertex_linking(&V::vertex_link(2)).is_zero());
}

#[test]
fn zero_bound_gives_only_the_empty_surface() {
    for name in SMALL {
        let tri = load(name);
        let all = enumerate_admissible::<i64>(&tri, 0, DEFAULT_GUARD_BITS).unwrap();
        assert_eq!(all, vec![V::zero(tri.tet_count())]);
    }
}

#[test]
fn enumeration_matches_exhaustion() {
    for (name, k) in [("one_tet_a", 1), ("one_tet_b", 1), ("one_tet_a", 3), ("one_tet_b", 3)]
        .into_iter()
        .chain(["two_tet_a", "two_tet_b", "two_tet_c"].map(|n| (n, 2)))
    {
        let tri = load(name);
        let fast: Vec<Vec<u64>> = enumerate_admissible::<i64>(&tri, k, DEFAULT_GUARD_BITS).unwrap().iter().map(as_u64).collect();
        assert_eq!(fast, brute_force(&tri, k), "{name} k={k}");
    }
}

#[test]
fn guard_refuses_large_searches() {
    let tri = load("two_tet_a");
    assert!(enumerate_admissible::<i64>(&tri, 2, 10.0).is_err());
}

fn sample(name: &str) -> Vec<V> {
    enumerate_admissible::<i64>(&load(name), 2, DEFAULT_GUARD_BITS).unwrap()
}

fn quads_compatible(a: &V, b: &V) -> bool {
    (0..a.tet_count()).all(|i| {
        let qa = (0..3).find(|&q| *a.quad(i, q) > 0);
        let qb = (0..3).find(|&q| *b.quad(i, q) > 0);
        qa.is_none() || qb.is_none() || qa == qb
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admissibility_agrees_with_the_arc_oracle(idx in 0usize..SMALL.len(), raw in proptest::collection::vec(0u64..3, 14)) {
        let tri = load(SMALL[idx]);
        let c = &raw[..7 * tri.tet_count()];
        let v = V::from_u64(c).unwrap();
        prop_assert_eq!(is_admissible(&tri, &v).unwrap(), admissible_oracle(&tri, c));
    }

    #[test]
    fn scaling_keeps_admissibility_and_scales_euler(idx in 0usize..SMALL.len(), pick in any::<usize>(), m in 1i64..4) {
        let tri = load(SMALL[idx]);
        let all = sample(SMALL[idx]);
        let v = &all[pick % all.len()];
        let w = v.scale(&m);
        prop_assert!(is_admissible(&tri, &w).unwrap());
        prop_assert_eq!(build_surface(&tri, &w).unwrap().euler_char, m * build_surface(&tri, v).unwrap().euler_char);
    }

    #[test]
    fn compatible_sums_are_admissible(idx in 0usize..SMALL.len(), a in any::<usize>(), b in any::<usize>()) {
        let tri = load(SMALL[idx]);
        let all = sample(SMALL[idx]);
        let (u, v) = (&all[a % all.len()], &all[b % all.len()]);
        let sum = u.add(v);
        prop_assert_eq!(is_admissible(&tri, &sum).unwrap(), quads_compatible(u, v));
        if quads_compatible(u, v) {
            let e = |x: &V| build_surface(&tri, x).unwrap().euler_char;
            prop_assert_eq!(e(&sum), e(u) + e(v));
        }
    }

    #[test]
    fn strip_is_idempotent(raw in proptest::collection::vec(0i64..6, 14)) {
        let v = V::new(raw).unwrap();
        let once = strip_vertex_linking(&v);
        prop_assert_eq!(strip_vertex_linking(&once), once.clone());
        prop_assert_eq!(once.min_triangle(), 0);
    }

    #[test]
    fn component_euler_sums_to_the_total(idx in 0usize..SMALL.len(), pick in any::<usize>(), links in 0i64..3) {
        let tri = load(SMALL[idx]);
        let all = sample(SMALL[idx]);
        let v = all[pick % all.len()].add(&V::vertex_link(tri.tet_count()).scale(&links));
        let s = build_surface(&tri, &v).unwrap();
        prop_assert_eq!(s.components.iter().map(|c| c.euler_char).sum::<i64>(), s.euler_char);
        prop_assert_eq!(s.euler_char, s.vertices as i64 - s.edges as i64 + s.faces as i64);
        prop_assert_eq!(s.components.iter().filter(|c| c.is_vertex_linking).count() as i64, links);
        prop_assert_eq!(s.components.iter().map(|c| c.disc_count).sum::<usize>(), s.disc_counts.iter().sum::<usize>());
    }
}
