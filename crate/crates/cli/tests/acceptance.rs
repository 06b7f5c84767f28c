//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use normcut::cells::{CellComplex, CellSet};
use normcut::cubical::{self, column, rect, ring, Voxel, VoxelFixture};
use normcut::cut_complex::{cut_along, CutError, PieceKind};
use normcut::gi_decomposition::{self, GIDecomposition, Region, RegionKind, TinyType};
use normcut::jsj_gluing::{
    assemble_tree, extract_pq, fill_homology, gluing_matrix, JsjTree, TreeEdge, Vertex,
};
use normcut::norm_homology::{
    chi_minus, relative_homology, tn_upper_bound, PatternView, PieceCandidates, RelSelector, RelativeCycle,
};
use normcut::normal_surface::{build_surface, enumerate_admissible, NormalSurfaceVector, DEFAULT_GUARD_BITS};
use normcut::seifert::{self, homology_sphere_invariants, orbifold_euler, seifert_volume, torsion_order};
use normcut::signature::Signature;
use normcut::triangulation::Triangulation;

type Check = Result<String, String>;

const SMALL: [&str; 5] = ["one_tet_a", "one_tet_b", "two_tet_a", "two_tet_b", "two_tet_c"];
const ALL: [&str; 7] = ["one_tet_a", "one_tet_b", "two_tet_a", "two_tet_b", "two_tet_c", "three_tet_a", "three_tet_b"];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn cli_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn load(name: &str) -> Triangulation {
    let text = std::fs::read_to_string(data(&format!("{name}.tri"))).expect("fixture");
    Triangulation::parse(&text).expect("parse")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn vertex_link_sphere() -> Check {
    for name in ALL {
        let tri = load(name);
        let link = tri.vertex_link::<i64>().map_err(|e| format!("{name}: {e}"))?;
        let s = build_surface(&tri, &link).map_err(|e| format!("{name}: {e}"))?;
        ensure(s.components.len() == 1 && s.euler_char == 2, || {
            format!("{name}: {} components, euler {}", s.components.len(), s.euler_char)
        })?;
    }
    Ok(format!("{} triangulations", ALL.len()))
}

/// Piece census of `v`, or of `2v` when `v` is one-sided. Both have the
/// same quads.
fn census_holds(tri: &Triangulation, v: &NormalSurfaceVector<i64>) -> Result<bool, String> {
    let cc = match cut_along(tri, v) {
        Ok(cc) => cc,
        Err(CutError::OneSided) => cut_along(tri, &v.add(v)).map_err(|e| format!("{v} doubled: {e}"))?,
        Err(e) => return Err(format!("{v}: {e}")),
    };
    let t = tri.tet_count();
    let pc = cc.piece_census();
    let per_tet = (0..t).all(|tet| {
        let has_quad = (0..3).any(|q| *v.quad(tet, q) > 0);
        let count = |k| cc.pieces.iter().filter(|p| p.source_tet == tet && p.kind == k).count();
        if has_quad {
            count(PieceKind::TruncatedPrism) == 2 && count(PieceKind::TruncatedTet) == 0
        } else {
            count(PieceKind::TruncatedPrism) == 0 && count(PieceKind::TruncatedTet) == 1
        }
    });
    Ok(per_tet && pc.truncated_tets <= t && pc.prisms <= 2 * t)
}

fn step_one_census() -> Check {
    let (mut total, mut doubled) = (0, 0);
    for name in SMALL {
        let tri = load(name);
        for v in enumerate_admissible::<i64>(&tri, 2, DEFAULT_GUARD_BITS).map_err(|e| e.to_string())? {
            total += 1;
            if matches!(cut_along(&tri, &v), Err(CutError::OneSided)) {
                doubled += 1;
            }
            ensure(census_holds(&tri, &v)?, || format!("{name}: census rule fails on {v}"))?;
        }
    }
    Ok(format!("{total} vectors, {doubled} one-sided checked through their double"))
}

/// Guts signatures per surface, computed one surface at a time.
fn replay(tri: &Triangulation, k: u64) -> Result<BTreeMap<Signature, usize>, String> {
    let mut out = BTreeMap::new();
    for v in enumerate_admissible::<i64>(tri, k, DEFAULT_GUARD_BITS).map_err(|e| e.to_string())? {
        let cc = match cut_along(tri, &v) {
            Ok(cc) => cc,
            Err(_) => continue,
        };
        let d = GIDecomposition::assemble_first(&cc).and_then(|d| d.absorb()).map_err(|e| format!("{v}: {e}"))?;
        for g in d.guts() {
            *out.entry(g.signature).or_insert(0) += 1;
        }
    }
    Ok(out)
}

fn catalog_bound() -> Check {
    let mut sizes = Vec::new();
    for name in SMALL {
        let tri = load(name);
        let cat = gi_decomposition::catalog(&tri, 2, DEFAULT_GUARD_BITS).map_err(|e| e.to_string())?;
        ensure(cat.within_bound(), || format!("{name}: {} > {}", cat.size(), cat.bound()))?;
        let failed = cat.runs.iter().filter(|r| matches!(&r.outcome, Err(e) if !matches!(e, gi_decomposition::GIError::Cut(CutError::OneSided)))).count();
        ensure(failed == 0, || format!("{name}: {failed} surfaces failed"))?;
        let got: BTreeMap<Signature, usize> = cat.entries.iter().map(|e| (e.signature.clone(), e.multiplicity)).collect();
        ensure(got == replay(&tri, 2)?, || format!("{name}: catalog differs from replay"))?;
        sizes.push(format!("{name}={}/{}", cat.size(), cat.bound()));
    }
    Ok(sizes.join(" "))
}

fn guts_fixture(fx: VoxelFixture) -> GIDecomposition {
    let regions = fx.regions.into_iter().map(|pieces| Region { pieces, kind: RegionKind::Guts, pseudo: false }).collect();
    GIDecomposition::from_parts(fx.poly, regions, fx.annuli).expect("valid fixture")
}

/// Hand-built decompositions with tiny pieces inside tiny pieces.
fn nested_fixtures() -> Vec<(&'static str, GIDecomposition)> {
    let mut cube_in_ring = column(&ring(&rect(0, 0, 3, 3), &rect(1, 1, 2, 2)), 1, 0);
    cube_in_ring.extend(column(&[(1, 1)], 1, 1));

    let mut nested = column(&ring(&rect(0, 0, 5, 5), &rect(1, 1, 4, 4)), 1, 0);
    nested.extend(column(&ring(&rect(1, 1, 4, 4), &rect(2, 2, 3, 3)), 1, 1));
    nested.extend(column(&[(2, 2)], 1, 2));

    let mut arched = column(&ring(&rect(0, 0, 5, 5), &rect(1, 1, 4, 4)), 1, 0);
    for p in [(2, 2, 0), (2, 2, 1), (2, 2, 2), (3, 2, 2), (4, 2, 2), (4, 2, 1)] {
        arched.push((p, 0));
    }
    arched.extend(column(&ring(&rect(1, 1, 4, 4), &rect(2, 2, 3, 3)), 1, 1));

    let centre: Voxel = (1, 1, 1);
    let inner: Vec<(i32, i32)> = rect(0, 0, 3, 3).into_iter().collect();
    let mut punctured = column(&ring(&rect(-1, -1, 4, 4), &rect(0, 0, 3, 3)), 3, 0);
    punctured.extend(column(&inner, 3, 1).into_iter().filter(|(p, _)| *p != centre));

    vec![
        ("cube-in-ring", guts_fixture(cubical::build(&cube_in_ring, None))),
        ("nested-rings", guts_fixture(cubical::build(&nested, None))),
        ("arched-ring", guts_fixture(cubical::build(&arched, None))),
        ("punctured-block", guts_fixture(cubical::build(&punctured, Some(centre)))),
    ]
}

/// Absorb and check strict decrease and the fixed point.
fn absorbs(label: &str, d: GIDecomposition) -> Result<usize, String> {
    let first = d.annulus_count();
    let d = d.absorb().map_err(|e| format!("{label}: {e}"))?;
    let mut prev = first;
    for s in d.steps() {
        ensure(s.annuli_before == prev && s.annuli_after < s.annuli_before, || {
            format!("{label}: step {} -> {} after {prev}", s.annuli_before, s.annuli_after)
        })?;
        prev = s.annuli_after;
    }
    ensure(prev == d.annulus_count(), || format!("{label}: final count mismatch"))?;
    let left = d.detect_tiny().into_iter().filter(|c| c.tiny != TinyType::Unknown).count();
    ensure(left == 0, || format!("{label}: {left} tiny pieces left"))?;
    Ok(d.steps().len())
}

fn absorption() -> Check {
    let (mut runs, mut steps) = (0, 0);
    for name in ALL {
        let tri = load(name);
        for v in enumerate_admissible::<i64>(&tri, 2, DEFAULT_GUARD_BITS).map_err(|e| e.to_string())? {
            let Ok(cc) = cut_along(&tri, &v) else { continue };
            let d = GIDecomposition::assemble_first(&cc).map_err(|e| format!("{name} {v}: {e}"))?;
            steps += absorbs(&format!("{name} {v}"), d)?;
            runs += 1;
        }
    }
    let mut fixture_steps = Vec::new();
    for (label, d) in nested_fixtures() {
        let n = absorbs(label, d)?;
        ensure(n > 0, || format!("{label}: nothing absorbed"))?;
        fixture_steps.push(format!("{label}:{n}"));
    }
    Ok(format!("{runs} decompositions ({steps} steps), fixtures {}", fixture_steps.join(" ")))
}

fn brieskorn_237() -> Check {
    let chi = orbifold_euler(&[2, 3, 7]);
    ensure(chi == rat(-1, 42), || format!("chi = {chi}"))?;
    for sign in [1, -1] {
        let inv = homology_sphere_invariants(&[2, 3, 7], sign).map_err(|e| e.to_string())?;
        let sv = seifert_volume(&inv).map_err(|e| e.to_string())?;
        ensure(sv == rat(1, 42), || format!("sv = {sv}"))?;
        let scaled = sv * rat(42 * 42, 1);
        ensure(scaled == rat(42, 1) && inv.product() == BigInt::from(42), || format!("42^2 sv = {scaled}"))?;
    }
    Ok("chi=-1/42 sv=1/42 42^2*sv=42=prod".into())
}

/// Pairwise coprime ascending tuples of length >= 3 with negative orbifold
/// Euler characteristic and product at most `cap`, by plain nested search.
fn coprime_tuples(cap: u64) -> Vec<Vec<u64>> {
    fn go(t: &mut Vec<u64>, prod: u64, cap: u64, out: &mut Vec<Vec<u64>>) {
        if t.len() >= 3 {
            out.push(t.clone());
        }
        let start = t.last().map_or(2, |&x| x + 1);
        for x in start..=cap / prod {
            if t.iter().all(|&y| x.gcd(&y) == 1) {
                t.push(x);
                go(t, prod * x, cap, out);
                t.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), 1, cap, &mut out);
    out.retain(|a| {
        let s: BigRational = a.iter().map(|&x| rat(x as i64 - 1, x as i64)).sum();
        s > rat(2, 1)
    });
    out
}

/// Twists with `0 < b < a` making `sign/prod + sum b/a` an integer, by trying
/// every tuple.
fn twists(a: &[u64], sign: i64) -> Vec<Vec<u64>> {
    let prod: u64 = a.iter().product();
    let mut found = Vec::new();
    let mut b = vec![1u64; a.len()];
    loop {
        let mut sum = rat(sign, prod as i64);
        for (x, y) in b.iter().zip(a) {
            sum += rat(*x as i64, *y as i64);
        }
        if sum.is_integer() {
            found.push(b.clone());
        }
        let mut i = 0;
        loop {
            if i == a.len() {
                return found;
            }
            b[i] += 1;
            if b[i] < a[i] {
                break;
            }
            b[i] = 1;
            i += 1;
        }
    }
}

fn census_oracle() -> Check {
    let got = seifert::census(&rat(1, 1)).map_err(|e| e.to_string())?;
    for e in &got {
        let inv = &e.invariants;
        ensure(torsion_order(inv).is_one(), || format!("{inv}: torsion {}", torsion_order(inv)))?;
        ensure(e.chi_b <= rat(-1, 42), || format!("{inv}: chi {}", e.chi_b))?;
    }
    let got: BTreeSet<(Vec<u64>, i64, Vec<u64>, BigRational, BigRational)> = got
        .iter()
        .map(|e| {
            let i = &e.invariants;
            (i.a().to_vec(), i.sign() as i64, i.b().to_vec(), i.e0().clone(), e.sv.clone())
        })
        .collect();
    let mut want = BTreeSet::new();
    for a in coprime_tuples(42 * 42) {
        let prod: u64 = a.iter().product();
        let chi = rat(2, 1) - a.iter().map(|&x| rat(x as i64 - 1, x as i64)).sum::<BigRational>();
        for sign in [1i64, -1] {
            let bs = twists(&a, sign);
            ensure(bs.len() == 1, || format!("{a:?} sign {sign}: {} twist solutions", bs.len()))?;
            let e0 = rat(sign, prod as i64);
            let sv = (chi.clone() * chi.clone() / e0.clone()).abs();
            want.insert((a.clone(), sign, bs[0].clone(), e0, sv));
        }
    }
    ensure(got == want, || {
        format!("census has {} entries, oracle {}; {} differ", got.len(), want.len(), got.symmetric_difference(&want).count())
    })?;
    Ok(format!("{} entries", got.len()))
}

fn determinant_sweep() -> Check {
    let mut n = 0;
    for p in -50..=50 {
        for q in -50..=50 {
            for eps in [1i8, -1] {
                let m = gluing_matrix(p, q, eps);
                ensure(m.det() == -1, || format!("det {} at ({p},{q},{eps})", m.det()))?;
                ensure(extract_pq(&m) == Ok((p, q, eps)), || format!("round trip fails at ({p},{q},{eps})"))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} matrices"))
}

/// Determinant by fraction-free elimination.
fn bareiss(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(r) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else { return BigInt::zero() };
            m.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// A random tree of standard vertices with Slope-form edges.
fn random_tree(rng: &mut ChaCha8Rng) -> JsjTree {
    let n = rng.gen_range(2..=6);
    let parents: Vec<usize> = (1..n).map(|v| rng.gen_range(0..v)).collect();
    let mut degree = vec![0usize; n];
    let mut ends = Vec::new();
    for (i, &p) in parents.iter().enumerate() {
        let v = i + 1;
        ends.push(((p, degree[p]), (v, degree[v])));
        degree[p] += 1;
        degree[v] += 1;
    }
    let edges = ends
        .into_iter()
        .map(|(from, to)| {
            let eps = if rng.gen_bool(0.5) { 1 } else { -1 };
            TreeEdge { from, to, matrix: gluing_matrix(rng.gen_range(-20..=20), rng.gen_range(-20..=20), eps) }
        })
        .collect();
    JsjTree { vertices: degree.into_iter().map(Vertex::standard).collect(), edges }
}

/// `|H_1|` from the relation matrix of a tree of standard vertices: one
/// generator per torus (its longitude), meridians zero.
fn tree_order(t: &JsjTree) -> BigInt {
    let mut offset = Vec::new();
    let mut total = 0;
    for v in &t.vertices {
        offset.push(total);
        total += v.tori().len();
    }
    let gen = |(v, k): (usize, usize)| offset[v] + k;
    let mut rows = Vec::new();
    for e in &t.edges {
        let [[_, _], [c, d]] = e.matrix.entries();
        // meridian: 0 = c * longitude on the far side
        let mut r = vec![BigInt::zero(); total];
        r[gen(e.to)] -= BigInt::from(c);
        rows.push(r);
        // longitude = d * longitude on the far side
        let mut r = vec![BigInt::zero(); total];
        r[gen(e.from)] += 1;
        r[gen(e.to)] -= BigInt::from(d);
        rows.push(r);
    }
    bareiss(rows).abs()
}

fn homology_spheres() -> Check {
    for p in -50..=50 {
        for e in [1, -1] {
            let h = fill_homology(&Vertex::standard(1), (p, e)).map_err(|x| x.to_string())?;
            ensure(h.is_trivial(), || format!("slope ({p},{e}) gives {h}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..100 {
        let t = random_tree(&mut rng);
        let h = assemble_tree(&t).map_err(|e| format!("tree {i}: {e}"))?;
        let order = tree_order(&t);
        ensure(h.is_homology_sphere && order.is_one(), || format!("tree {i}: {} vs oracle order {order}", h.homology))?;
        ensure(h.homology.order() == Some(order), || format!("tree {i}: order mismatch"))?;
    }
    Ok("101 slopes x 2 signs, 100 random trees".into())
}

/// Signs making a set of 2-cells a chain whose boundary lies in `rel`.
fn orient(cx: &CellComplex, faces: &[usize], rel: &CellSet) -> Vec<(usize, i64)> {
    let mut sign: BTreeMap<usize, i64> = BTreeMap::from([(faces[0], 1)]);
    let mut queue = vec![faces[0]];
    while let Some(f) = queue.pop() {
        for (e, w) in cx.boundary_chain(2, f) {
            if rel.member[1][e] {
                continue;
            }
            for &g in faces {
                if sign.contains_key(&g) {
                    continue;
                }
                if let Some(&v) = cx.boundary_chain(2, g).get(&e) {
                    sign.insert(g, -sign[&f] * w * v);
                    queue.push(g);
                }
            }
        }
    }
    sign.into_iter().collect()
}

/// A thickened torus with its two annulus generators of relative `H_2`.
fn thickened_torus() -> (CellComplex, RelativeCycle, RelativeCycle) {
    let outer = ring(&rect(0, 0, 7, 7), &rect(3, 3, 4, 4));
    let channel: BTreeSet<(i32, i32)> = ring(&rect(1, 1, 6, 6), &rect(2, 2, 5, 5)).into_iter().collect();
    let mut voxels = Vec::new();
    for z in 0..3 {
        for &(x, y) in &outer {
            if !(z == 1 && channel.contains(&(x, y))) {
                voxels.push(((x, y, z), 0));
            }
        }
    }
    let fx = cubical::build(&voxels, None);
    let faces = fx.faces.clone();
    let region = Region { pieces: fx.regions[0].clone(), kind: RegionKind::Guts, pseudo: false };
    let d = GIDecomposition::from_parts(fx.poly, vec![region], fx.annuli).expect("fixture");
    let asm = d.region_assembly(0);
    let cx = asm.complex.clone();
    let rel = cx.closure_of_faces(&cx.boundary_faces());
    let cell = |vx: Voxel, k: usize| asm.face_cell[&faces[&vx][k]].0;
    let present = |vx: &Voxel| faces.contains_key(vx);
    let across: Vec<usize> = (0..3)
        .flat_map(|y| (0..3).map(move |z| (2, y, z)))
        .filter(|&(x, y, z)| present(&(x, y, z)) && present(&(x + 1, y, z)))
        .map(|vx| cell(vx, 3))
        .collect();
    let along: Vec<usize> =
        outer.iter().filter(|&&(x, y)| [x, y].iter().any(|c| *c == 0 || *c == 6)).map(|&(x, y)| cell((x, y, 0), 1)).collect();
    let a = RelativeCycle::from_faces(&cx, &orient(&cx, &across, &rel));
    let b = RelativeCycle::from_faces(&cx, &orient(&cx, &along, &rel));
    (cx, a, b)
}

fn norm_plumbing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc41);
    for _ in 0..20 {
        let list: Vec<i64> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(-12..=4)).collect();
        let want: u64 = list.iter().map(|&x| if x < 0 { (-x) as u64 } else { 0 }).sum();
        ensure(chi_minus(&list) == want, || format!("chi_minus({list:?}) = {}", chi_minus(&list)))?;
    }

    // nested candidate sets drawn from generators, relabelled copies and
    // boundaries of 3-cells
    let (cx, a, b) = thickened_torus();
    let mut pool = vec![a.clone(), b.clone()];
    for k in 1..6 {
        pool.push(RelativeCycle { chain: a.chain.clone(), chi_minus: k });
        pool.push(RelativeCycle { chain: b.chain.clone(), chi_minus: k + 1 });
    }
    for c in 0..4 {
        let faces: Vec<(usize, i64)> = cx.boundary_chain(3, c).into_iter().collect();
        pool.push(RelativeCycle::from_faces(&cx, &faces));
    }
    let view = PatternView { cells: &cx, pattern: &[] };
    let bound = |s: &[usize]| {
        let surfaces = s.iter().map(|&i| pool[i].clone()).collect();
        tn_upper_bound(&[PieceCandidates { piece: view, surfaces }]).ok()
    };
    let mut compared = 0;
    for _ in 0..60 {
        let mut small: Vec<usize> = (0..pool.len()).filter(|_| rng.gen_bool(0.3)).collect();
        let mut large = small.clone();
        large.extend((0..pool.len()).filter(|_| rng.gen_bool(0.3)));
        large.sort_unstable();
        large.dedup();
        small.sort_unstable();
        if let (Some(x), y) = (bound(&small), bound(&large)) {
            ensure(y.is_some_and(|y| y <= x), || format!("bound rose from {x} to {y:?}"))?;
            compared += 1;
        }
    }
    ensure(compared > 0, || "no generating subsets drawn".into())?;

    let mut pieces = 0;
    for name in ALL {
        let tri = load(name);
        for v in enumerate_admissible::<i64>(&tri, 2, DEFAULT_GUARD_BITS).map_err(|e| e.to_string())? {
            let Ok(d) = gi_decomposition::run_surface(&tri, &v) else { continue };
            for g in d.guts() {
                let pattern: Vec<Vec<usize>> = g.pattern_annuli.iter().map(|a| a.faces.clone()).collect();
                let view = PatternView { cells: &g.cells, pattern: &pattern };
                for sel in [RelSelector::Empty, RelSelector::Boundary, RelSelector::BoundaryMinusPattern] {
                    let r = relative_homology(view, &sel).map_err(|e| e.to_string())?;
                    ensure(r.cell_euler() == r.betti_euler(), || {
                        format!("{name} {v} {sel}: {} vs {}", r.cell_euler(), r.betti_euler())
                    })?;
                }
                pieces += 1;
            }
        }
    }
    Ok(format!("20 lists, {compared} nested pairs, {pieces} guts pieces x 3 selectors"))
}

/// Runs of the binary, as (label, arguments).
fn cli_runs(scratch: &Path) -> Result<Vec<(String, Vec<String>)>, String> {
    let s = |p: PathBuf| p.display().to_string();
    let mut runs: Vec<(String, Vec<String>)> = Vec::new();
    let mut add = |label: String, args: Vec<String>| runs.push((label, args));
    for name in ALL {
        add(format!("validate {name}"), vec!["validate".into(), "--tri".into(), s(data(&format!("{name}.tri")))]);
    }
    for name in SMALL {
        let tri = s(data(&format!("{name}.tri")));
        add(format!("surfaces {name}"), vec!["surfaces".into(), "--tri".into(), tri.clone(), "--max-coord".into(), "2".into()]);
        add(format!("catalog {name}"), vec!["catalog".into(), "--tri".into(), tri, "--max-coord".into(), "2".into()]);
    }
    for (tri, surf) in [("one_tet_b", "one_tet_b_quad2"), ("two_tet_a", "two_tet_a_genus2"), ("two_tet_b", "two_tet_b_quad")] {
        let (t, f) = (s(data(&format!("{tri}.tri"))), s(data(&format!("{surf}.surf"))));
        let report = scratch.join(format!("{surf}.guts"));
        let out = run_bin(&["guts", "--tri", &t, "--surface", &f])?;
        std::fs::write(&report, out.0).map_err(|e| e.to_string())?;
        add(format!("cut {surf}"), vec!["cut".into(), "--tri".into(), t.clone(), "--surface".into(), f.clone()]);
        add(format!("guts {surf}"), vec!["guts".into(), "--tri".into(), t, "--surface".into(), f]);
        for (rel, stage) in [("boundary", "guts"), ("boundary-minus-pattern", "guts"), ("none", "refined")] {
            add(
                format!("norm {surf} {rel} {stage}"),
                ["norm", "--piece", &s(report.clone()), "--rel", rel, "--stage", stage].map(String::from).to_vec(),
            );
        }
    }
    for bound in ["1/42", "1"] {
        add(format!("census {bound}"), ["census", "--sv-bound", bound].map(String::from).to_vec());
        add(format!("census {bound} lines"), ["census", "--sv-bound", bound, "--emit", "lines"].map(String::from).to_vec());
    }
    for (p, q, e) in [(0, 0, 1), (2, 3, 1), (-50, 50, -1), (17, -4, -1)] {
        add(format!("glue {p} {q} {e}"), ["glue", "--p", &p.to_string(), "--q", &q.to_string(), "--eps", &e.to_string()].map(String::from).to_vec());
    }
    for tree in ["chain", "presented", "order_two"] {
        add(format!("tree {tree}"), vec!["tree".into(), "--file".into(), s(cli_data(&format!("{tree}.tree")))]);
    }
    Ok(runs)
}

/// Standard output, standard error and exit code.
fn run_bin(args: &[&str]) -> Result<(String, String, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_normcut")).args(args).output().map_err(|e| e.to_string())?;
    Ok((
        String::from_utf8(out.stdout).map_err(|e| e.to_string())?,
        String::from_utf8(out.stderr).map_err(|e| e.to_string())?,
        out.status.code().unwrap_or(-1),
    ))
}

fn determinism() -> Check {
    let scratch = std::env::temp_dir().join(format!("normcut-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&scratch).map_err(|e| e.to_string())?;
    let runs = cli_runs(&scratch)?;
    let mut count = 0;
    for (label, args) in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (first, manifest, code) = run_bin(&args)?;
        ensure(code == 0, || format!("{label}: exit {code}: {manifest}"))?;
        let digest = first.lines().last().and_then(|l| l.strip_prefix("manifest ")).unwrap_or_default().to_string();
        ensure(manifest.contains(&format!("digest {digest}")), || format!("{label}: manifest digest not embedded"))?;
        for threads in [None, Some("4"), Some("1")] {
            let mut full: Vec<&str> = Vec::new();
            if let Some(t) = threads {
                full.extend(["--threads", t]);
            }
            full.extend(&args);
            let (again, _, code) = run_bin(&full)?;
            ensure(code == 0 && again == first, || format!("{label} with threads {threads:?}: report differs"))?;
            count += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&scratch);
    Ok(format!("{} commands, {count} repeat runs byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 10] = [
        ("vertex-link sphere", Duration::from_secs(1), vertex_link_sphere),
        ("step-one census bounds", Duration::from_secs(60), step_one_census),
        ("catalog bound and replay", Duration::from_secs(300), catalog_bound),
        ("absorption fixed point", Duration::from_secs(60), absorption),
        ("Sigma(2,3,7) exact values", Duration::from_secs(1), brieskorn_237),
        ("census vs brute force", Duration::from_secs(60), census_oracle),
        ("gluing determinant sweep", Duration::from_secs(1), determinant_sweep),
        ("homology-sphere assembly", Duration::from_secs(60), homology_spheres),
        ("chi_minus and norm plumbing", Duration::from_secs(60), norm_plumbing),
        ("CLI determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {took:?}, limit {limit:?}")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name}: {detail} [{} ms]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_millis()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
