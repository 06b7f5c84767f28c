//! Normal coordinates, matching equations, surface reconstruction and
//! bounded enumeration.
//!
//! Coordinates are tetrahedron-major: four triangle types (by the corner they
//! cut off) followed by the three quad types `{01|23}`, `{02|13}`, `{03|12}`.

use std::fmt;

use rayon::prelude::*;

use crate::scalar::Ring;
use crate::smith::IntMatrix;
use crate::triangulation::{ParityUnionFind, Triangulation, UnionFind};

/// Vertex blocks of each quad type; vertex 0 is always in the first block.
pub const QUAD_BLOCKS: [[[u8; 2]; 2]; 3] = [[[0, 1], [2, 3]], [[0, 2], [1, 3]], [[0, 3], [1, 2]]];

/// Default cap on `7t·log2(k+1)` for [`enumerate_admissible`].
pub const DEFAULT_GUARD_BITS: f64 = 40.0;

/// The quad type whose blocks put `a` and `b` together.
pub fn quad_pairing(a: u8, b: u8) -> usize {
    debug_assert_ne!(a, b);
    let other = if a == 0 { b } else if b == 0 { a } else { 6 - a - b };
    (other - 1) as usize
}

/// The vertex sharing a block with `v` under quad type `q`.
pub fn quad_partner(q: usize, v: u8) -> u8 {
    for block in QUAD_BLOCKS[q] {
        if block[0] == v {
            return block[1];
        }
        if block[1] == v {
            return block[0];
        }
    }
    unreachable!()
}

/// Whether `v` lies in the block containing vertex 0.
pub fn in_zero_block(q: usize, v: u8) -> bool {
    QUAD_BLOCKS[q][0].contains(&v)
}

/// Whether quad type `q` separates vertices `a` and `b`.
pub fn quad_separates(q: usize, a: u8, b: u8) -> bool {
    in_zero_block(q, a) != in_zero_block(q, b)
}

/// The three vertices of face `f`, ascending.
pub fn face_vertices(f: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut k = 0;
    for v in 0..4u8 {
        if v != f {
            out[k] = v;
            k += 1;
        }
    }
    out
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalSurfaceVector<I> {
    coords: Vec<I>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("negative coordinate at position {0}")]
    Negative(usize),
    #[error("vector is not admissible")]
    Inadmissible,
    #[error("surface too large to instantiate ({0} discs)")]
    TooLarge(u128),
    #[error("enumeration guard exceeded: 7t*log2(k+1) = {bits:.1} > {limit:.1}")]
    Guard { bits: f64, limit: f64 },
    #[error("triangulation has unglued faces")]
    OpenTriangulation,
    #[error("malformed surface file: {0}")]
    Malformed(String),
}

impl<I: Ring> NormalSurfaceVector<I> {
    pub fn new(coords: Vec<I>) -> Result<Self, SurfaceError> {
        if coords.len() % 7 != 0 {
            return Err(SurfaceError::LengthMismatch { found: coords.len(), expected: 7 * (coords.len() / 7 + 1) });
        }
        if let Some(i) = coords.iter().position(|c| c.is_negative()) {
            return Err(SurfaceError::Negative(i));
        }
        Ok(NormalSurfaceVector { coords })
    }

    pub fn from_u64(coords: &[u64]) -> Result<Self, SurfaceError> {
        Self::new(coords.iter().map(|&c| I::from_u64(c).expect("fits")).collect())
    }

    pub fn zero(t: usize) -> Self {
        NormalSurfaceVector { coords: vec![I::zero(); 7 * t] }
    }

    pub fn vertex_link(t: usize) -> Self {
        let mut coords = vec![I::zero(); 7 * t];
        for i in 0..t {
            for c in 0..4 {
                coords[7 * i + c] = I::one();
            }
        }
        NormalSurfaceVector { coords }
    }

    /// Parse one line of `7t` integers.
    pub fn parse(text: &str) -> Result<Self, SurfaceError> {
        let coords = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split_whitespace())
            .map(|tok| {
                tok.parse::<num_bigint::BigInt>()
                    .ok()
                    .and_then(|b| I::from_big(&b))
                    .ok_or_else(|| SurfaceError::Malformed(format!("bad coordinate {tok:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if coords.is_empty() {
            return Err(SurfaceError::Malformed("no coordinates".into()));
        }
        Self::new(coords)
    }

    pub fn coords(&self) -> &[I] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn tet_count(&self) -> usize {
        self.coords.len() / 7
    }

    pub fn triangle(&self, tet: usize, corner: u8) -> &I {
        &self.coords[7 * tet + corner as usize]
    }

    pub fn quad(&self, tet: usize, q: usize) -> &I {
        &self.coords[7 * tet + 4 + q]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Componentwise sum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        NormalSurfaceVector {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn scale(&self, k: &I) -> Self {
        NormalSurfaceVector { coords: self.coords.iter().map(|a| a.clone() * k.clone()).collect() }
    }

    /// Smallest triangle coordinate over the whole vector.
    pub fn min_triangle(&self) -> I {
        (0..self.tet_count())
            .flat_map(|i| (0..4u8).map(move |c| (i, c)))
            .map(|(i, c)| self.triangle(i, c).clone())
            .min()
            .unwrap_or_else(I::zero)
    }

    /// Coordinates as machine integers, if they fit.
    pub fn to_usize(&self) -> Option<Vec<usize>> {
        self.coords.iter().map(|c| c.to_usize()).collect()
    }

    pub fn serialize(&self) -> String {
        let toks: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        toks.join(" ")
    }
}

impl<I: Ring> fmt::Debug for NormalSurfaceVector<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.tet_count() {
            if i > 0 {
                write!(f, " / ")?;
            }
            let c = &self.coords[7 * i..7 * i + 7];
            write!(f, "{},{},{},{} | {},{},{}", c[0], c[1], c[2], c[3], c[4], c[5], c[6])?;
        }
        write!(f, ")")
    }
}

impl<I: Ring> fmt::Display for NormalSurfaceVector<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// One matching equation per (glued face pair, corner), each face pair taken once.
/// Rows are returned as sparse `(coordinate, coefficient)` lists.
pub(crate) fn matching_rows(tri: &Triangulation) -> Vec<Vec<(usize, i64)>> {
    let t = tri.tet_count();
    let mut rows = Vec::new();
    for i in 0..t {
        for f in 0..4u8 {
            let Some(g) = tri.gluing(i, f) else { continue };
            let tf = g.target_face(f);
            if (g.tet, tf) < (i, f) {
                continue;
            }
            for v in (0..4u8).filter(|&v| v != f) {
                let pv = g.perm.apply(v);
                let mut row: Vec<(usize, i64)> = Vec::new();
                let mut push = |c: usize, x: i64| {
                    if let Some(e) = row.iter_mut().find(|e| e.0 == c) {
                        e.1 += x;
                    } else {
                        row.push((c, x));
                    }
                };
                push(7 * i + v as usize, 1);
                push(7 * i + 4 + quad_pairing(f, v), 1);
                push(7 * g.tet + pv as usize, -1);
                push(7 * g.tet + 4 + quad_pairing(tf, pv), -1);
                row.retain(|e| e.1 != 0);
                row.sort();
                rows.push(row);
            }
        }
    }
    rows
}

/// Matching equations as a dense matrix: a vector satisfies them iff it lies in the kernel.
pub fn matching_matrix<I: Ring>(tri: &Triangulation) -> IntMatrix<I> {
    let rows = matching_rows(tri);
    let cols = 7 * tri.tet_count();
    IntMatrix::from_rows(
        cols,
        rows.iter()
            .map(|r| {
                let mut dense = vec![I::zero(); cols];
                for &(c, x) in r {
                    dense[c] = I::of(x);
                }
                dense
            })
            .collect(),
    )
}

fn check_len<I: Ring>(tri: &Triangulation, v: &NormalSurfaceVector<I>) -> Result<(), SurfaceError> {
    if v.len() != 7 * tri.tet_count() {
        return Err(SurfaceError::LengthMismatch { found: v.len(), expected: 7 * tri.tet_count() });
    }
    Ok(())
}

/// Quad constraint and matching equations.
pub fn is_admissible<I: Ring>(tri: &Triangulation, v: &NormalSurfaceVector<I>) -> Result<bool, SurfaceError> {
    check_len(tri, v)?;
    for i in 0..tri.tet_count() {
        if (0..3).filter(|&q| !v.quad(i, q).is_zero()).count() > 1 {
            return Ok(false);
        }
    }
    for row in matching_rows(tri) {
        let s = row.iter().fold(I::zero(), |acc, &(c, x)| acc + v.coords[c].clone() * I::of(x));
        if !s.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Subtract the largest multiple of the vertex link that keeps every coordinate non-negative.
pub fn strip_vertex_linking<I: Ring>(v: &NormalSurfaceVector<I>) -> NormalSurfaceVector<I> {
    let k = v.min_triangle();
    if k.is_zero() {
        return v.clone();
    }
    let mut coords = v.coords.clone();
    for i in 0..v.tet_count() {
        for c in 0..4 {
            coords[7 * i + c] = coords[7 * i + c].clone() - k.clone();
        }
    }
    NormalSurfaceVector { coords }
}

/// Stacked normal discs inside one tetrahedron. `tri[c]` triangles cut off
/// corner `c`, layer 0 nearest the corner; `quad` is `(type, count)` with
/// layer 0 nearest the block containing vertex 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct TetLayout {
    pub tri: [usize; 4],
    pub quad: Option<(usize, usize)>,
}

/// A normal disc inside one tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiscRef {
    Triangle { corner: u8, layer: usize },
    Quad { qtype: usize, layer: usize },
}

impl TetLayout {
    pub fn from_coords(c: &[usize]) -> TetLayout {
        let quad = (0..3).find(|&q| c[4 + q] > 0).map(|q| (q, c[4 + q]));
        TetLayout { tri: [c[0], c[1], c[2], c[3]], quad }
    }

    /// Number of normal arcs at corner `v` of face `f`.
    pub fn arcs_at(&self, f: u8, v: u8) -> usize {
        self.tri[v as usize]
            + match self.quad {
                Some((q, m)) if quad_partner(q, f) == v => m,
                _ => 0,
            }
    }

    /// Number of normal-disc points on the edge `{a, b}`.
    pub fn edge_points(&self, a: u8, b: u8) -> usize {
        self.tri[a as usize]
            + self.tri[b as usize]
            + match self.quad {
                Some((q, m)) if quad_separates(q, a, b) => m,
                _ => 0,
            }
    }

    /// The disc whose arc sits `k` places from corner `v` on face `f`.
    pub fn arc_disc(&self, f: u8, v: u8, k: usize) -> DiscRef {
        let n = self.tri[v as usize];
        if k < n {
            return DiscRef::Triangle { corner: v, layer: k };
        }
        let (q, m) = self.quad.expect("arc index within range");
        debug_assert_eq!(quad_partner(q, f), v);
        let j = k - n;
        let layer = if in_zero_block(q, v) { j } else { m - 1 - j };
        DiscRef::Quad { qtype: q, layer }
    }

    /// Position, counted from `v`, of the arc of quad layer `layer` at corner `v`.
    pub fn quad_arc_index(&self, v: u8, layer: usize) -> usize {
        let (q, m) = self.quad.expect("quad present");
        self.tri[v as usize] + if in_zero_block(q, v) { layer } else { m - 1 - layer }
    }
}

/// A connected component of an instantiated normal surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceComponent {
    pub euler_char: i64,
    pub orientable: bool,
    pub two_sided: bool,
    pub is_vertex_linking: bool,
    pub disc_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceComplex {
    pub components: Vec<SurfaceComponent>,
    /// Number of discs of each of the `7t` types.
    pub disc_counts: Vec<usize>,
    /// V - E + F of the whole instantiated complex.
    pub euler_char: i64,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

impl SurfaceComplex {
    pub fn is_two_sided(&self) -> bool {
        self.components.iter().all(|c| c.two_sided)
    }
}

/// Largest surface `build_surface` will instantiate.
pub const MAX_DISCS: u128 = 2_000_000;

/// Instantiate the discs, glue them along matching arcs and measure each component.
pub fn build_surface<I: Ring>(tri: &Triangulation, v: &NormalSurfaceVector<I>) -> Result<SurfaceComplex, SurfaceError> {
    if !tri.is_closed() {
        return Err(SurfaceError::OpenTriangulation);
    }
    if !is_admissible(tri, v)? {
        return Err(SurfaceError::Inadmissible);
    }
    let total: u128 = v.coords.iter().map(|c| c.to_u128().unwrap_or(u128::MAX)).fold(0u128, |a, b| a.saturating_add(b));
    if total > MAX_DISCS {
        return Err(SurfaceError::TooLarge(total));
    }
    let c = v.to_usize().expect("bounded above");
    let t = tri.tet_count();
    let layouts: Vec<TetLayout> = (0..t).map(|i| TetLayout::from_coords(&c[7 * i..7 * i + 7])).collect();

    // disc ids
    let mut disc_base = vec![0usize; t];
    let mut n_discs = 0;
    for i in 0..t {
        disc_base[i] = n_discs;
        n_discs += c[7 * i..7 * i + 7].iter().sum::<usize>();
    }
    let disc_id = |i: usize, d: DiscRef| -> usize {
        let l = &layouts[i];
        match d {
            DiscRef::Triangle { corner, layer } => disc_base[i] + l.tri[..corner as usize].iter().sum::<usize>() + layer,
            DiscRef::Quad { layer, .. } => disc_base[i] + l.tri.iter().sum::<usize>() + layer,
        }
    };

    // point ids: (tet, edge, position from the smaller vertex)
    let edges: [(u8, u8); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut point_base = vec![[0usize; 6]; t];
    let mut n_points = 0;
    for i in 0..t {
        for (e, &(a, b)) in edges.iter().enumerate() {
            point_base[i][e] = n_points;
            n_points += layouts[i].edge_points(a, b);
        }
    }
    let point_id = |i: usize, from: u8, to: u8, pos: usize| -> usize {
        let e = crate::triangulation::edge_index(from, to);
        let n = layouts[i].edge_points(from, to);
        let p = if from < to { pos } else { n - 1 - pos };
        point_base[i][e] + p
    };

    let mut discs_uf = UnionFind::new(n_discs);
    let mut side_uf = ParityUnionFind::new(n_discs);
    let mut two_sided_ok = vec![true; n_discs];
    let mut points_uf = UnionFind::new(n_points);
    let mut arc_slots = 0usize;
    let mut conflicts = Vec::new();

    for i in 0..t {
        for f in 0..4u8 {
            let g = tri.glued(i, f);
            let tf = g.target_face(f);
            for v in face_vertices(f) {
                let pv = g.perm.apply(v);
                let k_max = layouts[i].arcs_at(f, v);
                arc_slots += k_max;
                for k in 0..k_max {
                    let d1 = layouts[i].arc_disc(f, v, k);
                    let d2 = layouts[g.tet].arc_disc(tf, pv, k);
                    let a = disc_id(i, d1);
                    let b = disc_id(g.tet, d2);
                    discs_uf.union(a, b);
                    let toward = |d: DiscRef, corner: u8| match d {
                        DiscRef::Triangle { .. } => true,
                        DiscRef::Quad { qtype, .. } => in_zero_block(qtype, corner),
                    };
                    let rel = (toward(d1, v) != toward(d2, pv)) as u8;
                    if !side_uf.union(a, b, rel) {
                        conflicts.push(a);
                    }
                }
                // points along the two edges at this corner
                for w in face_vertices(f).into_iter().filter(|&w| w != v) {
                    let n = layouts[i].edge_points(v, w);
                    for pos in 0..n {
                        points_uf.union(point_id(i, v, w, pos), point_id(g.tet, pv, g.perm.apply(w), pos));
                    }
                }
            }
        }
    }
    for a in conflicts {
        let r = discs_uf.find(a);
        two_sided_ok[r] = false;
    }

    // component bookkeeping
    let mut comp_index = std::collections::BTreeMap::new();
    for d in 0..n_discs {
        let r = discs_uf.find(d);
        let next = comp_index.len();
        comp_index.entry(r).or_insert(next);
    }
    let nc = comp_index.len();
    let mut faces = vec![0i64; nc];
    let mut has_quad = vec![false; nc];
    let mut sided = vec![true; nc];
    for i in 0..t {
        for d in disc_refs(&layouts[i]) {
            let id = disc_id(i, d);
            let comp = comp_index[&discs_uf.find(id)];
            faces[comp] += 1;
            if matches!(d, DiscRef::Quad { .. }) {
                has_quad[comp] = true;
            }
        }
    }
    for (r, &comp) in &comp_index {
        if !two_sided_ok[*r] {
            sided[comp] = false;
        }
    }
    // every point lies on a triangle or quad corner; charge it to that disc's component
    let mut point_comp = vec![usize::MAX; n_points];
    let mut arcs_per_comp = vec![0i64; nc];
    for i in 0..t {
        for f in 0..4u8 {
            for v in face_vertices(f) {
                for k in 0..layouts[i].arcs_at(f, v) {
                    let comp = comp_index[&discs_uf.find(disc_id(i, layouts[i].arc_disc(f, v, k)))];
                    arcs_per_comp[comp] += 1;
                    for w in face_vertices(f).into_iter().filter(|&w| w != v) {
                        let p = points_uf.find(point_id(i, v, w, k));
                        point_comp[p] = comp;
                    }
                }
            }
        }
    }
    let mut verts = vec![0i64; nc];
    let mut n_vertex_classes = 0;
    for p in 0..n_points {
        if points_uf.find(p) == p {
            n_vertex_classes += 1;
            verts[point_comp[p]] += 1;
        }
    }
    let components = (0..nc)
        .map(|k| {
            let e = arcs_per_comp[k] / 2;
            SurfaceComponent {
                euler_char: verts[k] - e + faces[k],
                orientable: sided[k],
                two_sided: sided[k],
                is_vertex_linking: !has_quad[k],
                disc_count: faces[k] as usize,
            }
        })
        .collect();
    let n_edges = arc_slots / 2;
    Ok(SurfaceComplex {
        components,
        disc_counts: c,
        euler_char: n_vertex_classes as i64 - n_edges as i64 + n_discs as i64,
        vertices: n_vertex_classes,
        edges: n_edges,
        faces: n_discs,
    })
}

pub(crate) fn disc_refs(l: &TetLayout) -> Vec<DiscRef> {
    let mut out = Vec::new();
    for corner in 0..4u8 {
        for layer in 0..l.tri[corner as usize] {
            out.push(DiscRef::Triangle { corner, layer });
        }
    }
    if let Some((qtype, m)) = l.quad {
        for layer in 0..m {
            out.push(DiscRef::Quad { qtype, layer });
        }
    }
    out
}

/// All admissible vectors with coordinates `<= k` and no vertex-linking
/// part, in lexicographic order.
pub fn enumerate_admissible<I: Ring>(
    tri: &Triangulation,
    k: u64,
    guard_bits: f64,
) -> Result<Vec<NormalSurfaceVector<I>>, SurfaceError> {
    let t = tri.tet_count();
    let bits = 7.0 * t as f64 * ((k + 1) as f64).log2();
    if bits > guard_bits {
        return Err(SurfaceError::Guard { bits, limit: guard_bits });
    }
    let n = 7 * t;
    let rows = matching_rows(tri);
    // equations to check once their last coordinate is assigned
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        if let Some(&(last, _)) = row.last() {
            due[last].push(r);
        }
    }
    let search = Search { rows: &rows, due: &due, k, n };
    let mut found: Vec<Vec<u64>> = (0..=k)
        .into_par_iter()
        .map(|first| {
            let mut cur = vec![0u64; n];
            cur[0] = first;
            let mut out = Vec::new();
            if search.check(&cur, 0) {
                search.dfs(&mut cur, 1, &mut out);
            }
            out
        })
        .reduce(Vec::new, |mut a, b| {
            a.extend(b);
            a
        });
    found.retain(|v| (0..t).any(|i| (0..4).any(|c| v[7 * i + c] == 0)));
    found.sort();
    found.dedup();
    found.into_iter().map(|v| NormalSurfaceVector::from_u64(&v)).collect()
}

struct Search<'a> {
    rows: &'a [Vec<(usize, i64)>],
    due: &'a [Vec<usize>],
    k: u64,
    n: usize,
}

impl Search<'_> {
    fn check(&self, cur: &[u64], idx: usize) -> bool {
        self.due[idx].iter().all(|&r| self.rows[r].iter().map(|&(c, x)| cur[c] as i64 * x).sum::<i64>() == 0)
    }

    fn dfs(&self, cur: &mut Vec<u64>, idx: usize, out: &mut Vec<Vec<u64>>) {
        if idx == self.n {
            out.push(cur.clone());
            return;
        }
        let slot = idx % 7;
        let max = if slot >= 4 && (idx - slot + 4..idx).any(|j| cur[j] > 0) { 0 } else { self.k };
        for val in 0..=max {
            cur[idx] = val;
            if self.check(cur, idx) {
                self.dfs(cur, idx + 1, out);
            }
        }
        cur[idx] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_helpers_agree() {
        for q in 0..3 {
            for v in 0..4u8 {
                let p = quad_partner(q, v);
                assert_ne!(p, v);
                assert_eq!(quad_pairing(v, p), q);
                assert!(!quad_separates(q, v, p));
            }
        }
        assert_eq!(quad_pairing(2, 3), 0);
        assert_eq!(quad_pairing(1, 3), 1);
        assert_eq!(quad_pairing(1, 2), 2);
    }

    #[test]
    fn strip_is_idempotent() {
        let v = NormalSurfaceVector::<i64>::from_u64(&[2, 3, 2, 4, 0, 1, 0]).unwrap();
        let s = strip_vertex_linking(&v);
        assert_eq!(s.coords(), &[0, 1, 0, 2, 0, 1, 0]);
        assert_eq!(strip_vertex_linking(&s), s);
    }

    #[test]
    fn parse_round_trip() {
        let v = NormalSurfaceVector::<i64>::parse("0 1 0 0 2 0 0\n").unwrap();
        assert_eq!(v.serialize(), "0 1 0 0 2 0 0");
        assert!(NormalSurfaceVector::<i64>::parse("1 2 x").is_err());
    }
}
