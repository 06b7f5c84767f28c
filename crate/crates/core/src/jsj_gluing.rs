//! Homology bookkeeping for trees of integral homology solid tori.
//!
//! Each vertex is recorded only through a presentation of its first
//! homology and, for every boundary torus, the classes of a meridian `μ`
//! (null-homologous in the vertex) and a longitude `λ` (the longitudes
//! freely generate). An edge identifies a torus of one vertex with a torus
//! of another by a 2×2 matrix whose columns are the images of `μ` and `λ`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use crate::smith::{AbelianGroup, IntMatrix};
use crate::triangulation::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GluingError {
    #[error("matrix {0:?} does not have determinant -1")]
    Determinant([[i64; 2]; 2]),
    #[error("matrix {0:?} is not invertible over the integers")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("matrix {0:?} does not have lower-left entry ±1 and the expected upper-right entry")]
    NotSlopeForm([[i64; 2]; 2]),
    #[error("slope ({0}, {1}) is not primitive")]
    NonPrimitiveSlope(i64, i64),
    #[error("vertex {vertex}: {reason}")]
    BadVertex { vertex: usize, reason: String },
    #[error("edge {0} refers to a missing vertex or torus")]
    BadEdge(usize),
    #[error("torus {torus} of vertex {vertex} is glued twice")]
    TorusReused { vertex: usize, torus: usize },
    #[error("the graph has a cycle through edge {0}")]
    Cycle(usize),
    #[error("the graph is disconnected")]
    Disconnected,
    #[error("open boundary remains: torus {torus} of vertex {vertex} is not glued")]
    OpenBoundary { vertex: usize, torus: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

/// A torus identification in `(μ, λ)` coordinates. Column 0 is the image of
/// the source meridian, column 1 the image of the source longitude.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GluingMatrix {
    entries: [[i64; 2]; 2],
}

impl GluingMatrix {
    pub fn new(entries: [[i64; 2]; 2]) -> Result<Self, GluingError> {
        let m = GluingMatrix { entries };
        if m.det() != -1 {
            return Err(GluingError::Determinant(entries));
        }
        Ok(m)
    }

    /// Any integer matrix, for gluings outside the homology-sphere family.
    pub fn unchecked(entries: [[i64; 2]; 2]) -> Self {
        GluingMatrix { entries }
    }

    pub fn entries(&self) -> [[i64; 2]; 2] {
        self.entries
    }

    pub fn det(&self) -> i64 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }

    pub fn image_of_meridian(&self) -> (i64, i64) {
        (self.entries[0][0], self.entries[1][0])
    }

    pub fn image_of_longitude(&self) -> (i64, i64) {
        (self.entries[0][1], self.entries[1][1])
    }

    /// Inverse, for matrices of determinant ±1.
    pub fn inverse(&self) -> GluingMatrix {
        let [[a, b], [c, d]] = self.entries;
        let det = self.det();
        assert!(det == 1 || det == -1, "matrix is not invertible over the integers");
        GluingMatrix { entries: [[d * det, -b * det], [-c * det, a * det]] }
    }
}

impl fmt::Display for GluingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// `μ ↦ p μ' + ε λ'`, `λ ↦ ε(pq+1) μ' + q λ'`.
pub fn gluing_matrix(p: i64, q: i64, eps: i8) -> GluingMatrix {
    assert!(eps == 1 || eps == -1, "eps must be ±1");
    let e = eps as i64;
    GluingMatrix { entries: [[p, e * (p * q + 1)], [e, q]] }
}

/// Recover `(p, q, ε)`; `|p|` and `|q|` are the intersection numbers of the
/// meridian image with the target longitude and of the inverse image of the
/// target meridian with the source longitude.
pub fn extract_pq(m: &GluingMatrix) -> Result<(i64, i64, i8), GluingError> {
    if m.det() != -1 {
        return Err(GluingError::Determinant(m.entries));
    }
    let [[p, b], [e, q]] = m.entries;
    if e != 1 && e != -1 {
        return Err(GluingError::NotSlopeForm(m.entries));
    }
    if b != e * (p * q + 1) {
        return Err(GluingError::NotSlopeForm(m.entries));
    }
    debug_assert_eq!(intersection(m.image_of_meridian(), (0, 1)).abs(), p.abs());
    debug_assert_eq!(intersection((0, 1), m.inverse().image_of_meridian()).abs(), q.abs());
    Ok((p, q, e as i8))
}

/// Algebraic intersection of two classes on a torus with `μ·λ = 1`.
pub fn intersection(x: (i64, i64), y: (i64, i64)) -> i64 {
    x.0 * y.1 - x.1 * y.0
}

/// Gluing of a knot exterior's companion torus: `μ ↦ λ'`, `λ ↦ -μ' + q λ'`.
pub fn knot_gluing_matrix(q: i64) -> GluingMatrix {
    GluingMatrix { entries: [[0, -1], [1, q]] }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryTorus {
    pub meridian: Vec<i64>,
    pub longitude: Vec<i64>,
}

/// First homology `Z^generators / <relations>` with marked boundary tori.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    generators: usize,
    relations: Vec<Vec<i64>>,
    tori: Vec<BoundaryTorus>,
}

impl Vertex {
    /// Checks that the group is free on the longitudes and every meridian
    /// is null-homologous.
    pub fn new(generators: usize, relations: Vec<Vec<i64>>, tori: Vec<BoundaryTorus>) -> Result<Self, String> {
        for r in &relations {
            if r.len() != generators {
                return Err(format!("relation of length {} over {generators} generators", r.len()));
            }
        }
        for t in &tori {
            if t.meridian.len() != generators || t.longitude.len() != generators {
                return Err("boundary class of the wrong length".into());
            }
        }
        if tori.is_empty() {
            return Err("no boundary torus".into());
        }
        let v = Vertex { generators, relations, tori };
        if v.homology() != (AbelianGroup { rank: v.tori.len(), torsion: Vec::new() }) {
            return Err(format!("first homology {} is not free of rank {}", v.homology(), v.tori.len()));
        }
        let lambdas: Vec<Vec<i64>> = v.tori.iter().map(|t| t.longitude.clone()).collect();
        if !v.quotient(&lambdas).is_trivial() {
            return Err("longitudes do not generate".into());
        }
        for (i, t) in v.tori.iter().enumerate() {
            let mut with = v.relations.clone();
            with.push(t.meridian.clone());
            if v.group(&with) != v.homology() {
                return Err(format!("meridian of torus {i} is not null-homologous"));
            }
        }
        Ok(v)
    }

    /// `Z^k` generated by the longitudes, all meridians zero.
    pub fn standard(tori: usize) -> Self {
        let unit = |i: usize| (0..tori).map(|j| i64::from(i == j)).collect::<Vec<_>>();
        let tori = (0..tori).map(|i| BoundaryTorus { meridian: vec![0; tori], longitude: unit(i) }).collect();
        Vertex { generators: unit(0).len(), relations: Vec::new(), tori }
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn relations(&self) -> &[Vec<i64>] {
        &self.relations
    }

    pub fn tori(&self) -> &[BoundaryTorus] {
        &self.tori
    }

    pub fn homology(&self) -> AbelianGroup {
        self.group(&self.relations)
    }

    fn group(&self, relations: &[Vec<i64>]) -> AbelianGroup {
        cokernel(self.generators, relations)
    }

    fn quotient(&self, extra: &[Vec<i64>]) -> AbelianGroup {
        let mut all = self.relations.clone();
        all.extend_from_slice(extra);
        self.group(&all)
    }

    fn class(&self, torus: usize, slope: (i64, i64)) -> Vec<i64> {
        let t = &self.tori[torus];
        t.meridian.iter().zip(&t.longitude).map(|(m, l)| slope.0 * m + slope.1 * l).collect()
    }
}

fn cokernel(generators: usize, relations: &[Vec<i64>]) -> AbelianGroup {
    let mut m = IntMatrix::<i64>::zeros(generators, relations.len());
    for (c, r) in relations.iter().enumerate() {
        for (g, &x) in r.iter().enumerate() {
            m.set(g, c, x);
        }
    }
    AbelianGroup::cokernel(&m)
}

/// First homology after filling torus `torus` along `slope = (a, b)`, that
/// is killing `a μ + b λ`.
pub fn fill_torus(v: &Vertex, torus: usize, slope: (i64, i64)) -> Result<AbelianGroup, GluingError> {
    if slope.0.gcd(&slope.1) != 1 {
        return Err(GluingError::NonPrimitiveSlope(slope.0, slope.1));
    }
    if torus >= v.tori.len() {
        return Err(GluingError::BadVertex { vertex: 0, reason: format!("no torus {torus}") });
    }
    Ok(v.quotient(&[v.class(torus, slope)]))
}

/// [`fill_torus`] on the first boundary torus.
pub fn fill_homology(v: &Vertex, slope: (i64, i64)) -> Result<AbelianGroup, GluingError> {
    fill_torus(v, 0, slope)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub matrix: GluingMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsjTree {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<TreeEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeHomology {
    pub homology: AbelianGroup,
    pub is_homology_sphere: bool,
}

impl JsjTree {
    /// Check that the graph is a tree, each torus is glued at most once and
    /// every gluing matrix is invertible over the integers.
    pub fn check_shape(&self) -> Result<(), GluingError> {
        let n = self.vertices.len();
        let mut used = BTreeSet::new();
        let mut uf = UnionFind::new(n);
        for (i, e) in self.edges.iter().enumerate() {
            if e.matrix.det().abs() != 1 {
                return Err(GluingError::NotUnimodular(e.matrix.entries()));
            }
            for (v, t) in [e.from, e.to] {
                if v >= n || t >= self.vertices[v].tori.len() {
                    return Err(GluingError::BadEdge(i));
                }
                if !used.insert((v, t)) {
                    return Err(GluingError::TorusReused { vertex: v, torus: t });
                }
            }
            if uf.find(e.from.0) == uf.find(e.to.0) {
                return Err(GluingError::Cycle(i));
            }
            uf.union(e.from.0, e.to.0);
        }
        if n == 0 || self.edges.len() + 1 != n {
            return Err(GluingError::Disconnected);
        }
        Ok(())
    }

    fn open_torus(&self) -> Option<(usize, usize)> {
        let glued: BTreeSet<(usize, usize)> = self.edges.iter().flat_map(|e| [e.from, e.to]).collect();
        self.vertices
            .iter()
            .enumerate()
            .flat_map(|(v, x)| (0..x.tori.len()).map(move |t| (v, t)))
            .find(|k| !glued.contains(k))
    }
}

/// First homology of the closed manifold obtained by gluing the tree:
/// vertex presentations side by side, plus `μ = image of μ` and
/// `λ = image of λ` for every edge.
pub fn assemble_tree(t: &JsjTree) -> Result<TreeHomology, GluingError> {
    t.check_shape()?;
    if let Some((vertex, torus)) = t.open_torus() {
        return Err(GluingError::OpenBoundary { vertex, torus });
    }
    let offsets: Vec<usize> = t
        .vertices
        .iter()
        .scan(0, |acc, v| {
            let o = *acc;
            *acc += v.generators;
            Some(o)
        })
        .collect();
    let total: usize = t.vertices.iter().map(|v| v.generators).sum();
    let embed = |vertex: usize, class: &[i64], out: &mut Vec<i64>, sign: i64| {
        for (g, &x) in class.iter().enumerate() {
            out[offsets[vertex] + g] += sign * x;
        }
    };
    let mut relations = Vec::new();
    for (v, x) in t.vertices.iter().enumerate() {
        for r in &x.relations {
            let mut row = vec![0; total];
            embed(v, r, &mut row, 1);
            relations.push(row);
        }
    }
    for e in &t.edges {
        let (src, dst) = (&t.vertices[e.from.0], &t.vertices[e.to.0]);
        for (source, image) in [
            (src.tori[e.from.1].meridian.clone(), e.matrix.image_of_meridian()),
            (src.tori[e.from.1].longitude.clone(), e.matrix.image_of_longitude()),
        ] {
            let mut row = vec![0; total];
            embed(e.from.0, &source, &mut row, 1);
            embed(e.to.0, &dst.class(e.to.1, image), &mut row, -1);
            relations.push(row);
        }
    }
    let homology = cokernel(total, &relations);
    Ok(TreeHomology { is_homology_sphere: homology.is_trivial(), homology })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphBounds {
    pub haken_number: u64,
    pub edges: usize,
    pub vertices: usize,
    pub edges_ok: bool,
    pub vertices_ok: bool,
}

impl GraphBounds {
    pub fn pass(&self) -> bool {
        self.edges_ok && self.vertices_ok
    }
}

/// Compare a decomposition graph against the bounds a dominating manifold
/// with Haken number `h` imposes: at most `h` tori and `h + 1` pieces.
pub fn graph_bounds(h: u64, vertices: usize, edges: usize) -> GraphBounds {
    GraphBounds {
        haken_number: h,
        edges,
        vertices,
        edges_ok: edges as u64 <= h,
        vertices_ok: vertices as u64 <= h + 1,
    }
}

/// Text format, whitespace separated, `#` starts a comment:
///
/// ```text
/// vertex <generators> <relations> <tori>
///   <relation>...            one row of <generators> integers each
///   <meridian> <longitude>   per torus, <generators> integers each
/// edge <vertex> <torus> <vertex> <torus> <a> <b> <c> <d>
/// ```
///
/// The edge matrix is `[[a, b], [c, d]]`; its columns are the images of the
/// source meridian and longitude. `vertex standard <tori>` is shorthand for
/// [`Vertex::standard`].
impl FromStr for JsjTree {
    type Err = GluingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = s.lines().flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace());
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        let perr = |m: &str| GluingError::Parse(m.to_string());
        fn int<'a, T: FromStr>(it: &mut impl Iterator<Item = &'a str>) -> Result<T, GluingError> {
            let tok = it.next().ok_or_else(|| GluingError::Parse("unexpected end of input".into()))?;
            tok.parse().map_err(|_| GluingError::Parse(format!("expected an integer, found {tok:?}")))
        }
        fn row<'a>(it: &mut impl Iterator<Item = &'a str>, n: usize) -> Result<Vec<i64>, GluingError> {
            (0..n).map(|_| int(it)).collect()
        }
        while let Some(kw) = tokens.next() {
            match kw {
                "vertex" => {
                    let mut peek = tokens.clone();
                    if peek.next() == Some("standard") {
                        tokens.next();
                        let k: usize = int(&mut tokens)?;
                        if k == 0 {
                            return Err(perr("a vertex needs a boundary torus"));
                        }
                        vertices.push(Vertex::standard(k));
                        continue;
                    }
                    let g: usize = int(&mut tokens)?;
                    let r: usize = int(&mut tokens)?;
                    let k: usize = int(&mut tokens)?;
                    let relations = (0..r).map(|_| row(&mut tokens, g)).collect::<Result<_, _>>()?;
                    let tori = (0..k)
                        .map(|_| Ok(BoundaryTorus { meridian: row(&mut tokens, g)?, longitude: row(&mut tokens, g)? }))
                        .collect::<Result<_, GluingError>>()?;
                    let n = vertices.len();
                    vertices.push(Vertex::new(g, relations, tori).map_err(|reason| GluingError::BadVertex { vertex: n, reason })?);
                }
                "edge" => {
                    let from = (int(&mut tokens)?, int(&mut tokens)?);
                    let to = (int(&mut tokens)?, int(&mut tokens)?);
                    let m = [[int(&mut tokens)?, int(&mut tokens)?], [int(&mut tokens)?, int(&mut tokens)?]];
                    edges.push(TreeEdge { from, to, matrix: GluingMatrix::unchecked(m) });
                }
                other => return Err(GluingError::Parse(format!("unknown keyword {other:?}"))),
            }
        }
        Ok(JsjTree { vertices, edges })
    }
}
