//! Cutting the truncated triangulation along `S ∪ S_v`.
//!
//! Inside each tetrahedron the normal discs are stacked in layers: triangles
//! from each corner inward (layer 0 of every corner is the vertex-link
//! triangle), quads across the middle starting from the block that contains
//! vertex 0. The complementary regions are truncated tetrahedra, truncated
//! prisms and product blocks between parallel discs.
//!
//! Orientation conventions for the local cells:
//! - a segment on edge `{a, b}` with `a < b` runs from `a` towards `b`;
//! - an arc at corner `v` of a face runs from its point on edge `{v, min}`
//!   to its point on edge `{v, max}` of the two other face vertices;
//! - a face region is oriented counter-clockwise for the ascending vertex
//!   order of its face, and appears in its piece with sign `(-1)^face`;
//! - a disc side appears with sign `+1` and takes the boundary that makes
//!   the piece a cycle.

use std::collections::{BTreeMap, HashMap};

use crate::normal_surface::{
    build_surface, face_vertices, in_zero_block, is_admissible, quad_partner, NormalSurfaceVector, SurfaceError,
    TetLayout,
};
pub use crate::normal_surface::DiscRef;
use crate::polyhedral::{EdgeLabel, FaceGlue, FaceLabel, PieceComplex, PieceLabel, PolyFace, PolyPiece};
use crate::scalar::Ring;
use crate::triangulation::{Perm4, Triangulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceRegion {
    /// Between arcs `index` and `index + 1` at `corner`.
    Band { corner: u8, index: usize },
    /// The hexagon left in the middle of the face.
    Central,
}

/// Stable identifier of a 2-dimensional face of a piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceId {
    Region { tet: usize, face: u8, region: FaceRegion },
    /// One side of a normal disc; `toward` is the side facing the triangle's
    /// corner, or for a quad the side facing the block containing vertex 0.
    DiscSide { tet: usize, disc: DiscRef, toward: bool },
}

impl std::fmt::Display for FaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            FaceId::Region { tet, face, region: FaceRegion::Central } => write!(f, "t{tet}.f{face}.hex"),
            FaceId::Region { tet, face, region: FaceRegion::Band { corner, index } } => {
                write!(f, "t{tet}.f{face}.c{corner}.b{index}")
            }
            FaceId::DiscSide { tet, disc: DiscRef::Triangle { corner, layer }, toward } => {
                write!(f, "t{tet}.T{corner}.{layer}{}", if toward { "+" } else { "-" })
            }
            FaceId::DiscSide { tet, disc: DiscRef::Quad { qtype, layer }, toward } => {
                write!(f, "t{tet}.Q{qtype}.{layer}{}", if toward { "+" } else { "-" })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceClass {
    DiscInS,
    DiscInSv,
    Hexagonal,
    QuadFace,
    VerticalQuad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    TruncatedTet,
    TruncatedPrism,
    ProductBlock,
}

/// Where a piece sits inside its tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceLayer {
    Whole,
    /// The prism on the side of this vertex pair.
    Prism { block: [u8; 2] },
    /// Between triangle layers `layer` and `layer + 1` at `corner`.
    Triangles { corner: u8, layer: usize },
    /// Between quad layers `layer` and `layer + 1`.
    Quads { qtype: usize, layer: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutPiece {
    pub kind: PieceKind,
    pub source_tet: usize,
    pub layer: PieceLayer,
    pub faces: Vec<(FaceId, FaceClass)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuadFaceStatus {
    Frontier,
    NonFrontier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PieceCensus {
    pub truncated_tets: usize,
    pub prisms: usize,
    pub products: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CutError {
    #[error("triangulation is not a valid closed orientable one-vertex triangulation")]
    InvalidTriangulation,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("surface is not admissible")]
    Inadmissible,
    #[error("surface is one-sided")]
    OneSided,
    #[error("surface still contains a vertex-linking component")]
    ContainsVertexLink,
    #[error("inconsistent pairing at face {0}")]
    InconsistentPairing(String),
}

#[derive(Clone, Debug)]
pub struct CutComplex {
    tri: Triangulation,
    coords: Vec<usize>,
    layouts: Vec<TetLayout>,
    pub pieces: Vec<CutPiece>,
    poly: PieceComplex,
    face_ids: Vec<FaceId>,
    face_index: BTreeMap<FaceId, u32>,
    /// Piece index to the piece's index in the polyhedral complex (equal).
    piece_of_face: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PointKey {
    tet: usize,
    a: u8,
    b: u8,
    pos: usize,
    hi: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    Segment { tet: usize, a: u8, b: u8, idx: usize },
    Arc { tet: usize, face: u8, corner: u8, idx: usize, toward: bool },
}

struct Builder<'a> {
    layouts: &'a [TetLayout],
    poly: PieceComplex,
    points: HashMap<PointKey, u32>,
    edges: HashMap<EdgeKey, u32>,
    edge_keys: Vec<EdgeKey>,
    point_keys: Vec<PointKey>,
    faces: BTreeMap<FaceId, u32>,
    face_ids: Vec<FaceId>,
}

fn sorted(a: u8, b: u8) -> (u8, u8) {
    if a < b { (a, b) } else { (b, a) }
}

/// Neighbours of `v` in the cyclic ascending order of face `f`: (previous, next).
fn cyclic_neighbours(f: u8, v: u8) -> (u8, u8) {
    let cyc = face_vertices(f);
    let i = cyc.iter().position(|&x| x == v).expect("vertex on face");
    (cyc[(i + 2) % 3], cyc[(i + 1) % 3])
}

/// Sign of a segment on edge `{a, b}` in the counter-clockwise boundary of face `f`.
fn segment_sign(f: u8, a: u8, b: u8) -> i8 {
    let cyc = face_vertices(f);
    if sorted(a, b) == (cyc[0], cyc[2]) { -1 } else { 1 }
}

impl Builder<'_> {
    fn point(&mut self, tet: usize, v: u8, w: u8, pos_from_v: usize, facing_v: bool) -> u32 {
        let (a, b) = sorted(v, w);
        let n = self.layouts[tet].edge_points(v, w);
        debug_assert!(pos_from_v < n);
        let pos = if v < w { pos_from_v } else { n - 1 - pos_from_v };
        let hi = if facing_v { v > w } else { w > v };
        self.point_key(PointKey { tet, a, b, pos, hi })
    }

    fn point_key(&mut self, key: PointKey) -> u32 {
        if let Some(&p) = self.points.get(&key) {
            return p;
        }
        let p = self.poly.add_point();
        self.points.insert(key, p);
        self.point_keys.push(key);
        p
    }

    fn edge_key(&mut self, key: EdgeKey) -> u32 {
        if let Some(&e) = self.edges.get(&key) {
            return e;
        }
        let (start, end, label) = match key {
            EdgeKey::Segment { tet, a, b, idx } => (
                self.point_key(PointKey { tet, a, b, pos: idx, hi: true }),
                self.point_key(PointKey { tet, a, b, pos: idx + 1, hi: false }),
                EdgeLabel::Segment,
            ),
            EdgeKey::Arc { tet, face, corner, idx, toward } => {
                let others: Vec<u8> = face_vertices(face).into_iter().filter(|&x| x != corner).collect();
                (
                    self.point(tet, corner, others[0], idx, toward),
                    self.point(tet, corner, others[1], idx, toward),
                    EdgeLabel::Arc,
                )
            }
        };
        let e = self.poly.add_edge(start, end, label);
        self.edges.insert(key, e);
        self.edge_keys.push(key);
        e
    }

    /// Segment on edge `{v, w}` between positions `k` and `k + 1` counted from `v`.
    fn segment(&mut self, tet: usize, v: u8, w: u8, k: usize) -> u32 {
        let (a, b) = sorted(v, w);
        let n = self.layouts[tet].edge_points(v, w);
        let idx = if v < w { k } else { n - 2 - k };
        self.edge_key(EdgeKey::Segment { tet, a, b, idx })
    }

    fn arc(&mut self, tet: usize, face: u8, corner: u8, idx: usize, toward: bool) -> u32 {
        self.edge_key(EdgeKey::Arc { tet, face, corner, idx, toward })
    }

    fn region_boundary(&mut self, tet: usize, f: u8, region: FaceRegion) -> Vec<(u32, i8)> {
        let l = self.layouts[tet];
        let mut out = Vec::new();
        match region {
            FaceRegion::Band { corner: v, index: k } => {
                let (u, w) = cyclic_neighbours(f, v);
                let s: i8 = if u < w { 1 } else { -1 };
                out.push((self.arc(tet, f, v, k, false), s));
                out.push((self.arc(tet, f, v, k + 1, true), -s));
                for x in [w, u] {
                    let seg = self.segment(tet, v, x, k);
                    out.push((seg, segment_sign(f, v, x)));
                }
            }
            FaceRegion::Central => {
                let cyc = face_vertices(f);
                for v in cyc {
                    let (u, w) = cyclic_neighbours(f, v);
                    let s: i8 = if u < w { 1 } else { -1 };
                    let k = l.arcs_at(f, v) - 1;
                    out.push((self.arc(tet, f, v, k, false), s));
                }
                for (v, w) in [(cyc[0], cyc[1]), (cyc[1], cyc[2]), (cyc[0], cyc[2])] {
                    let k = l.arcs_at(f, v) - 1;
                    let seg = self.segment(tet, v, w, k);
                    out.push((seg, segment_sign(f, v, w)));
                }
            }
        }
        out
    }

    fn add_face(&mut self, id: FaceId, boundary: Vec<(u32, i8)>, label: FaceLabel, piece: u32) -> u32 {
        assert!(!self.faces.contains_key(&id), "face {id} created twice");
        self.poly.faces.push(PolyFace { boundary, label, piece, glue: None });
        let f = (self.poly.faces.len() - 1) as u32;
        self.faces.insert(id, f);
        self.face_ids.push(id);
        f
    }

    fn disc_arcs(&mut self, tet: usize, disc: DiscRef, toward: bool) -> Vec<u32> {
        let l = self.layouts[tet];
        match disc {
            DiscRef::Triangle { corner, layer } => (0..4u8)
                .filter(|&f| f != corner)
                .map(|f| self.arc(tet, f, corner, layer, toward))
                .collect(),
            DiscRef::Quad { qtype, layer } => (0..4u8)
                .map(|f| {
                    let v = quad_partner(qtype, f);
                    self.arc(tet, f, v, l.quad_arc_index(v, layer), toward == in_zero_block(qtype, v))
                })
                .collect(),
        }
    }

    /// Create a piece from its face regions and disc sides.
    fn piece(
        &mut self,
        tet: usize,
        regions: &[(u8, FaceRegion, FaceLabel)],
        discs: &[(DiscRef, bool, FaceLabel)],
        label: PieceLabel,
    ) -> Vec<(FaceId, FaceLabel)> {
        let pid = self.poly.pieces.len() as u32;
        let mut faces = Vec::new();
        let mut ids = Vec::new();
        let mut arc_coef: HashMap<u32, i64> = HashMap::new();
        for &(f, region, flabel) in regions {
            let eps: i8 = if f % 2 == 0 { 1 } else { -1 };
            let b = self.region_boundary(tet, f, region);
            for &(e, s) in &b {
                if self.poly.edges[e as usize].label == EdgeLabel::Arc {
                    *arc_coef.entry(e).or_insert(0) += (eps * s) as i64;
                }
            }
            let id = FaceId::Region { tet, face: f, region };
            let fid = self.add_face(id, b, flabel, pid);
            faces.push((fid, eps));
            ids.push((id, flabel));
        }
        for &(disc, toward, flabel) in discs {
            let arcs = self.disc_arcs(tet, disc, toward);
            let b: Vec<(u32, i8)> = arcs
                .iter()
                .map(|e| {
                    let c = arc_coef.get(e).copied().unwrap_or(0);
                    debug_assert!(c.abs() == 1, "disc arc not on exactly one region");
                    (*e, -c as i8)
                })
                .collect();
            let id = FaceId::DiscSide { tet, disc, toward };
            let fid = self.add_face(id, b, flabel, pid);
            faces.push((fid, 1));
            ids.push((id, flabel));
        }
        self.poly.pieces.push(PolyPiece { faces, label });
        ids
    }
}

fn face_perm_sign(f: u8, p: Perm4) -> i8 {
    let cyc = face_vertices(f);
    let img = cyc.map(|v| p.apply(v));
    let mut inv = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if img[i] > img[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 { 1 } else { -1 }
}

fn class_of(label: FaceLabel) -> FaceClass {
    match label {
        FaceLabel::DiscS | FaceLabel::Floor => FaceClass::DiscInS,
        FaceLabel::DiscSv => FaceClass::DiscInSv,
        FaceLabel::Hexagon => FaceClass::Hexagonal,
        FaceLabel::QuadFace => FaceClass::QuadFace,
        FaceLabel::Vertical | FaceLabel::Wall => FaceClass::VerticalQuad,
    }
}

/// Cut `M_*` along the surface and the vertex link.
pub fn cut_along<I: Ring>(tri: &Triangulation, v: &NormalSurfaceVector<I>) -> Result<CutComplex, CutError> {
    if !tri.is_valid() {
        return Err(CutError::InvalidTriangulation);
    }
    if !is_admissible(tri, v)? {
        return Err(CutError::Inadmissible);
    }
    if !v.min_triangle().is_zero() {
        return Err(CutError::ContainsVertexLink);
    }
    let surface = build_surface(tri, v)?;
    if !surface.is_two_sided() {
        return Err(CutError::OneSided);
    }
    let coords = v.to_usize().expect("instantiated surface fits");
    Ok(cut_coords(tri, &coords))
}

fn cut_coords(tri: &Triangulation, coords: &[usize]) -> CutComplex {
    let t = tri.tet_count();
    let layouts: Vec<TetLayout> = (0..t)
        .map(|i| {
            let mut c = coords[7 * i..7 * i + 7].to_vec();
            for x in c.iter_mut().take(4) {
                *x += 1;
            }
            TetLayout::from_coords(&c)
        })
        .collect();
    let mut b = Builder {
        layouts: &layouts,
        poly: PieceComplex::default(),
        points: HashMap::new(),
        edges: HashMap::new(),
        edge_keys: Vec::new(),
        point_keys: Vec::new(),
        faces: BTreeMap::new(),
        face_ids: Vec::new(),
    };
    let mut pieces = Vec::new();
    let disc_label = |d: DiscRef| match d {
        DiscRef::Triangle { layer: 0, .. } => FaceLabel::DiscSv,
        _ => FaceLabel::DiscS,
    };

    for (i, l) in layouts.iter().enumerate() {
        let mut push = |b: &mut Builder, kind, layer, regions: Vec<(u8, FaceRegion, FaceLabel)>, discs: Vec<(DiscRef, bool, FaceLabel)>| {
            let label = match kind {
                PieceKind::TruncatedTet => PieceLabel::TruncatedTet,
                PieceKind::TruncatedPrism => PieceLabel::TruncatedPrism,
                PieceKind::ProductBlock => PieceLabel::ProductBlock,
            };
            let ids = b.piece(i, &regions, &discs, label);
            pieces.push(CutPiece {
                kind,
                source_tet: i,
                layer,
                faces: ids.into_iter().map(|(id, fl)| (id, class_of(fl))).collect(),
            });
        };
        for c in 0..4u8 {
            for layer in 0..l.tri[c as usize] - 1 {
                let regions = (0..4u8)
                    .filter(|&f| f != c)
                    .map(|f| (f, FaceRegion::Band { corner: c, index: layer }, FaceLabel::Vertical))
                    .collect();
                let lo = DiscRef::Triangle { corner: c, layer };
                let hi = DiscRef::Triangle { corner: c, layer: layer + 1 };
                let discs = vec![(lo, false, disc_label(lo)), (hi, true, disc_label(hi))];
                push(&mut b, PieceKind::ProductBlock, PieceLayer::Triangles { corner: c, layer }, regions, discs);
            }
        }
        match l.quad {
            None => {
                let regions = (0..4u8).map(|f| (f, FaceRegion::Central, FaceLabel::Hexagon)).collect();
                let discs = (0..4u8)
                    .map(|c| {
                        let d = DiscRef::Triangle { corner: c, layer: l.tri[c as usize] - 1 };
                        (d, false, disc_label(d))
                    })
                    .collect();
                push(&mut b, PieceKind::TruncatedTet, PieceLayer::Whole, regions, discs);
            }
            Some((q, m)) => {
                for layer in 0..m - 1 {
                    let regions = (0..4u8)
                        .map(|f| {
                            let v = quad_partner(q, f);
                            let n = l.tri[v as usize];
                            let k = if in_zero_block(q, v) { n + layer } else { n + m - 2 - layer };
                            (f, FaceRegion::Band { corner: v, index: k }, FaceLabel::Vertical)
                        })
                        .collect();
                    let discs = vec![
                        (DiscRef::Quad { qtype: q, layer }, false, FaceLabel::DiscS),
                        (DiscRef::Quad { qtype: q, layer: layer + 1 }, true, FaceLabel::DiscS),
                    ];
                    push(&mut b, PieceKind::ProductBlock, PieceLayer::Quads { qtype: q, layer }, regions, discs);
                }
                for (bi, block) in crate::normal_surface::QUAD_BLOCKS[q].iter().enumerate() {
                    let [a, bb] = *block;
                    let other = crate::normal_surface::QUAD_BLOCKS[q][1 - bi];
                    let mut regions = vec![
                        (a, FaceRegion::Band { corner: bb, index: l.tri[bb as usize] - 1 }, FaceLabel::QuadFace),
                        (bb, FaceRegion::Band { corner: a, index: l.tri[a as usize] - 1 }, FaceLabel::QuadFace),
                    ];
                    for f in other {
                        regions.push((f, FaceRegion::Central, FaceLabel::Hexagon));
                    }
                    regions.sort_by_key(|r| r.0);
                    let ta = DiscRef::Triangle { corner: a, layer: l.tri[a as usize] - 1 };
                    let tb = DiscRef::Triangle { corner: bb, layer: l.tri[bb as usize] - 1 };
                    let quad = if bi == 0 { DiscRef::Quad { qtype: q, layer: 0 } } else { DiscRef::Quad { qtype: q, layer: m - 1 } };
                    let discs = vec![
                        (ta, false, disc_label(ta)),
                        (tb, false, disc_label(tb)),
                        (quad, bi == 0, FaceLabel::DiscS),
                    ];
                    push(&mut b, PieceKind::TruncatedPrism, PieceLayer::Prism { block: [a, bb] }, regions, discs);
                }
            }
        }
    }

    // gluings across tetrahedron faces
    let region_faces: Vec<(FaceId, u32)> = b.faces.iter().map(|(k, v)| (*k, *v)).filter(|(k, _)| matches!(k, FaceId::Region { .. })).collect();
    for (id, fidx) in region_faces {
        let FaceId::Region { tet, face, region } = id else { unreachable!() };
        let g = tri.glued(tet, face);
        let tf = g.target_face(face);
        let p = g.perm;
        let region2 = match region {
            FaceRegion::Band { corner, index } => FaceRegion::Band { corner: p.apply(corner), index },
            FaceRegion::Central => FaceRegion::Central,
        };
        let partner_id = FaceId::Region { tet: g.tet, face: tf, region: region2 };
        let partner = *b.faces.get(&partner_id).unwrap_or_else(|| panic!("no partner for {id}"));
        let sign = face_perm_sign(face, p);
        let mut edges = Vec::new();
        let boundary = b.poly.faces[fidx as usize].boundary.clone();
        for (e, _) in boundary {
            let key = b.edge_keys[e as usize];
            let (key2, s) = match key {
                EdgeKey::Segment { a, b: bb, idx, .. } => {
                    let (a2, b2) = (p.apply(a), p.apply(bb));
                    let n = layouts[tet].edge_points(a, bb);
                    if a2 < b2 {
                        (EdgeKey::Segment { tet: g.tet, a: a2, b: b2, idx }, 1)
                    } else {
                        (EdgeKey::Segment { tet: g.tet, a: b2, b: a2, idx: n - 2 - idx }, -1)
                    }
                }
                EdgeKey::Arc { face: ff, corner, idx, toward, .. } => {
                    let others: Vec<u8> = face_vertices(ff).into_iter().filter(|&x| x != corner).collect();
                    let s = if p.apply(others[0]) < p.apply(others[1]) { 1 } else { -1 };
                    (EdgeKey::Arc { tet: g.tet, face: tf, corner: p.apply(corner), idx, toward }, s)
                }
            };
            let e2 = *b.edges.get(&key2).expect("partner edge exists");
            edges.push((e, e2, s));
        }
        let mut points = Vec::new();
        for pt in b.poly.face_points(fidx) {
            let key = b.point_keys[pt as usize];
            let (a2, b2) = (p.apply(key.a), p.apply(key.b));
            let n = layouts[tet].edge_points(key.a, key.b);
            let key2 = if a2 < b2 {
                PointKey { tet: g.tet, a: a2, b: b2, pos: key.pos, hi: key.hi }
            } else {
                PointKey { tet: g.tet, a: b2, b: a2, pos: n - 1 - key.pos, hi: !key.hi }
            };
            points.push((pt, *b.points.get(&key2).expect("partner point exists")));
        }
        b.poly.faces[fidx as usize].glue = Some(FaceGlue { partner, sign, edges, points });
    }

    let piece_of_face = b.poly.faces.iter().map(|f| f.piece as usize).collect();
    let (poly, face_index, face_ids) = (b.poly, b.faces, b.face_ids);
    CutComplex {
        tri: tri.clone(),
        coords: coords.to_vec(),
        layouts,
        pieces,
        poly,
        face_index,
        face_ids,
        piece_of_face,
    }
}

impl CutComplex {
    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    /// Coordinates of the surface `S` (without the vertex link).
    pub fn surface(&self) -> &[usize] {
        &self.coords
    }

    pub fn polyhedra(&self) -> &PieceComplex {
        &self.poly
    }

    pub fn face_id(&self, f: u32) -> FaceId {
        self.face_ids[f as usize]
    }

    pub fn face_index(&self, id: &FaceId) -> Option<u32> {
        self.face_index.get(id).copied()
    }

    pub fn face_class(&self, f: u32) -> FaceClass {
        class_of(self.poly.faces[f as usize].label)
    }

    pub fn piece_of(&self, f: u32) -> usize {
        self.piece_of_face[f as usize]
    }

    /// Number of tetrahedra whose quad coordinate is non-zero.
    pub fn quad_tets(&self) -> usize {
        self.layouts.iter().filter(|l| l.quad.is_some()).count()
    }

    pub fn has_quad(&self, tet: usize) -> bool {
        self.layouts[tet].quad.is_some()
    }

    /// The gluing involution on non-disc faces, each pair listed once.
    pub fn face_pairings(&self) -> Vec<(FaceId, FaceId)> {
        let mut out = Vec::new();
        for (f, face) in self.poly.faces.iter().enumerate() {
            if let Some(g) = &face.glue {
                if (f as u32) < g.partner {
                    out.push((self.face_ids[f], self.face_ids[g.partner as usize]));
                }
            }
        }
        out
    }

    /// Frontier status of every quad face of a prism.
    pub fn quad_face_status(&self) -> Vec<(FaceId, QuadFaceStatus)> {
        let mut out = Vec::new();
        for (f, face) in self.poly.faces.iter().enumerate() {
            if face.label != FaceLabel::QuadFace {
                continue;
            }
            let partner = face.glue.as_ref().expect("region faces are glued").partner;
            let status = if self.poly.faces[partner as usize].label == FaceLabel::Vertical {
                QuadFaceStatus::Frontier
            } else {
                QuadFaceStatus::NonFrontier
            };
            out.push((self.face_ids[f], status));
        }
        out
    }

    pub fn piece_census(&self) -> PieceCensus {
        let count = |k| self.pieces.iter().filter(|p| p.kind == k).count();
        let c = PieceCensus {
            truncated_tets: count(PieceKind::TruncatedTet),
            prisms: count(PieceKind::TruncatedPrism),
            products: count(PieceKind::ProductBlock),
        };
        let t = self.tri.tet_count();
        assert!(c.truncated_tets <= t && c.prisms <= 2 * t, "piece census out of bounds");
        c
    }

    /// Check the structural invariants of the cut. Returns a description of
    /// the first violation.
    pub fn check(&self) -> Result<(), CutError> {
        for (f, face) in self.poly.faces.iter().enumerate() {
            let id = self.face_ids[f];
            let bad = || CutError::InconsistentPairing(id.to_string());
            match (&face.glue, face.label) {
                (None, FaceLabel::DiscS | FaceLabel::DiscSv) => {}
                (Some(g), label) => {
                    let other = self.poly.faces[g.partner as usize].label;
                    let ok = match label {
                        FaceLabel::Hexagon => other == FaceLabel::Hexagon,
                        FaceLabel::QuadFace | FaceLabel::Vertical => {
                            matches!(other, FaceLabel::QuadFace | FaceLabel::Vertical)
                        }
                        _ => false,
                    };
                    if !ok || g.partner as usize == f {
                        return Err(bad());
                    }
                }
                _ => return Err(bad()),
            }
        }
        if let Some(&f) = self.poly.gluing_defects().first() {
            return Err(CutError::InconsistentPairing(self.face_ids[f as usize].to_string()));
        }
        Ok(())
    }

    /// Number of disc-side faces lying in `S`.
    pub fn disc_faces_in_s(&self) -> usize {
        self.poly.faces.iter().filter(|f| f.label == FaceLabel::DiscS).count()
    }
}
