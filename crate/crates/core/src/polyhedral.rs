//! Polyhedral pieces with interned local cells and face gluings.
//!
//! Every piece owns its faces; every face owns its boundary edges and every
//! edge its two endpoints. Gluing two faces identifies their closures through
//! an explicit edge and point map. [`PieceComplex::assemble`] turns any set of
//! pieces and applied gluings into a [`CellComplex`].

use std::collections::BTreeMap;

use crate::cells::{CellComplex, CellLabel};
use crate::triangulation::{ParityUnionFind, UnionFind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceLabel {
    TruncatedTet,
    TruncatedPrism,
    ProductBlock,
    Block,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceLabel {
    DiscS,
    DiscSv,
    Hexagon,
    QuadFace,
    Vertical,
    /// Horizontal face of a hand-built block.
    Floor,
    /// Side face of a hand-built block.
    Wall,
}

impl FaceLabel {
    pub fn cell_label(self) -> CellLabel {
        match self {
            FaceLabel::DiscS | FaceLabel::Floor => CellLabel::DiscS,
            FaceLabel::DiscSv => CellLabel::DiscSv,
            FaceLabel::Hexagon => CellLabel::Hexagon,
            FaceLabel::QuadFace => CellLabel::QuadFace,
            FaceLabel::Vertical => CellLabel::Vertical,
            FaceLabel::Wall => CellLabel::Wall,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Segment,
    Arc,
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyEdge {
    /// (start, end)
    pub ends: [u32; 2],
    pub label: EdgeLabel,
}

/// How a face is identified with its partner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceGlue {
    pub partner: u32,
    /// +1 if the identification preserves the faces' own orientations.
    pub sign: i8,
    /// (local edge, partner edge, orientation agreement)
    pub edges: Vec<(u32, u32, i8)>,
    pub points: Vec<(u32, u32)>,
}

impl FaceGlue {
    pub fn map_edge(&self, e: u32) -> (u32, i8) {
        let &(_, e2, s) = self.edges.iter().find(|x| x.0 == e).expect("edge on glued face");
        (e2, s)
    }

    pub fn map_point(&self, p: u32) -> u32 {
        self.points.iter().find(|x| x.0 == p).expect("point on glued face").1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFace {
    pub boundary: Vec<(u32, i8)>,
    pub label: FaceLabel,
    pub piece: u32,
    pub glue: Option<FaceGlue>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyPiece {
    /// Faces with the sign induced by the piece's orientation.
    pub faces: Vec<(u32, i8)>,
    pub label: PieceLabel,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PieceComplex {
    pub points: usize,
    pub edges: Vec<PolyEdge>,
    pub faces: Vec<PolyFace>,
    pub pieces: Vec<PolyPiece>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prism {
    pub piece: u32,
    pub floor: u32,
    pub ceiling: u32,
    pub walls: Vec<u32>,
    pub bottom: Vec<u32>,
    pub top: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GlueError {
    #[error("point map does not cover the face")]
    PointMap,
    #[error("an edge has no counterpart on the partner face")]
    EdgeMismatch,
    #[error("face boundaries do not correspond")]
    BoundaryMismatch,
}

/// Cell complex built from a selection of pieces, with the maps from local
/// cells to assembled cells.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub complex: CellComplex,
    /// local face -> (2-cell, sign)
    pub face_cell: BTreeMap<u32, (usize, i8)>,
    pub edge_cell: BTreeMap<u32, (usize, i8)>,
    pub point_cell: BTreeMap<u32, usize>,
    /// i-th selected piece -> 3-cell i
    pub pieces: Vec<u32>,
    /// 3-cells added for caps, in order
    pub caps: Vec<usize>,
}

impl PieceComplex {
    pub fn add_point(&mut self) -> u32 {
        self.points += 1;
        (self.points - 1) as u32
    }

    pub fn add_edge(&mut self, start: u32, end: u32, label: EdgeLabel) -> u32 {
        self.edges.push(PolyEdge { ends: [start, end], label });
        (self.edges.len() - 1) as u32
    }

    /// A polygon times an interval as a new piece. Returns the piece, its
    /// floor and ceiling faces, the walls (wall `k` sits over polygon edge
    /// `k -> k+1`), and the bottom and top points in polygon order.
    pub fn add_prism(&mut self, n: usize, label: PieceLabel, floor: FaceLabel, wall: FaceLabel) -> Prism {
        assert!(n >= 3, "prism over a polygon with fewer than three sides");
        let piece = self.pieces.len() as u32;
        let bottom: Vec<u32> = (0..n).map(|_| self.add_point()).collect();
        let top: Vec<u32> = (0..n).map(|_| self.add_point()).collect();
        let b: Vec<u32> = (0..n).map(|k| self.add_edge(bottom[k], bottom[(k + 1) % n], EdgeLabel::Arc)).collect();
        let t: Vec<u32> = (0..n).map(|k| self.add_edge(top[k], top[(k + 1) % n], EdgeLabel::Arc)).collect();
        let v: Vec<u32> = (0..n).map(|k| self.add_edge(bottom[k], top[k], EdgeLabel::Segment)).collect();
        let mut face = |boundary: Vec<(u32, i8)>, label| {
            self.faces.push(PolyFace { boundary, label, piece, glue: None });
            (self.faces.len() - 1) as u32
        };
        let floor_f = face(b.iter().map(|&e| (e, 1)).collect(), floor);
        let ceiling_f = face(t.iter().map(|&e| (e, 1)).collect(), floor);
        let walls: Vec<u32> =
            (0..n).map(|k| face(vec![(b[k], 1), (v[(k + 1) % n], 1), (t[k], -1), (v[k], -1)], wall)).collect();
        let mut faces = vec![(floor_f, -1), (ceiling_f, 1)];
        faces.extend(walls.iter().map(|&w| (w, 1)));
        self.pieces.push(PolyPiece { faces, label });
        Prism { piece, floor: floor_f, ceiling: ceiling_f, walls, bottom, top }
    }

    /// Identify faces `a` and `b` through the given point correspondence,
    /// recording the gluing on both faces. Edges are matched by endpoints.
    /// Returns the orientation sign of the identification.
    pub fn glue_faces(&mut self, a: u32, b: u32, point_map: &[(u32, u32)]) -> Result<i8, GlueError> {
        let pm: BTreeMap<u32, u32> = point_map.iter().copied().collect();
        let fb = &self.faces[b as usize];
        let mut edges = Vec::new();
        let mut mapped: BTreeMap<u32, i64> = BTreeMap::new();
        for &(e, s) in &self.faces[a as usize].boundary {
            let [p, q] = self.edges[e as usize].ends;
            let (p2, q2) = (*pm.get(&p).ok_or(GlueError::PointMap)?, *pm.get(&q).ok_or(GlueError::PointMap)?);
            let hit = fb
                .boundary
                .iter()
                .map(|&(e2, _)| e2)
                .find_map(|e2| {
                    let [c, d] = self.edges[e2 as usize].ends;
                    if (c, d) == (p2, q2) {
                        Some((e2, 1i8))
                    } else if (d, c) == (p2, q2) {
                        Some((e2, -1))
                    } else {
                        None
                    }
                })
                .ok_or(GlueError::EdgeMismatch)?;
            edges.push((e, hit.0, hit.1));
            *mapped.entry(hit.0).or_insert(0) += (s * hit.1) as i64;
        }
        let want: BTreeMap<u32, i64> = fb.boundary.iter().map(|&(e, s)| (e, s as i64)).collect();
        let sign = if mapped == want {
            1
        } else if mapped.iter().all(|(e, c)| want.get(e) == Some(&-c)) && mapped.len() == want.len() {
            -1
        } else {
            return Err(GlueError::BoundaryMismatch);
        };
        let back_edges = edges.iter().map(|&(e1, e2, s)| (e2, e1, s)).collect();
        let points: Vec<(u32, u32)> = pm.iter().map(|(&p, &q)| (p, q)).collect();
        let back_points = points.iter().map(|&(p, q)| (q, p)).collect();
        self.faces[a as usize].glue = Some(FaceGlue { partner: b, sign, edges, points });
        self.faces[b as usize].glue = Some(FaceGlue { partner: a, sign, edges: back_edges, points: back_points });
        Ok(sign)
    }

    /// The orientation sign with which face `f` appears in its piece.
    pub fn face_sign(&self, f: u32) -> i8 {
        let face = &self.faces[f as usize];
        self.pieces[face.piece as usize].faces.iter().find(|x| x.0 == f).map_or(1, |x| x.1)
    }

    /// All glued face pairs, each listed once with the smaller face first.
    pub fn glued_pairs(&self) -> Vec<(u32, u32)> {
        self.faces
            .iter()
            .enumerate()
            .filter_map(|(f, x)| x.glue.as_ref().map(|g| (f as u32, g.partner)))
            .filter(|(a, b)| a < b)
            .collect()
    }

    /// Points of a face in first-seen order.
    pub fn face_points(&self, f: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for &(e, _) in &self.faces[f as usize].boundary {
            for p in self.edges[e as usize].ends {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Assemble the pieces `pieces` glued along the face pairs `glued`. Each
    /// cap is a list of faces closed off by one extra 3-cell whose boundary is
    /// minus the sum of those faces.
    pub fn assemble(&self, pieces: &[u32], glued: &[(u32, u32)], caps: &[Vec<u32>]) -> Assembled {
        let mut faces: Vec<u32> = Vec::new();
        for &p in pieces {
            for &(f, _) in &self.pieces[p as usize].faces {
                faces.push(f);
            }
        }
        let mut edges: Vec<u32> = Vec::new();
        for &f in &faces {
            for &(e, _) in &self.faces[f as usize].boundary {
                edges.push(e);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut points: Vec<u32> = edges.iter().flat_map(|&e| self.edges[e as usize].ends).collect();
        points.sort_unstable();
        points.dedup();

        let f_ix: BTreeMap<u32, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let e_ix: BTreeMap<u32, usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let p_ix: BTreeMap<u32, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();

        let mut fu = ParityUnionFind::new(faces.len());
        let mut eu = ParityUnionFind::new(edges.len());
        let mut pu = UnionFind::new(points.len());
        for &(a, b) in glued {
            let g = self.faces[a as usize].glue.as_ref().expect("glued face has a partner");
            debug_assert_eq!(g.partner, b);
            fu.union(f_ix[&a], f_ix[&b], (g.sign < 0) as u8);
            for &(e1, e2, s) in &g.edges {
                eu.union(e_ix[&e1], e_ix[&e2], (s < 0) as u8);
            }
            for &(p1, p2) in &g.points {
                pu.union(p_ix[&p1], p_ix[&p2]);
            }
        }

        let mut cx = CellComplex::new();
        let mut point_class: BTreeMap<usize, usize> = BTreeMap::new();
        let mut point_cell = BTreeMap::new();
        for (i, &p) in points.iter().enumerate() {
            let r = pu.find(i);
            let cell = *point_class.entry(r).or_insert_with(|| cx.add_cell(0, vec![], CellLabel::Point));
            point_cell.insert(p, cell);
        }
        let mut edge_class: BTreeMap<usize, usize> = BTreeMap::new();
        let mut edge_cell = BTreeMap::new();
        for (i, &e) in edges.iter().enumerate() {
            let (r, par) = eu.find(i);
            let sign = if par == 0 { 1 } else { -1 };
            let cell = match edge_class.get(&r) {
                Some(&c) => c,
                None => {
                    // the class representative is the smallest local edge
                    let rep = edges[r];
                    let [s, t] = self.edges[rep as usize].ends;
                    let label = match self.edges[rep as usize].label {
                        EdgeLabel::Segment => CellLabel::Segment,
                        EdgeLabel::Arc => CellLabel::Arc,
                        EdgeLabel::Plain => CellLabel::Plain,
                    };
                    let c = cx.add_cell(1, vec![(point_cell[&t], 1), (point_cell[&s], -1)], label);
                    edge_class.insert(r, c);
                    c
                }
            };
            edge_cell.insert(e, (cell, sign));
        }
        let mut face_class: BTreeMap<usize, usize> = BTreeMap::new();
        let mut face_cell = BTreeMap::new();
        for (i, &f) in faces.iter().enumerate() {
            let (r, par) = fu.find(i);
            let sign = if par == 0 { 1 } else { -1 };
            let cell = match face_class.get(&r) {
                Some(&c) => c,
                None => {
                    let rep = faces[r];
                    let pf = &self.faces[rep as usize];
                    let b = pf
                        .boundary
                        .iter()
                        .map(|&(e, s)| {
                            let (c, es) = edge_cell[&e];
                            (c, s * es)
                        })
                        .collect();
                    let c = cx.add_cell(2, b, pf.label.cell_label());
                    face_class.insert(r, c);
                    c
                }
            };
            face_cell.insert(f, (cell, sign));
        }
        for &p in pieces {
            let b = self.pieces[p as usize]
                .faces
                .iter()
                .map(|&(f, s)| {
                    let (c, fs) = face_cell[&f];
                    (c, s * fs)
                })
                .collect();
            cx.add_cell(3, b, CellLabel::Piece);
        }
        // Caps follow a coherent orientation of the pieces they touch.
        let mut orient = BTreeMap::new();
        if !caps.is_empty() {
            let p_of: BTreeMap<u32, usize> = pieces.iter().enumerate().map(|(i, &p)| (p, i)).collect();
            let mut ou = ParityUnionFind::new(pieces.len());
            for &(a, b) in glued {
                let (fa, fb) = (&self.faces[a as usize], &self.faces[b as usize]);
                let sa = self.face_sign(a) * face_cell[&a].1;
                let sb = self.face_sign(b) * face_cell[&b].1;
                // coherent pieces induce opposite signs on a shared face
                ou.union(p_of[&fa.piece], p_of[&fb.piece], (sa == sb) as u8);
            }
            for (i, &p) in pieces.iter().enumerate() {
                orient.insert(p, if ou.find(i).1 == 0 { 1i8 } else { -1 });
            }
        }
        let mut cap_cells = Vec::new();
        for cap in caps {
            let b = cap
                .iter()
                .map(|f| {
                    let (c, fs) = face_cell[f];
                    (c, -self.face_sign(*f) * fs * orient[&self.faces[*f as usize].piece])
                })
                .collect();
            cap_cells.push(cx.add_cell(3, b, CellLabel::Cap));
        }
        Assembled { complex: cx, face_cell, edge_cell, point_cell, pieces: pieces.to_vec(), caps: cap_cells }
    }

    /// Check that each glued face's boundary maps onto its partner's boundary
    /// with the recorded signs. Returns the offending faces.
    pub fn gluing_defects(&self) -> Vec<u32> {
        let mut bad = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            let Some(g) = &face.glue else { continue };
            let partner = &self.faces[g.partner as usize];
            let mut mapped: BTreeMap<u32, i64> = BTreeMap::new();
            for &(e, s) in &face.boundary {
                let (e2, es) = g.map_edge(e);
                *mapped.entry(e2).or_insert(0) += (s * es) as i64;
            }
            let mut want: BTreeMap<u32, i64> = BTreeMap::new();
            for &(e, s) in &partner.boundary {
                *want.entry(e).or_insert(0) += (s * g.sign) as i64;
            }
            let endpoints_ok = g.edges.iter().all(|&(e1, e2, s)| {
                let [a, b] = self.edges[e1 as usize].ends;
                let [c, d] = self.edges[e2 as usize].ends;
                let (a2, b2) = (g.map_point(a), g.map_point(b));
                if s > 0 { (a2, b2) == (c, d) } else { (a2, b2) == (d, c) }
            });
            let back_ok = partner.glue.as_ref().is_some_and(|h| h.partner == f as u32 && h.sign == g.sign);
            if mapped != want || !endpoints_ok || !back_ok {
                bad.push(f as u32);
            }
        }
        bad
    }
}
