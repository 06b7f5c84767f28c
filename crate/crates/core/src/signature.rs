//! Canonical signatures of glued polyhedral pieces.
//!
//! A flag is a (face, edge, point) chain inside one piece. The flag graph
//! has four involutions: swap the point on the edge, the edge in the face,
//! the face in the piece, and cross to the glued partner face. A breadth
//! first numbering from a root flag, listing each flag's label and the
//! numbers of its four neighbours, determines the labelled complex; the
//! minimum over all roots is a relabelling-invariant encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::polyhedral::PieceComplex;

const NONE: u32 = u32::MAX;

/// Canonical code of a labelled piece complex.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    code: Vec<u32>,
}

impl Signature {
    pub fn code(&self) -> &[u32] {
        &self.code
    }

    pub fn flag_count(&self) -> usize {
        self.code.len() / 5
    }

    /// First 16 hex digits of the SHA-256 of the code.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for x in &self.code {
            h.update(x.to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}-{}", self.flag_count(), self.digest())
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({self})")
    }
}

/// How a face is labelled in the signature. Pattern ids are renumbered by
/// first appearance, so only their grouping matters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceMark {
    Interior,
    Surface,
    VertexLink,
    Plugged,
    Pattern(usize),
}

impl FaceMark {
    fn class(self) -> u32 {
        match self {
            FaceMark::Interior => 0,
            FaceMark::Surface => 1,
            FaceMark::VertexLink => 2,
            FaceMark::Plugged => 3,
            FaceMark::Pattern(_) => 4,
        }
    }
}

struct FlagGraph {
    next: Vec<[u32; 4]>,
    mark: Vec<FaceMark>,
}

fn flag_graph(poly: &PieceComplex, pieces: &[u32], glued: &BTreeMap<u32, u32>, mark: &dyn Fn(u32) -> FaceMark) -> FlagGraph {
    let mut index: HashMap<(u32, u32, u32), u32> = HashMap::new();
    let mut flags: Vec<(u32, u32, u32)> = Vec::new();
    for &p in pieces {
        for &(f, _) in &poly.pieces[p as usize].faces {
            for &(e, _) in &poly.faces[f as usize].boundary {
                for v in poly.edges[e as usize].ends {
                    index.insert((f, e, v), flags.len() as u32);
                    flags.push((f, e, v));
                }
            }
        }
    }
    // faces of a piece through an edge, edges of a face through a point
    let mut faces_at_edge: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut edges_at_point: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for &p in pieces {
        for &(f, _) in &poly.pieces[p as usize].faces {
            for &(e, _) in &poly.faces[f as usize].boundary {
                faces_at_edge.entry(e).or_default().push(f);
                for v in poly.edges[e as usize].ends {
                    edges_at_point.entry((f, v)).or_default().push(e);
                }
            }
        }
    }
    let other = |xs: &[u32], x: u32| -> u32 {
        debug_assert_eq!(xs.len(), 2, "flag involution is not well defined");
        if xs[0] == x { xs[1] } else { xs[0] }
    };
    let next = flags
        .iter()
        .map(|&(f, e, v)| {
            let [a, b] = poly.edges[e as usize].ends;
            let s0 = index[&(f, e, if v == a { b } else { a })];
            let s1 = index[&(f, other(&edges_at_point[&(f, v)], e), v)];
            let s2 = index[&(other(&faces_at_edge[&e], f), e, v)];
            let s3 = match glued.get(&f) {
                Some(&g) => {
                    let glue = poly.faces[f as usize].glue.as_ref().expect("glued face has a gluing");
                    debug_assert_eq!(glue.partner, g);
                    index[&(g, glue.map_edge(e).0, glue.map_point(v))]
                }
                None => NONE,
            };
            [s0, s1, s2, s3]
        })
        .collect();
    let mark = flags.iter().map(|&(f, _, _)| mark(f)).collect();
    FlagGraph { next, mark }
}

impl FlagGraph {
    fn label(&self, i: u32, renumber: &mut BTreeMap<usize, u32>) -> u32 {
        match self.mark[i as usize] {
            FaceMark::Pattern(id) => {
                let n = renumber.len() as u32;
                4 + *renumber.entry(id).or_insert(n)
            }
            m => m.class(),
        }
    }

    /// Code from `root`, or `None` as soon as it exceeds `best`.
    fn code_from(&self, root: u32, best: Option<&[u32]>) -> Option<Vec<u32>> {
        let n = self.next.len();
        let mut num = vec![NONE; n];
        let mut order = Vec::with_capacity(n);
        num[root as usize] = 0;
        order.push(root);
        let mut renumber = BTreeMap::new();
        let mut code = Vec::with_capacity(5 * n);
        let mut tied = best.is_some();
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            let mut row = [self.label(x, &mut renumber), 0, 0, 0, 0];
            for (k, &y) in self.next[x as usize].iter().enumerate() {
                row[k + 1] = if y == NONE {
                    NONE
                } else {
                    if num[y as usize] == NONE {
                        num[y as usize] = order.len() as u32;
                        order.push(y);
                    }
                    num[y as usize]
                };
            }
            for v in row {
                if tied {
                    let Some(&b) = best.and_then(|b| b.get(code.len())) else { return None };
                    if v > b {
                        return None;
                    }
                    if v < b {
                        tied = false;
                    }
                }
                code.push(v);
            }
        }
        Some(code)
    }
}

/// Canonical signature of the given pieces, glued along `glued` (a face to
/// partner map covering both directions), with faces labelled by `mark`.
pub fn signature(poly: &PieceComplex, pieces: &[u32], glued: &BTreeMap<u32, u32>, mark: &dyn Fn(u32) -> FaceMark) -> Signature {
    let g = flag_graph(poly, pieces, glued, mark);
    if g.next.is_empty() {
        return Signature { code: Vec::new() };
    }
    // roots: flags of the rarest face class
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for m in &g.mark {
        *counts.entry(m.class()).or_insert(0) += 1;
    }
    let (&class, _) = counts.iter().min_by_key(|(c, n)| (**n, **c)).expect("non-empty");
    let mut best: Option<Vec<u32>> = None;
    for root in 0..g.next.len() as u32 {
        if g.mark[root as usize].class() != class {
            continue;
        }
        if let Some(code) = g.code_from(root, best.as_deref()) {
            if best.as_ref().is_none_or(|b| code < *b) {
                best = Some(code);
            }
        }
    }
    Signature { code: best.expect("at least one root") }
}
