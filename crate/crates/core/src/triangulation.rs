//! Gluing tables of closed orientable one-vertex triangulations.

use std::collections::VecDeque;
use std::fmt;

use crate::normal_surface::NormalSurfaceVector;
use crate::scalar::Ring;

/// A permutation of the vertex labels 0..3, stored as images.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Perm4(pub [u8; 4]);

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4([0, 1, 2, 3]);

    pub fn apply(&self, v: u8) -> u8 {
        self.0[v as usize]
    }

    pub fn inverse(&self) -> Perm4 {
        let mut out = [0u8; 4];
        for (i, &p) in self.0.iter().enumerate() {
            out[p as usize] = i as u8;
        }
        Perm4(out)
    }

    pub fn compose(&self, then: &Perm4) -> Perm4 {
        Perm4([0, 1, 2, 3].map(|v| then.apply(self.apply(v))))
    }

    /// +1 for even permutations, -1 for odd.
    pub fn sign(&self) -> i8 {
        let mut inversions = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 { 1 } else { -1 }
    }

    fn parse(s: &str) -> Option<Perm4> {
        let digits: Vec<u8> = s.bytes().map(|b| b.wrapping_sub(b'0')).collect();
        if digits.len() != 4 || digits.iter().any(|&d| d > 3) {
            return None;
        }
        let mut seen = [false; 4];
        for &d in &digits {
            if seen[d as usize] {
                return None;
            }
            seen[d as usize] = true;
        }
        Some(Perm4([digits[0], digits[1], digits[2], digits[3]]))
    }
}

impl fmt::Display for Perm4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}{}", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

/// Face `face` of a tetrahedron is glued to face `perm(face)` of `tet`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Gluing {
    pub tet: usize,
    pub perm: Perm4,
}

impl Gluing {
    pub fn target_face(&self, face: u8) -> u8 {
        self.perm.apply(face)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Triangulation {
    gluings: Vec<[Option<Gluing>; 4]>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TriangulationError {
    #[error("no tetrahedra")]
    Empty,
    #[error("line {line}: malformed line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("tetrahedron {tet}: face {face} glued to out-of-range tetrahedron {target}")]
    OutOfRange { tet: usize, face: u8, target: usize },
    #[error("face glued twice: face {face} of tetrahedron {tet}")]
    GluedTwice { tet: usize, face: u8 },
    #[error("dangling face: face {face} of tetrahedron {tet} points at a face that does not point back")]
    Dangling { tet: usize, face: u8 },
    #[error("face {face} of tetrahedron {tet} is glued to itself")]
    SelfGlued { tet: usize, face: u8 },
    #[error("triangulation is not one-vertex, closed and orientable with a sphere link")]
    NotValid,
}

/// Strip comments and blank lines and collapse whitespace, giving the text
/// that [`Triangulation::serialize`] reproduces.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push_str(&trimmed.split_whitespace().collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

impl Triangulation {
    /// Parse a gluing table. A token `-` marks an unglued face.
    pub fn parse(text: &str) -> Result<Triangulation, TriangulationError> {
        let mut gluings = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            if tokens.len() != 4 {
                return Err(TriangulationError::Malformed {
                    line: lineno + 1,
                    reason: format!("expected 4 tokens, found {}", tokens.len()),
                });
            }
            let mut row = [None; 4];
            for (k, tok) in tokens.iter().enumerate() {
                if *tok == "-" {
                    continue;
                }
                let bad = |reason: &str| TriangulationError::Malformed {
                    line: lineno + 1,
                    reason: format!("token {tok:?}: {reason}"),
                };
                let (tet, perm) = tok.split_once(':').ok_or_else(|| bad("expected j:p0p1p2p3"))?;
                let tet: usize = tet.parse().map_err(|_| bad("bad tetrahedron index"))?;
                let perm = Perm4::parse(perm).ok_or_else(|| bad("bad permutation"))?;
                row[k] = Some(Gluing { tet, perm });
            }
            gluings.push(row);
        }
        Self::from_gluings(gluings)
    }

    /// Check the involution and build. Unglued faces are allowed here; use
    /// [`Triangulation::validate`] to test closedness.
    pub fn from_gluings(gluings: Vec<[Option<Gluing>; 4]>) -> Result<Triangulation, TriangulationError> {
        let t = gluings.len();
        if t == 0 {
            return Err(TriangulationError::Empty);
        }
        let mut claimed = vec![[None::<(usize, u8)>; 4]; t];
        for (i, row) in gluings.iter().enumerate() {
            for f in 0..4u8 {
                let Some(g) = row[f as usize] else { continue };
                if g.tet >= t {
                    return Err(TriangulationError::OutOfRange { tet: i, face: f, target: g.tet });
                }
                let tf = g.target_face(f);
                if g.tet == i && tf == f {
                    return Err(TriangulationError::SelfGlued { tet: i, face: f });
                }
                if claimed[g.tet][tf as usize].is_some() {
                    return Err(TriangulationError::GluedTwice { tet: g.tet, face: tf });
                }
                claimed[g.tet][tf as usize] = Some((i, f));
            }
        }
        for (i, row) in gluings.iter().enumerate() {
            for f in 0..4u8 {
                let Some(g) = row[f as usize] else { continue };
                let tf = g.target_face(f);
                match gluings[g.tet][tf as usize] {
                    Some(back) if back.tet == i && back.perm == g.perm.inverse() => {}
                    Some(_) => return Err(TriangulationError::GluedTwice { tet: i, face: f }),
                    None => return Err(TriangulationError::Dangling { tet: i, face: f }),
                }
            }
        }
        Ok(Triangulation { gluings })
    }

    pub fn tet_count(&self) -> usize {
        self.gluings.len()
    }

    pub fn gluing(&self, tet: usize, face: u8) -> Option<Gluing> {
        self.gluings[tet][face as usize]
    }

    /// Gluing of a face of a closed triangulation.
    pub fn is_closed(&self) -> bool {
        self.gluings.iter().all(|g| g.iter().all(Option::is_some))
    }

    pub fn glued(&self, tet: usize, face: u8) -> Gluing {
        self.gluing(tet, face).expect("closed triangulation")
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for row in &self.gluings {
            let toks: Vec<String> = row
                .iter()
                .map(|g| match g {
                    Some(g) => format!("{}:{}", g.tet, g.perm),
                    None => "-".to_string(),
                })
                .collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
        out
    }

    /// Relabel tetrahedra: old tetrahedron `i` becomes `order[i]`.
    pub fn relabel(&self, order: &[usize]) -> Triangulation {
        let t = self.tet_count();
        assert_eq!(order.len(), t);
        let mut gl = vec![[None; 4]; t];
        for i in 0..t {
            for f in 0..4 {
                gl[order[i]][f] = self.gluings[i][f].map(|g| Gluing { tet: order[g.tet], perm: g.perm });
            }
        }
        Triangulation { gluings: gl }
    }

    /// Orient the tetrahedra by breadth-first 2-colouring. Returns the signs,
    /// or `None` if some gluing forces a contradiction.
    pub fn orientation(&self) -> Option<Vec<i8>> {
        let t = self.tet_count();
        let mut sign = vec![0i8; t];
        for start in 0..t {
            if sign[start] != 0 {
                continue;
            }
            sign[start] = 1;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for f in 0..4u8 {
                    let Some(g) = self.gluing(i, f) else { continue };
                    let want = -sign[i] * g.perm.sign();
                    if sign[g.tet] == 0 {
                        sign[g.tet] = want;
                        queue.push_back(g.tet);
                    } else if sign[g.tet] != want {
                        return None;
                    }
                }
            }
        }
        Some(sign)
    }

    pub fn validate(&self) -> ValidationReport {
        let t = self.tet_count();
        let closed = self.gluings.iter().all(|r| r.iter().all(|g| g.is_some()));
        let orientable = self.orientation().is_some();

        // vertex classes: (tet, vertex) identified through glued faces
        let mut uf = UnionFind::new(4 * t);
        for i in 0..t {
            for f in 0..4u8 {
                let Some(g) = self.gluing(i, f) else { continue };
                for v in (0..4u8).filter(|&v| v != f) {
                    uf.union(4 * i + v as usize, 4 * g.tet + g.perm.apply(v) as usize);
                }
            }
        }
        let vertex_count = uf.classes();

        // link cell structure: triangles (tet, corner); edges (tet, corner, face);
        // vertices (tet, corner, other endpoint)
        let mut edges = UnionFind::new(16 * t);
        let mut verts = UnionFind::new(16 * t);
        let mut tris = UnionFind::new(4 * t);
        for i in 0..t {
            for c in 0..4u8 {
                for f in (0..4u8).filter(|&f| f != c) {
                    // link edge on face f, link vertices at edges (c, x) with x in face f
                    let e = 16 * i + 4 * c as usize + f as usize;
                    if let Some(g) = self.gluing(i, f) {
                        let e2 = 16 * g.tet + 4 * g.perm.apply(c) as usize + g.perm.apply(f) as usize;
                        edges.union(e, e2);
                        tris.union(4 * i + c as usize, 4 * g.tet + g.perm.apply(c) as usize);
                        for x in (0..4u8).filter(|&x| x != c && x != f) {
                            verts.union(
                                16 * i + 4 * c as usize + x as usize,
                                16 * g.tet + 4 * g.perm.apply(c) as usize + g.perm.apply(x) as usize,
                            );
                        }
                    }
                }
            }
        }
        let mut edge_classes = std::collections::BTreeSet::new();
        let mut vert_classes = std::collections::BTreeSet::new();
        for i in 0..t {
            for c in 0..4usize {
                for x in (0..4usize).filter(|&x| x != c) {
                    edge_classes.insert(edges.find(16 * i + 4 * c + x));
                    vert_classes.insert(verts.find(16 * i + 4 * c + x));
                }
            }
        }
        let link_euler = vert_classes.len() as i64 - edge_classes.len() as i64 + 4 * t as i64;
        let link_components = tris.classes();

        // an edge is invalid if a cycle of gluings maps it to itself reversed
        let mut edge_uf = ParityUnionFind::new(6 * t);
        let mut edges_valid = true;
        for i in 0..t {
            for f in 0..4u8 {
                let Some(g) = self.gluing(i, f) else { continue };
                let others: Vec<u8> = (0..4u8).filter(|&v| v != f).collect();
                for a in 0..3 {
                    for b in a + 1..3 {
                        let (u, v) = (others[a], others[b]);
                        let (pu, pv) = (g.perm.apply(u), g.perm.apply(v));
                        let parity = if pu < pv { 0 } else { 1 };
                        if !edge_uf.union(6 * i + edge_index(u, v), 6 * g.tet + edge_index(pu, pv), parity) {
                            edges_valid = false;
                        }
                    }
                }
            }
        }

        ValidationReport {
            closed,
            orientable,
            vertex_count,
            vertex_link_euler: link_euler,
            vertex_link_connected: link_components == vertex_count,
            edges_valid,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    /// Vertex-link normal sphere: every triangle coordinate 1, quads 0.
    pub fn vertex_link<I: Ring>(&self) -> Result<NormalSurfaceVector<I>, TriangulationError> {
        let r = self.validate();
        if !r.closed || r.vertex_count != 1 {
            return Err(TriangulationError::NotValid);
        }
        Ok(NormalSurfaceVector::vertex_link(self.tet_count()))
    }
}

impl fmt::Display for Triangulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Index of the edge {a, b} of a tetrahedron, 0..6.
pub fn edge_index(a: u8, b: u8) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("not an edge: {a}{b}"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub closed: bool,
    pub orientable: bool,
    pub vertex_count: usize,
    pub vertex_link_euler: i64,
    pub vertex_link_connected: bool,
    /// No edge is identified with itself in reverse.
    pub edges_valid: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.closed
            && self.orientable
            && self.vertex_count == 1
            && self.vertex_link_euler == 2
            && self.vertex_link_connected
            && self.edges_valid
    }
}

/// Plain union-find with path halving.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Union keeping the smaller index as root.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    pub fn classes(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Union-find tracking a parity relative to the root.
#[derive(Clone, Debug)]
pub(crate) struct ParityUnionFind {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityUnionFind {
    pub fn new(n: usize) -> Self {
        ParityUnionFind { parent: (0..n).collect(), parity: vec![0; n] }
    }

    /// Root and parity of `x` relative to it.
    pub fn find(&mut self, x: usize) -> (usize, u8) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] != cur {
            path.push(cur);
            cur = self.parent[cur];
        }
        let root = cur;
        // compress from the top down
        for &node in path.iter().rev() {
            let p = self.parent[node];
            if p != root {
                self.parity[node] ^= self.parity[p];
            }
            self.parent[node] = root;
        }
        (root, self.parity[x])
    }

    /// Record `parity(a) xor parity(b) == rel`. Returns false on contradiction.
    pub fn union(&mut self, a: usize, b: usize, rel: u8) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == rel;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        self.parity[hi] = pa ^ pb ^ rel;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_TET: &str = "0:1023 0:1023 0:2031 0:1302\n";

    #[test]
    fn parses_and_validates() {
        let tri = Triangulation::parse(ONE_TET).unwrap();
        let r = tri.validate();
        assert!(r.is_valid(), "{r:?}");
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(Triangulation::parse("# nothing\n"), Err(TriangulationError::Empty));
    }

    #[test]
    fn face_glued_twice_is_rejected() {
        let err = Triangulation::parse("1:0123 1:1023 - -\n0:0123 - - -\n").unwrap_err();
        assert!(matches!(err, TriangulationError::GluedTwice { .. }), "{err}");
    }

    #[test]
    fn dangling_face_is_rejected() {
        let err = Triangulation::parse("1:0123 - - -\n- - - -\n").unwrap_err();
        assert!(matches!(err, TriangulationError::Dangling { .. }), "{err}");
    }

    #[test]
    fn unglued_tetrahedra_are_open() {
        let tri = Triangulation::parse("- - - -\n- - - -\n").unwrap();
        assert!(!tri.validate().closed);
    }

    #[test]
    fn parity_union_find_detects_conflict() {
        let mut uf = ParityUnionFind::new(3);
        assert!(uf.union(0, 1, 1));
        assert!(uf.union(1, 2, 1));
        assert!(uf.union(0, 2, 0));
        assert!(!uf.union(0, 2, 1));
    }
}
