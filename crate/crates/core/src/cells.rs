//! Regular-ish CW complexes of dimension at most three, with cellular
//! homology, boundary surfaces and greedy collapse.
//!
//! Boundaries are stored as occurrence lists: a face met twice by the same
//! cell appears twice, so incidence multiplicities survive for collapsing
//! while coefficients are recovered by summing signs.

use std::collections::{BTreeMap, BTreeSet};

use crate::smith::{sparse_invariant_factors, AbelianGroup, IntMatrix};
use crate::triangulation::UnionFind;

/// What a cell came from. Only used for reporting and canonical labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellLabel {
    Plain,
    Point,
    Segment,
    Arc,
    DiscS,
    DiscSv,
    Hexagon,
    QuadFace,
    Vertical,
    Wall,
    Piece,
    Cap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub boundary: Vec<(usize, i8)>,
    pub label: CellLabel,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellComplex {
    cells: [Vec<Cell>; 4],
}

/// A choice of cells in each dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    pub member: [Vec<bool>; 4],
}

impl CellSet {
    pub fn empty(cx: &CellComplex) -> Self {
        CellSet { member: [0, 1, 2, 3].map(|d| vec![false; cx.count(d)]) }
    }

    pub fn count(&self, d: usize) -> usize {
        self.member[d].iter().filter(|&&b| b).count()
    }
}

/// A connected piece of a surface made of 2-cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfacePart {
    pub faces: Vec<usize>,
    pub euler_char: i64,
}

impl CellComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, d: usize) -> usize {
        self.cells[d].len()
    }

    pub fn counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|d| self.count(d))
    }

    pub fn cell(&self, d: usize, i: usize) -> &Cell {
        &self.cells[d][i]
    }

    pub fn add_cell(&mut self, d: usize, boundary: Vec<(usize, i8)>, label: CellLabel) -> usize {
        if d > 0 {
            for &(f, _) in &boundary {
                assert!(f < self.count(d - 1), "boundary refers to a missing cell");
            }
        } else {
            assert!(boundary.is_empty());
        }
        self.cells[d].push(Cell { boundary, label });
        self.cells[d].len() - 1
    }

    /// Summed boundary coefficients of a cell.
    pub fn boundary_chain(&self, d: usize, i: usize) -> BTreeMap<usize, i64> {
        let mut out = BTreeMap::new();
        for &(f, s) in &self.cells[d][i].boundary {
            *out.entry(f).or_insert(0) += s as i64;
        }
        out.retain(|_, v| *v != 0);
        out
    }

    pub fn boundary_matrix(&self, d: usize) -> IntMatrix<i64> {
        let mut m = IntMatrix::zeros(self.count(d - 1), self.count(d));
        for (c, chain) in (0..self.count(d)).map(|c| (c, self.boundary_chain(d, c))) {
            for (r, v) in chain {
                m.set(r, c, v);
            }
        }
        m
    }

    /// Whether every boundary of a boundary vanishes.
    pub fn is_chain_complex(&self) -> bool {
        for d in 2..4 {
            for c in 0..self.count(d) {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for (f, v) in self.boundary_chain(d, c) {
                    for (g, w) in self.boundary_chain(d - 1, f) {
                        *acc.entry(g).or_insert(0) += v * w;
                    }
                }
                if acc.values().any(|&x| x != 0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.count(0) as i64 - self.count(1) as i64 + self.count(2) as i64 - self.count(3) as i64
    }

    /// Invariant factors of the boundary map from dimension `d`, restricted to
    /// cells outside `rel`.
    fn boundary_invariants(&self, d: usize, rel: Option<&CellSet>) -> Vec<num_bigint::BigInt> {
        if d == 0 || d > 3 {
            return Vec::new();
        }
        let keep = |dim: usize, i: usize| rel.is_none_or(|s| !s.member[dim][i]);
        let row_index: Vec<Option<usize>> = {
            let mut k = 0;
            (0..self.count(d - 1))
                .map(|i| {
                    keep(d - 1, i).then(|| {
                        k += 1;
                        k - 1
                    })
                })
                .collect()
        };
        let rows = row_index.iter().flatten().count();
        let mut entries = Vec::new();
        let mut col = 0;
        for c in 0..self.count(d) {
            if !keep(d, c) {
                continue;
            }
            for (r, v) in self.boundary_chain(d, c) {
                if let Some(ri) = row_index[r] {
                    entries.push((ri, col, v));
                }
            }
            col += 1;
        }
        sparse_invariant_factors(rows, col, &entries)
    }

    /// Homology in dimensions 0..=3, relative to `rel` when given. The
    /// relative set must be a subcomplex.
    pub fn homology(&self, rel: Option<&CellSet>) -> [AbelianGroup; 4] {
        let inv: Vec<Vec<num_bigint::BigInt>> = (0..5).map(|d| self.boundary_invariants(d, rel)).collect();
        let chains = |d: usize| match rel {
            Some(s) => self.count(d) - s.count(d),
            None => self.count(d),
        };
        [0, 1, 2, 3].map(|d| {
            let cycles = chains(d) - inv[d].len();
            let bounds = &inv[d + 1];
            AbelianGroup {
                rank: cycles.checked_sub(bounds.len()).expect("boundary of a boundary is not zero"),
                torsion: bounds.iter().filter(|x| !num_traits::One::is_one(*x)).cloned().collect(),
            }
        })
    }

    /// Number of times each cell of dimension `d` occurs in boundaries of dimension `d + 1`.
    pub fn coface_occurrences(&self, d: usize) -> Vec<usize> {
        let mut occ = vec![0; self.count(d)];
        if d < 3 {
            for c in &self.cells[d + 1] {
                for &(f, _) in &c.boundary {
                    occ[f] += 1;
                }
            }
        }
        occ
    }

    /// 2-cells met exactly once by the 3-cells.
    pub fn boundary_faces(&self) -> Vec<usize> {
        self.coface_occurrences(2)
            .iter()
            .enumerate()
            .filter(|(_, &n)| n == 1)
            .map(|(i, _)| i)
            .collect()
    }

    /// Smallest subcomplex containing the given 2-cells.
    pub fn closure_of_faces(&self, faces: &[usize]) -> CellSet {
        let mut set = CellSet::empty(self);
        for &f in faces {
            set.member[2][f] = true;
            for &(e, _) in &self.cells[2][f].boundary {
                set.member[1][e] = true;
                for &(p, _) in &self.cells[1][e].boundary {
                    set.member[0][p] = true;
                }
            }
        }
        set
    }

    /// Connected pieces of the surface formed by the given 2-cells, joined
    /// along shared 1-cells, each with its Euler characteristic.
    pub fn surface_parts(&self, faces: &[usize]) -> Vec<SurfacePart> {
        let mut uf = UnionFind::new(faces.len());
        let mut by_edge: BTreeMap<usize, usize> = BTreeMap::new();
        for (k, &f) in faces.iter().enumerate() {
            for &(e, _) in &self.cells[2][f].boundary {
                if let Some(&prev) = by_edge.get(&e) {
                    uf.union(prev, k);
                } else {
                    by_edge.insert(e, k);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..faces.len() {
            groups.entry(uf.find(k)).or_default().push(faces[k]);
        }
        groups
            .into_values()
            .map(|fs| {
                let cl = self.closure_of_faces(&fs);
                let chi = cl.count(0) as i64 - cl.count(1) as i64 + fs.len() as i64;
                SurfacePart { faces: fs, euler_char: chi }
            })
            .collect()
    }

    /// Number of connected components of the whole complex.
    pub fn components(&self) -> usize {
        let n0 = self.count(0);
        let mut uf = UnionFind::new(n0);
        for e in &self.cells[1] {
            if let [a, b] = e.boundary[..] {
                uf.union(a.0, b.0);
            }
        }
        uf.classes()
    }

    /// Greedy elementary collapses: repeatedly remove a maximal cell
    /// together with a free face, in a fixed order.
    pub fn collapse(&self) -> Collapsed {
        let mut alive: [Vec<bool>; 4] = [0, 1, 2, 3].map(|d| vec![true; self.count(d)]);
        let mut occ: [Vec<usize>; 4] = [0, 1, 2, 3].map(|d| self.coface_occurrences(d));
        let mut cofaces: [Vec<Vec<usize>>; 4] = [0, 1, 2, 3].map(|d| vec![Vec::new(); self.count(d)]);
        for d in 1..4 {
            for (c, cell) in self.cells[d].iter().enumerate() {
                for &(f, _) in &cell.boundary {
                    cofaces[d - 1][f].push(c);
                }
            }
        }
        let mut work: BTreeSet<(usize, usize)> = BTreeSet::new();
        for d in 0..3 {
            for f in 0..self.count(d) {
                if occ[d][f] == 1 {
                    work.insert((d, f));
                }
            }
        }
        while let Some((d, f)) = work.pop_first() {
            if !alive[d][f] || occ[d][f] != 1 {
                continue;
            }
            let Some(&c) = cofaces[d][f].iter().find(|&&c| alive[d + 1][c]) else { continue };
            if occ[d + 1][c] != 0 {
                continue;
            }
            alive[d + 1][c] = false;
            alive[d][f] = false;
            for &(g, _) in &self.cells[d + 1][c].boundary {
                occ[d][g] -= 1;
            }
            for &(g, _) in &self.cells[d + 1][c].boundary {
                if alive[d][g] {
                    work.insert((d, g));
                    if d > 0 {
                        for &(h, _) in &self.cells[d][g].boundary {
                            work.insert((d - 1, h));
                        }
                    }
                }
            }
            if d > 0 {
                for &(h, _) in &self.cells[d][f].boundary {
                    occ[d - 1][h] -= 1;
                }
                for &(h, _) in &self.cells[d][f].boundary {
                    if alive[d - 1][h] {
                        work.insert((d - 1, h));
                        if d > 1 {
                            for &(k, _) in &self.cells[d - 1][h].boundary {
                                work.insert((d - 2, k));
                            }
                        }
                    }
                }
            }
        }
        let remaining = [0, 1, 2, 3].map(|d| alive[d].iter().filter(|&&b| b).count());
        let mut uf = UnionFind::new(self.count(0));
        for (e, cell) in self.cells[1].iter().enumerate() {
            if alive[1][e] {
                if let [a, b] = cell.boundary[..] {
                    uf.union(a.0, b.0);
                }
            }
        }
        let mut roots = BTreeSet::new();
        for p in 0..self.count(0) {
            if alive[0][p] {
                roots.insert(uf.find(p));
            }
        }
        Collapsed { remaining, connected: roots.len() == 1 }
    }

    /// Number of boundary circles of the surface formed by the given 2-cells.
    pub fn boundary_circles(&self, faces: &[usize]) -> usize {
        let mut occ: BTreeMap<usize, usize> = BTreeMap::new();
        for &f in faces {
            for &(e, _) in &self.cells[2][f].boundary {
                *occ.entry(e).or_insert(0) += 1;
            }
        }
        let edges: Vec<usize> = occ.into_iter().filter(|&(_, n)| n == 1).map(|(e, _)| e).collect();
        if edges.is_empty() {
            return 0;
        }
        let mut uf = UnionFind::new(self.count(0));
        let mut verts = BTreeSet::new();
        for &e in &edges {
            let b = &self.cells[1][e].boundary;
            let a = b[0].0;
            let z = b.get(1).map_or(a, |x| x.0);
            uf.union(a, z);
            verts.insert(a);
            verts.insert(z);
        }
        verts.iter().map(|&v| uf.find(v)).collect::<BTreeSet<_>>().len()
    }

    /// Append a disjoint copy of `other`; returns the index offsets per dimension.
    pub fn disjoint_union(&mut self, other: &CellComplex) -> [usize; 4] {
        let off = self.counts();
        for d in 0..4 {
            for c in &other.cells[d] {
                let b = c.boundary.iter().map(|&(f, s)| (f + if d > 0 { off[d - 1] } else { 0 }, s)).collect();
                self.cells[d].push(Cell { boundary: b, label: c.label });
            }
        }
        off
    }
}

/// Outcome of a greedy collapse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Collapsed {
    pub remaining: [usize; 4],
    pub connected: bool,
}

impl Collapsed {
    pub fn is_point(&self) -> bool {
        self.remaining == [1, 0, 0, 0]
    }

    /// A connected graph with one independent cycle.
    pub fn is_circle(&self) -> bool {
        self.remaining[2] == 0 && self.remaining[3] == 0 && self.connected && self.remaining[0] == self.remaining[1]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// A square subdivided into one 2-cell, as a disc.
    pub fn disc() -> CellComplex {
        let mut c = CellComplex::new();
        let p: Vec<usize> = (0..4).map(|_| c.add_cell(0, vec![], CellLabel::Point)).collect();
        let e: Vec<usize> = (0..4).map(|i| c.add_cell(1, vec![(p[(i + 1) % 4], 1), (p[i], -1)], CellLabel::Plain)).collect();
        c.add_cell(2, e.iter().map(|&x| (x, 1)).collect(), CellLabel::Plain);
        c
    }

    #[test]
    fn disc_is_contractible() {
        let c = disc();
        assert!(c.is_chain_complex());
        let h = c.homology(None);
        assert_eq!(h[0].rank, 1);
        assert!(h[1].is_trivial() && h[2].is_trivial());
        assert!(c.collapse().is_point());
    }

    #[test]
    fn projective_plane_torsion() {
        // one vertex, one loop, one disc attached by the loop twice
        let mut c = CellComplex::new();
        let p = c.add_cell(0, vec![], CellLabel::Point);
        let e = c.add_cell(1, vec![(p, 1), (p, -1)], CellLabel::Plain);
        c.add_cell(2, vec![(e, 1), (e, 1)], CellLabel::Plain);
        let h = c.homology(None);
        assert_eq!(h[1].to_string(), "Z/2");
        assert_eq!(h[2].rank, 0);
        assert!(!c.collapse().is_point());
    }

    #[test]
    fn relative_homology_of_disc_rel_boundary() {
        let c = disc();
        let rel = c.closure_of_faces(&[]);
        let mut rel = rel;
        for e in 0..4 {
            rel.member[1][e] = true;
        }
        for p in 0..4 {
            rel.member[0][p] = true;
        }
        let h = c.homology(Some(&rel));
        assert_eq!(h[2].rank, 1);
        assert!(h[1].is_trivial() && h[0].is_trivial());
    }
}
