//! Surface complexity, relative homology of patterned pieces and norm-style
//! upper bounds from supplied generating surfaces.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::cells::{CellComplex, CellLabel, CellSet};
use crate::gi_decomposition::{glued_within, GIDecomposition, GIError, PatternedManifold, RegionKind, Stage};
use crate::polyhedral::{Assembled, EdgeLabel, PieceLabel};
use crate::smith::{sparse_invariant_factors, AbelianGroup};
use crate::triangulation::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormError {
    #[error("no pattern annulus {0}")]
    UnknownAnnulus(usize),
    #[error("no boundary component {0}")]
    UnknownComponent(usize),
    #[error("bad selector {0:?}")]
    BadSelector(String),
    #[error("candidate {0} is not a relative cycle")]
    NotACycle(usize),
    #[error("not a generating set: candidates span a subgroup of {0}")]
    NotAGeneratingSet(AbelianGroup),
}

/// `max(0, -χ)` summed over components.
pub fn chi_minus(component_euler: &[i64]) -> u64 {
    component_euler.iter().map(|&x| (-x).max(0) as u64).sum()
}

/// Per-component and total `χ₋` of the surface formed by some 2-cells.
pub fn surface_chi_minus(cx: &CellComplex, faces: &[usize]) -> (Vec<u64>, u64) {
    let per: Vec<u64> = cx.surface_parts(faces).iter().map(|p| chi_minus(&[p.euler_char])).collect();
    let total = per.iter().sum();
    (per, total)
}

/// Which part of the boundary to take homology relative to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelSelector {
    Empty,
    Boundary,
    /// The boundary minus the interiors of the pattern annuli.
    BoundaryMinusPattern,
    /// The listed pattern annuli, by position in the pattern.
    Pattern(Vec<usize>),
    /// The listed boundary components, in `surface_parts` order.
    Components(Vec<usize>),
}

impl fmt::Display for RelSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            RelSelector::Empty => write!(f, "none"),
            RelSelector::Boundary => write!(f, "boundary"),
            RelSelector::BoundaryMinusPattern => write!(f, "boundary-minus-pattern"),
            RelSelector::Pattern(xs) => write!(f, "pattern:{}", list(xs)),
            RelSelector::Components(xs) => write!(f, "components:{}", list(xs)),
        }
    }
}

impl FromStr for RelSelector {
    type Err = NormError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NormError::BadSelector(s.to_string());
        let list = |rest: &str| -> Result<Vec<usize>, NormError> {
            if rest.is_empty() {
                return Ok(Vec::new());
            }
            rest.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
        };
        match s {
            "none" | "empty" => Ok(RelSelector::Empty),
            "boundary" => Ok(RelSelector::Boundary),
            "boundary-minus-pattern" => Ok(RelSelector::BoundaryMinusPattern),
            _ => match s.split_once(':') {
                Some(("pattern", rest)) => Ok(RelSelector::Pattern(list(rest)?)),
                Some(("components", rest)) => Ok(RelSelector::Components(list(rest)?)),
                _ => Err(bad()),
            },
        }
    }
}

/// A cell complex with its pattern annuli given as lists of 2-cells.
#[derive(Clone, Copy, Debug)]
pub struct PatternView<'a> {
    pub cells: &'a CellComplex,
    pub pattern: &'a [Vec<usize>],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub selector: RelSelector,
    /// `χ₋` of each component of the relative subsurface.
    pub chi_minus_per_component: Vec<u64>,
    pub chi_minus_total: u64,
    pub h2_rank: usize,
    pub h1: AbelianGroup,
    pub homology: [AbelianGroup; 4],
    /// Cells outside the relative subcomplex, per dimension.
    pub relative_cells: [usize; 4],
}

impl ComplexityReport {
    /// Alternating sum of relative cell counts.
    pub fn cell_euler(&self) -> i64 {
        self.relative_cells.iter().enumerate().map(|(d, &n)| if d % 2 == 0 { n as i64 } else { -(n as i64) }).sum()
    }

    /// Alternating sum of the relative Betti numbers.
    pub fn betti_euler(&self) -> i64 {
        self.homology.iter().enumerate().map(|(d, g)| if d % 2 == 0 { g.rank as i64 } else { -(g.rank as i64) }).sum()
    }
}

/// The 2-cells selected as the relative part.
pub fn selected_faces(v: PatternView<'_>, sel: &RelSelector) -> Result<Vec<usize>, NormError> {
    let boundary = v.cells.boundary_faces();
    let pattern: BTreeSet<usize> = v.pattern.iter().flatten().copied().collect();
    Ok(match sel {
        RelSelector::Empty => Vec::new(),
        RelSelector::Boundary => boundary,
        RelSelector::BoundaryMinusPattern => boundary.into_iter().filter(|f| !pattern.contains(f)).collect(),
        RelSelector::Pattern(ids) => {
            let mut out = Vec::new();
            for &i in ids {
                out.extend(v.pattern.get(i).ok_or(NormError::UnknownAnnulus(i))?);
            }
            out
        }
        RelSelector::Components(ids) => {
            let parts = v.cells.surface_parts(&boundary);
            let mut out = Vec::new();
            for &i in ids {
                out.extend(&parts.get(i).ok_or(NormError::UnknownComponent(i))?.faces);
            }
            out
        }
    })
}

pub fn relative_homology(v: PatternView<'_>, sel: &RelSelector) -> Result<ComplexityReport, NormError> {
    let faces = selected_faces(v, sel)?;
    let rel = v.cells.closure_of_faces(&faces);
    let homology = v.cells.homology(Some(&rel));
    let (chi_minus_per_component, chi_minus_total) = surface_chi_minus(v.cells, &faces);
    let relative_cells = [0, 1, 2, 3].map(|d| v.cells.count(d) - rel.count(d));
    Ok(ComplexityReport {
        selector: sel.clone(),
        chi_minus_per_component,
        chi_minus_total,
        h2_rank: homology[2].rank,
        h1: homology[1].clone(),
        homology,
        relative_cells,
    })
}

/// Largest norm in a generating set; zero for the empty set.
pub fn tn_of_set(values: &[u64]) -> u64 {
    values.iter().copied().max().unwrap_or(0)
}

/// A relative 2-cycle with the complexity of a surface representing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelativeCycle {
    pub chain: BTreeMap<usize, i64>,
    pub chi_minus: u64,
}

impl RelativeCycle {
    /// The surface made of the given signed 2-cells.
    pub fn from_faces(cx: &CellComplex, faces: &[(usize, i64)]) -> Self {
        let mut chain = BTreeMap::new();
        for &(f, s) in faces {
            *chain.entry(f).or_insert(0) += s;
        }
        chain.retain(|_, v| *v != 0);
        let cells: Vec<usize> = chain.keys().copied().collect();
        RelativeCycle { chi_minus: surface_chi_minus(cx, &cells).1, chain }
    }
}

/// Quotient of `Z^rows` by the span of sparse columns.
fn quotient(rows: usize, columns: &[Vec<(usize, i64)>]) -> AbelianGroup {
    let entries: Vec<(usize, usize, i64)> =
        columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v))).collect();
    let inv = sparse_invariant_factors(rows, columns.len(), &entries);
    AbelianGroup { rank: rows - inv.len(), torsion: inv.into_iter().filter(|d| !d.is_one()).collect() }
}

/// The part of relative `H_2` not reached by the candidates: trivial iff
/// they generate. Fails if a candidate is not a relative cycle.
pub fn span_defect(cx: &CellComplex, rel: &CellSet, cycles: &[&RelativeCycle]) -> Result<AbelianGroup, NormError> {
    let index = |d: usize| -> BTreeMap<usize, usize> {
        (0..cx.count(d)).filter(|&c| !rel.member[d][c]).enumerate().map(|(i, c)| (c, i)).collect()
    };
    let (i1, i2) = (index(1), index(2));
    for (k, z) in cycles.iter().enumerate() {
        let mut b: BTreeMap<usize, i64> = BTreeMap::new();
        for (&f, &s) in &z.chain {
            if !i2.contains_key(&f) {
                continue;
            }
            for (e, w) in cx.boundary_chain(2, f) {
                if i1.contains_key(&e) {
                    *b.entry(e).or_insert(0) += s * w;
                }
            }
        }
        if b.values().any(|&x| x != 0) {
            return Err(NormError::NotACycle(k));
        }
    }
    let project = |chain: BTreeMap<usize, i64>| -> Vec<(usize, i64)> {
        chain.into_iter().filter_map(|(f, s)| i2.get(&f).map(|&i| (i, s))).filter(|x| x.1 != 0).collect()
    };
    let boundary2: Vec<Vec<(usize, i64)>> = (0..cx.count(2))
        .filter(|&f| !rel.member[2][f])
        .map(|f| cx.boundary_chain(2, f).into_iter().filter_map(|(e, w)| i1.get(&e).map(|&i| (i, w))).collect())
        .collect();
    // rank of the relative boundary map on 2-chains
    let rank2 = i1.len() - quotient(i1.len(), &boundary2).rank;
    let mut columns: Vec<Vec<(usize, i64)>> = (0..cx.count(3)).map(|c| project(cx.boundary_chain(3, c))).collect();
    columns.extend(cycles.iter().map(|z| project(z.chain.clone())));
    let q = quotient(i2.len(), &columns);
    // the relative cycles are a saturated sublattice of corank rank2
    Ok(AbelianGroup { rank: q.rank - rank2, torsion: q.torsion })
}

/// Candidate surfaces for one piece, relative to its boundary minus the
/// pattern.
#[derive(Clone, Debug)]
pub struct PieceCandidates<'a> {
    pub piece: PatternView<'a>,
    pub surfaces: Vec<RelativeCycle>,
}

/// Smallest `t` such that the candidates of complexity at most `t` generate
/// relative `H_2` of each piece, maximised over pieces.
pub fn tn_upper_bound(pieces: &[PieceCandidates<'_>]) -> Result<u64, NormError> {
    let mut bound = 0;
    for pc in pieces {
        let faces = selected_faces(pc.piece, &RelSelector::BoundaryMinusPattern)?;
        let rel = pc.piece.cells.closure_of_faces(&faces);
        let mut thresholds: Vec<u64> = pc.surfaces.iter().map(|s| s.chi_minus).collect();
        thresholds.push(0);
        thresholds.sort_unstable();
        thresholds.dedup();
        let mut found = None;
        let mut last = AbelianGroup::trivial();
        for t in thresholds {
            let chosen: Vec<&RelativeCycle> = pc.surfaces.iter().filter(|s| s.chi_minus <= t).collect();
            last = span_defect(pc.piece.cells, &rel, &chosen)?;
            if last.is_trivial() {
                found = Some(tn_of_set(&chosen.iter().map(|s| s.chi_minus).collect::<Vec<_>>()));
                break;
            }
        }
        bound = bound.max(found.ok_or(NormError::NotAGeneratingSet(last))?);
    }
    Ok(bound)
}

/// `(χ(Q), χ(F'))` for carving the planar surface `Q` with `circles + 1`
/// boundary circles out of a base of Euler characteristic `base_euler`.
/// `None` for a closed base.
pub fn carve_descriptor(base_euler: i64, circles: usize) -> Option<(i64, i64)> {
    if circles == 0 {
        return None;
    }
    let q = 1 - circles as i64;
    Some((q, base_euler - q))
}

/// Label of a pattern annulus after refinement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    /// A frontier annulus of the decomposition that was left in place.
    Old(usize),
    /// The separating annulus carved out of the given bundle region.
    New(usize),
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternId::Old(a) => write!(f, "old:{a}"),
            PatternId::New(r) => write!(f, "new:{r}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RefinedPiece {
    /// Guts regions merged into this piece.
    pub regions: Vec<usize>,
    /// Bundle regions whose neighbourhood of `Q` was attached.
    pub bundles: Vec<usize>,
    pub cells: CellComplex,
    pub annuli: Vec<PatternId>,
    pub pattern: Vec<Vec<usize>>,
}

impl RefinedPiece {
    pub fn view(&self) -> PatternView<'_> {
        PatternView { cells: &self.cells, pattern: &self.pattern }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarvedBundle {
    pub region: usize,
    pub base_euler: i64,
    pub base_boundary_circles: usize,
    pub q_euler: i64,
    pub new_base_euler: i64,
    pub twisted: bool,
}

#[derive(Clone, Debug)]
pub struct Refinement {
    pub pieces: Vec<RefinedPiece>,
    pub bundles: Vec<CarvedBundle>,
    /// Bundle regions left alone, with the reason.
    pub skipped: Vec<(usize, String)>,
    pub annuli: Vec<PatternId>,
}

impl Refinement {
    /// Sum of boundary Euler characteristics over the new guts and the
    /// shrunken bundles.
    pub fn boundary_euler_total(&self, d: &GIDecomposition) -> i64 {
        let guts: i64 = self.pieces.iter().map(|p| boundary_euler(&p.cells)).sum();
        let bundles: i64 = (0..d.regions().len())
            .filter(|r| d.regions()[*r].kind == RegionKind::IBundle)
            .map(|r| {
                let full = d.region_manifold(r).boundary_euler();
                self.bundles.iter().find(|b| b.region == r).map_or(full, |b| full - 2 * b.q_euler)
            })
            .sum();
        guts + bundles
    }
}

fn boundary_euler(cx: &CellComplex) -> i64 {
    cx.surface_parts(&cx.boundary_faces()).iter().map(|p| p.euler_char).sum()
}

impl From<&PatternedManifold> for RefinedPiece {
    fn from(m: &PatternedManifold) -> Self {
        RefinedPiece {
            regions: Vec::new(),
            bundles: Vec::new(),
            cells: m.cells.clone(),
            annuli: m.pattern_annuli.iter().map(|a| PatternId::Old(a.annulus)).collect(),
            pattern: m.pattern_annuli.iter().map(|a| a.faces.clone()).collect(),
        }
    }
}

/// Sheet and base orientation of one product block relative to a root.
#[derive(Clone, Copy, Debug)]
struct Frame {
    sheet: u8,
    orient: i64,
}

/// One frontier annulus seen from the guts side, in guts cell indices.
struct Seam {
    guts: usize,
    /// Arcs of the circle on the bottom sheet of `Q`, oriented as `∂Q`.
    bottom: Vec<(usize, i64)>,
    top: Vec<(usize, i64)>,
    /// The annulus swept by the bottom circle, oriented as `circle × I`.
    sweep: Vec<(usize, i64)>,
    base: [usize; 2],
    /// The fibre over the base point, oriented bottom to top.
    fibre: (usize, i64),
}

struct Carving<'a> {
    d: &'a GIDecomposition,
    region: usize,
    frames: BTreeMap<u32, Frame>,
}

impl<'a> Carving<'a> {
    fn new(d: &'a GIDecomposition, region: usize) -> Result<Self, String> {
        let poly = d.poly();
        let pieces = &d.regions()[region].pieces;
        for &p in pieces {
            if poly.pieces[p as usize].label != PieceLabel::ProductBlock {
                return Err("bundle is not made of product blocks".into());
            }
            if d.disc_faces(p).len() != 2 {
                return Err(format!("block {p} does not have two disc sides"));
            }
            for &(f, _) in &poly.pieces[p as usize].faces {
                if !d.disc_faces(p).contains(&f) && poly.faces[f as usize].boundary.len() != 4 {
                    return Err(format!("side face {f} is not a quadrilateral"));
                }
            }
        }
        let glued = glued_within(poly, pieces, &d.alive_faces());
        let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &f in glued.keys() {
            adj.entry(poly.faces[f as usize].piece).or_default().push(f);
        }
        let mut c = Carving { d, region, frames: BTreeMap::new() };
        let root = pieces[0];
        c.frames.insert(root, Frame { sheet: 0, orient: 1 });
        let mut queue = VecDeque::from([root]);
        while let Some(p) = queue.pop_front() {
            for &f in adj.get(&p).map(Vec::as_slice).unwrap_or(&[]) {
                let g = glued[&f];
                let q = poly.faces[g as usize].piece;
                if c.frames.contains_key(&q) {
                    continue;
                }
                let frame = c.transport(c.frames[&p], f)?;
                c.frames.insert(q, frame);
                queue.push_back(q);
            }
        }
        if c.frames.len() != pieces.len() {
            return Err("bundle is disconnected".into());
        }
        Ok(c)
    }

    /// Sign of `e` in the boundary of the bottom disc of block `p`.
    fn floor_sign(&self, p: u32, e: u32) -> i64 {
        let floor = self.d.disc_faces(p)[0];
        self.d.poly().faces[floor as usize].boundary.iter().find(|x| x.0 == e).map_or(0, |x| x.1 as i64)
    }

    /// For a side face: its bottom arc, top arc and whether the top arc runs
    /// parallel to the bottom one.
    fn side(&self, f: u32) -> Result<(u32, u32, i64), String> {
        let poly = self.d.poly();
        let p = poly.faces[f as usize].piece;
        let bottom = self.d.bottom_arc(f).ok_or_else(|| format!("side face {f} misses the bottom disc"))?;
        let [u, _] = poly.edges[bottom as usize].ends;
        let bottom_pts = poly.edges[bottom as usize].ends;
        let others: Vec<u32> = poly.faces[f as usize].boundary.iter().map(|x| x.0).filter(|&e| e != bottom).collect();
        let top = *others
            .iter()
            .find(|&&e| poly.edges[e as usize].ends.iter().all(|x| !bottom_pts.contains(x)))
            .ok_or_else(|| format!("side face {f} has no top arc"))?;
        if self.d.on_bottom(p, top) {
            return Err(format!("side face {f} lies on one disc"));
        }
        let [a, _] = poly.edges[top as usize].ends;
        let below = others
            .iter()
            .filter(|&&e| e != top)
            .find_map(|&e| {
                let [x, y] = poly.edges[e as usize].ends;
                (x == a).then_some(y).or((y == a).then_some(x))
            })
            .ok_or_else(|| format!("side face {f} has no fibre at {a}"))?;
        Ok((bottom, top, if below == u { 1 } else { -1 }))
    }

    fn transport(&self, from: Frame, f: u32) -> Result<Frame, String> {
        let poly = self.d.poly();
        let p = poly.faces[f as usize].piece;
        let glue = poly.faces[f as usize].glue.as_ref().expect("glued");
        let g = glue.partner;
        let q = poly.faces[g as usize].piece;
        let (bottom, _, _) = self.side(f)?;
        let (image, s) = glue.map_edge(bottom);
        let (gb, gt, t) = self.side(g)?;
        let (sheet, t) = if image == gb {
            (from.sheet, 1)
        } else if image == gt {
            (1 - from.sheet, t)
        } else {
            return Err(format!("gluing of face {f} does not respect the disc sides"));
        };
        let orient = -from.orient * self.floor_sign(p, bottom) * s as i64 * t * self.floor_sign(q, gb);
        Ok(Frame { sheet, orient })
    }

    /// The annulus `a` as seen from the guts region `guts`, whose assembly is `asm`.
    fn seam(&self, a: usize, guts: usize, asm: &Assembled) -> Result<Seam, String> {
        let d = self.d;
        let poly = d.poly();
        let rp = d.region_of_piece();
        let sides = &d.annuli()[a].sides;
        let ib_side = sides.iter().find(|s| rp[poly.faces[s[0] as usize].piece as usize] == self.region).expect("incident");
        let f = ib_side[0];
        let p = poly.faces[f as usize].piece;
        let frame = self.frames[&p];
        let (bottom, top, t) = self.side(f)?;
        let base_dir = frame.orient * self.floor_sign(p, bottom);
        let (arc, dir) = if frame.sheet == 0 { (bottom, base_dir) } else { (top, base_dir * t) };
        let glue = poly.faces[f as usize].glue.as_ref().expect("annulus faces are glued");
        let (g_arc, s) = glue.map_edge(arc);
        let (cell, cs) = asm.edge_cell[&g_arc];
        let start = (cell, dir * s as i64 * cs as i64);

        let cx = &asm.complex;
        let guts_side = &sides[if std::ptr::eq(ib_side, &sides[0]) { 1 } else { 0 }];
        let quads: Vec<usize> = guts_side.iter().map(|g| asm.face_cell[g].0).collect();
        let arc_cells: BTreeSet<usize> = guts_side
            .iter()
            .flat_map(|&g| poly.faces[g as usize].boundary.iter().map(|x| x.0))
            .filter(|&e| poly.edges[e as usize].label == EdgeLabel::Arc)
            .map(|e| asm.edge_cell[&e].0)
            .collect();
        let ends = |e: usize| -> (usize, usize) {
            let b = &cx.cell(1, e).boundary;
            let head = b.iter().find(|x| x.1 > 0).map_or(b[0].0, |x| x.0);
            let tail = b.iter().find(|x| x.1 < 0).map_or(b[0].0, |x| x.0);
            (tail, head)
        };
        let oriented = |(e, s): (usize, i64)| if s > 0 { ends(e) } else { (ends(e).1, ends(e).0) };

        // walk the bottom circle
        let mut bottom_circle = vec![start];
        let mut used = BTreeSet::from([start.0]);
        let (first_tail, mut head) = oriented(start);
        while head != first_tail {
            let next = arc_cells
                .iter()
                .copied()
                .filter(|e| !used.contains(e))
                .find_map(|e| {
                    let (t, h) = ends(e);
                    if t == head {
                        Some((e, 1))
                    } else if h == head {
                        Some((e, -1))
                    } else {
                        None
                    }
                })
                .ok_or("bottom circle does not close")?;
            used.insert(next.0);
            head = oriented(next).1;
            bottom_circle.push(next);
        }

        let mut sweep = Vec::new();
        let mut top_circle = Vec::new();
        for &(e, s) in &bottom_circle {
            let q = *quads
                .iter()
                .find(|&&q| cx.boundary_chain(2, q).contains_key(&e))
                .ok_or("bottom arc outside the annulus")?;
            let bq = cx.boundary_chain(2, q);
            let sign = s * bq[&e];
            sweep.push((q, sign));
            let (e1, w) = bq
                .iter()
                .find(|(&x, _)| x != e && arc_cells.contains(&x) && !used.contains(&x))
                .ok_or("annulus face has no top arc")?;
            top_circle.push((*e1, -sign * w));
        }
        if sweep.iter().map(|x| x.0).collect::<BTreeSet<_>>().len() != quads.len() {
            return Err("annulus is not swept by its bottom circle".into());
        }
        let x0 = oriented(bottom_circle[0]).0;
        let q0 = sweep[0].0;
        let (fibre, x1) = cx
            .cell(2, q0)
            .boundary
            .iter()
            .map(|x| x.0)
            .filter(|e| !arc_cells.contains(e))
            .find_map(|e| {
                let b = cx.boundary_chain(1, e);
                let other = b.keys().copied().find(|&x| x != x0)?;
                b.contains_key(&x0).then(|| ((e, b[&other]), other))
            })
            .ok_or("no fibre at the base point")?;
        Ok(Seam { guts, bottom: bottom_circle, top: top_circle, sweep, base: [x0, x1], fibre })
    }
}

/// Attach `N(Q)` for one bundle to a complex holding the guts pieces.
/// `seams` are in the complex's own indices. Returns the new annulus cell.
fn attach_collar(cx: &mut CellComplex, seams: &[Seam]) -> usize {
    let pt = |cx: &mut CellComplex| cx.add_cell(0, vec![], CellLabel::Point);
    let d0 = pt(cx);
    let d1 = pt(cx);
    let fibre = cx.add_cell(1, vec![(d1, 1), (d0, -1)], CellLabel::Segment);
    let loop0 = cx.add_cell(1, vec![(d0, 1), (d0, -1)], CellLabel::Arc);
    let loop1 = cx.add_cell(1, vec![(d1, 1), (d1, -1)], CellLabel::Arc);
    let annulus = cx.add_cell(2, vec![(loop0, 1), (fibre, 1), (loop1, -1), (fibre, -1)], CellLabel::Vertical);
    let mut r0 = vec![(loop0, 1)];
    let mut r1 = vec![(loop1, 1)];
    let mut solid = vec![(annulus, 1)];
    for s in seams {
        let b0 = cx.add_cell(1, vec![(s.base[0], 1), (d0, -1)], CellLabel::Arc);
        let b1 = cx.add_cell(1, vec![(s.base[1], 1), (d1, -1)], CellLabel::Arc);
        let band = cx.add_cell(2, vec![(b0, 1), (s.fibre.0, s.fibre.1 as i8), (b1, -1), (fibre, -1)], CellLabel::Vertical);
        r0.extend([(b0, 1), (b0, -1)]);
        r1.extend([(b1, 1), (b1, -1)]);
        r0.extend(s.bottom.iter().map(|&(e, w)| (e, w as i8)));
        r1.extend(s.top.iter().map(|&(e, w)| (e, w as i8)));
        solid.extend([(band, 1), (band, -1)]);
        solid.extend(s.sweep.iter().map(|&(q, w)| (q, w as i8)));
    }
    let bottom = cx.add_cell(2, r0, CellLabel::DiscS);
    let top = cx.add_cell(2, r1, CellLabel::DiscS);
    solid.extend([(top, 1), (bottom, -1)]);
    cx.add_cell(3, solid, CellLabel::Piece);
    annulus
}

/// Carve out of each bundle with boundary a planar subsurface `Q` of its
/// base meeting every boundary circle, add `N(Q)` to the neighbouring
/// guts, and replace the old frontier annuli of that bundle by the single
/// annulus over the new boundary curve of `Q`.
pub fn refine_separating(d: &GIDecomposition) -> Result<Refinement, GIError> {
    if d.stage() != Stage::BallPlugged {
        return Err(GIError::Stage(Stage::BallPlugged));
    }
    let regions = d.regions();
    let guts: Vec<usize> = (0..regions.len()).filter(|&r| regions[r].kind == RegionKind::Guts).collect();
    let gi: BTreeMap<usize, usize> = guts.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let alive = d.alive_annuli();

    let mut skipped = Vec::new();
    let mut carvings: Vec<(Carving<'_>, Vec<(usize, usize)>)> = Vec::new();
    for r in (0..regions.len()).filter(|&r| regions[r].kind == RegionKind::IBundle) {
        let mine: Vec<(usize, usize)> = alive
            .iter()
            .filter_map(|&a| {
                let rs = d.annulus_regions(a);
                if rs[0] == r {
                    Some((a, rs[1]))
                } else if rs[1] == r {
                    Some((a, rs[0]))
                } else {
                    None
                }
            })
            .collect();
        if mine.is_empty() {
            skipped.push((r, "closed base".to_string()));
            continue;
        }
        if let Some(&(a, _)) = mine.iter().find(|(_, o)| !gi.contains_key(o)) {
            skipped.push((r, format!("annulus {a} does not lead to guts")));
            continue;
        }
        match Carving::new(d, r) {
            Ok(c) => carvings.push((c, mine)),
            Err(e) => skipped.push((r, e)),
        }
    }

    let mut uf = UnionFind::new(guts.len());
    for (_, mine) in &carvings {
        for w in mine.windows(2) {
            uf.union(gi[&w[0].1], gi[&w[1].1]);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..guts.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }

    let patches: Vec<Assembled> = guts.iter().map(|&r| d.region_patch(r).assemble()).collect();
    let carved_annuli: BTreeSet<usize> = carvings.iter().flat_map(|(_, m)| m.iter().map(|x| x.0)).collect();
    let mut pieces = Vec::new();
    let mut bundles = Vec::new();
    for members in groups.into_values() {
        let mut cx = CellComplex::new();
        let mut offsets: BTreeMap<usize, [usize; 4]> = BTreeMap::new();
        let mut annuli = Vec::new();
        let mut pattern = Vec::new();
        for &i in &members {
            let off = cx.disjoint_union(&patches[i].complex);
            offsets.insert(i, off);
            let patch = d.region_patch(guts[i]);
            for (a, faces) in &patch.pattern {
                if carved_annuli.contains(a) {
                    continue;
                }
                annuli.push(PatternId::Old(*a));
                pattern.push(faces.iter().map(|f| patches[i].face_cell[f].0 + off[2]).collect());
            }
        }
        let mut used_bundles = Vec::new();
        for (carving, mine) in &carvings {
            if !members.contains(&gi[&mine[0].1]) {
                continue;
            }
            let mut seams = Vec::new();
            for &(a, g) in mine {
                let i = gi[&g];
                let s = carving.seam(a, i, &patches[i]).map_err(GIError::Attach)?;
                let off = offsets[&i];
                let shift = |v: &[(usize, i64)], o: usize| v.iter().map(|&(c, w)| (c + o, w)).collect::<Vec<_>>();
                seams.push(Seam {
                    guts: s.guts,
                    bottom: shift(&s.bottom, off[1]),
                    top: shift(&s.top, off[1]),
                    sweep: shift(&s.sweep, off[2]),
                    base: [s.base[0] + off[0], s.base[1] + off[0]],
                    fibre: (s.fibre.0 + off[1], s.fibre.1),
                });
            }
            let euler_before = cx.euler_characteristic();
            let new_annulus = attach_collar(&mut cx, &seams);
            let r = carving.region;
            let desc = d.ibundle_descriptor(r);
            let (q_euler, new_base_euler) = carve_descriptor(desc.base_euler, mine.len()).expect("bundle has boundary");
            if cx.euler_characteristic() - euler_before != q_euler {
                return Err(GIError::Attach(format!("neighbourhood of the carved surface in region {r} has the wrong Euler characteristic")));
            }
            bundles.push(CarvedBundle {
                region: r,
                base_euler: desc.base_euler,
                base_boundary_circles: mine.len(),
                q_euler,
                new_base_euler,
                twisted: desc.twisted,
            });
            annuli.push(PatternId::New(r));
            pattern.push(vec![new_annulus]);
            used_bundles.push(r);
        }
        if !cx.is_chain_complex() {
            return Err(GIError::Attach("boundary of a boundary is not zero".into()));
        }
        let piece = RefinedPiece { regions: members.iter().map(|&i| guts[i]).collect(), bundles: used_bundles, cells: cx, annuli, pattern };
        let h = relative_homology(piece.view(), &RelSelector::Boundary).expect("boundary selector");
        if h.homology[3].rank != 1 || !h.homology[3].torsion.is_empty() {
            return Err(GIError::Attach(format!("refined piece over regions {:?} is not an orientable manifold", piece.regions)));
        }
        pieces.push(piece);
    }
    bundles.sort_by_key(|b| b.region);
    let mut annuli: Vec<PatternId> = pieces.iter().flat_map(|p| p.annuli.iter().copied()).collect();
    annuli.sort();
    annuli.dedup();
    Ok(Refinement { pieces, bundles, skipped, annuli })
}
