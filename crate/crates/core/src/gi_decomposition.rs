//! Guts / I-bundle decompositions of a manifold cut along a surface.
//!
//! The first approximation glues the non-product pieces into guts regions
//! and the product blocks into I-bundle regions; the frontier annuli between
//! them are cycles of frontier quadrilaterals. Absorption then repeatedly
//! swallows a tiny patterned piece (a ball, solid torus or annulus times an
//! interval, possibly punctured by the vertex ball) into its neighbours,
//! deleting every annulus it contains, until none is left. Finally the
//! vertex ball is plugged back in when its sphere is a whole boundary
//! component of one region.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::cells::{CellComplex, CellLabel};
use crate::cut_complex::{cut_along, CutComplex, CutError};
use crate::normal_surface::{enumerate_admissible, NormalSurfaceVector, SurfaceError};
use crate::polyhedral::{Assembled, EdgeLabel, FaceLabel, PieceComplex, PieceLabel};
use crate::scalar::Ring;
use crate::signature::{signature, FaceMark, Signature};
use crate::smith::AbelianGroup;
use crate::triangulation::{ParityUnionFind, Triangulation, UnionFind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionKind {
    Guts,
    IBundle,
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionKind::Guts => "guts",
            RegionKind::IBundle => "ibundle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    FirstApprox,
    Absorbed,
    BallPlugged,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::FirstApprox => "first-approx",
            Stage::Absorbed => "absorbed",
            Stage::BallPlugged => "ball-plugged",
        })
    }
}

/// Tiny patterned manifolds: a ball with one annulus, a solid torus with a
/// longitudinal annulus, an annulus times an interval with its two vertical
/// annuli. `Unknown` passes the homology screens but not the collapse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TinyType {
    Ball,
    SolidTorus,
    AnnulusProduct,
    Unknown,
}

impl fmt::Display for TinyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TinyType::Ball => "i",
            TinyType::SolidTorus => "ii",
            TinyType::AnnulusProduct => "iii",
            TinyType::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlugStatus {
    Pending,
    /// No vertex-link faces at all.
    Absent,
    Plugged { region: usize },
    /// The vertex-link faces do not form a boundary sphere of one region.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub pieces: Vec<u32>,
    pub kind: RegionKind,
    /// Produced by absorbing a tiny piece.
    pub pseudo: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annulus {
    pub sides: [Vec<u32>; 2],
    pub alive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsorbStep {
    pub tiny: TinyType,
    pub absorbed_pieces: usize,
    pub bounding: Vec<usize>,
    pub removed: Vec<usize>,
    pub kind: RegionKind,
    pub annuli_before: usize,
    pub annuli_after: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TinyCandidate {
    /// Regions making up the candidate piece.
    pub regions: Vec<usize>,
    /// Annuli separating it from the rest.
    pub bounding: Vec<usize>,
    /// Annuli with both sides inside it.
    pub interior: Vec<usize>,
    pub tiny: TinyType,
    pub signature: Signature,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryComponent {
    pub euler_char: i64,
    pub contains_sv: bool,
    pub sv_only: bool,
    pub annuli: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternAnnulus {
    pub annulus: usize,
    /// 2-cells of the annulus in the manifold's complex.
    pub faces: Vec<usize>,
    pub euler_char: i64,
    pub circles: usize,
}

#[derive(Clone, Debug)]
pub struct PatternedManifold {
    pub kind: RegionKind,
    pub pseudo: bool,
    pub pieces: Vec<u32>,
    pub cells: CellComplex,
    pub pattern_annuli: Vec<PatternAnnulus>,
    pub boundary_inventory: Vec<BoundaryComponent>,
    pub homology: [AbelianGroup; 4],
    pub plugged: bool,
    pub signature: Signature,
}

impl PatternedManifold {
    pub fn euler_characteristic(&self) -> i64 {
        self.cells.euler_characteristic()
    }

    /// 2-cells on the boundary, in increasing order.
    pub fn boundary_faces(&self) -> Vec<usize> {
        self.cells.boundary_faces()
    }

    pub fn pattern_faces(&self) -> BTreeSet<usize> {
        self.pattern_annuli.iter().flat_map(|a| a.faces.iter().copied()).collect()
    }

    pub fn boundary_euler(&self) -> i64 {
        self.boundary_inventory.iter().map(|b| b.euler_char).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IBundleDescriptor {
    pub region: usize,
    pub base_euler: i64,
    pub base_orientable: bool,
    pub twisted: bool,
    pub base_boundary_circles: usize,
    pub vertical_boundary_annuli: usize,
    /// Made of product blocks only.
    pub pure: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnulusIncidence {
    pub annulus: usize,
    pub regions: [usize; 2],
    pub faces: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GIError {
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("inconsistent pairing: {0}")]
    InconsistentPairing(String),
    #[error("frontier faces do not form an annulus: {0}")]
    BadAnnulus(String),
    #[error("frontier annulus {0} is not embedded on both sides")]
    PinchedFrontier(usize),
    #[error("annulus {0} disappeared without an absorbing step")]
    LostAnnulus(usize),
    #[error("operation needs stage {0}")]
    Stage(Stage),
    #[error("cannot attach product: {0}")]
    Attach(String),
}

/// A set of pieces with chosen internal gluings, pattern and cap.
pub(crate) struct Patch<'a> {
    pub poly: &'a PieceComplex,
    pub pieces: Vec<u32>,
    /// Face to partner, both directions.
    pub glued: BTreeMap<u32, u32>,
    pub pattern: Vec<(usize, Vec<u32>)>,
    pub cap: Option<Vec<u32>>,
}

/// Gluings of `poly` with both faces among `pieces`, except faces in `cut`.
pub(crate) fn glued_within(poly: &PieceComplex, pieces: &[u32], cut: &BTreeSet<u32>) -> BTreeMap<u32, u32> {
    let set: BTreeSet<u32> = pieces.iter().copied().collect();
    let mut out = BTreeMap::new();
    for &p in pieces {
        for &(f, _) in &poly.pieces[p as usize].faces {
            let Some(g) = &poly.faces[f as usize].glue else { continue };
            if cut.contains(&f) || cut.contains(&g.partner) {
                continue;
            }
            if set.contains(&poly.faces[g.partner as usize].piece) {
                out.insert(f, g.partner);
            }
        }
    }
    out
}

impl Patch<'_> {
    pub fn assemble(&self) -> Assembled {
        let pairs: Vec<(u32, u32)> = self.glued.iter().filter(|(a, b)| a < b).map(|(&a, &b)| (a, b)).collect();
        let caps: Vec<Vec<u32>> = self.cap.iter().cloned().collect();
        self.poly.assemble(&self.pieces, &pairs, &caps)
    }

    pub fn mark(&self, f: u32) -> FaceMark {
        if self.glued.contains_key(&f) {
            return FaceMark::Interior;
        }
        if self.cap.as_ref().is_some_and(|c| c.contains(&f)) {
            return FaceMark::Plugged;
        }
        if let Some((id, _)) = self.pattern.iter().find(|(_, fs)| fs.contains(&f)) {
            return FaceMark::Pattern(*id);
        }
        if self.poly.faces[f as usize].label == FaceLabel::DiscSv {
            FaceMark::VertexLink
        } else {
            FaceMark::Surface
        }
    }

    pub fn signature(&self) -> Signature {
        signature(self.poly, &self.pieces, &self.glued, &|f| self.mark(f))
    }

    pub fn manifold(&self, kind: RegionKind, pseudo: bool) -> PatternedManifold {
        let a = self.assemble();
        let cx = a.complex;
        let mut pattern_annuli = Vec::new();
        let mut cell_annulus: BTreeMap<usize, usize> = BTreeMap::new();
        for (id, faces) in &self.pattern {
            let mut cells: Vec<usize> = faces.iter().map(|f| a.face_cell[f].0).collect();
            cells.sort_unstable();
            cells.dedup();
            for &c in &cells {
                cell_annulus.insert(c, *id);
            }
            let chi = cx.surface_parts(&cells).iter().map(|p| p.euler_char).sum();
            let circles = cx.boundary_circles(&cells);
            pattern_annuli.push(PatternAnnulus { annulus: *id, faces: cells, euler_char: chi, circles });
        }
        let bf = cx.boundary_faces();
        let boundary_inventory = cx
            .surface_parts(&bf)
            .into_iter()
            .map(|part| {
                let sv: Vec<bool> = part.faces.iter().map(|&c| cx.cell(2, c).label == CellLabel::DiscSv).collect();
                let annuli: BTreeSet<usize> = part.faces.iter().filter_map(|c| cell_annulus.get(c).copied()).collect();
                BoundaryComponent {
                    euler_char: part.euler_char,
                    contains_sv: sv.iter().any(|&b| b),
                    sv_only: sv.iter().all(|&b| b),
                    annuli: annuli.into_iter().collect(),
                }
            })
            .collect();
        let homology = cx.homology(None);
        PatternedManifold {
            kind,
            pseudo,
            pieces: self.pieces.clone(),
            pattern_annuli,
            boundary_inventory,
            homology,
            plugged: self.cap.is_some(),
            signature: self.signature(),
            cells: cx,
        }
    }
}

fn is_z(g: &AbelianGroup) -> bool {
    g.rank == 1 && g.torsion.is_empty()
}

#[derive(Clone, Debug)]
pub struct GIDecomposition {
    poly: PieceComplex,
    regions: Vec<Region>,
    annuli: Vec<Annulus>,
    stage: Stage,
    plug: PlugStatus,
    steps: Vec<AbsorbStep>,
}

impl GIDecomposition {
    /// A decomposition from explicit regions and annuli. Each annulus side
    /// must be glued face by face to the other side.
    pub fn from_parts(poly: PieceComplex, regions: Vec<Region>, annuli: Vec<[Vec<u32>; 2]>) -> Result<Self, GIError> {
        let d = GIDecomposition {
            poly,
            regions,
            annuli: annuli.into_iter().map(|sides| Annulus { sides, alive: true }).collect(),
            stage: Stage::FirstApprox,
            plug: PlugStatus::Pending,
            steps: Vec::new(),
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<(), GIError> {
        let rp = self.region_of_piece();
        for (i, a) in self.annuli.iter().enumerate() {
            let other: BTreeSet<u32> = a.sides[1].iter().copied().collect();
            if a.sides[0].len() != a.sides[1].len() || a.sides[0].is_empty() {
                return Err(GIError::BadAnnulus(format!("annulus {i} sides differ")));
            }
            for &f in &a.sides[0] {
                let partner = self.poly.faces[f as usize].glue.as_ref().map(|g| g.partner);
                if !partner.is_some_and(|g| other.contains(&g)) {
                    return Err(GIError::InconsistentPairing(format!("annulus {i} face {f}")));
                }
            }
            for side in &a.sides {
                let rs: BTreeSet<usize> = side.iter().map(|&f| rp[self.poly.faces[f as usize].piece as usize]).collect();
                if rs.contains(&usize::MAX) {
                    return Err(GIError::BadAnnulus(format!("annulus {i} side lies outside every region")));
                }
                if rs.len() != 1 {
                    return Err(GIError::PinchedFrontier(i));
                }
            }
        }
        // every annulus side must be an annulus inside its own region
        for r in 0..self.regions.len() {
            let patch = self.region_patch(r);
            if patch.pattern.is_empty() {
                continue;
            }
            let a = patch.assemble();
            for (id, faces) in &patch.pattern {
                let cells: Vec<usize> = faces.iter().map(|f| a.face_cell[f].0).collect();
                let parts = a.complex.surface_parts(&cells);
                let circles = a.complex.boundary_circles(&cells);
                if parts.len() != 1 || parts[0].euler_char != 0 || circles != 2 {
                    return Err(GIError::PinchedFrontier(*id));
                }
            }
        }
        Ok(())
    }

    /// The first approximation from a cut complex.
    pub fn assemble_first(cc: &CutComplex) -> Result<Self, GIError> {
        cc.check()?;
        let poly = cc.polyhedra().clone();
        let n = poly.pieces.len();
        for (f, face) in poly.faces.iter().enumerate() {
            let Some(g) = &face.glue else { continue };
            let other = poly.faces[g.partner as usize].label;
            let sides = |l: FaceLabel| matches!(l, FaceLabel::QuadFace | FaceLabel::Vertical);
            if !(sides(face.label) && sides(other) || face.label == FaceLabel::Hexagon && other == FaceLabel::Hexagon) {
                return Err(GIError::InconsistentPairing(cc.face_id(f as u32).to_string()));
            }
        }
        let mut bundle: Vec<bool> = poly.pieces.iter().map(|p| p.label == PieceLabel::ProductBlock).collect();
        let ambient = poly.assemble(&(0..n as u32).collect::<Vec<_>>(), &poly.glued_pairs(), &[]);
        let frontier = loop {
            let frontier: Vec<u32> = (0..poly.faces.len() as u32)
                .filter(|&f| {
                    let face = &poly.faces[f as usize];
                    face.glue.as_ref().is_some_and(|g| !bundle[face.piece as usize] && bundle[poly.faces[g.partner as usize].piece as usize])
                })
                .collect();
            // segments where more than two frontier sheets meet
            let mut valence: BTreeMap<usize, usize> = BTreeMap::new();
            for &f in &frontier {
                for &(e, _) in &poly.faces[f as usize].boundary {
                    if poly.edges[e as usize].label == EdgeLabel::Segment {
                        *valence.entry(ambient.edge_cell[&e].0).or_insert(0) += 1;
                    }
                }
            }
            let mut demote = Vec::new();
            for &f in &frontier {
                let partner = poly.faces[f as usize].glue.as_ref().expect("glued").partner;
                let pinched = poly.faces[partner as usize].boundary.iter().any(|&(e, _)| {
                    poly.edges[e as usize].label == EdgeLabel::Segment && valence[&ambient.edge_cell[&e].0] > 2
                });
                if pinched {
                    demote.push(poly.faces[partner as usize].piece);
                }
            }
            if demote.is_empty() {
                break frontier;
            }
            for p in demote {
                bundle[p as usize] = false;
            }
        };
        let is_product = |p: u32| bundle[p as usize];
        let mut uf = UnionFind::new(n);
        for face in &poly.faces {
            let Some(g) = &face.glue else { continue };
            let other = poly.faces[g.partner as usize].piece;
            if is_product(face.piece) == is_product(other) {
                uf.union(face.piece as usize, other as usize);
            }
        }
        let mut comps: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for p in 0..n {
            comps.entry(uf.find(p)).or_default().push(p as u32);
        }
        let mut regions: Vec<Region> = comps
            .into_values()
            .map(|pieces| {
                let kind = if is_product(pieces[0]) { RegionKind::IBundle } else { RegionKind::Guts };
                Region { pieces, kind, pseudo: false }
            })
            .collect();
        regions.sort_by_key(|r| (r.kind, r.pieces[0]));

        // Group frontier faces into annuli through segments shared on the
        // I-bundle side. Around an edge the frontier may meet itself along a
        // segment; the product side is a manifold, so its grouping is used.
        let products: Vec<u32> = (0..n as u32).filter(|&p| is_product(p)).collect();
        let vertical_pairs: Vec<(u32, u32)> = poly
            .glued_pairs()
            .into_iter()
            .filter(|&(a, b)| is_product(poly.faces[a as usize].piece) && is_product(poly.faces[b as usize].piece))
            .collect();
        let bundle = poly.assemble(&products, &vertical_pairs, &[]);
        let verticals: Vec<u32> = frontier.iter().map(|&f| poly.faces[f as usize].glue.as_ref().expect("glued").partner).collect();
        let mut fu = UnionFind::new(frontier.len());
        let mut by_segment: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &f) in verticals.iter().enumerate() {
            for &(e, _) in &poly.faces[f as usize].boundary {
                if poly.edges[e as usize].label != EdgeLabel::Segment {
                    continue;
                }
                let c = bundle.edge_cell[&e].0;
                if let Some(&j) = by_segment.get(&c) {
                    fu.union(i, j);
                } else {
                    by_segment.insert(c, i);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..frontier.len() {
            groups.entry(fu.find(i)).or_default().push(i);
        }
        let mut annuli = Vec::new();
        for members in groups.into_values() {
            let cells: Vec<usize> = members.iter().map(|&i| bundle.face_cell[&verticals[i]].0).collect();
            let parts = bundle.complex.surface_parts(&cells);
            let circles = bundle.complex.boundary_circles(&cells);
            if parts.len() != 1 || parts[0].euler_char != 0 || circles != 2 {
                return Err(GIError::BadAnnulus(format!(
                    "{} faces, euler {}, {} circles",
                    members.len(),
                    parts.iter().map(|p| p.euler_char).sum::<i64>(),
                    circles
                )));
            }
            annuli.push([members.iter().map(|&i| frontier[i]).collect(), members.iter().map(|&i| verticals[i]).collect()]);
        }
        Self::from_parts(poly, regions, annuli)
    }

    pub fn poly(&self) -> &PieceComplex {
        &self.poly
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn annuli(&self) -> &[Annulus] {
        &self.annuli
    }

    pub fn steps(&self) -> &[AbsorbStep] {
        &self.steps
    }

    pub fn plug_status(&self) -> PlugStatus {
        self.plug
    }

    pub fn alive_annuli(&self) -> Vec<usize> {
        (0..self.annuli.len()).filter(|&i| self.annuli[i].alive).collect()
    }

    pub fn annulus_count(&self) -> usize {
        self.annuli.iter().filter(|a| a.alive).count()
    }

    pub(crate) fn region_of_piece(&self) -> Vec<usize> {
        let mut rp = vec![usize::MAX; self.poly.pieces.len()];
        for (r, region) in self.regions.iter().enumerate() {
            for &p in &region.pieces {
                rp[p as usize] = r;
            }
        }
        rp
    }

    pub(crate) fn alive_faces(&self) -> BTreeSet<u32> {
        self.annuli.iter().filter(|a| a.alive).flat_map(|a| a.sides.iter().flatten().copied()).collect()
    }

    /// Region containing each side of an annulus.
    pub fn annulus_regions(&self, a: usize) -> [usize; 2] {
        let rp = self.region_of_piece();
        self.annuli[a].sides.each_ref().map(|s| rp[self.poly.faces[s[0] as usize].piece as usize])
    }

    pub(crate) fn sv_faces(&self) -> Vec<u32> {
        let rp = self.region_of_piece();
        (0..self.poly.faces.len() as u32)
            .filter(|&f| {
                let face = &self.poly.faces[f as usize];
                face.label == FaceLabel::DiscSv && rp[face.piece as usize] != usize::MAX
            })
            .collect()
    }

    pub(crate) fn region_patch(&self, r: usize) -> Patch<'_> {
        let region = &self.regions[r];
        let cut = self.alive_faces();
        let glued = glued_within(&self.poly, &region.pieces, &cut);
        let in_region: BTreeSet<u32> = region.pieces.iter().copied().collect();
        let mut pattern = Vec::new();
        for a in self.alive_annuli() {
            for side in &self.annuli[a].sides {
                if in_region.contains(&self.poly.faces[side[0] as usize].piece) {
                    pattern.push((a, side.clone()));
                }
            }
        }
        let cap = match self.plug {
            PlugStatus::Plugged { region } if region == r => Some(self.sv_faces()),
            _ => None,
        };
        Patch { poly: &self.poly, pieces: region.pieces.clone(), glued, pattern, cap }
    }

    /// The cell complex of a region with the maps from its pieces' cells.
    pub fn region_assembly(&self, r: usize) -> Assembled {
        self.region_patch(r).assemble()
    }

    pub fn region_manifold(&self, r: usize) -> PatternedManifold {
        let region = &self.regions[r];
        self.region_patch(r).manifold(region.kind, region.pseudo)
    }

    pub fn guts(&self) -> Vec<PatternedManifold> {
        (0..self.regions.len())
            .filter(|&r| self.regions[r].kind == RegionKind::Guts)
            .map(|r| self.region_manifold(r))
            .collect()
    }

    pub fn ibundles(&self) -> Vec<IBundleDescriptor> {
        (0..self.regions.len())
            .filter(|&r| self.regions[r].kind == RegionKind::IBundle)
            .map(|r| self.ibundle_descriptor(r))
            .collect()
    }

    pub fn frontier_annuli(&self) -> Vec<AnnulusIncidence> {
        self.alive_annuli()
            .into_iter()
            .map(|a| AnnulusIncidence { annulus: a, regions: self.annulus_regions(a), faces: self.annuli[a].sides[0].len() })
            .collect()
    }

    /// Sum of the Euler characteristics of the boundaries of all regions.
    pub fn boundary_euler_total(&self) -> i64 {
        (0..self.regions.len()).map(|r| self.region_manifold(r).boundary_euler()).sum()
    }

    pub fn ibundle_descriptor(&self, r: usize) -> IBundleDescriptor {
        let m = self.region_manifold(r);
        let cx = &m.cells;
        let sv_spheres = m.boundary_inventory.iter().filter(|b| b.sv_only).count() as i64;
        let pattern = m.pattern_faces();
        let horizontal: Vec<usize> = cx
            .boundary_faces()
            .into_iter()
            .filter(|c| !pattern.contains(c) && cx.cell(2, *c).label != CellLabel::DiscSv)
            .collect();
        let twisted = cx.surface_parts(&horizontal).len() == 1;
        let pure = self.regions[r].pieces.iter().all(|&p| self.poly.pieces[p as usize].label == PieceLabel::ProductBlock);
        IBundleDescriptor {
            region: r,
            base_euler: m.euler_characteristic() - sv_spheres,
            base_orientable: !twisted,
            twisted,
            base_boundary_circles: cx.boundary_circles(&horizontal) / 2,
            vertical_boundary_annuli: m.pattern_annuli.len(),
            pure,
        }
    }

    /// Whether the fibres of a region made of product blocks admit no
    /// consistent orientation. `None` if the region has other pieces.
    pub fn fiber_twisted(&self, r: usize) -> Option<bool> {
        let region = &self.regions[r];
        if !region.pieces.iter().all(|&p| self.poly.pieces[p as usize].label == PieceLabel::ProductBlock) {
            return None;
        }
        self.fiber_parity(&region.pieces).map(|_| false).or(Some(true))
    }

    /// A consistent fibre orientation of product blocks: for each block, 0
    /// if its first disc side is the bottom. `None` if twisted.
    pub(crate) fn fiber_parity(&self, pieces: &[u32]) -> Option<BTreeMap<u32, u8>> {
        let idx: BTreeMap<u32, usize> = pieces.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let cut = self.alive_faces();
        let mut pu = ParityUnionFind::new(pieces.len());
        for (&f, &g) in &glued_within(&self.poly, pieces, &cut) {
            if f > g {
                continue;
            }
            let (pf, pg) = (self.poly.faces[f as usize].piece, self.poly.faces[g as usize].piece);
            let glue = self.poly.faces[f as usize].glue.as_ref().expect("glued");
            let lo = self.bottom_arc(f)?;
            let mapped = glue.map_edge(lo).0;
            let rel = u8::from(!self.on_bottom(pg, mapped));
            if !pu.union(idx[&pf], idx[&pg], rel) {
                return None;
            }
        }
        Some(pieces.iter().enumerate().map(|(i, &p)| (p, pu.find(i).1)).collect())
    }

    pub(crate) fn disc_faces(&self, p: u32) -> Vec<u32> {
        self.poly.pieces[p as usize]
            .faces
            .iter()
            .map(|x| x.0)
            .filter(|&f| matches!(self.poly.faces[f as usize].label, FaceLabel::DiscS | FaceLabel::DiscSv | FaceLabel::Floor))
            .collect()
    }

    pub(crate) fn on_bottom(&self, p: u32, e: u32) -> bool {
        let d = self.disc_faces(p);
        d.first().is_some_and(|&f| self.poly.faces[f as usize].boundary.iter().any(|x| x.0 == e))
    }

    /// The edge of a side face lying on its block's first disc side.
    pub(crate) fn bottom_arc(&self, f: u32) -> Option<u32> {
        let p = self.poly.faces[f as usize].piece;
        self.poly.faces[f as usize].boundary.iter().map(|x| x.0).find(|&e| self.on_bottom(p, e))
    }

    /// Candidate pieces bounded by one or two annuli, with their tiny type.
    /// Pieces that are not tiny are omitted.
    pub fn detect_tiny(&self) -> Vec<TinyCandidate> {
        let alive = self.alive_annuli();
        let ends: Vec<[usize; 2]> = alive.iter().map(|&a| self.annulus_regions(a)).collect();
        let nr = self.regions.len();
        let split = |skip: &[usize]| -> Vec<usize> {
            let mut uf = UnionFind::new(nr);
            for (k, e) in ends.iter().enumerate() {
                if !skip.contains(&k) {
                    uf.union(e[0], e[1]);
                }
            }
            (0..nr).map(|r| uf.find(r)).collect()
        };
        let mut found: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
        for k in 0..alive.len() {
            let comp = split(&[k]);
            let [a, b] = ends[k];
            if comp[a] == comp[b] {
                continue;
            }
            for side in [a, b] {
                let c: Vec<usize> = (0..nr).filter(|&r| comp[r] == comp[side]).collect();
                found.insert((c, vec![alive[k]]));
            }
        }
        for i in 0..alive.len() {
            for j in i + 1..alive.len() {
                let comp = split(&[i, j]);
                for side in ends[i].iter().chain(ends[j].iter()) {
                    let inside = |e: [usize; 2]| e.iter().filter(|&&r| comp[r] == comp[*side]).count();
                    if inside(ends[i]) == 1 && inside(ends[j]) == 1 {
                        let c: Vec<usize> = (0..nr).filter(|&r| comp[r] == comp[*side]).collect();
                        found.insert((c, vec![alive[i], alive[j]]));
                    }
                }
            }
        }
        let mut out: Vec<TinyCandidate> = found
            .into_iter()
            .filter_map(|(regions, bounding)| {
                let set: BTreeSet<usize> = regions.iter().copied().collect();
                let interior = alive
                    .iter()
                    .zip(&ends)
                    .filter(|(_, e)| set.contains(&e[0]) && set.contains(&e[1]))
                    .map(|(&a, _)| a)
                    .collect();
                let (tiny, signature) = self.classify(&regions, &bounding)?;
                Some(TinyCandidate { regions, bounding, interior, tiny, signature })
            })
            .collect();
        out.sort_by(|x, y| (&x.regions, &x.bounding).cmp(&(&y.regions, &y.bounding)));
        out
    }

    fn classify(&self, regions: &[usize], bounding: &[usize]) -> Option<(TinyType, Signature)> {
        let mut pieces: Vec<u32> = regions.iter().flat_map(|&r| self.regions[r].pieces.iter().copied()).collect();
        pieces.sort_unstable();
        let set: BTreeSet<u32> = pieces.iter().copied().collect();
        let glued = glued_within(&self.poly, &pieces, &BTreeSet::new());
        let pattern: Vec<(usize, Vec<u32>)> = bounding
            .iter()
            .map(|&a| {
                let side = self.annuli[a]
                    .sides
                    .iter()
                    .find(|s| set.contains(&self.poly.faces[s[0] as usize].piece))
                    .expect("bounding annulus touches the candidate");
                (a, side.clone())
            })
            .collect();
        let mut patch = Patch { poly: &self.poly, pieces, glued, pattern, cap: None };
        let first = patch.assemble();
        let bf = first.complex.boundary_faces();
        let parts = first.complex.surface_parts(&bf);
        let sv_parts: Vec<_> = parts
            .iter()
            .filter(|p| p.faces.iter().all(|&c| first.complex.cell(2, c).label == CellLabel::DiscSv))
            .collect();
        if sv_parts.len() > 1 || parts.len() != 1 + sv_parts.len() {
            return None;
        }
        if let Some(part) = sv_parts.first() {
            let cells: BTreeSet<usize> = part.faces.iter().copied().collect();
            let faces: Vec<u32> =
                first.face_cell.iter().filter(|(_, (c, _))| cells.contains(c)).map(|(&f, _)| f).collect();
            patch.cap = Some(faces);
        }
        let a = if patch.cap.is_some() { patch.assemble() } else { first };
        let cx = &a.complex;
        let bf = cx.boundary_faces();
        let parts = cx.surface_parts(&bf);
        if parts.len() != 1 {
            return None;
        }
        let h = cx.homology(None);
        if !h[2].is_trivial() || !h[3].is_trivial() {
            return None;
        }
        let longitudinal = |faces: &Vec<u32>| {
            let cells: Vec<usize> = faces.iter().map(|f| a.face_cell[f].0).collect();
            let rel = cx.closure_of_faces(&cells);
            cx.homology(Some(&rel)).iter().all(AbelianGroup::is_trivial)
        };
        let chi = parts[0].euler_char;
        let screened = match bounding.len() {
            1 if chi == 2 && h[1].is_trivial() => TinyType::Ball,
            1 if chi == 0 && is_z(&h[1]) && longitudinal(&patch.pattern[0].1) => TinyType::SolidTorus,
            2 if chi == 0
                && is_z(&h[1])
                && longitudinal(&patch.pattern[0].1)
                && longitudinal(&patch.pattern[1].1) =>
            {
                TinyType::AnnulusProduct
            }
            _ => return None,
        };
        let c = cx.collapse();
        let ok = match screened {
            TinyType::Ball => c.is_point(),
            _ => c.is_circle(),
        };
        Some((if ok { screened } else { TinyType::Unknown }, patch.signature()))
    }

    /// Eliminate one tiny piece. Returns whether anything was absorbed.
    pub fn absorb_once(&mut self) -> Result<bool, GIError> {
        let cands = self.detect_tiny();
        let Some(best) = cands
            .into_iter()
            .filter(|c| c.tiny != TinyType::Unknown)
            .min_by(|x, y| {
                (Reverse(x.interior.len()), &x.signature, &x.regions).cmp(&(Reverse(y.interior.len()), &y.signature, &y.regions))
            })
        else {
            return Ok(false);
        };
        let before = self.annulus_count();
        let inside: BTreeSet<usize> = best.regions.iter().copied().collect();
        let mut neighbours = BTreeSet::new();
        for &a in &best.bounding {
            for r in self.annulus_regions(a) {
                if !inside.contains(&r) {
                    neighbours.insert(r);
                }
            }
        }
        let kind = if neighbours.iter().all(|&r| self.regions[r].kind == RegionKind::IBundle) {
            RegionKind::IBundle
        } else {
            RegionKind::Guts
        };
        let mut removed: Vec<usize> = best.bounding.iter().chain(best.interior.iter()).copied().collect();
        removed.sort_unstable();
        for &a in &removed {
            self.annuli[a].alive = false;
        }
        let merged: BTreeSet<usize> = inside.union(&neighbours).copied().collect();
        let mut pieces: Vec<u32> = merged.iter().flat_map(|&r| self.regions[r].pieces.iter().copied()).collect();
        pieces.sort_unstable();
        let absorbed_pieces = best.regions.iter().map(|&r| self.regions[r].pieces.len()).sum();
        let mut regions: Vec<Region> =
            self.regions.iter().enumerate().filter(|(r, _)| !merged.contains(r)).map(|(_, x)| x.clone()).collect();
        regions.push(Region { pieces, kind, pseudo: true });
        regions.sort_by_key(|r| (r.kind, r.pieces[0]));
        self.regions = regions;
        let after = self.annulus_count();
        // every surviving annulus must still separate two region sides
        for a in self.alive_annuli() {
            if self.annulus_regions(a).contains(&usize::MAX) {
                return Err(GIError::LostAnnulus(a));
            }
        }
        if after >= before {
            return Err(GIError::LostAnnulus(best.bounding[0]));
        }
        self.steps.push(AbsorbStep {
            tiny: best.tiny,
            absorbed_pieces,
            bounding: best.bounding,
            removed,
            kind,
            annuli_before: before,
            annuli_after: after,
        });
        Ok(true)
    }

    /// Absorb tiny pieces to the fixed point, then plug the vertex ball.
    pub fn absorb(mut self) -> Result<Self, GIError> {
        if self.stage != Stage::FirstApprox {
            return Err(GIError::Stage(Stage::FirstApprox));
        }
        while self.absorb_once()? {}
        self.stage = Stage::Absorbed;
        self.plug_ball();
        self.stage = Stage::BallPlugged;
        Ok(self)
    }

    fn plug_ball(&mut self) {
        let sv = self.sv_faces();
        if sv.is_empty() {
            self.plug = PlugStatus::Absent;
            return;
        }
        let rp = self.region_of_piece();
        let rs: BTreeSet<usize> = sv.iter().map(|&f| rp[self.poly.faces[f as usize].piece as usize]).collect();
        if rs.len() != 1 {
            self.plug = PlugStatus::Blocked;
            return;
        }
        let r = *rs.first().expect("one region");
        let m = self.region_manifold(r);
        let with_sv: Vec<_> = m.boundary_inventory.iter().filter(|b| b.contains_sv).collect();
        self.plug = if with_sv.len() == 1 && with_sv[0].sv_only && with_sv[0].euler_char == 2 {
            PlugStatus::Plugged { region: r }
        } else {
            PlugStatus::Blocked
        };
    }
}

/// Cut, assemble and absorb for one surface.
pub fn run_surface<I: Ring>(tri: &Triangulation, v: &NormalSurfaceVector<I>) -> Result<GIDecomposition, GIError> {
    let cc = cut_along(tri, v)?;
    GIDecomposition::assemble_first(&cc)?.absorb()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub guts: Vec<Signature>,
    pub annuli_first: usize,
    pub annuli_final: usize,
    pub steps: Vec<AbsorbStep>,
    pub unknown: usize,
    pub plug: PlugStatus,
    pub ibundles: Vec<IBundleDescriptor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRun {
    pub surface: Vec<usize>,
    pub outcome: Result<RunSummary, GIError>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub signature: Signature,
    /// Occurrences over all surfaces.
    pub multiplicity: usize,
    /// Index of the first surface producing it.
    pub first_surface: usize,
    pub surfaces: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    pub tet_count: usize,
    pub max_coord: u64,
    pub runs: Vec<SurfaceRun>,
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// `5^t`, saturating.
    pub fn bound(&self) -> u128 {
        5u128.saturating_pow(self.tet_count as u32)
    }

    pub fn within_bound(&self) -> bool {
        (self.size() as u128) <= self.bound()
    }
}

/// Summarise a finished decomposition for the catalog.
pub fn summarize(first_annuli: usize, d: &GIDecomposition) -> RunSummary {
    let unknown = d.detect_tiny().iter().filter(|c| c.tiny == TinyType::Unknown).count();
    RunSummary {
        guts: d.guts().into_iter().map(|m| m.signature).collect(),
        annuli_first: first_annuli,
        annuli_final: d.annulus_count(),
        steps: d.steps().to_vec(),
        unknown,
        plug: d.plug_status(),
        ibundles: d.ibundles(),
    }
}

fn run_one(tri: &Triangulation, v: &NormalSurfaceVector<i64>) -> Result<RunSummary, GIError> {
    let cc = cut_along(tri, v)?;
    let first = GIDecomposition::assemble_first(&cc)?;
    let n = first.annulus_count();
    let d = first.absorb()?;
    Ok(summarize(n, &d))
}

/// Guts signatures over all admissible surfaces with coordinates `<= k`.
pub fn catalog(tri: &Triangulation, k: u64, guard_bits: f64) -> Result<Catalog, GIError> {
    let surfaces = enumerate_admissible::<i64>(tri, k, guard_bits)?;
    let runs: Vec<SurfaceRun> = surfaces
        .par_iter()
        .map(|v| SurfaceRun { surface: v.to_usize().expect("bounded"), outcome: run_one(tri, v) })
        .collect();
    Ok(catalog_from_runs(tri.tet_count(), k, runs))
}

pub fn catalog_from_runs(tet_count: usize, max_coord: u64, runs: Vec<SurfaceRun>) -> Catalog {
    let mut acc: BTreeMap<Signature, (usize, usize, BTreeSet<usize>)> = BTreeMap::new();
    for (i, run) in runs.iter().enumerate() {
        if let Ok(s) = &run.outcome {
            for sig in &s.guts {
                let e = acc.entry(sig.clone()).or_insert((0, i, BTreeSet::new()));
                e.0 += 1;
                e.2.insert(i);
            }
        }
    }
    let entries = acc
        .into_iter()
        .map(|(signature, (multiplicity, first_surface, s))| CatalogEntry {
            signature,
            multiplicity,
            first_surface,
            surfaces: s.len(),
        })
        .collect();
    Catalog { tet_count, max_coord, runs, entries }
}
