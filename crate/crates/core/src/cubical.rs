//! Hand-built decompositions from unit cubes.
//!
//! A fixture is a set of voxels, each assigned to a region. Adjacent voxels
//! are glued along their common square; squares between different regions
//! become pattern annuli (grouped by connectivity), and the squares around
//! an optional missing voxel are marked as a vertex-link sphere.

use std::collections::{BTreeMap, BTreeSet};

use crate::polyhedral::{FaceLabel, PieceComplex, PieceLabel};
use crate::triangulation::UnionFind;

pub type Voxel = (i32, i32, i32);
type Point3 = (i32, i32, i32);

#[derive(Clone, Debug)]
pub struct VoxelFixture {
    pub poly: PieceComplex,
    /// Pieces of each region, in region order.
    pub regions: Vec<Vec<u32>>,
    /// Each annulus as its two sides; side 0 lies in the lower-numbered region.
    pub annuli: Vec<[Vec<u32>; 2]>,
    /// Faces of each voxel: floor, ceiling, then walls toward y-, x+, y+, x-.
    pub faces: BTreeMap<Voxel, [u32; 6]>,
}

/// Offsets of the faces of a cube in prism order: floor, ceiling, then walls
/// over the square's edges (y-, x+, y+, x-).
const FACE_DIRS: [Voxel; 6] = [(0, 0, -1), (0, 0, 1), (0, -1, 0), (1, 0, 0), (0, 1, 0), (-1, 0, 0)];

/// Build a fixture from `(voxel, region)` pairs. `cavity` names a voxel that
/// is absent and whose surrounding squares form the vertex-link sphere.
pub fn build(voxels: &[(Voxel, usize)], cavity: Option<Voxel>) -> VoxelFixture {
    let mut poly = PieceComplex::default();
    let mut region_of: BTreeMap<Voxel, usize> = BTreeMap::new();
    let mut faces_of: BTreeMap<Voxel, [u32; 6]> = BTreeMap::new();
    let mut coords: Vec<Point3> = Vec::new();
    let n_regions = voxels.iter().map(|v| v.1 + 1).max().unwrap_or(0);
    let mut regions = vec![Vec::new(); n_regions];
    let mut sorted: Vec<(Voxel, usize)> = voxels.to_vec();
    sorted.sort();
    for &((x, y, z), r) in &sorted {
        assert!(region_of.insert((x, y, z), r).is_none(), "voxel listed twice");
        let pr = poly.add_prism(4, PieceLabel::Block, FaceLabel::Floor, FaceLabel::Wall);
        let corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
        for (k, &p) in pr.bottom.iter().enumerate() {
            set_coord(&mut coords, p, (corners[k].0, corners[k].1, z));
        }
        for (k, &p) in pr.top.iter().enumerate() {
            set_coord(&mut coords, p, (corners[k].0, corners[k].1, z + 1));
        }
        let mut fs = [pr.floor, pr.ceiling, 0, 0, 0, 0];
        fs[2..].copy_from_slice(&pr.walls);
        faces_of.insert((x, y, z), fs);
        regions[r].push(pr.piece);
    }

    let mut annulus_faces: BTreeMap<(usize, usize), Vec<(u32, u32)>> = BTreeMap::new();
    for (&v, fs) in &faces_of {
        for (k, d) in FACE_DIRS.iter().enumerate() {
            let w = (v.0 + d.0, v.1 + d.1, v.2 + d.2);
            let f = fs[k];
            if Some(w) == cavity {
                poly.faces[f as usize].label = FaceLabel::DiscSv;
                continue;
            }
            let Some(wf) = faces_of.get(&w) else { continue };
            if v > w {
                continue;
            }
            let g = wf[opposite(k)];
            let map = point_map(&poly, &coords, f, g);
            poly.glue_faces(f, g, &map).expect("cube faces match");
            let (ra, rb) = (region_of[&v], region_of[&w]);
            if ra != rb {
                let (lo, hi, fa, fb) = if ra < rb { (ra, rb, f, g) } else { (rb, ra, g, f) };
                annulus_faces.entry((lo, hi)).or_default().push((fa, fb));
            }
        }
    }

    let mut annuli = Vec::new();
    for pairs in annulus_faces.into_values() {
        // group squares sharing a geometric edge
        let mut uf = UnionFind::new(pairs.len());
        let mut by_edge: BTreeMap<(Point3, Point3), usize> = BTreeMap::new();
        for (i, &(f, _)) in pairs.iter().enumerate() {
            for &(e, _) in &poly.faces[f as usize].boundary {
                let [a, b] = poly.edges[e as usize].ends;
                let key = minmax(coords[a as usize], coords[b as usize]);
                if let Some(&j) = by_edge.get(&key) {
                    uf.union(i, j);
                } else {
                    by_edge.insert(key, i);
                }
            }
        }
        let mut groups: BTreeMap<usize, [Vec<u32>; 2]> = BTreeMap::new();
        for (i, &(f, g)) in pairs.iter().enumerate() {
            let e = groups.entry(uf.find(i)).or_default();
            e[0].push(f);
            e[1].push(g);
        }
        annuli.extend(groups.into_values());
    }
    VoxelFixture { poly, regions, annuli, faces: faces_of }
}

fn set_coord(coords: &mut Vec<Point3>, p: u32, c: Point3) {
    if coords.len() <= p as usize {
        coords.resize(p as usize + 1, (0, 0, 0));
    }
    coords[p as usize] = c;
}

fn opposite(k: usize) -> usize {
    match k {
        0 => 1,
        1 => 0,
        2 => 4,
        4 => 2,
        3 => 5,
        _ => 3,
    }
}

fn minmax(a: Point3, b: Point3) -> (Point3, Point3) {
    if a < b { (a, b) } else { (b, a) }
}

fn point_map(poly: &PieceComplex, coords: &[Point3], f: u32, g: u32) -> Vec<(u32, u32)> {
    let gp: BTreeMap<Point3, u32> = poly.face_points(g).into_iter().map(|p| (coords[p as usize], p)).collect();
    poly.face_points(f).into_iter().map(|p| (p, gp[&coords[p as usize]])).collect()
}

/// Voxels of a planar region (given as unit squares) thickened to `height`.
pub fn column(squares: &[(i32, i32)], height: i32, region: usize) -> Vec<(Voxel, usize)> {
    let mut out = Vec::new();
    for &(x, y) in squares {
        for z in 0..height {
            out.push(((x, y, z), region));
        }
    }
    out
}

/// Unit squares of the rectangle `[x0, x1) x [y0, y1)`.
pub fn rect(x0: i32, y0: i32, x1: i32, y1: i32) -> BTreeSet<(i32, i32)> {
    let mut s = BTreeSet::new();
    for x in x0..x1 {
        for y in y0..y1 {
            s.insert((x, y));
        }
    }
    s
}

/// Squares in `outer` but not in `inner`.
pub fn ring(outer: &BTreeSet<(i32, i32)>, inner: &BTreeSet<(i32, i32)>) -> Vec<(i32, i32)> {
    outer.difference(inner).copied().collect()
}
