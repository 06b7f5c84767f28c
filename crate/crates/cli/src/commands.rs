use std::path::{Path, PathBuf};

use num_rational::BigRational;

use normcut::cut_complex::{cut_along, CutComplex, FaceClass, PieceKind, PieceLayer, QuadFaceStatus};
use normcut::gi_decomposition::{self, GIDecomposition, PatternedManifold, PlugStatus};
use normcut::jsj_gluing::{self, JsjTree};
use normcut::norm_homology::{self, PieceCandidates, PatternView, RelSelector};
use normcut::normal_surface::{build_surface, enumerate_admissible, NormalSurfaceVector, SurfaceComplex};
use normcut::seifert;
use normcut::triangulation::Triangulation;

use crate::report::{list, sha256_hex, InputDigest, Report};
use crate::{Command, Done, Emit, Failure, NormStage};

pub(crate) fn dispatch(cmd: &Command) -> Result<Done, Failure> {
    let done = |report| Ok(Done { report, out: None });
    match cmd {
        Command::Validate { tri } => done(validate(tri)?),
        Command::Surfaces { tri, max_coord, guard } => done(surfaces(tri, *max_coord, guard.guard_bits)?),
        Command::Cut { tri, surface, out } => Ok(Done { report: cut(tri, surface)?, out: out.clone() }),
        Command::Guts { tri, surface } => done(guts(tri, surface)?),
        Command::Catalog { tri, max_coord, guard } => done(catalog(tri, *max_coord, guard.guard_bits)?),
        Command::Norm { piece, rel, index, stage } => done(norm(piece, rel, *index, *stage)?),
        Command::Census { sv_bound, emit } => done(census(sv_bound, *emit)?),
        Command::Glue { p, q, eps } => done(glue(*p, *q, *eps)?),
        Command::Tree { file } => done(tree(file)?),
    }
}

/// Digests of the files a command reads, in argument order.
pub(crate) fn inputs_of(cmd: &Command) -> Vec<InputDigest> {
    let paths: Vec<&PathBuf> = match cmd {
        Command::Validate { tri } | Command::Surfaces { tri, .. } | Command::Catalog { tri, .. } => vec![tri],
        Command::Cut { tri, surface, .. } | Command::Guts { tri, surface } => vec![tri, surface],
        Command::Norm { piece, .. } => vec![piece],
        Command::Tree { file } => vec![file],
        Command::Census { .. } | Command::Glue { .. } => vec![],
    };
    paths
        .into_iter()
        .filter_map(|p| {
            let bytes = std::fs::read(p).ok()?;
            Some(InputDigest { path: p.display().to_string(), sha256: sha256_hex(&bytes) })
        })
        .collect()
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::from(format!("{}: {e}", path.display())))
}

fn load_tri(path: &Path) -> Result<Triangulation, Failure> {
    Triangulation::parse(&read(path)?).map_err(|e| Failure::from(format!("{}: {e}", path.display())))
}

fn load_surface(path: &Path) -> Result<NormalSurfaceVector<i64>, Failure> {
    NormalSurfaceVector::parse(&read(path)?).map_err(|e| Failure::from(format!("{}: {e}", path.display())))
}

fn require_valid(tri: &Triangulation) -> Result<(), Failure> {
    if tri.is_valid() {
        Ok(())
    } else {
        Err("triangulation is not a valid closed orientable one-vertex triangulation".into())
    }
}

fn surface_fields(rep: &mut Report, s: &SurfaceComplex) {
    rep.kv("surface.euler", s.euler_char)
        .kv("surface.components", s.components.len())
        .kv("surface.two_sided", s.is_two_sided());
    for (i, c) in s.components.iter().enumerate() {
        rep.kv(
            format!("component.{i}"),
            format!(
                "euler={} orientable={} two_sided={} vertex_link={} discs={}",
                c.euler_char, c.orientable, c.two_sided, c.is_vertex_linking, c.disc_count
            ),
        );
    }
}

fn validate(path: &Path) -> Result<Report, Failure> {
    let tri = load_tri(path)?;
    let r = tri.validate();
    let mut rep = Report::new("validate");
    rep.kv("tetrahedra", tri.tet_count())
        .kv("closed", r.closed)
        .kv("orientable", r.orientable)
        .kv("vertices", r.vertex_count)
        .kv("vertex_link_euler", r.vertex_link_euler)
        .kv("vertex_link_connected", r.vertex_link_connected)
        .kv("edges_valid", r.edges_valid)
        .kv("valid", r.is_valid());
    if !r.is_valid() {
        return Err(Failure { message: "triangulation is not valid".into(), report: Some(rep) });
    }
    let link = tri.vertex_link::<i64>()?;
    let s = build_surface(&tri, &link)?;
    rep.section("vertex-link").kv("vector", link.serialize());
    surface_fields(&mut rep, &s);
    Ok(rep)
}

/// Per-tetrahedron counts of truncated tetrahedra and prisms, and whether
/// each tetrahedron has two prisms exactly when it carries a quad.
fn census_check(cc: &CutComplex, t: usize) -> (usize, usize, bool) {
    let pc = cc.piece_census();
    let quad_rule = (0..t).all(|tet| {
        let prisms = cc.pieces.iter().filter(|p| p.source_tet == tet && p.kind == PieceKind::TruncatedPrism).count();
        prisms == if cc.has_quad(tet) { 2 } else { 0 }
    });
    (pc.truncated_tets, pc.prisms, quad_rule && pc.truncated_tets <= t && pc.prisms <= 2 * t)
}

fn surfaces(path: &Path, k: u64, guard_bits: f64) -> Result<Report, Failure> {
    let tri = load_tri(path)?;
    require_valid(&tri)?;
    let t = tri.tet_count();
    let all = enumerate_admissible::<i64>(&tri, k, guard_bits)?;
    let mut rep = Report::new("surfaces");
    rep.kv("tetrahedra", t).kv("max_coord", k).kv("count", all.len());
    let (mut cut_ok, mut bounds_ok) = (0, 0);
    for (i, v) in all.iter().enumerate() {
        rep.section(format_args!("surface.{i}")).kv("vector", v.serialize());
        match build_surface(&tri, v) {
            Ok(s) => surface_fields(&mut rep, &s),
            Err(e) => {
                rep.kv("surface.error", e);
            }
        }
        match cut_along(&tri, v) {
            Ok(cc) => {
                let pc = cc.piece_census();
                let (_, _, ok) = census_check(&cc, t);
                cut_ok += 1;
                bounds_ok += usize::from(ok);
                rep.kv("truncated_tets", pc.truncated_tets)
                    .kv("prisms", pc.prisms)
                    .kv("products", pc.products)
                    .kv("census_bounds", ok);
            }
            Err(e) => {
                rep.kv("cut.error", e);
            }
        }
    }
    rep.section("summary").kv("cut", cut_ok).kv("census_bounds_ok", format_args!("{bounds_ok}/{cut_ok}"));
    Ok(rep)
}

fn kind_name(k: PieceKind) -> &'static str {
    match k {
        PieceKind::TruncatedTet => "tet",
        PieceKind::TruncatedPrism => "prism",
        PieceKind::ProductBlock => "product",
    }
}

fn layer_name(l: PieceLayer) -> String {
    match l {
        PieceLayer::Whole => "whole".into(),
        PieceLayer::Prism { block: [a, b] } => format!("prism{a}{b}"),
        PieceLayer::Triangles { corner, layer } => format!("T{corner}.{layer}"),
        PieceLayer::Quads { qtype, layer } => format!("Q{qtype}.{layer}"),
    }
}

fn class_name(c: FaceClass) -> &'static str {
    match c {
        FaceClass::DiscInS => "S",
        FaceClass::DiscInSv => "Sv",
        FaceClass::Hexagonal => "hex",
        FaceClass::QuadFace => "quadface",
        FaceClass::VerticalQuad => "vertical",
    }
}

fn cut(tri_path: &Path, surf_path: &Path) -> Result<Report, Failure> {
    let tri = load_tri(tri_path)?;
    let v = load_surface(surf_path)?;
    let cc = cut_along(&tri, &v)?;
    cc.check()?;
    let t = tri.tet_count();
    let pc = cc.piece_census();
    let (_, _, ok) = census_check(&cc, t);
    let mut rep = Report::new("cut");
    rep.kv("tetrahedra", t)
        .kv("surface", v.serialize())
        .kv("truncated_tets", pc.truncated_tets)
        .kv("prisms", pc.prisms)
        .kv("products", pc.products)
        .kv("quad_tets", cc.quad_tets())
        .kv("census_bounds", ok);
    rep.section("pieces");
    for (i, p) in cc.pieces.iter().enumerate() {
        let faces = list(p.faces.iter().map(|(id, c)| format!("{id}:{}", class_name(*c))));
        rep.kv(
            format_args!("piece.{i}"),
            format_args!("{} tet={} layer={} faces={faces}", kind_name(p.kind), p.source_tet, layer_name(p.layer)),
        );
    }
    rep.section("pairings");
    for (a, b) in cc.face_pairings() {
        rep.kv("pair", format_args!("{a} {b}"));
    }
    rep.section("frontier");
    for (f, s) in cc.quad_face_status() {
        let mark = match s {
            QuadFaceStatus::Frontier => "frontier",
            QuadFaceStatus::NonFrontier => "interior",
        };
        rep.kv(f, mark);
    }
    Ok(rep)
}

fn regions(rep: &mut Report, d: &GIDecomposition) {
    for (i, r) in d.regions().iter().enumerate() {
        rep.kv(format_args!("region.{i}"), format_args!("{} pseudo={} pieces={}", r.kind, r.pseudo, list(&r.pieces)));
    }
    for a in d.frontier_annuli() {
        rep.kv(
            format_args!("annulus.{}", a.annulus),
            format_args!("regions={},{} faces={}", a.regions[0], a.regions[1], a.faces),
        );
    }
}

fn manifold_line(m: &PatternedManifold) -> String {
    format!(
        "signature={} euler={} pattern_annuli={} boundary_euler={} H1={} H2={} pieces={}",
        m.signature,
        m.euler_characteristic(),
        m.pattern_annuli.len(),
        list(m.boundary_inventory.iter().map(|b| b.euler_char)),
        m.homology[1],
        m.homology[2],
        list(&m.pieces)
    )
}

fn guts(tri_path: &Path, surf_path: &Path) -> Result<Report, Failure> {
    let tri = load_tri(tri_path)?;
    let v = load_surface(surf_path)?;
    let cc = cut_along(&tri, &v)?;
    let first = GIDecomposition::assemble_first(&cc)?;
    let mut rep = Report::new("guts");
    rep.section("stage.first-approx");
    regions(&mut rep, &first);
    let d = first.absorb()?;
    rep.section(format_args!("stage.{}", d.stage()));
    for (i, s) in d.steps().iter().enumerate() {
        rep.kv(
            format_args!("step.{i}"),
            format_args!(
                "tiny={} pieces={} bounding={} removed={} into={} annuli={}->{}",
                s.tiny,
                s.absorbed_pieces,
                list(&s.bounding),
                list(&s.removed),
                s.kind,
                s.annuli_before,
                s.annuli_after
            ),
        );
    }
    regions(&mut rep, &d);
    let plug = match d.plug_status() {
        PlugStatus::Pending => "pending".to_string(),
        PlugStatus::Absent => "absent".to_string(),
        PlugStatus::Plugged { region } => format!("region.{region}"),
        PlugStatus::Blocked => "blocked".to_string(),
    };
    rep.kv("plug", plug);
    rep.section("guts");
    let g = d.guts();
    rep.kv("count", g.len());
    for (i, m) in g.iter().enumerate() {
        rep.kv(format_args!("guts.{i}"), manifold_line(m));
    }
    rep.section("ibundles");
    for b in d.ibundles() {
        rep.kv(
            format_args!("ibundle.{}", b.region),
            format_args!(
                "base_euler={} orientable={} boundary_circles={} vertical_annuli={} pure={}",
                b.base_euler, b.base_orientable, b.base_boundary_circles, b.vertical_boundary_annuli, b.pure
            ),
        );
    }
    let bound = 5u128.saturating_pow(tri.tet_count() as u32);
    rep.section("bound").kv("five_pow_t", bound).kv("within", (g.len() as u128) <= bound);
    // enough to rebuild the decomposition from this report alone
    rep.section("input");
    for line in tri.serialize().lines() {
        rep.kv("tri", line);
    }
    rep.kv("surface", v.serialize());
    Ok(rep)
}

fn catalog(path: &Path, k: u64, guard_bits: f64) -> Result<Report, Failure> {
    let tri = load_tri(path)?;
    require_valid(&tri)?;
    let cat = gi_decomposition::catalog(&tri, k, guard_bits)?;
    let failed: Vec<_> = cat.runs.iter().enumerate().filter(|(_, r)| r.outcome.is_err()).collect();
    let mut rep = Report::new("catalog");
    rep.kv("tetrahedra", cat.tet_count)
        .kv("max_coord", cat.max_coord)
        .kv("surfaces", cat.runs.len())
        .kv("failed", failed.len())
        .kv("size", cat.size())
        .kv("five_pow_t", cat.bound())
        .kv("within_bound", cat.within_bound());
    rep.section("entries");
    for (i, e) in cat.entries.iter().enumerate() {
        rep.kv(
            format_args!("entry.{i}"),
            format_args!(
                "signature={} multiplicity={} surfaces={} first={}",
                e.signature,
                e.multiplicity,
                e.surfaces,
                list(&cat.runs[e.first_surface].surface)
            ),
        );
    }
    if !failed.is_empty() {
        rep.section("failures");
        for (i, r) in failed {
            if let Err(e) = &r.outcome {
                rep.kv(format_args!("surface.{i}"), format_args!("{} {e}", list(&r.surface)));
            }
        }
    }
    Ok(rep)
}

/// Triangulation and surface embedded in a guts report.
fn parse_guts_report(text: &str) -> Result<(Triangulation, NormalSurfaceVector<i64>), Failure> {
    let mut lines = text.lines();
    if lines.next() != Some(crate::report::SCHEMA) || lines.next() != Some("command guts") {
        return Err("not a guts report".into());
    }
    let mut in_input = false;
    let mut tri = String::new();
    let mut surface = None;
    for l in lines {
        if l.starts_with('[') {
            in_input = l == "[input]";
            continue;
        }
        if !in_input {
            continue;
        }
        match l.split_once(' ') {
            Some(("tri", rest)) => {
                tri.push_str(rest);
                tri.push('\n');
            }
            Some(("surface", rest)) => surface = Some(rest.to_string()),
            _ => {}
        }
    }
    let surface = surface.ok_or("guts report has no surface")?;
    Ok((Triangulation::parse(&tri)?, NormalSurfaceVector::parse(&surface)?))
}

fn norm(path: &Path, rel: &str, index: Option<usize>, stage: NormStage) -> Result<Report, Failure> {
    let sel: RelSelector = rel.parse()?;
    let (tri, v) = parse_guts_report(&read(path)?)?;
    let d = gi_decomposition::run_surface(&tri, &v)?;
    let mut rep = Report::new("norm");
    rep.kv("selector", &sel);
    let guts;
    let refinement;
    let views: Vec<PatternView<'_>>;
    let patterns: Vec<Vec<Vec<usize>>>;
    match stage {
        NormStage::Guts => {
            rep.kv("stage", "guts");
            guts = d.guts();
            patterns = guts.iter().map(|m| m.pattern_annuli.iter().map(|a| a.faces.clone()).collect()).collect();
            views = guts.iter().zip(&patterns).map(|(m, p)| PatternView { cells: &m.cells, pattern: p }).collect();
        }
        NormStage::Refined => {
            rep.kv("stage", "refined");
            refinement = norm_homology::refine_separating(&d)?;
            for b in &refinement.bundles {
                rep.kv(
                    format_args!("carved.{}", b.region),
                    format_args!(
                        "base_euler={} circles={} q_euler={} new_base_euler={}",
                        b.base_euler, b.base_boundary_circles, b.q_euler, b.new_base_euler
                    ),
                );
            }
            for (r, why) in &refinement.skipped {
                rep.kv(format_args!("skipped.{r}"), why);
            }
            views = refinement.pieces.iter().map(|p| p.view()).collect();
        }
    }
    rep.kv("pieces", views.len());
    let chosen: Vec<usize> = match index {
        Some(i) if i < views.len() => vec![i],
        Some(i) => return Err(format!("no piece {i}; the report has {}", views.len()).into()),
        None => (0..views.len()).collect(),
    };
    for i in chosen {
        let view = views[i];
        let r = norm_homology::relative_homology(view, &sel)?;
        rep.section(format_args!("piece.{i}"))
            .kv("cells", list(view.cells.counts()))
            .kv("relative_cells", list(r.relative_cells))
            .kv("pattern_annuli", view.pattern.len());
        for (dim, g) in r.homology.iter().enumerate() {
            rep.kv(format_args!("H{dim}"), format_args!("rank={} torsion={} group={g}", g.rank, list(&g.torsion)));
        }
        rep.kv("chi_minus", list(&r.chi_minus_per_component))
            .kv("chi_minus_total", r.chi_minus_total)
            .kv("euler.cells", r.cell_euler())
            .kv("euler.betti", r.betti_euler())
            .kv("euler.consistent", r.cell_euler() == r.betti_euler());
        // with no candidate surfaces the bound exists only when there is nothing to generate
        match norm_homology::tn_upper_bound(&[PieceCandidates { piece: view, surfaces: Vec::new() }]) {
            Ok(b) => rep.kv("tn_upper_bound", b),
            Err(norm_homology::NormError::NotAGeneratingSet(g)) => {
                rep.kv("tn_upper_bound", "none").kv("ungenerated", g)
            }
            Err(e) => return Err(e.into()),
        };
    }
    Ok(rep)
}

fn census(bound: &str, emit: Emit) -> Result<Report, Failure> {
    let b: BigRational = bound.trim().parse().map_err(|_| Failure::from(format!("bad bound {bound:?}; expected NUM/DEN")))?;
    let entries = seifert::census(&b)?;
    let mut rep = Report::new("census");
    rep.kv("sv_bound", &b).kv("entries", entries.len());
    let rows: Vec<[String; 7]> = entries
        .iter()
        .map(|e| {
            let inv = &e.invariants;
            [
                list(inv.a()),
                format!("{:+}", inv.sign()),
                list(inv.b()),
                inv.e0().to_string(),
                e.chi_b.to_string(),
                e.sv.to_string(),
                e.product_a.to_string(),
            ]
        })
        .collect();
    const HEAD: [&str; 7] = ["a", "sign", "b", "e0", "chi_b", "sv", "prod_a"];
    match emit {
        Emit::Lines => {
            for (i, r) in rows.iter().enumerate() {
                let fields: Vec<String> = HEAD.iter().zip(r).map(|(h, v)| format!("{h}={v}")).collect();
                rep.kv(format_args!("entry.{i}"), fields.join(" "));
            }
        }
        Emit::Table => {
            let mut width = HEAD.map(str::len);
            for r in &rows {
                for (w, v) in width.iter_mut().zip(r) {
                    *w = (*w).max(v.len());
                }
            }
            let fmt_row = |cells: &[&str]| {
                let padded: Vec<String> = cells.iter().zip(width).map(|(c, w)| format!("{c:<w$}")).collect();
                padded.join("  ").trim_end().to_string()
            };
            rep.section("table").line(fmt_row(&HEAD));
            for r in &rows {
                let cells: Vec<&str> = r.iter().map(String::as_str).collect();
                rep.line(fmt_row(&cells));
            }
        }
    }
    Ok(rep)
}

fn glue(p: i64, q: i64, eps: i8) -> Result<Report, Failure> {
    if eps != 1 && eps != -1 {
        return Err(format!("eps must be 1 or -1, got {eps}").into());
    }
    let m = jsj_gluing::gluing_matrix(p, q, eps);
    let (mu, lam) = (m.image_of_meridian(), m.image_of_longitude());
    let mut rep = Report::new("glue");
    rep.kv("p", p)
        .kv("q", q)
        .kv("eps", eps)
        .kv("matrix", m)
        .kv("det", m.det())
        .kv("meridian_image", format_args!("{},{}", mu.0, mu.1))
        .kv("longitude_image", format_args!("{},{}", lam.0, lam.1))
        .kv("inverse", m.inverse());
    let back = jsj_gluing::extract_pq(&m)?;
    rep.kv("round_trip", back == (p, q, eps));
    Ok(rep)
}

fn tree(path: &Path) -> Result<Report, Failure> {
    let t: JsjTree = read(path)?.parse()?;
    t.check_shape()?;
    let h = jsj_gluing::assemble_tree(&t)?;
    let mut rep = Report::new("tree");
    rep.kv("vertices", t.vertices.len()).kv("edges", t.edges.len());
    for (i, v) in t.vertices.iter().enumerate() {
        rep.kv(format_args!("vertex.{i}"), format_args!("tori={} H1={}", v.tori().len(), v.homology()));
    }
    for (i, e) in t.edges.iter().enumerate() {
        let form = match jsj_gluing::extract_pq(&e.matrix) {
            Ok((p, q, eps)) => format!("p={p} q={q} eps={eps}"),
            Err(_) => "general".to_string(),
        };
        rep.kv(
            format_args!("edge.{i}"),
            format_args!("{}.{} -> {}.{} matrix={} {form}", e.from.0, e.from.1, e.to.0, e.to.1, e.matrix),
        );
    }
    rep.kv("H1", &h.homology).kv("order", h.homology.order().map_or("infinite".to_string(), |o| o.to_string()));
    rep.kv("homology_sphere", h.is_homology_sphere);
    Ok(rep)
}
