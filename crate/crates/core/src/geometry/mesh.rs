//! Tagged conforming triangulations of the truncated disk.
//!
//! Interfaces are inscribed polylines whose vertices lie on the exact curves.
//! Interior points are seeded from concentric rings (around the origin and
//! around inclusions) plus a multi-level lattice, triangulated with a
//! constrained Delaunay triangulation and refined for angle quality.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use sha2::{Digest, Sha256};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, RefinementParameters, Triangulation};

use super::curve::{CurveInfo, CurveKind};
use super::{region_of, GeometryConfig, GeometryError, Point2, RegionTag};

/// Relative growth of the local mesh size per unit distance from a feature.
pub const GROWTH: f64 = 0.2;
/// Segments used to resolve one inclusion circle.
pub const INCLUSION_SEGMENTS: f64 = 24.0;
/// Angle limit handed to the Delaunay refiner (degrees).
const REFINE_ANGLE_DEG: f64 = 25.0;

/// Mesh edge lying on a resolved curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaggedEdge {
    pub nodes: [usize; 2],
    pub curve: usize,
}

/// Conforming triangulation with per-element region tags.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Point2>,
    /// Counter-clockwise node triples.
    pub elements: Vec<[usize; 3]>,
    pub tags: Vec<RegionTag>,
    /// Edges on resolved curves; curve 0 is the truncation circle.
    pub edges: Vec<TaggedEdge>,
    pub curves: Vec<CurveInfo>,
}

impl TriMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, e: usize) -> [Point2; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area (positive for counter-clockwise elements).
    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        0.5 * (b - a).cross(c - a)
    }

    pub fn barycenter(&self, e: usize) -> Point2 {
        let [a, b, c] = self.element_points(e);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Longest edge length.
    pub fn element_h(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        a.dist(b).max(b.dist(c)).max(c.dist(a))
    }

    /// Smallest interior angle in degrees.
    pub fn min_angle_deg(&self, e: usize) -> f64 {
        let p = self.element_points(e);
        let mut m = f64::INFINITY;
        for i in 0..3 {
            let u = p[(i + 1) % 3] - p[i];
            let v = p[(i + 2) % 3] - p[i];
            let ang = u.cross(v).abs().atan2(u.dot(v));
            m = m.min(ang);
        }
        m.to_degrees()
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.min_angle_deg(e)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_h(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_h(e)).fold(0.0, f64::max)
    }

    /// Gradients of the three P1 basis functions on element `e`.
    pub fn gradients(&self, e: usize) -> [Point2; 3] {
        let [a, b, c] = self.element_points(e);
        let twice = (b - a).cross(c - a);
        let g = |p: Point2, q: Point2| Point2::new(p.y - q.y, q.x - p.x) * (1.0 / twice);
        [g(b, c), g(c, a), g(a, b)]
    }

    pub fn tag_area(&self, tag: RegionTag) -> f64 {
        (0..self.num_elements()).filter(|&e| self.tags[e] == tag).map(|e| self.area(e)).sum()
    }

    pub fn has_tag(&self, tag: RegionTag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn curve_index(&self, name: &str) -> Option<usize> {
        self.curves.iter().position(|c| c.name == name)
    }

    /// Index of the resolved origin-centred circle of radius `r`.
    pub fn circle_curve(&self, r: f64) -> Option<usize> {
        self.curves.iter().position(|c| c.kind.is_circle_at_origin(r))
    }

    pub fn curve_edges(&self, curve: usize) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.edges.iter().filter(move |e| e.curve == curve).map(|e| e.nodes)
    }

    /// Nodes of a circle curve sorted by polar angle about its centre.
    pub fn circle_nodes_sorted(&self, curve: usize) -> Vec<usize> {
        let center = match self.curves[curve].kind {
            CurveKind::Circle { center, .. } => center,
            _ => Point2::ORIGIN,
        };
        let mut ids: Vec<usize> = self.curve_edges(curve).flat_map(|e| e.into_iter()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.sort_by(|&a, &b| {
            let ta = (self.nodes[a] - center).angle();
            let tb = (self.nodes[b] - center).angle();
            ta.total_cmp(&tb).then(a.cmp(&b))
        });
        ids
    }

    /// SHA-256 of node coordinates, connectivity and tags.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.nodes {
            h.update(p.x.to_bits().to_le_bytes());
            h.update(p.y.to_bits().to_le_bytes());
        }
        for (el, t) in self.elements.iter().zip(&self.tags) {
            for &v in el {
                h.update((v as u64).to_le_bytes());
            }
            h.update([t.code()]);
        }
        for e in &self.edges {
            h.update((e.nodes[0] as u64).to_le_bytes());
            h.update((e.nodes[1] as u64).to_le_bytes());
            h.update((e.curve as u64).to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Check orientation, conformity and boundary consistency.
    pub fn check(&self) -> Result<(), GeometryError> {
        for e in 0..self.num_elements() {
            if !(self.area(e) > 0.0) {
                return Err(GeometryError::Meshing(format!("element {e} is not positively oriented")));
            }
        }
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for el in &self.elements {
            for i in 0..3 {
                let (a, b) = (el[i], el[(i + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let outer: std::collections::HashSet<(usize, usize)> =
            self.curve_edges(0).map(|[a, b]| (a.min(b), a.max(b))).collect();
        for (edge, c) in &count {
            match c {
                1 if outer.contains(edge) => {}
                1 => return Err(GeometryError::Meshing(format!("hanging or boundary edge {edge:?} off the truncation circle"))),
                2 => {}
                _ => return Err(GeometryError::Meshing(format!("edge {edge:?} shared by {c} elements"))),
            }
        }
        for e in &self.edges {
            let k = (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1]));
            if !count.contains_key(&k) {
                return Err(GeometryError::Meshing(format!("tagged edge {k:?} is not a mesh edge")));
            }
        }
        Ok(())
    }
}

/// Local mesh-size field: `min(h_max, min_f(h_f + GROWTH * dist_f))`.
#[derive(Clone, Debug)]
pub(crate) struct SizeField {
    h_max: f64,
    features: Vec<(CurveKind, f64)>,
    radial: Vec<(f64, f64)>,
}

impl SizeField {
    pub(crate) fn at(&self, p: Point2) -> f64 {
        let mut h = self.radial_at(p.norm());
        for (c, hf) in &self.features {
            h = h.min(hf + GROWTH * c.distance(p));
        }
        h
    }

    /// Size implied by the origin-centred circles alone.
    pub(crate) fn radial_at(&self, r: f64) -> f64 {
        let mut h = self.h_max;
        for &(rc, hf) in &self.radial {
            h = h.min(hf + GROWTH * (r - rc).abs());
        }
        h
    }

    fn min_size(&self) -> f64 {
        self.features.iter().map(|f| f.1).chain(self.radial.iter().map(|f| f.1)).fold(self.h_max, f64::min)
    }
}

/// Build a conforming tagged mesh of `B_{R_out}`.
///
/// `h_target` is the bulk element size; the material interfaces of the
/// plasmonic shell are resolved with size `h_target / grading`.
pub fn build_mesh(cfg: &GeometryConfig, h_target: f64, grading: f64) -> Result<TriMesh, GeometryError> {
    cfg.validate()?;
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(GeometryError::Invariant { rule: "h_target > 0".into() });
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(GeometryError::Invariant { rule: "grading >= 1".into() });
    }
    if h_target > cfg.r1 {
        return Err(GeometryError::Invariant { rule: "h_target <= r1".into() });
    }
    let h_if = h_target / grading;
    let size = size_field(cfg, h_target, h_if);
    let h_min = size.min_size();
    if h_min < 1e-6 * cfg.r1 {
        return Err(GeometryError::Refinement("local size below 1e-6 r1".into()));
    }

    let curves = curve_list(cfg);
    let pieces = discretize_curves(cfg, &curves, &size, h_min);

    // Constraint vertices, deduplicated by exact coordinates.
    let mut verts: Vec<Point2> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut add_vertex = |p: Point2, verts: &mut Vec<Point2>| -> usize {
        *index.entry((p.x.to_bits(), p.y.to_bits())).or_insert_with(|| {
            verts.push(p);
            verts.len() - 1
        })
    };
    let mut seg_curve: Vec<(usize, usize, usize)> = Vec::new();
    for piece in &pieces {
        let ids: Vec<usize> = piece.points.iter().map(|&p| add_vertex(p, &mut verts)).collect();
        let n = ids.len();
        let segs = if piece.closed { n } else { n - 1 };
        for i in 0..segs {
            let (a, b) = (ids[i], ids[(i + 1) % n]);
            if a != b {
                seg_curve.push((a, b, piece.curve));
            }
        }
    }
    let n_constraint = verts.len();

    // Interior seeds.
    let mut grid = HashGrid::new(2.0 * h_min);
    for (i, p) in verts.iter().enumerate() {
        grid.insert(*p, i);
    }
    for cand in seed_candidates(cfg, &size, h_min, h_target) {
        let hp = size.at(cand);
        if cand.norm() > cfg.r_out - 0.5 * hp {
            continue;
        }
        if curves.iter().any(|c| c.kind.distance(cand) < 0.5 * hp) {
            continue;
        }
        if grid.any_within(cand, 0.75 * hp, &verts) {
            continue;
        }
        let id = verts.len();
        verts.push(cand);
        grid.insert(cand, id);
    }

    let spade_pts: Vec<spade::Point2<f64>> = verts.iter().map(|p| spade::Point2::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = seg_curve.iter().map(|&(a, b, _)| [a, b]).collect();
    let mut conflicts = 0usize;
    let mut cdt = ConstrainedDelaunayTriangulation::<spade::Point2<f64>>::try_bulk_load_cdt(spade_pts, edges, |_| conflicts += 1)
        .map_err(|e| GeometryError::Meshing(format!("triangulation failed: {e:?}")))?;
    if conflicts > 0 {
        return Err(GeometryError::Meshing(format!("{conflicts} crossing constraint segments")));
    }
    if cdt.num_vertices() != verts.len() {
        return Err(GeometryError::Meshing("duplicate seed vertices".into()));
    }
    let min_area = 0.1 * 0.25 * 3f64.sqrt() * h_min * h_min;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
        .with_min_required_area(min_area)
        .with_max_additional_vertices(verts.len() * 4);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(GeometryError::Meshing("refinement did not converge".into()));
    }

    let mut nodes: Vec<Point2> = cdt.vertices().map(|v| Point2::new(v.position().x, v.position().y)).collect();
    let mut elements = Vec::with_capacity(cdt.num_inner_faces());
    // The truncation polygon is the convex hull, so every inner face belongs
    // to the domain.
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        elements.push([vs[0].fix().index(), vs[1].fix().index(), vs[2].fix().index()]);
    }

    // Attribute constraint edges (possibly split by refinement) to curves.
    let seg_index = SegmentIndex::new(&verts, &seg_curve, 4.0 * h_min);
    let mut tagged = Vec::new();
    let mut on_curve: Vec<Option<usize>> = vec![None; nodes.len()];
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [va, vb] = e.vertices();
        let (a, b) = (va.fix().index(), vb.fix().index());
        let curve = if a < n_constraint && b < n_constraint {
            seg_index.lookup_exact(a, b)
        } else {
            None
        }
        .or_else(|| seg_index.lookup_point(nodes[a].lerp(nodes[b], 0.5)))
        .ok_or_else(|| GeometryError::Meshing("constraint edge without curve".into()))?;
        tagged.push(TaggedEdge { nodes: [a, b], curve });
        for v in [a, b] {
            if v >= n_constraint {
                on_curve[v] = Some(curve);
            }
        }
    }
    for (v, c) in on_curve.iter().enumerate() {
        if let Some(c) = c {
            nodes[v] = curves[*c].kind.project(nodes[v]);
        }
    }
    tagged.sort_by_key(|e| (e.curve, e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])));
    for e in &mut tagged {
        e.nodes = [e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])];
    }

    let mut mesh = TriMesh { nodes, elements, tags: Vec::new(), edges: tagged, curves };
    mesh.tags = (0..mesh.num_elements()).map(|e| region_of(mesh.barycenter(e), cfg)).collect();
    mesh.check()?;
    Ok(mesh)
}

fn size_field(cfg: &GeometryConfig, h_target: f64, h_if: f64) -> SizeField {
    let mut radial = vec![(cfg.r1, h_if)];
    let mut features = Vec::new();
    match &cfg.slab {
        None => {
            radial.push((cfg.r2, h_if));
            radial.push((cfg.r3, (h_if * cfg.r3 / cfg.r2).min(h_target)));
        }
        Some(s) => {
            radial.push((cfg.r3, (2.0 * h_if).min(h_target)));
            features.push((CurveKind::Wedge(s.wedge), h_if));
            let hs = h_if.min(s.half_width / 2.0);
            let c = s.corners();
            for i in 0..4 {
                features.push((CurveKind::Segment { a: c[i], b: c[(i + 1) % 4] }, hs));
            }
        }
    }
    let base = SizeField { h_max: h_target, features: features.clone(), radial: radial.clone() };
    for inc in &cfg.inclusions {
        let hc = base.at(inc.center).min(TAU * inc.radius / INCLUSION_SEGMENTS);
        features.push((CurveKind::Circle { center: inc.center, radius: inc.radius }, hc));
    }
    SizeField { h_max: h_target, features, radial }
}

fn curve_list(cfg: &GeometryConfig) -> Vec<CurveInfo> {
    let circle = |name: String, r: f64| CurveInfo { name, kind: CurveKind::Circle { center: Point2::ORIGIN, radius: r } };
    let mut v = vec![circle("outer".into(), cfg.r_out), circle("r1".into(), cfg.r1)];
    match &cfg.slab {
        None => v.push(circle("r2".into(), cfg.r2)),
        Some(s) => v.push(CurveInfo { name: "r2".into(), kind: CurveKind::Wedge(s.wedge) }),
    }
    v.push(circle("r3".into(), cfg.r3));
    for &r in &cfg.extra_circles {
        if !v.iter().any(|c| c.kind.is_circle_at_origin(r)) {
            v.push(circle(format!("circle:{r}"), r));
        }
    }
    for (i, inc) in cfg.inclusions.iter().enumerate() {
        v.push(CurveInfo { name: format!("inclusion:{i}"), kind: CurveKind::Circle { center: inc.center, radius: inc.radius } });
    }
    if let Some(s) = &cfg.slab {
        let c = s.corners();
        for i in 0..4 {
            v.push(CurveInfo { name: format!("slab:{i}"), kind: CurveKind::Segment { a: c[i], b: c[(i + 1) % 4] } });
        }
    }
    v
}

struct Piece {
    curve: usize,
    points: Vec<Point2>,
    closed: bool,
}

/// Intersections of circle `(c, rho)` with the origin circle of radius `big_r`.
fn circle_intersections(c: Point2, rho: f64, big_r: f64) -> Vec<Point2> {
    let d = c.norm();
    if d == 0.0 || d + rho <= big_r || (d - rho).abs() >= big_r {
        return Vec::new();
    }
    let a = (big_r * big_r - rho * rho + d * d) / (2.0 * d);
    let h2 = big_r * big_r - a * a;
    if h2 <= 0.0 {
        return Vec::new();
    }
    let h = h2.sqrt();
    let u = c * (1.0 / d);
    let base = u * a;
    vec![base + u.perp() * h, base - u.perp() * h]
}

fn discretize_curves(cfg: &GeometryConfig, curves: &[CurveInfo], size: &SizeField, h_min: f64) -> Vec<Piece> {
    // forced vertices on origin circles (indexed by curve)
    let mut forced: HashMap<usize, Vec<Point2>> = HashMap::new();
    let mut pieces = Vec::new();
    for (ci, curve) in curves.iter().enumerate() {
        let Some(k) = curve.name.strip_prefix("inclusion:") else { continue };
        let inc = &cfg.inclusions[k.parse::<usize>().expect("inclusion index")];
        let (lo, hi) = cfg.host_bounds(inc.host).expect("validated host");
        let mut cuts: Vec<(f64, Point2)> = Vec::new();
        for bound in [lo, hi] {
            if bound <= 0.0 {
                continue;
            }
            let pts = circle_intersections(inc.center, inc.radius, bound);
            if pts.is_empty() {
                continue;
            }
            let host_curve = curves
                .iter()
                .position(|c| c.kind.is_circle_at_origin(bound))
                .expect("host boundary is resolved");
            for p in pts {
                forced.entry(host_curve).or_default().push(p);
                cuts.push(((p - inc.center).angle(), p));
            }
        }
        let inside = |p: Point2| {
            let r = p.norm();
            r > lo && r < hi
        };
        if cuts.is_empty() {
            let pts = discretize_closed_circle(inc.center, inc.radius, &[], size, h_min);
            pieces.push(Piece { curve: ci, points: pts, closed: true });
            continue;
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = cuts.len();
        for i in 0..n {
            let (ta, pa) = cuts[i];
            let (mut tb, pb) = cuts[(i + 1) % n];
            if tb <= ta {
                tb += TAU;
            }
            let mid = inc.center + Point2::from_polar(inc.radius, 0.5 * (ta + tb));
            if !inside(mid) {
                continue;
            }
            let mut pts = vec![pa];
            pts.extend(subdivide_arc(inc.center, inc.radius, ta, tb, size, h_min));
            pts.push(pb);
            pieces.push(Piece { curve: ci, points: pts, closed: false });
        }
    }
    for (ci, curve) in curves.iter().enumerate() {
        match curve.kind {
            CurveKind::Circle { center, radius } if !curve.name.starts_with("inclusion:") => {
                let f = forced.get(&ci).cloned().unwrap_or_default();
                let pts = discretize_closed_circle(center, radius, &f, size, h_min);
                pieces.push(Piece { curve: ci, points: pts, closed: true });
            }
            CurveKind::Wedge(w) => {
                let pts = discretize_param(|t| w.point(t), -PI, PI, size, h_min, true);
                pieces.push(Piece { curve: ci, points: pts, closed: true });
            }
            CurveKind::Segment { a, b } => {
                let mut pts = vec![a];
                pts.extend(discretize_param(|t| a.lerp(b, t), 0.0, 1.0, size, h_min, false));
                pts.push(b);
                pieces.push(Piece { curve: ci, points: pts, closed: false });
            }
            _ => {}
        }
    }
    pieces
}

/// Interior points of a parametrised curve on `(t0, t1)`, spaced by the size
/// field. With `closed`, the start point is included and the end omitted.
fn discretize_param(f: impl Fn(f64) -> Point2, t0: f64, t1: f64, size: &SizeField, h_min: f64, closed: bool) -> Vec<Point2> {
    // approximate length first to pick a sampling density
    let mut len = 0.0;
    let coarse = 256;
    let mut prev = f(t0);
    for i in 1..=coarse {
        let p = f(t0 + (t1 - t0) * i as f64 / coarse as f64);
        len += prev.dist(p);
        prev = p;
    }
    let m = ((8.0 * len / h_min).ceil() as usize).clamp(64, 2_000_000);
    let mut cum = vec![0.0; m + 1];
    let mut prev = f(t0);
    let mut prev_w = 1.0 / size.at(prev);
    for i in 1..=m {
        let p = f(t0 + (t1 - t0) * i as f64 / m as f64);
        let w = 1.0 / size.at(p);
        cum[i] = cum[i - 1] + 0.5 * (w + prev_w) * prev.dist(p);
        prev = p;
        prev_w = w;
    }
    let total = cum[m];
    let min_n = if closed { 8 } else { 1 };
    let n = (total.round() as usize).max(min_n);
    let mut out = Vec::with_capacity(n);
    if closed {
        out.push(f(t0));
    }
    let mut j = 0;
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        let t = t0 + (t1 - t0) * (j as f64 + frac) / m as f64;
        out.push(f(t));
    }
    out
}

fn subdivide_arc(center: Point2, radius: f64, ta: f64, tb: f64, size: &SizeField, h_min: f64) -> Vec<Point2> {
    discretize_param(|t| center + Point2::from_polar(radius, t), ta, tb, size, h_min, false)
}

fn discretize_closed_circle(center: Point2, radius: f64, forced: &[Point2], size: &SizeField, h_min: f64) -> Vec<Point2> {
    let on = |t: f64| center + Point2::from_polar(radius, t);
    if forced.is_empty() {
        return discretize_param(on, 0.0, TAU, size, h_min, true);
    }
    let mut f: Vec<(f64, Point2)> = forced.iter().map(|&p| ((p - center).angle(), p)).collect();
    f.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let n = f.len();
    for i in 0..n {
        let (ta, pa) = f[i];
        let mut tb = f[(i + 1) % n].0;
        if tb <= ta {
            tb += TAU;
        }
        out.push(pa);
        out.extend(subdivide_arc(center, radius, ta, tb, size, h_min));
    }
    out
}

/// Candidate interior points in acceptance-priority order.
fn seed_candidates(cfg: &GeometryConfig, size: &SizeField, h_min: f64, h_target: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    // concentric rings around inclusions
    for inc in &cfg.inclusions {
        let hc = size.at(inc.center + Point2::new(inc.radius, 0.0));
        let reach = inc.radius + (h_target - hc).max(0.0) / GROWTH;
        let radii = ring_radii(inc.radius, reach, |d| hc + GROWTH * (d - inc.radius).abs(), false)
            .into_iter()
            .chain(ring_radii(0.0, inc.radius, |d| hc + GROWTH * (inc.radius - d), true));
        for (k, d) in radii.enumerate() {
            push_ring(&mut out, inc.center, d, k, |p| hc + GROWTH * ((p - inc.center).norm() - inc.radius).abs(), size);
        }
    }
    // origin-centred rings between resolved circles
    let mut stops: Vec<f64> = vec![0.0, cfg.r1, cfg.r3, cfg.r_out];
    if cfg.slab.is_none() {
        stops.push(cfg.r2);
    }
    stops.extend(cfg.extra_circles.iter().copied());
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut k = 0;
    for w in stops.windows(2) {
        for r in ring_radii(w[0], w[1], |r| size.radial_at(r), w[0] == 0.0) {
            push_ring(&mut out, Point2::ORIGIN, r, k, |p| size.radial_at(p.norm()), size);
            k += 1;
        }
    }
    out.push(Point2::ORIGIN);
    // lattice fill, finest level first
    let mut a = h_min;
    while a < 1.5 * h_target {
        let hi = a * 1.5;
        let reach = cfg.r_out;
        let ny = (2.0 * reach / (a * 3f64.sqrt() / 2.0)).ceil() as i64;
        let nx = (2.0 * reach / a).ceil() as i64;
        if (nx as f64) * (ny as f64) > 4.0e6 {
            // restrict fine levels to the neighbourhood of small features
            for (c, hf) in &size.features {
                if *hf >= hi {
                    continue;
                }
                let d = (hi - hf) / GROWTH;
                let (lo_p, hi_p) = feature_bbox(c, d);
                lattice(&mut out, lo_p, hi_p, a, |p| size.at(p) >= a && size.at(p) < hi);
            }
        } else {
            lattice(&mut out, Point2::new(-reach, -reach), Point2::new(reach, reach), a, |p| {
                let s = size.at(p);
                s >= a && s < hi && p.norm() < reach
            });
        }
        a = hi;
    }
    out
}

fn feature_bbox(c: &CurveKind, d: f64) -> (Point2, Point2) {
    match *c {
        CurveKind::Circle { center, radius } => {
            let r = radius + d;
            (center - Point2::new(r, r), center + Point2::new(r, r))
        }
        CurveKind::Wedge(w) => {
            let r = w.outer + d;
            (Point2::new(-r, -r), Point2::new(r, r))
        }
        CurveKind::Segment { a, b } => (
            Point2::new(a.x.min(b.x) - d, a.y.min(b.y) - d),
            Point2::new(a.x.max(b.x) + d, a.y.max(b.y) + d),
        ),
    }
}

fn lattice(out: &mut Vec<Point2>, lo: Point2, hi: Point2, a: f64, keep: impl Fn(Point2) -> bool) {
    let dy = a * 3f64.sqrt() / 2.0;
    let j0 = (lo.y / dy).floor() as i64;
    let j1 = (hi.y / dy).ceil() as i64;
    let i0 = (lo.x / a).floor() as i64 - 1;
    let i1 = (hi.x / a).ceil() as i64 + 1;
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * a } else { 0.0 };
        for i in i0..=i1 {
            let p = Point2::new(i as f64 * a + shift, j as f64 * dy);
            if keep(p) {
                out.push(p);
            }
        }
    }
}

/// Radii strictly inside `(a, b)` spaced according to `h(r)`.
fn ring_radii(a: f64, b: f64, h: impl Fn(f64) -> f64, from_center: bool) -> Vec<f64> {
    let m = 512;
    let mut cum = vec![0.0; m + 1];
    for i in 1..=m {
        let r0 = a + (b - a) * (i - 1) as f64 / m as f64;
        let r1 = a + (b - a) * i as f64 / m as f64;
        cum[i] = cum[i - 1] + 0.5 * (1.0 / h(r0) + 1.0 / h(r1)) * (r1 - r0);
    }
    let total = cum[m];
    let n = total.round().max(1.0) as usize;
    let mut out = Vec::new();
    let mut j = 0;
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(a + (b - a) * (j as f64 + frac) / m as f64);
    }
    if from_center {
        // rings too close to the centre are replaced by the centre point
        out.retain(|&r| r > 0.5 * h(0.0));
    }
    out
}

fn push_ring(out: &mut Vec<Point2>, center: Point2, r: f64, k: usize, own: impl Fn(Point2) -> f64, size: &SizeField) {
    let h = own(center + Point2::new(r, 0.0));
    let n = ((TAU * r / h).round() as usize).max(6);
    let offset = if k % 2 == 1 { PI / n as f64 } else { 0.0 };
    for i in 0..n {
        let p = center + Point2::from_polar(r, offset + TAU * i as f64 / n as f64);
        // skip where another feature asks for a finer size
        if size.at(p) >= 0.8 * own(p) {
            out.push(p);
        }
    }
}

/// Uniform bucket grid for proximity queries during seeding.
struct HashGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl HashGrid {
    fn new(cell: f64) -> Self {
        Self { cell, buckets: HashMap::new() }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point2, id: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    fn any_within(&self, p: Point2, r: f64, pts: &[Point2]) -> bool {
        let (kx, ky) = self.key(p);
        let s = (r / self.cell).ceil() as i64;
        let r2 = r * r;
        for dx in -s..=s {
            for dy in -s..=s {
                if let Some(b) = self.buckets.get(&(kx + dx, ky + dy)) {
                    if b.iter().any(|&i| (pts[i] - p).norm_sq() < r2) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Lookup from points on original constraint segments to their curve.
struct SegmentIndex<'a> {
    verts: &'a [Point2],
    segs: &'a [(usize, usize, usize)],
    exact: HashMap<(usize, usize), usize>,
    grid: HashMap<(i64, i64), Vec<usize>>,
    cell: f64,
}

impl<'a> SegmentIndex<'a> {
    fn new(verts: &'a [Point2], segs: &'a [(usize, usize, usize)], cell: f64) -> Self {
        let mut exact = HashMap::new();
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (s, &(a, b, c)) in segs.iter().enumerate() {
            exact.insert((a.min(b), a.max(b)), c);
            let (pa, pb) = (verts[a], verts[b]);
            let (x0, x1) = ((pa.x.min(pb.x) / cell).floor() as i64, (pa.x.max(pb.x) / cell).floor() as i64);
            let (y0, y1) = ((pa.y.min(pb.y) / cell).floor() as i64, (pa.y.max(pb.y) / cell).floor() as i64);
            for i in x0..=x1 {
                for j in y0..=y1 {
                    grid.entry((i, j)).or_default().push(s);
                }
            }
        }
        Self { verts, segs, exact, grid, cell }
    }

    fn lookup_exact(&self, a: usize, b: usize) -> Option<usize> {
        self.exact.get(&(a.min(b), a.max(b))).copied()
    }

    fn lookup_point(&self, p: Point2) -> Option<usize> {
        let k = ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64);
        let mut best: Option<(f64, usize)> = None;
        for &s in self.grid.get(&k)? {
            let (a, b, c) = self.segs[s];
            let (pa, pb) = (self.verts[a], self.verts[b]);
            let ab = pb - pa;
            let t = (p - pa).dot(ab) / ab.norm_sq();
            if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                continue;
            }
            let d = (pa + ab * t).dist(p);
            if d <= 1e-9 * ab.norm().max(1e-300) && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        best.map(|b| b.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GeometryConfig {
        GeometryConfig::circular(1.0, 2.0, 5.0, 6.0)
    }

    #[test]
    fn interface_circles_are_resolved() {
        let mesh = build_mesh(&cfg(), 0.2, 2.0).unwrap();
        for r in [1.0, 2.0, 4.0, 6.0] {
            let c = mesh.circle_curve(r).expect("circle curve");
            let nodes = mesh.circle_nodes_sorted(c);
            assert!(nodes.len() >= 8);
            for n in nodes {
                assert!((mesh.nodes[n].norm() - r).abs() < 1e-12 * r, "node off circle {r}");
            }
        }
        assert!(mesh.min_angle() >= 20.0, "min angle {}", mesh.min_angle());
    }

    #[test]
    fn no_inclusion_tags_without_objects() {
        let mesh = build_mesh(&cfg(), 0.2, 1.0).unwrap();
        assert!(!mesh.has_tag(RegionTag::InclusionA));
        assert!(!mesh.has_tag(RegionTag::InclusionB));
    }

    #[test]
    fn tags_match_region_lookup() {
        let mut c = cfg();
        c.r0 = 0.05;
        let x1 = c.x1;
        let c = c.with_inclusion(RegionTag::InclusionA, x1, 0.05, RegionTag::CoreR1);
        let mesh = build_mesh(&c, 0.2, 2.0).unwrap();
        for e in 0..mesh.num_elements() {
            assert_eq!(mesh.tags[e], region_of(mesh.barycenter(e), &c));
        }
        let area = mesh.tag_area(RegionTag::InclusionA);
        // half disk minus the lens-shaped sliver outside the core
        assert!(area > 0.0 && area < PI * 0.05 * 0.05 * 0.6, "area {area}");
    }
}
