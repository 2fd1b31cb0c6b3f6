//! Point location by a uniform bucket grid over element bounding boxes.

use super::mesh::TriMesh;
use super::Point2;

/// Barycentric tolerance for accepting a containing element.
const BARY_TOL: f64 = 1e-10;

/// Element locator built once per mesh.
#[derive(Clone, Debug)]
pub struct Locator {
    lo: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    /// Radius up to which points outside the polygonal boundary are snapped.
    r_clamp: f64,
}

impl Locator {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let ne = mesh.num_elements().max(1) as f64;
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let cell = span / ne.sqrt().max(1.0);
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for e in 0..mesh.num_elements() {
            let pts = mesh.element_points(e);
            let (mut a, mut b) = (pts[0], pts[0]);
            for p in &pts[1..] {
                a = Point2::new(a.x.min(p.x), a.y.min(p.y));
                b = Point2::new(b.x.max(p.x), b.y.max(p.y));
            }
            let (i0, j0) = cell_of(lo, cell, nx, ny, a);
            let (i1, j1) = cell_of(lo, cell, nx, ny, b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(e as u32);
                }
            }
        }
        let r_clamp = match mesh.curves.first().map(|c| c.kind) {
            Some(super::CurveKind::Circle { radius, .. }) => radius * (1.0 + 1e-12),
            _ => 0.0,
        };
        Self { lo, cell, nx, ny, buckets, r_clamp }
    }

    /// Element containing `p` and its barycentric coordinates.
    ///
    /// Points between the polygonal boundary and the truncation circle are
    /// assigned to the nearest boundary element with clamped coordinates.
    pub fn locate(&self, mesh: &TriMesh, p: Point2) -> Option<(usize, [f64; 3])> {
        if !p.is_finite() {
            return None;
        }
        let (i, j) = cell_of(self.lo, self.cell, self.nx, self.ny, p);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &e in &self.buckets[j * self.nx + i] {
            let e = e as usize;
            let l = barycentric(mesh, e, p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= -BARY_TOL {
                return Some((e, l));
            }
            if best.is_none_or(|(w, _, _)| worst > w) {
                best = Some((worst, e, l));
            }
        }
        if p.norm() > self.r_clamp {
            return None;
        }
        // The bucket may not see the nearest element; widen the search.
        let (_, e, l) = self.nearest(mesh, p, i, j).or(best.map(|b| (b.0, b.1, b.2)))?;
        Some((e, clamp(l)))
    }

    fn nearest(&self, mesh: &TriMesh, p: Point2, i: usize, j: usize) -> Option<(f64, usize, [f64; 3])> {
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        let (i0, i1) = (i.saturating_sub(1), (i + 1).min(self.nx - 1));
        let (j0, j1) = (j.saturating_sub(1), (j + 1).min(self.ny - 1));
        for jj in j0..=j1 {
            for ii in i0..=i1 {
                for &e in &self.buckets[jj * self.nx + ii] {
                    let e = e as usize;
                    let l = barycentric(mesh, e, p);
                    let worst = l[0].min(l[1]).min(l[2]);
                    if best.is_none_or(|(w, _, _)| worst > w) {
                        best = Some((worst, e, l));
                    }
                }
            }
        }
        best
    }
}

fn cell_of(lo: Point2, cell: f64, nx: usize, ny: usize, p: Point2) -> (usize, usize) {
    let i = ((p.x - lo.x) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
    let j = ((p.y - lo.y) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
    (i, j)
}

pub fn barycentric(mesh: &TriMesh, e: usize, p: Point2) -> [f64; 3] {
    let [a, b, c] = mesh.element_points(e);
    let det = (b - a).cross(c - a);
    let l1 = (p - a).cross(c - a) / det;
    let l2 = (b - a).cross(p - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn clamp(l: [f64; 3]) -> [f64; 3] {
    let c = [l[0].max(0.0), l[1].max(0.0), l[2].max(0.0)];
    let s = c[0] + c[1] + c[2];
    [c[0] / s, c[1] / s, c[2] / s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, GeometryConfig};

    #[test]
    fn barycenters_locate_to_their_element() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 6.0);
        let m = build_mesh(&cfg, 0.4, 1.0).unwrap();
        let loc = Locator::new(&m);
        for e in (0..m.num_elements()).step_by(7) {
            let (f, l) = loc.locate(&m, m.barycenter(e)).unwrap();
            assert_eq!(f, e);
            assert!(l.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-9));
        }
        assert!(loc.locate(&m, Point2::new(6.0, 0.0)).is_some());
        assert!(loc.locate(&m, Point2::new(7.0, 0.0)).is_none());
    }
}
