//! Interface curves resolved by the mesh.

use super::{Point2, WedgeBoundary};

/// Shape of a resolved curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveKind {
    Circle { center: Point2, radius: f64 },
    Wedge(WedgeBoundary),
    Segment { a: Point2, b: Point2 },
}

/// A named curve of the mesh; edges reference curves by index.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveInfo {
    pub name: String,
    pub kind: CurveKind,
}

impl CurveKind {
    /// Nearest point on the curve along the radial direction (circles and
    /// wedge) or orthogonally (segments).
    pub fn project(&self, p: Point2) -> Point2 {
        match *self {
            CurveKind::Circle { center, radius } => {
                let d = p - center;
                let n = d.norm();
                if n == 0.0 {
                    return center + Point2::new(radius, 0.0);
                }
                center + d * (radius / n)
            }
            CurveKind::Wedge(w) => w.point(p.angle()),
            CurveKind::Segment { a, b } => {
                let ab = b - a;
                let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
                a + ab * t
            }
        }
    }

    /// Distance estimate used by the size function and seeding.
    pub fn distance(&self, p: Point2) -> f64 {
        match *self {
            CurveKind::Circle { center, radius } => (p.dist(center) - radius).abs(),
            CurveKind::Wedge(w) => {
                // radial gap scaled by the boundary slope
                let th = p.angle();
                let (lr, dlr) = w.log_radius(th);
                let rho = lr.exp();
                (p.norm() - rho).abs() / (1.0 + dlr * dlr).sqrt()
            }
            CurveKind::Segment { .. } => p.dist(self.project(p)),
        }
    }

    pub fn is_circle_at_origin(&self, r: f64) -> bool {
        matches!(*self, CurveKind::Circle { center, radius }
            if center == Point2::ORIGIN && (radius - r).abs() <= 1e-12 * r.max(1.0))
    }
}
