//! Planar geometry of the cloaking layouts: points, region tags, the
//! geometry configuration with its validation rules, and region lookup.
//!
//! Meshing lives in [`mesh`], refinement in [`refine`] and point location in
//! [`locate`].

pub mod curve;
pub mod locate;
pub mod mesh;
pub mod refine;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

pub use curve::{CurveInfo, CurveKind};
pub use locate::Locator;
pub use mesh::{build_mesh, TaggedEdge, TriMesh};
pub use refine::{refine_near, refine_uniform};

/// Relative tolerance used for interface tie-breaks (scaled by `r2`).
pub const EPS_GEO_REL: f64 = 1e-12;

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Polar angle in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by a right angle.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Material region label carried by every mesh element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionTag {
    Exterior,
    ShellR3R2,
    AnnulusR2R1,
    CoreR1,
    InclusionA,
    InclusionB,
    Slab,
    SourceSupport,
}

impl RegionTag {
    pub const ALL: [RegionTag; 8] = [
        RegionTag::Exterior,
        RegionTag::ShellR3R2,
        RegionTag::AnnulusR2R1,
        RegionTag::CoreR1,
        RegionTag::InclusionA,
        RegionTag::InclusionB,
        RegionTag::Slab,
        RegionTag::SourceSupport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::Exterior => "EXTERIOR",
            RegionTag::ShellR3R2 => "SHELL_R3_R2",
            RegionTag::AnnulusR2R1 => "ANNULUS_R2_R1",
            RegionTag::CoreR1 => "CORE_R1",
            RegionTag::InclusionA => "INCLUSION_A",
            RegionTag::InclusionB => "INCLUSION_B",
            RegionTag::Slab => "SLAB",
            RegionTag::SourceSupport => "SOURCE_SUPPORT",
        }
    }

    /// Small integer code used as VTK cell data.
    pub fn code(self) -> u8 {
        match self {
            RegionTag::Exterior => 0,
            RegionTag::ShellR3R2 => 1,
            RegionTag::AnnulusR2R1 => 2,
            RegionTag::CoreR1 => 3,
            RegionTag::InclusionA => 4,
            RegionTag::InclusionB => 5,
            RegionTag::Slab => 6,
            RegionTag::SourceSupport => 7,
        }
    }

    pub fn from_name(s: &str) -> Option<RegionTag> {
        RegionTag::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s))
    }

    /// Tags produced by the radial decomposition alone.
    pub fn is_base(self) -> bool {
        matches!(
            self,
            RegionTag::Exterior | RegionTag::ShellR3R2 | RegionTag::AnnulusR2R1 | RegionTag::CoreR1
        )
    }
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A disk-shaped sub-region clipped to its host base region.
#[derive(Clone, Debug, PartialEq)]
pub struct Inclusion {
    pub tag: RegionTag,
    pub center: Point2,
    pub radius: f64,
    /// Base region the disk is intersected with.
    pub host: RegionTag,
}

/// Star-shaped boundary `r = rho(theta)` equal to `outer` except in a smooth
/// notch around `center_angle` where it dips to `notch`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeBoundary {
    pub outer: f64,
    pub notch: f64,
    pub center_angle: f64,
    /// Half-angle of the plateau where `rho == notch`.
    pub flat_half_angle: f64,
    /// Half-angle beyond which `rho == outer`.
    pub blend_half_angle: f64,
}

impl WedgeBoundary {
    fn offset(&self, theta: f64) -> f64 {
        let mut d = theta - self.center_angle;
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        d
    }

    /// Blend weight in `[0, 1]` (1 on the plateau) and its angular derivative.
    fn blend(&self, theta: f64) -> (f64, f64) {
        let d = self.offset(theta);
        let a = d.abs();
        if a <= self.flat_half_angle {
            return (1.0, 0.0);
        }
        if a >= self.blend_half_angle {
            return (0.0, 0.0);
        }
        let w = self.blend_half_angle - self.flat_half_angle;
        let s = (self.blend_half_angle - a) / w;
        let b = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let db_ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        // ds/dtheta = -sign(d)/w
        (b, -db_ds * d.signum() / w)
    }

    /// Logarithm of the boundary radius and its angular derivative.
    pub fn log_radius(&self, theta: f64) -> (f64, f64) {
        let (b, db) = self.blend(theta);
        let span = self.outer.ln() - self.notch.ln();
        (self.outer.ln() - span * b, -span * db)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.log_radius(theta).0.exp()
    }

    pub fn point(&self, theta: f64) -> Point2 {
        Point2::from_polar(self.radius(theta), theta)
    }
}

/// Slab-scenario geometry: a notched plasmonic region and a rectangular object
/// `{|x| < half_width, y_lo <= y < y_hi}` sitting inside the notch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlabGeometry {
    pub half_width: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub wedge: WedgeBoundary,
}

impl SlabGeometry {
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        p.x.abs() <= self.half_width + eps && p.y >= self.y_lo - eps && p.y <= self.y_hi + eps
    }

    pub fn corners(&self) -> [Point2; 4] {
        let s = self.half_width;
        [
            Point2::new(-s, self.y_lo),
            Point2::new(s, self.y_lo),
            Point2::new(s, self.y_hi),
            Point2::new(-s, self.y_hi),
        ]
    }
}

/// Errors raised while validating geometry or building meshes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("geometry invariant violated: {rule}")]
    Invariant { rule: String },
    #[error("inclusions {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("inclusion {index} cannot be resolved: {reason}")]
    Unresolvable { index: usize, reason: String },
    #[error("refinement rejected: {0}")]
    Refinement(String),
    #[error("mesh generation failed: {0}")]
    Meshing(String),
}

fn invariant(rule: impl Into<String>) -> GeometryError {
    GeometryError::Invariant { rule: rule.into() }
}

/// Radii, anchor points and sub-regions of one cloaking layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    /// Object radius (0 means no object).
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// Outer radius of the shell; `r2^2 / r1` for the circular layouts.
    pub r3: f64,
    /// Outer radius of the admissible source support.
    pub source_outer: f64,
    /// Truncation radius of the computational disk.
    pub r_out: f64,
    pub x1: Point2,
    pub x2: Point2,
    pub x3: Point2,
    pub inclusions: Vec<Inclusion>,
    /// Additional origin-centred circles resolved by the mesh (source ring,
    /// observation radius).
    pub extra_circles: Vec<f64>,
    pub slab: Option<SlabGeometry>,
}

impl GeometryConfig {
    /// Circular layout with `r3 = r2^2 / r1` and anchors on the positive x-axis.
    pub fn circular(r1: f64, r2: f64, source_outer: f64, r_out: f64) -> Self {
        let r3 = r2 * r2 / r1;
        Self {
            r0: 0.0,
            r1,
            r2,
            r3,
            source_outer,
            r_out,
            x1: Point2::new(r1, 0.0),
            x2: Point2::new(r2, 0.0),
            x3: Point2::new(r3, 0.0),
            inclusions: Vec::new(),
            extra_circles: Vec::new(),
            slab: None,
        }
    }

    pub fn eps_geo(&self) -> f64 {
        EPS_GEO_REL * self.r2
    }

    pub fn with_inclusion(mut self, tag: RegionTag, center: Point2, radius: f64, host: RegionTag) -> Self {
        self.inclusions.push(Inclusion { tag, center, radius, host });
        self
    }

    pub fn with_circle(mut self, r: f64) -> Self {
        if !self.extra_circles.iter().any(|&c| (c - r).abs() <= 1e-12 * r) {
            self.extra_circles.push(r);
        }
        self
    }

    /// Check the ordering, anchor and resolvability rules.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let vals = [self.r0, self.r1, self.r2, self.r3, self.source_outer, self.r_out];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invariant("all radii finite"));
        }
        if self.r0 < 0.0 || self.r0 >= self.r1 {
            return Err(invariant("0 < r0 < r1"));
        }
        if self.r1 <= 0.0 || self.r1 >= self.r2 {
            return Err(invariant("r1 < r2"));
        }
        if self.r2 >= self.r3 {
            return Err(invariant("r2 < r3"));
        }
        if self.slab.is_none() {
            let expect = self.r2 * self.r2 / self.r1;
            if (self.r3 - expect).abs() > 1e-12 * expect {
                return Err(invariant("r3 = r2^2/r1"));
            }
        }
        if self.r3 >= self.source_outer {
            return Err(invariant("r3 < R0"));
        }
        if self.source_outer >= self.r_out {
            return Err(invariant("R0 < R_out"));
        }
        let tol = 1e-9;
        if self.slab.is_none() {
            if (self.x1.norm() - self.r1).abs() > tol * self.r1 {
                return Err(invariant("|x1| = r1"));
            }
            if (self.x2.norm() - self.r2).abs() > tol * self.r2 {
                return Err(invariant("|x2| = r2"));
            }
            if (self.x3.norm() - self.r3).abs() > tol * self.r3 {
                return Err(invariant("|x3| = r3"));
            }
        }
        let resolvable = (self.r2 - self.r1).min(self.r1) / 2.0;
        if self.r0 >= resolvable {
            return Err(invariant("r0 < min(r2 - r1, r1)/2"));
        }
        for c in &self.extra_circles {
            if !(*c > 0.0 && *c < self.r_out) {
                return Err(invariant("extra circles inside the truncation disk"));
            }
        }
        if let Some(slab) = &self.slab {
            self.validate_slab(slab)?;
        }
        self.validate_inclusions(resolvable)
    }

    fn validate_slab(&self, slab: &SlabGeometry) -> Result<(), GeometryError> {
        let w = &slab.wedge;
        if (w.outer - self.r2).abs() > 1e-12 * self.r2 {
            return Err(invariant("slab wedge outer radius equals r2"));
        }
        if !(w.notch > self.r1 && w.notch < w.outer) {
            return Err(invariant("r1 < notch radius < r2"));
        }
        if !(0.0 < w.flat_half_angle && w.flat_half_angle < w.blend_half_angle && w.blend_half_angle < 1.5) {
            return Err(invariant("0 < flat half-angle < blend half-angle"));
        }
        if !(slab.half_width > 0.0 && slab.half_width < self.r1) {
            return Err(invariant("0 < s < r1"));
        }
        if !(slab.y_lo > w.notch && slab.y_hi > slab.y_lo) {
            return Err(invariant("notch radius < slab bottom < slab top"));
        }
        for c in slab.corners() {
            let th = c.angle();
            if c.norm() <= w.radius(th) || c.norm() >= self.r3 {
                return Err(invariant("slab object inside the notch and inside B_r3"));
            }
            let d = w.offset(th).abs();
            if d > w.flat_half_angle {
                return Err(invariant("slab object within the notch plateau"));
            }
        }
        Ok(())
    }

    fn host_bounds(&self, host: RegionTag) -> Option<(f64, f64)> {
        match host {
            RegionTag::CoreR1 => Some((0.0, self.r1)),
            RegionTag::AnnulusR2R1 => Some((self.r1, self.r2)),
            RegionTag::ShellR3R2 => Some((self.r2, self.r3)),
            RegionTag::Exterior => Some((self.r3, self.r_out)),
            _ => None,
        }
    }

    fn validate_inclusions(&self, resolvable: f64) -> Result<(), GeometryError> {
        let mut circles: Vec<f64> = vec![self.r1, self.r2, self.r3, self.r_out];
        circles.extend(self.extra_circles.iter().copied());
        for (i, inc) in self.inclusions.iter().enumerate() {
            if inc.tag.is_base() {
                return Err(GeometryError::Unresolvable { index: i, reason: "inclusion tag must not be a base region".into() });
            }
            if !(inc.radius > 0.0) || !inc.center.is_finite() {
                return Err(GeometryError::Unresolvable { index: i, reason: "radius must be positive".into() });
            }
            if inc.tag != RegionTag::SourceSupport && inc.radius >= resolvable {
                return Err(invariant("inclusion radius < min(r2 - r1, r1)/2"));
            }
            let (lo, hi) = self
                .host_bounds(inc.host)
                .ok_or_else(|| GeometryError::Unresolvable { index: i, reason: "host must be a base region".into() })?;
            if self.slab.is_some() && inc.host != RegionTag::Exterior {
                return Err(GeometryError::Unresolvable { index: i, reason: "slab layouts accept exterior inclusions only".into() });
            }
            let c = inc.center.norm();
            let (near, far) = (c - inc.radius, c + inc.radius);
            if far <= lo || near >= hi {
                return Err(GeometryError::Unresolvable { index: i, reason: "disk misses its host region".into() });
            }
            if c + inc.radius >= self.r_out {
                return Err(GeometryError::Unresolvable { index: i, reason: "disk reaches the truncation circle".into() });
            }
            for &r in &circles {
                let crosses = near < r && far > r;
                let is_host_boundary = (r - lo).abs() < 1e-14 * r.max(1.0) || (r - hi).abs() < 1e-14 * r.max(1.0);
                if crosses && !is_host_boundary {
                    return Err(GeometryError::Unresolvable { index: i, reason: format!("disk crosses the circle of radius {r}") });
                }
                // Near-tangency would produce slivers.
                let gap = (c - r).abs() - inc.radius;
                if !crosses && gap.abs() < 0.05 * inc.radius && gap != 0.0 {
                    return Err(GeometryError::Unresolvable { index: i, reason: format!("disk nearly tangent to the circle of radius {r}") });
                }
            }
            for (j, other) in self.inclusions.iter().enumerate().skip(i + 1) {
                if inc.center.dist(other.center) <= inc.radius + other.radius {
                    return Err(GeometryError::Overlap(i, j));
                }
            }
        }
        Ok(())
    }

    /// Region by radius only (plus the slab decomposition when present).
    pub fn base_region(&self, p: Point2) -> RegionTag {
        let eps = self.eps_geo();
        let r = p.norm();
        if r <= self.r1 + eps {
            return RegionTag::CoreR1;
        }
        let outer2 = match &self.slab {
            Some(s) => s.wedge.radius(p.angle()),
            None => self.r2,
        };
        if r <= outer2 + eps {
            return RegionTag::AnnulusR2R1;
        }
        if r <= self.r3 + eps {
            return RegionTag::ShellR3R2;
        }
        RegionTag::Exterior
    }
}

/// Region containing `p`. Points within `eps_geo` of an interface belong to
/// the region of smaller radius; inclusion disks count as the inner side of
/// their bounding circle.
pub fn region_of(p: Point2, cfg: &GeometryConfig) -> RegionTag {
    let base = cfg.base_region(p);
    let eps = cfg.eps_geo();
    if base == RegionTag::ShellR3R2 {
        if let Some(s) = &cfg.slab {
            if s.contains(p, eps) {
                return RegionTag::Slab;
            }
        }
    }
    for inc in &cfg.inclusions {
        if inc.host == base && p.dist(inc.center) <= inc.radius + eps {
            return inc.tag;
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GeometryConfig {
        GeometryConfig::circular(1.0, 2.0, 5.0, 7.0)
    }

    #[test]
    fn derived_outer_shell_radius() {
        assert!((cfg().r3 - 4.0).abs() < 1e-15);
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn center_is_core() {
        assert_eq!(region_of(Point2::ORIGIN, &cfg()), RegionTag::CoreR1);
    }

    #[test]
    fn inside_inclusion_at_inner_interface() {
        let mut c = cfg();
        c.r0 = 0.02;
        let x1 = c.x1;
        let c = c.with_inclusion(RegionTag::InclusionA, x1, 0.02, RegionTag::CoreR1);
        let p = c.x1 * (1.0 - c.r0 / (2.0 * c.r1));
        assert_eq!(region_of(p, &c), RegionTag::InclusionA);
        // the outer half of the disk lies in the annulus and is not tagged
        let q = c.x1 * (1.0 + c.r0 / (2.0 * c.r1));
        assert_eq!(region_of(q, &c), RegionTag::AnnulusR2R1);
    }

    #[test]
    fn annulus_midpoint() {
        let p = Point2::from_polar(1.5, 2.0);
        assert_eq!(region_of(p, &cfg()), RegionTag::AnnulusR2R1);
    }

    #[test]
    fn inner_region_wins_on_interfaces() {
        let c = cfg();
        assert_eq!(region_of(Point2::new(1.0, 0.0), &c), RegionTag::CoreR1);
        assert_eq!(region_of(Point2::new(0.0, 2.0), &c), RegionTag::AnnulusR2R1);
        assert_eq!(region_of(Point2::new(-4.0, 0.0), &c), RegionTag::ShellR3R2);
        let just_out = Point2::new(2.0 + 1e-9, 0.0);
        assert_eq!(region_of(just_out, &c), RegionTag::ShellR3R2);
    }

    #[test]
    fn rejects_large_object() {
        let mut c = cfg();
        c.r0 = 0.5;
        assert!(matches!(c.validate(), Err(GeometryError::Invariant { .. })));
        let mut c = cfg();
        c.r0 = 0.5;
        c.r1 = 0.4;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("0 < r0 < r1"), "{err}");
    }

    #[test]
    fn rejects_overlapping_inclusions() {
        let c = cfg()
            .with_inclusion(RegionTag::InclusionA, Point2::new(3.0, 0.0), 0.1, RegionTag::ShellR3R2)
            .with_inclusion(RegionTag::InclusionB, Point2::new(3.15, 0.0), 0.1, RegionTag::ShellR3R2);
        assert_eq!(c.validate(), Err(GeometryError::Overlap(0, 1)));
    }

    #[test]
    fn wedge_boundary_is_smooth_and_bounded() {
        let w = WedgeBoundary { outer: 6.5, notch: 1.8, center_angle: std::f64::consts::FRAC_PI_2, flat_half_angle: 0.15, blend_half_angle: 0.45 };
        for i in 0..400 {
            let th = -3.1 + 6.2 * i as f64 / 399.0;
            let r = w.radius(th);
            assert!(r >= 1.8 - 1e-12 && r <= 6.5 + 1e-12);
            let h = 1e-6;
            let fd = (w.log_radius(th + h).0 - w.log_radius(th - h).0) / (2.0 * h);
            assert!((fd - w.log_radius(th).1).abs() < 1e-5, "theta {th}");
        }
        assert!((w.radius(std::f64::consts::FRAC_PI_2) - 1.8).abs() < 1e-12);
        assert!((w.radius(0.0) - 6.5).abs() < 1e-12);
    }
}
