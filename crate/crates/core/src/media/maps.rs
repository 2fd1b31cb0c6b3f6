//! Invertible planar maps with analytic Jacobians.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::tensor::Mat2;
use super::MediaError;
use crate::geometry::{Point2, WedgeBoundary};

/// Radial reflection in log-radius across a star-shaped boundary.
///
/// With `t = ln r` and `t_b(θ)` the log-radius of the boundary, the map is
/// `t' = t_b + λ(θ)(t_b − t)` where `λ = (ln r_outer − t_b)/(t_b − ln r_inner)`,
/// so `r_inner ↦ r_outer` and the boundary is fixed pointwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRadialReflection {
    pub boundary: WedgeBoundary,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl LogRadialReflection {
    /// `(t_b, t_b', λ, λ')` at angle `th`.
    fn profile(&self, th: f64) -> (f64, f64, f64, f64) {
        let (tb, dtb) = self.boundary.log_radius(th);
        let (l1, l3) = (self.r_inner.ln(), self.r_outer.ln());
        let lam = (l3 - tb) / (tb - l1);
        let dlam = -dtb * (l3 - l1) / ((tb - l1) * (tb - l1));
        (tb, dtb, lam, dlam)
    }
}

/// Planar diffeomorphism.
#[derive(Clone, Debug, PartialEq)]
pub enum Diffeomorphism {
    Identity,
    /// `y = c + R²(x − c)/|x − c|²`.
    Kelvin { center: Point2, radius: f64 },
    /// Principal branch of `z^{1/m}`.
    Power { m: u32 },
    /// `y = factor · x`.
    Scaling { factor: f64 },
    LogRadial(LogRadialReflection),
    /// `outer ∘ inner`.
    Compose { outer: Arc<Diffeomorphism>, inner: Arc<Diffeomorphism> },
    Inverse(Arc<Diffeomorphism>),
}

pub fn kelvin_map(center: Point2, radius: f64) -> Result<Diffeomorphism, MediaError> {
    if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
        return Err(MediaError::Precondition("Kelvin radius must be positive".into()));
    }
    Ok(Diffeomorphism::Kelvin { center, radius })
}

pub fn power_map(m: u32) -> Result<Diffeomorphism, MediaError> {
    if m == 0 {
        return Err(MediaError::Precondition("power map order must be at least 1".into()));
    }
    Ok(Diffeomorphism::Power { m })
}

pub fn compose(outer: Diffeomorphism, inner: Diffeomorphism) -> Diffeomorphism {
    Diffeomorphism::Compose { outer: Arc::new(outer), inner: Arc::new(inner) }
}

impl fmt::Display for Diffeomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffeomorphism::Identity => write!(f, "identity"),
            Diffeomorphism::Kelvin { center, radius } => write!(f, "kelvin(({}, {}), {})", center.x, center.y, radius),
            Diffeomorphism::Power { m } => write!(f, "power({m})"),
            Diffeomorphism::Scaling { factor } => write!(f, "scaling({factor})"),
            Diffeomorphism::LogRadial(l) => write!(f, "log-radial({}, {})", l.r_inner, l.r_outer),
            Diffeomorphism::Compose { outer, inner } => write!(f, "{outer} o {inner}"),
            Diffeomorphism::Inverse(m) => write!(f, "inverse({m})"),
        }
    }
}

fn domain_err(map: &Diffeomorphism, p: Point2) -> MediaError {
    MediaError::Domain { map: map.to_string(), x: p.x, y: p.y }
}

fn to_c(p: Point2) -> Complex64 {
    Complex64::new(p.x, p.y)
}

/// Jacobian of a holomorphic map with derivative `d`.
fn conformal(d: Complex64) -> Mat2 {
    Mat2::new(d.re, -d.im, d.im, d.re)
}

fn kelvin(center: Point2, radius: f64, p: Point2) -> Option<Point2> {
    let d = p - center;
    let n2 = d.norm_sq();
    if !(n2 > 0.0) || !n2.is_finite() {
        return None;
    }
    Some(center + d * (radius * radius / n2))
}

impl Diffeomorphism {
    pub fn forward(&self, p: Point2) -> Result<Point2, MediaError> {
        let out = match self {
            Diffeomorphism::Identity => Some(p),
            Diffeomorphism::Kelvin { center, radius } => kelvin(*center, *radius, p),
            Diffeomorphism::Power { m: 1 } => Some(p),
            Diffeomorphism::Power { m } => {
                if p.norm_sq() == 0.0 || (p.y == 0.0 && p.x < 0.0) {
                    None
                } else {
                    let (r, th) = (p.norm(), p.angle());
                    Some(Point2::from_polar(r.powf(1.0 / *m as f64), th / *m as f64))
                }
            }
            Diffeomorphism::Scaling { factor } => Some(p * *factor),
            Diffeomorphism::LogRadial(l) => {
                let r = p.norm();
                if !(r > 0.0) {
                    None
                } else {
                    let th = p.angle();
                    let (tb, _, lam, _) = l.profile(th);
                    Some(Point2::from_polar((tb + lam * (tb - r.ln())).exp(), th))
                }
            }
            Diffeomorphism::Compose { outer, inner } => return outer.forward(inner.forward(p)?),
            Diffeomorphism::Inverse(m) => return m.inverse(p),
        };
        match out {
            Some(q) if q.is_finite() => Ok(q),
            _ => Err(domain_err(self, p)),
        }
    }

    pub fn inverse(&self, q: Point2) -> Result<Point2, MediaError> {
        let out = match self {
            Diffeomorphism::Identity => Some(q),
            Diffeomorphism::Kelvin { center, radius } => kelvin(*center, *radius, q),
            Diffeomorphism::Power { m: 1 } => Some(q),
            Diffeomorphism::Power { m } => {
                let th = q.angle();
                if q.norm_sq() == 0.0 || th.abs() >= PI / *m as f64 {
                    None
                } else {
                    Some(Point2::from_polar(q.norm().powi(*m as i32), th * *m as f64))
                }
            }
            Diffeomorphism::Scaling { factor } => {
                if *factor == 0.0 {
                    None
                } else {
                    Some(q * (1.0 / factor))
                }
            }
            Diffeomorphism::LogRadial(l) => {
                let r = q.norm();
                if !(r > 0.0) {
                    None
                } else {
                    let th = q.angle();
                    let (tb, _, lam, _) = l.profile(th);
                    Some(Point2::from_polar((tb - (r.ln() - tb) / lam).exp(), th))
                }
            }
            Diffeomorphism::Compose { outer, inner } => return inner.inverse(outer.inverse(q)?),
            Diffeomorphism::Inverse(m) => return m.forward(q),
        };
        match out {
            Some(p) if p.is_finite() => Ok(p),
            _ => Err(domain_err(self, q)),
        }
    }

    /// Jacobian matrix `DT(x)`.
    pub fn jacobian(&self, p: Point2) -> Result<Mat2, MediaError> {
        let out = match self {
            Diffeomorphism::Identity => Mat2::IDENTITY,
            Diffeomorphism::Kelvin { center, radius } => {
                let d = p - *center;
                let n2 = d.norm_sq();
                if !(n2 > 0.0) {
                    return Err(domain_err(self, p));
                }
                let s = radius * radius / n2;
                let (a, b) = (d.x * d.x / n2, d.x * d.y / n2);
                let c = d.y * d.y / n2;
                Mat2::new(s * (1.0 - 2.0 * a), -2.0 * s * b, -2.0 * s * b, s * (1.0 - 2.0 * c))
            }
            Diffeomorphism::Power { m: 1 } => Mat2::IDENTITY,
            Diffeomorphism::Power { m } => {
                let w = self.forward(p)?;
                conformal(to_c(w) / (to_c(p) * *m as f64))
            }
            Diffeomorphism::Scaling { factor } => Mat2::new(*factor, 0.0, 0.0, *factor),
            Diffeomorphism::LogRadial(l) => {
                let r = p.norm();
                if !(r > 0.0) {
                    return Err(domain_err(self, p));
                }
                let th = p.angle();
                let (tb, dtb, lam, dlam) = l.profile(th);
                let t = r.ln();
                let big_r = (tb + lam * (tb - t)).exp();
                let dr = -lam * big_r / r;
                let dth = big_r * (dtb * (1.0 + lam) + dlam * (tb - t));
                let (c, s) = (th.cos(), th.sin());
                let er = [c, s];
                let et = [-s, c];
                let mut m = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = dr * er[i] * er[j] + (dth / r) * er[i] * et[j] + (big_r / r) * et[i] * et[j];
                    }
                }
                Mat2 { m }
            }
            Diffeomorphism::Compose { outer, inner } => {
                let q = inner.forward(p)?;
                outer.jacobian(q)?.mul(&inner.jacobian(p)?)
            }
            Diffeomorphism::Inverse(m) => {
                let x = m.inverse(p)?;
                m.jacobian(x)?.inverse().ok_or_else(|| domain_err(self, p))?
            }
        };
        if out.m.iter().flatten().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(domain_err(self, p))
        }
    }

    /// Central finite-difference Jacobian (verification only).
    pub fn jacobian_fd(&self, p: Point2, h: f64) -> Result<Mat2, MediaError> {
        let fx = (self.forward(p + Point2::new(h, 0.0))? - self.forward(p - Point2::new(h, 0.0))?) * (0.5 / h);
        let fy = (self.forward(p + Point2::new(0.0, h))? - self.forward(p - Point2::new(0.0, h))?) * (0.5 / h);
        Ok(Mat2::new(fx.x, fy.x, fx.y, fy.y))
    }

    pub fn inverted(self) -> Diffeomorphism {
        match self {
            Diffeomorphism::Inverse(m) => (*m).clone(),
            other => Diffeomorphism::Inverse(Arc::new(other)),
        }
    }
}

/// `z^{1/m}` on the principal branch.
pub fn power_value(m: u32, z: Point2) -> Result<Point2, MediaError> {
    power_map(m)?.forward(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<Point2> {
        (0..40).map(|i| Point2::from_polar(0.3 + 0.17 * i as f64, 2.399963 * i as f64 - 3.0)).collect()
    }

    #[test]
    fn kelvin_maps_inner_radius_to_outer() {
        let f = kelvin_map(Point2::ORIGIN, 2.0).unwrap();
        let y = f.forward(Point2::new(1.0, 0.0)).unwrap();
        assert!((y.x - 4.0).abs() < 1e-15 && y.y == 0.0);
        let on = Point2::from_polar(2.0, 0.7);
        assert!(f.forward(on).unwrap().dist(on) < 1e-15);
        assert!(f.forward(Point2::ORIGIN).is_err());
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let wedge = WedgeBoundary { outer: 6.5, notch: 1.8, center_angle: PI / 2.0, flat_half_angle: 0.15, blend_half_angle: 0.45 };
        let maps = [
            kelvin_map(Point2::new(0.2, -0.1), 1.7).unwrap(),
            power_map(3).unwrap(),
            Diffeomorphism::Scaling { factor: 4.0 },
            Diffeomorphism::LogRadial(LogRadialReflection { boundary: wedge, r_inner: 1.0, r_outer: 8.0 }),
            compose(kelvin_map(Point2::ORIGIN, 4.0).unwrap(), kelvin_map(Point2::ORIGIN, 2.0).unwrap()),
            power_map(2).unwrap().inverted(),
        ];
        for m in &maps {
            for p in samples() {
                let Ok(a) = m.jacobian(p) else { continue };
                let Ok(n) = m.jacobian_fd(p, 1e-6 * p.norm().max(1e-3)) else { continue };
                let rel = a.max_abs_diff(&n) / a.max_abs().max(1e-300);
                assert!(rel < 1e-6, "{m} at {p:?}: {rel}");
            }
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let wedge = WedgeBoundary { outer: 6.5, notch: 1.8, center_angle: PI / 2.0, flat_half_angle: 0.15, blend_half_angle: 0.45 };
        let maps = [
            kelvin_map(Point2::ORIGIN, 2.0).unwrap(),
            power_map(4).unwrap(),
            Diffeomorphism::LogRadial(LogRadialReflection { boundary: wedge, r_inner: 1.0, r_outer: 8.0 }),
        ];
        for m in &maps {
            for p in samples() {
                let Ok(q) = m.forward(p) else { continue };
                let back = m.inverse(q).unwrap();
                assert!(back.dist(p) <= 1e-12 * p.norm().max(1.0), "{m}");
            }
        }
    }

    #[test]
    fn power_map_values() {
        assert_eq!(power_value(1, Point2::new(-3.0, 0.5)).unwrap(), Point2::new(-3.0, 0.5));
        let w = power_value(2, Point2::new(4.0, 0.0)).unwrap();
        assert!((w.x - 2.0).abs() < 1e-15 && w.y.abs() < 1e-15);
        assert!(power_value(2, Point2::new(-1.0, 0.0)).is_err());
        let m = 3;
        let z = Point2::from_polar(2.5, 1.1);
        let det = power_map(m).unwrap().jacobian(z).unwrap().det();
        let expect = z.norm().powf(2.0 / m as f64 - 2.0) / (m * m) as f64;
        assert!((det - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn log_radial_fixes_boundary_and_swaps_radii() {
        let wedge = WedgeBoundary { outer: 6.5, notch: 1.8, center_angle: PI / 2.0, flat_half_angle: 0.15, blend_half_angle: 0.45 };
        let f = Diffeomorphism::LogRadial(LogRadialReflection { boundary: wedge, r_inner: 1.0, r_outer: 8.0 });
        for i in 0..50 {
            let th = -PI + 0.1257 * i as f64;
            let b = wedge.point(th);
            assert!(f.forward(b).unwrap().dist(b) < 1e-12);
            let y = f.forward(Point2::from_polar(1.0, th)).unwrap();
            assert!((y.norm() - 8.0).abs() < 1e-12);
        }
    }
}
