//! Reflection mismatches across the plasmonic interfaces and the
//! three-spheres probe.

use std::f64::consts::TAU;

use super::ExperimentError;
use crate::discretization::{circle_norm, weak_flux, BoundaryNorm, DiscreteField};
use crate::geometry::{GeometryConfig, Point2, RegionTag};
use crate::media::{Diffeomorphism, MediumSpec};
use crate::C64;

/// Boundary surrogate of a mismatch on one circle: `L²` of the trace, of
/// its tangential derivative and of the conormal flux.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMismatch {
    pub trace: f64,
    pub tangential: f64,
    pub flux: f64,
    /// Circle nodes used and nodes dropped near inclusions.
    pub kept: usize,
    pub excluded: usize,
}

impl BoundaryMismatch {
    pub fn total(&self) -> f64 {
        self.trace + self.tangential + self.flux
    }
}

/// Mismatch of `u∘F⁻¹` against `u` on `∂B_r2` and of `u∘F⁻¹∘G⁻¹` against
/// `u∘F⁻¹` on `∂B_r3`, both away from the inclusions.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionRecord {
    pub r2: BoundaryMismatch,
    pub r3: BoundaryMismatch,
}

fn is_origin_kelvin(map: &Diffeomorphism, radius: f64) -> bool {
    matches!(map, Diffeomorphism::Kelvin { center, radius: r } if center.norm() == 0.0 && (r - radius).abs() <= 1e-12 * radius)
}

fn side(cfg: &GeometryConfig, base: RegionTag) -> Vec<RegionTag> {
    let mut tags = vec![base];
    tags.extend(cfg.inclusions.iter().filter(|i| i.host == base).map(|i| i.tag));
    tags
}

/// Nodes of a circle kept away from every inclusion, judged at the node
/// itself and at its image `p·scale`.
fn keep_mask(cfg: &GeometryConfig, pts: &[Point2], scale: f64) -> Vec<bool> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let h = pts[i].dist(pts[(i + 1) % n]).max(pts[i].dist(pts[(i + n - 1) % n]));
            cfg.inclusions.iter().all(|inc| {
                let reach = 2.0 * inc.radius + 2.0 * h;
                pts[i].dist(inc.center) > reach && (pts[i] * scale).dist(inc.center) > reach
            })
        })
        .collect()
}

/// `L²` norms of a nodal trace, of its arc-length derivative and of a flux
/// density on a closed polyline, over the kept nodes and edges.
fn mismatch_norms(pts: &[Point2], trace: &[C64], flux: &[C64], keep: &[bool], arc_scale: f64) -> BoundaryMismatch {
    let n = pts.len();
    let (mut tr, mut tg, mut fl) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let j = (i + 1) % n;
        let len = pts[i].dist(pts[j]) * arc_scale;
        for v in [i, j] {
            if keep[v] {
                tr += 0.5 * len * trace[v].norm_sqr();
                fl += 0.5 * len * flux[v].norm_sqr();
            }
        }
        if keep[i] && keep[j] {
            tg += len * ((trace[j] - trace[i]) / len).norm_sqr();
        }
    }
    let kept = keep.iter().filter(|&&k| k).count();
    BoundaryMismatch { trace: tr.sqrt(), tangential: tg.sqrt(), flux: fl.sqrt(), kept, excluded: n - kept }
}

/// Reflection diagnostics for the circular layouts with `F` and `G` the
/// Kelvin maps in `∂B_r2` and `∂B_r3`.
///
/// Traces are compared by evaluation. The one-sided conormal fluxes of the
/// reflected fields follow from those of `u` by the change-of-variables
/// relation `T_*a ∇v·ν = −a ∇u·ν`, with the fluxes of `u` recovered weakly
/// on each side of `∂B_r2` and `∂B_r1`.
pub fn reflection_diagnostics(u: &DiscreteField, med: &MediumSpec, f: &Diffeomorphism, g: &Diffeomorphism) -> Result<ReflectionRecord, ExperimentError> {
    let cfg = &med.geometry;
    if cfg.slab.is_some() || !is_origin_kelvin(f, cfg.r2) || !is_origin_kelvin(g, cfg.r3) {
        return Err(ExperimentError::Unsupported("reflection diagnostics need the Kelvin maps of a circular layout".into()));
    }
    let mesh = &u.mesh;
    let curve = |r: f64| mesh.circle_curve(r).ok_or_else(|| ExperimentError::Unsupported(format!("circle |x| = {r} is not resolved")));
    let (c1, c2, c3) = (curve(cfg.r1)?, curve(cfg.r2)?, curve(cfg.r3)?);
    let annulus = side(cfg, RegionTag::AnnulusR2R1);
    let shell = side(cfg, RegionTag::ShellR3R2);
    let core = side(cfg, RegionTag::CoreR1);
    let s = med.s_delta(RegionTag::AnnulusR2R1);
    let loc = u.locator();

    // ∂B_r2: u₁ = u∘F⁻¹ seen from the shell
    let qa = weak_flux(u, med, c2, &annulus)?;
    let qs = weak_flux(u, med, c2, &shell)?;
    let pts2: Vec<Point2> = qa.nodes.iter().map(|&v| mesh.nodes[v]).collect();
    let reflected = u.evaluate_with(&loc, &pts2, Some(f))?;
    let trace2: Vec<C64> = qa.nodes.iter().zip(&reflected).map(|(&v, w)| w - u.values[v]).collect();
    let flux2: Vec<C64> = qa.values.iter().zip(&qs.values).map(|(a, b)| b - a / s).collect();
    let r2 = mismatch_norms(&pts2, &trace2, &flux2, &keep_mask(cfg, &pts2, 1.0), 1.0);

    // ∂B_r3: u₂ = u₁∘G⁻¹ against u₁, both pulled back to ∂B_r1
    let qc = weak_flux(u, med, c1, &core)?;
    let qa1 = weak_flux(u, med, c1, &annulus)?;
    let scale = cfg.r3 / cfg.r1;
    let pts1: Vec<Point2> = qc.nodes.iter().map(|&v| mesh.nodes[v]).collect();
    let pts3: Vec<Point2> = pts1.iter().map(|&p| p * scale).collect();
    let gf = crate::media::compose(g.clone(), f.clone());
    let u1 = u.evaluate_with(&loc, &pts3, Some(f))?;
    let u2 = u.evaluate_with(&loc, &pts3, Some(&gf))?;
    let trace3: Vec<C64> = u2.iter().zip(&u1).map(|(a, b)| a - b).collect();
    let flux3: Vec<C64> = qc.values.iter().zip(&qa1.values).map(|(c, a)| (c - a / s) / scale).collect();
    let r3 = mismatch_norms(&pts3, &trace3, &flux3, &keep_mask(cfg, &pts1, scale), 1.0);
    // mesh nodes of ∂B_r3 are not needed: the images of ∂B_r1 nodes carry
    // the pulled-back fluxes
    let _ = c3;
    Ok(ReflectionRecord { r2, r3 })
}

/// Exponent `α(q) = (R2^{-q} − R3^{-q}) / (R1^{-q} − R3^{-q})`, with the
/// logarithmic limit at `q = 0`.
pub fn three_sphere_exponent(q: f64, radii: [f64; 3]) -> f64 {
    let [a, b, c] = radii;
    if q.abs() < 1e-9 {
        return (c / b).ln() / (c / a).ln();
    }
    (b.powf(-q) - c.powf(-q)) / (a.powf(-q) - c.powf(-q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThreeSphereReport {
    pub center: Point2,
    pub radii: [f64; 3],
    pub norms: [BoundaryNorm; 3],
    /// Exponent making the inequality an equality with `C = 1`.
    pub alpha_fit: f64,
    /// `q` with `α(q) = alpha_fit`, when one exists.
    pub q_fit: Option<f64>,
    /// `(q, α(q), C(q))` at a fixed set of candidate exponents.
    pub candidates: Vec<(f64, f64, f64)>,
    /// `ln N2 − α ln N1 − (1 − α) ln N3` at the logarithmic exponent;
    /// non-positive under log-convexity.
    pub margin: f64,
}

const CANDIDATE_Q: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

impl ThreeSphereReport {
    fn totals(&self) -> [f64; 3] {
        [self.norms[0].total(), self.norms[1].total(), self.norms[2].total()]
    }

    /// Smallest `C` with `N2 ≤ C N1^α N3^{1−α}` at `α = α(q)`.
    pub fn constant_at(&self, q: f64) -> f64 {
        let n = self.totals();
        let a = three_sphere_exponent(q, self.radii);
        if n[1] == 0.0 {
            return 0.0;
        }
        (n[1].ln() - a * n[0].ln() - (1.0 - a) * n[2].ln()).exp()
    }
}

/// Evaluate the boundary surrogate on the circles `|x − z| = R_i` and the
/// three-spheres constants. All sample points of `B(z, R3)` must lie in
/// elements of one tag.
pub fn three_sphere_check(u: &DiscreteField, z: Point2, radii: [f64; 3], samples: usize) -> Result<ThreeSphereReport, ExperimentError> {
    let [r1, r2, r3] = radii;
    if !(r1 > 0.0 && r1 < r2 && r2 < r3) {
        return Err(ExperimentError::Config("three-spheres radii must satisfy 0 < R1 < R2 < R3".into()));
    }
    let loc = u.locator();
    let mut tag = None;
    let rings = [0.0, 0.25, 0.5, 0.75, r1 / r3, r2 / r3, 1.0];
    for f in rings {
        let m = if f == 0.0 { 1 } else { samples };
        for i in 0..m {
            let p = z + Point2::from_polar(f * r3, TAU * i as f64 / m as f64);
            let (_, e) = u.eval_at(&loc, p)?;
            let t = u.mesh.tags[e];
            if *tag.get_or_insert(t) != t {
                return Err(ExperimentError::Interface);
            }
        }
    }
    let norms = [
        circle_norm(u, &loc, z, r1, samples)?,
        circle_norm(u, &loc, z, r2, samples)?,
        circle_norm(u, &loc, z, r3, samples)?,
    ];
    let n = [norms[0].total(), norms[1].total(), norms[2].total()];
    let alpha_fit = if n[2] > 0.0 && n[0] != n[2] { (n[2] / n[1]).ln() / (n[2] / n[0]).ln() } else { f64::NAN };
    let q_fit = if alpha_fit > 0.0 && alpha_fit < 1.0 { Some(solve_q(alpha_fit, radii)) } else { None };
    let mut rep = ThreeSphereReport { center: z, radii, norms, alpha_fit, q_fit, candidates: Vec::new(), margin: 0.0 };
    rep.candidates = CANDIDATE_Q.iter().map(|&q| (q, three_sphere_exponent(q, radii), rep.constant_at(q))).collect();
    rep.margin = rep.constant_at(0.0).ln();
    Ok(rep)
}

/// Invert the decreasing map `q ↦ α(q)` by bisection.
fn solve_q(alpha: f64, radii: [f64; 3]) -> f64 {
    let (mut lo, mut hi) = (-200.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if three_sphere_exponent(mid, radii) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One exponent `q` for a family of reports, minimising the largest
/// constant on a grid over `[-4, 8]`; returns `(q, max C)`.
pub fn fit_common_exponent(reports: &[ThreeSphereReport]) -> (f64, f64) {
    let worst = |q: f64| reports.iter().map(|r| r.constant_at(q)).fold(0.0, f64::max);
    (0..=2400)
        .map(|i| -4.0 + 0.005 * i as f64)
        .map(|q| (q, worst(q)))
        .fold((0.0, worst(0.0)), |best, c| if c.1 < best.1 { c } else { best })
}
