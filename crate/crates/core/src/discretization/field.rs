//! Nodal P1 fields: interpolation, norms and boundary surrogates.

use std::f64::consts::TAU;
use std::sync::Arc;

use super::assembly::QUAD7;
use super::DiscretizationError;
use crate::geometry::{Locator, Point2, RegionTag, TriMesh};
use crate::media::Diffeomorphism;
use crate::C64;

/// Complex nodal values on a mesh.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1,
    /// `‖∇u‖_{L²}` only.
    H1Semi,
}

fn is_finite(v: C64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

impl DiscreteField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<C64>) -> Result<Self, DiscretizationError> {
        if values.len() != mesh.num_nodes() {
            return Err(DiscretizationError::Dimension(format!("{} values for {} nodes", values.len(), mesh.num_nodes())));
        }
        if let Some(i) = values.iter().position(|v| !is_finite(*v)) {
            return Err(DiscretizationError::Dimension(format!("non-finite value at node {i}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let n = mesh.num_nodes();
        Self { mesh, values: vec![C64::new(0.0, 0.0); n] }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: Arc<TriMesh>, f: impl Fn(Point2) -> C64) -> Self {
        let values = mesh.nodes.iter().map(|&p| f(p)).collect();
        Self { mesh, values }
    }

    fn same_mesh(&self, o: &DiscreteField) -> Result<(), DiscretizationError> {
        if Arc::ptr_eq(&self.mesh, &o.mesh) || (self.mesh.nodes == o.mesh.nodes && self.mesh.elements == o.mesh.elements) {
            Ok(())
        } else {
            Err(DiscretizationError::Dimension("fields live on different meshes".into()))
        }
    }

    pub fn sub(&self, o: &DiscreteField) -> Result<DiscreteField, DiscretizationError> {
        self.same_mesh(o)?;
        let values = self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect();
        Ok(Self { mesh: self.mesh.clone(), values })
    }

    pub fn add_constant(&self, c: C64) -> DiscreteField {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v + c).collect() }
    }

    pub fn scale(&self, c: C64) -> DiscreteField {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Constant gradient on element `e`.
    pub fn gradient(&self, e: usize) -> [C64; 2] {
        let g = self.mesh.gradients(e);
        let el = self.mesh.elements[e];
        let mut out = [C64::new(0.0, 0.0); 2];
        for i in 0..3 {
            out[0] += self.values[el[i]] * g[i].x;
            out[1] += self.values[el[i]] * g[i].y;
        }
        out
    }

    pub fn locator(&self) -> Locator {
        Locator::new(&self.mesh)
    }

    /// Interpolated value and containing element at `p`.
    pub fn eval_at(&self, loc: &Locator, p: Point2) -> Result<(C64, usize), DiscretizationError> {
        let (e, l) = loc.locate(&self.mesh, p).ok_or(DiscretizationError::OutsideMesh { x: p.x, y: p.y })?;
        let el = self.mesh.elements[e];
        Ok((self.values[el[0]] * l[0] + self.values[el[1]] * l[1] + self.values[el[2]] * l[2], e))
    }

    /// `u(T⁻¹(p))` for each `p`, or `u(p)` without a map.
    pub fn evaluate(&self, pts: &[Point2], precompose: Option<&Diffeomorphism>) -> Result<Vec<C64>, DiscretizationError> {
        let loc = self.locator();
        self.evaluate_with(&loc, pts, precompose)
    }

    pub fn evaluate_with(&self, loc: &Locator, pts: &[Point2], precompose: Option<&Diffeomorphism>) -> Result<Vec<C64>, DiscretizationError> {
        pts.iter()
            .map(|&p| {
                let q = match precompose {
                    Some(t) => t.inverse(p)?,
                    None => p,
                };
                Ok(self.eval_at(loc, q)?.0)
            })
            .collect()
    }
}

/// Norm over the elements whose tag is in `regions`.
pub fn norm(u: &DiscreteField, regions: &[RegionTag], kind: NormKind) -> Result<f64, DiscretizationError> {
    norm_where(u, |e| regions.contains(&u.mesh.tags[e]), kind)
}

/// Norm over the elements selected by `keep`.
pub fn norm_where(u: &DiscreteField, keep: impl Fn(usize) -> bool, kind: NormKind) -> Result<f64, DiscretizationError> {
    let mesh = &u.mesh;
    let mut l2 = 0.0;
    let mut semi = 0.0;
    let mut any = false;
    for e in (0..mesh.num_elements()).filter(|&e| keep(e)) {
        any = true;
        let area = mesh.area(e);
        if kind != NormKind::H1Semi {
            let el = mesh.elements[e];
            let v = [u.values[el[0]], u.values[el[1]], u.values[el[2]]];
            let sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            l2 += area / 12.0 * (sq + (v[0] + v[1] + v[2]).norm_sqr());
        }
        if kind != NormKind::L2 {
            let g = u.gradient(e);
            semi += area * (g[0].norm_sqr() + g[1].norm_sqr());
        }
    }
    if !any {
        return Err(DiscretizationError::EmptyRegion);
    }
    Ok(match kind {
        NormKind::L2 => l2.sqrt(),
        NormKind::H1 => (l2 + semi).sqrt(),
        NormKind::H1Semi => semi.sqrt(),
    })
}

/// Distance from `u` to a smooth field with known value and gradient, over
/// the elements selected by `keep`, by degree-five quadrature. Returns the
/// `H¹` norms of the difference and of the exact field.
pub fn error_against(
    u: &DiscreteField,
    exact: impl Fn(Point2) -> (C64, [C64; 2]),
    keep: impl Fn(usize) -> bool,
) -> Result<(f64, f64), DiscretizationError> {
    let mesh = &u.mesh;
    let (mut err, mut refn) = (0.0, 0.0);
    let mut any = false;
    for e in (0..mesh.num_elements()).filter(|&e| keep(e)) {
        any = true;
        let area = mesh.area(e);
        let p = mesh.element_points(e);
        let el = mesh.elements[e];
        let g = u.gradient(e);
        for (w, l) in QUAD7 {
            let x = p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
            let uh = u.values[el[0]] * l[0] + u.values[el[1]] * l[1] + u.values[el[2]] * l[2];
            let (v, dv) = exact(x);
            let d = (uh - v).norm_sqr() + (g[0] - dv[0]).norm_sqr() + (g[1] - dv[1]).norm_sqr();
            err += w * area * d;
            refn += w * area * (v.norm_sqr() + dv[0].norm_sqr() + dv[1].norm_sqr());
        }
    }
    if !any {
        return Err(DiscretizationError::EmptyRegion);
    }
    Ok((err.sqrt(), refn.sqrt()))
}

/// Discrete boundary surrogate on a circle: `L²` of the trace plus `L²` of
/// its tangential derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNorm {
    pub trace: f64,
    pub tangential: f64,
}

impl BoundaryNorm {
    pub fn total(&self) -> f64 {
        self.trace + self.tangential
    }
}

/// Boundary surrogate of `u` on the circle `|x − center| = radius`, by the
/// trapezoidal rule on `samples` equispaced points.
pub fn circle_norm(u: &DiscreteField, loc: &Locator, center: Point2, radius: f64, samples: usize) -> Result<BoundaryNorm, DiscretizationError> {
    if samples < 3 || !(radius > 0.0) {
        return Err(DiscretizationError::EmptyRegion);
    }
    let ds = TAU * radius / samples as f64;
    let (mut tr, mut tg) = (0.0, 0.0);
    for i in 0..samples {
        let th = TAU * i as f64 / samples as f64;
        let p = center + Point2::from_polar(radius, th);
        let (v, e) = u.eval_at(loc, p)?;
        let g = u.gradient(e);
        let t = Point2::new(-th.sin(), th.cos());
        tr += v.norm_sqr() * ds;
        tg += (g[0] * t.x + g[1] * t.y).norm_sqr() * ds;
    }
    Ok(BoundaryNorm { trace: tr.sqrt(), tangential: tg.sqrt() })
}
