//! Element integrals and global assembly.

use std::sync::Arc;

use super::dtn::GAUSS4;
use super::{CsrMatrix, DiscretizationError, DtnOperator, SourceSpec, TripletBuilder};
use crate::geometry::{Point2, TriMesh};
use crate::media::{MediaError, MediumSpec};
use crate::C64;

/// Barycentric coordinates of the edge midpoints; with equal weights the
/// rule is exact for quadratics.
pub const QUAD_MIDPOINTS: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Seven-point rule of degree five: `(weight, barycentric)`.
pub(crate) const QUAD7: [(f64, [f64; 3]); 7] = [
    (0.225, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
    (0.132_394_152_788_506_2, [0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115]),
    (0.132_394_152_788_506_2, [0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115]),
    (0.132_394_152_788_506_2, [0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770]),
    (0.125_939_180_544_827_1, [0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456]),
    (0.125_939_180_544_827_1, [0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456]),
    (0.125_939_180_544_827_1, [0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087]),
];

/// Assembled system; unknowns are the mesh nodes followed by the gauge
/// multiplier when `k = 0`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub mesh: Arc<TriMesh>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<C64>,
    pub gauge_row: Option<usize>,
}

fn at(p: &[Point2; 3], l: [f64; 3]) -> Point2 {
    Point2::new(l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y)
}

fn tag_error(element: usize, tag: crate::geometry::RegionTag) -> impl Fn(MediaError) -> DiscretizationError {
    move |e| match e {
        MediaError::MissingRegion(_) => DiscretizationError::TagMismatch { element, tag },
        other => DiscretizationError::Media(other),
    }
}

/// Element matrix of `∫ s_δ A ∇φ_j·∇φ_i − k² s_0 Σ φ_j φ_i`.
pub fn element_system(mesh: &TriMesh, med: &MediumSpec, e: usize) -> Result<[[C64; 3]; 3], DiscretizationError> {
    let tag = mesh.tags[e];
    let pts = mesh.element_points(e);
    let g = mesh.gradients(e);
    let area = mesh.area(e);
    let s = med.s_delta(tag);
    let k2s0 = med.k * med.k * med.s0(tag);
    let mut stiff = [[0.0f64; 3]; 3];
    let mut mass = [[0.0f64; 3]; 3];
    for l in QUAD_MIDPOINTS {
        let p = at(&pts, l);
        let a = med.tensor(tag, p).map_err(tag_error(e, tag))?;
        for i in 0..3 {
            let ag = a.apply(g[i]);
            for j in 0..3 {
                stiff[i][j] += ag.dot(g[j]);
            }
        }
        if k2s0 != 0.0 {
            let sig = med.scalar(tag, p).map_err(tag_error(e, tag))?;
            for i in 0..3 {
                for j in 0..3 {
                    mass[i][j] += sig * l[i] * l[j];
                }
            }
        }
    }
    let w = area / 3.0;
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = s * (w * stiff[i][j]) - C64::new(k2s0 * w * mass[i][j], 0.0);
        }
    }
    Ok(out)
}

/// `∫_e f φ_i` for area sources.
fn element_load(mesh: &TriMesh, src: &SourceSpec, e: usize) -> [f64; 3] {
    let pts = mesh.element_points(e);
    let area = mesh.area(e);
    let mut out = [0.0; 3];
    for (w, l) in QUAD7 {
        let f = src.value(at(&pts, l));
        for i in 0..3 {
            out[i] += w * area * f * l[i];
        }
    }
    out
}

fn add_source(mesh: &TriMesh, src: &SourceSpec, rhs: &mut [C64]) -> Result<(), DiscretizationError> {
    match src {
        SourceSpec::Ring { radius, modes } => {
            let curve = mesh
                .circle_curve(*radius)
                .ok_or_else(|| DiscretizationError::Source(format!("ring |x| = {radius} is not resolved by the mesh")))?;
            for [a, b] in mesh.curve_edges(curve) {
                let ta = mesh.nodes[a].angle();
                let mut dt = (mesh.nodes[b].angle() - ta).rem_euclid(std::f64::consts::TAU);
                if dt > std::f64::consts::PI {
                    dt -= std::f64::consts::TAU;
                }
                for &(t, w) in &GAUSS4 {
                    let g = SourceSpec::ring_density(modes, ta + t * dt) * w * dt.abs() * radius;
                    rhs[a] -= C64::new(g * (1.0 - t), 0.0);
                    rhs[b] -= C64::new(g * t, 0.0);
                }
            }
        }
        SourceSpec::BumpPair { centers, width, .. } => {
            for e in 0..mesh.num_elements() {
                let c = mesh.barycenter(e);
                let reach = width + mesh.element_h(e);
                if centers.iter().all(|z| c.dist(*z) > reach) {
                    continue;
                }
                let l = element_load(mesh, src, e);
                for (i, &v) in mesh.elements[e].iter().enumerate() {
                    rhs[v] -= C64::new(l[i], 0.0);
                }
            }
        }
        SourceSpec::None => {}
    }
    Ok(())
}

/// Assemble the global system for `med` and `src` on `mesh`.
pub fn assemble(mesh: &Arc<TriMesh>, med: &MediumSpec, src: &SourceSpec, dtn: &DtnOperator) -> Result<LinearSystem, DiscretizationError> {
    assemble_with_support(mesh, med, src, dtn, med.geometry.r3)
}

/// [`assemble`] with the source allowed anywhere outside `B_inner`.
pub fn assemble_with_support(
    mesh: &Arc<TriMesh>,
    med: &MediumSpec,
    src: &SourceSpec,
    dtn: &DtnOperator,
    inner: f64,
) -> Result<LinearSystem, DiscretizationError> {
    src.validate_within(&med.geometry, med.k, inner)?;
    if dtn.k != med.k {
        return Err(DiscretizationError::Dtn(format!("operator wavenumber {} differs from medium {}", dtn.k, med.k)));
    }
    let nn = mesh.num_nodes();
    let gauge = med.k == 0.0;
    let n = nn + usize::from(gauge);
    let block = dtn.block(mesh)?;
    let nb = block.nodes.len();
    let mut t = TripletBuilder::with_capacity(n, 9 * mesh.num_elements() + nb * nb + 2 * nb);
    for e in 0..mesh.num_elements() {
        let ke = element_system(mesh, med, e)?;
        let el = mesh.elements[e];
        for i in 0..3 {
            for j in 0..3 {
                t.add(el[i], el[j], ke[i][j]);
            }
        }
    }
    for (i, &vi) in block.nodes.iter().enumerate() {
        for (j, &vj) in block.nodes.iter().enumerate() {
            let v = block.values[i * nb + j];
            if v != C64::new(0.0, 0.0) {
                t.add(vi, vj, v);
            }
        }
    }
    if gauge {
        for (i, &vi) in block.nodes.iter().enumerate() {
            let w = C64::new(block.mean_weights[i], 0.0);
            t.add(vi, nn, w);
            t.add(nn, vi, w);
        }
    }
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    add_source(mesh, src, &mut rhs)?;
    Ok(LinearSystem { mesh: mesh.clone(), matrix: t.build(), rhs, gauge_row: gauge.then_some(nn) })
}
