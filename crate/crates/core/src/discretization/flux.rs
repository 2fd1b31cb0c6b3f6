//! Weak one-sided conormal fluxes on resolved curves.

use super::{element_system, solve_csr, DiscreteField, DiscretizationError, TripletBuilder};
use crate::geometry::RegionTag;
use crate::media::MediumSpec;
use crate::C64;

/// Flux density per unit length at the nodes of a curve.
#[derive(Clone, Debug)]
pub struct CurveFlux {
    pub curve: usize,
    /// Curve nodes sorted by polar angle.
    pub nodes: Vec<usize>,
    /// Outward conormal flux `s_δ A ∇u·ν` of the chosen side.
    pub values: Vec<C64>,
    /// Lumped arc length attached to each node.
    pub weights: Vec<f64>,
}

/// Outward conormal flux of `u` through `curve` seen from the elements
/// tagged in `side`, recovered from the element residuals
/// `Σ_e (K_e u)_i = ∫_Γ q φ_i` with the curve mass matrix.
///
/// The source must vanish on the chosen side.
pub fn weak_flux(u: &DiscreteField, med: &MediumSpec, curve: usize, side: &[RegionTag]) -> Result<CurveFlux, DiscretizationError> {
    let mesh = &u.mesh;
    if curve >= mesh.curves.len() {
        return Err(DiscretizationError::EmptyRegion);
    }
    let nodes = mesh.circle_nodes_sorted(curve);
    if nodes.is_empty() {
        return Err(DiscretizationError::EmptyRegion);
    }
    let mut pos = vec![usize::MAX; mesh.num_nodes()];
    for (i, &v) in nodes.iter().enumerate() {
        pos[v] = i;
    }
    let nc = nodes.len();
    let mut resid = vec![C64::new(0.0, 0.0); nc];
    let mut touched = false;
    for e in 0..mesh.num_elements() {
        if !side.contains(&mesh.tags[e]) {
            continue;
        }
        let el = mesh.elements[e];
        if el.iter().all(|&v| pos[v] == usize::MAX) {
            continue;
        }
        touched = true;
        let ke = element_system(mesh, med, e)?;
        for i in 0..3 {
            let p = pos[el[i]];
            if p == usize::MAX {
                continue;
            }
            for j in 0..3 {
                resid[p] += ke[i][j] * u.values[el[j]];
            }
        }
    }
    if !touched {
        return Err(DiscretizationError::EmptyRegion);
    }
    let mut t = TripletBuilder::new(nc);
    let mut weights = vec![0.0; nc];
    for [a, b] in mesh.curve_edges(curve) {
        let (i, j) = (pos[a], pos[b]);
        let len = mesh.nodes[a].dist(mesh.nodes[b]);
        t.add(i, i, C64::new(len / 3.0, 0.0));
        t.add(j, j, C64::new(len / 3.0, 0.0));
        t.add(i, j, C64::new(len / 6.0, 0.0));
        t.add(j, i, C64::new(len / 6.0, 0.0));
        weights[i] += 0.5 * len;
        weights[j] += 0.5 * len;
    }
    let (values, _) = solve_csr(&t.build(), &resid)?;
    Ok(CurveFlux { curve, nodes, values, weights })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_mesh, GeometryConfig, Point2};

    #[test]
    fn flux_of_harmonic_field_through_circle() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        let mesh = Arc::new(build_mesh(&cfg, 0.08, 2.0).unwrap());
        let med = crate::media::MediumSpec::homogeneous(cfg, 0.0);
        // u = r² cos 2θ: outward radial derivative on r = 2 is 4 cos 2θ
        let u = DiscreteField::from_fn(mesh.clone(), |p| C64::new(p.x * p.x - p.y * p.y, 0.0));
        let c = mesh.circle_curve(2.0).unwrap();
        let inner = weak_flux(&u, &med, c, &[RegionTag::AnnulusR2R1]).unwrap();
        let outer = weak_flux(&u, &med, c, &[RegionTag::ShellR3R2]).unwrap();
        let mut err = 0.0f64;
        for (i, &v) in inner.nodes.iter().enumerate() {
            let th = mesh.nodes[v].angle();
            let exact = 4.0 * (2.0 * th).cos();
            err = err.max((inner.values[i].re - exact).abs());
            assert!((inner.values[i] + outer.values[i]).norm() < 0.2);
        }
        assert!(err < 0.1, "max flux error {err}");
        let _ = Point2::ORIGIN;
    }
}
