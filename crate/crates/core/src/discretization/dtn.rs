//! Modal Dirichlet-to-Neumann operator on the truncation circle.

use std::f64::consts::PI;

use super::DiscretizationError;
use crate::geometry::{CurveKind, TriMesh};
use crate::oracle::BesselTable;
use crate::C64;

/// Smallest admissible number of modes.
pub const MIN_MODES: usize = 8;

/// Four-point Gauss rule on `[0, 1]`.
pub(crate) const GAUSS4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
];

/// Impedances `λ_n` with `−∂_r u_n = λ_n u_n` on `|x| = R`.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnOperator {
    pub k: f64,
    pub r_out: f64,
    pub n_modes: usize,
    /// `λ_0 ..= λ_N`; `λ_0 = 0` for `k = 0`.
    pub lambda: Vec<C64>,
}

/// Dense coupling among the outer-circle nodes.
#[derive(Clone, Debug)]
pub struct DtnBlock {
    pub nodes: Vec<usize>,
    /// Row-major `nodes.len()²` entries.
    pub values: Vec<C64>,
    /// `∫ φ_i ds` over the circle, used for the zero-mean constraint.
    pub mean_weights: Vec<f64>,
}

pub fn dtn_operator(k: f64, r_out: f64, n_modes: usize) -> Result<DtnOperator, DiscretizationError> {
    if !(k >= 0.0 && k.is_finite()) || !(r_out > 0.0 && r_out.is_finite()) {
        return Err(DiscretizationError::Dtn("k >= 0 and R_out > 0 required".into()));
    }
    if n_modes < MIN_MODES {
        return Err(DiscretizationError::Dtn(format!("at least {MIN_MODES} modes required")));
    }
    let lambda = if k == 0.0 {
        (0..=n_modes).map(|n| C64::new(n as f64 / r_out, 0.0)).collect()
    } else {
        let t = BesselTable::new(n_modes, C64::new(k * r_out, 0.0))?;
        let mut out = Vec::with_capacity(n_modes + 1);
        for n in 0..=n_modes {
            let h = t.h1(n);
            if !(h.norm() > 1e-300) {
                return Err(DiscretizationError::Dtn(format!("Hankel value vanishes at mode {n}")));
            }
            let l = -k * t.dh1(n) / h;
            if !(l.re.is_finite() && l.im.is_finite()) {
                return Err(DiscretizationError::Dtn(format!("non-finite impedance at mode {n}")));
            }
            out.push(l);
        }
        out
    };
    Ok(DtnOperator { k, r_out, n_modes, lambda })
}

fn wrap(a: f64) -> f64 {
    let mut d = a.rem_euclid(2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    }
    d
}

impl DtnOperator {
    /// Galerkin matrix of `⟨Λu, φ⟩` on the mesh boundary (curve 0).
    pub fn block(&self, mesh: &TriMesh) -> Result<DtnBlock, DiscretizationError> {
        let radius = match mesh.curves.first().map(|c| c.kind) {
            Some(CurveKind::Circle { radius, .. }) => radius,
            _ => return Err(DiscretizationError::Dtn("mesh boundary is not a circle".into())),
        };
        if (radius - self.r_out).abs() > 1e-9 * radius {
            return Err(DiscretizationError::Dtn(format!("operator radius {} differs from mesh radius {radius}", self.r_out)));
        }
        let nodes = mesh.circle_nodes_sorted(0);
        let nb = nodes.len();
        if nb < 2 * self.n_modes + 1 {
            return Err(DiscretizationError::Dtn(format!("{nb} boundary nodes cannot resolve {} modes", self.n_modes)));
        }
        let mut pos = std::collections::HashMap::with_capacity(nb);
        for (i, &v) in nodes.iter().enumerate() {
            pos.insert(v, i);
        }
        let nm = self.n_modes + 1;
        let mut cos_m = vec![0.0; nm * nb];
        let mut sin_m = vec![0.0; nm * nb];
        for [a, b] in mesh.curve_edges(0) {
            let (ia, ib) = (pos[&a], pos[&b]);
            let ta = mesh.nodes[a].angle();
            let dt = wrap(mesh.nodes[b].angle() - ta);
            for &(t, w) in &GAUSS4 {
                let th = ta + t * dt;
                let wt = w * dt.abs();
                for n in 0..nm {
                    let (s, c) = (n as f64 * th).sin_cos();
                    cos_m[n * nb + ia] += wt * (1.0 - t) * c;
                    cos_m[n * nb + ib] += wt * t * c;
                    sin_m[n * nb + ia] += wt * (1.0 - t) * s;
                    sin_m[n * nb + ib] += wt * t * s;
                }
            }
        }
        let mut values = vec![C64::new(0.0, 0.0); nb * nb];
        for n in 0..nm {
            let l = self.lambda[n];
            if l == C64::new(0.0, 0.0) {
                continue;
            }
            let f = if n == 0 { radius / (2.0 * PI) } else { radius / PI };
            let cn = &cos_m[n * nb..(n + 1) * nb];
            let sn = &sin_m[n * nb..(n + 1) * nb];
            for i in 0..nb {
                let row = &mut values[i * nb..(i + 1) * nb];
                let (ci, si) = (f * cn[i], f * sn[i]);
                for j in 0..nb {
                    row[j] += l * (ci * cn[j] + si * sn[j]);
                }
            }
        }
        let mean_weights = cos_m[..nb].iter().map(|c| radius * c).collect();
        Ok(DtnBlock { nodes, values, mean_weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_impedances() {
        let d = dtn_operator(0.0, 10.0, 8).unwrap();
        assert_eq!(d.lambda[0], C64::new(0.0, 0.0));
        assert!((d.lambda[2].re - 0.2).abs() < 1e-15);
    }

    #[test]
    fn helmholtz_impedance_is_outgoing() {
        let d = dtn_operator(1.0, 10.0, 8).unwrap();
        let t = BesselTable::new(1, C64::new(10.0, 0.0)).unwrap();
        let expect = -t.dh1(0) / t.h1(0);
        assert!((d.lambda[0] - expect).norm() < 1e-14);
        // e^{-iωt} convention: Re(−λ/ik) → 1 as kR grows, so Im λ < 0
        for l in &d.lambda {
            assert!(l.im < 0.0);
        }
        assert!((d.lambda[0] / C64::new(0.0, -1.0) - 1.0).norm() < 0.06);
    }

    #[test]
    fn too_few_modes_rejected() {
        assert!(dtn_operator(0.0, 10.0, 7).is_err());
        assert!(dtn_operator(-1.0, 10.0, 8).is_err());
    }
}
