//! Mode matching for radially layered media with a ring source.
//!
//! Each zone carries two scaled basis functions; continuity of `u` and of
//! `s a ∂_r u` at every interface (with the source jump at the ring) forms
//! one global block-bidiagonal system per mode, solved directly.

use std::sync::Arc;

use super::{BesselTable, OracleError};
use crate::discretization::{DiscreteField, RingMode};
use crate::geometry::{GeometryConfig, Point2, TriMesh};
use crate::io::sci;
use crate::linalg::{DenseLu, DenseMatrix};
use crate::media::ScenarioKind;
use crate::C64;

/// Radial dependence of `Σ` within a layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialProfile {
    Constant,
    /// `σ (radius / r)⁴`, the Kelvin pull-back of a constant.
    Kelvin { radius: f64 },
}

/// Layer `inner < r < outer` with coefficients `(a I, σ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialLayer {
    pub inner: f64,
    pub outer: f64,
    pub a: f64,
    pub sigma: f64,
    pub profile: RadialProfile,
    /// Sign factor `−1 − iδ` instead of 1.
    pub negative: bool,
}

impl RadialLayer {
    pub fn new(inner: f64, outer: f64, a: f64, sigma: f64) -> Self {
        Self { inner, outer, a, sigma, profile: RadialProfile::Constant, negative: false }
    }
}

/// Zone of the solved problem: a layer, or the background on either side of
/// the ring.
#[derive(Clone, Debug, PartialEq)]
pub struct Zone {
    pub inner: f64,
    /// `f64::INFINITY` for the outermost zone.
    pub outer: f64,
    /// `s a`.
    pub flux_coef: C64,
    pub kappa: C64,
    pub profile: RadialProfile,
    /// Amplitudes of the regular and singular basis functions, each
    /// normalised by `scale`.
    pub amplitudes: [C64; 2],
    pub scale: [f64; 2],
    pub active: [bool; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution {
    pub n: usize,
    pub k: f64,
    pub delta: f64,
    pub zones: Vec<Zone>,
    /// Unscaled coefficient of the outgoing function (`H_n(kr)` or
    /// `r^{-n}`) beyond the ring.
    pub exterior: C64,
    /// Infinity-norm condition estimate of the interface system.
    pub condition: f64,
    /// Largest relative mismatch of `u` or `s a ∂_r u` at the interfaces.
    pub interface_residual: f64,
}

fn bessel_pair(n: usize, z: C64) -> Result<[(C64, C64); 2], OracleError> {
    if z.norm() == 0.0 {
        let j = if n == 0 { 1.0 } else { 0.0 };
        let dj = if n == 1 { 0.5 } else { 0.0 };
        return Ok([(C64::new(j, 0.0), C64::new(dj, 0.0)), (C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0))]);
    }
    let t = BesselTable::new(n, z)?;
    Ok([(t.j[n], t.dj(n)), (t.h1(n), t.dh1(n))])
}

impl Zone {
    /// Unscaled basis values and radial derivatives at `r`.
    fn basis(&self, n: usize, k: f64, r: f64) -> Result<[(C64, C64); 2], OracleError> {
        let nf = n as f64;
        if k == 0.0 {
            if r == 0.0 {
                let d = if n == 1 { 1.0 } else { 0.0 };
                return Ok([(C64::new(0.0, 0.0), C64::new(d, 0.0)), (C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0))]);
            }
            let p = r.powf(nf);
            return Ok([(C64::new(p, 0.0), C64::new(nf * p / r, 0.0)), (C64::new(1.0 / p, 0.0), C64::new(-nf / (p * r), 0.0))]);
        }
        match self.profile {
            RadialProfile::Constant => {
                let b = bessel_pair(n, self.kappa * r)?;
                Ok([(b[0].0, b[0].1 * self.kappa), (b[1].0, b[1].1 * self.kappa)])
            }
            RadialProfile::Kelvin { radius } => {
                let rho = radius * radius / r;
                let b = bessel_pair(n, self.kappa * rho)?;
                let d = -self.kappa * rho / r;
                Ok([(b[0].0, b[0].1 * d), (b[1].0, b[1].1 * d)])
            }
        }
    }

    fn scaled(&self, n: usize, k: f64, r: f64) -> Result<[(C64, C64); 2], OracleError> {
        let b = self.basis(n, k, r)?;
        Ok([(b[0].0 / self.scale[0], b[0].1 / self.scale[0]), (b[1].0 / self.scale[1], b[1].1 / self.scale[1])])
    }

    /// Field and radial derivative at `r` inside the zone.
    pub fn eval(&self, n: usize, k: f64, r: f64) -> Result<(C64, C64), OracleError> {
        let b = self.scaled(n, k, r)?;
        let mut u = C64::new(0.0, 0.0);
        let mut du = C64::new(0.0, 0.0);
        for i in 0..2 {
            if self.active[i] {
                u += self.amplitudes[i] * b[i].0;
                du += self.amplitudes[i] * b[i].1;
            }
        }
        Ok((u, du))
    }
}

fn check_layers(layers: &[RadialLayer], ring: f64) -> Result<(), OracleError> {
    let bad = |m: &str| Err(OracleError::Precondition(m.to_string()));
    if layers.is_empty() {
        return bad("at least one layer");
    }
    if layers[0].inner != 0.0 {
        return bad("innermost layer starts at 0");
    }
    if matches!(layers[0].profile, RadialProfile::Kelvin { .. }) {
        return bad("innermost layer cannot carry a Kelvin profile");
    }
    for (i, l) in layers.iter().enumerate() {
        if !(l.outer > l.inner) || !(l.a > 0.0) || !(l.sigma > 0.0) {
            return bad("radii increasing, a > 0 and sigma > 0");
        }
        if i > 0 && layers[i - 1].outer != l.inner {
            return bad("layers must be contiguous");
        }
    }
    if !(ring > layers[layers.len() - 1].outer) {
        return bad("ring strictly outside all layers");
    }
    Ok(())
}

/// Solve one angular mode `n` for the ring source `(radius, amplitude)`,
/// where `amplitude` is the jump of `∂_r u` across the ring.
pub fn radial_layered_solve(layers: &[RadialLayer], n: usize, k: f64, delta: f64, source_ring: (f64, C64)) -> Result<ModeSolution, OracleError> {
    let (ring, amp) = source_ring;
    check_layers(layers, ring)?;
    if k == 0.0 && n == 0 {
        return Err(OracleError::Precondition("mode 0 requires k > 0".into()));
    }
    if !(k >= 0.0 && delta >= 0.0) {
        return Err(OracleError::Precondition("k >= 0 and delta >= 0".into()));
    }
    let s_neg = C64::new(-1.0, -delta);
    let mut zones: Vec<Zone> = layers
        .iter()
        .map(|l| {
            let (s, s0) = if l.negative { (s_neg, -1.0) } else { (C64::new(1.0, 0.0), 1.0) };
            let kappa = k * (C64::new(s0 * l.sigma, 0.0) / (s * l.a)).sqrt();
            Zone { inner: l.inner, outer: l.outer, flux_coef: s * l.a, kappa, profile: l.profile, amplitudes: [C64::new(0.0, 0.0); 2], scale: [1.0; 2], active: [true; 2] }
        })
        .collect();
    let last = layers[layers.len() - 1].outer;
    let bg = |inner, outer| Zone {
        inner,
        outer,
        flux_coef: C64::new(1.0, 0.0),
        kappa: C64::new(k, 0.0),
        profile: RadialProfile::Constant,
        amplitudes: [C64::new(0.0, 0.0); 2],
        scale: [1.0; 2],
        active: [true; 2],
    };
    zones.push(bg(last, ring));
    zones.push(bg(ring, f64::INFINITY));
    let nz = zones.len();
    zones[0].active = [true, false];
    zones[nz - 1].active = [false, true];
    for z in &mut zones {
        let mut sc = [0.0f64; 2];
        for r in [z.inner, z.outer] {
            if r == 0.0 || !r.is_finite() {
                continue;
            }
            let b = z.basis(n, k, r)?;
            for i in 0..2 {
                sc[i] = sc[i].max(b[i].0.norm());
            }
        }
        for i in 0..2 {
            z.scale[i] = if sc[i] > 0.0 && sc[i].is_finite() { sc[i] } else { 1.0 };
        }
    }
    // unknown index of (zone, basis)
    let mut index = vec![[usize::MAX; 2]; nz];
    let mut m = 0;
    for (zi, z) in zones.iter().enumerate() {
        for b in 0..2 {
            if z.active[b] {
                index[zi][b] = m;
                m += 1;
            }
        }
    }
    let mut a = DenseMatrix::zeros(m);
    let mut rhs = vec![C64::new(0.0, 0.0); m];
    for i in 0..nz - 1 {
        let rho = zones[i].outer;
        let (l, r) = (&zones[i], &zones[i + 1]);
        let bl = l.scaled(n, k, rho)?;
        let br = r.scaled(n, k, rho)?;
        let (row_u, row_q) = (2 * i, 2 * i + 1);
        for b in 0..2 {
            if l.active[b] {
                a.add(row_u, index[i][b], bl[b].0);
                a.add(row_q, index[i][b], rho * l.flux_coef * bl[b].1);
            }
            if r.active[b] {
                a.add(row_u, index[i + 1][b], -br[b].0);
                a.add(row_q, index[i + 1][b], -rho * r.flux_coef * br[b].1);
            }
        }
        if i == nz - 2 {
            rhs[row_q] = -rho * amp;
        }
    }
    let norm_a = a.norm_inf();
    let lu = DenseLu::factor(a.clone()).map_err(|_| OracleError::Singular { mode: n })?;
    let x = lu.solve(&rhs).map_err(|_| OracleError::Singular { mode: n })?;
    let condition = lu.condition_inf(norm_a);
    for (zi, z) in zones.iter_mut().enumerate() {
        for b in 0..2 {
            if z.active[b] {
                z.amplitudes[b] = x[index[zi][b]];
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..nz - 1 {
        let rho = zones[i].outer;
        let (ul, dl) = zones[i].eval(n, k, rho)?;
        let (ur, dr) = zones[i + 1].eval(n, k, rho)?;
        let jump = if i == nz - 2 { amp } else { C64::new(0.0, 0.0) };
        let (ql, qr) = (zones[i].flux_coef * dl, zones[i + 1].flux_coef * dr);
        let su = ul.norm() + ur.norm();
        let sq = ql.norm() + qr.norm() + jump.norm();
        if su > 0.0 {
            worst = worst.max((ul - ur).norm() / su);
        }
        if sq > 0.0 {
            worst = worst.max((ql - qr + jump).norm() / sq);
        }
    }
    let outer = &zones[nz - 1];
    let exterior = outer.amplitudes[1] / outer.scale[1];
    Ok(ModeSolution { n, k, delta, zones, exterior, condition, interface_residual: worst })
}

impl ModeSolution {
    pub fn eval(&self, r: f64) -> Result<C64, OracleError> {
        Ok(self.eval_with_derivative(r)?.0)
    }

    /// Radial profile and its derivative at `r`.
    pub fn eval_with_derivative(&self, r: f64) -> Result<(C64, C64), OracleError> {
        let z = self
            .zones
            .iter()
            .find(|z| r <= z.outer)
            .ok_or_else(|| OracleError::Precondition(format!("radius {r} outside all zones")))?;
        z.eval(self.n, self.k, r)
    }
}

/// Mode sum for a ring density, evaluable with its gradient anywhere.
#[derive(Clone, Debug)]
pub struct RingOracle {
    pub modes: Vec<RingMode>,
    pub solutions: Vec<ModeSolution>,
}

impl RingOracle {
    pub fn new(layers: &[RadialLayer], ring: f64, modes: &[RingMode], k: f64, delta: f64) -> Result<Self, OracleError> {
        let solutions = modes
            .iter()
            .map(|m| radial_layered_solve(layers, m.n, k, delta, (ring, C64::new(1.0, 0.0))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { modes: modes.to_vec(), solutions })
    }

    pub fn value(&self, p: Point2) -> Result<C64, OracleError> {
        let (r, th) = (p.norm(), p.angle());
        let mut v = C64::new(0.0, 0.0);
        for (m, s) in self.modes.iter().zip(&self.solutions) {
            let a = m.n as f64 * th;
            v += s.eval(r)? * (m.cos_amp * a.cos() + m.sin_amp * a.sin());
        }
        Ok(v)
    }

    /// Value and Cartesian gradient; the gradient at the origin is taken
    /// from a point slightly off it.
    pub fn value_gradient(&self, p: Point2) -> Result<(C64, [C64; 2]), OracleError> {
        let r = p.norm().max(1e-12);
        let th = p.angle();
        let (c, s) = (th.cos(), th.sin());
        let mut v = C64::new(0.0, 0.0);
        let (mut dr, mut dth) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (m, sol) in self.modes.iter().zip(&self.solutions) {
            let nf = m.n as f64;
            let a = nf * th;
            let ang = m.cos_amp * a.cos() + m.sin_amp * a.sin();
            let dang = nf * (m.sin_amp * a.cos() - m.cos_amp * a.sin());
            let (f, df) = sol.eval_with_derivative(r)?;
            v += f * ang;
            dr += df * ang;
            dth += f * dang / r;
        }
        Ok((v, [dr * c - dth * s, dr * s + dth * c]))
    }

    pub fn field(&self, mesh: Arc<TriMesh>) -> Result<DiscreteField, OracleError> {
        let values = mesh.nodes.iter().map(|&p| self.value(p)).collect::<Result<Vec<_>, _>>()?;
        DiscreteField::new(mesh, values).map_err(|e| OracleError::Precondition(e.to_string()))
    }
}

/// Nodal values of `Σ R_n(|x|)(c_n cos nθ + s_n sin nθ)` for a ring density
/// with the given modes.
pub fn oracle_field(layers: &[RadialLayer], ring: f64, modes: &[RingMode], k: f64, delta: f64, mesh: Arc<TriMesh>) -> Result<DiscreteField, OracleError> {
    RingOracle::new(layers, ring, modes, k, delta)?.field(mesh)
}

/// Radial layers of the object-free circular layouts.
pub fn radial_layers_for(kind: ScenarioKind, cfg: &GeometryConfig) -> Result<Vec<RadialLayer>, OracleError> {
    let neg = |inner, outer, profile| RadialLayer { inner, outer, a: 1.0, sigma: 1.0, profile, negative: true };
    match kind {
        ScenarioKind::QuasistaticCloak | ScenarioKind::SuperlensNoInnerLayer => Ok(vec![
            RadialLayer::new(0.0, cfg.r1, 1.0, 1.0),
            neg(cfg.r1, cfg.r2, RadialProfile::Constant),
            RadialLayer::new(cfg.r2, cfg.r3, 1.0, 1.0),
        ]),
        ScenarioKind::FreqCloak => Ok(vec![
            RadialLayer::new(0.0, cfg.r1, 1.0, (cfg.r3 / cfg.r1).powi(2)),
            neg(cfg.r1, cfg.r2, RadialProfile::Kelvin { radius: cfg.r2 }),
            RadialLayer::new(cfg.r2, cfg.r3, 1.0, 1.0),
        ]),
        other => Err(OracleError::Precondition(format!("{other} has no radial oracle"))),
    }
}

/// One CSV row per zone and mode.
pub fn amplitudes_csv(solutions: &[ModeSolution]) -> String {
    let mut out = String::from("n,delta,zone,inner,outer,regular_re,regular_im,singular_re,singular_im,condition,interface_residual\n");
    for s in solutions {
        for (i, z) in s.zones.iter().enumerate() {
            let a = [z.amplitudes[0] / z.scale[0], z.amplitudes[1] / z.scale[1]];
            let cols = [z.inner, z.outer, a[0].re, a[0].im, a[1].re, a[1].im, s.condition, s.interface_residual];
            let nums: Vec<String> = cols.iter().map(|v| sci(*v)).collect();
            out.push_str(&format!("{},{},{},{}\n", s.n, sci(s.delta), i, nums.join(",")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bessel, BesselKind};

    fn homogeneous() -> Vec<RadialLayer> {
        vec![RadialLayer::new(0.0, 1.0, 1.0, 1.0), RadialLayer::new(1.0, 2.0, 1.0, 1.0)]
    }

    #[test]
    fn homogeneous_quasistatic_matches_free_ring() {
        // free-space mode n: u = -ρ/(2n) (r/ρ)^n inside, -ρ/(2n) (ρ/r)^n outside
        for n in 1..6 {
            let s = radial_layered_solve(&homogeneous(), n, 0.0, 0.0, (4.0, C64::new(1.0, 0.0))).unwrap();
            for &r in &[0.3f64, 1.5, 3.0, 4.0, 6.0] {
                let nf = n as f64;
                let expect = if r <= 4.0 { -2.0 / nf * (r / 4.0).powf(nf) } else { -2.0 / nf * (4.0f64 / r).powf(nf) };
                assert!((s.eval(r).unwrap().re - expect).abs() < 1e-12 * expect.abs().max(1e-3));
            }
            assert!(s.interface_residual < 1e-12);
        }
    }

    #[test]
    fn homogeneous_helmholtz_matches_free_ring() {
        // free-space: u = (iπρ/2) J_n(kr_<) H_n(kr_>)·(-1)... check jump and regularity instead
        let k = 0.7;
        let rho = 4.0;
        for n in 0..4 {
            let s = radial_layered_solve(&homogeneous(), n, k, 0.0, (rho, C64::new(1.0, 0.0))).unwrap();
            let jr = bessel(BesselKind::J, n, k * rho).unwrap();
            let hr = bessel(BesselKind::H1, n, k * rho).unwrap();
            let c = C64::new(0.0, -std::f64::consts::PI * rho / 2.0);
            for &r in &[0.5, 2.5, 5.0] {
                let (jl, hl) = (bessel(BesselKind::J, n, k * r).unwrap(), bessel(BesselKind::H1, n, k * r).unwrap());
                let expect = if r < rho { c * hr * jl } else { c * jr * hl };
                assert!((s.eval(r).unwrap() - expect).norm() < 1e-10 * expect.norm());
            }
        }
    }

    #[test]
    fn interface_residuals_and_condition_are_reported() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        for kind in [ScenarioKind::QuasistaticCloak, ScenarioKind::FreqCloak] {
            let layers = radial_layers_for(kind, &cfg).unwrap();
            let k = if kind == ScenarioKind::FreqCloak { 0.5 } else { 0.0 };
            for n in 1..8 {
                let s = radial_layered_solve(&layers, n, k, 1e-3, (4.5, C64::new(1.0, 0.0))).unwrap();
                assert!(s.interface_residual < 1e-10, "{kind} n={n}: {}", s.interface_residual);
                assert!(s.condition.is_finite() && s.condition >= 1.0);
            }
        }
    }

    #[test]
    fn cloak_exterior_tends_to_free_space() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        for (kind, k) in [(ScenarioKind::QuasistaticCloak, 0.0), (ScenarioKind::FreqCloak, 0.5)] {
            let layers = radial_layers_for(kind, &cfg).unwrap();
            let free = radial_layered_solve(&homogeneous(), 2, k, 0.0, (4.5, C64::new(1.0, 0.0))).unwrap();
            let mut last = f64::INFINITY;
            for d in [1e-1, 1e-2, 1e-3, 1e-4] {
                let s = radial_layered_solve(&layers, 2, k, d, (4.5, C64::new(1.0, 0.0))).unwrap();
                let diff = (s.exterior - free.exterior).norm() / free.exterior.norm();
                assert!(diff < last, "{kind}: {diff} at {d}");
                last = diff;
            }
            assert!(last < 1e-3, "{kind}: {last}");
        }
    }

    #[test]
    fn splitting_a_layer_leaves_exterior_unchanged() {
        let a = vec![RadialLayer::new(0.0, 1.0, 3.0, 2.0), RadialLayer::new(1.0, 3.0, 0.5, 1.5)];
        let b = vec![RadialLayer::new(0.0, 1.0, 3.0, 2.0), RadialLayer::new(1.0, 2.2, 0.5, 1.5), RadialLayer::new(2.2, 3.0, 0.5, 1.5)];
        for (k, n) in [(0.0, 3), (0.8, 0), (0.8, 5)] {
            let sa = radial_layered_solve(&a, n, k, 0.0, (3.5, C64::new(1.0, 0.0))).unwrap();
            let sb = radial_layered_solve(&b, n, k, 0.0, (3.5, C64::new(1.0, 0.0))).unwrap();
            assert!((sa.exterior - sb.exterior).norm() <= 1e-10 * sa.exterior.norm());
        }
    }

    #[test]
    fn annulus_amplitude_grows_while_exterior_converges() {
        let cfg = GeometryConfig::circular(1.0, 2.0, 5.0, 7.0);
        let layers = radial_layers_for(ScenarioKind::QuasistaticCloak, &cfg).unwrap();
        let free = radial_layered_solve(&homogeneous(), 3, 0.0, 0.0, (4.5, C64::new(1.0, 0.0))).unwrap();
        let s3 = radial_layered_solve(&layers, 3, 0.0, 1e-3, (4.5, C64::new(1.0, 0.0))).unwrap();
        let s6 = radial_layered_solve(&layers, 3, 0.0, 1e-6, (4.5, C64::new(1.0, 0.0))).unwrap();
        let d3 = (s3.exterior - free.exterior).norm();
        let d6 = (s6.exterior - free.exterior).norm();
        assert!(d6 < d3);
    }

    #[test]
    fn rejects_bad_layouts() {
        let l = homogeneous();
        assert!(radial_layered_solve(&l, 0, 0.0, 0.0, (4.0, C64::new(1.0, 0.0))).is_err());
        assert!(radial_layered_solve(&l, 1, 0.0, 0.0, (1.5, C64::new(1.0, 0.0))).is_err());
        let gap = vec![RadialLayer::new(0.0, 1.0, 1.0, 1.0), RadialLayer::new(1.2, 2.0, 1.0, 1.0)];
        assert!(radial_layered_solve(&gap, 1, 0.0, 0.0, (4.0, C64::new(1.0, 0.0))).is_err());
    }
}
