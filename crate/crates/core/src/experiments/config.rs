//! Scenario configuration and mesh schedules.

use super::ExperimentError;
use crate::discretization::{SourceSpec, MIN_MODES};
use crate::geometry::{build_mesh, refine_uniform, GeometryConfig, Point2, TriMesh};
use crate::media::{lens_parameters, scenario_geometry, slab_geometry, ObjectSpec, ScenarioKind};

/// Base mesh size and grading followed by uniform refinements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSchedule {
    pub h: f64,
    /// Refinement factor toward the plasmonic interfaces.
    pub grading: f64,
    pub refine: usize,
}

impl MeshSchedule {
    pub fn build(&self, cfg: &GeometryConfig) -> Result<TriMesh, ExperimentError> {
        let mut mesh = build_mesh(cfg, self.h, self.grading)?;
        for _ in 0..self.refine {
            mesh = refine_uniform(&mesh)?;
        }
        Ok(mesh)
    }

    /// Next coarser schedule, used for the two-mesh floor estimate.
    pub fn coarser(&self) -> MeshSchedule {
        if self.refine > 0 {
            MeshSchedule { refine: self.refine - 1, ..*self }
        } else {
            MeshSchedule { h: 2.0 * self.h, ..*self }
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.h > 0.0 && self.h.is_finite()) || !(self.grading >= 1.0) {
            return Err(ExperimentError::Config("mesh requires h > 0 and grading >= 1".into()));
        }
        Ok(())
    }
}

/// `10^{-first}, …, 10^{-last}` with `per_decade` values per decade.
pub fn geometric_deltas(first: f64, last: f64, per_decade: usize) -> Vec<f64> {
    let n = ((last - first) * per_decade as f64).round() as usize;
    (0..=n).map(|i| 10f64.powf(-(first + i as f64 / per_decade as f64))).collect()
}

/// Everything that determines one sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Base layout without inclusions; the scenario adds its own.
    pub geometry: GeometryConfig,
    pub r0: f64,
    pub object: ObjectSpec,
    pub source: SourceSpec,
    pub k: f64,
    /// Strictly decreasing loss values.
    pub deltas: Vec<f64>,
    pub mesh: MeshSchedule,
    /// Outer radius `R` of the observation annulus `B_R ∖ B_r3`.
    pub observation_radius: f64,
    pub dtn_modes: usize,
    /// Inner radius of the admitted source support when the source is moved
    /// inside the shell; `None` keeps it outside `B_r3`.
    pub source_inner: Option<f64>,
    /// Also solve with a coarser mesh to estimate the discretization floor.
    pub two_mesh: bool,
    /// Also solve the object-free lossy problem to isolate the object's
    /// signature.
    pub signature: bool,
    /// Accept the shipped slab maps, which are marked experimental.
    pub accept_experimental: bool,
}

impl ScenarioConfig {
    /// Defaults: `r1 = 1`, `r2 = 2`, `R0 = 5`, `R_out = 7`, object contrast
    /// 10 (100 for the lens without inner layer) with `r0 = 0.02 r1`, ring
    /// source midway between `r3` and `R0`, `k r2 = 1` for the
    /// finite-frequency cloak and the slab.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let (geometry, h) = match kind {
            ScenarioKind::SlabDc => (slab_geometry(1.0, 0.1, 6.5, 8.0, 9.0, 13.0).expect("shipped slab layout is valid"), 0.3),
            _ => (GeometryConfig::circular(1.0, 2.0, 5.0, 7.0), 0.15),
        };
        let k = match kind {
            ScenarioKind::FreqCloak | ScenarioKind::SlabDc => 1.0 / geometry.r2,
            _ => 0.0,
        };
        let contrast = if kind == ScenarioKind::SuperlensNoInnerLayer { 100.0 } else { 10.0 };
        let ring = 0.5 * (geometry.r3 + geometry.source_outer);
        Self {
            kind,
            r0: 0.02 * geometry.r1,
            object: ObjectSpec::contrast(contrast),
            source: SourceSpec::ring(ring, &[(1, 1.0, 0.5), (2, 0.5, 1.0), (3, 0.3, -0.2)]),
            k,
            deltas: geometric_deltas(1.0, 4.0, 2),
            mesh: MeshSchedule { h, grading: 3.0, refine: if kind == ScenarioKind::FreqCloak { 2 } else { 1 } },
            observation_radius: 1.5 * geometry.r3,
            dtn_modes: 32,
            source_inner: None,
            two_mesh: true,
            signature: true,
            accept_experimental: false,
            geometry,
        }
    }

    /// Magnification `M` and imaged radius `τ0` of the lens layouts.
    pub fn lens(&self) -> Option<(f64, f64)> {
        matches!(self.kind, ScenarioKind::SuperlensFull | ScenarioKind::SuperlensNoInnerLayer).then(|| lens_parameters(&self.geometry))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        self.geometry.validate()?;
        self.mesh.validate()?;
        if self.deltas.is_empty() {
            return bad("at least one delta");
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("deltas must be positive");
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return bad("deltas must be strictly decreasing");
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad("k >= 0");
        }
        if !(self.r0 >= 0.0 && self.r0 < self.geometry.r1) {
            return bad("0 <= r0 < r1");
        }
        let g = &self.geometry;
        if !(self.observation_radius > g.r3 && self.observation_radius < g.r_out) {
            return bad("observation radius must lie in (r3, R_out)");
        }
        if self.dtn_modes < MIN_MODES {
            return bad("at least 8 boundary modes");
        }
        if let Some((m, tau0)) = self.lens() {
            if !(m > 1.0) || (m * tau0 - g.r2).abs() > 1e-12 * g.r2 || (g.r3 / g.r1 - m).abs() > 1e-12 * m {
                return bad("lens requires M > 1, M tau0 = r2 and r3/r1 = M");
            }
        }
        if self.kind == ScenarioKind::SlabDc {
            if g.slab.is_none() {
                return bad("slab scenario requires slab geometry");
            }
            if !self.accept_experimental {
                return bad("slab maps are experimental; accept them explicitly");
            }
        } else if g.slab.is_some() {
            return bad("slab geometry is only valid for the slab scenario");
        }
        if let Some(inner) = self.source_inner {
            if !(inner >= g.r2 && inner < g.r3) {
                return bad("source_inner must lie in [r2, r3)");
            }
        }
        let cfg = self.mesh_geometry()?;
        self.source.validate_within(&cfg, self.k, self.source_inner.unwrap_or(cfg.r3))?;
        Ok(())
    }

    /// Scenario geometry with the source ring and observation circle resolved.
    pub fn mesh_geometry(&self) -> Result<GeometryConfig, ExperimentError> {
        let mut cfg = scenario_geometry(self.kind, &self.geometry, self.r0)?;
        if let Some(r) = self.source.ring_radius() {
            cfg = cfg.with_circle(r);
        }
        cfg = cfg.with_circle(self.observation_radius);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Whether an element with barycenter `p` belongs to `B_R ∖ B_r3`.
    pub fn in_observation(&self, p: Point2) -> bool {
        let r = p.norm();
        r > self.geometry.r3 && r < self.observation_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_is_half_decades() {
        let d = geometric_deltas(1.0, 4.0, 2);
        assert_eq!(d.len(), 7);
        assert!((d[0] - 0.1).abs() < 1e-15 && (d[6] - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn defaults_validate() {
        for kind in ScenarioKind::ALL {
            let mut sc = ScenarioConfig::default_for(kind);
            sc.accept_experimental = true;
            sc.validate().unwrap_or_else(|e| panic!("{kind}: {e}"));
        }
    }

    #[test]
    fn lens_relations_hold() {
        let sc = ScenarioConfig::default_for(ScenarioKind::SuperlensFull);
        let (m, tau0) = sc.lens().unwrap();
        assert_eq!(m, 4.0);
        assert_eq!(m * tau0, sc.geometry.r2);
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
        sc.deltas = vec![1e-2, 1e-1];
        assert!(sc.validate().is_err());
        let mut sc = ScenarioConfig::default_for(ScenarioKind::SlabDc);
        assert!(sc.validate().is_err());
        sc.accept_experimental = true;
        assert!(sc.validate().is_ok());
    }
}
