//! Loss sweeps: lossy solves, reference fields and per-δ records.

use std::sync::Arc;

use super::config::{MeshSchedule, ScenarioConfig};
use super::diagnostics::{reflection_diagnostics, ReflectionRecord};
use super::fit::{fit_rate, RateFit};
use super::ExperimentError;
use crate::discretization::{assemble_with_support, dtn_operator, norm, norm_where, solve_system, DiscreteField, DtnOperator, NormKind, SolveStats};
use crate::geometry::{GeometryConfig, RegionTag, TriMesh};
use crate::media::{build_medium, build_reference_medium, scenario_maps, MediumSpec, ObjectSpec, ReferenceKind};

/// Mesh and boundary operator shared by every solve of one schedule.
pub struct Workspace {
    pub sc: ScenarioConfig,
    pub cfg: GeometryConfig,
    pub mesh: Arc<TriMesh>,
    pub dtn: DtnOperator,
}

impl Workspace {
    pub fn new(sc: &ScenarioConfig, schedule: MeshSchedule) -> Result<Self, ExperimentError> {
        sc.validate()?;
        let cfg = sc.mesh_geometry()?;
        let mesh = Arc::new(schedule.build(&cfg)?);
        let dtn = dtn_operator(sc.k, cfg.r_out, sc.dtn_modes)?;
        Ok(Self { sc: sc.clone(), cfg, mesh, dtn })
    }

    pub fn solve(&self, med: &MediumSpec) -> Result<(DiscreteField, SolveStats), ExperimentError> {
        let inner = self.sc.source_inner.unwrap_or(self.cfg.r3);
        let sys = assemble_with_support(&self.mesh, med, &self.sc.source, &self.dtn, inner)?;
        Ok(solve_system(&sys)?)
    }

    pub fn lossy_medium(&self, delta: f64, object: ObjectSpec) -> Result<MediumSpec, ExperimentError> {
        Ok(build_medium(self.sc.kind, &self.cfg, object, delta, self.sc.k)?)
    }

    pub fn reference(&self, which: ReferenceKind, object: ObjectSpec) -> Result<DiscreteField, ExperimentError> {
        let med = build_reference_medium(self.sc.kind, &self.cfg, object, self.sc.k, which)?;
        Ok(self.solve(&med)?.0)
    }

    /// Elements of the observation annulus.
    pub fn observed(&self) -> impl Fn(usize) -> bool + '_ {
        move |e| self.sc.in_observation(self.mesh.barycenter(e))
    }

    pub fn obs_norm(&self, u: &DiscreteField, kind: NormKind) -> Result<f64, ExperimentError> {
        Ok(norm_where(u, self.observed(), kind)?)
    }
}

/// Reference field predicted as the δ → 0 limit outside `B_r3`.
pub fn reference_solution(sc: &ScenarioConfig) -> Result<DiscreteField, ExperimentError> {
    let ws = Workspace::new(sc, sc.mesh)?;
    ws.reference(ReferenceKind::Predicted, sc.object)
}

/// `δ ∫ |∇u|²` over the plasmonic annulus.
pub fn power(u: &DiscreteField, delta: f64) -> Result<f64, ExperimentError> {
    Ok(delta * norm(u, &[RegionTag::AnnulusR2R1], NormKind::H1Semi)?.powi(2))
}

/// Quantities recorded at one loss value.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRecord {
    pub delta: f64,
    /// `‖u_δ − û‖_{H¹}` over the observation annulus.
    pub error_h1: f64,
    pub error_l2: f64,
    /// `‖u_δ − û‖_{L²} / ‖û‖_{L²}`.
    pub error_l2_rel: f64,
    /// Same against the competing reference.
    pub alt_l2_rel: f64,
    /// Object signature `u_δ − u_δ⁰` compared with the signature of the
    /// predicted and of the competing reference, relative to `‖û‖_{L²}`.
    pub signature_pred_rel: Option<f64>,
    pub signature_alt_rel: Option<f64>,
    pub power: f64,
    pub reflection: Option<ReflectionRecord>,
    /// Two-mesh estimate of the discretization error of `error_h1`.
    pub floor_h1: Option<f64>,
    /// Two-mesh estimate for `signature_pred_rel`.
    pub floor_signature: Option<f64>,
    /// Two-mesh estimate for the `∂B_r2` reflection mismatch.
    pub floor_reflection: Option<f64>,
    pub unknowns: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshInfo {
    pub nodes: usize,
    pub elements: usize,
    pub hash: String,
    pub h_max: f64,
    pub h_min: f64,
}

impl MeshInfo {
    pub fn of(mesh: &TriMesh) -> Self {
        let hs: Vec<f64> = (0..mesh.num_elements()).map(|e| mesh.element_h(e)).collect();
        Self {
            nodes: mesh.num_nodes(),
            elements: mesh.num_elements(),
            hash: mesh.hash_hex(),
            h_max: hs.iter().cloned().fold(0.0, f64::max),
            h_min: hs.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Sweep results; `records` stop at the first failed δ.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub config: ScenarioConfig,
    pub records: Vec<DeltaRecord>,
    /// Records of the coarser floor mesh, aligned with `records`.
    pub coarse_records: Vec<DeltaRecord>,
    pub reference_l2: f64,
    /// `‖û_alt − û‖_{L²} / ‖û‖_{L²}` over the observation annulus.
    pub reference_separation: f64,
    pub source_norm: f64,
    pub mesh: MeshInfo,
    pub coarse_mesh: Option<MeshInfo>,
    pub fit: Option<RateFit>,
    /// Why no rate was fitted.
    pub fit_note: Option<String>,
    /// Slope on the coarse mesh over the same points, for the robustness check.
    pub coarse_slope: Option<f64>,
    /// Offending δ and error of an aborted sweep.
    pub aborted: Option<(f64, String)>,
}

impl ConvergenceReport {
    pub fn last(&self) -> Option<&DeltaRecord> {
        self.records.last()
    }

    pub fn power_at(&self, delta: f64) -> Option<f64> {
        self.records.iter().find(|r| (r.delta / delta - 1.0).abs() < 1e-9).map(|r| r.power)
    }
}

struct MeshRun {
    records: Vec<DeltaRecord>,
    reference_l2: f64,
    separation: f64,
    mesh: MeshInfo,
    aborted: Option<(f64, String)>,
}

fn sweep_on(sc: &ScenarioConfig, schedule: MeshSchedule) -> Result<MeshRun, ExperimentError> {
    let ws = Workspace::new(sc, schedule)?;
    let free = ObjectSpec::contrast(1.0);
    let with_object = !ws.cfg.inclusions.is_empty() || ws.cfg.slab.is_some();
    let pred = ws.reference(ReferenceKind::Predicted, sc.object)?;
    let alt = ws.reference(ReferenceKind::Alternative, sc.object)?;
    let ref_l2 = ws.obs_norm(&pred, NormKind::L2)?;
    if !(ref_l2 > 0.0) {
        return Err(ExperimentError::Config("reference field vanishes on the observation annulus".into()));
    }
    let separation = ws.obs_norm(&alt.sub(&pred)?, NormKind::L2)? / ref_l2;
    let signatures = if sc.signature && with_object {
        let hat0 = ws.reference(ReferenceKind::Predicted, free)?;
        Some((pred.sub(&hat0)?, alt.sub(&hat0)?))
    } else {
        None
    };
    let maps = if ws.cfg.slab.is_none() && sc.source_inner.is_none() { Some(scenario_maps(&ws.cfg)?) } else { None };
    let mut records = Vec::with_capacity(sc.deltas.len());
    let mut aborted = None;
    for &delta in &sc.deltas {
        let step = || -> Result<DeltaRecord, ExperimentError> {
            let med = ws.lossy_medium(delta, sc.object)?;
            let (u, stats) = ws.solve(&med)?;
            let diff = u.sub(&pred)?;
            let error_l2 = ws.obs_norm(&diff, NormKind::L2)?;
            let (sp, sa) = match &signatures {
                Some((sig_pred, sig_alt)) => {
                    let (u0, _) = ws.solve(&ws.lossy_medium(delta, free)?)?;
                    let d = u.sub(&u0)?;
                    (
                        Some(ws.obs_norm(&d.sub(sig_pred)?, NormKind::L2)? / ref_l2),
                        Some(ws.obs_norm(&d.sub(sig_alt)?, NormKind::L2)? / ref_l2),
                    )
                }
                None => (None, None),
            };
            let reflection = match &maps {
                Some((f, g)) => Some(reflection_diagnostics(&u, &med, f, g)?),
                None => None,
            };
            Ok(DeltaRecord {
                delta,
                error_h1: ws.obs_norm(&diff, NormKind::H1)?,
                error_l2,
                error_l2_rel: error_l2 / ref_l2,
                alt_l2_rel: ws.obs_norm(&u.sub(&alt)?, NormKind::L2)? / ref_l2,
                signature_pred_rel: sp,
                signature_alt_rel: sa,
                power: power(&u, delta)?,
                reflection,
                floor_h1: None,
                floor_signature: None,
                floor_reflection: None,
                unknowns: stats.unknowns,
                residual: stats.residual,
            })
        };
        match step() {
            Ok(r) => records.push(r),
            Err(e) => {
                aborted = Some((delta, e.to_string()));
                break;
            }
        }
    }
    Ok(MeshRun { records, reference_l2: ref_l2, separation, mesh: MeshInfo::of(&ws.mesh), aborted })
}

/// Solve the lossy problem at every δ of the schedule and record errors
/// against the references, power and reflection mismatches. With
/// `two_mesh`, the same sweep on the next coarser schedule provides
/// per-δ floor estimates and the rate fit uses only points above three
/// times their floor.
pub fn run_sweep(sc: &ScenarioConfig) -> Result<ConvergenceReport, ExperimentError> {
    let fine = sweep_on(sc, sc.mesh)?;
    let coarse = if sc.two_mesh { Some(sweep_on(sc, sc.mesh.coarser())?) } else { None };
    let mut records = fine.records;
    let coarse_records = coarse.as_ref().map(|c| c.records.clone()).unwrap_or_default();
    for (r, c) in records.iter_mut().zip(&coarse_records) {
        r.floor_h1 = Some((r.error_h1 - c.error_h1).abs());
        r.floor_signature = match (r.signature_pred_rel, c.signature_pred_rel) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        r.floor_reflection = match (&r.reflection, &c.reflection) {
            (Some(a), Some(b)) => Some((a.r2.total() - b.r2.total()).abs()),
            _ => None,
        };
    }
    let aborted = fine.aborted.or(coarse.as_ref().and_then(|c| c.aborted.clone()));
    let mut rep = ConvergenceReport {
        config: sc.clone(),
        records,
        coarse_records,
        reference_l2: fine.reference_l2,
        reference_separation: fine.separation,
        source_norm: sc.source.norm(),
        mesh: fine.mesh,
        coarse_mesh: coarse.map(|c| c.mesh),
        fit: None,
        fit_note: None,
        coarse_slope: None,
        aborted,
    };
    match fit_rate(&rep, 0..rep.records.len()) {
        Ok(fit) => {
            rep.coarse_slope = coarse_slope(&rep, &fit);
            rep.fit = Some(fit);
        }
        Err(e) => rep.fit_note = Some(e.to_string()),
    }
    Ok(rep)
}

fn coarse_slope(rep: &ConvergenceReport, fit: &RateFit) -> Option<f64> {
    let pts: Vec<(f64, f64)> = fit
        .indices
        .iter()
        .filter_map(|&i| rep.coarse_records.get(i))
        .map(|r| (r.delta.ln(), r.error_h1.ln()))
        .collect();
    (pts.len() == fit.indices.len() && pts.len() >= 2).then(|| super::fit::least_squares(&pts).0)
}

/// Power at every δ of the schedule only, without references.
pub fn power_sweep(sc: &ScenarioConfig) -> Result<Vec<(f64, f64)>, ExperimentError> {
    let ws = Workspace::new(sc, sc.mesh)?;
    sc.deltas
        .iter()
        .map(|&d| {
            let (u, _) = ws.solve(&ws.lossy_medium(d, sc.object)?)?;
            Ok((d, power(&u, d)?))
        })
        .collect()
}
