//! Scenario verdicts, CSV rows and the plain-text summary.

use std::fmt;
use std::fmt::Write as _;

use super::config::{MeshSchedule, ScenarioConfig};
use super::sweep::{run_sweep, ConvergenceReport, DeltaRecord};
use super::ExperimentError;
use crate::discretization::SourceSpec;
use crate::io::sci;
use crate::media::{ObjectSpec, ScenarioKind};

/// Largest admitted relative `L²` discrepancy at the smallest δ.
pub const DISCREPANCY_TOL: f64 = 0.05;
/// Smallest admitted fitted rate.
pub const MIN_RATE: f64 = 0.3;
/// Required ratio between the competing and the predicted discrepancy.
pub const MIN_SEPARATION: f64 = 3.0;
/// Largest admitted change of the fitted rate between the two meshes.
pub const RATE_ROBUSTNESS: f64 = 0.05;
/// Largest admitted growth of the absorbed power from δ = 1e-2 to 1e-4.
pub const MAX_POWER_GROWTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

/// Replacements for the scenario defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOverrides {
    pub deltas: Option<Vec<f64>>,
    pub mesh: Option<MeshSchedule>,
    pub object: Option<ObjectSpec>,
    pub r0: Option<f64>,
    pub source: Option<SourceSpec>,
    pub k: Option<f64>,
    pub two_mesh: Option<bool>,
    pub accept_experimental: bool,
}

impl SuiteOverrides {
    pub fn apply(&self, sc: &mut ScenarioConfig) {
        if let Some(d) = &self.deltas {
            sc.deltas = d.clone();
        }
        if let Some(m) = self.mesh {
            sc.mesh = m;
        }
        if let Some(o) = self.object {
            sc.object = o;
        }
        if let Some(r0) = self.r0 {
            sc.r0 = r0;
        }
        if let Some(s) = &self.source {
            sc.source = s.clone();
        }
        if let Some(k) = self.k {
            sc.k = k;
        }
        if let Some(t) = self.two_mesh {
            sc.two_mesh = t;
        }
        sc.accept_experimental |= self.accept_experimental;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub report: ConvergenceReport,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    /// Reported but left out of the overall verdict.
    pub excluded: bool,
}

/// Run the scenario defaults with `overrides` and judge the result.
pub fn run_scenario_suite(kind: ScenarioKind, overrides: &SuiteOverrides) -> Result<SuiteReport, ExperimentError> {
    let mut sc = ScenarioConfig::default_for(kind);
    overrides.apply(&mut sc);
    run_suite_config(&sc)
}

pub fn run_suite_config(sc: &ScenarioConfig) -> Result<SuiteReport, ExperimentError> {
    let excluded = sc.kind == ScenarioKind::SlabDc;
    if excluded && !sc.accept_experimental {
        return Err(ExperimentError::Config("SLAB_DC runs on the shipped experimental diffeomorphism, which must be accepted explicitly".into()));
    }
    let report = run_sweep(sc)?;
    let (verdict, reasons) = judge(&report);
    Ok(SuiteReport { report, verdict, reasons, excluded })
}

fn expects_rate(kind: ScenarioKind) -> bool {
    matches!(kind, ScenarioKind::QuasistaticCloak | ScenarioKind::FreqCloak | ScenarioKind::SlabDc)
}

/// `P(1e-4) / P(1e-2)` when both loss values were run.
pub fn power_growth(rep: &ConvergenceReport) -> Option<f64> {
    Some(rep.power_at(1e-4)? / rep.power_at(1e-2)?)
}

fn signature_separation(r: &DeltaRecord) -> Option<f64> {
    Some(r.signature_alt_rel? / r.signature_pred_rel?)
}

/// Apply the acceptance rule of the scenario to a finished sweep.
pub fn judge(rep: &ConvergenceReport) -> (Verdict, Vec<String>) {
    if let Some((d, e)) = &rep.aborted {
        return (Verdict::Fail, vec![format!("sweep aborted at delta = {d:e}: {e}")]);
    }
    let Some(last) = rep.last() else {
        return (Verdict::Fail, vec!["no loss value was solved".into()]);
    };
    let (mut fail, mut indeterminate) = (false, false);
    let mut reasons = Vec::new();
    let e = last.error_l2_rel;
    fail |= e > DISCREPANCY_TOL;
    reasons.push(format!("discrepancy {e:.3e} at delta = {:e} (limit {DISCREPANCY_TOL})", last.delta));

    if expects_rate(rep.config.kind) {
        match &rep.fit {
            Some(fit) => {
                fail |= fit.slope < MIN_RATE;
                reasons.push(format!("fitted rate {:.3} over {} points (minimum {MIN_RATE})", fit.slope, fit.indices.len()));
                if let Some(c) = rep.coarse_slope {
                    if (c - fit.slope).abs() >= RATE_ROBUSTNESS {
                        indeterminate = true;
                        reasons.push(format!("rate changes from {c:.3} to {:.3} between the meshes", fit.slope));
                    }
                }
            }
            None => {
                indeterminate = true;
                reasons.push(format!("no rate: {}", rep.fit_note.as_deref().unwrap_or("fit unavailable")));
            }
        }
        if rep.config.kind == ScenarioKind::QuasistaticCloak {
            if let Some(g) = power_growth(rep) {
                fail |= g > MAX_POWER_GROWTH;
                reasons.push(format!("power growth {g:.3e} from delta 1e-2 to 1e-4 (limit {MAX_POWER_GROWTH})"));
            }
        }
    } else {
        match signature_separation(last) {
            Some(s) if s >= MIN_SEPARATION => reasons.push(format!("signature separation {s:.3} (minimum {MIN_SEPARATION})")),
            Some(s) => {
                let masked = last.floor_signature.is_some_and(|fl| MIN_SEPARATION * fl > rep.reference_separation);
                if masked {
                    indeterminate = true;
                    reasons.push(format!("signature separation {s:.3} masked by the discretization floor"));
                } else {
                    fail = true;
                    reasons.push(format!("signature separation {s:.3} below {MIN_SEPARATION}"));
                }
            }
            None => {
                let s = last.alt_l2_rel / e;
                fail |= s < MIN_SEPARATION;
                reasons.push(format!("direct separation {s:.3} (minimum {MIN_SEPARATION})"));
            }
        }
    }
    let verdict = if fail {
        Verdict::Fail
    } else if indeterminate {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    (verdict, reasons)
}

pub const CSV_HEADER: &str = "delta,error_h1,error_l2,error_l2_rel,alt_l2_rel,signature_pred_rel,signature_alt_rel,power,reflection_r2,reflection_r3,floor_h1,floor_signature,floor_reflection,unknowns,residual";

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn json_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => sci(v),
        _ => "null".into(),
    }
}

fn json_str(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl ConvergenceReport {
    /// One row per δ, numbers in scientific notation, empty cells for
    /// quantities that were not computed.
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let (r2, r3) = match &r.reflection {
                Some(m) => (Some(m.r2.total()), Some(m.r3.total())),
                None => (None, None),
            };
            let cells = [
                sci(r.delta),
                sci(r.error_h1),
                sci(r.error_l2),
                sci(r.error_l2_rel),
                sci(r.alt_l2_rel),
                opt(r.signature_pred_rel),
                opt(r.signature_alt_rel),
                sci(r.power),
                opt(r2),
                opt(r3),
                opt(r.floor_h1),
                opt(r.floor_signature),
                opt(r.floor_reflection),
                r.unknowns.to_string(),
                sci(r.residual),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Named scalar results of the run.
    pub fn metrics(&self) -> Vec<(&'static str, Option<f64>)> {
        let last = self.last();
        vec![
            ("delta_min", last.map(|r| r.delta)),
            ("gamma_fit", self.fit.as_ref().map(|f| f.slope)),
            ("gamma_coarse", self.coarse_slope),
            ("fit_residual", self.fit.as_ref().map(|f| f.residual)),
            ("discrepancy_l2_rel", last.map(|r| r.error_l2_rel)),
            ("alternative_l2_rel", last.map(|r| r.alt_l2_rel)),
            ("signature_pred_rel", last.and_then(|r| r.signature_pred_rel)),
            ("signature_alt_rel", last.and_then(|r| r.signature_alt_rel)),
            ("signature_separation", last.and_then(signature_separation)),
            ("reference_separation", Some(self.reference_separation)),
            ("floor_h1", last.and_then(|r| r.floor_h1)),
            ("floor_signature", last.and_then(|r| r.floor_signature)),
            ("power_growth", power_growth(self)),
            ("source_norm", Some(self.source_norm)),
        ]
    }

    fn summary_lines(&self, s: &mut String) {
        let _ = writeln!(s, "  \"scenario\": {},", json_str(self.config.kind.name()));
        let _ = writeln!(s, "  \"mesh\": {{\"nodes\": {}, \"elements\": {}, \"hash\": {}}},", self.mesh.nodes, self.mesh.elements, json_str(&self.mesh.hash));
        if let Some(c) = &self.coarse_mesh {
            let _ = writeln!(s, "  \"coarse_mesh\": {{\"nodes\": {}, \"elements\": {}, \"hash\": {}}},", c.nodes, c.elements, json_str(&c.hash));
        }
        for (name, v) in self.metrics() {
            let _ = writeln!(s, "  {}: {},", json_str(name), json_num(v));
        }
        if let Some(note) = &self.fit_note {
            let _ = writeln!(s, "  \"fit_note\": {},", json_str(note));
        }
        if let Some((d, e)) = &self.aborted {
            let _ = writeln!(s, "  \"aborted\": {{\"delta\": {}, \"error\": {}}},", sci(*d), json_str(e));
        }
    }

    /// JSON-like plain-text summary without a verdict.
    pub fn summary(&self) -> String {
        let mut s = String::from("{\n");
        self.summary_lines(&mut s);
        let _ = writeln!(s, "  \"complete\": {}", self.aborted.is_none());
        s.push_str("}\n");
        s
    }
}

impl SuiteReport {
    pub fn csv(&self) -> String {
        self.report.csv()
    }

    /// JSON-like plain-text summary with the verdict and its reasons.
    pub fn summary(&self) -> String {
        let mut s = String::from("{\n");
        self.report.summary_lines(&mut s);
        let _ = writeln!(s, "  \"verdict\": {},", json_str(&self.verdict.to_string()));
        let _ = writeln!(s, "  \"excluded_from_verdict\": {},", self.excluded);
        let reasons: Vec<String> = self.reasons.iter().map(|r| json_str(r)).collect();
        let _ = writeln!(s, "  \"reasons\": [{}]", reasons.join(", "));
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{fit_points, MeshInfo};

    fn record(delta: f64, e: f64, sig: Option<(f64, f64)>) -> DeltaRecord {
        DeltaRecord {
            delta,
            error_h1: e,
            error_l2: e,
            error_l2_rel: e,
            alt_l2_rel: 0.5,
            signature_pred_rel: sig.map(|s| s.0),
            signature_alt_rel: sig.map(|s| s.1),
            power: 1.0,
            reflection: None,
            floor_h1: Some(1e-9),
            floor_signature: sig.map(|_| 1e-7),
            floor_reflection: None,
            unknowns: 10,
            residual: 1e-14,
        }
    }

    fn report(kind: ScenarioKind, records: Vec<DeltaRecord>) -> ConvergenceReport {
        let pts: Vec<_> = records.iter().map(|r| (r.delta, r.error_h1, r.floor_h1)).collect();
        let info = MeshInfo { nodes: 1, elements: 1, hash: "0".into(), h_max: 1.0, h_min: 1.0 };
        ConvergenceReport {
            config: ScenarioConfig::default_for(kind),
            fit: fit_points(&pts).ok(),
            records,
            coarse_records: Vec::new(),
            reference_l2: 1.0,
            reference_separation: 0.5,
            source_norm: 1.0,
            mesh: info,
            coarse_mesh: None,
            fit_note: None,
            coarse_slope: None,
            aborted: None,
        }
    }

    #[test]
    fn cloak_rule_needs_rate_and_discrepancy() {
        let good: Vec<_> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&d: &f64| record(d, 0.3 * d.sqrt(), None)).collect();
        let (v, _) = judge(&report(ScenarioKind::QuasistaticCloak, good));
        assert_eq!(v, Verdict::Pass);
        let flat: Vec<_> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&d| record(d, 0.01 * (1.0 + d), None)).collect();
        let (v, reasons) = judge(&report(ScenarioKind::QuasistaticCloak, flat));
        assert_eq!(v, Verdict::Fail, "{reasons:?}");
    }

    #[test]
    fn separation_rule() {
        let pass = report(ScenarioKind::CmCloakUnmodified, vec![record(1e-4, 0.01, Some((1e-6, 1e-5)))]);
        assert_eq!(judge(&pass).0, Verdict::Pass);
        let fail = report(ScenarioKind::CmCloakUnmodified, vec![record(1e-4, 0.01, Some((1e-5, 2e-5)))]);
        assert_eq!(judge(&fail).0, Verdict::Fail);
        let mut masked = report(ScenarioKind::CmCloakUnmodified, vec![record(1e-4, 0.01, Some((1e-5, 2e-5)))]);
        masked.records[0].floor_signature = Some(1.0);
        assert_eq!(judge(&masked).0, Verdict::Indeterminate);
    }

    #[test]
    fn csv_has_one_row_per_delta_and_blank_cells() {
        let rep = report(ScenarioKind::QuasistaticCloak, vec![record(1e-1, 0.1, None), record(1e-2, 0.03, None)]);
        let s = SuiteReport { report: rep, verdict: Verdict::Pass, reasons: vec![], excluded: false };
        let csv = s.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1.0000000000000001e-1,"));
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        assert!(lines[1].contains(",,"));
        assert!(s.summary().contains("\"verdict\": \"PASS\""));
    }
}
