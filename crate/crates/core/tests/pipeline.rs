//! End-to-end checks of meshing, assembly, solution and post-processing on
//! small problems.

use std::cell::RefCell;

use alr_core::discretization::{assemble, error_against, solve_system, SourceSpec};
use alr_core::experiments::{power, MeshSchedule, ScenarioConfig, Workspace};
use alr_core::geometry::{GeometryConfig, Point2, RegionTag};
use alr_core::media::ScenarioKind;
use alr_core::oracle::{radial_layers_for, RingOracle};
use alr_core::C64;

fn plain(kind: ScenarioKind, h: f64, refine: usize) -> ScenarioConfig {
    let mut sc = ScenarioConfig::default_for(kind);
    sc.r0 = 0.0;
    sc.mesh = MeshSchedule { h, grading: 3.0, refine };
    sc
}

/// Relative `H¹` distance to the layered-media solution over the whole mesh.
fn oracle_error(sc: &ScenarioConfig, delta: f64) -> f64 {
    let ws = Workspace::new(sc, sc.mesh).unwrap();
    let SourceSpec::Ring { radius, modes } = sc.source.clone() else { panic!("ring source expected") };
    let layers = radial_layers_for(sc.kind, &ws.cfg).unwrap();
    let oracle = RingOracle::new(&layers, radius, &modes, sc.k, delta).unwrap();
    let (u, _) = ws.solve(&ws.lossy_medium(delta, sc.object).unwrap()).unwrap();
    let failed = RefCell::new(false);
    let exact = |p: Point2| {
        oracle.value_gradient(p).unwrap_or_else(|_| {
            *failed.borrow_mut() = true;
            (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2])
        })
    };
    let (err, refn) = error_against(&u, exact, |_| true).unwrap();
    assert!(!failed.into_inner());
    err / refn
}

#[test]
fn solution_is_linear_in_the_source() {
    let sc = plain(ScenarioKind::QuasistaticCloak, 0.4, 0);
    let ws = Workspace::new(&sc, sc.mesh).unwrap();
    let med = ws.lossy_medium(1e-2, sc.object).unwrap();
    let (u, _) = ws.solve(&med).unwrap();
    let mut doubled = sc.clone();
    doubled.source = sc.source.scaled(2.0);
    let ws2 = Workspace { sc: doubled, ..ws };
    let (v, _) = ws2.solve(&med).unwrap();
    let scale = u.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (a, b) in u.values.iter().zip(&v.values) {
        assert!((b - a * 2.0).norm() < 1e-9 * scale);
    }
    let ratio = power(&v, 1e-2).unwrap() / power(&u, 1e-2).unwrap();
    assert!((ratio - 4.0).abs() < 1e-8);
}

#[test]
fn dissipated_power_matches_the_energy_identity() {
    let sc = plain(ScenarioKind::QuasistaticCloak, 0.4, 0);
    let ws = Workspace::new(&sc, sc.mesh).unwrap();
    for delta in [1e-1, 1e-3] {
        let med = ws.lossy_medium(delta, sc.object).unwrap();
        let sys = assemble(&ws.mesh, &med, &sc.source, &ws.dtn).unwrap();
        let (u, _) = solve_system(&sys).unwrap();
        let work: C64 = u.values.iter().zip(&sys.rhs).map(|(x, b)| x.conj() * b).sum();
        let p = power(&u, delta).unwrap();
        assert!((work.im + p).abs() < 1e-8 * p.max(work.norm()), "delta {delta}: Im <u, b> = {} power = {p}", work.im);
    }
}

#[test]
fn quasistatic_solution_satisfies_the_gauge() {
    let sc = plain(ScenarioKind::QuasistaticCloak, 0.4, 0);
    let ws = Workspace::new(&sc, sc.mesh).unwrap();
    let (u, _) = ws.solve(&ws.lossy_medium(1e-2, sc.object).unwrap()).unwrap();
    let block = ws.dtn.block(&ws.mesh).unwrap();
    let mean: C64 = block.nodes.iter().zip(&block.mean_weights).map(|(&i, &w)| u.values[i] * w).sum();
    let scale = u.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(mean.norm() < 1e-9 * scale);
}

#[test]
fn finite_element_error_decays_at_first_order() {
    let errors: Vec<f64> = (0..2).map(|refine| oracle_error(&plain(ScenarioKind::QuasistaticCloak, 0.3, refine), 1e-1)).collect();
    let ratio = errors[0] / errors[1];
    assert!(ratio > 1.7, "errors {errors:?}");
    assert!(errors[1] < 0.1, "errors {errors:?}");
}

#[test]
fn helmholtz_solution_matches_layered_oracle() {
    let err = oracle_error(&plain(ScenarioKind::FreqCloak, 0.3, 1), 1e-1);
    assert!(err < 0.05, "relative H1 error {err}");
}

#[test]
fn truncation_radius_does_not_change_the_solution() {
    for kind in [ScenarioKind::QuasistaticCloak, ScenarioKind::FreqCloak] {
        let near = plain(kind, 0.3, 0);
        let mut far = near.clone();
        far.geometry = GeometryConfig::circular(1.0, 2.0, 5.0, 10.5);
        let (a, b) = (oracle_error(&near, 1e-1), oracle_error(&far, 1e-1));
        assert!((a / b - 1.0).abs() < 0.25, "{kind:?}: {a} at R = 7 and {b} at R = 10.5");
    }
}

#[test]
fn tagged_areas_converge_to_disk_areas() {
    let sc = plain(ScenarioKind::QuasistaticCloak, 0.4, 0);
    let cfg = sc.mesh_geometry().unwrap();
    let exact = std::f64::consts::PI * (cfg.r2 * cfg.r2 - cfg.r1 * cfg.r1);
    let errs: Vec<f64> = (0..3)
        .map(|refine| {
            let mesh = MeshSchedule { h: 0.4, grading: 3.0, refine }.build(&cfg).unwrap();
            (mesh.tag_area(RegionTag::AnnulusR2R1) - exact).abs() / exact
        })
        .collect();
    assert!(errs[0] < 1e-2, "{errs:?}");
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
}
