//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Criteria run sequentially; the quasistatic sweep is shared by the rate,
//! power and reflection checks.

use std::cell::RefCell;
use std::fs;
use std::process::Command;
use std::time::Instant;

use alr_core::discretization::{error_against, DiscreteField, SourceSpec};
use alr_core::experiments::{
    fit_common_exponent, fit_points, power_growth, power_sweep, run_scenario_suite, three_sphere_check, MeshSchedule, ScenarioConfig, SuiteOverrides,
    SuiteReport, Verdict, Workspace, DISCREPANCY_TOL, MAX_POWER_GROWTH, MIN_RATE, MIN_SEPARATION,
};
use alr_core::geometry::Point2;
use alr_core::media::{build_doubly_complementary, scenario_maps, verify_doubly_complementary, MediumSpec, ScalarRule, ScenarioKind, Sym2, TensorRule};
use alr_core::oracle::{radial_layers_for, RingOracle};
use alr_core::{geometry::RegionTag, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 0.02;
const ORACLE_GAIN: f64 = 1.7;
const MAX_SOLVE_SECS: f64 = 120.0;
const MAX_UNKNOWNS: usize = 200_000;
const CONTROL_GROWTH: f64 = 10.0;
const REFLECTION_RATE: f64 = 0.8;
const CONTROL_RATE: f64 = 0.1;
const VERIFY_SAMPLES: usize = 1000;
const THREE_SPHERE_C: f64 = 1.1;
const TRIPLES: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn suite(kind: ScenarioKind, o: SuiteOverrides) -> Result<SuiteReport, String> {
    run_scenario_suite(kind, &o).map_err(|e| format!("{}: {e}", kind.name()))
}

fn verdict_line(r: &SuiteReport) -> String {
    format!("{} {} [{}]", r.report.config.kind.name(), r.verdict, r.reasons.join("; "))
}

fn oracle_equivalence() -> Result<Outcome, String> {
    let mut sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
    sc.r0 = 0.0;
    sc.source = SourceSpec::ring(4.5, &[(2, 1.0, 0.0)]);
    let delta = 1e-2;
    let mut errors = Vec::new();
    let mut last = (0.0, 0);
    for refine in 0..3 {
        let schedule = MeshSchedule { h: 0.15, grading: 3.0, refine };
        let ws = Workspace::new(&sc, schedule).map_err(|e| e.to_string())?;
        let layers = radial_layers_for(sc.kind, &ws.cfg).map_err(|e| e.to_string())?;
        let SourceSpec::Ring { radius, modes } = &sc.source else { unreachable!() };
        let oracle = RingOracle::new(&layers, *radius, modes, sc.k, delta).map_err(|e| e.to_string())?;
        let t = Instant::now();
        let (u, stats) = ws.solve(&ws.lossy_medium(delta, sc.object).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        let failed = RefCell::new(None);
        let exact = |p: Point2| {
            oracle.value_gradient(p).unwrap_or_else(|e| {
                failed.borrow_mut().get_or_insert(e.to_string());
                (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2])
            })
        };
        let (err, refn) = error_against(&u, exact, |_| true).map_err(|e| e.to_string())?;
        if let Some(e) = failed.into_inner() {
            return Err(e);
        }
        errors.push(err / refn);
        last = (secs, stats.unknowns);
    }
    let gains = [errors[0] / errors[1], errors[1] / errors[2]];
    let pass = errors[2] <= ORACLE_TOL && gains.iter().all(|&g| g >= ORACLE_GAIN) && last.0 <= MAX_SOLVE_SECS && last.1 <= MAX_UNKNOWNS;
    Ok(outcome(
        pass,
        format!(
            "relative H1 errors {:.3e} {:.3e} {:.3e} (limit {ORACLE_TOL}), gains {:.2} {:.2} (minimum {ORACLE_GAIN}), finest solve {:.1} s with {} unknowns",
            errors[0], errors[1], errors[2], gains[0], gains[1], last.0, last.1
        ),
    ))
}

fn cloaking(r: &SuiteReport) -> Outcome {
    let rate = r.report.fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let e = r.report.last().map_or(f64::NAN, |l| l.error_l2_rel);
    outcome(
        r.verdict == Verdict::Pass && rate >= MIN_RATE && e <= DISCREPANCY_TOL,
        format!("rate {rate:.3} (minimum {MIN_RATE}), discrepancy {e:.3e} (limit {DISCREPANCY_TOL}); {}", verdict_line(r)),
    )
}

fn power_bound(qs: &SuiteReport) -> Result<Outcome, String> {
    let growth = power_growth(&qs.report).ok_or("quasistatic sweep lacks delta = 1e-2 or 1e-4")?;
    let mut sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
    sc.source = SourceSpec::BumpPair { centers: [Point2::new(2.2, 0.0), Point2::new(0.0, 4.5)], width: 0.15, amplitude: 1.0 };
    sc.source_inner = Some(sc.geometry.r2);
    sc.mesh = MeshSchedule { h: 0.15, grading: 10.0, refine: 2 };
    sc.deltas = vec![1e-2, 10f64.powf(-2.5), 1e-3, 10f64.powf(-3.5), 1e-4];
    let p = power_sweep(&sc).map_err(|e| e.to_string())?;
    let control = p.last().unwrap().1 / p[0].1;
    Ok(outcome(
        growth <= MAX_POWER_GROWTH && control >= CONTROL_GROWTH,
        format!("P(1e-4)/P(1e-2) = {growth:.3e} (limit {MAX_POWER_GROWTH}); source at |x| = 2.2 gives {control:.2} (minimum {CONTROL_GROWTH})"),
    ))
}

fn reflection(qs: &SuiteReport) -> Result<Outcome, String> {
    let data: Vec<(f64, f64, Option<f64>)> = qs
        .report
        .records
        .iter()
        .filter_map(|r| Some((r.delta, r.reflection.as_ref()?.r2.total(), r.floor_reflection)))
        .collect();
    let fit = fit_points(&data).map_err(|e| e.to_string())?;

    let sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
    let ws = Workspace::new(&sc, MeshSchedule { refine: 0, ..sc.mesh }).map_err(|e| e.to_string())?;
    let (f, g) = scenario_maps(&ws.cfg).map_err(|e| e.to_string())?;
    let control: Vec<(f64, f64, Option<f64>)> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&d| {
            let med = MediumSpec::homogeneous(ws.cfg.clone(), 0.0).with_delta(d);
            let (u, _) = ws.solve(&med).map_err(|e| e.to_string())?;
            let m = alr_core::experiments::reflection_diagnostics(&u, &med, &f, &g).map_err(|e| e.to_string())?;
            Ok((d, m.r2.total(), None))
        })
        .collect::<Result<_, String>>()?;
    let control_fit = fit_points(&control).map_err(|e| e.to_string())?;
    Ok(outcome(
        fit.slope >= REFLECTION_RATE && control_fit.slope.abs() <= CONTROL_RATE,
        format!(
            "mismatch slope {:.3} over {} points above 3x floor (minimum {REFLECTION_RATE}); homogeneous control slope {:.3} (limit {CONTROL_RATE})",
            fit.slope,
            fit.indices.len(),
            control_fit.slope
        ),
    ))
}

fn separated(r: &SuiteReport) -> (bool, String) {
    let last = r.report.last();
    let e = last.map_or(f64::NAN, |l| l.error_l2_rel);
    let s = last.and_then(|l| Some(l.signature_alt_rel? / l.signature_pred_rel?)).unwrap_or(f64::NAN);
    (r.verdict == Verdict::Pass && e <= DISCREPANCY_TOL && s >= MIN_SEPARATION, format!("discrepancy {e:.3e}, separation {s:.2}; {}", verdict_line(r)))
}

fn lens() -> Result<Outcome, String> {
    let no_inner = suite(
        ScenarioKind::SuperlensNoInnerLayer,
        SuiteOverrides { deltas: Some(vec![1e-4]), mesh: Some(MeshSchedule { h: 0.15, grading: 10.0, refine: 2 }), ..Default::default() },
    )?;
    let full = suite(ScenarioKind::SuperlensFull, SuiteOverrides::default())?;
    let (a, da) = separated(&no_inner);
    let (b, db) = separated(&full);
    Ok(outcome(a && b, format!("{da} | {db}")))
}

fn complementary_cloaking() -> Result<Outcome, String> {
    let unmodified = suite(ScenarioKind::CmCloakUnmodified, SuiteOverrides::default())?;
    let modified = suite(ScenarioKind::CmCloakModified, SuiteOverrides::default())?;
    let (a, da) = separated(&unmodified);
    let (b, db) = separated(&modified);
    Ok(outcome(a && b, format!("{da} | {db}")))
}

fn medium_verification() -> Result<Outcome, String> {
    let sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
    let cfg = sc.geometry.clone();
    let (f, g) = scenario_maps(&cfg).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut pass = true;
    let shells = [
        ("isotropic", Sym2::IDENTITY, 1.0, 0.0),
        ("isotropic k = 0.5", Sym2::IDENTITY, 1.0, 0.5),
        ("anisotropic k = 0.5", Sym2 { xx: 2.0, xy: 0.3, yy: 1.0 }, 3.0, 0.5),
    ];
    for (name, a, sigma, k) in shells {
        let mut med = build_doubly_complementary(&cfg, TensorRule::Constant(a), ScalarRule::Constant(sigma), &f, &g, 1e-2, k).map_err(|e| e.to_string())?;
        let ok = verify_doubly_complementary(&med, &f, &g, VERIFY_SAMPLES).map_err(|e| e.to_string())?;
        med.a.set(RegionTag::ShellR3R2, TensorRule::Constant(a.scale(1.1)));
        let bad = verify_doubly_complementary(&med, &f, &g, VERIFY_SAMPLES).map_err(|e| e.to_string())?;
        pass &= ok.pass() && !bad.pass();
        lines.push(format!("{name}: max residual {:.2e}, with 10% defect {:.2e}", ok.max_residual(), bad.max_residual()));
    }
    Ok(outcome(pass, format!("{} samples at tolerance {:e}; {}", VERIFY_SAMPLES, alr_core::media::VERIFY_TOL, lines.join("; "))))
}

fn three_spheres() -> Result<Outcome, String> {
    let sc = ScenarioConfig::default_for(ScenarioKind::QuasistaticCloak);
    let ws = Workspace::new(&sc, sc.mesh).map_err(|e| e.to_string())?;
    let u = DiscreteField::from_fn(ws.mesh.clone(), |p| C64::new(p.x * p.x - p.y * p.y, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut reports = Vec::new();
    while reports.len() < TRIPLES {
        let z = Point2::from_polar(rng.random_range(5.3..5.7), rng.random_range(-3.1..3.1));
        let r1 = rng.random_range(0.15..0.35);
        let r2 = rng.random_range(1.3 * r1..0.7);
        let r3 = rng.random_range(1.3 * r2..1.2);
        reports.push(three_sphere_check(&u, z, [r1, r2, r3], 720).map_err(|e| e.to_string())?);
    }
    let (q, worst) = fit_common_exponent(&reports);
    Ok(outcome(worst <= THREE_SPHERE_C, format!("{TRIPLES} triples, common exponent q = {q:.3}, largest constant {worst:.4} (limit {THREE_SPHERE_C})")))
}

fn determinism() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("c.txt");
    fs::write(&cfg, "[geometry]\nr1 = 1\nr2 = 2\n[sweep]\ndeltas = 1e-1, 1e-2, 1e-3\n[mesh]\nh = 0.3\nrefine = 0\n").map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_alr"))
            .args(["suite", "quasistatic-cloak", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if status.status.code().map_or(true, |c| c == 2 || c == 3) {
            return Err(format!("suite exited with {:?}", status.status.code()));
        }
        csv.push(fs::read(out.join("quasistatic-cloak_suite.csv")).map_err(|e| e.to_string())?);
    }
    Ok(outcome(csv[0] == csv[1], format!("two suite runs, {} and {} CSV bytes, identical: {}", csv[0].len(), csv[1].len(), csv[0] == csv[1])))
}

fn report(n: usize, t: Instant, r: Result<Outcome, String>, failures: &mut usize) {
    let secs = t.elapsed().as_secs_f64();
    match r {
        Ok(o) => {
            if !o.pass {
                *failures += 1;
            }
            println!("criterion {n}: {} ({secs:.0} s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        }
        Err(e) => {
            *failures += 1;
            println!("criterion {n}: FAIL ({secs:.0} s) error: {e}");
        }
    }
}

fn main() {
    let mut failures = 0;

    let t = Instant::now();
    report(1, t, oracle_equivalence(), &mut failures);

    let t = Instant::now();
    let qs = suite(ScenarioKind::QuasistaticCloak, SuiteOverrides::default());
    report(2, t, qs.as_ref().map(cloaking).map_err(Clone::clone), &mut failures);

    let t = Instant::now();
    report(3, t, suite(ScenarioKind::FreqCloak, SuiteOverrides::default()).map(|r| cloaking(&r)), &mut failures);

    let t = Instant::now();
    report(4, t, qs.as_ref().map_err(Clone::clone).and_then(power_bound), &mut failures);

    let t = Instant::now();
    report(5, t, qs.as_ref().map_err(Clone::clone).and_then(reflection), &mut failures);

    let t = Instant::now();
    report(6, t, lens(), &mut failures);

    let t = Instant::now();
    report(7, t, complementary_cloaking(), &mut failures);

    let t = Instant::now();
    report(8, t, medium_verification(), &mut failures);

    let t = Instant::now();
    report(9, t, three_spheres(), &mut failures);

    let t = Instant::now();
    report(10, t, determinism(), &mut failures);

    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
