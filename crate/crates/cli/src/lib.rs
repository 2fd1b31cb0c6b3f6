//! Command-line driver: configuration parsing, subcommand dispatch and
//! report files.
//!
//! Exit codes: `0` success, `1` verdict FAIL, `2` configuration or usage
//! error, `3` numerical failure.

pub mod config;
pub mod manifest;

use std::cell::RefCell;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use alr_core::discretization::{error_against, DiscretizationError, SourceSpec};
use alr_core::experiments::{
    fit_common_exponent, reflection_diagnostics, run_suite_config, run_sweep, three_sphere_check, ExperimentError, ScenarioConfig, Verdict, Workspace,
};
use alr_core::geometry::{Point2, RegionTag};
use alr_core::io::{field_arrays, medium_arrays, sci, vtk_string};
use alr_core::media::{build_medium, scenario_maps, verify_doubly_complementary, MediaError, ScenarioKind, Sym2, TensorRule};
use alr_core::oracle::{amplitudes_csv, radial_layers_for, OracleError, RingOracle};
use alr_core::C64;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{parse_config, ConfigError, Document, OutputSpec, RunConfig};
pub use manifest::{OutputSet, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Experiment(#[from] ExperimentError),
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
}

impl From<DiscretizationError> for CliError {
    fn from(e: DiscretizationError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<MediaError> for CliError {
    fn from(e: MediaError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Experiment(e) if e.is_config() => EXIT_CONFIG,
            CliError::Experiment(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "alr", version, about = "Cloaking by anomalous localized resonance: FEM sweeps and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration key, e.g. `--set mesh.h=0.2`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory, replacing `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the scenario mesh and write it as VTK.
    Mesh(Common),
    /// Solve at one loss value.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Loss value; the smallest of the schedule by default.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Loss sweep against the reference fields.
    Sweep(Common),
    /// Compare FEM with the mode-matching oracle for radial layouts.
    Oracle(Common),
    /// Check the complementary-media identities of the scenario medium.
    VerifyMedium {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Relative perturbation of the shell tensor.
        #[arg(long)]
        defect: Option<f64>,
    },
    /// Reflection mismatches per loss value and three-spheres probes.
    Diagnose(Common),
    /// Full sweep with the scenario verdict.
    Suite {
        /// Scenario, e.g. `quasistatic-cloak`.
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Parse arguments, run, print diagnostics and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common, kind: Option<ScenarioKind>) -> Result<(RunConfig, PathBuf), CliError> {
    let text = fs::read_to_string(&common.config).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", common.config.display())))?;
    let mut doc = Document::parse(&text)?;
    for s in &common.set {
        doc.set(s)?;
    }
    let rc = doc.resolve(kind)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&rc.output.dir));
    Ok((rc, dir))
}

fn outputs(rc: &RunConfig, dir: &PathBuf, sub: &str) -> Result<OutputSet, CliError> {
    let m = RunManifest::start(rc.scenario.kind.name(), sub, &rc.hash);
    Ok(OutputSet::new(dir, &rc.output.prefix, m)?)
}

fn last_delta(sc: &ScenarioConfig) -> f64 {
    *sc.deltas.last().expect("validated schedule is not empty")
}

/// Field and coefficients at one loss value as legacy VTK.
fn snapshot(ws: &Workspace, delta: f64) -> Result<(String, alr_core::discretization::SolveStats, alr_core::discretization::DiscreteField), CliError> {
    let med = ws.lossy_medium(delta, ws.sc.object)?;
    let (u, stats) = ws.solve(&med)?;
    let vtk = vtk_string(&ws.mesh, &format!("{} delta={}", ws.sc.kind.name(), sci(delta)), &field_arrays("u", &u), &medium_arrays(&ws.mesh, &med)?);
    Ok((vtk, stats, u))
}

fn execute(cmd: &Command) -> Result<i32, CliError> {
    match cmd {
        Command::Mesh(c) => cmd_mesh(c),
        Command::Solve { common, delta } => cmd_solve(common, *delta),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Oracle(c) => cmd_oracle(c),
        Command::VerifyMedium { common, samples, defect } => cmd_verify(common, *samples, *defect),
        Command::Diagnose(c) => cmd_diagnose(c),
        Command::Suite { scenario, common } => {
            let kind = ScenarioKind::from_name(scenario).ok_or_else(|| CliError::Usage(format!("unknown scenario {scenario}")))?;
            cmd_suite(common, kind)
        }
    }
}

fn cmd_mesh(c: &Common) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let ws = Workspace::new(&rc.scenario, rc.scenario.mesh)?;
    let mesh = &ws.mesh;
    let mut out = outputs(&rc, &dir, "mesh")?;
    out.manifest.mesh_hash = Some(mesh.hash_hex());
    out.write("mesh.vtk", &vtk_string(mesh, rc.scenario.kind.name(), &[], &[]))?;
    let mut s = String::from("tag,elements,area\n");
    for tag in RegionTag::ALL.into_iter().filter(|t| mesh.has_tag(*t)) {
        let n = mesh.tags.iter().filter(|&&t| t == tag).count();
        let _ = writeln!(s, "{},{n},{}", tag.name(), sci(mesh.tag_area(tag)));
    }
    out.write("mesh_regions.csv", &s)?;
    println!(
        "nodes {} elements {} min angle {:.2} deg h_max {:.4} hash {}",
        mesh.num_nodes(),
        mesh.num_elements(),
        mesh.min_angle(),
        mesh.max_h(),
        mesh.hash_hex()
    );
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_solve(c: &Common, delta: Option<f64>) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let delta = delta.unwrap_or_else(|| last_delta(&rc.scenario));
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CliError::Usage("--delta must be positive".into()));
    }
    let ws = Workspace::new(&rc.scenario, rc.scenario.mesh)?;
    let mut out = outputs(&rc, &dir, "solve")?;
    out.manifest.mesh_hash = Some(ws.mesh.hash_hex());
    let (vtk, stats, u) = snapshot(&ws, delta)?;
    out.write("solve.vtk", &vtk)?;
    let power = alr_core::experiments::power(&u, delta)?;
    let obs = ws.obs_norm(&u, alr_core::discretization::NormKind::L2)?;
    let csv = format!(
        "delta,unknowns,nnz,residual,refinement_steps,power,observation_l2\n{},{},{},{},{},{},{}\n",
        sci(delta),
        stats.unknowns,
        stats.nnz,
        sci(stats.residual),
        stats.refinement_steps,
        sci(power),
        sci(obs)
    );
    out.write("solve.csv", &csv)?;
    print!("{csv}");
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_sweep(c: &Common) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let rep = run_sweep(&rc.scenario)?;
    let mut out = outputs(&rc, &dir, "sweep")?;
    out.manifest.mesh_hash = Some(rep.mesh.hash.clone());
    out.write("sweep.csv", &rep.csv())?;
    let summary = rep.summary();
    out.write("sweep_summary.txt", &summary)?;
    if rc.output.vtk {
        let ws = Workspace::new(&rc.scenario, rc.scenario.mesh)?;
        out.write(&format!("{}_delta_min.vtk", out.manifest.subcommand), &snapshot(&ws, last_delta(&rc.scenario))?.0)?;
    }
    print!("{summary}");
    out.finish()?;
    Ok(if rep.aborted.is_some() { EXIT_NUMERICAL } else { EXIT_OK })
}

fn cmd_oracle(c: &Common) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let mut sc = rc.scenario.clone();
    sc.r0 = 0.0;
    let SourceSpec::Ring { radius, modes } = sc.source.clone() else {
        return Err(CliError::Usage("the oracle needs a ring source".into()));
    };
    let ws = Workspace::new(&sc, sc.mesh)?;
    let layers = radial_layers_for(sc.kind, &ws.cfg)?;
    let mut out = outputs(&rc, &dir, "oracle")?;
    out.manifest.mesh_hash = Some(ws.mesh.hash_hex());
    let mut csv = String::from("delta,error_h1,reference_h1,error_rel,unknowns\n");
    let mut last = None;
    for &delta in &sc.deltas {
        let oracle = RingOracle::new(&layers, radius, &modes, sc.k, delta)?;
        let (u, stats) = ws.solve(&ws.lossy_medium(delta, sc.object)?)?;
        let failure = RefCell::new(None);
        let exact = |p: Point2| {
            oracle.value_gradient(p).unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2])
            })
        };
        let (err, refn) = error_against(&u, exact, |_| true)?;
        if let Some(e) = failure.into_inner() {
            return Err(e.into());
        }
        let _ = writeln!(csv, "{},{},{},{},{}", sci(delta), sci(err), sci(refn), sci(err / refn), stats.unknowns);
        last = Some(oracle);
    }
    out.write("oracle.csv", &csv)?;
    if let Some(o) = last {
        out.write("modes.csv", &amplitudes_csv(&o.solutions))?;
    }
    print!("{csv}");
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_verify(c: &Common, samples: usize, defect: Option<f64>) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let sc = &rc.scenario;
    let cfg = sc.mesh_geometry()?;
    let mut med = build_medium(sc.kind, &cfg, sc.object, last_delta(sc), sc.k)?;
    if let Some(eps) = defect {
        med.a.set(RegionTag::ShellR3R2, TensorRule::Constant(Sym2::scalar(1.0 + eps)));
    }
    let (f, g) = scenario_maps(&cfg)?;
    let rep = verify_doubly_complementary(&med, &f, &g, samples)?;
    // Σ only enters through k² Σ
    let required = |name: &str| sc.k > 0.0 || !name.contains("Sigma");
    let pass = rep.samples > rep.skipped && rep.checks.iter().all(|c| c.pass || !required(&c.name));
    let mut s = String::from("identity,max_residual,tolerance,pass,required\n");
    for chk in &rep.checks {
        let _ = writeln!(s, "{},{},{},{},{}", chk.name, sci(chk.max_residual), sci(rep.tolerance), chk.pass, required(&chk.name));
    }
    let mut out = outputs(&rc, &dir, "verify-medium")?;
    out.write("verify.csv", &s)?;
    print!("{s}");
    println!("samples {} skipped {} verdict {}", rep.samples, rep.skipped, if pass { "PASS" } else { "FAIL" });
    out.finish()?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_diagnose(c: &Common) -> Result<i32, CliError> {
    let (rc, dir) = load(c, None)?;
    let sc = &rc.scenario;
    let ws = Workspace::new(sc, sc.mesh)?;
    if ws.cfg.slab.is_some() || sc.source_inner.is_some() {
        return Err(CliError::Usage("reflection diagnostics need a circular layout with the source outside B_r3".into()));
    }
    let (f, g) = scenario_maps(&ws.cfg)?;
    let mut out = outputs(&rc, &dir, "diagnose")?;
    out.manifest.mesh_hash = Some(ws.mesh.hash_hex());
    let mut csv = String::from("delta,r2_trace,r2_tangential,r2_flux,r2_kept,r2_excluded,r3_trace,r3_tangential,r3_flux,r3_kept,r3_excluded\n");
    let mut field = None;
    for &delta in &sc.deltas {
        let med = ws.lossy_medium(delta, sc.object)?;
        let (u, _) = ws.solve(&med)?;
        let m = reflection_diagnostics(&u, &med, &f, &g)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            sci(delta),
            sci(m.r2.trace),
            sci(m.r2.tangential),
            sci(m.r2.flux),
            m.r2.kept,
            m.r2.excluded,
            sci(m.r3.trace),
            sci(m.r3.tangential),
            sci(m.r3.flux),
            m.r3.kept,
            m.r3.excluded
        );
        field = Some(u);
    }
    out.write("reflection.csv", &csv)?;
    print!("{csv}");

    let u = field.expect("validated schedule is not empty");
    let cfg = &ws.cfg;
    let (mid, w) = (0.5 * (cfg.source_outer + cfg.r_out), 0.5 * (cfg.r_out - cfg.source_outer));
    let mut spheres = String::from("cx,cy,r1,r2,r3,n1,n2,n3,alpha_fit,q_fit,c_log\n");
    let mut reports = Vec::new();
    for i in 0..4 {
        let z = Point2::from_polar(mid, std::f64::consts::FRAC_PI_2 * i as f64 + 0.3);
        let rep = three_sphere_check(&u, z, [0.2 * w, 0.5 * w, 0.9 * w], 512)?;
        let n: Vec<String> = rep.norms.iter().map(|b| sci(b.total())).collect();
        let q = rep.q_fit.map(sci).unwrap_or_default();
        let _ = writeln!(spheres, "{},{},{},{},{},{},{},{}", sci(z.x), sci(z.y), sci(rep.radii[0]), sci(rep.radii[1]), sci(rep.radii[2]), n.join(","), sci(rep.alpha_fit), q + "," + &sci(rep.constant_at(0.0)));
        reports.push(rep);
    }
    let (q, worst) = fit_common_exponent(&reports);
    out.write("three_spheres.csv", &spheres)?;
    println!("three spheres at delta {}: common q {q:.3} max C {worst:.4}", sci(last_delta(sc)));
    out.finish()?;
    Ok(EXIT_OK)
}

fn cmd_suite(c: &Common, kind: ScenarioKind) -> Result<i32, CliError> {
    let (rc, dir) = load(c, Some(kind))?;
    let rep = run_suite_config(&rc.scenario)?;
    let mut out = outputs(&rc, &dir, "suite")?;
    out.manifest.mesh_hash = Some(rep.report.mesh.hash.clone());
    out.write("suite.csv", &rep.csv())?;
    let summary = rep.summary();
    out.write("suite_summary.txt", &summary)?;
    if rc.output.vtk {
        let ws = Workspace::new(&rc.scenario, rc.scenario.mesh)?;
        out.write(&format!("{}_delta_min.vtk", out.manifest.subcommand), &snapshot(&ws, last_delta(&rc.scenario))?.0)?;
    }
    print!("{summary}");
    out.finish()?;
    Ok(if rep.report.aborted.is_some() {
        EXIT_NUMERICAL
    } else if rep.verdict == Verdict::Fail && !rep.excluded {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}
