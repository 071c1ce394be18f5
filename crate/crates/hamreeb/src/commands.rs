//! The subcommands as functions from options to a report plus files to write.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context as _, Result};
use hamreeb_core::dynamics::{
    hamiltonian_field, is_hamiltonian_like, theta_function, trajectory, verify_theta_identity, FlowIntegrator, PlanarVectorField,
};
use hamreeb_core::fields::{check_axioms, find_critical_points, homotopy_case, CriticalPoint, ScalarField};
use hamreeb_core::function::SurfaceFunction;
use hamreeb_core::geometry::{triangulate, AreaForm, SurfaceModel, SurfacePoint};
use hamreeb_core::obstruction::{j0_obstruction, run_counterexample_disk, sublevel_components};
use hamreeb_core::reeb::{
    build_reeb_graph, centralizer_check, symplectomorphism_from_graph_function, GraphFunction, GraphPoint, ReebGraph,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{self, GraphFunctionDoc, ReebDoc};
use crate::registry::{self, SurfaceDesc};
use crate::report::{Check, Report};
use crate::InputError;

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    pub surface: String,
    pub field: Option<String>,
    pub form: String,
    pub resolution: Option<f64>,
    pub step: f64,
    pub tol: Option<f64>,
    pub seed: u64,
    pub level: Option<f64>,
    pub involution: String,
    pub start: Option<(f64, f64)>,
    pub time: f64,
    pub alpha: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            surface: "disk".into(),
            field: None,
            form: "standard".into(),
            resolution: None,
            step: 1e-3,
            tol: None,
            seed: 0,
            level: None,
            involution: "negate".into(),
            start: None,
            time: 5.0,
            alpha: None,
        }
    }
}

/// A report and the files that go with it, named relative to the output directory.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(String, String)>,
    /// What `--format csv` prints instead of the check table.
    pub csv: Option<String>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Outcome { report, files: Vec::new(), csv: None }
    }
}

/// Grid for critical point seeds.
pub const CRITICAL_GRID: f64 = 0.05;
/// Newton tolerance for critical points.
pub const CRITICAL_TOL: f64 = 1e-10;

struct Setup {
    desc: SurfaceDesc,
    surface: Arc<SurfaceModel>,
    field: ScalarField,
    form: AreaForm,
    crits: Vec<CriticalPoint>,
}

fn read_file(path: &str) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::new(format!("{path}: {e}")))
}

fn setup(opts: &Options, report: &mut Report) -> Result<Setup> {
    let (desc, surface) = if opts.surface.ends_with(".json") {
        let doc: Value = serde_json::from_str(&read_file(&opts.surface)?).map_err(|e| InputError::new(format!("{}: {e}", opts.surface)))?;
        io::surface_from_json(&doc)?
    } else {
        let desc = registry::surface_desc(&opts.surface)?;
        let model = desc.build()?;
        (desc, model)
    };
    let field_name = opts.field.clone().unwrap_or_else(|| registry::default_field(&opts.surface).to_string());
    let field = if field_name.ends_with(".json") { io::field_from_json(&read_file(&field_name)?)? } else { registry::field(&field_name)? };
    let form = registry::form(&opts.form, &surface)?;
    let crits = find_critical_points(&field, &surface, CRITICAL_GRID, CRITICAL_TOL).context("critical point search")?.points;
    report.input("surface", opts.surface.clone()).input("field", field_name).input("form", opts.form.clone());
    Ok(Setup { desc, surface: Arc::new(surface), field, form, crits })
}

fn samples(surface: &SurfaceModel, n: usize, seed: u64, margin: f64) -> Vec<SurfacePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| surface.sample_point(&mut rng, margin)).collect()
}

fn crit_json(c: &CriticalPoint) -> Value {
    json!({
        "chart": c.position.chart,
        "x": c.position.pos.x,
        "y": c.position.pos.y,
        "value": c.value,
        "kind": c.kind.name(),
    })
}

fn positive(name: &str, v: f64) -> Result<f64, InputError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(InputError::new(format!("--{name} must be positive, got {v}")))
    }
}

fn integrator(opts: &Options) -> Result<FlowIntegrator, InputError> {
    Ok(FlowIntegrator::default().with_step(positive("step", opts.step)?))
}

pub fn analyze(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("analyze");
    let s = setup(opts, &mut report)?;
    let grid = positive("resolution", opts.resolution.unwrap_or(CRITICAL_GRID))?;
    let tol = opts.tol.unwrap_or(1e-8);
    report.input("resolution", grid).input("tol", tol);
    let search = find_critical_points(&s.field, &s.surface, grid, CRITICAL_TOL)?;
    let axioms = check_axioms(&s.field, &s.surface, &search);
    let case = homotopy_case(&s.field, &s.surface, &axioms, &search);

    let max_grad = search.points.iter().map(|c| c.gradient_norm).fold(0.0, f64::max);
    report.check(Check::at_most("critical points refined (max |grad f|)", max_grad, tol));
    let boundary = axioms.boundary_residuals.iter().copied().fold(0.0, f64::max);
    report.check(Check {
        name: "axiom B (f constant and regular on the boundary)".into(),
        residual: boundary,
        tolerance: 1e-8,
        passed: axioms.axiom_b_ok,
    });
    report.check(Check::holds("axiom L (critical points nondegenerate or declared)", axioms.axiom_l_ok));
    let h = hamiltonian_field(&s.field, &s.form, s.surface.clone());
    let pts = samples(&s.surface, 200, opts.seed, 0.0);
    let like = is_hamiltonian_like(&h, &s.field, &search.points, &pts, tol);
    report.check(Check::at_most("Hamiltonian field preserves f", like.a_residual, tol));
    report.check(Check::holds("Hamiltonian field is Hamiltonian-like", like.passed()));

    report.results = json!({
        "in_class_F": axioms.in_class_f,
        "in_class_Morse": axioms.in_class_morse,
        "case": case.as_ref().map(|c| c.name().to_string()).unwrap_or_else(|e| format!("undetermined: {e}")),
        "critical_points": search.points.iter().map(crit_json).collect::<Vec<_>>(),
        "failures": axioms.failures.iter().chain(&like.failures).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(report))
}

fn graph_for(s: &Setup, resolution: f64) -> Result<ReebGraph> {
    build_reeb_graph(&s.field, &s.surface, &s.crits, resolution).context("Reeb graph")
}

pub fn reeb(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("reeb");
    let s = setup(opts, &mut report)?;
    let res = positive("resolution", opts.resolution.unwrap_or(0.05))?;
    report.input("resolution", res);
    let g = graph_for(&s, res)?;

    report.check(Check::holds("graph is connected", g.is_connected()));
    let boundary = s.surface.boundary.len() as i64;
    let genus = (2 - s.surface.euler_characteristic() - boundary) / 2;
    report.check(Check::at_most("first Betti number equals the genus", (g.betti1() - genus).abs() as f64, 0.0));
    let bound = opts.tol.unwrap_or(2.0 * res * g.max_gradient);
    let mut worst: f64 = 0.0;
    for p in samples(&s.surface, 200, opts.seed, 0.0) {
        let v = match g.quotient_point(&p)? {
            GraphPoint::Node(n) => g.nodes[n].value,
            GraphPoint::Edge { edge, t } => g.edge_value(edge, t),
        };
        worst = worst.max(s.field.difference(s.field.value(&p), v).abs());
    }
    report.check(Check::at_most("f equals f-hat on the quotient", worst, bound));

    let doc = ReebDoc::of(&g);
    report.results = json!({
        "nodes": doc.nodes,
        "edges": doc.edges,
        "betti1": g.betti1(),
        "critical_points": s.crits.iter().map(crit_json).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new(report);
    out.files.push(("reeb_graph.json".into(), serde_json::to_string_pretty(&doc)? + "\n"));
    out.files.push(("reeb.dot".into(), io::reeb_to_dot(&g)));
    out.files.push(("mesh.txt".into(), io::write_mesh(g.mesh())));
    out.files.push(("surface.json".into(), serde_json::to_string_pretty(&io::surface_to_json(&s.desc, &s.surface))? + "\n"));
    Ok(out)
}

pub fn flow(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("flow");
    let s = setup(opts, &mut report)?;
    let integ = integrator(opts)?;
    let start = match opts.start {
        Some((x, y)) => {
            let p = SurfacePoint::new(0, x, y);
            if !s.surface.contains(&p) {
                return Err(InputError::new(format!("--start ({x}, {y}) is not on the surface")).into());
            }
            p
        }
        None => samples(&s.surface, 1, opts.seed, 0.05)[0],
    };
    let tol = opts.tol.unwrap_or(integ.reprojection_tolerance);
    report
        .input("start", json!([start.chart, start.pos.x, start.pos.y]))
        .input("time", opts.time)
        .input("step", integ.step)
        .input("tol", tol);
    let h: PlanarVectorField = hamiltonian_field(&s.field, &s.form, s.surface.clone());
    let traj = trajectory(&h, &start, opts.time, &integ, 10)?;
    let f0 = s.field.value(&start);
    let drift = traj.iter().map(|t| s.field.difference(s.field.value(&t.point), f0).abs()).fold(0.0, f64::max);
    report.check(Check::at_most("f preserved along the trajectory", drift, tol));
    let mut csv = Vec::new();
    io::write_trajectory(&mut csv, &traj)?;
    let csv = String::from_utf8(csv)?;
    report.results = json!({ "samples": traj.len(), "end": [traj.last().map(|t| t.point.pos.x), traj.last().map(|t| t.point.pos.y)] });
    let mut out = Outcome::new(report);
    out.files.push(("trajectory.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

/// `α̂ = 0.3·sin(2·f̂)` on every edge, used when no graph function is given.
pub fn default_graph_function(g: &ReebGraph) -> GraphFunction {
    GraphFunction::from_profile(g, 8, |_, _, v| 0.3 * (2.0 * v).sin())
}

pub fn shift(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("shift");
    let s = setup(opts, &mut report)?;
    let res = positive("resolution", opts.resolution.unwrap_or(0.05))?;
    report.input("resolution", res);
    let g = Arc::new(graph_for(&s, res)?);
    let alpha = match &opts.alpha {
        Some(path) => {
            let text = read_file(&path.to_string_lossy())?;
            let doc: GraphFunctionDoc = serde_json::from_str(&text).map_err(|e| InputError::new(format!("{}: {e}", path.display())))?;
            report.input("alpha", path.to_string_lossy().into_owned());
            doc.build(&g)?
        }
        None => {
            report.input("alpha", "0.3 sin(2 f)");
            default_graph_function(&g)
        }
    };
    let h = hamiltonian_field(&s.field, &s.form, s.surface.clone());
    let pts = samples(&s.surface, 100, opts.seed, 0.02);
    match symplectomorphism_from_graph_function(&g, &alpha, &h, &s.form, &pts) {
        Ok(phi) => {
            report.check(Check::at_most("shift preserves f", phi.f_invariance, 1e-6));
            report.check(Check::at_most("shift preserves the area form (density ratio - 1)", phi.density_residual, 1e-5));
            let c = centralizer_check(phi.lifted.as_ref(), &h, &pts, opts.tol.unwrap_or(1e-9));
            report.check(Check::at_most("lifted function commutes with f ({f, alpha})", c.max_residual, c.tolerance));
            report.results =
                json!({ "f_invariance": phi.f_invariance, "density_residual": phi.density_residual, "collars": phi.lifted.collars });
        }
        Err(e) => {
            report.check(Check::failed("shift map verification", &e.to_string()));
        }
    }
    let mut out = Outcome::new(report);
    out.files.push(("alpha.json".into(), serde_json::to_string_pretty(&GraphFunctionDoc::of(&alpha))? + "\n"));
    Ok(out)
}

pub fn theta(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("theta");
    let s = setup(opts, &mut report)?;
    let res = positive("resolution", opts.resolution.unwrap_or(0.05))?;
    let tol = opts.tol.unwrap_or(1e-6);
    let integ = integrator(opts)?;
    report.input("resolution", res).input("tol", tol).input("alpha", PI / 3.0);
    let g = Arc::new(graph_for(&s, res)?);
    let h = hamiltonian_field(&s.field, &s.form, s.surface.clone());
    let theta = match theta_function(&g, &h, &s.form, &integ) {
        Ok(t) => t,
        Err(e) => {
            report.check(Check::failed("theta exists", &e.to_string()));
            return Ok(Outcome::new(report));
        }
    };
    let pts = samples(&s.surface, 200, opts.seed, 0.0);
    let values: Vec<f64> = pts.iter().map(|p| theta.value(p)).collect();
    let r = verify_theta_identity(&theta, &pts, PI / 3.0, tol)?;
    report.check(Check::at_most("flow for time theta is the identity", r.identity_residual, tol));
    report.check(Check::at_most("shift by alpha + theta equals shift by alpha", r.shift_residual, tol));
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.results = json!({
        "multiples": theta.multiples,
        "node_limits": theta.node_limits,
        "theta_min": lo,
        "theta_max": hi,
    });
    Ok(Outcome::new(report))
}

pub fn volumes(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("volumes");
    let s = setup(opts, &mut report)?;
    let res = positive("resolution", opts.resolution.unwrap_or(0.02))?;
    let level = opts.level.ok_or_else(|| InputError::new("volumes needs --level"))?;
    let inv = registry::involution(&opts.involution)?;
    report.input("resolution", res).input("level", level).input("involution", opts.involution.clone());
    let mesh = triangulate(&s.surface, res)?.with_values(|p| s.field.value(p));
    let set = sublevel_components(&mesh, &s.form, level, &s.crits)?;
    report.check(Check::holds("component volumes are positive", set.components.iter().all(|c| c.volume > 0.0)));
    let obstruction = match j0_obstruction(&s.field, &mesh, &s.form, level, &s.crits, &inv) {
        Ok(r) => r,
        Err(e) => {
            report.check(Check::failed("involution lies in the stabilizer of f", &e.to_string()));
            return Ok(Outcome::new(report));
        }
    };
    report.check(Check::at_most("involution preserves f", obstruction.preservation_residual, 1e-8));
    let rel =
        |i: usize, j: usize| (obstruction.volumes[i] - obstruction.volumes[j]).abs() / obstruction.volumes[i].max(obstruction.volumes[j]);
    let asym = obstruction.pairing.iter().enumerate().map(|(i, &j)| (rel(i, j) - rel(j, i)).abs()).fold(0.0, f64::max);
    report.check(Check::at_most("volume mismatch is symmetric", asym, 0.0));
    report.results = json!({
        "components": set.components.iter().map(|c| json!({
            "id": c.id,
            "seed": [c.seed.chart, c.seed.pos.x, c.seed.pos.y],
            "volume": c.volume,
            "contains_critical": c.contains_critical,
        })).collect::<Vec<_>>(),
        "pairing": obstruction.pairing,
        "volume_mismatch": obstruction.volume_mismatch,
        "tolerance": obstruction.tolerance,
        "obstructed": obstruction.obstructed,
        "worst_pair": obstruction.worst_pair,
        "conclusion": obstruction.conclusion,
    });
    Ok(Outcome::new(report))
}

pub fn counterexample(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("counterexample");
    let res = positive("resolution", opts.resolution.unwrap_or(CRITICAL_GRID))?;
    let steps = (1.0 / positive("step", opts.step)?).round().max(1.0) as usize;
    report.input("resolution", res).input("steps_per_unit_time", steps);
    let r = run_counterexample_disk(res, steps)?;
    for c in &r.checks {
        report.check(Check {
            name: c.description.clone(),
            residual: (c.value - c.expected).abs(),
            tolerance: c.tolerance,
            passed: c.passed,
        });
    }
    let c = r.checks.last().map_or(f64::NAN, |c| c.value);
    report.check(Check::at_least("(c) |T0 F_0.5 - I| is at least 0.5", c, 0.5));
    report.results = json!({
        "name": r.name,
        "values": r.checks.iter().map(|c| json!({ "description": c.description, "value": c.value, "expected": c.expected })).collect::<Vec<_>>(),
        "conclusion": r.conclusion,
    });
    Ok(Outcome::new(report))
}

pub fn verify_all(opts: &Options) -> Result<Outcome> {
    let mut report = Report::new("verify-all");
    report.input("seed", opts.seed);
    let groups = crate::suite::run(opts.seed);
    let mut summary = serde_json::Map::new();
    for (group, checks) in groups {
        summary.insert(group.into(), json!({ "checks": checks.len(), "passed": checks.iter().filter(|c| c.passed).count() }));
        report.extend(checks.into_iter().map(|mut c| {
            c.name = format!("{group}: {}", c.name);
            c
        }));
    }
    report.results = Value::Object(summary);
    Ok(Outcome::new(report))
}
