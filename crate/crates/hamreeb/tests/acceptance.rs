//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hamreeb_core::builtin;
use hamreeb_core::dynamics::{
    alpha_derivative_along, flow_point, hamiltonian_field, jacobian_det, orbit_period, pullback_density_ratio, theta_function,
    verify_theta_identity, FlowIntegrator, ShiftMap,
};
use hamreeb_core::fields::{find_critical_points, ScalarField};
use hamreeb_core::function::{Polynomial, SurfaceFunction};
use hamreeb_core::geometry::{triangulate, AreaForm};
use hamreeb_core::obstruction::{j0_obstruction, run_counterexample_disk, Involution};
use hamreeb_core::reeb::{
    build_reeb_graph, lift_graph_function, project_to_graph_function, symplectomorphism_from_graph_function, GraphFunction, NodeKind,
    ReebGraph, PROJECTION_SAMPLES,
};
use hamreeb_core::{Error, SurfaceModel, SurfacePoint, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn disk_points(n: usize, seed: u64) -> Vec<SurfacePoint> {
    let disk = builtin::unit_disk();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| disk.sample_point(&mut r, 0.0)).collect()
}

fn poly(terms: &[(u32, u32, f64)]) -> ScalarField {
    ScalarField::from_chart_fn("p", Polynomial::new(terms.iter().copied()))
}

fn reeb(f: &ScalarField, s: &SurfaceModel, res: f64) -> Result<ReebGraph, Error> {
    let crits = find_critical_points(f, s, 0.05, 1e-10)?.points;
    build_reeb_graph(f, s, &crits, res)
}

fn bin(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_hamreeb")).args(args).env_remove("HAMREEB_OUT").output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn hamiltonian_of_r2() -> Outcome {
    let start = Instant::now();
    let s = Arc::new(builtin::unit_disk());
    let v = hamiltonian_field(&builtin::r2_field(), &builtin::standard_form(&s), s);
    let worst = disk_points(1000, 1).iter().map(|p| (v.eval(p) - Vec2::new(-2.0 * p.pos.y, 2.0 * p.pos.x)).norm()).fold(0.0, f64::max);
    let t = start.elapsed();
    check(worst <= 1e-12 && within(t, 1.0), format!("max error {worst:.2e} at 1000 points (tol 1e-12), {t:.2?} (limit 1 s)"))
}

fn flow_matches_rotation() -> Outcome {
    let start = Instant::now();
    let s = Arc::new(builtin::unit_disk());
    let v = hamiltonian_field(&builtin::r2_field(), &builtin::standard_form(&s), s);
    let integ = FlowIntegrator::default().with_step(1e-3);
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for p in disk_points(100, 2) {
        let t: f64 = r.gen_range(-10.0..=10.0);
        let y = flow_point(&v, &p, t, &integ).map_err(|e| e.to_string())?;
        let (c, si) = ((2.0 * t).cos(), (2.0 * t).sin());
        worst = worst.max((y.pos - Vec2::new(c * p.pos.x - si * p.pos.y, si * p.pos.x + c * p.pos.y)).norm());
    }
    let t = start.elapsed();
    check(worst <= 1e-6 && within(t, 5.0), format!("max error {worst:.2e} over 100 (z, t) (tol 1e-6), {t:.2?} (limit 5 s)"))
}

fn jacobian_law() -> Outcome {
    let s = Arc::new(builtin::unit_disk());
    let form = builtin::standard_form(&s);
    let v = hamiltonian_field(&builtin::r2_field(), &form, s);
    let sm = ShiftMap::new(Arc::new(poly(&[(1, 1, 1.0)])), v, form);
    let (mut coarse, mut fine) = (0.0, 0.0);
    let disk = builtin::unit_disk();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = disk.sample_point(&mut r, 0.05);
        let a = jacobian_det(&sm, &p, 1e-4).map_err(|e| e.to_string())?;
        let b = jacobian_det(&sm, &p, 5e-5).map_err(|e| e.to_string())?;
        coarse += (a.numeric - a.predicted).abs();
        fine += (b.numeric - b.predicted).abs();
    }
    let ratio = coarse / fine;
    check((3.0..=5.0).contains(&ratio), format!("error ratio {ratio:.3} for fd_step 1e-4 -> 5e-5 over 20 points (want [3, 5])"))
}

fn twowell_graph() -> Result<Arc<ReebGraph>, String> {
    reeb(&builtin::twowell_field(), &builtin::twowell_domain(), 0.05).map(Arc::new).map_err(|e| e.to_string())
}

fn pullback_law() -> Outcome {
    let s = Arc::new(builtin::unit_disk());
    let f = builtin::r2_field();
    let pairs: [(ScalarField, AreaForm); 5] = [
        (poly(&[(1, 1, 1.0)]), builtin::standard_form(&s)),
        (poly(&[(1, 1, 1.0)]), builtin::quadratic_form()),
        (poly(&[(1, 0, 0.4), (0, 2, 0.3)]), builtin::radial_bump_form()),
        (poly(&[(0, 1, -0.5)]), builtin::constant_form(3.0)),
        (poly(&[(2, 1, 0.7)]), builtin::tilted_form(0.5)),
    ];
    let mut worst: f64 = 0.0;
    for (alpha, form) in &pairs {
        let v = hamiltonian_field(&f, form, s.clone());
        let sm = ShiftMap::new(Arc::new(alpha.clone()), v.clone(), form.clone());
        for p in disk_points(20, 4).iter().filter(|p| p.pos.norm() < 0.95) {
            let r = pullback_density_ratio(&sm, p, 1e-5).map_err(|e| e.to_string())?;
            worst = worst.max((r.ratio - 1.0 - alpha_derivative_along(alpha, &v, p)).abs());
        }
    }

    let g = twowell_graph()?;
    let tw = Arc::new(builtin::twowell_domain());
    let twf = builtin::twowell_field();
    let twform = builtin::standard_form(&tw);
    let h = hamiltonian_field(&twf, &twform, tw.clone());
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<_> = (0..200).map(|_| tw.sample_point(&mut r, 0.02)).collect();
    let lifts = [
        GraphFunction::from_profile(&g, 8, |_, _, v| 0.3 * (2.0 * v).sin()),
        GraphFunction::from_profile(&g, 8, |e, t, v| 0.2 * v - 0.1 + 0.05 * (e as f64 + 1.0) * (PI * t).sin()),
        GraphFunction::constant(&g, 0.7),
    ];
    let mut lifted_worst: f64 = 0.0;
    for a in &lifts {
        let phi = symplectomorphism_from_graph_function(&g, a, &h, &twform, &samples).map_err(|e| e.to_string())?;
        lifted_worst = lifted_worst.max(phi.density_residual);
    }
    check(
        worst <= 1e-4 && lifted_worst <= 1e-5,
        format!("max |ratio - (1 + d alpha(H))| {worst:.2e} over 5 (alpha, gamma) pairs (tol 1e-4); lifted max |ratio - 1| {lifted_worst:.2e} (tol 1e-5)"),
    )
}

fn counterexample() -> Outcome {
    let start = Instant::now();
    let scenario = run_counterexample_disk(0.05, 1000).map_err(|e| e.to_string())?;
    let tangent: f64 = scenario.checks.iter().filter(|c| c.description.starts_with("(b)")).map(|c| c.value).fold(0.0, f64::max);
    let rotation = scenario.checks.iter().find(|c| c.description.starts_with("(c)")).map(|c| c.value).unwrap_or(f64::NAN);
    let (code, _) = bin(&["counterexample"]);
    let t = start.elapsed();
    check(
        tangent < 1e-5 && rotation > 0.5 && code == 0 && within(t, 10.0),
        format!("max |T0 G_t - I| {tangent:.2e} (tol 1e-5), |T0 F_0.5 - I| {rotation:.6} (want > 0.5), exit {code}, {t:.2?} (limit 10 s)"),
    )
}

fn reeb_shapes() -> Outcome {
    let start = Instant::now();
    let cases: [(&str, SurfaceModel, ScalarField); 3] = [
        ("disk", builtin::unit_disk(), builtin::r2_field()),
        ("twowell", builtin::twowell_domain(), builtin::twowell_field()),
        ("torus", builtin::torus(), builtin::torus_height_field()),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, s, f) in &cases {
        let (coarse, fine) = (reeb(f, s, 0.04).map_err(|e| e.to_string())?, reeb(f, s, 0.02).map_err(|e| e.to_string())?);
        let shape = |g: &ReebGraph| {
            let mut kinds: Vec<&str> = g.nodes.iter().map(|n| n.kind.name()).collect();
            kinds.sort_unstable();
            (g.node_count(), g.edge_count(), g.betti1(), kinds)
        };
        ok &= shape(&coarse) == shape(&fine);
        ok &= match *name {
            "disk" => (fine.node_count(), fine.edge_count()) == (2, 1),
            "twowell" => {
                let at = |k: NodeKind| fine.nodes.iter().filter(|n| n.kind == k).map(|n| n.value).collect::<Vec<_>>();
                let (mins, saddles) = (at(NodeKind::Min), at(NodeKind::Saddle));
                (fine.node_count(), fine.edge_count()) == (4, 3)
                    && mins.len() == 2
                    && mins.iter().all(|v| v.abs() < 1e-9)
                    && saddles.len() == 1
                    && (saddles[0] - 1.0).abs() < 1e-9
            }
            _ => fine.betti1() == 1,
        };
        notes.push(format!("{name} {}n/{}e/b1={}", fine.node_count(), fine.edge_count(), fine.betti1()));
    }
    let t = start.elapsed();
    check(ok && within(t, 30.0), format!("{}; stable from 0.04 to 0.02; {t:.2?} (limit 30 s)", notes.join(", ")))
}

fn theta_identity() -> Outcome {
    let s = Arc::new(builtin::unit_disk());
    let f = builtin::r2_field();
    let form = builtin::standard_form(&s);
    let g = Arc::new(reeb(&f, &s, 0.05).map_err(|e| e.to_string())?);
    let v = hamiltonian_field(&f, &form, s.clone());
    let theta = theta_function(&g, &v, &form, &FlowIntegrator::default()).map_err(|e| e.to_string())?;
    let samples = disk_points(200, 7);
    let spread = samples.iter().map(|p| (theta.value(p) - PI).abs()).fold(0.0, f64::max);
    let report = verify_theta_identity(&theta, &samples, PI / 3.0, 1e-6).map_err(|e| e.to_string())?;
    check(
        spread <= 1e-6 && report.passed,
        format!(
            "max |theta - pi| {spread:.2e}, |Phi_theta - id| {:.2e}, |Phi_(alpha+theta) - Phi_alpha| {:.2e} at 200 points (tol 1e-6)",
            report.identity_residual, report.shift_residual
        ),
    )
}

fn r4_periods() -> Outcome {
    let s = Arc::new(builtin::unit_disk());
    let v = hamiltonian_field(&builtin::r4_field(), &builtin::standard_form(&s), s);
    let mut worst: f64 = 0.0;
    for r in [0.3, 0.5, 0.8] {
        let p = orbit_period(&v, &SurfacePoint::new(0, r, 0.0), &FlowIntegrator::default(), 1e-9)
            .map_err(|e| e.to_string())?
            .value()
            .ok_or("no period found")?;
        worst = worst.max((p - PI / (2.0 * r * r)).abs() / (PI / (2.0 * r * r)));
    }
    check(worst <= 1e-5, format!("max relative error {worst:.2e} for r in {{0.3, 0.5, 0.8}} (tol 1e-5)"))
}

fn volumes() -> Outcome {
    let s = builtin::twowell_domain();
    let f = builtin::twowell_field();
    let crits = find_critical_points(&f, &s, 0.05, 1e-10).map_err(|e| e.to_string())?.points;
    let mesh = triangulate(&s, 0.02).map_err(|e| e.to_string())?.with_values(|p| f.value(p));
    let run = |form: &AreaForm| j0_obstruction(&f, &mesh, form, 0.5, &crits, &Involution::negate()).map_err(|e| e.to_string());
    let flat = run(&builtin::constant_form(1.0))?;
    let tilted = run(&builtin::tilted_form(0.5))?;
    let (code, stdout) = bin(&["volumes", "--surface", "twowell", "--form", "tilted", "--level", "0.5", "--involution", "negate"]);
    let cli: Value = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
    let cli_obstructed = cli["results"]["obstructed"] == Value::Bool(true);
    check(
        flat.volume_mismatch < 0.01 && tilted.volume_mismatch > 0.05 && tilted.obstructed && code == 0 && cli_obstructed,
        format!(
            "flat mismatch {:.2e} (want < 1%), tilted mismatch {:.3} (want > 5%), obstructed {}, CLI exit {code} obstructed {cli_obstructed}",
            flat.volume_mismatch, tilted.volume_mismatch, tilted.obstructed
        ),
    )
}

fn round_trip() -> Outcome {
    let g = twowell_graph()?;
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (c0, c1, c2): (f64, f64, f64) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5));
        let bumps: Vec<f64> = (0..g.edge_count()).map(|_| r.gen_range(-0.3..0.3)).collect();
        let a = GraphFunction::from_profile(&g, 8, |e, t, v| c0 + c1 * v + c2 * (3.0 * v).sin() + bumps[e] * (PI * t).sin());
        let lifted = lift_graph_function(&g, &a).map_err(|e| e.to_string())?;
        let back = project_to_graph_function(&g, &lifted, 1e-6).map_err(|e| e.to_string())?;
        for e in 0..g.edge_count() {
            for i in 1..=PROJECTION_SAMPLES {
                let t = i as f64 / (PROJECTION_SAMPLES + 1) as f64;
                worst = worst.max((back.value(e, t) - lifted.profile_value(e, t)).abs());
            }
        }
    }
    let disk = reeb(&builtin::r2_field(), &builtin::unit_disk(), 0.05).map_err(|e| e.to_string())?;
    let rejected = matches!(project_to_graph_function(&disk, &poly(&[(1, 1, 1.0)]), 1e-6), Err(Error::NotConstant { .. }));
    check(
        worst <= 1e-8 && rejected,
        format!("max edge-sample error {worst:.2e} over 10 graph functions (tol 1e-8); xy rejected as NotConstant: {rejected}"),
    )
}

fn verify_all() -> Outcome {
    let start = Instant::now();
    let (code_a, a) = bin(&["verify-all", "--seed", "0"]);
    let (code_b, b) = bin(&["verify-all", "--seed", "0"]);
    let t = start.elapsed();
    let report: Value = serde_json::from_slice(&a).unwrap_or(Value::Null);
    let checks = report["checks"].as_array().map_or(0, Vec::len);
    let passed = report["passed"] == Value::Bool(true);
    check(
        code_a == 0 && code_b == 0 && passed && a == b && within(t / 2, 180.0),
        format!(
            "exit {code_a}/{code_b}, {checks} checks passed {passed}, identical output {}, {:.2?} per run (limit 3 min)",
            a == b,
            t / 2
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Hamiltonian field of |z|^2", hamiltonian_of_r2),
        ("flow equals e^{2it}z", flow_matches_rotation),
        ("Jacobian determinant converges at second order", jacobian_law),
        ("pulled-back density ratio", pullback_law),
        ("disk counterexample", counterexample),
        ("Reeb graph shapes", reeb_shapes),
        ("theta identities", theta_identity),
        ("periods of |z|^4", r4_periods),
        ("sublevel volumes and the swap obstruction", volumes),
        ("projection inverts lifting", round_trip),
        ("verify-all", verify_all),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
