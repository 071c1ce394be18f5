//! The invariant suite run by `verify-all`, grouped by area. Every check is a
//! deterministic function of the seed.

use std::f64::consts::PI;
use std::sync::Arc;

use hamreeb_core::builtin;
use hamreeb_core::dynamics::{
    flow_point, hamiltonian_field, jacobian_det, poisson_bracket, pullback_density_ratio, shift_apply, theta_function, trajectory,
    verify_theta_identity, FlowIntegrator, PlanarVectorField, ShiftMap,
};
use hamreeb_core::fields::{find_critical_points, CriticalKind, ScalarField};
use hamreeb_core::function::{ChartFn, ClosureFn, Constant, Polynomial, Product, SurfaceFunction};
use hamreeb_core::geometry::{
    integrate_density, make_model_surface, triangulate, AreaForm, Region, SurfaceModel, SurfacePoint, SurfaceSpec,
};
use hamreeb_core::obstruction::{j0_obstruction, run_counterexample_disk, Involution};
use hamreeb_core::reeb::{
    build_reeb_graph, lift_graph_function, orbit_spread, project_to_graph_function, symplectomorphism_from_graph_function, GraphFunction,
    GraphPoint, NodeKind, ReebGraph, PROJECTION_SAMPLES,
};
use hamreeb_core::{Error, Mat2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::Check;

pub type Group = (&'static str, Vec<Check>);

type GroupFn = fn(u64) -> Result<Vec<Check>, Error>;

/// Runs every group. A group whose setup fails reports that as a failed check.
pub fn run(seed: u64) -> Vec<Group> {
    let groups: [(&'static str, GroupFn); 5] = [
        ("surface_geometry", surface_geometry),
        ("scalar_fields", scalar_fields),
        ("hamiltonian_dynamics", hamiltonian_dynamics),
        ("reeb_centralizer", reeb_centralizer),
        ("obstruction", obstruction),
    ];
    groups.into_iter().map(|(name, f)| (name, f(seed).unwrap_or_else(|e| vec![Check::failed("setup", &e.to_string())]))).collect()
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn points(s: &SurfaceModel, n: usize, r: &mut ChaCha8Rng, margin: f64) -> Vec<SurfacePoint> {
    (0..n).map(|_| s.sample_point(r, margin)).collect()
}

fn poly(name: &str, terms: &[(u32, u32, f64)]) -> ScalarField {
    ScalarField::from_chart_fn(name, Polynomial::new(terms.iter().copied()))
}

fn graph(f: &ScalarField, s: &SurfaceModel, res: f64) -> Result<ReebGraph, Error> {
    let crits = find_critical_points(f, s, 0.05, 1e-10)?.points;
    build_reeb_graph(f, s, &crits, res)
}

pub fn surface_geometry(seed: u64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let mut r = rng(seed, 1);

    let sphere = builtin::sphere();
    let residual = builtin::standard_form(&sphere).compatibility_residual(&sphere, 100, &mut r);
    out.push(Check::at_most("round density compatible on the sphere overlap", residual, 1e-9));

    let tw = builtin::twowell_domain();
    let (a, b) = (triangulate(&tw, 0.1)?, triangulate(&tw, 0.1)?);
    out.push(Check::holds("triangulation is deterministic", a.vertices == b.vertices && a.triangles == b.triangles));

    let disk = builtin::unit_disk();
    let skew = |p: &SurfacePoint| p.pos.x + 0.5 * p.pos.y * p.pos.y + 0.2 * p.pos.x * p.pos.y;
    let mesh = triangulate(&disk, 0.05)?.with_values(skew);
    let form = builtin::radial_bump_form();
    let parts = [
        integrate_density(&mesh, &form, Region::Sublevel(-0.2))?,
        integrate_density(&mesh, &form, Region::Band(-0.2, 0.3))?,
        integrate_density(&mesh, &form, Region::Superlevel(0.3))?,
    ];
    let whole = integrate_density(&mesh, &form, Region::Whole)?;
    let sum: f64 = parts.iter().sum();
    out.push(Check::at_most(
        "integrals additive over disjoint regions",
        (sum - whole).abs(),
        1e-12 * parts.iter().map(|p| p.abs()).sum::<f64>(),
    ));

    let flipped = triangulate(&disk, 0.05)?.with_values(|p| skew(&p.with_pos(-p.pos)));
    let a = integrate_density(&mesh, &form, Region::Sublevel(0.1))?;
    let b = integrate_density(&flipped, &form, Region::Sublevel(0.1))?;
    out.push(Check::at_most("integral invariant under (x, y) -> (-x, -y)", (a - b).abs() / a.max(b), 0.01));
    Ok(out)
}

/// `f∘R` for the rotation `R` by `angle`.
fn rotated(f: Polynomial, angle: f64) -> ScalarField {
    let (s, c) = angle.sin_cos();
    let rot = Mat2::new(c, -s, s, c);
    let rt = Mat2::new(c, s, -s, c);
    let f = Arc::new(f);
    let (f1, f2, f3) = (f.clone(), f.clone(), f);
    let g = ClosureFn::new(move |p| f1.value(rot.apply(p)))
        .with_gradient(move |p| rt.apply(f2.gradient(rot.apply(p)).expect("polynomial gradient")))
        .with_hessian(move |p| rt.mul(&f3.hessian(rot.apply(p)).expect("polynomial hessian")).mul(&rot));
    ScalarField::from_chart_fn("rotated", g)
}

fn kinds(f: &ScalarField, s: &SurfaceModel) -> Result<Vec<String>, Error> {
    let mut k: Vec<String> = find_critical_points(f, s, 0.05, 1e-10)?.points.iter().map(|c| c.kind.name()).collect();
    k.sort();
    Ok(k)
}

pub fn scalar_fields(seed: u64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let mut r = rng(seed, 2);
    let disk = builtin::unit_disk();
    let f = builtin::twowell_field();
    let pts = points(&disk, 100, &mut r, 0.0);
    let err = |h: f64| pts.iter().map(|p| (f.fd_gradient(p, h) - f.gradient(p)).norm()).sum::<f64>();
    let ratio = err(1e-3) / err(5e-4);
    out.push(Check::at_most("difference gradients converge at second order (error ratio - 4)", (ratio - 4.0).abs(), 0.5));

    let mut worst: f64 = 0.0;
    for (field, surface) in [
        (builtin::twowell_field(), builtin::twowell_domain()),
        (builtin::torus_height_field(), builtin::torus()),
        (builtin::sphere_height_field(), builtin::sphere()),
    ] {
        let search = find_critical_points(&field, &surface, 0.05, 1e-10)?;
        worst = search.points.iter().map(|c| c.gradient_norm).fold(worst, f64::max);
    }
    out.push(Check::at_most("critical points are refined (|grad f|)", worst, 1e-8));

    let big = make_model_surface(SurfaceSpec::Disk { radius: 1.5 })?;
    let plain = kinds(&f, &big)?;
    let turned = kinds(&rotated(builtin::twowell_poly(), 0.7), &big)?;
    out.push(Check::holds("critical kinds invariant under rotation", plain == turned && plain.len() == 3));

    for (name, field, surface) in
        [("sphere", builtin::sphere_height_field(), builtin::sphere()), ("torus", builtin::torus_height_field(), builtin::torus())]
    {
        let search = find_critical_points(&field, &surface, 0.05, 1e-10)?;
        let chi = search.count(CriticalKind::NondegMin) as i64 - search.count(CriticalKind::NondegSaddle) as i64
            + search.count(CriticalKind::NondegMax) as i64;
        out.push(Check::at_most(
            format!("minima - saddles + maxima = Euler characteristic ({name})"),
            (chi - surface.euler_characteristic()).abs() as f64,
            0.0,
        ));
    }
    Ok(out)
}

pub fn hamiltonian_dynamics(seed: u64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let mut r = rng(seed, 3);
    let integ = FlowIntegrator::default();

    // f-invariance along trajectories
    let mut drift: f64 = 0.0;
    for (f, s) in [(builtin::twowell_field(), builtin::twowell_domain()), (builtin::torus_height_field(), builtin::torus())] {
        let s = Arc::new(s);
        let h = hamiltonian_field(&f, &builtin::standard_form(&s), s.clone());
        for p in points(&s, 10, &mut r, 0.02) {
            let f0 = f.value(&p);
            for t in trajectory(&h, &p, 5.0, &integ, 50)? {
                drift = drift.max((f.value(&t.point) - f0).abs());
            }
        }
    }
    out.push(Check::at_most("f preserved along trajectories", drift, integ.reprojection_tolerance));

    let disk = Arc::new(builtin::unit_disk());
    let r2 = builtin::r2_field();

    // Liouville: constant shifts preserve a non-constant density.
    let form = builtin::quadratic_form();
    let h = hamiltonian_field(&r2, &form, disk.clone());
    let mut worst: f64 = 0.0;
    for p in points(&disk, 100, &mut r, 0.01) {
        let t = r.gen_range(-3.0..3.0);
        let sm = ShiftMap::new(Arc::new(Constant(t)), h.clone(), form.clone());
        worst = worst.max((pullback_density_ratio(&sm, &p, 1e-5)?.ratio - 1.0).abs());
    }
    out.push(Check::at_most("constant shifts preserve the area form", worst, 1e-5));

    // Jacobian law at second order in the difference step.
    let std_form = builtin::standard_form(&disk);
    let h1 = hamiltonian_field(&r2, &std_form, disk.clone());
    let xy = Arc::new(poly("xy", &[(1, 1, 1.0)]));
    let sm = ShiftMap::new(xy.clone(), h1.clone(), std_form.clone());
    let pts = points(&disk, 20, &mut r, 0.05);
    let (mut e1, mut e2) = (0.0, 0.0);
    for p in &pts {
        let a = jacobian_det(&sm, p, 1e-4)?;
        let b = jacobian_det(&sm, p, 5e-5)?;
        e1 += (a.numeric - a.predicted).abs();
        e2 += (b.numeric - b.predicted).abs();
    }
    let ratio = e1 / e2;
    out.push(Check::at_most(
        "Jacobian determinant error ratio under step halving (distance from [3, 5])",
        ((ratio - 4.0).abs() - 1.0).max(0.0),
        0.0,
    ));

    // Pullback law for several (alpha, gamma).
    let pairs: Vec<(Arc<dyn SurfaceFunction>, AreaForm)> = vec![
        (xy.clone(), builtin::constant_form(1.0)),
        (xy.clone(), builtin::quadratic_form()),
        (Arc::new(poly("x", &[(1, 0, 1.0)])), builtin::radial_bump_form()),
        (Arc::new(poly("x+y2/2", &[(1, 0, 1.0), (0, 2, 0.5)])), builtin::tilted_form(0.3)),
        (Arc::new(poly("x2y", &[(2, 1, 1.0)])), builtin::constant_form(2.0)),
    ];
    let mut worst: f64 = 0.0;
    for (alpha, form) in pairs {
        let h = hamiltonian_field(&r2, &form, disk.clone());
        let sm = ShiftMap::new(alpha, h, form);
        for p in points(&disk, 4, &mut r, 0.1) {
            let rep = pullback_density_ratio(&sm, &p, 1e-5)?;
            worst = worst.max((rep.ratio - rep.predicted).abs());
        }
    }
    out.push(Check::at_most("pulled-back density ratio equals 1 + d alpha(H)", worst, 1e-4));

    // Poisson bracket identities.
    let qform = builtin::quadratic_form();
    let f = builtin::twowell_field();
    let g = poly("xy", &[(1, 1, 1.0)]);
    let k = poly("x+y2", &[(1, 0, 1.0), (0, 2, 1.0)]);
    let fg = poisson_bracket(&f, Arc::new(g.clone()), &qform);
    let gf = poisson_bracket(&g, Arc::new(f.clone()), &qform);
    let f_gk = poisson_bracket(&f, Arc::new(Product(Arc::new(g.clone()), Arc::new(k.clone()))), &qform);
    let fk = poisson_bracket(&f, Arc::new(k.clone()), &qform);
    let (mut anti, mut leibniz): (f64, f64) = (0.0, 0.0);
    for p in points(&disk, 100, &mut r, 0.0) {
        anti = anti.max((fg.value(&p) + gf.value(&p)).abs());
        leibniz = leibniz.max((f_gk.value(&p) - g.value(&p) * fk.value(&p) - k.value(&p) * fg.value(&p)).abs());
    }
    out.push(Check::at_most("Poisson bracket antisymmetric", anti, 1e-8));
    out.push(Check::at_most("Poisson bracket Leibniz rule", leibniz, 1e-8));

    // Shifts of centralizer elements: preservation and the group law.
    let tw = Arc::new(builtin::twowell_domain());
    let twf = builtin::twowell_field();
    let twform = builtin::standard_form(&tw);
    let g = Arc::new(graph(&twf, &tw, 0.05)?);
    let th = hamiltonian_field(&twf, &twform, tw.clone());
    let samples = points(&tw, 200, &mut r, 0.02);
    let a = GraphFunction::from_profile(&g, 8, |_, _, v| 0.3 * (2.0 * v).sin());
    let b = GraphFunction::from_profile(&g, 8, |e, t, v| 0.2 * v - 0.1 + 0.05 * (e as f64 + 1.0) * (PI * t).sin());
    let ab = GraphFunction::from_profile(&g, 8, |e, t, _| a.value(e, t) + b.value(e, t));
    for (name, alpha) in [("alpha", &a), ("beta", &b)] {
        match symplectomorphism_from_graph_function(&g, alpha, &th, &twform, &samples) {
            Ok(phi) => {
                out.push(Check::at_most(format!("shift of lifted {name} preserves f"), phi.f_invariance, 1e-6));
                out.push(Check::at_most(format!("shift of lifted {name} preserves the area form"), phi.density_residual, 1e-5));
            }
            Err(e) => out.push(Check::failed(format!("shift of lifted {name}"), &e.to_string())),
        }
    }
    let shift_of = |gf: &GraphFunction| -> Result<ShiftMap, Error> {
        Ok(ShiftMap::new(Arc::new(lift_graph_function(&g, gf)?), th.clone(), twform.clone()))
    };
    let (sa, sb, sab) = (shift_of(&a)?, shift_of(&b)?, shift_of(&ab)?);
    let mut worst: f64 = 0.0;
    for p in &samples {
        let lhs = shift_apply(&sa, &shift_apply(&sb, p)?)?;
        let rhs = shift_apply(&sab, p)?;
        worst = worst.max(tw.distance(&lhs, &rhs));
    }
    out.push(Check::at_most("shifts compose additively", worst, 1e-6));

    // theta on the circle cases.
    for (name, field, surface) in [("disk", r2.clone(), builtin::unit_disk()), ("annulus", builtin::angular_field(), builtin::annulus())] {
        let s = Arc::new(surface);
        let form = builtin::standard_form(&s);
        let g = Arc::new(graph(&field, &s, 0.05)?);
        let h = hamiltonian_field(&field, &form, s.clone());
        match theta_function(&g, &h, &form, &integ) {
            Ok(theta) => {
                let rep = verify_theta_identity(&theta, &points(&s, 50, &mut r, 0.0), PI / 3.0, 1e-6)?;
                out.push(Check::at_most(format!("flow for time theta is the identity ({name})"), rep.identity_residual, 1e-6));
                out.push(Check::at_most(format!("theta is a period of every shift ({name})"), rep.shift_residual, 1e-6));
            }
            Err(e) => out.push(Check::failed(format!("theta ({name})"), &e.to_string())),
        }
    }

    // No nonzero constant-per-edge function on the two-well graph shifts by the identity.
    out.push(twowell_no_periodic_shift(&g, &th)?);
    Ok(out)
}

fn twowell_no_periodic_shift(g: &ReebGraph, h: &PlanarVectorField) -> Result<Check, Error> {
    let integ = FlowIntegrator::default();
    let mut probes: Vec<(usize, SurfacePoint)> = Vec::new();
    for e in &g.edges {
        for t in [0.25, 0.5, 0.75] {
            if let Some(p) = g.level_points(e.id, t, 1).first() {
                probes.push((e.id, *p));
            }
        }
    }
    let side = |e: usize| -> usize {
        let n = &g.nodes[g.edges[e].from];
        match (n.kind, n.position.pos.x < 0.0) {
            (NodeKind::Min, true) => 0,
            (NodeKind::Min, false) => 1,
            _ => 2,
        }
    };
    let grid: Vec<f64> = (0..20).map(|i| -2.0 + 4.0 * i as f64 / 19.0).collect();
    let mut violations = 0;
    for &a in &grid {
        for &b in &grid {
            let value = |e: usize| [a, b, 0.5 * (a + b)][side(e)];
            let mut identity = true;
            for (e, p) in &probes {
                let y = flow_point(h, p, value(*e), &integ)?;
                if h.surface.distance(p, &y) > 1e-6 {
                    identity = false;
                    break;
                }
            }
            if identity && a.abs().max(b.abs()) >= 1e-4 {
                violations += 1;
            }
        }
    }
    Ok(Check::at_most("no nonzero constant-per-edge function shifts by the identity (two-well)", violations as f64, 0.0))
}

pub fn reeb_centralizer(seed: u64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let mut r = rng(seed, 4);

    let shape = |g: &ReebGraph| {
        let mut kinds: Vec<&str> = g.nodes.iter().map(|n| n.kind.name()).collect();
        kinds.sort();
        let mut ends: Vec<(&str, &str)> = g.edges.iter().map(|e| (g.nodes[e.from].kind.name(), g.nodes[e.to].kind.name())).collect();
        ends.sort();
        (kinds, ends, g.betti1())
    };
    for (name, field, surface, nodes, edges) in [
        ("disk", builtin::r2_field(), builtin::unit_disk(), 2, 1),
        ("two-well", builtin::twowell_field(), builtin::twowell_domain(), 4, 3),
        ("torus", builtin::torus_height_field(), builtin::torus(), 4, 4),
    ] {
        let coarse = graph(&field, &surface, 0.05)?;
        let fine = graph(&field, &surface, 0.025)?;
        let counts = (coarse.node_count(), coarse.edge_count()) == (nodes, edges);
        out.push(Check::holds(format!("Reeb graph has {nodes} nodes and {edges} edges ({name})"), counts));
        out.push(Check::holds(format!("Reeb graph stable under refinement ({name})"), shape(&coarse) == shape(&fine)));
    }

    let tw = Arc::new(builtin::twowell_domain());
    let f = builtin::twowell_field();
    let form = builtin::standard_form(&tw);
    let g = Arc::new(graph(&f, &tw, 0.05)?);
    let h = hamiltonian_field(&f, &form, tw.clone());

    let mut worst: f64 = 0.0;
    for p in points(&tw, 200, &mut r, 0.0) {
        let v = match g.quotient_point(&p)? {
            GraphPoint::Node(n) => g.nodes[n].value,
            GraphPoint::Edge { edge, t } => g.edge_value(edge, t),
        };
        worst = worst.max((f.value(&p) - v).abs());
    }
    out.push(Check::at_most("f equals f-hat on the quotient", worst, 1e-9));

    // Round trip through lift and projection for random graph functions.
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (c0, c1, c2): (f64, f64, f64) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5));
        let bumps: Vec<f64> = (0..g.edge_count()).map(|_| r.gen_range(-0.3..0.3)).collect();
        let a = GraphFunction::from_profile(&g, 8, |e, t, v| c0 + c1 * v + c2 * (3.0 * v).sin() + bumps[e] * (PI * t).sin());
        let lifted = lift_graph_function(&g, &a)?;
        let back = project_to_graph_function(&g, &lifted, 1e-6)?;
        for e in 0..g.edge_count() {
            for i in 1..=PROJECTION_SAMPLES {
                let t = i as f64 / (PROJECTION_SAMPLES + 1) as f64;
                worst = worst.max((back.value(e, t) - lifted.profile_value(e, t)).abs());
            }
        }
    }
    out.push(Check::at_most("projection inverts lifting", worst, 1e-8));
    let xy = poly("xy", &[(1, 1, 1.0)]);
    let not_constant = matches!(project_to_graph_function(&g, &xy, 1e-6), Err(Error::NotConstant { .. }));
    out.push(Check::holds("xy is rejected as not constant on level components", not_constant));

    let lifted = lift_graph_function(&g, &GraphFunction::from_profile(&g, 8, |_, _, v| 0.3 * (2.0 * v).sin()))?;
    let starts = points(&tw, 20, &mut r, 0.02);
    let spread = orbit_spread(&lifted, &h, &starts, 2.0, &FlowIntegrator::default())?;
    out.push(Check::at_most("lifted functions are constant on orbits", spread, 1e-6));

    // A non-centralizer function fails the pullback law's symplectic case.
    let disk = Arc::new(builtin::unit_disk());
    let dform = builtin::standard_form(&disk);
    let dh = hamiltonian_field(&builtin::r2_field(), &dform, disk.clone());
    let sm = ShiftMap::new(Arc::new(xy), dh, dform);
    let dev = pullback_density_ratio(&sm, &SurfacePoint::new(0, 0.5, 0.0), 1e-5)?.ratio - 1.0;
    out.push(Check::at_least("shift of xy does not preserve the area form (|ratio - 1|)", dev.abs(), 0.1));
    Ok(out)
}

pub fn obstruction(_seed: u64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let s = builtin::twowell_domain();
    let f = builtin::twowell_field();
    let crits = find_critical_points(&f, &s, 0.05, 1e-10)?.points;
    let mesh = triangulate(&s, 0.03)?.with_values(|p| f.value(p));
    let flat = j0_obstruction(&f, &mesh, &builtin::constant_form(1.0), 0.5, &crits, &Involution::negate())?;
    out.push(Check::at_most("equal volumes for the flat form", flat.volume_mismatch, 0.01));
    out.push(Check::holds("flat form is not obstructed", !flat.obstructed));
    let tilted = j0_obstruction(&f, &mesh, &builtin::tilted_form(0.5), 0.5, &crits, &Involution::negate())?;
    out.push(Check::at_least("volumes differ for the tilted form", tilted.volume_mismatch, 0.05));
    out.push(Check::holds("tilted form is obstructed", tilted.obstructed));
    let id = j0_obstruction(&f, &mesh, &builtin::tilted_form(0.5), 0.5, &crits, &Involution::identity())?;
    out.push(Check::holds("identity is not obstructed", !id.obstructed));
    let scenario = run_counterexample_disk(0.05, 1000)?;
    for c in scenario.checks {
        out.push(Check { name: c.description, residual: (c.value - c.expected).abs(), tolerance: c.tolerance, passed: c.passed });
    }
    Ok(out)
}
