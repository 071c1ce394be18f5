//! Reeb graphs, graph functions and the sublevel volume obstruction.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use hamreeb_core::builtin;
use hamreeb_core::dynamics::{hamiltonian_field, theta_function, verify_theta_identity, FlowIntegrator};
use hamreeb_core::fields::{find_critical_points, CriticalPoint, ScalarField};
use hamreeb_core::function::Polynomial;
use hamreeb_core::geometry::{triangulate, AreaForm, TriMesh};
use hamreeb_core::obstruction::{j0_obstruction, Involution};
use hamreeb_core::reeb::{
    build_reeb_graph, lift_graph_function, orbit_spread, project_to_graph_function, GraphFunction, NodeKind, ReebGraph, PROJECTION_SAMPLES,
};
use hamreeb_core::{Error, SurfaceModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reeb(f: &ScalarField, s: &SurfaceModel, res: f64) -> ReebGraph {
    let crits = find_critical_points(f, s, 0.05, 1e-10).unwrap().points;
    build_reeb_graph(f, s, &crits, res).unwrap()
}

fn twowell_graph() -> &'static Arc<ReebGraph> {
    static G: OnceLock<Arc<ReebGraph>> = OnceLock::new();
    G.get_or_init(|| Arc::new(reeb(&builtin::twowell_field(), &builtin::twowell_domain(), 0.05)))
}

struct Sublevels {
    f: ScalarField,
    mesh: TriMesh,
    crits: Vec<CriticalPoint>,
}

fn twowell_mesh() -> &'static Sublevels {
    static M: OnceLock<Sublevels> = OnceLock::new();
    M.get_or_init(|| {
        let s = builtin::twowell_domain();
        let f = builtin::twowell_field();
        let crits = find_critical_points(&f, &s, 0.05, 1e-10).unwrap().points;
        let mesh = triangulate(&s, 0.02).unwrap().with_values(|p| f.value(p));
        Sublevels { f, mesh, crits }
    })
}

#[test]
fn reeb_graph_shapes() {
    let disk = reeb(&builtin::r2_field(), &builtin::unit_disk(), 0.05);
    assert_eq!((disk.node_count(), disk.edge_count()), (2, 1));

    let tw = twowell_graph();
    assert_eq!((tw.node_count(), tw.edge_count()), (4, 3));
    let mins: Vec<f64> = tw.nodes.iter().filter(|n| n.kind == NodeKind::Min).map(|n| n.value).collect();
    assert_eq!(mins.len(), 2);
    assert!(mins.iter().all(|v| v.abs() < 1e-9));
    let saddles: Vec<f64> = tw.nodes.iter().filter(|n| n.kind == NodeKind::Saddle).map(|n| n.value).collect();
    assert_eq!(saddles.len(), 1);
    assert!((saddles[0] - 1.0).abs() < 1e-9);

    let torus = reeb(&builtin::torus_height_field(), &builtin::torus(), 0.05);
    assert_eq!(torus.betti1(), 1);
    assert!(torus.is_connected());
}

#[test]
fn reeb_graph_survives_refinement() {
    let s = builtin::twowell_domain();
    let f = builtin::twowell_field();
    let (a, b) = (reeb(&f, &s, 0.05), reeb(&f, &s, 0.025));
    assert_eq!((a.node_count(), a.edge_count()), (b.node_count(), b.edge_count()));
    let kinds = |g: &ReebGraph| {
        let mut k: Vec<&str> = g.nodes.iter().map(|n| n.kind.name()).collect();
        k.sort_unstable();
        k
    };
    assert_eq!(kinds(&a), kinds(&b));
}

#[test]
fn xy_is_not_a_graph_function() {
    let g = reeb(&builtin::r2_field(), &builtin::unit_disk(), 0.05);
    let xy = ScalarField::from_chart_fn("xy", Polynomial::new([(1, 1, 1.0)]));
    assert!(matches!(project_to_graph_function(&g, &xy, 1e-6), Err(Error::NotConstant { .. })));
}

#[test]
fn theta_on_the_disk_is_half_a_turn() {
    let s = Arc::new(builtin::unit_disk());
    let f = builtin::r2_field();
    let form = builtin::standard_form(&s);
    let g = Arc::new(reeb(&f, &s, 0.05));
    let v = hamiltonian_field(&f, &form, s.clone());
    let theta = theta_function(&g, &v, &form, &FlowIntegrator::default()).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<_> = (0..200).map(|_| s.sample_point(&mut r, 0.0)).collect();
    let report = verify_theta_identity(&theta, &samples, PI / 3.0, 1e-6).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(theta.node_limits.iter().all(|t| (t - PI).abs() < 1e-6));
}

/// Component volumes of `{ f ≤ a }` around the wells at `x = 1` and `x = −1`,
/// from polar quadrature about each well (scipy `quad`, tolerance 1e-12).
const FLAT_WELL_05: f64 = 0.4236065423969689;
const TILTED_WELLS_05: (f64, f64) = (0.6199560832463383, 0.2272570015475995);

fn well_volumes(form: &AreaForm, a: f64) -> (f64, f64) {
    let m = twowell_mesh();
    let r = j0_obstruction(&m.f, &m.mesh, form, a, &m.crits, &Involution::identity()).unwrap();
    assert_eq!(r.volumes.len(), 2);
    (r.volumes[0], r.volumes[1])
}

#[test]
fn sublevel_volumes_match_quadrature() {
    let (l, r) = well_volumes(&builtin::constant_form(1.0), 0.5);
    assert!((l - FLAT_WELL_05).abs() / FLAT_WELL_05 < 2e-3);
    assert!((r - FLAT_WELL_05).abs() / FLAT_WELL_05 < 2e-3);
    let (a, b) = well_volumes(&builtin::tilted_form(0.5), 0.5);
    let (big, small) = (a.max(b), a.min(b));
    assert!((big - TILTED_WELLS_05.0).abs() / TILTED_WELLS_05.0 < 2e-3, "{big}");
    assert!((small - TILTED_WELLS_05.1).abs() / TILTED_WELLS_05.1 < 2e-3, "{small}");
}

#[test]
fn tilted_form_obstructs_the_swap() {
    let m = twowell_mesh();
    let flat = j0_obstruction(&m.f, &m.mesh, &builtin::constant_form(1.0), 0.5, &m.crits, &Involution::negate()).unwrap();
    assert!(!flat.obstructed && flat.volume_mismatch < 0.01);
    let tilted = j0_obstruction(&m.f, &m.mesh, &builtin::tilted_form(0.5), 0.5, &m.crits, &Involution::negate()).unwrap();
    assert!(tilted.obstructed && tilted.volume_mismatch > 0.05);
}

#[test]
fn critical_levels_are_refused() {
    let m = twowell_mesh();
    let r = j0_obstruction(&m.f, &m.mesh, &builtin::constant_form(1.0), 1.0, &m.crits, &Involution::negate());
    assert!(matches!(r, Err(Error::CriticalLevel(_))));
}

fn graph_function(g: &ReebGraph, c: [f64; 4]) -> GraphFunction {
    GraphFunction::from_profile(g, 8, move |e, t, v| {
        c[0] + c[1] * v + c[2] * (c[3] * v).sin() + 0.1 * (e as f64 + 1.0) * c[3] * (PI * t).sin()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn projection_inverts_lifting(c in proptest::array::uniform4(-1.0f64..1.0)) {
        let g = twowell_graph();
        let alpha = graph_function(g, c);
        let lifted = lift_graph_function(g, &alpha).unwrap();
        let back = project_to_graph_function(g, &lifted, 1e-6).unwrap();
        for e in 0..g.edge_count() {
            for i in 1..=PROJECTION_SAMPLES {
                let t = i as f64 / (PROJECTION_SAMPLES + 1) as f64;
                prop_assert!((back.value(e, t) - lifted.profile_value(e, t)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lifted_functions_are_orbit_invariants(c in proptest::array::uniform4(-1.0f64..1.0), seed in 0u64..1000) {
        let g = twowell_graph();
        let s = Arc::new(builtin::twowell_domain());
        let f = builtin::twowell_field();
        let v = hamiltonian_field(&f, &builtin::standard_form(&s), s.clone());
        let lifted = lift_graph_function(g, &graph_function(g, c)).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let starts: Vec<_> = (0..5).map(|_| s.sample_point(&mut r, 0.05)).collect();
        let spread = orbit_spread(&lifted, &v, &starts, 1.0, &FlowIntegrator::default()).unwrap();
        prop_assert!(spread < 1e-6);
    }

    #[test]
    fn mirrored_tilts_mirror_the_volumes(slope in 0.05f64..0.8) {
        let sorted = |(a, b): (f64, f64)| (a.max(b), a.min(b));
        let (a, b) = sorted(well_volumes(&builtin::tilted_form(slope), 0.5));
        let (c, d) = sorted(well_volumes(&builtin::tilted_form(-slope), 0.5));
        prop_assert!((a - c).abs() < 2e-3 * a);
        prop_assert!((b - d).abs() < 2e-3 * b);
    }

    #[test]
    fn even_densities_never_obstruct(k in 0.0f64..2.0, level in 0.05f64..0.9) {
        let m = twowell_mesh();
        let form = AreaForm::new("even", Arc::new(hamreeb_core::function::PerChart::single(Polynomial::new([(0, 0, 1.0), (2, 0, k), (0, 2, k)]))));
        let r = j0_obstruction(&m.f, &m.mesh, &form, level, &m.crits, &Involution::negate()).unwrap();
        prop_assert!(!r.obstructed, "mismatch {}", r.volume_mismatch);
        let id = j0_obstruction(&m.f, &m.mesh, &builtin::tilted_form(k), level, &m.crits, &Involution::identity()).unwrap();
        prop_assert!(!id.obstructed);
    }
}
