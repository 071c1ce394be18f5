use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::flow::{flow_point, orbit_period, FlowIntegrator, Period};
use super::PlanarVectorField;
use crate::error::{Error, Result};
use crate::function::SurfaceFunction;
use crate::geometry::{AreaForm, SurfacePoint};
use crate::math::Vec2;
use crate::reeb::{lift_graph_function, EdgeProfile, GraphFunction, GraphPoint, LiftedFunction, NodeKind, ReebGraph};

/// Largest multiple of the period tried on each edge.
pub const MAX_MULTIPLE: u32 = 8;

const EDGE_SAMPLES: usize = 8;
const PERIOD_TOL: f64 = 1e-9;

/// `θ = k·Per`: the function with `Φ_θ = id`, from the periods of the orbits.
#[derive(Clone)]
pub struct ThetaFunction {
    pub graph: Arc<ReebGraph>,
    pub field: PlanarVectorField,
    pub multiples: Vec<u32>,
    /// Period (times the multiple) at every node.
    pub node_limits: Vec<f64>,
    /// `θ̂` sampled along the edges.
    pub profile: GraphFunction,
    lifted: LiftedFunction,
    integrator: FlowIntegrator,
}

impl ThetaFunction {
    fn nearest_node(&self, x: &SurfacePoint) -> usize {
        let s = &self.field.surface;
        (0..self.graph.node_count())
            .min_by(|&a, &b| s.distance(&self.graph.nodes[a].position, x).total_cmp(&s.distance(&self.graph.nodes[b].position, x)))
            .unwrap_or(0)
    }
}

impl SurfaceFunction for ThetaFunction {
    /// Computed orbit by orbit; the graph profile is only used for derivatives.
    fn value(&self, p: &SurfacePoint) -> f64 {
        let (edge, node) = match self.graph.quotient_point(p) {
            Ok(GraphPoint::Node(n)) => return self.node_limits[n],
            Ok(GraphPoint::Edge { edge, .. }) => (edge, None),
            Err(_) => (0, Some(self.nearest_node(p))),
        };
        if let Some(n) = node {
            return self.node_limits[n];
        }
        match orbit_period(&self.field, p, &self.integrator, PERIOD_TOL) {
            Ok(Period::Periodic(t)) => self.multiples[edge] as f64 * t,
            Ok(Period::NonPeriodic) => f64::NAN,
            Err(_) => self.node_limits[self.nearest_node(p)],
        }
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        self.lifted.gradient(p)
    }
}

fn node_period(graph: &ReebGraph, v: &PlanarVectorField, form: &AreaForm, node: usize, integ: &FlowIntegrator) -> Result<f64> {
    let n = &graph.nodes[node];
    match n.kind {
        NodeKind::Min | NodeKind::Max => {
            let hess = graph.field.hessian(&n.position);
            let det = hess.det();
            if !(det > 0.0) {
                return Err(Error::NoThetaProfile { max_k: MAX_MULTIPLE });
            }
            Ok(2.0 * PI * form.gamma(&n.position) / det.sqrt())
        }
        NodeKind::BoundaryLevel | NodeKind::Cut => match orbit_period(v, &n.position, integ, PERIOD_TOL)? {
            Period::Periodic(t) => Ok(t),
            Period::NonPeriodic => Err(Error::NoThetaProfile { max_k: MAX_MULTIPLE }),
        },
        NodeKind::Saddle | NodeKind::DegenerateDeclared => Err(Error::NoThetaProfile { max_k: MAX_MULTIPLE }),
    }
}

/// Builds `θ` for the Hamiltonian field `v` of the graph's function. Fails
/// with `NoThetaProfile` when some orbit is not periodic (saddles, degenerate
/// extremes) or no multiples `k ≤ 8` make the node periods agree.
pub fn theta_function(graph: &Arc<ReebGraph>, v: &PlanarVectorField, form: &AreaForm, integ: &FlowIntegrator) -> Result<ThetaFunction> {
    let no_profile = Error::NoThetaProfile { max_k: MAX_MULTIPLE };
    if graph.nodes.iter().any(|n| matches!(n.kind, NodeKind::Saddle | NodeKind::DegenerateDeclared)) {
        return Err(no_profile);
    }
    let node_periods: Vec<f64> = (0..graph.node_count()).map(|n| node_period(graph, v, form, n, integ)).collect::<Result<_>>()?;

    let mut periods: Vec<Vec<(f64, f64)>> = Vec::with_capacity(graph.edge_count());
    for e in &graph.edges {
        let mut knots = alloc::vec![(0.0, node_periods[e.from])];
        for i in 1..EDGE_SAMPLES {
            let t = i as f64 / EDGE_SAMPLES as f64;
            let Some(p) = graph.level_points(e.id, t, 1).first().copied() else { continue };
            match orbit_period(v, &p, integ, PERIOD_TOL) {
                Ok(Period::Periodic(per)) => knots.push((t, per)),
                _ => return Err(no_profile),
            }
        }
        knots.push((1.0, node_periods[e.to]));
        periods.push(knots);
    }

    // Smallest multiples (by sum, then lexicographically) agreeing at every node.
    let ne = graph.edge_count();
    let consistent = |ks: &[u32]| {
        (0..graph.node_count()).all(|n| {
            let vals: Vec<f64> = graph.incident_edges(n).iter().map(|&(e, _)| ks[e] as f64 * node_periods[n]).collect();
            vals.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-6 * w[0].abs().max(1.0))
        })
    };
    let total = (MAX_MULTIPLE as u64).checked_pow(ne as u32).filter(|&t| t <= 4096);
    let multiples = match total {
        Some(total) => {
            let mut best: Option<Vec<u32>> = None;
            for code in 0..total {
                let mut c = code;
                let ks: Vec<u32> = (0..ne)
                    .map(|_| {
                        let k = (c % MAX_MULTIPLE as u64) as u32 + 1;
                        c /= MAX_MULTIPLE as u64;
                        k
                    })
                    .collect();
                let better = best.as_ref().is_none_or(|b| ks.iter().sum::<u32>() < b.iter().sum::<u32>());
                if better && consistent(&ks) {
                    best = Some(ks);
                }
            }
            best.ok_or(no_profile)?
        }
        None => {
            let ks = alloc::vec![1; ne];
            if !consistent(&ks) {
                return Err(no_profile);
            }
            ks
        }
    };

    let node_limits: Vec<f64> = (0..graph.node_count())
        .map(|n| graph.incident_edges(n).first().map_or(1, |&(e, _)| multiples[e]) as f64 * node_periods[n])
        .collect();
    let profile = GraphFunction {
        node_values: node_limits.clone(),
        edges: periods
            .into_iter()
            .enumerate()
            .map(|(e, knots)| EdgeProfile::new(knots.into_iter().map(|(t, p)| (t, multiples[e] as f64 * p)).collect()))
            .collect(),
    };
    let lifted = lift_graph_function(graph, &profile)?;
    Ok(ThetaFunction { graph: graph.clone(), field: v.clone(), multiples, node_limits, profile, lifted, integrator: *integ })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaIdentityReport {
    /// `max |Φ_θ(x) − x|`.
    pub identity_residual: f64,
    /// `max |Φ_{α+θ}(x) − Φ_α(x)|`.
    pub shift_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `Φ_θ = id` and `Φ_{α+θ} = Φ_α` (for the constant `alpha`) at the samples.
pub fn verify_theta_identity(theta: &ThetaFunction, samples: &[SurfacePoint], alpha: f64, tol: f64) -> Result<ThetaIdentityReport> {
    let v = &theta.field;
    let s = &v.surface;
    let integ = theta.integrator.with_max_time(theta.integrator.max_time.max(8.0 * MAX_MULTIPLE as f64 * 100.0));
    let mut identity_residual: f64 = 0.0;
    let mut shift_residual: f64 = 0.0;
    for p in samples {
        let th = theta.value(p);
        if !th.is_finite() {
            return Err(Error::VerificationFailed(format!("θ undefined at {:?}", p.pos)));
        }
        let y = flow_point(v, p, th, &integ)?;
        identity_residual = identity_residual.max(s.distance(p, &y));
        let a = flow_point(v, p, alpha, &integ)?;
        let b = flow_point(v, p, alpha + th, &integ)?;
        shift_residual = shift_residual.max(s.distance(&a, &b));
    }
    Ok(ThetaIdentityReport { identity_residual, shift_residual, tolerance: tol, passed: identity_residual < tol && shift_residual < tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::dynamics::hamiltonian_field;
    use crate::fields::find_critical_points;
    use crate::reeb::{build_reeb_graph, centralizer_check};
    use crate::SurfaceModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(
        s: SurfaceModel,
        f: crate::fields::ScalarField,
        form: AreaForm,
    ) -> (Arc<SurfaceModel>, Arc<ReebGraph>, PlanarVectorField, AreaForm) {
        let s = Arc::new(s);
        let crits = find_critical_points(&f, &s, 0.05, 1e-10).unwrap();
        let g = Arc::new(build_reeb_graph(&f, &s, &crits.points, 0.05).unwrap());
        let h = hamiltonian_field(&f, &form, s.clone());
        (s, g, h, form)
    }

    #[test]
    fn theta_on_the_disk_is_pi() {
        let (s, g, h, form) = setup(builtin::unit_disk(), builtin::r2_field(), builtin::constant_form(1.0));
        let theta = theta_function(&g, &h, &form, &FlowIntegrator::default()).unwrap();
        assert_eq!(theta.multiples, alloc::vec![1]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let samples: Vec<SurfacePoint> = (0..50).map(|_| s.sample_point(&mut rng, 0.0)).collect();
        for p in &samples {
            assert!((theta.value(p) - PI).abs() < 1e-6);
        }
        let r = verify_theta_identity(&theta, &samples, PI / 3.0, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(centralizer_check(&theta, &h, &samples, 1e-9).passed);
    }

    #[test]
    fn theta_on_the_annulus_is_one() {
        let (s, g, h, form) = setup(builtin::annulus(), builtin::angular_field(), builtin::constant_form(1.0));
        let theta = theta_function(&g, &h, &form, &FlowIntegrator::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            assert!((theta.value(&s.sample_point(&mut rng, 0.0)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn theta_with_a_varying_period() {
        // For (1 + x²/2) dx∧dy the period of each circle depends on its radius.
        let (s, g, h, form) = setup(builtin::unit_disk(), builtin::r2_field(), builtin::quadratic_form());
        let theta = theta_function(&g, &h, &form, &FlowIntegrator::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let samples: Vec<SurfacePoint> = (0..20).map(|_| s.sample_point(&mut rng, 0.0)).collect();
        let r = verify_theta_identity(&theta, &samples, 0.4, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn no_theta_with_a_saddle() {
        let (_, g, h, form) = setup(builtin::twowell_domain(), builtin::twowell_field(), builtin::constant_form(1.0));
        assert!(matches!(theta_function(&g, &h, &form, &FlowIntegrator::default()), Err(Error::NoThetaProfile { .. })));
    }
}
