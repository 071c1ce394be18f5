use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::graph::{GraphPoint, NodeKind, ReebGraph};
use crate::error::{Error, Result};
use crate::function::SurfaceFunction;
use crate::geometry::SurfacePoint;
use crate::math::{Mat2, Vec2};

/// Values of a graph function along one edge, as `(t, value)` knots sorted by
/// `t` and including both ends. Interpolated by a C¹ cubic Hermite spline.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProfile {
    pub knots: Vec<(f64, f64)>,
}

impl EdgeProfile {
    pub fn new(mut knots: Vec<(f64, f64)>) -> Self {
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        EdgeProfile { knots }
    }

    fn slope(&self, i: usize) -> f64 {
        let k = &self.knots;
        let n = k.len();
        if n < 2 {
            return 0.0;
        }
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        (k[b].1 - k[a].1) / (k[b].0 - k[a].0)
    }

    /// Value and `t`-derivative at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let k = &self.knots;
        match k.len() {
            0 => return (0.0, 0.0),
            1 => return (k[0].1, 0.0),
            _ => {}
        }
        let t = t.clamp(k[0].0, k[k.len() - 1].0);
        let i = k.partition_point(|q| q.0 <= t).clamp(1, k.len() - 1) - 1;
        let (t0, y0) = k[i];
        let (t1, y1) = k[i + 1];
        let h = t1 - t0;
        let u = (t - t0) / h;
        let (m0, m1) = (self.slope(i) * h, self.slope(i + 1) * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        let dv = (6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * m1;
        (v, dv / h)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }
}

/// A function on the Reeb graph: one value per node and a profile per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction {
    pub node_values: Vec<f64>,
    pub edges: Vec<EdgeProfile>,
}

impl GraphFunction {
    pub fn constant(graph: &ReebGraph, c: f64) -> Self {
        GraphFunction {
            node_values: alloc::vec![c; graph.node_count()],
            edges: (0..graph.edge_count()).map(|_| EdgeProfile::new(alloc::vec![(0.0, c), (1.0, c)])).collect(),
        }
    }

    /// Samples `h(edge, t, s)` (with `s` the field value) at `n + 1` equally
    /// spaced parameters per edge. Node values come from the first incident edge.
    pub fn from_profile(graph: &ReebGraph, n: usize, h: impl Fn(usize, f64, f64) -> f64) -> Self {
        let n = n.max(1);
        let edges: Vec<EdgeProfile> = (0..graph.edge_count())
            .map(|e| {
                EdgeProfile::new(
                    (0..=n)
                        .map(|i| {
                            let t = i as f64 / n as f64;
                            (t, h(e, t, graph.edge_value(e, t)))
                        })
                        .collect(),
                )
            })
            .collect();
        let node_values = (0..graph.node_count())
            .map(|v| match graph.incident_edges(v).first() {
                Some(&(e, lower)) => edges[e].value(if lower { 0.0 } else { 1.0 }),
                None => 0.0,
            })
            .collect();
        GraphFunction { node_values, edges }
    }

    /// `a + b·f`, exactly representable on every edge.
    pub fn affine_in_f(graph: &ReebGraph, a: f64, b: f64) -> Self {
        Self::from_profile(graph, 1, |_, _, s| a + b * s)
    }

    pub fn value(&self, edge: usize, t: f64) -> f64 {
        self.edges[edge].value(t)
    }

    pub fn value_at(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Node(n) => self.node_values[n],
            GraphPoint::Edge { edge, t } => self.value(edge, t),
        }
    }

    /// Checks sizes and continuity at the nodes (to `1e-9`).
    pub fn validate(&self, graph: &ReebGraph) -> Result<()> {
        if self.node_values.len() != graph.node_count() || self.edges.len() != graph.edge_count() {
            return Err(Error::GraphMismatch(format!(
                "{} nodes and {} edges given, graph has {} and {}",
                self.node_values.len(),
                self.edges.len(),
                graph.node_count(),
                graph.edge_count()
            )));
        }
        for (e, prof) in self.edges.iter().enumerate() {
            if prof.knots.len() < 2 || prof.knots[0].0 != 0.0 || prof.knots[prof.knots.len() - 1].0 != 1.0 {
                return Err(Error::GraphMismatch(format!("edge {e} profile must cover [0, 1]")));
            }
            let edge = &graph.edges[e];
            for (node, t) in [(edge.from, 0.0), (edge.to, 1.0)] {
                let v = prof.value(t);
                let nv = self.node_values[node];
                if !((v - nv).abs() <= 1e-9 * nv.abs().max(1.0)) {
                    return Err(Error::Discontinuous { node, detail: format!("edge {e} ends at {v}, node value is {nv}") });
                }
            }
        }
        Ok(())
    }
}

/// The pullback `α = α̂ ∘ q` of a graph function to the surface, smoothed in
/// collars around nodes where several edge ends meet.
#[derive(Clone)]
pub struct LiftedFunction {
    pub graph: Arc<ReebGraph>,
    pub profile: GraphFunction,
    /// Collar widths (in values of `f`) at the lower and upper end of each edge.
    pub collars: Vec<(f64, f64)>,
}

fn smoothstep(d: f64, delta: f64) -> (f64, f64) {
    if delta <= 0.0 {
        return (1.0, 0.0);
    }
    let a = delta / 3.0;
    let w = delta - a;
    let x = ((d - a) / w).clamp(0.0, 1.0);
    (x * x * (3.0 - 2.0 * x), if x > 0.0 && x < 1.0 { 6.0 * x * (1.0 - x) / w } else { 0.0 })
}

impl LiftedFunction {
    /// Smoothed profile value and its derivative with respect to `f`.
    pub fn profile_eval(&self, edge: usize, t: f64) -> (f64, f64) {
        let e = &self.graph.edges[edge];
        let span = match self.graph.codomain() {
            crate::fields::Codomain::Circle { period } => period,
            crate::fields::Codomain::Line => e.f_range.1 - e.f_range.0,
        };
        let (g, dg) = self.profile.edges[edge].eval(t);
        let (c0, c1) = self.collars[edge];
        let d0 = t * span.abs();
        let d1 = (1.0 - t) * span.abs();
        let (v, dv_dt) = if c0 > 0.0 && d0 < c0 {
            let n = self.profile.node_values[e.from];
            let (w, dw) = smoothstep(d0, c0);
            (n + w * (g - n), dw * span.abs() * (g - n) + w * dg)
        } else if c1 > 0.0 && d1 < c1 {
            let n = self.profile.node_values[e.to];
            let (w, dw) = smoothstep(d1, c1);
            (n + w * (g - n), -dw * span.abs() * (g - n) + w * dg)
        } else {
            (g, dg)
        };
        (v, dv_dt / span)
    }

    pub fn profile_value(&self, edge: usize, t: f64) -> f64 {
        self.profile_eval(edge, t).0
    }

    fn eval(&self, p: &SurfacePoint) -> Option<(f64, f64)> {
        match self.graph.quotient_point(p).ok()? {
            GraphPoint::Node(n) => Some((self.profile.node_values[n], 0.0)),
            GraphPoint::Edge { edge, t } => Some(self.profile_eval(edge, t)),
        }
    }
}

impl SurfaceFunction for LiftedFunction {
    fn value(&self, p: &SurfacePoint) -> f64 {
        self.eval(p).map_or(f64::NAN, |r| r.0)
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        let (_, ds) = self.eval(p)?;
        Some(self.graph.field.gradient(p) * ds)
    }

    fn hessian(&self, _p: &SurfacePoint) -> Option<Mat2> {
        None
    }
}

/// Lifts `alpha` to the surface. Collars of width `3·res·max|∇f|` (at most a
/// quarter of the edge) are used at nodes of degree other than one.
pub fn lift_graph_function(graph: &Arc<ReebGraph>, alpha: &GraphFunction) -> Result<LiftedFunction> {
    alpha.validate(graph)?;
    let delta = 3.0 * graph.resolution * graph.max_gradient;
    let needs = |n: usize| graph.degree(n) != 1 || graph.nodes[n].kind == NodeKind::Cut;
    let collars = graph
        .edges
        .iter()
        .map(|e| {
            let span = match graph.codomain() {
                crate::fields::Codomain::Circle { period } => period,
                crate::fields::Codomain::Line => (e.f_range.1 - e.f_range.0).abs(),
            };
            let d = delta.min(span / 4.0);
            (if needs(e.from) { d } else { 0.0 }, if needs(e.to) { d } else { 0.0 })
        })
        .collect();
    Ok(LiftedFunction { graph: graph.clone(), profile: alpha.clone(), collars })
}

/// Interior parameters sampled per edge by [`project_to_graph_function`].
pub const PROJECTION_SAMPLES: usize = 32;

/// Spread of `alpha` over up to `n` points of a level component, with its mean.
fn level_stats(alpha: &dyn SurfaceFunction, pts: &[SurfacePoint]) -> (f64, f64) {
    let vals: Vec<f64> = pts.iter().map(|p| alpha.value(p)).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo, vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Recovers `α̂` from an `f`-invariant function `α`, failing with
/// `NotConstant` where `α` varies along a level component by more than `tol`.
pub fn project_to_graph_function(graph: &ReebGraph, alpha: &dyn SurfaceFunction, tol: f64) -> Result<GraphFunction> {
    let surface = &graph.mesh().surface;
    let mut node_values = Vec::with_capacity(graph.node_count());
    for node in &graph.nodes {
        let pts = match (node.kind, node.boundary) {
            (NodeKind::BoundaryLevel, Some(b)) => surface.boundary[b].sample(64),
            (NodeKind::Cut, _) => graph.level_points(0, 0.0, 16),
            _ => alloc::vec![node.position],
        };
        let (spread, mean) = level_stats(alpha, &pts);
        if !(spread <= tol) {
            return Err(Error::NotConstant { at: format!("node {}", node.id), spread });
        }
        node_values.push(mean);
    }
    let mut edges = Vec::with_capacity(graph.edge_count());
    for e in &graph.edges {
        let mut knots = alloc::vec![(0.0, node_values[e.from])];
        for i in 1..=PROJECTION_SAMPLES {
            let t = i as f64 / (PROJECTION_SAMPLES + 1) as f64;
            let pts = graph.level_points(e.id, t, 16);
            if pts.is_empty() {
                continue;
            }
            let (spread, mean) = level_stats(alpha, &pts);
            if !(spread <= tol) {
                return Err(Error::NotConstant { at: format!("edge {} at t = {t:.4}", e.id), spread });
            }
            knots.push((t, mean));
        }
        knots.push((1.0, node_values[e.to]));
        edges.push(EdgeProfile::new(knots));
    }
    Ok(GraphFunction { node_values, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::fields::{find_critical_points, ScalarField};
    use crate::function::{fd_gradient, Polynomial};
    use crate::reeb::build_reeb_graph;
    use crate::SurfaceModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(surface: &SurfaceModel, f: &ScalarField, res: f64) -> Arc<ReebGraph> {
        let crits = find_critical_points(f, surface, 0.05, 1e-10).unwrap();
        Arc::new(build_reeb_graph(f, surface, &crits.points, res).unwrap())
    }

    #[test]
    fn hermite_profile_reproduces_cubics_at_knots_and_is_c1() {
        let p = EdgeProfile::new((0..=8).map(|i| (i as f64 / 8.0, (i as f64 / 8.0).powi(2))).collect());
        for i in 0..=8 {
            let t = i as f64 / 8.0;
            assert!((p.value(t) - t * t).abs() < 1e-15);
        }
        for i in 1..8 {
            let t = i as f64 / 8.0;
            let left = (p.value(t) - p.value(t - 1e-7)) / 1e-7;
            let right = (p.value(t + 1e-7) - p.value(t)) / 1e-7;
            assert!((left - right).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_and_affine_lifts() {
        let s = builtin::unit_disk();
        let f = builtin::r2_field();
        let g = graph(&s, &f, 0.05);
        let c = lift_graph_function(&g, &GraphFunction::constant(&g, 2.5)).unwrap();
        let lin = lift_graph_function(&g, &GraphFunction::affine_in_f(&g, 0.0, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = s.sample_point(&mut rng, 0.0);
            assert!((c.value(&p) - 2.5).abs() < 1e-12);
            assert!((lin.value(&p) - f.value(&p)).abs() < 1e-12);
            assert!((lin.gradient(&p).unwrap() - f.gradient(&p)).norm() < 1e-12);
        }
    }

    #[test]
    fn discontinuous_profiles_are_rejected() {
        let s = builtin::twowell_domain();
        let g = graph(&s, &builtin::twowell_field(), 0.05);
        let mut a = GraphFunction::constant(&g, 0.0);
        a.edges[0] = EdgeProfile::new(alloc::vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(lift_graph_function(&g, &a), Err(Error::Discontinuous { .. })));
    }

    #[test]
    fn projection_of_invariant_and_non_invariant_functions() {
        let s = builtin::unit_disk();
        let f = builtin::r2_field();
        let g = graph(&s, &f, 0.05);
        let a = project_to_graph_function(&g, &f, 1e-8).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((a.value(0, t) - g.edge_value(0, t)).abs() < 1e-6);
        }
        let x = ScalarField::from_chart_fn("x", Polynomial::new([(1, 0, 1.0)]));
        assert!(matches!(project_to_graph_function(&g, &x, 1e-8), Err(Error::NotConstant { .. })));
    }

    #[test]
    fn lift_is_smooth_across_the_saddle_and_round_trips() {
        let s = builtin::twowell_domain();
        let f = builtin::twowell_field();
        let g = graph(&s, &f, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = GraphFunction::from_profile(&g, 6, |_, _, _| 0.0);
        let saddle_value = 0.7;
        for (n, v) in a.node_values.iter_mut().enumerate() {
            *v = if g.nodes[n].kind == NodeKind::Saddle { saddle_value } else { rng.gen_range(-1.0..1.0) };
        }
        for e in 0..g.edge_count() {
            let (from, to) = (g.edges[e].from, g.edges[e].to);
            let knots = (0..=6)
                .map(|i| {
                    let t = i as f64 / 6.0;
                    let v = match i {
                        0 => a.node_values[from],
                        6 => a.node_values[to],
                        _ => rng.gen_range(-1.0..1.0),
                    };
                    (t, v)
                })
                .collect();
            a.edges[e] = EdgeProfile::new(knots);
        }
        let lifted = lift_graph_function(&g, &a).unwrap();
        // Locally constant at the saddle, so the gradient is continuous there.
        let z = SurfacePoint::new(0, 0.02, 0.03);
        assert!(lifted.gradient(&z).unwrap().norm() < 1e-12);
        let p = SurfacePoint::new(0, 0.4, 0.5);
        let g_fd = fd_gradient(|q| lifted.value(&p.with_pos(q)), p.pos, 1e-6);
        assert!((g_fd - lifted.gradient(&p).unwrap()).norm() < 1e-5);

        let back = project_to_graph_function(&g, &lifted, 1e-8).unwrap();
        for e in 0..g.edge_count() {
            for &(t, v) in &back.edges[e].knots {
                assert!((v - lifted.profile_value(e, t)).abs() < 1e-8, "edge {e} t {t}");
            }
        }
    }
}
