use alloc::format;
use alloc::sync::Arc;

#[allow(unused_imports)]
use num_traits::Float;

use super::function::{lift_graph_function, GraphFunction, LiftedFunction};
use super::graph::ReebGraph;
use crate::dynamics::{
    alpha_derivative_along, pullback_density_ratio, shift_apply, trajectory, FlowIntegrator, PlanarVectorField, ShiftMap,
};
use crate::error::{Error, Result};
use crate::function::SurfaceFunction;
use crate::geometry::{AreaForm, SurfacePoint};

/// `max |{f, α}| = max |dα(H)|` over the samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralizerReport {
    pub max_residual: f64,
    pub at: SurfacePoint,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn centralizer_check(alpha: &dyn SurfaceFunction, h: &PlanarVectorField, samples: &[SurfacePoint], tol: f64) -> CentralizerReport {
    let mut worst = 0.0;
    let mut at = samples.first().copied().unwrap_or(SurfacePoint::new(0, 0.0, 0.0));
    for p in samples {
        let r = alpha_derivative_along(alpha, h, p).abs();
        if r > worst {
            worst = r;
            at = *p;
        }
    }
    CentralizerReport { max_residual: worst, at, tolerance: tol, passed: worst <= tol }
}

/// Largest spread of `alpha` along the orbits of the given points, each
/// sampled over time `duration`.
pub fn orbit_spread(
    alpha: &dyn SurfaceFunction,
    h: &PlanarVectorField,
    points: &[SurfacePoint],
    duration: f64,
    integ: &FlowIntegrator,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let traj = trajectory(h, p, duration, integ, 10)?;
        let (lo, hi) =
            traj.iter().map(|s| alpha.value(&s.point)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        worst = worst.max(hi - lo);
    }
    Ok(worst)
}

/// The shift map of a lifted graph function, with the checks it passed.
#[derive(Clone)]
pub struct GraphSymplectomorphism {
    pub shift: ShiftMap,
    pub lifted: Arc<LiftedFunction>,
    /// `max |f(Φ(x)) − f(x)|` over the samples.
    pub f_invariance: f64,
    /// `max |ratio − 1|` of the pulled-back density over the samples.
    pub density_residual: f64,
}

impl GraphSymplectomorphism {
    pub fn apply(&self, x: &SurfacePoint) -> Result<SurfacePoint> {
        shift_apply(&self.shift, x)
    }
}

const DENSITY_FD_STEP: f64 = 1e-5;

/// Density ratio from central differences at `h` and `h/2`, combined to cancel
/// the `h²` term.
fn richardson_ratio(shift: &ShiftMap, p: &SurfacePoint, h: f64) -> Result<f64> {
    let coarse = pullback_density_ratio(shift, p, h)?.ratio;
    let fine = pullback_density_ratio(shift, p, 0.5 * h)?.ratio;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Realizes `α̂` as the symplectomorphism `Φ_{α̂∘q}` and verifies that it
/// preserves `f` (to `1e-6`) and the area form (density ratio to `1e-5`,
/// extrapolated from two central-difference steps).
pub fn symplectomorphism_from_graph_function(
    graph: &Arc<ReebGraph>,
    alpha: &GraphFunction,
    h: &PlanarVectorField,
    form: &AreaForm,
    samples: &[SurfacePoint],
) -> Result<GraphSymplectomorphism> {
    let lifted = Arc::new(lift_graph_function(graph, alpha)?);
    let shift = ShiftMap::new(lifted.clone(), h.clone(), form.clone());
    let f = &graph.field;
    let mut f_invariance: f64 = 0.0;
    let mut density_residual: f64 = 0.0;
    for p in samples {
        let y = shift_apply(&shift, p)?;
        f_invariance = f_invariance.max(f.difference(f.value(&y), f.value(p)).abs());
        match richardson_ratio(&shift, p, DENSITY_FD_STEP) {
            Ok(r) => density_residual = density_residual.max((r - 1.0).abs()),
            Err(Error::StencilOutside(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if !(f_invariance < 1e-6) {
        return Err(Error::VerificationFailed(format!("shift moves f by {f_invariance:e}")));
    }
    if !(density_residual < 1e-5) {
        return Err(Error::VerificationFailed(format!("density ratio departs from 1 by {density_residual:e}")));
    }
    Ok(GraphSymplectomorphism { shift, lifted, f_invariance, density_residual })
}
