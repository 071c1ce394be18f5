use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{PlanarVectorField, Provenance};
use crate::error::{Error, Result};
use crate::function::SurfaceFunction;
use crate::geometry::SurfacePoint;
use crate::math::Vec2;

/// Fixed-step RK4 with reprojection onto the level set of the first integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowIntegrator {
    pub step: f64,
    pub max_time: f64,
    pub reprojection_tolerance: f64,
}

impl Default for FlowIntegrator {
    fn default() -> Self {
        FlowIntegrator { step: 1e-3, max_time: 100.0, reprojection_tolerance: 1e-10 }
    }
}

impl FlowIntegrator {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }

    /// Number of steps used for time `t`.
    pub fn steps_for(&self, t: f64) -> usize {
        ((t.abs() / self.step).ceil() as usize).max(1)
    }
}

const EQUILIBRIUM_SPEED: f64 = 1e-10;

pub(crate) struct Stepper<'a> {
    v: &'a PlanarVectorField,
    scale: Option<&'a dyn SurfaceFunction>,
    level: Option<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(v: &'a PlanarVectorField, x: &SurfacePoint) -> Self {
        Stepper { v, scale: None, level: v.conserved().map(|f| f.value(x)) }
    }

    fn with_scale(mut self, s: &'a dyn SurfaceFunction) -> Self {
        self.scale = Some(s);
        self
    }

    fn field(&self, p: &SurfacePoint) -> (Vec2, f64) {
        let l = self.scale.map_or(1.0, |s| s.value(p));
        (self.v.eval(p) * l, l)
    }

    /// One RK4 step of `(p, σ)` with `σ' = λ(p)`, then one Newton correction
    /// of `p` towards the starting level. The correction is applied
    /// unconditionally so the step map stays smooth in `p`.
    pub(crate) fn step(&self, p: &SurfacePoint, dt: f64) -> (SurfacePoint, f64) {
        let at = |d: Vec2| p.with_pos(p.pos + d);
        let (k1, l1) = self.field(p);
        let (k2, l2) = self.field(&at(k1 * (dt / 2.0)));
        let (k3, l3) = self.field(&at(k2 * (dt / 2.0)));
        let (k4, l4) = self.field(&at(k3 * dt));
        let mut q = at((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0));
        let ds = (l1 + 2.0 * l2 + 2.0 * l3 + l4) * (dt / 6.0);
        if let (Some(f), Some(c)) = (self.v.conserved(), self.level) {
            let r = f.difference(c, f.value(&q));
            let g = f.gradient(&q);
            let g2 = g.norm_sq();
            if g2 > 1e-300 {
                q.pos += g * (r / g2);
            }
        }
        (self.v.surface.canonical(&q), ds)
    }

    fn is_frozen(&self, p: &SurfacePoint) -> bool {
        self.field(p).0.norm() < EQUILIBRIUM_SPEED
    }

    fn check_atlas(&self, p: &SurfacePoint) -> Result<()> {
        if self.v.provenance == Provenance::Generic && self.v.conserved().is_none() && !self.v.surface.contains(p) {
            return Err(Error::LeftAtlas(p.pos));
        }
        Ok(())
    }

    pub(crate) fn run(&self, x: &SurfacePoint, t: f64, n: usize) -> Result<(SurfacePoint, f64)> {
        let dt = t / n as f64;
        let mut p = *x;
        let mut sigma = 0.0;
        for _ in 0..n {
            if self.is_frozen(&p) {
                break;
            }
            let (q, ds) = self.step(&p, dt);
            self.check_atlas(&q)?;
            p = q;
            sigma += ds;
        }
        Ok((p, sigma))
    }
}

fn check_time(t: f64, integ: &FlowIntegrator) -> Result<()> {
    if !t.is_finite() || t.abs() > integ.max_time {
        return Err(Error::MaxTimeExceeded { requested: t, max_time: integ.max_time });
    }
    Ok(())
}

/// `Φ_V(x, t)`.
pub fn flow_point(v: &PlanarVectorField, x: &SurfacePoint, t: f64, integ: &FlowIntegrator) -> Result<SurfacePoint> {
    flow_point_steps(v, x, t, integ.steps_for(t), integ)
}

/// `Φ_V(x, t)` with exactly `n` equal steps.
pub fn flow_point_steps(v: &PlanarVectorField, x: &SurfacePoint, t: f64, n: usize, integ: &FlowIntegrator) -> Result<SurfacePoint> {
    check_time(t, integ)?;
    if t == 0.0 {
        return Ok(*x);
    }
    Ok(Stepper::new(v, x).run(x, t, n.max(1))?.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: SurfacePoint,
    /// Value of the first integral, when the field has one.
    pub value: Option<f64>,
}

/// Samples of the orbit of `x` up to time `t`, one every `every` steps.
pub fn trajectory(v: &PlanarVectorField, x: &SurfacePoint, t: f64, integ: &FlowIntegrator, every: usize) -> Result<Vec<TrajectorySample>> {
    check_time(t, integ)?;
    let n = integ.steps_for(t);
    let dt = t / n as f64;
    let every = every.max(1);
    let stepper = Stepper::new(v, x);
    let value = |p: &SurfacePoint| v.conserved().map(|f| f.value(p));
    let mut out = Vec::with_capacity(n / every + 2);
    let mut p = *x;
    out.push(TrajectorySample { t: 0.0, point: p, value: value(&p) });
    for k in 1..=n {
        if !stepper.is_frozen(&p) {
            p = stepper.step(&p, dt).0;
            stepper.check_atlas(&p)?;
        }
        if k % every == 0 || k == n {
            out.push(TrajectorySample { t: dt * k as f64, point: p, value: value(&p) });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Period {
    Periodic(f64),
    /// No return within the time budget, or the orbit runs into a zero.
    NonPeriodic,
}

impl Period {
    pub fn value(self) -> Option<f64> {
        match self {
            Period::Periodic(t) => Some(t),
            Period::NonPeriodic => None,
        }
    }
}

/// Smallest return time of `x` to itself, from the first positive crossing of
/// the section through `x` normal to `V(x)` that lands within `tol` of `x`.
pub fn orbit_period(v: &PlanarVectorField, x: &SurfacePoint, integ: &FlowIntegrator, tol: f64) -> Result<Period> {
    let v0 = v.eval(x);
    let speed0 = v0.norm();
    if speed0 < EQUILIBRIUM_SPEED {
        return Err(Error::Equilibrium(x.pos));
    }
    let normal = v0 / speed0;
    let surface = &v.surface;
    let stepper = Stepper::new(v, x);
    let h = integ.step;
    let section = |p: &SurfacePoint| {
        let d = surface.displacement(x, p);
        if d.is_finite() {
            d.dot(normal)
        } else {
            f64::NAN
        }
    };
    let near_zero = |p: &SurfacePoint| v.zeros().iter().any(|z| surface.distance(z, p) < 1e-3);
    let mut p = *x;
    let mut s_prev = 0.0;
    let mut t = 0.0;
    while t <= integ.max_time {
        let (q, _) = stepper.step(&p, h);
        let s = section(&q);
        let speed = v.eval(&q).norm();
        if near_zero(&q) || speed < 1e-6 * speed0 {
            return Ok(Period::NonPeriodic);
        }
        if t > 2.0 * h && s_prev < 0.0 && s >= 0.0 && surface.distance(x, &q) < 10.0 * h * speed.max(speed0) + tol {
            let (mut lo, mut hi) = (0.0, h);
            let mut crossing = q;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (m, _) = stepper.step(&p, mid);
                if section(&m) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                    crossing = m;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            if surface.distance(x, &crossing) < tol.max(1e-9) {
                return Ok(Period::Periodic(t + hi));
            }
        }
        s_prev = s;
        p = q;
        t += h;
    }
    Ok(Period::NonPeriodic)
}

/// Integrates `λV` from `x` for time `s` together with `σ = ∫ λ`. Returns the
/// endpoint and `σ`.
pub fn sigma_flow(
    lambda: &dyn SurfaceFunction,
    v: &PlanarVectorField,
    x: &SurfacePoint,
    s: f64,
    integ: &FlowIntegrator,
) -> Result<(SurfacePoint, f64)> {
    check_time(s, integ)?;
    if lambda.value(x).abs() < 1e-300 {
        return Err(Error::VanishingScale(x.pos));
    }
    if s == 0.0 {
        return Ok((*x, 0.0));
    }
    Stepper::new(v, x).with_scale(lambda).run(x, s, integ.steps_for(s))
}

/// `σ(x, s)` with `Φ_{λV}(x, s) = Φ_V(x, σ(x, s))`, verified to `1e-6`.
pub fn sigma(lambda: &dyn SurfaceFunction, v: &PlanarVectorField, x: &SurfacePoint, s: f64, integ: &FlowIntegrator) -> Result<f64> {
    let (end, sig) = sigma_flow(lambda, v, x, s, integ)?;
    let check = flow_point(v, x, sig, &integ.with_max_time(integ.max_time.max(sig.abs() + 1.0)))?;
    let miss = v.surface.distance(&end, &check);
    if !(miss < 1e-6) {
        return Err(Error::VerificationFailed(alloc::format!("sigma: flows differ by {miss:e}")));
    }
    Ok(sig)
}

/// `Γ(α) = σ(·, α(·))`: the function with `Φ_{λV}(x, α) = Φ_V(x, Γ(α))`.
#[derive(Clone)]
pub struct GammaOfAlpha {
    pub lambda: Arc<dyn SurfaceFunction>,
    pub field: PlanarVectorField,
    pub alpha: Arc<dyn SurfaceFunction>,
    pub integrator: FlowIntegrator,
}

impl SurfaceFunction for GammaOfAlpha {
    fn value(&self, p: &SurfacePoint) -> f64 {
        sigma_flow(self.lambda.as_ref(), &self.field, p, self.alpha.value(p), &self.integrator).map_or(f64::NAN, |r| r.1)
    }
}
