use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::flow::Stepper;
use super::{FlowIntegrator, PlanarVectorField};
use crate::error::{Error, Result};
use crate::function::{fd_gradient, SurfaceFunction};
use crate::geometry::{AreaForm, SurfacePoint};
use crate::math::{Mat2, Vec2};

/// The shift map `Φ_α(x) = Φ_V(x, α(x))` along a flow.
#[derive(Clone)]
pub struct ShiftMap {
    pub alpha: Arc<dyn SurfaceFunction>,
    pub field: PlanarVectorField,
    /// Area form preserved by the flow of `field`.
    pub form: AreaForm,
    pub integrator: FlowIntegrator,
}

impl ShiftMap {
    pub fn new(alpha: Arc<dyn SurfaceFunction>, field: PlanarVectorField, form: AreaForm) -> Self {
        ShiftMap { alpha, field, form, integrator: FlowIntegrator::default() }
    }

    pub fn with_integrator(mut self, integ: FlowIntegrator) -> Self {
        self.integrator = integ;
        self
    }

    fn image_steps(&self, x: &SurfacePoint, t: f64, n: usize) -> Result<SurfacePoint> {
        if !(t.abs() <= self.integrator.max_time) {
            return Err(Error::MaxTimeExceeded { requested: t, max_time: self.integrator.max_time });
        }
        if t == 0.0 {
            return Ok(*x);
        }
        Ok(Stepper::new(&self.field, x).run(x, t, n)?.0)
    }
}

/// `dα(V)` at `p`.
pub fn alpha_derivative_along(alpha: &dyn SurfaceFunction, v: &PlanarVectorField, p: &SurfacePoint) -> f64 {
    let g = alpha.gradient(p).unwrap_or_else(|| fd_gradient(|q| alpha.value(&p.with_pos(q)), p.pos, 1e-6));
    g.dot(v.eval(p))
}

pub fn shift_apply(sm: &ShiftMap, x: &SurfacePoint) -> Result<SurfacePoint> {
    super::flow_point(&sm.field, x, sm.alpha.value(x), &sm.integrator)
}

/// Images of `points`, paired with their preimages.
pub fn shift_as_map(sm: &ShiftMap, points: &[SurfacePoint]) -> Result<Vec<(SurfacePoint, SurfacePoint)>> {
    points.iter().map(|p| Ok((*p, shift_apply(sm, p)?))).collect()
}

/// Central-difference Jacobian of `Φ_α` at `x` (columns in the chart of `x`,
/// rows in the chart of the image) and the image itself. All stencil points
/// are integrated with the same number of steps.
pub fn numeric_jacobian(sm: &ShiftMap, x: &SurfacePoint, fd_step: f64) -> Result<(Mat2, SurfacePoint)> {
    let surface = &sm.field.surface;
    let offsets = [Vec2::new(fd_step, 0.0), Vec2::new(-fd_step, 0.0), Vec2::new(0.0, fd_step), Vec2::new(0.0, -fd_step)];
    let stencil: Vec<SurfacePoint> = offsets.iter().map(|d| x.with_pos(x.pos + *d)).collect();
    for q in &stencil {
        if !surface.contains(q) {
            return Err(Error::StencilOutside(q.pos));
        }
    }
    let times: Vec<f64> = core::iter::once(x).chain(stencil.iter()).map(|p| sm.alpha.value(p)).collect();
    let tmax = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let n = sm.integrator.steps_for(tmax);
    let center = sm.image_steps(x, times[0], n)?;
    let mut cols = [Vec2::ZERO; 4];
    for (k, q) in stencil.iter().enumerate() {
        let img = sm.image_steps(q, times[k + 1], n)?;
        let d = surface.displacement(&center, &img);
        if !d.is_finite() {
            return Err(Error::StencilOutside(q.pos));
        }
        cols[k] = d;
    }
    let cx = (cols[0] - cols[1]) / (2.0 * fd_step);
    let cy = (cols[2] - cols[3]) / (2.0 * fd_step);
    Ok((Mat2::from_columns(cx, cy), center))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianReport {
    pub numeric: f64,
    /// `(1 + dα(V)(x))·γ(x)/γ(Φ_α(x))`.
    pub predicted: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The predicted determinant vanishes: `Φ_α` is not a local diffeomorphism at `x`.
    pub singular: bool,
}

pub fn jacobian_det(sm: &ShiftMap, x: &SurfacePoint, fd_step: f64) -> Result<JacobianReport> {
    let (jac, image) = numeric_jacobian(sm, x, fd_step)?;
    let factor = 1.0 + alpha_derivative_along(sm.alpha.as_ref(), &sm.field, x);
    let predicted = factor * sm.form.gamma(x) / sm.form.gamma(&image);
    let numeric = jac.det();
    let tolerance = (10.0 * fd_step * fd_step).max(1e-4);
    Ok(JacobianReport { numeric, predicted, tolerance, passed: (numeric - predicted).abs() <= tolerance, singular: predicted.abs() < 1e-6 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PullbackReport {
    /// `γ(Φ_α x)·det DΦ_α(x) / γ(x)`.
    pub ratio: f64,
    /// `1 + dα(V)(x)`.
    pub predicted: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Density ratio of `Φ_α^*ω` against `ω` at `x`.
pub fn pullback_density_ratio(sm: &ShiftMap, x: &SurfacePoint, fd_step: f64) -> Result<PullbackReport> {
    let (jac, image) = numeric_jacobian(sm, x, fd_step)?;
    let ratio = sm.form.gamma(&image) * jac.det() / sm.form.gamma(x);
    let predicted = 1.0 + alpha_derivative_along(sm.alpha.as_ref(), &sm.field, x);
    let tolerance = (10.0 * fd_step * fd_step).max(1e-5);
    Ok(PullbackReport { ratio, predicted, tolerance, passed: (ratio - predicted).abs() <= tolerance })
}

/// Evidence that `1 + dα(V) > 0` everywhere, i.e. `Φ_α` is a diffeomorphism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaCertificate {
    pub min_value: f64,
    pub at: SurfacePoint,
    pub passed: bool,
    /// Sample points where the sign of the numeric Jacobian was compared.
    pub cross_checked: usize,
    pub cross_check_failures: usize,
}

pub fn gamma_membership(sm: &ShiftMap, samples: &[SurfacePoint]) -> GammaCertificate {
    let mut min_value = f64::INFINITY;
    let mut at = samples.first().copied().unwrap_or(SurfacePoint::new(0, 0.0, 0.0));
    for p in samples {
        let v = 1.0 + alpha_derivative_along(sm.alpha.as_ref(), &sm.field, p);
        if v < min_value {
            min_value = v;
            at = *p;
        }
    }
    let mut cross_checked = 0;
    let mut cross_check_failures = 0;
    let stride = (samples.len() / 10).max(1);
    for p in samples.iter().step_by(stride).take(10) {
        let Ok(r) = jacobian_det(sm, p, 1e-5) else { continue };
        if r.predicted.abs() < 1e-3 {
            continue;
        }
        cross_checked += 1;
        if (r.numeric > 0.0) != (r.predicted > 0.0) {
            cross_check_failures += 1;
        }
    }
    GammaCertificate { min_value, at, passed: min_value > 0.0 && cross_check_failures == 0, cross_checked, cross_check_failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::dynamics::hamiltonian_field;
    use crate::fields::ScalarField;
    use crate::function::{Constant, Polynomial};
    use crate::SurfaceModel;
    use core::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disk_setup(form: AreaForm) -> (Arc<SurfaceModel>, PlanarVectorField, AreaForm) {
        let s = Arc::new(builtin::unit_disk());
        let h = hamiltonian_field(&builtin::r2_field(), &form, s.clone());
        (s, h, form)
    }

    fn poly(terms: &[(u32, u32, f64)]) -> Arc<dyn SurfaceFunction> {
        Arc::new(ScalarField::from_chart_fn("alpha", Polynomial::new(terms.iter().copied())))
    }

    #[test]
    fn constant_shift_is_the_flow() {
        let (_, h, form) = disk_setup(builtin::standard_form(&builtin::unit_disk()));
        let sm = ShiftMap::new(Arc::new(Constant(PI / 4.0)), h, form);
        let y = shift_apply(&sm, &SurfacePoint::new(0, 1.0, 0.0)).unwrap();
        assert!((y.pos - Vec2::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn shift_by_the_function_rotates_each_circle() {
        let (_, h, form) = disk_setup(builtin::standard_form(&builtin::unit_disk()));
        let sm = ShiftMap::new(poly(&[(2, 0, 1.0), (0, 2, 1.0)]), h.clone(), form.clone());
        // α = 0.25 at (0.5, 0); the angular speed is 2.
        let y = shift_apply(&sm, &SurfacePoint::new(0, 0.5, 0.0)).unwrap();
        assert!((y.pos - Vec2::new(0.5 * 0.5f64.cos(), 0.5 * 0.5f64.sin())).norm() < 1e-9);
        let id = ShiftMap::new(Arc::new(Constant(0.0)), h, form);
        let x = SurfacePoint::new(0, 0.3, -0.2);
        assert_eq!(shift_apply(&id, &x).unwrap(), x);
    }

    #[test]
    fn jacobian_of_xy_shift() {
        let (_, h, form) = disk_setup(builtin::standard_form(&builtin::unit_disk()));
        let sm = ShiftMap::new(poly(&[(1, 1, 1.0)]), h, form);
        let r = jacobian_det(&sm, &SurfacePoint::new(0, 0.5, 0.0), 1e-5).unwrap();
        assert!((r.predicted - 1.5).abs() < 1e-12);
        assert!(r.passed, "{r:?}");
        let r = jacobian_det(&sm, &SurfacePoint::new(0, 0.0, 0.5f64.sqrt()), 1e-5).unwrap();
        assert!(r.singular && r.predicted.abs() < 1e-12 && r.passed, "{r:?}");
    }

    #[test]
    fn stencil_must_fit() {
        let (_, h, form) = disk_setup(builtin::standard_form(&builtin::unit_disk()));
        let sm = ShiftMap::new(poly(&[(1, 1, 1.0)]), h, form);
        let e = jacobian_det(&sm, &SurfacePoint::new(0, 1.0, 0.0), 1e-5).unwrap_err();
        assert!(matches!(e, Error::StencilOutside(_)));
    }

    #[test]
    fn constant_shift_preserves_a_nonuniform_form() {
        let (s, h, form) = disk_setup(builtin::quadratic_form());
        let sm = ShiftMap::new(Arc::new(Constant(0.7)), h, form);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = s.sample_point(&mut rng, 1e-3);
            let r = pullback_density_ratio(&sm, &p, 1e-5).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn gamma_certificates() {
        let (s, h, form) = disk_setup(builtin::standard_form(&builtin::unit_disk()));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let samples: Vec<SurfacePoint> = (0..400).map(|_| s.sample_point(&mut rng, 1e-3)).collect();
        let c = gamma_membership(&ShiftMap::new(Arc::new(Constant(1.3)), h.clone(), form.clone()), &samples);
        assert!(c.passed && (c.min_value - 1.0).abs() < 1e-12);
        let c = gamma_membership(&ShiftMap::new(poly(&[(2, 0, 1.0), (0, 2, 1.0)]), h.clone(), form.clone()), &samples);
        assert!(c.passed && (c.min_value - 1.0).abs() < 1e-12);
        let c = gamma_membership(&ShiftMap::new(poly(&[(1, 1, 1.0)]), h, form), &samples);
        assert!(!c.passed && c.min_value < -0.9 && c.min_value >= -1.0);
    }
}
