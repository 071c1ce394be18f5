//! Hamiltonian vector fields, Poisson brackets, flows, shift maps and the
//! pointwise identities relating them.

mod flow;
mod likeness;
mod shift;
mod theta;

pub use flow::{
    flow_point, flow_point_steps, orbit_period, sigma, sigma_flow, trajectory, FlowIntegrator, GammaOfAlpha, Period, TrajectorySample,
};
pub use likeness::{is_hamiltonian_like, lambda_ratio, mu_ratio, HamiltonianLikeReport, LambdaRatio, MuRatio, Verdict};
pub use shift::{
    alpha_derivative_along, gamma_membership, jacobian_det, numeric_jacobian, pullback_density_ratio, shift_apply, shift_as_map,
    GammaCertificate, JacobianReport, PullbackReport, ShiftMap,
};
pub use theta::{theta_function, verify_theta_identity, ThetaFunction, ThetaIdentityReport};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::fields::ScalarField;
use crate::function::SurfaceFunction;
use crate::geometry::{AreaForm, SurfaceModel, SurfacePoint};
use crate::math::{Mat2, Vec2};

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    HamiltonianOf { field: String, form: String },
    HamiltonianLikeDeclared,
    Generic,
}

type FieldFn = dyn Fn(&SurfacePoint) -> Vec2 + Send + Sync;

/// A tangent vector field given in chart coordinates.
#[derive(Clone)]
pub struct PlanarVectorField {
    pub name: String,
    pub provenance: Provenance,
    pub surface: Arc<SurfaceModel>,
    eval: Arc<FieldFn>,
    conserved: Option<ScalarField>,
    zeros: Vec<SurfacePoint>,
}

impl fmt::Debug for PlanarVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarVectorField")
            .field("name", &self.name)
            .field("provenance", &self.provenance)
            .field("conserved", &self.conserved.as_ref().map(|c| &c.name))
            .field("zeros", &self.zeros)
            .finish()
    }
}

impl PlanarVectorField {
    pub fn new(name: impl Into<String>, surface: Arc<SurfaceModel>, eval: impl Fn(&SurfacePoint) -> Vec2 + Send + Sync + 'static) -> Self {
        PlanarVectorField {
            name: name.into(),
            provenance: Provenance::Generic,
            surface,
            eval: Arc::new(eval),
            conserved: None,
            zeros: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    /// Declares a first integral; flows are reprojected onto its level sets.
    pub fn with_conserved(mut self, f: ScalarField) -> Self {
        self.conserved = Some(f);
        self
    }

    /// Known zeros (critical points); orbits approaching them are not periodic.
    pub fn with_zeros(mut self, zeros: Vec<SurfacePoint>) -> Self {
        self.zeros = zeros;
        self
    }

    pub fn conserved(&self) -> Option<&ScalarField> {
        self.conserved.as_ref()
    }

    pub fn zeros(&self) -> &[SurfacePoint] {
        &self.zeros
    }

    #[inline]
    pub fn eval(&self, p: &SurfacePoint) -> Vec2 {
        (self.eval)(p)
    }

    /// `λ·V`, keeping first integral and zeros.
    pub fn scaled(&self, name: impl Into<String>, lambda: Arc<dyn SurfaceFunction>) -> PlanarVectorField {
        let base = self.eval.clone();
        PlanarVectorField {
            name: name.into(),
            provenance: Provenance::Generic,
            surface: self.surface.clone(),
            eval: Arc::new(move |p: &SurfacePoint| base(p) * lambda.value(p)),
            conserved: self.conserved.clone(),
            zeros: self.zeros.clone(),
        }
    }

    /// Pushforward residual `|Dφ·V_from(p) − V_to(φ(p))|` over `points` for
    /// every chart transition (zero on single-chart surfaces).
    pub fn overlap_residual(&self, points: &[SurfacePoint]) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &self.surface.transitions {
            for p in points.iter().filter(|p| p.chart == t.from) {
                if let Some(q) = self.surface.to_chart(p, t.to) {
                    let pushed = t.map.jacobian(p.pos).apply(self.eval(p));
                    let scale = pushed.norm().max(1.0);
                    worst = worst.max((pushed - self.eval(&q)).norm() / scale);
                }
            }
        }
        worst
    }
}

/// The ω-Hamiltonian field `H = (1/γ)(−f_y, f_x)`, defined by `df(u) = ω(u, H)`.
pub fn hamiltonian_field(f: &ScalarField, form: &AreaForm, surface: Arc<SurfaceModel>) -> PlanarVectorField {
    let (ff, ww) = (f.clone(), form.clone());
    PlanarVectorField::new(alloc::format!("H[{}]", f.name), surface, move |p: &SurfacePoint| {
        let g = ff.gradient(p);
        let gamma = ww.gamma(p);
        Vec2::new(-g.y / gamma, g.x / gamma)
    })
    .with_provenance(Provenance::HamiltonianOf { field: f.name.clone(), form: form.label.clone() })
    .with_conserved(f.clone())
}

/// `{f, g} = ω(H_f, H_g) = dg(H_f)`.
#[derive(Clone)]
pub struct PoissonBracket {
    f: ScalarField,
    g: Arc<dyn SurfaceFunction>,
    form: AreaForm,
}

impl SurfaceFunction for PoissonBracket {
    fn value(&self, p: &SurfacePoint) -> f64 {
        let gf = self.f.gradient(p);
        let gg = self.g.gradient(p).unwrap_or_else(|| crate::function::fd_gradient(|q| self.g.value(&p.with_pos(q)), p.pos, 1e-6));
        (gf.x * gg.y - gf.y * gg.x) / self.form.gamma(p)
    }
}

pub fn poisson_bracket(f: &ScalarField, g: Arc<dyn SurfaceFunction>, form: &AreaForm) -> ScalarField {
    let name = alloc::format!("{{{},·}}", f.name);
    ScalarField::new(name, Arc::new(PoissonBracket { f: f.clone(), g, form: form.clone() }))
}

/// Jacobian of the vector field by central differences.
pub fn field_jacobian(v: &PlanarVectorField, p: &SurfacePoint, h: f64) -> Mat2 {
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let cx = (v.eval(&p.with_pos(p.pos + ex)) - v.eval(&p.with_pos(p.pos - ex))) / (2.0 * h);
    let cy = (v.eval(&p.with_pos(p.pos + ey)) - v.eval(&p.with_pos(p.pos - ey))) / (2.0 * h);
    Mat2::from_columns(cx, cy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::function::{Polynomial, Product};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disk() -> Arc<SurfaceModel> {
        Arc::new(builtin::unit_disk())
    }

    #[test]
    fn hamiltonian_of_paraboloid_is_rotation() {
        let s = disk();
        let h = hamiltonian_field(&builtin::r2_field(), &builtin::standard_form(&s), s.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = s.sample_point(&mut rng, 0.0);
            let v = h.eval(&p);
            assert!((v - Vec2::new(-2.0 * p.pos.y, 2.0 * p.pos.x)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_of_quartic_is_scaled_rotation() {
        let s = disk();
        let g = hamiltonian_field(&builtin::r4_field(), &builtin::standard_form(&s), s.clone());
        let p = SurfacePoint::new(0, 0.3, -0.4);
        let r2 = 0.25;
        let expect = Vec2::new(-2.0 * p.pos.y, 2.0 * p.pos.x) * (2.0 * r2);
        assert!((g.eval(&p) - expect).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_of_a_coordinate() {
        let s = disk();
        let fx = ScalarField::from_chart_fn("x", Polynomial::new([(1, 0, 1.0)]));
        let h = hamiltonian_field(&fx, &builtin::standard_form(&s), s.clone());
        assert_eq!(h.eval(&SurfacePoint::new(0, 0.2, 0.1)), Vec2::new(0.0, 1.0));
    }

    #[test]
    fn bracket_of_coordinates_and_antisymmetry() {
        let s = disk();
        let form = builtin::standard_form(&s);
        let fx = ScalarField::from_chart_fn("x", Polynomial::new([(1, 0, 1.0)]));
        let fy = ScalarField::from_chart_fn("y", Polynomial::new([(0, 1, 1.0)]));
        let xy = poisson_bracket(&fx, Arc::new(fy.clone()), &form);
        let yx = poisson_bracket(&fy, Arc::new(fx.clone()), &form);
        let p = SurfacePoint::new(0, 0.3, 0.2);
        assert_eq!(xy.value(&p), 1.0);
        assert_eq!(yx.value(&p), -1.0);
        let f = builtin::twowell_field();
        let ff = poisson_bracket(&f, Arc::new(f.clone()), &form);
        assert_eq!(ff.value(&p), 0.0);
    }

    #[test]
    fn bracket_leibniz_rule() {
        let s = disk();
        let form = builtin::quadratic_form();
        let f = builtin::twowell_field();
        let g: Arc<dyn SurfaceFunction> = Arc::new(ScalarField::from_chart_fn("g", Polynomial::new([(1, 1, 1.0), (0, 2, 0.5)])));
        let h: Arc<dyn SurfaceFunction> = Arc::new(ScalarField::from_chart_fn("h", Polynomial::new([(3, 0, 1.0), (0, 0, 2.0)])));
        let gh: Arc<dyn SurfaceFunction> = Arc::new(Product(g.clone(), h.clone()));
        let lhs = poisson_bracket(&f, gh, &form);
        let fg = poisson_bracket(&f, g.clone(), &form);
        let fh = poisson_bracket(&f, h.clone(), &form);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = s.sample_point(&mut rng, 0.0);
            let rhs = g.value(&p) * fh.value(&p) + h.value(&p) * fg.value(&p);
            assert!((lhs.value(&p) - rhs).abs() < 1e-8);
        }
        let _ = rng.gen::<u8>();
    }

    #[test]
    fn sphere_field_pushes_forward_consistently() {
        let s = Arc::new(builtin::sphere());
        let h = hamiltonian_field(&builtin::sphere_height_field(), &builtin::standard_form(&s), s.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<SurfacePoint> = (0..100)
            .map(|_| {
                let r = rng.gen_range(0.6..1.6);
                let a: f64 = rng.gen_range(0.0..6.3);
                SurfacePoint::new(rng.gen_range(0..2), r * a.cos(), r * a.sin())
            })
            .collect();
        assert!(h.overlap_residual(&pts) < 1e-8);
    }
}
