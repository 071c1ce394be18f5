//! Named surfaces, fields and area forms used by the examples, tests and CLI.

use alloc::sync::Arc;
use alloc::vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::fields::{DeclaredModel, ScalarField};
use crate::function::{ChartFn, ClosureFn, Constant, PerChart, Polynomial};
use crate::geometry::{make_model_surface, AreaForm, SurfaceKind, SurfaceModel, SurfacePoint, SurfaceSpec};
use crate::math::{Mat2, Vec2};

pub fn unit_disk() -> SurfaceModel {
    make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).expect("valid disk")
}

/// `S¹ × [0, 1]` with a circle of length 1.
pub fn annulus() -> SurfaceModel {
    make_model_surface(SurfaceSpec::Annulus { period: 1.0, height: 1.0 }).expect("valid annulus")
}

pub fn torus() -> SurfaceModel {
    make_model_surface(SurfaceSpec::FlatTorus { periods: (1.0, 1.0) }).expect("valid torus")
}

pub fn sphere() -> SurfaceModel {
    make_model_surface(SurfaceSpec::Sphere).expect("valid sphere")
}

/// `((x+1)² + y²)((x−1)² + y²) = (x² + y² + 1)² − 4x²`.
pub fn twowell_poly() -> Polynomial {
    Polynomial::new([(4, 0, 1.0), (0, 4, 1.0), (2, 2, 2.0), (2, 0, -2.0), (0, 2, 2.0), (0, 0, 1.0)])
}

/// The sublevel disk `{ g ≤ 2 }` of the two-well polynomial.
pub fn twowell_domain() -> SurfaceModel {
    make_model_surface(SurfaceSpec::PlanarSublevel { g: Arc::new(twowell_poly()), level: 2.0, center: Vec2::ZERO })
        .expect("2 is a regular value of the two-well polynomial")
}

pub fn r2_poly() -> Polynomial {
    Polynomial::new([(2, 0, 1.0), (0, 2, 1.0)])
}

pub fn r4_poly() -> Polynomial {
    Polynomial::new([(4, 0, 1.0), (2, 2, 2.0), (0, 4, 1.0)])
}

/// `x² + y²`
pub fn r2_field() -> ScalarField {
    ScalarField::from_chart_fn("r2", r2_poly())
}

/// `(x² + y²)²`
pub fn r4_field() -> ScalarField {
    ScalarField::from_chart_fn("r4", r4_poly())
}

/// `(x² + y²)²` with its degree-4 local model declared at the origin. The
/// model has the repeated factor `x² + y²`, so the attestation is negative.
pub fn r4_field_declared() -> ScalarField {
    r4_field().with_declaration(DeclaredModel {
        at: SurfacePoint::new(0, 0.0, 0.0),
        degree: 4,
        square_free: false,
        local: Some(Arc::new(r4_poly())),
    })
}

pub fn twowell_field() -> ScalarField {
    ScalarField::from_chart_fn("twowell", twowell_poly())
}

/// `1 − y` on the annulus: constant on both boundary circles, no critical
/// points, Hamiltonian field `(1, 0)` for the standard form.
pub fn angular_field() -> ScalarField {
    ScalarField::from_chart_fn("angular", Polynomial::new([(0, 0, 1.0), (0, 1, -1.0)]))
}

/// `cos 2πx + ½ cos 2πy` on the unit flat torus: one minimum, one maximum and
/// two saddles.
pub fn torus_height_field() -> ScalarField {
    use core::f64::consts::PI;
    let tau = 2.0 * PI;
    let f = ClosureFn::new(move |p: Vec2| (tau * p.x).cos() + 0.5 * (tau * p.y).cos())
        .with_gradient(move |p: Vec2| Vec2::new(-tau * (tau * p.x).sin(), -0.5 * tau * (tau * p.y).sin()))
        .with_hessian(move |p: Vec2| Mat2::new(-tau * tau * (tau * p.x).cos(), 0.0, 0.0, -0.5 * tau * tau * (tau * p.y).cos()));
    ScalarField::from_chart_fn("torus-height", f)
}

/// The circle-valued projection `y mod 1` of the unit flat torus (a lift is
/// returned; the codomain carries the period).
pub fn torus_circle_field() -> ScalarField {
    ScalarField::from_chart_fn("torus-circle", Polynomial::new([(0, 1, 1.0)])).circle_valued(1.0)
}

/// Height `(|z|² − 1)/(|z|² + 1)` of the round sphere in the stereographic
/// chart `z`, and `(1 − |w|²)/(1 + |w|²)` in the chart `w = 1/z`.
pub fn sphere_height_field() -> ScalarField {
    let chart = |sign: f64| -> Arc<dyn ChartFn> {
        Arc::new(
            ClosureFn::new(move |p: Vec2| {
                let s = p.norm_sq();
                sign * (s - 1.0) / (s + 1.0)
            })
            .with_gradient(move |p: Vec2| {
                let s = p.norm_sq();
                p * (sign * 4.0 / ((s + 1.0) * (s + 1.0)))
            })
            .with_hessian(move |p: Vec2| {
                let s = p.norm_sq();
                let d1 = 2.0 / ((s + 1.0) * (s + 1.0));
                let d2 = -4.0 / ((s + 1.0) * (s + 1.0) * (s + 1.0));
                Mat2::new(
                    sign * (4.0 * d2 * p.x * p.x + 2.0 * d1),
                    sign * 4.0 * d2 * p.x * p.y,
                    sign * 4.0 * d2 * p.x * p.y,
                    sign * (4.0 * d2 * p.y * p.y + 2.0 * d1),
                )
            }),
        )
    };
    ScalarField::new("sphere-height", Arc::new(PerChart::new(vec![chart(1.0), chart(-1.0)])))
}

/// `4/(1 + |z|²)²` in either stereographic chart (the round area form).
pub fn round_sphere_density() -> PerChart {
    let f = ClosureFn::new(|p: Vec2| {
        let s = 1.0 + p.norm_sq();
        4.0 / (s * s)
    })
    .with_gradient(|p: Vec2| {
        let s = 1.0 + p.norm_sq();
        p * (-16.0 / (s * s * s))
    });
    PerChart::single(f)
}

/// `dx∧dy` on flat models, the round form on the sphere.
pub fn standard_form(surface: &SurfaceModel) -> AreaForm {
    match surface.kind {
        SurfaceKind::Sphere => AreaForm::new("standard", Arc::new(round_sphere_density())),
        _ => AreaForm::new("standard", Arc::new(Constant(1.0))),
    }
}

pub fn constant_form(c: f64) -> AreaForm {
    AreaForm::new("constant", Arc::new(Constant(c)))
}

/// `1 + s·x`
pub fn tilted_density(slope: f64) -> PerChart {
    PerChart::single(Polynomial::new([(0, 0, 1.0), (1, 0, slope)]))
}

/// `(1 + s·x) dx∧dy`
pub fn tilted_form(slope: f64) -> AreaForm {
    AreaForm::new("tilted", Arc::new(tilted_density(slope)))
}

/// `(1 + ½·exp(−4|z|²)) dx∧dy`
pub fn radial_bump_form() -> AreaForm {
    let f =
        ClosureFn::new(|p: Vec2| 1.0 + 0.5 * (-4.0 * p.norm_sq()).exp()).with_gradient(|p: Vec2| p * (-4.0 * (-4.0 * p.norm_sq()).exp()));
    AreaForm::new("radial-bump", Arc::new(PerChart::single(f)))
}

/// `(1 + x²/2) dx∧dy`
pub fn quadratic_form() -> AreaForm {
    AreaForm::new("quadratic", Arc::new(PerChart::single(Polynomial::new([(0, 0, 1.0), (2, 0, 0.5)]))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{fd_gradient, fd_hessian_from_gradient};

    #[test]
    fn sphere_height_agrees_across_charts() {
        let s = sphere();
        let f = sphere_height_field();
        for &(x, y) in &[(0.7, 0.3), (1.2, -0.9), (-0.5, 1.5)] {
            let p = SurfacePoint::new(0, x, y);
            let q = s.to_chart(&p, 1).unwrap();
            assert!((f.value(&p) - f.value(&q)).abs() < 1e-12);
        }
    }

    #[test]
    fn closure_derivatives_match_differences() {
        let p = Vec2::new(0.31, -0.17);
        for f in [torus_height_field(), sphere_height_field()] {
            let sp = SurfacePoint::at(p);
            let g = f.function().gradient(&sp).unwrap();
            assert!((g - fd_gradient(|q| f.value(&sp.with_pos(q)), p, 1e-6)).norm() < 1e-8);
            let h = f.function().hessian(&sp).unwrap();
            let hf = fd_hessian_from_gradient(|q| f.function().gradient(&sp.with_pos(q)).unwrap(), p, 1e-6);
            assert!(h.sub(&hf).frobenius() < 1e-7);
        }
        let bump = radial_bump_form();
        let sp = SurfacePoint::at(p);
        let g = bump.density.gradient(&sp).unwrap();
        assert!((g - fd_gradient(|q| bump.gamma(&sp.with_pos(q)), p, 1e-6)).norm() < 1e-8);
    }
}
