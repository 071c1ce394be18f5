use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{Codomain, DeclaredModel, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{SurfaceKind, SurfaceModel, SurfacePoint};
use crate::math::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    NondegMin,
    NondegMax,
    NondegSaddle,
    DeclaredHomogeneous(u32),
    Unclassified,
}

impl CriticalKind {
    pub fn is_nondegenerate(self) -> bool {
        matches!(self, CriticalKind::NondegMin | CriticalKind::NondegMax | CriticalKind::NondegSaddle)
    }

    pub fn is_nondegenerate_extreme(self) -> bool {
        matches!(self, CriticalKind::NondegMin | CriticalKind::NondegMax)
    }

    pub fn name(self) -> String {
        match self {
            CriticalKind::NondegMin => "NondegMin".into(),
            CriticalKind::NondegMax => "NondegMax".into(),
            CriticalKind::NondegSaddle => "NondegSaddle".into(),
            CriticalKind::DeclaredHomogeneous(d) => format!("DeclaredHomogeneous({d})"),
            CriticalKind::Unclassified => "Unclassified".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub position: SurfacePoint,
    pub value: f64,
    pub kind: CriticalKind,
    /// Eigenvalues of the Hessian, ascending.
    pub hessian_eigs: (f64, f64),
    pub gradient_norm: f64,
}

/// Result of the seeded Newton search.
#[derive(Clone, Debug, Default)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    /// Seeds whose Newton iteration left the surface or stalled.
    pub diverged_seeds: usize,
    /// Critical points found on (within tolerance of) the boundary.
    pub boundary_hits: Vec<SurfacePoint>,
    /// Scale used for the nondegeneracy threshold.
    pub hessian_scale: f64,
}

impl CriticalSearch {
    pub fn count(&self, kind: CriticalKind) -> usize {
        self.points.iter().filter(|c| c.kind == kind).count()
    }
}

/// Locates critical points by Newton iteration from a grid of seeds and
/// classifies them by the Hessian.
pub fn find_critical_points(f: &ScalarField, surface: &SurfaceModel, grid_resolution: f64, tol: f64) -> Result<CriticalSearch> {
    if !(tol > 0.0) || !(grid_resolution > 0.0) {
        return Err(Error::InvalidParams(format!("tol and grid_resolution must be positive (got {tol}, {grid_resolution})")));
    }
    let seeds = seed_grid(surface, grid_resolution);
    let scale = seeds.iter().map(|p| f.hessian(p).frobenius()).fold(0.0, f64::max).max(1e-300);

    let mut found: Vec<(SurfacePoint, f64)> = Vec::new();
    let mut diverged = 0;
    for seed in seeds {
        match newton(f, surface, seed, tol) {
            Some(p) => found.push(p),
            None => diverged += 1,
        }
    }
    found.sort_by(|a, b| (a.0.chart, a.0.pos.x, a.0.pos.y).partial_cmp(&(b.0.chart, b.0.pos.x, b.0.pos.y)).unwrap());
    let mut merged: Vec<(SurfacePoint, f64)> = Vec::new();
    for (p, g) in found {
        match merged.iter_mut().find(|(q, _)| surface.distance(q, &p) < 10.0 * tol) {
            Some(slot) => {
                if g < slot.1 {
                    *slot = (p, g);
                }
            }
            None => merged.push((p, g)),
        }
    }

    let mut search = CriticalSearch { hessian_scale: scale, diverged_seeds: diverged, ..Default::default() };
    for (p, g) in merged {
        if surface.boundary_distance(&p) < 10.0 * tol {
            search.boundary_hits.push(p);
            continue;
        }
        let c = classify(f, p, g, scale, grid_resolution);
        // Newton converges only linearly at degenerate points, so seeds stop
        // at slightly different places; such clusters are one point.
        let cluster = search.points.iter_mut().find(|q| {
            !q.kind.is_nondegenerate() && !c.kind.is_nondegenerate() && surface.distance(&q.position, &p) < 0.5 * grid_resolution
        });
        match cluster {
            Some(q) if c.gradient_norm < q.gradient_norm => *q = c,
            Some(_) => {}
            None => search.points.push(c),
        }
    }
    Ok(search)
}

fn classify(f: &ScalarField, p: SurfacePoint, grad_norm: f64, scale: f64, grid_resolution: f64) -> CriticalPoint {
    let (lo, hi) = f.hessian(&p).symmetric_eigenvalues();
    let thr = 1e-6 * scale;
    let kind = if lo.abs() > thr && hi.abs() > thr {
        if lo > 0.0 {
            CriticalKind::NondegMin
        } else if hi < 0.0 {
            CriticalKind::NondegMax
        } else {
            CriticalKind::NondegSaddle
        }
    } else if let Some(d) = f.declaration_near(&p, 10.0 * grid_resolution) {
        CriticalKind::DeclaredHomogeneous(d.degree)
    } else {
        CriticalKind::Unclassified
    };
    CriticalPoint { position: p, value: f.value(&p), kind, hessian_eigs: (lo, hi), gradient_norm: grad_norm }
}

fn seed_grid(surface: &SurfaceModel, h: f64) -> Vec<SurfacePoint> {
    let mut seeds = Vec::new();
    for chart in 0..surface.charts.len() {
        let (min, max) = if surface.kind == SurfaceKind::Sphere {
            (Vec2::new(-1.05, -1.05), Vec2::new(1.05, 1.05))
        } else {
            surface.bounding_box(chart)
        };
        let nx = ((max.x - min.x) / h).ceil() as usize;
        let ny = ((max.y - min.y) / h).ceil() as usize;
        for j in 0..ny {
            for i in 0..nx {
                let p = SurfacePoint { chart, pos: min + Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h) };
                let keep = match surface.kind {
                    SurfaceKind::Sphere => p.pos.norm() <= 1.05,
                    _ => surface.contains(&p),
                };
                if keep {
                    seeds.push(p);
                }
            }
        }
    }
    seeds
}

/// Newton iteration on the gradient; returns the limit and its gradient norm.
fn newton(f: &ScalarField, surface: &SurfaceModel, seed: SurfacePoint, tol: f64) -> Option<(SurfacePoint, f64)> {
    let mut p = seed;
    for _ in 0..50 {
        let g = f.gradient(&p);
        let step = match f.hessian(&p).inverse() {
            Some(inv) => inv.apply(g),
            None => break,
        };
        if !step.is_finite() {
            return None;
        }
        p = surface.canonical(&p.with_pos(p.pos - step));
        if !surface.contains(&p) {
            return None;
        }
        if step.norm() < 1e-12 {
            break;
        }
    }
    let g = f.gradient(&p).norm();
    (g < tol).then_some((p, g))
}

/// Outcome of the admissibility axioms.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub axiom_b_ok: bool,
    /// `max |f − mean|` on each boundary component.
    pub boundary_residuals: Vec<f64>,
    pub axiom_l_ok: bool,
    pub in_class_f: bool,
    pub in_class_morse: bool,
    pub failures: Vec<String>,
}

/// Checks boundary constancy and regularity, and that every critical point is
/// nondegenerate or carries a valid square-free homogeneous declaration.
pub fn check_axioms(f: &ScalarField, surface: &SurfaceModel, search: &CriticalSearch) -> AxiomReport {
    let mut failures = Vec::new();
    let mut residuals = Vec::new();
    let mut b_ok = search.boundary_hits.is_empty();
    if !b_ok {
        failures.push(format!("{} critical point(s) on the boundary", search.boundary_hits.len()));
    }
    for (i, curve) in surface.boundary.iter().enumerate() {
        let samples = curve.sample(256);
        let base = f.value(&samples[0]);
        let diffs: Vec<f64> = samples.iter().map(|p| f.difference(f.value(p), base)).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let residual = diffs.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
        let scale = (base + mean).abs().max(1.0);
        residuals.push(residual);
        if residual > 1e-8 * scale {
            b_ok = false;
            failures.push(format!("f is not constant on boundary component {i} (residual {residual:e})"));
        }
        let min_grad = samples.iter().map(|p| f.gradient(p).norm()).fold(f64::INFINITY, f64::min);
        if min_grad <= 1e-9 * search.hessian_scale.max(1.0) {
            b_ok = false;
            failures.push(format!("gradient vanishes on boundary component {i}"));
        }
    }

    let mut l_ok = true;
    for c in &search.points {
        match c.kind {
            k if k.is_nondegenerate() => {}
            CriticalKind::DeclaredHomogeneous(_) => {
                let decl = f
                    .declarations
                    .iter()
                    .filter(|d| d.at.chart == c.position.chart)
                    .min_by(|a, b| (a.at.pos - c.position.pos).norm().partial_cmp(&(b.at.pos - c.position.pos).norm()).unwrap())
                    .expect("declared kind implies a declaration");
                if !decl.square_free {
                    l_ok = false;
                    failures.push(format!("declared model at {:?} is not square-free (multiple factors)", c.position.pos));
                } else if let Some(e) = growth_exponent_mismatch(f, decl) {
                    l_ok = false;
                    failures
                        .push(format!("value growth exponent {e:.3} at {:?} differs from declared degree {}", c.position.pos, decl.degree));
                }
            }
            _ => {
                l_ok = false;
                failures.push(format!("degenerate critical point at {:?} has no declared model", c.position.pos));
            }
        }
    }
    let in_class_f = b_ok && l_ok;
    let in_class_morse = in_class_f && search.points.iter().all(|c| c.kind.is_nondegenerate());
    AxiomReport { axiom_b_ok: b_ok, boundary_residuals: residuals, axiom_l_ok: l_ok, in_class_f, in_class_morse, failures }
}

/// Fitted exponent of `|f(z + r·u) − f(z)|` in `r` averaged over directions;
/// `Some(exponent)` if it is off the declared degree by more than 10%.
fn growth_exponent_mismatch(f: &ScalarField, decl: &DeclaredModel) -> Option<f64> {
    let z = decl.at;
    let f0 = f.value(&z);
    let (r1, r2) = (1e-2, 2e-2);
    let mut sum = 0.0;
    let mut n = 0;
    for k in 0..16 {
        let a = 2.0 * PI * (k as f64 + 0.5) / 16.0;
        let u = Vec2::new(a.cos(), a.sin());
        let d1 = f.difference(f.value(&z.with_pos(z.pos + u * r1)), f0).abs();
        let d2 = f.difference(f.value(&z.with_pos(z.pos + u * r2)), f0).abs();
        if d1 > 0.0 && d2 > 0.0 {
            sum += (d2 / d1).log2();
            n += 1;
        }
    }
    let e = if n == 0 { 0.0 } else { sum / n as f64 };
    let d = decl.degree as f64;
    ((e - d).abs() > 0.1 * d).then_some(e)
}

/// The four extreme-only model situations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleType {
    /// Sphere, one minimum and one maximum.
    A,
    /// Disk, one extreme.
    B,
    /// Annulus, no critical points.
    C,
    /// Torus, circle-valued without critical points.
    D,
}

/// Predicted homotopy type of the group of f-preserving symplectic isotopies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Circle(CircleType),
    Contractible,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Circle(CircleType::A) => "Circle(A)",
            Case::Circle(CircleType::B) => "Circle(B)",
            Case::Circle(CircleType::C) => "Circle(C)",
            Case::Circle(CircleType::D) => "Circle(D)",
            Case::Contractible => "Contractible",
        }
    }
}

/// Decides between the circle case (extremes only, on one of the four model
/// surfaces) and the contractible case.
pub fn homotopy_case(f: &ScalarField, surface: &SurfaceModel, report: &AxiomReport, search: &CriticalSearch) -> Result<Case> {
    if !report.in_class_f {
        return Err(Error::NotInClassF(report.failures.join("; ")));
    }
    if !search.points.iter().all(|c| c.kind.is_nondegenerate_extreme()) {
        return Ok(Case::Contractible);
    }
    let mins = search.count(CriticalKind::NondegMin);
    let maxs = search.count(CriticalKind::NondegMax);
    let circle = matches!(f.codomain, Codomain::Circle { .. });
    let case = match (surface.kind, mins + maxs) {
        (SurfaceKind::Sphere, 2) if mins == 1 && maxs == 1 => CircleType::A,
        (SurfaceKind::Disk | SurfaceKind::PlanarSublevel, 1) => CircleType::B,
        (SurfaceKind::Annulus, 0) => CircleType::C,
        (SurfaceKind::FlatTorus, 0) if circle => CircleType::D,
        (kind, n) => {
            return Err(Error::InconsistentTopology(format!(
                "{n} nondegenerate extreme(s) ({mins} min, {maxs} max) cannot occur alone on a {} for a {} field",
                kind.name(),
                if circle { "circle-valued" } else { "real-valued" }
            )))
        }
    };
    Ok(Case::Circle(case))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::geometry::{make_model_surface, SurfaceSpec};

    fn disk() -> SurfaceModel {
        make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap()
    }

    #[test]
    fn paraboloid_has_one_minimum() {
        let s = disk();
        let r = find_critical_points(&builtin::r2_field(), &s, 0.1, 1e-8).unwrap();
        assert_eq!(r.points.len(), 1);
        let c = r.points[0];
        assert_eq!(c.kind, CriticalKind::NondegMin);
        assert!(c.position.pos.norm() < 1e-12 && c.value.abs() < 1e-20);
    }

    #[test]
    fn twowell_has_a_saddle_and_two_minima() {
        let s = builtin::twowell_domain();
        let r = find_critical_points(&builtin::twowell_field(), &s, 0.1, 1e-8).unwrap();
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.count(CriticalKind::NondegMin), 2);
        let saddle = r.points.iter().find(|c| c.kind == CriticalKind::NondegSaddle).unwrap();
        assert!(saddle.position.pos.norm() < 1e-12);
        assert!((saddle.value - 1.0).abs() < 1e-12);
        for c in r.points.iter().filter(|c| c.kind == CriticalKind::NondegMin) {
            assert!((c.position.pos.x.abs() - 1.0).abs() < 1e-12 && c.value.abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_is_unclassified_and_not_in_class_f() {
        let s = disk();
        let f = builtin::r4_field();
        let r = find_critical_points(&f, &s, 0.1, 1e-8).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].kind, CriticalKind::Unclassified);
        let rep = check_axioms(&f, &s, &r);
        assert!(rep.axiom_b_ok && !rep.in_class_f);

        let declared = builtin::r4_field_declared();
        let r = find_critical_points(&declared, &s, 0.1, 1e-8).unwrap();
        assert_eq!(r.points[0].kind, CriticalKind::DeclaredHomogeneous(4));
        let rep = check_axioms(&declared, &s, &r);
        assert!(!rep.in_class_f);
        assert!(homotopy_case(&declared, &s, &rep, &r).is_err());
    }

    #[test]
    fn square_free_declaration_with_wrong_degree_is_caught() {
        let s = disk();
        let f = builtin::r4_field().with_declaration(DeclaredModel {
            at: SurfacePoint::new(0, 0.0, 0.0),
            degree: 3,
            square_free: true,
            local: None,
        });
        let r = find_critical_points(&f, &s, 0.1, 1e-8).unwrap();
        let rep = check_axioms(&f, &s, &r);
        assert!(!rep.axiom_l_ok);
        let g = builtin::r4_field().with_declaration(DeclaredModel {
            at: SurfacePoint::new(0, 0.0, 0.0),
            degree: 4,
            square_free: true,
            local: None,
        });
        let rep = check_axioms(&g, &s, &find_critical_points(&g, &s, 0.1, 1e-8).unwrap());
        assert!(rep.in_class_f && !rep.in_class_morse);
    }

    #[test]
    fn cases_for_the_model_fields() {
        let s = disk();
        let f = builtin::r2_field();
        let r = find_critical_points(&f, &s, 0.1, 1e-8).unwrap();
        let rep = check_axioms(&f, &s, &r);
        assert!(rep.in_class_f && rep.in_class_morse);
        assert_eq!(homotopy_case(&f, &s, &rep, &r).unwrap(), Case::Circle(CircleType::B));

        let d = builtin::twowell_domain();
        let g = builtin::twowell_field();
        let r = find_critical_points(&g, &d, 0.1, 1e-8).unwrap();
        let rep = check_axioms(&g, &d, &r);
        assert!(rep.in_class_morse);
        assert_eq!(homotopy_case(&g, &d, &rep, &r).unwrap(), Case::Contractible);

        let a = builtin::annulus();
        let h = builtin::angular_field();
        let r = find_critical_points(&h, &a, 0.1, 1e-8).unwrap();
        assert!(r.points.is_empty());
        let rep = check_axioms(&h, &a, &r);
        assert_eq!(homotopy_case(&h, &a, &rep, &r).unwrap(), Case::Circle(CircleType::C));

        let sph = builtin::sphere();
        let h = builtin::sphere_height_field();
        let r = find_critical_points(&h, &sph, 0.1, 1e-8).unwrap();
        assert_eq!(r.points.len(), 2);
        let rep = check_axioms(&h, &sph, &r);
        assert_eq!(homotopy_case(&h, &sph, &rep, &r).unwrap(), Case::Circle(CircleType::A));

        let t = builtin::torus();
        let h = builtin::torus_circle_field();
        let r = find_critical_points(&h, &t, 0.1, 1e-8).unwrap();
        let rep = check_axioms(&h, &t, &r);
        assert_eq!(homotopy_case(&h, &t, &rep, &r).unwrap(), Case::Circle(CircleType::D));
    }

    #[test]
    fn morse_counts_match_euler_characteristic_on_closed_models() {
        let t = builtin::torus();
        let h = builtin::torus_height_field();
        let r = find_critical_points(&h, &t, 0.05, 1e-8).unwrap();
        let chi =
            r.count(CriticalKind::NondegMin) as i64 - r.count(CriticalKind::NondegSaddle) as i64 + r.count(CriticalKind::NondegMax) as i64;
        assert_eq!((r.points.len(), chi), (4, 0));

        let s = builtin::sphere();
        let h = builtin::sphere_height_field();
        let r = find_critical_points(&h, &s, 0.1, 1e-8).unwrap();
        let chi =
            r.count(CriticalKind::NondegMin) as i64 - r.count(CriticalKind::NondegSaddle) as i64 + r.count(CriticalKind::NondegMax) as i64;
        assert_eq!(chi, 2);
    }
}
