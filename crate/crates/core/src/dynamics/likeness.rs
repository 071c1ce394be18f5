use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::PlanarVectorField;
use crate::error::{Error, Result};
use crate::fields::{CriticalPoint, ScalarField};
use crate::function::SurfaceFunction;
use crate::geometry::{AreaForm, SurfacePoint};
use crate::math::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// No local model is available to compare against.
    Unverifiable,
}

/// Outcome of the three defining conditions of a Hamiltonian-like field:
/// (a) `df(V) = 0`, (b) zeros of `V` are exactly the critical points, (c) near
/// each critical point `V` agrees with the Hamiltonian field of the local model.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianLikeReport {
    pub a: Verdict,
    pub a_residual: f64,
    pub b: Verdict,
    pub b_residual: f64,
    pub c: Verdict,
    pub c_residual: f64,
    pub failures: Vec<String>,
}

impl HamiltonianLikeReport {
    pub fn passed(&self) -> bool {
        self.a == Verdict::Pass && self.b == Verdict::Pass && self.c == Verdict::Pass
    }
}

const MODEL_RADII: [f64; 2] = [0.1, 0.05];
const MODEL_ANGLES: usize = 32;

pub fn is_hamiltonian_like(
    v: &PlanarVectorField,
    f: &ScalarField,
    crits: &[CriticalPoint],
    samples: &[SurfacePoint],
    tol: f64,
) -> HamiltonianLikeReport {
    let mut failures = Vec::new();
    let surface = &v.surface;

    let a_residual = samples.iter().map(|p| f.gradient(p).dot(v.eval(p)).abs()).fold(0.0, f64::max);
    let a = if a_residual <= tol { Verdict::Pass } else { Verdict::Fail };
    if a == Verdict::Fail {
        failures.push(alloc::format!("df(V) reaches {a_residual:e}"));
    }

    let mut b_residual: f64 = 0.0;
    let mut b = Verdict::Pass;
    for c in crits {
        let s = v.eval(&c.position).norm();
        b_residual = b_residual.max(s);
        if s > tol {
            b = Verdict::Fail;
            failures.push(alloc::format!("V does not vanish at critical point {:?}", c.position.pos));
        }
    }
    for p in samples {
        if crits.iter().any(|c| surface.distance(&c.position, p) < 1e-3) {
            continue;
        }
        if v.eval(p).norm() <= tol {
            b = Verdict::Fail;
            failures.push(alloc::format!("V vanishes at regular point {:?}", p.pos));
            break;
        }
    }

    let mut c_verdict = Verdict::Pass;
    let mut c_residual: f64 = 0.0;
    for c in crits {
        let z = c.position;
        let decl = f.declaration_near(&z, 1e-3);
        let local = decl.and_then(|d| d.local.clone().map(|m| (m, d.at.pos)));
        if !c.kind.is_nondegenerate() && local.is_none() {
            if c_verdict == Verdict::Pass {
                c_verdict = Verdict::Unverifiable;
            }
            failures.push(alloc::format!("no local model at degenerate point {:?}", z.pos));
            continue;
        }
        let model = |p: &SurfacePoint| -> Vec2 {
            let g = match &local {
                Some((m, at)) => {
                    let d = p.pos - *at;
                    m.gradient(d).unwrap_or_else(|| crate::function::fd_gradient(|q| m.value(q), d, 1e-6))
                }
                None => f.gradient(p),
            };
            Vec2::new(-g.y, g.x)
        };
        for &r in &MODEL_RADII {
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..MODEL_ANGLES {
                let a = 2.0 * PI * k as f64 / MODEL_ANGLES as f64;
                let p = z.with_pos(z.pos + Vec2::new(a.cos(), a.sin()) * r);
                if !surface.contains(&p) {
                    continue;
                }
                let w = model(&p);
                scale = scale.max(w.norm());
                worst = worst.max((v.eval(&p) - w).norm());
            }
            let rel = if scale > 0.0 { worst / scale } else { worst };
            c_residual = c_residual.max(rel);
            if rel > tol {
                c_verdict = Verdict::Fail;
                failures.push(alloc::format!("V departs from the local model at {:?} on radius {r}: {rel:e}", z.pos));
            }
        }
    }

    HamiltonianLikeReport { a, a_residual, b, b_residual, c: c_verdict, c_residual, failures }
}

/// `λ` with `H = λ·F` for two parallel fields sharing their zeros.
#[derive(Clone)]
pub struct LambdaRatio {
    pub h: PlanarVectorField,
    pub f: PlanarVectorField,
    pub form: AreaForm,
}

impl SurfaceFunction for LambdaRatio {
    fn value(&self, p: &SurfacePoint) -> f64 {
        let hv = self.h.eval(p);
        let fv = self.f.eval(p);
        if fv.norm() < 1e-12 {
            // At a shared zero, both agree with their local models.
            return 1.0 / self.form.gamma(p);
        }
        if fv.x.abs() >= fv.y.abs() {
            hv.x / fv.x
        } else {
            hv.y / fv.y
        }
    }
}

/// Builds `λ = H/F` and checks `|H − λF| < 1e-8` at the samples.
pub fn lambda_ratio(h: &PlanarVectorField, f: &PlanarVectorField, form: &AreaForm, samples: &[SurfacePoint]) -> Result<LambdaRatio> {
    let ratio = LambdaRatio { h: h.clone(), f: f.clone(), form: form.clone() };
    for p in samples {
        let l = ratio.value(p);
        let hv = h.eval(p);
        let residual = (hv - f.eval(p) * l).norm();
        if !(residual < 1e-8 * hv.norm().max(1.0)) {
            return Err(Error::NotParallel { residual, at: p.pos });
        }
        if !(l.abs() > 0.0) {
            return Err(Error::VanishingScale(p.pos));
        }
    }
    Ok(ratio)
}

/// `μ = λ₂/λ₁`, so that `F₁ = μ·F₂` when `H = λᵢ·Fᵢ`.
#[derive(Clone)]
pub struct MuRatio {
    pub lambda1: Arc<dyn SurfaceFunction>,
    pub lambda2: Arc<dyn SurfaceFunction>,
}

impl SurfaceFunction for MuRatio {
    fn value(&self, p: &SurfacePoint) -> f64 {
        self.lambda2.value(p) / self.lambda1.value(p)
    }
}

pub fn mu_ratio(lambda1: Arc<dyn SurfaceFunction>, lambda2: Arc<dyn SurfaceFunction>) -> MuRatio {
    MuRatio { lambda1, lambda2 }
}
