//! Real-valued functions on charts and on surfaces.
//!
//! [`ChartFn`] is a function of planar chart coordinates; [`SurfaceFunction`]
//! is evaluated at a [`SurfacePoint`] and may dispatch on the chart. Either may
//! supply analytic derivatives; callers fall back to central differences when
//! they do not.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::SurfacePoint;
use crate::math::{powi, Mat2, Vec2};

pub trait ChartFn: Send + Sync {
    fn value(&self, p: Vec2) -> f64;

    fn gradient(&self, _p: Vec2) -> Option<Vec2> {
        None
    }

    fn hessian(&self, _p: Vec2) -> Option<Mat2> {
        None
    }
}

pub trait SurfaceFunction: Send + Sync {
    fn value(&self, p: &SurfacePoint) -> f64;

    fn gradient(&self, _p: &SurfacePoint) -> Option<Vec2> {
        None
    }

    fn hessian(&self, _p: &SurfacePoint) -> Option<Mat2> {
        None
    }
}

/// Bivariate polynomial `Σ c·xⁱ·yʲ` with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    terms: Vec<(u32, u32, f64)>,
}

impl Polynomial {
    /// Builds a polynomial from `(i, j, c)` monomials; repeated exponents are summed.
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut merged: Vec<(u32, u32, f64)> = Vec::new();
        for (i, j, c) in terms {
            match merged.iter_mut().find(|t| t.0 == i && t.1 == j) {
                Some(t) => t.2 += c,
                None => merged.push((i, j, c)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        merged.sort_by_key(|a| (a.0, a.1));
        Polynomial { terms: merged }
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    fn eval_terms(&self, p: Vec2, dx: u32, dy: u32) -> f64 {
        let mut acc = 0.0;
        for &(i, j, c) in &self.terms {
            if i < dx || j < dy {
                continue;
            }
            let fx = falling(i, dx);
            let fy = falling(j, dy);
            acc += c * fx * fy * powi(p.x, i - dx) * powi(p.y, j - dy);
        }
        acc
    }
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64)
}

impl ChartFn for Polynomial {
    fn value(&self, p: Vec2) -> f64 {
        self.eval_terms(p, 0, 0)
    }

    fn gradient(&self, p: Vec2) -> Option<Vec2> {
        Some(Vec2::new(self.eval_terms(p, 1, 0), self.eval_terms(p, 0, 1)))
    }

    fn hessian(&self, p: Vec2) -> Option<Mat2> {
        let fxy = self.eval_terms(p, 1, 1);
        Some(Mat2::new(self.eval_terms(p, 2, 0), fxy, fxy, self.eval_terms(p, 0, 2)))
    }
}

type ValueFn = dyn Fn(Vec2) -> f64 + Send + Sync;
type GradFn = dyn Fn(Vec2) -> Vec2 + Send + Sync;
type HessFn = dyn Fn(Vec2) -> Mat2 + Send + Sync;

/// A chart function assembled from closures.
#[derive(Clone)]
pub struct ClosureFn {
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradFn>>,
    hessian: Option<Arc<HessFn>>,
}

impl ClosureFn {
    pub fn new(value: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        ClosureFn { value: Arc::new(value), gradient: None, hessian: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }
}

impl fmt::Debug for ClosureFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFn").field("gradient", &self.gradient.is_some()).field("hessian", &self.hessian.is_some()).finish()
    }
}

impl ChartFn for ClosureFn {
    fn value(&self, p: Vec2) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: Vec2) -> Option<Vec2> {
        self.gradient.as_ref().map(|g| g(p))
    }

    fn hessian(&self, p: Vec2) -> Option<Mat2> {
        self.hessian.as_ref().map(|h| h(p))
    }
}

/// One chart function per chart of an atlas.
#[derive(Clone)]
pub struct PerChart {
    charts: Vec<Arc<dyn ChartFn>>,
}

impl PerChart {
    pub fn new(charts: Vec<Arc<dyn ChartFn>>) -> Self {
        assert!(!charts.is_empty(), "PerChart needs at least one chart function");
        PerChart { charts }
    }

    pub fn single(f: impl ChartFn + 'static) -> Self {
        PerChart { charts: alloc::vec![Arc::new(f)] }
    }

    pub fn chart(&self, chart: usize) -> &Arc<dyn ChartFn> {
        &self.charts[chart.min(self.charts.len() - 1)]
    }
}

impl SurfaceFunction for PerChart {
    fn value(&self, p: &SurfacePoint) -> f64 {
        self.chart(p.chart).value(p.pos)
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        self.chart(p.chart).gradient(p.pos)
    }

    fn hessian(&self, p: &SurfacePoint) -> Option<Mat2> {
        self.chart(p.chart).hessian(p.pos)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl SurfaceFunction for Constant {
    fn value(&self, _p: &SurfacePoint) -> f64 {
        self.0
    }

    fn gradient(&self, _p: &SurfacePoint) -> Option<Vec2> {
        Some(Vec2::ZERO)
    }

    fn hessian(&self, _p: &SurfacePoint) -> Option<Mat2> {
        Some(Mat2::default())
    }
}

/// Pointwise product, with the product rule when both factors are differentiable.
#[derive(Clone)]
pub struct Product(pub Arc<dyn SurfaceFunction>, pub Arc<dyn SurfaceFunction>);

impl SurfaceFunction for Product {
    fn value(&self, p: &SurfacePoint) -> f64 {
        self.0.value(p) * self.1.value(p)
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        let (ga, gb) = (self.0.gradient(p)?, self.1.gradient(p)?);
        Some(ga * self.1.value(p) + gb * self.0.value(p))
    }

    fn hessian(&self, p: &SurfacePoint) -> Option<Mat2> {
        let (ha, hb) = (self.0.hessian(p)?, self.1.hessian(p)?);
        let (ga, gb) = (self.0.gradient(p)?, self.1.gradient(p)?);
        let (a, b) = (self.0.value(p), self.1.value(p));
        let cross_xy = ga.x * gb.y + ga.y * gb.x;
        Some(Mat2::new(
            ha.a * b + hb.a * a + 2.0 * ga.x * gb.x,
            ha.b * b + hb.b * a + cross_xy,
            ha.c * b + hb.c * a + cross_xy,
            ha.d * b + hb.d * a + 2.0 * ga.y * gb.y,
        ))
    }
}

/// `a·f + b·g`.
#[derive(Clone)]
pub struct LinearCombination {
    pub terms: Vec<(f64, Arc<dyn SurfaceFunction>)>,
}

impl SurfaceFunction for LinearCombination {
    fn value(&self, p: &SurfacePoint) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(p)).sum()
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        let mut acc = Vec2::ZERO;
        for (c, f) in &self.terms {
            acc += f.gradient(p)? * *c;
        }
        Some(acc)
    }

    fn hessian(&self, p: &SurfacePoint) -> Option<Mat2> {
        let mut acc = Mat2::default();
        for (c, f) in &self.terms {
            let h = f.hessian(p)?;
            acc = Mat2::new(acc.a + c * h.a, acc.b + c * h.b, acc.c + c * h.c, acc.d + c * h.d);
        }
        Some(acc)
    }
}

/// Central-difference gradient of a chart function.
pub fn fd_gradient(f: impl Fn(Vec2) -> f64, p: Vec2, h: f64) -> Vec2 {
    let dx = (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h);
    let dy = (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h);
    Vec2::new(dx, dy)
}

/// Central-difference Jacobian of a gradient map, symmetrized.
pub fn fd_hessian_from_gradient(g: impl Fn(Vec2) -> Vec2, p: Vec2, h: f64) -> Mat2 {
    let gx = (g(p + Vec2::new(h, 0.0)) - g(p - Vec2::new(h, 0.0))) / (2.0 * h);
    let gy = (g(p + Vec2::new(0.0, h)) - g(p - Vec2::new(0.0, h))) / (2.0 * h);
    let off = 0.5 * (gx.y + gy.x);
    Mat2::new(gx.x, off, off, gy.y)
}

/// Second-difference Hessian from values only.
pub fn fd_hessian(f: impl Fn(Vec2) -> f64, p: Vec2, h: f64) -> Mat2 {
    let f0 = f(p);
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let fxx = (f(p + ex) - 2.0 * f0 + f(p - ex)) / (h * h);
    let fyy = (f(p + ey) - 2.0 * f0 + f(p - ey)) / (h * h);
    let fxy = (f(p + ex + ey) - f(p + ex - ey) - f(p - ex + ey) + f(p - ex - ey)) / (4.0 * h * h);
    Mat2::new(fxx, fxy, fxy, fyy)
}
