//! Scalar fields `f: M → P` with `P` a line or a circle, their critical
//! points, the admissibility axioms and the resulting homotopy case.

mod critical;

pub use critical::{
    check_axioms, find_critical_points, homotopy_case, AxiomReport, Case, CircleType, CriticalKind, CriticalPoint, CriticalSearch,
};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::function::{fd_gradient, fd_hessian_from_gradient, ChartFn, PerChart, SurfaceFunction};
use crate::geometry::SurfacePoint;
use crate::math::{minimal_image, Mat2, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Codomain {
    Line,
    /// `ℝ / period·ℤ`; the evaluator returns a local lift.
    Circle {
        period: f64,
    },
}

impl Codomain {
    /// Difference `a − b`, reduced to the symmetric fundamental domain for circles.
    pub fn difference(self, a: f64, b: f64) -> f64 {
        match self {
            Codomain::Line => a - b,
            Codomain::Circle { period } => minimal_image(a - b, period),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    /// Use the evaluator's derivatives (falling back to differences when absent).
    Analytic,
    /// Always use central differences with step `h`.
    FiniteDifference { h: f64 },
}

/// A user-supplied local model at a degenerate critical point: a homogeneous
/// polynomial of the given degree, asserted to have no multiple factors.
#[derive(Clone)]
pub struct DeclaredModel {
    pub at: SurfacePoint,
    pub degree: u32,
    pub square_free: bool,
    /// Local representative `f̂` in the chart of `at`, centered at `at.pos`.
    pub local: Option<Arc<dyn ChartFn>>,
}

impl fmt::Debug for DeclaredModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeclaredModel").field("at", &self.at).field("degree", &self.degree).field("square_free", &self.square_free).finish()
    }
}

/// Step used for central differences when no analytic derivative exists.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    pub codomain: Codomain,
    pub mode: DerivativeMode,
    pub declarations: Vec<DeclaredModel>,
    func: Arc<dyn SurfaceFunction>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("codomain", &self.codomain)
            .field("mode", &self.mode)
            .field("declarations", &self.declarations)
            .finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, func: Arc<dyn SurfaceFunction>) -> Self {
        ScalarField { name: name.into(), codomain: Codomain::Line, mode: DerivativeMode::Analytic, declarations: Vec::new(), func }
    }

    /// A field given by the same chart function on every chart.
    pub fn from_chart_fn(name: impl Into<String>, f: impl ChartFn + 'static) -> Self {
        ScalarField::new(name, Arc::new(PerChart::single(f)))
    }

    pub fn circle_valued(mut self, period: f64) -> Self {
        self.codomain = Codomain::Circle { period };
        self
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_declaration(mut self, d: DeclaredModel) -> Self {
        self.declarations.push(d);
        self
    }

    pub fn function(&self) -> &Arc<dyn SurfaceFunction> {
        &self.func
    }

    /// Step of the finite differences in use, if any.
    pub fn fd_step(&self) -> Option<f64> {
        match self.mode {
            DerivativeMode::FiniteDifference { h } => Some(h),
            DerivativeMode::Analytic => None,
        }
    }

    pub fn value(&self, p: &SurfacePoint) -> f64 {
        self.func.value(p)
    }

    pub fn gradient(&self, p: &SurfacePoint) -> Vec2 {
        match self.mode {
            DerivativeMode::Analytic => match self.func.gradient(p) {
                Some(g) => g,
                None => self.fd_gradient(p, DEFAULT_FD_STEP),
            },
            DerivativeMode::FiniteDifference { h } => self.fd_gradient(p, h),
        }
    }

    pub fn hessian(&self, p: &SurfacePoint) -> Mat2 {
        match self.mode {
            DerivativeMode::Analytic => match self.func.hessian(p) {
                Some(h) => h,
                None => fd_hessian_from_gradient(|q| self.gradient(&p.with_pos(q)), p.pos, DEFAULT_FD_STEP),
            },
            DerivativeMode::FiniteDifference { h } => fd_hessian_from_gradient(|q| self.fd_gradient(&p.with_pos(q), h), p.pos, h),
        }
    }

    /// Central-difference gradient with step `h`, regardless of mode.
    pub fn fd_gradient(&self, p: &SurfacePoint, h: f64) -> Vec2 {
        fd_gradient(|q| self.func.value(&p.with_pos(q)), p.pos, h)
    }

    /// Signed difference of values, modulo the period for circle-valued fields.
    pub fn difference(&self, a: f64, b: f64) -> f64 {
        self.codomain.difference(a, b)
    }

    /// Declaration whose point lies within `radius` of `p`.
    pub fn declaration_near(&self, p: &SurfacePoint, radius: f64) -> Option<&DeclaredModel> {
        self.declarations.iter().find(|d| d.at.chart == p.chart && (d.at.pos - p.pos).norm() <= radius)
    }
}

impl SurfaceFunction for ScalarField {
    fn value(&self, p: &SurfacePoint) -> f64 {
        ScalarField::value(self, p)
    }

    fn gradient(&self, p: &SurfacePoint) -> Option<Vec2> {
        Some(ScalarField::gradient(self, p))
    }

    fn hessian(&self, p: &SurfacePoint) -> Option<Mat2> {
        Some(ScalarField::hessian(self, p))
    }
}
