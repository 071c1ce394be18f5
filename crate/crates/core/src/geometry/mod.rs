//! Model surfaces as intrinsic chart atlases, area forms on them, and their
//! triangulated discretizations.

mod locate;
mod mesh;
mod quadrature;

pub use locate::{Location, MeshLocator};
pub use mesh::{triangulate, triangulate_separating, TriMesh};
pub(crate) use quadrature::triangle_integral;
pub use quadrature::{clip_polygon, integrate_density, integrate_density_over, ClipVertex, Region};

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::function::{ChartFn, SurfaceFunction};
use crate::math::{minimal_image, wrap, Mat2, Vec2};

/// A point of the surface: a chart index and coordinates in that chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub chart: usize,
    pub pos: Vec2,
}

impl SurfacePoint {
    pub const fn new(chart: usize, x: f64, y: f64) -> Self {
        SurfacePoint { chart, pos: Vec2::new(x, y) }
    }

    pub const fn at(pos: Vec2) -> Self {
        SurfacePoint { chart: 0, pos }
    }

    pub fn with_pos(self, pos: Vec2) -> Self {
        SurfacePoint { chart: self.chart, pos }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceKind {
    Disk,
    Annulus,
    FlatTorus,
    Sphere,
    PlanarSublevel,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Disk => "Disk",
            SurfaceKind::Annulus => "Annulus",
            SurfaceKind::FlatTorus => "FlatTorus",
            SurfaceKind::Sphere => "Sphere",
            SurfaceKind::PlanarSublevel => "PlanarSublevel",
        }
    }
}

/// Region of the plane covered by a chart.
#[derive(Clone)]
pub enum ChartDomain {
    Disk {
        center: Vec2,
        radius: f64,
    },
    /// Axis-aligned rectangle; periodic directions identify opposite sides.
    Rect {
        min: Vec2,
        max: Vec2,
    },
    /// `{ g ≤ level }`, star-shaped about `center`, contained in the disk of radius `reach`.
    Sublevel {
        g: Arc<dyn ChartFn>,
        level: f64,
        center: Vec2,
        reach: f64,
    },
}

impl fmt::Debug for ChartDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartDomain::Disk { center, radius } => f.debug_struct("Disk").field("center", center).field("radius", radius).finish(),
            ChartDomain::Rect { min, max } => f.debug_struct("Rect").field("min", min).field("max", max).finish(),
            ChartDomain::Sublevel { level, center, reach, .. } => {
                f.debug_struct("Sublevel").field("level", level).field("center", center).field("reach", reach).finish()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub id: usize,
    pub domain: ChartDomain,
    /// Periods of the x and y coordinates, if periodic.
    pub periods: [Option<f64>; 2],
}

impl Chart {
    fn contains(&self, p: Vec2) -> bool {
        match &self.domain {
            ChartDomain::Disk { center, radius } => (p - *center).norm() <= radius * (1.0 + 1e-12),
            ChartDomain::Rect { min, max } => {
                let ok_x = self.periods[0].is_some() || (p.x >= min.x - 1e-12 && p.x <= max.x + 1e-12);
                let ok_y = self.periods[1].is_some() || (p.y >= min.y - 1e-12 && p.y <= max.y + 1e-12);
                ok_x && ok_y
            }
            ChartDomain::Sublevel { g, level, .. } => g.value(p) <= *level + 1e-12 * level.abs().max(1.0),
        }
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match &self.domain {
            ChartDomain::Disk { center, radius } => (*center - Vec2::new(*radius, *radius), *center + Vec2::new(*radius, *radius)),
            ChartDomain::Rect { min, max } => (*min, *max),
            ChartDomain::Sublevel { center, reach, .. } => (*center - Vec2::new(*reach, *reach), *center + Vec2::new(*reach, *reach)),
        }
    }

    fn wrap(&self, p: Vec2) -> Vec2 {
        let (min, _) = self.bounding_box();
        let mut q = p;
        if let Some(px) = self.periods[0] {
            q.x = min.x + wrap(p.x - min.x, px);
        }
        if let Some(py) = self.periods[1] {
            q.y = min.y + wrap(p.y - min.y, py);
        }
        q
    }
}

/// Orientation-preserving change of coordinates between two charts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransitionMap {
    /// `z ↦ 1/z`, i.e. `(x, y) ↦ (x, −y)/(x² + y²)`.
    Inversion,
}

impl TransitionMap {
    pub fn apply(self, p: Vec2) -> Vec2 {
        match self {
            TransitionMap::Inversion => {
                let r2 = p.norm_sq();
                Vec2::new(p.x / r2, -p.y / r2)
            }
        }
    }

    pub fn jacobian(self, p: Vec2) -> Mat2 {
        match self {
            TransitionMap::Inversion => {
                let r2 = p.norm_sq();
                let r4 = r2 * r2;
                let (x, y) = (p.x, p.y);
                Mat2::new((y * y - x * x) / r4, -2.0 * x * y / r4, 2.0 * x * y / r4, (y * y - x * x) / r4)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub map: TransitionMap,
}

/// A boundary component: a closed curve drawn in one chart.
#[derive(Clone)]
pub enum BoundaryCurve {
    Circle {
        chart: usize,
        center: Vec2,
        radius: f64,
    },
    /// The horizontal line `y = const` in a chart periodic in x.
    Horizontal {
        chart: usize,
        y: f64,
        x0: f64,
        period: f64,
    },
    /// Level `g = level` of a star-shaped sublevel domain.
    StarLevel {
        chart: usize,
        g: Arc<dyn ChartFn>,
        level: f64,
        center: Vec2,
        reach: f64,
    },
}

impl fmt::Debug for BoundaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCurve::Circle { chart, center, radius } => {
                f.debug_struct("Circle").field("chart", chart).field("center", center).field("radius", radius).finish()
            }
            BoundaryCurve::Horizontal { chart, y, period, .. } => {
                f.debug_struct("Horizontal").field("chart", chart).field("y", y).field("period", period).finish()
            }
            BoundaryCurve::StarLevel { chart, level, center, .. } => {
                f.debug_struct("StarLevel").field("chart", chart).field("level", level).field("center", center).finish()
            }
        }
    }
}

impl BoundaryCurve {
    pub fn chart(&self) -> usize {
        match self {
            BoundaryCurve::Circle { chart, .. } | BoundaryCurve::Horizontal { chart, .. } | BoundaryCurve::StarLevel { chart, .. } => {
                *chart
            }
        }
    }

    /// `n` points equally spaced in the curve's natural parameter.
    pub fn sample(&self, n: usize) -> Vec<SurfacePoint> {
        (0..n)
            .map(|k| {
                let s = k as f64 / n as f64;
                match self {
                    BoundaryCurve::Circle { chart, center, radius } => {
                        let a = 2.0 * PI * s;
                        SurfacePoint { chart: *chart, pos: *center + Vec2::new(a.cos(), a.sin()) * *radius }
                    }
                    BoundaryCurve::Horizontal { chart, y, x0, period } => {
                        SurfacePoint { chart: *chart, pos: Vec2::new(x0 + s * period, *y) }
                    }
                    BoundaryCurve::StarLevel { chart, g, level, center, reach } => {
                        let a = 2.0 * PI * s;
                        let dir = Vec2::new(a.cos(), a.sin());
                        let r = ray_crossing(g.as_ref(), *level, *center, dir, *reach);
                        SurfacePoint { chart: *chart, pos: *center + dir * r }
                    }
                }
            })
            .collect()
    }
}

/// Radius at which `g(center + r·dir)` first reaches `level`, by bisection.
pub(crate) fn ray_crossing(g: &dyn ChartFn, level: f64, center: Vec2, dir: Vec2, reach: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g.value(center + dir * mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Parameters accepted by [`make_model_surface`].
#[derive(Clone)]
pub enum SurfaceSpec {
    Disk {
        radius: f64,
    },
    /// `S¹ × [0, height]` with the circle of length `period` along x.
    Annulus {
        period: f64,
        height: f64,
    },
    FlatTorus {
        periods: (f64, f64),
    },
    /// Unit sphere as two stereographic charts glued by `z ↦ 1/z`.
    Sphere,
    /// `{ g ≤ level }` for a field `g` with `level` a regular value.
    PlanarSublevel {
        g: Arc<dyn ChartFn>,
        level: f64,
        center: Vec2,
    },
}

impl fmt::Debug for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Disk { radius } => write!(f, "Disk {{ radius: {radius} }}"),
            SurfaceSpec::Annulus { period, height } => {
                write!(f, "Annulus {{ period: {period}, height: {height} }}")
            }
            SurfaceSpec::FlatTorus { periods } => write!(f, "FlatTorus {{ periods: {periods:?} }}"),
            SurfaceSpec::Sphere => write!(f, "Sphere"),
            SurfaceSpec::PlanarSublevel { level, center, .. } => {
                write!(f, "PlanarSublevel {{ level: {level}, center: {center:?} }}")
            }
        }
    }
}

/// Radius of each stereographic chart; the charts overlap on `1/R ≤ |z| ≤ R`.
pub const SPHERE_CHART_RADIUS: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct SurfaceModel {
    pub kind: SurfaceKind,
    pub spec: SurfaceSpec,
    pub charts: Vec<Chart>,
    pub transitions: Vec<Transition>,
    pub boundary: Vec<BoundaryCurve>,
}

/// Builds one of the model surfaces.
pub fn make_model_surface(spec: SurfaceSpec) -> Result<SurfaceModel> {
    let positive = |name: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
        }
    };
    let model = match &spec {
        SurfaceSpec::Disk { radius } => {
            positive("radius", *radius)?;
            SurfaceModel {
                kind: SurfaceKind::Disk,
                spec: spec.clone(),
                charts: vec![Chart { id: 0, domain: ChartDomain::Disk { center: Vec2::ZERO, radius: *radius }, periods: [None, None] }],
                transitions: Vec::new(),
                boundary: vec![BoundaryCurve::Circle { chart: 0, center: Vec2::ZERO, radius: *radius }],
            }
        }
        SurfaceSpec::Annulus { period, height } => {
            positive("period", *period)?;
            positive("height", *height)?;
            SurfaceModel {
                kind: SurfaceKind::Annulus,
                spec: spec.clone(),
                charts: vec![Chart {
                    id: 0,
                    domain: ChartDomain::Rect { min: Vec2::ZERO, max: Vec2::new(*period, *height) },
                    periods: [Some(*period), None],
                }],
                transitions: Vec::new(),
                boundary: vec![
                    BoundaryCurve::Horizontal { chart: 0, y: 0.0, x0: 0.0, period: *period },
                    BoundaryCurve::Horizontal { chart: 0, y: *height, x0: 0.0, period: *period },
                ],
            }
        }
        SurfaceSpec::FlatTorus { periods } => {
            positive("period x", periods.0)?;
            positive("period y", periods.1)?;
            SurfaceModel {
                kind: SurfaceKind::FlatTorus,
                spec: spec.clone(),
                charts: vec![Chart {
                    id: 0,
                    domain: ChartDomain::Rect { min: Vec2::ZERO, max: Vec2::new(periods.0, periods.1) },
                    periods: [Some(periods.0), Some(periods.1)],
                }],
                transitions: Vec::new(),
                boundary: Vec::new(),
            }
        }
        SurfaceSpec::Sphere => {
            let chart =
                |id| Chart { id, domain: ChartDomain::Disk { center: Vec2::ZERO, radius: SPHERE_CHART_RADIUS }, periods: [None, None] };
            SurfaceModel {
                kind: SurfaceKind::Sphere,
                spec: spec.clone(),
                charts: vec![chart(0), chart(1)],
                transitions: vec![
                    Transition { from: 0, to: 1, map: TransitionMap::Inversion },
                    Transition { from: 1, to: 0, map: TransitionMap::Inversion },
                ],
                boundary: Vec::new(),
            }
        }
        SurfaceSpec::PlanarSublevel { g, level, center } => {
            let reach = validate_sublevel(g.as_ref(), *level, *center)?;
            SurfaceModel {
                kind: SurfaceKind::PlanarSublevel,
                spec: spec.clone(),
                charts: vec![Chart {
                    id: 0,
                    domain: ChartDomain::Sublevel { g: g.clone(), level: *level, center: *center, reach },
                    periods: [None, None],
                }],
                transitions: Vec::new(),
                boundary: vec![BoundaryCurve::StarLevel { chart: 0, g: g.clone(), level: *level, center: *center, reach }],
            }
        }
    };
    Ok(model)
}

/// Checks that `{g ≤ level}` is a star-shaped region about `center` bounded by a
/// regular level curve; returns a radius enclosing it.
fn validate_sublevel(g: &dyn ChartFn, level: f64, center: Vec2) -> Result<f64> {
    if !(level.is_finite()) {
        return Err(Error::InvalidParams(format!("level must be finite, got {level}")));
    }
    if g.value(center) >= level {
        return Err(Error::InvalidParams(format!(
            "center {center:?} must lie strictly inside the sublevel set (g = {} ≥ {level})",
            g.value(center)
        )));
    }
    const RAYS: usize = 512;
    let mut reach = 1.0;
    'grow: loop {
        for k in 0..RAYS {
            let a = 2.0 * PI * k as f64 / RAYS as f64;
            if g.value(center + Vec2::new(a.cos(), a.sin()) * reach) <= level {
                reach *= 2.0;
                if reach > 1e6 {
                    return Err(Error::InvalidParams(String::from("sublevel set is unbounded")));
                }
                continue 'grow;
            }
        }
        break;
    }
    let scale = level.abs().max(1.0);
    if critical_point_on_level(g, level, center, reach, scale).is_some() {
        return Err(Error::SingularBoundary { level });
    }
    for k in 0..RAYS {
        let a = 2.0 * PI * k as f64 / RAYS as f64;
        let dir = Vec2::new(a.cos(), a.sin());
        let r = ray_crossing(g, level, center, dir, reach);
        for m in 1..64 {
            let t = r * m as f64 / 64.0;
            if g.value(center + dir * t) > level {
                return Err(Error::InvalidParams(format!("sublevel set is not star-shaped about {center:?} along angle {a}")));
            }
        }
        let p = center + dir * r;
        let grad = match g.gradient(p) {
            Some(gr) => gr,
            None => crate::function::fd_gradient(|q| g.value(q), p, 1e-6),
        };
        if grad.norm() < 1e-6 * scale {
            return Err(Error::SingularBoundary { level });
        }
    }
    Ok(reach)
}

fn chart_gradient(g: &dyn ChartFn, p: Vec2) -> Vec2 {
    g.gradient(p).unwrap_or_else(|| crate::function::fd_gradient(|q| g.value(q), p, 1e-6))
}

/// Newton search for a critical point of `g` with value `level` in the disk of
/// radius `reach` about `center`.
fn critical_point_on_level(g: &dyn ChartFn, level: f64, center: Vec2, reach: f64, scale: f64) -> Option<Vec2> {
    const N: usize = 24;
    for j in 0..N {
        for i in 0..N {
            let mut p = center + Vec2::new(2.0 * (i as f64 + 0.5) / N as f64 - 1.0, 2.0 * (j as f64 + 0.5) / N as f64 - 1.0) * reach;
            for _ in 0..50 {
                let hess = g.hessian(p).unwrap_or_else(|| crate::function::fd_hessian_from_gradient(|q| chart_gradient(g, q), p, 1e-5));
                let Some(inv) = hess.inverse() else { break };
                let step = inv.apply(chart_gradient(g, p));
                if !step.is_finite() {
                    break;
                }
                p -= step;
                if step.norm() < 1e-13 {
                    break;
                }
            }
            let near = (p - center).norm() <= reach;
            if near && chart_gradient(g, p).norm() < 1e-8 * scale && (g.value(p) - level).abs() < 1e-9 * scale {
                return Some(p);
            }
        }
    }
    None
}

impl SurfaceModel {
    pub fn chart(&self, id: usize) -> &Chart {
        &self.charts[id]
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Euler characteristic of the model.
    pub fn euler_characteristic(&self) -> i64 {
        match self.kind {
            SurfaceKind::Disk | SurfaceKind::PlanarSublevel => 1,
            SurfaceKind::Annulus | SurfaceKind::FlatTorus => 0,
            SurfaceKind::Sphere => 2,
        }
    }

    pub fn periods(&self, chart: usize) -> [Option<f64>; 2] {
        self.charts[chart].periods
    }

    /// Whether `p` lies in its chart's domain.
    pub fn contains(&self, p: &SurfacePoint) -> bool {
        p.chart < self.charts.len() && self.charts[p.chart].contains(p.pos)
    }

    /// Expresses `p` in chart `to`, if the charts overlap there.
    pub fn to_chart(&self, p: &SurfacePoint, to: usize) -> Option<SurfacePoint> {
        if p.chart == to {
            return Some(*p);
        }
        let t = self.transitions.iter().find(|t| t.from == p.chart && t.to == to)?;
        if p.pos.norm_sq() == 0.0 {
            return None;
        }
        let q = SurfacePoint { chart: to, pos: t.map.apply(p.pos) };
        self.contains(&q).then_some(q)
    }

    /// Jacobian of the transition from `p.chart` to `to` at `p`.
    pub fn transition_jacobian(&self, p: &SurfacePoint, to: usize) -> Option<Mat2> {
        if p.chart == to {
            return Some(Mat2::IDENTITY);
        }
        let t = self.transitions.iter().find(|t| t.from == p.chart && t.to == to)?;
        Some(t.map.jacobian(p.pos))
    }

    /// Canonical representative: periodic coordinates wrapped into the
    /// fundamental domain, sphere points moved to the chart in which `|z| ≤ 1`.
    pub fn canonical(&self, p: &SurfacePoint) -> SurfacePoint {
        let mut q = SurfacePoint { chart: p.chart, pos: self.charts[p.chart].wrap(p.pos) };
        if self.kind == SurfaceKind::Sphere && q.pos.norm_sq() > 1.0 {
            if let Some(r) = self.to_chart(&q, 1 - q.chart) {
                q = r;
            }
        }
        q
    }

    /// Vector from `a` to `b` in `a`'s chart, using minimal images for periodic
    /// charts; infinite when `b` is not visible from `a`'s chart.
    pub fn displacement(&self, a: &SurfacePoint, b: &SurfacePoint) -> Vec2 {
        let Some(b) = self.to_chart(b, a.chart) else {
            return Vec2::new(f64::INFINITY, f64::INFINITY);
        };
        let mut d = b.pos - a.pos;
        let per = self.charts[a.chart].periods;
        if let Some(px) = per[0] {
            d.x = minimal_image(d.x, px);
        }
        if let Some(py) = per[1] {
            d.y = minimal_image(d.y, py);
        }
        d
    }

    pub fn distance(&self, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Chart distance from `p` to the nearest boundary component (∞ when closed).
    pub fn boundary_distance(&self, p: &SurfacePoint) -> f64 {
        let mut best = f64::INFINITY;
        for curve in &self.boundary {
            let d = match curve {
                BoundaryCurve::Circle { center, radius, .. } => (radius - (p.pos - *center).norm()).abs(),
                BoundaryCurve::Horizontal { y, .. } => (p.pos.y - y).abs(),
                BoundaryCurve::StarLevel { g, level, center, reach, .. } => {
                    let v = p.pos - *center;
                    let r = v.norm();
                    if r == 0.0 {
                        ray_crossing(g.as_ref(), *level, *center, Vec2::new(1.0, 0.0), *reach)
                    } else {
                        let rb = ray_crossing(g.as_ref(), *level, *center, v / r, *reach);
                        (rb - r).abs()
                    }
                }
            };
            best = best.min(d);
        }
        best
    }

    /// Chart-coordinate bounding boxes, one per chart.
    pub fn bounding_box(&self, chart: usize) -> (Vec2, Vec2) {
        self.charts[chart].bounding_box()
    }

    /// Draws a point roughly uniformly in chart coordinates, at least `margin`
    /// away from the boundary. On the sphere each chart contributes its unit disk.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, margin: f64) -> SurfacePoint {
        let chart = if self.kind == SurfaceKind::Sphere { rng.gen_range(0..2) } else { 0 };
        let (min, max) = match self.kind {
            SurfaceKind::Sphere => (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            _ => self.bounding_box(chart),
        };
        loop {
            let p = SurfacePoint { chart, pos: Vec2::new(rng.gen_range(min.x..max.x), rng.gen_range(min.y..max.y)) };
            let inside = match self.kind {
                SurfaceKind::Sphere => p.pos.norm_sq() <= 1.0,
                _ => self.contains(&p),
            };
            if inside && self.boundary_distance(&p) >= margin {
                return p;
            }
        }
    }
}

/// An area form `γ dx∧dy`, given chart by chart.
#[derive(Clone)]
pub struct AreaForm {
    pub density: Arc<dyn SurfaceFunction>,
    pub label: String,
}

impl fmt::Debug for AreaForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AreaForm").field("label", &self.label).finish()
    }
}

impl AreaForm {
    pub fn new(label: impl Into<String>, density: Arc<dyn SurfaceFunction>) -> Self {
        AreaForm { density, label: label.into() }
    }

    pub fn gamma(&self, p: &SurfacePoint) -> f64 {
        self.density.value(p)
    }

    /// Smallest density value over `n` random points (should be positive).
    pub fn min_density<R: Rng + ?Sized>(&self, surface: &SurfaceModel, n: usize, rng: &mut R) -> f64 {
        (0..n).map(|_| self.gamma(&surface.sample_point(rng, 0.0))).fold(f64::INFINITY, f64::min)
    }

    /// Largest relative mismatch of `γ_to(φ(p))·det Dφ(p)` against `γ_from(p)`
    /// over `n` random overlap points. Zero for single-chart surfaces.
    pub fn compatibility_residual<R: Rng + ?Sized>(&self, surface: &SurfaceModel, n: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for t in &surface.transitions {
            let mut found = 0;
            while found < n {
                let r = rng.gen_range(1.0 / SPHERE_CHART_RADIUS..SPHERE_CHART_RADIUS);
                let a = rng.gen_range(0.0..2.0 * PI);
                let p = SurfacePoint { chart: t.from, pos: Vec2::new(a.cos(), a.sin()) * r };
                let Some(q) = surface.to_chart(&p, t.to) else { continue };
                found += 1;
                let det = t.map.jacobian(p.pos).det();
                let lhs = self.gamma(&q) * det;
                let rhs = self.gamma(&p);
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_has_one_chart_and_one_boundary_circle() {
        let s = make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap();
        assert_eq!(s.charts.len(), 1);
        assert_eq!(s.boundary.len(), 1);
        assert!(s.contains(&SurfacePoint::new(0, 0.6, 0.8)));
        assert!(!s.contains(&SurfacePoint::new(0, 0.8, 0.8)));
    }

    #[test]
    fn torus_is_closed_and_periodic() {
        let s = make_model_surface(SurfaceSpec::FlatTorus { periods: (1.0, 1.0) }).unwrap();
        assert!(s.is_closed());
        assert_eq!(s.periods(0), [Some(1.0), Some(1.0)]);
        let c = s.canonical(&SurfacePoint::new(0, -0.25, 1.5));
        assert!((c.pos.x - 0.75).abs() < 1e-15 && (c.pos.y - 0.5).abs() < 1e-15);
        let d = s.displacement(&SurfacePoint::new(0, 0.95, 0.5), &SurfacePoint::new(0, 0.05, 0.5));
        assert!((d.x - 0.1).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(make_model_surface(SurfaceSpec::Disk { radius: 0.0 }).is_err());
        assert!(make_model_surface(SurfaceSpec::FlatTorus { periods: (1.0, -1.0) }).is_err());
        assert!(make_model_surface(SurfaceSpec::Annulus { period: 1.0, height: 0.0 }).is_err());
    }

    #[test]
    fn twowell_domain_is_a_star_shaped_disk() {
        let s = builtin::twowell_domain();
        assert_eq!(s.kind, SurfaceKind::PlanarSublevel);
        assert_eq!(s.boundary.len(), 1);
        for p in s.boundary[0].sample(64) {
            assert!((builtin::twowell_poly().value(p.pos) - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn level_through_the_saddle_is_singular() {
        let err = make_model_surface(SurfaceSpec::PlanarSublevel {
            g: Arc::new(builtin::twowell_poly()),
            level: 1.0,
            center: Vec2::new(1.0, 0.0),
        })
        .unwrap_err();
        assert_eq!(err, Error::SingularBoundary { level: 1.0 });
    }

    #[test]
    fn sphere_transition_is_orientation_preserving_and_form_compatible() {
        let s = make_model_surface(SurfaceSpec::Sphere).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let r = rng.gen_range(0.5..2.0);
            let a = rng.gen_range(0.0..core::f64::consts::TAU);
            let p = SurfacePoint::new(0, r * a.cos(), r * a.sin());
            assert!(s.transition_jacobian(&p, 1).unwrap().det() > 0.0);
            let back = s.to_chart(&s.to_chart(&p, 1).unwrap(), 0).unwrap();
            assert!((back.pos - p.pos).norm() < 1e-12);
        }
        let form = builtin::standard_form(&s);
        assert!(form.compatibility_residual(&s, 100, &mut rng) < 1e-9);
    }

    #[test]
    fn inversion_jacobian_matches_finite_differences() {
        let p = Vec2::new(0.7, -0.4);
        let j = TransitionMap::Inversion.jacobian(p);
        let h = 1e-6;
        let cx =
            (TransitionMap::Inversion.apply(p + Vec2::new(h, 0.0)) - TransitionMap::Inversion.apply(p - Vec2::new(h, 0.0))) / (2.0 * h);
        let cy =
            (TransitionMap::Inversion.apply(p + Vec2::new(0.0, h)) - TransitionMap::Inversion.apply(p - Vec2::new(0.0, h))) / (2.0 * h);
        assert!(j.sub(&Mat2::from_columns(cx, cy)).frobenius() < 1e-8);
    }
}
