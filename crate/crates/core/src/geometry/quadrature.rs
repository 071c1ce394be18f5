use alloc::vec::Vec;

use super::{AreaForm, SurfacePoint, TriMesh};
use crate::error::{Error, Result};
use crate::math::Vec2;

/// Region selected from the PL field stored on the mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Whole,
    /// `{ f ≤ a }`
    Sublevel(f64),
    /// `{ f ≥ a }`
    Superlevel(f64),
    /// `{ lo ≤ f ≤ hi }`
    Band(f64, f64),
}

/// A polygon vertex carrying the PL field value and the density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipVertex {
    pub pos: Vec2,
    pub value: f64,
    pub gamma: f64,
}

/// Keeps the part of a convex polygon where `value ≤ level` (or `≥` when
/// `keep_above`), interpolating linearly along cut edges.
pub fn clip_polygon(poly: &[ClipVertex], level: f64, keep_above: bool) -> Vec<ClipVertex> {
    let inside = |v: &ClipVertex| if keep_above { v.value >= level } else { v.value <= level };
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        if inside(&p) {
            out.push(p);
        }
        if inside(&p) != inside(&q) {
            let s = (level - p.value) / (q.value - p.value);
            out.push(ClipVertex { pos: p.pos + (q.pos - p.pos) * s, value: level, gamma: p.gamma + (q.gamma - p.gamma) * s });
        }
    }
    out
}

fn polygon_integral(poly: &[ClipVertex]) -> f64 {
    let mut acc = 0.0;
    for k in 1..poly.len().saturating_sub(1) {
        let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
        let area = 0.5 * (b.pos - a.pos).cross(c.pos - a.pos).abs();
        acc += area * (a.gamma + b.gamma + c.gamma) / 3.0;
    }
    acc
}

/// ω-area of `region` inside triangle `t`.
pub(crate) fn triangle_integral(mesh: &TriMesh, form: &AreaForm, t: usize, region: Region) -> f64 {
    let chart = mesh.tri_chart[t];
    let coords = mesh.triangle_coords(t);
    let mut poly: Vec<ClipVertex> = (0..3)
        .map(|k| {
            let v = mesh.triangles[t][k];
            ClipVertex { pos: coords[k], value: mesh.values[v], gamma: form.gamma(&SurfacePoint { chart, pos: coords[k] }) }
        })
        .collect();
    match region {
        Region::Whole => {}
        Region::Sublevel(a) => poly = clip_polygon(&poly, a, false),
        Region::Superlevel(a) => poly = clip_polygon(&poly, a, true),
        Region::Band(lo, hi) => {
            poly = clip_polygon(&poly, hi, false);
            poly = clip_polygon(&poly, lo, true);
        }
    }
    polygon_integral(&poly)
}

/// `∫_region γ dx∧dy` over the mesh, with the region clipped linearly inside
/// each triangle. Exact for PL `γ` and PL field data.
pub fn integrate_density(mesh: &TriMesh, form: &AreaForm, region: Region) -> Result<f64> {
    integrate_density_over(mesh, form, region, 0..mesh.triangles.len())
}

/// As [`integrate_density`], restricted to the listed triangles.
pub fn integrate_density_over(mesh: &TriMesh, form: &AreaForm, region: Region, triangles: impl IntoIterator<Item = usize>) -> Result<f64> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok(triangles.into_iter().map(|t| triangle_integral(mesh, form, t, region)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::function::Constant;
    use crate::geometry::{make_model_surface, triangulate, SurfaceSpec};
    use alloc::sync::Arc;
    use core::f64::consts::PI;

    fn unit_disk_mesh(h: f64) -> TriMesh {
        let s = make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap();
        triangulate(&s, h).unwrap().with_values(|p| p.pos.norm_sq())
    }

    #[test]
    fn unit_disk_area() {
        let m = unit_disk_mesh(0.05);
        let one = AreaForm::new("one", Arc::new(Constant(1.0)));
        let two = AreaForm::new("two", Arc::new(Constant(2.0)));
        let a1 = integrate_density(&m, &one, Region::Whole).unwrap();
        let a2 = integrate_density(&m, &two, Region::Whole).unwrap();
        assert!((a1 - PI).abs() / PI < 0.02);
        assert!((a2 - 2.0 * PI).abs() / (2.0 * PI) < 0.02);
        let fine = integrate_density(&unit_disk_mesh(0.01), &one, Region::Whole).unwrap();
        assert!((fine - PI).abs() / PI < 0.02);
    }

    #[test]
    fn sublevel_and_superlevel_are_additive() {
        let m = unit_disk_mesh(0.1);
        let form = AreaForm::new("tilted", Arc::new(builtin::tilted_density(0.5)));
        let whole = integrate_density(&m, &form, Region::Whole).unwrap();
        let lo = integrate_density(&m, &form, Region::Sublevel(0.3)).unwrap();
        let hi = integrate_density(&m, &form, Region::Superlevel(0.3)).unwrap();
        assert!((lo + hi - whole).abs() <= 1e-12 * whole);
        let band = integrate_density(&m, &form, Region::Band(0.1, 0.3)).unwrap();
        let below = integrate_density(&m, &form, Region::Sublevel(0.1)).unwrap();
        assert!((below + band - lo).abs() <= 1e-12 * whole);
    }

    #[test]
    fn clip_keeps_half_of_a_linear_ramp() {
        let v = |x: f64, y: f64| ClipVertex { pos: Vec2::new(x, y), value: x, gamma: 1.0 };
        let square = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)];
        let left = clip_polygon(&square, 0.5, false);
        assert!((polygon_integral(&left) - 0.5).abs() < 1e-15);
    }
}
