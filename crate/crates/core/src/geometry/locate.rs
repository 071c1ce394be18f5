use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{SurfaceKind, SurfacePoint, TriMesh};
use crate::math::{minimal_image, Vec2};

/// A point expressed as a triangle and barycentric weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
}

struct ChartGrid {
    origin: Vec2,
    cell: f64,
    dims: (usize, usize),
    periodic: [bool; 2],
    buckets: Vec<Vec<u32>>,
}

impl ChartGrid {
    fn cell_of(&self, p: Vec2) -> (isize, isize) {
        (((p.x - self.origin.x) / self.cell).floor() as isize, ((p.y - self.origin.y) / self.cell).floor() as isize)
    }

    fn index(&self, i: isize, j: isize) -> Option<usize> {
        let fix = |k: isize, n: usize, periodic: bool| -> Option<usize> {
            if periodic {
                Some(k.rem_euclid(n as isize) as usize)
            } else if k < 0 || k >= n as isize {
                None
            } else {
                Some(k as usize)
            }
        };
        let i = fix(i, self.dims.0, self.periodic[0])?;
        let j = fix(j, self.dims.1, self.periodic[1])?;
        Some(j * self.dims.0 + i)
    }
}

/// Uniform bucket grid per chart for point-in-triangle queries.
pub struct MeshLocator {
    mesh: Arc<TriMesh>,
    grids: Vec<ChartGrid>,
}

impl MeshLocator {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        let surface = &mesh.surface;
        let mut grids: Vec<ChartGrid> = (0..surface.charts.len())
            .map(|c| {
                let (mut min, mut max) = surface.bounding_box(c);
                if surface.kind == SurfaceKind::Sphere {
                    // Triangles of a sphere chart stay inside its unit disk.
                    min = Vec2::new(-1.0, -1.0);
                    max = Vec2::new(1.0, 1.0);
                }
                let periods = surface.periods(c);
                let cell = (2.0 * mesh.resolution).max(1e-9);
                let nx = (((max.x - min.x) / cell).ceil() as usize).clamp(1, 4096);
                let ny = (((max.y - min.y) / cell).ceil() as usize).clamp(1, 4096);
                let cell = ((max.x - min.x) / nx as f64).max((max.y - min.y) / ny as f64);
                let (nx, ny) = ((((max.x - min.x) / cell).round() as usize).max(1), (((max.y - min.y) / cell).round() as usize).max(1));
                ChartGrid {
                    origin: min,
                    cell,
                    dims: (nx, ny),
                    periodic: [periods[0].is_some(), periods[1].is_some()],
                    buckets: vec![Vec::new(); nx * ny],
                }
            })
            .collect();
        for t in 0..mesh.triangles.len() {
            let grid = &mut grids[mesh.tri_chart[t]];
            let corners = mesh.triangle_coords(t);
            let lo = Vec2::new(
                corners.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
                corners.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
            );
            let hi = Vec2::new(
                corners.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
                corners.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
            );
            let (i0, j0) = grid.cell_of(lo);
            let (i1, j1) = grid.cell_of(hi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if let Some(k) = grid.index(i, j) {
                        if grid.buckets[k].last() != Some(&(t as u32)) {
                            grid.buckets[k].push(t as u32);
                        }
                    }
                }
            }
        }
        MeshLocator { mesh, grids }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    /// Triangle containing `p`. Points slightly outside the mesh (within two
    /// resolutions, e.g. between a curved boundary and its chords) snap to the
    /// nearest triangle.
    pub fn locate(&self, p: &SurfacePoint) -> Option<Location> {
        let mut best: Option<(f64, Location)> = None;
        for chart in self.chart_order(p.chart) {
            let Some(q) = self.mesh.surface.to_chart(p, chart) else { continue };
            let grid = &self.grids[chart];
            let (ci, cj) = grid.cell_of(q.pos);
            for (di, dj) in NEIGHBORHOOD {
                let Some(k) = grid.index(ci + di, cj + dj) else { continue };
                for &t in &grid.buckets[k] {
                    let t = t as usize;
                    let (bary, dist) = self.barycentric(t, q.pos);
                    if dist == 0.0 {
                        return Some(Location { triangle: t, bary });
                    }
                    if best.is_none_or(|(d, _)| dist < d) {
                        best = Some((dist, Location { triangle: t, bary }));
                    }
                }
            }
        }
        best.filter(|(d, _)| *d <= 2.0 * self.mesh.resolution).map(|(_, loc)| loc)
    }

    /// Candidate triangles near `p` in its own chart (used for fallbacks).
    pub fn nearby_triangles(&self, p: &SurfacePoint) -> Vec<usize> {
        let grid = &self.grids[p.chart];
        let (ci, cj) = grid.cell_of(p.pos);
        let mut out = Vec::new();
        for (di, dj) in NEIGHBORHOOD {
            if let Some(k) = grid.index(ci + di, cj + dj) {
                out.extend(grid.buckets[k].iter().map(|&t| t as usize));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// PL interpolation of the mesh values at `p`.
    pub fn interpolate(&self, p: &SurfacePoint) -> Option<f64> {
        let loc = self.locate(p)?;
        let tri = self.mesh.triangles[loc.triangle];
        Some((0..3).map(|k| loc.bary[k] * self.mesh.values[tri[k]]).sum())
    }

    fn chart_order(&self, first: usize) -> impl Iterator<Item = usize> {
        let n = self.grids.len();
        core::iter::once(first).chain((0..n).filter(move |&c| c != first))
    }

    /// Clamped barycentric coordinates of `q` in triangle `t` and its distance
    /// to the triangle (0 when inside).
    fn barycentric(&self, t: usize, q: Vec2) -> ([f64; 3], f64) {
        let [a, b, c] = self.mesh.triangle_coords(t);
        let per = self.mesh.surface.periods(self.mesh.tri_chart[t]);
        let mut d = q - a;
        if let Some(px) = per[0] {
            d.x = minimal_image(d.x, px);
        }
        if let Some(py) = per[1] {
            d.y = minimal_image(d.y, py);
        }
        let q = a + d;
        let det = (b - a).cross(c - a);
        let l1 = (q - a).cross(c - a) / det;
        let l2 = (b - a).cross(q - a) / det;
        let l0 = 1.0 - l1 - l2;
        let eps = -1e-12;
        if det != 0.0 && l0 >= eps && l1 >= eps && l2 >= eps {
            return ([l0.max(0.0), l1.max(0.0), l2.max(0.0)], 0.0);
        }
        let corners = [a, b, c];
        let mut best = (f64::INFINITY, [0.0; 3]);
        for k in 0..3 {
            let (p0, p1) = (corners[k], corners[(k + 1) % 3]);
            let e = p1 - p0;
            let s = ((q - p0).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
            let dist = (q - (p0 + e * s)).norm();
            if dist < best.0 {
                let mut w = [0.0; 3];
                w[k] = 1.0 - s;
                w[(k + 1) % 3] = s;
                best = (dist, w);
            }
        }
        (best.1, best.0)
    }
}

const NEIGHBORHOOD: [(isize, isize); 9] = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_model_surface, triangulate, SurfaceSpec};

    #[test]
    fn locates_interior_points_and_interpolates_linear_data_exactly() {
        let s = make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap();
        let m = triangulate(&s, 0.1).unwrap().with_values(|p| 2.0 * p.pos.x - p.pos.y + 0.5);
        let loc = MeshLocator::new(Arc::new(m));
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.2), (-0.7, 0.6), (0.0, 0.95)] {
            let v = loc.interpolate(&SurfacePoint::new(0, x, y)).unwrap();
            assert!((v - (2.0 * x - y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.locate(&SurfacePoint::new(0, 3.0, 0.0)).is_none());
    }

    #[test]
    fn torus_location_wraps() {
        let s = make_model_surface(SurfaceSpec::FlatTorus { periods: (1.0, 1.0) }).unwrap();
        let m = triangulate(&s, 0.1).unwrap();
        let loc = MeshLocator::new(Arc::new(m));
        assert!(loc.locate(&SurfacePoint::new(0, 0.999, 0.001)).is_some());
        assert!(loc.locate(&SurfacePoint::new(0, 0.0, 0.5)).is_some());
    }

    #[test]
    fn sphere_points_are_found_in_either_chart() {
        let s = make_model_surface(SurfaceSpec::Sphere).unwrap();
        let m = triangulate(&s, 0.1).unwrap();
        let loc = MeshLocator::new(Arc::new(m));
        for &(c, x, y) in &[(0, 0.2, 0.1), (0, 1.5, 0.0), (1, 0.0, -1.9), (1, 0.99, 0.0)] {
            assert!(loc.locate(&SurfacePoint::new(c, x, y)).is_some(), "{c} {x} {y}");
        }
    }
}
