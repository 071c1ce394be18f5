use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, FRAC_1_PI, PI};

#[allow(unused_imports)]
use num_traits::Float;

use super::{ChartDomain, SurfaceKind, SurfaceModel, SurfacePoint};
use crate::error::{Error, Result};
use crate::function::ChartFn;
use crate::math::{minimal_image, Vec2};

const MAX_VERTICES: usize = 20_000_000;

/// A triangulation of a model surface.
///
/// Each triangle lives in a home chart (`tri_chart`); vertices are stored in
/// their own chart and mapped into the home chart on demand. Triangles are
/// counter-clockwise in their home chart.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub surface: SurfaceModel,
    pub vertices: Vec<SurfacePoint>,
    pub triangles: Vec<[usize; 3]>,
    pub tri_chart: Vec<usize>,
    pub values: Vec<f64>,
    /// Boundary component of each vertex, if it lies on the boundary.
    pub boundary_flags: Vec<Option<usize>>,
    pub resolution: f64,
}

impl TriMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Samples `f` at every vertex.
    pub fn with_values(mut self, f: impl Fn(&SurfacePoint) -> f64) -> Self {
        self.values = self.vertices.iter().map(f).collect();
        self
    }

    /// Vertex `v` in chart `chart` (falls back to the vertex's own chart).
    pub fn vertex_in_chart(&self, v: usize, chart: usize) -> Vec2 {
        let p = self.vertices[v];
        self.surface.to_chart(&p, chart).map(|q| q.pos).unwrap_or(p.pos)
    }

    /// Corner coordinates of triangle `t` in its home chart, unwrapped across
    /// periodic identifications relative to the first corner.
    pub fn triangle_coords(&self, t: usize) -> [Vec2; 3] {
        let chart = self.tri_chart[t];
        let [a, b, c] = self.triangles[t];
        let pa = self.vertex_in_chart(a, chart);
        let per = self.surface.periods(chart);
        let unwrap = |q: Vec2| {
            let mut d = q - pa;
            if let Some(px) = per[0] {
                d.x = minimal_image(d.x, px);
            }
            if let Some(py) = per[1] {
                d.y = minimal_image(d.y, py);
            }
            pa + d
        };
        [pa, unwrap(self.vertex_in_chart(b, chart)), unwrap(self.vertex_in_chart(c, chart))]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * (b - a).cross(c - a)
    }

    /// Unique undirected edges `(lo, hi)`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> =
            self.triangles.iter().flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)]).map(|(u, v)| (u.min(v), u.max(v))).collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Map from undirected edge to the triangles containing it.
    pub fn edge_triangles(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut m: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                m.entry((u.min(v), u.max(v))).or_default().push(t);
            }
        }
        m
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    /// Edges used by exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_triangles().into_iter().filter(|(_, ts)| ts.len() == 1).map(|(e, _)| e).collect()
    }

    /// Number of closed loops formed by boundary edges.
    pub fn boundary_loop_count(&self) -> usize {
        let edges = self.boundary_edges();
        let mut uf = crate::reeb::UnionFind::new(self.vertices.len());
        let mut touched = vec![false; self.vertices.len()];
        for &(a, b) in &edges {
            uf.union(a, b);
            touched[a] = true;
            touched[b] = true;
        }
        let mut roots: Vec<usize> = (0..self.vertices.len()).filter(|&v| touched[v]).map(|v| uf.find(v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_coords(t);
            worst = worst.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }
        worst
    }

    /// Every edge used by at most two triangles.
    pub fn is_manifold(&self) -> bool {
        self.edge_triangles().values().all(|ts| ts.len() <= 2)
    }

    /// Whether all triangles have non-negative orientation in their home chart.
    pub fn uniformly_oriented(&self) -> bool {
        let scale = self.resolution * self.resolution;
        (0..self.triangles.len()).all(|t| self.signed_area(t) > -1e-12 * scale)
    }

    /// Vertex-to-vertex adjacency lists (sorted, deduplicated).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for &[a, b, c] in &self.triangles {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                nb[u].push(v);
                nb[v].push(u);
            }
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut vt = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vt[v].push(t);
            }
        }
        vt
    }
}

/// Triangulates `surface` with target edge length `resolution`.
pub fn triangulate(surface: &SurfaceModel, resolution: f64) -> Result<TriMesh> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidParams(format!("resolution must be positive, got {resolution}")));
    }
    let builder = match surface.kind {
        SurfaceKind::Disk => {
            let ChartDomain::Disk { center, radius } = surface.charts[0].domain else {
                return Err(Error::InvalidParams("disk surface with non-disk chart".into()));
            };
            estimate_guard(PI * radius * radius, resolution)?;
            let mut b = Builder::default();
            let ring = b.ring_disk(0, center, radius, resolution);
            for v in ring {
                b.boundary[v] = Some(0);
            }
            b
        }
        SurfaceKind::Sphere => {
            estimate_guard(2.0 * PI, resolution)?;
            sphere(resolution)
        }
        SurfaceKind::Annulus | SurfaceKind::FlatTorus => {
            let (_, max) = surface.bounding_box(0);
            estimate_guard(max.x * max.y, resolution)?;
            periodic_grid(max.x, max.y, surface.kind == SurfaceKind::FlatTorus, resolution)?
        }
        SurfaceKind::PlanarSublevel => {
            let ChartDomain::Sublevel { g, level, .. } = &surface.charts[0].domain else {
                return Err(Error::InvalidParams("sublevel surface with wrong chart".into()));
            };
            let samples = surface.boundary[0].sample(512);
            let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
            let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in &samples {
                min = Vec2::new(min.x.min(p.pos.x), min.y.min(p.pos.y));
                max = Vec2::new(max.x.max(p.pos.x), max.y.max(p.pos.y));
            }
            estimate_guard((max.x - min.x) * (max.y - min.y), resolution)?;
            clipped_grid(g.as_ref(), *level, min, max, resolution)
        }
    };
    Ok(TriMesh {
        surface: surface.clone(),
        values: vec![0.0; builder.verts.len()],
        vertices: builder.verts,
        triangles: builder.tris,
        tri_chart: builder.tri_chart,
        boundary_flags: builder.boundary,
        resolution,
    })
}

/// As [`triangulate`], but fails when two of `marks` are fewer than three mesh
/// spacings apart.
pub fn triangulate_separating(surface: &SurfaceModel, resolution: f64, marks: &[SurfacePoint]) -> Result<TriMesh> {
    for (i, a) in marks.iter().enumerate() {
        for b in &marks[i + 1..] {
            if surface.distance(a, b) < 3.0 * resolution {
                return Err(Error::ResolutionTooCoarse { resolution, a: a.pos, b: b.pos });
            }
        }
    }
    triangulate(surface, resolution)
}

fn estimate_guard(area: f64, h: f64) -> Result<()> {
    if area / (h * h) * 1.3 > MAX_VERTICES as f64 {
        return Err(Error::InvalidParams(format!("resolution {h} would produce too many vertices")));
    }
    Ok(())
}

#[derive(Default)]
struct Builder {
    verts: Vec<SurfacePoint>,
    tris: Vec<[usize; 3]>,
    tri_chart: Vec<usize>,
    boundary: Vec<Option<usize>>,
}

impl Builder {
    fn vertex(&mut self, chart: usize, p: Vec2) -> usize {
        self.verts.push(SurfacePoint { chart, pos: p });
        self.boundary.push(None);
        self.verts.len() - 1
    }

    /// Adds a triangle counter-clockwise in `chart` coordinates (`coords` are
    /// the corner positions in that chart).
    fn triangle(&mut self, chart: usize, idx: [usize; 3], coords: [Vec2; 3]) {
        let area = (coords[1] - coords[0]).cross(coords[2] - coords[0]);
        let idx = if area < 0.0 { [idx[0], idx[2], idx[1]] } else { idx };
        self.tris.push(idx);
        self.tri_chart.push(chart);
    }

    /// Concentric-ring triangulation of a disk; returns the outer ring's indices.
    fn ring_disk(&mut self, chart: usize, center: Vec2, radius: f64, h: f64) -> Vec<usize> {
        let n = (radius / h).ceil().max(1.0) as usize;
        let c = self.vertex(chart, center);
        let mut inner: Vec<(usize, Vec2)> = Vec::new();
        for k in 1..=n {
            let r = radius * k as f64 / n as f64;
            let m = ((2.0 * PI * r / h).ceil() as usize).max(6);
            let ring: Vec<(usize, Vec2)> = (0..m)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / m as f64;
                    let p = center + Vec2::new(a.cos(), a.sin()) * r;
                    (self.vertex(chart, p), p)
                })
                .collect();
            if k == 1 {
                for i in 0..m {
                    let (a, pa) = ring[i];
                    let (b, pb) = ring[(i + 1) % m];
                    self.triangle(chart, [c, a, b], [center, pa, pb]);
                }
            } else {
                self.stitch_rings(chart, &inner, &ring);
            }
            inner = ring;
        }
        inner.into_iter().map(|(i, _)| i).collect()
    }

    fn stitch_rings(&mut self, chart: usize, inner: &[(usize, Vec2)], outer: &[(usize, Vec2)]) {
        let (mi, mo) = (inner.len(), outer.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < mi || j < mo {
            let (a, pa) = inner[i % mi];
            let (b, pb) = outer[j % mo];
            // Advance along the ring whose next vertex gives the shorter diagonal.
            let advance_outer = j < mo && (i == mi || (outer[(j + 1) % mo].1 - pa).norm() <= (inner[(i + 1) % mi].1 - pb).norm());
            if advance_outer {
                let (c, pc) = outer[(j + 1) % mo];
                self.triangle(chart, [a, b, c], [pa, pb, pc]);
                j += 1;
            } else {
                let (c, pc) = inner[(i + 1) % mi];
                self.triangle(chart, [a, b, c], [pa, pb, pc]);
                i += 1;
            }
        }
    }
}

/// Two ring disks `|z| ≤ 1` (one per stereographic chart) glued along the
/// equator by nearest-vertex matching.
fn sphere(h: f64) -> Builder {
    let mut b = Builder::default();
    let ring0 = b.ring_disk(0, Vec2::ZERO, 1.0, h);
    let start1 = b.verts.len();
    let ring1 = b.ring_disk(1, Vec2::ZERO, 1.0, h);
    let tol = h / 4.0;
    let mut remap: Vec<usize> = (0..b.verts.len()).collect();
    for &w in &ring1 {
        let p = b.verts[w].pos;
        let z = Vec2::new(p.x, -p.y) / p.norm_sq();
        let (best, dist) =
            ring0
                .iter()
                .map(|&v| (v, (b.verts[v].pos - z).norm()))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        assert!(dist <= tol, "sphere equator rings failed to match ({dist} > {tol})");
        remap[w] = best;
    }
    // Drop the duplicated equator vertices of chart 1 and renumber.
    let mut new_index = vec![usize::MAX; b.verts.len()];
    let mut verts = Vec::new();
    let mut boundary = Vec::new();
    for v in 0..b.verts.len() {
        if v >= start1 && remap[v] != v {
            continue;
        }
        new_index[v] = verts.len();
        verts.push(b.verts[v]);
        boundary.push(None);
    }
    for tri in &mut b.tris {
        for v in tri.iter_mut() {
            *v = new_index[remap[*v]];
        }
    }
    b.verts = verts;
    b.boundary = boundary;
    b
}

fn periodic_grid(px: f64, py: f64, periodic_y: bool, h: f64) -> Result<Builder> {
    let nx = (px / h).ceil().max(3.0) as usize;
    let ny = (py / h).ceil().max(if periodic_y { 3.0 } else { 1.0 }) as usize;
    let rows = if periodic_y { ny } else { ny + 1 };
    let mut b = Builder::default();
    for j in 0..rows {
        for i in 0..nx {
            let v = b.vertex(0, Vec2::new(px * i as f64 / nx as f64, py * j as f64 / ny as f64));
            if !periodic_y && (j == 0 || j == ny) {
                b.boundary[v] = Some(if j == 0 { 0 } else { 1 });
            }
        }
    }
    let idx = |i: usize, j: usize| (j % rows) * nx + (i % nx);
    let (dx, dy) = (px / nx as f64, py / ny as f64);
    for j in 0..ny {
        for i in 0..nx {
            let o = Vec2::new(dx * i as f64, dy * j as f64);
            let (p00, p10, p11, p01) = (o, o + Vec2::new(dx, 0.0), o + Vec2::new(dx, dy), o + Vec2::new(0.0, dy));
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            b.triangle(0, [v00, v10, v11], [p00, p10, p11]);
            b.triangle(0, [v00, v11, v01], [p00, p11, p01]);
        }
    }
    Ok(b)
}

/// Square grid over the bounding box, cut along `g = level` by marching
/// triangles with crossing points refined onto the true level curve.
fn clipped_grid(g: &dyn ChartFn, level: f64, min: Vec2, max: Vec2, h: f64) -> Builder {
    // Offset the lattice so that no node sits on a symmetry axis of the domain.
    let origin = min - Vec2::new(h, h) + Vec2::new(FRAC_1_PI * h, 0.1 * E * h);
    let nx = ((max.x - origin.x) / h).ceil() as usize + 2;
    let ny = ((max.y - origin.y) / h).ceil() as usize + 2;
    let node_pos = |i: usize, j: usize| origin + Vec2::new(i as f64 * h, j as f64 * h);
    let node_id = |i: usize, j: usize| j * nx + i;
    let values: Vec<f64> = (0..ny).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| g.value(node_pos(i, j))).collect();
    let inside = |n: usize| values[n] <= level;

    let mut b = Builder::default();
    let mut node_vertex: Vec<usize> = vec![usize::MAX; nx * ny];
    let mut crossing: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let pos_of = |n: usize| node_pos(n % nx, n / nx);

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let cells =
                [[node_id(i, j), node_id(i + 1, j), node_id(i + 1, j + 1)], [node_id(i, j), node_id(i + 1, j + 1), node_id(i, j + 1)]];
            for tri in cells {
                let count = tri.iter().filter(|&&n| inside(n)).count();
                if count == 0 {
                    continue;
                }
                let mut poly: Vec<(usize, Vec2)> = Vec::with_capacity(4);
                for k in 0..3 {
                    let (a, c) = (tri[k], tri[(k + 1) % 3]);
                    if inside(a) {
                        if node_vertex[a] == usize::MAX {
                            node_vertex[a] = b.vertex(0, pos_of(a));
                        }
                        poly.push((node_vertex[a], pos_of(a)));
                    }
                    if inside(a) != inside(c) {
                        let key = (a.min(c), a.max(c));
                        let v = match crossing.get(&key) {
                            Some(&v) => v,
                            None => {
                                let (pin, pout) = if inside(a) { (pos_of(a), pos_of(c)) } else { (pos_of(c), pos_of(a)) };
                                let p = refine_crossing(g, level, pin, pout);
                                let v = b.vertex(0, p);
                                b.boundary[v] = Some(0);
                                crossing.insert(key, v);
                                v
                            }
                        };
                        poly.push((v, b.verts[v].pos));
                    }
                }
                for k in 1..poly.len() - 1 {
                    let (a, pa) = poly[0];
                    let (c, pc) = poly[k];
                    let (d, pd) = poly[k + 1];
                    b.triangle(0, [a, c, d], [pa, pc, pd]);
                }
            }
        }
    }
    b
}

fn refine_crossing(g: &dyn ChartFn, level: f64, pin: Vec2, pout: Vec2) -> Vec2 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g.value(pin + (pout - pin) * mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    pin + (pout - pin) * lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::geometry::{make_model_surface, SurfaceSpec};

    #[test]
    fn unit_disk_mesh_is_a_disk() {
        let s = make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap();
        let m = triangulate(&s, 0.5).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loop_count(), 1);
        assert!(m.is_manifold());
        assert!(m.uniformly_oriented());
        assert!(m.max_edge_length() <= 1.5 * 0.5);
    }

    #[test]
    fn flat_torus_mesh_is_closed_with_zero_euler_characteristic() {
        let s = make_model_surface(SurfaceSpec::FlatTorus { periods: (1.0, 1.0) }).unwrap();
        let m = triangulate(&s, 0.1).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_edges().len(), 0);
        assert!(m.uniformly_oriented());
        assert!(m.max_edge_length() <= 0.15 + 1e-12);
    }

    #[test]
    fn annulus_mesh_has_two_boundary_loops() {
        let s = make_model_surface(SurfaceSpec::Annulus { period: 1.0, height: 1.0 }).unwrap();
        let m = triangulate(&s, 0.1).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.boundary_loop_count(), 2);
    }

    #[test]
    fn sphere_mesh_is_closed_with_euler_characteristic_two() {
        let s = make_model_surface(SurfaceSpec::Sphere).unwrap();
        let m = triangulate(&s, 0.1).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.boundary_edges().is_empty());
        assert!(m.is_manifold());
        assert!(m.uniformly_oriented());
    }

    #[test]
    fn twowell_domain_mesh() {
        let s = builtin::twowell_domain();
        let m = triangulate(&s, 0.05).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loop_count(), 1);
        assert!(m.is_manifold());
        assert!(m.uniformly_oriented());
        assert!(m.max_edge_length() <= 1.5 * 0.05);
    }

    #[test]
    fn triangulation_is_deterministic() {
        let s = builtin::twowell_domain();
        let a = triangulate(&s, 0.1).unwrap();
        let b = triangulate(&s, 0.1).unwrap();
        assert_eq!(a.triangles, b.triangles);
        assert_eq!(a.vertices, b.vertices);
    }

    #[test]
    fn coarse_resolution_cannot_separate_marks() {
        let s = builtin::twowell_domain();
        let marks = [SurfacePoint::new(0, -1.0, 0.0), SurfacePoint::new(0, 0.0, 0.0)];
        assert!(matches!(triangulate_separating(&s, 0.5, &marks), Err(Error::ResolutionTooCoarse { .. })));
        assert!(triangulate_separating(&s, 0.2, &marks).is_ok());
    }

    #[test]
    fn non_positive_resolution_is_rejected() {
        let s = make_model_surface(SurfaceSpec::Disk { radius: 1.0 }).unwrap();
        assert!(triangulate(&s, 0.0).is_err());
        assert!(triangulate(&s, f64::NAN).is_err());
    }
}
