// The sweep walks several parallel per-triangle and per-slab arrays by index.
#![allow(clippy::needless_range_loop)]

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use super::UnionFind;
use crate::error::{Error, Result};
use crate::fields::{Codomain, CriticalKind, CriticalPoint, ScalarField};
use crate::geometry::{triangulate, MeshLocator, SurfaceModel, SurfacePoint, TriMesh};
use crate::math::wrap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Min,
    Max,
    Saddle,
    BoundaryLevel,
    DegenerateDeclared,
    /// Marks where a circle-valued field is cut open.
    Cut,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Min => "Min",
            NodeKind::Max => "Max",
            NodeKind::Saddle => "Saddle",
            NodeKind::BoundaryLevel => "BoundaryLevel",
            NodeKind::DegenerateDeclared => "DegenerateDeclared",
            NodeKind::Cut => "Cut",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReebNode {
    pub id: usize,
    pub kind: NodeKind,
    pub value: f64,
    /// The critical point, or a point of the boundary component.
    pub position: SurfacePoint,
    pub boundary: Option<usize>,
}

/// An edge from its lower node to its upper node; the parameter `t ∈ [0, 1]`
/// is affine in the value of the field.
#[derive(Clone, Debug, PartialEq)]
pub struct ReebEdge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub f_range: (f64, f64),
    pub representative: SurfacePoint,
    segments: Vec<(usize, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphPoint {
    Node(usize),
    Edge { edge: usize, t: f64 },
}

const NONE: u32 = u32::MAX;

/// Vertex ordering with simulated perturbation: value first, then index.
/// Boundary vertices share the key of their component.
type Key = (f64, i64);

fn key_cmp(a: &Key, b: &Key) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn lt(a: &Key, b: &Key) -> bool {
    key_cmp(a, b) == Ordering::Less
}

/// The space of level-set components of a field, computed by a sweep over a
/// triangulation.
pub struct ReebGraph {
    pub nodes: Vec<ReebNode>,
    pub edges: Vec<ReebEdge>,
    pub field: ScalarField,
    pub resolution: f64,
    /// Largest gradient norm over mesh vertices.
    pub max_gradient: f64,
    locator: MeshLocator,
    pl: Vec<f64>,
    levels: Vec<f64>,
    slabs: Vec<Vec<u32>>,
    slab_edge: Vec<Vec<u32>>,
}

impl core::fmt::Debug for ReebGraph {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ReebGraph").field("nodes", &self.nodes).field("edges", &self.edges).finish()
    }
}

struct Sweep<'a> {
    mesh: &'a TriMesh,
    keys: Vec<Key>,
    tri_adj: Vec<[Option<usize>; 3]>,
    vert_tris: Vec<Vec<usize>>,
}

impl<'a> Sweep<'a> {
    fn tri_range(&self, t: usize) -> (Key, Key) {
        let [a, b, c] = self.mesh.triangles[t];
        let mut ks = [self.keys[a], self.keys[b], self.keys[c]];
        ks.sort_by(key_cmp);
        (ks[0], ks[2])
    }

    fn meets(&self, t: usize, lower: Option<&Key>, upper: Option<&Key>) -> bool {
        let (lo, hi) = self.tri_range(t);
        upper.is_none_or(|u| lt(&lo, u)) && lower.is_none_or(|l| lt(l, &hi))
    }

    /// Components of `{lower < f̃ < upper}`, as triangle labels.
    fn slab(&self, lower: Option<&Key>, upper: Option<&Key>) -> Vec<u32> {
        let nt = self.mesh.triangles.len();
        let inside: Vec<bool> = (0..nt).map(|t| self.meets(t, lower, upper)).collect();
        let open = |k: &Key| lower.is_none_or(|l| lt(l, k)) && upper.is_none_or(|u| lt(k, u));
        let mut uf = UnionFind::new(nt);
        for t in 0..nt {
            if !inside[t] {
                continue;
            }
            let tri = self.mesh.triangles[t];
            for k in 0..3 {
                let (u, w) = (tri[k], tri[(k + 1) % 3]);
                let (a, b) = if lt(&self.keys[u], &self.keys[w]) { (self.keys[u], self.keys[w]) } else { (self.keys[w], self.keys[u]) };
                let edge_meets = upper.is_none_or(|up| lt(&a, up)) && lower.is_none_or(|l| lt(l, &b));
                if edge_meets {
                    if let Some(n) = self.tri_adj[t][k] {
                        uf.union(t, n);
                    }
                }
                if open(&self.keys[u]) {
                    for &n in &self.vert_tris[u] {
                        uf.union(t, n);
                    }
                }
            }
        }
        let (labels, _) = uf.labels((0..nt).filter(|&t| inside[t]));
        labels.into_iter().map(|l| if l == usize::MAX { NONE } else { l as u32 }).collect()
    }

    /// Components of `{f̃ = level}`: one root per triangle that meets the level.
    fn level(&self, level: &Key) -> (Vec<Option<usize>>, UnionFind) {
        let nv = self.mesh.vertices.len();
        let nt = self.mesh.triangles.len();
        let mut uf = UnionFind::new(nv + 3 * nt);
        let mut tri_elem = vec![None; nt];
        for t in 0..nt {
            let tri = self.mesh.triangles[t];
            let mut first: Option<usize> = None;
            for k in 0..3 {
                let (u, w) = (tri[k], tri[(k + 1) % 3]);
                let mut elems: [Option<usize>; 2] = [None, None];
                if key_cmp(&self.keys[u], level) == Ordering::Equal {
                    elems[0] = Some(u);
                }
                let (a, b) = if lt(&self.keys[u], &self.keys[w]) { (self.keys[u], self.keys[w]) } else { (self.keys[w], self.keys[u]) };
                if lt(&a, level) && lt(level, &b) {
                    // Edge elements are identified through the neighbouring triangle.
                    let id = match self.tri_adj[t][k] {
                        Some(n) if n < t => {
                            let nk = (0..3)
                                .find(|&j| {
                                    let nt_ = self.mesh.triangles[n];
                                    let (x, y) = (nt_[j], nt_[(j + 1) % 3]);
                                    (x == u && y == w) || (x == w && y == u)
                                })
                                .unwrap_or(0);
                            nv + 3 * n + nk
                        }
                        _ => nv + 3 * t + k,
                    };
                    elems[1] = Some(id);
                }
                for e in elems.into_iter().flatten() {
                    match first {
                        Some(f0) => {
                            uf.union(f0, e);
                        }
                        None => first = Some(e),
                    }
                }
            }
            tri_elem[t] = first;
        }
        (tri_elem, uf)
    }
}

enum LevelSource {
    Critical { vertex: usize, crit: usize, pl_kind: NodeKind },
    Boundary { component: usize, vertex: usize },
}

fn triangle_adjacency(mesh: &TriMesh) -> Vec<[Option<usize>; 3]> {
    let et = mesh.edge_triangles();
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let mut adj = [None; 3];
            for k in 0..3 {
                let (u, w) = (tri[k], tri[(k + 1) % 3]);
                if let Some(ts) = et.get(&(u.min(w), u.max(w))) {
                    adj[k] = ts.iter().copied().find(|&n| n != t);
                }
            }
            adj
        })
        .collect()
}

/// Sign changes of `key(u) − key(v)` around the link of an interior vertex.
fn link_changes(mesh: &TriMesh, keys: &[Key], v: usize, tris: &[usize]) -> Option<(usize, bool)> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &t in tris {
        let tri = mesh.triangles[t];
        let others: Vec<usize> = tri.iter().copied().filter(|&u| u != v).collect();
        if others.len() != 2 {
            return None;
        }
        adj.entry(others[0]).or_default().push(others[1]);
        adj.entry(others[1]).or_default().push(others[0]);
    }
    if adj.values().any(|n| n.len() != 2) {
        return None;
    }
    let start = *adj.keys().next()?;
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0];
    while cur != start {
        cycle.push(cur);
        let nb = &adj[&cur];
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
        if cycle.len() > adj.len() {
            return None;
        }
    }
    if cycle.len() != adj.len() {
        return None;
    }
    let signs: Vec<bool> = cycle.iter().map(|&u| lt(&keys[v], &keys[u])).collect();
    let n = signs.len();
    let changes = (0..n).filter(|&i| signs[i] != signs[(i + 1) % n]).count();
    Some((changes, signs[0]))
}

/// Builds the Reeb graph of `f` from a triangulation at `resolution`.
/// `crits` are the critical points of `f`; every PL critical vertex must lie
/// within two resolutions of one of them.
pub fn build_reeb_graph(f: &ScalarField, surface: &SurfaceModel, crits: &[CriticalPoint], resolution: f64) -> Result<ReebGraph> {
    let mesh = triangulate(surface, resolution)?.with_values(|p| f.value(p));
    let max_gradient = mesh.vertices.iter().map(|p| f.gradient(p).norm()).fold(0.0, f64::max);
    if let Codomain::Circle { period } = f.codomain {
        if !crits.is_empty() {
            return Err(Error::InvalidParams(format!(
                "circle-valued field {} has critical points; only submersions are supported",
                f.name
            )));
        }
        return Ok(circle_graph(f, mesh, period, max_gradient));
    }

    let nv = mesh.vertices.len();
    let nb = surface.boundary.len();
    let mut bsum = vec![0.0; nb];
    let mut bcount = vec![0usize; nb];
    let mut bvertex = vec![usize::MAX; nb];
    for v in 0..nv {
        if let Some(b) = mesh.boundary_flags[v] {
            bsum[b] += mesh.values[v];
            bcount[b] += 1;
            bvertex[b] = bvertex[b].min(v);
        }
    }
    let bval: Vec<f64> = (0..nb).map(|b| bsum[b] / bcount[b].max(1) as f64).collect();
    let mut pl = mesh.values.clone();
    let keys: Vec<Key> = (0..nv)
        .map(|v| match mesh.boundary_flags[v] {
            Some(b) => {
                pl[v] = bval[b];
                (bval[b], -1 - b as i64)
            }
            None => (mesh.values[v], v as i64),
        })
        .collect();

    let sweep = Sweep { mesh: &mesh, keys, tri_adj: triangle_adjacency(&mesh), vert_tris: mesh.vertex_triangles() };

    // PL critical vertices, matched to the true critical points.
    let mut sources: Vec<(Key, LevelSource)> = Vec::new();
    let mut matched = vec![false; crits.len()];
    for v in 0..nv {
        if mesh.boundary_flags[v].is_some() {
            continue;
        }
        let Some((changes, above)) = link_changes(&mesh, &sweep.keys, v, &sweep.vert_tris[v]) else { continue };
        let pl_kind = match changes {
            0 if above => NodeKind::Min,
            0 => NodeKind::Max,
            2 => continue,
            _ => NodeKind::Saddle,
        };
        let p = mesh.vertices[v];
        let nearest = crits.iter().enumerate().map(|(i, c)| (i, surface.distance(&c.position, &p))).min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, d)) if d <= 2.0 * resolution && !matched[i] => {
                matched[i] = true;
                sources.push((sweep.keys[v], LevelSource::Critical { vertex: v, crit: i, pl_kind }));
            }
            _ => return Err(Error::SpuriousCritical { at: p.pos }),
        }
    }
    if let Some(i) = matched.iter().position(|m| !m) {
        return Err(Error::InconsistentTopology(format!(
            "critical point at {:?} has no PL counterpart at resolution {resolution}",
            crits[i].position.pos
        )));
    }
    for b in 0..nb {
        if bcount[b] > 0 {
            sources.push(((bval[b], -1 - b as i64), LevelSource::Boundary { component: b, vertex: bvertex[b] }));
        }
    }
    sources.sort_by(|a, b| key_cmp(&a.0, &b.0));
    let level_keys: Vec<Key> = sources.iter().map(|s| s.0).collect();
    let nl = level_keys.len();

    let slabs: Vec<Vec<u32>> =
        (0..=nl).map(|j| sweep.slab(if j == 0 { None } else { Some(&level_keys[j - 1]) }, level_keys.get(j))).collect();
    let mut offsets = vec![0usize; nl + 2];
    for j in 0..=nl {
        let count = slabs[j].iter().filter(|&&l| l != NONE).map(|&l| l as usize + 1).max().unwrap_or(0);
        offsets[j + 1] = offsets[j] + count;
    }
    let nseg = offsets[nl + 1];
    let mut seg_uf = UnionFind::new(nseg);
    // (node, segment, node is the lower end)
    let mut incidences: Vec<(usize, usize, bool)> = Vec::new();
    let mut nodes = Vec::new();

    for (k, (key, src)) in sources.iter().enumerate() {
        let (tri_elem, mut uf) = sweep.level(key);
        let node_vertex = match src {
            LevelSource::Critical { vertex, .. } => *vertex,
            LevelSource::Boundary { vertex, .. } => *vertex,
        };
        let node_root = uf.find(node_vertex);
        let mut touching: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
        for t in 0..mesh.triangles.len() {
            let Some(e) = tri_elem[t] else { continue };
            let root = uf.find(e);
            let below = slabs[k][t];
            if below != NONE {
                touching.entry(root).or_default().push((offsets[k] + below as usize, false));
            }
            let above = slabs[k + 1][t];
            if above != NONE {
                touching.entry(root).or_default().push((offsets[k + 1] + above as usize, true));
            }
        }
        let node_id = nodes.len();
        let (kind, value, position, boundary) = match src {
            LevelSource::Critical { crit, pl_kind, .. } => {
                let c = &crits[*crit];
                let kind = match c.kind {
                    CriticalKind::DeclaredHomogeneous(_) => NodeKind::DegenerateDeclared,
                    _ => *pl_kind,
                };
                (kind, c.value, c.position, None)
            }
            LevelSource::Boundary { component, vertex } => {
                (NodeKind::BoundaryLevel, bval[*component], mesh.vertices[*vertex], Some(*component))
            }
        };
        nodes.push(ReebNode { id: node_id, kind, value, position, boundary });
        for (root, segs) in touching {
            if root == node_root {
                incidences.extend(segs.into_iter().map(|(s, up)| (node_id, s, up)));
            } else {
                let first = segs[0].0;
                for (s, _) in segs {
                    seg_uf.union(first, s);
                }
            }
        }
    }

    // Each class of segments is one edge, with one lower and one upper node.
    let mut ends: BTreeMap<usize, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for &(node, seg, node_is_lower) in &incidences {
        let root = seg_uf.find(seg);
        let slot = ends.entry(root).or_insert((None, None));
        let target = if node_is_lower { &mut slot.0 } else { &mut slot.1 };
        match target {
            Some(existing) if *existing != node => {
                return Err(Error::InconsistentTopology(format!("edge touches nodes {existing} and {node} at the same end")));
            }
            _ => *target = Some(node),
        }
    }
    let mut classes: Vec<(usize, usize, usize)> = Vec::new();
    for (root, (lo, hi)) in &ends {
        match (lo, hi) {
            (Some(a), Some(b)) => classes.push((*a, *b, *root)),
            _ => return Err(Error::InconsistentTopology(format!("edge class {root} has a free end"))),
        }
    }
    classes.sort();
    let mut slab_edge: Vec<Vec<u32>> = (0..=nl).map(|j| vec![NONE; offsets[j + 1] - offsets[j]]).collect();
    let mut edges = Vec::with_capacity(classes.len());
    for (id, &(from, to, root)) in classes.iter().enumerate() {
        let mut segments = Vec::new();
        for j in 0..=nl {
            for c in 0..offsets[j + 1] - offsets[j] {
                if seg_uf.find(offsets[j] + c) == root {
                    slab_edge[j][c] = id as u32;
                    segments.push((j, c as u32));
                }
            }
        }
        edges.push(ReebEdge {
            id,
            from,
            to,
            f_range: (nodes[from].value, nodes[to].value),
            representative: nodes[from].position,
            segments,
        });
    }
    for j in 0..=nl {
        for c in 0..slab_edge[j].len() {
            if slab_edge[j][c] == NONE {
                return Err(Error::InconsistentTopology(format!("slab {j} component {c} is not attached to any node")));
            }
        }
    }

    let levels = level_keys.iter().map(|k| k.0).collect();
    let mut graph = ReebGraph {
        nodes,
        edges,
        field: f.clone(),
        resolution,
        max_gradient,
        locator: MeshLocator::new(Arc::new(TriMesh { values: pl.clone(), ..mesh })),
        pl,
        levels,
        slabs,
        slab_edge,
    };
    for e in 0..graph.edges.len() {
        if let Some(p) = graph.level_points(e, 0.5, 1).first() {
            graph.edges[e].representative = *p;
        }
    }
    Ok(graph)
}

fn circle_graph(f: &ScalarField, mesh: TriMesh, period: f64, max_gradient: f64) -> ReebGraph {
    let cut = mesh.vertices[0];
    let value = wrap(f.value(&cut), period);
    let nt = mesh.triangles.len();
    let pl = mesh.values.clone();
    let mut graph = ReebGraph {
        nodes: vec![ReebNode { id: 0, kind: NodeKind::Cut, value, position: cut, boundary: None }],
        edges: vec![ReebEdge { id: 0, from: 0, to: 0, f_range: (value, value + period), representative: cut, segments: vec![(0, 0)] }],
        field: f.clone(),
        resolution: mesh.resolution,
        max_gradient,
        locator: MeshLocator::new(Arc::new(mesh)),
        pl,
        levels: Vec::new(),
        slabs: vec![vec![0; nt]],
        slab_edge: vec![vec![0]],
    };
    if let Some(p) = graph.level_points(0, 0.5, 1).first() {
        graph.edges[0].representative = *p;
    }
    graph
}

impl ReebGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn codomain(&self) -> Codomain {
        self.field.codomain
    }

    pub fn mesh(&self) -> &TriMesh {
        self.locator.mesh()
    }

    pub fn locator(&self) -> &MeshLocator {
        &self.locator
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().map(|e| (e.from == node) as usize + (e.to == node) as usize).sum()
    }

    /// Edges at `node`, each with a flag telling whether `node` is its lower end.
    pub fn incident_edges(&self, node: usize) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.from == node {
                out.push((e.id, true));
            }
            if e.to == node {
                out.push((e.id, false));
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            uf.union(e.from, e.to);
        }
        let r = uf.find(0);
        (0..self.nodes.len()).all(|n| uf.find(n) == r)
    }

    /// First Betti number `E − V + 1` of a connected graph.
    pub fn betti1(&self) -> i64 {
        self.edges.len() as i64 - self.nodes.len() as i64 + 1
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Field value at parameter `t` of an edge.
    pub fn edge_value(&self, edge: usize, t: f64) -> f64 {
        let (a, b) = self.edges[edge].f_range;
        a + t * (b - a)
    }

    /// Parameter of value `s` on an edge, clamped to `[0, 1]`.
    pub fn edge_param(&self, edge: usize, s: f64) -> f64 {
        let (a, b) = self.edges[edge].f_range;
        match self.field.codomain {
            Codomain::Circle { period } => wrap(s - a, period) / period,
            Codomain::Line => ((s - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    fn slab_of_value(&self, s: f64) -> usize {
        self.levels.iter().filter(|&&l| l < s).count()
    }

    /// Edge whose level component contains `x`, with the parameter of `f(x)`.
    fn locate_edge(&self, x: &SurfacePoint) -> Result<(usize, f64)> {
        let loc = self.locator.locate(x).ok_or(Error::OutsideMesh(x.pos))?;
        let s = self.field.value(x);
        if self.field.codomain != Codomain::Line {
            return Ok((0, self.edge_param(0, s)));
        }
        let tri = self.mesh().triangles[loc.triangle];
        let v_pl: f64 = (0..3).map(|k| loc.bary[k] * self.pl[tri[k]]).sum();
        let j = self.slab_of_value(v_pl);
        let candidates = [Some(j), j.checked_sub(1), Some(j + 1)];
        for j in candidates.into_iter().flatten() {
            if j >= self.slabs.len() {
                continue;
            }
            let c = self.slabs[j][loc.triangle];
            if c != NONE {
                let e = self.slab_edge[j][c as usize] as usize;
                return Ok((e, self.edge_param(e, s)));
            }
        }
        Err(Error::OutsideMesh(x.pos))
    }

    /// The image of `x` in the graph.
    pub fn quotient_point(&self, x: &SurfacePoint) -> Result<GraphPoint> {
        let (e, t) = self.locate_edge(x)?;
        let edge = &self.edges[e];
        if self.field.codomain == Codomain::Line {
            if t <= 1e-12 {
                return Ok(GraphPoint::Node(edge.from));
            }
            if t >= 1.0 - 1e-12 {
                return Ok(GraphPoint::Node(edge.to));
            }
        }
        Ok(GraphPoint::Edge { edge: e, t })
    }

    /// Up to `max_points` points of the level component of edge `edge` at
    /// parameter `t`, projected onto the true level set.
    pub fn level_points(&self, edge: usize, t: f64, max_points: usize) -> Vec<SurfacePoint> {
        let mesh = self.mesh();
        let s = self.edge_value(edge, t);
        let circle = match self.field.codomain {
            Codomain::Circle { period } => Some(period),
            Codomain::Line => None,
        };
        let (j, comp) = match circle {
            Some(_) => (0, 0),
            None => {
                let segs = &self.edges[edge].segments;
                let dist = |j: usize| {
                    let lo = if j == 0 { f64::NEG_INFINITY } else { self.levels[j - 1] };
                    let hi = self.levels.get(j).copied().unwrap_or(f64::INFINITY);
                    if s < lo {
                        lo - s
                    } else if s > hi {
                        s - hi
                    } else {
                        0.0
                    }
                };
                *segs.iter().min_by(|a, b| dist(a.0).total_cmp(&dist(b.0))).expect("edges have segments")
            }
        };
        let rel = |v: usize| match circle {
            Some(period) => crate::math::minimal_image(self.pl[v] - s, period),
            None => self.pl[v] - s,
        };
        let mut seen: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        let mut pts = Vec::new();
        for (tix, tri) in mesh.triangles.iter().enumerate() {
            if self.slabs[j][tix] != comp {
                continue;
            }
            let coords = mesh.triangle_coords(tix);
            for k in 0..3 {
                let (u, w) = (tri[k], tri[(k + 1) % 3]);
                let (du, dw) = (rel(u), rel(w));
                if !((du < 0.0 && dw >= 0.0) || (du >= 0.0 && dw < 0.0)) {
                    continue;
                }
                if circle.is_some_and(|p| (du - dw).abs() > p / 2.0) {
                    continue;
                }
                if seen.insert((u.min(w), u.max(w)), ()).is_some() {
                    continue;
                }
                let (pu, pw) = (coords[k], coords[(k + 1) % 3]);
                let pos = pu + (pw - pu) * (du / (du - dw));
                pts.push(SurfacePoint { chart: mesh.tri_chart[tix], pos });
            }
        }
        let n = pts.len();
        let take = max_points.min(n);
        let mut out = Vec::with_capacity(take);
        for i in 0..take {
            let mut p = mesh.surface.canonical(&pts[i * n / take]);
            for _ in 0..6 {
                let g = self.field.gradient(&p);
                let r = self.field.difference(s, self.field.value(&p));
                let g2 = g.norm_sq();
                if g2 < 1e-300 {
                    break;
                }
                p = mesh.surface.canonical(&p.with_pos(p.pos + g * (r / g2)));
            }
            out.push(p);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::fields::find_critical_points;

    pub(crate) fn graph_of(surface: &SurfaceModel, f: &ScalarField, res: f64) -> Result<ReebGraph> {
        let crits = find_critical_points(f, surface, 0.05, 1e-10)?;
        build_reeb_graph(f, surface, &crits.points, res)
    }

    #[test]
    fn disk_paraboloid() {
        let g = graph_of(&builtin::unit_disk(), &builtin::r2_field(), 0.05).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(g.nodes[0].kind, NodeKind::Min);
        assert_eq!(g.nodes[1].kind, NodeKind::BoundaryLevel);
        assert!((g.nodes[1].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn twowell_graph() {
        let s = builtin::twowell_domain();
        let g = graph_of(&s, &builtin::twowell_field(), 0.05).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 3));
        assert_eq!(g.count(NodeKind::Min), 2);
        assert_eq!(g.count(NodeKind::Saddle), 1);
        assert_eq!(g.count(NodeKind::BoundaryLevel), 1);
        let saddle = g.nodes.iter().find(|n| n.kind == NodeKind::Saddle).unwrap();
        assert!((saddle.value - 1.0).abs() < 1e-9);
        assert_eq!(g.degree(saddle.id), 3);
        assert!(g.is_connected());
        assert_eq!(g.betti1(), 0);
    }

    #[test]
    fn torus_height_has_one_cycle() {
        let g = graph_of(&builtin::torus(), &builtin::torus_height_field(), 0.05).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        assert_eq!(g.betti1(), 1);
        assert_eq!(g.count(NodeKind::Saddle), 2);
    }

    #[test]
    fn sphere_and_annulus_and_circle_valued() {
        let g = graph_of(&builtin::sphere(), &builtin::sphere_height_field(), 0.1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!((g.nodes[0].kind, g.nodes[1].kind), (NodeKind::Min, NodeKind::Max));
        let g = graph_of(&builtin::annulus(), &builtin::angular_field(), 0.05).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(g.count(NodeKind::BoundaryLevel), 2);
        let g = graph_of(&builtin::torus(), &builtin::torus_circle_field(), 0.05).unwrap();
        assert_eq!((g.node_count(), g.edge_count(), g.betti1()), (1, 1, 1));
    }

    #[test]
    fn quotient_of_points() {
        let g = graph_of(&builtin::unit_disk(), &builtin::r2_field(), 0.05).unwrap();
        match g.quotient_point(&SurfacePoint::new(0, 0.5, 0.0)).unwrap() {
            GraphPoint::Edge { edge: 0, t } => assert!((g.edge_value(0, t) - 0.25).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let s = builtin::twowell_domain();
        let g = graph_of(&s, &builtin::twowell_field(), 0.05).unwrap();
        let min_left = g.nodes.iter().find(|n| n.kind == NodeKind::Min && n.position.pos.x < 0.0).unwrap().id;
        assert_eq!(g.quotient_point(&SurfacePoint::new(0, -1.0, 0.0)).unwrap(), GraphPoint::Node(min_left));
        let a = g.quotient_point(&SurfacePoint::new(0, 0.3, 0.0)).unwrap();
        let b = g.quotient_point(&SurfacePoint::new(0, -0.3, 0.0)).unwrap();
        match (a, b) {
            (GraphPoint::Edge { edge: ea, .. }, GraphPoint::Edge { edge: eb, .. }) => assert_ne!(ea, eb),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn level_points_lie_on_the_level() {
        let s = builtin::twowell_domain();
        let f = builtin::twowell_field();
        let g = graph_of(&s, &f, 0.05).unwrap();
        for e in 0..g.edge_count() {
            for &t in &[0.2, 0.5, 0.8] {
                let pts = g.level_points(e, t, 16);
                assert!(!pts.is_empty());
                for p in pts {
                    assert!((f.value(&p) - g.edge_value(e, t)).abs() < 1e-12);
                    assert_eq!(g.quotient_point(&p).unwrap(), GraphPoint::Edge { edge: e, t: g.edge_param(e, f.value(&p)) });
                }
            }
        }
    }

    #[test]
    fn coarse_mesh_is_rejected() {
        let s = builtin::twowell_domain();
        let f = builtin::twowell_field();
        let crits = find_critical_points(&f, &s, 0.05, 1e-10).unwrap();
        // Drop the saddle: the PL saddle then has no counterpart.
        let partial: Vec<CriticalPoint> = crits.points.iter().copied().filter(|c| c.kind != CriticalKind::NondegSaddle).collect();
        assert!(matches!(build_reeb_graph(&f, &s, &partial, 0.05), Err(Error::SpuriousCritical { .. })));
    }
}
