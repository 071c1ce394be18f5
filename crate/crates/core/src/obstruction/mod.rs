//! Volumes of sublevel components and the obstruction they give to realizing
//! an `f`-preserving diffeomorphism by an area-preserving one.

mod counterexample;

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{CriticalPoint, ScalarField};
use crate::geometry::{triangle_integral, AreaForm, Region, SurfacePoint, TriMesh};
use crate::reeb::UnionFind;

pub use counterexample::{run_counterexample_disk, ScenarioCheck, ScenarioResult};

/// Samples used to check that an involution preserves `f`.
pub const INVOLUTION_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct SublevelComponent {
    pub id: usize,
    /// Lowest mesh vertex of the component.
    pub seed: SurfacePoint,
    pub volume: f64,
    /// Indices into the critical points passed in.
    pub contains_critical: Vec<usize>,
}

/// Connected components of `{ f ≤ a }` on the mesh, with their ω-volumes.
#[derive(Clone, Debug, PartialEq)]
pub struct SublevelComponentSet {
    pub level: f64,
    pub components: Vec<SublevelComponent>,
    /// Component of every vertex in the sublevel set.
    pub vertex_component: Vec<Option<usize>>,
}

impl SublevelComponentSet {
    pub fn total_volume(&self) -> f64 {
        self.components.iter().map(|c| c.volume).sum()
    }

    /// Component of the sublevel vertex nearest to `p`, if one lies within `radius`.
    pub fn component_near(&self, mesh: &TriMesh, p: &SurfacePoint, radius: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (v, c) in self.vertex_component.iter().enumerate() {
            if let Some(c) = c {
                let d = mesh.surface.distance(&mesh.vertices[v], p);
                if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, *c));
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

fn check_regular_level(mesh: &TriMesh, a: f64, crits: &[CriticalPoint]) -> Result<()> {
    let h = mesh.max_edge_length();
    for c in crits {
        let curvature = c.hessian_eigs.0.abs().max(c.hessian_eigs.1.abs());
        if (a - c.value).abs() <= 1e-9 + 0.5 * curvature * h * h {
            return Err(Error::CriticalLevel(a));
        }
    }
    Ok(())
}

/// Flood fill of `{ f ≤ a }` through mesh edges, using the PL values stored on
/// the mesh; volumes come from the triangles clipped at `a`.
pub fn sublevel_components(mesh: &TriMesh, form: &AreaForm, a: f64, crits: &[CriticalPoint]) -> Result<SublevelComponentSet> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    check_regular_level(mesh, a, crits)?;
    let n = mesh.vertex_count();
    let below: Vec<bool> = mesh.values.iter().map(|&v| v <= a).collect();
    let mut uf = UnionFind::new(n);
    for (u, v) in mesh.edges() {
        if below[u] && below[v] {
            uf.union(u, v);
        }
    }

    // Number components in order of their lowest vertex.
    let mut order: Vec<usize> = (0..n).filter(|&v| below[v]).collect();
    order.sort_by(|&x, &y| mesh.values[x].total_cmp(&mesh.values[y]).then(x.cmp(&y)));
    let mut root_id: Vec<Option<usize>> = vec![None; n];
    let mut components = Vec::new();
    for &v in &order {
        let r = uf.find(v);
        if root_id[r].is_none() {
            root_id[r] = Some(components.len());
            components.push(SublevelComponent { id: components.len(), seed: mesh.vertices[v], volume: 0.0, contains_critical: Vec::new() });
        }
    }
    let vertex_component: Vec<Option<usize>> = (0..n).map(|v| if below[v] { root_id[uf.find(v)] } else { None }).collect();

    for (t, tri) in mesh.triangles.iter().enumerate() {
        // All sublevel vertices of a triangle are joined by its edges.
        if let Some(c) = tri.iter().find_map(|&v| vertex_component[v]) {
            components[c].volume += triangle_integral(mesh, form, t, Region::Sublevel(a));
        }
    }

    let set = SublevelComponentSet { level: a, components, vertex_component };
    let radius = 2.0 * mesh.max_edge_length();
    let mut components = set.components.clone();
    for (i, c) in crits.iter().enumerate() {
        if c.value < a {
            if let Some(k) = set.component_near(mesh, &c.position, radius) {
                components[k].contains_critical.push(i);
            }
        }
    }
    Ok(SublevelComponentSet { components, ..set })
}

/// A self-map of the surface tested as an element of the diffeomorphisms preserving `f`.
#[derive(Clone)]
pub struct Involution {
    pub name: String,
    map: Arc<dyn Fn(&SurfacePoint) -> SurfacePoint + Send + Sync>,
}

impl core::fmt::Debug for Involution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Involution").field("name", &self.name).finish()
    }
}

impl Involution {
    pub fn new(name: impl Into<String>, map: impl Fn(&SurfacePoint) -> SurfacePoint + Send + Sync + 'static) -> Self {
        Involution { name: name.into(), map: Arc::new(map) }
    }

    pub fn identity() -> Self {
        Involution::new("identity", |p| *p)
    }

    /// `(x, y) ↦ (−x, −y)` in the chart.
    pub fn negate() -> Self {
        Involution::new("negate", |p| p.with_pos(-p.pos))
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity()),
            "negate" => Some(Self::negate()),
            _ => None,
        }
    }

    pub fn apply(&self, p: &SurfacePoint) -> SurfacePoint {
        (self.map)(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport {
    pub involution: String,
    pub level: f64,
    pub volumes: Vec<f64>,
    /// Component each component is sent to.
    pub pairing: Vec<usize>,
    /// Largest `|Vᵢ − Vⱼ| / max(Vᵢ, Vⱼ)` over the swapped pairs.
    pub volume_mismatch: f64,
    pub tolerance: f64,
    pub obstructed: bool,
    /// The pair attaining the mismatch.
    pub worst_pair: Option<(usize, usize)>,
    /// Largest `|f(d(x)) − f(x)|` over the samples.
    pub preservation_residual: f64,
    pub conclusion: String,
}

/// Checks whether the class of `involution` can contain an area-preserving
/// map. Unequal volumes of swapped components rule it out; equal volumes
/// decide nothing.
pub fn j0_obstruction(
    f: &ScalarField,
    mesh: &TriMesh,
    form: &AreaForm,
    a: f64,
    crits: &[CriticalPoint],
    involution: &Involution,
) -> Result<ObstructionReport> {
    let surface = &mesh.surface;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut preservation_residual: f64 = 0.0;
    for _ in 0..INVOLUTION_SAMPLES {
        let p = surface.sample_point(&mut rng, 0.0);
        let q = involution.apply(&p);
        if !surface.contains(&q) {
            return Err(Error::InvolutionNotPreserving(f64::INFINITY));
        }
        preservation_residual = preservation_residual.max(f.difference(f.value(&q), f.value(&p)).abs());
    }
    if !(preservation_residual <= 1e-8) {
        return Err(Error::InvolutionNotPreserving(preservation_residual));
    }

    let set = sublevel_components(mesh, form, a, crits)?;
    let h = mesh.max_edge_length();
    let pairing: Vec<usize> = set
        .components
        .iter()
        .map(|c| set.component_near(mesh, &involution.apply(&c.seed), 2.0 * h).ok_or(Error::InvolutionNotPermuting))
        .collect::<Result<_>>()?;
    let mut hit = vec![false; pairing.len()];
    for &j in &pairing {
        if core::mem::replace(&mut hit[j], true) {
            return Err(Error::InvolutionNotPermuting);
        }
    }

    let volumes: Vec<f64> = set.components.iter().map(|c| c.volume).collect();
    let mut volume_mismatch = 0.0;
    let mut worst_pair = None;
    for (i, &j) in pairing.iter().enumerate() {
        if i == j {
            continue;
        }
        let rel = (volumes[i] - volumes[j]).abs() / volumes[i].max(volumes[j]);
        if rel > volume_mismatch || worst_pair.is_none() {
            volume_mismatch = rel;
            worst_pair = Some((i.min(j), i.max(j)));
        }
    }
    let tolerance = 1e-3 + 10.0 * h * h;
    let obstructed = volume_mismatch > tolerance;
    let conclusion = match (obstructed, worst_pair) {
        (true, Some((i, j))) => format!(
            "obstructed: components {i} and {j} are swapped but have volumes {:.6} and {:.6}; no area-preserving map lies in this class",
            volumes[i], volumes[j]
        ),
        (false, Some(_)) => String::from("not obstructed (inconclusive): swapped components have equal volumes"),
        (_, None) => String::from("not obstructed (inconclusive): no components are swapped"),
    };
    Ok(ObstructionReport {
        involution: involution.name.clone(),
        level: a,
        volumes,
        pairing,
        volume_mismatch,
        tolerance,
        obstructed,
        worst_pair,
        preservation_residual,
        conclusion,
    })
}
