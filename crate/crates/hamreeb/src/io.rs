//! File formats: surfaces and fields as JSON, meshes as text, trajectories as
//! CSV, Reeb graphs as JSON and DOT, graph functions as JSON.
//!
//! Text formats write floats with 17 significant digits. JSON numbers use the
//! shortest representation that reads back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use hamreeb_core::dynamics::TrajectorySample;
use hamreeb_core::fields::{Codomain, ScalarField};
use hamreeb_core::function::Polynomial;
use hamreeb_core::geometry::{ChartDomain, SurfaceModel, SurfacePoint, TransitionMap, TriMesh};
use hamreeb_core::reeb::{EdgeProfile, GraphFunction, ReebGraph};
use hamreeb_core::Vec2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::registry::{self, SurfaceDesc};
use crate::InputError;

/// `f64` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn pair(v: Vec2) -> Value {
    json!([v.x, v.y])
}

// ---- surfaces ----

pub fn surface_to_json(desc: &SurfaceDesc, model: &SurfaceModel) -> Value {
    let params = match desc {
        SurfaceDesc::Disk { radius } => json!({ "radius": radius }),
        SurfaceDesc::Annulus { period, height } => json!({ "period": period, "height": height }),
        SurfaceDesc::FlatTorus { periods } => json!({ "periods": [periods.0, periods.1] }),
        SurfaceDesc::Sphere => json!({}),
        SurfaceDesc::PlanarSublevel { poly, level, center } => {
            json!({ "poly": poly, "level": level, "center": pair(*center) })
        }
    };
    let charts: Vec<Value> = model
        .charts
        .iter()
        .map(|c| {
            let domain = match &c.domain {
                ChartDomain::Disk { center, radius } => json!({ "type": "disk", "center": pair(*center), "radius": radius }),
                ChartDomain::Rect { min, max } => json!({ "type": "rect", "min": pair(*min), "max": pair(*max) }),
                ChartDomain::Sublevel { level, center, reach, .. } => {
                    json!({ "type": "sublevel", "level": level, "center": pair(*center), "reach": reach })
                }
            };
            json!({ "id": c.id, "domain": domain, "periods": c.periods })
        })
        .collect();
    let transitions: Vec<Value> = model
        .transitions
        .iter()
        .map(|t| {
            let map = match t.map {
                TransitionMap::Inversion => "inversion",
            };
            json!({ "from": t.from, "to": t.to, "map": map })
        })
        .collect();
    json!({ "kind": desc.kind(), "params": params, "charts": charts, "transitions": transitions })
}

fn num(v: &Value, key: &str) -> Result<f64, InputError> {
    v.get(key).and_then(Value::as_f64).ok_or_else(|| InputError::new(format!("surface params: missing number {key:?}")))
}

fn num_pair(v: &Value, key: &str) -> Result<(f64, f64), InputError> {
    let a = v.get(key).and_then(Value::as_array).filter(|a| a.len() == 2);
    match a.map(|a| (a[0].as_f64(), a[1].as_f64())) {
        Some((Some(x), Some(y))) => Ok((x, y)),
        _ => Err(InputError::new(format!("surface params: {key:?} must be a pair of numbers"))),
    }
}

/// Reads a surface document. The charts and transitions are rebuilt from
/// `kind` and `params` and must agree with any listed in the document.
pub fn surface_from_json(doc: &Value) -> Result<(SurfaceDesc, SurfaceModel), InputError> {
    let kind = doc.get("kind").and_then(Value::as_str).ok_or_else(|| InputError::new("surface: missing \"kind\""))?;
    let empty = json!({});
    let params = doc.get("params").unwrap_or(&empty);
    let desc = match kind {
        "Disk" => SurfaceDesc::Disk { radius: num(params, "radius")? },
        "Annulus" => SurfaceDesc::Annulus { period: num(params, "period")?, height: num(params, "height")? },
        "FlatTorus" => SurfaceDesc::FlatTorus { periods: num_pair(params, "periods")? },
        "Sphere" => SurfaceDesc::Sphere,
        "PlanarSublevel" => {
            let poly = params.get("poly").ok_or_else(|| InputError::new("surface params: missing \"poly\""))?;
            let (cx, cy) = num_pair(params, "center")?;
            SurfaceDesc::PlanarSublevel { poly: parse_terms(poly)?, level: num(params, "level")?, center: Vec2::new(cx, cy) }
        }
        other => return Err(InputError::new(format!("surface: unknown kind {other:?}"))),
    };
    let model = desc.build()?;
    for (key, expected) in [("charts", model.charts.len()), ("transitions", model.transitions.len())] {
        if let Some(listed) = doc.get(key) {
            let n = listed.as_array().map(Vec::len).ok_or_else(|| InputError::new(format!("surface: {key:?} must be a list")))?;
            if n != expected {
                return Err(InputError::new(format!("surface: {n} {key} listed, the {kind} model has {expected}")));
            }
        }
    }
    Ok((desc, model))
}

// ---- fields ----

/// `{name | poly: [[i, j, c], ...], codomain, period?}`
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<Vec<(u32, u32, f64)>>,
    #[serde(default = "line")]
    pub codomain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

fn line() -> String {
    "line".into()
}

fn parse_terms(v: &Value) -> Result<Vec<(u32, u32, f64)>, InputError> {
    serde_json::from_value(v.clone()).map_err(|e| InputError::new(format!("polynomial terms must be [[i, j, c], ...]: {e}")))
}

impl FieldDoc {
    pub fn polynomial(name: &str, terms: &[(u32, u32, f64)]) -> Self {
        FieldDoc { name: Some(name.into()), poly: Some(terms.to_vec()), codomain: line(), period: None }
    }

    pub fn build(&self) -> Result<ScalarField, InputError> {
        let field = match (&self.poly, &self.name) {
            (Some(terms), name) => {
                ScalarField::from_chart_fn(name.clone().unwrap_or_else(|| "poly".into()), Polynomial::new(terms.iter().copied()))
            }
            (None, Some(name)) => registry::field(name)?,
            (None, None) => return Err(InputError::new("field: needs \"name\" or \"poly\"")),
        };
        match (self.codomain.as_str(), self.period) {
            ("line", None) => Ok(field),
            ("line", Some(_)) => Err(InputError::new("field: \"period\" given for a line-valued field")),
            ("circle", Some(p)) if p > 0.0 && p.is_finite() => Ok(field.circle_valued(p)),
            ("circle", None) if matches!(field.codomain, Codomain::Circle { .. }) => Ok(field),
            ("circle", _) => Err(InputError::new("field: circle codomain needs a positive \"period\"")),
            (other, _) => Err(InputError::new(format!("field: unknown codomain {other:?}"))),
        }
    }
}

pub fn field_from_json(text: &str) -> Result<ScalarField, InputError> {
    let doc: FieldDoc = serde_json::from_str(text).map_err(|e| InputError::new(format!("field JSON: {e}")))?;
    doc.build()
}

// ---- meshes ----

pub const MESH_HEADER: &str = "hamreeb-mesh 1";

/// Header line, then `resolution`, `vertices` (chart, x, y, boundary component
/// or `-`), `triangles` (three vertex ids and a chart) and `values`.
pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MESH_HEADER}");
    let _ = writeln!(s, "resolution {}", fmt_f64(mesh.resolution));
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for (v, b) in mesh.vertices.iter().zip(&mesh.boundary_flags) {
        let b = b.map_or_else(|| "-".to_string(), |b| b.to_string());
        let _ = writeln!(s, "{} {} {} {b}", v.chart, fmt_f64(v.pos.x), fmt_f64(v.pos.y));
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for (t, c) in mesh.triangles.iter().zip(&mesh.tri_chart) {
        let _ = writeln!(s, "{} {} {} {c}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "values {}", mesh.values.len());
    for v in &mesh.values {
        let _ = writeln!(s, "{}", fmt_f64(*v));
    }
    s
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    at: usize,
}

impl<'a> Lines<'a> {
    fn bad(n: usize, what: &str) -> InputError {
        InputError::new(format!("mesh line {}: {what}", n + 1))
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), InputError> {
        let l = self.lines.get(self.at).copied().ok_or_else(|| InputError::new(format!("mesh: unexpected end, expected {what}")))?;
        self.at += 1;
        Ok(l)
    }

    /// A `name value` line.
    fn section<T: std::str::FromStr>(&mut self, name: &str) -> Result<(usize, T), InputError> {
        let (n, l) = self.next(name)?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(Self::bad(n, &format!("expected \"{name}\"")));
        }
        let v = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| Self::bad(n, &format!("bad {name}")))?;
        Ok((n, v))
    }
}

pub fn read_mesh(text: &str, surface: &SurfaceModel) -> Result<TriMesh, InputError> {
    let bad = Lines::bad;
    let mut r = Lines { lines: text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect(), at: 0 };
    let (n, header) = r.next("header")?;
    if header.trim() != MESH_HEADER {
        return Err(bad(n, "expected header \"hamreeb-mesh 1\""));
    }
    let (_, resolution): (_, f64) = r.section("resolution")?;
    let (_, nv): (_, usize) = r.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut boundary_flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = r.next("vertex")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(n, "vertex needs chart, x, y, boundary"));
        }
        let chart: usize = f[0].parse().map_err(|_| bad(n, "bad chart"))?;
        if chart >= surface.charts.len() {
            return Err(bad(n, "chart out of range"));
        }
        let x: f64 = f[1].parse().map_err(|_| bad(n, "bad x"))?;
        let y: f64 = f[2].parse().map_err(|_| bad(n, "bad y"))?;
        let b = match f[3] {
            "-" => None,
            s => Some(s.parse::<usize>().map_err(|_| bad(n, "bad boundary id"))?),
        };
        vertices.push(SurfacePoint::new(chart, x, y));
        boundary_flags.push(b);
    }
    let (_, nt): (_, usize) = r.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut tri_chart = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = r.next("triangle")?;
        let f: Vec<usize> = l.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| bad(n, "bad triangle"))?;
        if f.len() != 4 || f[..3].iter().any(|&v| v >= nv) || f[3] >= surface.charts.len() {
            return Err(bad(n, "triangle needs three vertex ids and a chart, in range"));
        }
        triangles.push([f[0], f[1], f[2]]);
        tri_chart.push(f[3]);
    }
    let (n, nvals): (_, usize) = r.section("values")?;
    if nvals != nv {
        return Err(bad(n, "one value per vertex expected"));
    }
    let mut values = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = r.next("value")?;
        values.push(l.trim().parse::<f64>().map_err(|_| bad(n, "bad value"))?);
    }
    if let Ok((n, _)) = r.next("end") {
        return Err(bad(n, "trailing data"));
    }
    Ok(TriMesh { surface: surface.clone(), vertices, triangles, tri_chart, values, boundary_flags, resolution })
}

// ---- trajectories ----

pub const TRAJECTORY_COLUMNS: [&str; 5] = ["t", "chart", "x", "y", "f"];

pub fn write_trajectory<W: Write>(out: W, samples: &[TrajectorySample]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for s in samples {
        let f = s.value.map(fmt_f64).unwrap_or_default();
        w.write_record([fmt_f64(s.t), s.point.chart.to_string(), fmt_f64(s.point.pos.x), fmt_f64(s.point.pos.y), f])?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, point, f)` rows of a trajectory CSV.
pub fn read_trajectory(text: &str) -> Result<Vec<(f64, SurfacePoint, Option<f64>)>, InputError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| InputError::new(format!("trajectory CSV: {e}")))?.clone();
    if headers.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(InputError::new("trajectory CSV: columns must be t,chart,x,y,f"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| InputError::new(format!("trajectory CSV: {e}")))?;
        let bad = |c: &str| InputError::new(format!("trajectory CSV: bad {c} in {rec:?}"));
        let t: f64 = rec[0].parse().map_err(|_| bad("t"))?;
        let chart: usize = rec[1].parse().map_err(|_| bad("chart"))?;
        let x: f64 = rec[2].parse().map_err(|_| bad("x"))?;
        let y: f64 = rec[3].parse().map_err(|_| bad("y"))?;
        let f = if rec[4].is_empty() { None } else { Some(rec[4].parse().map_err(|_| bad("f"))?) };
        rows.push((t, SurfacePoint::new(chart, x, y), f));
    }
    Ok(rows)
}

// ---- Reeb graphs ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub kind: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReebDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

impl ReebDoc {
    pub fn of(graph: &ReebGraph) -> Self {
        ReebDoc {
            nodes: graph.nodes.iter().map(|n| NodeDoc { id: n.id, kind: n.kind.name().into(), value: n.value }).collect(),
            edges: graph.edges.iter().map(|e| EdgeDoc { id: e.id, from: e.from, to: e.to }).collect(),
        }
    }
}

pub fn reeb_to_dot(graph: &ReebGraph) -> String {
    let mut s = String::from("graph reeb {\n");
    for n in &graph.nodes {
        let _ = writeln!(s, "  n{} [label=\"{} {}\"];", n.id, n.kind.name(), fmt_f64(n.value));
    }
    for e in &graph.edges {
        let _ = writeln!(s, "  n{} -- n{} [label=\"e{}\"];", e.from, e.to, e.id);
    }
    s.push_str("}\n");
    s
}

// ---- graph functions ----

/// Node values and edge knots `(t, value)`, keyed by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFunctionDoc {
    pub nodes: BTreeMap<usize, f64>,
    pub edges: BTreeMap<usize, Vec<(f64, f64)>>,
}

impl GraphFunctionDoc {
    pub fn of(a: &GraphFunction) -> Self {
        GraphFunctionDoc {
            nodes: a.node_values.iter().copied().enumerate().collect(),
            edges: a.edges.iter().map(|e| e.knots.clone()).enumerate().collect(),
        }
    }

    /// Checks the ids against `graph` and continuity at the nodes.
    pub fn build(&self, graph: &ReebGraph) -> Result<GraphFunction, InputError> {
        let dense = |what: &str, n: usize, keys: Vec<usize>| {
            if keys != (0..n).collect::<Vec<_>>() {
                Err(InputError::new(format!("graph function: {what} ids must be exactly 0..{n}")))
            } else {
                Ok(())
            }
        };
        dense("node", graph.node_count(), self.nodes.keys().copied().collect())?;
        dense("edge", graph.edge_count(), self.edges.keys().copied().collect())?;
        for (e, knots) in &self.edges {
            if knots.len() < 2 || knots.iter().any(|(t, v)| !(0.0..=1.0).contains(t) || !v.is_finite()) {
                return Err(InputError::new(format!("graph function: edge {e} needs at least two knots with t in [0, 1]")));
            }
        }
        let a = GraphFunction {
            node_values: self.nodes.values().copied().collect(),
            edges: self.edges.values().map(|k| EdgeProfile::new(k.clone())).collect(),
        };
        a.validate(graph).map_err(|e| InputError::new(format!("graph function: {e}")))?;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hamreeb_core::builtin;
    use hamreeb_core::geometry::triangulate;

    #[test]
    fn mesh_text_round_trip() {
        let s = builtin::annulus();
        let f = builtin::angular_field();
        let mesh = triangulate(&s, 0.2).unwrap().with_values(|p| f.value(p));
        let text = write_mesh(&mesh);
        let back = read_mesh(&text, &s).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.values, mesh.values);
        assert_eq!(back.boundary_flags, mesh.boundary_flags);
        assert_eq!(write_mesh(&back), text);
        assert!(read_mesh(&text.replace("hamreeb-mesh 1", "mesh"), &s).is_err());
        assert!(read_mesh(&text[..text.len() / 2], &s).is_err());
    }

    #[test]
    fn surface_documents() {
        for name in registry::SURFACES {
            let desc = registry::surface_desc(name).unwrap();
            let model = desc.build().unwrap();
            let doc = surface_to_json(&desc, &model);
            let (back, _) = surface_from_json(&doc).unwrap();
            assert_eq!(back, desc);
        }
        let mut doc = surface_to_json(&SurfaceDesc::Sphere, &builtin::sphere());
        doc["charts"] = json!([]);
        assert!(surface_from_json(&doc).is_err());
        assert!(surface_from_json(&json!({"kind": "Disk", "params": {"radius": -1.0}})).is_err());
    }

    #[test]
    fn field_documents() {
        let f = field_from_json(r#"{"poly": [[2, 0, 1.0], [0, 2, 1.0]]}"#).unwrap();
        assert_eq!(f.value(&SurfacePoint::new(0, 0.5, 0.5)), 0.5);
        assert_eq!(field_from_json(r#"{"name": "twowell"}"#).unwrap().name, "twowell");
        let c = field_from_json(r#"{"poly": [[0, 1, 1.0]], "codomain": "circle", "period": 1.0}"#).unwrap();
        assert_eq!(c.codomain, Codomain::Circle { period: 1.0 });
        assert!(field_from_json(r#"{"poly": [[0, 1]]}"#).is_err());
        assert!(field_from_json(r#"{"name": "nope"}"#).is_err());
        assert!(field_from_json(r#"{"name": "r2", "codomain": "circle"}"#).is_err());
        let doc = FieldDoc::polynomial("p", &[(1, 0, 2.0)]);
        assert_eq!(serde_json::to_string(&doc).unwrap(), r#"{"name":"p","poly":[[1,0,2.0]],"codomain":"line"}"#);
    }
}
