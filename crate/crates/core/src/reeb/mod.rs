//! Kronrod-Reeb graphs of functions on surfaces, functions on those graphs,
//! and the correspondence between graph functions and the centralizer of `f`.

mod centralizer;
mod function;
mod graph;
mod union_find;

pub use centralizer::{centralizer_check, orbit_spread, symplectomorphism_from_graph_function, CentralizerReport, GraphSymplectomorphism};
pub use function::{lift_graph_function, project_to_graph_function, EdgeProfile, GraphFunction, LiftedFunction, PROJECTION_SAMPLES};
pub use graph::{build_reeb_graph, GraphPoint, NodeKind, ReebEdge, ReebGraph, ReebNode};
pub use union_find::UnionFind;
