use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::separation::Separation;
use crate::vset::VertexSet;

/// Checks the star axiom; on failure returns the offending pair.
pub fn star_violation(elements: &[Separation]) -> Option<(Separation, Separation)> {
    for (i, &r) in elements.iter().enumerate() {
        if r.is_degenerate() {
            return Some((r, r));
        }
        for &s in &elements[i + 1..] {
            if r != s && !r.le(s.reverse()) {
                return Some((r, s));
            }
        }
    }
    None
}

pub fn is_star(elements: &[Separation]) -> bool {
    star_violation(elements).is_none()
}

/// Intersection of the big sides; `V` for the empty star.
pub fn interior(g: &Graph, elements: &[Separation]) -> VertexSet {
    elements
        .iter()
        .fold(g.vertices(), |acc, s| acc.intersection(s.b))
}

/// The torso of a star, relabelled onto `0..|int|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Torso {
    pub graph: Graph,
    /// `vertices[i]` is the original index of torso vertex `i`.
    pub vertices: Vec<usize>,
}

impl Torso {
    pub fn lift(&self, s: VertexSet) -> VertexSet {
        s.iter().map(|i| self.vertices[i]).collect()
    }

    pub fn project(&self, s: VertexSet) -> VertexSet {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, &v)| s.contains(v))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn torso(g: &Graph, elements: &[Separation]) -> Torso {
    let int = interior(g, elements);
    let closed = g.with_cliques(&elements.iter().map(|s| s.separator()).collect::<Vec<_>>());
    let (graph, vertices) = closed.induced(int);
    Torso { graph, vertices }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StarReport {
    pub is_star: bool,
    pub interior: VertexSet,
    pub torso_edges: Vec<(usize, usize)>,
}

/// Star axiom, interior and torso (torso edges in original indices).
pub fn star_ops(g: &Graph, elements: &[Separation]) -> Result<StarReport> {
    if let Some((r, s)) = star_violation(elements) {
        return Err(Error::Argument(format!(
            "not a star: {r:?} and {s:?} violate the star relation"
        )));
    }
    let t = torso(g, elements);
    let torso_edges = t
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| (t.vertices[u], t.vertices[v]))
        .collect();
    Ok(StarReport {
        is_star: true,
        interior: interior(g, elements),
        torso_edges,
    })
}
