use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::td::TreeDecomposition;
use crate::vset::VertexSet;

pub const DEFAULT_EXACT_BOUND: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Treewidth {
    /// `-1` for the graph without vertices.
    pub tw: i64,
    pub order: Vec<usize>,
    pub td: TreeDecomposition,
}

/// Vertices outside `s ∪ {v}` reachable from `v` through `s`.
fn q(g: &Graph, s: VertexSet, v: usize) -> VertexSet {
    let r = g.reach(v, s.with(v));
    g.neighbourhood(r)
}

/// Exact treewidth by dynamic programming over vertex subsets.
pub fn exact_treewidth(g: &Graph) -> Result<Treewidth> {
    exact_treewidth_bounded(g, DEFAULT_EXACT_BOUND)
}

pub fn exact_treewidth_bounded(g: &Graph, bound: usize) -> Result<Treewidth> {
    let n = g.n();
    if n > bound || n > 24 {
        return Err(Error::Refusal(format!(
            "exact treewidth limited to {} vertices, got {n}",
            bound.min(24)
        )));
    }
    if n == 0 {
        return Ok(Treewidth {
            tw: -1,
            order: Vec::new(),
            td: TreeDecomposition::single(VertexSet::EMPTY),
        });
    }
    let size = 1usize << n;
    let mut tw = vec![i8::MAX; size];
    tw[0] = -1;
    for s in 1..size {
        let set = VertexSet::from_bits(s as u128);
        let mut best = i8::MAX;
        for v in set.iter() {
            let rest = set.without(v);
            let val = tw[rest.bits() as usize].max(q(g, rest, v).len() as i8);
            best = best.min(val);
        }
        tw[s] = best;
    }
    // Peel the last-eliminated vertex off repeatedly.
    let mut s = g.vertices();
    let mut rev = Vec::with_capacity(n);
    while !s.is_empty() {
        let target = tw[s.bits() as usize];
        let v = s
            .iter()
            .find(|&v| {
                let rest = s.without(v);
                tw[rest.bits() as usize].max(q(g, rest, v).len() as i8) == target
            })
            .expect("optimal choice exists");
        rev.push(v);
        s = s.without(v);
    }
    rev.reverse();
    let td = td_from_elimination(g, &rev);
    Ok(Treewidth {
        tw: tw[size - 1] as i64,
        order: rev,
        td,
    })
}

/// Tree-decomposition from an elimination ordering (first entry eliminated first).
pub fn td_from_elimination(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let n = g.n();
    if n == 0 {
        return TreeDecomposition::single(VertexSet::EMPTY);
    }
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut adj: Vec<VertexSet> = (0..n).map(|v| g.neighbours(v)).collect();
    let mut bags = Vec::with_capacity(n);
    let mut later_nb = Vec::with_capacity(n);
    for &v in order {
        let later: VertexSet = adj[v].iter().filter(|&u| pos[u] > pos[v]).collect();
        for a in later.iter() {
            adj[a] = adj[a].union(later.without(a));
        }
        bags.push(later.with(v));
        later_nb.push(later);
    }
    let mut parent = vec![None; n];
    let mut roots = Vec::new();
    for i in 0..n {
        match later_nb[i].iter().min_by_key(|&u| pos[u]) {
            Some(u) => parent[i] = Some(pos[u]),
            None => roots.push(i),
        }
    }
    let last = *roots.last().unwrap();
    for &r in &roots[..roots.len() - 1] {
        parent[r] = Some(last);
    }
    TreeDecomposition { parent, bags }
}

/// Width of the decomposition produced by an elimination ordering.
pub fn elimination_width(g: &Graph, order: &[usize]) -> i64 {
    td_from_elimination(g, order).width()
}

/// Minimum width over all elimination orderings; test oracle for `n ≤ 9`.
pub fn treewidth_by_orderings(g: &Graph) -> i64 {
    let n = g.n();
    assert!(n <= 9, "ordering oracle limited to 9 vertices");
    if n == 0 {
        return -1;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = i64::MAX;
    permute(&mut perm, 0, &mut |p| {
        best = best.min(elimination_width(g, p))
    });
    best
}

fn permute(p: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        f(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, f);
        p.swap(i, j);
    }
}

/// Min-fill heuristic; an upper bound with its decomposition.
pub fn treewidth_upper_bound(g: &Graph) -> (i64, TreeDecomposition) {
    let n = g.n();
    let mut adj: Vec<VertexSet> = (0..n).map(|v| g.neighbours(v)).collect();
    let mut left = g.vertices();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = left.iter().min_by_key(|&v| {
        let nb = adj[v].intersection(left);
        let fill: usize = nb
            .iter()
            .map(|a| nb.difference(adj[a]).without(a).len())
            .sum();
        (fill, nb.len(), v)
    }) {
        let nb = adj[v].intersection(left);
        for a in nb.iter() {
            adj[a] = adj[a].union(nb.without(a));
        }
        order.push(v);
        left = left.without(v);
    }
    let td = td_from_elimination(g, &order);
    (td.width(), td)
}
