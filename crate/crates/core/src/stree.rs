use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::graph::Graph;
use crate::separation::Separation;
use crate::star::{interior, star_violation};
use crate::system::SeparationSystem;
use crate::td::TreeDecomposition;

/// An edge `{u, v}` with `forward = α(u, v)` and `backward = α(v, u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct STreeEdge {
    pub u: usize,
    pub v: usize,
    pub forward: Separation,
    pub backward: Separation,
}

/// A finite tree with oriented separations on its oriented edges.
///
/// `α(t′, t)` points towards `t`; the star at `t` collects these.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct STree {
    pub nodes: usize,
    pub edges: Vec<STreeEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeVerdict {
    pub node: usize,
    pub star: Vec<Separation>,
    pub is_star: bool,
    pub in_family: Option<bool>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StreeReport {
    pub valid: bool,
    pub violation: Option<String>,
    pub over_family: Option<bool>,
    pub leaf_separations: Vec<Separation>,
    pub max_degree: usize,
    /// Finite trees are weakly exhaustive: there are no rays.
    pub weakly_exhaustive: bool,
    pub nodes: Vec<NodeVerdict>,
}

impl STree {
    pub fn single() -> STree {
        STree {
            nodes: 1,
            edges: Vec::new(),
        }
    }

    /// Adds an edge with `α(u, v) = sep`.
    pub fn add_edge(&mut self, u: usize, v: usize, sep: Separation) {
        self.edges.push(STreeEdge {
            u,
            v,
            forward: sep,
            backward: sep.reverse(),
        });
    }

    pub fn add_node(&mut self) -> usize {
        self.nodes += 1;
        self.nodes - 1
    }

    /// `(neighbour, α(neighbour, t))` for every neighbour of `t`.
    pub fn incoming(&self) -> Vec<Vec<(usize, Separation)>> {
        let mut inc = vec![Vec::new(); self.nodes];
        for e in &self.edges {
            inc[e.v].push((e.u, e.forward));
            inc[e.u].push((e.v, e.backward));
        }
        inc
    }

    pub fn star_at(&self, t: usize) -> Vec<Separation> {
        let mut s: Vec<Separation> = self.incoming()[t].iter().map(|&(_, x)| x).collect();
        s.sort_by_key(|x| (x.system_key(), *x != x.canonical()));
        s.dedup();
        s
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    /// `α(x, t)` for every leaf `x` with neighbour `t`.
    pub fn leaf_separations(&self) -> Vec<Separation> {
        let deg = self.degrees();
        let mut out = Vec::new();
        for e in &self.edges {
            if deg[e.u] == 1 {
                out.push(e.forward);
            }
            if deg[e.v] == 1 {
                out.push(e.backward);
            }
        }
        out.sort_by_key(|x| (x.system_key(), *x != x.canonical()));
        out.dedup();
        out
    }

    pub fn check_tree(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::Structure("tree without nodes".into()));
        }
        if self.edges.len() + 1 != self.nodes {
            return Err(Error::Structure(format!(
                "{} edges for {} nodes is not a tree",
                self.edges.len(),
                self.nodes
            )));
        }
        let mut uf: Vec<usize> = (0..self.nodes).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for e in &self.edges {
            if e.u >= self.nodes || e.v >= self.nodes {
                return Err(Error::Structure(format!(
                    "edge {}-{} names a missing node",
                    e.u, e.v
                )));
            }
            if e.backward != e.forward.reverse() {
                return Err(Error::Structure(format!(
                    "labels of edge {}-{} are not inverse to each other",
                    e.u, e.v
                )));
            }
            let (a, b) = (find(&mut uf, e.u), find(&mut uf, e.v));
            if a == b {
                return Err(Error::Structure(format!(
                    "edge {}-{} closes a cycle",
                    e.u, e.v
                )));
            }
            uf[a] = b;
        }
        Ok(())
    }

    pub fn validate(
        &self,
        g: &Graph,
        family: Option<(&SeparationSystem, &FamilySpec)>,
    ) -> StreeReport {
        let mut violation = self.check_tree().err().map(|e| e.to_string());
        if violation.is_none() {
            for e in &self.edges {
                if !e.forward.is_separation_of(g) {
                    violation = Some(format!("label of edge {}-{} is not a separation", e.u, e.v));
                    break;
                }
                if let Some((sys, _)) = family {
                    if !sys.contains(e.forward) {
                        violation = Some(format!(
                            "label of edge {}-{} is outside the system",
                            e.u, e.v
                        ));
                        break;
                    }
                }
            }
        }
        let structural = violation.is_none();
        let mut nodes = Vec::new();
        if structural {
            let inc = self.incoming();
            for (t, list) in inc.iter().enumerate() {
                let mut star: Vec<Separation> = list.iter().map(|&(_, x)| x).collect();
                star.sort_by_key(|x| (x.system_key(), *x != x.canonical()));
                star.dedup();
                let bad = star_violation(&star);
                let (in_family, reason) = match family {
                    Some((sys, spec)) => {
                        let m = spec.member(sys, &star);
                        (Some(m.member), m.reason)
                    }
                    None => (None, String::new()),
                };
                let reason = match bad {
                    Some((a, b)) => format!("star relation fails for {a:?} and {b:?}; {reason}"),
                    None => reason,
                };
                nodes.push(NodeVerdict {
                    node: t,
                    is_star: bad.is_none(),
                    star,
                    in_family,
                    reason,
                });
            }
        }
        let over_family = if structural && family.is_some() {
            Some(nodes.iter().all(|n| n.in_family == Some(true)))
        } else {
            family.map(|_| false)
        };
        StreeReport {
            valid: structural,
            violation,
            over_family,
            leaf_separations: if structural {
                self.leaf_separations()
            } else {
                Vec::new()
            },
            max_degree: self.degrees().into_iter().max().unwrap_or(0),
            weakly_exhaustive: true,
            nodes,
        }
    }

    /// The decomposition with bags `int(σ_t)`; every node star must be a star.
    pub fn to_td(&self, g: &Graph) -> Result<TreeDecomposition> {
        self.check_tree()?;
        let mut bags = Vec::with_capacity(self.nodes);
        for t in 0..self.nodes {
            let star = self.star_at(t);
            if let Some((a, b)) = star_violation(&star) {
                return Err(Error::Structure(format!(
                    "node {t}: {a:?} and {b:?} violate the star relation"
                )));
            }
            bags.push(interior(g, &star));
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.u, e.v)).collect();
        TreeDecomposition::from_edges(bags, &edges)
    }

    /// The S-tree of induced separations, `α(c, p) = (U_c, U_p)`.
    pub fn from_td(td: &TreeDecomposition, k: usize) -> Result<STree> {
        td.check_tree()?;
        let mut st = STree {
            nodes: td.len(),
            edges: Vec::new(),
        };
        for ((c, p), sep) in td.induced_separations() {
            if sep.order() >= k {
                return Err(Error::Structure(format!(
                    "edge {c}-{p} has adhesion {} ≥ {k}",
                    sep.order()
                )));
            }
            st.add_edge(c, p, sep);
        }
        Ok(st)
    }

    /// Removes branches until no node sees the same label from two neighbours.
    pub fn prune_irredundant(&self) -> STree {
        let mut alive = vec![true; self.nodes];
        let mut edges = self.edges.clone();
        loop {
            let mut inc: Vec<Vec<(usize, Separation)>> = vec![Vec::new(); self.nodes];
            for e in &edges {
                inc[e.v].push((e.u, e.forward));
                inc[e.u].push((e.v, e.backward));
            }
            let mut cut = None;
            'find: for (t, list) in inc.iter().enumerate() {
                let mut list = list.clone();
                list.sort_by_key(|&(n, _)| n);
                for i in 0..list.len() {
                    for j in i + 1..list.len() {
                        if list[i].1 == list[j].1 {
                            cut = Some((t, list[j].0));
                            break 'find;
                        }
                    }
                }
            }
            let Some((t, drop)) = cut else { break };
            let mut stack = vec![drop];
            alive[drop] = false;
            while let Some(u) = stack.pop() {
                for &(w, _) in &inc[u] {
                    if alive[w] && w != t {
                        alive[w] = false;
                        stack.push(w);
                    }
                }
            }
            edges.retain(|e| alive[e.u] && alive[e.v]);
        }
        let mut index = vec![usize::MAX; self.nodes];
        let mut n = 0;
        for u in 0..self.nodes {
            if alive[u] {
                index[u] = n;
                n += 1;
            }
        }
        STree {
            nodes: n,
            edges: edges
                .into_iter()
                .map(|e| STreeEdge {
                    u: index[e.u],
                    v: index[e.v],
                    ..e
                })
                .collect(),
        }
    }

    /// Disjoint union; returns the node offset of `other`.
    fn absorb(&mut self, other: &STree) -> usize {
        let off = self.nodes;
        self.nodes += other.nodes;
        for e in &other.edges {
            self.edges.push(STreeEdge {
                u: e.u + off,
                v: e.v + off,
                ..*e
            });
        }
        off
    }
}

/// Glues per-node trees along a tree-decomposition.
///
/// Nodes without a piece contribute the star of their neighbours. Each
/// piece must carry every element of its node's star as a leaf separation.
pub fn glue(td: &TreeDecomposition, k: usize, pieces: &BTreeMap<usize, STree>) -> Result<STree> {
    td.check_tree()?;
    let induced = td.induced_separations();
    let mut star_of: Vec<Vec<(usize, Separation)>> = vec![Vec::new(); td.len()];
    for &((c, p), sep) in &induced {
        if sep.order() >= k {
            return Err(Error::Structure(format!(
                "edge {c}-{p} has adhesion {} ≥ {k}",
                sep.order()
            )));
        }
        star_of[p].push((c, sep));
        star_of[c].push((p, sep.reverse()));
    }
    let mut out = STree {
        nodes: 0,
        edges: Vec::new(),
    };
    // leaf_at[t][s] = (leaf node, inner node) in the union for α(leaf, inner) = s
    let mut leaf_at: Vec<BTreeMap<usize, (usize, usize)>> = vec![BTreeMap::new(); td.len()];
    for t in 0..td.len() {
        match pieces.get(&t) {
            Some(piece) => {
                let piece = piece.prune_irredundant();
                let off = out.absorb(&piece);
                let deg = piece.degrees();
                for &(nb, s) in &star_of[t] {
                    let mut found = None;
                    for e in &piece.edges {
                        if deg[e.u] == 1 && e.forward == s {
                            found = Some((e.u + off, e.v + off));
                        } else if deg[e.v] == 1 && e.backward == s {
                            found = Some((e.v + off, e.u + off));
                        }
                        if found.is_some() {
                            break;
                        }
                    }
                    match found {
                        Some(f) => {
                            leaf_at[t].insert(nb, f);
                        }
                        None => {
                            return Err(Error::Structure(format!(
                                "piece at node {t} lacks leaf separation {s:?}"
                            )))
                        }
                    }
                }
            }
            None => {
                let center = out.add_node();
                for &(nb, s) in &star_of[t] {
                    let leaf = out.add_node();
                    out.add_edge(leaf, center, s);
                    leaf_at[t].insert(nb, (leaf, center));
                }
            }
        }
    }
    let mut uf: Vec<usize> = (0..out.nodes).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for (c, p) in td.edges() {
        let (leaf_p, inner_p) = leaf_at[p][&c];
        let (leaf_c, inner_c) = leaf_at[c][&p];
        for (a, b) in [(leaf_p, inner_c), (leaf_c, inner_p)] {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            uf[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut index = vec![usize::MAX; out.nodes];
    let mut n = 0;
    for u in 0..out.nodes {
        let r = find(&mut uf, u);
        if index[r] == usize::MAX {
            index[r] = n;
            n += 1;
        }
    }
    let mut glued = STree {
        nodes: n,
        edges: Vec::new(),
    };
    for e in &out.edges {
        let (u, v) = (index[find(&mut uf, e.u)], index[find(&mut uf, e.v)]);
        let dup = glued.edges.iter().any(|f| {
            (f.u == u && f.v == v && f.forward == e.forward)
                || (f.u == v && f.v == u && f.forward == e.backward)
        });
        if !dup {
            glued.edges.push(STreeEdge {
                u,
                v,
                forward: e.forward,
                backward: e.backward,
            });
        }
    }
    glued.check_tree()?;
    Ok(glued)
}
