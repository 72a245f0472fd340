use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::separation::Separation;
use crate::vset::VertexSet;

/// A tree-decomposition stored as a rooted tree with parent pointers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDecomposition {
    pub parent: Vec<Option<usize>>,
    pub bags: Vec<VertexSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TdReport {
    pub valid: bool,
    pub violation: Option<String>,
    /// Classic width: largest bag minus one (`-1` for no vertices).
    pub width: i64,
    pub max_bag: usize,
    pub adhesion: usize,
    pub refines_other: Option<bool>,
}

impl TreeDecomposition {
    pub fn single(bag: VertexSet) -> Self {
        TreeDecomposition {
            parent: vec![None],
            bags: vec![bag],
        }
    }

    /// Builds from undirected tree edges, rooting at node 0.
    pub fn from_edges(bags: Vec<VertexSet>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = bags.len();
        if n == 0 {
            return Err(Error::Structure("decomposition without nodes".into()));
        }
        if edges.len() + 1 != n {
            return Err(Error::Structure(format!(
                "{} edges for {n} nodes is not a tree",
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Structure(format!(
                    "edge {u}-{v} names a missing node"
                )));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    stack.push(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Structure("tree edges are disconnected".into()));
        }
        Ok(TreeDecomposition { parent, bags })
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Edges as `(child, parent)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
            .collect()
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for (c, p) in self.edges() {
            adj[c].push(p);
            adj[p].push(c);
        }
        adj
    }

    /// Checks that the parent pointers form a tree.
    pub fn check_tree(&self) -> Result<()> {
        let n = self.len();
        if n == 0 || self.parent.len() != n {
            return Err(Error::Structure(
                "node and parent counts differ or are zero".into(),
            ));
        }
        let roots = self.parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::Structure(format!("{roots} roots")));
        }
        for (c, p) in self.edges() {
            if p >= n {
                return Err(Error::Structure(format!("node {c} has missing parent {p}")));
            }
        }
        for start in 0..n {
            let mut u = start;
            let mut steps = 0;
            while let Some(p) = self.parent[u] {
                u = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Structure(format!(
                        "parent pointers cycle through node {start}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Union of bags in the subtree below each node.
    fn subtree_unions(&self) -> Vec<VertexSet> {
        let order = self.topological();
        let mut down = self.bags.clone();
        for &u in order.iter().rev() {
            if let Some(p) = self.parent[u] {
                down[p] = down[p].union(down[u]);
            }
        }
        down
    }

    /// Nodes with every parent before its children.
    fn topological(&self) -> Vec<usize> {
        let mut children = vec![Vec::new(); self.len()];
        let mut roots = Vec::new();
        for (c, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(c),
                None => roots.push(c),
            }
        }
        let mut order = Vec::with_capacity(self.len());
        let mut stack = roots;
        while let Some(u) = stack.pop() {
            order.push(u);
            stack.extend(children[u].iter().rev());
        }
        order
    }

    /// Separation induced by each edge, as `(child side, parent side)`.
    pub fn induced_separations(&self) -> Vec<((usize, usize), Separation)> {
        let down = self.subtree_unions();
        let order = self.topological();
        let mut up = vec![VertexSet::EMPTY; self.len()];
        let mut children = vec![Vec::new(); self.len()];
        for (c, p) in self.edges() {
            children[p].push(c);
        }
        for &u in &order {
            for (i, &c) in children[u].iter().enumerate() {
                let mut side = up[u].union(self.bags[u]);
                for (j, &d) in children[u].iter().enumerate() {
                    if i != j {
                        side = side.union(down[d]);
                    }
                }
                up[c] = side;
            }
        }
        self.edges()
            .into_iter()
            .map(|(c, p)| ((c, p), Separation::new(down[c], up[c])))
            .collect()
    }

    /// Unoriented induced separations in canonical form, sorted.
    pub fn separation_set(&self) -> Vec<Separation> {
        let mut s: Vec<Separation> = self
            .induced_separations()
            .into_iter()
            .map(|(_, s)| s.canonical())
            .collect();
        s.sort_by_key(|x| x.system_key());
        s.dedup();
        s
    }

    pub fn max_bag(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    pub fn width(&self) -> i64 {
        self.max_bag() as i64 - 1
    }

    pub fn adhesion(&self) -> usize {
        self.edges()
            .iter()
            .map(|&(c, p)| self.bags[c].intersection(self.bags[p]).len())
            .max()
            .unwrap_or(0)
    }

    /// Every bag has at most `k` vertices, the convention for "width < k".
    pub fn bags_at_most(&self, k: usize) -> bool {
        self.max_bag() <= k
    }

    pub fn validate(&self, g: &Graph, other: Option<&TreeDecomposition>) -> TdReport {
        let violation = self.violation(g);
        let refines_other = other.map(|o| {
            let mine = self.separation_set();
            o.separation_set().iter().all(|s| mine.contains(s))
        });
        TdReport {
            valid: violation.is_none(),
            violation,
            width: self.width(),
            max_bag: self.max_bag(),
            adhesion: self.adhesion(),
            refines_other,
        }
    }

    fn violation(&self, g: &Graph) -> Option<String> {
        if let Err(e) = self.check_tree() {
            return Some(e.to_string());
        }
        if self.bags.iter().any(|b| !b.is_subset(g.vertices())) {
            return Some("a bag contains a vertex outside the graph".into());
        }
        let all = self.bags.iter().fold(VertexSet::EMPTY, |a, &b| a.union(b));
        if let Some(v) = g.vertices().difference(all).min() {
            return Some(format!("vertex {v} is in no bag"));
        }
        for &(u, v) in g.edges() {
            if !self.bags.iter().any(|b| b.contains(u) && b.contains(v)) {
                return Some(format!("edge {u}-{v} is in no bag"));
            }
        }
        let edges = self.edges();
        for v in g.vertices().iter() {
            let nodes = self.bags.iter().filter(|b| b.contains(v)).count();
            let links = edges
                .iter()
                .filter(|&&(c, p)| self.bags[c].contains(v) && self.bags[p].contains(v))
                .count();
            if nodes != links + 1 {
                return Some(format!("the bags containing vertex {v} are disconnected"));
            }
        }
        None
    }

    /// Contracts the given tree edges; bags of merged nodes are united.
    pub fn contract(&self, edges: &[(usize, usize)]) -> Result<TreeDecomposition> {
        let n = self.len();
        let tree_edges = self.edges();
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut x = x;
            while uf[x] != r {
                let next = uf[x];
                uf[x] = r;
                x = next;
            }
            r
        }
        for &(a, b) in edges {
            if !tree_edges.contains(&(a, b)) && !tree_edges.contains(&(b, a)) {
                return Err(Error::Argument(format!("{a}-{b} is not a tree edge")));
            }
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            uf[ra.max(rb)] = ra.min(rb);
        }
        let mut index = vec![usize::MAX; n];
        let mut bags = Vec::new();
        for u in 0..n {
            let r = find(&mut uf, u);
            if index[r] == usize::MAX {
                index[r] = bags.len();
                bags.push(VertexSet::EMPTY);
            }
            bags[index[r]] = bags[index[r]].union(self.bags[u]);
        }
        let mut new_edges = Vec::new();
        for (c, p) in tree_edges {
            let (a, b) = (index[find(&mut uf, c)], index[find(&mut uf, p)]);
            if a != b {
                new_edges.push((a, b));
            }
        }
        TreeDecomposition::from_edges(bags, &new_edges)
    }
}
