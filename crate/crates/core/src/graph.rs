use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vset::{VertexSet, MAX_VERTICES};

/// A finite simple graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<VertexSet>,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<String>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Format {
    EdgeList,
    Graph6,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n > MAX_VERTICES {
            return Err(Error::Argument(format!(
                "{n} vertices exceeds the supported maximum of {MAX_VERTICES}"
            )));
        }
        let mut g = Graph {
            n,
            adj: vec![VertexSet::EMPTY; n],
            edges: Vec::new(),
            labels: None,
        };
        for (i, &(u, v)) in edges.iter().enumerate() {
            g.add_edge(u, v)
                .map_err(|m| Error::Argument(format!("edge {i}: {m}")))?;
        }
        g.edges.sort_unstable();
        Ok(g)
    }

    fn add_edge(&mut self, u: usize, v: usize) -> std::result::Result<(), String> {
        if u >= self.n || v >= self.n {
            return Err(format!("endpoint out of range in {u} {v} (n = {})", self.n));
        }
        if u == v {
            return Err(format!("self-loop at {u}"));
        }
        if self.adj[u].contains(v) {
            return Err(format!("duplicate edge {u} {v}"));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        self.edges.push((u.min(v), u.max(v)));
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Graph> {
        if labels.len() != self.n {
            return Err(Error::Argument(
                "label count differs from vertex count".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Graph::new(n, &e).expect("complete graph")
    }

    pub fn path(n: usize) -> Graph {
        let e: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::new(n, &e).expect("path")
    }

    pub fn cycle(n: usize) -> Graph {
        let mut e: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        if n > 2 {
            e.push((0, n - 1));
        }
        Graph::new(n, &e).expect("cycle")
    }

    /// `rows × cols` grid; vertex `(r, c)` has index `c * rows + r`.
    pub fn grid(rows: usize, cols: usize) -> Graph {
        let id = |r: usize, c: usize| c * rows + r;
        let mut e = Vec::new();
        for c in 0..cols {
            for r in 0..rows {
                if r + 1 < rows {
                    e.push((id(r, c), id(r + 1, c)));
                }
                if c + 1 < cols {
                    e.push((id(r, c), id(r, c + 1)));
                }
            }
        }
        Graph::new(rows * cols, &e).expect("grid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].contains(v)
    }

    pub fn neighbours(&self, v: usize) -> VertexSet {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Vertices outside `s` with a neighbour in `s`.
    pub fn neighbourhood(&self, s: VertexSet) -> VertexSet {
        let mut out = VertexSet::EMPTY;
        for v in s.iter() {
            out = out.union(self.adj[v]);
        }
        out.difference(s)
    }

    /// The component of `G[within]` containing `start`.
    pub fn reach(&self, start: usize, within: VertexSet) -> VertexSet {
        let mut comp = VertexSet::singleton(start);
        let mut frontier = comp;
        while !frontier.is_empty() {
            let mut next = VertexSet::EMPTY;
            for v in frontier.iter() {
                next = next.union(self.adj[v]);
            }
            frontier = next.intersection(within).difference(comp);
            comp = comp.union(frontier);
        }
        comp
    }

    /// Components of `G[within]`, ordered by smallest vertex.
    pub fn components_within(&self, within: VertexSet) -> Vec<VertexSet> {
        let mut rest = within;
        let mut out = Vec::new();
        while let Some(v) = rest.min() {
            let c = self.reach(v, within);
            rest = rest.difference(c);
            out.push(c);
        }
        out
    }

    /// Components of `G - deleted`; with `tight_only`, only those whose
    /// neighbourhood is all of `deleted`.
    pub fn components(&self, deleted: VertexSet, tight_only: bool) -> Vec<VertexSet> {
        let comps = self.components_within(self.vertices().difference(deleted));
        if tight_only {
            comps
                .into_iter()
                .filter(|&c| self.neighbourhood(c) == deleted)
                .collect()
        } else {
            comps
        }
    }

    pub fn is_connected_set(&self, s: VertexSet) -> bool {
        match s.min() {
            None => false,
            Some(v) => self.reach(v, s) == s,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.is_connected_set(self.vertices())
    }

    /// Two sets touch if they share a vertex or are joined by an edge.
    pub fn touch(&self, a: VertexSet, b: VertexSet) -> bool {
        a.meets(b) || self.neighbourhood(a).meets(b)
    }

    /// An edge with one end in `a` and the other in `b`, if any.
    pub fn edge_between(&self, a: VertexSet, b: VertexSet) -> Option<(usize, usize)> {
        for u in a.iter() {
            if let Some(v) = self.adj[u].intersection(b).min() {
                return Some((u.min(v), u.max(v)));
            }
        }
        None
    }

    pub fn induced(&self, s: VertexSet) -> (Graph, Vec<usize>) {
        let map: Vec<usize> = s.to_vec();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in map.iter().enumerate() {
            index[v] = i;
        }
        let e: Vec<_> = self
            .edges
            .iter()
            .filter(|(u, v)| s.contains(*u) && s.contains(*v))
            .map(|&(u, v)| (index[u], index[v]))
            .collect();
        (Graph::new(map.len(), &e).expect("induced subgraph"), map)
    }

    /// Adds every edge inside each given set, returning a supergraph.
    pub fn with_cliques(&self, cliques: &[VertexSet]) -> Graph {
        let mut e: Vec<(usize, usize)> = self.edges.clone();
        let mut adj = self.adj.clone();
        for c in cliques {
            let vs = c.to_vec();
            for (i, &u) in vs.iter().enumerate() {
                for &v in &vs[i + 1..] {
                    if !adj[u].contains(v) {
                        adj[u].insert(v);
                        adj[v].insert(u);
                        e.push((u, v));
                    }
                }
            }
        }
        Graph::new(self.n, &e).expect("clique closure")
    }

    pub fn parse(text: &str, format: Format) -> Result<Graph> {
        match format {
            Format::EdgeList => Graph::from_edge_list(text),
            Format::Graph6 => Graph::from_graph6(text),
        }
    }

    pub fn from_edge_list(text: &str) -> Result<Graph> {
        if !text.is_ascii() {
            return Err(Error::parse(1, "input is not ASCII"));
        }
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
        let (n, m) = parse_pair(hl, header, "header \"n m\"")?;
        if n > MAX_VERTICES {
            return Err(Error::parse(
                hl,
                format!("{n} vertices exceeds maximum {MAX_VERTICES}"),
            ));
        }
        let mut g = Graph {
            n,
            adj: vec![VertexSet::EMPTY; n],
            edges: Vec::new(),
            labels: None,
        };
        let mut seen = 0;
        for (ln, line) in lines.by_ref() {
            if seen == m {
                return Err(Error::parse(
                    ln,
                    format!("unexpected content after {m} edges"),
                ));
            }
            let (u, v) = parse_pair(ln, line, "edge \"u v\"")?;
            g.add_edge(u, v).map_err(|msg| Error::parse(ln, msg))?;
            seen += 1;
        }
        if seen < m {
            return Err(Error::parse(
                hl,
                format!("header declares {m} edges, found {seen}"),
            ));
        }
        g.edges.sort_unstable();
        Ok(g)
    }

    pub fn from_graph6(text: &str) -> Result<Graph> {
        let line = text.strip_suffix('\n').unwrap_or(text);
        let line = line.strip_prefix(">>graph6<<").unwrap_or(line);
        let bytes = line.as_bytes();
        if bytes.iter().any(|&b| !(63..=126).contains(&b)) {
            return Err(Error::parse(1, "graph6 byte outside 63..=126"));
        }
        let (n, rest) = match bytes.first() {
            None => return Err(Error::parse(1, "empty graph6 string")),
            Some(&126) => {
                if bytes.len() < 4 || bytes[1] == 126 {
                    return Err(Error::parse(1, "unsupported graph6 size field"));
                }
                let n = bytes[1..4]
                    .iter()
                    .fold(0usize, |acc, &b| acc << 6 | (b - 63) as usize);
                (n, &bytes[4..])
            }
            Some(&b) => ((b - 63) as usize, &bytes[1..]),
        };
        if n > MAX_VERTICES {
            return Err(Error::parse(
                1,
                format!("{n} vertices exceeds maximum {MAX_VERTICES}"),
            ));
        }
        let bits = n * n.saturating_sub(1) / 2;
        if rest.len() != bits.div_ceil(6) {
            return Err(Error::parse(1, "graph6 length does not match vertex count"));
        }
        let bit = |i: usize| (rest[i / 6] - 63) >> (5 - i % 6) & 1 == 1;
        let mut e = Vec::new();
        let mut i = 0;
        for v in 1..n {
            for u in 0..v {
                if bit(i) {
                    e.push((u, v));
                }
                i += 1;
            }
        }
        for j in bits..rest.len() * 6 {
            if bit(j) {
                return Err(Error::parse(1, "graph6 padding bits must be zero"));
            }
        }
        Graph::new(n, &e).map_err(|e| Error::parse(1, e.to_string()))
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for (u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn to_graph6(&self) -> String {
        let n = self.n;
        let mut out: Vec<u8> = Vec::new();
        if n <= 62 {
            out.push(n as u8 + 63);
        } else {
            out.push(126);
            for shift in [12, 6, 0] {
                out.push(((n >> shift) & 63) as u8 + 63);
            }
        }
        let mut acc = 0u8;
        let mut count = 0;
        for v in 1..n {
            for u in 0..v {
                acc = acc << 1 | self.has_edge(u, v) as u8;
                count += 1;
                if count == 6 {
                    out.push(acc + 63);
                    acc = 0;
                    count = 0;
                }
            }
        }
        if count > 0 {
            out.push((acc << (6 - count)) + 63);
        }
        String::from_utf8(out).expect("graph6 is ASCII")
    }

    /// Hex SHA-256 of the canonical edge-list emission.
    pub fn hash(&self) -> String {
        hex_digest(self.to_edge_list().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn parse_pair(line_no: usize, line: &str, what: &str) -> Result<(usize, usize)> {
    if line.contains('\r') {
        return Err(Error::parse(
            line_no,
            "carriage return found; use LF line endings",
        ));
    }
    let parts: Vec<&str> = line.split_ascii_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::parse(
            line_no,
            format!("expected {what}, got {line:?}"),
        ));
    }
    let p = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::parse(line_no, format!("not a non-negative integer: {s:?}")))
    };
    Ok((p(parts[0])?, p(parts[1])?))
}
