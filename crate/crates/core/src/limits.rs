use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::flow::disjoint_paths;
use crate::graph::Graph;
use crate::search::find_f_tangles;
use crate::separation::Separation;
use crate::system::SeparationSystem;
use crate::vset::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", deny_unknown_fields)]
pub enum TruncationFamily {
    Grid { rows: usize },
    Ray,
    RayClique { clique: usize },
    Edgeless,
    Example54,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Stated,
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EndData {
    pub ends: usize,
    pub degree: usize,
    /// Documentation only.
    pub dominating: usize,
    pub source: DataSource,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub graph: Graph,
    pub boundary: VertexSet,
    /// The first slice, where boundary-reaching paths start.
    pub level0: VertexSet,
}

impl TruncationFamily {
    pub fn parse(name: &str, param: Option<usize>) -> Result<Self> {
        Ok(match name {
            "grid" => TruncationFamily::Grid { rows: param.unwrap_or(3) },
            "ray" => TruncationFamily::Ray,
            "ray_clique" | "ray+clique" => TruncationFamily::RayClique { clique: param.unwrap_or(5) },
            "edgeless" => TruncationFamily::Edgeless,
            "example_5_4" => TruncationFamily::Example54,
            _ => return Err(Error::Argument(format!("unknown truncation family {name}"))),
        })
    }

    pub fn min_n(self) -> usize {
        match self {
            TruncationFamily::Grid { .. } | TruncationFamily::Example54 | TruncationFamily::Edgeless => 1,
            TruncationFamily::Ray | TruncationFamily::RayClique { .. } => 0,
        }
    }

    pub fn end_data(self) -> EndData {
        match self {
            TruncationFamily::Grid { rows } => EndData { ends: 1, degree: rows, dominating: 0, source: DataSource::Stated },
            TruncationFamily::Ray | TruncationFamily::RayClique { .. } => {
                EndData { ends: 1, degree: 1, dominating: 0, source: DataSource::Derived }
            }
            TruncationFamily::Edgeless => EndData { ends: 0, degree: 0, dominating: 0, source: DataSource::Derived },
            TruncationFamily::Example54 => EndData { ends: 1, degree: 4, dominating: 0, source: DataSource::Derived },
        }
    }
}

pub fn truncate(fam: TruncationFamily, n: usize) -> Result<Truncation> {
    if n < fam.min_n() {
        return Err(Error::Argument(format!("{fam:?} needs n ≥ {}", fam.min_n())));
    }
    let t = match fam {
        TruncationFamily::Grid { rows } => {
            if rows == 0 {
                return Err(Error::Argument("grid needs at least one row".into()));
            }
            let graph = Graph::grid(rows, n);
            let col = |c: usize| (0..rows).map(|r| c * rows + r).collect::<VertexSet>();
            Truncation { graph, boundary: col(n - 1), level0: col(0) }
        }
        TruncationFamily::Ray => {
            Truncation { graph: Graph::path(n + 1), boundary: VertexSet::singleton(n), level0: VertexSet::singleton(0) }
        }
        TruncationFamily::RayClique { clique } => {
            if clique == 0 {
                return Err(Error::Argument("clique needs at least one vertex".into()));
            }
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, i + 1)).collect();
            let k: Vec<usize> = std::iter::once(0).chain(n + 1..n + clique).collect();
            for (i, &a) in k.iter().enumerate() {
                for &b in &k[i + 1..] {
                    edges.push((a, b));
                }
            }
            let graph = Graph::new(n + clique, &edges)?;
            Truncation { graph, boundary: VertexSet::singleton(n), level0: VertexSet::singleton(0) }
        }
        TruncationFamily::Edgeless => {
            let graph = Graph::new(n, &[])?;
            Truncation { graph, boundary: VertexSet::singleton(n - 1), level0: VertexSet::singleton(0) }
        }
        TruncationFamily::Example54 => {
            let mut edges = Vec::new();
            for j in 0..n {
                for i in 0..4 {
                    for i2 in i + 1..4 {
                        edges.push((4 * j + i, 4 * j + i2));
                    }
                    if j + 1 < n {
                        for i2 in 0..4 {
                            edges.push((4 * j + i, 4 * (j + 1) + i2));
                        }
                    }
                }
            }
            let graph = Graph::new(4 * n, &edges)?;
            let col = |c: usize| (4 * c..4 * c + 4).collect::<VertexSet>();
            Truncation { graph, boundary: col(n - 1), level0: col(0) }
        }
    };
    Ok(t)
}

/// The vertices of the clique glued on at `0`.
pub fn ray_clique_core(n: usize, clique: usize) -> VertexSet {
    std::iter::once(0).chain(n + 1..n + clique).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProxyOrientation {
    pub k: usize,
    pub oriented: usize,
    pub unoriented: usize,
    pub consistent: bool,
    pub tk_avoiding: bool,
    pub violation: Option<Vec<Separation>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndDegreeReport {
    pub n: usize,
    pub paths: usize,
    pub witness: Vec<Vec<usize>>,
    pub declared: EndData,
    pub matches_declared: bool,
    pub orientation: Option<ProxyOrientation>,
}

/// Disjoint paths from the first slice to the boundary, plus the boundary-ward orientation of `S_k`.
pub fn end_degree_proxy(fam: TruncationFamily, n: usize, k: Option<usize>) -> Result<EndDegreeReport> {
    let t = truncate(fam, n)?;
    if !t.graph.is_connected() {
        return Err(Error::Argument(format!("truncation of {fam:?} at {n} is disconnected")));
    }
    let p = disjoint_paths(&t.graph, t.graph.vertices(), t.level0, t.boundary);
    let declared = fam.end_data();
    let orientation = k.map(|k| proxy_orientation(&t, k)).transpose()?;
    Ok(EndDegreeReport {
        n,
        paths: p.len(),
        matches_declared: p.len() == declared.degree,
        witness: p.paths,
        declared,
        orientation,
    })
}

pub fn proxy_orientation(t: &Truncation, k: usize) -> Result<ProxyOrientation> {
    let sys = SeparationSystem::enumerate(&t.graph, k)?;
    let mut o = Vec::new();
    for &s in sys.members() {
        let left = s.small_strict().meets(t.boundary);
        let right = s.big_strict().meets(t.boundary);
        match (left, right) {
            (false, true) => o.push(s),
            (true, false) => o.push(s.reverse()),
            _ => {}
        }
    }
    let consistent = !o
        .iter()
        .any(|&x| o.iter().any(|&y| x.canonical() != y.canonical() && x.reverse().lt(y)));
    let violation = cover_triple(&o, t.graph.vertices());
    Ok(ProxyOrientation {
        k,
        oriented: o.len(),
        unoriented: sys.len() - o.len(),
        consistent,
        tk_avoiding: violation.is_none(),
        violation,
    })
}

/// At most three separations whose small sides cover `v`.
fn cover_triple(o: &[Separation], v: VertexSet) -> Option<Vec<Separation>> {
    let mut small: Vec<Separation> = Vec::new();
    for &s in o {
        if !o.iter().any(|t| t.a != s.a && s.a.is_subset(t.a)) && !small.iter().any(|t| t.a == s.a) {
            small.push(s);
        }
    }
    for (i, &x) in small.iter().enumerate() {
        if x.a == v {
            return Some(vec![x]);
        }
        for (j, &y) in small.iter().enumerate().skip(i) {
            let missing = v.difference(x.a.union(y.a));
            if missing.is_empty() {
                return Some(vec![x, y]);
            }
            if let Some(&z) = small[j..].iter().find(|z| missing.is_subset(z.a)) {
                return Some(vec![x, y, z]);
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceSpec {
    /// `({0..i+1}, {i..} ∪ V(K))` for `i < n`.
    RayClique { clique: usize },
    /// `({columns ≤ j}, {columns ≥ j})` for `j < n`.
    Columns,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceReport {
    pub n: usize,
    pub labels: Vec<Separation>,
    pub orders: Vec<usize>,
    pub valid: bool,
    pub invalid_at: Option<usize>,
    pub increasing: bool,
    pub not_increasing_at: Option<usize>,
    pub big_intersection: VertexSet,
    pub strict_big_intersection: VertexSet,
    /// Size of the strict big side intersection after each prefix.
    pub prefix_sizes: Vec<usize>,
    pub weakly_exhaustive: bool,
    pub core: Option<VertexSet>,
    pub core_persists: Option<bool>,
}

pub fn sequence_labels(spec: SequenceSpec, n: usize) -> Result<(Truncation, Vec<Separation>)> {
    match spec {
        SequenceSpec::RayClique { clique } => {
            let t = truncate(TruncationFamily::RayClique { clique }, n)?;
            let k = ray_clique_core(n, clique);
            let labels = (0..n)
                .map(|i| Separation::new((0..=i + 1).collect(), (i..=n).collect::<VertexSet>().union(k)))
                .collect();
            Ok((t, labels))
        }
        SequenceSpec::Columns => {
            let t = truncate(TruncationFamily::Example54, n)?;
            let labels = (0..n).map(|j| Separation::new((0..4 * j + 4).collect(), (4 * j..4 * n).collect())).collect();
            Ok((t, labels))
        }
    }
}

pub fn sequence_report(g: &Graph, labels: &[Separation], core: Option<VertexSet>) -> SequenceReport {
    let invalid_at = labels.iter().position(|s| !s.is_separation_of(g));
    let not_increasing_at = labels.windows(2).position(|w| !w[0].lt(w[1])).map(|i| i + 1);
    let mut big = g.vertices();
    let mut strict = g.vertices();
    let mut prefix_sizes = Vec::with_capacity(labels.len());
    for s in labels {
        big = big.intersection(s.b);
        strict = strict.intersection(s.big_strict());
        prefix_sizes.push(strict.len());
    }
    SequenceReport {
        n: labels.len(),
        labels: labels.to_vec(),
        orders: labels.iter().map(|s| s.order()).collect(),
        valid: invalid_at.is_none(),
        invalid_at,
        increasing: not_increasing_at.is_none(),
        not_increasing_at,
        big_intersection: big,
        strict_big_intersection: strict,
        prefix_sizes,
        weakly_exhaustive: strict.is_empty(),
        core,
        core_persists: core.map(|c| c.is_subset(big)),
    }
}

/// Whether every pair of an away-from-the-end label and a later boundary-ward label is inconsistent.
pub fn later_labels_force_boundary(labels: &[Separation]) -> bool {
    labels.iter().enumerate().all(|(i, &s)| {
        labels[i + 1..].iter().all(|&t| {
            let away = s.reverse();
            away.canonical() != t.canonical() && away.reverse().lt(t)
        })
    })
}

/// Number of `T_1`-tangles of the edgeless graph on `m` vertices.
pub fn edgeless_tangle_count(m: usize, k: usize) -> Result<usize> {
    if k != 1 {
        return Err(Error::Argument("edgeless tangle count is defined for k = 1".into()));
    }
    let g = Graph::new(m, &[])?;
    let (_, ts) = find_f_tangles(&g, 1, &FamilySpec::Tk { k: 1 }, usize::MAX)?;
    Ok(ts.len())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LimitsReport {
    pub family: TruncationFamily,
    pub n: usize,
    pub vertices: usize,
    pub graph_hash: String,
    pub boundary: VertexSet,
    pub end_degree: Option<EndDegreeReport>,
    pub sequence: Option<SequenceReport>,
    pub forced_boundary_ward: Option<bool>,
    pub tangle_count: Option<usize>,
}

/// Every proxy that applies to the family, computed on `G_n`.
pub fn limits_report(fam: TruncationFamily, n: usize, k: Option<usize>) -> Result<LimitsReport> {
    let t = truncate(fam, n)?;
    let end_degree = if t.graph.is_connected() { Some(end_degree_proxy(fam, n, k)?) } else { None };
    let seq = match fam {
        TruncationFamily::RayClique { clique } => Some((SequenceSpec::RayClique { clique }, Some(ray_clique_core(n, clique)))),
        TruncationFamily::Example54 => Some((SequenceSpec::Columns, None)),
        _ => None,
    };
    let (sequence, forced_boundary_ward) = match seq {
        Some((spec, core)) if n >= 1 => {
            let (_, labels) = sequence_labels(spec, n)?;
            let forced = matches!(spec, SequenceSpec::Columns).then(|| later_labels_force_boundary(&labels));
            (Some(sequence_report(&t.graph, &labels, core)), forced)
        }
        _ => (None, None),
    };
    let tangle_count = match fam {
        TruncationFamily::Edgeless => Some(edgeless_tangle_count(n, 1)?),
        _ => None,
    };
    Ok(LimitsReport {
        family: fam,
        n,
        vertices: t.graph.n(),
        graph_hash: t.graph.hash(),
        boundary: t.boundary,
        end_degree,
        sequence,
        forced_boundary_ward,
        tangle_count,
    })
}
