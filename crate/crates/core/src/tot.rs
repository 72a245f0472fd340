use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extend::{refine_inessential_star, RefineOptions, RefineVerdict};
use crate::family::{maximal_stars, CompiledFamily, FamilySpec};
use crate::graph::Graph;
use crate::orientation::{closely_related, distinguishers, Orientation};
use crate::search::search_tangles;
use crate::separation::{corner_box, Separation};
use crate::star::{interior, is_star};
use crate::stree::{glue, STree};
use crate::system::SeparationSystem;
use crate::td::TreeDecomposition;

pub const TANGLE_LIMIT: usize = 4096;
pub const STAR_LIMIT: usize = 2_000_000;

fn key(s: Separation) -> (usize, crate::vset::VertexSet, crate::vset::VertexSet, crate::vset::VertexSet) {
    s.canonical().system_key()
}

/// All `F`-tangles of `S_k`, refusing if there are more than the limit.
pub fn all_tangles(sys: &SeparationSystem, spec: &FamilySpec) -> Result<Vec<Orientation>> {
    let fam = CompiledFamily::compile(spec, sys)?;
    let ts = search_tangles(sys, &fam, TANGLE_LIMIT + 1);
    if ts.len() > TANGLE_LIMIT {
        return Err(Error::Refusal(format!("more than {TANGLE_LIMIT} tangles")));
    }
    Ok(ts)
}

/// Whether some separation of `set` distinguishes `a` and `b` with minimal order.
fn efficiently_distinguished(sys: &SeparationSystem, set: &[Separation], a: &Orientation, b: &Orientation) -> bool {
    let d = distinguishers(sys, a, b);
    d.efficient.iter().any(|s| set.contains(&s.canonical()))
}

fn distinguished(sys: &SeparationSystem, set: &[Separation], a: &Orientation, b: &Orientation) -> bool {
    let d = distinguishers(sys, a, b);
    d.all.iter().any(|s| set.contains(&s.canonical()))
}

/// Decomposition whose induced separations form a nested set distinguishing
/// all `F`-tangles of `S_k` efficiently.
pub fn build_tree_of_tangles(g: &Graph, k: usize, spec: &FamilySpec) -> Result<TreeDecomposition> {
    let sys = SeparationSystem::enumerate(g, k)?;
    let tangles = all_tangles(&sys, spec)?;
    let mut pairs = Vec::new();
    for i in 0..tangles.len() {
        for j in i + 1..tangles.len() {
            let d = distinguishers(&sys, &tangles[i], &tangles[j]);
            pairs.push((d.min_order.unwrap_or(usize::MAX), i, j));
        }
    }
    pairs.sort();
    let mut chosen: Vec<Separation> = Vec::new();
    for &(_, i, j) in &pairs {
        let (a, b) = (&tangles[i], &tangles[j]);
        if efficiently_distinguished(&sys, &chosen, a, b) {
            continue;
        }
        let d = distinguishers(&sys, a, b);
        let mut pool: Vec<Separation> = d.efficient.iter().map(|s| s.canonical()).collect();
        pool.sort_by_key(|&s| key(s));
        let mut found = None;
        let mut seen = 0;
        while found.is_none() && seen < pool.len() {
            let end = pool.len();
            for idx in seen..end {
                let s = pool[idx];
                if chosen.iter().all(|c| c.is_nested(s)) {
                    found = Some(s);
                    break;
                }
            }
            if found.is_some() {
                break;
            }
            // uncross against the chosen separations through corners
            for idx in seen..end {
                let s = pool[idx];
                for c in &chosen {
                    if c.is_nested(s) {
                        continue;
                    }
                    for x in corner_box(s, *c).corners {
                        let x = x.canonical();
                        if x.order() == s.order()
                            && sys.contains(x)
                            && distinguishes(&sys, x, a, b)
                            && !pool.contains(&x)
                        {
                            pool.push(x);
                        }
                    }
                }
            }
            seen = end;
        }
        match found {
            Some(s) => chosen.push(s),
            None => {
                return Err(Error::Refusal(format!(
                    "no efficient distinguisher of tangles {i} and {j} is nested with the chosen ones"
                )))
            }
        }
    }
    td_from_nested(g, &chosen)
}

fn distinguishes(sys: &SeparationSystem, s: Separation, a: &Orientation, b: &Orientation) -> bool {
    a.contains(sys, s) != b.contains(sys, s)
}

/// The decomposition of a nested set of proper, non-trivial separations.
pub fn td_from_nested(g: &Graph, nested: &[Separation]) -> Result<TreeDecomposition> {
    if nested.is_empty() {
        return Ok(TreeDecomposition::single(g.vertices()));
    }
    // node at the head of each oriented separation
    let head = |s: Separation| -> Result<Vec<Separation>> {
        let mut o = Vec::with_capacity(nested.len());
        for &t in nested {
            let x = if t == s.canonical() {
                s
            } else if t.le(s) {
                t
            } else if t.reverse().le(s) {
                t.reverse()
            } else if s.le(t) {
                t.reverse()
            } else if s.le(t.reverse()) {
                t
            } else {
                return Err(Error::Structure(format!("{s:?} and {t:?} are not nested")));
            };
            o.push(x);
        }
        Ok(o)
    };
    let mut nodes: Vec<Vec<Separation>> = Vec::new();
    let mut edges = Vec::new();
    for &t in nested {
        let mut ends = [0usize; 2];
        for (e, s) in [t, t.reverse()].into_iter().enumerate() {
            let o = head(s)?;
            ends[e] = match nodes.iter().position(|n| *n == o) {
                Some(p) => p,
                None => {
                    nodes.push(o);
                    nodes.len() - 1
                }
            };
        }
        edges.push((ends[0], ends[1]));
    }
    let bags = nodes.iter().map(|o| interior(g, o)).collect();
    let td = TreeDecomposition::from_edges(bags, &edges)?;
    let rep = td.validate(g, None);
    if !rep.valid {
        return Err(Error::Structure(format!("nested set gives no decomposition: {:?}", rep.violation)));
    }
    Ok(td)
}

/// Smallest interior over stars `ϱ ⊆ τ` exclusive for the tangle set, with
/// `σ ≤ ϱ` when `sigma` is given and elements closely related to `τ` when asked.
pub fn min_exclusive_star(
    sys: &SeparationSystem,
    tangles: &[Orientation],
    tau: usize,
    sigma: Option<&[Separation]>,
    closely: bool,
) -> Result<Option<Vec<Separation>>> {
    let t = &tangles[tau];
    let g = sys.graph();
    let mut allowed = FixedBitSet::with_capacity(sys.oriented_len());
    for id in t.ids() {
        if !closely || closely_related(sys, sys.sep(id), t) {
            allowed.insert(id);
        }
    }
    let stars = maximal_stars(sys, &allowed, STAR_LIMIT + 1);
    if stars.len() > STAR_LIMIT {
        return Err(Error::Refusal(format!("more than {STAR_LIMIT} stars in the tangle")));
    }
    let others: Vec<FixedBitSet> =
        tangles.iter().enumerate().filter(|&(i, _)| i != tau).map(|(_, o)| o.bitset(sys)).collect();
    let mut best: Option<(usize, Vec<Separation>)> = None;
    let mut consider = |star: Vec<Separation>| {
        let size = interior(g, &star).len();
        if best.as_ref().is_some_and(|(b, _)| *b <= size) {
            return;
        }
        best = Some((size, star));
    };
    // the empty star has interior V and is exclusive only for a single tangle
    if others.is_empty() && sigma.is_none_or(|s| s.is_empty()) {
        consider(Vec::new());
    }
    for ids in stars {
        if others.iter().any(|o| ids.iter().all(|&i| o.contains(i))) {
            continue;
        }
        let star: Vec<Separation> = ids.iter().map(|&i| sys.sep(i)).collect();
        if let Some(sig) = sigma {
            if !sig.iter().all(|r| star.iter().any(|x| r.le(*x))) {
                continue;
            }
        }
        consider(star);
    }
    Ok(best.map(|(_, s)| s))
}

/// A star `σ′ ⊆ τ` with `σ ≤ σ′`, elements closely related to `τ`, of minimum interior.
pub fn minimize_exclusive_star(
    sys: &SeparationSystem,
    tangles: &[Orientation],
    tau: usize,
    sigma: &[Separation],
) -> Result<Vec<Separation>> {
    if !is_star(sigma) {
        return Err(Error::Argument("σ is not a star".into()));
    }
    let holders: Vec<usize> =
        (0..tangles.len()).filter(|&i| sigma.iter().all(|&s| tangles[i].contains(sys, s))).collect();
    if holders != [tau] {
        return Err(Error::Refusal(format!("σ lies in tangles {holders:?}, not exclusively in {tau}")));
    }
    min_exclusive_star(sys, tangles, tau, Some(sigma), true)?
        .ok_or_else(|| Error::Soundness("no exclusive star above σ".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeRefinement {
    pub node: usize,
    pub tangle: Option<usize>,
    pub star: Vec<Separation>,
    pub minimized: Option<Vec<Separation>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedTree {
    pub td: TreeDecomposition,
    pub stree: STree,
    pub nodes: Vec<NodeRefinement>,
}

/// Refines a tree-of-tangles decomposition: inessential parts become trees
/// over the family, essential parts shrink to a minimum exclusive star.
pub fn refine_tree_of_tangles(g: &Graph, k: usize, spec: &FamilySpec, td: &TreeDecomposition) -> Result<RefinedTree> {
    let rep = td.validate(g, None);
    if !rep.valid {
        return Err(Error::Argument(format!("invalid decomposition: {:?}", rep.violation)));
    }
    let sys = SeparationSystem::enumerate(g, k)?;
    let tangles = all_tangles(&sys, spec)?;
    let induced = td.induced_separations();
    let canon: Vec<Separation> = induced.iter().map(|(_, s)| s.canonical()).collect();
    for &((c, p), s) in &induced {
        if !sys.contains(s) {
            return Err(Error::Refusal(format!("edge {c}-{p} induces a separation of order ≥ {k}")));
        }
        let ok = (0..tangles.len()).any(|i| {
            (i + 1..tangles.len()).any(|j| {
                let d = distinguishers(&sys, &tangles[i], &tangles[j]);
                d.efficient.iter().any(|x| x.canonical() == s.canonical())
            })
        });
        if !ok {
            return Err(Error::Refusal(format!("edge {c}-{p} distinguishes no pair of tangles efficiently")));
        }
    }
    for i in 0..tangles.len() {
        for j in i + 1..tangles.len() {
            if !distinguished(&sys, &canon, &tangles[i], &tangles[j]) {
                return Err(Error::Refusal(format!("tangles {i} and {j} are not distinguished")));
            }
        }
    }
    let mut stars: Vec<Vec<Separation>> = vec![Vec::new(); td.len()];
    for &((c, p), s) in &induced {
        stars[p].push(s);
        stars[c].push(s.reverse());
    }
    let opts = RefineOptions::default();
    let mut pieces = BTreeMap::new();
    let mut nodes = Vec::new();
    for (t, sigma) in stars.iter().enumerate() {
        let home: Vec<usize> =
            (0..tangles.len()).filter(|&i| sigma.iter().all(|&s| tangles[i].contains(&sys, s))).collect();
        match home.as_slice() {
            [] => {
                let out = refine_inessential_star(g, k, spec, sigma, opts)?;
                let RefineVerdict::STree(st) = out.verdict else {
                    return Err(Error::Soundness(format!("node {t} holds no tangle yet refines to one")));
                };
                pieces.insert(t, st);
                nodes.push(NodeRefinement { node: t, tangle: None, star: sigma.clone(), minimized: None });
            }
            [tau] => {
                let min = minimize_exclusive_star(&sys, &tangles, *tau, sigma)?;
                pieces.insert(t, essential_piece(g, k, spec, sigma, &min, opts)?);
                nodes.push(NodeRefinement { node: t, tangle: Some(*tau), star: sigma.clone(), minimized: Some(min) });
            }
            _ => return Err(Error::Refusal(format!("node {t} is home to several tangles"))),
        }
    }
    let stree = glue(td, k, &pieces)?;
    let out_td = stree.to_td(g)?;
    let check = out_td.validate(g, Some(td));
    if !check.valid || check.refines_other != Some(true) {
        return Err(Error::Soundness(format!("refined decomposition fails: {check:?}")));
    }
    Ok(RefinedTree { td: out_td, stree, nodes })
}

/// A central node with star `σ′` and, for each `s⃗ ∈ σ′`, the refinement of
/// `{s⃖} ∪ {r⃗ ∈ σ : r⃗ ≤ s⃗}` hung from it.
fn essential_piece(
    g: &Graph,
    k: usize,
    spec: &FamilySpec,
    sigma: &[Separation],
    min: &[Separation],
    opts: RefineOptions,
) -> Result<STree> {
    let mut st = STree { nodes: 1, edges: Vec::new() };
    let center = 0;
    for &s in min {
        let mut rho = vec![s.reverse()];
        rho.extend(sigma.iter().copied().filter(|r| r.le(s)));
        let out = refine_inessential_star(g, k, spec, &rho, opts)?;
        let RefineVerdict::STree(piece) = out.verdict else {
            return Err(Error::Soundness(format!("region behind {s:?} holds a tangle")));
        };
        let piece = piece.prune_irredundant();
        let deg = piece.degrees();
        let leaf = piece
            .edges
            .iter()
            .find_map(|e| {
                if deg[e.u] == 1 && e.forward == s.reverse() {
                    Some(e.u)
                } else if deg[e.v] == 1 && e.backward == s.reverse() {
                    Some(e.v)
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::Soundness(format!("refinement lacks leaf {:?}", s.reverse())))?;
        let mut map = vec![0; piece.nodes];
        for (u, slot) in map.iter_mut().enumerate() {
            *slot = if u == leaf { center } else { st.add_node() };
        }
        for e in &piece.edges {
            st.add_edge(map[e.u], map[e.v], e.forward);
        }
    }
    Ok(st)
}
