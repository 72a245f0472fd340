use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::duality::{duality, Verdict};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::graph::Graph;
use crate::orientation::{check_orientation, Orientation};
use crate::search::find_f_tangles;
use crate::separation::Separation;
use crate::stree::STree;
use crate::system::SeparationSystem;
use crate::treewidth::exact_treewidth;
use crate::vset::VertexSet;

pub const MAX_BRAMBLE_SEARCH_VERTICES: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bramble {
    pub elements: Vec<VertexSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BrambleReport {
    pub valid: bool,
    pub violation: Option<String>,
    pub order: usize,
    pub cover: VertexSet,
}

/// Smallest set meeting every element.
pub fn min_cover(sets: &[VertexSet]) -> VertexSet {
    let mut best = sets.iter().fold(VertexSet::EMPTY, |a, &s| a.union(s));
    if sets.iter().any(|s| s.is_empty()) {
        return best;
    }
    fn rec(sets: &[VertexSet], cur: VertexSet, best: &mut VertexSet) {
        if cur.len() >= best.len() {
            return;
        }
        let Some(open) = sets.iter().filter(|s| !s.meets(cur)).min_by_key(|s| s.len()) else {
            *best = cur;
            return;
        };
        // pairwise disjoint unhit sets bound the remaining cost from below
        let mut packed = 0;
        let mut used = VertexSet::EMPTY;
        for s in sets.iter().filter(|s| !s.meets(cur)) {
            if !s.meets(used) {
                used = used.union(*s);
                packed += 1;
            }
        }
        if cur.len() + packed >= best.len() {
            return;
        }
        for v in open.iter() {
            rec(sets, cur.with(v), best);
        }
    }
    rec(sets, VertexSet::EMPTY, &mut best);
    best
}

pub fn bramble_order(g: &Graph, b: &Bramble) -> BrambleReport {
    let mut violation = None;
    for (i, &x) in b.elements.iter().enumerate() {
        if x.is_empty() || !x.is_subset(g.vertices()) || !g.is_connected_set(x) {
            violation = Some(format!("element {i} is empty, foreign or disconnected"));
            break;
        }
    }
    if violation.is_none() {
        'outer: for i in 0..b.elements.len() {
            for j in i + 1..b.elements.len() {
                if !g.touch(b.elements[i], b.elements[j]) {
                    violation = Some(format!("elements {i} and {j} do not touch"));
                    break 'outer;
                }
            }
        }
    }
    let cover = min_cover(&b.elements);
    BrambleReport { valid: violation.is_none(), violation, order: cover.len(), cover }
}

/// Orients every separation of order `< k` towards the side holding a bramble element.
pub fn bramble_to_tangle(g: &Graph, k: usize, b: &Bramble) -> Result<(SeparationSystem, Orientation)> {
    let rep = bramble_order(g, b);
    if !rep.valid {
        return Err(Error::Argument(format!("not a bramble: {:?}", rep.violation)));
    }
    if rep.order < k {
        return Err(Error::Refusal(format!("bramble order {} is below {k}", rep.order)));
    }
    let sys = SeparationSystem::enumerate(g, k)?;
    let mut ids = Vec::with_capacity(sys.len());
    for (i, &s) in sys.members().iter().enumerate() {
        let right = b.elements.iter().any(|x| x.is_subset(s.big_strict()));
        let left = b.elements.iter().any(|x| x.is_subset(s.small_strict()));
        if right == left {
            return Err(Error::Soundness(format!("{s:?} has bramble elements on {} side", if right { "each" } else { "neither" })));
        }
        ids.push(if right { 2 * i } else { 2 * i + 1 });
    }
    let o = Orientation::from_ids(&sys, ids)?;
    let f = check_orientation(&sys, &o, &FamilySpec::Uk { k })?;
    if !f.consistent || !f.avoids_family {
        return Err(Error::Soundness(format!("bramble orientation is not a tangle: {f:?}")));
    }
    Ok((sys, o))
}

/// A connected subset of `B∖A` with its least vertex and a neighbour of each separator vertex.
fn grow(g: &Graph, s: Separation) -> Result<VertexSet> {
    let region = s.big_strict();
    let v = region.min().ok_or_else(|| Error::Soundness(format!("{s:?} has an empty strict big side")))?;
    let mut u = VertexSet::singleton(v);
    for x in s.separator().iter() {
        if g.neighbours(x).meets(u) {
            continue;
        }
        let targets = g.neighbours(x).intersection(region);
        // breadth-first search from the current set, lowest index first
        let mut prev = vec![usize::MAX; g.n()];
        let mut frontier: Vec<usize> = u.iter().collect();
        let mut seen = u;
        let mut hit = None;
        while hit.is_none() && !frontier.is_empty() {
            let mut next = Vec::new();
            for &a in &frontier {
                for b in g.neighbours(a).intersection(region).difference(seen).iter() {
                    seen.insert(b);
                    prev[b] = a;
                    next.push(b);
                }
            }
            next.sort_unstable();
            hit = next.iter().copied().find(|&b| targets.contains(b));
            frontier = next;
        }
        let Some(mut b) = hit else {
            return Err(Error::Soundness(format!("separator vertex {x} has no neighbour reachable in {s:?}")));
        };
        while !u.contains(b) {
            u.insert(b);
            b = prev[b];
        }
    }
    Ok(u)
}

/// A bramble of order at least `k` from the maximal elements of a `U_k`-tangle.
pub fn tangle_to_bramble(sys: &SeparationSystem, tau: &Orientation) -> Result<Bramble> {
    let k = sys.k();
    let g = sys.graph();
    let f = check_orientation(sys, tau, &FamilySpec::Uk { k })?;
    if !f.consistent || !f.avoids_family {
        return Err(Error::Argument(format!("not a U_{k}-tangle: {f:?}")));
    }
    let seps = tau.separations(sys);
    let maximal: Vec<Separation> =
        seps.iter().copied().filter(|&s| !seps.iter().any(|&t| t != s && s.le(t))).collect();
    let mut elements = Vec::new();
    for s in maximal {
        let u = grow(g, s)?;
        if !elements.contains(&u) {
            elements.push(u);
        }
    }
    elements.sort();
    let b = Bramble { elements };
    let rep = bramble_order(g, &b);
    if !rep.valid || rep.order < k {
        return Err(Error::Soundness(format!("bramble from tangle fails: {rep:?}")));
    }
    Ok(b)
}

/// Exhaustive maximum bramble order over all brambles of connected sets.
pub fn max_bramble_order(g: &Graph) -> Result<(usize, Bramble)> {
    let n = g.n();
    if n > MAX_BRAMBLE_SEARCH_VERTICES {
        return Err(Error::Refusal(format!("bramble search limited to {MAX_BRAMBLE_SEARCH_VERTICES} vertices")));
    }
    if n == 0 {
        return Ok((0, Bramble { elements: Vec::new() }));
    }
    let sets: Vec<VertexSet> = (1u128..1 << n)
        .map(VertexSet::from_bits)
        .filter(|&s| g.is_connected_set(s))
        .collect();
    let m = sets.len();
    let adj: Vec<FixedBitSet> = (0..m)
        .map(|i| {
            let mut b = FixedBitSet::with_capacity(m);
            for j in 0..m {
                if i != j && g.touch(sets[i], sets[j]) {
                    b.insert(j);
                }
            }
            b
        })
        .collect();
    let mut best = (0, Vec::new());
    let mut p = FixedBitSet::with_capacity(m);
    p.insert_range(..);
    cliques(&adj, &sets, &mut Vec::new(), p, FixedBitSet::with_capacity(m), &mut best);
    let elements = best.1.iter().map(|&i| sets[i]).collect();
    Ok((best.0, Bramble { elements }))
}

fn cliques(
    adj: &[FixedBitSet],
    sets: &[VertexSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    best: &mut (usize, Vec<usize>),
) {
    if p.is_clear() && x.is_clear() {
        let members: Vec<VertexSet> = r.iter().map(|&i| sets[i]).collect();
        let order = min_cover(&members).len();
        if order > best.0 {
            *best = (order, r.clone());
        }
        return;
    }
    let pivot = p.ones().chain(x.ones()).max_by_key(|&u| p.intersection(&adj[u]).count()).unwrap();
    let mut todo = p.clone();
    todo.difference_with(&adj[pivot]);
    for v in todo.ones() {
        let mut np = p.clone();
        np.intersect_with(&adj[v]);
        let mut nx = x.clone();
        nx.intersect_with(&adj[v]);
        r.push(v);
        cliques(adj, sets, r, np, nx, best);
        r.pop();
        p.set(v, false);
        x.insert(v);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem4Report {
    pub k: usize,
    pub tangle: bool,
    pub bramble: bool,
    pub no_tree: bool,
    pub tw_at_least: bool,
    pub treewidth: i64,
    /// `exhaustive` for small graphs, otherwise `from_tangle`.
    pub bramble_method: String,
    pub tangle_witness: Option<Vec<Separation>>,
    pub bramble_witness: Option<Bramble>,
    pub tree_witness: Option<STree>,
    pub all_equal: bool,
}

pub fn theorem4_report(g: &Graph, k: usize) -> Result<Theorem4Report> {
    let spec = FamilySpec::Uk { k };
    let (sys, tangles) = find_f_tangles(g, k, &spec, 1)?;
    let tangle = tangles.first().cloned();
    let (bramble, bramble_method, bramble_witness) = if g.n() <= MAX_BRAMBLE_SEARCH_VERTICES {
        let (order, b) = max_bramble_order(g)?;
        (order >= k, "exhaustive".to_string(), (order >= k).then_some(b))
    } else {
        let b = tangle.as_ref().map(|t| tangle_to_bramble(&sys, t)).transpose()?;
        (b.is_some(), "from_tangle".to_string(), b)
    };
    let (_, out) = duality(g, k, &spec)?;
    let tree_witness = match out.verdict {
        Verdict::STree(st) => Some(st),
        Verdict::Tangle(_) => None,
    };
    let tw = exact_treewidth(g)?.tw;
    let r = Theorem4Report {
        k,
        tangle: tangle.is_some(),
        bramble,
        no_tree: tree_witness.is_none(),
        tw_at_least: tw >= k as i64 - 1,
        treewidth: tw,
        bramble_method,
        tangle_witness: tangle.map(|t| t.separations(&sys)),
        bramble_witness,
        tree_witness,
        all_equal: false,
    };
    let all_equal = r.tangle == r.bramble && r.bramble == r.no_tree && r.no_tree == r.tw_at_least;
    if !all_equal {
        return Err(Error::Soundness(format!(
            "equivalence fails for k = {k}: tangle {}, bramble {}, no tree {}, tw ≥ k−1 {}",
            r.tangle, r.bramble, r.no_tree, r.tw_at_least
        )));
    }
    Ok(Theorem4Report { all_equal, ..r })
}
