use serde::{Deserialize, Serialize};

use crate::flow::pack_paths;
use crate::graph::Graph;
use crate::separation::Separation;
use crate::vset::VertexSet;

/// How fan paths towards `P_x` may meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanMode {
    /// Paths may share their final vertex on `P_x`.
    SharedEnds,
    /// Paths are pairwise disjoint.
    Disjoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustWitness {
    pub u: VertexSet,
    /// `(x, P_x)` with `P_x` listed from its far end to `x`.
    pub paths: Vec<(usize, Vec<usize>)>,
    /// For each `x`, the `ℓ` fan paths from `U` to `P_x`.
    pub fans: Vec<(usize, Vec<Vec<usize>>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RobustOutcome {
    Witness(RobustWitness),
    Impossible(String),
    BudgetExhausted(String),
}

impl RobustOutcome {
    pub fn witness(&self) -> Option<&RobustWitness> {
        match self {
            RobustOutcome::Witness(w) => Some(w),
            _ => None,
        }
    }
}

/// `ℓ := max{3k − 2, k(k − 1)m + m}`.
pub fn robustness_bound(k: usize, m: usize) -> usize {
    (3 * k)
        .saturating_sub(2)
        .max(k * k.saturating_sub(1) * m + m)
}

/// `U`–`target` paths; vertices of `U` on the target are their own paths.
fn fan(
    g: &Graph,
    within: VertexSet,
    u: VertexSet,
    target: VertexSet,
    mode: FanMode,
) -> Vec<Vec<usize>> {
    let on = u.intersection(target).intersection(within);
    let rest = u.difference(on);
    let mut paths = pack_paths(
        g,
        within.difference(on),
        rest,
        target.difference(on),
        mode == FanMode::SharedEnds,
        rest.len(),
    )
    .paths;
    paths.extend(on.iter().map(|v| vec![v]));
    paths.sort();
    paths
}

/// Searches for a witness that `s` is left-`ℓ`-robust.
pub fn left_robust(
    g: &Graph,
    s: Separation,
    ell: usize,
    mode: FanMode,
    budget: usize,
) -> RobustOutcome {
    let (a, b) = (s.a, s.b);
    let x = s.separator();
    if ell > a.len() {
        return RobustOutcome::Impossible(format!("ℓ = {ell} exceeds |A| = {}", a.len()));
    }
    let strict = a.difference(b);
    let region = |v: usize| strict.with(v);
    // U must reach every P_x inside G[(A∖B) ∪ {x}], and P_x ∋ x is connected there.
    let mut pool = a;
    for v in x.iter() {
        pool = pool.intersection(g.reach(v, region(v)));
    }
    if ell > pool.len() {
        return RobustOutcome::Impossible(format!(
            "only {} vertices of A lie in the component of every x in G[(A∖B) ∪ {{x}}], ℓ = {ell}",
            pool.len()
        ));
    }
    let mut work = 0usize;
    for paths in path_families(g, s) {
        let targets: Vec<(usize, VertexSet)> = paths
            .iter()
            .map(|(v, p)| (*v, p.iter().copied().collect::<VertexSet>()))
            .collect();
        let mut grouped: Vec<usize> = paths
            .iter()
            .flat_map(|(_, p)| p.iter().copied())
            .filter(|&v| pool.contains(v))
            .collect();
        grouped.extend(
            pool.iter()
                .filter(|v| !grouped.contains(v))
                .collect::<Vec<_>>(),
        );
        for order in [grouped, pool.to_vec()] {
            let mut u = VertexSet::EMPTY;
            for cand in order {
                if u.len() == ell {
                    break;
                }
                let trial = u.with(cand);
                work += targets.len();
                if work > budget {
                    return RobustOutcome::BudgetExhausted(format!("search budget {budget} spent"));
                }
                if targets
                    .iter()
                    .all(|&(v, t)| fan(g, region(v), trial, t, mode).len() == trial.len())
                {
                    u = trial;
                }
            }
            if u.len() == ell {
                let fans = targets
                    .iter()
                    .map(|&(v, t)| (v, fan(g, region(v), u, t, mode)))
                    .collect();
                return RobustOutcome::Witness(RobustWitness { u, paths, fans });
            }
        }
    }
    if a.len() <= 16 {
        if let Some(w) = exhaustive(g, s, ell, pool, mode, budget, &mut work) {
            return w;
        }
        return RobustOutcome::Impossible(format!(
            "no set U of size {ell} and path family works (exhaustive over |A| = {})",
            a.len()
        ));
    }
    RobustOutcome::BudgetExhausted(
        "heuristic path families exhausted; |A| too large for exhaustive search".into(),
    )
}

/// Candidate families `{P_x}`: trivial paths, then packings from far BFS layers.
fn path_families(g: &Graph, s: Separation) -> Vec<Vec<(usize, Vec<usize>)>> {
    let x = s.separator();
    let mut out = vec![x.iter().map(|v| (v, vec![v])).collect::<Vec<_>>()];
    let mut dist = vec![usize::MAX; g.n()];
    let mut layer = x;
    let mut seen = x;
    let mut d = 0;
    let mut layers = Vec::new();
    while !layer.is_empty() {
        for v in layer.iter() {
            dist[v] = d;
        }
        layers.push(layer);
        let next = g.neighbourhood(layer).intersection(s.a).difference(seen);
        seen = seen.union(next);
        layer = next;
        d += 1;
    }
    for start in (1..layers.len()).rev() {
        let far = layers[start..]
            .iter()
            .fold(VertexSet::EMPTY, |acc, &l| acc.union(l));
        let packing = pack_paths(g, s.a, far, x, false, x.len());
        if packing.is_empty() {
            continue;
        }
        let mut fam: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut used = VertexSet::EMPTY;
        for p in &packing.paths {
            let end = *p.last().unwrap();
            used = used.union(p.iter().copied().collect());
            fam.push((end, p.clone()));
        }
        for v in x.iter() {
            if !used.contains(v) {
                fam.push((v, vec![v]));
            }
        }
        fam.sort();
        if !out.contains(&fam) {
            out.push(fam);
        }
    }
    out
}

/// All subsets `U` of the pool and all path families, within budget.
fn exhaustive(
    g: &Graph,
    s: Separation,
    ell: usize,
    pool: VertexSet,
    mode: FanMode,
    budget: usize,
    work: &mut usize,
) -> Option<RobustOutcome> {
    let x: Vec<usize> = s.separator().iter().collect();
    let strict = s.a.difference(s.b);
    let mut per_x: Vec<Vec<Vec<usize>>> = Vec::new();
    for &v in &x {
        let mut paths = Vec::new();
        simple_paths_to(g, strict.with(v), v, &mut vec![v], &mut paths, budget);
        per_x.push(paths);
    }
    let mut choice: Vec<Vec<usize>> = Vec::new();
    let subsets: Vec<VertexSet> = pool
        .subsets_up_to(ell)
        .into_iter()
        .filter(|u| u.len() == ell)
        .collect();
    let mut result = None;
    fn rec(
        g: &Graph,
        i: usize,
        x: &[usize],
        per_x: &[Vec<Vec<usize>>],
        choice: &mut Vec<Vec<usize>>,
        used: VertexSet,
        subsets: &[VertexSet],
        strict: VertexSet,
        mode: FanMode,
        budget: usize,
        work: &mut usize,
        result: &mut Option<RobustOutcome>,
    ) {
        if result.is_some() {
            return;
        }
        if *work > budget {
            *result = Some(RobustOutcome::BudgetExhausted(format!(
                "search budget {budget} spent"
            )));
            return;
        }
        if i == x.len() {
            for &u in subsets {
                *work += x.len().max(1);
                let ok = x.iter().zip(choice.iter()).all(|(&v, p)| {
                    let t: VertexSet = p.iter().copied().collect();
                    fan(g, strict.with(v), u, t, mode).len() == u.len()
                });
                if ok {
                    let paths: Vec<(usize, Vec<usize>)> =
                        x.iter().copied().zip(choice.iter().cloned()).collect();
                    let fans = paths
                        .iter()
                        .map(|(v, p)| {
                            (
                                *v,
                                fan(g, strict.with(*v), u, p.iter().copied().collect(), mode),
                            )
                        })
                        .collect();
                    *result = Some(RobustOutcome::Witness(RobustWitness { u, paths, fans }));
                    return;
                }
                if *work > budget {
                    *result = Some(RobustOutcome::BudgetExhausted(format!(
                        "search budget {budget} spent"
                    )));
                    return;
                }
            }
            return;
        }
        for p in &per_x[i] {
            let set: VertexSet = p.iter().copied().collect();
            if set.meets(used) {
                continue;
            }
            choice.push(p.clone());
            rec(
                g,
                i + 1,
                x,
                per_x,
                choice,
                used.union(set),
                subsets,
                strict,
                mode,
                budget,
                work,
                result,
            );
            choice.pop();
            if result.is_some() {
                return;
            }
        }
    }
    rec(
        g,
        0,
        &x,
        &per_x,
        &mut choice,
        VertexSet::EMPTY,
        &subsets,
        strict,
        mode,
        budget,
        work,
        &mut result,
    );
    result
}

/// Simple paths inside `within` ending at `end`, stored from far end to `end`.
fn simple_paths_to(
    g: &Graph,
    within: VertexSet,
    end: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let mut p = cur.clone();
    p.reverse();
    out.push(p);
    let last = *cur.last().unwrap();
    let on: VertexSet = cur.iter().copied().collect();
    for w in g
        .neighbours(last)
        .intersection(within)
        .difference(on)
        .iter()
    {
        cur.push(w);
        simple_paths_to(g, within, end, cur, out, cap);
        cur.pop();
    }
}

/// Re-checks a robustness witness against the definition.
pub fn check_robust_witness(
    g: &Graph,
    s: Separation,
    ell: usize,
    mode: FanMode,
    w: &RobustWitness,
) -> Result<(), String> {
    let x = s.separator();
    let strict = s.a.difference(s.b);
    if w.u.len() != ell || !w.u.is_subset(s.a) {
        return Err(format!("U must be a subset of A of size {ell}"));
    }
    let named: VertexSet = w.paths.iter().map(|(v, _)| *v).collect();
    if named != x || w.paths.len() != x.len() {
        return Err("need exactly one path per separator vertex".into());
    }
    let mut used = VertexSet::EMPTY;
    for (v, p) in &w.paths {
        if p.last() != Some(v) || !is_path(g, p, s.a) {
            return Err(format!("P_{v} is not a path in G[A] ending at {v}"));
        }
        let set: VertexSet = p.iter().copied().collect();
        if set.meets(used) {
            return Err(format!("P_{v} meets another path"));
        }
        used = used.union(set);
    }
    for (v, p) in &w.paths {
        let target: VertexSet = p.iter().copied().collect();
        let region = strict.with(*v);
        let fans = w
            .fans
            .iter()
            .find(|(y, _)| y == v)
            .map(|(_, f)| f)
            .ok_or(format!("no fan for {v}"))?;
        if fans.len() != ell {
            return Err(format!("fan at {v} has {} paths, need {ell}", fans.len()));
        }
        let mut starts = VertexSet::EMPTY;
        let mut inner = VertexSet::EMPTY;
        let mut ends = VertexSet::EMPTY;
        for f in fans {
            if !is_path(g, f, region) {
                return Err(format!("fan path {f:?} leaves G[(A∖B) ∪ {{{v}}}]"));
            }
            let (first, last) = (f[0], *f.last().unwrap());
            if !w.u.contains(first) || starts.contains(first) {
                return Err(format!("fan path {f:?} must start at a fresh vertex of U"));
            }
            starts.insert(first);
            if f[..f.len() - 1].iter().any(|&y| target.contains(y)) || !target.contains(last) {
                return Err(format!(
                    "fan path {f:?} must meet P_{v} exactly in its last vertex"
                ));
            }
            if f[1..].iter().any(|&y| w.u.contains(y)) {
                return Err(format!("fan path {f:?} revisits U"));
            }
            let mid: VertexSet = f[..f.len() - 1].iter().copied().collect();
            if mid.meets(inner) || mid.meets(ends) {
                return Err(format!("fan paths at {v} meet outside P_{v}"));
            }
            inner = inner.union(mid);
            if mode == FanMode::Disjoint && ends.contains(last) {
                return Err(format!("fan paths at {v} share an end"));
            }
            if inner.contains(last) {
                return Err(format!("fan paths at {v} meet outside P_{v}"));
            }
            ends.insert(last);
        }
    }
    Ok(())
}

fn is_path(g: &Graph, p: &[usize], within: VertexSet) -> bool {
    if p.is_empty() || p.iter().any(|&v| !within.contains(v)) {
        return false;
    }
    let set: VertexSet = p.iter().copied().collect();
    set.len() == p.len() && p.windows(2).all(|w| g.has_edge(w[0], w[1]))
}
