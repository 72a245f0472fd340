use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::separation::Separation;
use crate::star::{interior, is_star};
use crate::system::SeparationSystem;
use crate::vset::VertexSet;

/// The forbidden families of stars (or small sets) in `S⃗_k(G)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Sets of at most three separations whose small sides cover `G`.
    Tk { k: usize },
    /// The stars in `T_k`.
    TStar { k: usize },
    /// `{(A,B), (B∩C, A∪D), (B∩D, A∪C)}` for `(A,B), (C,D) ∈ S⃗_k`.
    Pk { k: usize },
    /// Stars in `P_k` with interior smaller than `k`.
    PPrime { k: usize },
    /// Stars with interior smaller than `k`.
    Uk { k: usize },
    /// Infinite stars; empty on finite graphs.
    UkInfinite { k: usize },
    /// An explicit list of stars.
    Explicit {
        k: usize,
        stars: Vec<Vec<Separation>>,
    },
    /// `base ∪ {{s⃖} : s⃗ ∈ sigma}`: trees over this family carry every
    /// `s⃗ ∈ sigma` as a leaf separation, tangles avoiding it contain `sigma`.
    Augmented {
        base: Box<FamilySpec>,
        sigma: Vec<Separation>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub reason: String,
}

impl FamilySpec {
    pub fn k(&self) -> usize {
        match self {
            FamilySpec::Tk { k }
            | FamilySpec::TStar { k }
            | FamilySpec::Pk { k }
            | FamilySpec::PPrime { k }
            | FamilySpec::Uk { k }
            | FamilySpec::UkInfinite { k }
            | FamilySpec::Explicit { k, .. } => *k,
            FamilySpec::Augmented { base, .. } => base.k(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FamilySpec::Tk { .. } => "tk".into(),
            FamilySpec::TStar { .. } => "tstar".into(),
            FamilySpec::Pk { .. } => "pk".into(),
            FamilySpec::PPrime { .. } => "pprime".into(),
            FamilySpec::Uk { .. } => "uk".into(),
            FamilySpec::UkInfinite { .. } => "uk_infinite".into(),
            FamilySpec::Explicit { .. } => "custom".into(),
            FamilySpec::Augmented { base, .. } => format!("{}+leaves", base.name()),
        }
    }

    pub fn from_name(name: &str, k: usize) -> Result<FamilySpec> {
        Ok(match name {
            "tk" => FamilySpec::Tk { k },
            "tstar" => FamilySpec::TStar { k },
            "uk" | "ustar" => FamilySpec::Uk { k },
            "pk" => FamilySpec::Pk { k },
            "pprime" => FamilySpec::PPrime { k },
            other => return Err(Error::Argument(format!("unknown family {other:?}"))),
        })
    }

    pub fn augmented(&self, sigma: &[Separation]) -> FamilySpec {
        FamilySpec::Augmented {
            base: Box::new(self.clone()),
            sigma: sigma.to_vec(),
        }
    }

    /// The base family with augmentation layers removed.
    pub fn base(&self) -> &FamilySpec {
        match self {
            FamilySpec::Augmented { base, .. } => base.base(),
            f => f,
        }
    }

    /// An upper bound on the interior size of members that are stars.
    pub fn m_bound(&self, n: usize) -> Option<usize> {
        match self {
            FamilySpec::TStar { k } => Some((3 * k).saturating_sub(3)),
            FamilySpec::Uk { k } | FamilySpec::PPrime { k } => Some(k.saturating_sub(1)),
            FamilySpec::UkInfinite { .. } => Some(0),
            FamilySpec::Explicit { stars, .. } => Some(
                stars
                    .iter()
                    .map(|s| {
                        s.iter()
                            .fold(VertexSet::full(n), |a, x| a.intersection(x.b))
                            .len()
                    })
                    .max()
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    /// Decides whether `set` (a subset of `S⃗_k(G)`) belongs to the family.
    pub fn member(&self, sys: &SeparationSystem, set: &[Separation]) -> Membership {
        let g = sys.graph();
        let mut set = set.to_vec();
        set.sort_by_key(|s| (s.system_key(), *s != s.canonical()));
        set.dedup();
        let k = self.k();
        let yes = |r: &str| Membership {
            member: true,
            reason: r.to_string(),
        };
        let no = |r: String| Membership {
            member: false,
            reason: r,
        };
        match self {
            FamilySpec::Tk { .. } | FamilySpec::TStar { .. } => {
                if set.is_empty() || set.len() > 3 {
                    return no(format!("size {} is outside 1..=3", set.len()));
                }
                if matches!(self, FamilySpec::TStar { .. }) && !is_star(&set) {
                    return no("not a star".into());
                }
                match cover_gap(g, &set) {
                    None => yes("small sides cover G"),
                    Some(gap) => no(format!("small sides miss {gap}")),
                }
            }
            FamilySpec::Uk { .. } => {
                if !is_star(&set) {
                    return no("not a star".into());
                }
                let int = interior(g, &set).len();
                if int < k {
                    yes(&format!("star with interior size {int} < {k}"))
                } else {
                    no(format!("interior size {int} ≥ {k}"))
                }
            }
            FamilySpec::UkInfinite { .. } => no("finite set".into()),
            FamilySpec::Pk { .. } | FamilySpec::PPrime { .. } => {
                if matches!(self, FamilySpec::PPrime { .. }) {
                    if !is_star(&set) {
                        return no("not a star".into());
                    }
                    let int = interior(g, &set).len();
                    if int >= k {
                        return no(format!("interior size {int} ≥ {k}"));
                    }
                }
                match profile_shape_witness(sys, &set) {
                    Some((x, y)) => yes(&format!("corner shape generated by {x:?} and {y:?}")),
                    None => no("no pair of separations generates this corner shape".into()),
                }
            }
            FamilySpec::Explicit { stars, .. } => {
                let hit = stars.iter().any(|s| {
                    let mut s = s.clone();
                    s.sort_by_key(|x| (x.system_key(), *x != x.canonical()));
                    s.dedup();
                    s == set
                });
                if hit {
                    yes("listed")
                } else {
                    no("not listed".into())
                }
            }
            FamilySpec::Augmented { base, sigma } => {
                if set.len() == 1 && sigma.iter().any(|s| s.reverse() == set[0]) {
                    return yes("inverse of a leaf separation");
                }
                base.member(sys, &set)
            }
        }
    }
}

/// A vertex or edge of `G` not inside any small side, if one exists.
pub fn cover_gap(g: &Graph, set: &[Separation]) -> Option<String> {
    let union = set.iter().fold(VertexSet::EMPTY, |acc, s| acc.union(s.a));
    if let Some(v) = g.vertices().difference(union).min() {
        return Some(format!("vertex {v}"));
    }
    for &(u, v) in g.edges() {
        if !set.iter().any(|s| s.a.contains(u) && s.a.contains(v)) {
            return Some(format!("edge {u}-{v}"));
        }
    }
    None
}

fn profile_triple(x: Separation, y: Separation) -> [Separation; 3] {
    [
        x,
        Separation::new(x.b.intersection(y.a), x.a.union(y.b)),
        Separation::new(x.b.intersection(y.b), x.a.union(y.a)),
    ]
}

fn profile_shape_witness(
    sys: &SeparationSystem,
    set: &[Separation],
) -> Option<(Separation, Separation)> {
    for &x in set {
        for y in sys.oriented_ids().map(|id| sys.sep(id)) {
            let t = profile_triple(x, y);
            if t[1].order() >= sys.k() || t[2].order() >= sys.k() {
                continue;
            }
            let mut t = t.to_vec();
            t.sort_by_key(|s| (s.system_key(), *s != s.canonical()));
            t.dedup();
            if t == set {
                return Some((x, y));
            }
        }
    }
    None
}

/// A family compiled against one separation system for search.
#[derive(Clone, Debug)]
pub struct CompiledFamily {
    /// Explicitly enumerated members as oriented ids, each sorted.
    pub sets: Vec<Vec<u32>>,
    /// Every star with interior smaller than this bound is a member.
    pub interior_bound: Option<usize>,
    /// Optional cap on star size in the interior-bounded search.
    pub star_size_cap: Option<usize>,
    /// Whether the empty star is a member.
    pub empty_member: bool,
    /// `compat[x]` holds `y ≠ x` with `sep(x) ≤ sep(y)⁻`, both non-degenerate.
    pub compat: Vec<FixedBitSet>,
}

pub fn star_compat(sys: &SeparationSystem) -> Vec<FixedBitSet> {
    let n = sys.oriented_len();
    let ids: Vec<usize> = sys
        .oriented_ids()
        .filter(|&i| !sys.is_degenerate_member(i / 2))
        .collect();
    let mut compat = vec![FixedBitSet::with_capacity(n); n];
    for &x in &ids {
        let sx = sys.sep(x);
        for &y in &ids {
            if x != y && sx.le(sys.sep(y).reverse()) {
                compat[x].insert(y);
            }
        }
    }
    compat
}

impl CompiledFamily {
    pub fn compile(spec: &FamilySpec, sys: &SeparationSystem) -> Result<CompiledFamily> {
        if spec.k() != sys.k() {
            return Err(Error::Argument(format!(
                "family order {} differs from system order {}",
                spec.k(),
                sys.k()
            )));
        }
        let compat = star_compat(sys);
        let mut cf = CompiledFamily {
            sets: Vec::new(),
            interior_bound: None,
            star_size_cap: None,
            empty_member: false,
            compat,
        };
        cf.add(spec, sys)?;
        for s in cf.sets.iter_mut() {
            s.sort_unstable();
            s.dedup();
        }
        cf.sets.sort();
        cf.sets.dedup();
        Ok(cf)
    }

    fn add(&mut self, spec: &FamilySpec, sys: &SeparationSystem) -> Result<()> {
        let g = sys.graph();
        let k = spec.k();
        match spec {
            FamilySpec::Tk { .. } => {
                self.sets.extend(covering_sets(sys, &self.compat, false));
            }
            FamilySpec::TStar { .. } => {
                self.sets.extend(covering_sets(sys, &self.compat, true));
            }
            FamilySpec::Uk { .. } => {
                self.interior_bound = Some(k);
                self.empty_member |= g.n() < k;
            }
            FamilySpec::UkInfinite { .. } => {}
            FamilySpec::Pk { .. } | FamilySpec::PPrime { .. } => {
                let prime = matches!(spec, FamilySpec::PPrime { .. });
                for x in sys.oriented_ids() {
                    for y in sys.oriented_ids() {
                        let t = profile_triple(sys.sep(x), sys.sep(y));
                        let (Some(a), Some(b)) = (sys.id(t[1]), sys.id(t[2])) else {
                            continue;
                        };
                        let mut ids = vec![x as u32, a as u32, b as u32];
                        ids.sort_unstable();
                        ids.dedup();
                        if prime {
                            let seps: Vec<Separation> =
                                ids.iter().map(|&i| sys.sep(i as usize)).collect();
                            if !is_star(&seps) || interior(g, &seps).len() >= k {
                                continue;
                            }
                        }
                        self.sets.push(ids);
                    }
                }
            }
            FamilySpec::Explicit { stars, .. } => {
                for s in stars {
                    if s.is_empty() {
                        self.empty_member = true;
                        continue;
                    }
                    let ids: Option<Vec<u32>> =
                        s.iter().map(|x| sys.id(*x).map(|i| i as u32)).collect();
                    if let Some(ids) = ids {
                        self.sets.push(ids);
                    }
                }
            }
            FamilySpec::Augmented { base, sigma } => {
                self.add(base, sys)?;
                for s in sigma {
                    match sys.id(s.reverse()) {
                        Some(id) => self.sets.push(vec![id as u32]),
                        None => {
                            return Err(Error::Argument(format!(
                                "leaf separation {s:?} is not in the system"
                            )))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the oriented ids in `ids` contain a member.
    pub fn contains_member(&self, sys: &SeparationSystem, ids: &FixedBitSet) -> Option<Vec<usize>> {
        for s in &self.sets {
            if s.iter().all(|&i| ids.contains(i as usize)) {
                return Some(s.iter().map(|&i| i as usize).collect());
            }
        }
        if let Some(bound) = self.interior_bound {
            for x in ids.ones() {
                if let Some(star) = self.find_small_star(sys, bound, x, ids) {
                    return Some(star);
                }
            }
        }
        None
    }

    /// Searches for a star containing `seed`, with all other elements from
    /// `candidates`, whose interior has fewer than `bound` vertices.
    pub fn find_small_star(
        &self,
        sys: &SeparationSystem,
        bound: usize,
        seed: usize,
        candidates: &FixedBitSet,
    ) -> Option<Vec<usize>> {
        if sys.is_degenerate_member(seed / 2) {
            return None;
        }
        let int = sys.sep(seed).b;
        if int.len() < bound {
            return Some(vec![seed]);
        }
        let mut allowed = candidates.clone();
        allowed.intersect_with(&self.compat[seed]);
        let mut chosen = vec![seed];
        let cap = self.star_size_cap.unwrap_or(usize::MAX);
        if small_star_rec(sys, &self.compat, bound, cap, int, &allowed, &mut chosen) {
            Some(chosen)
        } else {
            None
        }
    }
}

fn small_star_rec(
    sys: &SeparationSystem,
    compat: &[FixedBitSet],
    bound: usize,
    cap: usize,
    int: VertexSet,
    allowed: &FixedBitSet,
    chosen: &mut Vec<usize>,
) -> bool {
    if int.len() < bound {
        return true;
    }
    if chosen.len() >= cap {
        return false;
    }
    let mut lower = int;
    let mut useful = Vec::new();
    for y in allowed.ones() {
        let b = sys.sep(y).b;
        lower = lower.intersection(b);
        if !int.is_subset(b) {
            useful.push(y);
        }
    }
    if lower.len() >= bound {
        return false;
    }
    useful.sort_by_key(|&y| int.intersection(sys.sep(y).b).len());
    for (i, &y) in useful.iter().enumerate() {
        let mut next = allowed.clone();
        next.intersect_with(&compat[y]);
        for &z in &useful[..=i] {
            next.set(z, false);
        }
        chosen.push(y);
        if small_star_rec(
            sys,
            compat,
            bound,
            cap,
            int.intersection(sys.sep(y).b),
            &next,
            chosen,
        ) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Minimal covering sets of size at most three, optionally restricted to stars.
fn covering_sets(
    sys: &SeparationSystem,
    compat: &[FixedBitSet],
    stars_only: bool,
) -> Vec<Vec<u32>> {
    let g = sys.graph();
    let n = g.n();
    let full = g.vertices();
    let total = sys.oriented_len();
    let ids: Vec<usize> = sys.oriented_ids().collect();
    let mut out = Vec::new();
    let covers = |xs: &[usize]| {
        let seps: Vec<Separation> = xs.iter().map(|&i| sys.sep(i)).collect();
        cover_gap(g, &seps).is_none()
    };
    let mut single = FixedBitSet::with_capacity(total);
    for &x in &ids {
        let s = sys.sep(x);
        if s.a == full && !(stars_only && s.is_degenerate()) {
            out.push(vec![x as u32]);
            single.insert(x);
        }
    }
    let pool: Vec<usize> = ids
        .iter()
        .copied()
        .filter(|&x| !single.contains(x) && !sys.sep(x).is_degenerate())
        .collect();
    let mut in_pool = FixedBitSet::with_capacity(total);
    for &x in &pool {
        in_pool.insert(x);
    }
    let mut has_vertex = vec![FixedBitSet::with_capacity(total); n];
    for &x in &pool {
        for v in sys.sep(x).a.iter() {
            has_vertex[v].insert(x);
        }
    }
    let max_a = pool.iter().map(|&x| sys.sep(x).a.len()).max().unwrap_or(0);
    let mut all = FixedBitSet::with_capacity(total);
    all.insert_range(..);
    let partner = |x: usize| -> &FixedBitSet {
        if stars_only {
            &compat[x]
        } else {
            &all
        }
    };
    let mut pair_cover = std::collections::HashSet::new();
    for (i, &x) in pool.iter().enumerate() {
        let ax = sys.sep(x).a;
        for &y in &pool[i + 1..] {
            if !partner(x).contains(y) {
                continue;
            }
            let ay = sys.sep(y).a;
            let missing = full.difference(ax.union(ay));
            if missing.len() > max_a {
                continue;
            }
            if missing.is_empty() && covers(&[x, y]) {
                out.push(vec![x as u32, y as u32]);
                pair_cover.insert((x, y));
            }
        }
    }
    for (i, &x) in pool.iter().enumerate() {
        let sx = sys.sep(x);
        for &y in &pool[i + 1..] {
            if !partner(x).contains(y) || pair_cover.contains(&(x, y)) {
                continue;
            }
            let sy = sys.sep(y);
            let mut need = full.difference(sx.a.union(sy.a));
            if need.len() > max_a {
                continue;
            }
            for &(u, v) in g.edges() {
                if !(sx.a.contains(u) && sx.a.contains(v))
                    && !(sy.a.contains(u) && sy.a.contains(v))
                {
                    need.insert(u);
                    need.insert(v);
                }
            }
            if need.len() > max_a {
                continue;
            }
            let mut cand = in_pool.clone();
            cand.intersect_with(partner(x));
            cand.intersect_with(partner(y));
            for v in need.iter() {
                cand.intersect_with(&has_vertex[v]);
            }
            for z in cand.ones() {
                if z <= y {
                    continue;
                }
                let key = |a: usize, b: usize| (a.min(b), a.max(b));
                if pair_cover.contains(&key(x, z)) || pair_cover.contains(&key(y, z)) {
                    continue;
                }
                if covers(&[x, y, z]) {
                    out.push(vec![x as u32, y as u32, z as u32]);
                }
            }
        }
    }
    out
}

/// Stars of at most `cap` elements drawn from `allowed`, as sorted oriented ids.
pub fn enumerate_stars(sys: &SeparationSystem, allowed: &FixedBitSet, cap: usize, limit: usize) -> Vec<Vec<usize>> {
    let compat = star_compat(sys);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        compat: &[FixedBitSet],
        cand: &FixedBitSet,
        cap: usize,
        limit: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        for y in cand.ones() {
            if out.len() >= limit {
                return;
            }
            chosen.push(y);
            out.push(chosen.clone());
            if chosen.len() < cap {
                let mut next = cand.clone();
                next.intersect_with(&compat[y]);
                next.set_range(..y + 1, false);
                rec(compat, &next, cap, limit, chosen, out);
            }
            chosen.pop();
        }
    }
    let mut cand = allowed.clone();
    for x in sys.oriented_ids().filter(|&x| sys.is_degenerate_member(x / 2)) {
        cand.set(x, false);
    }
    rec(&compat, &cand, cap, limit, &mut chosen, &mut out);
    out
}

/// Inclusion-maximal stars inside `allowed` (Bron–Kerbosch with pivoting).
pub fn maximal_stars(sys: &SeparationSystem, allowed: &FixedBitSet, limit: usize) -> Vec<Vec<usize>> {
    let compat = star_compat(sys);
    let mut p = allowed.clone();
    for x in sys.oriented_ids().filter(|&x| sys.is_degenerate_member(x / 2)) {
        p.set(x, false);
    }
    let mut out = Vec::new();
    let x = FixedBitSet::with_capacity(p.len());
    bron_kerbosch(&compat, &mut Vec::new(), p, x, limit, &mut out);
    out
}

fn bron_kerbosch(
    compat: &[FixedBitSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    limit: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if out.len() >= limit {
        return;
    }
    if p.is_clear() && x.is_clear() {
        out.push(r.clone());
        return;
    }
    let pivot = p
        .ones()
        .chain(x.ones())
        .max_by_key(|&u| p.intersection(&compat[u]).count())
        .expect("p or x is non-empty");
    let mut todo = p.clone();
    todo.difference_with(&compat[pivot]);
    for v in todo.ones() {
        let mut np = p.clone();
        np.intersect_with(&compat[v]);
        let mut nx = x.clone();
        nx.intersect_with(&compat[v]);
        r.push(v);
        bron_kerbosch(compat, r, np, nx, limit, out);
        r.pop();
        p.set(v, false);
        x.insert(v);
        if out.len() >= limit {
            return;
        }
    }
}
