use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::separation::Separation;
use crate::star::{star_violation, torso, Torso};
use crate::vset::VertexSet;

const MAX_MEMBERS: usize = 4_000_000;

/// `S_k(G)`, or the restricted system `S_k^σ(G)` when a star is given.
///
/// Members are stored in their canonical orientation, sorted by
/// (order, separator, sides). Oriented separations are addressed by ids:
/// `2i` is member `i` as stored, `2i + 1` its inverse.
#[derive(Clone, Debug)]
pub struct SeparationSystem {
    graph: Graph,
    k: usize,
    restriction: Option<Vec<Separation>>,
    members: Vec<Separation>,
    index: HashMap<Separation, usize>,
}

impl SeparationSystem {
    pub fn enumerate(g: &Graph, k: usize) -> Result<SeparationSystem> {
        let members = enumerate_all(g, k)?;
        Ok(Self::from_members(g.clone(), k, None, members))
    }

    /// The restricted system `S_k^σ(G)`, generated through the torso of `σ`.
    pub fn restricted(g: &Graph, k: usize, sigma: &[Separation]) -> Result<SeparationSystem> {
        validate_sigma(g, k, sigma)?;
        let t = torso(g, sigma);
        let torso_seps = enumerate_all(&t.graph, k)?;
        let members = lift_restricted(g, sigma, &t, &torso_seps)?;
        Ok(Self::from_members(
            g.clone(),
            k,
            Some(sigma.to_vec()),
            members,
        ))
    }

    pub fn from_members(
        graph: Graph,
        k: usize,
        restriction: Option<Vec<Separation>>,
        mut members: Vec<Separation>,
    ) -> SeparationSystem {
        for m in members.iter_mut() {
            *m = m.canonical();
        }
        members.sort_by_key(|m| m.system_key());
        members.dedup();
        let mut index = HashMap::with_capacity(members.len() * 2);
        for (i, &m) in members.iter().enumerate() {
            index.insert(m.reverse(), 2 * i + 1);
            index.insert(m, 2 * i);
        }
        SeparationSystem {
            graph,
            k,
            restriction,
            members,
            index,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn restriction(&self) -> Option<&[Separation]> {
        self.restriction.as_deref()
    }

    pub fn members(&self) -> &[Separation] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn oriented_len(&self) -> usize {
        2 * self.members.len()
    }

    pub fn sep(&self, id: usize) -> Separation {
        let m = self.members[id / 2];
        if id % 2 == 0 {
            m
        } else {
            m.reverse()
        }
    }

    pub fn id(&self, s: Separation) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn contains(&self, s: Separation) -> bool {
        self.index.contains_key(&s)
    }

    pub fn is_degenerate_member(&self, i: usize) -> bool {
        self.members[i].is_degenerate()
    }

    /// Oriented ids, skipping the duplicate id of `(V, V)`.
    pub fn oriented_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.oriented_len())
            .filter(move |&id| id % 2 == 0 || !self.members[id / 2].is_degenerate())
    }

    /// `r⃗` is trivial in the system if some member `s` has `r⃗ < s⃗` and `r⃗ < s⃖`.
    pub fn is_trivial(&self, r: Separation) -> bool {
        self.members
            .iter()
            .any(|&s| s.canonical() != r.canonical() && r.lt(s) && r.lt(s.reverse()))
    }

    /// For every oriented id, the ids strictly below it (different underlying member).
    pub fn below_lists(&self) -> Vec<Vec<u32>> {
        let ids: Vec<usize> = self.oriented_ids().collect();
        ids.par_iter()
            .map(|&x| {
                let sx = self.sep(x);
                let mut out = Vec::new();
                for &z in &ids {
                    if z / 2 != x / 2 && self.sep(z).le(sx) {
                        out.push(z as u32);
                    }
                }
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .zip(ids.iter())
            .fold(vec![Vec::new(); self.oriented_len()], |mut acc, (l, &x)| {
                acc[x] = l;
                acc
            })
    }
}

fn validate_sigma(g: &Graph, k: usize, sigma: &[Separation]) -> Result<()> {
    for s in sigma {
        if !s.is_separation_of(g) {
            return Err(Error::Argument(format!(
                "{s:?} is not a separation of the graph"
            )));
        }
        if s.order() >= k {
            return Err(Error::Argument(format!("{s:?} has order ≥ {k}")));
        }
    }
    if let Some((r, s)) = star_violation(sigma) {
        return Err(Error::Argument(format!("not a star: {r:?} and {s:?}")));
    }
    Ok(())
}

/// All separations of order `< k`, canonical and deduplicated.
pub fn enumerate_all(g: &Graph, k: usize) -> Result<Vec<Separation>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let v = g.vertices();
    let mut count: f64 = 0.0;
    let mut binom: f64 = 1.0;
    for j in 0..k.min(g.n() + 1) {
        count += binom;
        binom = binom * (g.n() - j) as f64 / (j + 1) as f64;
    }
    if count > MAX_MEMBERS as f64 {
        return Err(Error::Refusal(format!(
            "enumerating separators of size < {k} on {} vertices exceeds the work limit",
            g.n()
        )));
    }
    let separators = v.subsets_up_to(k - 1);
    let chunks: Vec<Result<Vec<Separation>>> = separators
        .par_iter()
        .map(|&x| {
            let comps = g.components(x, false);
            if comps.len() > 22 {
                return Err(Error::Refusal(format!(
                    "{} components after deleting {x:?}; bipartition count exceeds the work limit",
                    comps.len()
                )));
            }
            let mut out = Vec::new();
            if comps.is_empty() {
                out.push(Separation::new(x, x));
                return Ok(out);
            }
            let c = comps.len();
            // Fix the side of the last component to halve the bipartitions.
            for mask in 0u32..(1 << (c - 1)) {
                let mut a = x;
                let mut b = x;
                for (i, &comp) in comps.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        a = a.union(comp);
                    } else {
                        b = b.union(comp);
                    }
                }
                out.push(Separation::new(a, b).canonical());
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
        if all.len() > MAX_MEMBERS {
            return Err(Error::Refusal(
                "separation count exceeds the work limit".into(),
            ));
        }
    }
    all.sort_by_key(|m| m.system_key());
    all.dedup();
    Ok(all)
}

fn lift_restricted(
    _g: &Graph,
    sigma: &[Separation],
    t: &Torso,
    torso_seps: &[Separation],
) -> Result<Vec<Separation>> {
    let regions: Vec<(VertexSet, VertexSet)> = sigma
        .iter()
        .map(|s| (s.small_strict(), s.separator()))
        .filter(|(r, _)| !r.is_empty())
        .collect();
    if regions.len() > 20 {
        return Err(Error::Refusal(
            "restriction star too large to expand".into(),
        ));
    }
    let mut out = Vec::new();
    for ts in torso_seps {
        for oriented in [*ts, ts.reverse()] {
            let a0 = t.lift(oriented.a);
            let b0 = t.lift(oriented.b);
            for mask in 0u32..(1 << regions.len()) {
                let mut a = a0;
                let mut b = b0;
                let mut ok = true;
                for (i, &(region, sep)) in regions.iter().enumerate() {
                    let side = if mask >> i & 1 == 1 { &mut a } else { &mut b };
                    if !sep.is_subset(*side) {
                        ok = false;
                        break;
                    }
                    *side = side.union(region);
                }
                if ok {
                    out.push(Separation::new(a, b).canonical());
                }
            }
        }
    }
    out.sort_by_key(|m| m.system_key());
    out.dedup();
    Ok(out)
}

/// Naive scan over all pairs of vertex subsets; test oracle for small graphs.
pub fn brute_force_separations(g: &Graph, k: usize) -> Vec<Separation> {
    let n = g.n();
    assert!(n <= 10);
    let mut out = Vec::new();
    for a in 0u128..(1 << n) {
        for b in 0u128..(1 << n) {
            let s = Separation::new(VertexSet::from_bits(a), VertexSet::from_bits(b));
            if s.order() < k && s.is_separation_of(g) {
                out.push(s.canonical());
            }
        }
    }
    out.sort_by_key(|m| m.system_key());
    out.dedup();
    out
}
