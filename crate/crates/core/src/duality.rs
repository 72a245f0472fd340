use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{CompiledFamily, FamilySpec};
use crate::graph::Graph;
use crate::orientation::{check_orientation_compiled, Orientation};
use crate::search::search_tangles;
use crate::separation::Separation;
use crate::stree::STree;
use crate::system::SeparationSystem;
use crate::treewidth::exact_treewidth;

pub const MAX_TREE_NODES: usize = 1_000_000;

/// Least fixed point of buildability: `s⃗` is buildable if some member
/// `σ ∋ s⃗` of the family has every other `t⃗ ∈ σ` with `t⃖` buildable.
#[derive(Clone, Debug)]
pub struct Hang {
    pub buildable: FixedBitSet,
    pub witness: Vec<Option<Vec<usize>>>,
    pub order: Vec<usize>,
}

fn rev_id(sys: &SeparationSystem, id: usize) -> usize {
    if sys.is_degenerate_member(id / 2) {
        id
    } else {
        id ^ 1
    }
}

pub fn hang(sys: &SeparationSystem, fam: &CompiledFamily) -> Hang {
    let n = sys.oriented_len();
    let mut h = Hang {
        buildable: FixedBitSet::with_capacity(n),
        witness: vec![None; n],
        order: Vec::new(),
    };
    let mut sets_of = vec![Vec::new(); n];
    for (i, s) in fam.sets.iter().enumerate() {
        for &x in s {
            sets_of[x as usize].push(i);
        }
    }
    let mut unsat: Vec<usize> = fam.sets.iter().map(|s| s.len()).collect();
    // candidates[t] is set once t⃖ is buildable
    let mut candidates = FixedBitSet::with_capacity(n);
    let mut queue = VecDeque::new();

    let derive = |h: &mut Hang, queue: &mut VecDeque<usize>, x: usize, w: Vec<usize>| {
        if !h.buildable.contains(x) {
            h.buildable.insert(x);
            h.witness[x] = Some(w);
            h.order.push(x);
            queue.push_back(x);
        }
    };
    let fire = |h: &mut Hang,
                queue: &mut VecDeque<usize>,
                cand: &FixedBitSet,
                set: &[u32],
                unsat: usize| {
        let w: Vec<usize> = set.iter().map(|&x| x as usize).collect();
        match unsat {
            0 => {
                for &x in &w {
                    derive(h, queue, x, w.clone());
                }
            }
            1 => {
                if let Some(&x) = w.iter().find(|&&x| !cand.contains(x)) {
                    derive(h, queue, x, w.clone());
                }
            }
            _ => {}
        }
    };
    for (i, s) in fam.sets.iter().enumerate() {
        fire(&mut h, &mut queue, &candidates, s, unsat[i]);
    }
    loop {
        while let Some(x) = queue.pop_front() {
            let t = rev_id(sys, x);
            if candidates.contains(t) {
                continue;
            }
            candidates.insert(t);
            for &i in &sets_of[t] {
                unsat[i] -= 1;
                fire(&mut h, &mut queue, &candidates, &fam.sets[i], unsat[i]);
            }
        }
        let Some(bound) = fam.interior_bound else {
            break;
        };
        let mut changed = false;
        for x in sys.oriented_ids() {
            if h.buildable.contains(x) || sys.is_degenerate_member(x / 2) {
                continue;
            }
            if let Some(star) = fam.find_small_star(sys, bound, x, &candidates) {
                derive(&mut h, &mut queue, x, star);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    h
}

impl Hang {
    pub fn separations(&self, sys: &SeparationSystem) -> Vec<Separation> {
        self.buildable.ones().map(|id| sys.sep(id)).collect()
    }

    /// Non-degenerate members with both orientations buildable.
    pub fn both_sides(&self, sys: &SeparationSystem) -> Vec<usize> {
        (0..sys.len())
            .filter(|&m| {
                !sys.is_degenerate_member(m)
                    && self.buildable.contains(2 * m)
                    && self.buildable.contains(2 * m + 1)
            })
            .collect()
    }

    fn sizes(&self, sys: &SeparationSystem) -> Vec<usize> {
        let mut size = vec![0usize; sys.oriented_len()];
        for &x in &self.order {
            let w = self.witness[x].as_ref().unwrap();
            let mut s = 1usize;
            for &t in w {
                if t != x {
                    s = s.saturating_add(size[rev_id(sys, t)]);
                }
            }
            size[x] = s;
        }
        size
    }

    /// Unwinds witnesses into an S-tree, or `None` if nothing is buildable from both sides.
    pub fn tree(&self, sys: &SeparationSystem, fam: &CompiledFamily) -> Result<Option<STree>> {
        if fam.empty_member {
            return Ok(Some(STree::single()));
        }
        let size = self.sizes(sys);
        let Some(m) = self
            .both_sides(sys)
            .into_iter()
            .min_by_key(|&m| (size[2 * m].saturating_add(size[2 * m + 1]), m))
        else {
            return Ok(None);
        };
        if size[2 * m].saturating_add(size[2 * m + 1]) > MAX_TREE_NODES {
            return Err(Error::Refusal("unwound tree exceeds the node limit".into()));
        }
        let mut st = STree {
            nodes: 0,
            edges: Vec::new(),
        };
        let a = self.grow(sys, &mut st, 2 * m);
        let b = self.grow(sys, &mut st, 2 * m + 1);
        // α(b, a) = sep(2m) points into a
        st.add_edge(b, a, sys.sep(2 * m));
        Ok(Some(st))
    }

    /// Builds the subtree hanging below an edge labelled `x` that points into its root.
    fn grow(&self, sys: &SeparationSystem, st: &mut STree, x: usize) -> usize {
        let root = st.add_node();
        let mut stack = vec![(root, x)];
        while let Some((node, y)) = stack.pop() {
            let w = self.witness[y].as_ref().expect("buildable");
            for &t in w {
                if t == y {
                    continue;
                }
                let child = st.add_node();
                st.add_edge(child, node, sys.sep(t));
                stack.push((child, rev_id(sys, t)));
            }
        }
        root
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Tangle(Vec<Separation>),
    STree(STree),
}

#[derive(Clone, Debug)]
pub struct DualityOutcome {
    pub verdict: Verdict,
    pub tangle: Option<Orientation>,
    pub hang_set: Vec<Separation>,
}

/// Exactly one of an `F`-tangle and an S-tree over `F`, both sides computed.
pub fn duality_in(sys: &SeparationSystem, spec: &FamilySpec) -> Result<DualityOutcome> {
    let fam = CompiledFamily::compile(spec, sys)?;
    let h = hang(sys, &fam);
    let tree = h.tree(sys, &fam)?;
    let tangle = search_tangles(sys, &fam, 1).into_iter().next();
    let hang_set = h.separations(sys);
    match (tree, tangle) {
        (Some(st), None) => {
            let rep = st.validate(sys.graph(), Some((sys, spec)));
            if rep.over_family != Some(true) {
                return Err(Error::Soundness(format!(
                    "built S-tree fails validation: {rep:?}"
                )));
            }
            Ok(DualityOutcome {
                verdict: Verdict::STree(st),
                tangle: None,
                hang_set,
            })
        }
        (None, Some(o)) => {
            let flags = check_orientation_compiled(sys, &o, &fam);
            if !flags.consistent || !flags.avoids_family {
                return Err(Error::Soundness(format!(
                    "found tangle fails validation: {flags:?}"
                )));
            }
            Ok(DualityOutcome {
                verdict: Verdict::Tangle(o.separations(sys)),
                tangle: Some(o),
                hang_set,
            })
        }
        (Some(_), Some(_)) => Err(Error::Soundness("both a tangle and an S-tree exist".into())),
        (None, None) => Err(Error::Soundness(
            "neither a tangle nor an S-tree exists".into(),
        )),
    }
}

pub fn duality(
    g: &Graph,
    k: usize,
    spec: &FamilySpec,
) -> Result<(SeparationSystem, DualityOutcome)> {
    let sys = SeparationSystem::enumerate(g, k)?;
    let out = duality_in(&sys, spec)?;
    Ok((sys, out))
}

/// An S-tree over `U_k` from an optimal tree-decomposition, if `tw ≤ k − 2`.
pub fn uk_tree_via_treewidth(g: &Graph, k: usize) -> Result<STree> {
    let t = exact_treewidth(g)?;
    if t.tw > k as i64 - 2 {
        return Err(Error::Refusal(format!(
            "treewidth {} exceeds {}",
            t.tw,
            k as i64 - 2
        )));
    }
    let mut td = t.td;
    loop {
        let nested = td
            .edges()
            .into_iter()
            .find(|&(c, p)| td.bags[c].is_subset(td.bags[p]) || td.bags[p].is_subset(td.bags[c]));
        match nested {
            Some(e) => td = td.contract(&[e])?,
            None => break,
        }
    }
    STree::from_td(&td, k)
}
