use fixedbitset::FixedBitSet;

use crate::error::Result;
use crate::family::{CompiledFamily, FamilySpec};
use crate::graph::Graph;
use crate::orientation::Orientation;
use crate::system::SeparationSystem;

/// Backtracking search for `F`-tangles with consistency propagation.
pub struct TangleSearch<'a> {
    sys: &'a SeparationSystem,
    fam: &'a CompiledFamily,
    below: Vec<Vec<u32>>,
    sets_of: Vec<Vec<u32>>,
    count: Vec<u32>,
    state: Vec<i8>,
    in_o: FixedBitSet,
    trail: Vec<usize>,
}

impl<'a> TangleSearch<'a> {
    pub fn new(sys: &'a SeparationSystem, fam: &'a CompiledFamily) -> Self {
        let mut sets_of = vec![Vec::new(); sys.oriented_len()];
        for (i, s) in fam.sets.iter().enumerate() {
            for &x in s {
                sets_of[x as usize].push(i as u32);
            }
        }
        TangleSearch {
            sys,
            fam,
            below: sys.below_lists(),
            sets_of,
            count: vec![0; fam.sets.len()],
            state: vec![-1; sys.len()],
            in_o: FixedBitSet::with_capacity(sys.oriented_len()),
            trail: Vec::new(),
        }
    }

    fn assign(&mut self, id: usize) -> bool {
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            let m = x / 2;
            let d = (x % 2) as i8;
            if self.state[m] == d {
                continue;
            }
            if self.state[m] >= 0 {
                return false;
            }
            self.state[m] = d;
            self.in_o.insert(x);
            self.trail.push(x);
            let mut hit = false;
            for &s in &self.sets_of[x] {
                self.count[s as usize] += 1;
                hit |= self.count[s as usize] as usize == self.fam.sets[s as usize].len();
            }
            if hit {
                return false;
            }
            if let Some(bound) = self.fam.interior_bound {
                if self
                    .fam
                    .find_small_star(self.sys, bound, x, &self.in_o)
                    .is_some()
                {
                    return false;
                }
            }
            stack.extend(self.below[x].iter().map(|&z| z as usize));
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let x = self.trail.pop().unwrap();
            self.state[x / 2] = -1;
            self.in_o.set(x, false);
            for &s in &self.sets_of[x] {
                self.count[s as usize] -= 1;
            }
        }
    }

    fn current(&self) -> Orientation {
        Orientation {
            reversed: self.state.iter().map(|&d| d == 1).collect(),
        }
    }

    /// Assigns the given oriented ids up front; false if that already fails.
    pub fn force(&mut self, ids: &[usize]) -> bool {
        ids.iter().all(|&id| self.assign(id))
    }

    /// Up to `limit` tangles in canonical backtracking order.
    pub fn run(&mut self, limit: usize) -> Vec<Orientation> {
        let mut out = Vec::new();
        if self.fam.empty_member || limit == 0 {
            return out;
        }
        let n = self.sys.len();
        for m in 0..n {
            if self.sys.is_degenerate_member(m) && !self.assign(2 * m) {
                return out;
            }
        }
        struct Frame {
            m: usize,
            next: usize,
            mark: usize,
        }
        let mut frames: Vec<Frame> = Vec::new();
        let mut start = 0;
        'outer: loop {
            let mut m = start;
            while m < n && self.state[m] >= 0 {
                m += 1;
            }
            if m == n {
                out.push(self.current());
                if out.len() >= limit {
                    break;
                }
            } else {
                frames.push(Frame {
                    m,
                    next: 0,
                    mark: self.trail.len(),
                });
            }
            loop {
                let Some(f) = frames.last_mut() else {
                    break 'outer;
                };
                let (fm, mark) = (f.m, f.mark);
                let options = if self.sys.is_degenerate_member(fm) {
                    1
                } else {
                    2
                };
                if f.next >= options {
                    frames.pop();
                    self.undo_to(mark);
                    continue;
                }
                let d = f.next;
                f.next += 1;
                self.undo_to(mark);
                if self.assign(2 * fm + d) {
                    start = fm + 1;
                    continue 'outer;
                }
            }
        }
        out
    }
}

pub fn search_tangles(
    sys: &SeparationSystem,
    fam: &CompiledFamily,
    limit: usize,
) -> Vec<Orientation> {
    TangleSearch::new(sys, fam).run(limit)
}

/// All (up to `limit`) consistent `F`-avoiding orientations of `S_k(g)`.
pub fn find_f_tangles(
    g: &Graph,
    k: usize,
    spec: &FamilySpec,
    limit: usize,
) -> Result<(SeparationSystem, Vec<Orientation>)> {
    let sys = SeparationSystem::enumerate(g, k)?;
    let fam = CompiledFamily::compile(spec, &sys)?;
    let found = search_tangles(&sys, &fam, limit);
    Ok((sys, found))
}

/// Enumerates every orientation and checks the definitions directly.
/// Test oracle for small systems.
pub fn naive_tangles(sys: &SeparationSystem, spec: &FamilySpec) -> Vec<Orientation> {
    use crate::separation::Separation;
    let n = sys.len();
    assert!(n <= 20, "naive oracle limited to 20 members");
    let free: Vec<usize> = (0..n).filter(|&m| !sys.is_degenerate_member(m)).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << free.len()) {
        let mut reversed = vec![false; n];
        for (j, &m) in free.iter().enumerate() {
            reversed[m] = mask >> j & 1 == 1;
        }
        let o = Orientation { reversed };
        let seps: Vec<Separation> = o.separations(sys);
        let consistent = seps.iter().all(|x| {
            seps.iter()
                .all(|y| x.canonical() == y.canonical() || !x.reverse().lt(*y))
        });
        if !consistent {
            continue;
        }
        if !avoids_naive(sys, spec, &seps) {
            continue;
        }
        out.push(o);
    }
    out.sort_by_key(|o| (0..n).map(|i| o.reversed[i]).collect::<Vec<_>>());
    out
}

fn avoids_naive(
    sys: &SeparationSystem,
    spec: &FamilySpec,
    seps: &[crate::separation::Separation],
) -> bool {
    if spec.member(sys, &[]).member {
        return false;
    }
    // every subset that is a star, plus all sets of size ≤ 3
    let n = seps.len();
    let mut chosen = Vec::new();
    fn rec(
        sys: &SeparationSystem,
        spec: &FamilySpec,
        seps: &[crate::separation::Separation],
        i: usize,
        chosen: &mut Vec<crate::separation::Separation>,
        n: usize,
    ) -> bool {
        if !chosen.is_empty() && spec.member(sys, chosen).member {
            return false;
        }
        for j in i..n {
            chosen.push(seps[j]);
            let keep = chosen.len() <= 3 || crate::star::is_star(chosen);
            if keep && !rec(sys, spec, seps, j + 1, chosen, n) {
                return false;
            }
            chosen.pop();
        }
        true
    }
    rec(sys, spec, seps, 0, &mut chosen, n)
}
