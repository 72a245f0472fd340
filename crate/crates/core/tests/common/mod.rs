#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tangleforge::family::FamilySpec;
use tangleforge::star::is_star;
use tangleforge::system::enumerate_all;
use tangleforge::{Graph, Separation, SeparationSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every graph on `n` vertices, one per edge subset.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    (0u32..1 << pairs.len())
        .map(|mask| {
            let e: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| *p).collect();
            Graph::new(n, &e).unwrap()
        })
        .collect()
}

pub fn random_graph(r: &mut ChaCha8Rng, lo: usize, hi: usize) -> Graph {
    let n = r.random_range(lo..=hi);
    let p: f64 = r.random_range(0.2..0.8);
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                e.push((u, v));
            }
        }
    }
    Graph::new(n, &e).unwrap()
}

/// All graphs on at most 5 vertices plus 200 random graphs on 6 to 8 vertices.
pub fn corpus() -> Vec<Graph> {
    let mut out: Vec<Graph> = (1..=5).flat_map(all_graphs).collect();
    let mut r = rng(0x7a6e);
    out.extend((0..200).map(|_| random_graph(&mut r, 6, 8)));
    out
}

pub fn oriented(seps: &[Separation]) -> Vec<Separation> {
    let mut out: Vec<Separation> = seps.iter().flat_map(|&s| [s, s.reverse()]).collect();
    out.sort_by_key(|s| (s.system_key(), *s != s.canonical()));
    out.dedup();
    out
}

#[derive(Clone, Debug)]
pub struct ShiftInstance {
    pub s: Separation,
    pub r: Separation,
    pub sigma: Vec<Separation>,
    pub t: Separation,
}

fn emulates(all_k: &[Separation], sys: &SeparationSystem, s: Separation, r: Separation) -> bool {
    r.le(s) && all_k.iter().all(|&x| !r.le(x) || sys.contains(s.join(x)))
}

/// A random `(s⃗, r⃗, σ, t⃗)` where `s⃗ ∈ S⃗_k` emulates `r⃗ ∈ S⃗_{2k−1}` in `S_k`,
/// `σ ∈ F` lies in `S_{≥r⃗} ∖ {r⃗}` and `t⃗ ∈ σ` with `t⃗ ≥ r⃗`.
pub fn shift_instance(
    r: &mut ChaCha8Rng,
    sys: &SeparationSystem,
    spec: &FamilySpec,
    attempts: usize,
) -> Option<ShiftInstance> {
    let g = sys.graph();
    let k = sys.k();
    let all_k = oriented(sys.members());
    let big = oriented(&enumerate_all(g, 2 * k - 1).ok()?);
    for _ in 0..attempts {
        let rr = *big.choose(r)?;
        let ss: Vec<Separation> = all_k.iter().copied().filter(|&s| emulates(&all_k, sys, s, rr)).collect();
        let Some(&s) = ss.choose(r) else { continue };
        let above: Vec<Separation> =
            all_k.iter().copied().filter(|&x| x != rr && (rr.le(x) || rr.le(x.reverse()))).collect();
        let ts: Vec<Separation> = above.iter().copied().filter(|&x| rr.le(x)).collect();
        let Some(&t) = ts.choose(r) else { continue };
        let mut sigma = vec![t];
        let extra = r.random_range(0..=2);
        for _ in 0..extra {
            let fits: Vec<Separation> = above
                .iter()
                .copied()
                .filter(|x| !sigma.contains(x) && is_star(&[sigma.as_slice(), &[*x]].concat()))
                .collect();
            if let Some(&x) = fits.choose(r) {
                sigma.push(x);
            }
        }
        if spec.member(sys, &sigma).member {
            return Some(ShiftInstance { s, r: rr, sigma, t });
        }
    }
    None
}
