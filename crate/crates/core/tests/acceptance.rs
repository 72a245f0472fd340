mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use tangleforge::bramble::{bramble_to_tangle, max_bramble_order, tangle_to_bramble, theorem4_report, Bramble};
use tangleforge::cert::*;
use tangleforge::duality::{duality, Verdict};
use tangleforge::extend::{
    avoiding_profiles, extend_tangle, find_premise, is_augmented_tangle, refine_inessential_star, RefineOptions,
    RefineVerdict,
};
use tangleforge::family::{CompiledFamily, FamilySpec};
use tangleforge::limits::{edgeless_tangle_count, end_degree_proxy, limits_report, TruncationFamily};
use tangleforge::orientation::{check_orientation, distinguishers, emulate_and_shift, Orientation};
use tangleforge::search::{find_f_tangles, naive_tangles, search_tangles};
use tangleforge::star::interior;
use tangleforge::stree::STree;
use tangleforge::system::enumerate_all;
use tangleforge::tot::{all_tangles, build_tree_of_tangles, refine_tree_of_tangles};
use tangleforge::treewidth::{exact_treewidth, treewidth_by_orderings};
use tangleforge::{Graph, Separation, SeparationSystem, VertexSet};

const DUALITY_BUDGET: Duration = Duration::from_secs(600);
const TRUNCATION_BUDGET: Duration = Duration::from_secs(60);
const LATTICE_SAMPLES: usize = 10_000;
const SHIFT_SAMPLES: usize = 1_000;
const NAIVE_LIMIT: usize = 14;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail },
        Some(f) => Outcome { pass: false, detail: format!("{detail}; {} failures, first: {f}", failures.len()) },
    }
}

/// Certificates seen by the run; the smallest of each kind is kept for mutation.
#[derive(Default)]
struct Store {
    emitted: AtomicUsize,
    verified: AtomicUsize,
    failures: Mutex<Vec<String>>,
    samples: Mutex<BTreeMap<String, (Certificate, Option<Graph>)>>,
}

impl Store {
    fn emit(&self, c: Certificate, g: Option<&Graph>) -> bool {
        self.emitted.fetch_add(1, Ordering::Relaxed);
        let text = c.to_json();
        let back = match Certificate::from_json(&text) {
            Ok(b) => b,
            Err(e) => {
                self.failures.lock().unwrap().push(format!("{:?} does not parse back: {e}", c.kind));
                return false;
            }
        };
        if back != c {
            self.failures.lock().unwrap().push(format!("{:?} changes on round trip", c.kind));
            return false;
        }
        if let Err(e) = verify(&back, g) {
            self.failures.lock().unwrap().push(format!("{:?} fails verification: {e}", c.kind));
            return false;
        }
        self.verified.fetch_add(1, Ordering::Relaxed);
        let key = format!("{:?}", c.kind);
        let mut s = self.samples.lock().unwrap();
        let smaller = s.get(&key).is_none_or(|(old, _)| text.len() < old.to_json().len());
        if smaller {
            s.insert(key, (back, g.cloned()));
        }
        true
    }
}

fn families(k: usize) -> [FamilySpec; 2] {
    [FamilySpec::TStar { k }, FamilySpec::Uk { k }]
}

fn ids(o: &Orientation) -> Vec<usize> {
    let mut v: Vec<usize> = o.ids().collect();
    v.sort_unstable();
    v
}

fn le(x: Separation, y: Separation) -> bool {
    x.a.is_subset(y.a) && y.b.is_subset(x.b)
}

fn nested(x: Separation, y: Separation) -> bool {
    let (xr, yr) = (Separation::new(x.b, x.a), Separation::new(y.b, y.a));
    le(x, y) || le(x, yr) || le(xr, y) || le(xr, yr)
}

fn order(x: Separation) -> usize {
    x.a.intersection(x.b).len()
}

fn connected(g: &Graph, s: VertexSet) -> bool {
    let Some(start) = s.min() else { return false };
    let mut seen = VertexSet::singleton(start);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for u in s.iter() {
            if !seen.contains(u) && g.has_edge(u, v) {
                seen.insert(u);
                stack.push(u);
            }
        }
    }
    seen == s
}

fn touching(g: &Graph, x: VertexSet, y: VertexSet) -> bool {
    x.meets(y) || x.iter().any(|u| y.iter().any(|v| g.has_edge(u, v)))
}

/// Smallest vertex set meeting every element, by increasing subset size.
fn brute_hitting_number(n: usize, sets: &[VertexSet]) -> usize {
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| m.count_ones());
    masks
        .into_iter()
        .find(|&m| sets.iter().all(|s| s.iter().any(|v| m >> v & 1 == 1)))
        .map_or(usize::MAX, |m| m.count_ones() as usize)
}

/// One representative per isomorphism class of graphs on `n` vertices.
fn iso_classes(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let index = |u: usize, v: usize| pairs.iter().position(|&p| p == (u.min(v), u.max(v))).unwrap();
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &perms {
            for x in (0..n).filter(|x| !p.contains(x)) {
                next.push([p.as_slice(), &[x]].concat());
            }
        }
        perms = next;
    }
    let maps: Vec<Vec<usize>> =
        perms.iter().map(|p| pairs.iter().map(|&(u, v)| index(p[u], p[v])).collect()).collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let is_min = maps.iter().all(|m| {
            let img = (0..pairs.len()).filter(|&i| mask >> i & 1 == 1).fold(0u32, |a, i| a | 1 << m[i]);
            img >= mask
        });
        if is_min {
            let e: Vec<_> = (0..pairs.len()).filter(|&i| mask >> i & 1 == 1).map(|i| pairs[i]).collect();
            out.push(Graph::new(n, &e).unwrap());
        }
    }
    out
}

/// Maximal stars among `items` by Bron-Kerbosch on the star relation.
fn maximal_stars(items: &[Separation]) -> Vec<Vec<Separation>> {
    let n = items.len();
    let compat: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && le(items[i], Separation::new(items[j].b, items[j].a))).collect())
        .collect();
    let mut out = Vec::new();
    fn bk(c: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            out.push(r.clone());
            return;
        }
        let pivot = p.iter().chain(&x).copied().max_by_key(|&u| p.iter().filter(|&&v| c[u][v]).count()).unwrap();
        let mut p = p;
        let mut x = x;
        for v in p.clone().into_iter().filter(|&v| !c[pivot][v]) {
            r.push(v);
            let np = p.iter().copied().filter(|&w| c[v][w]).collect();
            let nx = x.iter().copied().filter(|&w| c[v][w]).collect();
            bk(c, r, np, nx, out);
            r.pop();
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
    let mut raw = Vec::new();
    bk(&compat, &mut Vec::new(), (0..n).collect(), Vec::new(), &mut raw);
    for ids in raw {
        out.push(ids.into_iter().map(|i| items[i]).collect());
    }
    out
}

fn interior_size(n: usize, star: &[Separation]) -> usize {
    star.iter().fold(VertexSet::full(n), |a, s| a.intersection(s.b)).len()
}

fn crit_duality(store: &Store) -> Outcome {
    let t0 = Instant::now();
    let corpus = common::corpus();
    let jobs: Vec<(usize, usize)> = (0..corpus.len()).flat_map(|i| (1..=4).map(move |k| (i, k))).collect();
    let (trees, tangles) = (AtomicUsize::new(0), AtomicUsize::new(0));
    let failures: Vec<String> = jobs
        .par_iter()
        .flat_map_iter(|&(i, k)| {
            let g = &corpus[i];
            let mut bad = Vec::new();
            for spec in families(k) {
                let ctx = format!("graph {i} k={k} {}", spec.name());
                let (sys, out) = match duality(g, k, &spec) {
                    Ok(x) => x,
                    Err(e) => {
                        bad.push(format!("{ctx}: {e}"));
                        continue;
                    }
                };
                let (verdict, payload) = match out.verdict {
                    Verdict::Tangle(t) => {
                        tangles.fetch_add(1, Ordering::Relaxed);
                        (true, DualityPayload { verdict: VerdictKind::Tangle, tangle: Some(t), stree: None, hang_set: out.hang_set })
                    }
                    Verdict::STree(st) => {
                        trees.fetch_add(1, Ordering::Relaxed);
                        (false, DualityPayload { verdict: VerdictKind::Stree, tangle: None, stree: Some(st), hang_set: out.hang_set })
                    }
                };
                if sys.len() <= NAIVE_LIMIT && naive_tangles(&sys, &spec).is_empty() == verdict {
                    bad.push(format!("{ctx}: verdict disagrees with exhaustive orientation scan"));
                }
                match Certificate::new(CertKind::Duality, params_for(g, Some(k), Some(&spec)), &payload) {
                    Ok(c) => {
                        if !store.emit(c, Some(g)) {
                            bad.push(format!("{ctx}: certificate does not re-verify"));
                        }
                    }
                    Err(e) => bad.push(format!("{ctx}: {e}")),
                }
            }
            bad
        })
        .collect();
    let mut failures = failures;
    let el = t0.elapsed();
    if el > DUALITY_BUDGET {
        failures.push(format!("took {el:?}, budget {DUALITY_BUDGET:?}"));
    }
    outcome(
        &failures,
        format!(
            "{} graphs, {} tangles, {} S-trees",
            corpus.len(),
            tangles.into_inner(),
            trees.into_inner()
        ),
    )
}

fn crit_theorem4() -> Outcome {
    let corpus = common::corpus();
    let checked = AtomicUsize::new(0);
    let failures: Vec<String> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            let mut bad = Vec::new();
            let tw = match exact_treewidth(g) {
                Ok(t) => t.tw,
                Err(e) => return vec![format!("graph {i}: {e}")],
            };
            if g.n() <= 9 && tw != treewidth_by_orderings(g) {
                bad.push(format!("graph {i}: exact treewidth {tw} differs from elimination orderings"));
            }
            if g.n() <= 6 {
                match max_bramble_order(g) {
                    Ok((o, _)) if o as i64 == tw + 1 => {}
                    Ok((o, _)) => bad.push(format!("graph {i}: maximum bramble order {o} but treewidth {tw}")),
                    Err(e) => bad.push(format!("graph {i}: {e}")),
                }
            }
            for k in 1..=4 {
                match theorem4_report(g, k) {
                    Ok(r) => {
                        checked.fetch_add(1, Ordering::Relaxed);
                        let same = [r.bramble, r.no_tree, r.tw_at_least].iter().all(|&b| b == r.tangle);
                        if !same || !r.all_equal || r.treewidth != tw || r.tw_at_least != (tw >= k as i64 - 1) {
                            bad.push(format!("graph {i} k={k}: {r:?}"));
                        }
                    }
                    Err(e) => bad.push(format!("graph {i} k={k}: {e}")),
                }
            }
            bad
        })
        .collect();
    outcome(&failures, format!("{} reports", checked.into_inner()))
}

fn crit_width(store: &Store) -> Outcome {
    let corpus = common::corpus();
    let trees = AtomicUsize::new(0);
    let failures: Vec<String> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            let mut bad = Vec::new();
            let tw = exact_treewidth(g).map(|t| t.tw).unwrap_or(i64::MAX);
            for k in 1..=4 {
                let spec = FamilySpec::TStar { k };
                match duality(g, k, &spec) {
                    Ok((_, out)) => {
                        if let Verdict::STree(st) = out.verdict {
                            trees.fetch_add(1, Ordering::Relaxed);
                            let deg = st.degrees().into_iter().max().unwrap_or(0);
                            match st.to_td(g) {
                                Ok(td) => {
                                    let rep = td.validate(g, None);
                                    if !rep.valid || td.max_bag() > 3 * k - 3 || deg > 3 {
                                        bad.push(format!("graph {i} k={k}: bag {} degree {deg} valid {}", td.max_bag(), rep.valid));
                                    }
                                    if i % 97 == 0 {
                                        let p = TdPayload { td, width: rep.width, exact: false };
                                        if let Ok(c) = Certificate::new(CertKind::Td, params_for(g, None, None), &p) {
                                            store.emit(c, Some(g));
                                        }
                                        if let Ok(c) = Certificate::new(
                                            CertKind::Stree,
                                            params_for(g, Some(k), Some(&spec)),
                                            &stree_payload(g, &st),
                                        ) {
                                            store.emit(c, Some(g));
                                        }
                                    }
                                }
                                Err(e) => bad.push(format!("graph {i} k={k}: {e}")),
                            }
                        }
                    }
                    Err(e) => bad.push(format!("graph {i} k={k}: {e}")),
                }
                // the implication is immediate once tw ≥ k − 1
                if tw < k as i64 - 1 {
                    match find_f_tangles(g, k, &FamilySpec::Tk { k }, 1) {
                        Ok((_, ts)) if !ts.is_empty() => {
                            bad.push(format!("graph {i} k={k}: has a tangle but treewidth {tw}"))
                        }
                        Ok(_) => {}
                        Err(e) => bad.push(format!("graph {i} k={k}: {e}")),
                    }
                }
            }
            bad
        })
        .collect();
    outcome(&failures, format!("{} S-trees over T*", trees.into_inner()))
}

fn all_separations(g: &Graph) -> Vec<Separation> {
    common::oriented(&enumerate_all(g, g.n() + 1).unwrap())
}

fn crit_lattice() -> Outcome {
    let mut r = common::rng(0x1a77);
    let mut failures = Vec::new();
    let (mut pairs, mut triples) = (0, 0);
    while pairs < LATTICE_SAMPLES || triples < LATTICE_SAMPLES {
        let g = common::random_graph(&mut r, 5, 8);
        let seps = all_separations(&g);
        for _ in 0..200 {
            let (&x, &y) = (seps.choose(&mut r).unwrap(), seps.choose(&mut r).unwrap());
            if nested(x, y) {
                continue;
            }
            let meet = Separation::new(x.a.intersection(y.a), x.b.union(y.b));
            let join = Separation::new(x.a.union(y.a), x.b.intersection(y.b));
            if pairs < LATTICE_SAMPLES {
                pairs += 1;
                if x.meet(y) != meet || x.join(y) != join || order(meet) + order(join) != order(x) + order(y) {
                    failures.push(format!("submodularity fails for {x:?} {y:?}"));
                }
            }
            if triples < LATTICE_SAMPLES {
                let ts: Vec<Separation> = seps.iter().copied().filter(|&t| nested(t, x) && nested(t, y)).collect();
                if let Some(&t) = ts.choose(&mut r) {
                    triples += 1;
                    let corners = [
                        meet,
                        Separation::new(x.a.intersection(y.b), x.b.union(y.a)),
                        Separation::new(x.b.intersection(y.a), x.a.union(y.b)),
                        Separation::new(x.b.intersection(y.b), x.a.union(y.a)),
                    ];
                    if corners.iter().any(|&c| !nested(t, c)) {
                        failures.push(format!("{t:?} is nested with {x:?} and {y:?} but not with a corner"));
                    }
                }
            }
        }
    }
    outcome(&failures, format!("{pairs} crossing pairs, {triples} triples"))
}

fn crit_niceness() -> Outcome {
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (fi, name) in ["tstar", "uk"].iter().enumerate() {
        let mut r = common::rng(0x5f1f_u64.wrapping_add(fi as u64));
        let mut done = 0;
        let mut tries = 0;
        while done < SHIFT_SAMPLES && tries < 50 * SHIFT_SAMPLES {
            tries += 1;
            let g = common::random_graph(&mut r, 4, 7);
            let k = r.random_range(2..=3);
            let spec = FamilySpec::from_name(name, k).unwrap();
            let sys = SeparationSystem::enumerate(&g, k).unwrap();
            let Some(inst) = common::shift_instance(&mut r, &sys, &spec, 20) else { continue };
            done += 1;
            let expect: HashSet<Separation> = std::iter::once(inst.s.join(inst.t))
                .chain(inst.sigma.iter().filter(|&&x| x != inst.t).map(|&x| x.meet(inst.s.reverse())))
                .collect();
            match emulate_and_shift(&sys, inst.s, inst.r, &inst.sigma, inst.t) {
                Ok(rep) => {
                    let got: HashSet<Separation> = rep.shifted.iter().copied().collect();
                    if !rep.emulates || got != expect {
                        failures.push(format!("{name}: shift differs for {inst:?}"));
                    } else if !spec.member(&sys, &rep.shifted).member {
                        failures.push(format!("{name}: shifted star leaves the family for {inst:?}"));
                    }
                }
                Err(e) => failures.push(format!("{name}: {e}")),
            }
        }
        if done < SHIFT_SAMPLES {
            failures.push(format!("{name}: only {done} instances found"));
        }
        counts.push(format!("{name} {done}"));
    }
    outcome(&failures, format!("instances {}", counts.join(", ")))
}

fn grid_corner(g: &Graph, c: usize) -> Separation {
    let small = g.neighbours(c).with(c);
    Separation::new(small, g.vertices().without(c))
}

fn curated_stars() -> Vec<(String, Graph, usize, Vec<Separation>)> {
    let vs = |r: std::ops::Range<usize>| r.collect::<VertexSet>();
    let mut out = Vec::new();
    let two_k4 = Graph::new(
        6,
        &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)],
    )
    .unwrap();
    let s = Separation::new(vs(0..4), vs(2..6));
    out.push(("two-K4 left".to_string(), two_k4.clone(), 3, vec![s]));
    out.push(("two-K4 right".to_string(), two_k4.clone(), 3, vec![s.reverse()]));
    out.push(("two-K4 both".to_string(), two_k4, 3, vec![s, s.reverse()]));
    for n in 4..=7 {
        let g = Graph::path(n);
        let cut = |i: usize| Separation::new(vs(0..i + 1), vs(i..n));
        for i in 1..n - 1 {
            out.push((format!("P{n} cut {i}"), g.clone(), 2, vec![cut(i)]));
            out.push((format!("P{n} cut {i} both"), g.clone(), 2, vec![cut(i), cut(i).reverse()]));
            for j in i + 1..n - 1 {
                out.push((format!("P{n} cuts {i},{j}"), g.clone(), 2, vec![cut(i), cut(j).reverse()]));
            }
        }
    }
    for (rows, cols) in [(2, 3), (2, 4), (2, 5), (3, 3), (3, 4), (3, 5)] {
        let g = Graph::grid(rows, cols);
        let corners = [0, rows * cols - 1, rows - 1, rows * (cols - 1)];
        let upto = if rows == 2 { 1 } else { 4 };
        for m in 1..=upto {
            let sigma: Vec<Separation> = corners[..m].iter().map(|&c| grid_corner(&g, c)).collect();
            out.push((format!("grid {rows}x{cols} corners {m}"), g.clone(), 3, sigma));
        }
    }
    out
}

fn crit_refine_star() -> Outcome {
    let mut failures = Vec::new();
    let (mut ok, mut trees, mut refused) = (0, 0, Vec::new());
    for (name, g, k, sigma) in curated_stars() {
        for spec in families(k) {
            let ctx = format!("{name} {}", spec.name());
            match refine_inessential_star(&g, k, &spec, &sigma, RefineOptions::default()) {
                Ok(out) => {
                    ok += 1;
                    if out.restricted_size > out.torso_separations << sigma.len() {
                        failures.push(format!(
                            "{ctx}: {} restricted separations exceed {} times 2^{}",
                            out.restricted_size,
                            out.torso_separations,
                            sigma.len()
                        ));
                    }
                    let sys = SeparationSystem::restricted(&g, k, &sigma).unwrap();
                    let aug = spec.augmented(&sigma);
                    match out.verdict {
                        RefineVerdict::STree(st) => {
                            trees += 1;
                            check_refined_tree(&ctx, &g, &sys, &spec, &aug, &sigma, &st, &mut failures);
                        }
                        RefineVerdict::Tangle(t) => {
                            let full = SeparationSystem::enumerate(&g, k).unwrap();
                            let good = Orientation::from_separations(&full, &t)
                                .ok()
                                .and_then(|o| is_augmented_tangle(&full, &o, &aug).ok())
                                .unwrap_or(false);
                            if !good {
                                failures.push(format!("{ctx}: returned orientation is not a tangle avoiding F'"));
                            }
                        }
                    }
                }
                Err(tangleforge::Error::Refusal(why)) => {
                    if !premise_fails(&g, k, &spec, &sigma) {
                        failures.push(format!("{ctx}: refused although a premise holds ({why})"));
                    }
                    refused.push(ctx);
                }
                Err(e) => failures.push(format!("{ctx}: {e}")),
            }
        }
    }
    for group in ["two-K4", "P", "grid 3x"] {
        let total = curated_stars().iter().filter(|(n, ..)| n.starts_with(group)).count() * 2;
        let refused_here = refused.iter().filter(|n| n.starts_with(group)).count();
        if refused_here == total {
            failures.push(format!("every {group} instance was refused"));
        }
    }
    outcome(
        &failures,
        format!("{ok} refined ({trees} S-trees), {} refused by precondition", refused.len()),
    )
}

#[allow(clippy::too_many_arguments)]
fn check_refined_tree(
    ctx: &str,
    g: &Graph,
    sys: &SeparationSystem,
    spec: &FamilySpec,
    aug: &FamilySpec,
    sigma: &[Separation],
    st: &STree,
    failures: &mut Vec<String>,
) {
    let rep = st.validate(g, Some((sys, aug)));
    if !rep.valid || rep.over_family != Some(true) {
        failures.push(format!("{ctx}: S-tree is not over F' ({:?})", rep.violation));
    }
    for s in sigma {
        if !rep.leaf_separations.contains(s) {
            failures.push(format!("{ctx}: {s:?} is not a leaf separation"));
        }
    }
    let degrees = st.degrees();
    for t in 0..st.nodes {
        let star = st.star_at(t);
        let leaf_of_sigma = degrees[t] == 1 && star.len() == 1 && sigma.contains(&star[0].reverse());
        if !leaf_of_sigma && !spec.member(sys, &star).member {
            failures.push(format!("{ctx}: node {t} star {star:?} is not in F"));
        }
    }
}

/// Neither premise holds for some element: no profile with a closely related
/// inverse, and robustness is impossible or undecided.
fn premise_fails(g: &Graph, k: usize, spec: &FamilySpec, sigma: &[Separation]) -> bool {
    let full = SeparationSystem::enumerate(g, k).unwrap();
    let profiles = avoiding_profiles(&full, spec, 64).unwrap();
    sigma.iter().any(|&s| {
        let r = s.reverse();
        let related = profiles.iter().any(|p| {
            let seps = p.separations(&full);
            seps.contains(&r) && seps.iter().all(|&x| order(Separation::new(r.a.intersection(x.a), r.b.union(x.b))) < k)
        });
        !related && find_premise(&full, &profiles, spec, s, RefineOptions::default().budget).is_err()
    })
}

fn crit_extension() -> Outcome {
    let mut graphs: Vec<Graph> = (1..=5).flat_map(common::all_graphs).collect();
    graphs.extend(iso_classes(6));
    let jobs: Vec<(usize, usize, usize)> =
        (0..graphs.len()).flat_map(|i| (1..=3).flat_map(move |k| (0..2).map(move |f| (i, k, f)))).collect();
    let steps = AtomicUsize::new(0);
    let failures: Vec<String> = jobs
        .par_iter()
        .flat_map_iter(|&(i, k, f)| {
            let g = &graphs[i];
            let spec = families(k)[f].clone();
            let mut bad = Vec::new();
            let full = SeparationSystem::enumerate(g, k).unwrap();
            let profiles = avoiding_profiles(&full, &spec, 64).unwrap();
            for id in full.oriented_ids() {
                let s = full.sep(id);
                let Ok(premise) = find_premise(&full, &profiles, &spec, s, 100_000) else { continue };
                let sigma = [s];
                let aug = spec.augmented(&sigma);
                let small = SeparationSystem::restricted(g, k, &sigma).unwrap();
                let small_fam = CompiledFamily::compile(&aug, &small).unwrap();
                let inputs = search_tangles(&small, &small_fam, 10_000);
                if inputs.is_empty() {
                    continue;
                }
                let full_fam = CompiledFamily::compile(&aug, &full).unwrap();
                let mut every: HashSet<Vec<usize>> = search_tangles(&full, &full_fam, 1_000_000).iter().map(ids).collect();
                if full.len() <= NAIVE_LIMIT {
                    let naive: HashSet<Vec<usize>> = naive_tangles(&full, &aug).iter().map(ids).collect();
                    if naive != every {
                        bad.push(format!("graph {i} k={k} s={s:?}: search and exhaustive scan disagree"));
                    }
                    every = naive;
                }
                for t in inputs {
                    let ctx = format!("graph {i} n={} k={k} {} s={s:?}", g.n(), spec.name());
                    match extend_tangle(&small, &t, &full, s, &premise, &aug) {
                        Ok(ext) => {
                            steps.fetch_add(1, Ordering::Relaxed);
                            let got = ext.separations(&full);
                            if !t.separations(&small).iter().all(|x| got.contains(x)) {
                                bad.push(format!("{ctx}: extension drops part of its input"));
                            }
                            if !every.contains(&ids(&ext)) {
                                bad.push(format!("{ctx}: extension is not a tangle avoiding F'"));
                            }
                            let flags = check_orientation(&full, &ext, &aug).unwrap();
                            if !flags.consistent || !flags.avoids_family {
                                bad.push(format!("{ctx}: flags {flags:?}"));
                            }
                        }
                        Err(e) => bad.push(format!("{ctx}: {e}")),
                    }
                }
            }
            bad
        })
        .collect();
    outcome(&failures, format!("{} graphs, {} extensions", graphs.len(), steps.into_inner()))
}

fn crit_brambles(store: &Store) -> Outcome {
    let corpus: Vec<Graph> = common::corpus().into_iter().filter(|g| g.n() <= 6).collect();
    let (to_b, to_t) = (AtomicUsize::new(0), AtomicUsize::new(0));
    let failures: Vec<String> = corpus
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, g)| {
            let mut bad = Vec::new();
            let max = max_bramble_order(g).ok();
            for k in 1..=4 {
                let ctx = format!("graph {i} k={k}");
                let (sys, ts) = find_f_tangles(g, k, &FamilySpec::Uk { k }, 64).unwrap();
                let mut brambles: Vec<Bramble> = Vec::new();
                for t in &ts {
                    match tangle_to_bramble(&sys, t) {
                        Ok(b) => {
                            to_b.fetch_add(1, Ordering::Relaxed);
                            let valid = b.elements.iter().all(|&x| connected(g, x))
                                && b.elements.iter().all(|&x| b.elements.iter().all(|&y| touching(g, x, y)));
                            let ord = brute_hitting_number(g.n(), &b.elements);
                            if !valid || ord < k {
                                bad.push(format!("{ctx}: bramble valid {valid}, order {ord}"));
                            }
                            if let Ok(c) =
                                Certificate::new(CertKind::Bramble, params_for(g, Some(k), None), &bramble_payload(g, &b))
                            {
                                if !store.emit(c, Some(g)) {
                                    bad.push(format!("{ctx}: bramble certificate does not verify"));
                                }
                            }
                            brambles.push(b);
                        }
                        Err(e) => bad.push(format!("{ctx}: {e}")),
                    }
                }
                if let Some((o, b)) = &max {
                    if *o >= k {
                        brambles.push(b.clone());
                    }
                }
                for b in &brambles {
                    match bramble_to_tangle(g, k, b) {
                        Ok((sys, o)) => {
                            to_t.fetch_add(1, Ordering::Relaxed);
                            let flags = check_orientation(&sys, &o, &FamilySpec::Uk { k }).unwrap();
                            let oriented = o.separations(&sys).len() == sys.len();
                            if !flags.consistent || !flags.avoids_family || !oriented {
                                bad.push(format!("{ctx}: bramble tangle flags {flags:?}"));
                            }
                        }
                        Err(e) => bad.push(format!("{ctx}: {e}")),
                    }
                }
            }
            bad
        })
        .collect();
    outcome(
        &failures,
        format!("{} graphs, {} tangle to bramble, {} bramble to tangle", corpus.len(), to_b.into_inner(), to_t.into_inner()),
    )
}

fn crit_tree_of_tangles() -> Outcome {
    let mut graphs: Vec<Graph> = common::corpus().into_iter().filter(|g| g.n() <= 7).collect();
    let mut r = common::rng(0x70d7);
    graphs.extend((0..100).map(|_| common::random_graph(&mut r, 7, 7)));
    let jobs: Vec<(usize, usize)> = (0..graphs.len()).flat_map(|i| (1..=3).map(move |k| (i, k))).collect();
    let (done, essential, refused) = (AtomicUsize::new(0), AtomicUsize::new(0), AtomicUsize::new(0));
    let failures: Vec<String> = jobs
        .par_iter()
        .flat_map_iter(|&(i, k)| {
            let g = &graphs[i];
            let ctx = format!("graph {i} k={k}");
            let spec = FamilySpec::TStar { k };
            let input = match build_tree_of_tangles(g, k, &spec) {
                Ok(td) => td,
                Err(tangleforge::Error::Refusal(_)) => {
                    refused.fetch_add(1, Ordering::Relaxed);
                    return vec![];
                }
                Err(e) => return vec![format!("{ctx}: {e}")],
            };
            let out = match refine_tree_of_tangles(g, k, &spec, &input) {
                Ok(o) => o,
                Err(e) => return vec![format!("{ctx}: {e}")],
            };
            done.fetch_add(1, Ordering::Relaxed);
            let mut bad = Vec::new();
            let rep = out.td.validate(g, Some(&input));
            if !rep.valid || rep.refines_other != Some(true) {
                bad.push(format!("{ctx}: refined decomposition does not refine its input"));
            }
            let sys = SeparationSystem::enumerate(g, k).unwrap();
            let ts = all_tangles(&sys, &spec).unwrap();
            let edge_seps: Vec<Separation> = out.td.induced_separations().into_iter().map(|(_, s)| s).collect();
            for a in 0..ts.len() {
                for b in a + 1..ts.len() {
                    let d = distinguishers(&sys, &ts[a], &ts[b]);
                    let (sa, sb) = (ts[a].separations(&sys), ts[b].separations(&sys));
                    let hit = edge_seps.iter().any(|&s| {
                        Some(order(s)) == d.min_order
                            && [s, s.reverse()].iter().any(|&x| sa.contains(&x) && sb.contains(&x.reverse()))
                    });
                    if !hit {
                        bad.push(format!("{ctx}: tangles {a} and {b} not distinguished efficiently"));
                    }
                }
            }
            let sets: Vec<HashSet<Separation>> = ts.iter().map(|t| t.separations(&sys).into_iter().collect()).collect();
            for node in &out.nodes {
                let (Some(tau), Some(m)) = (node.tangle, &node.minimized) else { continue };
                essential.fetch_add(1, Ordering::Relaxed);
                let mine: Vec<Separation> = sets[tau].iter().copied().collect();
                let mut best = usize::MAX;
                if ts.len() == 1 {
                    best = g.n();
                }
                for star in maximal_stars(&mine) {
                    let exclusive = (0..ts.len()).filter(|&j| j != tau).all(|j| !star.iter().all(|x| sets[j].contains(x)));
                    if exclusive {
                        best = best.min(interior_size(g.n(), &star));
                    }
                }
                let want: HashSet<Separation> = m.iter().copied().collect();
                let at = (0..out.stree.nodes).find(|&t| out.stree.star_at(t).into_iter().collect::<HashSet<_>>() == want);
                match at {
                    Some(t) if out.td.bags[t].len() == best && interior(g, m).len() == best => {}
                    Some(t) => bad.push(format!("{ctx}: essential bag {} but minimum {best}", out.td.bags[t].len())),
                    None => bad.push(format!("{ctx}: minimized star of tangle {tau} is not a node star")),
                }
            }
            bad
        })
        .collect();
    outcome(
        &failures,
        format!(
            "{} refined, {} essential parts, {} inputs refused",
            done.into_inner(),
            essential.into_inner(),
            refused.into_inner()
        ),
    )
}

fn crit_truncations(store: &Store) -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    let mut checks = 0;
    for rows in 1..=4 {
        for n in 1..=12 {
            checks += 1;
            match end_degree_proxy(TruncationFamily::Grid { rows }, n, None) {
                Ok(r) if r.paths == rows => {}
                Ok(r) => failures.push(format!("grid rows={rows} n={n}: {} paths", r.paths)),
                Err(e) => failures.push(format!("grid rows={rows} n={n}: {e}")),
            }
        }
    }
    let fam = TruncationFamily::RayClique { clique: 5 };
    for n in fam.min_n().max(1)..=30 {
        checks += 1;
        match limits_report(fam, n, None) {
            Ok(r) => {
                let seq = r.sequence.expect("ray and clique reports carry a sequence");
                let core = seq.core.expect("ray and clique sequences carry a core");
                if core.len() != 5 || !core.is_subset(seq.big_intersection) || !seq.valid {
                    failures.push(format!("ray+clique n={n}: core not kept"));
                }
            }
            Err(e) => failures.push(format!("ray+clique n={n}: {e}")),
        }
    }
    for m in 1..=6 {
        checks += 1;
        match edgeless_tangle_count(m, 1) {
            Ok(c) if c == m => {}
            Ok(c) => failures.push(format!("edgeless m={m}: {c} tangles")),
            Err(e) => failures.push(format!("edgeless m={m}: {e}")),
        }
    }
    let el = t0.elapsed();
    if el > TRUNCATION_BUDGET {
        failures.push(format!("took {el:?}, budget {TRUNCATION_BUDGET:?}"));
    }
    for (family, n) in [(TruncationFamily::Edgeless, 3), (TruncationFamily::Ray, 4)] {
        let args = ReportArgs::Limits { family, n, k: Some(1) };
        if let Ok(result) = run_report(None, &args) {
            let g = report_graph(&args).unwrap().unwrap();
            if let Ok(c) = Certificate::new(CertKind::Report, params_for(&g, None, None), &ReportPayload { args, result }) {
                store.emit(c, None);
            }
        }
    }
    outcome(&failures, format!("{checks} truncations"))
}

fn emit_remaining_kinds(store: &Store) {
    let g = Graph::path(3);
    let sys = SeparationSystem::enumerate(&g, 2).unwrap();
    let c = Certificate::new(
        CertKind::Separations,
        params_for(&g, Some(2), None),
        &SeparationsPayload { separations: sys.members().to_vec() },
    )
    .unwrap();
    store.emit(c, Some(&g));
    let spec = FamilySpec::Tk { k: 2 };
    let (sys, ts) = find_f_tangles(&g, 2, &spec, 16).unwrap();
    store.emit(tangle_certificate(&sys, &spec, &ts[0]).unwrap(), Some(&g));
    let p = TanglesPayload { tangles: ts.iter().map(|t| t.separations(&sys)).collect(), complete: true };
    store.emit(Certificate::new(CertKind::Tangles, params_for(&g, Some(2), Some(&spec)), &p).unwrap(), Some(&g));
    let t = exact_treewidth(&g).unwrap();
    let p = TdPayload { td: t.td, width: t.tw, exact: true };
    store.emit(Certificate::new(CertKind::Td, params_for(&g, None, None), &p).unwrap(), Some(&g));
    let args = ReportArgs::Theorem4 { k: 2 };
    let result = run_report(Some(&g), &args).unwrap();
    store.emit(
        Certificate::new(CertKind::Report, params_for(&g, Some(2), None), &ReportPayload { args, result }).unwrap(),
        Some(&g),
    );
}

fn crit_certificates(store: &Store) -> Outcome {
    emit_remaining_kinds(store);
    let mut failures = store.failures.lock().unwrap().clone();
    let emitted = store.emitted.load(Ordering::Relaxed);
    let verified = store.verified.load(Ordering::Relaxed);
    if emitted != verified {
        failures.push(format!("{verified} of {emitted} certificates verified"));
    }
    let samples = store.samples.lock().unwrap().clone();
    let mutations = AtomicUsize::new(0);
    let accepted: Vec<String> = samples
        .par_iter()
        .flat_map_iter(|(kind, (c, g))| {
            let text = c.to_json();
            let start = text.find("\"payload\"").unwrap();
            let end = text.find("\"digest\"").unwrap();
            let bytes = text.as_bytes().to_vec();
            let mut bad = Vec::new();
            for i in start..end {
                for bit in 0..8 {
                    let mut m = bytes.clone();
                    m[i] ^= 1 << bit;
                    mutations.fetch_add(1, Ordering::Relaxed);
                    let ok = std::str::from_utf8(&m)
                        .ok()
                        .and_then(|s| Certificate::from_json(s).ok())
                        .is_some_and(|c| verify(&c, g.as_ref()).is_ok());
                    if ok {
                        bad.push(format!("{kind}: flipping bit {bit} of byte {i} still verifies"));
                    }
                }
            }
            bad
        })
        .collect();
    failures.extend(accepted);
    let kinds: Vec<&str> = samples.keys().map(|s| s.as_str()).collect();
    if kinds.len() != 8 {
        failures.push(format!("only kinds {kinds:?} were exercised"));
    }
    outcome(
        &failures,
        format!("{verified}/{emitted} verified, {} mutations over {} kinds rejected", mutations.into_inner(), kinds.len()),
    )
}

fn main() {
    let store = Store::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("duality exactness", Box::new(|| crit_duality(&store))),
        ("four-way equivalence", Box::new(crit_theorem4)),
        ("width bounds", Box::new(|| crit_width(&store))),
        ("lattice identities", Box::new(crit_lattice)),
        ("niceness", Box::new(crit_niceness)),
        ("inessential star refinement", Box::new(crit_refine_star)),
        ("extension", Box::new(crit_extension)),
        ("bramble conversions", Box::new(|| crit_brambles(&store))),
        ("tree-of-tangles refinement", Box::new(crit_tree_of_tangles)),
        ("truncations", Box::new(|| crit_truncations(&store))),
        ("certificate round-trip", Box::new(|| crit_certificates(&store))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                Outcome { pass: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
            });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({}, {:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
