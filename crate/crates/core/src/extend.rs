use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::duality::{duality_in, Verdict};
use crate::error::{Error, Result};
use crate::family::{enumerate_stars, CompiledFamily, FamilySpec};
use crate::graph::Graph;
use crate::orientation::{check_orientation, check_orientation_compiled, closely_related, Orientation};
use crate::robust::{left_robust, robustness_bound, FanMode, RobustOutcome, RobustWitness};
use crate::search::search_tangles;
use crate::separation::Separation;
use crate::star::torso;
use crate::stree::STree;
use crate::system::{enumerate_all, SeparationSystem};
use crate::vset::VertexSet;

/// Why an element of a star may be refined away.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Premise {
    /// The inverse is closely related to this `F`-avoiding profile of `S_k`.
    CloselyRelated { profile: Vec<Separation> },
    Robust { ell: usize, witness: RobustWitness },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PremiseRecord {
    pub separation: Separation,
    pub premise: Premise,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RefineVerdict {
    Tangle(Vec<Separation>),
    STree(STree),
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineOutcome {
    pub verdict: RefineVerdict,
    pub premises: Vec<PremiseRecord>,
    /// Members of `S_k^σ`.
    pub restricted_size: usize,
    /// Separations of order `< k` of the torso of `σ`.
    pub torso_separations: usize,
    /// Tangles after each extension step, starting on `S_k^σ`.
    pub extension_sizes: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    pub budget: usize,
    pub profile_limit: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { budget: 1_000_000, profile_limit: 64 }
    }
}

/// The `F`-tangles of `S_k` that are also profiles.
pub fn avoiding_profiles(sys: &SeparationSystem, spec: &FamilySpec, limit: usize) -> Result<Vec<Orientation>> {
    let fam = CompiledFamily::compile(spec, sys)?;
    let pk = FamilySpec::Pk { k: sys.k() };
    let mut out = Vec::new();
    for o in search_tangles(sys, &fam, limit) {
        if check_orientation(sys, &o, &pk)?.profile {
            out.push(o);
        }
    }
    Ok(out)
}

/// Finds a premise for `s⃗`: a profile with `s⃖` closely related, else a robustness witness.
pub fn find_premise(
    full: &SeparationSystem,
    profiles: &[Orientation],
    spec: &FamilySpec,
    s: Separation,
    budget: usize,
) -> std::result::Result<Premise, String> {
    if let Some(p) = profiles.iter().find(|p| closely_related(full, s.reverse(), p)) {
        return Ok(Premise::CloselyRelated { profile: p.separations(full) });
    }
    let g = full.graph();
    let Some(m) = spec.m_bound(g.n()) else {
        return Err(format!("{s:?}: family has no interior bound, robustness does not apply"));
    };
    let ell = robustness_bound(full.k(), m);
    match left_robust(g, s, ell, FanMode::SharedEnds, budget) {
        RobustOutcome::Witness(w) => Ok(Premise::Robust { ell, witness: w }),
        RobustOutcome::Impossible(why) => Err(format!(
            "{s:?}: no F-avoiding profile has its inverse closely related, and it is not left-{ell}-robust ({why})"
        )),
        RobustOutcome::BudgetExhausted(why) => Err(format!(
            "{s:?}: no F-avoiding profile has its inverse closely related; left-{ell}-robustness undecided ({why})"
        )),
    }
}

/// Extends an `F′`-tangle of `S_k^σ` to `S_k^{σ∖{s}}` and re-validates it.
pub fn extend_tangle(
    small: &SeparationSystem,
    tau: &Orientation,
    big: &SeparationSystem,
    s: Separation,
    premise: &Premise,
    spec: &FamilySpec,
) -> Result<Orientation> {
    let mut ids = Vec::with_capacity(big.len());
    let lookup = |q: Separation| -> Result<bool> {
        if small.id(q).is_none() {
            return Err(Error::Soundness(format!("corner {q:?} is missing from the restricted system")));
        }
        Ok(tau.contains(small, q))
    };
    match premise {
        Premise::CloselyRelated { profile } => {
            let profile: HashSet<Separation> = profile.iter().copied().collect();
            let sbar = s.reverse();
            for (i, &r) in big.members().iter().enumerate() {
                let id = if small.contains(r) {
                    if tau.contains(small, r) {
                        2 * i
                    } else {
                        2 * i + 1
                    }
                } else if r.is_nested(s) {
                    if r.le(s) {
                        2 * i
                    } else if r.reverse().le(s) {
                        2 * i + 1
                    } else {
                        return Err(Error::Soundness(format!("{r:?} is nested with {s:?} but not below it")));
                    }
                } else {
                    let p = if profile.contains(&r) { r } else { r.reverse() };
                    let keep = lookup(p.meet(sbar))?;
                    if keep == (p == r) {
                        2 * i
                    } else {
                        2 * i + 1
                    }
                };
                ids.push(id);
            }
        }
        Premise::Robust { witness, .. } => {
            let paths: Vec<VertexSet> =
                witness.paths.iter().map(|(_, p)| p.iter().copied().collect()).collect();
            let meets_all = |side: VertexSet| paths.iter().all(|p| p.meets(side));
            let (c, d) = (s.a, s.b);
            for (i, &r) in big.members().iter().enumerate() {
                let (a, b) = (r.a, r.b);
                let forward = if small.contains(r) {
                    tau.contains(small, r)
                } else if meets_all(a) {
                    lookup(Separation::new(a.union(c), b.intersection(d)))?
                } else if meets_all(b) {
                    !lookup(Separation::new(b.union(c), a.intersection(d)))?
                } else {
                    return Err(Error::Soundness(format!("neither side of {r:?} meets every path")));
                };
                ids.push(if forward { 2 * i } else { 2 * i + 1 });
            }
        }
    }
    let out = Orientation::from_ids(big, ids)?;
    for x in tau.separations(small) {
        if !out.contains(big, x) {
            return Err(Error::Soundness(format!("extension drops {x:?}")));
        }
    }
    let flags = check_orientation(big, &out, spec)?;
    if !flags.consistent || !flags.avoids_family {
        return Err(Error::Soundness(format!("extension past {s:?} is not a tangle: {flags:?}")));
    }
    Ok(out)
}

/// Refines `σ` away: an `F′`-tangle of `S_k` containing `σ`, or an S-tree over `F′`
/// with every element of `σ` as a leaf separation.
pub fn refine_inessential_star(
    g: &Graph,
    k: usize,
    spec: &FamilySpec,
    sigma: &[Separation],
    opts: RefineOptions,
) -> Result<RefineOutcome> {
    let restricted = SeparationSystem::restricted(g, k, sigma)?;
    let full = SeparationSystem::enumerate(g, k)?;
    let profiles = if sigma.is_empty() { Vec::new() } else { avoiding_profiles(&full, spec, opts.profile_limit)? };
    let mut premises = Vec::new();
    for &s in sigma {
        let premise = find_premise(&full, &profiles, spec, s, opts.budget).map_err(Error::Refusal)?;
        premises.push(PremiseRecord { separation: s, premise });
    }
    let aug = spec.augmented(sigma);
    let torso_separations = enumerate_all(&torso(g, sigma).graph, k)?.len();
    let restricted_size = restricted.len();
    let out = duality_in(&restricted, &aug)?;
    match out.verdict {
        Verdict::STree(st) => {
            let leaves = st.leaf_separations();
            if let Some(s) = sigma.iter().find(|s| !leaves.contains(s)) {
                return Err(Error::Soundness(format!("{s:?} is not a leaf separation of the refined tree")));
            }
            Ok(RefineOutcome {
                verdict: RefineVerdict::STree(st),
                premises,
                restricted_size,
                torso_separations,
                extension_sizes: Vec::new(),
            })
        }
        Verdict::Tangle(_) => {
            let mut tau = out.tangle.expect("tangle verdict carries its orientation");
            let mut sys = restricted;
            let mut sizes = vec![sys.len()];
            for (i, rec) in premises.iter().enumerate() {
                let big = SeparationSystem::restricted(g, k, &sigma[i + 1..])?;
                tau = extend_tangle(&sys, &tau, &big, rec.separation, &rec.premise, &aug)?;
                sys = big;
                sizes.push(sys.len());
            }
            Ok(RefineOutcome {
                verdict: RefineVerdict::Tangle(tau.separations(&sys)),
                premises,
                restricted_size,
                torso_separations,
                extension_sizes: sizes,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparableFailure {
    pub r: Separation,
    pub r_prime: Separation,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparableReport {
    pub pairs_checked: usize,
    pub complete: bool,
    pub failures: Vec<SeparableFailure>,
}

/// Whether `s⃗` emulates `r⃗` in the system, and for `spec` over stars up to `star_cap` elements.
pub fn emulates_for(
    sys: &SeparationSystem,
    spec: &FamilySpec,
    s: Separation,
    r: Separation,
    star_cap: usize,
    star_limit: usize,
) -> std::result::Result<(), String> {
    if !r.le(s) {
        return Err(format!("{s:?} is not above {r:?}"));
    }
    let above: Vec<usize> = sys.oriented_ids().filter(|&x| r.le(sys.sep(x))).collect();
    if let Some(&x) = above.iter().find(|&&x| !sys.contains(s.join(sys.sep(x)))) {
        return Err(format!("{s:?} ∨ {:?} leaves the system", sys.sep(x)));
    }
    let mut allowed = FixedBitSet::with_capacity(sys.oriented_len());
    for &x in &above {
        allowed.insert(x);
        allowed.insert(sys.id(sys.sep(x).reverse()).expect("reverse in system"));
    }
    if let Some(rb) = sys.id(r.reverse()) {
        allowed.set(rb, false);
    }
    for star in enumerate_stars(sys, &allowed, star_cap, star_limit) {
        let seps: Vec<Separation> = star.iter().map(|&x| sys.sep(x)).collect();
        if !spec.member(sys, &seps).member {
            continue;
        }
        for &t in seps.iter().filter(|t| r.le(**t)) {
            let mut shifted = vec![s.join(t)];
            shifted.extend(seps.iter().filter(|&&u| u != t).map(|u| u.meet(s.reverse())));
            if !spec.member(sys, &shifted).member {
                return Err(format!("shifting {seps:?} at {t:?} gives {shifted:?}, outside the family"));
            }
        }
    }
    Ok(())
}

/// Checks pairs `r⃗ ≤ r⃗′` for a separation `s` of minimal order between them
/// such that `s⃗` emulates `r⃗` and `s⃖` emulates `r⃗′⁻`.
pub fn check_f_separable(sys: &SeparationSystem, spec: &FamilySpec, budget: usize) -> SeparableReport {
    let g = sys.graph();
    let v = g.vertices();
    let usable = |x: Separation| {
        !(x.a == v && x.b == v) && !sys.is_trivial(x) && !spec.member(sys, &[x]).member
    };
    let ids: Vec<usize> = sys.oriented_ids().filter(|&x| usable(sys.sep(x))).collect();
    let star_cap = 3;
    let mut report = SeparableReport { pairs_checked: 0, complete: true, failures: Vec::new() };
    for &x in &ids {
        for &y in &ids {
            let (r, rp) = (sys.sep(x), sys.sep(y));
            if !r.le(rp) {
                continue;
            }
            if report.pairs_checked >= budget {
                report.complete = false;
                return report;
            }
            report.pairs_checked += 1;
            let s = sys
                .oriented_ids()
                .map(|z| sys.sep(z))
                .filter(|&z| r.le(z) && z.le(rp))
                .min_by_key(|z| (z.order(), z.system_key()))
                .expect("r lies between r and r′");
            let left = emulates_for(sys, spec, s, r, star_cap, 10_000);
            let right = emulates_for(sys, spec, s.reverse(), rp.reverse(), star_cap, 10_000);
            if let Err(reason) = left.and(right) {
                report.failures.push(SeparableFailure { r, r_prime: rp, reason });
            }
        }
    }
    report
}

/// Re-checks an orientation of `S_k^σ` against the augmented family.
pub fn is_augmented_tangle(sys: &SeparationSystem, o: &Orientation, spec: &FamilySpec) -> Result<bool> {
    let fam = CompiledFamily::compile(spec, sys)?;
    let f = check_orientation_compiled(sys, o, &fam);
    Ok(f.consistent && f.avoids_family)
}
