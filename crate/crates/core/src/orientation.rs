use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{CompiledFamily, FamilySpec};
use crate::separation::Separation;
use crate::star::is_star;
use crate::system::SeparationSystem;
use crate::vset::VertexSet;

/// One orientation per member of a separation system.
///
/// `reversed[i]` selects the inverse of member `i` as stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orientation {
    pub reversed: Vec<bool>,
}

impl Orientation {
    pub fn from_ids(
        sys: &SeparationSystem,
        ids: impl IntoIterator<Item = usize>,
    ) -> Result<Orientation> {
        let mut reversed = vec![None; sys.len()];
        for id in ids {
            let m = id / 2;
            let d = id % 2 == 1 && !sys.is_degenerate_member(m);
            match reversed[m] {
                Some(x) if x != d => {
                    return Err(Error::Structure(format!(
                        "both orientations of {:?} chosen",
                        sys.members()[m]
                    )))
                }
                _ => reversed[m] = Some(d),
            }
        }
        let reversed: Option<Vec<bool>> = reversed.into_iter().collect();
        reversed
            .map(|reversed| Orientation { reversed })
            .ok_or_else(|| Error::Structure("orientation does not cover every member".into()))
    }

    pub fn from_separations(sys: &SeparationSystem, seps: &[Separation]) -> Result<Orientation> {
        let ids: Result<Vec<usize>> = seps
            .iter()
            .map(|s| {
                sys.id(*s)
                    .ok_or_else(|| Error::Structure(format!("{s:?} is not in the system")))
            })
            .collect();
        if seps.len() != sys.len() {
            return Err(Error::Structure(format!(
                "{} separations for {} members",
                seps.len(),
                sys.len()
            )));
        }
        Self::from_ids(sys, ids?)
    }

    pub fn id(&self, i: usize) -> usize {
        2 * i + self.reversed[i] as usize
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.reversed.len()).map(|i| self.id(i))
    }

    pub fn bitset(&self, sys: &SeparationSystem) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(sys.oriented_len());
        for id in self.ids() {
            b.insert(id);
        }
        b
    }

    pub fn separations(&self, sys: &SeparationSystem) -> Vec<Separation> {
        self.ids().map(|id| sys.sep(id)).collect()
    }

    pub fn contains(&self, sys: &SeparationSystem, s: Separation) -> bool {
        match sys.id(s) {
            Some(id) => s.is_degenerate() || self.id(id / 2) == id,
            None => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationFlags {
    pub consistent: bool,
    pub regular: bool,
    pub avoids_family: bool,
    pub profile: bool,
    pub principal: bool,
    /// `(B, A)` and `(C, D)` in the orientation with `(A, B) < (C, D)`.
    pub inconsistent_pair: Option<(Separation, Separation)>,
    pub violating_subset: Option<Vec<Separation>>,
    /// `(A, B)`, `(C, D)` whose profile corner `(B ∩ D, A ∪ C)` is also present.
    pub profile_violation: Option<(Separation, Separation)>,
    pub non_principal_at: Option<VertexSet>,
}

pub fn check_orientation(
    sys: &SeparationSystem,
    o: &Orientation,
    spec: &FamilySpec,
) -> Result<OrientationFlags> {
    let fam = CompiledFamily::compile(spec, sys)?;
    Ok(check_orientation_compiled(sys, o, &fam))
}

pub fn check_orientation_compiled(
    sys: &SeparationSystem,
    o: &Orientation,
    fam: &CompiledFamily,
) -> OrientationFlags {
    let g = sys.graph();
    let v = g.vertices();
    let seps = o.separations(sys);
    let bits = o.bitset(sys);

    let mut inconsistent_pair = None;
    'outer: for &x in &seps {
        let rx = x.reverse();
        for &y in &seps {
            if x.canonical() != y.canonical() && rx.lt(y) {
                inconsistent_pair = Some((x, y));
                break 'outer;
            }
        }
    }
    let regular = !seps.iter().any(|s| s.a == v);

    let violating = if fam.empty_member {
        Some(Vec::new())
    } else {
        fam.contains_member(sys, &bits)
    };

    let mut profile_violation = None;
    'prof: for &x in &seps {
        for &y in &seps {
            let z = Separation::new(x.b.intersection(y.b), x.a.union(y.a));
            if z.order() < sys.k() && o.contains(sys, z) {
                profile_violation = Some((x, y));
                break 'prof;
            }
        }
    }

    let mut non_principal_at = None;
    for x in v.subsets_up_to(sys.k().saturating_sub(1)) {
        let comps = g.components(x, false);
        let ok = comps
            .iter()
            .any(|&c| o.contains(sys, Separation::new(v.difference(c), c.union(x))));
        if !ok {
            non_principal_at = Some(x);
            break;
        }
    }

    OrientationFlags {
        consistent: inconsistent_pair.is_none(),
        regular,
        avoids_family: violating.is_none(),
        profile: profile_violation.is_none(),
        principal: non_principal_at.is_none() && sys.k() > 0,
        inconsistent_pair,
        violating_subset: violating.map(|ids| ids.into_iter().map(|i| sys.sep(i)).collect()),
        profile_violation,
        non_principal_at,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distinguishers {
    pub all: Vec<Separation>,
    pub efficient: Vec<Separation>,
    pub min_order: Option<usize>,
    pub combinatorially_distinguishable: bool,
}

/// Members oriented differently by the two orientations, as oriented in `a`.
pub fn distinguishers(sys: &SeparationSystem, a: &Orientation, b: &Orientation) -> Distinguishers {
    let all: Vec<Separation> = (0..sys.len())
        .filter(|&i| a.reversed[i] != b.reversed[i])
        .map(|i| sys.sep(a.id(i)))
        .collect();
    let min_order = all.iter().map(|s| s.order()).min();
    let efficient = all
        .iter()
        .copied()
        .filter(|s| Some(s.order()) == min_order)
        .collect();
    Distinguishers {
        combinatorially_distinguishable: !all.is_empty(),
        all,
        efficient,
        min_order,
    }
}

/// `s⃗ ∈ O` and every infimum `s⃗ ∧ x⃗` with `x⃗ ∈ O` has order `< k`.
pub fn closely_related(sys: &SeparationSystem, s: Separation, o: &Orientation) -> bool {
    closely_related_witness(sys, s, o).is_ok()
}

pub fn closely_related_witness(
    sys: &SeparationSystem,
    s: Separation,
    o: &Orientation,
) -> std::result::Result<(), Option<Separation>> {
    if !o.contains(sys, s) {
        return Err(None);
    }
    for x in o.ids().map(|id| sys.sep(id)) {
        if s.meet(x).order() >= sys.k() {
            return Err(Some(x));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftReport {
    pub emulates: bool,
    /// Some `x⃗ ≥ r⃗` with `s⃗ ∨ x⃗` outside the system.
    pub failure: Option<Separation>,
    /// `{s⃗ ∨ t⃗} ∪ {t⃗′ ∧ s⃖ : t′ ∈ σ ∖ {t}}`.
    pub shifted: Vec<Separation>,
    pub shifted_is_star: bool,
}

pub fn emulate_and_shift(
    sys: &SeparationSystem,
    s: Separation,
    r: Separation,
    sigma: &[Separation],
    t: Separation,
) -> Result<ShiftReport> {
    if !r.le(s) {
        return Err(Error::Argument(format!("{s:?} is not ≥ {r:?}")));
    }
    if !sigma.contains(&t) {
        return Err(Error::Argument(format!("{t:?} is not in the star")));
    }
    if !r.le(t) {
        return Err(Error::Argument(format!("{t:?} is not ≥ {r:?}")));
    }
    let failure = sys
        .oriented_ids()
        .map(|id| sys.sep(id))
        .find(|&x| r.le(x) && !sys.contains(s.join(x)));
    let mut shifted = vec![s.join(t)];
    for &u in sigma {
        if u != t {
            shifted.push(u.meet(s.reverse()));
        }
    }
    shifted.sort_by_key(|x| (x.system_key(), *x != x.canonical()));
    shifted.dedup();
    Ok(ShiftReport {
        emulates: failure.is_none(),
        failure,
        shifted_is_star: is_star(&shifted),
        shifted,
    })
}
