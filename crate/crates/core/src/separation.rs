use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::vset::VertexSet;

/// An oriented separation `(A, B)`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Separation {
    pub a: VertexSet,
    pub b: VertexSet,
}

impl fmt::Debug for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.a, self.b)
    }
}

impl Separation {
    pub fn new(a: VertexSet, b: VertexSet) -> Self {
        Separation { a, b }
    }

    pub fn reverse(self) -> Self {
        Separation {
            a: self.b,
            b: self.a,
        }
    }

    pub fn separator(self) -> VertexSet {
        self.a.intersection(self.b)
    }

    pub fn order(self) -> usize {
        self.separator().len()
    }

    pub fn small_strict(self) -> VertexSet {
        self.a.difference(self.b)
    }

    pub fn big_strict(self) -> VertexSet {
        self.b.difference(self.a)
    }

    /// `(A, B) ≤ (C, D)` iff `A ⊆ C` and `B ⊇ D`.
    pub fn le(self, o: Self) -> bool {
        self.a.is_subset(o.a) && o.b.is_subset(self.b)
    }

    pub fn lt(self, o: Self) -> bool {
        self != o && self.le(o)
    }

    pub fn is_nested(self, o: Self) -> bool {
        self.le(o) || self.le(o.reverse()) || self.reverse().le(o) || o.le(self)
    }

    /// `(A ∩ C, B ∪ D)`.
    pub fn meet(self, o: Self) -> Self {
        Separation {
            a: self.a.intersection(o.a),
            b: self.b.union(o.b),
        }
    }

    /// `(A ∪ C, B ∩ D)`.
    pub fn join(self, o: Self) -> Self {
        Separation {
            a: self.a.union(o.a),
            b: self.b.intersection(o.b),
        }
    }

    /// True for `(V, V)`, the only separation equal to its own inverse.
    pub fn is_degenerate(self) -> bool {
        self.a == self.b
    }

    /// The same separation with its sides in canonical order: the side with
    /// fewer vertices first, ties broken lexicographically.
    pub fn canonical(self) -> Self {
        let key = |s: VertexSet| (s.len(), s);
        if key(self.b).cmp(&key(self.a)) == Ordering::Less {
            self.reverse()
        } else {
            self
        }
    }

    pub fn is_canonical(self) -> bool {
        self.canonical() == self
    }

    pub fn is_separation_of(self, g: &Graph) -> bool {
        self.a.union(self.b) == g.vertices()
            && g.edge_between(self.small_strict(), self.big_strict())
                .is_none()
    }

    /// Sort key for unoriented separations: order, then separator, then canonical sides.
    pub fn system_key(self) -> (usize, VertexSet, VertexSet, VertexSet) {
        let c = self.canonical();
        (c.order(), c.separator(), c.a, c.b)
    }
}

/// A validated separation with its tightness flags.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeparationInfo {
    pub sep: Separation,
    pub order: usize,
    pub proper: bool,
    pub left_tight: bool,
    pub right_tight: bool,
    pub tight: bool,
}

pub fn make_separation(g: &Graph, a: VertexSet, b: VertexSet) -> Result<SeparationInfo> {
    let v = g.vertices();
    if !a.is_subset(v) || !b.is_subset(v) {
        return Err(Error::NotASeparation(
            "a side contains a vertex outside the graph".into(),
        ));
    }
    if a.union(b) != v {
        let miss = v.difference(a.union(b)).min().unwrap_or(0);
        return Err(Error::NotASeparation(format!(
            "vertex {miss} lies in neither side"
        )));
    }
    let sep = Separation::new(a, b);
    if let Some((x, y)) = g.edge_between(sep.small_strict(), sep.big_strict()) {
        return Err(Error::NotASeparation(format!(
            "edge {x}-{y} joins the strict sides"
        )));
    }
    let x = sep.separator();
    let side_tight = |strict: VertexSet| {
        g.components_within(strict)
            .iter()
            .any(|&c| g.neighbourhood(c) == x)
    };
    let left_tight = side_tight(sep.small_strict());
    let right_tight = side_tight(sep.big_strict());
    Ok(SeparationInfo {
        sep,
        order: x.len(),
        proper: a != v && b != v,
        left_tight,
        right_tight,
        tight: left_tight && right_tight,
    })
}

/// The four corner separations of `r` and `s` with their orders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CornerBox {
    pub infimum: Separation,
    pub supremum: Separation,
    /// `r ∧ s`, `r ∧ s̄`, `r̄ ∧ s`, `r̄ ∧ s̄`.
    pub corners: [Separation; 4],
    pub order_sum_check: bool,
}

pub fn corner_box(r: Separation, s: Separation) -> CornerBox {
    let infimum = r.meet(s);
    let supremum = r.join(s);
    let corners = [
        r.meet(s),
        r.meet(s.reverse()),
        r.reverse().meet(s),
        r.reverse().meet(s.reverse()),
    ];
    CornerBox {
        infimum,
        supremum,
        corners,
        order_sum_check: infimum.order() + supremum.order() == r.order() + s.order(),
    }
}
