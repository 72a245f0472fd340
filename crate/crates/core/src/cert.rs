use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bramble::{bramble_order, max_bramble_order, min_cover, tangle_to_bramble, theorem4_report, Bramble};
use crate::duality::{duality, Verdict};
use crate::error::{Error, Result};
use crate::extend::{refine_inessential_star, RefineOptions};
use crate::family::FamilySpec;
use crate::graph::Graph;
use crate::limits::{limits_report, TruncationFamily};
use crate::orientation::{check_orientation, Orientation, OrientationFlags};
use crate::search::find_f_tangles;
use crate::separation::Separation;
use crate::stree::STree;
use crate::system::SeparationSystem;
use crate::td::TreeDecomposition;
use crate::tot::{build_tree_of_tangles, refine_tree_of_tangles};
use crate::treewidth::exact_treewidth;

pub const CERT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    Separations,
    Tangle,
    Tangles,
    Stree,
    Td,
    Bramble,
    Duality,
    Report,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub k: Option<usize>,
    pub family: Option<FamilySpec>,
    pub graph_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub version: u32,
    pub kind: CertKind,
    pub params: Params,
    pub payload: Value,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationsPayload {
    pub separations: Vec<Separation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TanglePayload {
    pub separations: Vec<Separation>,
    pub flags: OrientationFlags,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TanglesPayload {
    pub tangles: Vec<Vec<Separation>>,
    /// Whether the list holds every tangle.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct STreePayload {
    pub stree: STree,
    pub leaf_separations: Vec<Separation>,
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdPayload {
    pub td: TreeDecomposition,
    pub width: i64,
    /// The width is claimed to be the treewidth.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BramblePayload {
    pub bramble: Bramble,
    pub cover: crate::vset::VertexSet,
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Tangle,
    Stree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualityPayload {
    pub verdict: VerdictKind,
    pub tangle: Option<Vec<Separation>>,
    pub stree: Option<STree>,
    pub hang_set: Vec<Separation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReportArgs {
    Theorem4 { k: usize },
    Limits { family: TruncationFamily, n: usize, k: Option<usize> },
    RefineTree { k: usize, family: FamilySpec },
    RefineStar { k: usize, family: FamilySpec, sigma: Vec<Separation>, budget: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportPayload {
    pub args: ReportArgs,
    pub result: Value,
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    serde_json::to_value(t).map_err(|e| Error::Structure(format!("serialization failed: {e}")))
}

fn digest_of(version: u32, kind: CertKind, params: &Params, payload: &Value) -> Result<String> {
    let body = serde_json::json!({
        "version": version,
        "kind": kind,
        "params": to_value(params)?,
        "payload": payload,
    });
    let text = serde_json::to_string(&body).map_err(|e| Error::Structure(e.to_string()))?;
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Certificate {
    pub fn new<T: Serialize>(kind: CertKind, params: Params, payload: &T) -> Result<Certificate> {
        let payload = to_value(payload)?;
        let digest = digest_of(CERT_VERSION, kind, &params, &payload)?;
        Ok(Certificate { version: CERT_VERSION, kind, params, payload, digest })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Certificate> {
        serde_json::from_str(text).map_err(|e| Error::Verify(format!("malformed certificate: {e}")))
    }

    fn decode<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| Error::Verify(format!("malformed {:?} payload: {e}", self.kind)))
    }
}

pub fn params_for(g: &Graph, k: Option<usize>, family: Option<&FamilySpec>) -> Params {
    Params { k, family: family.cloned(), graph_hash: g.hash() }
}

pub fn tangle_certificate(sys: &SeparationSystem, spec: &FamilySpec, o: &Orientation) -> Result<Certificate> {
    let flags = check_orientation(sys, o, spec)?;
    let payload = TanglePayload { separations: o.separations(sys), flags };
    Certificate::new(CertKind::Tangle, params_for(sys.graph(), Some(sys.k()), Some(spec)), &payload)
}

pub fn stree_payload(g: &Graph, st: &STree) -> STreePayload {
    let rep = st.validate(g, None);
    STreePayload { stree: st.clone(), leaf_separations: rep.leaf_separations, max_degree: rep.max_degree }
}

pub fn bramble_payload(g: &Graph, b: &Bramble) -> BramblePayload {
    let rep = bramble_order(g, b);
    BramblePayload { bramble: b.clone(), cover: rep.cover, order: rep.order }
}

pub fn separations_certificate(g: &Graph, k: usize) -> Result<Certificate> {
    let sys = SeparationSystem::enumerate(g, k)?;
    let payload = SeparationsPayload { separations: sys.members().to_vec() };
    Certificate::new(CertKind::Separations, params_for(g, Some(k), None), &payload)
}

/// Up to `limit` tangles; `complete` when fewer were found.
pub fn tangles_certificate(g: &Graph, spec: &FamilySpec, limit: usize) -> Result<Certificate> {
    let k = spec.k();
    let (sys, ts) = find_f_tangles(g, k, spec, limit)?;
    let payload =
        TanglesPayload { tangles: ts.iter().map(|t| t.separations(&sys)).collect(), complete: ts.len() < limit };
    Certificate::new(CertKind::Tangles, params_for(g, Some(k), Some(spec)), &payload)
}

pub fn duality_certificate(g: &Graph, spec: &FamilySpec) -> Result<Certificate> {
    let k = spec.k();
    let (_, out) = duality(g, k, spec)?;
    let payload = match out.verdict {
        Verdict::Tangle(t) => {
            DualityPayload { verdict: VerdictKind::Tangle, tangle: Some(t), stree: None, hang_set: out.hang_set }
        }
        Verdict::STree(st) => {
            DualityPayload { verdict: VerdictKind::Stree, tangle: None, stree: Some(st), hang_set: out.hang_set }
        }
    };
    Certificate::new(CertKind::Duality, params_for(g, Some(k), Some(spec)), &payload)
}

pub fn treewidth_certificate(g: &Graph) -> Result<Certificate> {
    let t = exact_treewidth(g)?;
    Certificate::new(CertKind::Td, params_for(g, None, None), &TdPayload { td: t.td, width: t.tw, exact: true })
}

/// A bramble of order at least `k`, from a `U_k`-tangle or by exhaustive search.
pub fn bramble_certificate(g: &Graph, k: usize, exhaustive: bool) -> Result<Certificate> {
    let b = if exhaustive {
        let (order, b) = max_bramble_order(g)?;
        if order < k {
            return Err(Error::Refusal(format!("maximum bramble order is {order}, below {k}")));
        }
        b
    } else {
        let spec = FamilySpec::Uk { k };
        let (sys, ts) = find_f_tangles(g, k, &spec, 1)?;
        let t = ts.first().ok_or_else(|| Error::Refusal(format!("no tangle avoiding U_{k}")))?;
        tangle_to_bramble(&sys, t)?
    };
    Certificate::new(CertKind::Bramble, params_for(g, Some(k), None), &bramble_payload(g, &b))
}

/// Runs a report and binds it to `g`, or to the graph the report builds itself.
pub fn report_certificate(g: Option<&Graph>, args: ReportArgs) -> Result<Certificate> {
    let result = run_report(g, &args)?;
    let own = report_graph(&args)?;
    let g = own.as_ref().or(g).ok_or_else(|| Error::Argument("this report needs a graph".into()))?;
    let (k, family) = match &args {
        ReportArgs::Theorem4 { k } => (Some(*k), None),
        ReportArgs::Limits { .. } => (None, None),
        ReportArgs::RefineTree { k, family } | ReportArgs::RefineStar { k, family, .. } => (Some(*k), Some(family)),
    };
    let params = params_for(g, k, family);
    Certificate::new(CertKind::Report, params, &ReportPayload { args, result })
}

/// Recomputes the result of a report from its arguments.
pub fn run_report(g: Option<&Graph>, args: &ReportArgs) -> Result<Value> {
    let need = || g.ok_or_else(|| Error::Argument("this report needs a graph".into()));
    match args {
        ReportArgs::Theorem4 { k } => to_value(&theorem4_report(need()?, *k)?),
        ReportArgs::Limits { family, n, k } => to_value(&limits_report(*family, *n, *k)?),
        ReportArgs::RefineTree { k, family } => {
            let g = need()?;
            let td = build_tree_of_tangles(g, *k, family)?;
            to_value(&refine_tree_of_tangles(g, *k, family, &td)?)
        }
        ReportArgs::RefineStar { k, family, sigma, budget } => {
            let opts = RefineOptions { budget: *budget, ..RefineOptions::default() };
            to_value(&refine_inessential_star(need()?, *k, family, sigma, opts)?)
        }
    }
}

/// The graph a report certificate is bound to, if the report builds its own.
pub fn report_graph(args: &ReportArgs) -> Result<Option<Graph>> {
    match args {
        ReportArgs::Limits { family, n, .. } => Ok(Some(crate::limits::truncate(*family, *n)?.graph)),
        _ => Ok(None),
    }
}

fn fail(clause: &str) -> Error {
    Error::Verify(clause.to_string())
}

fn ensure(ok: bool, clause: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(fail(clause))
    }
}

fn system(g: &Graph, c: &Certificate) -> Result<(SeparationSystem, FamilySpec)> {
    let k = c.params.k.ok_or_else(|| fail("params.k missing"))?;
    let spec = c.params.family.clone().ok_or_else(|| fail("params.family missing"))?;
    ensure(spec.k() == k, "family order differs from params.k")?;
    Ok((SeparationSystem::enumerate(g, k)?, spec))
}

fn verify_tangle(sys: &SeparationSystem, spec: &FamilySpec, seps: &[Separation]) -> Result<OrientationFlags> {
    let o = Orientation::from_separations(sys, seps).map_err(|e| Error::Verify(format!("not an orientation: {e}")))?;
    ensure(o.separations(sys).len() == seps.len(), "orientation has repeated separations")?;
    let flags = check_orientation(sys, &o, spec)?;
    ensure(flags.consistent, "orientation is inconsistent")?;
    ensure(flags.avoids_family, "orientation does not avoid the family")?;
    Ok(flags)
}

fn verify_stree(g: &Graph, sys: &SeparationSystem, spec: &FamilySpec, p: &STreePayload) -> Result<()> {
    let rep = p.stree.validate(g, Some((sys, spec)));
    ensure(rep.valid, "S-tree is not a valid tree of separations")?;
    ensure(rep.over_family == Some(true), "S-tree is not over the family")?;
    ensure(rep.leaf_separations == p.leaf_separations, "leaf separations differ")?;
    ensure(rep.max_degree == p.max_degree, "maximum degree differs")
}

/// Re-checks a certificate against `g` without any producer state.
pub fn verify(c: &Certificate, g: Option<&Graph>) -> Result<()> {
    ensure(c.version == CERT_VERSION, "unsupported version")?;
    ensure(digest_of(c.version, c.kind, &c.params, &c.payload)? == c.digest, "digest mismatch")?;
    let own;
    let g = match (g, c.kind) {
        (Some(g), _) => g,
        (None, CertKind::Report) => {
            let p: ReportPayload = c.decode()?;
            own = report_graph(&p.args)?.ok_or_else(|| fail("report needs a graph"))?;
            &own
        }
        (None, _) => return Err(Error::Argument("verification needs the graph".into())),
    };
    ensure(g.hash() == c.params.graph_hash, "graph hash mismatch")?;
    match c.kind {
        CertKind::Separations => {
            let p: SeparationsPayload = c.decode()?;
            let k = c.params.k.ok_or_else(|| fail("params.k missing"))?;
            let sys = SeparationSystem::enumerate(g, k)?;
            ensure(p.separations == sys.members(), "separation list differs from S_k")
        }
        CertKind::Tangle => {
            let p: TanglePayload = c.decode()?;
            let (sys, spec) = system(g, c)?;
            let flags = verify_tangle(&sys, &spec, &p.separations)?;
            ensure(flags == p.flags, "flags differ")
        }
        CertKind::Tangles => {
            let p: TanglesPayload = c.decode()?;
            let (sys, spec) = system(g, c)?;
            let mut seen = Vec::new();
            for t in &p.tangles {
                verify_tangle(&sys, &spec, t)?;
                let o = Orientation::from_separations(&sys, t)?;
                ensure(!seen.contains(&o), "repeated tangle")?;
                seen.push(o);
            }
            if p.complete {
                let (_, all) = find_f_tangles(g, sys.k(), &spec, p.tangles.len() + 1)?;
                ensure(all.len() == p.tangles.len(), "tangle list is not complete")?;
            }
            Ok(())
        }
        CertKind::Stree => {
            let p: STreePayload = c.decode()?;
            let (sys, spec) = system(g, c)?;
            verify_stree(g, &sys, &spec, &p)
        }
        CertKind::Td => {
            let p: TdPayload = c.decode()?;
            let rep = p.td.validate(g, None);
            ensure(rep.valid, "not a tree-decomposition")?;
            ensure(rep.width == p.width, "width differs")?;
            if p.exact {
                ensure(exact_treewidth(g)?.tw == p.width, "width is not the treewidth")?;
            }
            Ok(())
        }
        CertKind::Bramble => {
            let p: BramblePayload = c.decode()?;
            let rep = bramble_order(g, &p.bramble);
            ensure(rep.valid, "not a bramble")?;
            ensure(p.bramble.elements.iter().all(|x| x.meets(p.cover)), "cover misses an element")?;
            ensure(p.cover.len() == p.order, "cover size differs from order")?;
            ensure(min_cover(&p.bramble.elements).len() == p.order, "order is not the minimum cover size")?;
            if let Some(k) = c.params.k {
                ensure(p.order >= k, "order is below k")?;
            }
            Ok(())
        }
        CertKind::Duality => {
            let p: DualityPayload = c.decode()?;
            let (sys, spec) = system(g, c)?;
            ensure(p.hang_set.iter().all(|&s| sys.contains(s)), "hang set leaves S_k")?;
            match (p.verdict, &p.tangle, &p.stree) {
                (VerdictKind::Tangle, Some(t), None) => verify_tangle(&sys, &spec, t).map(|_| ()),
                (VerdictKind::Stree, None, Some(st)) => {
                    let rep = st.validate(g, Some((&sys, &spec)));
                    ensure(rep.valid && rep.over_family == Some(true), "S-tree is not over the family")
                }
                _ => Err(fail("verdict does not match its witness")),
            }
        }
        CertKind::Report => {
            let p: ReportPayload = c.decode()?;
            let result = run_report(Some(g), &p.args)?;
            ensure(result == p.result, "recomputed report differs")
        }
    }
}
