//! Decision procedure for local distinguishability by projective
//! measurements that never disturb a state.
//!
//! Starting from the full set, the first party (in scan order) whose overlap
//! graph on the current subset is disconnected measures the projectors onto
//! its component spans. Each outcome leaves one block, which is handled
//! recursively. A subset of two or more states on which every party's graph
//! is connected admits no such measurement and becomes a stuck certificate.
//! For a complete basis every block is again a complete basis of the
//! surviving subspace, so a stuck subset proves indistinguishability; for an
//! incomplete set the answer is only "unknown", since general measurements
//! may still succeed.

use std::fmt::Write as _;

use serde_json::Value;

use crate::canon::Json;
use crate::ensemble::{validate, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{self, complex, projector, CMatrix, LocalVector};
use crate::relativity::{overlap_graph, partition_at, OverlapGraph, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The ensemble is a complete product basis; stuck means indistinguishable.
    Complete,
    /// Pairwise orthogonal only; stuck means unknown.
    Incomplete,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Mode::Complete),
            "incomplete" => Ok(Mode::Incomplete),
            other => Err(Error::InvalidMode(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub block: Vec<String>,
    /// Orthonormal basis of the outcome's projector range.
    pub basis: Vec<LocalVector>,
}

/// A projective measurement at one party with at least two outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStep {
    pub party: usize,
    pub outcomes: Vec<Outcome>,
}

impl MeasurementStep {
    fn from_partition(e: &Ensemble, partition: Partition) -> Self {
        let outcomes = partition
            .blocks
            .iter()
            .zip(partition.spans)
            .map(|(block, basis)| Outcome { block: block.iter().map(|&i| e.label(i).to_owned()).collect(), basis })
            .collect();
        MeasurementStep { party: partition.party, outcomes }
    }

    /// Projector `Σ_j |b_j⟩⟨b_j|` of each outcome.
    pub fn projectors(&self, dim: usize) -> Vec<CMatrix> {
        self.outcomes.iter().map(|o| projector(&o.basis, dim)).collect()
    }

    /// Largest entry of `Σ_i P_i − P_span`, where `P_span` projects onto the
    /// span of the party vectors of `scope`.
    pub fn completeness_defect(&self, e: &Ensemble, scope: &[usize], tol: f64) -> Result<f64> {
        let dim = e.dims()[self.party];
        let sum = self.projectors(dim).into_iter().fold(CMatrix::zeros(dim, dim), |acc, p| acc + p);
        let vs: Vec<LocalVector> = scope.iter().map(|&i| e.local(i, self.party).clone()).collect();
        let span = linalg::gram_schmidt(&vs, tol)?;
        Ok(linalg::max_abs(&(sum - projector(&span, dim))))
    }

    fn to_json_fields(&self) -> Vec<(String, Json)> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| Json::obj([("block", Json::strs(&o.block)), ("basis", Json::vectors(&o.basis))]))
            .collect();
        vec![("party".into(), Json::Int(self.party as i64)), ("outcomes".into(), Json::Arr(outcomes))]
    }
}

/// A protocol that ends with every state identified.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolTree {
    Leaf(String),
    Node { step: MeasurementStep, children: Vec<ProtocolTree> },
}

impl ProtocolTree {
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        match self {
            ProtocolTree::Leaf(l) => out.push(l.clone()),
            ProtocolTree::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Number of measurement rounds on the longest branch.
    pub fn depth(&self) -> usize {
        match self {
            ProtocolTree::Leaf(_) => 0,
            ProtocolTree::Node { children, .. } => 1 + children.iter().map(ProtocolTree::depth).max().unwrap_or(0),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            ProtocolTree::Leaf(l) => Json::obj([("leaf", Json::str(l))]),
            ProtocolTree::Node { step, children } => {
                let mut fields = step.to_json_fields();
                fields.push(("children".into(), Json::Arr(children.iter().map(ProtocolTree::to_json).collect())));
                Json::Obj(fields)
            }
        }
    }
}

/// A subset of at least two states on which every party's overlap graph is
/// connected, with those graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct StuckCertificate {
    pub subset: Vec<String>,
    pub graphs: Vec<OverlapGraph>,
}

impl StuckCertificate {
    pub fn to_json(&self) -> Json {
        Json::obj([
            ("subset", Json::strs(&self.subset)),
            ("graphs", Json::Arr(self.graphs.iter().map(OverlapGraph::to_json).collect())),
        ])
    }
}

/// The full exploration: like a [`ProtocolTree`] but with stuck subsets as
/// possible leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum SearchTree {
    Leaf(String),
    Stuck(StuckCertificate),
    Split { step: MeasurementStep, children: Vec<SearchTree> },
}

impl SearchTree {
    /// First stuck certificate in depth-first order.
    pub fn first_stuck(&self) -> Option<&StuckCertificate> {
        match self {
            SearchTree::Leaf(_) => None,
            SearchTree::Stuck(c) => Some(c),
            SearchTree::Split { children, .. } => children.iter().find_map(SearchTree::first_stuck),
        }
    }

    pub fn stuck_count(&self) -> usize {
        match self {
            SearchTree::Leaf(_) => 0,
            SearchTree::Stuck(_) => 1,
            SearchTree::Split { children, .. } => children.iter().map(SearchTree::stuck_count).sum(),
        }
    }

    fn into_protocol(self) -> Option<ProtocolTree> {
        match self {
            SearchTree::Leaf(l) => Some(ProtocolTree::Leaf(l)),
            SearchTree::Stuck(_) => None,
            SearchTree::Split { step, children } => Some(ProtocolTree::Node {
                step,
                children: children.into_iter().map(SearchTree::into_protocol).collect::<Option<Vec<_>>>()?,
            }),
        }
    }

    /// Terminal subsets (identified singletons and stuck sets), each sorted,
    /// in sorted order. Independent of party scan order and state order.
    pub fn terminals(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        self.collect_terminals(&mut out);
        for t in &mut out {
            t.sort();
        }
        out.sort();
        out
    }

    fn collect_terminals(&self, out: &mut Vec<Vec<String>>) {
        match self {
            SearchTree::Leaf(l) => out.push(vec![l.clone()]),
            SearchTree::Stuck(c) => out.push(c.subset.clone()),
            SearchTree::Split { children, .. } => children.iter().for_each(|c| c.collect_terminals(out)),
        }
    }

    /// Parties and blocks without the bases, for comparing trees whose
    /// states differ by local unitaries.
    pub fn shape(&self) -> String {
        match self {
            SearchTree::Leaf(l) => l.clone(),
            SearchTree::Stuck(c) => format!("stuck{{{}}}", c.subset.join(",")),
            SearchTree::Split { step, children } => {
                let parts: Vec<String> = children.iter().map(SearchTree::shape).collect();
                format!("p{}[{}]", step.party, parts.join(" | "))
            }
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            SearchTree::Leaf(l) => Json::obj([("leaf", Json::str(l))]),
            SearchTree::Stuck(c) => Json::obj([("stuck", Json::strs(&c.subset))]),
            SearchTree::Split { step, children } => {
                let mut fields = step.to_json_fields();
                fields.push(("children".into(), Json::Arr(children.iter().map(SearchTree::to_json).collect())));
                Json::Obj(fields)
            }
        }
    }

    /// Indented, one line per node.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        match self {
            SearchTree::Leaf(l) => {
                let _ = writeln!(out, "{pad}leaf {l}");
            }
            SearchTree::Stuck(c) => {
                let _ = writeln!(out, "{pad}stuck {{{}}}", c.subset.join(", "));
                for g in &c.graphs {
                    let _ = writeln!(out, "{pad}  party {} connected, {} edges", g.party, g.edge_count());
                }
            }
            SearchTree::Split { step, children } => {
                let _ = writeln!(out, "{pad}measure party {} ({} outcomes)", step.party, step.outcomes.len());
                for (k, (o, child)) in step.outcomes.iter().zip(children).enumerate() {
                    let _ = writeln!(out, "{pad}  outcome {k}: rank {} {{{}}}", o.basis.len(), o.block.join(", "));
                    child.render_into(out, indent + 2);
                }
            }
        }
    }
}

impl From<&ProtocolTree> for SearchTree {
    fn from(t: &ProtocolTree) -> Self {
        match t {
            ProtocolTree::Leaf(l) => SearchTree::Leaf(l.clone()),
            ProtocolTree::Node { step, children } => {
                SearchTree::Split { step: step.clone(), children: children.iter().map(SearchTree::from).collect() }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Distinguishable,
    Indistinguishable,
    Unknown,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Distinguishable => "distinguishable",
            VerdictKind::Indistinguishable => "indistinguishable",
            VerdictKind::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Distinguishable(ProtocolTree),
    /// Complete mode only.
    Indistinguishable {
        certificate: StuckCertificate,
        trace: Option<SearchTree>,
    },
    /// Incomplete mode only.
    Unknown {
        certificate: StuckCertificate,
        trace: Option<SearchTree>,
    },
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Distinguishable(_) => VerdictKind::Distinguishable,
            Verdict::Indistinguishable { .. } => VerdictKind::Indistinguishable,
            Verdict::Unknown { .. } => VerdictKind::Unknown,
        }
    }

    pub fn protocol(&self) -> Option<&ProtocolTree> {
        match self {
            Verdict::Distinguishable(t) => Some(t),
            _ => None,
        }
    }

    pub fn certificate(&self) -> Option<&StuckCertificate> {
        match self {
            Verdict::Distinguishable(_) => None,
            Verdict::Indistinguishable { certificate, .. } | Verdict::Unknown { certificate, .. } => Some(certificate),
        }
    }

    /// The exploration tree: the protocol itself, or the recorded trace.
    pub fn trace(&self) -> Option<SearchTree> {
        match self {
            Verdict::Distinguishable(t) => Some(SearchTree::from(t)),
            Verdict::Indistinguishable { trace, .. } | Verdict::Unknown { trace, .. } => trace.clone(),
        }
    }

    pub fn to_json(&self, tol: f64) -> Json {
        let mut fields =
            vec![("verdict".to_owned(), Json::str(self.kind().as_str())), ("tol".to_owned(), Json::Num(tol))];
        match self {
            Verdict::Distinguishable(t) => fields.push(("protocol".into(), t.to_json())),
            Verdict::Indistinguishable { certificate, trace } | Verdict::Unknown { certificate, trace } => {
                fields.push(("certificate".into(), certificate.to_json()));
                if let Some(t) = trace {
                    fields.push(("trace".into(), t.to_json()));
                }
            }
        }
        Json::Obj(fields)
    }
}

/// Stuck certificate for `subset`, with every party's graph.
pub fn stuck_certificate(e: &Ensemble, subset: &[usize], tol: f64) -> Result<StuckCertificate> {
    let graphs = (0..e.parties()).map(|p| overlap_graph(e, subset, p, tol)).collect::<Result<Vec<_>>>()?;
    let subset = graphs[0].labels.clone();
    Ok(StuckCertificate { subset, graphs })
}

fn finest_partition(e: &Ensemble, subset: &[usize], order: &[usize], tol: f64) -> Result<Option<Partition>> {
    for &party in order {
        let p = partition_at(e, subset, party, tol)?;
        if p.len() >= 2 {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Component measurement at the lowest-index party whose overlap graph on
/// `subset` is disconnected, if any.
pub fn finest_step(e: &Ensemble, subset: &[usize], tol: f64) -> Result<Option<MeasurementStep>> {
    let order: Vec<usize> = (0..e.parties()).collect();
    Ok(finest_partition(e, subset, &order, tol)?.map(|p| MeasurementStep::from_partition(e, p)))
}

fn explore(e: &Ensemble, subset: &[usize], order: &[usize], tol: f64) -> Result<SearchTree> {
    if subset.len() == 1 {
        return Ok(SearchTree::Leaf(e.label(subset[0]).to_owned()));
    }
    match finest_partition(e, subset, order, tol)? {
        None => Ok(SearchTree::Stuck(stuck_certificate(e, subset, tol)?)),
        Some(partition) => {
            let children = partition.blocks.iter().map(|b| explore(e, b, order, tol)).collect::<Result<Vec<_>>>()?;
            Ok(SearchTree::Split { step: MeasurementStep::from_partition(e, partition), children })
        }
    }
}

/// Checks the ensemble against the requirements of `mode`.
pub fn check_mode(e: &Ensemble, mode: Mode, tol: f64) -> Result<()> {
    if e.is_empty() {
        return Err(Error::InvalidMode("ensemble has no states".into()));
    }
    let report = validate(e, tol);
    match mode {
        Mode::Complete if !e.complete() => {
            Err(Error::InvalidMode(format!("{:?} does not claim completeness; use incomplete mode", e.name())))
        }
        Mode::Complete if !report.passes() => {
            Err(Error::InvalidMode(format!("{:?} fails validation as a complete product basis", e.name())))
        }
        Mode::Incomplete if !report.pairwise_orthogonal => Err(Error::InvalidMode(format!(
            "{:?} is not pairwise orthogonal ({} offending pairs)",
            e.name(),
            report.offending_pairs.len()
        ))),
        _ => Ok(()),
    }
}

pub fn decide(e: &Ensemble, mode: Mode, tol: f64) -> Result<Verdict> {
    let order: Vec<usize> = (0..e.parties()).collect();
    decide_with_order(e, mode, tol, &order)
}

/// [`decide`] with an explicit party scan order.
pub fn decide_with_order(e: &Ensemble, mode: Mode, tol: f64, party_order: &[usize]) -> Result<Verdict> {
    check_mode(e, mode, tol)?;
    let mut sorted = party_order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..e.parties()).collect::<Vec<_>>() {
        return Err(Error::InvalidMode(format!("party order {party_order:?} is not a permutation")));
    }
    let tree = explore(e, &e.all_indices(), party_order, tol)?;
    Ok(verdict_from_search(tree, mode))
}

pub(crate) fn verdict_from_search(tree: SearchTree, mode: Mode) -> Verdict {
    match tree.first_stuck().cloned() {
        None => Verdict::Distinguishable(tree.into_protocol().expect("no stuck leaves")),
        Some(certificate) => match mode {
            Mode::Complete => Verdict::Indistinguishable { certificate, trace: Some(tree) },
            Mode::Incomplete => Verdict::Unknown { certificate, trace: Some(tree) },
        },
    }
}

/// Canonical protocol JSON.
pub fn emit_protocol(t: &ProtocolTree) -> String {
    t.to_json().to_string()
}

pub fn emit_verdict(v: &Verdict, tol: f64) -> String {
    v.to_json(tol).to_string()
}

pub fn parse_protocol(text: &str) -> Result<ProtocolTree> {
    let v: Value = serde_json::from_str(text).map_err(linalg::json_error)?;
    protocol_from_value(&v)
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn label_list(v: &Value) -> Result<Vec<String>> {
    v.as_array()
        .ok_or_else(|| schema("block must be an array of labels"))?
        .iter()
        .map(|l| l.as_str().map(str::to_owned).ok_or_else(|| schema("labels must be strings")))
        .collect()
}

pub(crate) fn vector_from_value(v: &Value) -> Result<Vec<linalg::C64>> {
    v.as_array()
        .ok_or_else(|| schema("vector must be an array of [re, im] pairs"))?
        .iter()
        .map(|z| match z.as_array().map(Vec::as_slice) {
            Some([re, im]) => complex(
                re.as_f64().ok_or_else(|| schema("real part must be a number"))?,
                im.as_f64().ok_or_else(|| schema("imaginary part must be a number"))?,
            ),
            _ => Err(schema("amplitude must be [re, im]")),
        })
        .collect()
}

fn unit_vector(v: &Value) -> Result<LocalVector> {
    let entries = vector_from_value(v)?;
    let norm = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(schema(format!("basis vector has norm {norm}, expected 1")));
    }
    Ok(LocalVector::from_unit(entries))
}

pub(crate) fn protocol_from_value(v: &Value) -> Result<ProtocolTree> {
    let obj = v.as_object().ok_or_else(|| schema("protocol node must be an object"))?;
    if let Some(l) = obj.get("leaf") {
        return Ok(ProtocolTree::Leaf(l.as_str().ok_or_else(|| schema("leaf label must be a string"))?.to_owned()));
    }
    let party =
        obj.get("party").and_then(Value::as_u64).ok_or_else(|| schema("node needs a non-negative integer \"party\""))?
            as usize;
    let outcomes = obj
        .get("outcomes")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("node needs an \"outcomes\" array"))?
        .iter()
        .map(|o| {
            let block = label_list(o.get("block").ok_or_else(|| schema("outcome needs \"block\""))?)?;
            let basis = o
                .get("basis")
                .and_then(Value::as_array)
                .ok_or_else(|| schema("outcome needs a \"basis\" array"))?
                .iter()
                .map(unit_vector)
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome { block, basis })
        })
        .collect::<Result<Vec<_>>>()?;
    let children = obj
        .get("children")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("node needs a \"children\" array"))?
        .iter()
        .map(protocol_from_value)
        .collect::<Result<Vec<_>>>()?;
    if outcomes.len() < 2 {
        return Err(schema("a measurement step needs at least two outcomes"));
    }
    if outcomes.len() != children.len() {
        return Err(schema(format!("{} outcomes but {} children", outcomes.len(), children.len())));
    }
    for (o, c) in outcomes.iter().zip(&children) {
        let mut want = o.block.clone();
        let mut got = c.leaves();
        want.sort();
        got.sort();
        if want != got {
            return Err(schema(format!("child labels {got:?} do not match block {want:?}")));
        }
    }
    Ok(ProtocolTree::Node { step: MeasurementStep { party, outcomes }, children })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::catalog;
    use crate::linalg::DEFAULT_TOL as TOL;

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    #[test]
    fn finest_step_examples() {
        let b = catalog("bennett9").unwrap();
        assert_eq!(finest_step(&b, &b.all_indices(), TOL).unwrap(), None);

        let cube = catalog("cube64").unwrap();
        let step = finest_step(&cube, &cube.all_indices(), TOL).unwrap().unwrap();
        assert_eq!(step.party, 2);
        assert_eq!(step.outcomes.len(), 4);
        assert!(step.outcomes.iter().all(|o| o.block.len() == 16));

        let comp = catalog("comp2x2").unwrap();
        let step = finest_step(&comp, &comp.all_indices(), TOL).unwrap().unwrap();
        assert_eq!(step.party, 0);
        assert_eq!(step.outcomes.len(), 2);
    }

    #[test]
    fn steps_resolve_identity_on_span() {
        for name in ["comp2x2", "cube64"] {
            let e = catalog(name).unwrap();
            let step = finest_step(&e, &e.all_indices(), TOL).unwrap().unwrap();
            assert!(step.completeness_defect(&e, &e.all_indices(), TOL).unwrap() <= 10.0 * TOL);
        }
    }

    #[test]
    fn complete_catalog_verdicts() {
        for name in ["bennett9", "grid16"] {
            let e = catalog(name).unwrap();
            let v = decide(&e, Mode::Complete, TOL).unwrap();
            assert_eq!(v.kind(), VerdictKind::Indistinguishable, "{name}");
            assert_eq!(v.certificate().unwrap().subset.len(), e.len());
        }

        let cube = catalog("cube64").unwrap();
        let v = decide(&cube, Mode::Complete, TOL).unwrap();
        assert_eq!(v.kind(), VerdictKind::Indistinguishable);
        match v.trace().unwrap() {
            SearchTree::Split { step, children } => {
                assert_eq!(step.party, 2);
                assert_eq!(children.len(), 4);
                for c in &children {
                    assert!(matches!(c, SearchTree::Stuck(cert) if cert.subset.len() == 16));
                }
            }
            other => panic!("unexpected trace {other:?}"),
        }

        let comp = catalog("comp2x2").unwrap();
        let v = decide(&comp, Mode::Complete, TOL).unwrap();
        let tree = v.protocol().unwrap();
        assert_eq!(tree.depth(), 2);
        match tree {
            ProtocolTree::Node { step, children } => {
                assert_eq!(step.party, 0);
                for c in children {
                    assert!(matches!(c, ProtocolTree::Node { step, .. } if step.party == 1));
                }
            }
            _ => panic!("expected a node"),
        }
        assert_eq!(sorted(tree.leaves()), vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn certificate_graphs_are_connected() {
        let e = catalog("bennett9").unwrap();
        let v = decide(&e, Mode::Complete, TOL).unwrap();
        let cert = v.certificate().unwrap();
        assert_eq!(cert.graphs.len(), 2);
        assert!(cert.graphs.iter().all(OverlapGraph::is_connected));
    }

    #[test]
    fn bennett_tail_is_distinguishable() {
        let b = catalog("bennett9").unwrap();
        let tail = b.restrict(&b.indices_of(&["Ψ4", "Ψ5", "Ψ6", "Ψ7", "Ψ8", "Ψ9"]).unwrap(), "tail").unwrap();
        let v = decide(&tail, Mode::Incomplete, TOL).unwrap();
        let tree = v.protocol().expect("distinguishable");
        // |3+1⟩ and |3−1⟩ are orthogonal, so Alice separates Ψ6 and Ψ7 from
        // each other in the same round that separates them from {Ψ4, Ψ5}.
        let expected = "p1[p0[p1[Ψ4 | Ψ5] | Ψ6 | Ψ7] | p0[Ψ8 | Ψ9]]";
        assert_eq!(SearchTree::from(tree).shape(), expected);
        // Bob's first projectors: span{|1⟩,|2⟩} and span{|3⟩}.
        if let ProtocolTree::Node { step, .. } = tree {
            assert_eq!(step.outcomes[0].basis.len(), 2);
            assert_eq!(step.outcomes[1].basis.len(), 1);
        }
    }

    #[test]
    fn finkelstein_projective_is_unknown() {
        let e = catalog("finkelstein9").unwrap();
        let v = decide(&e, Mode::Incomplete, TOL).unwrap();
        assert_eq!(v.kind(), VerdictKind::Unknown);
        assert_eq!(v.certificate().unwrap().subset.len(), 9);
        assert!(matches!(decide(&e, Mode::Complete, TOL), Err(Error::InvalidMode(_))));
    }

    #[test]
    fn mode_checks() {
        let b = catalog("bennett9").unwrap();
        let mut states = b.states().to_vec();
        states[0] = crate::ensemble::ProductState::new("Ψ1", vec![LocalVector::basis(3, 0), LocalVector::basis(3, 1)]);
        let broken = Ensemble::new("broken", vec![3, 3], true, states).unwrap();
        assert!(matches!(decide(&broken, Mode::Complete, TOL), Err(Error::InvalidMode(_))));
        assert!(matches!(decide(&broken, Mode::Incomplete, TOL), Err(Error::InvalidMode(_))));
        assert!(matches!(decide_with_order(&b, Mode::Complete, TOL, &[0, 0]), Err(Error::InvalidMode(_))));
    }

    #[test]
    fn protocol_json() {
        assert_eq!(emit_protocol(&ProtocolTree::Leaf("Ψ1".into())), r#"{"leaf":"Ψ1"}"#);
        let comp = catalog("comp2x2").unwrap();
        let tree = decide(&comp, Mode::Complete, TOL).unwrap().protocol().unwrap().clone();
        let text = emit_protocol(&tree);
        assert!(text.starts_with(r#"{"party":0,"outcomes":[{"block":["00","01"],"basis":[[[1.0000000000000000e0,0.0000000000000000e0],[0.0000000000000000e0,0.0000000000000000e0]]]}"#), "{text}");
        let back = parse_protocol(&text).unwrap();
        assert_eq!(back, tree);
        assert_eq!(emit_protocol(&back), text);

        let cube = catalog("cube64").unwrap();
        let v = decide(&cube, Mode::Complete, TOL).unwrap();
        let root = v.trace().unwrap().to_json().to_string();
        assert!(root.starts_with(r#"{"party":2,"outcomes":["#));

        assert!(matches!(parse_protocol(r#"{"party":0,"outcomes":[],"children":[]}"#), Err(Error::Schema(_))));
        assert!(matches!(parse_protocol("[1"), Err(Error::Parse(_))));
    }
}
