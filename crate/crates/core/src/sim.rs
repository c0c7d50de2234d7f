//! Simulation of finite measurement trees with arbitrary local operators.
//!
//! A [`SimNode`] tree applies one local instrument per node and ends in
//! leaves that announce a guess. [`run_protocol`] follows every state down
//! every branch and reports whether each leaf is reached by at most one
//! state and every state's probability mass lands on leaves naming it.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::canon::Json;
use crate::distinguish::{decide, protocol_from_value, Mode, ProtocolTree, Verdict};
use crate::ensemble::{finkelstein_charles_vectors, Ensemble, ProductState};
use crate::error::{Error, Result};
use crate::linalg::{self, normalize, projector, svd_decompose, CMatrix, LocalVector, SvdResult, C64};

/// A (generally non-square) operator acting on one party.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub party: usize,
    pub matrix: CMatrix,
}

/// Measurement operators `{M_i}` on one party.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    pub party: usize,
    pub operators: Vec<LocalOperator>,
}

impl Instrument {
    pub fn new(party: usize, matrices: Vec<CMatrix>) -> Self {
        Self { party, operators: matrices.into_iter().map(|matrix| LocalOperator { party, matrix }).collect() }
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.operators.first().map(|o| o.matrix.ncols())
    }
}

/// Largest entry of `Σ_i M_i†M_i − I`.
pub fn completeness_defect(ins: &Instrument) -> Result<f64> {
    let d = ins.input_dim().ok_or_else(|| Error::Dimension("instrument has no operators".into()))?;
    let mut sum = CMatrix::zeros(d, d);
    for op in &ins.operators {
        if op.party != ins.party {
            return Err(Error::Dimension(format!(
                "operator on party {} inside an instrument on party {}",
                op.party, ins.party
            )));
        }
        if op.matrix.ncols() != d {
            return Err(Error::Dimension(format!("operator has {} columns, expected {d}", op.matrix.ncols())));
        }
        sum += op.matrix.adjoint() * &op.matrix;
    }
    Ok(linalg::max_abs(&(sum - CMatrix::identity(d, d))))
}

/// `Σ_i M_i†M_i = I` within `tol`, entrywise.
pub fn validate_instrument(ins: &Instrument, tol: f64) -> Result<bool> {
    Ok(completeness_defect(ins)? <= tol)
}

/// Applies `op` and renormalizes. Returns `None` for the state when the
/// outcome probability is at most `tol`; the probability is returned either
/// way.
pub fn apply_operator(s: &ProductState, op: &LocalOperator, tol: f64) -> Result<(Option<ProductState>, f64)> {
    let local = s.locals.get(op.party).ok_or_else(|| {
        Error::Dimension(format!("operator on party {} but state has {} parties", op.party, s.locals.len()))
    })?;
    let w = local.apply(&op.matrix)?;
    let prob: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    if prob <= tol {
        return Ok((None, prob));
    }
    let mut out = s.clone();
    out.locals[op.party] = normalize(&w, 0.0)?.phase_normalized(tol);
    Ok((Some(out), prob))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimNode {
    Leaf { announce: Option<String> },
    Measure { instrument: Instrument, children: Vec<SimNode> },
}

impl SimNode {
    pub fn leaf(label: impl Into<String>) -> Self {
        SimNode::Leaf { announce: Some(label.into()) }
    }

    pub fn silent() -> Self {
        SimNode::Leaf { announce: None }
    }

    pub fn to_json(&self) -> Json {
        match self {
            SimNode::Leaf { announce } => Json::obj([("announce", announce.as_ref().map_or(Json::Null, Json::str))]),
            SimNode::Measure { instrument, children } => Json::obj([
                ("party", Json::Int(instrument.party as i64)),
                ("operators", Json::Arr(instrument.operators.iter().map(|o| linalg::matrix_json(&o.matrix)).collect())),
                ("children", Json::Arr(children.iter().map(SimNode::to_json).collect())),
            ]),
        }
    }
}

pub fn emit_sim_protocol(root: &SimNode) -> String {
    root.to_json().to_string()
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn sim_from_value(v: &Value) -> Result<SimNode> {
    let obj = v.as_object().ok_or_else(|| schema("protocol node must be an object"))?;
    if let Some(a) = obj.get("announce") {
        return match a {
            Value::Null => Ok(SimNode::silent()),
            Value::String(s) => Ok(SimNode::leaf(s.clone())),
            _ => Err(schema("announce must be a label or null")),
        };
    }
    let party =
        obj.get("party").and_then(Value::as_u64).ok_or_else(|| schema("node needs a non-negative integer \"party\""))?
            as usize;
    let matrices = obj
        .get("operators")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("node needs an \"operators\" array"))?
        .iter()
        .map(linalg::matrix_from_value)
        .collect::<Result<Vec<_>>>()?;
    let children = obj
        .get("children")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("node needs a \"children\" array"))?
        .iter()
        .map(sim_from_value)
        .collect::<Result<Vec<_>>>()?;
    if matrices.len() != children.len() {
        return Err(schema(format!("{} operators but {} children", matrices.len(), children.len())));
    }
    Ok(SimNode::Measure { instrument: Instrument::new(party, matrices), children })
}

pub fn parse_sim_protocol(text: &str) -> Result<SimNode> {
    let v: Value = serde_json::from_str(text).map_err(linalg::json_error)?;
    sim_from_value(&v)
}

/// Any protocol document the simulator accepts.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolFile {
    Sim(SimNode),
    Projective(ProtocolTree),
}

/// Reads a simulator protocol, a projective protocol tree, or a verdict
/// document carrying one.
pub fn parse_protocol_file(text: &str) -> Result<ProtocolFile> {
    let v: Value = serde_json::from_str(text).map_err(linalg::json_error)?;
    let obj = v.as_object().ok_or_else(|| schema("protocol document must be an object"))?;
    if obj.contains_key("verdict") {
        let p = obj.get("protocol").ok_or_else(|| schema("verdict document carries no protocol"))?;
        return Ok(ProtocolFile::Projective(protocol_from_value(p)?));
    }
    if obj.contains_key("leaf") || obj.contains_key("outcomes") {
        return Ok(ProtocolFile::Projective(protocol_from_value(&v)?));
    }
    Ok(ProtocolFile::Sim(sim_from_value(&v)?))
}

/// One branch followed by one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Outcome indices from the root.
    pub path: Vec<usize>,
    pub announce: Option<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateOutcomes {
    pub label: String,
    pub branches: Vec<Branch>,
}

impl StateOutcomes {
    pub fn total(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// Mass on leaves announcing this state.
    pub fn correct(&self) -> f64 {
        self.branches.iter().filter(|b| b.announce.as_deref() == Some(self.label.as_str())).map(|b| b.probability).sum()
    }

    /// Total probability of branches whose path starts with `prefix`.
    pub fn mass_under(&self, prefix: &[usize]) -> f64 {
        self.branches.iter().filter(|b| b.path.starts_with(prefix)).map(|b| b.probability).sum()
    }
}

pub fn path_key(path: &[usize]) -> String {
    if path.is_empty() {
        return "/".into();
    }
    path.iter().map(|k| format!("/{k}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationReport {
    pub tol: f64,
    pub states: Vec<StateOutcomes>,
    pub perfect: bool,
    /// Leaf path → states reaching it with probability above `tol`.
    pub confusion: BTreeMap<String, Vec<String>>,
    /// Branches whose probability is just above the annihilation threshold.
    pub warnings: Vec<String>,
}

impl DiscriminationReport {
    pub fn state(&self, label: &str) -> Option<&StateOutcomes> {
        self.states.iter().find(|s| s.label == label)
    }

    pub fn to_json(&self) -> Json {
        let states = self
            .states
            .iter()
            .map(|s| {
                Json::obj([
                    ("label", Json::str(&s.label)),
                    ("total", Json::Num(s.total())),
                    (
                        "branches",
                        Json::Arr(
                            s.branches
                                .iter()
                                .map(|b| {
                                    Json::obj([
                                        ("path", Json::Arr(b.path.iter().map(|&k| Json::Int(k as i64)).collect())),
                                        ("announce", b.announce.as_ref().map_or(Json::Null, Json::str)),
                                        ("probability", Json::Num(b.probability)),
                                    ])
                                })
                                .collect(),
                        ),
                    ),
                ])
            })
            .collect();
        Json::obj([
            ("perfect", Json::Bool(self.perfect)),
            ("tol", Json::Num(self.tol)),
            ("states", Json::Arr(states)),
            ("confusion", Json::Obj(self.confusion.iter().map(|(k, v)| (k.clone(), Json::strs(v))).collect())),
            ("warnings", Json::strs(&self.warnings)),
        ])
    }
}

fn check_tree(e: &Ensemble, node: &SimNode, tol: f64) -> Result<()> {
    match node {
        SimNode::Leaf { announce: Some(l) } => e.index_of(l).map(|_| ()),
        SimNode::Leaf { announce: None } => Ok(()),
        SimNode::Measure { instrument, children } => {
            if instrument.party >= e.parties() {
                return Err(Error::Instrument(format!(
                    "instrument on party {} but ensemble has {} parties",
                    instrument.party,
                    e.parties()
                )));
            }
            if instrument.operators.len() != children.len() {
                return Err(Error::Instrument("operator and child counts differ".into()));
            }
            let defect = completeness_defect(instrument).map_err(|err| Error::Instrument(err.to_string()))?;
            if defect > tol {
                return Err(Error::Instrument(format!(
                    "instrument on party {} is incomplete: |Σ M†M − I| = {defect:e}",
                    instrument.party
                )));
            }
            children.iter().try_for_each(|c| check_tree(e, c, tol))
        }
    }
}

struct Walk<'a> {
    tol: f64,
    label: &'a str,
    branches: Vec<Branch>,
    warnings: Vec<String>,
}

impl Walk<'_> {
    fn visit(&mut self, node: &SimNode, state: &ProductState, prob: f64, path: &mut Vec<usize>) -> Result<()> {
        match node {
            SimNode::Leaf { announce } => {
                self.branches.push(Branch { path: path.clone(), announce: announce.clone(), probability: prob });
                Ok(())
            }
            SimNode::Measure { instrument, children } => {
                for (k, (op, child)) in instrument.operators.iter().zip(children).enumerate() {
                    let (next, p) = apply_operator(state, op, self.tol)?;
                    path.push(k);
                    if p > self.tol && p <= 100.0 * self.tol {
                        self.warnings.push(format!(
                            "state {} at {}: branch probability {p:e} is close to the annihilation threshold",
                            self.label,
                            path_key(path)
                        ));
                    }
                    if let Some(next) = next {
                        self.visit(child, &next, prob * p, path)?;
                    }
                    path.pop();
                }
                Ok(())
            }
        }
    }
}

/// Evaluates every state on every branch of `root`.
pub fn run_protocol(e: &Ensemble, root: &SimNode, tol: f64) -> Result<DiscriminationReport> {
    check_tree(e, root, tol)?;
    let mut states = Vec::with_capacity(e.len());
    let mut warnings = Vec::new();
    for s in e.states() {
        let mut walk = Walk { tol, label: &s.label, branches: Vec::new(), warnings: Vec::new() };
        walk.visit(root, s, 1.0, &mut Vec::new())?;
        warnings.append(&mut walk.warnings);
        states.push(StateOutcomes { label: s.label.clone(), branches: walk.branches });
    }

    let mut confusion: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for s in &states {
        let mut per_leaf: BTreeMap<String, f64> = BTreeMap::new();
        for b in &s.branches {
            *per_leaf.entry(path_key(&b.path)).or_default() += b.probability;
        }
        for (leaf, mass) in per_leaf {
            if mass > tol {
                confusion.entry(leaf).or_default().push(s.label.clone());
            }
        }
    }
    let perfect = states.iter().all(|s| (s.correct() - 1.0).abs() <= tol) && confusion.values().all(|v| v.len() <= 1);
    Ok(DiscriminationReport { tol, states, perfect, confusion, warnings })
}

/// Singular value form of an operator plus whether it can be part of a
/// physical instrument (every singular value at most one).
#[derive(Debug, Clone)]
pub struct CanonicalOperator {
    pub svd: SvdResult,
    pub physical: bool,
}

impl CanonicalOperator {
    pub fn to_json(&self, original: &CMatrix, tol: f64) -> Json {
        let mut fields = match self.svd.to_json() {
            Json::Obj(f) => f,
            _ => unreachable!("svd json is an object"),
        };
        fields.push(("physical".into(), Json::Bool(self.physical)));
        fields.push(("reconstruction_error".into(), Json::Num(self.svd.reconstruction_error(original))));
        fields.push(("tol".into(), Json::Num(tol)));
        Json::Obj(fields)
    }
}

pub fn canonicalize_operator(op: &LocalOperator, tol: f64) -> CanonicalOperator {
    let svd = svd_decompose(&op.matrix, tol);
    let physical = svd.sigmas.iter().all(|&s| s <= 1.0 + tol);
    CanonicalOperator { svd, physical }
}

fn lift_node(t: &ProtocolTree, e: &Ensemble, tol: f64) -> Result<SimNode> {
    match t {
        ProtocolTree::Leaf(l) => {
            e.index_of(l)?;
            Ok(SimNode::leaf(l.clone()))
        }
        ProtocolTree::Node { step, children } => {
            let d = *e
                .dims()
                .get(step.party)
                .ok_or_else(|| Error::NotFound(format!("party {} in {:?}", step.party, e.name())))?;
            if let Some(v) = step.outcomes.iter().flat_map(|o| &o.basis).find(|v| v.dim() != d) {
                return Err(Error::Dimension(format!("basis vector of dim {} at party of dim {d}", v.dim())));
            }
            let all: Vec<LocalVector> = step.outcomes.iter().flat_map(|o| o.basis.iter().cloned()).collect();
            let defect = linalg::orthonormality_defect(&all);
            if defect > tol {
                return Err(Error::Basis(format!("outcome bases at party {} deviate by {defect:e}", step.party)));
            }
            let mut matrices = step.projectors(d);
            let mut kids = children.iter().map(|c| lift_node(c, e, tol)).collect::<Result<Vec<_>>>()?;
            let used: usize = step.outcomes.iter().map(|o| o.basis.len()).sum();
            if used < d {
                let sum = matrices.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
                matrices.push(CMatrix::identity(d, d) - sum);
                kids.push(SimNode::silent());
            }
            Ok(SimNode::Measure { instrument: Instrument::new(step.party, matrices), children: kids })
        }
    }
}

/// Turns a projective protocol into a simulator tree. Outcome bases become
/// projectors; when they do not span the whole factor a residual projector
/// `I − Σ P` is added whose child announces nothing.
pub fn lift_protocol(t: &ProtocolTree, e: &Ensemble, tol: f64) -> Result<SimNode> {
    lift_node(t, e, tol)
}

/// The states surviving outcome `op`, post-measurement. Party dimension
/// changes to the operator's output dimension.
pub fn post_measurement(e: &Ensemble, op: &LocalOperator, tol: f64, name: impl Into<String>) -> Result<Ensemble> {
    let mut survivors = Vec::new();
    for s in e.states() {
        if let (Some(next), _) = apply_operator(s, op, tol)? {
            survivors.push(next);
        }
    }
    let mut dims = e.dims().to_vec();
    dims[op.party] = op.matrix.nrows();
    Ensemble::new(name, dims, false, survivors)
}

/// A first round given by `instrument`, then on each outcome the projective
/// protocol that [`decide`] finds for the surviving states. Outcomes whose
/// survivors cannot be handled projectively end in a silent leaf, so the
/// simulation reports the failure.
pub fn povm_then_decide(e: &Ensemble, instrument: &Instrument, tol: f64) -> Result<SimNode> {
    if !validate_instrument(instrument, tol)? {
        return Err(Error::Instrument("first-round instrument is incomplete".into()));
    }
    let mut children = Vec::with_capacity(instrument.operators.len());
    for (k, op) in instrument.operators.iter().enumerate() {
        let sub = post_measurement(e, op, tol, format!("{}/outcome{k}", e.name()))?;
        let child = match sub.len() {
            0 => SimNode::silent(),
            1 => SimNode::leaf(sub.label(0)),
            _ => match decide(&sub, Mode::Incomplete, tol) {
                Ok(Verdict::Distinguishable(tree)) => lift_protocol(&tree, &sub, tol)?,
                Ok(_) | Err(Error::InvalidMode(_)) => SimNode::silent(),
                Err(err) => return Err(err),
            },
        };
        children.push(child);
    }
    Ok(SimNode::Measure { instrument: instrument.clone(), children })
}

/// `(−b̄, ā)`: the unit vector orthogonal to `(a, b)` in two dimensions.
fn qubit_complement(v: &LocalVector, tol: f64) -> LocalVector {
    let (a, b) = (v.entries()[0], v.entries()[1]);
    normalize(&[-b.conj(), a.conj()], 0.0).expect("unit input").phase_normalized(tol)
}

/// Charles's three-outcome first round for the nine tripartite states:
/// `√(2/3)|v*⟩⟨v*|` for `v ∈ {x, y, z}` with `⟨v|v*⟩ = 0`.
pub fn finkelstein_instrument(tol: f64) -> Instrument {
    let scale = (2.0f64 / 3.0).sqrt();
    let matrices = finkelstein_charles_vectors()
        .iter()
        .map(|v| projector(&[qubit_complement(v, tol)], 2) * C64::new(scale, 0.0))
        .collect();
    Instrument::new(2, matrices)
}

pub const BUILTIN_PROTOCOLS: [&str; 1] = ["finkelstein-povm"];

/// Built-in protocols, instantiated against `e`.
pub fn builtin_protocol(name: &str, e: &Ensemble, tol: f64) -> Result<SimNode> {
    match name {
        "finkelstein-povm" => {
            if e.dims().get(2) != Some(&2) {
                return Err(Error::Dimension(format!(
                    "finkelstein-povm measures a qubit at party 2; {:?} has dims {:?}",
                    e.name(),
                    e.dims()
                )));
            }
            povm_then_decide(e, &finkelstein_instrument(tol), tol)
        }
        other => {
            Err(Error::NotFound(format!("no built-in protocol {other:?} (known: {})", BUILTIN_PROTOCOLS.join(", "))))
        }
    }
}

/// Largest deviation, over all nodes of `t` and all projectors there, from
/// the rule that a projector keeps an in-scope state with probability one
/// (its own outcome) or annihilates it (any other outcome).
pub fn intactness_deviation(t: &ProtocolTree, e: &Ensemble, tol: f64) -> Result<f64> {
    fn walk(t: &ProtocolTree, e: &Ensemble, tol: f64, worst: &mut f64) -> Result<()> {
        if let ProtocolTree::Node { step, children } = t {
            let d = e.dims()[step.party];
            let scope: Vec<&str> = t_leaves(t);
            for (o, p) in step.outcomes.iter().zip(step.projectors(d)) {
                let op = LocalOperator { party: step.party, matrix: p };
                for label in &scope {
                    let s = &e.states()[e.index_of(label)?];
                    let (_, prob) = apply_operator(s, &op, tol)?;
                    let target = if o.block.iter().any(|b| b == label) { 1.0 } else { 0.0 };
                    *worst = worst.max((prob - target).abs());
                }
            }
            for c in children {
                walk(c, e, tol, worst)?;
            }
        }
        Ok(())
    }
    fn t_leaves(t: &ProtocolTree) -> Vec<&str> {
        match t {
            ProtocolTree::Leaf(l) => vec![l.as_str()],
            ProtocolTree::Node { children, .. } => children.iter().flat_map(t_leaves).collect(),
        }
    }
    let mut worst = 0.0;
    walk(t, e, tol, &mut worst)?;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::catalog;
    use crate::linalg::DEFAULT_TOL as TOL;
    use approx::assert_abs_diff_eq;

    fn basis_projector(d: usize, k: usize) -> CMatrix {
        projector(&[LocalVector::basis(d, k)], d)
    }

    #[test]
    fn instrument_validation() {
        let ins = finkelstein_instrument(TOL);
        assert!(validate_instrument(&ins, TOL).unwrap());
        assert!(completeness_defect(&ins).unwrap() < 1e-15);

        let proj = Instrument::new(0, vec![basis_projector(2, 0), basis_projector(2, 1)]);
        assert!(validate_instrument(&proj, TOL).unwrap());
        let half = Instrument::new(0, vec![basis_projector(2, 0)]);
        assert!(!validate_instrument(&half, TOL).unwrap());
        let mixed = Instrument::new(0, vec![basis_projector(2, 0), basis_projector(3, 1)]);
        assert!(matches!(validate_instrument(&mixed, TOL), Err(Error::Dimension(_))));
    }

    #[test]
    fn complements_match_hand_values() {
        let ins = finkelstein_instrument(TOL);
        let r3 = 3f64.sqrt();
        let s = 2.0 / 3.0;
        // x* = |2⟩, y* = (√3|1⟩ − |2⟩)/2, z* = (√3|1⟩ + |2⟩)/2.
        let expected = [
            [[0.0, 0.0], [0.0, s]],
            [[s * 0.75, -s * r3 / 4.0], [-s * r3 / 4.0, s * 0.25]],
            [[s * 0.75, s * r3 / 4.0], [s * r3 / 4.0, s * 0.25]],
        ];
        for (op, want) in ins.operators.iter().zip(expected) {
            let mdm = op.matrix.adjoint() * &op.matrix;
            for r in 0..2 {
                for c in 0..2 {
                    assert_abs_diff_eq!(mdm[(r, c)].re, want[r][c], epsilon = 1e-12);
                    assert_abs_diff_eq!(mdm[(r, c)].im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn apply_operator_examples() {
        let e = catalog("finkelstein9").unwrap();
        let ins = finkelstein_instrument(TOL);
        let psi1 = &e.states()[0];
        let (s, p) = apply_operator(psi1, &ins.operators[0], TOL).unwrap();
        assert!(s.is_none());
        assert!(p < 1e-30);

        let (s, p) = apply_operator(psi1, &ins.operators[1], TOL).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        let y_star = normalize(&[C64::new(3f64.sqrt(), 0.0), C64::new(-1.0, 0.0)], 0.0).unwrap();
        assert!(s.unwrap().locals[2].approx_eq(&y_star, 1e-12));

        let comp = catalog("comp2x2").unwrap();
        let op = LocalOperator { party: 0, matrix: basis_projector(2, 0) };
        let (s, p) = apply_operator(&comp.states()[0], &op, TOL).unwrap();
        assert_abs_diff_eq!(p, 1.0);
        assert_eq!(s.unwrap(), comp.states()[0]);
    }

    #[test]
    fn canonical_forms() {
        let id = canonicalize_operator(&LocalOperator { party: 0, matrix: CMatrix::identity(3, 3) }, TOL);
        assert!(id.physical);
        assert!(id.svd.sigmas.iter().all(|&s| (s - 1.0).abs() < 1e-12));

        let two = canonicalize_operator(
            &LocalOperator { party: 0, matrix: CMatrix::identity(2, 2) * C64::new(2.0, 0.0) },
            TOL,
        );
        assert!(!two.physical);

        let ins = finkelstein_instrument(TOL);
        let c = canonicalize_operator(&ins.operators[1], TOL);
        assert!(c.physical);
        assert_eq!(c.svd.rank, 1);
        assert_abs_diff_eq!(c.svd.sigmas[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert!(c.svd.reconstruction_error(&ins.operators[1].matrix) <= 10.0 * TOL);
    }

    #[test]
    fn computational_basis_round_trip() {
        let e = catalog("comp2x2").unwrap();
        let tree = decide(&e, Mode::Complete, TOL).unwrap().protocol().unwrap().clone();
        let sim = lift_protocol(&tree, &e, TOL).unwrap();
        let report = run_protocol(&e, &sim, TOL).unwrap();
        assert!(report.perfect);
        for s in &report.states {
            assert_eq!(s.branches.len(), 1);
            assert_eq!(s.branches[0].probability, 1.0);
        }
    }

    #[test]
    fn trivial_protocol_confuses_everything() {
        let e = catalog("bennett9").unwrap();
        let report = run_protocol(&e, &SimNode::silent(), TOL).unwrap();
        assert!(!report.perfect);
        assert_eq!(report.confusion.len(), 1);
        assert_eq!(report.confusion["/"].len(), 9);
    }

    #[test]
    fn cube_root_lifts_without_residual() {
        let e = catalog("cube64").unwrap();
        let step = crate::distinguish::finest_step(&e, &e.all_indices(), TOL).unwrap().unwrap();
        let children = step.outcomes.iter().map(|o| ProtocolTree::Leaf(o.block[0].clone())).collect();
        let tree = ProtocolTree::Node { step, children };
        match lift_protocol(&tree, &e, TOL).unwrap() {
            SimNode::Measure { instrument, children } => {
                assert_eq!(instrument.party, 2);
                assert_eq!(children.len(), 4);
                for (k, op) in instrument.operators.iter().enumerate() {
                    assert!(linalg::max_abs(&(&op.matrix - basis_projector(4, k))) < 1e-15);
                }
            }
            _ => panic!("expected a measurement"),
        }
    }

    #[test]
    fn residual_projector_is_added() {
        let b = catalog("bennett9").unwrap();
        let tail = b.restrict(&b.indices_of(&["Ψ4", "Ψ5", "Ψ6", "Ψ7", "Ψ8", "Ψ9"]).unwrap(), "tail").unwrap();
        let tree = decide(&tail, Mode::Incomplete, TOL).unwrap().protocol().unwrap().clone();
        let sim = lift_protocol(&tree, &tail, TOL).unwrap();
        let SimNode::Measure { instrument, children } = &sim else { panic!("expected a measurement") };
        assert_eq!(instrument.party, 1);
        assert_eq!(instrument.operators.len(), 2);
        assert!(validate_instrument(instrument, TOL).unwrap());
        // The {Ψ4..Ψ7} branch measures Alice on span{|2⟩, |1⟩, |3⟩} fully; deeper
        // nodes on two-dimensional spans need a residual outcome.
        let SimNode::Measure { instrument: inner, children: inner_kids } = &children[0] else { panic!() };
        assert!(validate_instrument(inner, TOL).unwrap());
        assert!(inner_kids.len() >= 2);
        assert!(run_protocol(&tail, &sim, TOL).unwrap().perfect);
    }

    #[test]
    fn finkelstein_builtin_is_perfect() {
        let e = catalog("finkelstein9").unwrap();
        let root = builtin_protocol("finkelstein-povm", &e, TOL).unwrap();
        let report = run_protocol(&e, &root, TOL).unwrap();
        assert!(report.perfect, "{:?}", report.confusion);
        let psi1 = report.state("Ψ1").unwrap();
        assert_abs_diff_eq!(psi1.mass_under(&[0]), 0.0);
        assert_abs_diff_eq!(psi1.mass_under(&[1]), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(psi1.mass_under(&[2]), 0.5, epsilon = 1e-12);
        assert!(matches!(
            builtin_protocol("finkelstein-povm", &catalog("bennett9").unwrap(), TOL),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(builtin_protocol("nope", &e, TOL), Err(Error::NotFound(_))));
    }

    #[test]
    fn incomplete_instrument_is_rejected() {
        let e = catalog("comp2x2").unwrap();
        let root = SimNode::Measure {
            instrument: Instrument::new(0, vec![basis_projector(2, 0)]),
            children: vec![SimNode::leaf("00")],
        };
        assert!(matches!(run_protocol(&e, &root, TOL), Err(Error::Instrument(_))));
        let bad_label = SimNode::leaf("zz");
        assert!(matches!(run_protocol(&e, &bad_label, TOL), Err(Error::NotFound(_))));
    }

    #[test]
    fn protocol_files() {
        let e = catalog("finkelstein9").unwrap();
        let root = builtin_protocol("finkelstein-povm", &e, TOL).unwrap();
        let text = emit_sim_protocol(&root);
        let ProtocolFile::Sim(back) = parse_protocol_file(&text).unwrap() else { panic!("expected sim") };
        assert_eq!(emit_sim_protocol(&back), text);
        assert!(run_protocol(&e, &back, TOL).unwrap().perfect);

        assert_eq!(parse_protocol_file(r#"{"announce":null}"#).unwrap(), ProtocolFile::Sim(SimNode::silent()));
        assert!(matches!(parse_protocol_file(r#"{"leaf":"00"}"#).unwrap(), ProtocolFile::Projective(_)));
        assert!(matches!(parse_protocol_file(r#"{"verdict":"unknown"}"#), Err(Error::Schema(_))));
    }
}
