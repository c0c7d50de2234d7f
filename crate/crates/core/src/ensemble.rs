//! Product-state ensembles: the data model, file format, built-in catalog,
//! local-unitary dressing and a random complete-basis generator.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::canon::Json;
use crate::error::{Error, Result};
use crate::linalg::{
    self, complex, gram_schmidt, inner_product, negligible, normalize, normalize_real, CMatrix, LocalVector, C64,
};

/// One member `⊗_p |v^p⟩` of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub label: String,
    pub locals: Vec<LocalVector>,
}

impl ProductState {
    pub fn new(label: impl Into<String>, locals: Vec<LocalVector>) -> Self {
        Self { label: label.into(), locals }
    }

    /// `⟨self|other⟩ = Π_p ⟨v^p|w^p⟩`.
    pub fn overlap(&self, other: &ProductState) -> Result<C64> {
        if self.locals.len() != other.locals.len() {
            return Err(Error::Dimension("states have different party counts".into()));
        }
        self.locals.iter().zip(&other.locals).try_fold(C64::new(1.0, 0.0), |acc, (u, v)| Ok(acc * inner_product(u, v)?))
    }
}

/// A named set of product states over fixed party dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    name: String,
    dims: Vec<usize>,
    states: Vec<ProductState>,
    complete: bool,
}

impl Ensemble {
    /// Checks party dimensions, label uniqueness and, when completeness is
    /// claimed, the state count.
    pub fn new(name: impl Into<String>, dims: Vec<usize>, complete: bool, states: Vec<ProductState>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Schema(format!("party dimensions must be positive and nonempty, got {dims:?}")));
        }
        let mut seen = HashSet::new();
        for s in &states {
            if !seen.insert(s.label.as_str()) {
                return Err(Error::Schema(format!("duplicate label {:?}", s.label)));
            }
            if s.locals.len() != dims.len() {
                return Err(Error::Schema(format!(
                    "state {:?} has {} parties, expected {}",
                    s.label,
                    s.locals.len(),
                    dims.len()
                )));
            }
            for (p, (v, &d)) in s.locals.iter().zip(&dims).enumerate() {
                if v.dim() != d {
                    return Err(Error::Schema(format!(
                        "state {:?} party {p} has dimension {}, expected {d}",
                        s.label,
                        v.dim()
                    )));
                }
            }
        }
        let total: usize = dims.iter().product();
        if complete && states.len() != total {
            return Err(Error::Schema(format!(
                "ensemble claims completeness but has {} states, expected {total}",
                states.len()
            )));
        }
        Ok(Self { name: name.into(), dims, states, complete })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn complete(&self) -> bool {
        self.complete
    }

    pub fn label(&self, index: usize) -> &str {
        &self.states[index].label
    }

    pub fn local(&self, index: usize, party: usize) -> &LocalVector {
        &self.states[index].locals[party]
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.states.len()).collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::NotFound(format!("no state labelled {label:?} in {:?}", self.name)))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// The sub-ensemble on `indices`, in the given order, flagged incomplete.
    pub fn restrict(&self, indices: &[usize], name: impl Into<String>) -> Result<Ensemble> {
        let states = indices
            .iter()
            .map(|&i| self.states.get(i).cloned().ok_or_else(|| Error::NotFound(format!("state index {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(name, self.dims.clone(), false, states)
    }

    /// Reorders the states; `order[k]` is the old index of the new k-th state.
    pub fn reordered(&self, order: &[usize]) -> Result<Ensemble> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != self.all_indices() {
            return Err(Error::Schema("reordering is not a permutation".into()));
        }
        let states = order.iter().map(|&i| self.states[i].clone()).collect();
        Ensemble::new(self.name.clone(), self.dims.clone(), self.complete, states)
    }

    /// Same name, dims, flags and labels, with every local vector on the same
    /// ray within `tol`.
    pub fn approx_eq(&self, other: &Ensemble, tol: f64) -> bool {
        self.name == other.name
            && self.dims == other.dims
            && self.complete == other.complete
            && self.states.len() == other.states.len()
            && self
                .states
                .iter()
                .zip(&other.states)
                .all(|(a, b)| a.label == b.label && a.locals.iter().zip(&b.locals).all(|(u, v)| u.same_ray(v, tol)))
    }

    pub fn to_json(&self, tol: f64) -> Json {
        let states = self
            .states
            .iter()
            .map(|s| {
                let vectors = s.locals.iter().map(|v| v.phase_normalized(tol)).collect::<Vec<_>>();
                Json::obj([("label", Json::str(&s.label)), ("vectors", Json::vectors(&vectors))])
            })
            .collect();
        Json::obj([
            ("name", Json::str(&self.name)),
            ("dims", Json::Arr(self.dims.iter().map(|&d| Json::Int(d as i64)).collect())),
            ("complete", Json::Bool(self.complete)),
            ("states", Json::Arr(states)),
        ])
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    name: String,
    dims: Vec<usize>,
    complete: bool,
    states: Vec<StateFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    label: String,
    vectors: Vec<Vec<[f64; 2]>>,
}

/// Parses the ensemble JSON format, normalizing every vector on load.
pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    parse_ensemble_with_tol(text, linalg::DEFAULT_TOL)
}

pub fn parse_ensemble_with_tol(text: &str, tol: f64) -> Result<Ensemble> {
    let file: EnsembleFile = serde_json::from_str(text).map_err(linalg::json_error)?;
    let mut states = Vec::with_capacity(file.states.len());
    for s in file.states {
        if s.vectors.len() != file.dims.len() {
            return Err(Error::Schema(format!(
                "state {:?} lists {} vectors for {} parties",
                s.label,
                s.vectors.len(),
                file.dims.len()
            )));
        }
        let mut locals = Vec::with_capacity(s.vectors.len());
        for (p, raw) in s.vectors.iter().enumerate() {
            if raw.len() != file.dims[p] {
                return Err(Error::Schema(format!(
                    "state {:?} party {p} has {} entries, expected {}",
                    s.label,
                    raw.len(),
                    file.dims[p]
                )));
            }
            let entries = raw.iter().map(|[re, im]| complex(*re, *im)).collect::<Result<Vec<_>>>()?;
            locals.push(normalize(&entries, tol)?);
        }
        states.push(ProductState::new(s.label, locals));
    }
    Ensemble::new(file.name, file.dims, file.complete, states)
}

/// Canonical serialization: phase-normalized vectors, 17 significant digits.
pub fn emit_ensemble(e: &Ensemble) -> String {
    e.to_json(linalg::DEFAULT_TOL).to_string()
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub claimed_complete: bool,
    pub pairwise_orthogonal: bool,
    /// The state count equals the product of the party dimensions.
    pub complete_count: bool,
    /// Per party: the local vectors span the whole factor.
    pub spans_full: Vec<bool>,
    pub offending_pairs: Vec<(String, String, f64)>,
}

impl ValidationReport {
    /// Pairwise orthogonal, and if completeness is claimed, full count and
    /// full local spans.
    pub fn passes(&self) -> bool {
        self.pairwise_orthogonal
            && (!self.claimed_complete || (self.complete_count && self.spans_full.iter().all(|&b| b)))
    }

    pub fn to_json(&self, tol: f64) -> Json {
        Json::obj([
            ("passes", Json::Bool(self.passes())),
            ("tol", Json::Num(tol)),
            ("claimed_complete", Json::Bool(self.claimed_complete)),
            ("pairwise_orthogonal", Json::Bool(self.pairwise_orthogonal)),
            ("complete_count", Json::Bool(self.complete_count)),
            ("spans_full", Json::Arr(self.spans_full.iter().map(|&b| Json::Bool(b)).collect())),
            (
                "offending_pairs",
                Json::Arr(
                    self.offending_pairs
                        .iter()
                        .map(|(a, b, m)| Json::Arr(vec![Json::str(a), Json::str(b), Json::Num(*m)]))
                        .collect(),
                ),
            ),
        ])
    }
}

pub fn validate(e: &Ensemble, tol: f64) -> ValidationReport {
    let mut offending_pairs = Vec::new();
    for (k, a) in e.states.iter().enumerate() {
        for b in &e.states[k + 1..] {
            let overlap = a.overlap(b).expect("ensemble invariants guarantee matching dims");
            if !negligible(overlap, tol) {
                offending_pairs.push((a.label.clone(), b.label.clone(), overlap.norm()));
            }
        }
    }
    let spans_full = (0..e.parties())
        .map(|p| {
            let vs: Vec<LocalVector> = e.states.iter().map(|s| s.locals[p].clone()).collect();
            gram_schmidt(&vs, tol).expect("uniform party dims").len() == e.dims[p]
        })
        .collect();
    ValidationReport {
        claimed_complete: e.complete,
        pairwise_orthogonal: offending_pairs.is_empty(),
        complete_count: e.states.len() == e.dims.iter().product::<usize>(),
        spans_full,
        offending_pairs,
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 5] = ["bennett9", "grid16", "cube64", "finkelstein9", "comp2x2"];

/// `Σ_k c_k |k⟩` with one-based ket indices, normalized.
fn ket(dim: usize, terms: &[(usize, f64)]) -> LocalVector {
    let mut raw = vec![0.0; dim];
    for &(k, c) in terms {
        raw[k - 1] += c;
    }
    normalize_real(&raw, linalg::DEFAULT_TOL).expect("catalog kets are nonzero")
}

fn k1(dim: usize, a: usize) -> LocalVector {
    ket(dim, &[(a, 1.0)])
}

/// `|a ± b⟩`, plus first.
fn k2(dim: usize, a: usize, b: usize) -> [LocalVector; 2] {
    [ket(dim, &[(a, 1.0), (b, 1.0)]), ket(dim, &[(a, 1.0), (b, -1.0)])]
}

fn psi(k: usize) -> String {
    format!("Ψ{k}")
}

/// The nine 3⊗3 domino states in the order `Ψ1 … Ψ9`.
fn bennett_locals() -> Vec<[LocalVector; 2]> {
    let d = 3;
    let mut out = vec![[k1(d, 1), k1(d, 1)]];
    for b in k2(d, 3, 1) {
        out.push([k1(d, 3), b]);
    }
    for b in k2(d, 1, 2) {
        out.push([k1(d, 2), b]);
    }
    for a in k2(d, 3, 1) {
        out.push([a, k1(d, 2)]);
    }
    for a in k2(d, 1, 2) {
        out.push([a, k1(d, 3)]);
    }
    out
}

fn grid_locals() -> Vec<[LocalVector; 2]> {
    let d = 4;
    let mut out = Vec::with_capacity(16);
    for (a, (b1, b2)) in [(1, (1, 2)), (2, (2, 3)), (3, (3, 4)), (4, (1, 4))] {
        for b in k2(d, b1, b2) {
            out.push([k1(d, a), b]);
        }
    }
    for ((a1, a2), b) in [((1, 2), 4), ((3, 4), 2), ((2, 3), 1), ((1, 4), 3)] {
        for a in k2(d, a1, a2) {
            out.push([a, k1(d, b)]);
        }
    }
    out
}

fn bipartite(name: &str, dims: Vec<usize>, locals: Vec<[LocalVector; 2]>) -> Ensemble {
    let states = locals.into_iter().enumerate().map(|(k, [a, b])| ProductState::new(psi(k + 1), vec![a, b])).collect();
    Ensemble::new(name, dims, true, states).expect("catalog ensembles are well formed")
}

/// Charles's vectors for the nine-state tripartite set: `x = |1⟩`,
/// `y = (|1⟩ + √3|2⟩)/2`, `z = (|1⟩ − √3|2⟩)/2`.
pub fn finkelstein_charles_vectors() -> [LocalVector; 3] {
    let r3 = 3f64.sqrt();
    [k1(2, 1), ket(2, &[(1, 0.5), (2, r3 / 2.0)]), ket(2, &[(1, 0.5), (2, -r3 / 2.0)])]
}

/// The built-in ensembles. Unnormalized kets such as `|3 ± 1⟩` are
/// normalized; signs follow the printed sets.
pub fn catalog(name: &str) -> Result<Ensemble> {
    match name {
        "bennett9" => Ok(bipartite("bennett9", vec![3, 3], bennett_locals())),
        "grid16" => Ok(bipartite("grid16", vec![4, 4], grid_locals())),
        "cube64" => {
            let grid = grid_locals();
            let mut states = Vec::with_capacity(64);
            for c in 1..=4 {
                for (i, [a, b]) in grid.iter().enumerate() {
                    states.push(ProductState::new(psi(i + 1 + 16 * (c - 1)), vec![a.clone(), b.clone(), k1(4, c)]));
                }
            }
            Ensemble::new("cube64", vec![4, 4, 4], true, states)
        }
        "finkelstein9" => {
            let charles = finkelstein_charles_vectors();
            let states = bennett_locals()
                .into_iter()
                .enumerate()
                .map(|(k, [a, b])| ProductState::new(psi(k + 1), vec![a, b, charles[k / 3].clone()]))
                .collect();
            Ensemble::new("finkelstein9", vec![3, 3, 2], false, states)
        }
        "comp2x2" => {
            let states = (0..2)
                .flat_map(|a| {
                    (0..2).map(move |b| {
                        ProductState::new(format!("{a}{b}"), vec![LocalVector::basis(2, a), LocalVector::basis(2, b)])
                    })
                })
                .collect();
            Ensemble::new("comp2x2", vec![2, 2], true, states)
        }
        other => {
            Err(Error::NotFound(format!("no catalog ensemble named {other:?} (known: {})", CATALOG_NAMES.join(", "))))
        }
    }
}

/// Replaces every `v_k^p` by `U_p v_k^p`.
pub fn apply_local_unitaries(e: &Ensemble, us: &[CMatrix], tol: f64) -> Result<Ensemble> {
    if us.len() != e.parties() {
        return Err(Error::Dimension(format!("{} unitaries for {} parties", us.len(), e.parties())));
    }
    for (p, (u, &d)) in us.iter().zip(e.dims()).enumerate() {
        if u.shape() != (d, d) {
            return Err(Error::Dimension(format!("unitary for party {p} is {:?}, expected {d}x{d}", u.shape())));
        }
        let defect = linalg::unitarity_defect(u);
        if defect > tol {
            return Err(Error::Unitarity(format!("party {p}: |U†U − I| = {defect:e}")));
        }
    }
    let states = e
        .states
        .iter()
        .map(|s| {
            let locals =
                s.locals.iter().zip(us).map(|(v, u)| normalize(&v.apply(u)?, tol)).collect::<Result<Vec<_>>>()?;
            Ok(ProductState::new(s.label.clone(), locals))
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(e.name.clone(), e.dims.clone(), e.complete, states)
}

/// A random `d × d` unitary: Gram-Schmidt on the columns of a complex
/// Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    loop {
        let columns: Vec<LocalVector> = (0..d)
            .map(|_| {
                let raw: Vec<C64> =
                    (0..d).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
                normalize(&raw, 0.0).expect("Gaussian vector is nonzero almost surely")
            })
            .collect();
        let q = gram_schmidt(&columns, 1e-6).expect("same dims");
        if q.len() == d {
            let mut u = CMatrix::zeros(d, d);
            for (c, col) in q.iter().enumerate() {
                for (r, z) in col.entries().iter().enumerate() {
                    u[(r, c)] = *z;
                }
            }
            return u;
        }
    }
}

/// A box `I_1 × … × I_n` of computational basis indices.
type Tile = Vec<Vec<usize>>;

/// Two tiles whose union is again a tile: equal on every party but one.
fn merge_party(a: &Tile, b: &Tile) -> Option<usize> {
    let mut differing = a.iter().zip(b).enumerate().filter(|(_, (x, y))| x != y);
    let (p, _) = differing.next()?;
    differing.next().is_none().then_some(p)
}

/// A random complete orthogonal product basis.
///
/// The product grid of computational indices starts tiled by unit cells.
/// Each of the `depth` rounds merges a seeded choice of two tiles whose union
/// is again a box. Every tile then carries an independent random unitary on
/// each party's index set, and finally every party gets a random unitary on
/// its full space. Tiles are disjoint boxes, so they differ on some party in
/// disjoint index sets, which makes states from different tiles orthogonal.
/// With `depth == 0` the result is the computational product basis.
pub fn random_product_basis(dims: &[usize], seed: u64, depth: usize) -> Result<Ensemble> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Schema(format!("party dimensions must be positive, got {dims:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tiles: Vec<Tile> = vec![vec![]];
    for &d in dims {
        tiles = tiles
            .into_iter()
            .flat_map(|t| {
                (0..d).map(move |k| {
                    let mut t = t.clone();
                    t.push(vec![k]);
                    t
                })
            })
            .collect();
    }

    for _ in 0..depth {
        let mut candidates = Vec::new();
        for i in 0..tiles.len() {
            for j in i + 1..tiles.len() {
                if let Some(p) = merge_party(&tiles[i], &tiles[j]) {
                    candidates.push((i, j, p));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let (i, j, p) = candidates[rng.random_range(0..candidates.len())];
        let other = tiles.remove(j);
        tiles[i][p].extend(other[p].iter().copied());
        tiles[i][p].sort_unstable();
    }

    let mut states = Vec::with_capacity(dims.iter().product());
    for tile in &tiles {
        // Per party, the rotated basis of span{|k⟩ : k ∈ I_p}.
        let factors: Vec<Vec<Vec<C64>>> = tile
            .iter()
            .zip(dims)
            .map(|(indices, &d)| {
                let m = indices.len();
                let u = if depth > 0 && m > 1 { random_unitary(m, &mut rng) } else { CMatrix::identity(m, m) };
                (0..m)
                    .map(|c| {
                        let mut v = vec![C64::new(0.0, 0.0); d];
                        for (r, &k) in indices.iter().enumerate() {
                            v[k] = u[(r, c)];
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for f in &factors {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (0..f.len()).map(move |k| {
                        let mut c = c.clone();
                        c.push(k);
                        c
                    })
                })
                .collect();
        }
        for combo in combos {
            let locals = combo.iter().zip(&factors).map(|(&k, f)| normalize(&f[k], 0.0)).collect::<Result<Vec<_>>>()?;
            states.push(ProductState::new(psi(states.len() + 1), locals));
        }
    }

    let name = format!("random-{}-s{seed}-d{depth}", dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x"));
    let e = Ensemble::new(name, dims.to_vec(), true, states)?;
    if depth == 0 {
        return Ok(e);
    }
    let us: Vec<CMatrix> = dims.iter().map(|&d| random_unitary(d, &mut rng)).collect();
    apply_local_unitaries(&e, &us, 1e-9)
}
