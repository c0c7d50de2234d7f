//! Small dense complex linear algebra with an explicit tolerance.
//!
//! Vectors produced by library routines (Gram-Schmidt, SVD) are
//! phase-normalized: the first entry with modulus above `tol` is made real
//! and positive. [`normalize`] keeps the global phase of its input.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::canon::Json;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default numerical tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Builds a complex number, rejecting NaN and infinities.
pub fn complex(re: f64, im: f64) -> Result<C64> {
    if re.is_finite() && im.is_finite() {
        Ok(C64::new(re, im))
    } else {
        Err(Error::Parse(format!("non-finite amplitude ({re}, {im})")))
    }
}

/// The orthogonality predicate. Every "is this overlap zero" decision in the
/// crate goes through this function.
#[inline]
pub fn negligible(overlap: C64, tol: f64) -> bool {
    overlap.norm() <= tol
}

/// A unit vector in one party's Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVector {
    entries: Vec<C64>,
}

impl LocalVector {
    /// The computational basis vector `|k⟩` (zero based) of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut entries = vec![C64::new(0.0, 0.0); dim];
        entries[k] = C64::new(1.0, 0.0);
        Self { entries }
    }

    /// Wraps entries that are already unit norm. Callers guarantee the norm.
    pub(crate) fn from_unit(entries: Vec<C64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    /// Multiplies by a global phase so the first entry with modulus above
    /// `tol` is real and positive.
    pub fn phase_normalized(&self, tol: f64) -> Self {
        match self.entries.iter().find(|z| z.norm() > tol) {
            Some(lead) => {
                let phase = lead.conj() / lead.norm();
                Self { entries: self.entries.iter().map(|z| z * phase).collect() }
            }
            None => self.clone(),
        }
    }

    /// Entrywise comparison.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && self.entries.iter().zip(&other.entries).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Equality up to a global phase: `|⟨self|other⟩| ≈ 1`.
    pub fn same_ray(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim() && (1.0 - dot(&self.entries, &other.entries).norm()).abs() <= tol
    }

    /// `m · self`, unnormalized.
    pub fn apply(&self, m: &CMatrix) -> Result<Vec<C64>> {
        if m.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "operator has {} columns, vector has dimension {}",
                m.ncols(),
                self.dim()
            )));
        }
        Ok((0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)] * self.entries[c]).sum()).collect())
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩` with conjugation on the left.
fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Scales `raw` to unit norm, keeping its global phase.
pub fn normalize(raw: &[C64], tol: f64) -> Result<LocalVector> {
    if let Some(z) = raw.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Parse(format!("non-finite amplitude {z}")));
    }
    let n = norm(raw);
    if n <= tol {
        return Err(Error::ZeroVector);
    }
    Ok(LocalVector { entries: raw.iter().map(|z| z / n).collect() })
}

/// Convenience for real amplitude lists such as `|1⟩ + |2⟩`.
pub fn normalize_real(raw: &[f64], tol: f64) -> Result<LocalVector> {
    let raw: Vec<C64> = raw.iter().map(|&x| C64::new(x, 0.0)).collect();
    normalize(&raw, tol)
}

pub fn inner_product(u: &LocalVector, v: &LocalVector) -> Result<C64> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension(format!("inner product of dims {} and {}", u.dim(), v.dim())));
    }
    Ok(dot(&u.entries, &v.entries))
}

pub fn orthogonal(u: &LocalVector, v: &LocalVector, tol: f64) -> Result<bool> {
    Ok(negligible(inner_product(u, v)?, tol))
}

fn check_same_dim(vectors: &[LocalVector]) -> Result<()> {
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.dim() != first.dim()) {
            return Err(Error::Dimension(format!("mixed dimensions {} and {}", first.dim(), bad.dim())));
        }
    }
    Ok(())
}

/// Residual of `v` after removing its components along the orthonormal
/// `basis`. Two passes of modified Gram-Schmidt.
fn residual(basis: &[LocalVector], v: &[C64]) -> Vec<C64> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&b.entries, &w);
            for (wi, bi) in w.iter_mut().zip(&b.entries) {
                *wi -= c * bi;
            }
        }
    }
    w
}

/// Orthonormal basis of the span of `vectors`, processed in order. Vectors
/// whose residual norm is at most `tol` are dropped.
pub fn gram_schmidt(vectors: &[LocalVector], tol: f64) -> Result<Vec<LocalVector>> {
    check_same_dim(vectors)?;
    let mut basis: Vec<LocalVector> = Vec::new();
    for v in vectors {
        let w = residual(&basis, &v.entries);
        let n = norm(&w);
        if n > tol {
            let unit = LocalVector { entries: w.iter().map(|z| z / n).collect() };
            basis.push(unit.phase_normalized(tol));
        }
    }
    Ok(basis)
}

/// Incremental orthonormal basis, used by searches that add vectors one at a
/// time and need to know whether each one increased the rank.
#[derive(Debug, Clone, Default)]
pub struct SpanBuilder {
    basis: Vec<LocalVector>,
}

impl SpanBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v`; returns whether the rank grew.
    pub fn push(&mut self, v: &LocalVector, tol: f64) -> bool {
        let w = residual(&self.basis, &v.entries);
        let n = norm(&w);
        if n > tol {
            self.basis.push(LocalVector { entries: w.iter().map(|z| z / n).collect() });
            true
        } else {
            false
        }
    }

    pub fn pop(&mut self) {
        self.basis.pop();
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

pub fn rank(vectors: &[LocalVector], tol: f64) -> Result<usize> {
    Ok(gram_schmidt(vectors, tol)?.len())
}

/// `Σ_j |b_j⟩⟨b_j|` for an orthonormal basis, as a `dim × dim` matrix.
pub fn projector(basis: &[LocalVector], dim: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    for b in basis {
        for r in 0..dim {
            for c in 0..dim {
                p[(r, c)] += b.entries[r] * b.entries[c].conj();
            }
        }
    }
    p
}

/// Largest entrywise deviation of `⟨b_j|b_k⟩` from `δ_jk`.
pub fn orthonormality_defect(basis: &[LocalVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, a) in basis.iter().enumerate() {
        for (k, b) in basis.iter().enumerate() {
            let target = if j == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((dot(&a.entries, &b.entries) - target).norm());
        }
    }
    worst
}

/// Projection of `v` onto the span of an orthonormal `basis`: the
/// unnormalized projected vector and its squared norm.
pub fn project_onto(basis: &[LocalVector], v: &LocalVector, tol: f64) -> Result<(Vec<C64>, f64)> {
    if let Some(b) = basis.iter().find(|b| b.dim() != v.dim()) {
        return Err(Error::Dimension(format!("basis dim {} vs vector dim {}", b.dim(), v.dim())));
    }
    let defect = orthonormality_defect(basis);
    if defect > tol {
        return Err(Error::Basis(format!("orthonormality defect {defect:e}")));
    }
    let mut out = vec![C64::new(0.0, 0.0); v.dim()];
    for b in basis {
        let c = dot(&b.entries, &v.entries);
        for (o, bi) in out.iter_mut().zip(&b.entries) {
            *o += c * bi;
        }
    }
    let weight = out.iter().map(|z| z.norm_sqr()).sum();
    Ok((out, weight))
}

/// Largest entry modulus of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `U†U` from the identity. Infinite for
/// non-square input.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - CMatrix::identity(u.ncols(), u.ncols())))
}

/// Singular value decomposition `A = Σ_j σ_j |left_j⟩⟨right_j|`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub sigmas: Vec<f64>,
    pub left: Vec<LocalVector>,
    pub right: Vec<LocalVector>,
    pub rank: usize,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let rows = self.left.first().map_or(0, LocalVector::dim);
        let cols = self.right.first().map_or(0, LocalVector::dim);
        let mut m = CMatrix::zeros(rows, cols);
        for ((s, l), r) in self.sigmas.iter().zip(&self.left).zip(&self.right) {
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] += *s * l.entries[i] * r.entries[j].conj();
                }
            }
        }
        m
    }

    /// Largest entrywise difference between `a` and the reconstruction.
    pub fn reconstruction_error(&self, a: &CMatrix) -> f64 {
        let m = self.reconstruct();
        if m.shape() != a.shape() {
            return f64::INFINITY;
        }
        max_abs(&(a - m))
    }

    pub fn to_json(&self) -> Json {
        Json::obj([
            ("sigmas", Json::Arr(self.sigmas.iter().map(|&s| Json::Num(s)).collect())),
            ("rank", Json::Int(self.rank as i64)),
            ("left", Json::vectors(&self.left)),
            ("right", Json::vectors(&self.right)),
        ])
    }
}

/// Orders vectors entry by entry, comparing real then imaginary parts, with
/// differences up to `tol` treated as equal.
fn lex_cmp(a: &LocalVector, b: &LocalVector, tol: f64) -> Ordering {
    for (x, y) in a.entries.iter().zip(&b.entries) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > tol {
                return p.total_cmp(&q);
            }
        }
    }
    Ordering::Equal
}

/// Singular value decomposition with canonical ordering: descending
/// singular values; within a cluster of equal values (up to `tol`), right
/// vectors in descending lexicographic order. Each pair is phase-normalized
/// on its right vector, with the same phase applied to the left one.
pub fn svd_decompose(a: &CMatrix, tol: f64) -> SvdResult {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return SvdResult { sigmas: vec![], left: vec![], right: vec![], rank: 0 };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");

    let mut triples: Vec<(f64, LocalVector, LocalVector)> = (0..k)
        .map(|j| {
            let sigma = svd.singular_values[j].max(0.0);
            let left: Vec<C64> = u.column(j).iter().copied().collect();
            let right: Vec<C64> = v_t.row(j).iter().map(|z| z.conj()).collect();
            let phase =
                right.iter().find(|z| z.norm() > tol).map_or(C64::new(1.0, 0.0), |lead| lead.conj() / lead.norm());
            (
                sigma,
                LocalVector { entries: left.iter().map(|z| z * phase).collect() },
                LocalVector { entries: right.iter().map(|z| z * phase).collect() },
            )
        })
        .collect();

    triples.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut start = 0;
    while start < triples.len() {
        let mut end = start + 1;
        while end < triples.len() && (triples[end - 1].0 - triples[end].0).abs() <= tol {
            end += 1;
        }
        triples[start..end].sort_by(|x, y| lex_cmp(&y.2, &x.2, tol));
        start = end;
    }

    let rank = triples.iter().filter(|t| t.0 > tol).count();
    let (mut sigmas, mut left, mut right) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
    for (s, l, r) in triples {
        sigmas.push(s);
        left.push(l);
        right.push(r);
    }
    SvdResult { sigmas, left, right, rank }
}

#[derive(Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

pub(crate) fn json_error(e: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => Error::Schema(e.to_string()),
        _ => Error::Parse(e.to_string()),
    }
}

fn matrix_from_file(m: MatrixFile) -> Result<CMatrix> {
    if m.entries.len() != m.rows * m.cols {
        return Err(Error::Schema(format!(
            "matrix declares {}x{} but has {} entries",
            m.rows,
            m.cols,
            m.entries.len()
        )));
    }
    let entries = m.entries.iter().map(|[re, im]| complex(*re, *im)).collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_row_slice(m.rows, m.cols, &entries))
}

/// Parses `{"rows": r, "cols": c, "entries": [[re, im], ...]}` (row-major).
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let m: MatrixFile = serde_json::from_str(text).map_err(json_error)?;
    matrix_from_file(m)
}

pub(crate) fn matrix_from_value(v: &serde_json::Value) -> Result<CMatrix> {
    let m: MatrixFile = serde_json::from_value(v.clone()).map_err(json_error)?;
    matrix_from_file(m)
}

pub fn matrix_json(m: &CMatrix) -> Json {
    let mut entries = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            entries.push(Json::complex(m[(r, c)]));
        }
    }
    Json::obj([
        ("rows", Json::Int(m.nrows() as i64)),
        ("cols", Json::Int(m.ncols() as i64)),
        ("entries", Json::Arr(entries)),
    ])
}

pub fn emit_matrix(m: &CMatrix) -> String {
    matrix_json(m).to_string()
}
