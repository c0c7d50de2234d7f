//! The relativity relation between states at one party: two states are
//! relative when their local vectors there have a non-negligible overlap.
//!
//! Connected components of the overlap graph are the finest blocks a
//! projective measurement at that party can separate without disturbing any
//! state, and relativity chains with linearly independent vectors give a
//! sufficient criterion for local indistinguishability.

use std::collections::VecDeque;

use crate::canon::Json;
use crate::ensemble::{validate, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, inner_product, negligible, LocalVector, SpanBuilder};

/// Overlap graph of a subset of states at one party.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGraph {
    pub party: usize,
    /// Ensemble indices, ascending.
    pub members: Vec<usize>,
    pub labels: Vec<String>,
    adjacency: Vec<Vec<bool>>,
}

impl OverlapGraph {
    /// Whether members `i` and `j` (positions in `members`) are relative.
    pub fn edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|r| r.iter().filter(|&&b| b).count()).sum::<usize>() / 2
    }

    /// Connected components as positions in `members`, ordered by smallest
    /// member.
    pub fn component_positions(&self) -> Vec<Vec<usize>> {
        let n = self.members.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut block = vec![root];
            let mut queue = VecDeque::from([root]);
            while let Some(i) = queue.pop_front() {
                for j in self.neighbors(i) {
                    if !seen[j] {
                        seen[j] = true;
                        block.push(j);
                        queue.push_back(j);
                    }
                }
            }
            block.sort_unstable();
            out.push(block);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.component_positions().len() <= 1
    }

    /// `{"party": p, "members": [...], "adjacency": {label: [labels...]}}`
    pub fn to_json(&self) -> Json {
        let adjacency = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), Json::strs(self.neighbors(i).map(|j| &self.labels[j]))))
            .collect();
        Json::obj([
            ("party", Json::Int(self.party as i64)),
            ("members", Json::strs(&self.labels)),
            ("adjacency", Json::Obj(adjacency)),
        ])
    }
}

fn check_party(e: &Ensemble, party: usize) -> Result<()> {
    if party >= e.parties() {
        return Err(Error::NotFound(format!("party {party} (ensemble has {})", e.parties())));
    }
    Ok(())
}

fn canonical_subset(e: &Ensemble, subset: &[usize]) -> Result<Vec<usize>> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= e.len()) {
        return Err(Error::NotFound(format!("state index {bad}")));
    }
    let mut members = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    Ok(members)
}

/// Overlap graph on `subset` (ensemble indices) at `party`.
pub fn overlap_graph(e: &Ensemble, subset: &[usize], party: usize, tol: f64) -> Result<OverlapGraph> {
    check_party(e, party)?;
    let members = canonical_subset(e, subset)?;
    let n = members.len();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let z = inner_product(e.local(members[i], party), e.local(members[j], party))?;
            let relative = !negligible(z, tol);
            adjacency[i][j] = relative;
            adjacency[j][i] = relative;
        }
    }
    let labels = members.iter().map(|&i| e.label(i).to_owned()).collect();
    Ok(OverlapGraph { party, members, labels, adjacency })
}

/// [`overlap_graph`] addressed by state labels.
pub fn overlap_graph_by_labels<S: AsRef<str>>(
    e: &Ensemble,
    labels: &[S],
    party: usize,
    tol: f64,
) -> Result<OverlapGraph> {
    overlap_graph(e, &e.indices_of(labels)?, party, tol)
}

/// Connected components of an overlap graph with an orthonormal basis of
/// each block's span.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub party: usize,
    /// Blocks of ensemble indices.
    pub blocks: Vec<Vec<usize>>,
    pub spans: Vec<Vec<LocalVector>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Largest `|⟨u|w⟩|` between span vectors of different blocks.
    pub fn max_cross_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, sa) in self.spans.iter().enumerate() {
            for sb in &self.spans[a + 1..] {
                for u in sa {
                    for w in sb {
                        worst = worst.max(inner_product(u, w).map_or(f64::INFINITY, |z| z.norm()));
                    }
                }
            }
        }
        worst
    }
}

/// Span basis of the party vectors of `block`.
pub fn block_span(e: &Ensemble, block: &[usize], party: usize, tol: f64) -> Result<Vec<LocalVector>> {
    let vs: Vec<LocalVector> = block.iter().map(|&i| e.local(i, party).clone()).collect();
    gram_schmidt(&vs, tol)
}

/// Components of `g` with their spans. Spans of different blocks must be
/// orthogonal; a violation beyond `10·tol` means `tol` is too small for the
/// data.
pub fn components(g: &OverlapGraph, e: &Ensemble, tol: f64) -> Result<Partition> {
    let blocks: Vec<Vec<usize>> =
        g.component_positions().into_iter().map(|pos| pos.into_iter().map(|i| g.members[i]).collect()).collect();
    let spans = blocks.iter().map(|b| block_span(e, b, g.party, tol)).collect::<Result<Vec<_>>>()?;
    let partition = Partition { party: g.party, blocks, spans };
    let cross = partition.max_cross_overlap();
    if cross > 10.0 * tol {
        return Err(Error::NumericalInstability(format!(
            "blocks at party {} are not orthogonal (max overlap {cross:e} > 10·tol)",
            g.party
        )));
    }
    Ok(partition)
}

/// Components of the overlap graph on `subset` at `party`.
pub fn partition_at(e: &Ensemble, subset: &[usize], party: usize, tol: f64) -> Result<Partition> {
    components(&overlap_graph(e, subset, party, tol)?, e, tol)
}

fn full_adjacency(e: &Ensemble, party: usize, tol: f64) -> Result<Vec<Vec<usize>>> {
    let g = overlap_graph(e, &e.all_indices(), party, tol)?;
    Ok((0..e.len()).map(|i| g.neighbors(i).collect()).collect())
}

fn extend_chain(
    adjacency: &[Vec<usize>],
    vectors: &[&LocalVector],
    path: &mut Vec<usize>,
    span: &mut SpanBuilder,
    remaining: usize,
    tol: f64,
) -> bool {
    if remaining == 0 {
        return true;
    }
    let last = *path.last().expect("chains start nonempty");
    for &next in &adjacency[last] {
        if path.contains(&next) || !span.push(vectors[next], tol) {
            continue;
        }
        path.push(next);
        if extend_chain(adjacency, vectors, path, span, remaining - 1, tol) {
            return true;
        }
        path.pop();
        span.pop();
    }
    false
}

fn chain_with(
    adjacency: &[Vec<usize>],
    vectors: &[&LocalVector],
    start: usize,
    length: usize,
    tol: f64,
) -> Option<Vec<usize>> {
    let mut span = SpanBuilder::new();
    span.push(vectors[start], tol);
    let mut path = vec![start];
    extend_chain(adjacency, vectors, &mut path, &mut span, length, tol).then_some(path)
}

/// A path `start ↔ l_1 ↔ … ↔ l_length` of consecutively relative states at
/// `party` whose local vectors are linearly independent. Exhaustive search
/// over simple paths, abandoning a branch as soon as a vector fails to raise
/// the rank.
pub fn relativity_chain(
    e: &Ensemble,
    party: usize,
    start: usize,
    length: usize,
    tol: f64,
) -> Result<Option<Vec<usize>>> {
    check_party(e, party)?;
    if start >= e.len() {
        return Err(Error::NotFound(format!("state index {start}")));
    }
    let adjacency = full_adjacency(e, party, tol)?;
    let vectors: Vec<&LocalVector> = (0..e.len()).map(|i| e.local(i, party)).collect();
    Ok(chain_with(&adjacency, &vectors, start, length, tol))
}

/// Necessary condition for [`chain_criterion`] at one party: every
/// component of the full overlap graph spans the whole local space.
pub fn components_span_full(e: &Ensemble, party: usize, tol: f64) -> Result<bool> {
    let p = partition_at(e, &e.all_indices(), party, tol)?;
    Ok(p.spans.iter().all(|s| s.len() == e.dims()[party]))
}

/// Sufficient criterion for local indistinguishability of a complete
/// product basis: at every party `p`, every state starts a relativity chain
/// of `dims[p] − 1` further states with linearly independent vectors.
pub fn chain_criterion(e: &Ensemble, tol: f64) -> Result<bool> {
    let report = validate(e, tol);
    if !(e.complete() && report.passes()) {
        return Err(Error::InvalidMode(format!(
            "chain criterion needs a validated complete basis; {:?} is not one",
            e.name()
        )));
    }
    for party in 0..e.parties() {
        if !components_span_full(e, party, tol)? {
            return Ok(false);
        }
    }
    for party in 0..e.parties() {
        let adjacency = full_adjacency(e, party, tol)?;
        let vectors: Vec<&LocalVector> = (0..e.len()).map(|i| e.local(i, party)).collect();
        let length = e.dims()[party] - 1;
        for start in 0..e.len() {
            if chain_with(&adjacency, &vectors, start, length, tol).is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::catalog;
    use crate::linalg::{rank, DEFAULT_TOL as TOL};

    fn labels(e: &Ensemble, block: &[usize]) -> Vec<String> {
        block.iter().map(|&i| e.label(i).to_owned()).collect()
    }

    /// Every pair checked directly, independent of the graph code.
    fn brute_edges(e: &Ensemble, party: usize) -> usize {
        let mut n = 0;
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                if inner_product(e.local(i, party), e.local(j, party)).unwrap().norm() > TOL {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn bennett_full_graph_connected() {
        let e = catalog("bennett9").unwrap();
        for party in 0..2 {
            let g = overlap_graph(&e, &e.all_indices(), party, TOL).unwrap();
            assert!(g.is_connected());
            assert_eq!(g.edge_count(), brute_edges(&e, party));
            let p = components(&g, &e, TOL).unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(p.spans[0].len(), 3);
        }
    }

    #[test]
    fn bennett_tail_splits_at_bob() {
        let e = catalog("bennett9").unwrap();
        let subset = ["Ψ4", "Ψ5", "Ψ6", "Ψ7", "Ψ8", "Ψ9"];
        let g = overlap_graph_by_labels(&e, &subset, 1, TOL).unwrap();
        let p = components(&g, &e, TOL).unwrap();
        let blocks: Vec<Vec<String>> = p.blocks.iter().map(|b| labels(&e, b)).collect();
        assert_eq!(blocks, vec![vec!["Ψ4", "Ψ5", "Ψ6", "Ψ7"], vec!["Ψ8", "Ψ9"]]);
        assert_eq!(p.spans[0].len(), 2);
        assert_eq!(p.spans[1].len(), 1);
    }

    #[test]
    fn computational_basis_components() {
        let e = catalog("comp2x2").unwrap();
        let p = partition_at(&e, &e.all_indices(), 0, TOL).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2, 3]]);
        assert!(p.spans[0][0].approx_eq(&LocalVector::basis(2, 0), 0.0));
        assert!(p.spans[1][0].approx_eq(&LocalVector::basis(2, 1), 0.0));
    }

    #[test]
    fn cube_splits_into_four_at_charles() {
        let e = catalog("cube64").unwrap();
        let p = partition_at(&e, &e.all_indices(), 2, TOL).unwrap();
        assert_eq!(p.len(), 4);
        for (c, (block, span)) in p.blocks.iter().zip(&p.spans).enumerate() {
            assert_eq!(block.len(), 16);
            assert_eq!(span.len(), 1);
            assert!(span[0].approx_eq(&LocalVector::basis(4, c), 0.0));
        }
    }

    #[test]
    fn unknown_labels_and_parties() {
        let e = catalog("comp2x2").unwrap();
        assert!(matches!(overlap_graph_by_labels(&e, &["xx"], 0, TOL), Err(Error::NotFound(_))));
        assert!(matches!(overlap_graph(&e, &[0], 5, TOL), Err(Error::NotFound(_))));
    }

    #[test]
    fn chains() {
        let e = catalog("bennett9").unwrap();
        let chain = relativity_chain(&e, 0, 0, 2, TOL).unwrap().expect("chain exists");
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[0], 0);
        for w in chain.windows(2) {
            assert!(inner_product(e.local(w[0], 0), e.local(w[1], 0)).unwrap().norm() > TOL);
        }
        let vs: Vec<LocalVector> = chain.iter().map(|&i| e.local(i, 0).clone()).collect();
        assert_eq!(rank(&vs, TOL).unwrap(), 3);

        let comp = catalog("comp2x2").unwrap();
        for s in 0..4 {
            assert_eq!(relativity_chain(&comp, 0, s, 1, TOL).unwrap(), None);
            assert_eq!(relativity_chain(&comp, 1, s, 0, TOL).unwrap(), Some(vec![s]));
        }
    }

    #[test]
    fn chain_criterion_examples() {
        assert!(chain_criterion(&catalog("bennett9").unwrap(), TOL).unwrap());
        assert!(chain_criterion(&catalog("grid16").unwrap(), TOL).unwrap());
        assert!(!chain_criterion(&catalog("comp2x2").unwrap(), TOL).unwrap());
        // Charles's components are one-dimensional, so no chain of length 3.
        assert!(!chain_criterion(&catalog("cube64").unwrap(), TOL).unwrap());
        assert!(matches!(chain_criterion(&catalog("finkelstein9").unwrap(), TOL), Err(Error::InvalidMode(_))));
    }
}
