//! Brute-force reference for the decision procedure.
//!
//! Instead of always taking the component measurement, the oracle tries
//! every coarsening of the components at every party and memoizes, per
//! subset of states, whether some sequence of such measurements identifies
//! every state. It is exponential and only meant for small bases.

use std::collections::HashMap;

use crate::distinguish::{check_mode, stuck_certificate, MeasurementStep, Mode, Outcome, ProtocolTree, Verdict};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::project_onto;
use crate::relativity::{block_span, partition_at};

/// Largest total dimension [`exhaustive_decide`] accepts.
pub const ORACLE_MAX_DIM: usize = 12;

/// All coarsenings of the component partition at one party.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionFamily {
    pub party: usize,
    pub components: Vec<Vec<usize>>,
    /// Each partition is a list of blocks of ensemble indices. The last one
    /// is the trivial single block.
    pub partitions: Vec<Vec<Vec<usize>>>,
}

/// Set partitions of `0..n` via restricted growth strings, finest first and
/// the single block last.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == rgs.len() {
            let mut blocks = vec![Vec::new(); max + 1];
            for (k, &b) in rgs.iter().enumerate() {
                blocks[b].push(k);
            }
            out.push(blocks);
            return;
        }
        for b in (0..=max + 1).rev() {
            rgs[i] = b;
            rec(i + 1, max.max(b), rgs, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    rec(1, 0, &mut vec![0; n], &mut out);
    out
}

pub fn bell_number(n: usize) -> u64 {
    // Bell triangle.
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().expect("nonempty")];
        for &x in &row {
            next.push(next.last().expect("nonempty") + x);
        }
        row = next;
    }
    row[0]
}

pub fn enumerate_valid_partitions(e: &Ensemble, subset: &[usize], party: usize, tol: f64) -> Result<PartitionFamily> {
    if subset.is_empty() {
        return Err(Error::InvalidMode("partition family of an empty subset".into()));
    }
    let components = partition_at(e, subset, party, tol)?.blocks;
    let partitions = set_partitions(components.len())
        .into_iter()
        .map(|groups| {
            groups
                .into_iter()
                .map(|g| {
                    let mut block: Vec<usize> = g.iter().flat_map(|&c| components[c].iter().copied()).collect();
                    block.sort_unstable();
                    block
                })
                .collect()
        })
        .collect();
    Ok(PartitionFamily { party, components, partitions })
}

/// Whether measuring the projectors onto the block spans at `party` keeps
/// every state intact: each state is annihilated by every other block's
/// projector.
pub fn is_intactness_preserving(e: &Ensemble, blocks: &[Vec<usize>], party: usize, tol: f64) -> Result<bool> {
    let spans = blocks.iter().map(|b| block_span(e, b, party, tol)).collect::<Result<Vec<_>>>()?;
    for (a, span) in spans.iter().enumerate() {
        for (b, block) in blocks.iter().enumerate() {
            if a == b {
                continue;
            }
            for &i in block {
                let (_, weight) = project_onto(span, e.local(i, party), tol)?;
                if weight > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

type Mask = u32;

fn mask_of(indices: &[usize]) -> Mask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

fn indices_of(mask: Mask) -> Vec<usize> {
    (0..Mask::BITS as usize).filter(|&i| mask & (1 << i) != 0).collect()
}

/// How a distinguishable subset is split: a party and a partition.
#[derive(Debug, Clone)]
struct Witness {
    party: usize,
    blocks: Vec<Vec<usize>>,
}

struct Search<'a> {
    e: &'a Ensemble,
    tol: f64,
    memo: HashMap<Mask, Option<Witness>>,
}

impl Search<'_> {
    fn distinguishable(&mut self, mask: Mask) -> Result<bool> {
        if mask.count_ones() <= 1 {
            return Ok(true);
        }
        if let Some(w) = self.memo.get(&mask) {
            return Ok(w.is_some());
        }
        let subset = indices_of(mask);
        let mut found = None;
        'parties: for party in 0..self.e.parties() {
            let family = enumerate_valid_partitions(self.e, &subset, party, self.tol)?;
            for blocks in family.partitions {
                if blocks.len() < 2 {
                    continue;
                }
                let mut all = true;
                for b in &blocks {
                    if !self.distinguishable(mask_of(b))? {
                        all = false;
                        break;
                    }
                }
                if all {
                    found = Some(Witness { party, blocks });
                    break 'parties;
                }
            }
        }
        let ok = found.is_some();
        self.memo.insert(mask, found);
        Ok(ok)
    }

    fn tree(&self, mask: Mask) -> Result<ProtocolTree> {
        let subset = indices_of(mask);
        if subset.len() == 1 {
            return Ok(ProtocolTree::Leaf(self.e.label(subset[0]).to_owned()));
        }
        let w = self.memo[&mask].as_ref().expect("tree requested for a distinguishable subset");
        let outcomes = w
            .blocks
            .iter()
            .map(|b| {
                Ok(Outcome {
                    block: b.iter().map(|&i| self.e.label(i).to_owned()).collect(),
                    basis: block_span(self.e, b, w.party, self.tol)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let children = w.blocks.iter().map(|b| self.tree(mask_of(b))).collect::<Result<Vec<_>>>()?;
        Ok(ProtocolTree::Node { step: MeasurementStep { party: w.party, outcomes }, children })
    }

    /// Follows component splits into non-distinguishable blocks until no
    /// party can split.
    fn stuck(&mut self, mask: Mask) -> Result<Vec<usize>> {
        let subset = indices_of(mask);
        for party in 0..self.e.parties() {
            let p = partition_at(self.e, &subset, party, self.tol)?;
            if p.len() >= 2 {
                for b in &p.blocks {
                    let m = mask_of(b);
                    if !self.distinguishable(m)? {
                        return self.stuck(m);
                    }
                }
                return Err(Error::NumericalInstability(
                    "component blocks are all distinguishable but their union is not".into(),
                ));
            }
        }
        Ok(subset)
    }
}

/// Memoized search over all intactness-preserving projective measurements.
pub fn exhaustive_decide(e: &Ensemble, tol: f64) -> Result<Verdict> {
    let total: usize = e.dims().iter().product();
    if total > ORACLE_MAX_DIM {
        return Err(Error::TooLarge(format!(
            "oracle handles total dimension up to {ORACLE_MAX_DIM}, {:?} has {total}",
            e.name()
        )));
    }
    check_mode(e, Mode::Complete, tol)?;
    let mut search = Search { e, tol, memo: HashMap::new() };
    let root = mask_of(&e.all_indices());
    if search.distinguishable(root)? {
        return Ok(Verdict::Distinguishable(search.tree(root)?));
    }
    let stuck = search.stuck(root)?;
    Ok(Verdict::Indistinguishable { certificate: stuck_certificate(e, &stuck, tol)?, trace: None })
}
