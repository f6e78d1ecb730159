//! Problem partitions, reduced problems and expansion.
//!
//! Solving every block of a partition yields block families; the reduced
//! problem treats each block as a party and each block family as a single
//! individual. A family `F` ranks the families `G` of another block by the
//! score `sum over x in F, y in G of rank(x, y)`, lowest first. Equal scores
//! are broken by ascending family index and counted in `ties_broken`.
//! Scores are `u64`; the largest possible score is `p^2 * n`.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{write_json, ElementRef, Family, Instance, Matching};

/// A grouping of party indices into at least two blocks, not all of size 1.
/// Stored canonically: indices ascending within a block, blocks ordered by
/// their smallest index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(p: usize, blocks: Vec<Vec<usize>>) -> Result<Partition> {
        let mut blocks = blocks;
        let mut seen = vec![false; p];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &a in block.iter() {
                if a >= p {
                    return Err(Error::InvalidPartition(format!(
                        "party index {a} out of range for {p} parties"
                    )));
                }
                if std::mem::replace(&mut seen[a], true) {
                    return Err(Error::InvalidPartition(format!("party {a} appears in two blocks")));
                }
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("party {a} is in no block")));
        }
        if blocks.len() < 2 {
            return Err(Error::InvalidPartition(
                "a problem partition needs at least 2 blocks".into(),
            ));
        }
        if blocks.iter().all(|b| b.len() == 1) {
            return Err(Error::InvalidPartition("all blocks are singletons".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of parties covered.
    pub fn parties(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Every problem partition of `p` parties, in a fixed order.
    pub fn all(p: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        // restricted growth strings
        let mut rgs = vec![0usize; p];
        loop {
            let k = rgs.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); k];
            for (a, &b) in rgs.iter().enumerate() {
                blocks[b].push(a);
            }
            if let Ok(part) = Partition::new(p, blocks) {
                out.push(part);
            }
            let mut i = p;
            loop {
                if i <= 1 {
                    return out;
                }
                i -= 1;
                let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
                if rgs[i] < bound {
                    rgs[i] += 1;
                    for r in rgs.iter_mut().skip(i + 1) {
                        *r = 0;
                    }
                    break;
                }
            }
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// A reduced problem together with everything needed to expand its
/// matchings back onto the base problem.
#[derive(Clone, Debug)]
pub struct ReducedInstance {
    pub base: Arc<Instance>,
    pub partition: Partition,
    /// One matching per block over that block's parties, in block order.
    pub block_matchings: Vec<Matching>,
    pub derived: Arc<Instance>,
    /// `scores[q][f][r][g]`: score of family `g` of block `r` for family
    /// `f` of block `q`. Zero when `q == r`.
    pub scores: Vec<Vec<Vec<Vec<u64>>>>,
    /// Adjacent equal scores across all derived rows.
    pub ties_broken: usize,
}

pub fn block_name(base: &Instance, block: &[usize]) -> String {
    block.iter().map(|&a| base.party_name(a)).collect::<Vec<_>>().join("+")
}

/// Sum of `rank(x, y)` over `x` in `f` (parties `fq`) and `y` in `g`
/// (parties `gr`).
fn score(base: &Instance, fq: &[usize], f: &Family, gr: &[usize], g: &Family) -> u64 {
    let mut total = 0u64;
    for (a, &pa) in fq.iter().enumerate() {
        let x = f.indices()[a];
        for (b, &pb) in gr.iter().enumerate() {
            total += base.rank_of(pa, x, pb, g.indices()[b]) as u64;
        }
    }
    total
}

/// Builds the reduced problem of `base` over `partition`.
pub fn reduce(base: Arc<Instance>, partition: &Partition, block_matchings: Vec<Matching>) -> Result<ReducedInstance> {
    let blocks = partition.blocks();
    let n = base.n();
    if partition.parties() != base.p() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} parties, instance has {}",
            partition.parties(),
            base.p()
        )));
    }
    if block_matchings.len() != blocks.len() {
        return Err(Error::InvalidMatching(format!(
            "{} block matchings for {} blocks",
            block_matchings.len(),
            blocks.len()
        )));
    }
    for (q, (block, m)) in blocks.iter().zip(&block_matchings).enumerate() {
        if m.p() != block.len() || m.n() != n {
            return Err(Error::InvalidMatching(format!(
                "block {q} matching is {}x{}, block needs {}x{n}",
                m.p(),
                m.n(),
                block.len()
            )));
        }
    }

    let k = blocks.len();
    let mut scores = vec![vec![vec![Vec::new(); k]; n]; k];
    let mut rows: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![vec![Vec::new(); k]; n]; k];
    let mut ties_broken = 0;
    for q in 0..k {
        for (f, fam) in block_matchings[q].families().iter().enumerate() {
            for r in (0..k).filter(|&r| r != q) {
                let s: Vec<u64> = block_matchings[r]
                    .families()
                    .iter()
                    .map(|g| score(&base, &blocks[q], fam, &blocks[r], g))
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&g| (s[g], g));
                ties_broken += order.windows(2).filter(|w| s[w[0]] == s[w[1]]).count();
                rows[q][f][r] = order;
                scores[q][f][r] = s;
            }
        }
    }

    let names: Vec<String> = blocks.iter().map(|b| block_name(&base, b)).collect();
    let labels = names
        .iter()
        .map(|name| (0..n).map(|f| format!("{name}:{f}")).collect())
        .collect();
    let derived = Instance::from_rows(names, labels, rows)?;
    Ok(ReducedInstance {
        base,
        partition: partition.clone(),
        block_matchings,
        derived: Arc::new(derived),
        scores,
        ties_broken,
    })
}

/// Replaces each reduced family by the union of the block families its
/// members stand for. Works for any block layout, including a single block
/// (where it returns that block's matching).
pub fn expand_blocks(
    reduced_matching: &Matching,
    blocks: &[Vec<usize>],
    block_matchings: &[Matching],
    base_p: usize,
) -> Result<Matching> {
    if reduced_matching.p() != blocks.len() || block_matchings.len() != blocks.len() {
        return Err(Error::InvalidMatching(format!(
            "reduced matching spans {} parties, expected {}",
            reduced_matching.p(),
            blocks.len()
        )));
    }
    let n = reduced_matching.n();
    let families = reduced_matching
        .families()
        .iter()
        .map(|derived| {
            let mut members = vec![usize::MAX; base_p];
            for (q, block) in blocks.iter().enumerate() {
                let fam = &block_matchings[q].families()[derived.indices()[q]];
                for (a, &party) in block.iter().enumerate() {
                    members[party] = fam.indices()[a];
                }
            }
            Family::new(members)
        })
        .collect();
    Matching::new(base_p, n, families)
}

impl ReducedInstance {
    /// Number of rank terms that enter `score(f of q, g of r)`.
    pub fn score_terms(&self, q: usize, r: usize) -> usize {
        self.partition.blocks()[q].len() * self.partition.blocks()[r].len()
    }

    pub fn score(&self, f: ElementRef, g: ElementRef) -> u64 {
        self.scores[f.party][f.member][g.party][g.member]
    }

    /// Expands a matching of the derived problem onto the base problem.
    pub fn expand(&self, reduced_matching: &Matching) -> Result<Matching> {
        if !reduced_matching.is_valid_for(&self.derived) {
            return Err(Error::InvalidMatching(
                "matching does not fit the derived instance".into(),
            ));
        }
        expand_blocks(
            reduced_matching,
            self.partition.blocks(),
            &self.block_matchings,
            self.base.p(),
        )
    }

    /// Base elements a derived member stands for.
    pub fn provenance(&self, member: ElementRef) -> Vec<ElementRef> {
        let block = &self.partition.blocks()[member.party];
        let fam = &self.block_matchings[member.party].families()[member.member];
        block
            .iter()
            .zip(fam.indices())
            .map(|(&party, &m)| ElementRef::new(party, m))
            .collect()
    }

    pub fn provenance_doc(&self) -> ProvenanceDoc {
        let mut provenance = IndexMap::new();
        for q in 0..self.derived.p() {
            for f in 0..self.derived.n() {
                let x = ElementRef::new(q, f);
                let base = self
                    .provenance(x)
                    .into_iter()
                    .map(|e| self.base.label(e).to_owned())
                    .collect();
                provenance.insert(self.derived.label(x).to_owned(), base);
            }
        }
        ProvenanceDoc {
            provenance,
            ties_broken: self.ties_broken,
        }
    }

    pub fn provenance_json(&self) -> String {
        write_json(&self.provenance_doc())
    }
}

/// Side table written next to a derived instance file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceDoc {
    pub provenance: IndexMap<String, Vec<String>>,
    pub ties_broken: usize,
}
