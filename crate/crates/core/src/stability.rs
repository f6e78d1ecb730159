//! Exhaustive stability oracle.
//!
//! A family `F` outside the matching blocks it when every member weakly
//! prefers each other member of `F` to its current relative from that
//! member's party, and every member strictly prefers at least one of them.
//! [`verify`] tries all `n^p` candidate families; [`enumerate_stable`] lists
//! every stable matching of a tiny instance. Neither uses any solver code.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Family, Instance, Matching};

pub const DEFAULT_MAX_CANDIDATES: u128 = 10_000_000;
pub const DEFAULT_MAX_MATCHINGS: u128 = 1_000_000;
pub const DEFAULT_WITNESS_CAP: usize = 10;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Refuse instances with more than this many candidate families.
    pub max_candidates: u128,
    /// Stop scanning once this many witnesses are collected.
    pub witness_cap: usize,
    /// Worker threads for the candidate scan; 1 scans sequentially.
    pub jobs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_candidates: DEFAULT_MAX_CANDIDATES,
            witness_cap: DEFAULT_WITNESS_CAP,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockingReport {
    pub stable: bool,
    pub witnesses: Vec<Family>,
    pub candidates_checked: u64,
}

fn check_fit(instance: &Instance, matching: &Matching) -> Result<()> {
    if !matching.is_valid_for(instance) {
        return Err(Error::InvalidMatching(format!(
            "matching is {}x{}, instance is {}x{}",
            matching.p(),
            matching.n(),
            instance.p(),
            instance.n()
        )));
    }
    Ok(())
}

/// Blocking predicate, taken literally from the definition. `candidate`
/// must not be a family of `matching`.
pub fn is_blocking(instance: &Instance, matching: &Matching, candidate: &Family) -> Result<bool> {
    check_fit(instance, matching)?;
    if candidate.size() != instance.p() || candidate.indices().iter().any(|&m| m >= instance.n()) {
        return Err(Error::InvalidMatching(
            "candidate is not a family of this instance".into(),
        ));
    }
    if matching.contains_family(candidate) {
        return Err(Error::CandidateInMatching);
    }
    Ok(blocks(instance, matching, candidate.indices()))
}

fn blocks(instance: &Instance, matching: &Matching, cand: &[usize]) -> bool {
    let p = cand.len();
    for (a, &x) in cand.iter().enumerate() {
        let mut improves = false;
        for (b, &y) in cand.iter().enumerate() {
            if a == b {
                continue;
            }
            let proposed = instance.rank_of(a, x, b, y);
            let current = instance.rank_of(a, x, b, matching.relative_member(a, x, b));
            if proposed > current {
                return false;
            }
            improves |= proposed < current;
        }
        if !improves {
            return false;
        }
    }
    p > 1
}

/// Candidate families with party-0 member fixed, last party fastest.
fn scan_from(instance: &Instance, matching: &Matching, first: usize, cap: usize) -> (Vec<Family>, u64) {
    let (p, n) = (instance.p(), instance.n());
    let mut cand = vec![0usize; p];
    cand[0] = first;
    let mut witnesses = Vec::new();
    let mut checked = 0u64;
    loop {
        if !matching.contains_members(&cand) {
            checked += 1;
            if blocks(instance, matching, &cand) {
                witnesses.push(Family::new(cand.clone()));
                if witnesses.len() >= cap {
                    return (witnesses, checked);
                }
            }
        }
        let mut i = p;
        loop {
            i -= 1;
            if i == 0 {
                return (witnesses, checked);
            }
            cand[i] += 1;
            if cand[i] < n {
                break;
            }
            cand[i] = 0;
        }
    }
}

/// Number of candidate families, `n^p`, saturating.
pub fn candidate_count(instance: &Instance) -> u128 {
    (instance.n() as u128).saturating_pow(instance.p() as u32)
}

pub fn verify(instance: &Instance, matching: &Matching) -> Result<BlockingReport> {
    verify_with(instance, matching, &VerifyOptions::default())
}

pub fn verify_with(instance: &Instance, matching: &Matching, opts: &VerifyOptions) -> Result<BlockingReport> {
    check_fit(instance, matching)?;
    let size = candidate_count(instance);
    if size > opts.max_candidates {
        return Err(Error::Guard {
            what: "exhaustive stability check",
            size,
            limit: opts.max_candidates,
        });
    }
    let cap = opts.witness_cap.max(1);
    let n = instance.n();
    let (witnesses, checked) = if opts.jobs <= 1 {
        let mut witnesses = Vec::new();
        let mut checked = 0;
        for first in 0..n {
            let (w, c) = scan_from(instance, matching, first, cap - witnesses.len());
            witnesses.extend(w);
            checked += c;
            if witnesses.len() >= cap {
                break;
            }
        }
        (witnesses, checked)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::structure("jobs", e.to_string()))?;
        let parts: Vec<(Vec<Family>, u64)> = pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|f| scan_from(instance, matching, f, cap))
                .collect()
        });
        let checked = parts.iter().map(|(_, c)| c).sum();
        let witnesses = parts.into_iter().flat_map(|(w, _)| w).take(cap).collect();
        (witnesses, checked)
    };
    Ok(BlockingReport {
        stable: witnesses.is_empty(),
        witnesses,
        candidates_checked: checked,
    })
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Every stable matching, with party 0's members in index order and the
/// other parties' permutations in lexicographic order.
pub fn enumerate_stable(instance: &Instance) -> Result<Vec<Matching>> {
    enumerate_stable_up_to(instance, DEFAULT_MAX_MATCHINGS)
}

pub fn enumerate_stable_up_to(instance: &Instance, max_matchings: u128) -> Result<Vec<Matching>> {
    let (p, n) = (instance.p(), instance.n());
    let size = factorial(n).saturating_pow(p as u32 - 1);
    if size > max_matchings {
        return Err(Error::Guard {
            what: "stable matching enumeration",
            size,
            limit: max_matchings,
        });
    }
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let opts = VerifyOptions {
        max_candidates: u128::MAX,
        witness_cap: 1,
        jobs: 1,
    };
    let mut out = Vec::new();
    for choice in (1..p).map(|_| perms.iter()).multi_cartesian_product() {
        let families = (0..n)
            .map(|i| Family::new(std::iter::once(i).chain(choice.iter().map(|perm| perm[i])).collect()))
            .collect();
        let matching = Matching::new(p, n, families)?;
        if verify_with(instance, &matching, &opts)?.stable {
            out.push(matching);
        }
    }
    Ok(out)
}
