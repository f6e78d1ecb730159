//! Two-party deferred acceptance, run in synchronous rounds.
//!
//! In each round every free proposer proposes to the next entry of its list
//! and every responder keeps the best suitor it has seen so far. Rounds are
//! bounded by `n^2 - 2n + 2`.

use crate::error::{Error, Result};
use crate::model::{ElementRef, Family, Instance, Matching};

/// Upper bound on synchronous rounds for parties of size `n`.
pub fn round_bound(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        n * n + 2 - 2 * n
    }
}

/// A stable bijection between two parties, as produced by [`gs`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bijection {
    pub proposer_party: usize,
    pub responder_party: usize,
    /// `pairs[i]` is the responder member matched to proposer member `i`.
    pub pairs: Vec<usize>,
    pub rounds_used: usize,
}

impl Bijection {
    /// Inverse map: proposer member for each responder member.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.pairs.len()];
        for (m, &w) in self.pairs.iter().enumerate() {
            inv[w] = m;
        }
        inv
    }

    /// Partner of `member` of `party`, which must be one of the two sides.
    pub fn partner(&self, party: usize, member: usize) -> Option<usize> {
        if party == self.proposer_party {
            self.pairs.get(member).copied()
        } else if party == self.responder_party {
            self.pairs.iter().position(|&w| w == member)
        } else {
            None
        }
    }

    /// The bijection as a two-party matching in (proposer, responder) order.
    pub fn to_matching(&self) -> Matching {
        let families = self
            .pairs
            .iter()
            .enumerate()
            .map(|(m, &w)| Family::new(vec![m, w]))
            .collect();
        Matching::new(2, self.pairs.len(), families).expect("a bijection is a partition")
    }
}

fn check_parties(instance: &Instance, a: usize, b: usize) -> Result<()> {
    for party in [a, b] {
        if party >= instance.p() {
            return Err(Error::PartyOutOfRange {
                party,
                parties: instance.p(),
            });
        }
    }
    if a == b {
        return Err(Error::SameParty { party: a });
    }
    Ok(())
}

/// Proposer-optimal stable bijection between `proposer` and `responder`,
/// ignoring every other party.
pub fn gs(instance: &Instance, proposer: usize, responder: usize) -> Result<Bijection> {
    check_parties(instance, proposer, responder)?;
    let n = instance.n();
    // next list position for each proposer; never rewinds
    let mut cursor = vec![0usize; n];
    let mut held: Vec<Option<usize>> = vec![None; n];
    let mut free: Vec<usize> = (0..n).collect();
    let mut rejected = Vec::with_capacity(n);
    let mut rounds = 0;

    while !free.is_empty() {
        rounds += 1;
        for &m in &free {
            let w = instance.choice(proposer, m, responder, cursor[m]);
            cursor[m] += 1;
            match held[w] {
                None => held[w] = Some(m),
                Some(cur) => {
                    if instance.rank_of(responder, w, proposer, m) < instance.rank_of(responder, w, proposer, cur) {
                        held[w] = Some(m);
                        rejected.push(cur);
                    } else {
                        rejected.push(m);
                    }
                }
            }
        }
        std::mem::swap(&mut free, &mut rejected);
        rejected.clear();
    }
    assert!(
        rounds <= round_bound(n),
        "deferred acceptance used {rounds} rounds, above the bound {} for n = {n}",
        round_bound(n)
    );

    let mut pairs = vec![0; n];
    for (w, m) in held.into_iter().enumerate() {
        pairs[m.expect("every responder holds a proposer at termination")] = w;
    }
    Ok(Bijection {
        proposer_party: proposer,
        responder_party: responder,
        pairs,
        rounds_used: rounds,
    })
}

/// Classic blocking-pair check between the two parties of `bijection`.
pub fn blocking_pairs(instance: &Instance, bijection: &Bijection) -> Vec<(ElementRef, ElementRef)> {
    let (a, b) = (bijection.proposer_party, bijection.responder_party);
    let inv = bijection.inverse();
    let mut out = Vec::new();
    for (x, &x_partner) in bijection.pairs.iter().enumerate() {
        let x_current = instance.rank_of(a, x, b, x_partner);
        for (y, &y_partner) in inv.iter().enumerate() {
            if instance.rank_of(a, x, b, y) < x_current
                && instance.rank_of(b, y, a, x) < instance.rank_of(b, y, a, y_partner)
            {
                out.push((ElementRef::new(a, x), ElementRef::new(b, y)));
            }
        }
    }
    out
}

/// True iff no proposer/responder pair strictly prefer each other to their
/// partners. `bijection` names the two parties it pairs.
pub fn is_stable_2party(instance: &Instance, bijection: &Bijection) -> bool {
    blocking_pairs(instance, bijection).is_empty()
}
