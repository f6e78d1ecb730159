//! Seeded instance generation.
//!
//! Generation is deterministic for a given `(p, n, seed, profile)` in this
//! implementation; it is not meant to reproduce across implementations.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{IndexRows, Instance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Every row an independent uniform permutation.
    Uniform,
    /// Member `i` lists every foreign party in cyclic index order starting
    /// at `i`, so each member's first choices are the members sharing its
    /// index.
    Aligned,
    /// Even-indexed parties follow a random base order per target party,
    /// odd-indexed parties its reverse. Any family holding as many even as
    /// odd parties then scores every family of another block identically.
    AdversarialTies,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "uniform" => Ok(Profile::Uniform),
            "aligned" => Ok(Profile::Aligned),
            "adversarial-ties" => Ok(Profile::AdversarialTies),
            other => Err(Error::Parse(format!(
                "unknown profile '{other}', expected uniform, aligned or adversarial-ties"
            ))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Uniform => "uniform",
            Profile::Aligned => "aligned",
            Profile::AdversarialTies => "adversarial-ties",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenSpec {
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub profile: Profile,
}

impl GenSpec {
    pub fn new(p: usize, n: usize, seed: u64, profile: Profile) -> GenSpec {
        GenSpec { p, n, seed, profile }
    }

    pub fn uniform(p: usize, n: usize, seed: u64) -> GenSpec {
        GenSpec::new(p, n, seed, Profile::Uniform)
    }
}

/// `A`, `B`, ... for the first 26 parties, `P26`, `P27`, ... after that.
pub fn party_name(a: usize) -> String {
    if a < 26 {
        char::from(b'A' + a as u8).to_string()
    } else {
        format!("P{a}")
    }
}

/// `a1`, `a2`, ... for lettered parties; `p26_1`, ... otherwise.
pub fn member_label(a: usize, j: usize) -> String {
    if a < 26 {
        format!("{}{}", char::from(b'a' + a as u8), j + 1)
    } else {
        format!("p{a}_{}", j + 1)
    }
}

pub fn default_labels(p: usize, n: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let names = (0..p).map(party_name).collect();
    let labels = (0..p).map(|a| (0..n).map(|j| member_label(a, j)).collect()).collect();
    (names, labels)
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    let GenSpec { p, n, seed, profile } = *spec;
    if p < 2 || n < 1 {
        return Err(Error::Parse(format!(
            "generator needs p >= 2 and n >= 1, got p = {p}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let identity: Vec<usize> = (0..n).collect();
    let rows: IndexRows = match profile {
        Profile::Uniform => (0..p)
            .map(|a| {
                (0..n)
                    .map(|_| {
                        (0..p)
                            .map(|b| {
                                let mut row = identity.clone();
                                if b != a {
                                    row.shuffle(&mut rng);
                                }
                                row
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
        Profile::Aligned => {
            let party_rows: Vec<Vec<Vec<usize>>> =
                (0..n).map(|i| vec![(0..n).map(|k| (i + k) % n).collect(); p]).collect();
            vec![party_rows; p]
        }
        Profile::AdversarialTies => {
            let base: Vec<Vec<usize>> = (0..p)
                .map(|_| {
                    let mut row = identity.clone();
                    row.shuffle(&mut rng);
                    row
                })
                .collect();
            (0..p)
                .map(|a| {
                    let rows: Vec<Vec<usize>> = (0..p)
                        .map(|b| {
                            let mut row = base[b].clone();
                            if a % 2 == 1 {
                                row.reverse();
                            }
                            row
                        })
                        .collect();
                    vec![rows; n]
                })
                .collect()
        }
    };
    let (names, labels) = default_labels(p, n);
    Instance::from_rows(names, labels, rows)
}

/// Two-party instance on which synchronous deferred acceptance (party 0
/// proposing) needs exactly `n^2 - 2n + 2` rounds.
///
/// Proposers `i < n-1` cycle through responders `i, i+1, ...` modulo `n-1`
/// and rank responder `n-1` last; proposer `n-1` lists responders in index
/// order. Responder `j < n-1` ranks proposers `j+1, j+2, ...` modulo `n`.
/// Each round after the first frees exactly one proposer.
pub fn worst_case_rounds(n: usize) -> Instance {
    assert!(n >= 1);
    let k = n - 1;
    let proposer_row = |i: usize| -> Vec<usize> {
        if i == k {
            (0..n).collect()
        } else {
            (0..k).map(|t| (i + t) % k).chain(std::iter::once(k)).collect()
        }
    };
    let responder_row = |j: usize| -> Vec<usize> {
        if j == k {
            (0..n).collect()
        } else {
            (0..n).map(|t| (j + 1 + t) % n).collect()
        }
    };
    let rows = vec![
        (0..n).map(|i| vec![Vec::new(), proposer_row(i)]).collect(),
        (0..n).map(|j| vec![responder_row(j), Vec::new()]).collect(),
    ];
    let (names, labels) = default_labels(2, n);
    Instance::from_rows(names, labels, rows).expect("worst-case rows are permutations")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, ElementRef};

    #[test]
    fn deterministic_per_seed() {
        let spec = GenSpec::uniform(3, 4, 17);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&GenSpec::uniform(3, 4, 18)).unwrap());
    }

    #[test]
    fn every_profile_validates() {
        for profile in [Profile::Uniform, Profile::Aligned, Profile::AdversarialTies] {
            for (p, n) in [(2, 1), (3, 3), (5, 2), (4, 6)] {
                let inst = generate(&GenSpec::new(p, n, 3, profile)).unwrap();
                assert!(validate(&inst.to_doc()).is_ok());
                assert_eq!((inst.p(), inst.n()), (p, n));
            }
        }
    }

    #[test]
    fn aligned_rows_start_at_own_index() {
        let inst = generate(&GenSpec::new(3, 3, 0, Profile::Aligned)).unwrap();
        assert_eq!(inst.row(ElementRef::new(2, 1), 0).unwrap(), &[1, 2, 0]);
        assert_eq!(inst.row(ElementRef::new(0, 0), 1).unwrap(), &[0, 1, 2]);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(generate(&GenSpec::uniform(1, 3, 0)).is_err());
        assert!(generate(&GenSpec::uniform(3, 0, 0)).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(party_name(0), "A");
        assert_eq!(member_label(2, 0), "c1");
        assert_eq!(party_name(30), "P30");
        assert_eq!(member_label(30, 4), "p30_5");
    }

    #[test]
    fn profile_names_parse() {
        for profile in [Profile::Uniform, Profile::Aligned, Profile::AdversarialTies] {
            assert_eq!(profile.to_string().parse::<Profile>().unwrap(), profile);
        }
        assert!("zipf".parse::<Profile>().is_err());
    }
}
