#![allow(dead_code)]

use pdsm::model::{ElementRef, IndexRows, Instance};

/// Index-level rows of `inst`, in the layout `Instance::from_rows` takes.
pub fn rows(inst: &Instance) -> IndexRows {
    let (p, n) = (inst.p(), inst.n());
    (0..p)
        .map(|a| {
            (0..n)
                .map(|i| {
                    (0..p)
                        .map(|b| {
                            if a == b {
                                Vec::new()
                            } else {
                                inst.row(ElementRef::new(a, i), b).unwrap().to_vec()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn names_and_labels(inst: &Instance) -> (Vec<String>, Vec<Vec<String>>) {
    let names = inst.party_names().to_vec();
    let labels = (0..inst.p()).map(|a| inst.labels(a).to_vec()).collect();
    (names, labels)
}

/// Renames the members of `party`: old member `i` becomes member `sigma[i]`,
/// carrying its label and preferences, and every row mentioning the party is
/// rewritten to match.
pub fn permute_members(inst: &Instance, party: usize, sigma: &[usize]) -> Instance {
    let old = rows(inst);
    let (names, mut labels) = names_and_labels(inst);
    let mut new = old.clone();
    for (a, party_rows) in old.iter().enumerate() {
        for (i, row) in party_rows.iter().enumerate() {
            let target_i = if a == party { sigma[i] } else { i };
            for (b, list) in row.iter().enumerate() {
                new[a][target_i][b] = if b == party {
                    list.iter().map(|&y| sigma[y]).collect()
                } else {
                    list.clone()
                };
            }
        }
    }
    let old_labels = labels[party].clone();
    for (i, label) in old_labels.into_iter().enumerate() {
        labels[party][sigma[i]] = label;
    }
    Instance::from_rows(names, labels, new).unwrap()
}

/// Two-party instance from 0-based rows.
pub fn two_party(men: &[Vec<usize>], women: &[Vec<usize>]) -> Instance {
    let n = men.len();
    let names = vec!["M".to_string(), "W".to_string()];
    let labels = vec![
        (1..=n).map(|i| format!("m{i}")).collect(),
        (1..=n).map(|i| format!("w{i}")).collect(),
    ];
    let rows = vec![
        men.iter().map(|r| vec![Vec::new(), r.clone()]).collect(),
        women.iter().map(|r| vec![r.clone(), Vec::new()]).collect(),
    ];
    Instance::from_rows(names, labels, rows).unwrap()
}
