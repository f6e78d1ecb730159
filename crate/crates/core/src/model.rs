//! Problem data: parties, preference arrays, families and matchings.
//!
//! Elements are addressed by `(party, member)` index pairs. Labels only exist
//! so that instances and matchings can be read from and written to JSON.
//! Ranks are 1-based (rank 1 is the most preferred member of a party), every
//! other index is 0-based.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementRef {
    pub party: usize,
    pub member: usize,
}

impl ElementRef {
    pub const fn new(party: usize, member: usize) -> Self {
        ElementRef { party, member }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.party, self.member)
    }
}

/// One broken invariant found while validating an instance document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Label of the element whose row is at fault, when there is one.
    pub element: Option<String>,
    /// Name of the target party of the faulty row, when there is one.
    pub party: Option<String>,
    pub message: String,
}

impl Violation {
    fn global(message: impl Into<String>) -> Self {
        Violation {
            element: None,
            party: None,
            message: message.into(),
        }
    }

    fn row(element: &str, party: &str, message: impl Into<String>) -> Self {
        Violation {
            element: Some(element.to_owned()),
            party: Some(party.to_owned()),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.element, &self.party) {
            (Some(e), Some(p)) => write!(f, "element '{e}', row for party '{p}': {}", self.message),
            (Some(e), None) => write!(f, "element '{e}': {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(self.violations))
        }
    }
}

/// On-disk form of an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub parties: Vec<PartyDoc>,
    pub prefs: IndexMap<String, IndexMap<String, Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartyDoc {
    pub name: String,
    pub members: Vec<String>,
}

/// On-disk form of a matching: one label list per family, in party order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingDoc {
    pub families: Vec<Vec<String>>,
}

/// A validated pDSM instance with precomputed rank tables.
///
/// Rows are stored densely: slot `((party * n + member) * p + target) * n + k`
/// holds the k-th choice of that element within party `target`, and the same
/// slot in `ranks` holds the 1-based rank of member `k` of `target`. Slots for
/// an element's own party hold the identity and are never read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    p: usize,
    n: usize,
    party_names: Vec<String>,
    labels: Vec<Vec<String>>,
    rows: Vec<usize>,
    ranks: Vec<usize>,
}

/// `rows[party][member][target]` is the ranking of `target`'s members, best
/// first. The entry for the element's own party is ignored.
pub type IndexRows = Vec<Vec<Vec<Vec<usize>>>>;

impl Instance {
    /// Builds an instance from index-level preference rows.
    pub fn from_rows(party_names: Vec<String>, labels: Vec<Vec<String>>, rows: IndexRows) -> Result<Instance> {
        let mut violations = check_shape(&party_names, &labels);
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let p = party_names.len();
        let n = labels[0].len();
        if rows.len() != p || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInstance(vec![Violation::global(
                "preference rows do not match the party layout",
            )]));
        }
        for (a, party_rows) in rows.iter().enumerate() {
            for (i, elem_rows) in party_rows.iter().enumerate() {
                if elem_rows.len() != p {
                    violations.push(Violation {
                        element: Some(labels[a][i].clone()),
                        party: None,
                        message: format!("has {} rows, expected one slot per party ({p})", elem_rows.len()),
                    });
                    continue;
                }
                for (b, row) in elem_rows.iter().enumerate() {
                    if b != a {
                        check_row(row, n, &labels[a][i], &party_names[b], &labels[b], &mut violations);
                    }
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        Ok(Self::assemble(party_names, labels, |a, i, b| rows[a][i][b].clone()))
    }

    /// Builds an instance from its document form, reporting every violation.
    pub fn from_doc(doc: &InstanceDoc) -> Result<Instance> {
        let (report, rows) = validate_doc(doc);
        report.into_result()?;
        let rows = rows.expect("validated document yields rows");
        let names = doc.parties.iter().map(|p| p.name.clone()).collect();
        let labels = doc.parties.iter().map(|p| p.members.clone()).collect();
        Ok(Self::assemble(names, labels, |a, i, b| rows[a][i][b].clone()))
    }

    fn assemble(
        party_names: Vec<String>,
        labels: Vec<Vec<String>>,
        row_of: impl Fn(usize, usize, usize) -> Vec<usize>,
    ) -> Instance {
        let p = party_names.len();
        let n = labels[0].len();
        let mut rows = vec![0; p * n * p * n];
        let mut ranks = vec![0; p * n * p * n];
        for a in 0..p {
            for i in 0..n {
                for b in 0..p {
                    let base = ((a * n + i) * p + b) * n;
                    let row = if a == b { (0..n).collect() } else { row_of(a, i, b) };
                    for (k, &m) in row.iter().enumerate() {
                        rows[base + k] = m;
                        ranks[base + m] = k + 1;
                    }
                }
            }
        }
        Instance {
            p,
            n,
            party_names,
            labels,
            rows,
            ranks,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn party_names(&self) -> &[String] {
        &self.party_names
    }

    pub fn party_name(&self, party: usize) -> &str {
        &self.party_names[party]
    }

    pub fn labels(&self, party: usize) -> &[String] {
        &self.labels[party]
    }

    pub fn label(&self, x: ElementRef) -> &str {
        &self.labels[x.party][x.member]
    }

    /// Looks an element up by its label.
    pub fn find(&self, label: &str) -> Option<ElementRef> {
        self.labels
            .iter()
            .enumerate()
            .find_map(|(a, ms)| ms.iter().position(|m| m == label).map(|i| ElementRef::new(a, i)))
    }

    pub fn contains(&self, x: ElementRef) -> bool {
        x.party < self.p && x.member < self.n
    }

    #[inline]
    fn slot(&self, party: usize, member: usize, target: usize) -> usize {
        ((party * self.n + member) * self.p + target) * self.n
    }

    /// The ranking `x` holds over `target`'s members, best first.
    pub fn row(&self, x: ElementRef, target: usize) -> Result<&[usize]> {
        self.check_pair(x, target)?;
        let s = self.slot(x.party, x.member, target);
        Ok(&self.rows[s..s + self.n])
    }

    /// 1-based position of `y` in the row `x` holds for `y`'s party.
    pub fn rank(&self, x: ElementRef, y: ElementRef) -> Result<usize> {
        self.check_pair(x, y.party)?;
        if y.member >= self.n {
            return Err(Error::PartyOutOfRange {
                party: y.party,
                parties: self.p,
            });
        }
        Ok(self.rank_of(x.party, x.member, y.party, y.member))
    }

    /// Unchecked rank lookup for the hot loops.
    #[inline]
    pub(crate) fn rank_of(&self, party: usize, member: usize, target: usize, other: usize) -> usize {
        debug_assert_ne!(party, target);
        self.ranks[self.slot(party, member, target) + other]
    }

    #[inline]
    pub(crate) fn choice(&self, party: usize, member: usize, target: usize, k: usize) -> usize {
        self.rows[self.slot(party, member, target) + k]
    }

    /// True when `x` strictly prefers `a` to `b` (both members of one party).
    pub fn prefers(&self, x: ElementRef, a: ElementRef, b: ElementRef) -> Result<bool> {
        Ok(self.rank(x, a)? < self.rank(x, b)?)
    }

    fn check_pair(&self, x: ElementRef, target: usize) -> Result<()> {
        for party in [x.party, target] {
            if party >= self.p {
                return Err(Error::PartyOutOfRange { party, parties: self.p });
            }
        }
        if x.member >= self.n {
            return Err(Error::NotInMatching(x));
        }
        if x.party == target {
            return Err(Error::SameParty { party: target });
        }
        Ok(())
    }

    /// The subproblem over `parties` (in the given order), with labels and
    /// rows carried over unchanged.
    pub fn restrict(&self, parties: &[usize]) -> Result<Instance> {
        for &a in parties {
            if a >= self.p {
                return Err(Error::PartyOutOfRange {
                    party: a,
                    parties: self.p,
                });
            }
        }
        let names = parties.iter().map(|&a| self.party_names[a].clone()).collect();
        let labels = parties.iter().map(|&a| self.labels[a].clone()).collect();
        let n = self.n;
        Ok(Self::assemble(names, labels, |a, i, b| {
            let s = self.slot(parties[a], i, parties[b]);
            self.rows[s..s + n].to_vec()
        }))
    }

    pub fn to_doc(&self) -> InstanceDoc {
        let parties = self
            .party_names
            .iter()
            .zip(&self.labels)
            .map(|(name, members)| PartyDoc {
                name: name.clone(),
                members: members.clone(),
            })
            .collect();
        let mut prefs = IndexMap::new();
        for a in 0..self.p {
            for i in 0..self.n {
                let mut rows = IndexMap::new();
                for b in (0..self.p).filter(|&b| b != a) {
                    let s = self.slot(a, i, b);
                    let row = self.rows[s..s + self.n]
                        .iter()
                        .map(|&m| self.labels[b][m].clone())
                        .collect();
                    rows.insert(self.party_names[b].clone(), row);
                }
                prefs.insert(self.labels[a][i].clone(), rows);
            }
        }
        InstanceDoc { parties, prefs }
    }
}

fn check_shape(party_names: &[String], labels: &[Vec<String>]) -> Vec<Violation> {
    let mut out = Vec::new();
    if party_names.len() < 2 {
        out.push(Violation::global(format!(
            "an instance needs at least 2 parties, found {}",
            party_names.len()
        )));
    }
    if labels.len() != party_names.len() {
        out.push(Violation::global("party names and member lists differ in length"));
        return out;
    }
    let n = labels.first().map_or(0, |m| m.len());
    if n == 0 {
        out.push(Violation::global("parties must have at least one member"));
    }
    for (name, members) in party_names.iter().zip(labels) {
        if members.len() != n {
            out.push(Violation::global(format!(
                "party '{name}' has {} members, expected {n} like the first party",
                members.len()
            )));
        }
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for label in party_names.iter().chain(labels.iter().flatten()) {
        *seen.entry(label.as_str()).or_default() += 1;
    }
    let mut dups: Vec<_> = seen.into_iter().filter(|&(_, c)| c > 1).map(|(l, _)| l).collect();
    dups.sort_unstable();
    for d in dups {
        out.push(Violation::global(format!("label '{d}' is used more than once")));
    }
    out
}

fn check_row(row: &[usize], n: usize, element: &str, party: &str, party_labels: &[String], out: &mut Vec<Violation>) {
    if row.len() != n {
        out.push(Violation::row(
            element,
            party,
            format!("row has {} of {n} entries", row.len()),
        ));
    }
    let mut seen = vec![false; n];
    for &m in row {
        if m >= n {
            out.push(Violation::row(element, party, format!("member index {m} out of range")));
        } else if std::mem::replace(&mut seen[m], true) {
            out.push(Violation::row(
                element,
                party,
                format!("row lists '{}' more than once", party_labels[m]),
            ));
        }
    }
}

/// Checks every instance invariant on a document.
pub fn validate(doc: &InstanceDoc) -> ValidationReport {
    validate_doc(doc).0
}

fn validate_doc(doc: &InstanceDoc) -> (ValidationReport, Option<IndexRows>) {
    let names: Vec<String> = doc.parties.iter().map(|p| p.name.clone()).collect();
    let labels: Vec<Vec<String>> = doc.parties.iter().map(|p| p.members.clone()).collect();
    let mut violations = check_shape(&names, &labels);
    if !violations.is_empty() {
        return (ValidationReport { violations }, None);
    }
    let p = names.len();
    let n = labels[0].len();
    let party_index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let member_index: HashMap<&str, ElementRef> = labels
        .iter()
        .enumerate()
        .flat_map(|(a, ms)| {
            ms.iter()
                .enumerate()
                .map(move |(i, m)| (m.as_str(), ElementRef::new(a, i)))
        })
        .collect();

    let mut rows: IndexRows = vec![vec![vec![Vec::new(); p]; n]; p];
    for key in doc.prefs.keys() {
        if !member_index.contains_key(key.as_str()) {
            violations.push(Violation::global(format!("prefs given for unknown element '{key}'")));
        }
    }
    for (a, members) in labels.iter().enumerate() {
        for (i, label) in members.iter().enumerate() {
            let Some(entry) = doc.prefs.get(label) else {
                violations.push(Violation {
                    element: Some(label.clone()),
                    party: None,
                    message: "has no preference rows".into(),
                });
                continue;
            };
            for target in entry.keys() {
                match party_index.get(target.as_str()) {
                    None => violations.push(Violation::row(label, target, "unknown party")),
                    Some(&b) if b == a => {
                        violations.push(Violation::row(label, target, "row for the element's own party"))
                    }
                    Some(_) => {}
                }
            }
            for b in (0..p).filter(|&b| b != a) {
                let Some(row) = entry.get(&names[b]) else {
                    violations.push(Violation::row(label, &names[b], "row is missing"));
                    continue;
                };
                let mut idx = Vec::with_capacity(row.len());
                for y in row {
                    match member_index.get(y.as_str()) {
                        Some(r) if r.party == b => idx.push(r.member),
                        _ => violations.push(Violation::row(
                            label,
                            &names[b],
                            format!("'{y}' is not a member of party '{}'", names[b]),
                        )),
                    }
                }
                if idx.len() == row.len() {
                    check_row(&idx, n, label, &names[b], &labels[b], &mut violations);
                } else if row.len() != n {
                    violations.push(Violation::row(
                        label,
                        &names[b],
                        format!("row has {} of {n} entries", row.len()),
                    ));
                }
                rows[a][i][b] = idx;
            }
        }
    }
    let ok = violations.is_empty();
    (ValidationReport { violations }, ok.then_some(rows))
}

/// One member per party, stored by member index in party order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Family {
    members: Vec<usize>,
}

impl Family {
    pub fn new(members: Vec<usize>) -> Family {
        Family { members }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn member(&self, party: usize) -> ElementRef {
        ElementRef::new(party, self.members[party])
    }

    /// Member indices in party order.
    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    pub fn elements(&self) -> impl Iterator<Item = ElementRef> + '_ {
        self.members.iter().enumerate().map(|(a, &m)| ElementRef::new(a, m))
    }
}

/// A partition of the community into `n` families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    p: usize,
    n: usize,
    families: Vec<Family>,
    /// `family_of[party * n + member]` is the family holding that element.
    family_of: Vec<usize>,
}

impl Matching {
    /// Builds a matching over `p` parties of `n` members, checking that the
    /// families partition the community. `p == 1` is allowed; it describes
    /// a single party split into singletons.
    pub fn new(p: usize, n: usize, families: Vec<Family>) -> Result<Matching> {
        if families.len() != n {
            return Err(Error::InvalidMatching(format!(
                "expected {n} families, found {}",
                families.len()
            )));
        }
        let mut family_of = vec![usize::MAX; p * n];
        for (f, family) in families.iter().enumerate() {
            if family.size() != p {
                return Err(Error::InvalidMatching(format!(
                    "family {f} has {} members, expected {p}",
                    family.size()
                )));
            }
            for x in family.elements() {
                if x.member >= n {
                    return Err(Error::InvalidMatching(format!(
                        "member index {} out of range",
                        x.member
                    )));
                }
                let slot = &mut family_of[x.party * n + x.member];
                if *slot != usize::MAX {
                    return Err(Error::InvalidMatching(format!(
                        "element {x} appears in families {} and {f}",
                        *slot
                    )));
                }
                *slot = f;
            }
        }
        Ok(Matching {
            p,
            n,
            families,
            family_of,
        })
    }

    /// The n singleton families of a single party.
    pub fn singletons(n: usize) -> Matching {
        Matching::new(1, n, (0..n).map(|i| Family::new(vec![i])).collect()).expect("singletons form a partition")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn family_index(&self, x: ElementRef) -> Result<usize> {
        if x.party >= self.p || x.member >= self.n {
            return Err(Error::NotInMatching(x));
        }
        Ok(self.family_of[x.party * self.n + x.member])
    }

    pub fn family_of(&self, x: ElementRef) -> Result<&Family> {
        Ok(&self.families[self.family_index(x)?])
    }

    /// `x`'s relative from `party`; `x` itself when `party` is its own.
    pub fn relative(&self, x: ElementRef, party: usize) -> Result<ElementRef> {
        if party >= self.p {
            return Err(Error::PartyOutOfRange { party, parties: self.p });
        }
        Ok(self.family_of(x)?.member(party))
    }

    #[inline]
    pub(crate) fn relative_member(&self, party: usize, member: usize, target: usize) -> usize {
        self.families[self.family_of[party * self.n + member]].members[target]
    }

    pub fn contains_family(&self, family: &Family) -> bool {
        self.contains_members(&family.members)
    }

    /// As [`Matching::contains_family`] for a bare member-index slice.
    pub fn contains_members(&self, members: &[usize]) -> bool {
        if members.len() != self.p || members.iter().any(|&m| m >= self.n) {
            return false;
        }
        let f = self.family_of[members[0]];
        members
            .iter()
            .enumerate()
            .all(|(a, &m)| self.family_of[a * self.n + m] == f)
    }

    /// Same partition with families ordered by their party-0 member.
    pub fn canonical(mut self) -> Matching {
        self.families.sort_by_key(|f| f.members[0]);
        for (f, family) in self.families.iter().enumerate() {
            for (a, &m) in family.members.iter().enumerate() {
                self.family_of[a * self.n + m] = f;
            }
        }
        self
    }

    pub fn is_valid_for(&self, instance: &Instance) -> bool {
        self.p == instance.p() && self.n == instance.n()
    }

    pub fn to_doc(&self, instance: &Instance) -> MatchingDoc {
        MatchingDoc {
            families: self
                .families
                .iter()
                .map(|f| f.elements().map(|x| instance.label(x).to_owned()).collect())
                .collect(),
        }
    }

    pub fn from_doc(doc: &MatchingDoc, instance: &Instance) -> Result<Matching> {
        let mut families = Vec::with_capacity(doc.families.len());
        for (f, labels) in doc.families.iter().enumerate() {
            if labels.len() != instance.p() {
                return Err(Error::InvalidMatching(format!(
                    "family {f} has {} members, expected {}",
                    labels.len(),
                    instance.p()
                )));
            }
            let mut members = Vec::with_capacity(labels.len());
            for (a, label) in labels.iter().enumerate() {
                match instance.find(label) {
                    Some(x) if x.party == a => members.push(x.member),
                    Some(_) => {
                        return Err(Error::InvalidMatching(format!(
                            "family {f}: '{label}' is not a member of party '{}'",
                            instance.party_name(a)
                        )))
                    }
                    None => return Err(Error::InvalidMatching(format!("family {f}: unknown element '{label}'"))),
                }
            }
            families.push(Family::new(members));
        }
        Matching::new(instance.p(), instance.n(), families)
    }
}

fn to_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn read_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Instance::from_doc(&doc)
}

pub fn write_instance(instance: &Instance) -> String {
    to_text(&instance.to_doc())
}

pub fn read_matching(text: &str, instance: &Instance) -> Result<Matching> {
    let doc: MatchingDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Matching::from_doc(&doc, instance)
}

pub fn write_matching(matching: &Matching, instance: &Instance) -> String {
    to_text(&matching.to_doc(instance))
}

pub(crate) fn write_json<T: Serialize>(value: &T) -> String {
    to_text(value)
}
