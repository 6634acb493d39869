//! Developer identity unification across the tracker and the VCS.
//!
//! Every distinct `(system, name, login)` triple is a node. Nodes are merged
//! when their normalised logins are equal (within or across systems) and,
//! across systems only, when their normalised full names are equal. User ids
//! are dense and follow first appearance, tracker people first.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::model::{DeveloperIdentity, IdentitySource, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Person {
    pub name: String,
    /// Nickname or e-mail address.
    pub login: String,
}

impl Person {
    pub fn new(name: impl Into<String>, login: impl Into<String>) -> Self {
        Person {
            name: name.into(),
            login: login.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.name.trim().is_empty() && self.login.trim().is_empty()
    }
}

pub fn normalize_login(login: &str) -> String {
    login.trim().to_lowercase()
}

/// Lower-case, diacritics stripped, whitespace collapsed.
pub fn normalize_name(name: &str) -> String {
    let stripped: String = name.nfd().filter(|c| !is_combining_mark(*c)).collect();
    stripped
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

type NodeKey = (IdentitySource, String, String);

#[derive(Debug, Clone, Default)]
pub struct Identities {
    pub identities: Vec<DeveloperIdentity>,
    lookup: HashMap<NodeKey, UserId>,
}

impl Identities {
    pub fn resolve(&self, source: IdentitySource, person: &Person) -> Option<UserId> {
        if person.is_empty() {
            return None;
        }
        self.lookup
            .get(&(source, normalize_name(&person.name), normalize_login(&person.login)))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Keeps the smaller index as root so roots are first-seen nodes.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

pub fn unify_identities(issue_people: &[Person], commit_people: &[Person]) -> Identities {
    let mut nodes: Vec<(NodeKey, &Person)> = Vec::new();
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let tagged = issue_people
        .iter()
        .map(|p| (IdentitySource::IssueTracker, p))
        .chain(commit_people.iter().map(|p| (IdentitySource::VersionControl, p)));
    for (source, person) in tagged {
        if person.is_empty() {
            continue;
        }
        let key = (source, normalize_name(&person.name), normalize_login(&person.login));
        if !index.contains_key(&key) {
            index.insert(key.clone(), nodes.len());
            nodes.push((key, person));
        }
    }

    let mut uf = UnionFind::new(nodes.len());
    let mut by_login: HashMap<&str, usize> = HashMap::new();
    let mut by_name: HashMap<(IdentitySource, &str), usize> = HashMap::new();
    for (i, ((source, name, login), _)) in nodes.iter().enumerate() {
        if !login.is_empty() {
            match by_login.get(login.as_str()) {
                Some(&j) => uf.union(i, j),
                None => {
                    by_login.insert(login, i);
                }
            }
        }
        if !name.is_empty() {
            by_name.entry((*source, name.as_str())).or_insert(i);
        }
    }
    for (i, ((source, name, _), _)) in nodes.iter().enumerate() {
        if name.is_empty() {
            continue;
        }
        let other = match source {
            IdentitySource::IssueTracker => IdentitySource::VersionControl,
            IdentitySource::VersionControl => IdentitySource::IssueTracker,
        };
        if let Some(&j) = by_name.get(&(other, name.as_str())) {
            uf.union(i, j);
        }
    }

    let mut root_to_id: HashMap<usize, UserId> = HashMap::new();
    let mut identities: Vec<DeveloperIdentity> = Vec::new();
    let mut lookup = HashMap::new();
    for i in 0..nodes.len() {
        let root = uf.find(i);
        let id = *root_to_id.entry(root).or_insert_with(|| {
            let id = UserId(identities.len() as u32);
            identities.push(DeveloperIdentity {
                user_id: id,
                names: BTreeSet::new(),
                logins: BTreeSet::new(),
                sources: BTreeSet::new(),
            });
            id
        });
        let ((source, _, login), person) = &nodes[i];
        let identity = &mut identities[id.0 as usize];
        if !person.name.trim().is_empty() {
            identity.names.insert(person.name.trim().to_string());
        }
        if !login.is_empty() {
            identity.logins.insert(login.clone());
        }
        identity.sources.insert(*source);
        lookup.insert(nodes[i].0.clone(), id);
    }
    Identities { identities, lookup }
}
