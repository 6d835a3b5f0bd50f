//! Agents, preference profiles, matchings, and the JSON instance format.
//!
//! All types are immutable value objects after construction. Indices are
//! 0-based everywhere: agent `a_i` on the A side and `b_j` on the B side are
//! plain `usize` indices in `[0, n)`, wrapped in [`AgentId`] where the side
//! matters. Rank 0 is the most preferred partner.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which side of the market an agent belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// An agent, identified by side and index within that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl AgentId {
    pub fn a(index: usize) -> Self {
        AgentId { side: Side::A, index }
    }

    pub fn b(index: usize) -> Self {
        AgentId { side: Side::B, index }
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.side {
            Side::A => write!(f, "a_{}", self.index),
            Side::B => write!(f, "b_{}", self.index),
        }
    }
}

fn validate_permutation(what: &str, row: usize, perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidInstance(format!(
            "{what}[{row}] has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen_at = vec![usize::MAX; n];
    for (pos, &v) in perm.iter().enumerate() {
        if v >= n {
            return Err(Error::InvalidInstance(format!(
                "{what}[{row}]: value {v} at position {pos} is out of range [0, {n})"
            )));
        }
        if seen_at[v] != usize::MAX {
            return Err(Error::InvalidInstance(format!(
                "{what}[{row}]: duplicate value {v} at position {pos} (first at position {})",
                seen_at[v]
            )));
        }
        seen_at[v] = pos;
    }
    Ok(())
}

/// The known preferences of the A side: one permutation of B-indices per
/// A-agent, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    n: usize,
    lists: Vec<Vec<usize>>,
    ranks: Vec<Vec<usize>>,
}

fn rank_table(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|row| {
            let mut rank = vec![0; row.len()];
            for (pos, &v) in row.iter().enumerate() {
                rank[v] = pos;
            }
            rank
        })
        .collect()
}

impl PreferenceProfile {
    pub fn new(a_prefs: Vec<Vec<usize>>) -> Result<Self> {
        let n = a_prefs.len();
        if n == 0 {
            return Err(Error::InvalidInstance("instance must have n >= 1".into()));
        }
        for (i, row) in a_prefs.iter().enumerate() {
            validate_permutation("a_prefs", i, row, n)?;
        }
        let ranks = rank_table(&a_prefs);
        Ok(PreferenceProfile { n, lists: a_prefs, ranks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `a`'s full preference list over B, most preferred first.
    pub fn list(&self, a: usize) -> &[usize] {
        &self.lists[a]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.lists
    }

    /// Position of `b` in `a`'s list; 0 is most preferred.
    pub fn rank(&self, a: usize, b: usize) -> usize {
        self.ranks[a][b]
    }

    /// Whether `a` prefers `b1` to `b2`.
    pub fn prefers(&self, a: usize, b1: usize, b2: usize) -> bool {
        self.ranks[a][b1] < self.ranks[a][b2]
    }
}

/// A full realization of the B-side preferences. Hidden from online
/// algorithms; the ground truth behind oracles and offline computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    n: usize,
    lists: Vec<Vec<usize>>,
    ranks: Vec<Vec<usize>>,
}

impl Realization {
    pub fn new(b_prefs: Vec<Vec<usize>>) -> Result<Self> {
        let n = b_prefs.len();
        if n == 0 {
            return Err(Error::InvalidInstance("instance must have n >= 1".into()));
        }
        for (j, row) in b_prefs.iter().enumerate() {
            validate_permutation("b_prefs", j, row, n)?;
        }
        let ranks = rank_table(&b_prefs);
        Ok(Realization { n, lists: b_prefs, ranks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `b`'s full preference list over A, most preferred first.
    pub fn list(&self, b: usize) -> &[usize] {
        &self.lists[b]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.lists
    }

    /// Position of `a` in `b`'s list; 0 is most preferred.
    pub fn rank(&self, b: usize, a: usize) -> usize {
        self.ranks[b][a]
    }

    /// Whether `b` prefers `a1` to `a2`.
    pub fn prefers(&self, b: usize, a1: usize, a2: usize) -> bool {
        self.ranks[b][a1] < self.ranks[b][a2]
    }
}

/// A bijection between the A and B sides. `pair_of_a(i)` is the B-index
/// matched to `a_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    a_to_b: Vec<usize>,
    b_to_a: Vec<usize>,
}

impl Matching {
    pub fn new(pairs: Vec<usize>) -> Result<Self> {
        let n = pairs.len();
        validate_permutation("matching", 0, &pairs, n)?;
        let mut b_to_a = vec![0; n];
        for (a, &b) in pairs.iter().enumerate() {
            b_to_a[b] = a;
        }
        Ok(Matching { a_to_b: pairs, b_to_a })
    }

    pub fn identity(n: usize) -> Self {
        Matching { a_to_b: (0..n).collect(), b_to_a: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.a_to_b.len()
    }

    /// B-partner of `a_a`.
    pub fn pair_of_a(&self, a: usize) -> usize {
        self.a_to_b[a]
    }

    /// A-partner of `b_b`.
    pub fn pair_of_b(&self, b: usize) -> usize {
        self.b_to_a[b]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.a_to_b
    }

    /// All matched pairs `(a, b)` in increasing A-index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.a_to_b.iter().copied().enumerate()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.a_to_b[a] == b
    }
}

/// A stable matching instance: known A-side profile, optionally a hidden
/// B-side realization (ground truth) and a designated matching to verify.
#[derive(Debug, Clone)]
pub struct Instance {
    pub profile: PreferenceProfile,
    pub realization: Option<Realization>,
    pub matching: Option<Matching>,
    pub label: String,
}

impl Instance {
    pub fn new(label: impl Into<String>, profile: PreferenceProfile) -> Self {
        Instance { profile, realization: None, matching: None, label: label.into() }
    }

    pub fn with_realization(mut self, realization: Realization) -> Result<Self> {
        if realization.n() != self.profile.n() {
            return Err(Error::InvalidInstance(format!(
                "realization has n={}, profile has n={}",
                realization.n(),
                self.profile.n()
            )));
        }
        self.realization = Some(realization);
        Ok(self)
    }

    pub fn with_matching(mut self, matching: Matching) -> Result<Self> {
        if matching.n() != self.profile.n() {
            return Err(Error::InvalidInstance(format!(
                "matching has n={}, profile has n={}",
                matching.n(),
                self.profile.n()
            )));
        }
        self.matching = Some(matching);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    /// The hidden realization, or an error when online code tries to peek.
    pub fn realization(&self) -> Result<&Realization> {
        self.realization.as_ref().ok_or(Error::HiddenRealization)
    }

    /// Position of `other` in `agent`'s preference list (0 = most preferred).
    ///
    /// For B-side agents this reads the realization and fails when it is
    /// hidden; online code must go through the query oracles instead.
    pub fn rank(&self, agent: AgentId, other: AgentId) -> Result<usize> {
        match (agent.side, other.side) {
            (Side::A, Side::B) => Ok(self.profile.rank(agent.index, other.index)),
            (Side::B, Side::A) => Ok(self.realization()?.rank(agent.index, other.index)),
            _ => Err(Error::Precondition(
                "rank requires agents on opposite sides".into(),
            )),
        }
    }

    /// Full-information blocking-pair test: `(a, b)` blocks `m` when both
    /// strictly prefer each other to their partners in `m`.
    pub fn is_blocking_pair(&self, m: &Matching, a: usize, b: usize) -> Result<bool> {
        if m.contains(a, b) {
            return Err(Error::Precondition(format!(
                "({}, {}) is a matched pair",
                AgentId::a(a),
                AgentId::b(b)
            )));
        }
        let real = self.realization()?;
        Ok(self.profile.prefers(a, b, m.pair_of_a(a)) && real.prefers(b, a, m.pair_of_b(b)))
    }

    /// Full-information stability test: no blocking pair exists.
    pub fn is_stable(&self, m: &Matching) -> Result<bool> {
        let real = self.realization()?;
        let n = self.n();
        for a in 0..n {
            let partner = m.pair_of_a(a);
            // Walk a's list above its partner; any b there that also prefers
            // a over its own partner blocks.
            for &b in self.profile.list(a) {
                if b == partner {
                    break;
                }
                if real.prefers(b, a, m.pair_of_b(b)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The A-optimal stable matching (full information, A proposing).
    pub fn a_optimal_matching(&self) -> Result<Matching> {
        let real = self.realization()?;
        let assignment = deferred_acceptance(self.profile.rows(), |b, a1, a2| {
            real.prefers(b, a1, a2)
        });
        Matching::new(assignment)
    }

    /// The B-optimal stable matching (full information, B proposing).
    pub fn b_optimal_matching(&self) -> Result<Matching> {
        let real = self.realization()?;
        let assignment = deferred_acceptance(real.rows(), |a, b1, b2| {
            self.profile.prefers(a, b1, b2)
        });
        // assignment maps b -> a; invert to the a -> b convention.
        let n = self.n();
        let mut pairs = vec![0; n];
        for (b, &a) in assignment.iter().enumerate() {
            pairs[a] = b;
        }
        Matching::new(pairs)
    }
}

/// Deferred acceptance with the given proposer lists. Free proposers are
/// processed lowest index first; the result is proposer-optimal and does not
/// depend on that order. `receiver_prefers(r, p1, p2)` answers whether
/// receiver `r` prefers proposer `p1` to `p2`.
pub(crate) fn deferred_acceptance(
    proposer_lists: &[Vec<usize>],
    receiver_prefers: impl Fn(usize, usize, usize) -> bool,
) -> Vec<usize> {
    let n = proposer_lists.len();
    let mut next_choice = vec![0usize; n];
    let mut engaged_to: Vec<Option<usize>> = vec![None; n]; // receiver -> proposer
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(p) = free.pop() {
        let r = proposer_lists[p][next_choice[p]];
        next_choice[p] += 1;
        match engaged_to[r] {
            None => engaged_to[r] = Some(p),
            Some(cur) => {
                if receiver_prefers(r, p, cur) {
                    engaged_to[r] = Some(p);
                    insert_free(&mut free, cur);
                } else {
                    insert_free(&mut free, p);
                }
            }
        }
    }
    let mut out = vec![0; n];
    for (r, p) in engaged_to.iter().enumerate() {
        out[p.expect("every receiver engaged at termination")] = r;
    }
    out
}

// Keep the free list sorted descending so pop() yields the lowest index.
fn insert_free(free: &mut Vec<usize>, p: usize) {
    let pos = free.partition_point(|&x| x > p);
    free.insert(pos, p);
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    label: String,
    n: usize,
    a_prefs: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_prefs: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matching: Option<Vec<usize>>,
}

impl Instance {
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            label: self.label.clone(),
            n: self.n(),
            a_prefs: self.profile.rows().to_vec(),
            b_prefs: self.realization.as_ref().map(|r| r.rows().to_vec()),
            matching: self.matching.as_ref().map(|m| m.as_slice().to_vec()),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.a_prefs.len() != file.n {
            return Err(Error::InvalidInstance(format!(
                "a_prefs has {} rows, expected n={}",
                file.a_prefs.len(),
                file.n
            )));
        }
        if let Some(b) = &file.b_prefs {
            if b.len() != file.n {
                return Err(Error::InvalidInstance(format!(
                    "b_prefs has {} rows, expected n={}",
                    b.len(),
                    file.n
                )));
            }
        }
        let mut inst = Instance::new(file.label, PreferenceProfile::new(file.a_prefs)?);
        if let Some(b) = file.b_prefs {
            inst = inst.with_realization(Realization::new(b)?)?;
        }
        if let Some(m) = file.matching {
            inst = inst.with_matching(Matching::new(m)?)?;
        }
        Ok(inst)
    }
}
