//! Rotation edges, exposed rotations, and the candidate-edge digraph that
//! underlies B-optimality certificates.
//!
//! In a stable matching `M`, agent `a`'s rotation edge points at the most
//! preferred `b` below `M(a)` on `a`'s list that prefers `a` to its own
//! partner. Following `a -> M(rotation_edge(a))` yields a partial functional
//! graph whose cycles are the exposed rotations; applying one trades the
//! cycle's matched edges for its rotation edges and is weakly better for
//! every B-agent. A matching is B-optimal exactly when no rotation is
//! exposed.

use crate::knowledge::KnowledgeState;
use crate::model::{Instance, Matching, PreferenceProfile};
use crate::{Error, Result};

/// An exposed rotation: the cycle of matched pairs `(a, b)`, listed so that
/// each agent's rotation edge points at the next pair's B-agent. Normalized
/// to start at the lowest A-index on the cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    pub cycle: Vec<(usize, usize)>,
}

impl Rotation {
    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn contains_a(&self, a: usize) -> bool {
        self.cycle.iter().any(|&(x, _)| x == a)
    }

    pub fn contains_b(&self, b: usize) -> bool {
        self.cycle.iter().any(|&(_, y)| y == b)
    }

    fn normalize(mut cycle: Vec<(usize, usize)>) -> Self {
        let lowest = cycle
            .iter()
            .enumerate()
            .min_by_key(|(_, &(a, _))| a)
            .map(|(i, _)| i)
            .unwrap_or(0);
        cycle.rotate_left(lowest);
        Rotation { cycle }
    }

    /// Rematch every cycle member to the next pair's B-agent. Shape-level
    /// operation; exposure is validated by [`apply_rotation`].
    pub(crate) fn apply_to(&self, m: &Matching) -> Result<Matching> {
        let mut pairs = m.as_slice().to_vec();
        let r = self.cycle.len();
        for k in 0..r {
            let (a, b) = self.cycle[k];
            if m.pair_of_a(a) != b {
                return Err(Error::Precondition(format!(
                    "rotation pair (a_{a}, b_{b}) is not matched in M"
                )));
            }
            pairs[a] = self.cycle[(k + 1) % r].1;
        }
        Matching::new(pairs)
    }
}

/// Full-information rotation edge of `a` in `m`: the most preferred `b`
/// strictly below `M(a)` on `a`'s list with `a` above `M(b)` on `b`'s list,
/// or `None` if no such `b` exists.
pub fn r_edge(instance: &Instance, m: &Matching, a: usize) -> Result<Option<usize>> {
    let real = instance.realization()?;
    let profile = &instance.profile;
    let partner_rank = profile.rank(a, m.pair_of_a(a));
    for &b in &profile.list(a)[partner_rank + 1..] {
        if real.prefers(b, a, m.pair_of_b(b)) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// All rotations exposed in `m`, i.e. the cycles of `a -> M(r_edge(a))`
/// restricted to agents that have a rotation edge. Agents on paths hanging
/// off a cycle belong to no rotation. Sorted by their lowest A-index.
pub fn exposed_rotations(instance: &Instance, m: &Matching) -> Result<Vec<Rotation>> {
    let n = instance.n();
    let mut next = vec![usize::MAX; n];
    for a in 0..n {
        if let Some(b) = r_edge(instance, m, a)? {
            next[a] = m.pair_of_b(b);
        }
    }
    let mut rotations = Vec::new();
    let mut color = vec![0u8; n]; // 0 unvisited, 1 on current walk, 2 settled
    for start in 0..n {
        if color[start] != 0 || next[start] == usize::MAX {
            continue;
        }
        let mut path = Vec::new();
        let mut a = start;
        while color[a] == 0 && next[a] != usize::MAX {
            color[a] = 1;
            path.push(a);
            a = next[a];
        }
        if color[a] == 1 {
            // Found a new cycle; `a` is its entry point on the current walk.
            let pos = path.iter().position(|&x| x == a).unwrap();
            let cycle = path[pos..]
                .iter()
                .map(|&x| (x, m.pair_of_a(x)))
                .collect::<Vec<_>>();
            rotations.push(Rotation::normalize(cycle));
        }
        for x in path {
            color[x] = 2;
        }
        color[a] = 2;
    }
    rotations.sort_by_key(|r| r.cycle[0].0);
    Ok(rotations)
}

/// Apply an exposed rotation, yielding a stable matching in which no B-agent
/// is worse off. Fails if `r` is not exposed in `m`.
pub fn apply_rotation(instance: &Instance, m: &Matching, r: &Rotation) -> Result<Matching> {
    let exposed = exposed_rotations(instance, m)?;
    if !exposed.contains(r) {
        return Err(Error::Precondition(format!(
            "rotation starting at a_{} is not exposed in M",
            r.cycle.first().map(|&(a, _)| a).unwrap_or(0)
        )));
    }
    r.apply_to(m)
}

/// The digraph whose acyclicity certifies B-optimality under partial
/// knowledge: one arc `b -> M(b)` per matched pair, plus one arc `a -> b`
/// for every unrefuted potential rotation edge.
///
/// A candidate edge `(a, b)` with `M(a) ≺_a b` is refuted when the knowledge
/// entails `M(b) ≺_b a`, or when some `b'` strictly between `M(a)` and `b`
/// on `a`'s list is entailed to prefer `a` (then `a`'s rotation edge stops
/// at or above `b'`).
#[derive(Debug, Clone)]
pub struct RotationCandidateGraph {
    n: usize,
    matching: Vec<usize>,
    /// Unrefuted candidate arcs per A-agent, in `a`'s preference order.
    arcs: Vec<Vec<usize>>,
    /// Arcs whose rotation-edge status is confirmed (`a ≺_b M(b)` entailed).
    confirmed: Vec<Option<usize>>,
}

pub fn candidate_graph(
    profile: &PreferenceProfile,
    m: &Matching,
    k: &KnowledgeState,
) -> RotationCandidateGraph {
    let n = profile.n();
    let mut arcs = Vec::with_capacity(n);
    let mut confirmed = vec![None; n];
    for a in 0..n {
        let partner_rank = profile.rank(a, m.pair_of_a(a));
        let mut out = Vec::new();
        for &b in &profile.list(a)[partner_rank + 1..] {
            if k.entails(b, m.pair_of_b(b), a) {
                continue;
            }
            out.push(b);
            if k.entails(b, a, m.pair_of_b(b)) {
                confirmed[a] = Some(b);
                break;
            }
        }
        arcs.push(out);
    }
    RotationCandidateGraph { n, matching: m.as_slice().to_vec(), arcs, confirmed }
}

impl RotationCandidateGraph {
    pub fn candidate_arcs(&self, a: usize) -> &[usize] {
        &self.arcs[a]
    }

    /// The confirmed rotation edge of `a`, when its exact position is known.
    pub fn confirmed_r_edge(&self, a: usize) -> Option<usize> {
        self.confirmed[a]
    }

    /// `a` is decided when it provably has no rotation edge or its rotation
    /// edge is pinned down exactly.
    pub fn is_decided(&self, a: usize) -> bool {
        self.arcs[a].is_empty() || (self.arcs[a].len() == 1 && self.confirmed[a].is_some())
    }

    /// Cycle test over matching arcs plus unrefuted candidate arcs. Because
    /// matching arcs run B to A and candidate arcs A to B, every cycle
    /// alternates, matching the rotation shape.
    pub fn is_acyclic(&self) -> bool {
        // Since each B-vertex has exactly one out-arc (to its partner),
        // contract it: work on A-vertices with a -> M(b) edges.
        let n = self.n;
        let mut inv = vec![0usize; n];
        for (a, &b) in self.matching.iter().enumerate() {
            inv[b] = a;
        }
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|a| self.arcs[a].iter().map(|&b| inv[b]).collect())
            .collect();
        let mut color = vec![0u8; n];
        for start in 0..n {
            if color[start] == 0 && has_cycle_from(start, &succ, &mut color) {
                return false;
            }
        }
        true
    }

    /// Graphviz rendering with refutation status in the arc labels.
    pub fn to_dot(&self, k: &KnowledgeState, profile: &PreferenceProfile) -> String {
        use std::fmt::Write;
        let m = Matching::new(self.matching.clone()).expect("stored matching is valid");
        let mut out = String::from("digraph candidates {\n  rankdir=LR;\n");
        for (a, &b) in self.matching.iter().enumerate() {
            let _ = writeln!(out, "  b{b} -> a{a} [style=bold, label=\"matched\"];");
        }
        for a in 0..self.n {
            let partner_rank = profile.rank(a, m.pair_of_a(a));
            for &b in &profile.list(a)[partner_rank + 1..] {
                let status = if self.arcs[a].contains(&b) {
                    if self.confirmed[a] == Some(b) {
                        "confirmed"
                    } else {
                        "unrefuted"
                    }
                } else {
                    "refuted"
                };
                let style = if status == "refuted" { ", style=dashed" } else { "" };
                let _ = writeln!(out, "  a{a} -> b{b} [label=\"{status}\"{style}];");
            }
            let _ = k;
        }
        out.push_str("}\n");
        out
    }
}

fn has_cycle_from(start: usize, succ: &[Vec<usize>], color: &mut [u8]) -> bool {
    // Iterative DFS with explicit stack: (node, next child index).
    let mut stack = vec![(start, 0usize)];
    color[start] = 1;
    while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
        if *idx < succ[v].len() {
            let w = succ[v][*idx];
            *idx += 1;
            match color[w] {
                0 => {
                    color[w] = 1;
                    stack.push((w, 0));
                }
                1 => return true,
                _ => {}
            }
        } else {
            color[v] = 2;
            stack.pop();
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::knowledge::KnowledgeState;

    #[test]
    fn r_edge_examples() {
        let rot = fixtures::rot2();
        let id = Matching::identity(2);
        assert_eq!(r_edge(&rot, &id, 0).unwrap(), Some(1));

        let id3 = fixtures::identity(3);
        let m3 = Matching::identity(3);
        for a in 0..3 {
            assert_eq!(r_edge(&id3, &m3, a).unwrap(), None);
        }

        let fig = fixtures::figure1(12).unwrap();
        let m = Matching::identity(12);
        assert_eq!(r_edge(&fig, &m, 11).unwrap(), None);
        // Upper-half agents rotate to b_11, lower half to the static target.
        assert_eq!(r_edge(&fig, &m, 6).unwrap(), Some(11));
        assert_eq!(r_edge(&fig, &m, 0).unwrap(), Some(11));
    }

    #[test]
    fn rotation_exposure_and_application() {
        let rot = fixtures::rot2();
        let id = Matching::identity(2);
        let exposed = exposed_rotations(&rot, &id).unwrap();
        assert_eq!(exposed.len(), 1);
        assert_eq!(exposed[0].cycle, vec![(0, 0), (1, 1)]);
        let m2 = apply_rotation(&rot, &id, &exposed[0]).unwrap();
        assert_eq!(m2.as_slice(), &[1, 0]);
        assert!(exposed_rotations(&rot, &m2).unwrap().is_empty());

        // Applying it again (now non-exposed) fails.
        assert!(apply_rotation(&rot, &m2, &exposed[0]).is_err());

        for n in 1..=5 {
            let id_inst = fixtures::identity(n);
            assert!(exposed_rotations(&id_inst, &Matching::identity(n)).unwrap().is_empty());
        }
    }

    #[test]
    fn rotation_chain_reaches_b_optimal() {
        for seed in 0..50 {
            let n = 2 + (seed as usize % 4);
            let inst = fixtures::random(n, seed);
            let b_opt = inst.b_optimal_matching().unwrap();
            let real = inst.realization().unwrap();
            let mut m = inst.a_optimal_matching().unwrap();
            let mut steps = 0;
            loop {
                assert!(inst.is_stable(&m).unwrap());
                let exposed = exposed_rotations(&inst, &m).unwrap();
                let Some(rot) = exposed.first() else { break };
                let next = apply_rotation(&inst, &m, rot).unwrap();
                for b in 0..n {
                    let before = real.rank(b, m.pair_of_b(b));
                    let after = real.rank(b, next.pair_of_b(b));
                    assert!(after <= before);
                    if rot.contains_b(b) {
                        assert!(after < before, "cycle members strictly improve");
                    }
                }
                m = next;
                steps += 1;
                assert!(steps <= n * n, "rotation chain must terminate");
            }
            assert_eq!(m, b_opt, "seed {seed}");
        }
    }

    #[test]
    fn candidate_graph_examples() {
        let id2 = fixtures::identity(2);
        let m = Matching::identity(2);
        let empty = KnowledgeState::new(2);
        let g = candidate_graph(&id2.profile, &m, &empty);
        assert_eq!(g.candidate_arcs(0), &[1]);
        assert_eq!(g.candidate_arcs(1), &[0]);
        assert!(!g.is_acyclic());

        let k = KnowledgeState::from_relations(2, [(0, 0, 1), (1, 1, 0)]).unwrap();
        let g = candidate_graph(&id2.profile, &m, &k);
        assert!(g.candidate_arcs(0).is_empty());
        assert!(g.candidate_arcs(1).is_empty());
        assert!(g.is_acyclic());

        let rot = fixtures::rot2();
        let swap = Matching::new(vec![1, 0]).unwrap();
        let g = candidate_graph(&rot.profile, &swap, &KnowledgeState::new(2));
        assert!(g.candidate_arcs(0).is_empty() && g.candidate_arcs(1).is_empty());
        assert!(g.is_acyclic());
    }

    #[test]
    fn confirmed_edge_truncates_lower_candidates() {
        // a_0's list on identity(3) is (b_0, b_1, b_2); confirming b_1 as the
        // rotation edge refutes b_2 without touching it directly.
        let inst = fixtures::identity(3);
        let m = Matching::identity(3);
        let k = KnowledgeState::from_relations(3, [(1, 0, 1)]).unwrap();
        let g = candidate_graph(&inst.profile, &m, &k);
        assert_eq!(g.candidate_arcs(0), &[1]);
        assert_eq!(g.confirmed_r_edge(0), Some(1));
        assert!(g.is_decided(0));
        assert!(!g.is_decided(1));
    }

    #[test]
    fn dot_export_labels_arcs() {
        let inst = fixtures::identity(2);
        let m = Matching::identity(2);
        let k = KnowledgeState::from_relations(2, [(0, 0, 1)]).unwrap();
        let g = candidate_graph(&inst.profile, &m, &k);
        let dot = g.to_dot(&k, &inst.profile);
        assert!(dot.contains("b0 -> a0"));
        assert!(dot.contains("a1 -> b0 [label=\"refuted\""));
        assert!(dot.contains("a0 -> b1 [label=\"unrefuted\""));
    }
}
