//! Adaptive answer sources for the block lower-bound construction, with
//! deferred commitment and final consistency checking.
//!
//! The construction splits A into a lower half (each ranking its partner
//! first, then the whole upper half of B), an upper block (partner first,
//! then `b_{n-1}`), and the single agent `a_{n-1}`. The identity matching is
//! trivially stable; the game is about proving it B-optimal. Each lower-half
//! agent's rotation edge lands somewhere in the upper half of B, but the
//! adversary decides *where* only in response to queries: it answers
//! "partner preferred" as long as at least one upper slot stays open, so an
//! algorithm that scans for the rotation edge of `a_i` pays one query per
//! upper B-agent. A short certificate (refute `a_{n-1}` everywhere, confirm
//! everyone else's rotation edge) always exists, so forcing a scan is
//! expensive relative to the optimum.

use crate::fixtures::{
    check_figure1_n, figure1_b1_list, figure1_middle_block, figure1_realization_from_fronts,
};
use crate::model::{Instance, Matching, Realization};
use crate::rotation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Unknown,
    /// Committed behind the partner at this upper B-agent.
    Back,
    /// Committed in front of the partner: this slot is the rotation edge.
    Front,
}

/// Per lower-half-agent bookkeeping of upper-half commitments.
#[derive(Debug, Clone)]
struct SlotTable {
    half: usize,
    slots: Vec<Vec<Slot>>, // slots[i][j - half]
    back_count: Vec<usize>,
    front_of: Vec<Option<usize>>,
}

impl SlotTable {
    fn new(half: usize) -> Self {
        SlotTable {
            half,
            slots: vec![vec![Slot::Unknown; half]; half],
            back_count: vec![0; half],
            front_of: vec![None; half],
        }
    }

    /// Commit agent `i`'s slot at upper agent `j`, deferring the rotation
    /// edge for as long as possible: the slot goes Back unless it is the
    /// last one still open.
    fn resolve(&mut self, i: usize, j: usize) -> Slot {
        let s = self.slots[i][j - self.half];
        if s != Slot::Unknown {
            return s;
        }
        let committed = if self.back_count[i] == self.half - 1 {
            self.front_of[i] = Some(j);
            Slot::Front
        } else {
            self.back_count[i] += 1;
            Slot::Back
        };
        self.slots[i][j - self.half] = committed;
        committed
    }

    /// Final rotation-edge target per lower-half agent: the forced Front
    /// slot if any, otherwise the lowest still-unqueried upper agent.
    fn final_targets(&self) -> Result<Vec<usize>> {
        (0..self.half)
            .map(|i| {
                if let Some(j) = self.front_of[i] {
                    return Ok(j);
                }
                self.slots[i]
                    .iter()
                    .position(|&s| s == Slot::Unknown)
                    .map(|off| self.half + off)
                    .ok_or_else(|| {
                        Error::InconsistentAnswers(format!(
                            "a_{i} was committed behind every upper partner"
                        ))
                    })
            })
            .collect()
    }

    fn forced(&self) -> Vec<usize> {
        (0..self.half).filter(|&i| self.front_of[i].is_some()).collect()
    }
}

// Position of an agent in the final list of upper B-agent `j`, as a sortable
// key: tier 0 = front group, 1 = fixed middle block, 2 = back group. Within
// the front and back groups agents end up in increasing index order.
fn tier_key(n: usize, j: usize, a: usize, slot: Slot) -> (u8, usize) {
    let half = n / 2;
    if a >= half {
        let pos = figure1_middle_block(n, j).iter().position(|&x| x == a).unwrap();
        (1, pos)
    } else {
        match slot {
            Slot::Front => (0, a),
            _ => (2, a), // Unknown defaults to the back group
        }
    }
}

/// Adaptive comparison-query source for the block construction.
pub struct Figure1Adversary {
    n: usize,
    half: usize,
    b1_lists: Vec<Vec<usize>>,
    table: SlotTable,
    answered: Vec<(usize, usize, usize)>, // (b, winner, loser)
}

impl Figure1Adversary {
    pub fn new(n: usize) -> Result<Self> {
        check_figure1_n(n)?;
        let half = n / 2;
        Ok(Figure1Adversary {
            n,
            half,
            b1_lists: (0..half).map(|j| figure1_b1_list(n, j)).collect(),
            table: SlotTable::new(half),
            answered: Vec::new(),
        })
    }

    /// Answer `prefer(b, a1, a2)`, committing as little as possible. Fixed
    /// parts (lower-half B-lists, the middle block, anything involving
    /// `a_{n-1}`) answer immediately; queries that pit a lower-half A-agent
    /// against an upper B-agent's partner group commit that agent's slot.
    pub fn answer_prefer(&mut self, b: usize, a1: usize, a2: usize) -> Result<usize> {
        if a1 == a2 || a1 >= self.n || a2 >= self.n || b >= self.n {
            return Err(Error::Precondition(format!(
                "bad query prefer(b_{b}, a_{a1}, a_{a2}) for n={}",
                self.n
            )));
        }
        let winner = if b < self.half {
            let list = &self.b1_lists[b];
            let r1 = list.iter().position(|&x| x == a1).unwrap();
            let r2 = list.iter().position(|&x| x == a2).unwrap();
            if r1 < r2 {
                a1
            } else {
                a2
            }
        } else {
            let mut key = |a: usize| {
                let slot = if a < self.half { self.table.resolve(a, b) } else { Slot::Back };
                tier_key(self.n, b, a, slot)
            };
            // Resolve in ascending index order so pair queries between two
            // uncommitted lower-half agents commit deterministically.
            let (lo, hi) = (a1.min(a2), a1.max(a2));
            let (klo, khi) = (key(lo), key(hi));
            if klo <= khi {
                lo
            } else {
                hi
            }
        };
        let loser = if winner == a1 { a2 } else { a1 };
        self.answered.push((b, winner, loser));
        Ok(winner)
    }

    /// Lower-half agents whose rotation edge the algorithm forced into the
    /// open by exhausting every other upper slot.
    pub fn forced_agents(&self) -> Vec<usize> {
        self.table.forced()
    }

    /// Commit all remaining freedom and return a full realization. Verifies
    /// that the realization reproduces every answer given; a mismatch means
    /// the adversary is broken and fails loudly.
    pub fn finalize(&self) -> Result<Realization> {
        let targets = self.table.final_targets()?;
        let mut fronts = vec![Vec::new(); self.half];
        for (i, &j) in targets.iter().enumerate() {
            fronts[j - self.half].push(i);
        }
        let real = figure1_realization_from_fronts(self.n, &fronts);
        for &(b, winner, loser) in &self.answered {
            if !real.prefers(b, winner, loser) {
                return Err(Error::InconsistentAnswers(format!(
                    "finalized realization ranks a_{loser} over a_{winner} at b_{b}, \
                     contradicting a recorded answer"
                )));
            }
        }
        Ok(real)
    }
}

/// Adaptive interview-query source: same deferred commitment, except a slot
/// commits when the agent is interviewed at an upper B-agent, and answers
/// are total orders over the interviewed prefix.
pub struct Figure1InterviewAdversary {
    n: usize,
    half: usize,
    b1_lists: Vec<Vec<usize>>,
    table: SlotTable,
    /// Per B-agent: interviewed agents in committed preference order.
    prefix: Vec<Vec<usize>>,
}

impl Figure1InterviewAdversary {
    pub fn new(n: usize) -> Result<Self> {
        check_figure1_n(n)?;
        let half = n / 2;
        Ok(Figure1InterviewAdversary {
            n,
            half,
            b1_lists: (0..half).map(|j| figure1_b1_list(n, j)).collect(),
            table: SlotTable::new(half),
            prefix: vec![Vec::new(); n],
        })
    }

    pub fn interview(&mut self, b: usize, a: usize) -> Result<Vec<usize>> {
        if a >= self.n || b >= self.n {
            return Err(Error::Precondition(format!(
                "bad query intq(b_{b}, a_{a}) for n={}",
                self.n
            )));
        }
        if !self.prefix[b].contains(&a) {
            let key = self.key(b, a);
            // Committed members have settled keys, so recomputing them does
            // not move anything.
            let members = self.prefix[b].clone();
            let keys: Vec<(u8, usize)> = members.iter().map(|&x| self.key(b, x)).collect();
            let pos = keys.partition_point(|&k| k <= key);
            self.prefix[b].insert(pos, a);
        }
        Ok(self.prefix[b].clone())
    }

    fn key(&mut self, b: usize, a: usize) -> (u8, usize) {
        if b < self.half {
            let pos = self.b1_lists[b].iter().position(|&x| x == a).unwrap();
            (0, pos)
        } else {
            let slot = if a < self.half { self.table.resolve(a, b) } else { Slot::Back };
            tier_key(self.n, b, a, slot)
        }
    }

    pub fn forced_agents(&self) -> Vec<usize> {
        self.table.forced()
    }

    pub fn finalize(&self) -> Result<Realization> {
        let targets = self.table.final_targets()?;
        let mut fronts = vec![Vec::new(); self.half];
        for (i, &j) in targets.iter().enumerate() {
            fronts[j - self.half].push(i);
        }
        let real = figure1_realization_from_fronts(self.n, &fronts);
        for b in 0..self.n {
            for w in self.prefix[b].windows(2) {
                if !real.prefers(b, w[0], w[1]) {
                    return Err(Error::InconsistentAnswers(format!(
                        "finalized realization contradicts the revealed prefix order at b_{b}"
                    )));
                }
            }
        }
        Ok(real)
    }
}

/// Structural invariants every (finalized or generated) block realization
/// must satisfy: `a_{n-1}` has no rotation edge, every upper-block agent's
/// rotation edge is `b_{n-1}`, every other agent has one, and the identity
/// matching is stable and B-optimal.
pub fn check_block_properties(instance: &Instance) -> Result<()> {
    let n = instance.n();
    check_figure1_n(n)?;
    let half = n / 2;
    let m = Matching::identity(n);
    if !instance.is_stable(&m)? {
        return Err(Error::Precondition("identity matching is not stable".into()));
    }
    if rotation::r_edge(instance, &m, n - 1)?.is_some() {
        return Err(Error::Precondition(format!("a_{} has a rotation edge", n - 1)));
    }
    for a in half..n - 1 {
        if rotation::r_edge(instance, &m, a)? != Some(n - 1) {
            return Err(Error::Precondition(format!(
                "upper-block a_{a} should have its rotation edge at b_{}",
                n - 1
            )));
        }
    }
    for a in 0..half {
        if rotation::r_edge(instance, &m, a)?.is_none() {
            return Err(Error::Precondition(format!("lower-half a_{a} has no rotation edge")));
        }
    }
    if !rotation::exposed_rotations(instance, &m)?.is_empty() {
        return Err(Error::Precondition("identity matching exposes a rotation".into()));
    }
    if instance.b_optimal_matching()? != m {
        return Err(Error::Precondition("identity matching is not B-optimal".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::{AnswerSource, Session};

    #[test]
    fn fixed_parts_answer_from_published_lists() {
        let mut adv = Figure1Adversary::new(12).unwrap();
        // Upper-block agents always beat a_{n-1} at b_{n-1}.
        assert_eq!(adv.answer_prefer(11, 6, 11).unwrap(), 6);
        // b_0's list starts (a_1, a_0, ...).
        assert_eq!(adv.answer_prefer(0, 1, 0).unwrap(), 1);
        // b_1's list starts (a_0, a_1, ...).
        assert_eq!(adv.answer_prefer(1, 1, 0).unwrap(), 0);
    }

    #[test]
    fn scan_gets_refusals_until_the_last_slot() {
        let n = 12;
        let mut adv = Figure1Adversary::new(n).unwrap();
        for j in 6..11 {
            assert_eq!(adv.answer_prefer(j, 0, j).unwrap(), j, "partner preferred at b_{j}");
        }
        // All other upper slots are burned; the final one must concede.
        assert_eq!(adv.answer_prefer(11, 0, 11).unwrap(), 0);
        assert_eq!(adv.forced_agents(), vec![0]);
        let real = adv.finalize().unwrap();
        assert_eq!(real.rank(11, 0), 0, "a_0 sits in front at b_11");
    }

    #[test]
    fn no_queries_finalizes_to_lowest_open_slots() {
        let n = 8;
        let adv = Figure1Adversary::new(n).unwrap();
        let real = adv.finalize().unwrap();
        let inst = fixtures::figure1_profile_instance(n, real);
        check_block_properties(&inst).unwrap();
        // With nothing queried, every lower-half agent lands at b_{n/2}.
        let m = Matching::identity(n);
        for a in 0..4 {
            assert_eq!(rotation::r_edge(&inst, &m, a).unwrap(), Some(4));
        }
    }

    #[test]
    fn pair_queries_commit_consistently() {
        let n = 8;
        let mut adv = Figure1Adversary::new(n).unwrap();
        // Neither a_0 nor a_1 committed at b_5: both go to the back group,
        // lower index preferred.
        assert_eq!(adv.answer_prefer(5, 1, 0).unwrap(), 0);
        // Force a_0's front slot by burning its remaining upper slots.
        assert_eq!(adv.answer_prefer(4, 0, 4).unwrap(), 4);
        assert_eq!(adv.answer_prefer(6, 0, 6).unwrap(), 6);
        assert_eq!(adv.answer_prefer(7, 0, 7).unwrap(), 0);
        // a_0 is now front at b_7; a_1 stays back there.
        assert_eq!(adv.answer_prefer(7, 1, 0).unwrap(), 0);
        let real = adv.finalize().unwrap();
        assert!(real.prefers(5, 0, 1));
        assert!(real.prefers(7, 0, 1));
        assert_eq!(real.rank(7, 0), 0);
    }

    #[test]
    fn random_query_storms_always_finalize_consistently() {
        for seed in 0..30u64 {
            let n = 8;
            let mut sess =
                Session::adaptive(AnswerSource::Figure1(Figure1Adversary::new(n).unwrap()), n);
            let mut x = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
            for _ in 0..60 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (x >> 33) as usize % n;
                let a1 = (x >> 17) as usize % n;
                let a2 = (x >> 3) as usize % n;
                if a1 != a2 {
                    sess.prefer(b, a1, a2).unwrap();
                }
            }
            let AnswerSource::Figure1(adv) = sess.source() else { unreachable!() };
            let real = adv.finalize().unwrap();
            // Replay the whole transcript against the finalized realization.
            for (q, a) in sess.transcript().entries() {
                if let (crate::oracle::Query::Prefer { b, a1, a2 }, crate::oracle::Answer::Agent(w)) =
                    (q, a)
                {
                    let expect = if real.prefers(*b, *a1, *a2) { *a1 } else { *a2 };
                    assert_eq!(expect, *w, "seed {seed}");
                }
            }
            let inst = fixtures::figure1_profile_instance(n, real);
            check_block_properties(&inst).unwrap();
        }
    }

    #[test]
    fn interview_adversary_orders_prefixes_consistently() {
        let n = 8;
        let mut adv = Figure1InterviewAdversary::new(n).unwrap();
        assert_eq!(adv.interview(4, 0).unwrap(), vec![0]); // singleton prefix
        assert_eq!(adv.interview(4, 4).unwrap(), vec![4, 0], "partner beats the back group");
        assert_eq!(adv.interview(4, 2).unwrap(), vec![4, 0, 2]);
        // Burn a_0's remaining upper slots via interviews.
        adv.interview(5, 0).unwrap();
        adv.interview(6, 0).unwrap();
        assert_eq!(adv.interview(7, 0).unwrap(), vec![0], "forced front at the last slot");
        let real = adv.finalize().unwrap();
        assert_eq!(real.rank(7, 0), 0);
        let inst = fixtures::figure1_profile_instance(n, real);
        check_block_properties(&inst).unwrap();
    }

    #[test]
    fn generated_variants_satisfy_block_properties() {
        for n in [4, 8, 12] {
            check_block_properties(&fixtures::figure1(n).unwrap()).unwrap();
            for seed in 0..5 {
                check_block_properties(&fixtures::figure1_randomized(n, seed).unwrap()).unwrap();
            }
        }
    }
}
