//! Online algorithms that find matchings under one-sided uncertainty.

use crate::model::{Matching, PreferenceProfile};
use crate::oracle::{QueryModel, Session};
use crate::rotation::Rotation;
use crate::{Error, Result};

/// A found matching plus the number of queries the run issued.
#[derive(Debug, Clone)]
pub struct FindRun {
    pub matching: Matching,
    pub queries: usize,
}

/// Detailed accounting of a rotation-elimination run. A probe is *good* the
/// first time a particular (A-agent, B-agent) combination is queried in the
/// elimination phase and *bad* on repeats; repeats only happen right after a
/// rotation that did not involve the agent.
#[derive(Debug, Clone)]
pub struct RotationEliminationRun {
    pub matching: Matching,
    /// Queries in the session's native model (comparisons, or interviews
    /// when emulated).
    pub queries: usize,
    pub find_a_optimal_queries: usize,
    pub good_probes: usize,
    pub bad_probes: usize,
    pub rotations_applied: usize,
    /// Comparisons asked of the oracle layer (equals the comparison count
    /// in the native model; the emulated run spends up to two interviews
    /// per entry).
    pub comparisons_made: usize,
}

#[derive(Clone, Copy)]
enum CompareVia {
    Comparison,
    Interviews,
}

impl CompareVia {
    fn ask(self, session: &mut Session, b: usize, a1: usize, a2: usize) -> Result<usize> {
        match self {
            CompareVia::Comparison => session.prefer(b, a1, a2),
            CompareVia::Interviews => session.prefer_via_interviews(b, a1, a2),
        }
    }

    fn model(self) -> QueryModel {
        match self {
            CompareVia::Comparison => QueryModel::Comparison,
            CompareVia::Interviews => QueryModel::Interview,
        }
    }
}

/// Deferred acceptance with A proposing, querying the oracle once per
/// contested proposal. Output is the A-optimal stable matching; on stable
/// inputs the query count is exactly the sum over B of (proposals - 1),
/// which equals the smallest certificate for finding any stable matching.
pub fn find_a_optimal_comparison(
    profile: &PreferenceProfile,
    session: &mut Session,
) -> Result<FindRun> {
    deferred_acceptance_online(profile, session, CompareVia::Comparison)
}

/// Deferred acceptance with interviews: each contested proposal interviews
/// the proposer and the incumbent at the contested B-agent, skipping
/// interviews that already happened.
pub fn find_a_optimal_interview(
    profile: &PreferenceProfile,
    session: &mut Session,
) -> Result<FindRun> {
    deferred_acceptance_online(profile, session, CompareVia::Interviews)
}

fn deferred_acceptance_online(
    profile: &PreferenceProfile,
    session: &mut Session,
    via: CompareVia,
) -> Result<FindRun> {
    let start = session.count(via.model());
    let n = profile.n();
    let mut next_choice = vec![0usize; n];
    let mut engaged: Vec<Option<usize>> = vec![None; n];
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(a) = free.pop() {
        let b = profile.list(a)[next_choice[a]];
        next_choice[a] += 1;
        match engaged[b] {
            None => engaged[b] = Some(a),
            Some(current) => {
                let winner = via.ask(session, b, a, current)?;
                let loser = if winner == a { current } else { a };
                engaged[b] = Some(winner);
                push_free(&mut free, loser);
            }
        }
    }
    let mut pairs = vec![0usize; n];
    for (b, a) in engaged.iter().enumerate() {
        pairs[a.expect("all engaged")] = b;
    }
    Ok(FindRun {
        matching: Matching::new(pairs)?,
        queries: session.count(via.model()) - start,
    })
}

fn push_free(free: &mut Vec<usize>, a: usize) {
    // Keep the stack sorted descending so pop() yields the lowest index.
    let pos = free.partition_point(|&x| x > a);
    free.insert(pos, a);
}

/// Special case with identical A-side lists: walk B in the common preference
/// order and find each agent's favourite among the still-unmatched A-agents
/// by a linear tournament. Spends exactly `(n² - n) / 2` comparisons and the
/// result is the unique stable matching.
pub fn find_stable_equal_prefs(
    profile: &PreferenceProfile,
    session: &mut Session,
) -> Result<FindRun> {
    let n = profile.n();
    let first = profile.list(0);
    if (1..n).any(|a| profile.list(a) != first) {
        return Err(Error::Precondition(
            "equal-preference solver requires identical A-side lists".into(),
        ));
    }
    let start = session.count(QueryModel::Comparison);
    let order = first.to_vec();
    let mut unmatched: Vec<usize> = (0..n).collect();
    let mut pairs = vec![0usize; n];
    for b in order {
        let mut champion = unmatched[0];
        for &challenger in &unmatched[1..] {
            champion = session.prefer(b, champion, challenger)?;
        }
        pairs[champion] = b;
        unmatched.retain(|&a| a != champion);
    }
    Ok(FindRun {
        matching: Matching::new(pairs)?,
        queries: session.count(QueryModel::Comparison) - start,
    })
}

/// Find the B-optimal stable matching with comparison queries by rotation
/// elimination.
pub fn find_b_optimal_comparison(
    profile: &PreferenceProfile,
    session: &mut Session,
) -> Result<RotationEliminationRun> {
    rotation_elimination(profile, session, CompareVia::Comparison)
}

/// Interview-model variant: identical control flow, with every comparison
/// emulated by at most two interviews (already-interviewed agents are not
/// re-interviewed). Total interviews never exceed `n²` nor twice the
/// comparison count of the direct run.
pub fn find_b_optimal_interview(
    profile: &PreferenceProfile,
    session: &mut Session,
) -> Result<RotationEliminationRun> {
    rotation_elimination(profile, session, CompareVia::Interviews)
}

/// Rotation elimination: start from the A-optimal matching, locate every
/// agent's rotation edge by walking down its list and asking each candidate
/// whether it prefers the agent to its current partner, and apply exposed
/// rotations until none remains. Re-walks after a rotation resume where the
/// previous scan stopped: cycle members restart below their new partner,
/// everyone else re-asks its old rotation-edge target first.
fn rotation_elimination(
    profile: &PreferenceProfile,
    session: &mut Session,
    via: CompareVia,
) -> Result<RotationEliminationRun> {
    let start = session.count(via.model());
    let n = profile.n();
    let da = deferred_acceptance_online(profile, session, via)?;
    let step1 = da.queries;
    let mut m = da.matching;

    let mut no_edge = vec![false; n]; // proven to have no rotation edge
    let mut probe = vec![0usize; n]; // rank currently being probed
    let mut edge: Vec<Option<usize>> = vec![None; n];
    for a in 0..n {
        let pr = profile.rank(a, m.pair_of_a(a));
        if pr + 1 == n {
            no_edge[a] = true;
        } else {
            probe[a] = pr + 1;
        }
    }

    let mut seen = std::collections::HashSet::new();
    let mut good = 0usize;
    let mut bad = 0usize;
    let mut comparisons = 0usize;
    let mut rotations = 0usize;

    loop {
        for a in 0..n {
            if no_edge[a] || edge[a].is_some() {
                continue;
            }
            loop {
                let b = profile.list(a)[probe[a]];
                let winner = via.ask(session, b, a, m.pair_of_b(b))?;
                comparisons += 1;
                if seen.insert((a, b)) {
                    good += 1;
                } else {
                    bad += 1;
                }
                if winner == a {
                    edge[a] = Some(b);
                    break;
                }
                if probe[a] + 1 == n {
                    no_edge[a] = true;
                    break;
                }
                probe[a] += 1;
            }
        }

        let Some(rot) = rotation_among(&edge, &m) else { break };
        rotations += 1;
        m = rot.apply_to(&m)?;
        for a in 0..n {
            if no_edge[a] {
                continue;
            }
            if rot.contains_a(a) {
                edge[a] = None;
                let pr = profile.rank(a, m.pair_of_a(a));
                if pr + 1 == n {
                    no_edge[a] = true;
                } else {
                    probe[a] = pr + 1;
                }
            } else {
                // The old target's partner changed (or will be re-confirmed);
                // rewind the probe to it and ask again.
                probe[a] = profile.rank(a, edge[a].expect("scanned before rotation"));
                edge[a] = None;
            }
        }
    }

    Ok(RotationEliminationRun {
        matching: m,
        queries: session.count(via.model()) - start,
        find_a_optimal_queries: step1,
        good_probes: good,
        bad_probes: bad,
        rotations_applied: rotations,
        comparisons_made: comparisons,
    })
}

/// Cycle of the known rotation edges, preferring the one through the lowest
/// A-index when several are exposed at once.
fn rotation_among(edge: &[Option<usize>], m: &Matching) -> Option<Rotation> {
    let n = edge.len();
    let mut best: Option<Rotation> = None;
    let mut color = vec![0u8; n];
    for s in 0..n {
        if color[s] != 0 || edge[s].is_none() {
            continue;
        }
        let mut path = Vec::new();
        let mut a = s;
        while color[a] == 0 {
            color[a] = 1;
            path.push(a);
            match edge[a] {
                Some(b) => a = m.pair_of_b(b),
                None => break,
            }
            if color[a] == 1 {
                let pos = path.iter().position(|&x| x == a).unwrap();
                let mut cycle: Vec<(usize, usize)> =
                    path[pos..].iter().map(|&x| (x, m.pair_of_a(x))).collect();
                let lowest = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &(x, _))| x)
                    .map(|(i, _)| i)
                    .unwrap();
                cycle.rotate_left(lowest);
                let rot = Rotation { cycle };
                let lead = rot.cycle[0].0;
                if best.as_ref().map_or(true, |r| lead < r.cycle[0].0) {
                    best = Some(rot);
                }
                break;
            }
        }
        for &x in &path {
            color[x] = 2;
        }
    }
    best
}

/// Sort every B-agent's full list by repeated top queries on shrinking sets
/// (n queries per agent, singleton included), then compute the B-optimal
/// matching from the revealed lists. Exactly `n²` set queries.
pub fn find_b_optimal_set(profile: &PreferenceProfile, session: &mut Session) -> Result<FindRun> {
    let start = session.count(QueryModel::Set);
    let n = profile.n();
    let mut b_lists: Vec<Vec<usize>> = Vec::with_capacity(n);
    for b in 0..n {
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut order = Vec::with_capacity(n);
        while !remaining.is_empty() {
            let t = session.top(b, &remaining)?;
            order.push(t);
            remaining.retain(|&x| x != t);
        }
        b_lists.push(order);
    }
    let assignment = crate::model::deferred_acceptance(&b_lists, |a, b1, b2| {
        profile.prefers(a, b1, b2)
    });
    let mut pairs = vec![0usize; n];
    for (b, &a) in assignment.iter().enumerate() {
        pairs[a] = b;
    }
    Ok(FindRun {
        matching: Matching::new(pairs)?,
        queries: session.count(QueryModel::Set) - start,
    })
}
