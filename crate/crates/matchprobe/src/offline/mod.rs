//! Full-information offline computations: brute-force minimum query
//! certificates, constructive B-optimality certifiers, feedback-set solvers,
//! and hardness-reduction generators.
//!
//! A certificate is a query set whose true answers entail enough to certify
//! the target in every consistent completion. Queries partition by the
//! B-agent they touch, and every relation a certificate can use compares
//! some agent against a partner: refuting a potential blocking pair or
//! rotation edge needs `M(b)` preferred over `a`, confirming a rotation edge
//! needs the opposite. The minimum-certificate solvers search over those
//! structural choices directly (which rotation-edge candidates to refute or
//! confirm), with per-B-agent query counts given by how many distinct agents
//! must be related to the partner; an exhaustive search over raw query sets
//! validates them at tiny sizes.

pub mod fas;
pub mod reduction;

pub use fas::{feedback_arc_set, feedback_vertex_set, DirectedGraph, FasMode, WeightedDigraph};
pub use reduction::{gen_fas_reduction, gen_fvs_reduction, gen_interview_hardness};

use crate::knowledge::{self, potential_blockers, CertTarget, KnowledgeState};
use crate::model::{Instance, Matching, PreferenceProfile, Realization};
use crate::oracle::{Query, QueryModel, Session};
use crate::rotation;
use crate::solve;
use crate::{Error, Result};

/// A witness query set together with the knowledge its true answers entail.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub queries: Vec<Query>,
    pub knowledge: KnowledgeState,
}

impl Certificate {
    pub fn size(&self) -> usize {
        self.queries.len()
    }
}

/// An offline minimum-certificate problem. `matching: None` means the
/// finding variant: certify the target for at least one matching.
#[derive(Debug, Clone)]
pub struct CertificateProblem {
    pub model: QueryModel,
    pub target: CertTarget,
    pub instance: Instance,
    pub matching: Option<Matching>,
}

/// Size caps for the brute-force searches (the set model pays for subset
/// universes). `MATCHPROBE_ORACLE_LIMIT` overrides both.
pub fn model_limit(model: QueryModel) -> usize {
    if let Ok(v) = std::env::var("MATCHPROBE_ORACLE_LIMIT") {
        if let Ok(v) = v.parse() {
            return v;
        }
    }
    match model {
        QueryModel::Comparison | QueryModel::Interview => 5,
        QueryModel::Set => 4,
    }
}

/// All stable matchings of a full-information instance, by exhaustive
/// enumeration (n <= 8).
pub fn enumerate_stable_matchings(instance: &Instance) -> Result<Vec<Matching>> {
    let n = instance.n();
    if n > 8 {
        return Err(Error::OracleLimit { n, limit: 8 });
    }
    let mut found = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let m = Matching::new(perm.clone())?;
        if instance.is_stable(&m)? {
            found.push(m);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(found)
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

fn replay(real: &Realization, queries: Vec<Query>) -> Result<Certificate> {
    let mut session = Session::fixed(real.clone());
    for q in &queries {
        match q {
            Query::Prefer { b, a1, a2 } => {
                session.prefer(*b, *a1, *a2)?;
            }
            Query::Top { b, set } => {
                session.top(*b, set)?;
            }
            Query::Interview { b, a } => {
                session.interview(*b, *a)?;
            }
            Query::PreferA { .. } => {
                return Err(Error::Precondition("A-side queries have no hidden side".into()))
            }
        }
    }
    Ok(Certificate { queries, knowledge: session.knowledge().clone() })
}

/// Minimum certificate for the given problem. Requires the realization and
/// respects the model's size cap.
pub fn min_certificate(problem: &CertificateProblem) -> Result<Certificate> {
    let n = problem.instance.n();
    let limit = model_limit(problem.model);
    if n > limit {
        return Err(Error::OracleLimit { n, limit });
    }
    let real = problem.instance.realization()?.clone();
    match (&problem.matching, problem.target) {
        (Some(m), CertTarget::Stable) => {
            if !problem.instance.is_stable(m)? {
                return Err(Error::Precondition(
                    "no certificate exists: the matching is unstable under the realization"
                        .into(),
                ));
            }
            min_stable_verification(problem.model, &problem.instance.profile, &real, m)
        }
        (Some(m), CertTarget::StableBOptimal) => {
            if problem.instance.b_optimal_matching()? != *m {
                return Err(Error::Precondition(
                    "no certificate exists: the matching is not B-optimal under the realization"
                        .into(),
                ));
            }
            let cert =
                min_b_optimal_verification(problem.model, &problem.instance.profile, &real, m)?;
            debug_assert!(knowledge::certifies_b_optimal(
                &cert.knowledge,
                &problem.instance.profile,
                m
            ));
            if n <= crate::oracle_limit() {
                let ok = knowledge::certifies_semantic(
                    &cert.knowledge,
                    &problem.instance.profile,
                    m,
                    CertTarget::StableBOptimal,
                    crate::oracle_limit(),
                )?;
                if !ok {
                    return Err(Error::InconsistentAnswers(
                        "structural certificate failed the semantic ground truth".into(),
                    ));
                }
            }
            Ok(cert)
        }
        (Some(m), CertTarget::StableAOptimal) => {
            if problem.instance.a_optimal_matching()? != *m {
                return Err(Error::Precondition(
                    "no certificate exists: the matching is not A-optimal under the realization"
                        .into(),
                ));
            }
            // No closed-form certificate predicate is known for A-optimality
            // of an arbitrary matching; fall back to exhaustive search over
            // query sets against the semantic oracle.
            if n > 4 {
                return Err(Error::OracleLimit { n, limit: 4 });
            }
            min_certificate_exhaustive(problem)
        }
        (None, CertTarget::Stable) => {
            let mut best: Option<Certificate> = None;
            for m in enumerate_stable_matchings(&problem.instance)? {
                let cert =
                    min_stable_verification(problem.model, &problem.instance.profile, &real, &m)?;
                if best.as_ref().map_or(true, |b| cert.size() < b.size()) {
                    best = Some(cert);
                }
            }
            best.ok_or_else(|| {
                Error::Precondition("no stable matching exists, which cannot happen".into())
            })
        }
        (None, CertTarget::StableAOptimal) => {
            // The proposer-side deferred acceptance transcript is itself an
            // optimal certificate: replaying it under any consistent
            // completion reproduces the same A-optimal matching.
            let mut session = Session::fixed(real.clone());
            match problem.model {
                QueryModel::Comparison => {
                    solve::find_a_optimal_comparison(&problem.instance.profile, &mut session)?;
                }
                QueryModel::Interview => {
                    solve::find_a_optimal_interview(&problem.instance.profile, &mut session)?;
                }
                QueryModel::Set => {
                    return Err(Error::Precondition(
                        "no optimal set-query strategy is known for finding A-optimal matchings"
                            .into(),
                    ))
                }
            }
            let queries: Vec<Query> =
                session.transcript().entries().iter().map(|(q, _)| q.clone()).collect();
            replay(&real, queries)
        }
        (None, CertTarget::StableBOptimal) => {
            // Finding and verifying coincide for the B-optimal target.
            let m = problem.instance.b_optimal_matching()?;
            let sub = CertificateProblem {
                model: problem.model,
                target: CertTarget::StableBOptimal,
                instance: problem.instance.clone(),
                matching: Some(m),
            };
            min_certificate(&sub)
        }
    }
}

/// Minimum verification certificate for plain stability. Decomposes exactly
/// per B-agent: the blockers of each `b` must all be related to `M(b)`, and
/// queries to one B-agent say nothing about another.
fn min_stable_verification(
    model: QueryModel,
    profile: &PreferenceProfile,
    real: &Realization,
    m: &Matching,
) -> Result<Certificate> {
    let n = profile.n();
    let mut queries = Vec::new();
    for b in 0..n {
        let blockers = potential_blockers(profile, m, b);
        if blockers.is_empty() {
            continue;
        }
        let partner = m.pair_of_b(b);
        match model {
            QueryModel::Comparison => {
                // Per-agent search over comparison sets at this b; the
                // minimum always ends up |blockers| but is found, not assumed.
                let picked = min_relating_queries(n, real, b, partner, &blockers);
                queries.extend(picked.into_iter().map(|(x, y)| Query::Prefer { b, a1: x, a2: y }));
            }
            QueryModel::Set => {
                let mut set = blockers;
                set.push(partner);
                queries.push(Query::Top { b, set });
            }
            QueryModel::Interview => {
                queries.push(Query::Interview { b, a: partner });
                queries.extend(blockers.into_iter().map(|a| Query::Interview { b, a }));
            }
        }
    }
    replay(real, queries)
}

/// Smallest set of comparison queries at `b` whose closure relates every
/// target to the partner. Iterative deepening over pair sets.
fn min_relating_queries(
    n: usize,
    real: &Realization,
    b: usize,
    partner: usize,
    targets: &[usize],
) -> Vec<(usize, usize)> {
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    fn closure_ok(
        real: &Realization,
        b: usize,
        partner: usize,
        targets: &[usize],
        chosen: &[(usize, usize)],
        n: usize,
    ) -> bool {
        let mut k = KnowledgeState::new(n);
        for &(x, y) in chosen {
            let (w, l) = if real.prefers(b, x, y) { (x, y) } else { (y, x) };
            k.assert_relation(b, w, l).expect("true answers are consistent");
        }
        targets.iter().all(|&a| k.entails(b, partner, a))
    }
    for depth in 0..=pairs.len() {
        let mut chosen = Vec::with_capacity(depth);
        if search_pairs(&pairs, 0, depth, &mut chosen, &mut |c| {
            closure_ok(real, b, partner, targets, c, n)
        }) {
            return chosen;
        }
    }
    unreachable!("querying every pair relates everything");
}

fn search_pairs(
    pairs: &[(usize, usize)],
    from: usize,
    depth: usize,
    chosen: &mut Vec<(usize, usize)>,
    goal: &mut impl FnMut(&[(usize, usize)]) -> bool,
) -> bool {
    if depth == 0 {
        return goal(chosen);
    }
    for i in from..pairs.len() {
        chosen.push(pairs[i]);
        if search_pairs(pairs, i + 1, depth - 1, chosen, goal) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// A structural choice in a B-optimality certificate: refute one candidate
/// edge, confirm one rotation edge (killing everything below it), or — in
/// the set model — pay one B-agent to refute all its refutable edges at
/// once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Refute { a: usize, b: usize },
    Confirm { a: usize, b: usize },
    PayB { b: usize },
}

struct BOptimalSolver<'x> {
    model: QueryModel,
    profile: &'x PreferenceProfile,
    m: &'x Matching,
    /// Below-partner candidates per agent, in preference order, with
    /// `true` when the B-agent truly prefers its partner (refutable).
    below: Vec<Vec<(usize, bool)>>,
    /// B-agents whose stability query is already paid for.
    stability_b: Vec<bool>,
}

impl<'x> BOptimalSolver<'x> {
    fn new(
        model: QueryModel,
        profile: &'x PreferenceProfile,
        real: &'x Realization,
        m: &'x Matching,
    ) -> Self {
        let n = profile.n();
        let below = (0..n)
            .map(|a| {
                let pr = profile.rank(a, m.pair_of_a(a));
                profile.list(a)[pr + 1..]
                    .iter()
                    .map(|&b| (b, real.prefers(b, m.pair_of_b(b), a)))
                    .collect()
            })
            .collect();
        let stability_b =
            (0..n).map(|b| !potential_blockers(profile, m, b).is_empty()).collect();
        BOptimalSolver { model, profile, m, below, stability_b }
    }

    fn arc_survives(&self, a: usize, b: usize, chosen: &[Choice]) -> bool {
        let rank_b = self.profile.rank(a, b);
        for &(b2, refutable) in &self.below[a] {
            if b2 == b {
                if refutable {
                    if chosen.contains(&Choice::Refute { a, b }) {
                        return false;
                    }
                    if self.model == QueryModel::Set
                        && (self.stability_b[b] || chosen.contains(&Choice::PayB { b }))
                    {
                        return false;
                    }
                }
            } else if self.profile.rank(a, b2) < rank_b
                && chosen.contains(&Choice::Confirm { a, b: b2 })
            {
                return false;
            }
        }
        true
    }

    /// Shortest surviving alternating cycle, as (a, b) candidate arcs.
    fn shortest_cycle(&self, chosen: &[Choice]) -> Option<Vec<(usize, usize)>> {
        let n = self.profile.n();
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|a| {
                self.below[a]
                    .iter()
                    .filter(|&&(b, _)| self.arc_survives(a, b, chosen))
                    .map(|&(b, _)| self.m.pair_of_b(b))
                    .collect()
            })
            .collect();
        let mut best: Option<Vec<usize>> = None;
        for start in 0..n {
            let mut prev = vec![usize::MAX; n];
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(start);
            let mut hit = false;
            'bfs: while let Some(v) = queue.pop_front() {
                for &w in &succ[v] {
                    if w == start {
                        prev[start] = v;
                        hit = true;
                        break 'bfs;
                    }
                    if prev[w] == usize::MAX && w != start {
                        prev[w] = v;
                        queue.push_back(w);
                    }
                }
            }
            if !hit {
                continue;
            }
            let mut nodes = vec![start];
            let mut v = prev[start];
            while v != start {
                nodes.push(v);
                v = prev[v];
            }
            nodes.reverse(); // now in walk order start -> ... -> start
            if best.as_ref().map_or(true, |b| nodes.len() < b.len()) {
                best = Some(nodes);
            }
        }
        let nodes = best?;
        let arcs = nodes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let next_a = nodes[(i + 1) % nodes.len()];
                (a, self.m.pair_of_a(next_a))
            })
            .collect();
        Some(arcs)
    }

    fn options_for_arc(&self, a: usize, b: usize) -> Vec<Choice> {
        let mut out = Vec::new();
        let rank_b = self.profile.rank(a, b);
        for &(b2, refutable) in &self.below[a] {
            if b2 == b && refutable {
                out.push(match self.model {
                    QueryModel::Set => Choice::PayB { b },
                    _ => Choice::Refute { a, b },
                });
            }
            if self.profile.rank(a, b2) < rank_b && !refutable {
                out.push(Choice::Confirm { a, b: b2 });
            }
        }
        out
    }

    fn cost(&self, chosen: &[Choice]) -> usize {
        match self.model {
            QueryModel::Comparison => chosen.len(),
            QueryModel::Set => chosen.len(),
            QueryModel::Interview => {
                // Each active B-agent pays one interview for the partner and
                // one per distinct agent that must be related to it.
                let n = self.profile.n();
                let mut per_b: Vec<std::collections::BTreeSet<usize>> =
                    (0..n).map(|b| potential_blockers(self.profile, self.m, b).into_iter().collect())
                        .collect();
                for c in chosen {
                    match *c {
                        Choice::Refute { a, b } | Choice::Confirm { a, b } => {
                            per_b[b].insert(a);
                        }
                        Choice::PayB { .. } => unreachable!("interview model has no PayB"),
                    }
                }
                per_b.iter().map(|s| if s.is_empty() { 0 } else { s.len() + 1 }).sum()
            }
        }
    }

    fn base_cost(&self) -> usize {
        match self.model {
            QueryModel::Comparison => (0..self.profile.n())
                .map(|b| potential_blockers(self.profile, self.m, b).len())
                .sum(),
            QueryModel::Set => self.stability_b.iter().filter(|&&x| x).count(),
            QueryModel::Interview => self.cost(&[]),
        }
    }

    fn extra_cost(&self, chosen: &[Choice]) -> usize {
        match self.model {
            QueryModel::Comparison | QueryModel::Set => chosen.len(),
            QueryModel::Interview => self.cost(chosen) - self.cost(&[]),
        }
    }

    fn solve(&self) -> Vec<Choice> {
        let mut best: Option<(usize, Vec<Choice>)> = None;
        let mut chosen = Vec::new();
        self.recurse(&mut chosen, &mut best);
        best.expect("a B-optimal matching always admits a certificate").1
    }

    fn recurse(&self, chosen: &mut Vec<Choice>, best: &mut Option<(usize, Vec<Choice>)>) {
        let cost = self.extra_cost(chosen);
        if let Some((bc, _)) = best {
            if cost >= *bc {
                return;
            }
        }
        match self.shortest_cycle(chosen) {
            None => {
                if best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
                    *best = Some((cost, chosen.clone()));
                }
            }
            Some(cycle) => {
                let mut options = Vec::new();
                for (a, b) in cycle {
                    for o in self.options_for_arc(a, b) {
                        if !chosen.contains(&o) && !options.contains(&o) {
                            options.push(o);
                        }
                    }
                }
                debug_assert!(
                    !options.is_empty(),
                    "a surviving cycle with no removal options contradicts B-optimality"
                );
                for o in options {
                    chosen.push(o);
                    self.recurse(chosen, best);
                    chosen.pop();
                }
            }
        }
    }

    /// Canonical witness queries for the chosen structure.
    fn witness(&self, chosen: &[Choice]) -> Vec<Query> {
        let n = self.profile.n();
        let mut queries = Vec::new();
        match self.model {
            QueryModel::Comparison => {
                for b in 0..n {
                    let partner = self.m.pair_of_b(b);
                    for a in potential_blockers(self.profile, self.m, b) {
                        queries.push(Query::Prefer { b, a1: partner, a2: a });
                    }
                }
                for c in chosen {
                    match *c {
                        Choice::Refute { a, b } | Choice::Confirm { a, b } => {
                            queries.push(Query::Prefer { b, a1: a, a2: self.m.pair_of_b(b) });
                        }
                        Choice::PayB { .. } => unreachable!(),
                    }
                }
            }
            QueryModel::Set => {
                let paid: Vec<usize> = (0..n)
                    .filter(|&b| {
                        self.stability_b[b] || chosen.contains(&Choice::PayB { b })
                    })
                    .collect();
                for b in paid {
                    let mut set = potential_blockers(self.profile, self.m, b);
                    for a in 0..n {
                        if self.below[a].iter().any(|&(b2, refutable)| b2 == b && refutable) {
                            set.push(a);
                        }
                    }
                    set.push(self.m.pair_of_b(b));
                    set.sort_unstable();
                    set.dedup();
                    queries.push(Query::Top { b, set });
                }
                for c in chosen {
                    if let Choice::Confirm { a, b } = *c {
                        queries.push(Query::Top { b, set: vec![a, self.m.pair_of_b(b)] });
                    }
                }
            }
            QueryModel::Interview => {
                let mut per_b: Vec<std::collections::BTreeSet<usize>> = (0..n)
                    .map(|b| potential_blockers(self.profile, self.m, b).into_iter().collect())
                    .collect();
                for c in chosen {
                    match *c {
                        Choice::Refute { a, b } | Choice::Confirm { a, b } => {
                            per_b[b].insert(a);
                        }
                        Choice::PayB { .. } => unreachable!(),
                    }
                }
                for (b, agents) in per_b.into_iter().enumerate() {
                    if agents.is_empty() {
                        continue;
                    }
                    queries.push(Query::Interview { b, a: self.m.pair_of_b(b) });
                    queries.extend(agents.into_iter().map(|a| Query::Interview { b, a }));
                }
            }
        }
        queries
    }
}

/// Minimum verification certificate for "stable and B-optimal".
fn min_b_optimal_verification(
    model: QueryModel,
    profile: &PreferenceProfile,
    real: &Realization,
    m: &Matching,
) -> Result<Certificate> {
    let solver = BOptimalSolver::new(model, profile, real, m);
    let chosen = solver.solve();
    let cert = replay(real, solver.witness(&chosen))?;
    debug_assert_eq!(cert.size(), solver.base_cost() + solver.extra_cost(&chosen));
    Ok(cert)
}

/// Exhaustive reference search over raw query sets with the semantic oracle
/// as the goal. Exponential twice over; for validating the structural
/// solvers at tiny sizes and for targets with no known structure.
pub fn min_certificate_exhaustive(problem: &CertificateProblem) -> Result<Certificate> {
    let n = problem.instance.n();
    let real = problem.instance.realization()?.clone();
    let profile = &problem.instance.profile;
    let limit = crate::oracle_limit();

    let universe: Vec<Query> = match problem.model {
        QueryModel::Comparison => (0..n)
            .flat_map(|b| {
                (0..n).flat_map(move |x| (x + 1..n).map(move |y| Query::Prefer { b, a1: x, a2: y }))
            })
            .collect(),
        QueryModel::Interview => (0..n)
            .flat_map(|b| (0..n).map(move |a| Query::Interview { b, a }))
            .collect(),
        QueryModel::Set => (0..n)
            .flat_map(|b| {
                (0u64..1 << n).filter(|s| s.count_ones() >= 2).map(move |s| Query::Top {
                    b,
                    set: (0..n).filter(|&a| s >> a & 1 == 1).collect(),
                })
            })
            .collect(),
    };

    let stable_matchings = enumerate_stable_matchings(&problem.instance)?;
    let mut goal = |queries: &[Query]| -> Result<bool> {
        let cert = replay(&real, queries.to_vec())?;
        match &problem.matching {
            Some(m) => knowledge::certifies_semantic(
                &cert.knowledge,
                profile,
                m,
                problem.target,
                limit,
            ),
            None => {
                for m in &stable_matchings {
                    if knowledge::certifies_semantic(
                        &cert.knowledge,
                        profile,
                        m,
                        problem.target,
                        limit,
                    )? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    };

    for depth in 0..=universe.len() {
        let mut chosen: Vec<usize> = Vec::with_capacity(depth);
        if let Some(found) = search_queries(&universe, 0, depth, &mut chosen, &mut goal)? {
            return replay(&real, found);
        }
    }
    Err(Error::Precondition("no certificate exists for this problem".into()))
}

fn search_queries(
    universe: &[Query],
    from: usize,
    depth: usize,
    chosen: &mut Vec<usize>,
    goal: &mut impl FnMut(&[Query]) -> Result<bool>,
) -> Result<Option<Vec<Query>>> {
    if depth == 0 {
        let queries: Vec<Query> = chosen.iter().map(|&i| universe[i].clone()).collect();
        if goal(&queries)? {
            return Ok(Some(queries));
        }
        return Ok(None);
    }
    for i in from..universe.len() {
        chosen.push(i);
        if let Some(found) = search_queries(universe, i + 1, depth - 1, chosen, goal)? {
            return Ok(Some(found));
        }
        chosen.pop();
    }
    Ok(None)
}

/// Constructive B-optimality certifier in the comparison model: verify
/// stability, confirm every rotation edge, then refute a feedback arc set of
/// the potential-rotation-edge digraph. With an exact feedback set the
/// result is within the approximation envelope; greedy mode scales further
/// but promises nothing.
pub fn certify_b_optimal_approx_comparison(
    instance: &Instance,
    m: &Matching,
    mode: FasMode,
) -> Result<Certificate> {
    let real = instance.realization()?;
    let profile = &instance.profile;
    let n = profile.n();
    if !instance.is_stable(m)? || !rotation::exposed_rotations(instance, m)?.is_empty() {
        return Err(Error::Precondition(
            "the matching is not stable and B-optimal under the realization".into(),
        ));
    }
    let mut queries = Vec::new();
    for b in 0..n {
        let partner = m.pair_of_b(b);
        for a in potential_blockers(profile, m, b) {
            queries.push(Query::Prefer { b, a1: partner, a2: a });
        }
    }
    // Vertices 0..n are A-agents, n..2n are B-agents. Matching and confirmed
    // rotation edges are rigid; the unresolved potential edges are soft.
    let mut rigid: Vec<(usize, usize)> = (0..n).map(|b| (n + b, m.pair_of_b(b))).collect();
    let mut soft = Vec::new();
    let mut soft_pairs = Vec::new();
    for a in 0..n {
        let edge = rotation::r_edge(instance, m, a)?;
        if let Some(b) = edge {
            queries.push(Query::Prefer { b, a1: a, a2: m.pair_of_b(b) });
            rigid.push((a, n + b));
        }
        let pr = profile.rank(a, m.pair_of_a(a));
        let stop = edge.map(|b| profile.rank(a, b)).unwrap_or(n);
        for &b in &profile.list(a)[pr + 1..] {
            if profile.rank(a, b) >= stop {
                break;
            }
            soft.push((a, n + b));
            soft_pairs.push((a, b));
        }
    }
    let g = WeightedDigraph { n: 2 * n, rigid, soft };
    let fas = feedback_arc_set(&g, mode)?;
    for idx in fas {
        let (a, b) = soft_pairs[idx];
        queries.push(Query::Prefer { b, a1: a, a2: m.pair_of_b(b) });
    }
    let cert = replay(real, queries)?;
    if !knowledge::certifies_b_optimal(&cert.knowledge, profile, m) {
        return Err(Error::InconsistentAnswers(
            "feedback-set certificate failed to certify B-optimality".into(),
        ));
    }
    Ok(cert)
}

/// Constructive B-optimality certifier in the set model, in at most 3n
/// queries: one stability query per B-agent with blockers, one query per
/// B-agent refuting all its refutable potential rotation edges at once, and
/// one two-element query confirming each rotation edge.
pub fn certify_b_optimal_offline_set(instance: &Instance, m: &Matching) -> Result<Certificate> {
    let real = instance.realization()?;
    let profile = &instance.profile;
    let n = profile.n();
    if !instance.is_stable(m)? || !rotation::exposed_rotations(instance, m)?.is_empty() {
        return Err(Error::Precondition(
            "the matching is not stable and B-optimal under the realization".into(),
        ));
    }
    let mut queries = Vec::new();
    for b in 0..n {
        let mut set = potential_blockers(profile, m, b);
        if set.is_empty() {
            continue;
        }
        set.push(m.pair_of_b(b));
        queries.push(Query::Top { b, set });
    }
    for b in 0..n {
        let partner = m.pair_of_b(b);
        let mut set: Vec<usize> = (0..n)
            .filter(|&a| {
                a != partner
                    && profile.prefers(a, m.pair_of_a(a), b)
                    && real.prefers(b, partner, a)
            })
            .collect();
        if set.is_empty() {
            continue;
        }
        set.push(partner);
        queries.push(Query::Top { b, set });
    }
    for a in 0..n {
        if let Some(b) = rotation::r_edge(instance, m, a)? {
            queries.push(Query::Top { b, set: vec![a, m.pair_of_b(b)] });
        }
    }
    debug_assert!(queries.len() <= 3 * n);
    let cert = replay(real, queries)?;
    if !knowledge::certifies_b_optimal(&cert.knowledge, profile, m) {
        return Err(Error::InconsistentAnswers(
            "linear set certificate failed to certify B-optimality".into(),
        ));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn problem(
        inst: &Instance,
        model: QueryModel,
        target: CertTarget,
        m: Option<Matching>,
    ) -> CertificateProblem {
        CertificateProblem { model, target, instance: inst.clone(), matching: m }
    }

    #[test]
    fn stable_minimum_examples() {
        let id3 = fixtures::identity(3);
        let cert = min_certificate(&problem(
            &id3,
            QueryModel::Comparison,
            CertTarget::Stable,
            Some(Matching::identity(3)),
        ))
        .unwrap();
        assert_eq!(cert.size(), 0);

        let rot = fixtures::rot2();
        let swap = Matching::new(vec![1, 0]).unwrap();
        let cert = min_certificate(&problem(
            &rot,
            QueryModel::Comparison,
            CertTarget::Stable,
            Some(swap.clone()),
        ))
        .unwrap();
        assert_eq!(cert.size(), 2);
        assert!(knowledge::certifies_stable(&cert.knowledge, &rot.profile, &swap));
    }

    #[test]
    fn b_optimal_minimum_on_reductions() {
        let cyc3 = DirectedGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let inst = gen_fas_reduction(&cyc3).unwrap();
        let m = inst.matching.clone().unwrap();
        let cert = min_certificate(&problem(
            &inst,
            QueryModel::Comparison,
            CertTarget::StableBOptimal,
            Some(m),
        ))
        .unwrap();
        assert_eq!(cert.size(), 4, "three stability queries plus one feedback arc");
    }

    #[test]
    fn structural_matches_exhaustive_at_tiny_n() {
        for seed in 0..25u64 {
            let n = 2 + (seed as usize) % 2;
            let inst = fixtures::random(n, seed * 5 + 2);
            let b_opt = inst.b_optimal_matching().unwrap();
            for model in [QueryModel::Comparison, QueryModel::Set, QueryModel::Interview] {
                let p = problem(&inst, model, CertTarget::StableBOptimal, Some(b_opt.clone()));
                let structural = min_certificate(&p).unwrap();
                let exhaustive = min_certificate_exhaustive(&p).unwrap();
                assert_eq!(
                    structural.size(),
                    exhaustive.size(),
                    "model {model:?} seed {seed} n {n}"
                );
            }
            // Stability certificates agree too.
            for m in enumerate_stable_matchings(&inst).unwrap() {
                for model in [QueryModel::Comparison, QueryModel::Set, QueryModel::Interview] {
                    let p = problem(&inst, model, CertTarget::Stable, Some(m.clone()));
                    let structural = min_certificate(&p).unwrap();
                    let exhaustive = min_certificate_exhaustive(&p).unwrap();
                    assert_eq!(structural.size(), exhaustive.size());
                }
            }
        }
    }

    #[test]
    fn structural_matches_exhaustive_on_three_agent_instances() {
        for seed in [3u64, 9, 14, 21, 33] {
            let inst = fixtures::random(3, seed);
            let b_opt = inst.b_optimal_matching().unwrap();
            for model in [QueryModel::Comparison, QueryModel::Set, QueryModel::Interview] {
                let p = problem(&inst, model, CertTarget::StableBOptimal, Some(b_opt.clone()));
                let structural = min_certificate(&p).unwrap();
                let exhaustive = min_certificate_exhaustive(&p).unwrap();
                assert_eq!(structural.size(), exhaustive.size(), "model {model:?} seed {seed}");
            }
        }
    }

    #[test]
    fn finding_stable_equals_a_optimal_stability() {
        for seed in 0..20u64 {
            let n = 2 + (seed as usize % 4);
            let inst = fixtures::random(n, seed * 11);
            let find = min_certificate(&problem(&inst, QueryModel::Comparison, CertTarget::Stable, None))
                .unwrap();
            let a_opt = inst.a_optimal_matching().unwrap();
            let verify = min_certificate(&problem(
                &inst,
                QueryModel::Comparison,
                CertTarget::Stable,
                Some(a_opt),
            ))
            .unwrap();
            assert_eq!(find.size(), verify.size(), "seed {seed}");
        }
    }

    #[test]
    fn unstable_matchings_admit_no_certificate() {
        let eq = fixtures::equal_a(2);
        let err = min_certificate(&problem(
            &eq,
            QueryModel::Comparison,
            CertTarget::Stable,
            Some(Matching::identity(2)),
        ))
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn approx_certifier_on_fixtures() {
        let id2 = fixtures::identity(2);
        let cert =
            certify_b_optimal_approx_comparison(&id2, &Matching::identity(2), FasMode::Exact)
                .unwrap();
        assert_eq!(cert.size(), 1, "one refutation breaks the only candidate cycle");

        let cyc3 = DirectedGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let inst = gen_fas_reduction(&cyc3).unwrap();
        let m = inst.matching.clone().unwrap();
        let cert = certify_b_optimal_approx_comparison(&inst, &m, FasMode::Exact).unwrap();
        assert_eq!(cert.size(), 4);

        let fig = fixtures::figure1(12).unwrap();
        let cert =
            certify_b_optimal_approx_comparison(&fig, &Matching::identity(12), FasMode::Greedy)
                .unwrap();
        assert!(cert.size() <= 22, "got {}", cert.size());
    }

    #[test]
    fn approx_rejects_non_b_optimal() {
        let rot = fixtures::rot2();
        let err = certify_b_optimal_approx_comparison(&rot, &Matching::identity(2), FasMode::Exact)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn set_certifier_on_fixtures() {
        let id2 = fixtures::identity(2);
        let cert = certify_b_optimal_offline_set(&id2, &Matching::identity(2)).unwrap();
        assert!(cert.size() <= 6);

        let rot = fixtures::rot2();
        let swap = Matching::new(vec![1, 0]).unwrap();
        let cert = certify_b_optimal_offline_set(&rot, &swap).unwrap();
        assert!(cert.size() <= 6);

        for n in [4usize, 9, 16, 33] {
            let inst = fixtures::random(n, n as u64);
            let m = inst.b_optimal_matching().unwrap();
            let cert = certify_b_optimal_offline_set(&inst, &m).unwrap();
            assert!(cert.size() <= 3 * n);
            assert!(cert.size() + 1 >= n, "linear certifier stays near the n-1 floor");
        }
    }

    #[test]
    fn certificates_pass_the_semantic_oracle() {
        for seed in 0..12u64 {
            let n = 2 + (seed as usize % 4);
            let inst = fixtures::random(n, seed * 23 + 1);
            let m = inst.b_optimal_matching().unwrap();
            for cert in [
                certify_b_optimal_approx_comparison(&inst, &m, FasMode::Exact).unwrap(),
                certify_b_optimal_offline_set(&inst, &m).unwrap(),
            ] {
                assert!(knowledge::certifies_semantic(
                    &cert.knowledge,
                    &inst.profile,
                    &m,
                    CertTarget::StableBOptimal,
                    6
                )
                .unwrap());
            }
        }
    }

    #[test]
    fn approx_envelope_against_the_optimum() {
        for seed in 0..20u64 {
            let n = 2 + (seed as usize % 4);
            let inst = fixtures::random(n, seed * 7 + 4);
            let m = inst.b_optimal_matching().unwrap();
            let opt = min_certificate(&problem(
                &inst,
                QueryModel::Comparison,
                CertTarget::StableBOptimal,
                Some(m.clone()),
            ))
            .unwrap();
            let approx = certify_b_optimal_approx_comparison(&inst, &m, FasMode::Exact).unwrap();
            assert!(
                approx.size() <= 2 * opt.size() + n + 1,
                "approx {} vs opt {} at n={n} seed {seed}",
                approx.size(),
                opt.size()
            );
        }
    }

    #[test]
    fn stable_matching_enumeration() {
        let rot = fixtures::rot2();
        let all = enumerate_stable_matchings(&rot).unwrap();
        assert_eq!(all.len(), 2);
        for seed in 0..20u64 {
            let inst = fixtures::random(4, seed);
            let all = enumerate_stable_matchings(&inst).unwrap();
            let a_opt = inst.a_optimal_matching().unwrap();
            let b_opt = inst.b_optimal_matching().unwrap();
            assert!(all.contains(&a_opt));
            assert!(all.contains(&b_opt));
            // Element-wise optimality of the proposer-optimal outputs.
            let real = inst.realization().unwrap();
            for m in &all {
                for a in 0..4 {
                    assert!(
                        inst.profile.rank(a, a_opt.pair_of_a(a))
                            <= inst.profile.rank(a, m.pair_of_a(a))
                    );
                }
                for b in 0..4 {
                    assert!(real.rank(b, b_opt.pair_of_b(b)) <= real.rank(b, m.pair_of_b(b)));
                }
            }
        }
    }
}
