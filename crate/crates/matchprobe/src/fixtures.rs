//! Canonical named instances used across tests, generators, and the CLI.
//!
//! Every "arbitrary order" slot in a construction is filled in increasing
//! index order so that all fixtures are fully reproducible.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, Matching, PreferenceProfile, Realization};
use crate::{Error, Result};

fn remaining_increasing(n: usize, used: &[usize]) -> Vec<usize> {
    (0..n).filter(|x| !used.contains(x)).collect()
}

/// `a_i`'s list starts with `b_i`, `b_j`'s list starts with `a_j`; everyone
/// else follows in increasing index order. The identity matching pairs
/// mutual top choices.
pub fn identity(n: usize) -> Instance {
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut row = vec![i];
            row.extend(remaining_increasing(n, &[i]));
            row
        })
        .collect();
    let profile = PreferenceProfile::new(rows.clone()).expect("valid rows");
    let realization = Realization::new(rows).expect("valid rows");
    Instance::new(format!("identity-{n}"), profile)
        .with_realization(realization)
        .expect("dims match")
}

/// n=2 instance with exactly one rotation: the A-optimal matching is the
/// identity and the B-optimal matching is the swap.
pub fn rot2() -> Instance {
    let profile = PreferenceProfile::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
    let realization = Realization::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
    Instance::new("rot2", profile).with_realization(realization).unwrap()
}

/// n=2 instance where both A-agents share a top choice, forcing one query
/// in the A-proposing deferred acceptance.
pub fn swap2() -> Instance {
    let profile = PreferenceProfile::new(vec![vec![0, 1], vec![0, 1]]).unwrap();
    let realization = Realization::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
    Instance::new("swap2", profile).with_realization(realization).unwrap()
}

/// All A-rows equal `(b_0, ..., b_{n-1})`; `b_j` ranks A in decreasing index
/// order. The unique stable matching pairs `b_j` with `a_{n-1-j}`.
pub fn equal_a(n: usize) -> Instance {
    let a_row: Vec<usize> = (0..n).collect();
    let b_row: Vec<usize> = (0..n).rev().collect();
    let profile = PreferenceProfile::new(vec![a_row; n]).unwrap();
    let realization = Realization::new(vec![b_row; n]).unwrap();
    Instance::new(format!("equal-a-{n}"), profile).with_realization(realization).unwrap()
}

/// The 2x2 two-sided verification fixture: the identity matching is stable,
/// but each side's oracle answers steer a pair-first prober into two queries
/// per non-matching pair while one query per pair would have sufficed.
pub fn two_sided() -> Instance {
    let mut inst = rot2();
    inst.label = "two-sided".into();
    inst.with_matching(Matching::identity(2)).unwrap()
}

/// Uniformly random preference lists on both sides, deterministic in `seed`.
pub fn random(n: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen_rows = |count: usize| -> Vec<Vec<usize>> {
        (0..count)
            .map(|_| {
                let mut row: Vec<usize> = (0..n).collect();
                row.shuffle(&mut rng);
                row
            })
            .collect()
    };
    let profile = PreferenceProfile::new(gen_rows(n)).unwrap();
    let realization = Realization::new(gen_rows(n)).unwrap();
    Instance::new(format!("random-{n}-seed{seed}"), profile)
        .with_realization(realization)
        .unwrap()
}

pub(crate) fn check_figure1_n(n: usize) -> Result<()> {
    if n < 4 || n % 4 != 0 {
        return Err(Error::Precondition(format!(
            "the block construction needs n to be a positive multiple of 4, got {n}"
        )));
    }
    Ok(())
}

/// Known A-side lists of the block construction: the lower half of A ranks
/// its own partner first and then the whole upper half of B, the upper half
/// ranks its partner and then `b_{n-1}`, and `a_{n-1}` wants only its partner.
pub(crate) fn figure1_profile(n: usize) -> PreferenceProfile {
    let half = n / 2;
    let mut rows = Vec::with_capacity(n);
    for i in 0..half {
        let mut row = vec![i];
        row.extend(half..n);
        row.extend((0..half).filter(|&x| x != i));
        rows.push(row);
    }
    for i in half..n - 1 {
        let mut row = vec![i, n - 1];
        row.extend(remaining_increasing(n, &[i, n - 1]));
        rows.push(row);
    }
    let mut last = vec![n - 1];
    last.extend(0..n - 1);
    rows.push(last);
    PreferenceProfile::new(rows).expect("valid construction")
}

/// Fixed lower-half B lists: consecutive pairs `(b_{i-1}, b_i)` each rank the
/// other member of the pair `(a_i, a_{i-1})` ahead of their own partner.
pub(crate) fn figure1_b1_list(n: usize, j: usize) -> Vec<usize> {
    let (first, second) = if j % 2 == 1 { (j - 1, j) } else { (j + 1, j) };
    let mut row = vec![first, second];
    row.extend(remaining_increasing(n, &[first, second]));
    row
}

/// The fixed middle block of an upper-half B list: the upper half of A,
/// cyclically shifted so `a_j` comes first, except that `b_{n-1}` keeps its
/// own partner `a_{n-1}` last.
pub(crate) fn figure1_middle_block(n: usize, j: usize) -> Vec<usize> {
    let half = n / 2;
    if j == n - 1 {
        (half..n).collect()
    } else {
        let mut block: Vec<usize> = (j..n).collect();
        block.extend(half..j);
        block
    }
}

/// Assemble the upper-half B lists from a choice of front group (lower-half
/// A-agents placed above the partner) per upper-half agent.
pub(crate) fn figure1_realization_from_fronts(n: usize, fronts: &[Vec<usize>]) -> Realization {
    let half = n / 2;
    let mut rows = Vec::with_capacity(n);
    for j in 0..half {
        rows.push(figure1_b1_list(n, j));
    }
    for j in half..n {
        let front = &fronts[j - half];
        let mut row = front.clone();
        row.extend(figure1_middle_block(n, j));
        row.extend((0..half).filter(|x| !front.contains(x)));
        rows.push(row);
    }
    Realization::new(rows).expect("valid construction")
}

/// The block-construction profile paired with an explicit realization (for
/// example one produced by finalizing an adaptive adversary).
pub fn figure1_profile_instance(n: usize, realization: Realization) -> Instance {
    Instance::new(format!("figure1-{n}-finalized"), figure1_profile(n))
        .with_realization(realization)
        .expect("dims match")
        .with_matching(Matching::identity(n))
        .expect("dims match")
}

/// Static variant of the block construction: every lower-half A-agent's
/// rotation edge points at `b_{n-1}`. The identity matching is both A- and
/// B-optimal, and proving stability needs no queries at all.
pub fn figure1(n: usize) -> Result<Instance> {
    check_figure1_n(n)?;
    let half = n / 2;
    let mut fronts = vec![Vec::new(); half];
    fronts[half - 1] = (0..half).collect();
    let realization = figure1_realization_from_fronts(n, &fronts);
    Instance::new(format!("figure1-{n}"), figure1_profile(n))
        .with_realization(realization)?
        .with_matching(Matching::identity(n))
}

/// Randomized variant: per consecutive lower-half pair, one uniformly chosen
/// member gets its rotation edge to a uniformly chosen upper-half agent; the
/// other member's rotation edge falls back to its pair partner's B-agent.
pub fn figure1_randomized(n: usize, seed: u64) -> Result<Instance> {
    check_figure1_n(n)?;
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fronts = vec![Vec::new(); half];
    let mut i = 1;
    while i < half {
        let tuple = rand::Rng::gen_range(&mut rng, 0..2 * half);
        let k = if tuple % 2 == 0 { i - 1 } else { i };
        let j = half + tuple / 2;
        fronts[j - half].push(k);
        i += 2;
    }
    for f in &mut fronts {
        f.sort_unstable();
    }
    let realization = figure1_realization_from_fronts(n, &fronts);
    Instance::new(format!("figure1-random-{n}-seed{seed}"), figure1_profile(n))
        .with_realization(realization)?
        .with_matching(Matching::identity(n))
}
