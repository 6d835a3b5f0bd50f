//! Hardness-reduction instance generators: digraphs become matching
//! instances whose minimum-certificate structure mirrors feedback arc set or
//! feedback vertex set, plus the interview-model variant with dummy agents.

use super::fas::DirectedGraph;
use crate::model::{Instance, Matching, PreferenceProfile, Realization};
use crate::Result;

/// Feedback-arc-set reduction. One agent pair `(a_v, b_v)` per vertex;
/// `a_v` ranks the partners of its out-neighbors *below* its own partner
/// (so each arc of the graph becomes a potential rotation edge) and
/// everyone else above. Every `b_v` ranks its partner first, making the
/// identity matching B-optimal and each potential rotation edge refutable.
/// Certifying B-optimality then costs the stability queries plus exactly a
/// minimum feedback arc set of the input graph.
pub fn gen_fas_reduction(graph: &DirectedGraph) -> Result<Instance> {
    let n = graph.n();
    let mut a_rows = Vec::with_capacity(n);
    for v in 0..n {
        let out = graph.out_neighbors(v);
        let mut row: Vec<usize> =
            (0..n).filter(|&w| w != v && !out.contains(&w)).collect();
        row.push(v);
        row.extend(out.iter().copied());
        a_rows.push(row);
    }
    let b_rows = partner_first_rows(n);
    let instance = Instance::new(format!("fas-n{n}"), PreferenceProfile::new(a_rows)?)
        .with_realization(Realization::new(b_rows)?)?
        .with_matching(Matching::identity(n))?;
    Ok(instance)
}

/// Feedback-vertex-set reduction for the set-query model: as above, but a
/// non-arc `(v, u)` places `b_u` *above* `a_v`'s partner instead of anywhere
/// specific, so one query `top(b_v, A)` clears every rotation edge into
/// `b_v` at once and minimum query sets mirror feedback vertex sets.
pub fn gen_fvs_reduction(graph: &DirectedGraph) -> Result<Instance> {
    let n = graph.n();
    let mut a_rows = Vec::with_capacity(n);
    for v in 0..n {
        let out = graph.out_neighbors(v);
        let mut row: Vec<usize> =
            (0..n).filter(|&w| w != v && !out.contains(&w)).collect();
        row.push(v);
        row.extend(out.iter().copied());
        a_rows.push(row);
    }
    let b_rows = partner_first_rows(n);
    let instance = Instance::new(format!("fvs-n{n}"), PreferenceProfile::new(a_rows)?)
        .with_realization(Realization::new(b_rows)?)?
        .with_matching(Matching::identity(n))?;
    Ok(instance)
}

/// Interview-model hardness instance: the arc-set reduction plus a dummy
/// pair `(z, z')` at the last index. `z'` is everyone's top choice and `z`
/// everyone's last, forcing `(z, z')` into the matching and a stability
/// interview at every other B-agent; after those, each interview carries
/// exactly one partner comparison, so the arc-set structure carries over.
pub fn gen_interview_hardness(graph: &DirectedGraph) -> Result<Instance> {
    let m = graph.n();
    let n = m + 1;
    let z = m;
    let base = gen_fas_reduction(graph)?;
    let mut a_rows = Vec::with_capacity(n);
    for v in 0..m {
        let mut row = vec![z];
        row.extend(base.profile.list(v).iter().copied());
        a_rows.push(row);
    }
    let mut z_row: Vec<usize> = (0..m).collect();
    z_row.push(z);
    a_rows.push(z_row);

    let base_real = base.realization()?;
    let mut b_rows = Vec::with_capacity(n);
    for v in 0..m {
        let mut row = base_real.list(v).to_vec();
        row.push(z);
        b_rows.push(row);
    }
    let mut zp_row = vec![z];
    zp_row.extend(0..m);
    b_rows.push(zp_row);

    let instance =
        Instance::new(format!("interview-hard-n{n}"), PreferenceProfile::new(a_rows)?)
            .with_realization(Realization::new(b_rows)?)?
            .with_matching(Matching::identity(n))?;
    Ok(instance)
}

fn partner_first_rows(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|v| {
            let mut row = vec![v];
            row.extend((0..n).filter(|&u| u != v));
            row
        })
        .collect()
}
