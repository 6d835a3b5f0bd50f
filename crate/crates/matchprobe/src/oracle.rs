//! Query oracles: the three query models executed against a hidden
//! realization or an adaptive adversary, with per-model counting and a
//! replayable transcript.
//!
//! Every issued query is counted, including semantically redundant ones;
//! deduplication is the caller's job. Each answer is folded into a
//! [`KnowledgeState`], so a session's knowledge is always exactly what the
//! transcript entails.

use serde::Serialize;

use crate::adversary::{Figure1Adversary, Figure1InterviewAdversary};
use crate::knowledge::KnowledgeState;
use crate::model::{Instance, Realization};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryModel {
    Comparison,
    Interview,
    Set,
}

/// One issued query. `PreferA` is the mirror-image comparison used only in
/// the two-sided verification setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Prefer { b: usize, a1: usize, a2: usize },
    PreferA { a: usize, b1: usize, b2: usize },
    Top { b: usize, set: Vec<usize> },
    Interview { b: usize, a: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Agent(usize),
    Order(Vec<usize>),
}

/// Ordered log of `(query, answer)` pairs with per-model counts.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<(Query, Answer)>,
    comparison: usize,
    interview: usize,
    set: usize,
}

impl Transcript {
    pub fn entries(&self) -> &[(Query, Answer)] {
        &self.entries
    }

    pub fn count(&self, model: QueryModel) -> usize {
        match model {
            QueryModel::Comparison => self.comparison,
            QueryModel::Interview => self.interview,
            QueryModel::Set => self.set,
        }
    }

    pub fn total(&self) -> usize {
        self.comparison + self.interview + self.set
    }

    pub(crate) fn push(&mut self, q: Query, a: Answer) {
        match q {
            Query::Prefer { .. } | Query::PreferA { .. } => self.comparison += 1,
            Query::Interview { .. } => self.interview += 1,
            Query::Top { .. } => self.set += 1,
        }
        self.entries.push((q, a));
    }

    /// JSON lines export: one `{"model", "b", "payload", "answer"}` object
    /// per issued query ("a" replaces "b" for A-side comparisons).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (q, a) in &self.entries {
            let record = match (q, a) {
                (Query::Prefer { b, a1, a2 }, Answer::Agent(w)) => serde_json::json!({
                    "model": "comparison", "b": b, "payload": [a1, a2], "answer": w,
                }),
                (Query::PreferA { a, b1, b2 }, Answer::Agent(w)) => serde_json::json!({
                    "model": "comparison", "a": a, "payload": [b1, b2], "answer": w,
                }),
                (Query::Top { b, set }, Answer::Agent(w)) => serde_json::json!({
                    "model": "set", "b": b, "payload": set, "answer": w,
                }),
                (Query::Interview { b, a }, Answer::Order(ord)) => serde_json::json!({
                    "model": "interview", "b": b, "payload": [a], "answer": ord,
                }),
                _ => unreachable!("answer shape matches query shape"),
            };
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }
}

/// Where answers come from: a fixed hidden realization, or an adaptive
/// adversary that commits to preferences only as queries force it to.
pub enum AnswerSource {
    Fixed(Realization),
    Figure1(Figure1Adversary),
    Figure1Interview(Figure1InterviewAdversary),
}

/// A single-threaded query session: one answer source, its transcript, and
/// the knowledge state derived from all answers so far.
pub struct Session {
    n: usize,
    source: AnswerSource,
    transcript: Transcript,
    knowledge: KnowledgeState,
    interviewed: Vec<Vec<usize>>,
}

impl Session {
    pub fn fixed(realization: Realization) -> Self {
        let n = realization.n();
        Session {
            n,
            source: AnswerSource::Fixed(realization),
            transcript: Transcript::default(),
            knowledge: KnowledgeState::new(n),
            interviewed: vec![Vec::new(); n],
        }
    }

    /// Fixed session backed by the instance's realization.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        Ok(Session::fixed(instance.realization()?.clone()))
    }

    pub fn adaptive(source: AnswerSource, n: usize) -> Self {
        Session {
            n,
            source,
            transcript: Transcript::default(),
            knowledge: KnowledgeState::new(n),
            interviewed: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn knowledge(&self) -> &KnowledgeState {
        &self.knowledge
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn count(&self, model: QueryModel) -> usize {
        self.transcript.count(model)
    }

    pub fn source(&self) -> &AnswerSource {
        &self.source
    }

    pub fn into_source(self) -> AnswerSource {
        self.source
    }

    /// Which of `a1`, `a2` does `b` prefer?
    pub fn prefer(&mut self, b: usize, a1: usize, a2: usize) -> Result<usize> {
        if a1 == a2 {
            return Err(Error::Precondition(format!(
                "prefer(b_{b}) needs two distinct A-agents, got a_{a1} twice"
            )));
        }
        let winner = match &mut self.source {
            AnswerSource::Fixed(real) => {
                if real.prefers(b, a1, a2) {
                    a1
                } else {
                    a2
                }
            }
            AnswerSource::Figure1(adv) => adv.answer_prefer(b, a1, a2)?,
            AnswerSource::Figure1Interview(_) => {
                return Err(Error::Precondition(
                    "this adaptive source only answers interview queries".into(),
                ))
            }
        };
        let loser = if winner == a1 { a2 } else { a1 };
        self.transcript.push(Query::Prefer { b, a1, a2 }, Answer::Agent(winner));
        self.knowledge.assert_relation(b, winner, loser)?;
        Ok(winner)
    }

    /// `b`'s most preferred element of `set`; asserts `|set| - 1` relations.
    pub fn top(&mut self, b: usize, set: &[usize]) -> Result<usize> {
        if set.is_empty() {
            return Err(Error::Precondition(format!("top(b_{b}) needs a non-empty set")));
        }
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != set.len() {
            return Err(Error::Precondition(format!("top(b_{b}) set has duplicates")));
        }
        let winner = match &mut self.source {
            AnswerSource::Fixed(real) => {
                *sorted.iter().min_by_key(|&&a| real.rank(b, a)).expect("non-empty")
            }
            _ => {
                return Err(Error::Precondition(
                    "adaptive sources do not answer set queries".into(),
                ))
            }
        };
        self.transcript.push(Query::Top { b, set: sorted.clone() }, Answer::Agent(winner));
        for a in sorted {
            if a != winner {
                self.knowledge.assert_relation(b, winner, a)?;
            }
        }
        Ok(winner)
    }

    /// Interview `a` at `b`: reveals `b`'s total order over everyone
    /// interviewed at `b` so far plus `a`. Re-interviewing is idempotent but
    /// still counted.
    pub fn interview(&mut self, b: usize, a: usize) -> Result<Vec<usize>> {
        if !self.interviewed[b].contains(&a) {
            self.interviewed[b].push(a);
        }
        let order = match &mut self.source {
            AnswerSource::Fixed(real) => {
                let mut prefix = self.interviewed[b].clone();
                prefix.sort_by_key(|&x| real.rank(b, x));
                prefix
            }
            AnswerSource::Figure1Interview(adv) => adv.interview(b, a)?,
            AnswerSource::Figure1(_) => {
                return Err(Error::Precondition(
                    "this adaptive source only answers comparison queries".into(),
                ))
            }
        };
        self.transcript.push(Query::Interview { b, a }, Answer::Order(order.clone()));
        for w in order.windows(2) {
            self.knowledge.assert_relation(b, w[0], w[1])?;
        }
        Ok(order)
    }

    /// Whether `a` has already been interviewed at `b`.
    pub fn is_interviewed(&self, b: usize, a: usize) -> bool {
        self.interviewed[b].contains(&a)
    }

    /// Answer a comparison through the interview model: interview both
    /// agents (skipping ones already interviewed at `b`) and read the
    /// relative order off the revealed prefix.
    pub fn prefer_via_interviews(&mut self, b: usize, a1: usize, a2: usize) -> Result<usize> {
        for a in [a1, a2] {
            if !self.is_interviewed(b, a) {
                self.interview(b, a)?;
            }
        }
        Ok(if self.knowledge.entails(b, a1, a2) { a1 } else { a2 })
    }
}
