//! Iterative revealing evaluation and ranking metrics.
//!
//! Each test session is replayed one item at a time: after revealing the
//! prefix `s_1..s_t` the model ranks candidates, the immediate next item is
//! the target for HR/MRR, and the set of all remaining items is the relevant
//! set for Recall/MAP. Scores are micro-averaged over prediction steps, not
//! per-session.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommender::{recommend, Ranking, SessionState};
use crate::sessions::{Session, SessionCorpus};
use crate::solver::ItemModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Hr,
    Mrr,
    Recall,
    Map,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Hr, Metric::Mrr, Metric::Recall, Metric::Map];
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Metric::Hr => "hr",
            Metric::Mrr => "mrr",
            Metric::Recall => "recall",
            Metric::Map => "map",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hr" => Ok(Metric::Hr),
            "mrr" => Ok(Metric::Mrr),
            "recall" | "r" => Ok(Metric::Recall),
            "map" => Ok(Metric::Map),
            other => Err(Error::InvalidHyper(format!("unknown metric {other:?}"))),
        }
    }
}

/// Average-precision denominator convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapDenominator {
    /// Divide by the number of relevant items.
    #[default]
    Relevant,
    /// Divide by `min(k, relevant)`; kept for sensitivity analysis.
    MinKRelevant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Ranking cutoffs, each at least 1.
    pub cutoffs: Vec<usize>,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub map_denominator: MapDenominator,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cutoffs: vec![5, 10, 20],
            metrics: Metric::ALL.to_vec(),
            map_denominator: MapDenominator::Relevant,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.metrics.is_empty() {
            return Err(Error::InvalidHyper(
                "evaluation needs at least one cutoff and one metric".into(),
            ));
        }
        if self.cutoffs.iter().any(|&k| k == 0) {
            return Err(Error::InvalidHyper("cutoffs must be at least 1".into()));
        }
        Ok(())
    }

    fn max_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().max().unwrap_or(1)
    }
}

/// 1 if the target sits within the top `k`, else 0.
pub fn hr_at(rank_of_target: Option<usize>, k: usize) -> f64 {
    match rank_of_target {
        Some(r) if r <= k => 1.0,
        _ => 0.0,
    }
}

/// `1 / rank` if the target sits within the top `k`, else 0.
pub fn mrr_at(rank_of_target: Option<usize>, k: usize) -> f64 {
    match rank_of_target {
        Some(r) if r <= k => 1.0 / r as f64,
        _ => 0.0,
    }
}

/// Recall and average precision of a ranking against a relevant set.
///
/// Recall is `|top-k hits| / |relevant|`; average precision sums precision at
/// each hit position within the top `k` and divides by the configured
/// denominator.
pub fn recall_map_at(
    ranking: &Ranking,
    relevant: &BTreeSet<u32>,
    k: usize,
    denominator: MapDenominator,
) -> (f64, f64) {
    assert!(!relevant.is_empty(), "relevant set must be non-empty");
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (pos, (item, _)) in ranking.entries.iter().take(k).enumerate() {
        if relevant.contains(item) {
            hits += 1;
            precision_sum += hits as f64 / (pos + 1) as f64;
        }
    }
    let recall = hits as f64 / relevant.len() as f64;
    let denom = match denominator {
        MapDenominator::Relevant => relevant.len(),
        MapDenominator::MinKRelevant => k.min(relevant.len()),
    };
    let map = precision_sum / denom as f64;
    (recall, map)
}

/// Metric values contributed by one prediction step.
#[derive(Debug, Clone)]
pub struct StepContribution {
    /// Prefix length `t` that was revealed before predicting.
    pub prefix_len: usize,
    /// Whether the immediate target was inside the model vocabulary.
    pub target_known: bool,
    /// `(metric, cutoff) -> value` for every configured pair.
    pub values: Vec<((Metric, usize), f64)>,
}

/// Replays one session through the iterative revealing scheme.
///
/// For each `t = 1..len-1` the prefix is revealed (unknown items are dropped
/// from the model input but keep their place in the protocol), the next item
/// is scored as the target, and the distinct remaining items form the
/// relevant set. An out-of-vocabulary target makes the step an automatic
/// miss; the step still counts toward the averages.
pub fn iterate_session(
    model: &ItemModel,
    session: &Session,
    config: &EvalConfig,
) -> Vec<StepContribution> {
    let n = model.n_items();
    let kmax = config.max_cutoff();
    let mut steps = Vec::with_capacity(session.len().saturating_sub(1));
    for t in 1..session.len() {
        let state = SessionState::from_indices(&session.items[..t], n);
        let ranking = recommend(model, &state, kmax);
        let target = session.items[t];
        let target_known = (target as usize) < n;
        let rank = if target_known {
            ranking.rank_of(target)
        } else {
            None
        };
        let relevant: BTreeSet<u32> = session.items[t..].iter().copied().collect();
        let mut values = Vec::with_capacity(config.metrics.len() * config.cutoffs.len());
        for &metric in &config.metrics {
            for &k in &config.cutoffs {
                let v = match metric {
                    Metric::Hr => hr_at(rank, k),
                    Metric::Mrr => mrr_at(rank, k),
                    Metric::Recall => {
                        recall_map_at(&ranking, &relevant, k, config.map_denominator).0
                    }
                    Metric::Map => {
                        recall_map_at(&ranking, &relevant, k, config.map_denominator).1
                    }
                };
                values.push(((metric, k), v));
            }
        }
        steps.push(StepContribution {
            prefix_len: t,
            target_known,
            values,
        });
    }
    steps
}

/// Aggregate metric means over every prediction step of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(metric, cutoff) -> mean`, ordered by metric then cutoff.
    pub values: Vec<((Metric, usize), f64)>,
    pub steps: usize,
    pub sessions: usize,
}

impl EvalReport {
    pub fn get(&self, metric: Metric, k: usize) -> Option<f64> {
        self.values
            .iter()
            .find(|&&(key, _)| key == (metric, k))
            .map(|&(_, v)| v)
    }

    /// Machine-readable `metric@cutoff=value` lines, exact formatting, fixed
    /// order; suitable for regression diffing.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for &((metric, k), v) in &self.values {
            writeln!(out, "{metric}@{k}={v}").unwrap();
        }
        writeln!(out, "steps={}", self.steps).unwrap();
        writeln!(out, "sessions={}", self.sessions).unwrap();
        out
    }

    /// Human-readable aligned table.
    pub fn to_table(&self) -> String {
        let mut cutoffs: Vec<usize> = self.values.iter().map(|&((_, k), _)| k).collect();
        cutoffs.sort_unstable();
        cutoffs.dedup();
        let mut metrics: Vec<Metric> = self.values.iter().map(|&((m, _), _)| m).collect();
        metrics.sort();
        metrics.dedup();
        let mut out = String::new();
        write!(out, "{:<8}", "metric").unwrap();
        for &k in &cutoffs {
            write!(out, "{:>12}", format!("@{k}")).unwrap();
        }
        writeln!(out).unwrap();
        for &m in &metrics {
            write!(out, "{:<8}", m.to_string()).unwrap();
            for &k in &cutoffs {
                match self.get(m, k) {
                    Some(v) => write!(out, "{:>12.4}", v).unwrap(),
                    None => write!(out, "{:>12}", "-").unwrap(),
                }
            }
            writeln!(out).unwrap();
        }
        writeln!(out, "steps    {:>11}", self.steps).unwrap();
        writeln!(out, "sessions {:>11}", self.sessions).unwrap();
        out
    }
}

/// Evaluates a model over every session of a test corpus.
///
/// Sessions are scored independently (in parallel) and reduced in session
/// order, so the result is a pure function of `(model, test, config)`.
pub fn evaluate_corpus(
    model: &ItemModel,
    test: &SessionCorpus,
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;
    if test.sessions.is_empty() {
        return Err(Error::EmptyTestCorpus);
    }
    if test.vocab.ids() != model.vocab.as_slice() {
        return Err(Error::VocabMismatch(format!(
            "model has {} items, corpus has {} (id lists differ)",
            model.vocab.len(),
            test.vocab.len()
        )));
    }
    let per_session: Vec<Vec<StepContribution>> = test
        .sessions
        .par_iter()
        .map(|s| iterate_session(model, s, config))
        .collect();

    let keys: Vec<(Metric, usize)> = config
        .metrics
        .iter()
        .flat_map(|&m| config.cutoffs.iter().map(move |&k| (m, k)))
        .collect();
    let mut sums = vec![0.0f64; keys.len()];
    let mut steps = 0usize;
    for contributions in &per_session {
        for step in contributions {
            steps += 1;
            for (slot, &(_, v)) in sums.iter_mut().zip(&step.values) {
                *slot += v;
            }
        }
    }
    if steps == 0 {
        return Err(Error::EmptyTestCorpus);
    }
    let values = keys
        .into_iter()
        .zip(sums)
        .map(|(key, sum)| (key, sum / steps as f64))
        .collect();
    Ok(EvalReport {
        values,
        steps,
        sessions: test.sessions.len(),
    })
}
