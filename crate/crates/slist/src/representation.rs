//! Design matrices and training-time weights.
//!
//! A corpus is encoded two ways. The *full* representation turns each session
//! into one binary set-of-items row. The *partial* representation expands a
//! session of length `L` into `L - 1` past/future row pairs, one per split
//! point, with entries decayed by their positional distance from the split.
//! Both carry per-row session-recency weights.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sessions::{SessionCorpus, SECONDS_PER_DAY};
use crate::sparse::CsrMatrix;

/// Exponential decay scales, all measured in their natural unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Session-recency decay, in days.
    pub delta_time: f64,
    /// Positional decay inside partial rows, in positions.
    pub delta_pos: f64,
    /// Positional decay applied to the inference input vector, in positions.
    pub delta_inf: f64,
    /// When false, future rows carry plain 1.0 entries instead of decaying
    /// away from the split; kept as an ablation switch.
    #[serde(default = "default_true")]
    pub decay_future: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            delta_time: 8.0,
            delta_pos: 1.0,
            delta_inf: 1.0,
            decay_future: true,
        }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta_time", self.delta_time),
            ("delta_pos", self.delta_pos),
            ("delta_inf", self.delta_inf),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidHyper(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Sparse encodings of one corpus plus the weight vectors used by training.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    /// `m x n` binary full-session rows.
    pub full: CsrMatrix,
    /// `m' x n` past-set rows, one per split point.
    pub past: CsrMatrix,
    /// `m' x n` future-set rows matching `past` row for row.
    pub future: CsrMatrix,
    /// Square roots of the session time weights, length `m`.
    pub full_weights: Vec<f64>,
    /// The originating session's weight copied onto each split row, length `m'`.
    pub partial_weights: Vec<f64>,
    /// Originating session index of each partial row.
    pub row_session: Vec<usize>,
    pub n: usize,
    pub m: usize,
    pub m_partial: usize,
}

/// Binary set-of-items matrix: one row per session, repeated items collapsed
/// to a single 1.
pub fn build_full(corpus: &SessionCorpus) -> CsrMatrix {
    let n = corpus.n_items();
    let rows: Vec<Vec<(u32, f64)>> = corpus
        .sessions
        .iter()
        .map(|s| {
            assert!(s.len() >= 2, "corpus must be preprocessed (session length >= 2)");
            let mut seen: Vec<u32> = Vec::with_capacity(s.len());
            for &i in &s.items {
                assert!((i as usize) < n, "training corpora must not contain unknown items");
                if !seen.contains(&i) {
                    seen.push(i);
                }
            }
            seen.sort_unstable();
            seen.into_iter().map(|i| (i, 1.0)).collect()
        })
        .collect();
    CsrMatrix::from_rows(n, &rows)
}

fn decayed_row(entries: &mut HashMap<u32, f64>) -> Vec<(u32, f64)> {
    let mut row: Vec<(u32, f64)> = entries.drain().collect();
    row.sort_unstable_by_key(|&(c, _)| c);
    row
}

/// Expands every session into its `L - 1` past/future row pairs.
///
/// For the split at step `t` (1-based positions, `t = 2..=L`), an item at
/// position `p` receives weight `exp(-|p - t| / delta_pos)`: past entries decay
/// with their distance to the split, the first future item has weight 1, and
/// later future items decay away from it. An item occurring more than once
/// within a side keeps its occurrence nearest the split (the maximum weight).
///
/// Returns the past matrix, the future matrix, and the originating session
/// index of each row pair.
pub fn build_partial(
    corpus: &SessionCorpus,
    delta_pos: f64,
    decay_future: bool,
) -> (CsrMatrix, CsrMatrix, Vec<usize>) {
    let n = corpus.n_items();
    let mut past_rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut future_rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut row_session = Vec::new();
    let mut past_entries: HashMap<u32, f64> = HashMap::new();
    let mut future_entries: HashMap<u32, f64> = HashMap::new();
    for (si, s) in corpus.sessions.iter().enumerate() {
        let len = s.len();
        assert!(len >= 2, "corpus must be preprocessed (session length >= 2)");
        for t in 2..=len {
            past_entries.clear();
            future_entries.clear();
            for (p, &item) in s.items.iter().enumerate() {
                let pos = p + 1;
                debug_assert!((item as usize) < n);
                if pos < t {
                    let w = (-((t - pos) as f64) / delta_pos).exp();
                    past_entries
                        .entry(item)
                        .and_modify(|e| *e = e.max(w))
                        .or_insert(w);
                } else {
                    let w = if decay_future {
                        (-((pos - t) as f64) / delta_pos).exp()
                    } else {
                        1.0
                    };
                    future_entries
                        .entry(item)
                        .and_modify(|e| *e = e.max(w))
                        .or_insert(w);
                }
            }
            past_rows.push(decayed_row(&mut past_entries));
            future_rows.push(decayed_row(&mut future_entries));
            row_session.push(si);
        }
    }
    (
        CsrMatrix::from_rows(n, &past_rows),
        CsrMatrix::from_rows(n, &future_rows),
        row_session,
    )
}

/// Per-session recency weights.
///
/// The underlying time weight is `exp(-(t_max - t(s)) / delta_time)` with the
/// gap measured in days; the returned entries are its square roots, so that
/// squaring them inside the solver recovers the time weight exactly.
pub fn session_time_weights(corpus: &SessionCorpus, delta_time: f64) -> Vec<f64> {
    corpus
        .sessions
        .iter()
        .map(|s| {
            let gap_days = (corpus.t_max - s.session_time) / SECONDS_PER_DAY;
            (-gap_days / delta_time).exp().sqrt()
        })
        .collect()
}

/// Builds the complete set of design matrices and weights for training.
pub fn assemble(corpus: &SessionCorpus, decay: &DecayParams) -> Result<DesignMatrices> {
    decay.validate()?;
    if corpus.sessions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let full = build_full(corpus);
    let (past, future, row_session) = build_partial(corpus, decay.delta_pos, decay.decay_future);
    let full_weights = session_time_weights(corpus, decay.delta_time);
    let partial_weights: Vec<f64> = row_session.iter().map(|&si| full_weights[si]).collect();
    let n = corpus.n_items();
    let m = corpus.n_sessions();
    let m_partial = row_session.len();
    Ok(DesignMatrices {
        full,
        past,
        future,
        full_weights,
        partial_weights,
        row_session,
        n,
        m,
        m_partial,
    })
}
