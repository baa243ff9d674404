//! Next-item scoring and ranking for an in-progress session.
//!
//! Inference builds a decayed indicator vector over the items consumed so far
//! and multiplies it through the learned item-item matrix. Consumed items are
//! never masked out of the candidates: recommending something the user just
//! interacted with is legitimate behavior, and the capped-diagonal models
//! rely on it.

use ndarray::Array1;

use crate::solver::ItemModel;

/// Items consumed so far by the session being scored.
#[derive(Debug, Clone, Default)]
pub struct SessionState {
    /// Item indices in consumption order; may be empty (cold start).
    pub items: Vec<u32>,
    /// Events dropped because their item was outside the model vocabulary.
    pub unknown_skipped: usize,
}

impl SessionState {
    /// Builds a state from raw indices, dropping anything outside `[0, n)`.
    pub fn from_indices(indices: &[u32], n: usize) -> Self {
        let mut items = Vec::with_capacity(indices.len());
        let mut unknown_skipped = 0;
        for &i in indices {
            if (i as usize) < n {
                items.push(i);
            } else {
                unknown_skipped += 1;
            }
        }
        SessionState {
            items,
            unknown_skipped,
        }
    }
}

/// A scored item list, sorted by score descending with ties broken by
/// ascending item index.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub entries: Vec<(u32, f64)>,
}

impl Ranking {
    /// 1-based rank of `item`, if present.
    pub fn rank_of(&self, item: u32) -> Option<usize> {
        self.entries.iter().position(|&(i, _)| i == item).map(|p| p + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Decayed indicator vector over the session's distinct items.
///
/// An item at (most recent) position `p` in a session of length `L` gets
/// weight `exp(-(L - p) / delta_inf)`; the last item always gets 1. Unseen
/// items are 0.
pub fn input_vector(state: &SessionState, delta_inf: f64, n: usize) -> Array1<f64> {
    let mut v = Array1::<f64>::zeros(n);
    let len = state.items.len();
    for (p, &item) in state.items.iter().enumerate() {
        let w = (-((len - (p + 1)) as f64) / delta_inf).exp();
        let slot = &mut v[item as usize];
        // Later occurrences overwrite earlier ones with a larger weight.
        if w > *slot {
            *slot = w;
        }
    }
    v
}

/// Scores every item for the given state: `input_vector(state)^T * B`.
///
/// An empty state yields the zero vector; layering a popularity fallback on
/// top is a caller concern, not part of the model contract.
pub fn score(model: &ItemModel, state: &SessionState) -> Array1<f64> {
    let n = model.n_items();
    let v = input_vector(state, model.hyper.decay.delta_inf, n);
    let mut out = Array1::<f64>::zeros(n);
    for (i, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            out.scaled_add(vi, &model.matrix.row(i));
        }
    }
    out
}

/// The `top_n` highest-scoring items; ties go to the lower item index. If
/// fewer than `top_n` items exist, all are returned.
pub fn top_n(scores: &Array1<f64>, top_n: usize) -> Ranking {
    assert!(top_n >= 1, "requested ranking length must be at least 1");
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    let key = |&i: &u32| (std::cmp::Reverse(ordered(scores[i as usize])), i);
    let keep = top_n.min(order.len());
    if keep < order.len() {
        order.select_nth_unstable_by_key(keep - 1, key);
        order.truncate(keep);
    }
    order.sort_unstable_by_key(key);
    Ranking {
        entries: order
            .into_iter()
            .map(|i| (i, scores[i as usize]))
            .collect(),
    }
}

fn ordered(v: f64) -> OrderedF64 {
    OrderedF64(v)
}

#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);

impl Eq for OrderedF64 {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Convenience composition of [`score`] and [`top_n`].
pub fn recommend(model: &ItemModel, state: &SessionState, count: usize) -> Ranking {
    top_n(&score(model, state), count)
}
