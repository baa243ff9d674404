//! Shared oracles for the integration suites.
//!
//! Everything here deliberately avoids the library's solve path: Gram
//! matrices are formed densely from scratch, linear systems go through a
//! plain partial-pivot LU, and the capped-diagonal minimizer is recovered
//! from the bordered KKT system (or projected gradient descent) rather than
//! the production formula.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use slist::prelude::*;
use slist::sessions::Vocab;

// ---------------------------------------------------------------------------
// Dense linear algebra, independent of the library's Cholesky route.

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut pivot_row = k;
        let mut best = lu[[k, k]].abs();
        for i in k + 1..n {
            if lu[[i, k]].abs() > best {
                best = lu[[i, k]].abs();
                pivot_row = i;
            }
        }
        assert!(best > 0.0, "singular matrix in LU oracle");
        if pivot_row != k {
            for j in 0..n {
                lu.swap([k, j], [pivot_row, j]);
            }
            for j in 0..x.ncols() {
                x.swap([k, j], [pivot_row, j]);
            }
        }
        for i in k + 1..n {
            let f = lu[[i, k]] / lu[[k, k]];
            lu[[i, k]] = f;
            for j in k + 1..n {
                let v = lu[[k, j]];
                lu[[i, j]] -= f * v;
            }
        }
    }
    for col in 0..x.ncols() {
        for i in 1..n {
            let mut s = x[[i, col]];
            for k in 0..i {
                s -= lu[[i, k]] * x[[k, col]];
            }
            x[[i, col]] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[[i, col]];
            for k in i + 1..n {
                s -= lu[[i, k]] * x[[k, col]];
            }
            x[[i, col]] = s / lu[[i, i]];
        }
    }
    x
}

pub fn lu_inverse(a: &Array2<f64>) -> Array2<f64> {
    lu_solve(a, &Array2::eye(a.nrows()))
}

/// `M^T diag(w^2) M` formed densely by the textbook triple loop.
pub fn dense_gram(m: &Array2<f64>, w: &[f64]) -> Array2<f64> {
    let (rows, n) = m.dim();
    assert_eq!(w.len(), rows);
    let mut g = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for r in 0..rows {
                acc += w[r] * w[r] * m[[r, i]] * m[[r, j]];
            }
            g[[i, j]] = acc;
        }
    }
    g
}

/// `A^T diag(w^2) B` formed densely.
pub fn dense_cross(a: &Array2<f64>, b: &Array2<f64>, w: &[f64]) -> Array2<f64> {
    let (rows, na) = a.dim();
    let nb = b.ncols();
    let mut out = Array2::<f64>::zeros((na, nb));
    for i in 0..na {
        for j in 0..nb {
            let mut acc = 0.0;
            for r in 0..rows {
                acc += w[r] * w[r] * a[[r, i]] * b[[r, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn relative_frobenius_gap(candidate: &Array2<f64>, reference: &Array2<f64>) -> f64 {
    frobenius(&(candidate - reference)) / frobenius(reference).max(1e-300)
}

// ---------------------------------------------------------------------------
// Random instance family: n <= 20 items, m <= 50 sessions, random weights.

pub struct Instance {
    pub dm: DesignMatrices,
    pub vocab: Vec<String>,
    pub x: Array2<f64>,
    pub s: Array2<f64>,
    pub t: Array2<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(4..=20usize);
    let m = rng.gen_range(5..=50usize);
    let mut sessions = Vec::with_capacity(m);
    let mut t_max = f64::NEG_INFINITY;
    for k in 0..m {
        let len = rng.gen_range(2..=6.min(n));
        let mut pool: Vec<u32> = (0..n as u32).collect();
        for i in 0..len {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let items: Vec<u32> = pool[..len].to_vec();
        let base = rng.gen_range(0.0..10.0) * 86_400.0;
        let event_times: Vec<f64> = (0..len).map(|e| base + e as f64).collect();
        let session_time = *event_times.last().unwrap();
        t_max = t_max.max(session_time);
        sessions.push(Session {
            id: format!("s{k}"),
            items,
            event_times,
            session_time,
        });
    }
    let vocab_ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
    let corpus = SessionCorpus {
        sessions,
        vocab: Vocab::from_ids(vocab_ids.clone()).unwrap(),
        oov_ids: Vec::new(),
        t_max,
    };
    let decay = DecayParams {
        delta_time: rng.gen_range(0.5..16.0),
        delta_pos: rng.gen_range(0.25..4.0),
        delta_inf: 1.0,
        decay_future: true,
    };
    let mut dm = assemble(&corpus, &decay).unwrap();
    // Replace the time-decay weights with arbitrary random session weights;
    // partial rows keep copying their originating session's weight.
    let full_weights: Vec<f64> = (0..dm.m).map(|_| rng.gen_range(0.1..1.0)).collect();
    let partial_weights: Vec<f64> = dm.row_session.iter().map(|&si| full_weights[si]).collect();
    dm.full_weights = full_weights;
    dm.partial_weights = partial_weights;
    Instance {
        x: dm.full.to_dense(),
        s: dm.past.to_dense(),
        t: dm.future.to_dense(),
        dm,
        vocab: vocab_ids,
    }
}

// ---------------------------------------------------------------------------
// Objective values, evaluated directly from the definitions.

/// `sum_r w_r^2 ||x_r - x_r B||^2 + lambda ||B||_F^2`
pub fn similarity_objective(x: &Array2<f64>, w: &[f64], b: &Array2<f64>, lambda: f64) -> f64 {
    let residual = x - &x.dot(b);
    let mut total = 0.0;
    for (r, row) in residual.rows().into_iter().enumerate() {
        let ss: f64 = row.iter().map(|v| v * v).sum();
        total += w[r] * w[r] * ss;
    }
    total + lambda * b.iter().map(|v| v * v).sum::<f64>()
}

/// `sum_r w_r^2 ||t_r - s_r B||^2 + lambda ||B||_F^2`
pub fn transition_objective(
    s: &Array2<f64>,
    t: &Array2<f64>,
    w: &[f64],
    b: &Array2<f64>,
    lambda: f64,
) -> f64 {
    let residual = t - &s.dot(b);
    let mut total = 0.0;
    for (r, row) in residual.rows().into_iter().enumerate() {
        let ss: f64 = row.iter().map(|v| v * v).sum();
        total += w[r] * w[r] * ss;
    }
    total + lambda * b.iter().map(|v| v * v).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Constrained-minimizer oracles.

/// Exact minimizer of the capped-diagonal similarity objective, column by
/// column. The unconstrained ridge column comes from an LU solve; when it
/// violates its cap, the column is re-solved through the bordered KKT system
/// `[[G + lambda I, e_j], [e_j^T, 0]] [b; mu] = [g_j; xi]`.
pub fn slis_oracle(x: &Array2<f64>, w: &[f64], lambda: f64, xi: f64) -> Array2<f64> {
    let n = x.ncols();
    let g = dense_gram(x, w);
    let mut a = g.clone();
    for i in 0..n {
        a[[i, i]] += lambda;
    }
    let unconstrained = lu_solve(&a, &g);
    if xi.is_infinite() {
        return unconstrained;
    }
    let mut b = unconstrained.clone();
    for j in 0..n {
        if unconstrained[[j, j]] <= xi {
            continue;
        }
        let mut bordered = Array2::<f64>::zeros((n + 1, n + 1));
        for r in 0..n {
            for c in 0..n {
                bordered[[r, c]] = a[[r, c]];
            }
        }
        bordered[[j, n]] = 1.0;
        bordered[[n, j]] = 1.0;
        let mut rhs = Array2::<f64>::zeros((n + 1, 1));
        for r in 0..n {
            rhs[[r, 0]] = g[[r, j]];
        }
        rhs[[n, 0]] = xi;
        let solution = lu_solve(&bordered, &rhs);
        let mu = solution[[n, 0]];
        assert!(mu >= -1e-9, "oracle multiplier must be non-negative, got {mu}");
        for r in 0..n {
            b[[r, j]] = solution[[r, 0]];
        }
    }
    b
}

/// Unconstrained ridge reference for the transition objective.
pub fn slit_oracle(s: &Array2<f64>, t: &Array2<f64>, w: &[f64], lambda: f64) -> Array2<f64> {
    let n = s.ncols();
    let g = dense_gram(s, w);
    let mut a = g;
    for i in 0..n {
        a[[i, i]] += lambda;
    }
    lu_solve(&a, &dense_cross(s, t, w))
}

/// Unconstrained ridge reference for the blended objective, built by stacking
/// the two weighted systems.
pub fn slist_oracle(inst: &Instance, lambda: f64, alpha: f64) -> Array2<f64> {
    let n = inst.x.ncols();
    let wf: Vec<f64> = inst
        .dm
        .full_weights
        .iter()
        .map(|w| w * alpha.sqrt())
        .collect();
    let wp: Vec<f64> = inst
        .dm
        .partial_weights
        .iter()
        .map(|w| w * (1.0 - alpha).sqrt())
        .collect();
    let mut a = dense_gram(&inst.x, &wf) + dense_gram(&inst.s, &wp);
    for i in 0..n {
        a[[i, i]] += lambda;
    }
    let rhs = dense_cross(&inst.x, &inst.x, &wf) + dense_cross(&inst.s, &inst.t, &wp);
    lu_solve(&a, &rhs)
}

/// Projected gradient descent on the capped-diagonal objective; a slow but
/// formula-free numerical minimizer.
pub fn slis_pgd_oracle(
    x: &Array2<f64>,
    w: &[f64],
    lambda: f64,
    xi: f64,
    iterations: usize,
) -> Array2<f64> {
    let n = x.ncols();
    let g = dense_gram(x, w);
    // Lipschitz bound for the column gradients: 2 (||G||_2 + lambda), with the
    // spectral norm bounded by the trace.
    let trace: f64 = (0..n).map(|i| g[[i, i]]).sum();
    let step = 1.0 / (2.0 * (trace + lambda));
    let mut b = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let target = g.column(j).to_owned();
        let mut col = Array1::<f64>::zeros(n);
        for _ in 0..iterations {
            let grad = 2.0 * (g.dot(&col) + lambda * &col - &target);
            col.scaled_add(-step, &grad);
            if col[j] > xi {
                col[j] = xi;
            }
        }
        b.column_mut(j).assign(&col);
    }
    b
}

// ---------------------------------------------------------------------------
// Exhaustive metric reference.

/// Recomputes each metric from its definition by scanning the ranking prefix
/// from scratch.
pub struct MetricReference;

impl MetricReference {
    pub fn hr(ranking: &[u32], target: Option<u32>, k: usize) -> f64 {
        match target {
            Some(t) if ranking.iter().take(k).any(|&i| i == t) => 1.0,
            _ => 0.0,
        }
    }

    pub fn mrr(ranking: &[u32], target: Option<u32>, k: usize) -> f64 {
        let Some(t) = target else { return 0.0 };
        for (pos, &item) in ranking.iter().take(k).enumerate() {
            if item == t {
                return 1.0 / (pos + 1) as f64;
            }
        }
        0.0
    }

    pub fn recall(ranking: &[u32], relevant: &std::collections::BTreeSet<u32>, k: usize) -> f64 {
        let hits = ranking
            .iter()
            .take(k)
            .filter(|i| relevant.contains(i))
            .count();
        hits as f64 / relevant.len() as f64
    }

    pub fn map(ranking: &[u32], relevant: &std::collections::BTreeSet<u32>, k: usize) -> f64 {
        let mut sum = 0.0;
        for p in 1..=k.min(ranking.len()) {
            if relevant.contains(&ranking[p - 1]) {
                let hits_at_p = ranking[..p].iter().filter(|i| relevant.contains(i)).count();
                sum += hits_at_p as f64 / p as f64;
            }
        }
        sum / relevant.len() as f64
    }
}
