//! Closed-form training of the linear item-item models.
//!
//! All four model kinds reduce to inverting one regularized Gram matrix:
//!
//! * SLIS regresses the full session rows onto themselves under a diagonal
//!   cap `xi`, resolved per item through its KKT multiplier.
//! * SLIT regresses future rows onto past rows with no diagonal constraint.
//! * SLIST blends the two Gram matrices with mixing weight `alpha` and
//!   applies a correction term so that `alpha = 0` reproduces SLIT and
//!   `alpha = 1` reproduces SLIS with an uncapped diagonal.
//! * EASE is SLIS with `xi = 0` and uniform session weights.
//!
//! The item-item matrix `B` maps a row vector of consumed items to next-item
//! scores: entry `[i, j]` is the contribution of consuming `i` to the score
//! of `j`.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::linalg::{invert_spd, SpdInverse};
use crate::representation::{assemble, DecayParams, DesignMatrices};
use crate::sessions::SessionCorpus;
use crate::sparse::CsrMatrix;

/// Which closed form to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Slis,
    Slit,
    Slist,
    Ease,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Slis => "slis",
            ModelKind::Slit => "slit",
            ModelKind::Slist => "slist",
            ModelKind::Ease => "ease",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slis" => Ok(ModelKind::Slis),
            "slit" => Ok(ModelKind::Slit),
            "slist" => Ok(ModelKind::Slist),
            "ease" => Ok(ModelKind::Ease),
            other => Err(Error::InvalidHyper(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Training hyperparameters shared by all model kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// L2 regularizer; must be positive unless the Gram matrix is full rank.
    pub lambda: f64,
    /// Diagonal cap for SLIS; `f64::INFINITY` leaves the diagonal free.
    pub xi: f64,
    /// Mixing weight between the similarity (1.0) and transition (0.0) parts.
    pub alpha: f64,
    pub decay: DecayParams,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda: 10.0,
            xi: f64::INFINITY,
            alpha: 0.2,
            decay: DecayParams::default(),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidHyper(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.xi >= 0.0) {
            return Err(Error::InvalidHyper(format!(
                "xi must be non-negative (possibly infinite), got {}",
                self.xi
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidHyper(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        self.decay.validate()
    }
}

/// A trained item-item model.
#[derive(Debug, Clone)]
pub struct ItemModel {
    pub kind: ModelKind,
    /// Dense `n x n` coefficient matrix; row = consumed item, column = scored item.
    pub matrix: Array2<f64>,
    /// Item ids by dense index.
    pub vocab: Vec<String>,
    pub hyper: HyperParams,
}

impl ItemModel {
    pub fn n_items(&self) -> usize {
        self.vocab.len()
    }
}

/// Wall-clock and shape accounting for one training run.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub gram_secs: f64,
    pub invert_secs: f64,
    pub assemble_secs: f64,
    /// `max |A * inv(A) - I|` from the inversion.
    pub max_residual: f64,
    pub bumped: bool,
    pub n: usize,
    pub m: usize,
    pub m_partial: usize,
}

/// Weighted Gram matrix `M^T * diagMat(w^2) * M`, densified and exactly
/// symmetric (the upper triangle is accumulated, then mirrored).
pub fn gram(m: &CsrMatrix, row_weights: &[f64]) -> Result<Array2<f64>> {
    if row_weights.len() != m.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} row weights for {} rows",
            row_weights.len(),
            m.n_rows()
        )));
    }
    let n = m.n_cols();
    let mut g = Array2::<f64>::zeros((n, n));
    for (r, cols, vals) in m.rows() {
        let w2 = row_weights[r] * row_weights[r];
        for (a, (&ca, &va)) in cols.iter().zip(vals).enumerate() {
            for (&cb, &vb) in cols.iter().zip(vals).skip(a) {
                let (lo, hi) = if ca <= cb { (ca, cb) } else { (cb, ca) };
                g[[lo as usize, hi as usize]] += w2 * va * vb;
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            g[[j, i]] = g[[i, j]];
        }
    }
    Ok(g)
}

/// Dense `A^T * diagMat(w^2) * B` for two row-aligned sparse matrices.
fn transpose_weighted_product(
    a: &CsrMatrix,
    b: &CsrMatrix,
    row_weights: &[f64],
) -> Result<Array2<f64>> {
    if a.n_rows() != b.n_rows() || row_weights.len() != a.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "row-aligned product needs matching row counts ({} vs {} vs {} weights)",
            a.n_rows(),
            b.n_rows(),
            row_weights.len()
        )));
    }
    let mut out = Array2::<f64>::zeros((a.n_cols(), b.n_cols()));
    for r in 0..a.n_rows() {
        let w2 = row_weights[r] * row_weights[r];
        let (ac, av) = a.row(r);
        let (bc, bv) = b.row(r);
        for (&ca, &va) in ac.iter().zip(av) {
            let scaled = w2 * va;
            for (&cb, &vb) in bc.iter().zip(bv) {
                out[[ca as usize, cb as usize]] += scaled * vb;
            }
        }
    }
    Ok(out)
}

fn add_ridge(mut g: Array2<f64>, lambda: f64) -> Array2<f64> {
    for i in 0..g.nrows() {
        g[[i, i]] += lambda;
    }
    g
}

/// The per-item rescaling vector for the capped-diagonal closed form:
/// `lambda` where the cap is slack, `(1 - xi) / p_jj` where it binds. Ties in
/// the slackness condition take the unconstrained branch.
fn gamma_vector(p: &Array2<f64>, lambda: f64, xi: f64) -> Vec<f64> {
    (0..p.nrows())
        .map(|j| {
            let pjj = p[[j, j]];
            if 1.0 - lambda * pjj <= xi {
                lambda
            } else {
                (1.0 - xi) / pjj
            }
        })
        .collect()
}

fn solve_inner(
    dm: &DesignMatrices,
    hyper: &HyperParams,
    kind: ModelKind,
    vocab: Vec<String>,
) -> Result<(ItemModel, SolveStats)> {
    hyper.validate()?;
    if vocab.len() != dm.n {
        return Err(Error::DimensionMismatch(format!(
            "vocabulary of {} ids for {} items",
            vocab.len(),
            dm.n
        )));
    }
    let mut stats = SolveStats {
        n: dm.n,
        m: dm.m,
        m_partial: dm.m_partial,
        ..SolveStats::default()
    };
    let ones;
    let (lambda, alpha) = (hyper.lambda, hyper.alpha);

    let started = Instant::now();
    let regularized = match kind {
        ModelKind::Slis => add_ridge(gram(&dm.full, &dm.full_weights)?, lambda),
        ModelKind::Ease => {
            ones = vec![1.0; dm.m];
            add_ridge(gram(&dm.full, &ones)?, lambda)
        }
        ModelKind::Slit => add_ridge(gram(&dm.past, &dm.partial_weights)?, lambda),
        ModelKind::Slist => {
            let mut g = if alpha > 0.0 {
                let mut g = gram(&dm.full, &dm.full_weights)?;
                g.mapv_inplace(|v| v * alpha);
                g
            } else {
                Array2::zeros((dm.n, dm.n))
            };
            if alpha < 1.0 {
                let mut gp = gram(&dm.past, &dm.partial_weights)?;
                gp.mapv_inplace(|v| v * (1.0 - alpha));
                g += &gp;
            }
            add_ridge(g, lambda)
        }
    };
    stats.gram_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let inv = invert_spd(&regularized)?;
    stats.invert_secs = started.elapsed().as_secs_f64();
    stats.max_residual = inv.max_residual;
    stats.bumped = inv.bumped;
    let p = inv.inverse;

    let started = Instant::now();
    let n = dm.n;
    let matrix = match kind {
        ModelKind::Slis | ModelKind::Ease => {
            let xi = if kind == ModelKind::Ease { 0.0 } else { hyper.xi };
            let g = gamma_vector(&p, lambda, xi);
            let mut b = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    let base = if i == j { 1.0 } else { 0.0 };
                    b[[i, j]] = base - p[[i, j]] * g[j];
                }
            }
            b
        }
        ModelKind::Slit => {
            let r = transpose_weighted_product(&dm.past, &dm.future, &dm.partial_weights)?;
            p.dot(&r)
        }
        ModelKind::Slist => {
            // B = I - lambda P - (1 - alpha) P S^T D (S - T)
            let mut b = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    let base = if i == j { 1.0 } else { 0.0 };
                    b[[i, j]] = base - lambda * p[[i, j]];
                }
            }
            if alpha < 1.0 {
                let gp = gram(&dm.past, &dm.partial_weights)?;
                let r = transpose_weighted_product(&dm.past, &dm.future, &dm.partial_weights)?;
                let correction = p.dot(&(gp - r));
                b.zip_mut_with(&correction, |bv, &cv| *bv -= (1.0 - alpha) * cv);
            }
            b
        }
    };
    stats.assemble_secs = started.elapsed().as_secs_f64();

    let mut hyper_used = hyper.clone();
    if kind == ModelKind::Ease {
        hyper_used.xi = 0.0;
    }
    Ok((
        ItemModel {
            kind,
            matrix,
            vocab,
            hyper: hyper_used,
        },
        stats,
    ))
}

/// Capped-diagonal similarity model over the full session rows.
pub fn solve_slis(dm: &DesignMatrices, hyper: &HyperParams, vocab: Vec<String>) -> Result<ItemModel> {
    solve_inner(dm, hyper, ModelKind::Slis, vocab).map(|(m, _)| m)
}

/// Unconstrained transition model regressing future rows onto past rows.
pub fn solve_slit(dm: &DesignMatrices, hyper: &HyperParams, vocab: Vec<String>) -> Result<ItemModel> {
    solve_inner(dm, hyper, ModelKind::Slit, vocab).map(|(m, _)| m)
}

/// Joint similarity/transition model mixing both objectives by `alpha`.
pub fn solve_slist(dm: &DesignMatrices, hyper: &HyperParams, vocab: Vec<String>) -> Result<ItemModel> {
    solve_inner(dm, hyper, ModelKind::Slist, vocab).map(|(m, _)| m)
}

/// Zero-diagonal, uniformly weighted special case of the similarity model.
pub fn solve_ease(dm: &DesignMatrices, hyper: &HyperParams, vocab: Vec<String>) -> Result<ItemModel> {
    solve_inner(dm, hyper, ModelKind::Ease, vocab).map(|(m, _)| m)
}

/// Assembles design matrices from a corpus and trains the requested model,
/// returning phase timings alongside the model.
pub fn train_model(
    corpus: &SessionCorpus,
    hyper: &HyperParams,
    kind: ModelKind,
) -> Result<(ItemModel, SolveStats)> {
    let dm = assemble(corpus, &hyper.decay)?;
    solve_inner(&dm, hyper, kind, corpus.vocab.ids().to_vec())
}

/// Trains from pre-built design matrices; `vocab` supplies the item ids for
/// the resulting model.
pub fn solve_with_stats(
    dm: &DesignMatrices,
    hyper: &HyperParams,
    kind: ModelKind,
    vocab: Vec<String>,
) -> Result<(ItemModel, SolveStats)> {
    solve_inner(dm, hyper, kind, vocab)
}
