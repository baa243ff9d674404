//! Session-aware linear item-item models for next-item recommendation.
//!
//! This crate trains linear models whose single parameter is a dense
//! item-item matrix `B`: scoring a session multiplies its (decayed) item
//! indicator vector through `B`. Three variants cover different session
//! structure, all solved in closed form by inverting one regularized Gram
//! matrix:
//!
//! * **SLIS** — item *similarity* over whole-session item sets, with a
//!   per-item cap `xi` on the diagonal of `B` resolved via KKT multipliers
//!   (`xi = 0` with uniform weights is exactly the EASE model).
//! * **SLIT** — item *transition*, regressing the items a session goes on to
//!   consume onto the items consumed so far, expanded at every split point.
//! * **SLIST** — a convex blend of the two objectives controlled by `alpha`.
//!
//! Around the models sit a preprocessing pipeline ([`sessions`]), the design
//! matrix builders ([`representation`]), inference ([`recommender`]), an
//! iterative-revealing evaluation harness ([`evaluation`]), and a synthetic
//! data generator ([`synth`]). The `slist-cli` crate exposes the whole
//! pipeline as a command-line tool.
//!
//! ```
//! use slist::prelude::*;
//!
//! // Three tiny sessions over four items.
//! let log = "\
//! SessionId,ItemId,Time
//! s1,apple,100
//! s1,pear,110
//! s2,apple,200
//! s2,pear,210
//! s2,plum,220
//! s3,plum,300
//! s3,kiwi,310
//! ";
//! let (events, _report) = parse_log(log.as_bytes(), &LogFormat::default())?;
//! let corpus = preprocess(&events, 1, 2)?;
//! let (model, _stats) = train_model(&corpus, &HyperParams::default(), ModelKind::Slist)?;
//!
//! // What follows an apple?
//! let apple = corpus.vocab.index_of("apple").unwrap();
//! let state = SessionState::from_indices(&[apple], model.n_items());
//! let ranking = recommend(&model, &state, 2);
//! assert_eq!(model.vocab[ranking.entries[0].0 as usize], "pear");
//! # Ok::<(), slist::Error>(())
//! ```

pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod model_io;
pub mod recommender;
pub mod representation;
pub mod sessions;
pub mod solver;
pub mod sparse;
pub mod synth;

mod guide;

pub use error::{Error, Result};

/// The types and functions most callers need.
pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::evaluation::{
        evaluate_corpus, EvalConfig, EvalReport, MapDenominator, Metric,
    };
    pub use crate::model_io::{load_model, read_model, save_model, write_model};
    pub use crate::recommender::{recommend, score, top_n, Ranking, SessionState};
    pub use crate::representation::{assemble, DecayParams, DesignMatrices};
    pub use crate::sessions::{
        parse_log, preprocess, split_by_days, Event, LogFormat, Session, SessionCorpus,
    };
    pub use crate::solver::{
        solve_ease, solve_slis, solve_slist, solve_slit, train_model, HyperParams, ItemModel,
        ModelKind, SolveStats,
    };
    pub use crate::synth::{generate_events, write_log, SynthMode, SynthParams};
}
