//! Synthetic session-log generation with controllable structure.
//!
//! Two pure behaviors are supported, plus a mix. *Bundles* sessions draw a
//! random subset of one fixed item bundle in random order: items co-occur but
//! carry no ordering signal. *Chains* sessions emit a consecutive run along a
//! global successor cycle: the next item is always determined by the current
//! one. Transition-style models should win on chains and similarity-style
//! models on bundles, which makes the generator a useful end-to-end probe.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::sessions::{Event, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    /// Unordered draws from fixed co-occurrence bundles.
    Bundles,
    /// Consecutive runs along a global successor cycle.
    Chains,
    /// Each session picks one of the two behaviors at random.
    Mixed,
}

impl std::str::FromStr for SynthMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bundles" => Ok(SynthMode::Bundles),
            "chains" => Ok(SynthMode::Chains),
            "mixed" => Ok(SynthMode::Mixed),
            other => Err(crate::error::Error::InvalidHyper(format!(
                "unknown synthetic mode {other:?} (expected bundles, chains or mixed)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub mode: SynthMode,
    pub n_items: usize,
    pub n_sessions: usize,
    /// Session length bounds, inclusive.
    pub min_len: usize,
    pub max_len: usize,
    /// Items per co-occurrence bundle.
    pub bundle_size: usize,
    /// Number of successor routes for chain sessions. Each route is a random
    /// cyclic ordering of all items; a session follows exactly one route, so
    /// more routes mean items co-occur with many neighborhoods while the next
    /// item stays a deterministic function of (route, current item).
    pub routes: usize,
    /// Calendar spread of the generated sessions.
    pub days: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            mode: SynthMode::Mixed,
            n_items: 200,
            n_sessions: 1000,
            min_len: 3,
            max_len: 8,
            bundle_size: 25,
            routes: 4,
            days: 10,
            seed: 7,
        }
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, pool: usize, count: usize) -> Vec<usize> {
    // Partial Fisher-Yates over the pool.
    let mut items: Vec<usize> = (0..pool).collect();
    let count = count.min(pool);
    for i in 0..count {
        let j = rng.gen_range(i..pool);
        items.swap(i, j);
    }
    items.truncate(count);
    items
}

/// Generates events in session order with deterministic output for a fixed
/// seed. Timestamps spread sessions uniformly over `days` calendar days with
/// one second between consecutive events.
pub fn generate_events(params: &SynthParams) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Route orderings come from their own stream so session sampling does not
    // disturb them.
    let mut route_rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1));
    let routes: Vec<Vec<usize>> = (0..params.routes.max(1))
        .map(|_| {
            let mut order: Vec<usize> = (0..params.n_items).collect();
            for i in (1..order.len()).rev() {
                let j = route_rng.gen_range(0..=i);
                order.swap(i, j);
            }
            order
        })
        .collect();
    let mut events = Vec::new();
    let base = 1_000_000_000.0f64;
    for s in 0..params.n_sessions {
        let len = rng.gen_range(params.min_len..=params.max_len.max(params.min_len));
        let chain_like = match params.mode {
            SynthMode::Chains => true,
            SynthMode::Bundles => false,
            SynthMode::Mixed => rng.gen_bool(0.5),
        };
        let items: Vec<usize> = if chain_like {
            let route = &routes[rng.gen_range(0..routes.len())];
            let start = rng.gen_range(0..params.n_items);
            (0..len).map(|k| route[(start + k) % params.n_items]).collect()
        } else {
            let bundles = (params.n_items / params.bundle_size).max(1);
            let bundle = rng.gen_range(0..bundles);
            let lo = bundle * params.bundle_size;
            let size = params.bundle_size.min(params.n_items - lo);
            sample_distinct(&mut rng, size, len)
                .into_iter()
                .map(|k| lo + k)
                .collect()
        };
        let day = if params.n_sessions > 1 {
            (s * params.days.max(1)) / params.n_sessions
        } else {
            0
        };
        let start_time = base + day as f64 * SECONDS_PER_DAY + (s % 1000) as f64 * 60.0;
        for (k, &item) in items.iter().enumerate() {
            events.push(Event {
                session_id: format!("s{s}"),
                item_id: format!("item{item}"),
                timestamp: start_time + k as f64,
            });
        }
    }
    events
}

/// Writes a tab-separated log with a header row, the format [`crate::sessions::parse_log`]
/// reads back by default.
pub fn write_log<W: Write>(params: &SynthParams, mut w: W) -> Result<()> {
    writeln!(w, "SessionId\tItemId\tTime")?;
    for ev in generate_events(params) {
        writeln!(w, "{}\t{}\t{}", ev.session_id, ev.item_id, ev.timestamp)?;
    }
    Ok(())
}
