//! Session-log ingestion, preprocessing filters, and time-based splits.
//!
//! Raw click logs arrive as delimited text with one interaction per row.
//! [`parse_log`] turns them into [`Event`]s, [`preprocess`] groups events into
//! cleaned [`Session`]s over a dense item vocabulary, and [`split_by_days`]
//! carves a corpus into train/validation/test windows counted back from the
//! most recent session.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// One interaction row from a raw log.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub session_id: String,
    pub item_id: String,
    /// Seconds since epoch; integer or real-valued in the source, stored as f64.
    pub timestamp: f64,
}

/// A cleaned, time-ordered session over dense item indices.
///
/// Indices below the owning corpus's known-vocabulary size refer to training
/// items; larger indices (present only in validation/test splits) refer to
/// out-of-vocabulary items kept so that evaluation can count them as misses.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub items: Vec<u32>,
    pub event_times: Vec<f64>,
    /// Timestamp of the session's last event; the recency anchor for time decay.
    pub session_time: f64,
}

impl Session {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Bidirectional item-id map assigning dense indices in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id_of(&self, idx: u32) -> Option<&str> {
        self.ids.get(idx as usize).map(String::as_str)
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn insert(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut v = Vocab::default();
        for id in &ids {
            if v.index.contains_key(id) {
                return Err(Error::CorpusFormat(format!("duplicate vocabulary id {id:?}")));
            }
            v.insert(id);
        }
        Ok(v)
    }
}

/// A preprocessed collection of sessions sharing one item vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionCorpus {
    pub sessions: Vec<Session>,
    pub vocab: Vocab,
    /// Raw ids of out-of-vocabulary items, indexed as `vocab.len() + j`.
    /// Empty for preprocessed and training corpora; populated on
    /// validation/test splits whose items fall outside the training vocabulary.
    pub oov_ids: Vec<String>,
    pub t_max: f64,
}

impl SessionCorpus {
    /// Number of known (trainable) items, `n`.
    pub fn n_items(&self) -> usize {
        self.vocab.len()
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.len()
    }

    /// True when `idx` refers to a known vocabulary item.
    pub fn is_known(&self, idx: u32) -> bool {
        (idx as usize) < self.vocab.len()
    }

    /// Resolves any index, known or out-of-vocabulary, back to its raw id.
    pub fn id_of(&self, idx: u32) -> Option<&str> {
        let n = self.vocab.len();
        if (idx as usize) < n {
            self.vocab.id_of(idx)
        } else {
            self.oov_ids.get(idx as usize - n).map(String::as_str)
        }
    }

    /// Flattens the corpus back into events, resolving indices to raw ids.
    pub fn to_events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for s in &self.sessions {
            for (&idx, &ts) in s.items.iter().zip(&s.event_times) {
                out.push(Event {
                    session_id: s.id.clone(),
                    item_id: self
                        .id_of(idx)
                        .expect("corpus index out of range")
                        .to_string(),
                    timestamp: ts,
                });
            }
        }
        out
    }
}

/// Describes how to read a delimited session log.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LogFormat {
    /// Field delimiter; `None` auto-detects tab vs. comma from the header row.
    pub delimiter: Option<u8>,
    /// Column names; `None` matches common aliases case-insensitively.
    pub session_col: Option<String>,
    pub item_col: Option<String>,
    pub time_col: Option<String>,
}

/// Row counts reported by [`parse_log`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows: usize,
    pub malformed: usize,
}

const SESSION_ALIASES: &[&str] = &["sessionid", "session_id", "session"];
const ITEM_ALIASES: &[&str] = &["itemid", "item_id", "item"];
const TIME_ALIASES: &[&str] = &["time", "timestamp", "ts"];

fn resolve_column(
    headers: &csv::StringRecord,
    requested: Option<&String>,
    aliases: &[&str],
    what: &str,
) -> Result<usize> {
    if let Some(name) = requested {
        return headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")));
    }
    headers
        .iter()
        .position(|h| aliases.contains(&h.trim().to_ascii_lowercase().as_str()))
        .ok_or_else(|| {
            Error::Schema(format!(
                "no {what} column found; header is {:?} (override with an explicit column name)",
                headers.iter().collect::<Vec<_>>()
            ))
        })
}

/// Parses a delimited log with a header row into events, in file order.
///
/// Malformed rows (wrong field count, empty ids, unparseable or negative
/// timestamps) are skipped and counted in the returned [`ParseReport`].
pub fn parse_log<R: Read>(source: R, format: &LogFormat) -> Result<(Vec<Event>, ParseReport)> {
    let mut reader = BufReader::new(source);
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Ok((Vec::new(), ParseReport::default()));
    }
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = format.delimiter.unwrap_or({
        if header_line.contains('\t') {
            b'\t'
        } else {
            b','
        }
    });

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .clone();
    let width = headers.len();
    let s_col = resolve_column(&headers, format.session_col.as_ref(), SESSION_ALIASES, "session id")?;
    let i_col = resolve_column(&headers, format.item_col.as_ref(), ITEM_ALIASES, "item id")?;
    let t_col = resolve_column(&headers, format.time_col.as_ref(), TIME_ALIASES, "timestamp")?;

    let mut events = Vec::new();
    let mut report = ParseReport::default();
    for record in rdr.records() {
        report.rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                report.malformed += 1;
                continue;
            }
        };
        if record.len() != width {
            report.malformed += 1;
            continue;
        }
        let session_id = record.get(s_col).unwrap_or("").trim();
        let item_id = record.get(i_col).unwrap_or("").trim();
        let ts: Option<f64> = record.get(t_col).and_then(|t| t.trim().parse().ok());
        match (session_id.is_empty(), item_id.is_empty(), ts) {
            (false, false, Some(t)) if t.is_finite() && t >= 0.0 => events.push(Event {
                session_id: session_id.to_string(),
                item_id: item_id.to_string(),
                timestamp: t,
            }),
            _ => report.malformed += 1,
        }
    }
    Ok((events, report))
}

/// Groups events into sessions, applies the support and length filters, and
/// builds a dense vocabulary over the surviving items.
///
/// Filtering removes items whose total occurrence count falls below
/// `min_item_support` and then drops sessions shorter than
/// `min_session_length`; because dropping sessions can push an item back
/// under the support threshold, the two filters repeat until the corpus is
/// stable. This makes `preprocess` idempotent: re-running it on its own
/// output is an identity.
pub fn preprocess(
    events: &[Event],
    min_item_support: usize,
    min_session_length: usize,
) -> Result<SessionCorpus> {
    // Group by session id in first-appearance order; stable-sort each session
    // by timestamp so equal timestamps keep log order.
    let mut order: Vec<String> = Vec::new();
    let mut by_session: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    for ev in events {
        by_session
            .entry(ev.session_id.clone())
            .or_insert_with(|| {
                order.push(ev.session_id.clone());
                Vec::new()
            })
            .push((ev.item_id.clone(), ev.timestamp));
    }
    let mut sessions: Vec<(String, Vec<(String, f64)>)> = order
        .into_iter()
        .map(|id| {
            let mut evs = by_session.remove(&id).unwrap();
            evs.sort_by(|a, b| a.1.total_cmp(&b.1));
            (id, evs)
        })
        .collect();

    loop {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for (_, evs) in &sessions {
            for (item, _) in evs {
                *counts.entry(item.as_str()).or_default() += 1;
            }
        }
        let under: Vec<String> = counts
            .iter()
            .filter(|(_, &c)| c < min_item_support)
            .map(|(&id, _)| id.to_string())
            .collect();
        let all_long_enough = sessions.iter().all(|(_, evs)| evs.len() >= min_session_length);
        if under.is_empty() && all_long_enough {
            break;
        }
        if !under.is_empty() {
            for (_, evs) in &mut sessions {
                evs.retain(|(item, _)| !under.iter().any(|u| u == item));
            }
        }
        sessions.retain(|(_, evs)| evs.len() >= min_session_length);
        if sessions.is_empty() {
            return Err(Error::EmptyCorpus);
        }
    }
    if sessions.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut vocab = Vocab::default();
    let mut out = Vec::with_capacity(sessions.len());
    let mut t_max = f64::NEG_INFINITY;
    for (id, evs) in &sessions {
        let items: Vec<u32> = evs.iter().map(|(item, _)| vocab.insert(item)).collect();
        let event_times: Vec<f64> = evs.iter().map(|&(_, t)| t).collect();
        let session_time = *event_times.last().unwrap();
        t_max = t_max.max(session_time);
        out.push(Session {
            id: id.clone(),
            items,
            event_times,
            session_time,
        });
    }
    Ok(SessionCorpus {
        sessions: out,
        vocab,
        oov_ids: Vec::new(),
        t_max,
    })
}

/// Splits a corpus into train/validation/test by whole calendar days counted
/// back from the most recent session.
///
/// A session whose last event lies within the final `test_days` days goes to
/// the test split, the preceding `valid_days` days to validation, and the
/// remainder to training. The vocabulary is rebuilt from the training split;
/// validation/test items outside it are kept under extended indices (at or
/// above `n`) so evaluation can treat them as unknown.
pub fn split_by_days(
    corpus: &SessionCorpus,
    test_days: usize,
    valid_days: usize,
) -> Result<(SessionCorpus, SessionCorpus, SessionCorpus)> {
    if corpus.sessions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let t_max = corpus.t_max;
    let mut buckets: [Vec<&Session>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for s in &corpus.sessions {
        let day = ((t_max - s.session_time) / SECONDS_PER_DAY).floor() as i64;
        let slot = if day < test_days as i64 {
            2
        } else if day < (test_days + valid_days) as i64 {
            1
        } else {
            0
        };
        buckets[slot].push(s);
    }
    if buckets[0].is_empty() {
        return Err(Error::EmptyTrainSplit);
    }

    // Training vocabulary preserves the original index order restricted to
    // items that actually occur in training sessions.
    let mut seen = vec![false; corpus.vocab.len() + corpus.oov_ids.len()];
    for s in &buckets[0] {
        for &i in &s.items {
            seen[i as usize] = true;
        }
    }
    let mut vocab = Vocab::default();
    let mut remap: Vec<Option<u32>> = vec![None; seen.len()];
    for (old, &present) in seen.iter().enumerate() {
        if present {
            let id = corpus.id_of(old as u32).unwrap();
            remap[old] = Some(vocab.insert(id));
        }
    }

    let rebuild = |bucket: &[&Session], vocab: &Vocab, keep_oov: bool| -> SessionCorpus {
        let n = vocab.len() as u32;
        let mut oov_ids: Vec<String> = Vec::new();
        let mut oov_map: HashMap<String, u32> = HashMap::new();
        let mut sessions = Vec::with_capacity(bucket.len());
        let mut t_split = f64::NEG_INFINITY;
        for s in bucket {
            let items = s
                .items
                .iter()
                .map(|&old| match remap[old as usize] {
                    Some(new) => new,
                    None => {
                        debug_assert!(keep_oov, "training sessions define the vocabulary");
                        let id = corpus.id_of(old).unwrap();
                        *oov_map.entry(id.to_string()).or_insert_with(|| {
                            oov_ids.push(id.to_string());
                            n + (oov_ids.len() as u32 - 1)
                        })
                    }
                })
                .collect();
            t_split = t_split.max(s.session_time);
            sessions.push(Session {
                id: s.id.clone(),
                items,
                event_times: s.event_times.clone(),
                session_time: s.session_time,
            });
        }
        SessionCorpus {
            sessions,
            vocab: vocab.clone(),
            oov_ids,
            t_max: if t_split.is_finite() { t_split } else { 0.0 },
        }
    };

    let train = rebuild(&buckets[0], &vocab, false);
    let valid = rebuild(&buckets[1], &vocab, true);
    let test = rebuild(&buckets[2], &vocab, true);
    Ok((train, valid, test))
}

const CONTAINER_MAGIC: &str = "#slist-corpus v1";

impl SessionCorpus {
    /// Writes the corpus as a self-describing text container: a header with
    /// the vocabulary and counts, followed by one record per session.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CONTAINER_MAGIC}")?;
        writeln!(w, "#items {}", self.vocab.len())?;
        writeln!(w, "#oov {}", self.oov_ids.len())?;
        writeln!(w, "#sessions {}", self.sessions.len())?;
        writeln!(w, "#t_max {}", self.t_max)?;
        for id in self.vocab.ids() {
            writeln!(w, "I\t{id}")?;
        }
        for id in &self.oov_ids {
            writeln!(w, "U\t{id}")?;
        }
        for s in &self.sessions {
            write!(w, "S\t{}\t", s.id)?;
            for (k, (&i, &t)) in s.items.iter().zip(&s.event_times).enumerate() {
                if k > 0 {
                    write!(w, " ")?;
                }
                write!(w, "{i}:{t}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads a corpus previously written by [`SessionCorpus::save`].
    pub fn load<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::CorpusFormat("unexpected end of file".into()))?
                .map_err(Error::Io)
        };
        let magic = next()?;
        if magic != CONTAINER_MAGIC {
            return Err(Error::CorpusFormat(format!("bad magic line {magic:?}")));
        }
        let field = |line: &str, key: &str| -> Result<String> {
            line.strip_prefix(&format!("#{key} "))
                .map(str::to_string)
                .ok_or_else(|| Error::CorpusFormat(format!("expected #{key}, got {line:?}")))
        };
        let n: usize = field(&next()?, "items")?
            .parse()
            .map_err(|_| Error::CorpusFormat("bad item count".into()))?;
        let k: usize = field(&next()?, "oov")?
            .parse()
            .map_err(|_| Error::CorpusFormat("bad oov count".into()))?;
        let m: usize = field(&next()?, "sessions")?
            .parse()
            .map_err(|_| Error::CorpusFormat("bad session count".into()))?;
        let t_max: f64 = field(&next()?, "t_max")?
            .parse()
            .map_err(|_| Error::CorpusFormat("bad t_max".into()))?;

        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next()?;
            ids.push(
                line.strip_prefix("I\t")
                    .ok_or_else(|| Error::CorpusFormat(format!("expected item line, got {line:?}")))?
                    .to_string(),
            );
        }
        let vocab = Vocab::from_ids(ids)?;
        let mut oov_ids = Vec::with_capacity(k);
        for _ in 0..k {
            let line = next()?;
            oov_ids.push(
                line.strip_prefix("U\t")
                    .ok_or_else(|| Error::CorpusFormat(format!("expected oov line, got {line:?}")))?
                    .to_string(),
            );
        }
        let total = (n + k) as u32;
        let mut sessions = Vec::with_capacity(m);
        for _ in 0..m {
            let line = next()?;
            let rest = line
                .strip_prefix("S\t")
                .ok_or_else(|| Error::CorpusFormat(format!("expected session line, got {line:?}")))?;
            let (id, payload) = rest
                .split_once('\t')
                .ok_or_else(|| Error::CorpusFormat("session line missing payload".into()))?;
            let mut items = Vec::new();
            let mut event_times: Vec<f64> = Vec::new();
            for pair in payload.split(' ').filter(|p| !p.is_empty()) {
                let (i, t) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::CorpusFormat(format!("bad event {pair:?}")))?;
                let idx: u32 = i
                    .parse()
                    .map_err(|_| Error::CorpusFormat(format!("bad item index {i:?}")))?;
                if idx >= total {
                    return Err(Error::CorpusFormat(format!(
                        "item index {idx} out of range (vocabulary {n} + oov {k})"
                    )));
                }
                let ts: f64 = t
                    .parse()
                    .map_err(|_| Error::CorpusFormat(format!("bad timestamp {t:?}")))?;
                items.push(idx);
                event_times.push(ts);
            }
            if items.is_empty() {
                return Err(Error::CorpusFormat(format!("session {id:?} has no events")));
            }
            if event_times.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::CorpusFormat(format!(
                    "session {id:?} timestamps are not non-decreasing"
                )));
            }
            let session_time = *event_times.last().unwrap();
            sessions.push(Session {
                id: id.to_string(),
                items,
                event_times,
                session_time,
            });
        }
        Ok(SessionCorpus {
            sessions,
            vocab,
            oov_ids,
            t_max,
        })
    }
}
