//! Std companion for `qrr-core`: parallel catalog verification with
//! structured reports, plus the small amount of file IO the CLI needs.
//!
//! The core crate stays `no_std`; everything that touches threads, files
//! or process state lives here.

use std::sync::Mutex;
use std::time::Instant;

use qrr_core::catalog::{check_proof, parse_catalog, verify_record, Record, Status, VerifyOptions};
use qrr_core::search::SearchConfig;
use qrr_core::{Error, Result};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Outcome for one record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Proved record, sides agree to the order used.
    Pass,
    /// Conjecture record, sides agree to the order used ("consistent").
    Consistent,
    /// Sides disagree or evaluation failed; carries the diagnostic.
    Fail(String),
}

impl Outcome {
    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail(_))
    }

    /// Stable status keyword for report output.
    pub fn keyword(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Consistent => "consistent",
            Outcome::Fail(_) => "fail",
        }
    }
}

/// One per-record report line.
#[derive(Clone, Debug)]
pub struct ReportEntry {
    pub id: String,
    /// The verification order actually used for this record.
    pub order: i64,
    pub outcome: Outcome,
}

/// A full verification report: per-record entries ordered by id, plus a
/// summary block.
#[derive(Clone, Debug)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
    pub order: i64,
    pub param_degree: u32,
}

impl Report {
    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn passed(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome == Outcome::Pass).count()
    }

    pub fn consistent(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome == Outcome::Consistent).count()
    }

    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_fail()).count()
    }

    pub fn all_ok(&self) -> bool {
        self.failed() == 0
    }

    /// Human-readable text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match &e.outcome {
                Outcome::Fail(msg) => {
                    out.push_str(&format!("fail {} (order {}): {}\n", e.id, e.order, msg))
                }
                other => {
                    out.push_str(&format!("{} {} (order {})\n", other.keyword(), e.id, e.order))
                }
            }
        }
        out.push_str(&format!(
            "summary: total {} pass {} consistent {} fail {} (order {}, param degree {})\n",
            self.total(),
            self.passed(),
            self.consistent(),
            self.failed(),
            self.order,
            self.param_degree,
        ));
        out
    }

    /// Deterministic JSON form with stable field names.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"records\": [\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str("    {");
            out.push_str(&format!("\"id\": {}, ", json_str(&e.id)));
            out.push_str(&format!("\"order\": {}, ", e.order));
            out.push_str(&format!("\"status\": {}", json_str(e.outcome.keyword())));
            if let Outcome::Fail(msg) = &e.outcome {
                out.push_str(&format!(", \"detail\": {}", json_str(msg)));
            }
            out.push('}');
            if i + 1 < self.entries.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ],\n  \"summary\": {");
        out.push_str(&format!(
            "\"total\": {}, \"pass\": {}, \"consistent\": {}, \"fail\": {}, \
             \"order\": {}, \"param_degree\": {}",
            self.total(),
            self.passed(),
            self.consistent(),
            self.failed(),
            self.order,
            self.param_degree,
        ));
        out.push_str("}\n}\n");
        out
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// Parallel verification
// ---------------------------------------------------------------------------

/// Verify one record, classifying the outcome.
pub fn verify_one(rec: &Record, opts: &VerifyOptions) -> ReportEntry {
    let order = rec.order.unwrap_or(opts.order);
    let outcome = match verify_record(rec, opts) {
        Ok(()) => match rec.status {
            Status::Conjecture => Outcome::Consistent,
            Status::Proved => Outcome::Pass,
        },
        Err(e) => Outcome::Fail(e.to_string()),
    };
    ReportEntry { id: rec.id.clone(), order, outcome }
}

/// Verify every record, fanning out one task per record over `jobs`
/// worker threads. The report is ordered by record id regardless of
/// completion order, so any jobs count yields the same report.
pub fn verify_all(records: &[Record], opts: &VerifyOptions, jobs: usize) -> Report {
    let jobs = jobs.max(1).min(records.len().max(1));
    let next = Mutex::new(0usize);
    let results: Mutex<Vec<(usize, ReportEntry)>> = Mutex::new(Vec::with_capacity(records.len()));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = {
                    let mut guard = next.lock().unwrap();
                    let idx = *guard;
                    *guard += 1;
                    idx
                };
                if idx >= records.len() {
                    break;
                }
                let entry = verify_one(&records[idx], opts);
                results.lock().unwrap().push((idx, entry));
            });
        }
    });
    let mut entries: Vec<(usize, ReportEntry)> = results.into_inner().unwrap();
    entries.sort_by(|a, b| a.1.id.cmp(&b.1.id).then(a.0.cmp(&b.0)));
    Report {
        entries: entries.into_iter().map(|(_, e)| e).collect(),
        order: opts.order,
        param_degree: opts.param_degree,
    }
}

/// Replay the proof script of one record against its sum side.
pub fn replay_proof(rec: &Record, order: i64) -> Result<()> {
    check_proof(rec, order)
}

// ---------------------------------------------------------------------------
// Catalog loading
// ---------------------------------------------------------------------------

/// Load a catalog: the shipped one, or a file if a path is given.
pub fn load_catalog(path: Option<&std::path::Path>) -> anyhow::Result<Vec<Record>> {
    let records = match path {
        None => qrr_core::catalog::builtin().map_err(|e| anyhow::anyhow!("{e}"))?,
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read catalog {}: {e}", p.display()))?;
            parse_catalog(&text).map_err(|e| anyhow::anyhow!("{e}"))?
        }
    };
    Ok(records)
}

/// Select the records for shard `i` of `n` (round-robin by position).
pub fn shard_records(records: Vec<Record>, shard: u32, shards: u32) -> Vec<Record> {
    records
        .into_iter()
        .enumerate()
        .filter(|(i, _)| (*i as u32) % shards == shard)
        .map(|(_, r)| r)
        .collect()
}

// ---------------------------------------------------------------------------
// Search configuration files
// ---------------------------------------------------------------------------

/// Parse a `key = value` search configuration.
///
/// Recognized keys: `indices` (comma-separated), `max_quad`, `shift_min`,
/// `shift_max`, `order1`, `order2`, `max_period`. Lines starting with `#`
/// and blank lines are ignored. Unknown keys are an error so typos do not
/// silently fall back to defaults.
pub fn parse_search_config(text: &str) -> Result<SearchConfig> {
    let mut cfg = SearchConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| {
            Error::Parse(format!("search config line {}: {what}", lineno + 1))
        };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        let int = |v: &str| v.parse::<i64>().map_err(|_| bad("expected an integer"));
        match key {
            "indices" => {
                let mut ids = Vec::new();
                for part in value.split(',') {
                    ids.push(int(part.trim())?);
                }
                cfg.indices = ids;
            }
            "max_quad" => cfg.max_quad = int(value)?,
            "shift_min" => cfg.shift_min = int(value)?,
            "shift_max" => cfg.shift_max = int(value)?,
            "order1" => cfg.order1 = int(value)?,
            "order2" => cfg.order2 = int(value)?,
            "max_period" => {
                cfg.max_period = int(value)?.try_into().map_err(|_| bad("negative period"))?
            }
            other => return Err(Error::Parse(format!("unknown search config key '{other}'"))),
        }
    }
    Ok(cfg)
}

/// Wall-clock helper for text reports (never included in structured
/// output, which must be byte-stable across runs).
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed().as_secs_f64())
}
