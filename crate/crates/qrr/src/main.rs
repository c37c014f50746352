//! Command-line front end: evaluate, verify, recognize products, replay
//! constant-term proofs, and search for identities.
//!
//! Exit codes: 0 when everything passed, 1 when a verification or proof
//! replay found a mismatch, 2 for usage, lookup or schema errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrr_core::catalog::{eval_side, parse_side, Record, SideFactor, VerifyOptions};
use qrr_core::recognize::recognize_product;
use qrr_core::search::run_search;
use qrr_core::EvalCtx;

use qrr::{
    load_catalog, parse_search_config, shard_records, timed, verify_all, verify_one, Outcome,
};

#[derive(Parser)]
#[command(name = "qrr", version, about = "Exact q-series identity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CatalogOpt {
    /// Catalog file (defaults to the shipped catalog).
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OutOpt {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "text", value_parser = ["text", "structured"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Expand an expression (or a record side) as a q-series.
    Eval {
        /// Expression, e.g. "sum(n): q^(n^2) / (q;q)_n".
        expr: Option<String>,
        /// Take the sum side of this catalog record instead.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 40)]
        order: i64,
        #[command(flatten)]
        catalog: CatalogOpt,
    },
    /// Verify one catalog record.
    Verify {
        #[arg(long)]
        id: String,
        /// Default order (a per-record override still wins).
        #[arg(long, default_value_t = 50)]
        order: i64,
        #[arg(long, default_value_t = 8)]
        param_degree: u32,
        #[command(flatten)]
        catalog: CatalogOpt,
    },
    /// Verify the whole catalog in parallel and emit a report.
    VerifyAll {
        #[arg(long, default_value_t = 50)]
        order: i64,
        #[arg(long, default_value_t = 8)]
        param_degree: u32,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Verify only shard I of N records, written I/N (I is 0-based).
        #[arg(long)]
        shard: Option<String>,
        #[command(flatten)]
        catalog: CatalogOpt,
        #[command(flatten)]
        out: OutOpt,
    },
    /// Recognize an expression (or a record's sum side) as a periodic
    /// infinite product.
    Prodmake {
        expr: Option<String>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 50)]
        order: i64,
        #[arg(long, default_value_t = 24)]
        max_period: usize,
        #[command(flatten)]
        catalog: CatalogOpt,
    },
    /// Replay a record's constant-term proof script against its sum side.
    Ct {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 30)]
        order: i64,
        #[command(flatten)]
        catalog: CatalogOpt,
    },
    /// Grid-search for sum-to-product identities.
    Search {
        /// key = value configuration file; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only shard I of N, written I/N (I is 0-based).
        #[arg(long)]
        shard: Option<String>,
        #[command(flatten)]
        out: OutOpt,
    },
}

/// Outcome of a subcommand, mapped to the process exit code.
enum Run {
    Ok,
    Mismatch,
    Usage(String),
}

fn parse_shard(s: &str) -> Result<(u32, u32), String> {
    let bad = || format!("bad --shard '{s}': expected I/N with 0 <= I < N");
    let (i, n) = s.split_once('/').ok_or_else(bad)?;
    let i: u32 = i.trim().parse().map_err(|_| bad())?;
    let n: u32 = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || i >= n {
        return Err(bad());
    }
    Ok((i, n))
}

fn find_record(records: &[Record], id: &str) -> Result<Record, String> {
    records
        .iter()
        .find(|r| r.id == id)
        .cloned()
        .ok_or_else(|| format!("no record with id '{id}'"))
}

/// The record side containing a sum, or the first side.
fn sum_side(rec: &Record) -> qrr_core::catalog::SideExpr {
    rec.sides
        .iter()
        .find(|s| {
            s.terms
                .iter()
                .any(|t| t.factors.iter().any(|f| matches!(f, SideFactor::Sum(_))))
        })
        .unwrap_or(&rec.sides[0])
        .clone()
}

fn pick_side(
    expr: Option<&str>,
    id: Option<&str>,
    catalog: &CatalogOpt,
) -> Result<qrr_core::catalog::SideExpr, String> {
    match (expr, id) {
        (Some(e), None) => parse_side(e).map_err(|e| e.to_string()),
        (None, Some(id)) => {
            let records = load_catalog(catalog.catalog.as_deref()).map_err(|e| e.to_string())?;
            let rec = find_record(&records, id)?;
            if rec.sides.is_empty() {
                return Err(format!("record '{id}' has no sides"));
            }
            Ok(sum_side(&rec))
        }
        _ => Err("give exactly one of an expression or --id".into()),
    }
}

fn emit(out: &OutOpt, text: &str) -> Result<(), String> {
    match &out.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
    }
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Eval { expr, id, order, catalog } => {
            let side = match pick_side(expr.as_deref(), id.as_deref(), &catalog) {
                Ok(s) => s,
                Err(e) => return Run::Usage(e),
            };
            match eval_side(&side, &EvalCtx::to_order(order)) {
                Ok(series) => {
                    println!("{}", series.to_text());
                    Run::Ok
                }
                Err(e) => Run::Usage(e.to_string()),
            }
        }
        Command::Verify { id, order, param_degree, catalog } => {
            let records = match load_catalog(catalog.catalog.as_deref()) {
                Ok(r) => r,
                Err(e) => return Run::Usage(e.to_string()),
            };
            let rec = match find_record(&records, &id) {
                Ok(r) => r,
                Err(e) => return Run::Usage(e),
            };
            let opts = VerifyOptions { order, param_degree };
            let entry = verify_one(&rec, &opts);
            match &entry.outcome {
                Outcome::Fail(msg) => {
                    println!("fail {} (order {}): {}", entry.id, entry.order, msg);
                    Run::Mismatch
                }
                other => {
                    println!("{} {} (order {})", other.keyword(), entry.id, entry.order);
                    Run::Ok
                }
            }
        }
        Command::VerifyAll { order, param_degree, jobs, shard, catalog, out } => {
            let mut records = match load_catalog(catalog.catalog.as_deref()) {
                Ok(r) => r,
                Err(e) => return Run::Usage(e.to_string()),
            };
            if let Some(s) = shard {
                match parse_shard(&s) {
                    Ok((i, n)) => records = shard_records(records, i, n),
                    Err(e) => return Run::Usage(e),
                }
            }
            let opts = VerifyOptions { order, param_degree };
            let (report, secs) = timed(|| verify_all(&records, &opts, jobs));
            let text = match out.format.as_str() {
                "structured" => report.to_json(),
                _ => format!("{}elapsed: {secs:.1}s\n", report.to_text()),
            };
            if let Err(e) = emit(&out, &text) {
                return Run::Usage(e);
            }
            if report.all_ok() {
                Run::Ok
            } else {
                Run::Mismatch
            }
        }
        Command::Prodmake { expr, id, order, max_period, catalog } => {
            let side = match pick_side(expr.as_deref(), id.as_deref(), &catalog) {
                Ok(s) => s,
                Err(e) => return Run::Usage(e),
            };
            // Recognition needs a full window of exponents past the
            // candidate period; expand far enough regardless of --order.
            let window = (2 * max_period).max(32) as i64;
            let eval_order = order.max(window + 1);
            let series = match eval_side(&side, &EvalCtx::to_order(eval_order)) {
                Ok(s) => s,
                Err(e) => return Run::Usage(e.to_string()),
            };
            match recognize_product(&series, max_period) {
                Ok(prod) => {
                    println!("period {}", prod.period);
                    println!("pattern {:?}", prod.pattern);
                    println!("{}", prod.render());
                    Run::Ok
                }
                Err(e) => Run::Usage(e.to_string()),
            }
        }
        Command::Ct { id, order, catalog } => {
            let records = match load_catalog(catalog.catalog.as_deref()) {
                Ok(r) => r,
                Err(e) => return Run::Usage(e.to_string()),
            };
            let rec = match find_record(&records, &id) {
                Ok(r) => r,
                Err(e) => return Run::Usage(e),
            };
            if rec.proof.is_none() {
                return Run::Usage(format!("record '{id}' has no proof script"));
            }
            match qrr::replay_proof(&rec, order) {
                Ok(()) => {
                    println!("pass {id} proof replay (order {order})");
                    Run::Ok
                }
                Err(qrr_core::Error::Mismatch { exponent, lhs, rhs }) => {
                    println!("fail {id} proof replay: mismatch at q^({exponent}): {lhs} != {rhs}");
                    Run::Mismatch
                }
                Err(e) => Run::Usage(e.to_string()),
            }
        }
        Command::Search { config, shard, out } => {
            let mut cfg = match config {
                None => Default::default(),
                Some(path) => {
                    let text = match std::fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => {
                            return Run::Usage(format!("cannot read {}: {e}", path.display()))
                        }
                    };
                    match parse_search_config(&text) {
                        Ok(c) => c,
                        Err(e) => return Run::Usage(e.to_string()),
                    }
                }
            };
            if let Some(s) = shard {
                match parse_shard(&s) {
                    Ok((i, n)) => {
                        cfg.shard = i;
                        cfg.shards = n;
                    }
                    Err(e) => return Run::Usage(e),
                }
            }
            match run_search(&cfg) {
                Ok(found) => {
                    let mut text = String::new();
                    for c in &found {
                        text.push_str(&format!("{}\n", c.line));
                    }
                    text.push_str(&format!("found: {}\n", found.len()));
                    if let Err(e) = emit(&out, &text) {
                        return Run::Usage(e);
                    }
                    Run::Ok
                }
                Err(e) => Run::Usage(e.to_string()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Run::Ok => ExitCode::SUCCESS,
        Run::Mismatch => ExitCode::from(1),
        Run::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
