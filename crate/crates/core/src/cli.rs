//! Command-line front end. [`run`] parses arguments, dispatches, and returns
//! the exit status together with everything to be written to stdout and
//! stderr, so the binary is a thin wrapper and tests need no subprocess.
//!
//! Exit statuses: 0 success or positive decision, 1 negative decision,
//! 2 usage or input error, 3 budget exhausted / undecided, 4 verification
//! failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{
    corner_reduce, homo1_avoider, identity_permutation, random_permutation, scale_avoider,
    CheckPolicy, CheckStatus, Checked,
};
use crate::containment::{
    contains_interval_minor_with_budget, contains_pattern_with_budget, Decision, GridWitness,
    DEFAULT_NODE_BUDGET,
};
use crate::error::Error;
use crate::extremal::{
    load_records, ratio_csv, ratio_sequence, solve, ExtremalKind, ExtremalRecord, SearchConfig,
    SearchStatus, RECORDS_FILE,
};
use crate::probability::{
    avoid_probability, ell_of_k, estimates_csv, lemma_threshold, probability_chain, EstimateOptions,
};
use crate::tensor::{PermutationTensor, TensorMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "PATTERNFORGE_CACHE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "patternforge",
    version,
    about = "Pattern avoidance in d-dimensional 0-1 matrices"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Maximum number of worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Does A contain P as a pattern?
    Contains {
        #[arg(long)]
        a: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget_nodes: u64,
    },
    /// Does A contain B as an interval minor?
    Minor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget_nodes: u64,
    },
    /// Merge the cross sections lo..=hi of one axis by OR.
    Contract {
        #[arg(long)]
        a: String,
        #[arg(long)]
        axis: usize,
        #[arg(long)]
        lo: usize,
        #[arg(long)]
        hi: usize,
    },
    /// Kronecker product A ⊗ B.
    Kron {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    #[command(subcommand)]
    Construct(Construct),
    /// Exact extremal numbers.
    Extremal {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// value(n) / n^(d-1) over a range of n.
    RatioSeq {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    #[command(subcommand)]
    Prob(Prob),
    #[command(subcommand)]
    Records(Records),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    F,
    M,
}

impl From<Kind> for ExtremalKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::F => ExtremalKind::F,
            Kind::M => ExtremalKind::M,
        }
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long)]
    pattern: String,
    /// Node budget per top-level branch.
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Skip re-verification of witnesses and cached records.
    #[arg(long)]
    no_verify: bool,
    /// Prune tensors that are not leaders under the pattern's reflections.
    #[arg(long)]
    reflect: bool,
}

#[derive(Debug, Subcommand)]
enum Construct {
    /// s × … × s antidiagonal: ones where the coordinates sum to s + d − 1.
    Antidiag {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        d: usize,
    },
    Identity {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
    },
    RandomPerm {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Antidiagonal ⊗ N, avoiding R^{k,…,k} when N avoids R^{k−1,…,k−1}.
    Homo1 {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        no_verify: bool,
    },
    /// Blow an avoider A of P up by a factor s.
    Scale {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        a: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        no_verify: bool,
    },
    /// Reduce a permutation containing R^{ℓ,…,ℓ} to one with a corner one.
    CornerReduce {
        #[arg(long)]
        p: String,
        #[arg(long)]
        ell: usize,
        /// Grid witness JSON; the least witness is computed when omitted.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum Prob {
    /// Monte Carlo estimate of P(random permutation avoids R^{ℓ,…,ℓ}).
    Estimate {
        /// One or more sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u64>,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget_nodes: u64,
    },
    Threshold {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        d: u32,
    },
    Ell {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u32,
    },
    Chain {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        d: u32,
    },
}

#[derive(Debug, Subcommand)]
enum Records {
    List {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Re-check every stored record.
    Verify {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

/// What a command produced, in every format it supports.
struct Payload {
    status: i32,
    json: Value,
    text: String,
    csv: Option<String>,
}

impl Payload {
    fn new(status: i32, json: Value, text: String) -> Self {
        Payload {
            status,
            json,
            text,
            csv: None,
        }
    }
}

struct Env<'a> {
    threads: usize,
    cache_env: Option<&'a str>,
}

pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cache_env = std::env::var(CACHE_ENV).ok();
    run_with_cache_env(argv, cache_env.as_deref())
}

/// [`run`] with the cache environment variable supplied explicitly.
pub fn run_with_cache_env<I, T>(argv: I, cache_env: Option<&str>) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                outcome(EXIT_USAGE, String::new(), rendered)
            } else {
                outcome(EXIT_OK, rendered, String::new())
            };
        }
    };
    if cli.threads == 0 {
        return outcome(
            EXIT_USAGE,
            String::new(),
            "error: --threads must be at least 1\n".into(),
        );
    }
    let env = Env {
        threads: cli.threads,
        cache_env,
    };
    let mut stderr = String::new();
    let payload = match dispatch(cli.command, &env, &mut stderr) {
        Ok(p) => p,
        Err(e) => {
            let status = match e {
                Error::Undecided(_) => EXIT_UNDECIDED,
                Error::Verification(_) => EXIT_VERIFICATION,
                _ => EXIT_USAGE,
            };
            let _ = writeln!(stderr, "error: {e}");
            return outcome(status, String::new(), stderr);
        }
    };
    let stdout = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&payload.json).expect("json output");
            s.push('\n');
            s
        }
        Format::Text => payload.text,
        Format::Csv => match payload.csv {
            Some(csv) => csv,
            None => {
                let _ = writeln!(stderr, "error: this command has no CSV output");
                return outcome(EXIT_USAGE, String::new(), stderr);
            }
        },
    };
    outcome(payload.status, stdout, stderr)
}

fn outcome(status: i32, stdout: String, stderr: String) -> CommandOutcome {
    CommandOutcome {
        status,
        stdout,
        stderr,
    }
}

/// Loads a tensor from a file, or builds `R^{k1,…,kd}` from `allones:k1,…,kd`.
pub fn load_tensor(arg: &str) -> crate::Result<TensorMatrix> {
    if let Some(shape) = arg.strip_prefix("allones:") {
        let dims = shape
            .split(',')
            .map(|t| {
                t.trim().parse::<usize>().map_err(|_| {
                    Error::Precondition(format!("bad extent '{t}' in shorthand '{arg}'"))
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        return TensorMatrix::all_ones(&dims);
    }
    let text = fs::read_to_string(arg)
        .map_err(|e| Error::Precondition(format!("cannot read '{arg}': {e}")))?;
    TensorMatrix::parse_any(&text)
}

fn tensor_payload(t: &TensorMatrix, extra: Option<(&str, Value)>) -> Payload {
    let mut json = serde_json::to_value(t).expect("tensor json");
    let mut text = t.to_text();
    if let Some((key, v)) = extra {
        let _ = writeln!(text, "# {key}: {}", plain(&v));
        json[key] = v;
    }
    Payload::new(EXIT_OK, json, text)
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn checked_payload(c: Checked) -> Payload {
    let check = serde_json::to_value(c.check).expect("status json");
    let mut p = tensor_payload(&c.tensor, Some(("check", check)));
    if c.check == CheckStatus::Undecided {
        p.status = EXIT_UNDECIDED;
    }
    p
}

fn fmt_maps(maps: &[Vec<usize>]) -> String {
    let mut s = String::new();
    for (axis, m) in maps.iter().enumerate() {
        let idx: Vec<String> = m.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "axis {}: {}", axis + 1, idx.join(" "));
    }
    s
}

fn fmt_witness(w: &GridWitness) -> String {
    let mut s = String::new();
    for (axis, ivs) in w.axes.iter().enumerate() {
        let parts: Vec<String> = ivs.iter().map(|(a, b)| format!("[{a},{b}]")).collect();
        let _ = writeln!(s, "axis {}: {}", axis + 1, parts.join(" "));
    }
    s
}

fn dispatch(cmd: Command, env: &Env, stderr: &mut String) -> crate::Result<Payload> {
    match cmd {
        Command::Contains { a, p, budget_nodes } => {
            let (a, p) = (load_tensor(&a)?, load_tensor(&p)?);
            Ok(match contains_pattern_with_budget(&a, &p, budget_nodes)? {
                Decision::Contains(e) => Payload::new(
                    EXIT_OK,
                    json!({"result": "contains", "embedding": e}),
                    format!("contains\n{}", fmt_maps(&e.maps)),
                ),
                Decision::Avoids => Payload::new(
                    EXIT_NEGATIVE,
                    json!({"result": "avoids"}),
                    "avoids\n".into(),
                ),
                Decision::Undecided => undecided_payload(),
            })
        }
        Command::Minor { a, b, budget_nodes } => {
            let (a, b) = (load_tensor(&a)?, load_tensor(&b)?);
            Ok(
                match contains_interval_minor_with_budget(&a, &b, budget_nodes)? {
                    Decision::Contains(w) => Payload::new(
                        EXIT_OK,
                        json!({"result": "contains", "witness": w}),
                        format!("contains\n{}", fmt_witness(&w)),
                    ),
                    Decision::Avoids => Payload::new(
                        EXIT_NEGATIVE,
                        json!({"result": "avoids"}),
                        "avoids\n".into(),
                    ),
                    Decision::Undecided => undecided_payload(),
                },
            )
        }
        Command::Contract { a, axis, lo, hi } => Ok(tensor_payload(
            &load_tensor(&a)?.contract(axis, lo, hi)?,
            None,
        )),
        Command::Kron { a, b } => Ok(tensor_payload(
            &load_tensor(&a)?.kronecker(&load_tensor(&b)?)?,
            None,
        )),
        Command::Construct(c) => construct(c),
        Command::Extremal { kind, n, search } => {
            let cfg = search_config(&search, env)?;
            let pattern = load_tensor(&search.pattern)?;
            let rec = solve(kind.into(), n, &pattern, &cfg)?;
            let _ = writeln!(stderr, "elapsed: {} ms", rec.elapsed_ms);
            Ok(record_payload(&rec))
        }
        Command::RatioSeq {
            kind,
            from,
            to,
            search,
        } => {
            if from == 0 || from > to {
                return Err(Error::Precondition(format!("bad range {from}..={to}")));
            }
            let cfg = search_config(&search, env)?;
            let pattern = load_tensor(&search.pattern)?;
            let rows = ratio_sequence(kind.into(), &pattern, from..=to, &cfg)?;
            let partial = rows.iter().any(|r| r.status != SearchStatus::Exact);
            let csv = ratio_csv(&rows);
            let mut text = String::new();
            for r in &rows {
                let _ = writeln!(
                    text,
                    "n={:<3} value={:<6} ratio={:<10} ({:.6}){}",
                    r.n,
                    r.value,
                    r.ratio,
                    r.ratio_f64,
                    if r.status == SearchStatus::Exact {
                        ""
                    } else {
                        " lower bound only"
                    }
                );
            }
            let mut p = Payload::new(
                if partial { EXIT_UNDECIDED } else { EXIT_OK },
                json!({"kind": ExtremalKind::from(kind).name(), "rows": rows}),
                text,
            );
            p.csv = Some(csv);
            Ok(p)
        }
        Command::Prob(p) => prob(p, env),
        Command::Records(r) => records(r, env),
    }
}

fn undecided_payload() -> Payload {
    Payload::new(
        EXIT_UNDECIDED,
        json!({"result": "undecided"}),
        "undecided (node budget exhausted)\n".into(),
    )
}

fn construct(c: Construct) -> crate::Result<Payload> {
    let policy = |no_verify: bool| {
        if no_verify {
            CheckPolicy::unchecked()
        } else {
            CheckPolicy::default()
        }
    };
    Ok(match c {
        Construct::Antidiag { s, d } => tensor_payload(&TensorMatrix::antidiagonal(s, d)?, None),
        Construct::Identity { k, d } => {
            tensor_payload(identity_permutation(k, d)?.as_tensor(), None)
        }
        Construct::RandomPerm { k, d, seed } => {
            tensor_payload(random_permutation(k, d, seed)?.as_tensor(), None)
        }
        Construct::Homo1 { s, n, k, no_verify } => {
            checked_payload(homo1_avoider(s, &load_tensor(&n)?, k, policy(no_verify))?)
        }
        Construct::Scale { s, a, p, no_verify } => checked_payload(scale_avoider(
            s,
            &load_tensor(&a)?,
            &load_tensor(&p)?,
            policy(no_verify),
        )?),
        Construct::CornerReduce { p, ell, witness } => {
            let perm = PermutationTensor::new(load_tensor(&p)?)?;
            let w = match witness {
                Some(path) => {
                    GridWitness::parse_json(&fs::read_to_string(&path).map_err(|e| {
                        Error::Precondition(format!("cannot read '{}': {e}", path.display()))
                    })?)?
                }
                None => {
                    let grid = TensorMatrix::all_ones(&vec![ell; perm.d()])?;
                    match contains_interval_minor_with_budget(
                        perm.as_tensor(),
                        &grid,
                        DEFAULT_NODE_BUDGET,
                    )? {
                        Decision::Contains(w) => w,
                        Decision::Avoids => {
                            return Ok(Payload::new(
                                EXIT_NEGATIVE,
                                json!({"result": "avoids", "ell": ell}),
                                format!(
                                    "the permutation avoids the {ell}-grid; nothing to reduce\n"
                                ),
                            ))
                        }
                        Decision::Undecided => return Ok(undecided_payload()),
                    }
                }
            };
            if w.axes.first().map(|a| a.len()) != Some(ell) {
                return Err(Error::Precondition(format!(
                    "the witness does not have {ell} intervals per axis"
                )));
            }
            let r = corner_reduce(&perm, &w)?;
            let holds = r.claims_hold();
            let mut json = serde_json::to_value(&r)?;
            json["claims_hold"] = Value::Bool(holds);
            let mut text = r.reduced.to_text();
            let _ = writeln!(text, "# partition:");
            for line in fmt_witness(&r.partition).lines() {
                let _ = writeln!(text, "#   {line}");
            }
            let _ = writeln!(text, "# corner one: {}", r.has_corner_one);
            let _ = writeln!(
                text,
                "# contains smaller grid: {}",
                match r.contains_smaller_grid {
                    Some(b) => b.to_string(),
                    None => "undecided".into(),
                }
            );
            if !holds {
                let _ = writeln!(
                    text,
                    "# claims fail: the corner block held more than one one, so the deletions did not isolate a corner"
                );
            }
            let status = match (holds, r.contains_smaller_grid) {
                (true, _) => EXIT_OK,
                (false, None) => EXIT_UNDECIDED,
                (false, Some(_)) => EXIT_NEGATIVE,
            };
            Payload::new(status, json, text)
        }
    })
}

fn cache_dir(explicit: Option<&Path>, env: &Env) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| env.cache_env.filter(|s| !s.is_empty()).map(PathBuf::from))
}

fn search_config(a: &SearchArgs, env: &Env) -> crate::Result<SearchConfig> {
    let mut cfg = SearchConfig {
        cache_dir: cache_dir(a.cache_dir.as_deref(), env),
        parallel_width: env.threads,
        verify: !a.no_verify,
        reflection_pruning: a.reflect,
        ..Default::default()
    };
    if let Some(n) = a.budget_nodes {
        cfg.node_budget = n;
    }
    if let Some(secs) = a.budget_secs {
        if !(secs.is_finite() && secs > 0.0) {
            return Err(Error::Precondition(format!("bad time budget {secs}")));
        }
        cfg.time_budget = Some(Duration::from_secs_f64(secs));
    }
    Ok(cfg)
}

/// Record without its wall-clock time, which would make output vary between
/// runs.
fn record_json(rec: &ExtremalRecord) -> Value {
    let mut v = serde_json::to_value(rec).expect("record json");
    if let Value::Object(m) = &mut v {
        m.remove("elapsed_ms");
    }
    v
}

fn status_name(s: SearchStatus) -> &'static str {
    match s {
        SearchStatus::Exact => "exact",
        SearchStatus::LowerBoundOnly => "lower-bound-only",
    }
}

fn record_payload(rec: &ExtremalRecord) -> Payload {
    let mut text = format!(
        "{}(n={}, d={}) = {} [{}]\nnodes: {}\npattern:\n{}witness:\n{}",
        rec.kind.name(),
        rec.n,
        rec.d,
        rec.value,
        status_name(rec.status),
        rec.nodes,
        rec.pattern.to_text(),
        rec.witness.to_text()
    );
    if rec.status != SearchStatus::Exact {
        text.push_str("# budget exhausted: the value is attained but may not be maximal\n");
    }
    let status = if rec.status == SearchStatus::Exact {
        EXIT_OK
    } else {
        EXIT_UNDECIDED
    };
    Payload::new(status, record_json(rec), text)
}

#[derive(Serialize)]
struct ChainLine {
    expression: &'static str,
    value: f64,
}

fn prob(p: Prob, env: &Env) -> crate::Result<Payload> {
    Ok(match p {
        Prob::Estimate {
            k,
            ell,
            d,
            trials,
            seed,
            budget_nodes,
        } => {
            let opts = EstimateOptions {
                threads: env.threads,
                node_budget: budget_nodes,
            };
            let reports = k
                .iter()
                .map(|&k| avoid_probability(k, ell, d, trials, seed, opts))
                .collect::<crate::Result<Vec<_>>>()?;
            let mut text = String::new();
            for r in &reports {
                let _ = writeln!(
                    text,
                    "k={} ell={} d={} trials={} avoid={} undecided={} estimate={} radius99={}",
                    r.k, r.ell, r.d, r.trials, r.avoid_count, r.undecided, r.estimate, r.radius
                );
            }
            let undecided = reports.iter().any(|r| r.undecided > 0);
            let json = if reports.len() == 1 {
                serde_json::to_value(&reports[0])?
            } else {
                serde_json::to_value(&reports)?
            };
            let mut out =
                Payload::new(if undecided { EXIT_UNDECIDED } else { EXIT_OK }, json, text);
            out.csv = Some(estimates_csv(&reports));
            out
        }
        Prob::Threshold { ell, d } => {
            let t = lemma_threshold(ell, d)?;
            Payload::new(
                EXIT_OK,
                json!({"ell": ell, "d": d, "threshold": t}),
                format!("{t}\n"),
            )
        }
        Prob::Ell { k, d } => {
            let r = ell_of_k(k, d)?;
            let mut text = format!("ell={}", r.ell);
            if r.degenerate {
                text.push_str(" (degenerate)");
            }
            if let (Some(t), Some(met)) = (r.threshold, r.threshold_met) {
                let _ = write!(text, " threshold={t} met={met}");
            }
            text.push('\n');
            Payload::new(EXIT_OK, serde_json::to_value(&r)?, text)
        }
        Prob::Chain { k, ell, d } => {
            let r = probability_chain(k, ell, d)?;
            const NAMES: [&str; 4] = [
                "(1-(1/l-1/k)^(d-1))^(k/l-1)",
                "(1-1/(2l)^(d-1))^(k/(2l))",
                "exp(-k/(2l)^d)",
                "l^-(d+1)",
            ];
            let mut text = String::new();
            for (name, v) in NAMES.iter().zip(r.values) {
                let _ = writeln!(text, "{name:<30} {v:e}");
            }
            let _ = writeln!(text, "strict: {}", r.strictly_increasing());
            let lines: Vec<ChainLine> = NAMES
                .iter()
                .zip(r.values)
                .map(|(&expression, value)| ChainLine { expression, value })
                .collect();
            let mut json = serde_json::to_value(&r)?;
            json["expressions"] = serde_json::to_value(lines)?;
            json["strict"] = Value::Bool(r.strictly_increasing());
            let status = if r.strictly_increasing() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            Payload::new(status, json, text)
        }
    })
}

fn records(r: Records, env: &Env) -> crate::Result<Payload> {
    let dir = |explicit: Option<PathBuf>| {
        cache_dir(explicit.as_deref(), env).ok_or_else(|| {
            Error::Precondition(format!(
                "no cache directory: pass --cache-dir or set {CACHE_ENV}"
            ))
        })
    };
    match r {
        Records::List { cache_dir } => {
            let recs = load_records(&dir(cache_dir)?.join(RECORDS_FILE))?;
            let mut text = String::new();
            let mut csv = String::from("kind,n,d,pattern_dims,pattern_ones,value,status,nodes\n");
            for rec in &recs {
                let dims: Vec<String> = rec.pattern.dims().iter().map(|n| n.to_string()).collect();
                let _ = writeln!(
                    text,
                    "{}(n={}, d={}) pattern {} with {} ones = {} [{}]",
                    rec.kind.name(),
                    rec.n,
                    rec.d,
                    dims.join("x"),
                    rec.pattern.count_ones(),
                    rec.value,
                    status_name(rec.status)
                );
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    rec.kind.name(),
                    rec.n,
                    rec.d,
                    dims.join("x"),
                    rec.pattern.count_ones(),
                    rec.value,
                    status_name(rec.status),
                    rec.nodes
                );
            }
            let json = Value::Array(recs.iter().map(record_json).collect());
            let mut p = Payload::new(EXIT_OK, json, text);
            p.csv = Some(csv);
            Ok(p)
        }
        Records::Verify { cache_dir } => {
            let recs = load_records(&dir(cache_dir)?.join(RECORDS_FILE))?;
            let mut text = String::new();
            let mut results = Vec::new();
            let mut failed = 0;
            for (i, rec) in recs.iter().enumerate() {
                let res = rec.verify();
                let ok = res.is_ok();
                if !ok {
                    failed += 1;
                }
                let msg = res.err().map(|e| e.to_string());
                let _ = writeln!(
                    text,
                    "{} {}(n={}) {}",
                    i + 1,
                    rec.kind.name(),
                    rec.n,
                    msg.as_deref().unwrap_or("ok")
                );
                results.push(
                    json!({"index": i + 1, "kind": rec.kind, "n": rec.n, "ok": ok, "error": msg}),
                );
            }
            let _ = writeln!(text, "{} records, {} failed", recs.len(), failed);
            Ok(Payload::new(
                if failed == 0 {
                    EXIT_OK
                } else {
                    EXIT_VERIFICATION
                },
                json!({"records": recs.len(), "failed": failed, "results": results}),
                text,
            ))
        }
    }
}
