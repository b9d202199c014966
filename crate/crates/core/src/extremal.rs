//! Exact extremal numbers by branch and bound.
//!
//! `f(n, P, d)` is the largest number of ones in an `n × … × n` tensor that
//! avoids `P`; `m(n, B, d)` is the same under interval-minor avoidance.
//!
//! Cells are decided in lexicographic order, "include" before "exclude", and
//! a subtree is cut as soon as it cannot beat the best count found so far.
//! The first optimal tensor reached is therefore the lexicographically
//! greatest optimal indicator vector, which makes the witness canonical.
//! The search splits on the first few cells into independent branches that
//! may run in parallel; results are reduced in branch order, so neither the
//! value nor the witness depends on the thread count.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::containment::{
    contains_pattern_with_budget, embed_through, has_interval_minor, MinorSearch, PreparedPattern,
    DEFAULT_NODE_BUDGET,
};
use crate::error::{Error, Result};
use crate::tensor::{CellIter, TensorMatrix};

/// Name of the append-only record log inside a cache directory.
pub const RECORDS_FILE: &str = "records.jsonl";

const SEARCH_VERSION: &str = "bnb-lex-v1";
const SPLIT_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremalKind {
    /// Ordinary containment.
    F,
    /// Interval-minor containment.
    M,
}

impl ExtremalKind {
    pub fn name(self) -> &'static str {
        match self {
            ExtremalKind::F => "f",
            ExtremalKind::M => "m",
        }
    }

    /// Decides whether `a` contains `p` under this kind's containment order.
    pub fn contains(self, a: &TensorMatrix, p: &TensorMatrix, budget: u64) -> Result<Option<bool>> {
        Ok(match self {
            ExtremalKind::F => contains_pattern_with_budget(a, p, budget)?.as_bool(),
            ExtremalKind::M => has_interval_minor(a, p, budget)?.as_bool(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Exact,
    /// A budget ran out; the value is attained but may not be maximal.
    LowerBoundOnly,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Search nodes allowed to each top-level branch.
    pub node_budget: u64,
    pub time_budget: Option<Duration>,
    pub cache_dir: Option<PathBuf>,
    pub parallel_width: usize,
    /// Re-check the final witness (and cached records) with the full decider.
    pub verify: bool,
    /// Skip tensors that are not lexicographic leaders under the pattern's
    /// reflection symmetries. Never changes the value or the witness.
    pub reflection_pruning: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: 200_000_000,
            time_budget: None,
            cache_dir: None,
            parallel_width: 1,
            verify: true,
            reflection_pruning: false,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.node_budget == 0 {
            return Err(Error::Precondition("node budget must be positive".into()));
        }
        if self.time_budget.is_some_and(|t| t.is_zero()) {
            return Err(Error::Precondition("time budget must be positive".into()));
        }
        if self.parallel_width == 0 {
            return Err(Error::Precondition(
                "parallel width must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Identifies the search semantics, not the budgets, so a rerun with a
    /// larger budget finds (and resumes from) the earlier record.
    pub fn fingerprint(&self) -> String {
        let desc = format!(
            "{SEARCH_VERSION};split={SPLIT_DEPTH};reflect={}",
            self.reflection_pruning
        );
        let digest = Sha256::digest(desc.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One solved (or partially solved) instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalRecord {
    pub kind: ExtremalKind,
    pub n: usize,
    pub d: usize,
    pub pattern: TensorMatrix,
    pub value: usize,
    pub witness: TensorMatrix,
    pub status: SearchStatus,
    pub nodes: u64,
    #[serde(default)]
    pub elapsed_ms: u64,
    pub config_fingerprint: String,
}

impl ExtremalRecord {
    fn matches(
        &self,
        kind: ExtremalKind,
        n: usize,
        pattern: &TensorMatrix,
        fingerprint: &str,
    ) -> bool {
        self.kind == kind
            && self.n == n
            && self.d == pattern.ndim()
            && &self.pattern == pattern
            && self.config_fingerprint == fingerprint
    }

    /// Checks the record's invariants, re-running the avoidance decider on
    /// the stored witness.
    pub fn verify(&self) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::Verification(format!(
                "{} record n={}: {msg}",
                self.kind.name(),
                self.n
            )))
        };
        if self.witness.dims() != vec![self.n; self.d].as_slice() || self.pattern.ndim() != self.d {
            return fail(format!(
                "witness extents {:?} do not match n and d",
                self.witness.dims()
            ));
        }
        if self.witness.count_ones() != self.value {
            return fail(format!(
                "witness has {} ones but value is {}",
                self.witness.count_ones(),
                self.value
            ));
        }
        match self
            .kind
            .contains(&self.witness, &self.pattern, DEFAULT_NODE_BUDGET)?
        {
            Some(false) => {}
            Some(true) => return fail("witness contains the pattern".into()),
            None => return fail("avoidance of the witness could not be decided".into()),
        }
        if self.kind == ExtremalKind::F
            && self.status == SearchStatus::Exact
            && self.pattern.count_ones() >= 2
        {
            let lo = (self.n as u128).pow(self.d as u32 - 1);
            let hi = lo * self.n as u128;
            let v = self.value as u128;
            if v < lo || v > hi {
                return fail(format!("value {v} outside the trivial bounds [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

/// Reads every record from a JSONL log. Blank lines are skipped.
pub fn load_records(path: &Path) -> Result<Vec<ExtremalRecord>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn append_record(path: &Path, rec: &ExtremalRecord) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(rec)?)?;
    Ok(())
}

/// Exact `f(n, P, d)`.
pub fn f_exact(n: usize, p: &TensorMatrix, cfg: &SearchConfig) -> Result<ExtremalRecord> {
    solve(ExtremalKind::F, n, p, cfg)
}

/// Exact `m(n, B, d)`.
pub fn m_exact(n: usize, b: &TensorMatrix, cfg: &SearchConfig) -> Result<ExtremalRecord> {
    solve(ExtremalKind::M, n, b, cfg)
}

pub fn solve(
    kind: ExtremalKind,
    n: usize,
    pattern: &TensorMatrix,
    cfg: &SearchConfig,
) -> Result<ExtremalRecord> {
    cfg.validate()?;
    let d = pattern.ndim();
    if d < 2 {
        return Err(Error::Precondition(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if pattern.is_zero() {
        return Err(Error::Precondition(
            "the pattern must have at least one one".into(),
        ));
    }
    let cells = (n as u128).checked_pow(d as u32);
    if cells.is_none_or(|c| c > 4096) {
        return Err(Error::Precondition(format!(
            "n^d = {n}^{d} cells is beyond exact search"
        )));
    }
    let fingerprint = cfg.fingerprint();
    let log = cfg.cache_dir.as_ref().map(|dir| dir.join(RECORDS_FILE));

    let mut resume: Option<ExtremalRecord> = None;
    if let Some(log) = &log {
        let cached = load_records(log)?
            .into_iter()
            .rev()
            .find(|r| r.matches(kind, n, pattern, &fingerprint));
        if let Some(rec) = cached {
            if cfg.verify {
                rec.verify()?;
            }
            if rec.status == SearchStatus::Exact {
                return Ok(rec);
            }
            resume = Some(rec);
        }
    }

    let started = Instant::now();
    let ctx = Ctx::new(kind, n, pattern, cfg, started);
    let floor = resume.as_ref().map(|r| r.value as i64 - 1).unwrap_or(-1);
    let outcome = ctx.run(floor);

    let (value, witness) = match outcome.best {
        Some(cells) => {
            let ones: Vec<&[usize]> = cells.iter().map(|&c| ctx.cells[c].as_slice()).collect();
            (
                cells.len(),
                TensorMatrix::from_zero_based_unchecked(&vec![n; d], ones),
            )
        }
        None => match &resume {
            Some(r) => (r.value, r.witness.clone()),
            None => (0, TensorMatrix::zeros(&vec![n; d])?),
        },
    };
    let rec = ExtremalRecord {
        kind,
        n,
        d,
        pattern: pattern.clone(),
        value,
        witness,
        status: if outcome.exhausted || outcome.inexact {
            SearchStatus::LowerBoundOnly
        } else {
            SearchStatus::Exact
        },
        nodes: outcome.nodes,
        elapsed_ms: started.elapsed().as_millis() as u64,
        config_fingerprint: fingerprint,
    };
    if cfg.verify {
        rec.verify()?;
    }
    if let Some(log) = &log {
        append_record(log, &rec)?;
    }
    Ok(rec)
}

struct Ctx<'a> {
    kind: ExtremalKind,
    dims: Vec<usize>,
    cells: Vec<Vec<usize>>,
    /// Cells per axis-1 cross section; cross sections are contiguous runs.
    slab: usize,
    /// Per symmetric axis, the in-slab position each slab position mirrors to.
    mirrors: Vec<Vec<usize>>,
    prepared: PreparedPattern,
    pat_dims: &'a [usize],
    pat_ones: Vec<Vec<usize>>,
    cfg: &'a SearchConfig,
    deadline: Option<Instant>,
}

#[derive(Default)]
struct Outcome {
    best: Option<Vec<usize>>,
    nodes: u64,
    exhausted: bool,
    inexact: bool,
}

/// Search state of one branch.
struct Branch {
    bits: Vec<bool>,
    ones: Vec<Vec<usize>>,
    chosen: Vec<usize>,
    best: Option<Vec<usize>>,
    best_value: i64,
    nodes: u64,
    exhausted: bool,
    inexact: bool,
}

impl<'a> Ctx<'a> {
    fn new(
        kind: ExtremalKind,
        n: usize,
        pattern: &'a TensorMatrix,
        cfg: &'a SearchConfig,
        started: Instant,
    ) -> Self {
        let d = pattern.ndim();
        let dims = vec![n; d];
        let cells: Vec<Vec<usize>> = CellIter::new(&dims).collect();
        let slab = cells.len() / n;
        let mut mirrors = Vec::new();
        if cfg.reflection_pruning {
            for axis in 2..=d {
                if pattern.reflect(axis).is_ok_and(|r| &r == pattern) {
                    let ax = axis - 1;
                    // cells[0..slab] all have first coordinate 0.
                    let m = cells[..slab]
                        .iter()
                        .map(|c| {
                            let mut r = c.clone();
                            r[ax] = n - 1 - r[ax];
                            cells[..slab].iter().position(|x| *x == r).unwrap()
                        })
                        .collect();
                    mirrors.push(m);
                }
            }
        }
        Ctx {
            kind,
            dims,
            slab,
            mirrors,
            prepared: PreparedPattern::new(pattern),
            pat_dims: pattern.dims(),
            pat_ones: pattern.ones_zero_based(),
            cells,
            cfg,
            deadline: cfg.time_budget.map(|t| started + t),
        }
    }

    /// Would adding `cell` (already pushed onto `ones`) create a copy?
    /// `None` when the checker gave up.
    fn creates_copy(&self, ones: &[Vec<usize>], cell: &[usize]) -> Option<bool> {
        match self.kind {
            ExtremalKind::F => {
                embed_through(&self.dims, ones, &self.prepared, cell, DEFAULT_NODE_BUDGET).as_bool()
            }
            ExtremalKind::M => MinorSearch::new(
                &self.dims,
                ones,
                self.pat_dims,
                &self.pat_ones,
                DEFAULT_NODE_BUDGET,
            )
            .exists()
            .as_bool(),
        }
    }

    /// Lexicographic-leader check at slab boundaries. Returns the updated
    /// "still tied" mask, or `None` when the partial tensor is dominated by
    /// its mirror image.
    fn leader(&self, bits: &[bool], pos: usize, mut tied: u32) -> Option<u32> {
        if self.mirrors.is_empty() || pos == 0 || !pos.is_multiple_of(self.slab) {
            return Some(tied);
        }
        let base = pos - self.slab;
        for (s, mirror) in self.mirrors.iter().enumerate() {
            if tied >> s & 1 == 0 {
                continue;
            }
            for (i, &j) in mirror.iter().enumerate() {
                match (bits[base + i], bits[base + j]) {
                    (true, false) => {
                        tied &= !(1 << s);
                        break;
                    }
                    (false, true) => return None,
                    _ => {}
                }
            }
        }
        Some(tied)
    }

    fn run(&self, floor: i64) -> Outcome {
        let all_tied = (1u32 << self.mirrors.len()) - 1;
        let depth = SPLIT_DEPTH.min(self.cells.len());
        let mut prefixes = Vec::new();
        let mut root = self.branch(floor);
        self.split(&mut root, 0, depth, all_tied, &mut prefixes);

        let solve = |(bits, tied): &(Vec<bool>, u32)| {
            let mut b = self.branch(floor);
            for (i, &on) in bits.iter().enumerate() {
                b.bits[i] = on;
                if on {
                    b.ones.push(self.cells[i].clone());
                    b.chosen.push(i);
                }
            }
            self.dfs(&mut b, depth, *tied);
            b
        };
        let results: Vec<Branch> = if self.cfg.parallel_width > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.cfg.parallel_width)
                .build()
                .expect("thread pool");
            pool.install(|| prefixes.par_iter().map(solve).collect())
        } else {
            prefixes.iter().map(solve).collect()
        };

        let mut out = Outcome {
            nodes: root.nodes,
            inexact: root.inexact,
            ..Default::default()
        };
        let mut best_value = floor;
        for b in results {
            out.nodes += b.nodes;
            out.exhausted |= b.exhausted;
            out.inexact |= b.inexact;
            if let Some(sol) = b.best {
                if sol.len() as i64 > best_value {
                    best_value = sol.len() as i64;
                    out.best = Some(sol);
                }
            }
        }
        out
    }

    fn branch(&self, floor: i64) -> Branch {
        Branch {
            bits: vec![false; self.cells.len()],
            ones: Vec::new(),
            chosen: Vec::new(),
            best: None,
            best_value: floor,
            nodes: 0,
            exhausted: false,
            inexact: false,
        }
    }

    /// Enumerates feasible decision prefixes of length `depth`, include first.
    fn split(
        &self,
        b: &mut Branch,
        pos: usize,
        depth: usize,
        tied: u32,
        out: &mut Vec<(Vec<bool>, u32)>,
    ) {
        let Some(tied) = self.leader(&b.bits, pos, tied) else {
            return;
        };
        if pos == depth {
            out.push((b.bits[..depth].to_vec(), tied));
            return;
        }
        b.nodes += 1;
        if self.try_include(b, pos) {
            self.split(b, pos + 1, depth, tied, out);
            self.exclude_last(b, pos);
        }
        self.split(b, pos + 1, depth, tied, out);
    }

    fn try_include(&self, b: &mut Branch, pos: usize) -> bool {
        let cell = &self.cells[pos];
        b.ones.push(cell.clone());
        match self.creates_copy(&b.ones, cell) {
            Some(false) => {
                b.bits[pos] = true;
                b.chosen.push(pos);
                true
            }
            found => {
                // An undecided check is treated as a copy: the witness stays
                // valid, only optimality is lost.
                b.inexact |= found.is_none();
                b.ones.pop();
                false
            }
        }
    }

    fn exclude_last(&self, b: &mut Branch, pos: usize) {
        b.bits[pos] = false;
        b.ones.pop();
        b.chosen.pop();
    }

    fn dfs(&self, b: &mut Branch, pos: usize, tied: u32) {
        if b.exhausted {
            return;
        }
        b.nodes += 1;
        if b.nodes > self.cfg.node_budget
            || (b.nodes.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d))
        {
            b.exhausted = true;
            return;
        }
        let remaining = (self.cells.len() - pos) as i64;
        if b.chosen.len() as i64 + remaining <= b.best_value {
            return;
        }
        let Some(tied) = self.leader(&b.bits, pos, tied) else {
            return;
        };
        if pos == self.cells.len() {
            b.best_value = b.chosen.len() as i64;
            b.best = Some(b.chosen.clone());
            return;
        }
        if self.try_include(b, pos) {
            self.dfs(b, pos + 1, tied);
            self.exclude_last(b, pos);
        }
        self.dfs(b, pos + 1, tied);
    }
}

/// One line of an empirical ratio sequence `value / n^{d−1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub value: usize,
    pub status: SearchStatus,
    /// Exact ratio as `numerator/denominator` in lowest terms.
    pub ratio: String,
    pub ratio_f64: f64,
}

/// Exact values and ratios `value / n^{d−1}` for every `n` in the range.
pub fn ratio_sequence(
    kind: ExtremalKind,
    pattern: &TensorMatrix,
    ns: std::ops::RangeInclusive<usize>,
    cfg: &SearchConfig,
) -> Result<Vec<RatioRow>> {
    let d = pattern.ndim() as u32;
    ns.map(|n| {
        let rec = solve(kind, n, pattern, cfg)?;
        let ratio = BigRational::new(BigInt::from(rec.value), BigInt::from(n).pow(d - 1));
        Ok(RatioRow {
            n,
            value: rec.value,
            status: rec.status,
            ratio_f64: ratio.to_f64().unwrap_or(f64::NAN),
            ratio: format!("{}/{}", ratio.numer(), ratio.denom()),
        })
    })
    .collect()
}

/// Renders rows as CSV with a header line.
pub fn ratio_csv(rows: &[RatioRow]) -> String {
    let mut s = String::from("n,value,status,ratio,ratio_f64\n");
    for r in rows {
        let status = match r.status {
            SearchStatus::Exact => "exact",
            SearchStatus::LowerBoundOnly => "lower-bound-only",
        };
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.value, status, r.ratio, r.ratio_f64
        ));
    }
    s
}
