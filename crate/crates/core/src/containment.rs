//! Deciders for ordinary (submatrix) containment and interval-minor
//! containment.
//!
//! Interval minors are decided through grid witnesses: per axis, a list of
//! disjoint increasing intervals such that the block selected by every one
//! of the pattern holds at least one one of the host. A literal
//! contraction-sequence search is kept as an oracle for small instances.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::TensorMatrix;

/// Search nodes allowed to a decider before it answers `Undecided`.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

/// Largest host (by cell count) the contraction oracle accepts.
pub const ORACLE_MAX_CELLS: u128 = 512;

/// Outcome of an exact decision procedure with a node budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision<C> {
    Contains(C),
    Avoids,
    /// The budget ran out before a decision was reached.
    Undecided,
}

impl<C> Decision<C> {
    pub fn is_contained(&self) -> bool {
        matches!(self, Decision::Contains(_))
    }

    pub fn is_avoided(&self) -> bool {
        matches!(self, Decision::Avoids)
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self, Decision::Undecided)
    }

    pub fn certificate(&self) -> Option<&C> {
        match self {
            Decision::Contains(c) => Some(c),
            _ => None,
        }
    }

    /// `Some(true)` for contains, `Some(false)` for avoids.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Decision::Contains(_) => Some(true),
            Decision::Avoids => Some(false),
            Decision::Undecided => None,
        }
    }
}

/// Strictly increasing per-axis index maps carrying the pattern into the
/// host. `maps[ℓ][j - 1]` is the (1-based) host index of pattern index `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub maps: Vec<Vec<usize>>,
}

/// Per-axis disjoint increasing intervals, 1-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridWitness {
    pub axes: Vec<Vec<(usize, usize)>>,
}

impl GridWitness {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("witness json")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks the structural invariants against a host of extents `host` and
    /// a pattern of extents `pattern`.
    pub fn validate(&self, host: &[usize], pattern: &[usize]) -> Result<()> {
        if host.len() != pattern.len() {
            return Err(Error::Structural(format!(
                "host has {} axes, pattern has {}",
                host.len(),
                pattern.len()
            )));
        }
        if self.axes.len() != host.len() {
            return Err(Error::Structural(format!(
                "witness covers {} axes, expected {}",
                self.axes.len(),
                host.len()
            )));
        }
        for (ax, ivs) in self.axes.iter().enumerate() {
            if ivs.len() != pattern[ax] {
                return Err(Error::Structural(format!(
                    "axis {} has {} intervals, pattern extent is {}",
                    ax + 1,
                    ivs.len(),
                    pattern[ax]
                )));
            }
            let mut prev_end = 0;
            for &(a, b) in ivs {
                if a == 0 || a > b || b > host[ax] {
                    return Err(Error::Structural(format!(
                        "interval [{a},{b}] on axis {} is empty or outside 1..={}",
                        ax + 1,
                        host[ax]
                    )));
                }
                if a <= prev_end {
                    return Err(Error::Structural(format!(
                        "intervals on axis {} overlap or are out of order at [{a},{b}]",
                        ax + 1
                    )));
                }
                prev_end = b;
            }
        }
        Ok(())
    }

    /// Extends every axis to a full partition of `1..=n`: each gap joins the
    /// preceding interval and a leading gap joins the first one.
    pub fn extend_to_partition(&self, host: &[usize]) -> GridWitness {
        let axes = self
            .axes
            .iter()
            .zip(host)
            .map(|(ivs, &n)| {
                (0..ivs.len())
                    .map(|j| {
                        let lo = if j == 0 { 1 } else { ivs[j].0 };
                        let hi = if j + 1 == ivs.len() {
                            n
                        } else {
                            ivs[j + 1].0 - 1
                        };
                        (lo, hi)
                    })
                    .collect()
            })
            .collect();
        GridWitness { axes }
    }

    /// 1-based block coordinate of a 1-based host coordinate, or `None` when
    /// the coordinate falls in a gap on some axis.
    pub fn block_of(&self, coord: &[usize]) -> Option<Vec<usize>> {
        coord
            .iter()
            .zip(&self.axes)
            .map(|(&i, ivs)| {
                ivs.iter()
                    .position(|&(a, b)| a <= i && i <= b)
                    .map(|j| j + 1)
            })
            .collect()
    }
}

fn check_same_d(a: &TensorMatrix, p: &TensorMatrix) -> Result<()> {
    if a.ndim() != p.ndim() {
        return Err(Error::Structural(format!(
            "host is {}-dimensional, pattern is {}-dimensional",
            a.ndim(),
            p.ndim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ordinary containment.

/// A pattern with its ones arranged in search order.
#[derive(Debug, Clone)]
pub(crate) struct PreparedPattern {
    pub(crate) dims: Vec<usize>,
    /// 0-based coordinates of the ones, most-constrained first.
    pub(crate) order: Vec<Vec<usize>>,
}

impl PreparedPattern {
    pub(crate) fn new(p: &TensorMatrix) -> Self {
        let mut rest = p.ones_zero_based();
        let d = p.ndim();
        let mut covered: Vec<HashSet<usize>> = vec![HashSet::new(); d];
        let mut order = Vec::with_capacity(rest.len());
        // Greedy: next is the one sharing the most already-fixed axis indices
        // with the ones placed so far; ties go to the lexicographically least.
        while !rest.is_empty() {
            let (best, _) = rest
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let shared = (0..d).filter(|&ax| covered[ax].contains(&c[ax])).count();
                    (i, shared)
                })
                .fold((0, usize::MAX), |(bi, bs), (i, s)| {
                    if bs == usize::MAX || s > bs {
                        (i, s)
                    } else {
                        (bi, bs)
                    }
                });
            let c = rest.remove(best);
            for ax in 0..d {
                covered[ax].insert(c[ax]);
            }
            order.push(c);
        }
        PreparedPattern {
            dims: p.dims().to_vec(),
            order,
        }
    }

    fn fits_inside(&self, host: &[usize]) -> bool {
        self.dims.iter().zip(host).all(|(k, n)| k <= n)
    }
}

struct Exhausted;

struct EmbedSearch<'a> {
    host: &'a [usize],
    host_ones: &'a [Vec<usize>],
    pat: &'a [usize],
    order: Vec<&'a [usize]>,
    maps: Vec<Vec<Option<usize>>>,
    nodes: u64,
    budget: u64,
}

impl<'a> EmbedSearch<'a> {
    fn new(
        host: &'a [usize],
        host_ones: &'a [Vec<usize>],
        pat: &'a PreparedPattern,
        budget: u64,
    ) -> Self {
        EmbedSearch {
            host,
            host_ones,
            pat: &pat.dims,
            order: pat.order.iter().map(|c| c.as_slice()).collect(),
            maps: pat.dims.iter().map(|&k| vec![None; k]).collect(),
            nodes: 0,
            budget,
        }
    }

    /// Can pattern index `p` on `ax` go to host index `a` while keeping the
    /// partial map extendable to a strictly increasing total map?
    fn fits(&self, ax: usize, p: usize, a: usize) -> bool {
        let m = &self.maps[ax];
        if let Some(x) = m[p] {
            return x == a;
        }
        let (n, k) = (self.host[ax], self.pat[ax]);
        if a < p || n - a < k - p {
            return false;
        }
        if let Some((q, x)) = (0..p).rev().find_map(|q| m[q].map(|x| (q, x))) {
            if a < x + (p - q) {
                return false;
            }
        }
        if let Some((q, x)) = (p + 1..k).find_map(|q| m[q].map(|x| (q, x))) {
            if x < a + (q - p) {
                return false;
            }
        }
        true
    }

    fn assign(&mut self, one: &[usize], cell: &[usize], undo: &mut Vec<usize>) -> bool {
        if !(0..one.len()).all(|ax| self.fits(ax, one[ax], cell[ax])) {
            return false;
        }
        for ax in 0..one.len() {
            if self.maps[ax][one[ax]].is_none() {
                self.maps[ax][one[ax]] = Some(cell[ax]);
                undo.push(ax);
            }
        }
        true
    }

    fn unassign(&mut self, one: &[usize], undo: &[usize]) {
        for &ax in undo {
            self.maps[ax][one[ax]] = None;
        }
    }

    fn dfs(&mut self, i: usize) -> std::result::Result<bool, Exhausted> {
        if i == self.order.len() {
            return Ok(true);
        }
        let one = self.order[i];
        let mut undo = Vec::with_capacity(one.len());
        for c in 0..self.host_ones.len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Exhausted);
            }
            let cell = &self.host_ones[c];
            undo.clear();
            if self.assign(one, cell, &mut undo) {
                if self.dfs(i + 1)? {
                    return Ok(true);
                }
                self.unassign(one, &undo);
            }
        }
        Ok(false)
    }

    /// Completes the partial maps to total strictly increasing maps.
    fn embedding(&self) -> Embedding {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let mut out = Vec::with_capacity(m.len());
                let mut next = 0;
                for slot in m {
                    let x = slot.unwrap_or(next);
                    out.push(x + 1);
                    next = x + 1;
                }
                out
            })
            .collect();
        Embedding { maps }
    }
}

/// Embedding search over 0-based host ones; the kernel behind
/// [`contains_pattern`] and the extremal search.
pub(crate) fn embed(
    host: &[usize],
    host_ones: &[Vec<usize>],
    pat: &PreparedPattern,
    budget: u64,
) -> Decision<Embedding> {
    if !pat.fits_inside(host) || pat.order.len() > host_ones.len() {
        return Decision::Avoids;
    }
    let mut s = EmbedSearch::new(host, host_ones, pat, budget);
    match s.dfs(0) {
        Ok(true) => Decision::Contains(s.embedding()),
        Ok(false) => Decision::Avoids,
        Err(Exhausted) => Decision::Undecided,
    }
}

/// Like [`embed`], but only embeddings that send some one of the pattern to
/// `cell` are considered. If the host minus `cell` avoids the pattern, this
/// decides whether the host does.
pub(crate) fn embed_through(
    host: &[usize],
    host_ones: &[Vec<usize>],
    pat: &PreparedPattern,
    cell: &[usize],
    budget: u64,
) -> Decision<Embedding> {
    if !pat.fits_inside(host) || pat.order.len() > host_ones.len() {
        return Decision::Avoids;
    }
    let mut s = EmbedSearch::new(host, host_ones, pat, budget);
    let all = std::mem::take(&mut s.order);
    for forced in 0..all.len() {
        let mut undo = Vec::new();
        if !s.assign(all[forced], cell, &mut undo) {
            continue;
        }
        s.order = all
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != forced)
            .map(|(_, c)| *c)
            .collect();
        match s.dfs(0) {
            Ok(true) => return Decision::Contains(s.embedding()),
            Ok(false) => s.unassign(all[forced], &undo),
            Err(Exhausted) => return Decision::Undecided,
        }
    }
    Decision::Avoids
}

/// Does `a` contain `p` as a submatrix, up to turning ones into zeros?
pub fn contains_pattern(a: &TensorMatrix, p: &TensorMatrix) -> Result<Decision<Embedding>> {
    contains_pattern_with_budget(a, p, DEFAULT_NODE_BUDGET)
}

pub fn contains_pattern_with_budget(
    a: &TensorMatrix,
    p: &TensorMatrix,
    budget: u64,
) -> Result<Decision<Embedding>> {
    check_same_d(a, p)?;
    let pat = PreparedPattern::new(p);
    Ok(embed(a.dims(), &a.ones_zero_based(), &pat, budget))
}

// ---------------------------------------------------------------------------
// Interval minors.

/// Intervals fixed so far on one axis, plus an optional tail region
/// `[start, n)` still to be split into `pieces` consecutive intervals.
#[derive(Debug, Clone)]
struct AxisPlan {
    fixed: Vec<(usize, usize)>,
    tail: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy)]
enum Potential {
    Exact(usize),
    From(usize),
    Nowhere,
}

pub(crate) struct MinorSearch<'a> {
    host: &'a [usize],
    host_ones: &'a [Vec<usize>],
    pat: &'a [usize],
    pat_ones: &'a [Vec<usize>],
    nodes: u64,
    budget: u64,
}

impl<'a> MinorSearch<'a> {
    pub(crate) fn new(
        host: &'a [usize],
        host_ones: &'a [Vec<usize>],
        pat: &'a [usize],
        pat_ones: &'a [Vec<usize>],
        budget: u64,
    ) -> Self {
        MinorSearch {
            host,
            host_ones,
            pat,
            pat_ones,
            nodes: 0,
            budget,
        }
    }

    fn fits(&self) -> bool {
        self.pat.iter().zip(self.host).all(|(k, n)| k <= n)
    }

    fn potential(plan: &AxisPlan, x: usize) -> Potential {
        if let Some(j) = plan.fixed.iter().position(|&(a, b)| a <= x && x <= b) {
            return Potential::Exact(j);
        }
        match plan.tail {
            Some((start, _)) if x >= start => Potential::From(plan.fixed.len()),
            _ => Potential::Nowhere,
        }
    }

    /// Finds concrete intervals for every axis completing `plans` such that
    /// every block required by the pattern is occupied.
    fn complete(
        &mut self,
        plans: &[AxisPlan],
    ) -> std::result::Result<Option<Vec<Vec<(usize, usize)>>>, Exhausted> {
        let d = self.host.len();
        // blocks[o][ax]: block index of host one `o` on decided axes.
        let mut pot: Vec<Vec<Potential>> = self
            .host_ones
            .iter()
            .map(|c| {
                (0..d)
                    .map(|ax| Self::potential(&plans[ax], c[ax]))
                    .collect()
            })
            .collect();
        let mut chosen = Vec::with_capacity(d);
        if !self.required_blocks_possible(&pot) {
            return Ok(None);
        }
        if self.axis(plans, 0, &mut pot, &mut chosen)? {
            Ok(Some(chosen))
        } else {
            Ok(None)
        }
    }

    fn axis(
        &mut self,
        plans: &[AxisPlan],
        ax: usize,
        pot: &mut Vec<Vec<Potential>>,
        chosen: &mut Vec<Vec<(usize, usize)>>,
    ) -> std::result::Result<bool, Exhausted> {
        if ax == self.host.len() {
            return Ok(true);
        }
        let plan = &plans[ax];
        let n = self.host[ax];
        let mut ivs = plan.fixed.clone();
        match plan.tail {
            None => self.try_axis(plans, ax, &ivs, pot, chosen),
            Some((start, pieces)) => {
                if pieces == 0 {
                    return self.try_axis(plans, ax, &ivs, pot, chosen);
                }
                if n < start + pieces {
                    return Ok(false);
                }
                self.cuts(plans, ax, start, pieces, &mut ivs, pot, chosen)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn cuts(
        &mut self,
        plans: &[AxisPlan],
        ax: usize,
        start: usize,
        pieces: usize,
        ivs: &mut Vec<(usize, usize)>,
        pot: &mut Vec<Vec<Potential>>,
        chosen: &mut Vec<Vec<(usize, usize)>>,
    ) -> std::result::Result<bool, Exhausted> {
        let n = self.host[ax];
        if pieces == 1 {
            ivs.push((start, n - 1));
            let found = self.try_axis(plans, ax, ivs, pot, chosen)?;
            ivs.pop();
            return Ok(found);
        }
        // First piece is [start, end]; the rest need pieces - 1 indices.
        for end in start..=n - pieces {
            ivs.push((start, end));
            let found = self.cuts(plans, ax, end + 1, pieces - 1, ivs, pot, chosen)?;
            ivs.pop();
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn try_axis(
        &mut self,
        plans: &[AxisPlan],
        ax: usize,
        ivs: &[(usize, usize)],
        pot: &mut Vec<Vec<Potential>>,
        chosen: &mut Vec<Vec<(usize, usize)>>,
    ) -> std::result::Result<bool, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Exhausted);
        }
        let saved: Vec<Potential> = pot.iter().map(|p| p[ax]).collect();
        for (o, c) in self.host_ones.iter().enumerate() {
            pot[o][ax] = match ivs.iter().position(|&(a, b)| a <= c[ax] && c[ax] <= b) {
                Some(j) => Potential::Exact(j),
                None => Potential::Nowhere,
            };
        }
        let mut found = false;
        if self.required_blocks_possible(pot) {
            chosen.push(ivs.to_vec());
            found = self.axis(plans, ax + 1, pot, chosen)?;
            if !found {
                chosen.pop();
            }
        }
        for (o, p) in saved.into_iter().enumerate() {
            pot[o][ax] = p;
        }
        Ok(found)
    }

    fn required_blocks_possible(&self, pot: &[Vec<Potential>]) -> bool {
        self.pat_ones.iter().all(|b| {
            pot.iter().any(|p| {
                p.iter().zip(b).all(|(pt, &j)| match *pt {
                    Potential::Exact(x) => x == j,
                    Potential::From(lo) => j >= lo,
                    Potential::Nowhere => false,
                })
            })
        })
    }

    fn open_plans(&self) -> Vec<AxisPlan> {
        self.pat
            .iter()
            .map(|&k| AxisPlan {
                fixed: Vec::new(),
                tail: Some((0, k)),
            })
            .collect()
    }

    /// Existence only; the witness returned is some full partition.
    pub(crate) fn exists(&mut self) -> Decision<GridWitness> {
        if !self.fits() {
            return Decision::Avoids;
        }
        let plans = self.open_plans();
        match self.complete(&plans) {
            Ok(Some(axes)) => Decision::Contains(one_based(axes)),
            Ok(None) => Decision::Avoids,
            Err(Exhausted) => Decision::Undecided,
        }
    }

    /// The lexicographically least witness by flattened endpoints.
    pub(crate) fn least(&mut self) -> Decision<GridWitness> {
        if !self.fits() {
            return Decision::Avoids;
        }
        match self.least_inner() {
            Ok(Some(w)) => Decision::Contains(w),
            Ok(None) => Decision::Avoids,
            Err(Exhausted) => Decision::Undecided,
        }
    }

    fn least_inner(&mut self) -> std::result::Result<Option<GridWitness>, Exhausted> {
        let mut plans = self.open_plans();
        if self.complete(&plans)?.is_none() {
            return Ok(None);
        }
        for ax in 0..self.host.len() {
            let (n, k) = (self.host[ax], self.pat[ax]);
            let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(k);
            let mut start = 0;
            for j in 0..k {
                let mut lo = None;
                for a in start..=n - (k - j) {
                    plans[ax] = AxisPlan {
                        fixed: fixed.clone(),
                        tail: Some((a, k - j)),
                    };
                    if self.complete(&plans)?.is_some() {
                        lo = Some(a);
                        break;
                    }
                }
                let a = lo.expect("a feasible plan always extends");
                let mut hi = None;
                for b in a..=n - (k - j) {
                    let mut f = fixed.clone();
                    f.push((a, b));
                    plans[ax] = AxisPlan {
                        fixed: f,
                        tail: (j + 1 < k).then_some((b + 1, k - j - 1)),
                    };
                    if self.complete(&plans)?.is_some() {
                        hi = Some(b);
                        break;
                    }
                }
                let b = hi.expect("a feasible plan always extends");
                fixed.push((a, b));
                start = b + 1;
            }
            plans[ax] = AxisPlan { fixed, tail: None };
        }
        let axes = plans.into_iter().map(|p| p.fixed).collect();
        Ok(Some(one_based(axes)))
    }
}

fn one_based(axes: Vec<Vec<(usize, usize)>>) -> GridWitness {
    GridWitness {
        axes: axes
            .into_iter()
            .map(|ivs| ivs.into_iter().map(|(a, b)| (a + 1, b + 1)).collect())
            .collect(),
    }
}

/// Decides whether `a` contains `b` as an interval minor. The witness
/// returned is the lexicographically least by flattened interval endpoints.
pub fn contains_interval_minor(
    a: &TensorMatrix,
    b: &TensorMatrix,
) -> Result<Decision<GridWitness>> {
    contains_interval_minor_with_budget(a, b, DEFAULT_NODE_BUDGET)
}

pub fn contains_interval_minor_with_budget(
    a: &TensorMatrix,
    b: &TensorMatrix,
    budget: u64,
) -> Result<Decision<GridWitness>> {
    check_same_d(a, b)?;
    let (ao, bo) = (a.ones_zero_based(), b.ones_zero_based());
    Ok(MinorSearch::new(a.dims(), &ao, b.dims(), &bo, budget).least())
}

/// Existence-only interval-minor check. Cheaper than
/// [`contains_interval_minor`]; its witness is a full partition but not
/// necessarily the least one.
pub fn has_interval_minor(
    a: &TensorMatrix,
    b: &TensorMatrix,
    budget: u64,
) -> Result<Decision<GridWitness>> {
    check_same_d(a, b)?;
    let (ao, bo) = (a.ones_zero_based(), b.ones_zero_based());
    Ok(MinorSearch::new(a.dims(), &ao, b.dims(), &bo, budget).exists())
}

/// Certificate check: every block required by a one of `b` holds a one of `a`.
pub fn verify_witness(a: &TensorMatrix, b: &TensorMatrix, w: &GridWitness) -> Result<bool> {
    w.validate(a.dims(), b.dims())?;
    let hit: HashSet<Vec<usize>> = a.ones().iter().filter_map(|c| w.block_of(c)).collect();
    Ok(b.ones().iter().all(|one| hit.contains(one)))
}

/// Literal interval-minor oracle: breadth-first search over every sequence
/// of cross-section contractions, testing ordinary containment at each step.
pub fn contains_via_contraction_oracle(a: &TensorMatrix, b: &TensorMatrix) -> Result<bool> {
    check_same_d(a, b)?;
    match a.cells() {
        Some(c) if c <= ORACLE_MAX_CELLS => {}
        _ => {
            return Err(Error::Refused(format!(
                "contraction oracle is limited to {ORACLE_MAX_CELLS} cells, host has extents {:?}",
                a.dims()
            )))
        }
    }
    let mut seen: HashSet<TensorMatrix> = HashSet::new();
    let mut queue = VecDeque::from([a.clone()]);
    seen.insert(a.clone());
    while let Some(cur) = queue.pop_front() {
        if contains_pattern_with_budget(&cur, b, u64::MAX)?.is_contained() {
            return Ok(true);
        }
        for axis in 1..=cur.ndim() {
            let n = cur.dims()[axis - 1];
            for lo in 1..n {
                for hi in lo + 1..=n {
                    let next = cur.contract(axis, lo, hi)?;
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    Ok(false)
}
