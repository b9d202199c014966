//! The d-dimensional 0-1 matrix and its structural operations.
//!
//! All public coordinates are 1-based: an entry of an `n_1 × … × n_d` tensor
//! is addressed by `(i_1, …, i_d)` with `1 ≤ i_ℓ ≤ n_ℓ`. Small tensors are
//! stored as a dense bitset in row-major order (last axis fastest, which is
//! also lexicographic order); tensors whose cell count exceeds the dense
//! limit fall back to a sparse coordinate set. Both representations behave
//! identically.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest cell count stored densely unless a different limit is requested.
pub const DEFAULT_DENSE_LIMIT: u128 = 1 << 24;

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<u64>),
    /// 0-based coordinates.
    Sparse(BTreeSet<Vec<usize>>),
}

/// An immutable d-dimensional 0-1 matrix.
#[derive(Clone, Debug)]
pub struct TensorMatrix {
    dims: Vec<usize>,
    storage: Storage,
    count: usize,
}

fn cell_count(dims: &[usize]) -> Option<u128> {
    dims.iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Structural("a tensor needs at least one axis".into()));
    }
    if let Some(pos) = dims.iter().position(|&n| n == 0) {
        return Err(Error::Structural(format!(
            "axis {} has extent 0; every extent must be at least 1",
            pos + 1
        )));
    }
    Ok(())
}

impl TensorMatrix {
    /// The all-zero tensor of the given extents.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::zeros_with_limit(dims, DEFAULT_DENSE_LIMIT)
    }

    pub fn zeros_with_limit(dims: &[usize], dense_limit: u128) -> Result<Self> {
        check_dims(dims)?;
        let storage = match cell_count(dims) {
            Some(cells) if cells <= dense_limit => {
                Storage::Dense(vec![0; (cells as usize).div_ceil(64)])
            }
            _ => Storage::Sparse(BTreeSet::new()),
        };
        Ok(TensorMatrix {
            dims: dims.to_vec(),
            storage,
            count: 0,
        })
    }

    /// Builds a tensor from 1-based coordinates of its ones. Duplicates and
    /// out-of-range coordinates are rejected.
    pub fn from_ones<I>(dims: &[usize], ones: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[usize]>,
    {
        Self::from_ones_with_limit(dims, ones, DEFAULT_DENSE_LIMIT)
    }

    pub fn from_ones_with_limit<I>(dims: &[usize], ones: I, dense_limit: u128) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[usize]>,
    {
        let mut t = Self::zeros_with_limit(dims, dense_limit)?;
        for coord in ones {
            let coord = coord.as_ref();
            let zb = t.to_zero_based(coord)?;
            if !t.insert_zero_based(&zb) {
                return Err(Error::Structural(format!(
                    "duplicate coordinate {}",
                    fmt_coord(coord)
                )));
            }
        }
        Ok(t)
    }

    /// `R^{k_1,…,k_d}`: every entry equal to one.
    pub fn all_ones(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let mut t = Self::zeros(dims)?;
        for c in CellIter::new(dims) {
            t.insert_zero_based(&c);
        }
        Ok(t)
    }

    /// The `s × … × s` antidiagonal: ones exactly where `i_1 + … + i_d = s + d − 1`.
    pub fn antidiagonal(s: usize, d: usize) -> Result<Self> {
        if s == 0 || d == 0 {
            return Err(Error::Range(format!(
                "antidiagonal needs s ≥ 1 and d ≥ 1 (got s={s}, d={d})"
            )));
        }
        let dims = vec![s; d];
        let mut t = Self::zeros(&dims)?;
        // 0-based: coordinates summing to s - 1.
        let mut coord = vec![0usize; d];
        fill_sum(&mut t, &mut coord, 0, s - 1);
        Ok(t)
    }

    /// Crate-internal constructor from 0-based coordinates known to be valid
    /// and distinct.
    pub(crate) fn from_zero_based_unchecked<'a, I>(dims: &[usize], ones: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut t = Self::zeros(dims).expect("valid extents");
        for c in ones {
            t.insert_zero_based(c);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of axes `d`.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of cells; `None` on overflow.
    pub fn cells(&self) -> Option<u128> {
        cell_count(&self.dims)
    }

    pub fn count_ones(&self) -> usize {
        self.count
    }

    pub fn is_zero(&self) -> bool {
        self.count == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Entry at a 1-based coordinate.
    pub fn get(&self, coord: &[usize]) -> Result<bool> {
        let zb = self.to_zero_based(coord)?;
        Ok(self.get_zero_based(&zb))
    }

    /// 1-based coordinates of every one, in lexicographic order.
    pub fn ones(&self) -> Vec<Vec<usize>> {
        self.ones_zero_based()
            .into_iter()
            .map(|c| c.into_iter().map(|i| i + 1).collect())
            .collect()
    }

    pub(crate) fn ones_zero_based(&self) -> Vec<Vec<usize>> {
        match &self.storage {
            Storage::Sparse(set) => set.iter().cloned().collect(),
            Storage::Dense(bits) => {
                let mut out = Vec::with_capacity(self.count);
                for (w, &word) in bits.iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        let b = word.trailing_zeros() as usize;
                        out.push(self.unflatten(w * 64 + b));
                        word &= word - 1;
                    }
                }
                out
            }
        }
    }

    pub(crate) fn get_zero_based(&self, coord: &[usize]) -> bool {
        match &self.storage {
            Storage::Dense(bits) => {
                let idx = self.flatten(coord);
                bits[idx / 64] >> (idx % 64) & 1 == 1
            }
            Storage::Sparse(set) => set.contains(coord),
        }
    }

    /// Returns false if the entry was already one.
    fn insert_zero_based(&mut self, coord: &[usize]) -> bool {
        let fresh = match &mut self.storage {
            Storage::Dense(bits) => {
                let idx = flatten(&self.dims, coord);
                let (w, b) = (idx / 64, idx % 64);
                let fresh = bits[w] >> b & 1 == 0;
                bits[w] |= 1 << b;
                fresh
            }
            Storage::Sparse(set) => set.insert(coord.to_vec()),
        };
        if fresh {
            self.count += 1;
        }
        fresh
    }

    fn flatten(&self, coord: &[usize]) -> usize {
        flatten(&self.dims, coord)
    }

    fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims.len()];
        for (slot, &n) in c.iter_mut().zip(&self.dims).rev() {
            *slot = idx % n;
            idx /= n;
        }
        c
    }

    fn to_zero_based(&self, coord: &[usize]) -> Result<Vec<usize>> {
        if coord.len() != self.dims.len() {
            return Err(Error::Structural(format!(
                "coordinate {} has {} components, tensor has {} axes",
                fmt_coord(coord),
                coord.len(),
                self.dims.len()
            )));
        }
        coord
            .iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(axis, (&i, &n))| {
                if i == 0 || i > n {
                    Err(Error::Range(format!(
                        "coordinate {} out of range on axis {} (extent {n})",
                        fmt_coord(coord),
                        axis + 1
                    )))
                } else {
                    Ok(i - 1)
                }
            })
            .collect()
    }

    fn check_axis(&self, axis: usize) -> Result<usize> {
        if axis == 0 || axis > self.ndim() {
            return Err(Error::Range(format!(
                "axis {axis} out of range 1..={}",
                self.ndim()
            )));
        }
        Ok(axis - 1)
    }

    /// The `axis`-cross section at `index` as a tensor of one fewer axis.
    pub fn cross_section(&self, axis: usize, index: usize) -> Result<TensorMatrix> {
        let ax = self.check_axis(axis)?;
        if self.ndim() < 2 {
            return Err(Error::Structural(
                "a 1-dimensional tensor has no lower-dimensional cross sections".into(),
            ));
        }
        if index == 0 || index > self.dims[ax] {
            return Err(Error::Range(format!(
                "index {index} out of range 1..={} on axis {axis}",
                self.dims[ax]
            )));
        }
        let mut dims = self.dims.clone();
        dims.remove(ax);
        let mut out = TensorMatrix::zeros(&dims)?;
        for mut c in self.ones_zero_based() {
            if c[ax] == index - 1 {
                c.remove(ax);
                out.insert_zero_based(&c);
            }
        }
        Ok(out)
    }

    /// Replaces the consecutive `axis`-cross sections `lo..=hi` by their
    /// entrywise OR.
    pub fn contract(&self, axis: usize, lo: usize, hi: usize) -> Result<TensorMatrix> {
        let ax = self.check_axis(axis)?;
        if lo == 0 || lo > hi || hi > self.dims[ax] {
            return Err(Error::Range(format!(
                "invalid contraction interval [{lo},{hi}] on axis {axis} (extent {})",
                self.dims[ax]
            )));
        }
        let (lo, hi) = (lo - 1, hi - 1);
        let width = hi - lo;
        let mut dims = self.dims.clone();
        dims[ax] -= width;
        let mut out = TensorMatrix::zeros(&dims)?;
        for mut c in self.ones_zero_based() {
            if c[ax] > hi {
                c[ax] -= width;
            } else if c[ax] > lo {
                c[ax] = lo;
            }
            out.insert_zero_based(&c);
        }
        Ok(out)
    }

    /// `M ⊗ N`: every one of `self` becomes a copy of `other`, every zero a
    /// zero block of the same extents.
    pub fn kronecker(&self, other: &TensorMatrix) -> Result<TensorMatrix> {
        if self.ndim() != other.ndim() {
            return Err(Error::Structural(format!(
                "kronecker product of a {}-dimensional and a {}-dimensional tensor",
                self.ndim(),
                other.ndim()
            )));
        }
        let dims: Vec<usize> = self
            .dims
            .iter()
            .zip(&other.dims)
            .map(|(a, b)| a.checked_mul(*b))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Range("kronecker extents overflow".into()))?;
        let mut out = TensorMatrix::zeros(&dims)?;
        let inner = other.ones_zero_based();
        let mut c = vec![0; dims.len()];
        for outer in self.ones_zero_based() {
            for one in &inner {
                for (ax, slot) in c.iter_mut().enumerate() {
                    *slot = outer[ax] * other.dims[ax] + one[ax];
                }
                out.insert_zero_based(&c);
            }
        }
        Ok(out)
    }

    /// Every one whose coordinates are all extremal (1 or the axis extent).
    pub fn corner_ones(&self) -> Vec<Vec<usize>> {
        self.ones()
            .into_iter()
            .filter(|c| c.iter().zip(&self.dims).all(|(&i, &n)| i == 1 || i == n))
            .collect()
    }

    /// Mirror image along one axis: index `i` goes to `n + 1 − i`.
    pub(crate) fn reflect(&self, axis: usize) -> Result<TensorMatrix> {
        let ax = self.check_axis(axis)?;
        let n = self.dims[ax];
        let mut out = TensorMatrix::zeros(&self.dims)?;
        for mut c in self.ones_zero_based() {
            c[ax] = n - 1 - c[ax];
            out.insert_zero_based(&c);
        }
        Ok(out)
    }

    /// Drops every cross section (on every axis) that holds no one. Returns
    /// `None` when the tensor is zero, since nothing would remain.
    pub fn remove_empty_cross_sections(&self) -> Option<TensorMatrix> {
        if self.is_zero() {
            return None;
        }
        let ones = self.ones_zero_based();
        let d = self.ndim();
        // For each axis, old index -> new index among occupied indices.
        let mut remap: Vec<Vec<Option<usize>>> = self.dims.iter().map(|&n| vec![None; n]).collect();
        for c in &ones {
            for ax in 0..d {
                remap[ax][c[ax]] = Some(0);
            }
        }
        let mut dims = Vec::with_capacity(d);
        for slots in remap.iter_mut() {
            let mut next = 0;
            for s in slots.iter_mut().filter(|s| s.is_some()) {
                *s = Some(next);
                next += 1;
            }
            dims.push(next);
        }
        let mut out = TensorMatrix::zeros(&dims).expect("nonzero extents");
        for c in &ones {
            let nc: Vec<usize> = (0..d).map(|ax| remap[ax][c[ax]].unwrap()).collect();
            out.insert_zero_based(&nc);
        }
        Some(out)
    }

    /// Same ones, different dense-storage threshold.
    pub fn with_dense_limit(&self, dense_limit: u128) -> TensorMatrix {
        let ones = self.ones_zero_based();
        let mut t = Self::zeros_with_limit(&self.dims, dense_limit).expect("valid extents");
        for c in &ones {
            t.insert_zero_based(c);
        }
        t
    }

    /// Text serialization: a `dims:` header followed by one line per one,
    /// in lexicographic order.
    pub fn to_text(&self) -> String {
        let mut s = String::from("dims:");
        for n in &self.dims {
            s.push_str(&format!(" {n}"));
        }
        s.push('\n');
        for c in self.ones() {
            let line: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<TensorMatrix> {
        let mut tensor: Option<TensorMatrix> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match &mut tensor {
                None => {
                    let rest = line
                        .strip_prefix("dims:")
                        .ok_or_else(|| Error::parse(lineno, "expected header 'dims: n1 ... nd'"))?;
                    let dims = parse_numbers(rest, lineno)?;
                    if dims.is_empty() {
                        return Err(Error::parse(lineno, "header lists no extents"));
                    }
                    let t = TensorMatrix::zeros(&dims)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    tensor = Some(t);
                }
                Some(t) => {
                    let coord = parse_numbers(line, lineno)?;
                    let zb = t
                        .to_zero_based(&coord)
                        .map_err(|e| Error::parse(lineno, e.to_string()))?;
                    if !t.insert_zero_based(&zb) {
                        return Err(Error::parse(
                            lineno,
                            format!("duplicate coordinate {}", fmt_coord(&coord)),
                        ));
                    }
                }
            }
        }
        tensor.ok_or_else(|| Error::parse(1, "missing 'dims:' header"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TensorJson::from(self)).expect("tensor json")
    }

    pub fn parse_json(text: &str) -> Result<TensorMatrix> {
        let raw: TensorJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    /// Accepts either serialization; JSON is recognised by a leading `{`.
    pub fn parse_any(text: &str) -> Result<TensorMatrix> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_text(text)
        }
    }
}

fn flatten(dims: &[usize], coord: &[usize]) -> usize {
    coord
        .iter()
        .zip(dims)
        .fold(0usize, |acc, (&i, &n)| acc * n + i)
}

fn fill_sum(t: &mut TensorMatrix, coord: &mut Vec<usize>, axis: usize, remaining: usize) {
    let d = coord.len();
    let s = t.dims[0];
    if axis == d - 1 {
        if remaining < s {
            coord[axis] = remaining;
            let c = coord.clone();
            t.insert_zero_based(&c);
        }
        return;
    }
    for i in 0..s.min(remaining + 1) {
        coord[axis] = i;
        fill_sum(t, coord, axis + 1, remaining - i);
    }
}

fn parse_numbers(s: &str, lineno: usize) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("'{tok}' is not a nonnegative integer")))
        })
        .collect()
}

pub(crate) fn fmt_coord(c: &[usize]) -> String {
    let parts: Vec<String> = c.iter().map(|i| i.to_string()).collect();
    format!("({})", parts.join(","))
}

impl PartialEq for TensorMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.dims != other.dims || self.count != other.count {
            return false;
        }
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => a == b,
            (Storage::Sparse(a), Storage::Sparse(b)) => a == b,
            _ => self.ones_zero_based() == other.ones_zero_based(),
        }
    }
}

impl Eq for TensorMatrix {}

impl Hash for TensorMatrix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dims.hash(state);
        self.ones_zero_based().hash(state);
    }
}

impl fmt::Display for TensorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// JSON shape: `{"dims":[...],"ones":[[...],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorJson {
    pub dims: Vec<usize>,
    pub ones: Vec<Vec<usize>>,
}

impl From<&TensorMatrix> for TensorJson {
    fn from(t: &TensorMatrix) -> Self {
        TensorJson {
            dims: t.dims.clone(),
            ones: t.ones(),
        }
    }
}

impl TryFrom<TensorJson> for TensorMatrix {
    type Error = Error;

    fn try_from(raw: TensorJson) -> Result<Self> {
        TensorMatrix::from_ones(&raw.dims, &raw.ones)
    }
}

impl Serialize for TensorMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TensorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TensorMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TensorJson::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// Iterates every 0-based cell of a shape in lexicographic order.
pub(crate) struct CellIter {
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl CellIter {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let next = if dims.iter().all(|&n| n > 0) {
            Some(vec![0; dims.len()])
        } else {
            None
        };
        CellIter {
            dims: dims.to_vec(),
            next,
        }
    }
}

impl Iterator for CellIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        for ax in (0..succ.len()).rev() {
            succ[ax] += 1;
            if succ[ax] < self.dims[ax] {
                self.next = Some(succ);
                return Some(cur);
            }
            succ[ax] = 0;
        }
        Some(cur)
    }
}

/// `C(n, k)`, exact.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// A `k × … × k` tensor in which every cross section of every axis holds
/// exactly one one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationTensor {
    k: usize,
    backing: TensorMatrix,
}

impl PermutationTensor {
    pub fn new(backing: TensorMatrix) -> Result<Self> {
        let k = backing.dims()[0];
        if backing.dims().iter().any(|&n| n != k) {
            return Err(Error::Structural(format!(
                "permutation tensor must be k×…×k, got extents {:?}",
                backing.dims()
            )));
        }
        if backing.count_ones() != k {
            return Err(Error::Structural(format!(
                "permutation tensor of side {k} must have {k} ones, found {}",
                backing.count_ones()
            )));
        }
        let d = backing.ndim();
        let mut seen = vec![vec![false; k]; d];
        for c in backing.ones_zero_based() {
            for ax in 0..d {
                if std::mem::replace(&mut seen[ax][c[ax]], true) {
                    return Err(Error::Structural(format!(
                        "cross section {} of axis {} holds more than one one",
                        c[ax] + 1,
                        ax + 1
                    )));
                }
            }
        }
        Ok(PermutationTensor { k, backing })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.backing.ndim()
    }

    pub fn as_tensor(&self) -> &TensorMatrix {
        &self.backing
    }

    pub fn into_tensor(self) -> TensorMatrix {
        self.backing
    }
}
