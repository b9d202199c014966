//! Explicit constructions: permutation tensors, the antidiagonal Kronecker
//! avoiders and the corner reduction of a permutation tensor along a grid
//! witness.
//!
//! Constructions that claim an avoidance property re-check it with the exact
//! deciders whenever the output is small enough, so a broken construction
//! surfaces as [`Error::Verification`] instead of a silently wrong tensor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::containment::{
    contains_interval_minor_with_budget, contains_pattern_with_budget, has_interval_minor,
    verify_witness, Decision, GridWitness, DEFAULT_NODE_BUDGET,
};
use crate::error::{Error, Result};
use crate::tensor::{fmt_coord, PermutationTensor, TensorMatrix};

/// When and how hard constructions check their own output.
#[derive(Debug, Clone, Copy)]
pub struct CheckPolicy {
    pub verify: bool,
    pub node_budget: u64,
    /// Outputs with more cells than this are not checked.
    pub max_cells: u128,
}

impl Default for CheckPolicy {
    fn default() -> Self {
        CheckPolicy {
            verify: true,
            node_budget: DEFAULT_NODE_BUDGET,
            max_cells: 1 << 16,
        }
    }
}

impl CheckPolicy {
    pub fn unchecked() -> Self {
        CheckPolicy {
            verify: false,
            ..Default::default()
        }
    }

    fn applies_to(&self, t: &TensorMatrix) -> bool {
        self.verify && t.cells().is_some_and(|c| c <= self.max_cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Verified,
    Skipped,
    /// The checker ran out of budget.
    Undecided,
}

/// A constructed tensor together with the outcome of its self-check.
#[derive(Debug, Clone)]
pub struct Checked {
    pub tensor: TensorMatrix,
    pub check: CheckStatus,
}

fn require_d2(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Precondition(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

/// Ones at `(i, i, …, i)`.
pub fn identity_permutation(k: usize, d: usize) -> Result<PermutationTensor> {
    require_d2(d)?;
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let ones = (1..=k).map(|i| vec![i; d]);
    PermutationTensor::new(TensorMatrix::from_ones(&vec![k; d], ones)?)
}

/// Ones at `(i, σ_2(i), …, σ_d(i))` for independent uniform permutations
/// `σ_2, …, σ_d` shuffled from a ChaCha8 stream seeded with `seed`.
pub fn random_permutation(k: usize, d: usize, seed: u64) -> Result<PermutationTensor> {
    require_d2(d)?;
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmas: Vec<Vec<usize>> = (1..d)
        .map(|_| {
            let mut p: Vec<usize> = (1..=k).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let ones = (0..k).map(|i| {
        let mut c = Vec::with_capacity(d);
        c.push(i + 1);
        c.extend(sigmas.iter().map(|s| s[i]));
        c
    });
    PermutationTensor::new(TensorMatrix::from_ones(&vec![k; d], ones)?)
}

/// `antidiagonal(s, d) ⊗ N`, which avoids `R^{k,…,k}` as an interval minor
/// whenever `N` avoids `R^{k−1,…,k−1}`.
pub fn homo1_avoider(s: usize, n: &TensorMatrix, k: usize, policy: CheckPolicy) -> Result<Checked> {
    let d = n.ndim();
    require_d2(d)?;
    if s == 0 {
        return Err(Error::Precondition("s must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::Precondition(format!(
            "k must be at least 2 so that R^(k-1) is a nonempty grid, got {k}"
        )));
    }
    let smaller = TensorMatrix::all_ones(&vec![k - 1; d])?;
    match contains_interval_minor_with_budget(n, &smaller, policy.node_budget)? {
        Decision::Avoids => {}
        Decision::Contains(w) => {
            return Err(Error::Precondition(format!(
                "N contains R^{} as an interval minor (witness {})",
                k - 1,
                w.to_json()
            )))
        }
        Decision::Undecided => {
            return Err(Error::Undecided(
                "could not decide whether N avoids R^(k-1)".into(),
            ))
        }
    }
    let out = TensorMatrix::antidiagonal(s, d)?.kronecker(n)?;
    let check = if policy.applies_to(&out) {
        let grid = TensorMatrix::all_ones(&vec![k; d])?;
        match has_interval_minor(&out, &grid, policy.node_budget)? {
            Decision::Avoids => CheckStatus::Verified,
            Decision::Undecided => CheckStatus::Undecided,
            Decision::Contains(w) => {
                return Err(Error::Verification(format!(
                    "antidiagonal({s},{d}) ⊗ N contains R^{k} as an interval minor, witness {}; \
                     this is an implementation bug",
                    w.to_json()
                )))
            }
        }
    } else {
        CheckStatus::Skipped
    };
    Ok(Checked { tensor: out, check })
}

/// Blows an avoider `A` of `P` up by a factor `s` on every axis:
/// `M ⊗ A`, where `M` is the `s × … × s` antidiagonal reflected on every
/// axis along which the chosen corner one of `P` sits at the far end.
///
/// `P` must have a corner one and no all-zero cross section.
pub fn scale_avoider(
    s: usize,
    a: &TensorMatrix,
    p: &TensorMatrix,
    policy: CheckPolicy,
) -> Result<Checked> {
    let d = p.ndim();
    require_d2(d)?;
    if a.ndim() != d {
        return Err(Error::Structural(format!(
            "A is {}-dimensional, P is {d}-dimensional",
            a.ndim()
        )));
    }
    if s == 0 {
        return Err(Error::Precondition("s must be at least 1".into()));
    }
    let corner = p
        .corner_ones()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Precondition("P has no corner one".into()))?;
    if p.remove_empty_cross_sections().map(|t| t.dims().to_vec()) != Some(p.dims().to_vec()) {
        return Err(Error::Precondition(
            "P has an all-zero cross section; the blow-up is only valid without one".into(),
        ));
    }
    match contains_pattern_with_budget(a, p, policy.node_budget)? {
        Decision::Avoids => {}
        Decision::Contains(e) => {
            return Err(Error::Precondition(format!(
                "A contains P (embedding {:?})",
                e.maps
            )))
        }
        Decision::Undecided => {
            return Err(Error::Undecided(
                "could not decide whether A avoids P".into(),
            ))
        }
    }
    let mut m = TensorMatrix::antidiagonal(s, d)?;
    for (ax, (&c, &k)) in corner.iter().zip(p.dims()).enumerate() {
        if c == k && k > 1 {
            m = m.reflect(ax + 1)?;
        }
    }
    let out = m.kronecker(a)?;
    let check = if policy.applies_to(&out) {
        match contains_pattern_with_budget(&out, p, policy.node_budget)? {
            Decision::Avoids => CheckStatus::Verified,
            Decision::Undecided => CheckStatus::Undecided,
            Decision::Contains(e) => {
                return Err(Error::Verification(format!(
                    "scaled avoider contains P via embedding {:?}",
                    e.maps
                )))
            }
        }
    } else {
        CheckStatus::Skipped
    };
    Ok(Checked { tensor: out, check })
}

/// Result of [`corner_reduce`], with the outcome of each claimed property.
#[derive(Debug, Clone, Serialize)]
pub struct CornerReduction {
    pub reduced: TensorMatrix,
    /// The witness after extension to a full partition of every axis.
    pub partition: GridWitness,
    /// Ones dropped because their block shares an axis index 1 with the
    /// corner block but is not the corner block.
    pub removed_beside_corner: Vec<Vec<usize>>,
    /// The lexicographically least one of block `(2,…,2)`, which is dropped.
    pub removed_center: Vec<usize>,
    /// Whether the result still contains `R^{ℓ−1,…,ℓ−1}` as an interval
    /// minor; `None` if the check ran out of budget.
    pub contains_smaller_grid: Option<bool>,
    pub has_corner_one: bool,
}

impl CornerReduction {
    pub fn claims_hold(&self) -> bool {
        self.contains_smaller_grid == Some(true) && self.has_corner_one
    }
}

/// Reduces a permutation tensor containing `R^{ℓ,…,ℓ}` (certified by `w`)
/// to one with a corner one that still contains `R^{ℓ−1,…,ℓ−1}`:
///
/// 1. every one in a block with some block coordinate 1, other than the
///    block `(1,…,1)`, is deleted;
/// 2. the lexicographically least one of block `(2,…,2)` is deleted;
/// 3. all empty cross sections are removed.
///
/// Both resulting properties are checked, not assumed.
pub fn corner_reduce(p: &PermutationTensor, w: &GridWitness) -> Result<CornerReduction> {
    let t = p.as_tensor();
    let d = t.ndim();
    let ell = w.axes.first().map_or(0, |a| a.len());
    if ell < 2 {
        return Err(Error::Precondition(format!(
            "corner reduction needs a witness for R^ℓ with ℓ ≥ 2, got ℓ = {ell}"
        )));
    }
    let grid = TensorMatrix::all_ones(&vec![ell; d])?;
    match verify_witness(t, &grid, w) {
        Ok(true) => {}
        Ok(false) => {
            return Err(Error::Precondition(format!(
                "witness {} leaves a block of R^{ell} empty",
                w.to_json()
            )))
        }
        Err(e) => return Err(Error::Precondition(format!("invalid witness: {e}"))),
    }
    let partition = w.extend_to_partition(t.dims());
    let corner = vec![1; d];
    let center = vec![2; d];
    let mut kept = Vec::new();
    let mut removed_beside_corner = Vec::new();
    let mut removed_center = None;
    for one in t.ones() {
        let block = partition
            .block_of(&one)
            .expect("partition covers every index");
        if block != corner && block.contains(&1) {
            removed_beside_corner.push(one);
        } else if block == center && removed_center.is_none() {
            removed_center = Some(one);
        } else {
            kept.push(one);
        }
    }
    let removed_center = removed_center.expect("a verified witness fills block (2,…,2)");
    let reduced = TensorMatrix::from_ones(t.dims(), &kept)?
        .remove_empty_cross_sections()
        .expect("the corner block keeps at least one one");
    let smaller = TensorMatrix::all_ones(&vec![ell - 1; d])?;
    let contains_smaller_grid =
        has_interval_minor(&reduced, &smaller, DEFAULT_NODE_BUDGET)?.as_bool();
    let has_corner_one = !reduced.corner_ones().is_empty();
    Ok(CornerReduction {
        reduced,
        partition,
        removed_beside_corner,
        removed_center,
        contains_smaller_grid,
        has_corner_one,
    })
}

impl std::fmt::Display for CornerReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let removed: Vec<String> = self
            .removed_beside_corner
            .iter()
            .map(|c| fmt_coord(c))
            .collect();
        writeln!(f, "partition: {}", self.partition.to_json())?;
        writeln!(f, "removed beside corner block: [{}]", removed.join(", "))?;
        writeln!(
            f,
            "removed from block (2,…,2): {}",
            fmt_coord(&self.removed_center)
        )?;
        let grid = match self.contains_smaller_grid {
            Some(true) => "holds",
            Some(false) => "FAILS",
            None => "undecided",
        };
        writeln!(f, "claim contains R^(ℓ-1): {grid}")?;
        writeln!(
            f,
            "claim has corner one: {}",
            if self.has_corner_one {
                "holds"
            } else {
                "FAILS"
            }
        )?;
        write!(f, "{}", self.reduced)
    }
}
