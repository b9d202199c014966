//! Brute-force reference implementations shared by the integration tests.
//! They favour obviousness over speed and share no code with the library
//! beyond the tensor type itself.

#![allow(dead_code)]

use patternforge::TensorMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All strictly increasing `k`-subsets of `1..=n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, n, k, &mut Vec::new(), &mut out);
    out
}

fn product<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::new();
        for prefix in &acc {
            for x in c {
                let mut p = prefix.clone();
                p.push(x.clone());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Ordinary containment by trying every choice of index subsets.
pub fn naive_contains(a: &TensorMatrix, p: &TensorMatrix) -> bool {
    if a.ndim() != p.ndim() || a.dims().iter().zip(p.dims()).any(|(n, k)| k > n) {
        return false;
    }
    let choices: Vec<Vec<Vec<usize>>> = a
        .dims()
        .iter()
        .zip(p.dims())
        .map(|(&n, &k)| subsets(n, k))
        .collect();
    let ones = p.ones();
    product(&choices).into_iter().any(|maps| {
        ones.iter().all(|one| {
            let img: Vec<usize> = one
                .iter()
                .enumerate()
                .map(|(ax, &j)| maps[ax][j - 1])
                .collect();
            a.get(&img).unwrap()
        })
    })
}

/// Interval-minor containment by trying every partition of every axis into
/// the pattern's number of consecutive nonempty intervals.
pub fn naive_minor(a: &TensorMatrix, b: &TensorMatrix) -> bool {
    if a.ndim() != b.ndim() || a.dims().iter().zip(b.dims()).any(|(n, k)| k > n) {
        return false;
    }
    // A partition of 1..=n into k intervals is given by k−1 cut points:
    // interval j starts right after cut j−1.
    let cuts: Vec<Vec<Vec<usize>>> = a
        .dims()
        .iter()
        .zip(b.dims())
        .map(|(&n, &k)| subsets(n - 1, k - 1))
        .collect();
    let a_ones = a.ones();
    product(&cuts).into_iter().any(|cs| {
        let block = |c: &[usize]| -> Vec<usize> {
            c.iter()
                .enumerate()
                .map(|(ax, &i)| 1 + cs[ax].iter().filter(|&&cut| cut < i).count())
                .collect()
        };
        let hit: std::collections::HashSet<Vec<usize>> = a_ones.iter().map(|c| block(c)).collect();
        b.ones().iter().all(|o| hit.contains(o))
    })
}

/// Every 0-1 tensor with the given extents, in order of its bitmask.
pub fn all_tensors(dims: &[usize]) -> Vec<TensorMatrix> {
    let cells = cells_of(dims);
    assert!(cells.len() <= 20);
    (0u64..1 << cells.len())
        .map(|mask| {
            let ones: Vec<&Vec<usize>> = cells
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, c)| c)
                .collect();
            TensorMatrix::from_ones(dims, ones).unwrap()
        })
        .collect()
}

/// 1-based coordinates of every cell, lexicographic.
pub fn cells_of(dims: &[usize]) -> Vec<Vec<usize>> {
    let ranges: Vec<Vec<usize>> = dims.iter().map(|&n| (1..=n).collect()).collect();
    product(&ranges)
}

/// Every shape with `d` axes and extents in `1..=max`.
pub fn shapes(d: usize, max: usize) -> Vec<Vec<usize>> {
    let ranges: Vec<Vec<usize>> = (0..d).map(|_| (1..=max).collect()).collect();
    product(&ranges)
}

/// Largest number of ones in an `n × … × n` tensor for which `contains`
/// is false, by enumerating every tensor.
pub fn naive_extremal(n: usize, d: usize, contains: impl Fn(&TensorMatrix) -> bool) -> usize {
    all_tensors(&vec![n; d])
        .into_iter()
        .filter(|t| !contains(t))
        .map(|t| t.count_ones())
        .max()
        .unwrap_or(0)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize], density: f64) -> TensorMatrix {
    let ones: Vec<Vec<usize>> = cells_of(dims)
        .into_iter()
        .filter(|_| rng.random_bool(density))
        .collect();
    TensorMatrix::from_ones(dims, ones).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 2×2 permutation matrices: identity, then anti-identity.
pub fn perms_2x2() -> [TensorMatrix; 2] {
    [
        TensorMatrix::from_ones(&[2, 2], [[1, 1], [2, 2]]).unwrap(),
        TensorMatrix::from_ones(&[2, 2], [[1, 2], [2, 1]]).unwrap(),
    ]
}

/// The four 2×2×2 permutation tensors.
pub fn perms_2x2x2() -> Vec<TensorMatrix> {
    let mut out = Vec::new();
    for s2 in [[1, 2], [2, 1]] {
        for s3 in [[1, 2], [2, 1]] {
            let ones: Vec<[usize; 3]> = (0..2).map(|i| [i + 1, s2[i], s3[i]]).collect();
            out.push(TensorMatrix::from_ones(&[2, 2, 2], ones).unwrap());
        }
    }
    out
}
