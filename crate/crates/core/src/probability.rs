//! Bound calculators and Monte Carlo estimates for random permutation
//! tensors avoiding `R^{ℓ,…,ℓ}` as an interval minor.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constructions::random_permutation;
use crate::containment::{has_interval_minor, Decision, DEFAULT_NODE_BUDGET};
use crate::error::{Error, Result};
use crate::tensor::TensorMatrix;

/// Two-sided 99% quantile of the standard normal distribution.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

fn require_d2(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::Precondition(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

/// Smallest integer `k` with `k ≥ (d+1)(2ℓ)^d ln ℓ`.
pub fn lemma_threshold(ell: u64, d: u32) -> Result<u64> {
    require_d2(d)?;
    if ell < 2 {
        return Err(Error::Precondition(format!(
            "ℓ must be at least 2 (ln ℓ ≤ 0 makes the threshold vacuous), got {ell}"
        )));
    }
    let x = (d as f64 + 1.0) * (2.0 * ell as f64).powi(d as i32) * (ell as f64).ln();
    Ok(x.ceil() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllReport {
    pub k: u64,
    pub d: u32,
    pub ell: u64,
    /// The inner floor was negative or zero, so `ℓ` collapsed to 1.
    pub degenerate: bool,
    /// `lemma_threshold(ℓ, d)`, when `ℓ ≥ 2`.
    pub threshold: Option<u64>,
    /// Whether `k` reaches that threshold.
    pub threshold_met: Option<bool>,
}

/// `ℓ = 20·⌊(½(k/((d+1) ln k))^{1/d} − 1)/20⌋ + 1`, with the floor clamped
/// at 0.
pub fn ell_of_k(k: u64, d: u32) -> Result<EllReport> {
    require_d2(d)?;
    if k < 3 {
        return Err(Error::Precondition(format!(
            "k must be at least 3, got {k}"
        )));
    }
    let kf = k as f64;
    let inner = 0.5 * (kf / ((d as f64 + 1.0) * kf.ln())).powf(1.0 / d as f64) - 1.0;
    let blocks = (inner / 20.0).floor().max(0.0) as u64;
    let ell = 20 * blocks + 1;
    let threshold = if ell >= 2 {
        Some(lemma_threshold(ell, d)?)
    } else {
        None
    };
    Ok(EllReport {
        k,
        d,
        ell,
        degenerate: blocks == 0,
        threshold,
        threshold_met: threshold.map(|t| k >= t),
    })
}

/// The four quantities of the avoidance-probability estimate, in order:
/// `(1−(1/ℓ−1/k)^{d−1})^{k/ℓ−1}`, `(1−1/(2ℓ)^{d−1})^{k/(2ℓ)}`,
/// `e^{−k/(2ℓ)^d}` and `ℓ^{−(d+1)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub k: u64,
    pub ell: u64,
    pub d: u32,
    pub values: [f64; 4],
    /// `links[i]` is `values[i] < values[i + 1]`.
    pub links: [bool; 3],
    /// `ℓ^{−(d+1)}` as an exact fraction.
    pub final_bound: String,
}

impl ChainReport {
    pub fn strictly_increasing(&self) -> bool {
        self.links.iter().all(|&l| l)
    }
}

pub fn probability_chain(k: u64, ell: u64, d: u32) -> Result<ChainReport> {
    require_d2(d)?;
    if ell < 2 || k < 2 * ell {
        return Err(Error::Precondition(format!(
            "the chain needs k ≥ 2ℓ ≥ 4, got k={k}, ℓ={ell}"
        )));
    }
    let (kf, lf, df) = (k as f64, ell as f64, d as f64);
    let first = (1.0 - (1.0 / lf - 1.0 / kf).powf(df - 1.0)).powf(kf / lf - 1.0);
    let second = (1.0 - 1.0 / (2.0 * lf).powf(df - 1.0)).powf(kf / (2.0 * lf));
    let third = (-kf / (2.0 * lf).powf(df)).exp();
    let exact = final_bound(ell, d);
    let fourth = exact.to_f64().unwrap_or(f64::NAN);
    debug_assert!((fourth - lf.powf(-(df + 1.0))).abs() <= f64::EPSILON * fourth);
    let values = [first, second, third, fourth];
    Ok(ChainReport {
        k,
        ell,
        d,
        values,
        links: [
            values[0] < values[1],
            values[1] < values[2],
            values[2] < values[3],
        ],
        final_bound: format!("{}/{}", exact.numer(), exact.denom()),
    })
}

/// `ℓ^{−(d+1)}`, exactly.
pub fn final_bound(ell: u64, d: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(ell).pow(d + 1))
}

/// `ℓ^d · ℓ^{−(d+1)}`: the block count times the per-block bound, exactly.
pub fn union_bound(ell: u64, d: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(ell).pow(d)) * final_bound(ell, d)
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `value / (2^{d−1} (d−1)! m^{d−1})`: the lower bound on `value(n)/n^{d−1}`
/// for every `n ≥ m` implied by the value at `m`.
pub fn converge_lower_bound(value_at_m: u64, m: u64, d: u32) -> Result<BigRational> {
    require_d2(d)?;
    if m == 0 {
        return Err(Error::Precondition("m must be at least 1".into()));
    }
    let denom = BigInt::from(2).pow(d - 1) * factorial(d - 1) * BigInt::from(m).pow(d - 1);
    Ok(BigRational::new(BigInt::from(value_at_m), denom))
}

/// `s^{d−1}/(d−1)! · value`: the bound the scaling constructions guarantee
/// at side `s·n` from a value at side `n`.
pub fn scaling_lower_bound(value: u64, s: u64, d: u32) -> Result<BigRational> {
    require_d2(d)?;
    Ok(BigRational::new(
        BigInt::from(s).pow(d - 1) * BigInt::from(value),
        factorial(d - 1),
    ))
}

/// Renders a rational as `numerator/denominator`.
pub fn fmt_ratio(r: &BigRational) -> String {
    if r.is_zero() {
        return "0/1".into();
    }
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub k: u64,
    pub ell: u64,
    pub d: u32,
    pub trials: u64,
    pub avoid_count: u64,
    /// Trials whose check ran out of budget; excluded from the estimate.
    pub undecided: u64,
    /// `avoid_count / (trials − undecided)`.
    pub estimate: f64,
    /// Half-width of the 99% normal-approximation interval.
    pub radius: f64,
    pub seed: u64,
}

/// Seed of trial `index` under master seed `master`: the first word of the
/// ChaCha8 stream `index` keyed by `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub threads: usize,
    pub node_budget: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            threads: 1,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Estimates the probability that a random `k × … × k` permutation tensor
/// avoids `R^{ℓ,…,ℓ}` as an interval minor.
pub fn avoid_probability(
    k: u64,
    ell: u64,
    d: u32,
    trials: u64,
    seed: u64,
    opts: EstimateOptions,
) -> Result<EstimateReport> {
    require_d2(d)?;
    if trials == 0 || k == 0 || ell == 0 {
        return Err(Error::Precondition(format!(
            "trials, k and ℓ must be positive (got trials={trials}, k={k}, ℓ={ell})"
        )));
    }
    let grid = TensorMatrix::all_ones(&vec![ell as usize; d as usize])?;
    let trial = |i: u64| -> Result<Option<bool>> {
        let p = random_permutation(k as usize, d as usize, trial_seed(seed, i))?;
        Ok(
            match has_interval_minor(p.as_tensor(), &grid, opts.node_budget)? {
                Decision::Avoids => Some(true),
                Decision::Contains(_) => Some(false),
                Decision::Undecided => None,
            },
        )
    };
    let outcomes: Vec<Option<bool>> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .expect("thread pool");
        pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(trial)
                .collect::<Result<_>>()
        })?
    } else {
        (0..trials).map(trial).collect::<Result<_>>()?
    };
    let avoid_count = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    let undecided = outcomes.iter().filter(|o| o.is_none()).count() as u64;
    let decided = trials - undecided;
    let (estimate, radius) = if decided == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let p = avoid_count as f64 / decided as f64;
        (p, Z_99 * (p * (1.0 - p) / decided as f64).sqrt())
    };
    Ok(EstimateReport {
        k,
        ell,
        d,
        trials,
        avoid_count,
        undecided,
        estimate,
        radius,
        seed,
    })
}

pub fn estimates_csv(reports: &[EstimateReport]) -> String {
    let mut s = String::from("k,ell,d,trials,avoid_count,undecided,estimate,radius,seed\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k, r.ell, r.d, r.trials, r.avoid_count, r.undecided, r.estimate, r.radius, r.seed
        ));
    }
    s
}
