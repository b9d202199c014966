//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line for each, and exits nonzero if any fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use patternforge::constructions::{
    corner_reduce, homo1_avoider, random_permutation, CheckPolicy, CheckStatus,
};
use patternforge::containment::{
    contains_interval_minor, contains_pattern, contains_via_contraction_oracle, verify_witness,
    GridWitness,
};
use patternforge::extremal::{
    f_exact, load_records, m_exact, ExtremalRecord, SearchConfig, SearchStatus, RECORDS_FILE,
};
use patternforge::probability::{
    avoid_probability, converge_lower_bound, lemma_threshold, probability_chain,
    scaling_lower_bound, union_bound, EstimateOptions,
};
use patternforge::tensor::binomial;
use patternforge::TensorMatrix;
use rand::Rng;

const LIMIT_EXACT: Duration = Duration::from_secs(60);
const LIMIT_EQUIVALENCE: Duration = Duration::from_secs(120);
const LIMIT_HOMO1: Duration = Duration::from_secs(300);
const LIMIT_MONTE_CARLO: Duration = Duration::from_secs(60);
const LIMIT_ORACLE: Duration = Duration::from_secs(120);

const MC_SEED: u64 = 20_240_601;
const MC_TRIALS: u64 = 2000;
const SUITE_SEED: u64 = 0xac_ce97;

type Verdict = Result<String, String>;

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let v = f();
    let took = start.elapsed();
    match v {
        Ok(msg) if took <= limit => Ok(format!("{msg}; {:.1}s", took.as_secs_f64())),
        Ok(msg) => Err(format!(
            "{msg}; took {:.1}s, limit {}s",
            took.as_secs_f64(),
            limit.as_secs()
        )),
        Err(e) => Err(e),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact(rec: ExtremalRecord) -> Result<ExtremalRecord, String> {
    ensure(rec.status == SearchStatus::Exact, || {
        format!("{}({}) only reached a lower bound", rec.kind.name(), rec.n)
    })?;
    Ok(rec)
}

fn criterion_1() -> Verdict {
    timed(LIMIT_EXACT, || {
        let cfg = SearchConfig::default();
        let id = &perms_2x2()[0];
        let mut values = Vec::new();
        for n in 1..=5 {
            values.push(exact(f_exact(n, id, &cfg).map_err(|e| e.to_string())?)?.value);
        }
        ensure(values == [1, 3, 5, 7, 9], || {
            format!("f(1..5) = {values:?}")
        })?;
        for n in 1..=4 {
            let oracle = naive_extremal(n, 2, |a| naive_contains(a, id));
            ensure(oracle == values[n - 1], || {
                format!("oracle f({n}) = {oracle}, search {}", values[n - 1])
            })?;
        }
        Ok(format!("f(1..5) = {values:?}, oracle agrees for n <= 4"))
    })
}

fn criterion_2() -> Verdict {
    timed(LIMIT_EQUIVALENCE, || {
        let mut disagreements = 0;
        let mut checked = 0;
        for a in all_tensors(&[3, 3]) {
            for p in perms_2x2() {
                let x = contains_pattern(&a, &p).unwrap().as_bool();
                let y = contains_interval_minor(&a, &p).unwrap().as_bool();
                disagreements += usize::from(x.is_none() || x != y);
                checked += 1;
            }
        }
        let mut rng = rng(SUITE_SEED);
        let perms = perms_2x2x2();
        for _ in 0..100 {
            let density = rng.random_range(0.05..0.5);
            let a = random_tensor(&mut rng, &[4, 4, 4], density);
            for p in &perms {
                let x = contains_pattern(&a, p).unwrap().as_bool();
                let y = contains_interval_minor(&a, p).unwrap().as_bool();
                disagreements += usize::from(x.is_none() || x != y);
                checked += 1;
            }
        }
        ensure(disagreements == 0, || {
            format!("{disagreements} disagreements in {checked} pairs")
        })?;
        Ok(format!("{checked} pairs, 0 disagreements"))
    })
}

fn criterion_3() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = SearchConfig {
        cache_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let grid = TensorMatrix::all_ones(&[2, 2]).unwrap();
    let mut pairs = Vec::new();
    for n in 1..=4 {
        let m = exact(m_exact(n, &grid, &cfg).map_err(|e| e.to_string())?)?.value;
        for p in perms_2x2() {
            let f = exact(f_exact(n, &p, &cfg).map_err(|e| e.to_string())?)?.value;
            ensure(f <= m, || format!("f({n}) = {f} > m({n}) = {m}"))?;
            pairs.push((f, m));
        }
    }
    let stored = load_records(&dir.path().join(RECORDS_FILE)).map_err(|e| e.to_string())?;
    for rec in &stored {
        rec.verify().map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{} pairs (f, m) = {pairs:?}; {} stored records re-verified",
        pairs.len(),
        stored.len()
    ))
}

fn criterion_4() -> Verdict {
    timed(LIMIT_HOMO1, || {
        let mut rng = rng(SUITE_SEED ^ 4);
        let mut done = 0;
        let mut shapes_seen = std::collections::BTreeSet::new();
        while done < 200 {
            let s = rng.random_range(1..=3usize);
            let k = rng.random_range(2..=3usize);
            let dims: Vec<usize> = if rng.random_bool(0.75) {
                vec![rng.random_range(1..=4), rng.random_range(1..=4)]
            } else {
                vec![
                    rng.random_range(1..=3),
                    rng.random_range(1..=3),
                    rng.random_range(1..=3),
                ]
            };
            let n = if k == 2 {
                TensorMatrix::zeros(&dims).unwrap()
            } else {
                let density = rng.random_range(0.1..0.6);
                random_tensor(&mut rng, &dims, density)
            };
            let smaller = TensorMatrix::all_ones(&vec![k - 1; dims.len()]).unwrap();
            if naive_minor(&n, &smaller) {
                continue;
            }
            let out = homo1_avoider(s, &n, k, CheckPolicy::default())
                .map_err(|e| format!("instance {done}: {e}"))?;
            ensure(out.check == CheckStatus::Verified, || {
                format!("instance {done}: check {:?}", out.check)
            })?;
            let grid = TensorMatrix::all_ones(&vec![k; dims.len()]).unwrap();
            ensure(
                contains_interval_minor(&out.tensor, &grid)
                    .unwrap()
                    .is_avoided(),
                || format!("instance {done} (s={s}, k={k}, N={n:?}) contains the grid"),
            )?;
            let d = dims.len() as u64;
            let expect = binomial(s as u64 + d - 2, d - 1) * n.count_ones() as u128;
            ensure(out.tensor.count_ones() as u128 == expect, || {
                format!(
                    "instance {done}: {} ones, expected {expect}",
                    out.tensor.count_ones()
                )
            })?;
            shapes_seen.insert(dims);
            done += 1;
        }
        Ok(format!(
            "200 instances over {} shapes, 0 failures",
            shapes_seen.len()
        ))
    })
}

fn criterion_5() -> Verdict {
    let cfg = SearchConfig::default();
    let solve_f = |n: usize, p: &TensorMatrix| -> Result<u64, String> {
        Ok(exact(f_exact(n, p, &cfg).map_err(|e| e.to_string())?)?.value as u64)
    };
    let solve_m = |n: usize, k: usize| -> Result<u64, String> {
        let grid = TensorMatrix::all_ones(&[k, k]).unwrap();
        Ok(exact(m_exact(n, &grid, &cfg).map_err(|e| e.to_string())?)?.value as u64)
    };
    let int = |v: u64| BigRational::from_integer(BigInt::from(v));
    let id = perms_2x2()[0].clone();
    let mut checks = 0;

    // Scaling: f(sn) ≥ s^{d−1}/(d−1)! · f(n).
    for (n, s) in [(1, 2), (1, 3), (2, 2)] {
        let lhs = int(solve_f(s * n, &id)?);
        let rhs = scaling_lower_bound(solve_f(n, &id)?, s as u64, 2).unwrap();
        ensure(lhs >= rhs, || format!("f({}) = {lhs} < {rhs}", s * n))?;
        checks += 1;
    }
    // Grid scaling: m(st, R^k) ≥ s^{d−1}/(d−1)! · m(t, R^{k−1}).
    for k in 2..=3 {
        for t in 1..=2 {
            let s = 2;
            let lhs = int(solve_m(s * t, k)?);
            let rhs = scaling_lower_bound(solve_m(t, k - 1)?, s as u64, 2).unwrap();
            ensure(lhs >= rhs, || {
                format!("m({}, R^{k}) = {lhs} < {rhs}", s * t)
            })?;
            checks += 1;
        }
    }
    // Ratio lower bounds: value(n)/n^{d−1} ≥ value(m)/(2^{d−1}(d−1)! m^{d−1}) for n ≥ m.
    let fs: Vec<u64> = (1..=5).map(|n| solve_f(n, &id)).collect::<Result<_, _>>()?;
    let ms: Vec<u64> = (1..=4).map(|n| solve_m(n, 2)).collect::<Result<_, _>>()?;
    for values in [&fs, &ms] {
        for m in 1..=values.len() {
            let bound = converge_lower_bound(values[m - 1], m as u64, 2).unwrap();
            for n in m..=values.len() {
                let ratio = BigRational::new(BigInt::from(values[n - 1]), BigInt::from(n));
                ensure(ratio >= bound, || {
                    format!("value({n})/{n} = {ratio} < {bound}")
                })?;
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} exact inequalities, 0 violations"))
}

fn criterion_6() -> Verdict {
    timed(LIMIT_MONTE_CARLO, || {
        let opts = EstimateOptions::default();
        let k = lemma_threshold(2, 2).unwrap();
        ensure(k == 34, || format!("threshold(2,2) = {k}"))?;
        let r = avoid_probability(k, 2, 2, MC_TRIALS, MC_SEED, opts).map_err(|e| e.to_string())?;
        ensure(r.undecided == 0, || {
            format!("{} undecided trials", r.undecided)
        })?;
        ensure(r.estimate + r.radius <= 0.5, || {
            format!("estimate {} + radius {} exceeds 1/2", r.estimate, r.radius)
        })?;
        let two = avoid_probability(2, 2, 2, 100, MC_SEED, opts).map_err(|e| e.to_string())?;
        ensure(two.estimate == 1.0, || {
            format!("k=2, ell=2 gives {}", two.estimate)
        })?;
        for kk in [1, 5, 20] {
            let one = avoid_probability(kk, 1, 2, 100, MC_SEED, opts).map_err(|e| e.to_string())?;
            ensure(one.estimate == 0.0, || {
                format!("ell=1, k={kk} gives {}", one.estimate)
            })?;
        }
        Ok(format!(
            "k=34: {}/{} avoid, estimate {} + radius {:.4} <= 0.5; anchors 1.0 and 0.0 exact",
            r.avoid_count, r.trials, r.estimate, r.radius
        ))
    })
}

fn criterion_7() -> Verdict {
    let mut shown = Vec::new();
    for ell in 2..=3u64 {
        for d in 2..=3u32 {
            let k = lemma_threshold(ell, d).unwrap();
            let c = probability_chain(k, ell, d).map_err(|e| e.to_string())?;
            ensure(c.strictly_increasing(), || {
                format!("chain at k={k}, ell={ell}, d={d}: {:?}", c.values)
            })?;
            let one_over_ell = BigRational::new(BigInt::from(1), BigInt::from(ell));
            ensure(union_bound(ell, d) == one_over_ell, || {
                format!("ell^d * ell^-(d+1) != 1/{ell}")
            })?;
            shown.push(format!("(ell={ell}, d={d}, k={k})"));
        }
    }
    Ok(format!(
        "strict at {}; union bound exactly 1/ell",
        shown.join(" ")
    ))
}

fn criterion_8() -> Verdict {
    timed(LIMIT_ORACLE, || {
        let hosts: Vec<TensorMatrix> = shapes(2, 3).iter().flat_map(|d| all_tensors(d)).collect();
        let patterns: Vec<TensorMatrix> =
            shapes(2, 2).iter().flat_map(|d| all_tensors(d)).collect();
        let mut disagreements = Vec::new();
        for a in &hosts {
            for b in &patterns {
                let grid = contains_interval_minor(a, b).unwrap();
                let oracle = contains_via_contraction_oracle(a, b).unwrap();
                if grid.as_bool() != Some(oracle) {
                    disagreements.push(format!("{a:?} / {b:?}"));
                }
                if let Some(w) = grid.certificate() {
                    if !verify_witness(a, b, w).unwrap() {
                        disagreements.push(format!("bad witness for {a:?} / {b:?}"));
                    }
                }
            }
        }
        ensure(disagreements.is_empty(), || {
            format!(
                "{} disagreements, first: {}",
                disagreements.len(),
                disagreements[0]
            )
        })?;
        Ok(format!(
            "{} hosts x {} patterns agree",
            hosts.len(),
            patterns.len()
        ))
    })
}

/// A 2-D permutation together with a 2×2 grid partition whose corner block
/// holds exactly one one: the first such cut `(r, c)` in lexicographic order.
fn singleton_corner_instance(
    k: usize,
    seed: u64,
) -> Option<(patternforge::PermutationTensor, GridWitness)> {
    let p = random_permutation(k, 2, seed).ok()?;
    let ones = p.as_tensor().ones();
    for r in 1..k {
        for c in 1..k {
            let count = |top: bool, left: bool| {
                ones.iter()
                    .filter(|o| (o[0] <= r) == top && (o[1] <= c) == left)
                    .count()
            };
            if count(true, true) == 1
                && count(true, false) > 0
                && count(false, true) > 0
                && count(false, false) > 0
            {
                let w = GridWitness {
                    axes: vec![vec![(1, r), (r + 1, k)], vec![(1, c), (c + 1, k)]],
                };
                return Some((p, w));
            }
        }
    }
    None
}

fn criterion_9() -> Verdict {
    let grid = TensorMatrix::all_ones(&[2, 2]).unwrap();
    let mut built = 0;
    let mut failures = Vec::new();
    let mut seed = SUITE_SEED;
    while built < 25 {
        seed += 1;
        let k = 4 + (seed % 5) as usize;
        let Some((p, w)) = singleton_corner_instance(k, seed) else {
            continue;
        };
        ensure(verify_witness(p.as_tensor(), &grid, &w).unwrap(), || {
            format!("seed {seed}: invalid witness")
        })?;
        let r = corner_reduce(&p, &w).map_err(|e| format!("seed {seed}: {e}"))?;
        if !r.claims_hold() {
            failures.push(format!(
                "seed {seed}: corner one {}, contains R^1 {:?}",
                r.has_corner_one, r.contains_smaller_grid
            ));
        }
        built += 1;
    }
    ensure(failures.is_empty(), || {
        format!(
            "{} of 25 fail the corner-reduction claims (corner-block ambiguity): {}",
            failures.len(),
            failures.join("; ")
        )
    })?;
    Ok("25 permutations (k = 4..8), both claims hold for every output".into())
}

/// Not gating: how often the claims fail when the witness is simply the
/// least one the decider returns, whose corner block may hold several ones.
fn corner_reduce_with_least_witnesses() -> String {
    let grid = TensorMatrix::all_ones(&[2, 2]).unwrap();
    let (mut tried, mut failed) = (0, 0);
    for seed in 0..200u64 {
        let p = random_permutation(4 + (seed % 5) as usize, 2, seed).unwrap();
        if let Some(w) = contains_interval_minor(p.as_tensor(), &grid)
            .unwrap()
            .certificate()
        {
            tried += 1;
            if !corner_reduce(&p, w).unwrap().claims_hold() {
                failed += 1;
            }
        }
    }
    format!("corner reduction with least witnesses: {failed} of {tried} outputs fail a claim")
}

fn criterion_10() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_patternforge");
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache_path = cache.path().to_str().unwrap().to_string();
    let invocations: Vec<Vec<String>> = [
        "construct random-perm --k 9 --d 3 --seed 17",
        "construct random-perm --k 40 --d 2 --seed 18446744073709551615",
        "prob estimate --k 34 --ell 2 --d 2 --trials 500 --seed 3",
        "prob estimate --k 4,8,16,34 --ell 2 --d 3 --trials 200 --seed 11",
        "prob chain --k 178 --ell 2 --d 3",
        "prob ell --k 123456789 --d 3",
        "extremal f --n 4 --pattern allones:2,2",
        "extremal m --n 4 --pattern allones:3,3 --reflect",
        "ratio-seq --kind f --from 1 --to 4 --pattern allones:1,2",
        "minor --a allones:4,4,4 --b allones:2,2,2",
        "construct homo1 --s 3 --n allones:1,1,1 --k 2",
    ]
    .iter()
    .map(|s| s.split_whitespace().map(String::from).collect())
    .chain(std::iter::once(
        [
            "extremal",
            "m",
            "--n",
            "3",
            "--pattern",
            "allones:2,2",
            "--cache-dir",
            &cache_path,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    ))
    .collect();
    let mut runs = 0;
    for args in &invocations {
        for format in ["text", "json"] {
            let mut reference: Option<(Option<i32>, Vec<u8>)> = None;
            for threads in ["1", "4"] {
                for _ in 0..3 {
                    let out = Command::new(bin)
                        .args(["--threads", threads, "--format", format])
                        .args(args)
                        .env_remove("PATTERNFORGE_CACHE")
                        .output()
                        .map_err(|e| e.to_string())?;
                    let got = (out.status.code(), out.stdout);
                    runs += 1;
                    match &reference {
                        None => reference = Some(got),
                        Some(r) => ensure(*r == got, || {
                            format!(
                                "`{}` ({format}) differs at --threads {threads}",
                                args.join(" ")
                            )
                        })?,
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} invocations x 2 formats x threads {{1,4}} x 3 runs = {runs} byte-identical",
        invocations.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("exact f for the 2x2 identity", criterion_1),
        ("pattern/minor equivalence for permutations", criterion_2),
        ("f(n,P) <= m(n,R^{2,2})", criterion_3),
        ("antidiagonal Kronecker avoiders", criterion_4),
        ("scaling and ratio inequalities", criterion_5),
        ("Monte Carlo avoidance probability", criterion_6),
        ("probability chain and union bound", criterion_7),
        ("grid witnesses vs contraction oracle", criterion_8),
        ("corner reduction suite", criterion_9),
        ("CLI determinism across threads", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("PASS [{:>2}] {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {msg}", i + 1);
            }
        }
    }
    println!("INFO {}", corner_reduce_with_least_witnesses());
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
