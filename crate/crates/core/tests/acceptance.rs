//! Acceptance gate: twelve numbered criteria, one test and one printed
//! verdict line each. Exact values are compared against golden files and
//! frozen constants; every tolerance and budget is pinned here.
//!
//! Criterion 10 contains a soft part: the rank-16 search on the third
//! W-state power is reported with its best residual, and the test passes
//! whether or not the threshold is attained, because the exact value rests
//! on the syzygy argument (criterion 6), not on a numerical search.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use rankgap::algebra::{wstate_basis_equivalence, SizeBudget};
use rankgap::bounds::{
    blaser_bound, border_rank_algebra, ratio_report, table1, table2, wstate_bound,
};
use rankgap::combinatorics::{binary_entropy, binomial, ext_binom, ratio_tail};
use rankgap::cpd::{
    als_decompose, degeneration_witness, divergence_probe, AlsConfig, FloatTensor, ProbeConfig,
};
use rankgap::polyring::{derive_relations, verify_syzygy};
use rankgap::tensor::DenseTensor;

/// Residual threshold for the hard ALS witnesses (criterion 10).
const ALS_HARD_THRESHOLD: f64 = 1e-8;
/// Residual threshold for the soft rank-16 search (criterion 10).
const ALS_SOFT_THRESHOLD: f64 = 1e-4;
/// Degeneration slope tolerance around 1.0 (criterion 11).
const SLOPE_TOL: f64 = 0.1;
/// Probe stop thresholds (criterion 12): residual below, norm above.
const PROBE_RESIDUAL: f64 = 1e-2;
const PROBE_NORM: f64 = 1e2;
/// Sweep ceiling for the probe; the stop condition fires near 2e8 sweeps.
const PROBE_MAX_SWEEPS: usize = 600_000_000;

fn verdict(criterion: u32, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn golden(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).expect("golden file")
}

fn wstate_power_float(power: usize) -> FloatTensor {
    let t = DenseTensor::wstate(3).unwrap().kron_power(power).unwrap();
    FloatTensor::from_exact(&t).unwrap()
}

#[test]
fn criterion_01_table1_reproduction() {
    let start = Instant::now();
    let table = table1().unwrap();
    let csv = table.to_csv();
    let elapsed = start.elapsed().as_secs_f64();
    let byte_exact = csv == golden("table1.csv");
    let spot = table.cells[1][0] == BigInt::from(7)
        && table.cells[2][2] == BigInt::from(142)
        && table.cells[5][4] == BigInt::from(121_971);
    verdict(
        1,
        byte_exact && spot && elapsed < 1.0,
        &format!("30 algebra cells byte-exact vs golden CSV in {elapsed:.3}s"),
    );
}

#[test]
fn criterion_02_table2_reproduction() {
    let start = Instant::now();
    let table = table2().unwrap();
    let csv = table.to_csv();
    let elapsed = start.elapsed().as_secs_f64();
    let byte_exact = csv == golden("table2.csv");
    let spot = table.cells[0][4] == BigInt::from(68)
        && table.cells[4][3] == BigInt::from(93)
        && table.cells[7][9] == BigInt::from(9705);
    verdict(
        2,
        byte_exact && spot && elapsed < 1.0,
        &format!("80 W-state cells byte-exact vs golden CSV in {elapsed:.3}s"),
    );
}

#[test]
fn criterion_03_consistency_identity() {
    let mut ok = true;
    for n in 1..=20u32 {
        ok &= wstate_bound(3, n).unwrap() == blaser_bound(2, n).unwrap().value;
    }
    for k in 3..=12u32 {
        for n in 1..=20u32 {
            let expected = blaser_bound(2, n).unwrap().value
                + BigInt::from(k - 3) * ((BigInt::one() << n) - 1);
            ok &= wstate_bound(k, n).unwrap() == expected;
        }
    }
    verdict(
        3,
        ok,
        "wstate_bound(k, n) = blaser_bound(2, n) + (k-3)(2^n - 1) for k <= 12, n <= 20",
    );
}

#[test]
fn criterion_04_border_rank_certificates() {
    let budget = SizeBudget::default();
    let start = Instant::now();
    let mut ok = true;
    for (d, n) in [(2u32, 1u32), (3, 1), (4, 1), (2, 2), (3, 2), (2, 3)] {
        let dim = BigInt::from(d).pow(n);
        ok &= border_rank_algebra(d, n, true, &budget).unwrap() == dim;
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        4,
        ok && elapsed < 30.0,
        &format!("six flattening-rank certificates in {elapsed:.3}s"),
    );
}

#[test]
fn criterion_05_basis_equivalence() {
    let budget = SizeBudget::default();
    let mut ok = true;
    for n in 1..=4u32 {
        ok &= wstate_basis_equivalence(n, &budget).unwrap().equal;
    }
    verdict(
        5,
        ok,
        "A(2, n) structure tensor equals the n-th W-state power for n = 1..4",
    );
}

#[test]
fn criterion_06_syzygy_certificate() {
    let start = Instant::now();
    let cert = verify_syzygy();
    let derived = derive_relations();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        6,
        cert.is_valid() && derived.matches_stated && elapsed < 1.0,
        &format!("zero residual and rederived relations in {elapsed:.3}s"),
    );
}

#[test]
fn criterion_07_combinatorics_oracle_suite() {
    let mut ok = true;
    // Brute-force enumeration oracle: count exponent vectors in {0..cap}^n
    // of total degree b.
    for n in 1..=6u64 {
        for cap in 1..=4u64 {
            let mut counts = vec![BigInt::zero(); (n * cap + 1) as usize];
            let mut idx = vec![0u64; n as usize];
            loop {
                let sum: u64 = idx.iter().sum();
                counts[sum as usize] += 1;
                let mut pos = n as usize;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] <= cap {
                        break;
                    }
                    idx[pos] = 0;
                }
                if idx.iter().all(|&x| x == 0) {
                    break;
                }
            }
            let mut row_sum = BigInt::zero();
            for b in 0..=n * cap {
                let v = ext_binom(n, b, cap).unwrap();
                ok &= v == counts[b as usize];
                ok &= v == ext_binom(n, n * cap - b, cap).unwrap();
                row_sum += v;
            }
            ok &= row_sum == BigInt::from(cap + 1).pow(n as u32);
        }
        for b in 0..=n {
            ok &= ext_binom(n, b, 1).unwrap() == binomial(n as i128, b as i128);
        }
    }
    // Entropy bound on binomial tails for q = m/n < 1/2.
    for n in 2..=60u64 {
        for m in 1..n.div_ceil(2) {
            let mut sum = BigInt::zero();
            for b in 0..=m {
                sum += binomial(n as i128, b as i128);
            }
            let bound = (binary_entropy(m as f64 / n as f64).unwrap() * n as f64).exp2();
            ok &= sum.to_f64().unwrap() <= bound * (1.0 + 1e-9);
        }
    }
    verdict(
        7,
        ok,
        "enumeration, row sums, symmetry, binomial reduction, entropy tails",
    );
}

#[test]
fn criterion_08_decay_property() {
    let q = BigRational::new(BigInt::from(2), BigInt::from(5));
    let mut ok = true;
    for cap in 1..=3u64 {
        for n in [25u64, 50, 100] {
            let large = ratio_tail(&q, cap, 4 * n).unwrap();
            let small = ratio_tail(&q, cap, n).unwrap();
            ok &= large < small;
        }
    }
    let tail = ratio_tail(&q, 1, 400).unwrap();
    ok &= tail < BigRational::new(BigInt::one(), BigInt::from(100));
    verdict(
        8,
        ok,
        "ratio_tail(2/5, d, 4N) < ratio_tail(2/5, d, N) and tail(1, 400) < 1/100, exact",
    );
}

#[test]
fn criterion_09_ratio_report() {
    let mut ok = true;
    for k in 3..=10u32 {
        let (ratio, report) = ratio_report(k, 10).unwrap();
        // ratio >= k - 3/5, compared exactly.
        let floor = BigRational::new(BigInt::from(5 * k as i64 - 3), BigInt::from(5));
        ok &= ratio >= floor;
        ok &= ratio == BigRational::new(report.blaser_lb.clone(), BigInt::from(1024));
    }
    verdict(
        9,
        ok,
        "wstate_bound(k, 10) / 2^10 >= k - 0.6 for k = 3..10, exact rationals",
    );
}

#[test]
fn criterion_10_numerical_upper_bound_witnesses() {
    let start = Instant::now();
    let w = wstate_power_float(1);
    let cfg = AlsConfig {
        target_residual: Some(ALS_HARD_THRESHOLD),
        ..AlsConfig::default()
    };
    let w_r3 = als_decompose(&w, 3, &cfg).unwrap().best.residual;
    let w2 = wstate_power_float(2);
    let w2_r7 = als_decompose(&w2, 7, &cfg).unwrap().best.residual;
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        10,
        w_r3 < ALS_HARD_THRESHOLD && w2_r7 < ALS_HARD_THRESHOLD && elapsed < 60.0,
        &format!(
            "residuals {w_r3:.2e} at (W, r=3), {w2_r7:.2e} at (W^2, r=7) in {elapsed:.1}s"
        ),
    );

    // Soft part: report the best rank-16 residual on W^3 either way.
    let w3 = wstate_power_float(3);
    let soft_cfg = AlsConfig {
        restarts: 200,
        target_residual: Some(ALS_SOFT_THRESHOLD),
        ..AlsConfig::default()
    };
    let out = als_decompose(&w3, 16, &soft_cfg).unwrap();
    let best = out.best.residual;
    if best < ALS_SOFT_THRESHOLD {
        println!("criterion 10 (soft): PASS (residual {best:.2e} at (W^3, r=16))");
    } else {
        println!(
            "criterion 10 (soft): threshold {ALS_SOFT_THRESHOLD:.0e} not attained at \
             (W^3, r=16); best residual {best:.2e} over {} restarts (seed {}); \
             reported as the criterion allows",
            out.restarts_run, out.best.seed
        );
    }
    assert!(best.is_finite() && best < 0.5, "soft search degenerated: {best}");
}

#[test]
fn criterion_11_degeneration_witness() {
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut ok = true;
    let mut slopes = Vec::new();
    for k in 3..=5usize {
        let slope = degeneration_witness(k, &eps)
            .unwrap()
            .loglog_slope()
            .unwrap();
        ok &= (slope - 1.0).abs() <= SLOPE_TOL;
        slopes.push(format!("{slope:.4}"));
    }
    verdict(
        11,
        ok,
        &format!("log-log slopes {} for k = 3, 4, 5", slopes.join(", ")),
    );
}

#[test]
fn criterion_12_divergence_probe() {
    let w = wstate_power_float(1);
    let start = Instant::now();
    let trace = divergence_probe(
        &w,
        2,
        &ProbeConfig {
            max_iters: PROBE_MAX_SWEEPS,
            seed: 0,
            trace_stride: 1_000_000,
            stop_when: Some((PROBE_RESIDUAL, PROBE_NORM)),
        },
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = !trace.aborted
        && trace.final_residual < PROBE_RESIDUAL
        && trace.final_max_norm > PROBE_NORM;
    verdict(
        12,
        ok,
        &format!(
            "residual {:.2e} with max column norm {:.2e} after {} sweeps ({elapsed:.0}s), \
             rebalancing off",
            trace.final_residual, trace.final_max_norm, trace.sweeps_run
        ),
    );
}
