//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regen::analytics::{self, int, rat, Rational};
use regen::codes::{self, RbtMbrCode};
use regen::harness::{self, Corruption, SCENARIOS};
use regen::lift;
use regen::model::{verify_all, BetaProfile, Coverage, RegeneratingCode};

/// Relative tolerance for the h-diagnostics against their limits.
const H_REL_TOL: f64 = 0.01;
/// Absolute tolerance for `h4 / M²`, whose limit is zero.
const H4_ABS_TOL: f64 = 0.01;
/// Bound on `|ratio - 1|` at the largest `M` of the sweep.
const RATIO_TOL: f64 = 1e-3;
const SEED: u64 = harness::DEFAULT_SEED;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(budget: Duration, start: Instant) -> Outcome {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:?}, budget {budget:?}"))
}

fn toy() -> Arc<dyn RegeneratingCode> {
    Arc::new(codes::toy())
}

fn suite_passes_exhaustively(name: &str) -> Result<harness::SuiteResult, String> {
    let r = harness::run_construction_suite(name, SEED).map_err(|e| e.to_string())?;
    ensure(r.pass, || format!("{name}: verification failed: {:?}", r.report.failures.first()))?;
    ensure(!r.report.sampled, || format!("{name}: coverage was sampled"))?;
    ensure(r.normalized_rate == r.predicted_bound, || {
        format!("{name}: B/alpha {} differs from predicted {}", r.normalized_rate, r.predicted_bound)
    })?;
    Ok(r)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let code = lift::cyclic_lift(toy()).map_err(|e| e.to_string())?;
    let p = code.params().clone();
    ensure((p.n, p.k, p.d) == (4, 3, 3), || format!("params {p}"))?;
    ensure(p.alpha_per_node == vec![3; 4], || format!("alpha {:?}", p.alpha_per_node))?;
    ensure(p.gamma == 6 && p.file_size == 8, || format!("gamma {} B {}", p.gamma, p.file_size))?;

    // File layout (x1..x4, y1..y4): subsystem t holds (x_t, y_t) and base
    // node 1 of the toy code stores x.
    let file = harness::random_file(8, SEED);
    let instance = code.store(&file).map_err(|e| e.to_string())?;
    ensure(instance.node(1) == &file[1..4], || format!("w1 = {:?}, file = {:?}", instance.node(1), file))?;

    let report = verify_all(&code, &instance, Coverage::Exhaustive);
    ensure(report.all_pass, || format!("failures {:?}", report.failures))?;
    ensure(report.reconstruction_results.len() == 4, || "expected 4 reconstruction subsets".into())?;
    ensure(report.repair_results.len() == 4, || "expected 4 repairs".into())?;
    within(Duration::from_secs(1), start)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let code = lift::permutation_lift(toy()).map_err(|e| e.to_string())?;
    ensure(code.layout().subsystems() == 24, || "expected 24 subsystems".into())?;
    let p = code.params();
    ensure(p.alpha_per_node == vec![18; 4], || format!("alpha {:?}", p.alpha_per_node))?;
    ensure(p.gamma == 36 && p.file_size == 48, || format!("gamma {} B {}", p.gamma, p.file_size))?;

    let r = suite_passes_exhaustively("toy-perm-433")?;
    ensure(r.normalized_rate == rat(8, 3), || format!("rate {}", r.normalized_rate))?;
    ensure(r.lift_factor * int(2) == rat(8, 3), || "factor (4/3)*2".into())?;

    for failed in 1..=4 {
        let audit = harness::audit_scenario("toy-perm-433", failed, SEED).map_err(|e| e.to_string())?;
        ensure(audit.measured_beta2 == 12, || format!("node {failed}: measured {}", audit.measured_beta2))?;
        ensure(audit.stated_beta2 == Some(int(18)), || format!("stated {:?}", audit.stated_beta2))?;
        ensure(audit.balanced, || format!("node {failed}: unbalanced helpers"))?;
    }
    ensure(code.params().beta == BetaProfile::Homogeneous(12), || "beta profile".into())?;
    within(Duration::from_secs(5), start)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let expected = [("toy-cyclic-655", (6, 5, 5), rat(4, 1)), ("mbr-cyclic-534", (5, 3, 4), rat(25, 12)), ("msr-perm-633", (6, 3, 3), rat(12, 5))];
    let mut checks = Vec::new();
    for (name, npk, rate) in expected {
        let r = suite_passes_exhaustively(name)?;
        let p = &r.report.params;
        ensure((p.n, p.k, p.d) == npk, || format!("{name}: params {p}"))?;
        ensure(r.normalized_rate == rate, || format!("{name}: rate {} vs {rate}", r.normalized_rate))?;
        checks.push(r.report.total_checks);
    }

    // Cyclic MBR lift multiplies the per-node repair bandwidth by 4.
    let mbr: Arc<dyn RegeneratingCode> = Arc::new(RbtMbrCode::new(4, 2).map_err(|e| e.to_string())?);
    let lifted = lift::cyclic_lift(mbr.clone()).map_err(|e| e.to_string())?;
    ensure(lifted.params().gamma == 4 * mbr.params().gamma, || "mbr gamma2 = 4 gamma".into())?;

    // msr-perm-633 runs 20 reconstructions plus every 3-subset of the five
    // survivors for each failed node.
    let per_node = checks[2] - 20;
    ensure(per_node == 6 * 10, || format!("expected 60 repairs, got {per_node}"))?;
    within(Duration::from_secs(60), start)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let rows = analytics::tradeoff_dataset(51).map_err(|e| e.to_string())?;
    ensure(rows.len() == 50, || format!("{} rows", rows.len()))?;
    let first = &rows[0];
    let last = &rows[49];
    for (row, want) in [(first, rat(51, 2)), (last, int(50))] {
        for v in [&row.capacity.value, &row.bound.value, &row.interpolation.value] {
            ensure(*v == want, || format!("gamma {}: {v} vs {want}", row.gamma()))?;
        }
    }
    for row in &rows {
        ensure(row.interpolation.value <= row.bound.value && row.bound.value <= row.capacity.value, || {
            format!("sandwich broken at gamma {}", row.gamma())
        })?;
    }

    let mut best: Option<(Rational, u64)> = None;
    for i in 1..=50 {
        let (gamma, bound) = analytics::exact_lower_bound(51, 50, 50, &int(1), i).map_err(|e| e.to_string())?;
        let cap = analytics::functional_capacity(50, 50, &int(1), &gamma).map_err(|e| e.to_string())?;
        let ratio = bound / cap;
        if best.as_ref().is_none_or(|(b, _)| ratio < *b) {
            best = Some((ratio, i));
        }
    }
    let (min, at) = best.expect("non-empty sweep");
    ensure(min == rat(17, 19) && at == 2, || format!("minimum {min} at i={at}"))?;
    ensure(min >= rat(8, 9), || format!("minimum {min} below 8/9"))?;
    within(Duration::from_secs(1), start)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    for n in 2..=200u64 {
        for i in 1..n {
            let closed = analytics::single_parity_ratio(n, i).map_err(|e| e.to_string())?;
            let direct = analytics::single_parity_ratio_direct(n, i).map_err(|e| e.to_string())?;
            ensure(closed == direct, || format!("n={n} i={i}: {closed} vs {direct}"))?;
        }
    }
    let mut best: Option<(Rational, u64)> = None;
    for i in 1..=1000 {
        let v = analytics::large_n_ratio_approx(i).map_err(|e| e.to_string())?;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, i));
        }
    }
    let (min, at) = best.expect("non-empty sweep");
    ensure(min == rat(8, 9) && at == 2, || format!("large-n minimum {min} at i={at}"))?;
    within(Duration::from_secs(10), start)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let ms = [100u64, 1_000, 10_000, 100_000];
    for (n, k, d) in [(3, 2, 2), (5, 3, 4), (6, 3, 3)] {
        for s in [rat(1, 4), rat(1, 2), rat(3, 4)] {
            let mut prev: Option<Rational> = None;
            for m in ms {
                let r = analytics::asymptotic_ratio(n, k, d, m, &s).map_err(|e| e.to_string())?;
                let dev = if r.ratio >= int(1) { &r.ratio - int(1) } else { int(1) - &r.ratio };
                if let Some(p) = &prev {
                    ensure(dev <= *p, || format!("({n},{k},{d}) s={s}: |ratio-1| grew at M={m}"))?;
                }
                prev = Some(dev);
            }
            let dev = analytics::to_f64(&prev.expect("sweep ran"));
            ensure(dev < RATIO_TOL, || format!("({n},{k},{d}) s={s}: |ratio-1| = {dev} at M=1e5"))?;

            let r = analytics::asymptotic_ratio(n, k, d, 1_000_000, &s).map_err(|e| e.to_string())?;
            let h = r.scaled.expect("M > 0");
            for (name, got, want) in [
                ("h1/M^3", h.h1_over_m3, h.h1_limit),
                ("h2/M", h.h2_over_m, h.h2_limit),
                ("h3/M^2", h.h3_over_m2, h.h3_limit),
            ] {
                let rel = ((got - want) / want).abs();
                ensure(rel < H_REL_TOL, || format!("({n},{k},{d}) s={s}: {name} = {got} vs {want}"))?;
            }
            ensure((h.h4_over_m2 - h.h4_limit).abs() < H4_ABS_TOL, || {
                format!("({n},{k},{d}) s={s}: h4/M^2 = {}", h.h4_over_m2)
            })?;
        }
        for m in ms {
            let r = analytics::asymptotic_ratio(n, k, d, m, &int(1)).map_err(|e| e.to_string())?;
            ensure(r.ratio == int(1), || format!("({n},{k},{d}) s=1 M={m}: ratio {}", r.ratio))?;
        }
    }
    within(Duration::from_secs(5), start)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..20 {
        let d: u64 = rng.random_range(1..=30);
        let k: u64 = rng.random_range(1..=d);
        let b = rat(rng.random_range(1..=10_000), rng.random_range(1..=12));
        let (alpha, gamma) = analytics::msr_point(k, d, &b).map_err(|e| e.to_string())?;
        let at_msr = analytics::functional_capacity(k, d, &alpha, &gamma).map_err(|e| e.to_string())?;
        ensure(at_msr == b, || format!("MSR k={k} d={d} B={b}: capacity {at_msr}"))?;
        let (alpha, gamma) = analytics::mbr_point(k, d, &b).map_err(|e| e.to_string())?;
        let at_mbr = analytics::functional_capacity(k, d, &alpha, &gamma).map_err(|e| e.to_string())?;
        ensure(at_mbr == b, || format!("MBR k={k} d={d} B={b}: capacity {at_mbr}"))?;
    }
    Ok(())
}

/// Offsets to flip on one node: every symbol for small nodes, otherwise the
/// two ends plus a seeded sample.
fn flip_offsets(len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if len <= 12 {
        return (0..len).collect();
    }
    let mut v = vec![0, len - 1];
    v.extend((0..4).map(|_| rng.random_range(0..len)));
    v
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x8);
    for sc in SCENARIOS {
        let code = sc.build().map_err(|e| e.to_string())?;
        let p = code.params().clone();
        let clean = code.store(&harness::random_file(p.file_size, SEED)).map_err(|e| e.to_string())?;
        let coverage = Coverage::Capped { limit: harness::ENUMERATION_CAP, seed: SEED };
        for node in 1..=p.n {
            for offset in flip_offsets(clean.node(node).len(), &mut rng) {
                let mut bad = clean.clone();
                bad.corrupt(node, offset, 0x01).map_err(|e| e.to_string())?;
                let report = verify_all(code.as_ref(), &bad, coverage);
                ensure(!report.all_pass, || format!("{}: flip at {node}:{offset} went unnoticed", sc.name))?;
            }
        }
        let r = harness::run_construction_suite_with(sc.name, SEED, Some(Corruption { node: 1, offset: 0 }))
            .map_err(|e| e.to_string())?;
        ensure(r.exit_code() == 1, || format!("{}: corrupted suite exit {}", sc.name, r.exit_code()))?;
    }

    let status = Command::new(env!("CARGO_BIN_EXE_regen"))
        .args(["verify", "--scenario", "toy-cyclic-433", "--corrupt", "2:1"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.code() == Some(1), || format!("cli exit {:?}", status.status.code()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 cyclic toy lift golden", criterion_1),
        ("2 permutation toy lift and beta audit", criterion_2),
        ("3 iterated lifts match the lift factor", criterion_3),
        ("4 tradeoff curves at (51,50,50)", criterion_4),
        ("5 single-parity closed form", criterion_5),
        ("6 asymptotic ratio sweep", criterion_6),
        ("7 MSR/MBR points lie on the capacity curve", criterion_7),
        ("8 corrupted symbols are detected", criterion_8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("PASS criterion {name} ({:.2?})", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
