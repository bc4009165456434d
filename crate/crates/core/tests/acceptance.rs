//! Release acceptance campaign. Each test prints exactly one line
//! `ACCEPT <id> PASS|FAIL <title>: <detail>` to stdout and fails if its
//! criterion does not hold.

use std::io::Write;
use std::time::Instant;

use catalyst_core::arena::{ArenaInit, CatalyticArena, Workspace};
use catalyst_core::field::random_prime;
use catalyst_core::grid::{grid_path_weight_fresh, GridParams};
use catalyst_core::hitting::{confinement_profile, hit_rate, planted_bad_set, SeedSpec};
use catalyst_core::metrics::{edit_distance_report, frechet_points, lcs_report, MetricParams};
use catalyst_core::stconn::{
    exact_plan, multiset_shape, run_plan_fresh, run_trial_budgeted, sampled_plan, stconn_seeded, Mode, StconnParams,
};
use catalyst_core::testkit::{
    digraph_from_mask, dp_ed, dp_frechet, dp_lcs, grid_dp_oracle, linear_fit, log_linear_slope, orbit_representatives,
    planted_path_digraph, random_digraph, reachable, squared_distances, walk_count_oracle,
};
use catalyst_core::verify::{grid_instance, random_weighted_digraph, register_round_trip, walkflow_case, walkflow_instance};
use catalyst_core::walkflow::Digraph;
use catalyst_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESTORATION_RUNS: usize = 10_000;
const RESTORATION_MAX_SECS: f64 = 600.0;
const WALKFLOW_INSTANCES: usize = 200;
const WALKFLOW_MAX_VERTICES: usize = 32;
const ONE_SIDED_DRAWS: usize = 3;
const COMPLETENESS_INSTANCES: usize = 300;
const COMPLETENESS_VERTICES: usize = 64;
const COMPLETENESS_TRIALS: usize = 5;
const COMPLETENESS_MIN_RATE: f64 = 0.9;
const EXACT_SAMPLED_N6: usize = 20_000;
const GRID_INSTANCES: usize = 100;
const ED_EXHAUSTIVE_LEN: usize = 5;
const ED_RANDOM_PAIRS: usize = 200;
const ED_RANDOM_LEN: usize = 16;
const FRECHET_INSTANCES: usize = 200;
const FRECHET_MAX_POINTS: usize = 12;
const FRECHET_MAX_SECS: f64 = 60.0;
const ALLOC_TAPES: usize = 10_000;
const HIT_DRAWS: usize = 10_000;
const HIT_SLACK: f64 = 0.05;
const BAD_DENSITY: f64 = 0.25;
const METER_SIZES: [usize; 3] = [64, 128, 256];
const METER_FACTOR: f64 = 2.0;
const FREE_FIT_RESIDUAL: f64 = 0.20;

/// Epsilon giving λ = 2 on graphs of up to 64 vertices.
const SMALL_LAMBDA_EPS: f64 = 0.35;

fn report(id: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "ACCEPT {id:>2} {tag} {title}: {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_0000 + tag)
}

fn words(max_len: usize, alphabet: &[u8]) -> Vec<Vec<u8>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|w: &Vec<u8>| alphabet.iter().map(move |&c| [w.as_slice(), &[c]].concat()))
            .collect();
        all.extend(frontier.iter().cloned());
    }
    all
}

fn random_word(rng: &mut impl Rng, max_len: usize, alphabet: &[u8]) -> Vec<u8> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn single_class() -> MetricParams {
    MetricParams { grid: GridParams { classes: Some(1), ..Default::default() }, ..Default::default() }
}

#[test]
fn c01_restoration() {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut counts = [0usize; 5];
    for k in 0..RESTORATION_RUNS {
        let family = k % 5;
        let outcome: Result<(), String> = match family {
            0 => register_round_trip(&mut rng),
            1 => walkflow_instance(&mut rng, 4),
            2 => {
                let n = rng.gen_range(2..=5);
                let edges = random_digraph(n, rng.gen_range(0.1..0.5), &mut rng);
                let g = Digraph::new(n, &edges).unwrap();
                let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
                let mode = if rng.gen_bool(0.5) { Mode::ExactSmallU } else { Mode::Randomized };
                let params = StconnParams { eps: SMALL_LAMBDA_EPS, trials: 2, mode, ..Default::default() };
                match stconn_seeded(&g, s, t, &params, rng.gen()) {
                    Ok(r) if r.restored() => Ok(()),
                    Ok(_) => Err(format!("stconn n={n} s={s} t={t} left the tape modified")),
                    Err(e) => Err(e.to_string()),
                }
            }
            3 => {
                let n = [2, 4, 8][rng.gen_range(0..3)];
                grid_instance(&mut rng, n)
            }
            _ => {
                let params = MetricParams { tape_seed: rng.gen(), ..single_class() };
                let restored = match rng.gen_range(0..3) {
                    0 => edit_distance_report(&random_word(&mut rng, 4, b"ab"), &random_word(&mut rng, 4, b"ab"), params)
                        .map(|r| r.stats.restored),
                    1 => lcs_report(&random_word(&mut rng, 4, b"abc"), &random_word(&mut rng, 4, b"abc"), params)
                        .map(|r| r.stats.restored),
                    _ => {
                        let pts = |rng: &mut ChaCha8Rng| -> Vec<(i64, i64)> {
                            (0..rng.gen_range(1..=4)).map(|_| (rng.gen_range(0..9), rng.gen_range(0..9))).collect()
                        };
                        let (a, b) = (pts(&mut rng), pts(&mut rng));
                        frechet_points(&a, &b, params).map(|r| r.stats.restored)
                    }
                };
                match restored {
                    Ok(true) => Ok(()),
                    Ok(false) => Err("metric run left the tape modified".into()),
                    Err(e) => Err(e.to_string()),
                }
            }
        };
        counts[family] += 1;
        if let Err(e) = outcome {
            failures.push(e);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "restoration after randomized runs",
        failures.is_empty() && secs < RESTORATION_MAX_SECS,
        format!(
            "{} runs (arena {}, walkflow {}, stconn {}, grid {}, metrics {}), {} not restored, {secs:.0}s{}",
            RESTORATION_RUNS,
            counts[0],
            counts[1],
            counts[2],
            counts[3],
            counts[4],
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c02_walkflow_oracle() {
    let mut rng = rng(2);
    let mut checks = 0;
    let mut failures = Vec::new();
    for _ in 0..WALKFLOW_INSTANCES {
        let n = rng.gen_range(1..=WALKFLOW_MAX_VERTICES);
        let p = random_prime(64, &mut rng).unwrap();
        let edges = random_weighted_digraph(&mut rng, n, p);
        let m = n.next_power_of_two();
        for classes in [1usize, 2, 4].into_iter().filter(|&c| c <= m) {
            for level in 0..=m.trailing_zeros() {
                let (c_in, c_out) = (rng.gen_range(0..classes), rng.gen_range(0..classes));
                checks += 1;
                if let Err(e) = walkflow_case(&mut rng, n, &edges, p, classes, level, c_in, c_out) {
                    failures.push(e);
                }
            }
        }
    }
    report(
        2,
        "propagate equals r_in·A^(2^ℓ)",
        failures.is_empty(),
        format!(
            "{WALKFLOW_INSTANCES} graphs, {checks} (C, ℓ) checks, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

/// Runs `draws` independent randomized calls on an unreachable pair and
/// counts acceptances.
fn false_accepts(g: &Digraph, s: usize, t: usize, eps: f64, rng: &mut ChaCha8Rng) -> usize {
    let params = StconnParams { eps, trials: 1, ..Default::default() };
    (0..ONE_SIDED_DRAWS)
        .filter(|_| {
            let r = stconn_seeded(g, s, t, &params, rng.gen()).unwrap();
            assert!(r.restored());
            r.connected
        })
        .count()
}

#[test]
fn c03a_stconn_one_sided() {
    let mut rng = rng(3);
    let (mut instances, mut accepts) = (0usize, 0usize);
    for n in 1..=4usize {
        let slots = n * (n - 1);
        for mask in 0..1u64 << slots {
            let edges = digraph_from_mask(n, mask);
            let g = Digraph::new(n, &edges).unwrap();
            for s in 0..n {
                let reach = reachable(n, &edges, s);
                for t in (0..n).filter(|&t| !reach[t]) {
                    instances += 1;
                    accepts += false_accepts(&g, s, t, 1.0, &mut rng);
                }
            }
        }
    }
    // Five vertices: every unreachable (s, t) is a relabeling of (0, 1).
    for mask in orbit_representatives(5, 2) {
        let edges = digraph_from_mask(5, mask);
        if reachable(5, &edges, 0)[1] {
            continue;
        }
        let g = Digraph::new(5, &edges).unwrap();
        instances += 1;
        accepts += false_accepts(&g, 0, 1, SMALL_LAMBDA_EPS, &mut rng);
    }
    report(
        3,
        "stconn one-sidedness (exhaustive, n <= 5)",
        accepts == 0,
        format!("{instances} unreachable instances × {ONE_SIDED_DRAWS} (p, σ) draws, {accepts} false accepts"),
    );
}

#[test]
fn c03b_stconn_completeness() {
    let mut rng = rng(4);
    let n = COMPLETENESS_VERTICES;
    let params = StconnParams { eps: SMALL_LAMBDA_EPS, trials: COMPLETENESS_TRIALS, ..Default::default() };
    let start = Instant::now();
    let mut accepted = 0;
    let mut lambda = 0;
    for _ in 0..COMPLETENESS_INSTANCES {
        let (s, t) = (0, rng.gen_range(1..n));
        let path_len = rng.gen_range(1..=16);
        let edges = planted_path_digraph(n, s, t, path_len, n, &mut rng);
        let g = Digraph::new(n, &edges).unwrap();
        let r = stconn_seeded(&g, s, t, &params, rng.gen()).unwrap();
        assert!(r.restored());
        lambda = r.lambda;
        accepted += r.connected as usize;
    }
    let rate = accepted as f64 / COMPLETENESS_INSTANCES as f64;
    report(
        3,
        "stconn completeness (n = 64, trials = 5)",
        rate >= COMPLETENESS_MIN_RATE,
        format!(
            "{accepted}/{COMPLETENESS_INSTANCES} connected instances accepted ({rate:.3}, need >= {COMPLETENESS_MIN_RATE}), λ = {lambda}, {:.0}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c04_exact_walk_counts() {
    let mut rng = rng(5);
    let (mut runs, mut bad) = (0usize, Vec::new());
    let mut check = |g: &Digraph, s: usize, t: usize, rng: &mut ChaCha8Rng| {
        let n = g.vertex_count();
        let p = random_prime(n.max(4) as u64, rng).unwrap();
        let (scalar, _, restored) = run_plan_fresh(&exact_plan(g, s, t, p).unwrap(), rng.gen()).unwrap();
        let want = walk_count_oracle(n, &g.with_self_loops().edges(), n as u64, p)[s][t];
        runs += 1;
        if scalar != want || !restored {
            bad.push(format!("n={n} s={s} t={t} p={p}: {scalar} vs {want}, restored={restored}"));
        }
    };
    for n in 1..=4usize {
        for mask in 0..1u64 << (n * (n - 1)) {
            let g = Digraph::new(n, &digraph_from_mask(n, mask)).unwrap();
            for s in 0..n {
                for t in 0..n {
                    check(&g, s, t, &mut rng);
                }
            }
        }
    }
    for (fixed, t) in [(2usize, 1usize), (1, 0)] {
        for mask in orbit_representatives(5, fixed) {
            check(&Digraph::new(5, &digraph_from_mask(5, mask)).unwrap(), 0, t, &mut rng);
        }
    }
    for _ in 0..EXACT_SAMPLED_N6 {
        let g = Digraph::new(6, &digraph_from_mask(6, rng.gen_range(0..1u64 << 30))).unwrap();
        let (s, t) = (rng.gen_range(0..6), rng.gen_range(0..6));
        check(&g, s, t, &mut rng);
    }
    report(
        4,
        "exact mode equals the length-n walk count",
        bad.is_empty(),
        format!(
            "{runs} runs (all graphs n <= 4, all orbits n = 5, {EXACT_SAMPLED_N6} sampled n = 6), {} mismatches{}",
            bad.len(),
            bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c05_grid_engine() {
    let mut rng = rng(6);
    let mut failures = Vec::new();
    for n in [2usize, 4, 8, 16] {
        for _ in 0..GRID_INSTANCES {
            let p = random_prime(1 << 20, &mut rng).unwrap();
            let w = catalyst_core::testkit::hashed_grid_weight(rng.gen(), p);
            let l_u = rng.gen_range(0..n);
            let u = (l_u, rng.gen_range(0..=n));
            let v = (rng.gen_range(l_u + 1..=n), rng.gen_range(0..=n));
            let want = grid_dp_oracle(n, |i, j, k| w((i, j), (i + 1, k)), u, v, p);
            let (got, _, restored) =
                grid_path_weight_fresh(n, u, v, &w, p, GridParams::default(), ArenaInit::Random(rng.gen())).unwrap();
            if got != want || !restored {
                failures.push(format!("n={n} u={u:?} v={v:?} p={p}: {got} vs {want}"));
            }
        }
        // Random class counts exercise OUTER as well.
        for _ in 0..GRID_INSTANCES / 4 {
            if let Err(e) = grid_instance(&mut rng, n) {
                failures.push(e);
            }
        }
    }
    let ones = |_: (usize, usize), _: (usize, usize)| 1u64;
    let (three, _, _) = grid_path_weight_fresh(2, (0, 1), (2, 1), &ones, 13, GridParams::default(), ArenaInit::Ones).unwrap();
    report(
        5,
        "grid path weight equals the layered DP",
        failures.is_empty() && three == 3,
        format!(
            "{} instances per n in {{2, 4, 8, 16}}, {} mismatches, Grid_2,2 unit count = {three}{}",
            GRID_INSTANCES + GRID_INSTANCES / 4,
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c06_edit_distance_and_lcs() {
    let mut rng = rng(7);
    let mut bad = Vec::new();
    let mut compare = |x: &[u8], y: &[u8], params: MetricParams| {
        let ed = edit_distance_report(x, y, params).unwrap();
        let lcs = lcs_report(x, y, params).unwrap();
        if ed.value != dp_ed(x, y) || lcs.value != dp_lcs(x, y) || !ed.stats.restored || !lcs.stats.restored {
            bad.push(format!("{:?} {:?}: ed {} lcs {}", String::from_utf8_lossy(x), String::from_utf8_lossy(y), ed.value, lcs.value));
        }
    };
    let all = words(ED_EXHAUSTIVE_LEN, b"01");
    for x in &all {
        for y in &all {
            compare(x, y, MetricParams { tape_seed: rng.gen(), ..Default::default() });
        }
    }
    for _ in 0..ED_RANDOM_PAIRS {
        let (x, y) = (random_word(&mut rng, ED_RANDOM_LEN, b"acgt"), random_word(&mut rng, ED_RANDOM_LEN, b"acgt"));
        compare(&x, &y, MetricParams { tape_seed: rng.gen(), ..single_class() });
    }
    let kitten = edit_distance_report(b"kitten", b"sitting", MetricParams::default()).unwrap().value;
    let abc = lcs_report(b"ABCBDAB", b"BDCABA", MetricParams::default()).unwrap().value;
    report(
        6,
        "edit distance and LCS equal the DP",
        bad.is_empty() && kitten == 3 && abc == 4,
        format!(
            "{} exhaustive binary pairs, {ED_RANDOM_PAIRS} random pairs up to length {ED_RANDOM_LEN}, {} mismatches, ED(kitten, sitting) = {kitten}, LCS(ABCBDAB, BDCABA) = {abc}{}",
            all.len() * all.len(),
            bad.len(),
            bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c07_frechet() {
    let mut rng = rng(8);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..FRECHET_INSTANCES {
        let (a, b) = if k % 10 == 0 {
            (FRECHET_MAX_POINTS, FRECHET_MAX_POINTS)
        } else {
            (rng.gen_range(1..=FRECHET_MAX_POINTS), rng.gen_range(1..=FRECHET_MAX_POINTS))
        };
        let pts = |len: usize, rng: &mut ChaCha8Rng| -> Vec<(i64, i64)> {
            (0..len).map(|_| (rng.gen_range(-20..=20), rng.gen_range(-20..=20))).collect()
        };
        let (p, q) = (pts(a, &mut rng), pts(b, &mut rng));
        let start = Instant::now();
        let r = frechet_points(&p, &q, MetricParams { tape_seed: rng.gen(), ..Default::default() }).unwrap();
        if a == FRECHET_MAX_POINTS || b == FRECHET_MAX_POINTS {
            worst = worst.max(start.elapsed().as_secs_f64());
        }
        let want = dp_frechet(&squared_distances(&p, &q));
        if r.value != want || !r.stats.restored {
            bad.push(format!("{p:?} {q:?}: {} vs {want}", r.value));
        }
    }
    report(
        7,
        "Fréchet distance equals the DP",
        bad.is_empty() && worst <= FRECHET_MAX_SECS,
        format!(
            "{FRECHET_INSTANCES} instances up to {FRECHET_MAX_POINTS} points, {} mismatches, slowest n = {FRECHET_MAX_POINTS} run {worst:.2}s (limit {FRECHET_MAX_SECS}s){}",
            bad.len(),
            bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c08_register_allocation() {
    let mut rng = rng(9);
    let failures: Vec<String> = (0..ALLOC_TAPES).filter_map(|_| register_round_trip(&mut rng).err()).collect();
    report(
        8,
        "register allocation round trips",
        failures.is_empty(),
        format!(
            "{ALLOC_TAPES} tapes, p in {{5, 13, 257}}, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    );
}

#[test]
fn c09_hash_and_expander_statistics() {
    let mut rng = rng(10);
    let beta = BAD_DENSITY;
    let mut rates = Vec::new();
    for (n, set) in [(64usize, 4usize), (256, 16), (1024, 8)] {
        rates.push((n, set, hit_rate(n, set, beta, HIT_DRAWS, &mut rng).unwrap()));
    }
    let hit_ok = rates.iter().all(|&(_, _, r)| r >= 1.0 - beta - HIT_SLACK);
    let bad = planted_bad_set(32, BAD_DENSITY, &mut rng);
    let prof = confinement_profile(32, &bad, 6, 200_000, &mut rng);
    let slope = log_linear_slope(&prof);
    let decreasing = prof.windows(2).all(|w| w[1] < w[0]);
    report(
        9,
        "hash hitting and walk confinement",
        hit_ok && decreasing && slope < 0.0,
        format!(
            "hit rates {} (need >= {:.2}); confinement by K {:?}, log slope {slope:.3}",
            rates.iter().map(|(n, s, r)| format!("n={n},|B|={s}: {r:.3}")).collect::<Vec<_>>().join(", "),
            1.0 - beta - HIT_SLACK,
            prof.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn c10_resource_meters() {
    let mut rng = rng(11);
    let mut rows = Vec::new();
    for n in METER_SIZES {
        let edges = planted_path_digraph(n, 0, 1, 8, n, &mut rng);
        let g = Digraph::new(n, &edges).unwrap();
        let params = StconnParams::default();
        let (lambda, k, m) = multiset_shape(&g, &params).unwrap();
        let p = random_prime(n as u64, &mut rng).unwrap();
        let seed = SeedSpec::random(g.padded_count(), k, m, &mut rng).unwrap();
        let plan = sampled_plan(&g, 0, 1, lambda, seed, p).unwrap();
        let claimed = plan.catalytic_bits();
        // The free-space peak is reached on the first descent, so a short
        // budgeted run suffices; the aborted arena is discarded.
        let mut ws = Workspace::new(CatalyticArena::new(claimed + 64, ArenaInit::Random(rng.gen())).unwrap());
        match run_trial_budgeted(&mut ws, &plan, Some(64)) {
            Err(Error::BudgetExhausted) | Ok(_) => {}
            Err(e) => panic!("{e}"),
        }
        let free = ws.meter().free_bits_peak;
        let beta = 2.0 * n as f64 / (m as f64 * lambda as f64);
        let logp = 64 - (p - 1).leading_zeros();
        let model = (n / lambda) as f64 * logp as f64 * k as f64 / beta;
        let bound = 6.0 * (n / lambda) as f64 * logp as f64 * 8.0 * k as f64 * (n as f64).log2() / beta;
        rows.push((n, lambda, p, claimed as f64, model, bound, free as f64));
    }
    let c1 = (rows.iter().map(|r| (r.3 / r.4).ln()).sum::<f64>() / rows.len() as f64).exp();
    let within = rows.iter().all(|r| r.3 <= r.5 && r.3 / (c1 * r.4) <= METER_FACTOR && c1 * r.4 / r.3 <= METER_FACTOR);
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.6).collect();
    let (c3, c2) = linear_fit(&xs, &ys);
    let resid = xs.iter().zip(&ys).map(|(x, y)| ((c3 + c2 * x) - y).abs() / y).fold(0.0, f64::max);
    report(
        10,
        "resource meter trends",
        within && resid < FREE_FIT_RESIDUAL,
        format!(
            "{}; c1 = {c1:.2}; free peak ≈ {c2:.1}·log2 n + {c3:.1}, max residual {:.1}%",
            rows.iter()
                .map(|r| format!("n={} λ={} p={} claimed={} (bound {:.0}) free={}", r.0, r.1, r.2, r.3, r.5, r.6))
                .collect::<Vec<_>>()
                .join("; "),
            resid * 100.0
        ),
    );
}
