//! Self-check campaigns run from the command line: each suite draws random
//! instances from one seed and compares the engines against the brute-force
//! oracles in [`crate::testkit`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arena::{ArenaInit, CatalyticArena, RegisterVector, Workspace};
use crate::error::{invalid, Error, Result};
use crate::field::random_prime;
use crate::grid::{grid_path_weight_fresh, GridParams};
use crate::hitting::{confinement_profile, hash_eval, hit_rate, planted_bad_set, rep_check, Gf2k, HashFn, SeedSpec};
use crate::metrics::{edit_distance_report, frechet_matrix, lcs_report, MetricParams};
use crate::stconn::{exact_plan, run_plan_fresh, stconn_seeded, Mode, StconnParams};
use crate::testkit::{
    adjacency, dp_ed, dp_frechet, dp_lcs, grid_dp_oracle, hashed_grid_weight, log_linear_slope, mat_pow, random_digraph,
    reachable, walk_count_oracle,
};
use crate::walkflow::{propagate, ColorClassing, Digraph, Direction, EdgeBase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Suite {
    Arena,
    Walkflow,
    Hitting,
    Stconn,
    Grid,
    Metrics,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Arena, Suite::Walkflow, Suite::Hitting, Suite::Stconn, Suite::Grid, Suite::Metrics];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Arena => "arena",
            Suite::Walkflow => "walkflow",
            Suite::Hitting => "hitting",
            Suite::Stconn => "stconn",
            Suite::Grid => "grid",
            Suite::Metrics => "metrics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite {s:?}")))
    }
}

/// Outcome of one named property over all iterations.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// First failure message, if any.
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub iterations: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }
}

type Outcome = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

struct Runner {
    rng: ChaCha8Rng,
    iterations: usize,
    checks: Vec<CheckResult>,
}

impl Runner {
    fn run(&mut self, name: &str, times: usize, mut f: impl FnMut(&mut ChaCha8Rng) -> Outcome) {
        let mut res = CheckResult { name: name.to_string(), passed: 0, failed: 0, first_failure: None };
        for _ in 0..times {
            match f(&mut self.rng) {
                Ok(()) => res.passed += 1,
                Err(msg) => {
                    res.failed += 1;
                    res.first_failure.get_or_insert(msg);
                }
            }
        }
        self.checks.push(res);
    }
}

/// Runs `suite` for `iterations` random instances per property.
pub fn run_suite(suite: Suite, iterations: usize, seed: u64) -> SuiteReport {
    let mut r = Runner { rng: ChaCha8Rng::seed_from_u64(seed), iterations, checks: Vec::new() };
    match suite {
        Suite::Arena => arena_suite(&mut r),
        Suite::Walkflow => walkflow_suite(&mut r),
        Suite::Hitting => hitting_suite(&mut r),
        Suite::Stconn => stconn_suite(&mut r),
        Suite::Grid => grid_suite(&mut r),
        Suite::Metrics => metrics_suite(&mut r),
    }
    SuiteReport { suite, iterations, seed, checks: r.checks }
}

/// One alloc/add/read/release cycle on a random tape.
pub fn register_round_trip(rng: &mut impl Rng) -> Outcome {
    let p = [5u64, 13, 257][rng.gen_range(0..3)];
    let m = rng.gen_range(1..=64);
    let bits = RegisterVector::footprint(m, p) + rng.gen_range(0..64);
    let init = match rng.gen_range(0..8) {
        0 => ArenaInit::Zeros,
        1 => ArenaInit::Ones,
        _ => ArenaInit::Random(rng.gen()),
    };
    let mut arena = lift(CatalyticArena::new(bits, init))?;
    let mut v = lift(RegisterVector::alloc(&mut arena, m, p))?;
    let before: Vec<u64> = (0..m).map(|i| v.read(&arena, i).unwrap_or(u64::MAX)).collect();
    ensure(before.iter().all(|&x| x < p), || format!("register out of range after alloc (p={p}, m={m})"))?;
    let deltas: Vec<u64> = (0..m).map(|_| rng.gen_range(0..p)).collect();
    for (i, &d) in deltas.iter().enumerate() {
        lift(v.add(&mut arena, i, d))?;
    }
    for i in 0..m {
        let got = lift(v.read(&arena, i))?;
        ensure(got == (before[i] + deltas[i]) % p, || format!("register {i} holds {got} (p={p}, m={m})"))?;
    }
    for (i, &d) in deltas.iter().enumerate() {
        lift(v.add(&mut arena, i, (p - d) % p))?;
    }
    lift(v.release(&mut arena))?;
    ensure(arena.verify_restored(), || format!("tape differs at bit {:?} (p={p}, m={m})", arena.first_difference()))
}

fn arena_suite(r: &mut Runner) {
    let n = r.iterations;
    r.run("register round trip restores the tape", n, register_round_trip);
    r.run("single bit flip is detected", n, |rng| {
        let bits = rng.gen_range(1..4096);
        let mut a = lift(CatalyticArena::new(bits, ArenaInit::Random(rng.gen())))?;
        let k = rng.gen_range(0..bits);
        a.flip_bit(k);
        ensure(!a.verify_restored() && a.first_difference() == Some(k), || format!("flip at {k} missed"))?;
        a.flip_bit(k);
        ensure(a.verify_restored(), || "flip back not recognised".into())
    });
}

/// Random weighted digraph on `n` vertices with loops, weights below `p`.
pub fn random_weighted_digraph(rng: &mut impl Rng, n: usize, p: u64) -> Vec<(usize, usize, u64)> {
    let q = rng.gen_range(0.05..0.5);
    let mut pairs = random_digraph(n, q, rng);
    pairs.extend((0..n).filter(|_| rng.gen_bool(0.3)).map(|v| (v, v)));
    pairs.into_iter().map(|(u, v)| (u, v, rng.gen_range(0..p))).collect()
}

/// One propagate call on a random graph checked against `A^(2^ℓ)`, then
/// undone by the inverse program.
pub fn walkflow_instance(rng: &mut impl Rng, max_log_m: u32) -> Outcome {
    let n = rng.gen_range(1..=1usize << max_log_m);
    let p = lift(random_prime(64, rng))?;
    let edges = random_weighted_digraph(rng, n, p);
    let m = n.next_power_of_two();
    let classes = [1usize, 2, 4][rng.gen_range(0..3)].min(m);
    let level = rng.gen_range(0..=m.trailing_zeros());
    let (c_in, c_out) = (rng.gen_range(0..classes), rng.gen_range(0..classes));
    walkflow_case(rng, n, &edges, p, classes, level, c_in, c_out)
}

/// Runs propagate on the given graph from a random tape and compares the
/// net change of `r_out` with `r_in · A^(2^level)`.
#[allow(clippy::too_many_arguments)]
pub fn walkflow_case(
    rng: &mut impl Rng,
    n: usize,
    edges: &[(usize, usize, u64)],
    p: u64,
    classes: usize,
    level: u32,
    c_in: usize,
    c_out: usize,
) -> Outcome {
    let g = lift(Digraph::weighted(n, edges))?;
    let m = g.padded_count();
    let cl = lift(ColorClassing::new(m, classes))?;
    let size = cl.class_size();
    let bits = 3 * RegisterVector::footprint(size, p) + 64;
    let mut ws = Workspace::new(lift(CatalyticArena::new(bits, ArenaInit::Random(rng.gen())))?);
    let mut sec = Vec::new();
    for _ in 0..3 {
        sec.push(lift(ws.alloc_catalytic(size, p))?);
    }
    let (r_in, r_out, r_mid) = (sec[0], sec[1], sec[2]);
    let (x, y0, z0) = (ws.values(r_in), ws.values(r_out), ws.values(r_mid));
    let mut base = EdgeBase::new(&g, cl, p);
    lift(propagate(&mut ws, level, c_in, c_out, r_in, r_out, r_mid, cl, &mut base, Direction::Forward))?;
    let a = mat_pow(&adjacency(m, edges, p), 1 << level, p);
    for j in 0..size {
        let want = (0..size).fold(y0[j], |acc, i| (acc + x[i] * a[c_in * size + i][c_out * size + j]) % p);
        let got = ws.get(r_out, j);
        ensure(got == want, || format!("n={n} C={classes} ℓ={level}: r_out[{j}] = {got}, expected {want}"))?;
    }
    ensure(ws.values(r_in) == x && ws.values(r_mid) == z0, || "r_in or r_mid disturbed".into())?;
    lift(propagate(&mut ws, level, c_in, c_out, r_in, r_out, r_mid, cl, &mut base, Direction::Inverse))?;
    for s in sec.into_iter().rev() {
        lift(ws.release(s))?;
    }
    ensure(ws.verify_restored(), || format!("n={n} C={classes} ℓ={level}: tape not restored"))
}

fn walkflow_suite(r: &mut Runner) {
    let n = r.iterations;
    r.run("propagate equals the matrix power and its inverse restores", n, |rng| walkflow_instance(rng, 5));
}

fn hitting_suite(r: &mut Runner) {
    let n = r.iterations;
    r.run("pairwise independence over GF(2^4)", 1, |_| {
        let f = lift(Gf2k::new(4))?;
        for (x1, x2) in [(0u64, 1u64), (3, 9), (14, 15)] {
            let mut count = vec![0u32; 256];
            for a in 0..16 {
                for b in 0..16 {
                    let h = HashFn::new(a, b, f);
                    count[(h.apply(x1) * 16 + h.apply(x2)) as usize] += 1;
                }
            }
            ensure(count.iter().all(|&c| c == 1), || format!("pair ({x1}, {x2}) not uniform"))?;
        }
        Ok(())
    });
    r.run("hash hits a random set with probability at least 1 - β - 0.05", n.div_ceil(10).max(1), |rng| {
        let rate = lift(hit_rate(256, 16, 0.25, 1000, rng))?;
        ensure(rate >= 0.70, || format!("hit rate {rate}"))
    });
    r.run("walk confinement decays with walk length", n.div_ceil(10).max(1), |rng| {
        let bad = planted_bad_set(32, 0.25, rng);
        let prof = confinement_profile(32, &bad, 5, 20_000, rng);
        ensure(log_linear_slope(&prof) < 0.0 && prof.windows(2).all(|w| w[1] < w[0]), || format!("{prof:?}"))
    });
    r.run("multiset elements are pure and in range", n, |rng| {
        let seed = lift(SeedSpec::random(32, 4, 8, rng))?;
        let i = rng.gen_range(0..seed.size());
        let (u, v) = (lift(seed.rep_vertex(i))?, lift(seed.rep_vertex(i))?);
        let h = seed.hash_at(i / 8);
        ensure(u == v && u < 32 && lift(hash_eval(&h, (i % 8) as u64, 8))? as usize == u, || format!("element {i}"))
    });
    r.run("a multiset covering every vertex is representative", n, |rng| {
        let edges = random_digraph(8, 0.2, rng);
        let seed = lift(SeedSpec::from_index(8, 1, 8, 1))?;
        ensure(rep_check(8, &edges, &seed, 1), || format!("{edges:?}"))
    });
}

fn stconn_suite(r: &mut Runner) {
    let n = r.iterations;
    r.run("never accepts an unreachable pair", n, |rng| {
        let vn = rng.gen_range(2..=5);
        let edges = random_digraph(vn, rng.gen_range(0.1..0.5), rng);
        let g = lift(Digraph::new(vn, &edges))?;
        let (s, t) = (rng.gen_range(0..vn), rng.gen_range(0..vn));
        let params = StconnParams { eps: 1.0, trials: 3, ..Default::default() };
        let rep = lift(stconn_seeded(&g, s, t, &params, rng.gen()))?;
        ensure(rep.restored(), || "tape not restored".into())?;
        ensure(!rep.connected || reachable(vn, &edges, s)[t], || format!("false accept n={vn} s={s} t={t} {edges:?}"))
    });
    r.run("exact mode counts length-n walks with loops", n, |rng| {
        let vn = rng.gen_range(2..=6);
        let edges = random_digraph(vn, rng.gen_range(0.1..0.5), rng);
        let g = lift(Digraph::new(vn, &edges))?;
        let (s, t) = (rng.gen_range(0..vn), rng.gen_range(0..vn));
        let p = lift(random_prime(64, rng))?;
        let (scalar, _, restored) = lift(run_plan_fresh(&lift(exact_plan(&g, s, t, p))?, rng.gen()))?;
        let want = walk_count_oracle(vn, &g.with_self_loops().edges(), vn as u64, p)[s][t];
        ensure(restored && scalar == want, || format!("n={vn} s={s} t={t}: {scalar} vs {want}"))
    });
    r.run("exact mode decides reachability", n, |rng| {
        let vn = rng.gen_range(2..=6);
        let edges = random_digraph(vn, rng.gen_range(0.1..0.5), rng);
        let g = lift(Digraph::new(vn, &edges))?;
        let (s, t) = (rng.gen_range(0..vn), rng.gen_range(0..vn));
        let params = StconnParams { mode: Mode::ExactSmallU, trials: 3, ..Default::default() };
        let rep = lift(stconn_seeded(&g, s, t, &params, rng.gen()))?;
        ensure(rep.connected == reachable(vn, &edges, s)[t], || format!("n={vn} s={s} t={t} {edges:?}"))
    });
}

/// A random grid instance checked against the layered DP.
pub fn grid_instance(rng: &mut impl Rng, n: usize) -> Outcome {
    let p = [13u64, 101, 65_537, 1_000_003][rng.gen_range(0..4)];
    let weight = hashed_grid_weight(rng.gen(), p);
    let l_u = rng.gen_range(0..n);
    let u = (l_u, rng.gen_range(0..=n));
    let v = (rng.gen_range(l_u + 1..=n), rng.gen_range(0..=n));
    let want = grid_dp_oracle(n, |i, j, k| weight((i, j), (i + 1, k)), u, v, p);
    let classes = [1usize, 2, 4][rng.gen_range(0..3)].min(n.next_power_of_two());
    let params = GridParams { classes: Some(classes), ..Default::default() };
    let (got, _, restored) = lift(grid_path_weight_fresh(n, u, v, &weight, p, params, ArenaInit::Random(rng.gen())))?;
    ensure(got == want && restored, || format!("n={n} u={u:?} v={v:?} C={classes}: {got} vs {want}, restored={restored}"))
}

fn grid_suite(r: &mut Runner) {
    let n = r.iterations;
    r.run("grid path weight equals the layered DP", n, |rng| {
        let side = [2, 4, 8][rng.gen_range(0..3)];
        grid_instance(rng, side)
    });
}

fn random_word(rng: &mut impl Rng, max_len: usize, alphabet: &[u8]) -> Vec<u8> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn metrics_suite(r: &mut Runner) {
    let n = r.iterations;
    let fast = MetricParams { grid: GridParams { classes: Some(1), ..Default::default() }, ..Default::default() };
    r.run("edit distance equals the DP", n, |rng| {
        let (x, y) = (random_word(rng, 6, b"ab"), random_word(rng, 6, b"ab"));
        let rep = lift(edit_distance_report(&x, &y, MetricParams { tape_seed: rng.gen(), ..fast }))?;
        ensure(rep.value == dp_ed(&x, &y) && rep.stats.restored, || format!("{x:?} {y:?}: {}", rep.value))
    });
    r.run("LCS equals the DP", n, |rng| {
        let (x, y) = (random_word(rng, 6, b"acgt"), random_word(rng, 6, b"acgt"));
        let rep = lift(lcs_report(&x, &y, MetricParams { tape_seed: rng.gen(), ..fast }))?;
        ensure(rep.value == dp_lcs(&x, &y) && rep.stats.restored, || format!("{x:?} {y:?}: {}", rep.value))
    });
    r.run("Fréchet distance equals the DP", n, |rng| {
        let (a, b) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let d: Vec<Vec<u64>> = (0..a).map(|_| (0..b).map(|_| rng.gen_range(0..20)).collect()).collect();
        let rep = lift(frechet_matrix(&d, MetricParams { tape_seed: rng.gen(), ..fast }))?;
        ensure(rep.value == dp_frechet(&d) && rep.stats.restored, || format!("{d:?}: {}", rep.value))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn every_suite_passes() {
        for s in Suite::ALL {
            let rep = run_suite(s, 3, 7);
            assert!(rep.passed(), "{s}: {:?}", rep.checks);
        }
    }

    #[test]
    fn grid_suite_counts_matches() {
        let rep = run_suite(Suite::Grid, 20, 1);
        assert_eq!(rep.checks[0].passed, 20);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = serde_json::to_string(&run_suite(Suite::Metrics, 2, 9)).unwrap();
        let b = serde_json::to_string(&run_suite(Suite::Metrics, 2, 9)).unwrap();
        assert_eq!(a, b);
    }
}
