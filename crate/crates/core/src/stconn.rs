//! Directed s-t connectivity with sublinear catalytic space.
//!
//! `G'` is the input graph with a self-loop on every vertex. A seed picks a
//! vertex multiset `U`; the graph `H` has one vertex per entry of
//! `V_U = {s, t} ∪ U` (padded with dummies to a power of two) and weighs
//! each pair by the number of `λ`-step walks between their base vertices in
//! `G'`. SHORT adds `r_in · μ` using class-restricted propagation on `G'`;
//! LONG propagates over `H` with SHORT as the base case. The final scalar is
//! a sum over `s → t` walks, so it is zero whenever `t` is unreachable.

use std::io::BufRead;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arena::{ArenaInit, CatalyticArena, RegisterVector, Section, Workspace};
use crate::error::{invalid, Error, Result};
use crate::field::{cell_width, primes_in, random_prime_with, PrimeRange};
use crate::hitting::{HashSource, SeedSpec};
use crate::walkflow::{propagate, BaseCase, ColorClassing, Digraph, Direction, EdgeBase};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Independent random `(p, σ)` per trial.
    #[default]
    Randomized,
    /// Every `(p, σ)` pair; only for small seed spaces.
    Enumerate,
    /// `U = V` exactly once, `λ = 1`: the scalar counts length-`n` walks.
    ExactSmallU,
}

#[derive(Clone, Debug, Serialize)]
pub struct StconnParams {
    pub eps: f64,
    pub trials: usize,
    pub mode: Mode,
    /// Overrides the walk-length formula for `λ` (a power of two).
    pub lambda: Option<usize>,
    /// Expander walk length `K`; one hash function per walk vertex.
    pub walk_len: usize,
    /// Hash domain size `m`; defaults to filling `V_U` up to the padded
    /// vertex count.
    pub hash_domain: Option<usize>,
    pub prime_range: PrimeRange,
    /// Draw hash functions independently instead of by expander walk.
    pub ideal_hashing: bool,
}

impl Default for StconnParams {
    fn default() -> Self {
        StconnParams {
            eps: 1.0,
            trials: 5,
            mode: Mode::Randomized,
            lambda: None,
            walk_len: 1,
            hash_domain: None,
            prime_range: PrimeRange::Wide,
            ideal_hashing: false,
        }
    }
}

/// Limit on enumerated `(p, σ)` pairs.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

/// `2^ceil(sqrt((ε/2.1) log2 n))`, at least 2 and at most `cap`.
pub fn lambda_for(n: usize, eps: f64, cap: usize) -> usize {
    let lg = (n.max(2) as f64).log2();
    let e = ((eps / 2.1) * lg).sqrt().ceil() as u32;
    (1usize << e.min(30)).clamp(2, cap.max(2))
}

/// The entries of `V_U` and their base vertices in the walk graph.
#[derive(Clone, Debug)]
pub enum VertexSet {
    /// Entry 0 is `s`, entry 1 is `t`, then the seed's multiset, then dummies.
    Sampled { s: usize, t: usize, seed: SeedSpec, len: usize },
    /// Entry `e` is vertex `e`.
    Identity { len: usize },
}

impl VertexSet {
    pub fn len(&self) -> usize {
        match self {
            VertexSet::Sampled { len, .. } | VertexSet::Identity { len } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(entry, base vertex)` for every non-dummy entry in `range`.
    pub fn for_each(&self, range: Range<usize>, mut f: impl FnMut(usize, usize)) {
        match self {
            VertexSet::Identity { .. } => range.for_each(|e| f(e, e)),
            VertexSet::Sampled { s, t, seed, .. } => {
                let base = [*s, *t].into_iter().chain(seed.iter());
                for (e, v) in base.enumerate().take(range.end).skip(range.start) {
                    f(e, v);
                }
            }
        }
    }

    pub fn base_of(&self, e: usize) -> Option<usize> {
        match self {
            VertexSet::Identity { len } => (e < *len).then_some(e),
            VertexSet::Sampled { s, t, seed, .. } => match e {
                0 => Some(*s),
                1 => Some(*t),
                _ => seed.rep_vertex(e - 2).ok(),
            },
        }
    }
}

/// Everything fixed for one trial.
#[derive(Clone, Debug)]
pub struct TrialPlan {
    /// `G'`, or `G'` plus a delay chain in exact mode.
    pub walk_graph: Digraph,
    pub lambda: usize,
    pub set: VertexSet,
    pub source: Range<usize>,
    pub target: Range<usize>,
    pub p: u64,
}

impl TrialPlan {
    /// Arena bits claimed by the six scratch vectors.
    pub fn catalytic_bits(&self) -> usize {
        let short = self.walk_graph.padded_count() / self.lambda;
        3 * RegisterVector::footprint(short, self.p) + 3 * RegisterVector::footprint(self.set.len(), self.p)
    }
}

fn check_endpoints(g: &Digraph, s: usize, t: usize) -> Result<()> {
    let n = g.vertex_count();
    if s >= n || t >= n {
        return Err(invalid(format!("endpoint outside {n} vertices")));
    }
    Ok(())
}

/// Plan for a sampled-multiset trial with the given prime and seed.
pub fn sampled_plan(g: &Digraph, s: usize, t: usize, lambda: usize, seed: SeedSpec, p: u64) -> Result<TrialPlan> {
    check_endpoints(g, s, t)?;
    let walk_graph = g.with_self_loops();
    if seed.range() != walk_graph.padded_count() {
        return Err(invalid("seed range differs from the padded vertex count"));
    }
    if !lambda.is_power_of_two() || lambda > walk_graph.padded_count() {
        return Err(invalid(format!("λ = {lambda} is not a power of two within range")));
    }
    let len = (2 + seed.size()).next_power_of_two();
    Ok(TrialPlan {
        walk_graph,
        lambda,
        set: VertexSet::Sampled { s, t, seed, len },
        source: 0..1,
        target: 1..2,
        p,
    })
}

/// Plan for `U = V`, `λ = 1`: a chain of padding vertices after `t` makes
/// walks of the padded length end at the chain's tail exactly when they
/// sit at `t` after `n` steps.
pub fn exact_plan(g: &Digraph, s: usize, t: usize, p: u64) -> Result<TrialPlan> {
    check_endpoints(g, s, t)?;
    let n = g.vertex_count();
    let big = n.next_power_of_two();
    let mut edges: Vec<(usize, usize)> = g.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
    edges.extend((0..n).map(|v| (v, v)));
    let mut last = t;
    for c in n..big {
        edges.push((last, c));
        last = c;
    }
    let walk_graph = Digraph::new(big, &edges)?;
    Ok(TrialPlan {
        walk_graph,
        lambda: 1,
        set: VertexSet::Identity { len: big },
        source: s..s + 1,
        target: last..last + 1,
        p,
    })
}

/// SHORT and the state it needs.
struct Short<'a> {
    set: &'a VertexSet,
    classing: ColorClassing,
    level: u32,
    edge: EdgeBase<'a>,
    r: [Section; 3],
    calls: u64,
    budget: Option<u64>,
    counter_bits: usize,
}

#[derive(Clone, Copy)]
enum Op {
    Out(bool),
    In(bool),
    P(bool),
}

/// The interfacing program; its inverse is the reversed text with signs
/// flipped.
const PROGRAM: [Op; 10] = [
    Op::Out(false),
    Op::P(false),
    Op::Out(true),
    Op::P(true),
    Op::In(true),
    Op::Out(false),
    Op::P(true),
    Op::Out(true),
    Op::P(false),
    Op::In(false),
];

fn op_at(k: usize, positive: bool) -> Op {
    if positive {
        PROGRAM[k]
    } else {
        match PROGRAM[PROGRAM.len() - 1 - k] {
            Op::Out(s) => Op::Out(!s),
            Op::In(s) => Op::In(!s),
            Op::P(s) => Op::P(!s),
        }
    }
}

impl Short<'_> {
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        ws: &mut Workspace,
        vin: Range<usize>,
        vout: Range<usize>,
        r_in: Section,
        r_out: Section,
        positive: bool,
    ) -> Result<()> {
        self.calls += 1;
        if self.budget.is_some_and(|b| self.calls > b) {
            return Err(Error::BudgetExhausted);
        }
        ws.meter_mut().acquire_free(self.counter_bits);
        let classes = self.classing.classes();
        let [r1, r2, r3] = self.r;
        let cl = self.classing;
        for pair in 0..classes * classes {
            let pair = if positive { pair } else { classes * classes - 1 - pair };
            let (c_in, c_out) = (pair / classes, pair % classes);
            for k in 0..PROGRAM.len() {
                match op_at(k, positive) {
                    Op::Out(sign) => self.set.for_each(vout.clone(), |e, v| {
                        if cl.color_of(v) == c_out {
                            let x = ws.get(r2, cl.index_in_class(v));
                            ws.add_signed(r_out, e - vout.start, x, sign);
                        }
                    }),
                    Op::In(sign) => self.set.for_each(vin.clone(), |e, v| {
                        if cl.color_of(v) == c_in {
                            let x = ws.get(r_in, e - vin.start);
                            ws.add_signed(r1, cl.index_in_class(v), x, sign);
                        }
                    }),
                    Op::P(sign) => {
                        let dir = if sign { Direction::Forward } else { Direction::Inverse };
                        propagate(ws, self.level, c_in, c_out, r1, r2, r3, cl, &mut self.edge, dir)?;
                    }
                }
            }
        }
        ws.meter_mut().release_free(self.counter_bits);
        Ok(())
    }
}

impl BaseCase for Short<'_> {
    fn apply(
        &mut self,
        ws: &mut Workspace,
        _c_in: usize,
        _c_out: usize,
        r_in: Section,
        r_out: Section,
        _r_mid: Section,
        positive: bool,
    ) -> Result<()> {
        let all = 0..self.set.len();
        self.run(ws, all.clone(), all, r_in, r_out, positive)
    }
}

/// LONG: adds `r_in · W` over `H` (walks of `|V_U|` steps) to `r_out`.
#[allow(clippy::too_many_arguments)]
fn long(
    ws: &mut Workspace,
    short: &mut Short<'_>,
    l: [Section; 3],
    vin: Range<usize>,
    vout: Range<usize>,
    r_in: Section,
    r_out: Section,
    positive: bool,
) -> Result<()> {
    let size = short.set.len();
    let classing = ColorClassing::new(size, 1)?;
    let level = size.trailing_zeros();
    let [l1, l2, l3] = l;
    let bits = 4 + usize::BITS as usize - size.leading_zeros() as usize;
    ws.meter_mut().acquire_free(bits);
    for k in 0..PROGRAM.len() {
        match op_at(k, positive) {
            Op::Out(sign) => {
                for e in vout.clone() {
                    let x = ws.get(l2, e);
                    ws.add_signed(r_out, e - vout.start, x, sign);
                }
            }
            Op::In(sign) => {
                for e in vin.clone() {
                    let x = ws.get(r_in, e - vin.start);
                    ws.add_signed(l1, e, x, sign);
                }
            }
            Op::P(sign) => {
                let dir = if sign { Direction::Forward } else { Direction::Inverse };
                propagate(ws, level, 0, 0, l1, l2, l3, classing, short, dir)?;
            }
        }
    }
    ws.meter_mut().release_free(bits);
    Ok(())
}

/// What one trial did.
#[derive(Clone, Debug, Serialize)]
pub struct TrialTrace {
    pub p: u64,
    pub sigma: String,
    pub scalar: u64,
    pub restored: bool,
}

/// Counts and meters of one trial.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct TrialStats {
    pub short_calls: u64,
    pub base_calls: u64,
    pub catalytic_bits: usize,
    pub free_bits_peak: usize,
}

/// Runs one trial on `ws`, whose arena must have room for the plan's
/// vectors. Returns the final scalar.
pub fn run_trial(ws: &mut Workspace, plan: &TrialPlan) -> Result<(u64, TrialStats)> {
    run_trial_budgeted(ws, plan, None)
}

/// As [`run_trial`], aborting with `BudgetExhausted` after `budget` SHORT
/// calls. An aborted trial leaves the arena modified.
pub fn run_trial_budgeted(ws: &mut Workspace, plan: &TrialPlan, budget: Option<u64>) -> Result<(u64, TrialStats)> {
    let p = plan.p;
    let m = plan.walk_graph.padded_count();
    let classing = ColorClassing::new(m, plan.lambda)?;
    let size = plan.set.len();
    let peak_before = ws.meter().free_bits_peak;
    ws.meter_mut().reset_peaks();
    let cat_before = ws.meter().catalytic_bits_current;
    let base_before = ws.counters.base_calls;
    let r_in = ws.alloc_free(1, p);
    let r_out = ws.alloc_free(1, p);
    ws.add(r_in, 0, 1);
    let mut vecs = Vec::with_capacity(6);
    for len in [m / plan.lambda; 3].into_iter().chain([size; 3]) {
        vecs.push(ws.alloc_catalytic(len, p)?);
    }
    let claimed = ws.meter().catalytic_bits_current - cat_before;
    let lg = |x: usize| (usize::BITS - x.leading_zeros()) as usize;
    let mut short = Short {
        set: &plan.set,
        classing,
        level: plan.lambda.trailing_zeros(),
        edge: EdgeBase::new(&plan.walk_graph, classing, p),
        r: [vecs[0], vecs[1], vecs[2]],
        calls: 0,
        budget,
        counter_bits: 2 * lg(plan.lambda) + 4 + lg(size) + cell_width(p) as usize,
    };
    long(ws, &mut short, [vecs[3], vecs[4], vecs[5]], plan.source.clone(), plan.target.clone(), r_in, r_out, true)?;
    let scalar = ws.get(r_out, 0);
    let stats = TrialStats {
        short_calls: short.calls,
        base_calls: ws.counters.base_calls - base_before,
        catalytic_bits: claimed,
        free_bits_peak: ws.meter().free_bits_peak,
    };
    for v in vecs.into_iter().rev() {
        ws.release(v)?;
    }
    ws.release(r_out)?;
    ws.release(r_in)?;
    let m = ws.meter_mut();
    m.free_bits_peak = m.free_bits_peak.max(peak_before);
    Ok((scalar, stats))
}

fn sigma_string(seed: &SeedSpec) -> String {
    match &seed.source {
        HashSource::Walk { start, steps } => {
            let k = seed.range().trailing_zeros() as usize;
            let mut s = String::new();
            for st in steps.iter().rev() {
                s.push_str(&format!("{st:03b}"));
            }
            s.push_str(&format!("{:0k$b}{:0k$b}", start.1, start.0));
            s
        }
        HashSource::Ideal(fs) => fs.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(","),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StconnReport {
    pub connected: bool,
    pub lambda: usize,
    pub multiset_entries: usize,
    pub seed_bits: usize,
    pub trials: Vec<TrialTrace>,
    pub stats: Vec<TrialStats>,
}

impl StconnReport {
    pub fn restored(&self) -> bool {
        self.trials.iter().all(|t| t.restored)
    }
}

/// Resolved shape of the sampled multiset for `g`.
pub fn multiset_shape(g: &Digraph, params: &StconnParams) -> Result<(usize, usize, usize)> {
    let n_pad = g.padded_count().max(2);
    let lambda = match params.lambda {
        Some(l) if l.is_power_of_two() && l <= n_pad => l,
        Some(l) => return Err(invalid(format!("λ = {l} must be a power of two at most {n_pad}"))),
        None => lambda_for(g.vertex_count(), params.eps, n_pad),
    };
    if params.walk_len == 0 {
        return Err(invalid("walk length must be positive"));
    }
    let domain = match params.hash_domain {
        Some(m) => m,
        None => ((n_pad.max(4) - 2) / params.walk_len).max(1),
    };
    if domain == 0 || domain > n_pad {
        return Err(invalid(format!("hash domain {domain} outside 1..={n_pad}")));
    }
    Ok((lambda, params.walk_len, domain))
}

/// Runs `plan` on a new arena of pseudo-random contents drawn from
/// `tape_seed`. Returns the scalar, the meters and whether the arena was
/// restored.
pub fn run_plan_fresh(plan: &TrialPlan, tape_seed: u64) -> Result<(u64, TrialStats, bool)> {
    let arena = CatalyticArena::new(plan.catalytic_bits() + 64, ArenaInit::Random(tape_seed))?;
    let mut ws = Workspace::new(arena);
    let (scalar, stats) = run_trial(&mut ws, plan)?;
    Ok((scalar, stats, ws.verify_restored()))
}

fn run_plan<R: Rng + ?Sized>(plan: &TrialPlan, sigma: String, rng: &mut R) -> Result<(TrialTrace, TrialStats)> {
    let (scalar, stats, restored) = run_plan_fresh(plan, rng.next_u64())?;
    Ok((TrialTrace { p: plan.p, sigma, scalar, restored }, stats))
}

/// Decides whether `t` is reachable from `s`. Never answers `connected`
/// for an unreachable pair.
pub fn stconn<R: Rng + ?Sized>(g: &Digraph, s: usize, t: usize, params: &StconnParams, rng: &mut R) -> Result<StconnReport> {
    check_endpoints(g, s, t)?;
    let mut report = StconnReport {
        connected: false,
        lambda: 0,
        multiset_entries: 0,
        seed_bits: 0,
        trials: Vec::new(),
        stats: Vec::new(),
    };
    if s == t {
        report.connected = true;
        return Ok(report);
    }
    let n = g.vertex_count() as u64;
    let record = |report: &mut StconnReport, (trace, stats): (TrialTrace, TrialStats)| {
        report.connected |= trace.scalar != 0;
        report.trials.push(trace);
        report.stats.push(stats);
    };
    match params.mode {
        Mode::ExactSmallU => {
            report.lambda = 1;
            report.multiset_entries = g.vertex_count().next_power_of_two();
            for _ in 0..params.trials.max(1) {
                let p = random_prime_with(n.max(4), params.prime_range, rng)?;
                let plan = exact_plan(g, s, t, p)?;
                record(&mut report, run_plan(&plan, String::new(), rng)?);
                if report.connected {
                    break;
                }
            }
        }
        Mode::Randomized => {
            let (lambda, k, m) = multiset_shape(g, params)?;
            let n_pad = g.padded_count().max(2);
            report.lambda = lambda;
            report.multiset_entries = (2 + k * m).next_power_of_two();
            for _ in 0..params.trials.max(1) {
                let p = random_prime_with(n.max(4), params.prime_range, rng)?;
                let seed = if params.ideal_hashing {
                    SeedSpec::ideal(n_pad, k, m, rng)?
                } else {
                    SeedSpec::random(n_pad, k, m, rng)?
                };
                report.seed_bits = seed.seed_bits();
                let sigma = sigma_string(&seed);
                let plan = sampled_plan(g, s, t, lambda, seed, p)?;
                record(&mut report, run_plan(&plan, sigma, rng)?);
                if report.connected {
                    break;
                }
            }
        }
        Mode::Enumerate => {
            let (lambda, k, m) = multiset_shape(g, params)?;
            let n_pad = g.padded_count().max(2);
            let (lo, hi) = params.prime_range.bounds(n.max(4));
            let primes = primes_in(lo, hi);
            let seeds = SeedSpec::seed_space(n_pad, k).unwrap_or(u64::MAX);
            if seeds.saturating_mul(primes.len() as u64) > ENUMERATION_LIMIT {
                return Err(invalid("(p, σ) space too large to enumerate"));
            }
            report.lambda = lambda;
            report.multiset_entries = (2 + k * m).next_power_of_two();
            'outer: for &p in &primes {
                for index in 0..seeds {
                    let seed = SeedSpec::from_index(n_pad, k, m, index)?;
                    report.seed_bits = seed.seed_bits();
                    let sigma = sigma_string(&seed);
                    let plan = sampled_plan(g, s, t, lambda, seed, p)?;
                    record(&mut report, run_plan(&plan, sigma, rng)?);
                    if report.connected {
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Convenience wrapper seeding the generator from an integer.
pub fn stconn_seeded(g: &Digraph, s: usize, t: usize, params: &StconnParams, seed: u64) -> Result<StconnReport> {
    stconn(g, s, t, params, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Reads the edge-list format: a header `n m`, then `m` lines `u v`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_edge_list<R: BufRead>(input: R) -> Result<Digraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let parse = |f: &str| -> Result<usize> {
            f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected a non-negative integer, found {f:?}"),
            })
        };
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two fields, found {}", fields.len()),
            });
        }
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        match header {
            None => header = Some((a, b)),
            Some((n, _)) => {
                if a >= n || b >= n {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("vertex outside 0..{n}"),
                    });
                }
                edges.push((a, b));
            }
        }
    }
    let (n, m) = header.ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    if edges.len() != m {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    Digraph::new(n, &edges)
}
