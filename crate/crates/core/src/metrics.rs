//! Edit distance, LCS and discrete Fréchet distance as grid path weights.
//!
//! An alignment graph on `(i', j')`, `0 ≤ i' ≤ a`, `0 ≤ j' ≤ b`, sits in
//! `Grid_{a+b, a+b}` rotated by 45 degrees: `(i', j')` becomes layer
//! `i' + j'`, row `a − i' + j'`. Steps in `i'` or `j'` alone are diagonal
//! grid edges; a step in both takes two straight edges through an
//! auxiliary vertex. Paths from `(0, a)` to `(a+b, b)` biject with
//! alignment paths.
//!
//! ED and LCS weigh a path of cost `w` by `16^{L·w}`, `L = max(a, b, 1)`,
//! so the path count of each cost occupies its own `4L`-bit window of the
//! total. The total is recovered from its residues modulo the first primes.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arena::{ArenaInit, CatalyticArena, Workspace};
use crate::error::{invalid, Result};
use crate::field::{first_primes, is_prime, pow_mod};
use crate::grid::{grid_path_weight, GridParams, GridPlan, GridVertex, WeightOracle};

/// Shape of an alignment grid for sequences of lengths `a` and `b`
/// (edge counts, so one less than point counts for Fréchet).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Embedding {
    pub a: usize,
    pub b: usize,
}

impl Embedding {
    pub fn side(&self) -> usize {
        self.a + self.b
    }

    pub fn source(&self) -> GridVertex {
        (0, self.a)
    }

    pub fn target(&self) -> GridVertex {
        (self.a + self.b, self.b)
    }

    pub fn to_grid(&self, (i, j): (usize, usize)) -> GridVertex {
        (i + j, self.a - i + j)
    }

    /// The alignment vertex at a grid vertex, or `None` for auxiliary and
    /// out-of-range vertices.
    pub fn real(&self, (l, r): GridVertex) -> Option<(usize, usize)> {
        let d = (l + r).checked_sub(self.a)?;
        if d % 2 == 1 {
            return None;
        }
        let j = d / 2;
        let i = l.checked_sub(j)?;
        (i <= self.a && j <= self.b).then_some((i, j))
    }
}

/// How alignment steps are weighted.
#[derive(Clone, Copy, Debug)]
pub enum Rule<'a> {
    /// Indels and substitutions cost one digit; matches are free.
    EditDistance { x: &'a [u8], y: &'a [u8] },
    /// Matches cost one digit; everything else is free.
    Lcs { x: &'a [u8], y: &'a [u8] },
    /// Unit weights on edges between pairs within distance `m`.
    Frechet { d: &'a [Vec<u64>], m: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Down,
    Right,
    Diagonal,
}

/// Edge weights of an embedded alignment graph modulo `p`.
pub struct AlignmentOracle<'a> {
    shape: Embedding,
    rule: Rule<'a>,
    p: u64,
    digit: u64,
}

impl<'a> AlignmentOracle<'a> {
    pub fn new(shape: Embedding, rule: Rule<'a>, p: u64) -> Self {
        let l = shape.a.max(shape.b).max(1) as u64;
        AlignmentOracle { shape, rule, p, digit: pow_mod(16, l, p) }
    }

    fn step_weight(&self, (i, j): (usize, usize), step: Step) -> u64 {
        let (ti, tj) = match step {
            Step::Down => (i + 1, j),
            Step::Right => (i, j + 1),
            Step::Diagonal => (i + 1, j + 1),
        };
        if ti > self.shape.a || tj > self.shape.b {
            return 0;
        }
        let one = 1 % self.p;
        match self.rule {
            Rule::EditDistance { x, y } => match step {
                Step::Diagonal if x[i] == y[j] => one,
                _ => self.digit,
            },
            Rule::Lcs { x, y } => match step {
                Step::Diagonal if x[i] == y[j] => self.digit,
                _ => one,
            },
            Rule::Frechet { d, m } => u64::from(d[i][j] <= m && d[ti][tj] <= m) % self.p,
        }
    }
}

impl WeightOracle for AlignmentOracle<'_> {
    fn weight(&self, from: GridVertex, to: GridVertex) -> u64 {
        if to.0 != from.0 + 1 {
            return 0;
        }
        match self.shape.real(from) {
            Some(v) => {
                let step = match to.1 as i64 - from.1 as i64 {
                    -1 => Step::Down,
                    1 => Step::Right,
                    0 => Step::Diagonal,
                    _ => return 0,
                };
                self.step_weight(v, step)
            }
            None if to.1 == from.1 && from.0 > 0 => match self.shape.real((from.0 - 1, from.1)) {
                Some(v) if self.step_weight(v, Step::Diagonal) != 0 => 1 % self.p,
                _ => 0,
            },
            None => 0,
        }
    }
}

/// Weight oracle for the edit-distance grid of `x` and `y`.
pub fn ed_weight_oracle<'a>(x: &'a [u8], y: &'a [u8], p: u64) -> AlignmentOracle<'a> {
    AlignmentOracle::new(Embedding { a: x.len(), b: y.len() }, Rule::EditDistance { x, y }, p)
}

/// Weight oracle for the LCS grid of `x` and `y`.
pub fn lcs_weight_oracle<'a>(x: &'a [u8], y: &'a [u8], p: u64) -> AlignmentOracle<'a> {
    AlignmentOracle::new(Embedding { a: x.len(), b: y.len() }, Rule::Lcs { x, y }, p)
}

/// An integer given by residues modulo distinct primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrrValue {
    /// `(p_i, x mod p_i)`.
    pub residues: Vec<(u64, u64)>,
    /// The value is known to be below `2^bits`.
    pub bits: usize,
}

impl CrrValue {
    fn check(&self) -> Result<BigUint> {
        let mut product = BigUint::one();
        for (k, &(p, r)) in self.residues.iter().enumerate() {
            if !is_prime(p) || r >= p {
                return Err(invalid(format!("residue {r} mod {p} is malformed")));
            }
            if self.residues[..k].iter().any(|&(q, _)| q == p) {
                return Err(invalid(format!("prime {p} repeated")));
            }
            product *= p;
        }
        if product.bits() <= self.bits as u64 {
            return Err(invalid(format!("primes do not cover {} bits", self.bits)));
        }
        Ok(product)
    }

    /// The unique value below the product of the primes.
    pub fn reconstruct(&self) -> Result<BigUint> {
        let product = self.check()?;
        let mut x = BigUint::zero();
        for &(p, r) in &self.residues {
            let rest = &product / p;
            let rest_mod = (&rest % p).to_u64_digits().first().copied().unwrap_or(0);
            let inv = pow_mod(rest_mod, p - 2, p);
            x += rest * ((r as u128 * inv as u128 % p as u128) as u64);
        }
        Ok(x % product)
    }
}

/// Bit `j` of the value.
pub fn crr_to_bits(v: &CrrValue, j: usize) -> Result<bool> {
    if j >= v.bits {
        return Err(invalid(format!("bit {j} outside {} bits", v.bits)));
    }
    Ok(v.reconstruct()?.bit(j as u64))
}

/// The shortest prefix of the primes whose product exceeds `2^bits`.
pub fn primes_for_bits(bits: usize) -> Vec<u64> {
    let mut count = 16;
    loop {
        let primes = first_primes(count);
        let mut product = BigUint::one();
        for (k, &p) in primes.iter().enumerate() {
            product *= p;
            if product.bits() > bits as u64 {
                return primes[..=k].to_vec();
            }
        }
        count *= 2;
    }
}

/// Knobs shared by the metric drivers.
#[derive(Clone, Copy, Debug, Serialize)]
#[derive(Default)]
pub struct MetricParams {
    pub grid: GridParams,
    /// Seed of the random initial tape.
    pub tape_seed: u64,
}


/// Work done by a metric computation.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct MetricStats {
    pub grid_runs: u64,
    pub oracle_queries: u64,
    pub catalytic_bits: usize,
    pub free_bits_peak: usize,
    pub restored: bool,
}

/// Runs grids one prime at a time on a single reused arena.
struct PrimeRunner {
    ws: Workspace,
    shape: Embedding,
    params: GridParams,
    stats: MetricStats,
}

impl PrimeRunner {
    fn new(shape: Embedding, largest_prime: u64, params: MetricParams) -> Result<Self> {
        let bits = if shape.side() > 0 {
            GridPlan::new(shape.side(), shape.source(), shape.target(), params.grid)?.catalytic_bits(largest_prime)
        } else {
            0
        };
        let ws = Workspace::new(CatalyticArena::new(bits + 64, ArenaInit::Random(params.tape_seed))?);
        Ok(PrimeRunner { ws, shape, params: params.grid, stats: MetricStats { restored: true, ..Default::default() } })
    }

    fn run(&mut self, rule: Rule<'_>, p: u64) -> Result<u64> {
        let oracle = AlignmentOracle::new(self.shape, rule, p);
        let (value, stats) =
            grid_path_weight(&mut self.ws, self.shape.side(), self.shape.source(), self.shape.target(), &oracle, p, self.params)?;
        self.stats.grid_runs += 1;
        self.stats.oracle_queries += stats.oracle_queries;
        self.stats.catalytic_bits = self.stats.catalytic_bits.max(stats.catalytic_bits);
        self.stats.free_bits_peak = self.stats.free_bits_peak.max(stats.free_bits_peak);
        self.stats.restored &= self.ws.verify_restored();
        Ok(value)
    }
}

/// Residues of the path weight for every prime in `primes`.
pub fn grid_value_crr(shape: Embedding, rule: Rule<'_>, bits: usize, params: MetricParams) -> Result<(CrrValue, MetricStats)> {
    let primes = primes_for_bits(bits);
    let mut runner = PrimeRunner::new(shape, *primes.last().unwrap_or(&2), params)?;
    let mut residues = Vec::with_capacity(primes.len());
    for &p in &primes {
        residues.push((p, runner.run(rule, p)?));
    }
    Ok((CrrValue { residues, bits }, runner.stats))
}

/// Result of an ED or LCS computation.
#[derive(Clone, Debug, Serialize)]
pub struct AlignmentReport {
    pub value: usize,
    pub primes: usize,
    pub digit_bits: usize,
    pub stats: MetricStats,
    /// Path count of each cost, lowest cost first, trailing zeros dropped.
    pub counts: Vec<String>,
}

fn alignment(x: &[u8], y: &[u8], lcs: bool, params: MetricParams) -> Result<AlignmentReport> {
    let shape = Embedding { a: x.len(), b: y.len() };
    let digit_bits = 4 * x.len().max(y.len()).max(1);
    let bits = digit_bits * (shape.side() + 1);
    let rule = if lcs { Rule::Lcs { x, y } } else { Rule::EditDistance { x, y } };
    let (crr, stats) = grid_value_crr(shape, rule, bits, params)?;
    let total = crr.reconstruct()?;
    let windows = digit_windows(&total, digit_bits, shape.side() + 1);
    let nonzero = windows.iter().enumerate().filter(|(_, w)| !w.is_zero()).map(|(k, _)| k);
    let value = if lcs { nonzero.max() } else { nonzero.min() };
    let value = value.ok_or_else(|| invalid("alignment grid has no path"))?;
    let last = windows.iter().rposition(|w| !w.is_zero()).map_or(0, |k| k + 1);
    Ok(AlignmentReport {
        value,
        primes: crr.residues.len(),
        digit_bits,
        stats,
        counts: windows[..last].iter().map(|w| w.to_string()).collect(),
    })
}

/// Splits `x` into `count` windows of `width` bits, least significant first.
pub fn digit_windows(x: &BigUint, width: usize, count: usize) -> Vec<BigUint> {
    let mask = (BigUint::one() << width) - 1u32;
    (0..count).map(|k| (x >> (k * width)) & &mask).collect()
}

pub fn edit_distance_report(x: &[u8], y: &[u8], params: MetricParams) -> Result<AlignmentReport> {
    alignment(x, y, false, params)
}

pub fn lcs_report(x: &[u8], y: &[u8], params: MetricParams) -> Result<AlignmentReport> {
    alignment(x, y, true, params)
}

/// Levenshtein distance.
pub fn edit_distance(x: &[u8], y: &[u8]) -> Result<usize> {
    Ok(edit_distance_report(x, y, MetricParams::default())?.value)
}

/// Length of a longest common subsequence.
pub fn lcs(x: &[u8], y: &[u8]) -> Result<usize> {
    Ok(lcs_report(x, y, MetricParams::default())?.value)
}

/// Dense ranks starting at 1; equal values share a rank.
pub fn rank_distances<T: Ord + Clone>(d_raw: &[Vec<T>]) -> Vec<Vec<u64>> {
    let mut values: Vec<T> = d_raw.iter().flatten().cloned().collect();
    values.sort();
    values.dedup();
    d_raw
        .iter()
        .map(|row| row.iter().map(|v| values.binary_search(v).expect("value present") as u64 + 1).collect())
        .collect()
}

/// Result of a Fréchet computation.
#[derive(Clone, Debug, Serialize)]
pub struct FrechetReport {
    pub value: u64,
    pub thresholds_tested: usize,
    pub stats: MetricStats,
}

/// Discrete Fréchet distance for the pairwise distance matrix `d`
/// (`d[i][j]` between the `i`-th point of one curve and the `j`-th of the
/// other).
pub fn frechet_matrix(d: &[Vec<u64>], params: MetricParams) -> Result<FrechetReport> {
    if d.is_empty() || d[0].is_empty() {
        return Err(invalid("Fréchet distance of an empty curve"));
    }
    if d.iter().any(|row| row.len() != d[0].len()) {
        return Err(invalid("distance matrix is not rectangular"));
    }
    let shape = Embedding { a: d.len() - 1, b: d[0].len() - 1 };
    let mut candidates: Vec<u64> = d.iter().flatten().copied().chain([0]).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let primes = first_primes(4 * d.len().max(d[0].len()));
    let mut runner = PrimeRunner::new(shape, *primes.last().unwrap_or(&2), params)?;
    let mut reachable = |m: u64| -> Result<bool> {
        if shape.side() == 0 {
            return Ok(d[0][0] <= m);
        }
        for &p in &primes {
            if runner.run(Rule::Frechet { d, m }, p)? != 0 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    // Smallest index with reachable(candidates[k]); the largest always is.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut unreachable_max: Option<u64> = None;
    let mut tested = 0;
    while lo < hi {
        let mid = (lo + hi) / 2;
        tested += 1;
        if reachable(candidates[mid])? {
            if unreachable_max.is_some_and(|u| u >= candidates[mid]) {
                return Err(invalid("threshold reachability is not monotone"));
            }
            hi = mid;
        } else {
            unreachable_max = unreachable_max.max(Some(candidates[mid]));
            lo = mid + 1;
        }
    }
    Ok(FrechetReport { value: candidates[lo], thresholds_tested: tested, stats: runner.stats })
}

/// Discrete Fréchet distance between integer point sequences under squared
/// Euclidean distance, searched over distance ranks.
pub fn frechet_points(p: &[(i64, i64)], q: &[(i64, i64)], params: MetricParams) -> Result<FrechetReport> {
    if p.is_empty() || q.is_empty() {
        return Err(invalid("Fréchet distance of an empty curve"));
    }
    let raw: Vec<Vec<u64>> = p
        .iter()
        .map(|a| q.iter().map(|b| ((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as u64).collect())
        .collect();
    let ranks = rank_distances(&raw);
    let mut report = frechet_matrix(&ranks, params)?;
    report.value = raw
        .iter()
        .flatten()
        .zip(ranks.iter().flatten())
        .find(|(_, &r)| r == report.value)
        .map_or(0, |(&v, _)| v);
    Ok(report)
}

/// [`frechet_matrix`] with default parameters.
pub fn frechet(d: &[Vec<u64>]) -> Result<u64> {
    Ok(frechet_matrix(d, MetricParams::default())?.value)
}
