//! Representative vertex multisets from pairwise-independent hashing driven
//! by an expander walk.
//!
//! A seed fixes a start vertex of the Gabber–Galil graph on `Z_t × Z_t` and
//! `K - 1` steps. Each visited vertex `(a, b)` is read as the hash
//! `h(x) = a·x ⊕ b` over `GF(2^k)`, and the multiset holds `h_a(x)` for the
//! `a`-th visited vertex and every `x < m`.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Low bits of an irreducible polynomial of degree `k` over GF(2), for
/// `k = 1..=32` (the `x^k` term is implicit).
const IRREDUCIBLE: [u32; 33] = [
    0,
    0b1,                 // x + 1
    0b11,                // x^2 + x + 1
    0b11,                // x^3 + x + 1
    0b11,                // x^4 + x + 1
    0b101,               // x^5 + x^2 + 1
    0b11,                // x^6 + x + 1
    0b11,                // x^7 + x + 1
    0b1_1011,            // x^8 + x^4 + x^3 + x + 1
    0b1_0001,            // x^9 + x^4 + 1
    0b1001,              // x^10 + x^3 + 1
    0b101,               // x^11 + x^2 + 1
    0b1001,              // x^12 + x^3 + 1
    0b1_1011,            // x^13 + x^4 + x^3 + x + 1
    0b10_0001,           // x^14 + x^5 + 1
    0b11,                // x^15 + x + 1
    0b10_1011,           // x^16 + x^5 + x^3 + x + 1
    0b1001,              // x^17 + x^3 + 1
    0b1000_0001,         // x^18 + x^7 + 1
    0b10_0111,           // x^19 + x^5 + x^2 + x + 1
    0b1001,              // x^20 + x^3 + 1
    0b101,               // x^21 + x^2 + 1
    0b11,                // x^22 + x + 1
    0b10_0001,           // x^23 + x^5 + 1
    0b1_1011,            // x^24 + x^4 + x^3 + x + 1
    0b1001,              // x^25 + x^3 + 1
    0b1_1011,            // x^26 + x^4 + x^3 + x + 1
    0b10_0111,           // x^27 + x^5 + x^2 + x + 1
    0b1001,              // x^28 + x^3 + 1
    0b101,               // x^29 + x^2 + 1
    0b11,                // x^30 + x + 1
    0b1001,              // x^31 + x^3 + 1
    0b1000_1101,         // x^32 + x^7 + x^3 + x^2 + 1
];

/// The field GF(2^k), `1 <= k <= 32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Gf2k {
    k: u32,
}

impl Gf2k {
    pub fn new(k: u32) -> Result<Self> {
        if !(1..=32).contains(&k) {
            return Err(invalid(format!("GF(2^{k}) unsupported")));
        }
        Ok(Gf2k { k })
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn size(&self) -> u64 {
        1 << self.k
    }

    /// Full modulus polynomial including the leading term.
    pub fn modulus(&self) -> u64 {
        1u64 << self.k | IRREDUCIBLE[self.k as usize] as u64
    }

    /// Carry-less product reduced by the field polynomial.
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let mut acc: u64 = 0;
        for i in 0..self.k {
            if b >> i & 1 == 1 {
                acc ^= a << i;
            }
        }
        let m = self.modulus();
        for d in (self.k..2 * self.k).rev() {
            if acc >> d & 1 == 1 {
                acc ^= m << (d - self.k);
            }
        }
        acc
    }
}

/// `h(x) = a·x ⊕ b` over GF(2^k).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HashFn {
    pub a: u64,
    pub b: u64,
    pub field: Gf2k,
}

impl HashFn {
    pub fn new(a: u64, b: u64, field: Gf2k) -> Self {
        HashFn { a, b, field }
    }

    pub fn random<R: Rng + ?Sized>(field: Gf2k, rng: &mut R) -> Self {
        HashFn::new(rng.gen_range(0..field.size()), rng.gen_range(0..field.size()), field)
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        self.field.mul(self.a, x) ^ self.b
    }
}

/// Evaluates `h` on `x` from the domain `[m]`.
pub fn hash_eval(h: &HashFn, x: u64, m: u64) -> Result<u64> {
    if x >= m {
        return Err(Error::Bounds { index: x as usize, len: m as usize });
    }
    Ok(h.apply(x))
}

/// Spectral bound used for the Gabber–Galil graph: `5√2 / 8`.
pub const GG_ALPHA: f64 = 0.883_883_476_483_184_4;

/// Applies one of the eight Gabber–Galil maps on `Z_t × Z_t`.
#[inline]
pub fn gg_step(t: u64, (x, y): (u64, u64), step: u8) -> (u64, u64) {
    let (s, d) = ((x + y) % t, (x + t - y) % t);
    let (sy, dy) = ((y + x) % t, (y + t - x) % t);
    match step {
        0 => (s, y),
        1 => (d, y),
        2 => ((s + 1) % t, y),
        3 => ((d + t - 1) % t, y),
        4 => (x, sy),
        5 => (x, dy),
        6 => (x, (sy + 1) % t),
        7 => (x, (dy + t - 1) % t),
        _ => unreachable!(),
    }
}

/// Checked form of [`gg_step`].
pub fn expander_neighbor(t: u64, v: (u64, u64), step: usize) -> Result<(u64, u64)> {
    if step >= 8 {
        return Err(Error::Bounds { index: step, len: 8 });
    }
    if v.0 >= t || v.1 >= t {
        return Err(invalid("vertex outside Z_t × Z_t"));
    }
    Ok(gg_step(t, v, step as u8))
}

/// `log(1/(3β)) / log(1/(β + α(1-β)))`: how much longer a walk on an
/// expander with spectral bound `alpha` must be to match one with `α ≤ 2β`.
pub fn adjustment_factor(alpha: f64, beta: f64) -> f64 {
    (1.0 / (3.0 * beta)).ln() / (1.0 / (beta + alpha * (1.0 - beta))).ln()
}

/// Theoretical multiset shape for `n` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultisetShape {
    pub walk_len: usize,
    pub hash_domain: usize,
}

impl MultisetShape {
    /// `K = ceil((2 + ε/8)·log2 n / log2(1/(3β)))` scaled by the adjustment
    /// factor, and `m = ceil(2n/(βλ))` capped at `n`.
    pub fn theoretical(n: usize, lambda: usize, eps: f64, beta: f64) -> Self {
        let lg = (n.max(2) as f64).log2();
        let base = ((2.0 + eps / 8.0) * lg / (1.0 / (3.0 * beta)).log2()).ceil();
        let k = (base * adjustment_factor(GG_ALPHA, beta)).ceil() as usize;
        let m = ((2 * n) as f64 / (beta * lambda as f64)).ceil() as usize;
        MultisetShape {
            walk_len: k.max(1),
            hash_domain: m.min(n).max(1),
        }
    }
}

/// Where the hash functions come from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum HashSource {
    /// Start vertex plus step labels of an expander walk.
    Walk { start: (u64, u64), steps: Vec<u8> },
    /// Independently drawn functions.
    Ideal(Vec<(u64, u64)>),
}

/// A seed `σ` together with the multiset shape it is read with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeedSpec {
    field: Gf2k,
    pub walk_len: usize,
    pub hash_domain: usize,
    pub source: HashSource,
}

impl SeedSpec {
    fn check_shape(n: usize, walk_len: usize, hash_domain: usize) -> Result<Gf2k> {
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid(format!("hash range {n} must be a power of two >= 2")));
        }
        if walk_len == 0 || hash_domain == 0 || hash_domain > n {
            return Err(invalid("walk length and hash domain must be in 1..=n"));
        }
        Gf2k::new(n.trailing_zeros())
    }

    /// Random expander-walk seed for range `[n]`.
    pub fn random<R: Rng + ?Sized>(n: usize, walk_len: usize, hash_domain: usize, rng: &mut R) -> Result<Self> {
        let field = Self::check_shape(n, walk_len, hash_domain)?;
        let t = n as u64;
        Ok(SeedSpec {
            field,
            walk_len,
            hash_domain,
            source: HashSource::Walk {
                start: (rng.gen_range(0..t), rng.gen_range(0..t)),
                steps: (1..walk_len).map(|_| rng.gen_range(0..8)).collect(),
            },
        })
    }

    /// Seed number `index`: start `x` in the low `k` bits, then start `y`,
    /// then 3 bits per step.
    pub fn from_index(n: usize, walk_len: usize, hash_domain: usize, index: u64) -> Result<Self> {
        let field = Self::check_shape(n, walk_len, hash_domain)?;
        let k = field.degree();
        let bits = 2 * k as u64 + 3 * (walk_len as u64 - 1);
        if bits >= 64 || index >> bits != 0 {
            return Err(invalid("seed index outside the seed space"));
        }
        let mask = (1u64 << k) - 1;
        let steps = (0..walk_len as u64 - 1)
            .map(|j| (index >> (2 * k as u64 + 3 * j) & 7) as u8)
            .collect();
        Ok(SeedSpec {
            field,
            walk_len,
            hash_domain,
            source: HashSource::Walk {
                start: (index & mask, index >> k & mask),
                steps,
            },
        })
    }

    /// `walk_len` independent hash functions.
    pub fn ideal<R: Rng + ?Sized>(n: usize, walk_len: usize, hash_domain: usize, rng: &mut R) -> Result<Self> {
        let field = Self::check_shape(n, walk_len, hash_domain)?;
        let t = n as u64;
        Ok(SeedSpec {
            field,
            walk_len,
            hash_domain,
            source: HashSource::Ideal((0..walk_len).map(|_| (rng.gen_range(0..t), rng.gen_range(0..t))).collect()),
        })
    }

    /// Length of `σ` in bits.
    pub fn seed_bits(&self) -> usize {
        2 * self.field.degree() as usize + 3 * (self.walk_len - 1)
    }

    /// Number of seeds of this shape.
    pub fn seed_space(n: usize, walk_len: usize) -> Option<u64> {
        let bits = 2 * n.trailing_zeros() as u64 + 3 * (walk_len as u64 - 1);
        (bits < 64).then(|| 1u64 << bits)
    }

    pub fn range(&self) -> usize {
        self.field.size() as usize
    }

    pub fn size(&self) -> usize {
        self.walk_len * self.hash_domain
    }

    /// Hash function at walk position `a`.
    pub fn hash_at(&self, a: usize) -> HashFn {
        let (x, y) = match &self.source {
            HashSource::Walk { start, steps } => {
                let t = self.field.size();
                steps[..a].iter().fold(*start, |v, &s| gg_step(t, v, s))
            }
            HashSource::Ideal(fs) => fs[a],
        };
        HashFn::new(x, y, self.field)
    }

    /// Element `i` of the multiset.
    pub fn rep_vertex(&self, i: usize) -> Result<usize> {
        if i >= self.size() {
            return Err(Error::Bounds { index: i, len: self.size() });
        }
        let (a, b) = (i / self.hash_domain, i % self.hash_domain);
        Ok(self.hash_at(a).apply(b as u64) as usize)
    }

    /// Elements in index order, walking incrementally.
    pub fn iter(&self) -> RepIter<'_> {
        RepIter {
            seed: self,
            a: 0,
            b: 0,
            h: self.hash_at(0),
        }
    }

    /// Every element, materialized.
    pub fn elements(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Sequential enumeration of a seed's multiset holding only the current
/// walk vertex and two counters.
pub struct RepIter<'a> {
    seed: &'a SeedSpec,
    a: usize,
    b: usize,
    h: HashFn,
}

impl Iterator for RepIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.a >= self.seed.walk_len {
            return None;
        }
        let v = self.h.apply(self.b as u64) as usize;
        self.b += 1;
        if self.b == self.seed.hash_domain {
            self.b = 0;
            self.a += 1;
            if self.a < self.seed.walk_len {
                self.h = match &self.seed.source {
                    HashSource::Walk { steps, .. } => {
                        let t = self.seed.field.size();
                        let (x, y) = gg_step(t, (self.h.a, self.h.b), steps[self.a - 1]);
                        HashFn::new(x, y, self.seed.field)
                    }
                    HashSource::Ideal(_) => self.seed.hash_at(self.a),
                };
            }
        }
        Some(v)
    }
}

/// Fraction of `draws` trials in which a fresh random hash over `GF(2^k)`,
/// `n = 2^k`, maps some `x < ceil(n/(β·set_size))` into a fresh random set
/// of `set_size` vertices.
pub fn hit_rate<R: Rng + ?Sized>(n: usize, set_size: usize, beta: f64, draws: usize, rng: &mut R) -> Result<f64> {
    if n < 2 || !n.is_power_of_two() || set_size == 0 || set_size > n {
        return Err(invalid("need n a power of two and 1 <= |B| <= n"));
    }
    let field = Gf2k::new(n.trailing_zeros())?;
    let m = ((n as f64 / (beta * set_size as f64)).ceil() as usize).min(n);
    let mut member = vec![false; n];
    let mut pool: Vec<usize> = (0..n).collect();
    let mut hits = 0;
    for _ in 0..draws {
        member.iter_mut().for_each(|b| *b = false);
        for i in 0..set_size {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
            member[pool[i]] = true;
        }
        let h = HashFn::random(field, rng);
        if (0..m as u64).any(|x| member[h.apply(x) as usize]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws.max(1) as f64)
}

/// A random set holding `round(β·t²)` vertices of `Z_t × Z_t`, indexed
/// `x·t + y`.
pub fn planted_bad_set<R: Rng + ?Sized>(t: u64, beta: f64, rng: &mut R) -> Vec<bool> {
    let size = (t * t) as usize;
    let mut bad = vec![false; size];
    let want = (beta * size as f64).round() as usize;
    let mut idx: Vec<usize> = (0..size).collect();
    for i in 0..want.min(size) {
        let j = rng.gen_range(i..size);
        idx.swap(i, j);
        bad[idx[i]] = true;
    }
    bad
}

/// Entry `K - 1` is the empirical probability that a walk visiting `K`
/// vertices of the Gabber–Galil graph, from a uniform start, stays inside
/// `bad` throughout.
pub fn confinement_profile<R: Rng + ?Sized>(t: u64, bad: &[bool], k_max: usize, walks: usize, rng: &mut R) -> Vec<f64> {
    let mut stayed = vec![0u64; k_max];
    for _ in 0..walks {
        let mut v = (rng.gen_range(0..t), rng.gen_range(0..t));
        for slot in stayed.iter_mut() {
            if !bad[(v.0 * t + v.1) as usize] {
                break;
            }
            *slot += 1;
            v = gg_step(t, v, rng.gen_range(0..8));
        }
    }
    stayed.into_iter().map(|c| c as f64 / walks.max(1) as f64).collect()
}

/// Whether every connected pair of `graph` (adjacency lists on `n`
/// vertices) is linked through members of `members` by hops of at most
/// `lambda` edges.
pub fn rep_check_lists(adj: &[Vec<usize>], members: &[usize], lambda: usize) -> bool {
    let n = adj.len();
    let mut in_u = vec![false; n];
    for &v in members {
        if v < n {
            in_u[v] = true;
        }
    }
    let within = |src: usize, limit: Option<usize>| -> Vec<bool> {
        let mut dist = vec![usize::MAX; n];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(x) = q.pop_front() {
            if limit.is_some_and(|l| dist[x] == l) {
                continue;
            }
            for &y in &adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist.iter().map(|&d| d != usize::MAX).collect()
    };
    let short: Vec<Vec<bool>> = (0..n).map(|v| within(v, Some(lambda))).collect();
    for u in 0..n {
        let reach = within(u, None);
        // Hop graph: u, then members, each hop a walk of at most lambda edges.
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([u]);
        seen[u] = true;
        let mut linked = vec![false; n];
        while let Some(x) = q.pop_front() {
            for y in 0..n {
                if short[x][y] {
                    linked[y] = true;
                    if in_u[y] && !seen[y] {
                        seen[y] = true;
                        q.push_back(y);
                    }
                }
            }
        }
        if (0..n).any(|v| reach[v] && !linked[v]) {
            return false;
        }
    }
    true
}

/// [`rep_check_lists`] for an edge list and a seed.
pub fn rep_check(n: usize, edges: &[(usize, usize)], seed: &SeedSpec, lambda: usize) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
    }
    rep_check_lists(&adj, &seed.elements(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poly_mod(mut a: u64, m: u64) -> u64 {
        let dm = 63 - m.leading_zeros();
        while a != 0 && 63 - a.leading_zeros() >= dm {
            a ^= m << (63 - a.leading_zeros() - dm);
        }
        a
    }

    #[test]
    fn table_polynomials_are_irreducible() {
        for k in 1..=32u32 {
            let m = Gf2k::new(k).unwrap().modulus();
            // No factor of degree 1..=k/2.
            for d in 1..=k / 2 {
                for low in 0..1u64 << d {
                    let f = 1 << d | low;
                    assert_ne!(poly_mod(m, f), 0, "k={k} divisible by {f:b}");
                }
            }
        }
    }

    #[test]
    fn gf8_against_table() {
        let f = Gf2k::new(3).unwrap();
        // x · (x^2 + x) = x^3 + x^2 = x^2 + x + 1 modulo x^3 + x + 1.
        assert_eq!(f.mul(0b010, 0b110), 0b111);
        for a in 0..8 {
            for b in 0..8 {
                let mut prod = 0u64;
                for i in 0..3 {
                    if b >> i & 1 == 1 {
                        prod ^= a << i;
                    }
                }
                assert_eq!(f.mul(a, b), poly_mod(prod, 0b1011));
                assert_eq!(f.mul(a, b), f.mul(b, a));
            }
        }
    }

    #[test]
    fn hash_examples() {
        let f = Gf2k::new(4).unwrap();
        let id = HashFn::new(1, 0, f);
        let c = HashFn::new(0, 9, f);
        for x in 0..16 {
            assert_eq!(id.apply(x), x);
            assert_eq!(c.apply(x), 9);
        }
        assert!(hash_eval(&id, 5, 5).is_err());
        assert_eq!(hash_eval(&id, 4, 5).unwrap(), 4);
    }

    #[test]
    fn pairwise_independence_gf16() {
        let f = Gf2k::new(4).unwrap();
        for x1 in 0..16u64 {
            for x2 in (0..16u64).filter(|&x| x != x1) {
                let mut count = [[0u32; 16]; 16];
                for a in 0..16 {
                    for b in 0..16 {
                        let h = HashFn::new(a, b, f);
                        count[h.apply(x1) as usize][h.apply(x2) as usize] += 1;
                    }
                }
                assert!(count.iter().flatten().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn gabber_galil_maps() {
        assert_eq!(expander_neighbor(16, (0, 0), 0).unwrap(), (0, 0));
        assert_eq!(expander_neighbor(16, (0, 0), 2).unwrap(), (1, 0));
        assert!(expander_neighbor(16, (0, 0), 8).is_err());
        let t = 16u64;
        for step in 0..8u8 {
            let mut hit = vec![false; 256];
            for x in 0..t {
                for y in 0..t {
                    let (a, b) = gg_step(t, (x, y), step);
                    hit[(a * t + b) as usize] = true;
                }
            }
            assert!(hit.iter().all(|&h| h), "map {step} is not a permutation");
        }
        // Maps come in inverse pairs, so the graph is undirected.
        for (f, g) in [(0u8, 1u8), (2, 3), (4, 5), (6, 7)] {
            for x in 0..t {
                for y in 0..t {
                    assert_eq!(gg_step(t, gg_step(t, (x, y), f), g), (x, y));
                }
            }
        }
    }

    #[test]
    fn hashes_hit_large_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, lambda) in [(64, 4), (256, 16)] {
            let rate = hit_rate(n, lambda, 0.25, 2000, &mut rng).unwrap();
            assert!(rate >= 0.70, "n={n} λ={lambda}: {rate}");
        }
        assert_eq!(hit_rate(16, 16, 0.5, 10, &mut rng).unwrap(), 1.0);
        assert!(hit_rate(6, 2, 0.5, 1, &mut rng).is_err());
    }

    #[test]
    fn confinement_decays() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let bad = planted_bad_set(32, 0.25, &mut rng);
        assert_eq!(bad.iter().filter(|&&b| b).count(), 256);
        let prof = confinement_profile(32, &bad, 5, 40_000, &mut rng);
        assert!((prof[0] - 0.25).abs() < 0.02, "{prof:?}");
        assert!(prof.windows(2).all(|w| w[1] < w[0]), "{prof:?}");
        let all = vec![true; 16];
        assert_eq!(confinement_profile(4, &all, 3, 100, &mut rng), vec![1.0; 3]);
    }

    #[test]
    fn walk_distribution_is_near_uniform() {
        let t = 16u64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hist = vec![0u32; 256];
        let walks = 100_000;
        for _ in 0..walks {
            let mut v = (rng.gen_range(0..t), rng.gen_range(0..t));
            for _ in 0..10 {
                v = gg_step(t, v, rng.gen_range(0..8));
            }
            hist[(v.0 * t + v.1) as usize] += 1;
        }
        let tv: f64 = hist.iter().map(|&c| (c as f64 / walks as f64 - 1.0 / 256.0).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "tv = {tv}");
    }

    #[test]
    fn rep_vertex_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SeedSpec::random(16, 3, 8, &mut rng).unwrap();
        assert_eq!(s.rep_vertex(0).unwrap(), s.hash_at(0).apply(0) as usize);
        assert_eq!(s.rep_vertex(8 + 2).unwrap(), s.hash_at(1).apply(2) as usize);
        assert!(s.rep_vertex(24).is_err());
        let listed: Vec<usize> = (0..24).map(|i| s.rep_vertex(i).unwrap()).collect();
        assert_eq!(s.elements(), listed);
        assert_eq!(s.seed_bits(), 8 + 6);
        let again = s.clone();
        assert_eq!(again.rep_vertex(13).unwrap(), s.rep_vertex(13).unwrap());
    }

    #[test]
    fn reference_enumeration_n16() {
        // Independent computation: walk by explicit map formulas, hash by
        // schoolbook GF(16) multiplication.
        let s = SeedSpec::from_index(16, 4, 8, 0b101_011_110_0111_1001).unwrap();
        let HashSource::Walk { start, steps } = &s.source else { unreachable!() };
        assert_eq!(*start, (0b1001, 0b0111));
        assert_eq!(steps, &vec![0b110, 0b011, 0b101]);
        let mut v = (9i64, 7i64);
        let mut expect = Vec::new();
        let maps: [fn(i64, i64) -> (i64, i64); 8] = [
            |x, y| (x + y, y),
            |x, y| (x - y, y),
            |x, y| (x + y + 1, y),
            |x, y| (x - y - 1, y),
            |x, y| (x, y + x),
            |x, y| (x, y - x),
            |x, y| (x, y + x + 1),
            |x, y| (x, y - x - 1),
        ];
        for a in 0..4 {
            if a > 0 {
                let (x, y) = maps[steps[a - 1] as usize](v.0, v.1);
                v = (x.rem_euclid(16), y.rem_euclid(16));
            }
            for b in 0..8u64 {
                let mut prod = 0u64;
                for i in 0..4 {
                    if b >> i & 1 == 1 {
                        prod ^= (v.0 as u64) << i;
                    }
                }
                expect.push((poly_mod(prod, 0b10011) ^ v.1 as u64) as usize);
            }
        }
        assert_eq!(s.elements(), expect);
    }

    #[test]
    fn rep_check_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let edges = crate::testkit::random_digraph(16, 0.15, &mut rng);
        let all: Vec<usize> = (0..16).collect();
        let mut adj = vec![Vec::new(); 16];
        for &(u, v) in &edges {
            adj[u].push(v);
        }
        assert!(rep_check_lists(&adj, &all, 1));
        assert!(rep_check_lists(&vec![Vec::new(); 16], &[], 2));
        let path = vec![vec![1], vec![2], vec![3], vec![4], vec![]];
        assert!(rep_check_lists(&path, &[2], 2));
        assert!(rep_check_lists(&path, &[1, 3], 2));
        assert!(!rep_check_lists(&path, &[1], 2));
        assert!(!rep_check_lists(&path, &[], 2));
    }

    #[test]
    fn theoretical_shape() {
        let s = MultisetShape::theoretical(64, 4, 1.0, 0.125);
        assert_eq!(s.hash_domain, 64);
        assert!(s.walk_len > 10);
        assert!(adjustment_factor(GG_ALPHA, 0.25) > 1.0);
    }

    #[test]
    fn seed_space_and_index_bounds() {
        assert_eq!(SeedSpec::seed_space(16, 2), Some(1 << 11));
        assert!(SeedSpec::from_index(16, 2, 8, 1 << 11).is_err());
        assert!(SeedSpec::random(12, 2, 8, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(SeedSpec::random(16, 2, 17, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
