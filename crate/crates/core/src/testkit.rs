//! Brute-force reference implementations and instance generators.
//!
//! Nothing here touches the arena or the recursive engines; answers come from
//! plain matrices and textbook dynamic programs.

use rand::seq::SliceRandom;
use rand::Rng;

/// Dense `n × n` matrix over `F_p`.
pub type Matrix = Vec<Vec<u64>>;

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| (i == j) as u64).collect()).collect()
}

/// Weighted adjacency matrix; repeated edges add up.
pub fn adjacency(n: usize, edges: &[(usize, usize, u64)], p: u64) -> Matrix {
    let mut a = vec![vec![0; n]; n];
    for &(u, v, w) in edges {
        a[u][v] = (a[u][v] + w % p) % p;
    }
    a
}

pub fn mat_mul(a: &Matrix, b: &Matrix, p: u64) -> Matrix {
    let n = a.len();
    let mut c = vec![vec![0u64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                c[i][j] = (c[i][j] + a[i][k] * b[k][j]) % p;
            }
        }
    }
    c
}

pub fn mat_pow(a: &Matrix, mut k: u64, p: u64) -> Matrix {
    let mut acc = identity(a.len());
    let mut base = a.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = mat_mul(&acc, &base, p);
        }
        base = mat_mul(&base, &base, p);
        k >>= 1;
    }
    acc
}

/// `A^k mod p` for the weighted graph on `n` vertices.
pub fn walk_count_oracle(n: usize, edges: &[(usize, usize, u64)], k: u64, p: u64) -> Matrix {
    mat_pow(&adjacency(n, edges, p), k, p)
}

/// Row vector times matrix.
pub fn vec_mat(x: &[u64], a: &Matrix, p: u64) -> Vec<u64> {
    let n = a.len();
    let mut y = vec![0u64; n];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        for j in 0..n {
            y[j] = (y[j] + xi * a[i][j]) % p;
        }
    }
    y
}

/// Sum of weight products over walks of exactly `k` edges from `u` to `v`,
/// by depth-first enumeration.
pub fn enumerate_walks(n: usize, edges: &[(usize, usize, u64)], u: usize, v: usize, k: usize, p: u64) -> u64 {
    let mut out: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for &(a, b, w) in edges {
        out[a].push((b, w % p));
    }
    fn go(out: &[Vec<(usize, u64)>], x: usize, v: usize, left: usize, acc: u64, p: u64) -> u64 {
        if left == 0 {
            return if x == v { acc } else { 0 };
        }
        out[x]
            .iter()
            .map(|&(y, w)| go(out, y, v, left - 1, acc * w % p, p))
            .fold(0, |s, t| (s + t) % p)
    }
    go(&out, u, v, k, 1 % p, p)
}

/// Vertices reachable from `s` (including `s`).
pub fn reachable(n: usize, edges: &[(usize, usize)], s: usize) -> Vec<bool> {
    let mut out = vec![Vec::new(); n];
    for &(a, b) in edges {
        out[a].push(b);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(x) = stack.pop() {
        for &y in &out[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

pub fn dp_ed(x: &[u8], y: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    for i in 1..=x.len() {
        let mut cur = vec![i; y.len() + 1];
        for j in 1..=y.len() {
            let sub = prev[j - 1] + (x[i - 1] != y[j - 1]) as usize;
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[y.len()]
}

pub fn dp_lcs(x: &[u8], y: &[u8]) -> usize {
    let mut prev = vec![0usize; y.len() + 1];
    for i in 1..=x.len() {
        let mut cur = vec![0; y.len() + 1];
        for j in 1..=y.len() {
            cur[j] = if x[i - 1] == y[j - 1] {
                prev[j - 1] + 1
            } else {
                prev[j].max(cur[j - 1])
            };
        }
        prev = cur;
    }
    prev[y.len()]
}

/// Discrete Fréchet distance from a pairwise distance matrix.
pub fn dp_frechet(d: &[Vec<u64>]) -> u64 {
    let (a, b) = (d.len(), d[0].len());
    let mut f = vec![vec![0u64; b]; a];
    for i in 0..a {
        for j in 0..b {
            let best = match (i, j) {
                (0, 0) => 0,
                (0, _) => f[0][j - 1],
                (_, 0) => f[i - 1][0],
                _ => f[i - 1][j].min(f[i][j - 1]).min(f[i - 1][j - 1]),
            };
            f[i][j] = best.max(d[i][j]);
        }
    }
    f[a - 1][b - 1]
}

/// Squared Euclidean distances between integer points.
pub fn squared_distances(p: &[(i64, i64)], q: &[(i64, i64)]) -> Vec<Vec<u64>> {
    p.iter()
        .map(|a| {
            q.iter()
                .map(|b| ((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as u64)
                .collect()
        })
        .collect()
}

/// Weighted path sum on the layered grid by forward accumulation.
/// `weight(i, j, k)` is the weight of the edge `(i, j) → (i + 1, k)`.
pub fn grid_dp_oracle<F>(n: usize, weight: F, u: (usize, usize), v: (usize, usize), p: u64) -> u64
where
    F: Fn(usize, usize, usize) -> u64,
{
    if v.0 < u.0 {
        return 0;
    }
    let mut cur = vec![0u64; n + 1];
    cur[u.1] = 1 % p;
    for i in u.0..v.0 {
        let mut next = vec![0u64; n + 1];
        for j in 0..=n {
            if cur[j] == 0 {
                continue;
            }
            for k in j.saturating_sub(1)..=(j + 1).min(n) {
                next[k] = (next[k] + cur[j] * (weight(i, j, k) % p)) % p;
            }
        }
        cur = next;
    }
    cur[v.1]
}

/// Number of paths between two grid vertices with all weights one, by
/// recursive enumeration.
pub fn grid_path_count(n: usize, u: (usize, usize), v: (usize, usize)) -> u64 {
    if u.0 == v.0 {
        return (u.1 == v.1) as u64;
    }
    if u.0 > v.0 {
        return 0;
    }
    let lo = u.1.saturating_sub(1);
    let hi = (u.1 + 1).min(n);
    (lo..=hi).map(|k| grid_path_count(n, (u.0 + 1, k), v)).sum()
}

/// All ordered pairs `(u, v)`, `u != v`, on `n` vertices, in mask order.
pub fn edge_slots(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect()
}

/// The loop-free digraph whose edges are the set bits of `mask`.
pub fn digraph_from_mask(n: usize, mask: u64) -> Vec<(usize, usize)> {
    edge_slots(n)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, e)| e)
        .collect()
}

/// Masks of loop-free digraphs on `n` vertices that are the smallest in their
/// orbit under permutations fixing every vertex below `fixed`.
pub fn orbit_representatives(n: usize, fixed: usize) -> Vec<u64> {
    let slots = edge_slots(n);
    let index = |u: usize, v: usize| slots.iter().position(|&e| e == (u, v)).unwrap();
    let free: Vec<usize> = (fixed..n).collect();
    let mut tails = Vec::new();
    permute(&free, &mut Vec::new(), &mut tails);
    let perms: Vec<Vec<usize>> = tails
        .into_iter()
        .map(|tail| (0..fixed).chain(tail).collect())
        .collect();
    let maps: Vec<Vec<usize>> = perms
        .iter()
        .map(|p| slots.iter().map(|&(u, v)| index(p[u], p[v])).collect())
        .collect();
    let total = 1u64 << slots.len();
    (0..total)
        .filter(|&mask| {
            maps.iter().all(|map| {
                let mut img = 0u64;
                for (k, &t) in map.iter().enumerate() {
                    img |= (mask >> k & 1) << t;
                }
                img >= mask
            })
        })
        .collect()
}

fn permute(rest: &[usize], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if rest.is_empty() {
        out.push(prefix.clone());
        return;
    }
    for k in 0..rest.len() {
        let mut r = rest.to_vec();
        let x = r.remove(k);
        prefix.push(x);
        permute(&r, prefix, out);
        prefix.pop();
    }
}

/// Random loop-free digraph with each ordered pair present with probability `q`.
pub fn random_digraph<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Vec<(usize, usize)> {
    edge_slots(n).into_iter().filter(|_| rng.gen_bool(q)).collect()
}

/// Random digraph in which `t` is reachable from `s`: a planted simple path
/// of `path_len` edges through random intermediate vertices plus `extra`
/// random edges.
pub fn planted_path_digraph<R: Rng + ?Sized>(
    n: usize,
    s: usize,
    t: usize,
    path_len: usize,
    extra: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    others.shuffle(rng);
    let mut walk = vec![s];
    walk.extend(others.into_iter().take(path_len.saturating_sub(1)));
    walk.push(t);
    let mut e: Vec<(usize, usize)> = walk.windows(2).map(|w| (w[0], w[1])).collect();
    while e.len() < path_len + extra {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            e.push((u, v));
        }
    }
    e.sort_unstable();
    e.dedup();
    e
}

/// Least-squares slope of `ln y` against the index; zero entries are skipped.
pub fn log_linear_slope(ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ys.iter().enumerate().filter(|(_, &y)| y > 0.0).map(|(i, &y)| (i as f64, y.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Ordinary least squares `y ≈ a + b·x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - b * mx, b)
}

/// Deterministic pseudo-random edge weights below `p` for a grid, keyed by
/// `seed`.
pub fn hashed_grid_weight(seed: u64, p: u64) -> impl Fn((usize, usize), (usize, usize)) -> u64 + Copy {
    move |a: (usize, usize), b: (usize, usize)| {
        let h = (a.0 as u64).wrapping_mul(131) ^ (a.1 as u64).wrapping_mul(17) ^ (b.1 as u64).wrapping_mul(7) ^ seed;
        (h.wrapping_add(seed).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40) % p
    }
}
