//! Arithmetic in F_p and prime selection.
//!
//! Moduli are kept below 2^32 so products fit a `u64`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A prime modulus together with its cell width `w = ceil(log2 p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCtx {
    p: u64,
    w: u32,
}

impl FieldCtx {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 32 {
            return Err(invalid(format!("modulus {p} exceeds 32 bits")));
        }
        if !is_prime(p) {
            return Err(invalid(format!("modulus {p} is not prime")));
        }
        Ok(FieldCtx { p, w: cell_width(p) })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn w(&self) -> u32 {
        self.w
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        f_add(a, b, self.p)
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        f_sub(a, b, self.p)
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        f_mul(a, b, self.p)
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        f_sub(0, a, self.p)
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base % self.p, exp, self.p)
    }
}

/// `ceil(log2 p)`, with `p = 2` giving one bit.
pub fn cell_width(p: u64) -> u32 {
    debug_assert!(p >= 2);
    64 - (p - 1).leading_zeros()
}

#[inline]
pub fn f_add(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub fn f_sub(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
pub fn f_mul(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn mul_mod_wide(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod_wide(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_wide(acc, base, m);
        }
        base = mul_mod_wide(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular exponentiation by repeated squaring.
pub fn pow_mod(base: u64, exp: u64, m: u64) -> u64 {
    pow_mod_wide(base, exp, m)
}

/// Deterministic Miller-Rabin, exact for every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod_wide(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_wide(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Which interval `random_prime` samples from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimeRange {
    /// `[n log^2 n, 3 n log^2 n]`.
    #[default]
    Wide,
    /// `[t log t, 2 t log t]`.
    Narrow,
}

impl PrimeRange {
    /// Inclusive bounds for instance size `n`, logarithms base 2 rounded down.
    pub fn bounds(self, n: u64) -> (u64, u64) {
        let lg = n.max(2).ilog2() as u64;
        match self {
            PrimeRange::Wide => (n * lg * lg, 3 * n * lg * lg),
            PrimeRange::Narrow => (n * lg, 2 * n * lg),
        }
    }
}

/// Rejection-samples a prime from `PrimeRange::Wide` bounds of `n`.
pub fn random_prime<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<u64> {
    random_prime_with(n, PrimeRange::Wide, rng)
}

pub fn random_prime_with<R: Rng + ?Sized>(n: u64, range: PrimeRange, rng: &mut R) -> Result<u64> {
    if n < 4 {
        return Err(invalid(format!("random_prime needs n >= 4, got {n}")));
    }
    let (lo, hi) = range.bounds(n);
    if hi >= 1 << 32 {
        return Err(invalid(format!("prime range for n={n} exceeds 32 bits")));
    }
    loop {
        let c = rng.gen_range(lo..=hi);
        if is_prime(c) {
            return Ok(c);
        }
    }
}

/// All primes in `[lo, hi]`, ascending.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&c| is_prime(c)).collect()
}

/// The first `k` primes, by a sieve sized from the Rosser bound.
pub fn first_primes(k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    let kf = k.max(6) as f64;
    let bound = (kf * (kf.ln() + kf.ln().ln())).ceil() as usize + 1;
    let mut composite = vec![false; bound + 1];
    let mut out = Vec::with_capacity(k);
    for i in 2..=bound {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        if out.len() == k {
            break;
        }
        let mut j = i * i;
        while j <= bound {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// The `i`-th prime, 1-based (`nth_prime(1) == 2`).
pub fn nth_prime(i: usize) -> Result<u64> {
    if i == 0 {
        return Err(invalid("nth_prime is 1-based"));
    }
    Ok(first_primes(i)[i - 1])
}
