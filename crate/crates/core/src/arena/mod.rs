//! The catalytic tape: a fixed-size bit store whose initial contents must be
//! restored exactly, plus register vectors laid out inside it and the space
//! meters that account for ordinary working memory.

mod registers;
mod workspace;

pub use registers::{RegisterVector, VectorPhase};
pub use workspace::{Counters, Section, VecId, Workspace};

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

/// Initial contents for a new arena.
#[derive(Clone, Debug)]
pub enum ArenaInit {
    Zeros,
    Ones,
    /// Pseudo-random bits from a seeded generator.
    Random(u64),
    /// Bit `k` of the arena is element `k`.
    Bits(Vec<bool>),
}

impl ArenaInit {
    /// Parses a string of `0`/`1` characters; the first character is bit 0.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(invalid(format!("bad bit character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ArenaInit::Bits)
    }
}

/// How the initial contents are remembered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecordMode {
    #[default]
    FullCopy,
    Digest,
}

#[derive(Clone, Debug)]
enum InitRecord {
    Copy(Vec<u64>),
    Digest([u8; 32]),
}

/// Bit accounting for one arena and the algorithm running against it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SpaceMeter {
    pub free_bits_current: usize,
    pub free_bits_peak: usize,
    pub catalytic_bits_current: usize,
    pub catalytic_bits_peak: usize,
}

impl SpaceMeter {
    pub fn acquire_free(&mut self, bits: usize) {
        self.free_bits_current += bits;
        self.free_bits_peak = self.free_bits_peak.max(self.free_bits_current);
    }

    pub fn release_free(&mut self, bits: usize) {
        debug_assert!(self.free_bits_current >= bits, "free meter underflow");
        self.free_bits_current = self.free_bits_current.saturating_sub(bits);
    }

    fn claim_catalytic(&mut self, bits: usize) {
        self.catalytic_bits_current += bits;
        self.catalytic_bits_peak = self.catalytic_bits_peak.max(self.catalytic_bits_current);
    }

    fn unclaim_catalytic(&mut self, bits: usize) {
        self.catalytic_bits_current -= bits;
    }

    /// Forgets peaks, keeping current levels.
    pub fn reset_peaks(&mut self) {
        self.free_bits_peak = self.free_bits_current;
        self.catalytic_bits_peak = self.catalytic_bits_current;
    }
}

#[derive(Clone, Debug)]
pub struct CatalyticArena {
    words: Vec<u64>,
    len: usize,
    init: InitRecord,
    claims: Vec<(usize, usize)>,
    pub meter: SpaceMeter,
}

fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
fn low_mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

impl CatalyticArena {
    pub fn new(total_bits: usize, init: ArenaInit) -> Result<Self> {
        Self::with_record(total_bits, init, RecordMode::FullCopy)
    }

    pub fn with_record(total_bits: usize, init: ArenaInit, mode: RecordMode) -> Result<Self> {
        if total_bits == 0 {
            return Err(invalid("arena size must be positive"));
        }
        let nwords = total_bits.div_ceil(64);
        let mut words = match init {
            ArenaInit::Zeros => vec![0; nwords],
            ArenaInit::Ones => vec![u64::MAX; nwords],
            ArenaInit::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..nwords).map(|_| rng.next_u64()).collect()
            }
            ArenaInit::Bits(bits) => {
                if bits.len() != total_bits {
                    return Err(invalid(format!(
                        "explicit contents have {} bits, arena has {total_bits}",
                        bits.len()
                    )));
                }
                let mut w = vec![0u64; nwords];
                for (k, &b) in bits.iter().enumerate() {
                    w[k / 64] |= (b as u64) << (k % 64);
                }
                w
            }
        };
        *words.last_mut().unwrap() &= tail_mask(total_bits);
        let init = match mode {
            RecordMode::FullCopy => InitRecord::Copy(words.clone()),
            RecordMode::Digest => InitRecord::Digest(digest(&words)),
        };
        Ok(CatalyticArena {
            words,
            len: total_bits,
            init,
            claims: Vec::new(),
            meter: SpaceMeter::default(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.len, "bit {k} out of range");
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn flip_bit(&mut self, k: usize) {
        assert!(k < self.len, "bit {k} out of range");
        self.words[k / 64] ^= 1 << (k % 64);
    }

    /// Reads `w <= 64` bits starting at `off`, least significant first.
    #[inline]
    pub fn read_bits(&self, off: usize, w: u32) -> u64 {
        debug_assert!(off + w as usize <= self.len);
        let i = off >> 6;
        let sh = (off & 63) as u32;
        let mut v = self.words[i] >> sh;
        if sh + w > 64 {
            v |= self.words[i + 1] << (64 - sh);
        }
        v & low_mask(w)
    }

    #[inline]
    pub fn write_bits(&mut self, off: usize, w: u32, val: u64) {
        debug_assert!(off + w as usize <= self.len);
        debug_assert!(val & !low_mask(w) == 0);
        let i = off >> 6;
        let sh = (off & 63) as u32;
        let m = low_mask(w);
        self.words[i] = (self.words[i] & !(m << sh)) | (val << sh);
        if sh + w > 64 {
            let hi = sh + w - 64;
            let mh = low_mask(hi);
            self.words[i + 1] = (self.words[i + 1] & !mh) | (val >> (64 - sh));
        }
    }

    /// True iff the current contents equal the initial contents.
    pub fn verify_restored(&self) -> bool {
        match &self.init {
            InitRecord::Copy(w) => *w == self.words,
            InitRecord::Digest(d) => *d == digest(&self.words),
        }
    }

    /// Index of the first bit that differs from the initial contents.
    /// Only available in full-copy mode.
    pub fn first_difference(&self) -> Option<usize> {
        let InitRecord::Copy(w) = &self.init else {
            return None;
        };
        w.iter()
            .zip(&self.words)
            .position(|(a, b)| a != b)
            .map(|i| i * 64 + (w[i] ^ self.words[i]).trailing_zeros() as usize)
    }

    /// Bits not covered by any claim.
    pub fn unclaimed_bits(&self) -> usize {
        self.len - self.claims.iter().map(|c| c.1).sum::<usize>()
    }

    /// Reserves `bits` contiguous bits (first fit) and returns the offset.
    pub(crate) fn claim(&mut self, bits: usize) -> Result<usize> {
        let mut cursor = 0;
        let mut at = self.claims.len();
        for (k, &(s, l)) in self.claims.iter().enumerate() {
            if s - cursor >= bits {
                at = k;
                break;
            }
            cursor = s + l;
        }
        if at == self.claims.len() && self.len - cursor < bits {
            return Err(Error::Capacity {
                needed: bits,
                available: self.unclaimed_bits(),
            });
        }
        self.claims.insert(at, (cursor, bits));
        self.meter.claim_catalytic(bits);
        Ok(cursor)
    }

    pub(crate) fn unclaim(&mut self, offset: usize) {
        if let Some(k) = self.claims.iter().position(|c| c.0 == offset) {
            let (_, l) = self.claims.remove(k);
            self.meter.unclaim_catalytic(l);
        }
    }

    /// Writes the snapshot format: an 8-byte little-endian bit count, then
    /// the bits packed little-endian (bit `k` is bit `k % 8` of byte `k / 8`).
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.len as u64).to_le_bytes())?;
        let nbytes = self.len.div_ceil(8);
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a snapshot; the loaded contents become the arena's initial contents.
    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut hdr = [0u8; 8];
        input.read_exact(&mut hdr)?;
        let len = u64::from_le_bytes(hdr) as usize;
        if len == 0 {
            return Err(invalid("snapshot holds an empty arena"));
        }
        let mut bytes = vec![0u8; len.div_ceil(8)];
        input.read_exact(&mut bytes)?;
        let bits = (0..len).map(|k| bytes[k / 8] >> (k % 8) & 1 == 1).collect();
        Self::new(len, ArenaInit::Bits(bits))
    }
}

fn digest(words: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    for w in words {
        h.update(w.to_le_bytes());
    }
    h.finalize().into()
}
