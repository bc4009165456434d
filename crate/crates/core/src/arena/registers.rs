//! Register vectors mod p inside the arena.
//!
//! A vector of `m` registers uses `8·m·w` arena bits split into groups of
//! `b = 8g` cells, `g = max(ceil(log2 m), 4)`, each group serving `g`
//! registers. A group is healthy when at least `g` of its cells already hold
//! a value below `p`; the registers of the group are its first `g` such cells.
//!
//! An unhealthy group has at most `g - 1` in-range cells, so all but at most
//! `g - 1` cells carry a set MSB. It is repaired in place:
//!
//! * the MSBs of the first `2g` cells are flipped, leaving at least `g + 1`
//!   of them in range;
//! * the last `6g` cells lose their MSBs and their `(w-1)`-bit remainders are
//!   packed contiguously, freeing `6g` bits at the end of the group;
//! * the freed bits hold `2g` indicator bits (one per consecutive triple of
//!   compressed cells, set when all three MSBs were one), then the 3-bit MSB
//!   patterns of the remaining triples in order, then the `g`-bit index of
//!   the next unhealthy group (all ones ends the chain).
//!
//! Only the chain head lives outside the arena.

use super::CatalyticArena;
use crate::error::{invalid, Error, Result};
use crate::field::{cell_width, f_add, is_prime};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorPhase {
    Active,
    Released,
}

#[derive(Clone, Debug)]
pub struct RegisterVector {
    offset: usize,
    m: usize,
    m_padded: usize,
    p: u64,
    w: u32,
    g: usize,
    unhealthy_head: Option<usize>,
    unhealthy: usize,
    locs: Vec<usize>,
    phase: VectorPhase,
}

fn group_registers(m: usize) -> usize {
    let lg = usize::BITS - (m.max(1) - 1).leading_zeros();
    (lg as usize).max(4)
}

impl RegisterVector {
    /// Arena bits needed for `m` registers mod `p`.
    pub fn footprint(m: usize, p: u64) -> usize {
        let g = group_registers(m);
        8 * m.div_ceil(g) * g * cell_width(p) as usize
    }

    pub fn alloc(arena: &mut CatalyticArena, m: usize, p: u64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("register vector needs at least one register"));
        }
        if p >= 1 << 32 || !is_prime(p) {
            return Err(invalid(format!("modulus {p} is not a prime below 2^32")));
        }
        let w = cell_width(p);
        let g = group_registers(m);
        let m_padded = m.div_ceil(g) * g;
        let offset = arena.claim(8 * m_padded * w as usize)?;
        let mut v = RegisterVector {
            offset,
            m,
            m_padded,
            p,
            w,
            g,
            unhealthy_head: None,
            unhealthy: 0,
            locs: Vec::with_capacity(m),
            phase: VectorPhase::Active,
        };
        let groups = m_padded / g;
        arena.meter.acquire_free(g);
        let mut prev: Option<usize> = None;
        for k in 0..groups {
            let in_range = (0..8 * g).filter(|&c| arena.read_bits(v.cell(k, c), w) < p).count();
            if in_range >= g {
                continue;
            }
            v.unhealthy += 1;
            match prev {
                None => v.unhealthy_head = Some(k),
                Some(j) => v.set_next(arena, j, k),
            }
            v.compress(arena, k);
            prev = Some(k);
        }
        if let Some(j) = prev {
            v.set_next(arena, j, v.sentinel());
        }
        for i in 0..m {
            let loc = v.locate_by_scan(arena, i);
            v.locs.push(loc);
        }
        Ok(v)
    }

    #[inline]
    fn cell(&self, group: usize, c: usize) -> usize {
        self.offset + (group * 8 * self.g + c) * self.w as usize
    }

    fn sentinel(&self) -> usize {
        (1 << self.g) - 1
    }

    /// Start of the compressed tail and of its metadata for a group.
    fn tail(&self, group: usize) -> (usize, usize) {
        let r = self.cell(group, 2 * self.g);
        (r, r + 6 * self.g * (self.w as usize - 1))
    }

    fn compress(&self, arena: &mut CatalyticArena, k: usize) {
        let (g, w) = (self.g, self.w);
        for c in 0..2 * g {
            arena.flip_bit(self.cell(k, c) + w as usize - 1);
        }
        let (r, meta) = self.tail(k);
        arena.meter.acquire_free(6 * g);
        let mut msb = Vec::with_capacity(6 * g);
        for c in 0..6 * g {
            let at = r + c * w as usize;
            let val = arena.read_bits(at, w);
            msb.push(val >> (w - 1) == 1);
            arena.write_bits(r + c * (w as usize - 1), w - 1, val & ((1 << (w - 1)) - 1));
        }
        for t in 0..2 * g {
            let all = msb[3 * t] && msb[3 * t + 1] && msb[3 * t + 2];
            arena.write_bits(meta + t, 1, all as u64);
        }
        let mut at = meta + 2 * g;
        for t in 0..2 * g {
            let bits = msb[3 * t] as u64 | (msb[3 * t + 1] as u64) << 1 | (msb[3 * t + 2] as u64) << 2;
            if bits != 0b111 {
                arena.write_bits(at, 3, bits);
                at += 3;
            }
        }
        debug_assert!(at + g <= meta + 6 * g, "explicit triples overflow freed space");
        // Pointer is filled in once the successor is known; clear the rest.
        for b in at..meta + 6 * g {
            arena.write_bits(b, 1, 0);
        }
        arena.meter.release_free(6 * g);
    }

    fn pointer_slot(&self, arena: &CatalyticArena, k: usize) -> usize {
        let (_, meta) = self.tail(k);
        let explicit = (0..2 * self.g).filter(|&t| arena.read_bits(meta + t, 1) == 0).count();
        meta + 2 * self.g + 3 * explicit
    }

    fn set_next(&self, arena: &mut CatalyticArena, k: usize, next: usize) {
        let at = self.pointer_slot(arena, k);
        arena.write_bits(at, self.g as u32, next as u64);
    }

    fn decompress(&self, arena: &mut CatalyticArena, k: usize) -> usize {
        let (g, w) = (self.g, self.w);
        let (r, meta) = self.tail(k);
        arena.meter.acquire_free(6 * g);
        let mut msb = vec![true; 6 * g];
        let mut at = meta + 2 * g;
        for t in 0..2 * g {
            if arena.read_bits(meta + t, 1) == 0 {
                let bits = arena.read_bits(at, 3);
                at += 3;
                for q in 0..3 {
                    msb[3 * t + q] = bits >> q & 1 == 1;
                }
            }
        }
        let next = arena.read_bits(at, g as u32) as usize;
        for c in (0..6 * g).rev() {
            let rem = arena.read_bits(r + c * (w as usize - 1), w - 1);
            arena.write_bits(r + c * w as usize, w, rem | (msb[c] as u64) << (w - 1));
        }
        for c in 0..2 * g {
            arena.flip_bit(self.cell(k, c) + w as usize - 1);
        }
        arena.meter.release_free(6 * g);
        next
    }

    /// Finds register `i` by scanning its group for the matching in-range
    /// cell. Agrees with the cached location for the whole active phase.
    pub fn locate_by_scan(&self, arena: &CatalyticArena, i: usize) -> usize {
        let (k, j) = (i / self.g, i % self.g);
        (0..8 * self.g)
            .map(|c| self.cell(k, c))
            .filter(|&at| arena.read_bits(at, self.w) < self.p)
            .nth(j)
            .expect("group has enough in-range cells")
    }

    /// Cached bit offset of register `i`.
    #[inline]
    pub fn loc(&self, i: usize) -> usize {
        self.locs[i]
    }

    fn check(&self, i: usize) -> Result<()> {
        if self.phase != VectorPhase::Active {
            return Err(invalid("register vector has been released"));
        }
        if i >= self.m {
            return Err(Error::Bounds { index: i, len: self.m });
        }
        Ok(())
    }

    pub fn read(&self, arena: &CatalyticArena, i: usize) -> Result<u64> {
        self.check(i)?;
        Ok(arena.read_bits(self.locs[i], self.w))
    }

    /// Adds `delta` (already reduced mod p) to register `i`.
    pub fn add(&self, arena: &mut CatalyticArena, i: usize, delta: u64) -> Result<()> {
        self.check(i)?;
        if delta >= self.p {
            return Err(invalid(format!("delta {delta} is not reduced mod {}", self.p)));
        }
        self.add_unchecked(arena, i, delta);
        Ok(())
    }

    #[inline]
    pub(crate) fn add_unchecked(&self, arena: &mut CatalyticArena, i: usize, delta: u64) {
        let at = self.locs[i];
        let v = arena.read_bits(at, self.w);
        arena.write_bits(at, self.w, f_add(v, delta, self.p));
    }

    #[inline]
    pub(crate) fn read_unchecked(&self, arena: &CatalyticArena, i: usize) -> u64 {
        arena.read_bits(self.locs[i], self.w)
    }

    /// Undoes the repair of every unhealthy group and returns the region.
    pub fn release(&mut self, arena: &mut CatalyticArena) -> Result<()> {
        if self.phase != VectorPhase::Active {
            return Err(invalid("register vector released twice"));
        }
        let mut cur = self.unhealthy_head;
        while let Some(k) = cur {
            let next = self.decompress(arena, k);
            cur = (next != self.sentinel()).then_some(next);
        }
        arena.meter.release_free(self.g);
        arena.unclaim(self.offset);
        self.phase = VectorPhase::Released;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn padded_len(&self) -> usize {
        self.m_padded
    }

    pub fn group_cells(&self) -> usize {
        8 * self.g
    }

    pub fn footprint_bits(&self) -> usize {
        8 * self.m_padded * self.w as usize
    }

    pub fn unhealthy_groups(&self) -> usize {
        self.unhealthy
    }

    pub fn phase(&self) -> VectorPhase {
        self.phase
    }
}
