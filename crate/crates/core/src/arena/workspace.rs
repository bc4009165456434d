//! A catalytic arena together with the register vectors an algorithm has
//! placed in it (or on the metered free tape), addressed by handle.

use serde::Serialize;

use super::{CatalyticArena, RegisterVector, SpaceMeter};
use crate::error::{invalid, Error, Result};
use crate::field::{cell_width, f_add, f_sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VecId(u32);

/// A contiguous run of registers of one vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Section {
    pub vec: VecId,
    pub start: usize,
    pub len: usize,
}

impl Section {
    /// Sub-range relative to this section.
    pub fn sub(self, start: usize, len: usize) -> Section {
        assert!(start + len <= self.len, "sub-section out of range");
        Section {
            vec: self.vec,
            start: self.start + start,
            len,
        }
    }

    pub fn overlaps(&self, other: &Section) -> bool {
        self.vec == other.vec
            && self.start < other.start + other.len
            && other.start < self.start + self.len
    }
}

/// Instruction and query counts accumulated by the engines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub reg_ops: u64,
    pub base_calls: u64,
    pub oracle_queries: u64,
}

#[derive(Debug)]
enum Slot {
    Catalytic(RegisterVector),
    Free { vals: Vec<u64>, p: u64, bits: usize },
}

#[derive(Debug)]
pub struct Workspace {
    arena: CatalyticArena,
    slots: Vec<Option<Slot>>,
    pub counters: Counters,
}

impl Workspace {
    pub fn new(arena: CatalyticArena) -> Self {
        Workspace {
            arena,
            slots: Vec::new(),
            counters: Counters::default(),
        }
    }

    pub fn arena(&self) -> &CatalyticArena {
        &self.arena
    }

    pub fn arena_mut(&mut self) -> &mut CatalyticArena {
        &mut self.arena
    }

    pub fn into_arena(self) -> CatalyticArena {
        self.arena
    }

    pub fn meter(&self) -> &SpaceMeter {
        &self.arena.meter
    }

    pub fn meter_mut(&mut self) -> &mut SpaceMeter {
        &mut self.arena.meter
    }

    pub fn verify_restored(&self) -> bool {
        self.arena.verify_restored()
    }

    /// Number of vectors currently live.
    pub fn live_vectors(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    fn put(&mut self, slot: Slot) -> VecId {
        if let Some(k) = self.slots.iter().position(Option::is_none) {
            self.slots[k] = Some(slot);
            VecId(k as u32)
        } else {
            self.slots.push(Some(slot));
            VecId(self.slots.len() as u32 - 1)
        }
    }

    /// Places `m` registers mod `p` on the catalytic tape.
    pub fn alloc_catalytic(&mut self, m: usize, p: u64) -> Result<Section> {
        let v = RegisterVector::alloc(&mut self.arena, m, p)?;
        let id = self.put(Slot::Catalytic(v));
        Ok(Section { vec: id, start: 0, len: m })
    }

    /// Zero-initialized registers on the free tape, charged to the meter.
    pub fn alloc_free(&mut self, m: usize, p: u64) -> Section {
        let bits = m * cell_width(p) as usize;
        self.arena.meter.acquire_free(bits);
        let id = self.put(Slot::Free { vals: vec![0; m], p, bits });
        Section { vec: id, start: 0, len: m }
    }

    pub fn release(&mut self, sec: Section) -> Result<()> {
        let slot = self
            .slots
            .get_mut(sec.vec.0 as usize)
            .and_then(Option::take)
            .ok_or_else(|| invalid("vector already released"))?;
        match slot {
            Slot::Catalytic(mut v) => v.release(&mut self.arena)?,
            Slot::Free { bits, .. } => self.arena.meter.release_free(bits),
        }
        Ok(())
    }

    fn slot(&self, id: VecId) -> &Slot {
        self.slots[id.0 as usize].as_ref().expect("use of released vector")
    }

    /// The catalytic vector behind a handle, if it is one.
    pub fn vector(&self, id: VecId) -> Option<&RegisterVector> {
        match self.slot(id) {
            Slot::Catalytic(v) => Some(v),
            Slot::Free { .. } => None,
        }
    }

    pub fn modulus(&self, id: VecId) -> u64 {
        match self.slot(id) {
            Slot::Catalytic(v) => v.p(),
            Slot::Free { p, .. } => *p,
        }
    }

    #[inline]
    pub fn get(&self, sec: Section, i: usize) -> u64 {
        debug_assert!(i < sec.len);
        let k = sec.start + i;
        match self.slot(sec.vec) {
            Slot::Catalytic(v) => v.read_unchecked(&self.arena, k),
            Slot::Free { vals, .. } => vals[k],
        }
    }

    /// Register `i` of `sec` += `delta` (reduced mod p).
    #[inline]
    pub fn add(&mut self, sec: Section, i: usize, delta: u64) {
        debug_assert!(i < sec.len);
        self.counters.reg_ops += 1;
        let k = sec.start + i;
        match self.slots[sec.vec.0 as usize].as_mut().expect("use of released vector") {
            Slot::Catalytic(v) => v.add_unchecked(&mut self.arena, k, delta),
            Slot::Free { vals, p, .. } => vals[k] = f_add(vals[k], delta, *p),
        }
    }

    /// Register `i` of `sec` -= `delta`.
    #[inline]
    pub fn sub(&mut self, sec: Section, i: usize, delta: u64) {
        let p = self.modulus(sec.vec);
        self.add(sec, i, f_sub(0, delta, p));
    }

    /// Adds `sign · delta`.
    #[inline]
    pub fn add_signed(&mut self, sec: Section, i: usize, delta: u64, positive: bool) {
        if delta == 0 {
            return;
        }
        if positive {
            self.add(sec, i, delta)
        } else {
            self.sub(sec, i, delta)
        }
    }

    /// Exchanges two registers using additions only.
    pub fn swap(&mut self, a: Section, i: usize, b: Section, j: usize) {
        let p = self.modulus(a.vec);
        debug_assert_eq!(p, self.modulus(b.vec));
        let (x, y) = (self.get(a, i), self.get(b, j));
        self.add(a, i, f_sub(y, x, p));
        self.add(b, j, f_sub(x, y, p));
    }

    /// Checked read for callers outside the engines.
    pub fn read(&self, sec: Section, i: usize) -> Result<u64> {
        if i >= sec.len {
            return Err(Error::Bounds { index: i, len: sec.len });
        }
        Ok(self.get(sec, i))
    }

    /// Checked addition for callers outside the engines.
    pub fn try_add(&mut self, sec: Section, i: usize, delta: u64) -> Result<()> {
        if i >= sec.len {
            return Err(Error::Bounds { index: i, len: sec.len });
        }
        let p = self.modulus(sec.vec);
        if delta >= p {
            return Err(invalid(format!("delta {delta} is not reduced mod {p}")));
        }
        self.add(sec, i, delta);
        Ok(())
    }

    /// Snapshot of a section's values.
    pub fn values(&self, sec: Section) -> Vec<u64> {
        (0..sec.len).map(|i| self.get(sec, i)).collect()
    }
}
