//! Total path weight on layered grids.
//!
//! `Grid_{n,n}` has vertices `(i, j)` with `0 ≤ i, j ≤ n`; `i` is the layer
//! and `j` the row. Every edge goes from layer `i` to `i + 1` and changes
//! the row by at most one. Rows are split into classes of `s = N/C`
//! consecutive rows; class `c` holds rows `[c·s, (c+1)·s)`, so the last row
//! `N` forms its own class `C`.
//!
//! OUTER recurses over layer halves and middle classes; its base case runs
//! INNER on a `4s`-row window around the two classes, under a mask that
//! zeroes boundary edges outside the classes.

use serde::Serialize;

use crate::arena::{ArenaInit, CatalyticArena, RegisterVector, Section, Workspace};
use crate::error::{invalid, Result};
use crate::field::{f_mul, f_sub};

/// `(layer, row)`.
pub type GridVertex = (usize, usize);

/// Targets of `(i, j)` in `Grid_{n,n}`.
pub fn grid_out_edges(n: usize, (i, j): GridVertex) -> Vec<GridVertex> {
    if i >= n || j > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(3);
    if j > 0 {
        out.push((i + 1, j - 1));
    }
    out.push((i + 1, j));
    if j < n {
        out.push((i + 1, j + 1));
    }
    out
}

/// Edge weights, already reduced modulo the working prime.
pub trait WeightOracle {
    fn weight(&self, from: GridVertex, to: GridVertex) -> u64;
}

impl<F: Fn(GridVertex, GridVertex) -> u64> WeightOracle for F {
    fn weight(&self, from: GridVertex, to: GridVertex) -> u64 {
        self(from, to)
    }
}

/// The subgraph `H(ℓ_in, ℓ_out, i_top, h, i_in, i_out, h_class)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MaskParams {
    pub l_in: usize,
    pub l_out: usize,
    pub i_top: usize,
    pub h: usize,
    pub i_in: usize,
    pub i_out: usize,
    pub h_class: usize,
}

impl MaskParams {
    #[inline]
    pub fn allows(&self, (fl, fr): GridVertex, (tl, tr): GridVertex) -> bool {
        let within = |x: usize, lo: usize, len: usize| x.wrapping_sub(lo) < len;
        let layers = self.l_out.wrapping_sub(self.l_in).wrapping_add(1);
        within(fl, self.l_in, layers)
            && within(tl, self.l_in, layers)
            && within(fr, self.i_top, self.h)
            && within(tr, self.i_top, self.h)
            && (fl != self.l_in || within(fr, self.i_in, self.h_class))
            && (tl != self.l_out || within(tr, self.i_out, self.h_class))
    }
}

/// `base` restricted to a masked subgraph.
pub struct Masked<'a, O: ?Sized> {
    base: &'a O,
    params: MaskParams,
}

impl<O: WeightOracle + ?Sized> WeightOracle for Masked<'_, O> {
    fn weight(&self, from: GridVertex, to: GridVertex) -> u64 {
        if self.params.allows(from, to) {
            self.base.weight(from, to)
        } else {
            0
        }
    }
}

pub fn mask_oracle<O: WeightOracle + ?Sized>(base: &O, params: MaskParams) -> Masked<'_, O> {
    Masked { base, params }
}

/// Grid `n` extended to a larger grid: rows and layers past `n` carry weight
/// 0, except that from layer `target.0` on only the straight edges along
/// row `target.1` remain, with weight 1.
pub struct Extended<'a, O: ?Sized> {
    base: &'a O,
    n: usize,
    target: GridVertex,
}

impl<O: WeightOracle + ?Sized> WeightOracle for Extended<'_, O> {
    fn weight(&self, from: GridVertex, to: GridVertex) -> u64 {
        if from.0 >= self.target.0 {
            return u64::from(from.1 == self.target.1 && to.1 == self.target.1);
        }
        if to.0 > self.n || from.1 > self.n || to.1 > self.n {
            return 0;
        }
        self.base.weight(from, to)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridParams {
    /// Sets `C = 2^ceil(sqrt((ε/2.1) log2 N))`.
    pub eps: f64,
    /// Overrides the class count (a power of two).
    pub classes: Option<usize>,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { eps: 0.4, classes: None }
    }
}

/// Sizes fixed by the endpoints.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridPlan {
    /// Padded side.
    pub side: usize,
    pub classes: usize,
    pub class_rows: usize,
    /// Layer distance after padding.
    pub distance: usize,
    pub outer_level: u32,
    pub inner_level: u32,
}

impl GridPlan {
    pub fn new(n: usize, u: GridVertex, v: GridVertex, params: GridParams) -> Result<Self> {
        if u.0 > n || u.1 > n || v.0 > n || v.1 > n {
            return Err(invalid(format!("endpoint outside Grid_{{{n},{n}}}")));
        }
        if v.0 <= u.0 {
            return Err(invalid("target layer must follow the source layer"));
        }
        let distance = (v.0 - u.0).next_power_of_two();
        let side = n.max(u.0 + distance).max(2).next_power_of_two();
        let classes = match params.classes {
            Some(c) if c.is_power_of_two() && c <= side => c,
            Some(c) => return Err(invalid(format!("class count {c} must be a power of two at most {side}"))),
            None => {
                let e = ((params.eps / 2.1) * (side as f64).log2()).sqrt().ceil() as u32;
                (1usize << e.min(30)).clamp(1, side)
            }
        };
        let class_rows = side / classes;
        let (outer_level, inner_level) = if distance > class_rows {
            ((distance / class_rows).trailing_zeros(), class_rows.trailing_zeros())
        } else {
            (0, distance.trailing_zeros())
        };
        Ok(GridPlan { side, classes, class_rows, distance, outer_level, inner_level })
    }

    /// Registers: `r_in`, `r_out` and one mid vector per OUTER level of
    /// `s` registers, two window vectors and one mid per INNER level of
    /// `4s` registers.
    pub fn vector_lengths(&self) -> Vec<usize> {
        let s = self.class_rows;
        let mut v = vec![s; 2 + self.outer_level as usize];
        v.extend(std::iter::repeat_n(4 * s, 2 + self.inner_level as usize));
        v
    }

    pub fn catalytic_bits(&self, p: u64) -> usize {
        self.vector_lengths().iter().map(|&m| RegisterVector::footprint(m, p)).sum()
    }
}

/// Which of the three layer variables plays `in`, `out` and `mid`.
#[derive(Clone, Copy)]
struct Roles {
    i: usize,
    o: usize,
    m: usize,
}

#[derive(Clone, Copy)]
enum Half {
    MidOut,
    InMid,
}

const CALLS: [(Half, bool); 4] = [(Half::MidOut, false), (Half::InMid, true), (Half::MidOut, true), (Half::InMid, false)];

struct Engine<'w> {
    ws: &'w mut Workspace,
    p: u64,
    rows: usize,
    s: usize,
    classes: usize,
    vars: [usize; 3],
    outer_mids: Vec<Section>,
    inner_mids: Vec<Section>,
    window: [Section; 2],
}

impl Engine<'_> {
    fn call(&self, k: usize, positive: bool) -> (Half, bool) {
        if positive {
            CALLS[k]
        } else {
            let (h, s) = CALLS[3 - k];
            (h, !s)
        }
    }

    /// Restores the variable a child call used as its middle layer.
    fn fix(&mut self, half: Half, v: Roles) {
        match half {
            Half::MidOut => self.vars[v.i] = 2 * self.vars[v.m] - self.vars[v.o],
            Half::InMid => self.vars[v.o] = 2 * self.vars[v.m] - self.vars[v.i],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn inner<O: WeightOracle + ?Sized>(
        &mut self,
        level: u32,
        r_in: Section,
        r_out: Section,
        v: Roles,
        i_top: usize,
        oracle: &O,
        positive: bool,
    ) -> Result<()> {
        let entry = (self.vars[v.i], self.vars[v.o]);
        let h = r_in.len;
        if level == 0 {
            let (a, b) = entry;
            assert_eq!(b, a + 1, "INNER base on non-adjacent layers");
            let end = (i_top + h).min(self.rows + 1);
            for row in i_top..end {
                let x = self.ws.get(r_in, row - i_top);
                if x == 0 {
                    continue;
                }
                for t in row.saturating_sub(1)..=(row + 1).min(end - 1) {
                    let w = oracle.weight((a, row), (b, t));
                    self.ws.counters.oracle_queries += 1;
                    if w >= self.p {
                        return Err(invalid(format!("oracle weight {w} not reduced mod {}", self.p)));
                    }
                    if w != 0 {
                        let d = if w == 1 { x } else { f_mul(x, w, self.p) };
                        self.ws.add_signed(r_out, t - i_top, d, positive);
                    }
                }
            }
        } else {
            let r_mid = self.inner_mids[level as usize - 1];
            self.ws.meter_mut().acquire_free(4);
            self.vars[v.m] = (self.vars[v.i] + self.vars[v.o]) / 2;
            for k in 0..4 {
                let (half, sign) = self.call(k, positive);
                match half {
                    Half::MidOut => {
                        self.inner(level - 1, r_mid, r_out, Roles { i: v.m, o: v.o, m: v.i }, i_top, oracle, sign)?
                    }
                    Half::InMid => {
                        self.inner(level - 1, r_in, r_mid, Roles { i: v.i, o: v.m, m: v.o }, i_top, oracle, sign)?
                    }
                }
                self.fix(half, v);
            }
            self.ws.meter_mut().release_free(4);
        }
        assert_eq!((self.vars[v.i], self.vars[v.o]), entry, "layer variables not restored");
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn outer<O: WeightOracle + ?Sized>(
        &mut self,
        level: u32,
        r_in: Section,
        r_out: Section,
        v: Roles,
        c_in: usize,
        c_out: usize,
        oracle: &O,
        positive: bool,
    ) -> Result<()> {
        let entry = (self.vars[v.i], self.vars[v.o]);
        let s = self.s;
        if level == 0 {
            if c_in.abs_diff(c_out) >= 2 {
                return Ok(());
            }
            let i_top = c_in.min(c_out).saturating_sub(1) * s;
            let params = MaskParams {
                l_in: entry.0,
                l_out: entry.1,
                i_top,
                h: 4 * s,
                i_in: c_in * s,
                i_out: c_out * s,
                h_class: s,
            };
            let lg = (usize::BITS - self.rows.leading_zeros()) as usize;
            self.ws.meter_mut().acquire_free(7 * lg);
            let masked = mask_oracle(oracle, params);
            let [w_in, w_out] = self.window;
            let (off_in, off_out) = (c_in * s - i_top, c_out * s - i_top);
            for k in 0..s {
                self.ws.swap(r_in, k, w_in, off_in + k);
                self.ws.swap(r_out, k, w_out, off_out + k);
            }
            let level = (entry.1 - entry.0).trailing_zeros();
            self.inner(level, w_in, w_out, v, i_top, &masked, positive)?;
            for k in 0..s {
                self.ws.swap(r_in, k, w_in, off_in + k);
                self.ws.swap(r_out, k, w_out, off_out + k);
            }
            self.ws.meter_mut().release_free(7 * lg);
        } else {
            let r_mid = self.outer_mids[level as usize - 1];
            let frame = 4 + (usize::BITS - self.classes.leading_zeros()) as usize;
            self.ws.meter_mut().acquire_free(frame);
            for step in 0..self.classes {
                let c_mid = if positive { step } else { self.classes - 1 - step };
                self.vars[v.m] = (self.vars[v.i] + self.vars[v.o]) / 2;
                for k in 0..4 {
                    let (half, sign) = self.call(k, positive);
                    match half {
                        Half::MidOut => self.outer(
                            level - 1,
                            r_mid,
                            r_out,
                            Roles { i: v.m, o: v.o, m: v.i },
                            c_mid,
                            c_out,
                            oracle,
                            sign,
                        )?,
                        Half::InMid => self.outer(
                            level - 1,
                            r_in,
                            r_mid,
                            Roles { i: v.i, o: v.m, m: v.o },
                            c_in,
                            c_mid,
                            oracle,
                            sign,
                        )?,
                    }
                    self.fix(half, v);
                }
            }
            self.ws.meter_mut().release_free(frame);
        }
        assert_eq!((self.vars[v.i], self.vars[v.o]), entry, "layer variables not restored");
        Ok(())
    }
}

/// Runs OUTER at the plan's level on caller-provided vectors: adds
/// `r_in · W` from class `c_in` at layer `l_in` to class `c_out` at layer
/// `l_in + distance`. `vectors` must have the plan's `vector_lengths`.
#[allow(clippy::too_many_arguments)]
pub fn outer<O: WeightOracle + ?Sized>(
    ws: &mut Workspace,
    plan: &GridPlan,
    vectors: &[Section],
    l_in: usize,
    c_in: usize,
    c_out: usize,
    oracle: &O,
    p: u64,
    forward: bool,
) -> Result<()> {
    let lens = plan.vector_lengths();
    if vectors.len() != lens.len() || vectors.iter().zip(&lens).any(|(s, &l)| s.len != l) {
        return Err(invalid("vector set does not match the plan"));
    }
    if c_in > plan.classes || c_out > plan.classes {
        return Err(invalid("class index out of range"));
    }
    let o = plan.outer_level as usize;
    let mut engine = Engine {
        ws,
        p,
        rows: plan.side,
        s: plan.class_rows,
        classes: plan.side.min(plan.classes * plan.class_rows) / plan.class_rows + 1,
        vars: [l_in, l_in + plan.distance, 0],
        outer_mids: vectors[2..2 + o].to_vec(),
        window: [vectors[2 + o], vectors[3 + o]],
        inner_mids: vectors[4 + o..].to_vec(),
    };
    let lg = (usize::BITS - plan.side.leading_zeros()) as usize;
    engine.ws.meter_mut().acquire_free(3 * lg);
    let r = engine.outer(plan.outer_level, vectors[0], vectors[1], Roles { i: 0, o: 1, m: 2 }, c_in, c_out, oracle, forward);
    engine.ws.meter_mut().release_free(3 * lg);
    r
}

/// INNER on a `h`-row window: adds `r_in · W` from rows
/// `[i_top, i_top + h)` of layer `l_in` to the same rows of layer
/// `l_in + 2^level`. `mids` supplies one `h`-register vector per level.
#[allow(clippy::too_many_arguments)]
pub fn inner<O: WeightOracle + ?Sized>(
    ws: &mut Workspace,
    n: usize,
    level: u32,
    r_in: Section,
    r_out: Section,
    mids: &[Section],
    l_in: usize,
    i_top: usize,
    oracle: &O,
    p: u64,
    forward: bool,
) -> Result<()> {
    let h = r_in.len;
    if r_out.len != h || mids.len() < level as usize || mids.iter().any(|m| m.len != h) {
        return Err(invalid("INNER vectors must all hold h registers"));
    }
    if i_top > n || l_in + (1 << level) > n {
        return Err(invalid("INNER window outside the grid"));
    }
    let mut engine = Engine {
        ws,
        p,
        rows: n,
        s: h,
        classes: 1,
        vars: [l_in, l_in + (1 << level), 0],
        outer_mids: Vec::new(),
        window: [r_in, r_out],
        inner_mids: mids.to_vec(),
    };
    engine.inner(level, r_in, r_out, Roles { i: 0, o: 1, m: 2 }, i_top, oracle, forward)
}

/// Counters from one `grid_path_weight` call.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GridStats {
    pub oracle_queries: u64,
    pub catalytic_bits: usize,
    pub free_bits_peak: usize,
}

/// Sum over `u → v` paths of the product of edge weights, mod `p`.
pub fn grid_path_weight<O: WeightOracle + ?Sized>(
    ws: &mut Workspace,
    n: usize,
    u: GridVertex,
    v: GridVertex,
    oracle: &O,
    p: u64,
    params: GridParams,
) -> Result<(u64, GridStats)> {
    if u.0 > n || u.1 > n || v.0 > n || v.1 > n {
        return Err(invalid(format!("endpoint outside Grid_{{{n},{n}}}")));
    }
    if v.0 <= u.0 {
        return Ok((u64::from(u == v) % p, GridStats::default()));
    }
    let plan = GridPlan::new(n, u, v, params)?;
    let queries_before = ws.counters.oracle_queries;
    let free_before = ws.meter().free_bits_peak;
    ws.meter_mut().reset_peaks();
    let cat_before = ws.meter().catalytic_bits_current;
    let mut vectors = Vec::new();
    for m in plan.vector_lengths() {
        vectors.push(ws.alloc_catalytic(m, p)?);
    }
    let catalytic_bits = ws.meter().catalytic_bits_current - cat_before;
    let target = (u.0 + plan.distance, v.1);
    let extended = Extended { base: oracle, n, target: v };
    let boundary = MaskParams {
        l_in: u.0,
        l_out: target.0,
        i_top: 0,
        h: plan.side + 1,
        i_in: u.1,
        i_out: v.1,
        h_class: 1,
    };
    let masked = mask_oracle(&extended, boundary);
    let s = plan.class_rows;
    let (c_in, c_out) = (u.1 / s, v.1 / s);
    let (r_in, r_out) = (vectors[0], vectors[1]);
    // Rows past `n` carry no weight, so the engine may skip them.
    let active = GridPlan { side: n, ..plan };
    let run = |ws: &mut Workspace, forward: bool| outer(ws, &active, &vectors, u.0, c_in, c_out, &masked, p, forward);
    ws.meter_mut().acquire_free(2 * crate::field::cell_width(p) as usize);
    run(ws, true)?;
    let r1 = ws.get(r_out, v.1 % s);
    run(ws, false)?;
    ws.add(r_in, u.1 % s, 1);
    run(ws, true)?;
    let r2 = ws.get(r_out, v.1 % s);
    run(ws, false)?;
    ws.sub(r_in, u.1 % s, 1);
    ws.meter_mut().release_free(2 * crate::field::cell_width(p) as usize);
    for sec in vectors.into_iter().rev() {
        ws.release(sec)?;
    }
    let stats = GridStats {
        oracle_queries: ws.counters.oracle_queries - queries_before,
        catalytic_bits,
        free_bits_peak: ws.meter().free_bits_peak,
    };
    let m = ws.meter_mut();
    m.free_bits_peak = m.free_bits_peak.max(free_before);
    Ok((f_sub(r2, r1, p), stats))
}

/// [`grid_path_weight`] on a fresh arena sized for the call; also reports
/// whether the arena was restored.
pub fn grid_path_weight_fresh<O: WeightOracle + ?Sized>(
    n: usize,
    u: GridVertex,
    v: GridVertex,
    oracle: &O,
    p: u64,
    params: GridParams,
    init: ArenaInit,
) -> Result<(u64, GridStats, bool)> {
    let bits = if v.0 > u.0 { GridPlan::new(n, u, v, params)?.catalytic_bits(p) } else { 0 };
    let mut ws = Workspace::new(CatalyticArena::new(bits + 64, init)?);
    let (value, stats) = grid_path_weight(&mut ws, n, u, v, oracle, p, params)?;
    Ok((value, stats, ws.verify_restored()))
}
