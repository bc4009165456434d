//! Reversible walk-flow propagation.
//!
//! `propagate` at level `ℓ` adds `r_in · W_ℓ` to `r_out`, where `W_ℓ` sums
//! weight products over walks of exactly `2^ℓ` edges, restricted to walks
//! leaving class `c_in` and ending in class `c_out`. Each level splits the
//! walk at its midpoint and loops over the class of the midpoint:
//!
//! ```text
//! for c_mid:  [mid→out]⁻  [in→mid]⁺  [mid→out]⁺  [in→mid]⁻
//! ```
//!
//! where `[mid→out]` recurses with `(r_mid, r_out, r_in)` and `[in→mid]`
//! with `(r_in, r_mid, r_out)`. The garbage in `r_mid` cancels and `r_mid`
//! ends where it started.

use crate::arena::{Section, Workspace};
use crate::error::{invalid, Result};
use crate::field::f_mul;

/// A directed graph on `m` labels, `m` a power of two; labels at or above
/// the original vertex count are isolated padding.
#[derive(Clone, Debug)]
pub struct Digraph {
    n: usize,
    m: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Option<Vec<u64>>,
}

impl Digraph {
    /// Unit-weight graph; repeated edges collapse to one.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut e: Vec<(usize, usize)> = edges.to_vec();
        e.sort_unstable();
        e.dedup();
        let w: Vec<(usize, usize, u64)> = e.into_iter().map(|(u, v)| (u, v, 1)).collect();
        let mut g = Self::weighted(n, &w)?;
        g.weights = None;
        Ok(g)
    }

    /// Weighted graph; weights are reduced modulo the working prime on use.
    pub fn weighted(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one vertex"));
        }
        let m = n.next_power_of_two();
        let mut e = edges.to_vec();
        for &(u, v, _) in &e {
            if u >= n || v >= n {
                return Err(invalid(format!("edge ({u},{v}) outside {n} vertices")));
            }
        }
        e.sort_unstable_by_key(|&(u, v, _)| (u, v));
        if e.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid("repeated weighted edge"));
        }
        let mut offsets = vec![0; m + 1];
        for &(u, _, _) in &e {
            offsets[u + 1] += 1;
        }
        for k in 0..m {
            offsets[k + 1] += offsets[k];
        }
        Ok(Digraph {
            n,
            m,
            offsets,
            targets: e.iter().map(|&(_, v, _)| v as u32).collect(),
            weights: Some(e.iter().map(|&(_, _, w)| w).collect()),
        })
    }

    /// Original vertex count.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Padded label count, a power of two.
    pub fn padded_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// `(target, raw weight)` pairs leaving `v`.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        r.map(move |k| {
            let w = self.weights.as_ref().map_or(1, |w| w[k]);
            (self.targets[k] as usize, w)
        })
    }

    /// All edges as `(u, v, raw weight)`.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        (0..self.m)
            .flat_map(|u| self.out_edges(u).map(move |(v, w)| (u, v, w)))
            .collect()
    }

    /// The same graph with a unit self-loop on every original vertex.
    pub fn with_self_loops(&self) -> Digraph {
        let mut e: Vec<(usize, usize)> = self.edges().into_iter().map(|(u, v, _)| (u, v)).collect();
        e.extend((0..self.n).map(|v| (v, v)));
        Digraph::new(self.n, &e).expect("labels already validated")
    }

    pub fn is_unit_weight(&self) -> bool {
        self.weights.is_none()
    }
}

/// Partition of `m` labels into `C` classes by the top `log2 C` label bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColorClassing {
    m: usize,
    classes: usize,
    shift: u32,
}

impl ColorClassing {
    pub fn new(m: usize, classes: usize) -> Result<Self> {
        if !m.is_power_of_two() || !classes.is_power_of_two() || classes > m {
            return Err(invalid(format!("cannot split {m} labels into {classes} classes")));
        }
        Ok(ColorClassing {
            m,
            classes,
            shift: (m / classes).trailing_zeros(),
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_size(&self) -> usize {
        self.m / self.classes
    }

    pub fn labels(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn color_of(&self, v: usize) -> usize {
        v >> self.shift
    }

    #[inline]
    pub fn index_in_class(&self, v: usize) -> usize {
        v & (self.class_size() - 1)
    }

    #[inline]
    pub fn first_of(&self, c: usize) -> usize {
        c << self.shift
    }
}

/// `color_of` as a free function over `(m, C)`.
pub fn color_of(v: usize, m: usize, classes: usize) -> Result<usize> {
    if v >= m {
        return Err(invalid(format!("label {v} outside {m}")));
    }
    Ok(ColorClassing::new(m, classes)?.color_of(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn is_forward(self) -> bool {
        self == Direction::Forward
    }
}

/// The level-zero program: adds (`positive`) or subtracts `r_in · W_0`
/// between classes `c_in` and `c_out`. Must leave every other register as
/// it found it.
pub trait BaseCase {
    #[allow(clippy::too_many_arguments)]
    fn apply(
        &mut self,
        ws: &mut Workspace,
        c_in: usize,
        c_out: usize,
        r_in: Section,
        r_out: Section,
        r_mid: Section,
        positive: bool,
    ) -> Result<()>;
}

/// Base case that follows single edges of a graph.
pub struct EdgeBase<'g> {
    graph: &'g Digraph,
    classing: ColorClassing,
    p: u64,
    reduced: Option<Vec<u64>>,
}

impl<'g> EdgeBase<'g> {
    pub fn new(graph: &'g Digraph, classing: ColorClassing, p: u64) -> Self {
        let reduced = graph.weights.as_ref().map(|w| w.iter().map(|x| x % p).collect());
        EdgeBase { graph, classing, p, reduced }
    }
}

impl BaseCase for EdgeBase<'_> {
    fn apply(
        &mut self,
        ws: &mut Workspace,
        c_in: usize,
        c_out: usize,
        r_in: Section,
        r_out: Section,
        _r_mid: Section,
        positive: bool,
    ) -> Result<()> {
        ws.counters.base_calls += 1;
        let cl = self.classing;
        let first = cl.first_of(c_in);
        for k in 0..cl.class_size() {
            let x = ws.get(r_in, k);
            if x == 0 {
                continue;
            }
            let v = first + k;
            for e in self.graph.offsets[v]..self.graph.offsets[v + 1] {
                let t = self.graph.targets[e] as usize;
                if cl.color_of(t) != c_out {
                    continue;
                }
                let d = match &self.reduced {
                    Some(w) => f_mul(x, w[e], self.p),
                    None => x,
                };
                ws.add_signed(r_out, cl.index_in_class(t), d, positive);
            }
        }
        Ok(())
    }
}

const CALLS: [(bool, bool); 4] = [(true, false), (false, true), (true, true), (false, false)];

/// Runs the level-`ℓ` program (or its inverse).
#[allow(clippy::too_many_arguments)]
pub fn propagate<B: BaseCase + ?Sized>(
    ws: &mut Workspace,
    level: u32,
    c_in: usize,
    c_out: usize,
    r_in: Section,
    r_out: Section,
    r_mid: Section,
    classing: ColorClassing,
    base: &mut B,
    dir: Direction,
) -> Result<()> {
    if level > classing.labels().trailing_zeros() {
        return Err(invalid(format!(
            "level {level} exceeds log2 of {} labels",
            classing.labels()
        )));
    }
    if c_in >= classing.classes() || c_out >= classing.classes() {
        return Err(invalid("class index out of range"));
    }
    let size = classing.class_size();
    if [r_in, r_out, r_mid].iter().any(|s| s.len != size) {
        return Err(invalid(format!("register sections must hold {size} registers")));
    }
    if r_in.overlaps(&r_out) || r_in.overlaps(&r_mid) || r_out.overlaps(&r_mid) {
        return Err(invalid("register sections overlap"));
    }
    let frame_bits = classing.classes().trailing_zeros() as usize + 2;
    descend(ws, level, c_in, c_out, r_in, r_out, r_mid, classing.classes(), frame_bits, base, dir.is_forward())
}

#[allow(clippy::too_many_arguments)]
fn descend<B: BaseCase + ?Sized>(
    ws: &mut Workspace,
    level: u32,
    c_in: usize,
    c_out: usize,
    r_in: Section,
    r_out: Section,
    r_mid: Section,
    classes: usize,
    frame_bits: usize,
    base: &mut B,
    positive: bool,
) -> Result<()> {
    if level == 0 {
        return base.apply(ws, c_in, c_out, r_in, r_out, r_mid, positive);
    }
    ws.meter_mut().acquire_free(frame_bits);
    for step in 0..classes {
        let c_mid = if positive { step } else { classes - 1 - step };
        for call in 0..4 {
            let (mid_out, sign) = if positive { CALLS[call] } else { CALLS[3 - call] };
            let s = sign == positive;
            if mid_out {
                descend(ws, level - 1, c_mid, c_out, r_mid, r_out, r_in, classes, frame_bits, base, s)?;
            } else {
                descend(ws, level - 1, c_in, c_mid, r_in, r_mid, r_out, classes, frame_bits, base, s)?;
            }
        }
    }
    ws.meter_mut().release_free(frame_bits);
    Ok(())
}
