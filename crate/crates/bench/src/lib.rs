//! Deterministic fixtures shared by the benchmarks.

use catalyst_core::walkflow::Digraph;

/// A digraph on `n` vertices with edges `i → 3i+1` and `i → i+1` (mod `n`).
pub fn ring_graph(n: usize) -> Digraph {
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, (3 * i + 1) % n), (i, (i + 1) % n)]).collect();
    edges.retain(|&(u, v)| u != v);
    edges.sort_unstable();
    edges.dedup();
    Digraph::new(n, &edges).expect("valid fixture")
}

/// Grid weights below `p` from a fixed mixing function.
pub fn grid_weight(p: u64) -> impl Fn((usize, usize), (usize, usize)) -> u64 + Copy {
    catalyst_core::testkit::hashed_grid_weight(0x5EED, p)
}

/// A pair of length-`len` strings over four letters that differ in
/// roughly a third of the positions.
pub fn string_pair(len: usize) -> (Vec<u8>, Vec<u8>) {
    let x: Vec<u8> = (0..len).map(|i| b"acgt"[(i * 7 + 1) % 4]).collect();
    let y: Vec<u8> = (0..len).map(|i| if i % 3 == 0 { b"acgt"[(i * 5) % 4] } else { x[i] }).collect();
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let g = ring_graph(16);
        assert_eq!(g.vertex_count(), 16);
        assert!(g.edge_count() >= 16);
        let (x, y) = string_pair(9);
        assert_eq!((x.len(), y.len()), (9, 9));
        assert!(grid_weight(13)((0, 0), (1, 1)) < 13);
    }
}
