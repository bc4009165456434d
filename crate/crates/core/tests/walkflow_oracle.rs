use catalyst_core::arena::{ArenaInit, CatalyticArena, Workspace};
use catalyst_core::field::random_prime;
use catalyst_core::testkit::{adjacency, mat_pow, random_digraph};
use catalyst_core::walkflow::{propagate, ColorClassing, Digraph, Direction, EdgeBase};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs one propagate call and checks it against the matrix power.
fn check(seed: u64, m: usize, classes: usize, level: u32, c_in: usize, c_out: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_prime(64, &mut rng).unwrap();
    let q = rng.gen_range(0.05..0.5);
    let mut pairs = random_digraph(m, q, &mut rng);
    pairs.extend((0..m).filter(|_| rng.gen_bool(0.3)).map(|v| (v, v)));
    let edges: Vec<(usize, usize, u64)> = pairs.into_iter().map(|(u, v)| (u, v, rng.gen_range(0..1000))).collect();
    let g = Digraph::weighted(m, &edges).unwrap();
    let cl = ColorClassing::new(m, classes).unwrap();
    let size = m / classes;
    let mut ws = Workspace::new(CatalyticArena::new(1 << 15, ArenaInit::Random(rng.gen())).unwrap());
    let r: Vec<_> = (0..3).map(|_| ws.alloc_catalytic(size, p).unwrap()).collect();
    let (r_in, r_out, r_mid) = (r[0], r[1], r[2]);
    let x = ws.values(r_in);
    let y0 = ws.values(r_out);
    let z0 = ws.values(r_mid);
    let mut base = EdgeBase::new(&g, cl, p);
    propagate(&mut ws, level, c_in, c_out, r_in, r_out, r_mid, cl, &mut base, Direction::Forward).unwrap();
    let a = mat_pow(&adjacency(m, &edges, p), 1 << level, p);
    for j in 0..size {
        let v = c_out * size + j;
        let want = (0..size).fold(y0[j], |acc, i| (acc + x[i] * a[c_in * size + i][v]) % p);
        if ws.get(r_out, j) != want {
            return Err(format!("r_out[{j}] = {} expected {want}", ws.get(r_out, j)));
        }
    }
    if ws.values(r_in) != x || ws.values(r_mid) != z0 {
        return Err("r_in or r_mid disturbed".into());
    }
    propagate(&mut ws, level, c_in, c_out, r_in, r_out, r_mid, cl, &mut base, Direction::Inverse).unwrap();
    for s in r.into_iter().rev() {
        ws.release(s).unwrap();
    }
    if !ws.verify_restored() {
        return Err("arena not restored".into());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]
    #[test]
    fn matches_matrix_power(
        seed in any::<u64>(),
        lm in 0u32..6,
        lc in 0u32..3,
        lvl in 0u32..6,
        ci in 0usize..4,
        co in 0usize..4,
    ) {
        let m = 1usize << lm;
        let classes = 1usize << lc.min(lm);
        let level = lvl.min(lm);
        check(seed, m, classes, level, ci % classes, co % classes).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn four_step_row_sums() {
    check(17, 8, 1, 2, 0, 0).unwrap();
}

#[test]
fn cost_scales_with_four_c() {
    let g = Digraph::new(32, &[(0, 1), (5, 9), (9, 30)]).unwrap();
    for classes in [1usize, 2, 4] {
        let cl = ColorClassing::new(32, classes).unwrap();
        let mut counts = Vec::new();
        for level in 0..4u32 {
            let mut ws = Workspace::new(CatalyticArena::new(1 << 14, ArenaInit::Random(1)).unwrap());
            let r: Vec<_> = (0..3).map(|_| ws.alloc_catalytic(32 / classes, 13).unwrap()).collect();
            let mut base = EdgeBase::new(&g, cl, 13);
            propagate(&mut ws, level, 0, 0, r[0], r[1], r[2], cl, &mut base, Direction::Forward).unwrap();
            counts.push(ws.counters.base_calls);
        }
        for (l, &c) in counts.iter().enumerate() {
            let expect = (4 * classes as u64).pow(l as u32);
            assert!(c <= 2 * expect && 2 * c >= expect, "C={classes} level={l}: {c} vs {expect}");
        }
    }
}
