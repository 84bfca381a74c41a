use proptest::prelude::*;
use xorfold::math::{
    closed_form_iterate, delta_gap, fold_polynomial, invert_leak, iterate_p, k_bound, k_min, leak,
};
use xorfold::{distill, fold_times, xor_fold, BitString, Epsilon, FoldCount, GuessProbability, KeyRequest, LeakFraction};

fn gp(v: f64) -> GuessProbability {
    GuessProbability::new(v).unwrap()
}

fn fc(k: u32) -> FoldCount {
    FoldCount::new(k).unwrap()
}

/// `i / scale` for `i` in `from..=to`; avoids accumulating a float step.
fn grid(from: u32, to: u32, scale: f64) -> impl Iterator<Item = f64> {
    (from..=to).map(move |i| f64::from(i) / scale)
}

#[test]
fn fixpoint_is_exact() {
    assert_eq!(fold_polynomial(GuessProbability::HALF).value(), 0.5);
    assert_eq!(iterate_p(GuessProbability::HALF, 1000).value(), 0.5);
}

#[test]
fn fold_polynomial_contracts_and_increases() {
    let xs: Vec<f64> = grid(5001, 9999, 10_000.0).collect();
    for &x in &xs {
        assert!(fold_polynomial(gp(x)).value() < x, "P({x}) >= {x}");
    }
    for w in xs.windows(2) {
        assert!(fold_polynomial(gp(w[0])).value() < fold_polynomial(gp(w[1])).value());
    }
}

#[test]
fn iterate_matches_closed_form_oracle() {
    for p in grid(501, 990, 1000.0) {
        for l in 0..=20 {
            let a = iterate_p(gp(p), l).value();
            let b = closed_form_iterate(gp(p), l).value();
            assert!((a - b).abs() <= 1e-12, "p={p} l={l}: {a} vs {b}");
        }
    }
}

#[test]
fn k_min_is_minimal_on_grid() {
    let eps = Epsilon::DEFAULT;
    for p in grid(501, 999, 1000.0) {
        let k = k_min(gp(p), eps).unwrap().get();
        assert!(iterate_p(gp(p), u64::from(k)).value() <= 0.5006, "p={p}");
        if k > 0 {
            assert!(iterate_p(gp(p), u64::from(k - 1)).value() > 0.5006, "p={p}");
        }
    }
}

#[test]
fn k_bound_dominates_k_min() {
    let eps = Epsilon::DEFAULT;
    for p in grid(51, 99, 100.0) {
        let bound = k_bound(gp(p), eps);
        let min = u64::from(k_min(gp(p), eps).unwrap().get());
        assert!(bound >= min, "p={p}: {bound} < {min}");
        assert!(iterate_p(gp(p), bound).value() <= 0.5006, "p={p}");
    }
}

#[test]
fn leak_is_strictly_increasing() {
    let ps: Vec<f64> = grid(50_000, 100_000, 100_000.0).collect();
    assert_eq!(leak(0.5).unwrap().value(), 0.0);
    assert_eq!(leak(1.0).unwrap().value(), 1.0);
    for w in ps.windows(2) {
        assert!(leak(w[0]).unwrap().value() < leak(w[1]).unwrap().value(), "{w:?}");
    }
}

#[test]
fn leak_inversion_round_trip() {
    for t in [1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 0.5] {
        let p = invert_leak(LeakFraction::new(t).unwrap());
        assert!((leak(p).unwrap().value() - t).abs() <= 1e-9, "t={t}");
    }
}

#[test]
fn delta_gap_vanishes_only_at_half() {
    assert_eq!(delta_gap(GuessProbability::HALF), 0.0);
    for p in grid(5001, 9999, 10_000.0) {
        assert!(delta_gap(gp(p)) > 0.0);
    }
}

#[test]
fn parity_oracle_exhaustive_to_sixteen_bits() {
    for k in 1..=4u32 {
        let n = 1usize << k;
        for v in 0u32..(1 << n) {
            let s: BitString = (0..n).map(|i| v >> i & 1 == 1).collect();
            let folded = fold_times(&s, fc(k)).unwrap();
            assert_eq!(folded.len(), 1);
            assert_eq!(folded.get(0).unwrap(), v.count_ones() % 2 == 1);
        }
    }
}

fn even_bits() -> impl Strategy<Value = Vec<bool>> {
    (1usize..300).prop_flat_map(|n| proptest::collection::vec(any::<bool>(), 2 * n))
}

proptest! {
    #[test]
    fn xor_fold_halves_length(bits in even_bits()) {
        let s: BitString = bits.iter().copied().collect();
        prop_assert_eq!(xor_fold(&s).unwrap().len(), bits.len() / 2);
    }

    #[test]
    fn xor_fold_is_complement_invariant(bits in even_bits()) {
        let s: BitString = bits.iter().copied().collect();
        prop_assert_eq!(xor_fold(&s).unwrap(), xor_fold(&s.complement()).unwrap());
    }

    #[test]
    fn distill_is_blockwise_parity(
        k in 0u32..5,
        blocks in 1usize..40,
        extra in 0usize..20,
        seed in any::<u64>(),
    ) {
        let n = (blocks << k) + extra;
        let raw: BitString = (0..n).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) & 1 == 1).collect();
        let req = KeyRequest::new(blocks, fc(k)).unwrap();
        let out = distill(&raw, req).unwrap();
        prop_assert_eq!(out.surplus, extra);
        let bits: Vec<bool> = raw.iter().collect();
        let expected: BitString = bits[..blocks << k]
            .chunks(1 << k)
            .map(|b| b.iter().fold(false, |a, &x| a ^ x))
            .collect();
        prop_assert_eq!(&out.key, &expected);
        prop_assert_eq!(distill(&raw, req).unwrap().key, out.key);
    }

    #[test]
    fn fold_times_divides_length(k in 0u32..6, blocks in 1usize..30) {
        let s = BitString::zeros(blocks << k);
        prop_assert_eq!(fold_times(&s, fc(k)).unwrap().len(), blocks);
    }

    #[test]
    fn iterate_stays_in_domain(p in 0.5f64..1.0, l in 0u64..100) {
        let x = iterate_p(gp(p), l).value();
        prop_assert!((0.5..=p).contains(&x));
    }

    #[test]
    fn plan_meets_tolerance(p in 0.5f64..1.0, eps in 1e-12f64..0.49) {
        let eps = Epsilon::new(eps).unwrap();
        let plan = xorfold::math::plan(gp(p), eps).unwrap();
        prop_assert!(plan.p_final.value() <= 0.5 + eps.value());
        prop_assert_eq!(plan.block_size, 1u64 << plan.k.get());
    }
}
