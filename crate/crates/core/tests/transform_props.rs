use epsbias::bounds::{miss_probability_bound, shortened_bias_bound};
use epsbias::mothers;
use epsbias::seed::{derive_seed, rng_from_seed};
use epsbias::transform::{self, ExpanderGraph, WalkPolicy};
use epsbias::{Error, Field, FieldElem, IndexSet, LinearCode, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn random_code(q: u32, n: usize, k: usize, seed: u64) -> LinearCode {
    let field = Field::with_order(q as u64).unwrap();
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<u32>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
    LinearCode::from_spanning(&Matrix::from_rows(&field, n, &rows).unwrap())
}

fn random_subset(n: usize, max: usize, seed: u64) -> IndexSet {
    let mut rng = rng_from_seed(seed);
    let s = rng.random_range(0..=max.min(n - 1));
    let picked = transform::sample_uniform(n, s, seed).unwrap();
    IndexSet::explicit(n, picked.indices()).unwrap()
}

fn puncture_or_zero(code: &LinearCode, set: &IndexSet) -> LinearCode {
    match transform::puncture(code, set) {
        Ok(c) => c,
        Err(Error::ZeroCode) => LinearCode::zero(code.field(), code.n() - set.len()),
        Err(e) => panic!("{e}"),
    }
}

/// Reinserts zeros at the positions of `set`.
fn lift(word: &[FieldElem], set: &IndexSet) -> Vec<FieldElem> {
    let n = set.n();
    let mut it = word.iter();
    (0..n).map(|i| if set.contains(i) { FieldElem(0) } else { *it.next().unwrap() }).collect()
}

fn code_params() -> impl Strategy<Value = (u32, usize, usize, u64)> {
    (prop::sample::select(vec![2u32, 3, 4]), 2usize..=8)
        .prop_flat_map(|(q, n)| (Just(q), Just(n), 1..=n.min(4), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn duality_of_puncture_and_shorten((q, n, k, seed) in code_params(), set_seed in any::<u64>()) {
        let code = random_code(q, n, k, seed);
        let set = random_subset(n, 3, set_seed);
        let lhs = puncture_or_zero(&code, &set).dual();
        let rhs = transform::shorten(&code.dual(), &set).unwrap();
        prop_assert!(lhs.generator().same_row_space(rhs.generator()));
        // And the mirrored identity.
        let lhs = transform::shorten(&code, &set).unwrap();
        let rhs = puncture_or_zero(&code.dual(), &set).dual();
        prop_assert!(lhs.generator().same_row_space(rhs.generator()));
    }

    #[test]
    fn shortening_dimension_and_distance((q, n, k, seed) in code_params(), set_seed in any::<u64>()) {
        let code = random_code(q, n, k, seed);
        prop_assume!(!code.is_zero());
        let set = random_subset(n, 3, set_seed);
        let short = transform::shorten(&code, &set).unwrap();
        let s = set.len();
        prop_assert!(short.k() + s >= code.k());
        if s < code.dual_distance().unwrap() {
            prop_assert_eq!(short.k() + s, code.k());
        }
        if short.k() >= 1 {
            let d = code.distance().unwrap();
            let d2 = short.distance().unwrap();
            prop_assert!(d2 >= d);
            prop_assert!(d2 as f64 / short.n() as f64 >= d as f64 / n as f64);
        }
    }

    #[test]
    fn shortened_codewords_are_the_unhit_ones((q, n, k, seed) in code_params(), set_seed in any::<u64>()) {
        let code = random_code(q, n, k, seed);
        let set = random_subset(n, 3, set_seed);
        let short = transform::shorten(&code, &set).unwrap();
        let unhit = code.codewords().unwrap().filter(|c| !transform::hits(&set, c)).count() as u128;
        prop_assert_eq!(unhit, short.size());
        for c in short.codewords().unwrap() {
            prop_assert!(code.contains(&lift(&c, &set)));
        }
    }

    #[test]
    fn punctured_codewords_come_from_the_mother((q, n, k, seed) in code_params(), set_seed in any::<u64>()) {
        let code = random_code(q, n, k, seed);
        let set = random_subset(n, 3, set_seed);
        let punct = puncture_or_zero(&code, &set);
        for c in code.codewords().unwrap() {
            let kept: Vec<FieldElem> = (0..n).filter(|&i| !set.contains(i)).map(|i| c[i]).collect();
            prop_assert!(punct.contains(&kept));
        }
    }

    #[test]
    fn hitting_every_poorly_biased_word_bounds_the_bias(seed in any::<u64>(), eps in 0.2f64..0.8) {
        let code = random_code(2, 12, 4, seed);
        prop_assume!(!code.is_zero());
        let ceps = code.not_eps_biased_set(eps).unwrap();
        let mut rng = rng_from_seed(seed ^ 1);
        for _ in 0..20 {
            let s = rng.random_range(1..=3);
            let set = transform::sample_uniform(12, s, rng.random()).unwrap();
            if transform::hits_all(&set, &ceps) {
                let short = transform::shorten(&code, &set).unwrap();
                if !short.is_zero() {
                    let bound = shortened_bias_bound(eps, 12, s).unwrap();
                    prop_assert!(short.bias().unwrap() <= bound + 1e-9);
                }
            }
        }
    }
}

/// Fraction of `s`-subsets of `[n]` missing the first `w` positions, counted
/// over every subset.
#[test]
fn exhaustive_miss_fraction_is_below_the_bound() {
    for n in 1..=12usize {
        for w in 1..=n {
            let mut word = vec![FieldElem(0); n];
            for x in word.iter_mut().take(w) {
                *x = FieldElem(1);
            }
            let mut total = vec![0u64; n + 1];
            let mut missed = vec![0u64; n + 1];
            // Index sets must leave at least one position.
            for mask in 0u32..(1 << n) - 1 {
                let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                let set = IndexSet::explicit(n, &idx).unwrap();
                total[idx.len()] += 1;
                if !transform::hits(&set, &word) {
                    missed[idx.len()] += 1;
                }
            }
            for s in 0..n {
                let frac = missed[s] as f64 / total[s] as f64;
                assert!(frac <= miss_probability_bound(w as f64 / n as f64, s) + 1e-12, "n={n} w={w} s={s}");
            }
        }
    }
}

#[test]
fn reed_solomon_pipeline_shape() {
    let gf16 = Field::with_order(16).unwrap();
    let rs = mothers::reed_solomon(&gf16, 5, &mothers::default_eval_points(&gf16, 15).unwrap()).unwrap();
    for i in 0..50 {
        let out = transform::shorten_then_puncture(&rs, 2, 3, derive_seed(15, i)).unwrap();
        assert_eq!(out.shortened.n(), 13);
        assert_eq!(out.shortened.k(), 3);
        assert_eq!(out.code.n(), 10);
        assert!(out.code.k() >= 3);
    }
}

#[test]
fn expander_walks_miss_rarely() {
    let graph = ExpanderGraph::build(64, 16, 3).unwrap();
    assert!(graph.lambda2() <= transform::LAMBDA2_THRESHOLD);
    let word: Vec<FieldElem> = (0..64).map(|i| FieldElem((i % 2) as u32)).collect();
    let walks = 20_000u64;
    let misses = (0..walks)
        .filter(|&i| {
            !transform::hits(&graph.sample(8, WalkPolicy::DistinctUntilSize, derive_seed(5, i)).unwrap(), &word)
        })
        .count();
    assert!((misses as f64 / walks as f64) <= 2.0 * miss_probability_bound(0.5, 8));
}
