use epsbias::bounds::{self, ceps_moment_bound, johnson_ceps_bound};
use epsbias::mothers::{default_eval_points, reed_solomon};
use epsbias::seed::rng_from_seed;
use epsbias::{Field, LinearCode, Matrix};
use rand::Rng;

#[test]
fn johnson_count_against_enumeration() {
    let mut rng = rng_from_seed(41);
    let mut tested = 0;
    while tested < 60 {
        let q = [2u32, 3][rng.random_range(0..2)];
        let field = Field::with_order(q as u64).unwrap();
        let n = rng.random_range(6..=20);
        let k = rng.random_range(2..=8.min(n - 1));
        let rows: Vec<Vec<u32>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect();
        let code = LinearCode::from_spanning(&Matrix::from_rows(&field, n, &rows).unwrap());
        if code.is_zero() {
            continue;
        }
        let delta = code.relative_distance().unwrap();
        if delta > bounds::plotkin_point(q) {
            continue;
        }
        let (eps, bound) = johnson_ceps_bound(q, delta, n).unwrap();
        let count = code.not_eps_biased_set(eps).unwrap().len();
        assert!(count as f64 <= bound, "q={q} n={n} k={k} delta={delta}: {count} > {bound}");
        tested += 1;
    }
}

#[test]
fn reed_solomon_is_mds() {
    let gf16 = Field::with_order(16).unwrap();
    let points = default_eval_points(&gf16, 15).unwrap();
    for k in 1..=5 {
        let rs = reed_solomon(&gf16, k, &points).unwrap();
        assert_eq!(rs.distance().unwrap(), 15 - k + 1);
        assert_eq!(rs.dual_distance().unwrap(), k + 1);
    }
}

#[test]
fn dual_distance_count_against_reed_solomon() {
    for q in [8u32, 16] {
        let field = Field::with_order(q as u64).unwrap();
        let n = q as usize - 1;
        let points = default_eval_points(&field, n).unwrap();
        let max_k = if q == 8 { 5 } else { 4 };
        for k in 2..=max_k {
            let rs = reed_solomon(&field, k, &points).unwrap();
            let dd = (k + 1) as f64 / n as f64;
            for eps in [0.3, 0.5, 0.7] {
                let count = rs.bias_report(Some(eps)).unwrap().ceps_size.unwrap();
                let bound = ceps_moment_bound(q, rs.rate(), dd, n, eps).unwrap();
                assert!(count as f64 <= bound, "q={q} k={k} eps={eps}: {count} > {bound}");
            }
        }
    }
}

#[test]
fn feasible_dual_distance_plans_keep_the_bias_chain() {
    let n = 1usize << 50;
    for (q, delta) in [(2u32, 0.2f64), (2, 0.4), (3, 0.5), (4, 0.6)] {
        for gamma in [0.05, 0.1, 0.2] {
            let eps: f64 = 0.6;
            let lq = (1.0 - delta).ln() / (q as f64).ln();
            let dd0 = eps.powf(1.0 / gamma).min(((1.0 + lq) / 36.0).powi(2)).min((q as f64).powf(-1.0 / gamma)) / 3.0;
            let lo = (0.5 - 2.0 * gamma) * bounds::entropy_q(q, dd0).unwrap();
            let hi = bounds::thm2_rate_bound(q, delta, dd0, gamma).unwrap();
            for frac in [0.3, 0.7] {
                let rate = lo + frac * (hi - lo);
                let plan = bounds::plan_thm2(q, rate, delta, dd0, gamma, eps, n).unwrap();
                let inner = plan.eps_inner.unwrap();
                assert!(plan.s_fraction < 0.9 * rate && plan.s_fraction < 0.05 * inner);
                assert!(bounds::shortened_bias_bound(inner, n, plan.s_count).unwrap() <= eps);
                assert!(plan.feasible);
            }
        }
    }
}
