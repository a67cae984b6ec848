//! Fixtures shared by the benchmarks.

use epsbias::mothers::{default_eval_points, random_linear, reed_solomon};
use epsbias::{Field, LinearCode};

pub fn rs_gf16(k: usize) -> LinearCode {
    let field = Field::with_order(16).expect("GF(16)");
    let points = default_eval_points(&field, 15).expect("15 points");
    reed_solomon(&field, k, &points).expect("RS code")
}

pub fn random_binary(n: usize, k: usize, seed: u64) -> LinearCode {
    let field = Field::with_order(2).expect("GF(2)");
    random_linear(&field, n, k, seed).expect("random code")
}
