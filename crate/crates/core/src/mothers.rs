//! Mother-code constructors and code files.

use std::path::Path;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::gf::{Field, FieldElem};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};

const MAX_RANK_ATTEMPTS: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rs,
    Random,
    Repetition,
    Parity,
    Simplex,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Ok(match s {
            "rs" => Family::Rs,
            "random" => Family::Random,
            "repetition" => Family::Repetition,
            "parity" => Family::Parity,
            "simplex" => Family::Simplex,
            other => return Err(Error::BadParameters(format!("unknown code family `{other}`"))),
        })
    }
}

/// Parameters of a generated mother code. `n` is derived for simplex codes
/// when omitted; `k` is implied for repetition and parity codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFamilySpec {
    pub family: Family,
    pub q: u32,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub eval_points: Option<Vec<u32>>,
}

impl CodeFamilySpec {
    pub fn new(family: Family, q: u32, n: Option<usize>, k: Option<usize>) -> CodeFamilySpec {
        CodeFamilySpec { family, q, n, k, seed: 0, eval_points: None }
    }

    pub fn build(&self) -> Result<LinearCode> {
        let field = Field::with_order(self.q as u64)?;
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::BadParameters(format!("family {:?} needs `{name}`", self.family)))
        };
        match self.family {
            Family::Rs => {
                let points = match &self.eval_points {
                    Some(p) => p.iter().map(|&x| field.elem(x)).collect::<Result<Vec<_>>>()?,
                    None => default_eval_points(&field, need(self.n, "n")?)?,
                };
                if let Some(n) = self.n {
                    if n != points.len() {
                        return Err(Error::BadParameters(format!(
                            "n = {n} but {} evaluation points given",
                            points.len()
                        )));
                    }
                }
                reed_solomon(&field, need(self.k, "k")?, &points)
            }
            Family::Random => random_linear(&field, need(self.n, "n")?, need(self.k, "k")?, self.seed),
            Family::Repetition => repetition(&field, need(self.n, "n")?),
            Family::Parity => parity(&field, need(self.n, "n")?),
            Family::Simplex => {
                let k = need(self.k, "k")?;
                if self.q != 2 {
                    return Err(Error::BadParameters("simplex codes are binary".into()));
                }
                if let Some(n) = self.n {
                    if k >= usize::BITS as usize || n != (1usize << k) - 1 {
                        return Err(Error::BadParameters(format!(
                            "simplex code with k = {k} has length 2^k - 1, not {n}"
                        )));
                    }
                }
                simplex(k)
            }
        }
    }
}

/// Nonzero field elements in encoding order, then 0, truncated to `n`.
pub fn default_eval_points(field: &Field, n: usize) -> Result<Vec<FieldElem>> {
    let q = field.q();
    if n > q as usize {
        return Err(Error::TooLong { n, q });
    }
    Ok(field.nonzero_elements().chain(std::iter::once(FieldElem::ZERO)).take(n).collect())
}

/// Evaluations of the polynomials of degree below `k` at `points`. Row `i`
/// of the evaluation generator is `(x_j^i)_j`; the stored generator is its
/// RREF.
pub fn reed_solomon(field: &Field, k: usize, points: &[FieldElem]) -> Result<LinearCode> {
    let n = points.len();
    if n > field.q() as usize {
        return Err(Error::TooLong { n, q: field.q() });
    }
    let mut sorted: Vec<u32> = points.iter().map(|p| p.0).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicatePoints);
    }
    if k == 0 || k > n {
        return Err(Error::BadParameters(format!("Reed-Solomon code needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut data = Vec::with_capacity(k * n);
    for i in 0..k {
        data.extend(points.iter().map(|&x| field.pow(x, i as u64)));
    }
    LinearCode::from_generator(Matrix::from_elems(field, k, n, data))
}

/// Uniform entries; binary rows take their bits from successive `u64` draws.
fn draw_rows(rng: &mut ChaCha8Rng, q: u32, n: usize, k: usize) -> Vec<Vec<u32>> {
    if q == 2 {
        return (0..k)
            .map(|_| {
                let words: Vec<u64> = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
                (0..n).map(|j| ((words[j / 64] >> (j % 64)) & 1) as u32).collect()
            })
            .collect();
    }
    (0..k).map(|_| (0..n).map(|_| rng.random_range(0..q)).collect()).collect()
}

fn draw_binary_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<u128> {
    (0..k)
        .map(|_| {
            let lo = rng.next_u64() as u128;
            let word = if n > 64 { lo | ((rng.next_u64() as u128) << 64) } else { lo };
            if n == 128 {
                word
            } else {
                word & ((1u128 << n) - 1)
            }
        })
        .collect()
}

/// Generator with i.i.d. uniform entries, redrawn from the same stream
/// until it has rank `k`.
pub fn random_linear(field: &Field, n: usize, k: usize, seed: u64) -> Result<LinearCode> {
    if k > n {
        return Err(Error::BadParameters(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(LinearCode::zero(field, n));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_RANK_ATTEMPTS {
        let rows = draw_rows(&mut rng, field.q(), n, k);
        match LinearCode::from_generator(Matrix::from_rows(field, n, &rows)?) {
            Ok(c) => return Ok(c),
            Err(Error::RankMismatch { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RankFailure(MAX_RANK_ATTEMPTS))
}

#[cfg(test)]
fn pack(rows: &[Vec<u32>]) -> Vec<u128> {
    rows.iter().map(|r| r.iter().enumerate().fold(0u128, |acc, (j, &b)| acc | ((b as u128) << j))).collect()
}

fn binary_rank(rows: &[u128]) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Minimum weight over the nonzero span of `rows`, by a Gray-code walk.
/// Stops early once a weight below `floor` is seen.
fn binary_min_weight(rows: &[u128], floor: u32) -> u32 {
    let mut cw = 0u128;
    let mut best = u32::MAX;
    for m in 1u64..(1u64 << rows.len()) {
        cw ^= rows[m.trailing_zeros() as usize];
        best = best.min(cw.count_ones());
        if best < floor {
            break;
        }
    }
    best
}

/// Minimum distance of the code `random_linear(field, n, k, seed)` would
/// return, computed without building it. Binary codes with `n <= 128` only.
fn binary_random_distance(n: usize, k: usize, seed: u64, floor: u32) -> Option<u32> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_RANK_ATTEMPTS {
        let rows = draw_binary_rows(&mut rng, n, k);
        if binary_rank(&rows) == k {
            return Some(binary_min_weight(&rows, floor));
        }
    }
    None
}

/// A random linear mother code with distance at least `min_distance`.
#[derive(Clone, Debug)]
pub struct ResampledCode {
    pub code: LinearCode,
    pub seed: u64,
    pub attempts: u64,
}

/// Draws `random_linear` codes with seeds `derive_seed(seed, i)` for
/// `i = 0, 1, ...` and returns the first whose minimum distance is at least
/// `min_distance`. Fails once `max_attempts` seeds are exhausted.
pub fn random_linear_with_distance(
    field: &Field,
    n: usize,
    k: usize,
    seed: u64,
    min_distance: usize,
    max_attempts: u64,
) -> Result<ResampledCode> {
    if k == 0 || k > n {
        return Err(Error::BadParameters(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let binary_fast = field.q() == 2 && n <= 128 && k <= 20;
    const CHUNK: u64 = 4096;
    let mut start = 0u64;
    while start < max_attempts {
        let end = (start + CHUNK * rayon::current_num_threads() as u64).min(max_attempts);
        let hit = (start..end)
            .into_par_iter()
            .filter(|&i| {
                let s = derive_seed(seed, i);
                if binary_fast {
                    binary_random_distance(n, k, s, min_distance as u32).is_some_and(|d| d as usize >= min_distance)
                } else {
                    random_linear(field, n, k, s).and_then(|c| c.distance()).is_ok_and(|d| d >= min_distance)
                }
            })
            .min();
        if let Some(i) = hit {
            let s = derive_seed(seed, i);
            return Ok(ResampledCode { code: random_linear(field, n, k, s)?, seed: s, attempts: i + 1 });
        }
        start = end;
    }
    Err(Error::Infeasible(vec![format!(
        "no random [{n}, {k}] code over GF({}) with distance >= {min_distance} among {max_attempts} seeds",
        field.q()
    )]))
}

/// `[n, 1, n]`.
pub fn repetition(field: &Field, n: usize) -> Result<LinearCode> {
    if n == 0 {
        return Err(Error::BadParameters("repetition code needs n >= 1".into()));
    }
    LinearCode::from_generator(Matrix::from_elems(field, 1, n, vec![FieldElem::ONE; n]))
}

/// Vectors whose coordinates sum to zero: `[n, n-1, 2]`.
pub fn parity(field: &Field, n: usize) -> Result<LinearCode> {
    if n < 2 {
        return Err(Error::BadParameters("parity code needs n >= 2".into()));
    }
    let minus_one = field.neg(FieldElem::ONE);
    let mut data = Vec::with_capacity((n - 1) * n);
    for i in 0..n - 1 {
        for j in 0..n {
            data.push(if j == i {
                FieldElem::ONE
            } else if j == n - 1 {
                minus_one
            } else {
                FieldElem::ZERO
            });
        }
    }
    LinearCode::from_generator(Matrix::from_elems(field, n - 1, n, data))
}

/// Binary simplex code `[2^k - 1, k, 2^(k-1)]`: the columns are all nonzero
/// vectors of length `k`.
pub fn simplex(k: usize) -> Result<LinearCode> {
    if k == 0 || k > 16 {
        return Err(Error::BadParameters(format!("simplex dimension must be in 1..=16, got {k}")));
    }
    let field = Field::new(2, 1, None)?;
    let n = (1usize << k) - 1;
    let mut data = Vec::with_capacity(k * n);
    for i in 0..k {
        data.extend((1..=n).map(|c| FieldElem(((c >> i) & 1) as u32)));
    }
    LinearCode::from_generator(Matrix::from_elems(&field, k, n, data))
}

pub fn read_code(path: impl AsRef<Path>) -> Result<LinearCode> {
    LinearCode::from_text(&std::fs::read_to_string(path)?)
}

pub fn write_code(code: &LinearCode, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, code.to_text())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u64) -> Field {
        Field::with_order(q).unwrap()
    }

    /// Minimum nonzero weight by direct enumeration of all messages.
    fn brute_distance(c: &LinearCode) -> usize {
        let q = c.field().q() as u64;
        (1..q.pow(c.k() as u32))
            .map(|m| c.codeword_of_message(m).iter().filter(|e| !e.is_zero()).count())
            .min()
            .unwrap()
    }

    #[test]
    fn rs_examples() {
        let gf8 = f(8);
        let c = reed_solomon(&gf8, 3, &default_eval_points(&gf8, 7).unwrap()).unwrap();
        assert_eq!(c.size(), 512);
        assert_eq!(brute_distance(&c), 5);
        assert_eq!(c.distance().unwrap(), 5);
        let full = reed_solomon(&gf8, 8, &default_eval_points(&gf8, 8).unwrap()).unwrap();
        assert_eq!(full.distance().unwrap(), 1);
        let one = reed_solomon(&gf8, 1, &default_eval_points(&gf8, 6).unwrap()).unwrap();
        assert_eq!(brute_distance(&one), 6);
        assert!(matches!(reed_solomon(&gf8, 2, &[FieldElem(1), FieldElem(1)]), Err(Error::DuplicatePoints)));
        assert!(matches!(default_eval_points(&gf8, 9), Err(Error::TooLong { n: 9, q: 8 })));
        assert_eq!(default_eval_points(&gf8, 8).unwrap(), (1..8).chain([0]).map(FieldElem).collect::<Vec<_>>());
    }

    #[test]
    fn rs_generator_spans_evaluations() {
        // Every evaluation vector of x^i lies in the code.
        let gf16 = f(16);
        let pts = default_eval_points(&gf16, 15).unwrap();
        let c = reed_solomon(&gf16, 4, &pts).unwrap();
        for i in 0..4 {
            let w: Vec<FieldElem> = pts.iter().map(|&x| gf16.pow(x, i)).collect();
            assert!(c.contains(&w));
        }
        let w: Vec<FieldElem> = pts.iter().map(|&x| gf16.pow(x, 4)).collect();
        assert!(!c.contains(&w));
    }

    #[test]
    fn rs_mds_certification() {
        for q in [8u64, 16] {
            let field = f(q);
            let pts = default_eval_points(&field, q as usize - 1).unwrap();
            for k in 1..=5 {
                if q == 16 && k == 5 {
                    continue; // covered by the integration suite
                }
                let c = reed_solomon(&field, k, &pts).unwrap();
                assert_eq!(c.distance().unwrap(), pts.len() - k + 1, "q={q} k={k}");
                assert_eq!(c.dual_distance().unwrap(), k + 1, "q={q} k={k}");
            }
        }
    }

    #[test]
    fn random_linear_examples() {
        let gf2 = f(2);
        let c = random_linear(&gf2, 16, 4, 2024).unwrap();
        assert_eq!(c, random_linear(&gf2, 16, 4, 2024).unwrap());
        assert_eq!(c.generator().to_u32_rows(), pinned_random_16_4());
        let full = random_linear(&f(3), 5, 5, 1).unwrap();
        assert_eq!(full.k(), 5);
        assert!(random_linear(&gf2, 3, 4, 0).is_err());
    }

    fn pinned_random_16_4() -> Vec<Vec<u32>> {
        vec![
            vec![1, 1, 0, 0, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0],
            vec![0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 0, 0],
            vec![0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 0],
            vec![0, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 1, 0, 1, 1, 1],
        ]
    }

    #[test]
    fn random_linear_distance_band() {
        let gf2 = f(2);
        let mean =
            (0..1000u64).map(|s| random_linear(&gf2, 32, 8, s).unwrap().relative_distance().unwrap()).sum::<f64>()
                / 1000.0;
        assert!((0.2..=0.45).contains(&mean), "mean relative distance {mean}");
    }

    #[test]
    fn binary_fast_distance_matches_construction() {
        let gf2 = f(2);
        for s in 0..200u64 {
            let c = random_linear(&gf2, 24, 6, s).unwrap();
            let wide = random_linear(&gf2, 100, 3, s).unwrap();
            assert_eq!(binary_random_distance(100, 3, s, 0).unwrap() as usize, wide.distance().unwrap());
            assert_eq!(binary_random_distance(24, 6, s, 0).unwrap() as usize, c.distance().unwrap());
            assert_eq!(
                pack(&draw_rows(&mut rng_from_seed(s), 2, 24, 6)),
                draw_binary_rows(&mut rng_from_seed(s), 24, 6)
            );
        }
    }

    #[test]
    fn resampling_for_distance() {
        let gf2 = f(2);
        let r = random_linear_with_distance(&gf2, 32, 4, 7, 12, 100_000).unwrap();
        assert!(r.code.distance().unwrap() >= 12);
        assert_eq!(r.code, random_linear(&gf2, 32, 4, r.seed).unwrap());
        // Earlier seeds all fall short.
        for i in 0..r.attempts - 1 {
            assert!(random_linear(&gf2, 32, 4, derive_seed(7, i)).unwrap().distance().unwrap() < 12);
        }
        let gf3 = f(3);
        let r = random_linear_with_distance(&gf3, 10, 3, 1, 5, 10_000).unwrap();
        assert!(r.code.distance().unwrap() >= 5);
        // [8, 4] binary codes have distance at most 4.
        assert!(matches!(random_linear_with_distance(&gf2, 8, 4, 0, 5, 2000), Err(Error::Infeasible(_))));
    }

    #[test]
    fn named_codes() {
        let gf2 = f(2);
        let rep = repetition(&gf2, 3).unwrap();
        assert_eq!(rep.generator().to_u32_rows(), vec![vec![1, 1, 1]]);
        let par = parity(&gf2, 3).unwrap();
        assert_eq!((par.k(), par.distance().unwrap(), par.dual_distance().unwrap()), (2, 2, 3));
        let par3 = parity(&f(3), 4).unwrap();
        assert!(par3.contains(&[1, 1, 1, 0].map(FieldElem)));
        assert_eq!(par3.distance().unwrap(), 2);
        let s = simplex(4).unwrap();
        assert_eq!((s.n(), s.k()), (15, 4));
        assert_eq!(s.weight_distribution().unwrap()[8], 15);
        assert_eq!(s.weight_distribution().unwrap().iter().sum::<u64>(), 16);
        assert_eq!(s.dual_distance().unwrap(), 3);
        assert!(repetition(&gf2, 0).is_err());
        assert!(simplex(0).is_err());
    }

    #[test]
    fn simplex_bias_is_one_over_n() {
        for k in 2..=6 {
            let s = simplex(k).unwrap();
            let n = s.n() as f64;
            assert!((s.bias().unwrap() - 1.0 / n).abs() < 1e-15);
        }
    }

    #[test]
    fn family_spec_serde_and_build() {
        let spec: CodeFamilySpec = serde_json::from_str(r#"{"family":"parity","q":2,"n":3}"#).unwrap();
        assert_eq!(spec.build().unwrap(), parity(&f(2), 3).unwrap());
        let spec: CodeFamilySpec = serde_json::from_str(r#"{"family":"simplex","q":2,"k":3}"#).unwrap();
        assert_eq!(spec.build().unwrap().n(), 7);
        let spec: CodeFamilySpec = serde_json::from_str(r#"{"family":"rs","q":16,"n":15,"k":5}"#).unwrap();
        assert_eq!(spec.build().unwrap().k(), 5);
        let spec: CodeFamilySpec =
            serde_json::from_str(r#"{"family":"rs","q":8,"k":2,"eval_points":[0,1,2]}"#).unwrap();
        assert_eq!(spec.build().unwrap().n(), 3);
        assert!(serde_json::from_str::<CodeFamilySpec>(r#"{"family":"rs","q":8,"bogus":1}"#).is_err());
        assert!(CodeFamilySpec::new(Family::Simplex, 2, Some(8), Some(3)).build().is_err());
        assert!(CodeFamilySpec::new(Family::Simplex, 3, None, Some(3)).build().is_err());
        assert!("hamming".parse::<Family>().is_err());
    }

    #[test]
    fn code_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("simplex3.code");
        let c = simplex(3).unwrap();
        write_code(&c, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_code(&path).unwrap();
        assert_eq!(back, c);
        write_code(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);

        let text = String::from_utf8(bytes).unwrap();
        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(read_code(&path), Err(Error::Parse { line: 3, .. })));
        std::fs::write(&path, "2 1 1 1 4 3 1\n1 1 1\n").unwrap();
        assert!(matches!(read_code(&path), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_code(dir.path().join("missing")), Err(Error::Io(_))));
    }
}
