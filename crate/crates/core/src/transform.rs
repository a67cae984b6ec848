//! Puncturing and shortening, with uniform and expander-walk samplers for the
//! deleted positions.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::gf::{parse_ints, FieldElem};
use crate::seed::{derive_seed, rng_from_seed};

/// Where an index set came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Explicit,
    Uniform { seed: u64 },
    Expander { seed: u64, degree: usize, lambda2: f64 },
}

/// A set of coordinate positions in `[0, n)`, kept sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
    provenance: Provenance,
}

impl IndexSet {
    pub fn explicit(n: usize, indices: &[usize]) -> Result<IndexSet> {
        Self::with_provenance(n, indices.to_vec(), Provenance::Explicit)
    }

    fn with_provenance(n: usize, mut indices: Vec<usize>, provenance: Provenance) -> Result<IndexSet> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::BadParameters(format!("repeated index in {indices:?}")));
        }
        if indices.len() >= n {
            return Err(Error::SizeTooLarge { s: indices.len(), n });
        }
        Ok(IndexSet { n, indices, provenance })
    }

    pub fn empty(n: usize) -> IndexSet {
        IndexSet { n, indices: Vec::new(), provenance: Provenance::Explicit }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `"n s i_1 ... i_s"`, ascending.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}", self.n, self.indices.len());
        for i in &self.indices {
            s.push(' ');
            s.push_str(&i.to_string());
        }
        s
    }

    pub fn from_text(line: &str) -> Result<IndexSet> {
        let nums = parse_ints(line.trim_end(), 1)?;
        if nums.len() < 2 || nums.len() != nums[1] as usize + 2 {
            return Err(Error::Parse { line: 1, column: 1, msg: "expected `n s i_1 ... i_s`".into() });
        }
        let idx: Vec<usize> = nums[2..].iter().map(|&i| i as usize).collect();
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse { line: 1, column: 1, msg: "indices must be strictly increasing".into() });
        }
        IndexSet::explicit(nums[0] as usize, &idx)
    }
}

fn check_length(code: &LinearCode, set: &IndexSet) -> Result<()> {
    if set.n() != code.n() {
        return Err(Error::DimensionMismatch(format!(
            "index set over {} positions, code length {}",
            set.n(),
            code.n()
        )));
    }
    Ok(())
}

/// `C^(P)`: delete the columns in `P` from the generator. The dimension can
/// drop when a nonzero codeword is supported inside `P`.
pub fn puncture(code: &LinearCode, set: &IndexSet) -> Result<LinearCode> {
    check_length(code, set)?;
    let g = code.generator().delete_columns(set.indices());
    let out = LinearCode::from_spanning(&g).with_enumeration_cap(code.enumeration_cap());
    if out.is_zero() {
        return Err(Error::ZeroCode);
    }
    Ok(out)
}

/// `C^[S]`: keep the codewords vanishing on `S`, then delete `S`.
///
/// Computed algebraically: the messages `m` with `m G_S = 0` form the null
/// space of `G_S^T`, and their codewords restricted to the complement of `S`
/// generate the result. A zero-dimensional result is returned as is.
pub fn shorten(code: &LinearCode, set: &IndexSet) -> Result<LinearCode> {
    check_length(code, set)?;
    let cap = code.enumeration_cap();
    if code.is_zero() || set.is_empty() {
        return Ok(LinearCode::from_spanning(&code.generator().delete_columns(set.indices())).with_enumeration_cap(cap));
    }
    let g = code.generator();
    let messages = g.select_columns(set.indices()).transpose().nullspace();
    let sub = messages.mul(g)?.delete_columns(set.indices());
    Ok(LinearCode::from_spanning(&sub).with_enumeration_cap(cap))
}

/// `S` hits `c` when it meets the support of `c`.
pub fn hits(set: &IndexSet, word: &[FieldElem]) -> bool {
    debug_assert_eq!(set.n(), word.len());
    set.indices().iter().any(|&i| !word[i].is_zero())
}

pub fn hits_all<W: AsRef<[FieldElem]>>(set: &IndexSet, words: &[W]) -> bool {
    words.iter().all(|w| hits(set, w.as_ref()))
}

/// Uniform `s`-subset of `[n]` via a partial Fisher-Yates shuffle.
pub fn sample_uniform(n: usize, s: usize, seed: u64) -> Result<IndexSet> {
    if s >= n {
        return Err(Error::SizeTooLarge { s, n });
    }
    let mut rng = rng_from_seed(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.random_range(i..n);
        perm.swap(i, j);
    }
    perm.truncate(s);
    IndexSet::with_provenance(n, perm, Provenance::Uniform { seed })
}

/// Acceptance threshold on the second normalized eigenvalue.
pub const LAMBDA2_THRESHOLD: f64 = 0.9;
const MAX_EXPANDER_ATTEMPTS: u32 = 100;
const POWER_ITERATION_TOL: f64 = 1e-6;
const POWER_ITERATION_MAX: usize = 100_000;

/// A `degree`-regular multigraph on `[n]` with a measured spectral certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderGraph {
    n: usize,
    degree: usize,
    /// Seed that produced this graph (after regeneration attempts).
    seed: u64,
    adjacency: Vec<usize>,
    lambda2: f64,
}

/// How a walk turns into an index set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkPolicy {
    /// Walk until `s` distinct vertices have been seen (at most `50 s` steps).
    #[default]
    DistinctUntilSize,
    /// Visit exactly `s` vertices (`s - 1` steps) and keep the distinct ones.
    FixedLength,
}

impl ExpanderGraph {
    /// Union of `degree / 2` random permutations, each contributing the edges
    /// `i -> sigma(i)` and `i -> sigma^-1(i)`. Regenerates with `seed + 1`
    /// until the measured `lambda2` is at most 0.9.
    pub fn build(n: usize, degree: usize, seed: u64) -> Result<ExpanderGraph> {
        if degree % 2 == 1 || degree < 8 {
            return Err(Error::BadParameters(format!("expander degree must be even and >= 8, got {degree}")));
        }
        if n < degree {
            return Err(Error::BadParameters(format!("expander needs n >= degree, got n={n}, degree={degree}")));
        }
        let mut last = f64::NAN;
        for attempt in 0..MAX_EXPANDER_ATTEMPTS {
            let s = seed.wrapping_add(attempt as u64);
            let adjacency = Self::generate(n, degree, s);
            let mut g = ExpanderGraph { n, degree, seed: s, adjacency, lambda2: f64::NAN };
            g.lambda2 = g.measure_lambda2();
            if g.lambda2 <= LAMBDA2_THRESHOLD {
                return Ok(g);
            }
            last = g.lambda2;
        }
        Err(Error::ExpansionNotAchieved { threshold: LAMBDA2_THRESHOLD, attempts: MAX_EXPANDER_ATTEMPTS, last })
    }

    fn generate(n: usize, degree: usize, seed: u64) -> Vec<usize> {
        let mut rng = rng_from_seed(seed);
        let mut lists: Vec<Vec<usize>> = vec![Vec::with_capacity(degree); n];
        let mut perm: Vec<usize> = (0..n).collect();
        for _ in 0..degree / 2 {
            perm.shuffle(&mut rng);
            for (i, &j) in perm.iter().enumerate() {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
        lists.concat()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v * self.degree..(v + 1) * self.degree]
    }

    /// Dense adjacency counts, for inspection and tests.
    pub fn adjacency_counts(&self) -> Vec<Vec<u32>> {
        let mut a = vec![vec![0u32; self.n]; self.n];
        for v in 0..self.n {
            for &u in self.neighbors(v) {
                a[v][u] += 1;
            }
        }
        a
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let inv_d = 1.0 / self.degree as f64;
        for (v, o) in out.iter_mut().enumerate() {
            *o = self.neighbors(v).iter().map(|&u| x[u]).sum::<f64>() * inv_d;
        }
    }

    /// Largest `|lambda|` of `A/d` on the complement of the all-ones vector,
    /// by power iteration.
    pub fn measure_lambda2(&self) -> f64 {
        let n = self.n;
        let mut rng = rng_from_seed(derive_seed(self.seed, 0x1a4b_da02));
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut w = vec![0.0; n];
        let deflate_normalize = |x: &mut [f64]| {
            let mean = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|e| *e -= mean);
            let norm = x.iter().map(|e| e * e).sum::<f64>().sqrt();
            if norm > 0.0 {
                x.iter_mut().for_each(|e| *e /= norm);
            }
            norm
        };
        deflate_normalize(&mut v);
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERATION_MAX {
            self.apply(&v, &mut w);
            let next = deflate_normalize(&mut w);
            std::mem::swap(&mut v, &mut w);
            if (next - estimate).abs() < POWER_ITERATION_TOL * 1e-3 {
                return next;
            }
            estimate = next;
        }
        estimate
    }

    /// Collects positions along a random walk from a uniform start vertex.
    pub fn walk<R: Rng>(&self, s: usize, policy: WalkPolicy, rng: &mut R) -> Result<Vec<usize>> {
        if s == 0 || s >= self.n {
            return Err(Error::SizeTooLarge { s, n: self.n });
        }
        let mut seen = vec![false; self.n];
        let mut v = rng.random_range(0..self.n);
        seen[v] = true;
        let mut out = vec![v];
        match policy {
            WalkPolicy::DistinctUntilSize => {
                let cap = 50 * s;
                let mut steps = 0;
                while out.len() < s {
                    if steps == cap {
                        return Err(Error::WalkStalled { collected: out.len(), wanted: s, steps });
                    }
                    v = self.neighbors(v)[rng.random_range(0..self.degree)];
                    steps += 1;
                    if !seen[v] {
                        seen[v] = true;
                        out.push(v);
                    }
                }
            }
            WalkPolicy::FixedLength => {
                for _ in 1..s {
                    v = self.neighbors(v)[rng.random_range(0..self.degree)];
                    if !seen[v] {
                        seen[v] = true;
                        out.push(v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Walk-sampled index set using its own seed for the walk.
    pub fn sample(&self, s: usize, policy: WalkPolicy, walk_seed: u64) -> Result<IndexSet> {
        let mut rng = rng_from_seed(walk_seed);
        let idx = self.walk(s, policy, &mut rng)?;
        IndexSet::with_provenance(
            self.n,
            idx,
            Provenance::Expander { seed: walk_seed, degree: self.degree, lambda2: self.lambda2 },
        )
    }
}

pub fn build_expander(n: usize, degree: usize, seed: u64) -> Result<ExpanderGraph> {
    ExpanderGraph::build(n, degree, seed)
}

/// Builds the expander from `seed` and walks it with a stream split off the
/// same seed.
pub fn sample_expander_walk(n: usize, s: usize, degree: usize, seed: u64) -> Result<IndexSet> {
    let g = ExpanderGraph::build(n, degree, seed)?;
    g.sample(s, WalkPolicy::default(), derive_seed(seed, 1))
}

/// Result of shortening followed by puncturing.
#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub shortened: LinearCode,
    pub code: LinearCode,
    pub shorten_set: IndexSet,
    pub puncture_set: IndexSet,
}

/// Shortens by `S` and then punctures the shortened code by `P`, where `P`
/// indexes positions of the shortened code.
pub fn shorten_then_puncture_with(code: &LinearCode, s: &IndexSet, p: &IndexSet) -> Result<PipelineOutcome> {
    let shortened = shorten(code, s)?;
    if shortened.is_zero() {
        return Err(Error::ZeroCode);
    }
    let punctured = puncture(&shortened, p)?;
    Ok(PipelineOutcome { shortened, code: punctured, shorten_set: s.clone(), puncture_set: p.clone() })
}

/// Random `s_count`-shortening then random `p_count`-puncturing.
pub fn shorten_then_puncture(code: &LinearCode, s_count: usize, p_count: usize, seed: u64) -> Result<PipelineOutcome> {
    let n = code.n();
    if s_count + p_count >= n {
        return Err(Error::SizeTooLarge { s: s_count + p_count, n });
    }
    let s = sample_uniform(n, s_count, derive_seed(seed, 0))?;
    let p = sample_uniform(n - s_count, p_count, derive_seed(seed, 1))?;
    shorten_then_puncture_with(code, &s, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::matrix::Matrix;

    fn f2() -> Field {
        Field::new(2, 1, None).unwrap()
    }

    fn code(rows: &[Vec<u32>]) -> LinearCode {
        let f = f2();
        LinearCode::from_generator(Matrix::from_rows(&f, rows[0].len(), rows).unwrap()).unwrap()
    }

    fn words(c: &LinearCode) -> Vec<Vec<u32>> {
        let mut w: Vec<Vec<u32>> = c.codewords().unwrap().map(|v| v.iter().map(|e| e.0).collect()).collect();
        w.sort();
        w
    }

    fn even3() -> LinearCode {
        code(&[vec![1, 1, 0], vec![0, 1, 1]])
    }

    fn e(v: &[u32]) -> Vec<FieldElem> {
        v.iter().map(|&x| FieldElem(x)).collect()
    }

    #[test]
    fn index_set_validation() {
        assert!(matches!(IndexSet::explicit(3, &[3]), Err(Error::IndexOutOfRange { index: 3, n: 3 })));
        assert!(IndexSet::explicit(3, &[1, 1]).is_err());
        assert!(matches!(IndexSet::explicit(2, &[0, 1]), Err(Error::SizeTooLarge { .. })));
        let s = IndexSet::explicit(10, &[7, 2, 4]).unwrap();
        assert_eq!(s.indices(), &[2, 4, 7]);
        assert_eq!(s.to_text(), "10 3 2 4 7");
        assert_eq!(IndexSet::from_text("10 3 2 4 7").unwrap(), s);
        assert!(IndexSet::from_text("10 3 2 4").is_err());
    }

    #[test]
    fn puncture_examples() {
        let p = puncture(&even3(), &IndexSet::explicit(3, &[2]).unwrap()).unwrap();
        assert_eq!((p.n(), p.k()), (2, 2));
        assert_eq!(words(&p), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(puncture(&even3(), &IndexSet::empty(3)).unwrap(), even3());
        let rep = code(&[vec![1, 1, 1]]);
        assert_eq!(puncture(&rep, &IndexSet::explicit(3, &[0]).unwrap()).unwrap(), code(&[vec![1, 1]]));
        // Puncturing away the whole support of a dimension-1 code.
        let c = code(&[vec![1, 1, 0, 0]]);
        assert!(matches!(puncture(&c, &IndexSet::explicit(4, &[0, 1]).unwrap()), Err(Error::ZeroCode)));
    }

    #[test]
    fn shorten_examples() {
        let s = shorten(&even3(), &IndexSet::explicit(3, &[0]).unwrap()).unwrap();
        assert_eq!(words(&s), vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(s.k(), 1);
        assert_eq!(shorten(&even3(), &IndexSet::empty(3)).unwrap(), even3());
        let rep = code(&[vec![1, 1, 1]]);
        let z = shorten(&rep, &IndexSet::explicit(3, &[0]).unwrap()).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.n(), 2);
    }

    #[test]
    fn hits_examples() {
        let w = e(&[1, 1, 0]);
        assert!(hits(&IndexSet::explicit(3, &[0]).unwrap(), &w));
        assert!(!hits(&IndexSet::explicit(3, &[2]).unwrap(), &w));
        assert!(!hits(&IndexSet::empty(3), &w));
        let list = vec![e(&[1, 1, 0]), e(&[1, 0, 1])];
        assert!(hits_all(&IndexSet::explicit(3, &[0]).unwrap(), &list));
        assert!(!hits_all(&IndexSet::explicit(3, &[1]).unwrap(), &list));
        assert!(hits_all::<Vec<FieldElem>>(&IndexSet::explicit(3, &[1]).unwrap(), &[]));
    }

    #[test]
    fn uniform_sampler_edges() {
        assert!(sample_uniform(5, 0, 1).unwrap().is_empty());
        let s = sample_uniform(5, 4, 9).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(sample_uniform(5, 4, 9).unwrap(), s);
        assert!(matches!(sample_uniform(5, 5, 0), Err(Error::SizeTooLarge { .. })));
    }

    #[test]
    fn uniform_sampler_is_uniform() {
        // n=4, s=2: six subsets, each expected 1/6 of draws.
        let draws = 100_000u64;
        let mut counts = std::collections::BTreeMap::new();
        for seed in 0..draws {
            let s = sample_uniform(4, 2, seed).unwrap();
            *counts.entry(s.indices().to_vec()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = draws as f64 / 6.0;
        let sigma = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        let mut chi2 = 0.0;
        for &c in counts.values() {
            assert!((c as f64 - expected).abs() <= 3.0 * sigma, "count {c} vs {expected}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // chi-square with 5 degrees of freedom, 99.9% quantile
        assert!(chi2 < 20.52, "chi2 = {chi2}");
    }

    #[test]
    fn expander_preconditions() {
        assert!(matches!(ExpanderGraph::build(16, 7, 0), Err(Error::BadParameters(_))));
        assert!(matches!(ExpanderGraph::build(16, 6, 0), Err(Error::BadParameters(_))));
        assert!(matches!(ExpanderGraph::build(6, 8, 0), Err(Error::BadParameters(_))));
    }

    fn exact_lambda2(g: &ExpanderGraph) -> f64 {
        let n = g.n();
        let a = g.adjacency_counts();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j] as f64 / g.degree() as f64);
        let eig = nalgebra::SymmetricEigen::new(m);
        let mut abs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.abs()).collect();
        abs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        // Drop the trivial eigenvalue 1 (connected graph).
        abs[1]
    }

    #[test]
    fn expander_regular_symmetric_and_certified() {
        for (n, d, seed) in [(8, 8, 0u64), (16, 8, 3), (64, 16, 5), (101, 8, 2)] {
            let g = ExpanderGraph::build(n, d, seed).unwrap();
            let a = g.adjacency_counts();
            for i in 0..n {
                assert_eq!(a[i].iter().sum::<u32>() as usize, d);
                for j in 0..n {
                    assert_eq!(a[i][j], a[j][i]);
                }
            }
            assert!(g.lambda2() <= LAMBDA2_THRESHOLD);
            let exact = exact_lambda2(&g);
            assert!((g.lambda2() - exact).abs() < 1e-3, "power {} vs exact {exact}", g.lambda2());
        }
    }

    #[test]
    fn expander_regression_pin() {
        let g = ExpanderGraph::build(16, 8, 42).unwrap();
        let again = ExpanderGraph::build(16, 8, 42).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.neighbors(0), PINNED_N16_D8_S42_V0);
    }

    const PINNED_N16_D8_S42_V0: &[usize] = &[7, 13, 10, 4, 5, 5, 7, 2];

    #[test]
    fn expander_walk_examples() {
        let g = ExpanderGraph::build(64, 16, 1).unwrap();
        let one = g.sample(1, WalkPolicy::DistinctUntilSize, 5).unwrap();
        assert_eq!(one.len(), 1);
        let s = sample_expander_walk(64, 8, 16, 7).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s, sample_expander_walk(64, 8, 16, 7).unwrap());
        assert_eq!(s.indices(), PINNED_WALK_N64_S8_D16_SEED7);
        let fixed = g.sample(8, WalkPolicy::FixedLength, 5).unwrap();
        assert!(fixed.len() <= 8 && !fixed.is_empty());
    }

    const PINNED_WALK_N64_S8_D16_SEED7: &[usize] = &[26, 33, 35, 38, 41, 46, 47, 60];

    #[test]
    fn pipeline_examples() {
        let c = even3();
        let out = shorten_then_puncture(&c, 0, 0, 3).unwrap();
        assert_eq!(out.code, c);
        let s = IndexSet::explicit(3, &[0]).unwrap();
        let p = IndexSet::explicit(2, &[0]).unwrap();
        let out = shorten_then_puncture_with(&c, &s, &p).unwrap();
        assert_eq!(words(&out.code), vec![vec![0], vec![1]]);
        assert!(matches!(shorten_then_puncture(&c, 2, 1, 0), Err(Error::SizeTooLarge { .. })));
    }
}
