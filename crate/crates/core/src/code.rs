//! Linear codes over F_q with exact, enumeration-based parameters.
//!
//! Every quantity here (distance, bias, the set of non-biased codewords) is
//! computed by walking all `q^k` messages. Enumeration is split into
//! message-index ranges processed in parallel and merged with associative,
//! commutative reductions, so results never depend on the thread schedule.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{parse_ints, Field, FieldElem};
use crate::matrix::Matrix;

/// Default bound on the number of vectors any single enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Slack applied to every "is this word eps-biased" comparison, relative to n.
pub const BIAS_TOLERANCE: f64 = 1e-9;

const CHUNK: u64 = 1 << 12;

#[derive(Clone, Debug)]
pub struct LinearCode {
    field: Field,
    n: usize,
    generator: Matrix,
    cap: u64,
    distance: OnceLock<usize>,
    dual_distance: OnceLock<usize>,
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.generator == other.generator
    }
}

impl Eq for LinearCode {}

/// Bias of a code together with the codeword attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub epsilon: f64,
    /// `max_a |sum_i omega^tr(a c_i)|` for the witness.
    pub max_character_sum: f64,
    pub witness: Vec<FieldElem>,
    pub witness_message: u64,
    pub query_epsilon: Option<f64>,
    /// `|C_eps|` at `query_epsilon`.
    pub ceps_size: Option<u64>,
    pub enumerated: u64,
}

/// Result of testing the uniform-empirical-distribution criterion on a word.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityCheck {
    /// Smallest eps for which every symbol frequency is at most `1/q + eps/(2(q-1))`.
    pub eps_candidate: f64,
    pub bias: f64,
    /// `bias <= eps_candidate`, which the criterion guarantees.
    pub implication_holds: bool,
}

impl UniformityCheck {
    pub fn condition_holds(&self, eps: f64) -> bool {
        self.eps_candidate <= eps + 1e-12
    }
}

pub fn weight(x: &[FieldElem]) -> usize {
    x.iter().filter(|e| !e.is_zero()).count()
}

/// `max_{a != 0} |sum_i omega^tr(a x_i)|`. Exact for characteristic 2.
pub fn max_character_sum(field: &Field, x: &[FieldElem]) -> f64 {
    let p = field.p() as usize;
    if field.q() == 2 {
        return (x.len() as i64 - 2 * weight(x) as i64).unsigned_abs() as f64;
    }
    let mut counts = vec![0i64; p];
    let mut best = 0f64;
    for a in field.nonzero_elements() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &xi in x {
            counts[field.trace_of_product(a, xi) as usize] += 1;
        }
        let abs = if p == 2 {
            (counts[0] - counts[1]).unsigned_abs() as f64
        } else {
            let mut re = 0.0;
            let mut im = 0.0;
            for (j, &c) in counts.iter().enumerate() {
                if c != 0 {
                    let theta = 2.0 * std::f64::consts::PI * j as f64 / p as f64;
                    re += c as f64 * theta.cos();
                    im += c as f64 * theta.sin();
                }
            }
            re.hypot(im)
        };
        if abs > best {
            best = abs;
        }
    }
    best
}

/// Bias `max_a |sum_i omega^tr(a x_i)| / n` of a single word.
pub fn bias_of_word(field: &Field, x: &[FieldElem]) -> f64 {
    assert!(!x.is_empty(), "bias of an empty word is undefined");
    max_character_sum(field, x) / x.len() as f64
}

/// True when a word with the given maximal character sum is not eps-biased.
#[inline]
pub fn exceeds_bias(max_sum: f64, n: usize, eps: f64) -> bool {
    max_sum > (eps + BIAS_TOLERANCE) * n as f64
}

/// Symbol frequencies `Emp_x(t)`, indexed by element encoding.
pub fn empirical_distribution(field: &Field, x: &[FieldElem]) -> Vec<f64> {
    let mut counts = vec![0usize; field.q() as usize];
    for e in x {
        counts[e.0 as usize] += 1;
    }
    counts.into_iter().map(|c| c as f64 / x.len() as f64).collect()
}

pub fn uniformity_implies_bias_check(field: &Field, x: &[FieldElem]) -> UniformityCheck {
    let q = field.q() as f64;
    let max_emp = empirical_distribution(field, x).into_iter().fold(0.0, f64::max);
    let eps_candidate = (2.0 * (q - 1.0) * (max_emp - 1.0 / q)).max(0.0);
    let bias = bias_of_word(field, x);
    UniformityCheck { eps_candidate, bias, implication_holds: bias <= eps_candidate + 1e-12 }
}

fn message_count(q: u32, k: usize) -> u128 {
    (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX)
}

impl LinearCode {
    /// Builds a code from a full-row-rank generator, canonicalized to RREF.
    pub fn from_generator(generator: Matrix) -> Result<LinearCode> {
        let ech = generator.rref();
        if ech.rank != generator.rows() {
            return Err(Error::RankMismatch { rank: ech.rank, expected: generator.rows() });
        }
        Ok(Self::from_canonical(ech.reduced))
    }

    /// The row space of an arbitrary matrix.
    pub fn from_spanning(rows: &Matrix) -> LinearCode {
        Self::from_canonical(rows.row_space_basis())
    }

    pub fn zero(field: &Field, n: usize) -> LinearCode {
        Self::from_canonical(Matrix::zeros(field, 0, n))
    }

    fn from_canonical(generator: Matrix) -> LinearCode {
        LinearCode {
            field: generator.field().clone(),
            n: generator.cols(),
            generator,
            cap: DEFAULT_ENUMERATION_CAP,
            distance: OnceLock::new(),
            dual_distance: OnceLock::new(),
        }
    }

    pub fn with_enumeration_cap(mut self, cap: u64) -> LinearCode {
        self.cap = cap;
        self
    }

    pub fn enumeration_cap(&self) -> u64 {
        self.cap
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Generator in reduced row echelon form.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn is_zero(&self) -> bool {
        self.k() == 0
    }

    pub fn size(&self) -> u128 {
        message_count(self.field.q(), self.k())
    }

    fn check_enumerable(&self) -> Result<u64> {
        let total = self.size();
        if total > self.cap as u128 {
            return Err(Error::EnumerationCapExceeded { needed: total, cap: self.cap });
        }
        Ok(total as u64)
    }

    /// Codeword `m G` for the message whose base-q digits (least significant
    /// first) encode `index`.
    pub fn codeword_of_message(&self, index: u64) -> Vec<FieldElem> {
        let q = self.field.q() as u64;
        let mut rest = index;
        let msg: Vec<FieldElem> = (0..self.k())
            .map(|_| {
                let d = rest % q;
                rest /= q;
                FieldElem(d as u32)
            })
            .collect();
        self.generator.left_mul_vec(&msg)
    }

    /// All `q^k` codewords in message order.
    pub fn codewords(&self) -> Result<Codewords<'_>> {
        let total = self.check_enumerable()?;
        Ok(Codewords { code: self, walker: MessageWalker::new(self, 0), next: 0, end: total })
    }

    fn binary_rows(&self) -> Option<Vec<u128>> {
        if self.field.q() != 2 || self.n > 128 {
            return None;
        }
        Some(
            (0..self.k())
                .map(|i| self.generator.row(i).iter().enumerate().fold(0u128, |acc, (j, e)| acc | ((e.0 as u128) << j)))
                .collect(),
        )
    }

    /// Parallel fold over every codeword; `fold` receives the message index.
    pub fn fold_codewords<T, I, F, R>(&self, identity: I, fold: F, reduce: R) -> Result<T>
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(T, u64, &[FieldElem]) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let total = self.check_enumerable()?;
        let chunks = total.div_ceil(CHUNK);
        Ok((0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(total);
                let mut walker = MessageWalker::new(self, start);
                let mut acc = identity();
                for m in start..end {
                    acc = fold(acc, m, &walker.codeword);
                    if m + 1 < end {
                        walker.advance(self);
                    }
                }
                acc
            })
            .reduce(&identity, reduce))
    }

    /// Same as [`fold_codewords`](Self::fold_codewords) for binary codes of
    /// length at most 128, with codewords packed into a `u128`.
    fn fold_binary<T, I, F, R>(&self, rows: &[u128], identity: I, fold: F, reduce: R) -> Result<T>
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(T, u64, u128) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let total = self.check_enumerable()?;
        let chunks = total.div_ceil(CHUNK);
        let prefix: Vec<u128> = rows
            .iter()
            .scan(0u128, |acc, &r| {
                *acc ^= r;
                Some(*acc)
            })
            .collect();
        Ok((0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(total);
                let mut cw =
                    rows.iter().enumerate().filter(|(j, _)| (start >> j) & 1 == 1).fold(0u128, |a, (_, r)| a ^ r);
                let mut acc = identity();
                for m in start..end {
                    acc = fold(acc, m, cw);
                    let next = m + 1;
                    if next < end {
                        cw ^= prefix[next.trailing_zeros() as usize];
                    }
                }
                acc
            })
            .reduce(&identity, reduce))
    }

    fn unpack(&self, word: u128) -> Vec<FieldElem> {
        (0..self.n).map(|j| FieldElem(((word >> j) & 1) as u32)).collect()
    }

    /// Number of codewords of each Hamming weight `0..=n`.
    pub fn weight_distribution(&self) -> Result<Vec<u64>> {
        let n = self.n;
        let merge = |mut a: Vec<u64>, b: Vec<u64>| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        };
        if let Some(rows) = self.binary_rows() {
            return self.fold_binary(
                &rows,
                || vec![0u64; n + 1],
                |mut acc, _, cw| {
                    acc[cw.count_ones() as usize] += 1;
                    acc
                },
                merge,
            );
        }
        self.fold_codewords(
            || vec![0u64; n + 1],
            |mut acc, _, cw| {
                acc[weight(cw)] += 1;
                acc
            },
            merge,
        )
    }

    /// Minimum nonzero weight. Cached after the first successful call.
    pub fn distance(&self) -> Result<usize> {
        if let Some(&d) = self.distance.get() {
            return Ok(d);
        }
        if self.is_zero() {
            return Err(Error::ZeroCode);
        }
        let min = |a: usize, b: usize| a.min(b);
        let d = if let Some(rows) = self.binary_rows() {
            self.fold_binary(
                &rows,
                || usize::MAX,
                |acc, m, cw| if m == 0 { acc } else { acc.min(cw.count_ones() as usize) },
                min,
            )?
        } else {
            self.fold_codewords(|| usize::MAX, |acc, m, cw| if m == 0 { acc } else { acc.min(weight(cw)) }, min)?
        };
        let _ = self.distance.set(d);
        Ok(d)
    }

    pub fn relative_distance(&self) -> Result<f64> {
        Ok(self.distance()? as f64 / self.n as f64)
    }

    /// The dual code, generated by the null space of `G`.
    pub fn dual(&self) -> LinearCode {
        let ns = self.generator.nullspace();
        LinearCode::from_spanning(&ns).with_enumeration_cap(self.cap)
    }

    /// Minimum distance of the dual code. The dual of the full space is the
    /// zero code; its dual distance is taken to be `n + 1`.
    ///
    /// The dual is enumerated when `q^(n-k)` fits under the cap; otherwise the
    /// same number is found as the size of the smallest linearly dependent set
    /// of generator columns.
    pub fn dual_distance(&self) -> Result<usize> {
        if let Some(&d) = self.dual_distance.get() {
            return Ok(d);
        }
        let d = if self.k() == self.n {
            self.n + 1
        } else if message_count(self.field.q(), self.n - self.k()) <= self.cap as u128 {
            self.dual().distance()?
        } else {
            self.smallest_dependent_columns()?
        };
        let _ = self.dual_distance.set(d);
        Ok(d)
    }

    /// Size of the smallest linearly dependent set of columns of `G`, found by
    /// iterative deepening over column subsets.
    pub fn smallest_dependent_columns(&self) -> Result<usize> {
        let k = self.k();
        let cols: Vec<Vec<FieldElem>> = (0..self.n).map(|j| (0..k).map(|i| self.generator[(i, j)]).collect()).collect();
        let mut budget = self.cap;
        for w in 1..=k + 1 {
            let mut basis = ColumnBasis::new(&self.field);
            let found = dependent_search(&cols, 0, w, &mut basis, &mut budget)
                .map_err(|_| Error::EnumerationCapExceeded { needed: self.cap as u128 + 1, cap: self.cap })?;
            if found {
                return Ok(w);
            }
        }
        // Any k+1 vectors in F_q^k are dependent, so this is reachable only for n <= k.
        Ok(self.n + 1)
    }

    /// Membership test via the parity checks.
    pub fn contains(&self, word: &[FieldElem]) -> bool {
        if word.len() != self.n {
            return false;
        }
        let h = self.generator.nullspace();
        let f = &self.field;
        (0..h.rows())
            .all(|r| h.row(r).iter().zip(word).fold(FieldElem::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b))).is_zero())
    }

    /// Bias of the code; `query_eps` additionally counts `|C_eps|`.
    pub fn bias_report(&self, query_eps: Option<f64>) -> Result<BiasReport> {
        if self.is_zero() {
            return Err(Error::ZeroCode);
        }
        let n = self.n;
        let eps = query_eps.unwrap_or(f64::INFINITY);
        #[derive(Clone, Copy)]
        struct Acc {
            best: f64,
            msg: u64,
            ceps: u64,
            seen: u64,
        }
        let identity = || Acc { best: -1.0, msg: u64::MAX, ceps: 0, seen: 0 };
        let reduce = |a: Acc, b: Acc| {
            let (best, msg) =
                if a.best > b.best || (a.best == b.best && a.msg < b.msg) { (a.best, a.msg) } else { (b.best, b.msg) };
            Acc { best, msg, ceps: a.ceps + b.ceps, seen: a.seen + b.seen }
        };
        let step = |mut acc: Acc, m: u64, s: f64| {
            if m == 0 {
                return acc;
            }
            acc.seen += 1;
            if s > acc.best {
                acc.best = s;
                acc.msg = m;
            }
            if exceeds_bias(s, n, eps) {
                acc.ceps += 1;
            }
            acc
        };
        let (acc, witness) = if let Some(rows) = self.binary_rows() {
            let acc = self.fold_binary(
                &rows,
                identity,
                |acc, m, cw| step(acc, m, (n as i64 - 2 * cw.count_ones() as i64).unsigned_abs() as f64),
                reduce,
            )?;
            (acc, self.codeword_of_message(acc.msg))
        } else {
            let field = &self.field;
            let acc = self.fold_codewords(identity, |acc, m, cw| step(acc, m, max_character_sum(field, cw)), reduce)?;
            (acc, self.codeword_of_message(acc.msg))
        };
        Ok(BiasReport {
            epsilon: acc.best / n as f64,
            max_character_sum: acc.best,
            witness,
            witness_message: acc.msg,
            query_epsilon: query_eps,
            ceps_size: query_eps.map(|_| acc.ceps),
            enumerated: acc.seen + 1,
        })
    }

    pub fn bias(&self) -> Result<f64> {
        Ok(self.bias_report(None)?.epsilon)
    }

    /// `C_eps`: nonzero codewords that are not eps-biased, in message order.
    pub fn not_eps_biased_set(&self, eps: f64) -> Result<Vec<Vec<FieldElem>>> {
        let n = self.n;
        let merge = |mut a: Vec<(u64, Vec<FieldElem>)>, mut b: Vec<(u64, Vec<FieldElem>)>| {
            a.append(&mut b);
            a
        };
        let mut found = if let Some(rows) = self.binary_rows() {
            self.fold_binary(
                &rows,
                Vec::new,
                |mut acc, m, cw| {
                    let s = (n as i64 - 2 * cw.count_ones() as i64).unsigned_abs() as f64;
                    if m != 0 && exceeds_bias(s, n, eps) {
                        acc.push((m, self.unpack(cw)));
                    }
                    acc
                },
                merge,
            )?
        } else {
            let field = &self.field;
            self.fold_codewords(
                Vec::new,
                |mut acc, m, cw| {
                    if m != 0 && exceeds_bias(max_character_sum(field, cw), n, eps) {
                        acc.push((m, cw.to_vec()));
                    }
                    acc
                },
                merge,
            )?
        };
        found.sort_by_key(|(m, _)| *m);
        Ok(found.into_iter().map(|(_, w)| w).collect())
    }

    /// Text form: header `p r modulus.. q n k`, then one line per generator row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.field.header(), self.field.q(), self.n, self.k());
        for i in 0..self.k() {
            let row: Vec<String> = self.generator.row(i).iter().map(|e| e.0.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<LinearCode> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| perr(1, 1, "empty input"))?;
        let nums = parse_ints(header, 1)?;
        if nums.len() < 2 {
            return Err(perr(1, 1, "header too short"));
        }
        let (p, r) = (nums[0], nums[1]);
        let expected = r as usize + 6;
        if nums.len() != expected {
            return Err(perr(1, 1, format!("header needs {expected} integers, found {}", nums.len())));
        }
        let modulus: Vec<u32> = nums[2..r as usize + 3].iter().map(|&c| c as u32).collect();
        let (q, n, k) = (nums[r as usize + 3], nums[r as usize + 4] as usize, nums[r as usize + 5] as usize);
        if p.checked_pow(r as u32) != Some(q) {
            return Err(perr(1, 1, format!("q = {q} is not p^r = {p}^{r}")));
        }
        let field = Field::new(p as u32, r as u32, Some(modulus))?;
        if k > n {
            return Err(perr(1, 1, format!("k = {k} exceeds n = {n}")));
        }
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let line_no = i + 2;
            let line = lines.next().ok_or_else(|| perr(line_no, 1, "missing generator row"))?;
            let vals = parse_ints(line, line_no)?;
            if vals.len() != n {
                return Err(perr(line_no, 1, format!("expected {n} entries, found {}", vals.len())));
            }
            if let Some(pos) = vals.iter().position(|&v| v >= q) {
                return Err(perr(
                    line_no,
                    token_column(line, pos),
                    format!("entry {} is not below q = {q}", vals[pos]),
                ));
            }
            rows.push(vals.into_iter().map(|v| v as u32).collect());
        }
        if let Some((extra, line)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
            return Err(perr(k + 2 + extra, 1, format!("unexpected trailing content `{line}`")));
        }
        LinearCode::from_generator(Matrix::from_rows(&field, n, &rows)?)
    }
}

/// 1-based character column of the `idx`-th whitespace-separated token.
fn token_column(line: &str, idx: usize) -> usize {
    let mut col = 0;
    for (i, token) in line.split(' ').filter(|t| !t.is_empty()).enumerate() {
        col = line[col..].find(token).map_or(col, |o| col + o);
        if i == idx {
            return col + 1;
        }
        col += token.len();
    }
    1
}

fn perr(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, column, msg: msg.into() }
}

/// Odometer over messages in base q, maintaining the codeword incrementally.
struct MessageWalker {
    digits: Vec<FieldElem>,
    codeword: Vec<FieldElem>,
}

impl MessageWalker {
    fn new(code: &LinearCode, start: u64) -> MessageWalker {
        let q = code.field.q() as u64;
        let mut rest = start;
        let digits: Vec<FieldElem> = (0..code.k())
            .map(|_| {
                let d = rest % q;
                rest /= q;
                FieldElem(d as u32)
            })
            .collect();
        let codeword = code.generator.left_mul_vec(&digits);
        MessageWalker { digits, codeword }
    }

    fn advance(&mut self, code: &LinearCode) {
        let f = &code.field;
        let q = f.q();
        for j in 0..self.digits.len() {
            let old = self.digits[j];
            let new = FieldElem(if old.0 + 1 == q { 0 } else { old.0 + 1 });
            let delta = f.sub(new, old);
            for (c, &g) in self.codeword.iter_mut().zip(code.generator.row(j)) {
                *c = f.add(*c, f.mul(delta, g));
            }
            self.digits[j] = new;
            if !new.is_zero() {
                break;
            }
        }
    }
}

pub struct Codewords<'a> {
    code: &'a LinearCode,
    walker: MessageWalker,
    next: u64,
    end: u64,
}

impl Iterator for Codewords<'_> {
    type Item = Vec<FieldElem>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        if self.next > 0 {
            self.walker.advance(self.code);
        }
        self.next += 1;
        Some(self.walker.codeword.clone())
    }
}

/// Incrementally reduced set of columns in F_q^k.
#[derive(Clone)]
struct ColumnBasis {
    field: Field,
    /// (pivot index, normalized vector)
    rows: Vec<(usize, Vec<FieldElem>)>,
}

impl ColumnBasis {
    fn new(field: &Field) -> Self {
        ColumnBasis { field: field.clone(), rows: Vec::new() }
    }

    /// Reduces `v`; returns `None` when `v` lies in the span.
    fn reduce(&self, v: &[FieldElem]) -> Option<(usize, Vec<FieldElem>)> {
        let f = &self.field;
        let mut v = v.to_vec();
        for (piv, b) in &self.rows {
            let c = v[*piv];
            if !c.is_zero() {
                let neg = f.neg(c);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = f.add(*x, f.mul(neg, y));
                }
            }
        }
        let piv = v.iter().position(|e| !e.is_zero())?;
        let inv = f.inv(v[piv]).expect("nonzero");
        v.iter_mut().for_each(|x| *x = f.mul(*x, inv));
        Some((piv, v))
    }
}

fn dependent_search(
    cols: &[Vec<FieldElem>],
    from: usize,
    remaining: usize,
    basis: &mut ColumnBasis,
    budget: &mut u64,
) -> std::result::Result<bool, ()> {
    for j in from..cols.len() {
        if *budget == 0 {
            return Err(());
        }
        *budget -= 1;
        match basis.reduce(&cols[j]) {
            None => {
                if remaining == 1 {
                    return Ok(true);
                }
                // A dependent prefix would already have been found at a smaller size.
            }
            Some(row) if remaining > 1 => {
                basis.rows.push(row);
                let found = dependent_search(cols, j + 1, remaining - 1, basis, budget)?;
                basis.rows.pop();
                if found {
                    return Ok(true);
                }
            }
            Some(_) => {}
        }
    }
    Ok(false)
}
