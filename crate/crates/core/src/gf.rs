//! Arithmetic in GF(p^r) with the absolute trace and additive characters.
//!
//! Elements are stored by their integer encoding `sum coeffs[i] * p^i` in the
//! polynomial basis modulo a monic irreducible polynomial. Multiplication goes
//! through exp/log tables built from a primitive element, so every operation is
//! a table lookup or a handful of integer ops.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 16;

/// A field element, identified by its integer encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElem(pub u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// `omega^exponent` with `omega = exp(2 pi i / order)`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootOfUnity {
    pub exponent: u32,
    pub order: u32,
}

impl RootOfUnity {
    pub fn to_complex(self) -> Complex64 {
        if self.exponent == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if 2 * self.exponent == self.order {
            return Complex64::new(-1.0, 0.0);
        }
        let theta = 2.0 * std::f64::consts::PI * self.exponent as f64 / self.order as f64;
        Complex64::from_polar(1.0, theta)
    }

    /// Exact `+1`/`-1` for characteristic 2.
    pub fn sign(self) -> Option<i32> {
        match (self.order, self.exponent) {
            (_, 0) => Some(1),
            (2, 1) => Some(-1),
            _ => None,
        }
    }
}

struct Tables {
    p: u32,
    r: u32,
    q: u32,
    modulus: Vec<u32>,
    /// exp[i] = g^i for i in 0..2(q-1)
    exp: Vec<u32>,
    /// log[x] for x != 0
    log: Vec<u32>,
    trace: Vec<u32>,
    /// tr(a*x) for q <= 256, row-major by a
    trace_product: Option<Vec<u8>>,
}

/// GF(p^r) together with its lookup tables. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("p", &self.t.p).field("r", &self.t.r).field("modulus", &self.t.modulus).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t)
            || (self.t.p == other.t.p && self.t.r == other.t.r && self.t.modulus == other.t.modulus)
    }
}

impl Eq for Field {}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `q` into `(p, r)` with `q = p^r`, `p` prime.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut r = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        r += 1;
    }
    (rest == 1).then_some((p as u32, r))
}

// Dense polynomials over F_p, constant term first.

fn poly_trim(mut f: Vec<u32>) -> Vec<u32> {
    while f.last() == Some(&0) {
        f.pop();
    }
    f
}

fn poly_rem(f: &[u32], g: &[u32], p: u32) -> Vec<u32> {
    let g = poly_trim(g.to_vec());
    let mut rem = poly_trim(f.to_vec());
    let dg = g.len() - 1;
    let lead_inv = inv_mod(g[dg], p);
    while rem.len() > dg {
        let dr = rem.len() - 1;
        let factor = (rem[dr] as u64 * lead_inv as u64 % p as u64) as u32;
        for (i, &gi) in g.iter().enumerate() {
            let idx = dr - dg + i;
            let sub = (factor as u64 * gi as u64 % p as u64) as u32;
            rem[idx] = (rem[idx] + p - sub) % p;
        }
        rem = poly_trim(rem);
    }
    rem
}

fn inv_mod(a: u32, p: u32) -> u32 {
    // p is prime and small: Fermat.
    let mut result = 1u64;
    let mut base = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    result as u32
}

fn digits(mut x: u32, p: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(x % p);
        x /= p;
    }
    out
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// True when `f` (constant term first) is monic of degree `r` and has no monic
/// factor of degree `1..=r/2` over F_p.
pub fn is_irreducible(f: &[u32], p: u32, r: u32) -> bool {
    if f.len() != r as usize + 1 || f[r as usize] != 1 || f.iter().any(|&c| c >= p) {
        return false;
    }
    for deg in 1..=r / 2 {
        let count = (p as u64).pow(deg);
        for enc in 0..count {
            let mut g = digits(enc as u32, p, deg as usize);
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn default_modulus(p: u32, r: u32) -> Vec<u32> {
    let count = (p as u64).pow(r);
    for enc in 0..count {
        let mut f = digits(enc as u32, p, r as usize);
        f.push(1);
        if is_irreducible(&f, p, r) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn slow_mul(a: u32, b: u32, p: u32, modulus: &[u32]) -> u32 {
    let r = modulus.len() - 1;
    let da = digits(a, p, r);
    let db = digits(b, p, r);
    let mut prod = vec![0u32; 2 * r];
    for (i, &x) in da.iter().enumerate() {
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
        }
    }
    let rem = poly_rem(&prod, modulus, p);
    let mut padded = rem;
    padded.resize(r, 0);
    undigits(&padded, p)
}

impl Field {
    /// Builds GF(p^r). Without an explicit modulus the lexicographically smallest
    /// monic irreducible polynomial is used, ordering by the encoding of the
    /// non-leading coefficients.
    pub fn new(p: u32, r: u32, modulus: Option<Vec<u32>>) -> Result<Field> {
        if !is_prime(p as u64) {
            return Err(Error::CompositeCharacteristic(p));
        }
        if r == 0 {
            return Err(Error::BadParameters("extension degree must be at least 1".into()));
        }
        let q64 = (p as u64).checked_pow(r).unwrap_or(u64::MAX);
        if q64 > MAX_ORDER {
            return Err(Error::FieldTooLarge(q64));
        }
        let modulus = match modulus {
            Some(m) => {
                if !is_irreducible(&m, p, r) {
                    return Err(Error::ReducibleModulus(m, r));
                }
                m
            }
            None => default_modulus(p, r),
        };
        let q = q64 as u32;
        Ok(Field { t: Arc::new(Self::build_tables(p, r, q, modulus)) })
    }

    /// GF(q) with the default modulus.
    pub fn with_order(q: u64) -> Result<Field> {
        let (p, r) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        Field::new(p, r, None)
    }

    fn build_tables(p: u32, r: u32, q: u32, modulus: Vec<u32>) -> Tables {
        let order = q - 1;
        let mut exp = Vec::new();
        // Find a primitive element by brute force; q <= 2^16 keeps this cheap.
        for g in 1..q {
            let mut powers = Vec::with_capacity(order as usize);
            let mut x = 1u32;
            loop {
                powers.push(x);
                x = slow_mul(x, g, p, &modulus);
                if x == 1 {
                    break;
                }
            }
            if powers.len() == order as usize {
                exp = powers;
                break;
            }
        }
        let mut log = vec![0u32; q as usize];
        for (i, &x) in exp.iter().enumerate() {
            log[x as usize] = i as u32;
        }
        let doubled: Vec<u32> = exp.iter().chain(exp.iter()).copied().collect();

        let mut tables = Tables { p, r, q, modulus, exp: doubled, log, trace: Vec::new(), trace_product: None };
        let field = Field { t: Arc::new(tables) };
        let trace: Vec<u32> = (0..q).map(|x| field.trace_slow(FieldElem(x)).0).collect();
        tables = Arc::try_unwrap(field.t).ok().expect("sole owner");
        tables.trace = trace;
        if q <= 256 {
            let field = Field { t: Arc::new(tables) };
            let mut tp = Vec::with_capacity((q * q) as usize);
            for a in 0..q {
                for x in 0..q {
                    let prod = field.mul(FieldElem(a), FieldElem(x));
                    tp.push(field.t.trace[prod.0 as usize] as u8);
                }
            }
            tables = Arc::try_unwrap(field.t).ok().expect("sole owner");
            tables.trace_product = Some(tp);
        }
        tables
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.t.p
    }

    #[inline]
    pub fn r(&self) -> u32 {
        self.t.r
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.t.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.t.modulus
    }

    /// Checks that `x` is a valid encoding in this field.
    pub fn elem(&self, x: u32) -> Result<FieldElem> {
        if x < self.t.q {
            Ok(FieldElem(x))
        } else {
            Err(Error::FieldMismatch(x, self.t.q))
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.t.q).map(FieldElem)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElem> {
        (1..self.t.q).map(FieldElem)
    }

    pub fn coeffs(&self, x: FieldElem) -> Vec<u32> {
        digits(x.0, self.t.p, self.t.r as usize)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElem> {
        if coeffs.len() != self.t.r as usize || coeffs.iter().any(|&c| c >= self.t.p) {
            return Err(Error::BadParameters(format!("invalid coefficient vector {coeffs:?}")));
        }
        Ok(FieldElem(undigits(coeffs, self.t.p)))
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let t = &*self.t;
        if t.p == 2 {
            return FieldElem(a.0 ^ b.0);
        }
        if t.r == 1 {
            return FieldElem((a.0 + b.0) % t.p);
        }
        let (mut x, mut y, mut out, mut place) = (a.0, b.0, 0, 1);
        while x > 0 || y > 0 {
            out += ((x % t.p + y % t.p) % t.p) * place;
            x /= t.p;
            y /= t.p;
            place *= t.p;
        }
        FieldElem(out)
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        let t = &*self.t;
        if t.p == 2 {
            return a;
        }
        if t.r == 1 {
            return FieldElem((t.p - a.0) % t.p);
        }
        let (mut x, mut out, mut place) = (a.0, 0, 1);
        while x > 0 {
            out += ((t.p - x % t.p) % t.p) * place;
            x /= t.p;
            place *= t.p;
        }
        FieldElem(out)
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.0 == 0 || b.0 == 0 {
            return FieldElem::ZERO;
        }
        let t = &*self.t;
        FieldElem(t.exp[(t.log[a.0 as usize] + t.log[b.0 as usize]) as usize])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let t = &*self.t;
        let order = t.q - 1;
        Ok(FieldElem(t.exp[((order - t.log[a.0 as usize]) % order) as usize]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElem, e: u64) -> FieldElem {
        if e == 0 {
            return FieldElem::ONE;
        }
        if a.is_zero() {
            return FieldElem::ZERO;
        }
        let t = &*self.t;
        let order = (t.q - 1) as u64;
        FieldElem(t.exp[((t.log[a.0 as usize] as u64 * (e % order)) % order) as usize])
    }

    /// Checked binary operation on encodings.
    pub fn arith(&self, a: FieldElem, b: FieldElem, op: ArithOp) -> Result<FieldElem> {
        self.elem(a.0)?;
        self.elem(b.0)?;
        match op {
            ArithOp::Add => Ok(self.add(a, b)),
            ArithOp::Sub => Ok(self.sub(a, b)),
            ArithOp::Mul => Ok(self.mul(a, b)),
            ArithOp::Div => self.div(a, b),
        }
    }

    fn trace_slow(&self, x: FieldElem) -> FieldElem {
        let mut acc = FieldElem::ZERO;
        let mut conj = x;
        for _ in 0..self.t.r {
            acc = self.add(acc, conj);
            conj = self.pow(conj, self.t.p as u64);
        }
        acc
    }

    /// Absolute trace `sum_{i<r} x^(p^i)`, landing in the prime subfield
    /// (encodings `0..p`).
    #[inline]
    pub fn trace(&self, x: FieldElem) -> FieldElem {
        FieldElem(self.t.trace[x.0 as usize])
    }

    /// `tr(a * x)` as an integer in `0..p`.
    #[inline]
    pub fn trace_of_product(&self, a: FieldElem, x: FieldElem) -> u32 {
        match &self.t.trace_product {
            Some(tp) => tp[(a.0 * self.t.q + x.0) as usize] as u32,
            None => self.t.trace[self.mul(a, x).0 as usize],
        }
    }

    /// The additive character `omega^tr(a x)`.
    pub fn character(&self, a: FieldElem, x: FieldElem) -> RootOfUnity {
        RootOfUnity { exponent: self.trace_of_product(a, x), order: self.t.p }
    }

    /// `"p r c_0 ... c_r"` with the modulus constant term first.
    pub fn header(&self) -> String {
        let mut s = format!("{} {}", self.t.p, self.t.r);
        for c in &self.t.modulus {
            s.push(' ');
            s.push_str(&c.to_string());
        }
        s
    }

    /// Inverse of [`Field::header`].
    pub fn parse_header(line: &str) -> Result<Field> {
        let nums = parse_ints(line, 1)?;
        if nums.len() < 2 {
            return Err(parse_err(1, 1, "expected `p r modulus...`"));
        }
        let (p, r) = (nums[0] as u32, nums[1] as u32);
        if nums.len() != r as usize + 3 {
            return Err(parse_err(1, 1, format!("expected {} modulus coefficients", r + 1)));
        }
        Field::new(p, r, Some(nums[2..].iter().map(|&c| c as u32).collect()))
    }
}

fn parse_err(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, column, msg: msg.into() }
}

/// Parses whitespace-separated unsigned integers, reporting 1-based columns.
pub(crate) fn parse_ints(line: &str, line_no: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut col = 0usize;
    for token in line.split(' ') {
        if !token.is_empty() {
            let v =
                token.parse::<u64>().map_err(|_| parse_err(line_no, col + 1, format!("invalid integer `{token}`")))?;
            out.push(v);
        }
        col += token.len() + 1;
    }
    Ok(out)
}
