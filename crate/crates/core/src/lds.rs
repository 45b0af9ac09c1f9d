//! Linear dynamical systems over exact rationals and their rounded orbits.
//!
//! The orbit is `x⁽⁰⁾ = [x]` and `x⁽ᵗ⁾ = [M·x⁽ᵗ⁻¹⁾]`: each component of the
//! matrix-vector product is computed exactly and rounded once.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::fpnum::{self, Exponent, FpError, FpFormat, FpNumber, TieRule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LdsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a system needs dimension at least 1")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Format(#[from] FpError),
}

/// `Σ term·b^(u - low)` for units `u ≥ low`.
fn sum_at(terms: &[(i64, BigInt)], low: i64, base: u64) -> BigInt {
    let mut acc = BigInt::zero();
    for (u, t) in terms {
        if *u > low {
            acc += t * BigInt::from(fpnum::pow_big(base, (u - low) as u64));
        } else {
            acc += t;
        }
    }
    acc
}

fn parse_err(line: usize, message: impl Into<String>) -> LdsError {
    LdsError::Parse {
        line,
        message: message.into(),
    }
}

/// One matrix row over a common denominator: `row = (1/den)·Σ numer_j·e_j`.
#[derive(Debug, Clone)]
struct RowKernel {
    den: BigUint,
    terms: Vec<(usize, BigInt)>,
}

/// A rational matrix, an initial vector and the rounding format.
#[derive(Debug, Clone)]
pub struct Lds {
    matrix: Vec<Vec<BigRational>>,
    init: Vec<BigRational>,
    fmt: FpFormat,
    non_negative: bool,
    rows: Vec<RowKernel>,
}

impl PartialEq for Lds {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.init == other.init && self.fmt == other.fmt
    }
}

impl Eq for Lds {}

impl Lds {
    pub fn new(matrix: Vec<Vec<BigRational>>, init: Vec<BigRational>, fmt: FpFormat) -> Result<Self, LdsError> {
        let d = init.len();
        if d == 0 {
            return Err(LdsError::Empty);
        }
        if matrix.len() != d {
            return Err(LdsError::DimensionMismatch {
                expected: d,
                found: matrix.len(),
            });
        }
        for row in &matrix {
            if row.len() != d {
                return Err(LdsError::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
        }
        let non_negative = matrix.iter().flatten().chain(init.iter()).all(|q| !q.is_negative());
        let rows = matrix.iter().map(|row| kernel(row)).collect();
        Ok(Lds {
            matrix,
            init,
            fmt,
            non_negative,
            rows,
        })
    }

    /// Convenience constructor from integer entries.
    pub fn from_integers(matrix: &[Vec<i64>], init: &[i64], fmt: FpFormat) -> Result<Self, LdsError> {
        let m = matrix
            .iter()
            .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
            .collect();
        let x = init.iter().map(|&v| BigRational::from_integer(v.into())).collect();
        Lds::new(m, x, fmt)
    }

    pub fn dim(&self) -> usize {
        self.init.len()
    }

    pub fn matrix(&self) -> &[Vec<BigRational>] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigRational {
        &self.matrix[row][col]
    }

    pub fn init(&self) -> &[BigRational] {
        &self.init
    }

    pub fn format(&self) -> &FpFormat {
        &self.fmt
    }

    /// Every entry of the matrix and of the initial vector is `≥ 0`.
    pub fn is_non_negative(&self) -> bool {
        self.non_negative
    }

    /// Same system under a different format.
    pub fn with_format(&self, fmt: FpFormat) -> Lds {
        let mut out = self.clone();
        out.fmt = fmt;
        out
    }

    /// Successor lists of the matrix graph: `j → i` whenever `M[i][j] ≠ 0`.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let d = self.dim();
        let mut succ = vec![Vec::new(); d];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in &row.terms {
                succ[j].push(i);
            }
        }
        succ
    }

    /// Columns with a nonzero entry in `row`.
    pub fn row_support(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[row].terms.iter().map(|&(j, _)| j)
    }

    /// `x⁽⁰⁾ = [x]`.
    pub fn initial_point(&self) -> Vec<FpNumber> {
        self.init.iter().map(|q| fpnum::round(q, &self.fmt)).collect()
    }

    /// One rounded step `[M·v]`.
    pub fn step(&self, v: &[FpNumber]) -> Result<Vec<FpNumber>, LdsError> {
        if v.len() != self.dim() {
            return Err(LdsError::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(self.step_unchecked(v))
    }

    pub(crate) fn step_unchecked(&self, v: &[FpNumber]) -> Vec<FpNumber> {
        (0..self.dim()).map(|i| self.round_row(i, v, |_| true)).collect()
    }

    /// `[Σ_{j ∈ cols} M[row][j]·v[j]]` over the columns accepted by `include`.
    ///
    /// Terms far below the leading ones only matter through their sign. After
    /// a large enough drop in units the tail is smaller than one unit of the
    /// last kept digit (the kept part is widened to `p + 3` digits beyond
    /// `den` first), so no rounding boundary separates the exact sum from the
    /// kept part plus a signed unit one position lower. Mixed-sign tails fall
    /// back to the exact sum.
    pub(crate) fn round_row(&self, row: usize, v: &[FpNumber], include: impl Fn(usize) -> bool) -> FpNumber {
        let kernel = &self.rows[row];
        let p = self.fmt.precision() as i64;
        let base = self.fmt.base() as u64;
        let mut terms: Vec<(i64, BigInt)> = Vec::with_capacity(kernel.terms.len());
        for (j, numer) in &kernel.terms {
            if !include(*j) {
                continue;
            }
            let Exponent::Finite(e) = v[*j].exponent() else {
                continue;
            };
            let mut term = numer * BigInt::from(v[*j].digits());
            if v[*j].is_negative() {
                term = -term;
            }
            terms.push((e - p, term));
        }
        if terms.is_empty() {
            return self.fmt.zero();
        }
        terms.sort_by_key(|t| std::cmp::Reverse(t.0));

        if let Some((acc, low)) = self.truncated_sum(&terms, &kernel.den) {
            return fpnum::round_scaled(acc.is_negative(), acc.magnitude(), &kernel.den, low, &self.fmt);
        }
        let low = terms.last().expect("nonempty").0;
        let acc = sum_at(&terms, low, base);
        fpnum::round_scaled(acc.is_negative(), acc.magnitude(), &kernel.den, low, &self.fmt)
    }

    fn truncated_sum(&self, terms: &[(i64, BigInt)], den: &BigUint) -> Option<(BigInt, i64)> {
        let p = self.fmt.precision() as i64;
        let base = self.fmt.base() as u64;
        let digits = |n: &BigUint| {
            let (mut k, mut bound) = (0i64, BigUint::one());
            while &bound <= n {
                bound *= base;
                k += 1;
            }
            k
        };
        let weight: BigUint = terms.iter().map(|(_, t)| t.magnitude().clone()).sum();
        let l = digits(&weight);
        // room for the tail, the widening below and the nudge digit
        let gap = l + p + digits(den) + 5;
        let cut = (1..terms.len()).find(|&i| terms[i - 1].0 - terms[i].0 > gap)?;
        let (head, tail) = terms.split_at(cut);
        let sign = tail[0].1.sign();
        if tail.iter().any(|(_, t)| t.sign() != sign) {
            return None;
        }
        let low = head[cut - 1].0;
        let mut acc = sum_at(head, low, base);
        if acc.is_zero() {
            return None;
        }
        // widen until the kept part has p + 3 digits beyond den
        let floor = den * fpnum::pow_big(base, (p + 3) as u64);
        let mut widen = 0;
        while acc.magnitude() < &floor {
            acc *= base;
            widen += 1;
        }
        let nudge = if sign == num_bigint::Sign::Minus { -1 } else { 1 };
        Some((acc * BigInt::from(base) + nudge, low - widen - 1))
    }

    /// The lazily produced orbit `x⁽⁰⁾, x⁽¹⁾, …`.
    pub fn orbit(&self) -> Orbit<'_> {
        Orbit {
            lds: self,
            t: 0,
            current: self.initial_point(),
        }
    }

    /// `x⁽⁰⁾ … x⁽ʰ⁾`.
    pub fn orbit_prefix(&self, horizon: u64) -> Vec<OrbitPoint> {
        self.orbit().take(horizon as usize + 1).collect()
    }

    /// Parses the line-oriented text format (see [`Lds`]'s `Display`).
    pub fn parse(text: &str) -> Result<Lds, LdsError> {
        parse_lds(text)
    }
}

fn kernel(row: &[BigRational]) -> RowKernel {
    let den = row
        .iter()
        .filter(|q| !q.is_zero())
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let terms = row
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_zero())
        .map(|(j, q)| (j, q.numer() * (&den / q.denom())))
        .collect();
    RowKernel {
        den: den.magnitude().clone(),
        terms,
    }
}

/// `x⁽ᵗ⁾` together with its step index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPoint {
    pub t: u64,
    pub v: Vec<FpNumber>,
}

/// Infinite iterator over the rounded orbit.
pub struct Orbit<'a> {
    lds: &'a Lds,
    t: u64,
    current: Vec<FpNumber>,
}

impl Iterator for Orbit<'_> {
    type Item = OrbitPoint;

    fn next(&mut self) -> Option<OrbitPoint> {
        let next = self.lds.step_unchecked(&self.current);
        let point = OrbitPoint {
            t: self.t,
            v: std::mem::replace(&mut self.current, next),
        };
        self.t += 1;
        Some(point)
    }
}

/// Random-access view of an orbit, extended on demand.
#[derive(Debug, Clone)]
pub struct OrbitCache<'a> {
    lds: &'a Lds,
    points: Vec<Vec<FpNumber>>,
}

impl<'a> OrbitCache<'a> {
    pub fn new(lds: &'a Lds) -> Self {
        OrbitCache {
            lds,
            points: vec![lds.initial_point()],
        }
    }

    pub fn lds(&self) -> &'a Lds {
        self.lds
    }

    /// Number of cached points.
    pub fn len(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ensure(&mut self, t: u64) {
        while (self.points.len() as u64) <= t {
            let next = self.lds.step_unchecked(self.points.last().expect("nonempty"));
            self.points.push(next);
        }
    }

    pub fn get(&mut self, t: u64) -> &[FpNumber] {
        self.ensure(t);
        &self.points[t as usize]
    }

    /// Already computed point; panics if `t` has not been reached.
    pub fn cached(&self, t: u64) -> &[FpNumber] {
        &self.points[t as usize]
    }
}

impl fmt::Display for Lds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lds d={} base={} p={}",
            self.dim(),
            self.fmt.base(),
            self.fmt.precision()
        )?;
        if self.fmt.tie() != TieRule::default() {
            write!(f, " tie={}", self.fmt.tie())?;
        }
        writeln!(f)?;
        for row in &self.matrix {
            let cells: Vec<String> = row.iter().map(|q| q.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        let init: Vec<String> = self.init.iter().map(|q| q.to_string()).collect();
        writeln!(f, "init: {}", init.join(" "))
    }
}

/// Content lines with comments stripped, paired with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Parses `num/den`, an integer or a decimal.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if s.contains('e') {
        return None;
    }
    fpnum::parse_literal(s, 10).ok()
}

fn parse_lds(text: &str) -> Result<Lds, LdsError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing `lds` header"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("lds") {
        return Err(parse_err(hline, "header must start with `lds`"));
    }
    let (mut d, mut base, mut p, mut tie) = (None, None, None, TieRule::default());
    for word in words {
        let (key, value) = word
            .split_once('=')
            .ok_or_else(|| parse_err(hline, format!("expected key=value, found `{word}`")))?;
        let bad = || parse_err(hline, format!("bad value for `{key}`: `{value}`"));
        match key {
            "d" => d = Some(value.parse::<usize>().map_err(|_| bad())?),
            "base" => base = Some(value.parse::<u32>().map_err(|_| bad())?),
            "p" => p = Some(value.parse::<u32>().map_err(|_| bad())?),
            "tie" => tie = value.parse().map_err(|_| bad())?,
            _ => return Err(parse_err(hline, format!("unknown header key `{key}`"))),
        }
    }
    let d = d.ok_or_else(|| parse_err(hline, "header lacks d="))?;
    let base = base.ok_or_else(|| parse_err(hline, "header lacks base="))?;
    let p = p.ok_or_else(|| parse_err(hline, "header lacks p="))?;
    let fmt = FpFormat::with_tie(base, p, tie).map_err(|e| parse_err(hline, e.to_string()))?;
    if d == 0 {
        return Err(parse_err(hline, "dimension must be positive"));
    }

    let cells = |line: usize, s: &str| -> Result<Vec<BigRational>, LdsError> {
        s.split_whitespace()
            .map(|c| parse_rational(c).ok_or_else(|| parse_err(line, format!("bad rational `{c}`"))))
            .collect()
    };

    let mut matrix = Vec::with_capacity(d);
    let mut last_line = hline;
    while matrix.len() < d {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, format!("expected {d} matrix rows")))?;
        last_line = ln;
        if line.starts_with("init:") {
            return Err(parse_err(ln, format!("expected {d} matrix rows before `init:`")));
        }
        let row = cells(ln, line)?;
        if row.len() != d {
            return Err(parse_err(
                ln,
                format!("matrix row has {} entries, expected {d}", row.len()),
            ));
        }
        matrix.push(row);
    }

    let (ln, line) = lines
        .next()
        .ok_or_else(|| parse_err(last_line, "missing `init:` line"))?;
    let rest = line
        .strip_prefix("init:")
        .ok_or_else(|| parse_err(ln, "expected `init:`"))?;
    let mut init = cells(ln, rest)?;
    let mut init_line = ln;
    while init.len() < d {
        let Some((ln, line)) = lines.next() else { break };
        init_line = ln;
        init.extend(cells(ln, line)?);
    }
    if init.len() != d {
        return Err(parse_err(
            init_line,
            format!("init has {} entries, expected {d}", init.len()),
        ));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected trailing content"));
    }
    Lds::new(matrix, init, fmt)
}
