//! Semialgebraic targets over orbit coordinates, exact sign evaluation, and
//! hitting sets of targets along certified pseudo-periodic orbits.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::fpnum::{rational_pow, FpNumber, Sign};
use crate::lds::{content_lines, parse_rational, Lds};
use crate::periodicity::{verify_certificate, Growth, PseudoPeriodCertificate};
use crate::semilinear::SemiLinearSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredicateError {
    #[error("certificate does not verify against the system")]
    UnverifiedCertificate,
    #[error("predicate uses x{var} but the system has dimension {dim}")]
    VariableOutOfRange { var: usize, dim: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Exponent vector of a monomial, trailing zeros trimmed.
pub type Monomial = Vec<u32>;

/// A polynomial with rational coefficients in `x1, x2, …` (0-based indices
/// internally).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

fn trim(mut m: Monomial) -> Monomial {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Polynomial::term(c, Vec::new())
    }

    pub fn from_int(c: i64) -> Self {
        Polynomial::constant(BigRational::from_integer(c.into()))
    }

    /// The coordinate `x_{index+1}`.
    pub fn variable(index: usize) -> Self {
        let mut m = vec![0; index + 1];
        m[index] = 1;
        Polynomial::term(BigRational::one(), m)
    }

    pub fn term(c: BigRational, monomial: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(trim(monomial), c);
        }
        Polynomial { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of variables mentioned, i.e. the largest used index plus one.
    pub fn num_vars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(Polynomial::from_int(1), |acc, _| &acc * self)
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        let m = trim(m);
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    /// Renames `x_{i+1}` to `x_{f(i)+1}`.
    pub fn map_variables(&self, f: &dyn Fn(usize) -> usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut nm = Vec::new();
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    let j = f(i);
                    if nm.len() <= j {
                        nm.resize(j + 1, 0);
                    }
                    nm[j] += e;
                }
            }
            out.add_term(nm, c.clone());
        }
        out
    }

    pub fn eval(&self, x: &[BigRational]) -> BigRational {
        self.terms
            .iter()
            .map(|(m, c)| c * monomial_value(m, x))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Exact sign of the polynomial at a floating-point vector.
    pub fn eval_sign(&self, v: &[FpNumber]) -> Sign {
        let x: Vec<BigRational> = v.iter().map(FpNumber::to_rational).collect();
        Sign::of_rational(&self.eval(&x))
    }
}

fn monomial_value(m: &[u32], x: &[BigRational]) -> BigRational {
    m.iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .fold(BigRational::one(), |acc, (i, &e)| {
            acc * num_traits::pow(x[i].clone(), e as usize)
        })
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    #[allow(clippy::suspicious_arithmetic_impl)] // exponents add when monomials multiply
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let n = m1.len().max(m2.len());
                let m: Monomial = (0..n)
                    .map(|i| m1.get(i).copied().unwrap_or(0) + m2.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(m, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        // highest degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || m.is_empty() {
                factors.push(mag.to_string());
            }
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

/// `P ▷ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Ge,
    Gt,
    Eq,
}

impl Relation {
    pub fn holds(self, s: Sign) -> bool {
        match self {
            Relation::Ge => s != Sign::Negative,
            Relation::Gt => s == Sign::Positive,
            Relation::Eq => s == Sign::Zero,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
        }
    }
}

/// Boolean combination of polynomial sign conditions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemialgebraicSet {
    True,
    False,
    Atom(Polynomial, Relation),
    Not(Box<SemialgebraicSet>),
    And(Vec<SemialgebraicSet>),
    Or(Vec<SemialgebraicSet>),
}

impl SemialgebraicSet {
    pub fn atom(p: Polynomial, rel: Relation) -> Self {
        SemialgebraicSet::Atom(p, rel)
    }

    pub fn and(self, other: SemialgebraicSet) -> Self {
        match self {
            SemialgebraicSet::And(mut xs) => {
                xs.push(other);
                SemialgebraicSet::And(xs)
            }
            s => SemialgebraicSet::And(vec![s, other]),
        }
    }

    pub fn or(self, other: SemialgebraicSet) -> Self {
        match self {
            SemialgebraicSet::Or(mut xs) => {
                xs.push(other);
                SemialgebraicSet::Or(xs)
            }
            s => SemialgebraicSet::Or(vec![s, other]),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        SemialgebraicSet::Not(Box::new(self))
    }

    pub fn num_vars(&self) -> usize {
        match self {
            SemialgebraicSet::True | SemialgebraicSet::False => 0,
            SemialgebraicSet::Atom(p, _) => p.num_vars(),
            SemialgebraicSet::Not(x) => x.num_vars(),
            SemialgebraicSet::And(xs) | SemialgebraicSet::Or(xs) => xs.iter().map(Self::num_vars).max().unwrap_or(0),
        }
    }

    pub fn contains(&self, v: &[FpNumber]) -> bool {
        match self {
            SemialgebraicSet::True => true,
            SemialgebraicSet::False => false,
            SemialgebraicSet::Atom(p, rel) => rel.holds(p.eval_sign(v)),
            SemialgebraicSet::Not(x) => !x.contains(v),
            SemialgebraicSet::And(xs) => xs.iter().all(|x| x.contains(v)),
            SemialgebraicSet::Or(xs) => xs.iter().any(|x| x.contains(v)),
        }
    }

    pub fn map_variables(&self, f: &dyn Fn(usize) -> usize) -> Self {
        match self {
            SemialgebraicSet::True => SemialgebraicSet::True,
            SemialgebraicSet::False => SemialgebraicSet::False,
            SemialgebraicSet::Atom(p, rel) => SemialgebraicSet::Atom(p.map_variables(f), *rel),
            SemialgebraicSet::Not(x) => x.map_variables(f).not(),
            SemialgebraicSet::And(xs) => SemialgebraicSet::And(xs.iter().map(|x| x.map_variables(f)).collect()),
            SemialgebraicSet::Or(xs) => SemialgebraicSet::Or(xs.iter().map(|x| x.map_variables(f)).collect()),
        }
    }

    pub fn parse(s: &str) -> Result<Self, PredicateError> {
        parse_formula(s, 1)
    }
}

impl fmt::Display for SemialgebraicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[SemialgebraicSet], op: &str| {
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            SemialgebraicSet::True => f.write_str("true"),
            SemialgebraicSet::False => f.write_str("false"),
            SemialgebraicSet::Atom(p, rel) => write!(f, "{p} {} 0", rel.symbol()),
            SemialgebraicSet::Not(x) => write!(f, "!({x})"),
            SemialgebraicSet::And(xs) if xs.is_empty() => f.write_str("true"),
            SemialgebraicSet::Or(xs) if xs.is_empty() => f.write_str("false"),
            SemialgebraicSet::And(xs) => join(f, xs, "&"),
            SemialgebraicSet::Or(xs) => join(f, xs, "|"),
        }
    }
}

/// A named target from a predicate file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub name: String,
    pub set: SemialgebraicSet,
}

/// Parses lines `<name>: <formula>`; `#` starts a comment.
pub fn parse_targets(text: &str) -> Result<Vec<Target>, PredicateError> {
    content_lines(text)
        .map(|(ln, line)| {
            let (name, body) = line.split_once(':').ok_or_else(|| PredicateError::Parse {
                line: ln,
                message: "expected `<name>: <formula>`".into(),
            })?;
            Ok(Target {
                name: name.trim().to_string(),
                set: parse_formula(body, ln)?,
            })
        })
        .collect()
}

pub fn render_targets(targets: &[Target]) -> String {
    targets.iter().map(|t| format!("{}: {}\n", t.name, t.set)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(BigRational),
    Var(usize),
    True,
    False,
    Op(&'static str),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>, PredicateError> {
    let err = |message: String| PredicateError::Parse { line, message };
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    const OPS: [&str; 16] = [
        ">=", "<=", "!=", "==", "+", "-", "*", "^", "(", ")", "&", "|", "!", ">", "<", "=",
    ];
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                i += 1;
            }
            let lit: String = chars[st..i].iter().collect();
            out.push(Tok::Num(
                parse_rational(&lit).ok_or_else(|| err(format!("bad number `{lit}`")))?,
            ));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[st..i].iter().collect();
            match word.as_str() {
                "true" => out.push(Tok::True),
                "false" => out.push(Tok::False),
                w => {
                    let idx = w
                        .strip_prefix('x')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&d| d >= 1)
                        .ok_or_else(|| err(format!("unknown identifier `{w}`")))?;
                    out.push(Tok::Var(idx - 1));
                }
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let op = OPS
                .iter()
                .find(|op| rest.starts_with(**op))
                .ok_or_else(|| err(format!("unexpected character `{c}`")))?;
            i += op.len();
            out.push(Tok::Op(if *op == "==" { "=" } else { op }));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, PredicateError> {
        Err(PredicateError::Parse {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn formula(&mut self) -> Result<SemialgebraicSet, PredicateError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat("|") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            SemialgebraicSet::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<SemialgebraicSet, PredicateError> {
        let mut parts = vec![self.unary()?];
        while self.eat("&") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            SemialgebraicSet::And(parts)
        })
    }

    fn unary(&mut self) -> Result<SemialgebraicSet, PredicateError> {
        if self.eat("!") {
            return Ok(self.unary()?.not());
        }
        match self.peek() {
            Some(Tok::True) => {
                self.pos += 1;
                return Ok(SemialgebraicSet::True);
            }
            Some(Tok::False) => {
                self.pos += 1;
                return Ok(SemialgebraicSet::False);
            }
            _ => {}
        }
        let save = self.pos;
        if let Ok(c) = self.comparison() {
            return Ok(c);
        }
        self.pos = save;
        if self.eat("(") {
            let inner = self.formula()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            return Ok(inner);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<SemialgebraicSet, PredicateError> {
        let lhs = self.poly()?;
        let rel = match self.peek() {
            Some(Tok::Op(op)) => *op,
            _ => return self.err("expected a relation"),
        };
        self.pos += 1;
        let rhs = self.poly()?;
        let diff = &lhs - &rhs;
        Ok(match rel {
            ">=" => SemialgebraicSet::atom(diff, Relation::Ge),
            ">" => SemialgebraicSet::atom(diff, Relation::Gt),
            "=" => SemialgebraicSet::atom(diff, Relation::Eq),
            "<=" => SemialgebraicSet::atom(-&diff, Relation::Ge),
            "<" => SemialgebraicSet::atom(-&diff, Relation::Gt),
            "!=" => SemialgebraicSet::atom(diff, Relation::Eq).not(),
            other => return self.err(format!("expected a relation, found `{other}`")),
        })
    }

    fn poly(&mut self) -> Result<Polynomial, PredicateError> {
        let mut acc = self.product()?;
        loop {
            if self.eat("+") {
                acc = &acc + &self.product()?;
            } else if self.eat("-") {
                acc = &acc - &self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Polynomial, PredicateError> {
        let mut acc = self.factor()?;
        while self.eat("*") {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PredicateError> {
        if self.eat("-") {
            return Ok(-&self.factor()?);
        }
        let base = match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Polynomial::constant(q)
            }
            Some(Tok::Var(i)) => {
                self.pos += 1;
                Polynomial::variable(i)
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let inner = self.poly()?;
                if !self.eat(")") {
                    return self.err("expected `)`");
                }
                inner
            }
            _ => return self.err("expected a number, variable or `(`"),
        };
        if self.eat("^") {
            let e = match self.peek() {
                Some(Tok::Num(q)) if q.is_integer() && !q.is_negative() => q.to_integer(),
                _ => return self.err("exponent must be a natural number"),
            };
            self.pos += 1;
            let e: u32 = e.try_into().or_else(|_| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }
}

fn parse_formula(s: &str, line: usize) -> Result<SemialgebraicSet, PredicateError> {
    let toks = tokenize(s, line)?;
    let mut p = Parser { toks, pos: 0, line };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

/// A system together with a certificate that has been checked against it.
#[derive(Debug, Clone)]
pub struct CertifiedOrbit {
    lds: Lds,
    cert: PseudoPeriodCertificate,
    prefix: Vec<Vec<FpNumber>>,
}

impl CertifiedOrbit {
    /// Verifies `cert` over three periods before accepting it.
    pub fn new(lds: Lds, cert: PseudoPeriodCertificate) -> Result<Self, PredicateError> {
        if !verify_certificate(&lds, &cert, 3) {
            return Err(PredicateError::UnverifiedCertificate);
        }
        let prefix = lds.orbit().take(cert.start as usize).map(|pt| pt.v).collect();
        Ok(CertifiedOrbit { lds, cert, prefix })
    }

    pub fn lds(&self) -> &Lds {
        &self.lds
    }

    pub fn certificate(&self) -> &PseudoPeriodCertificate {
        &self.cert
    }

    pub fn value_at(&self, t: u64) -> Vec<FpNumber> {
        if t < self.cert.start {
            self.prefix[t as usize].clone()
        } else {
            self.cert.value_at(t).expect("t ≥ N")
        }
    }

    fn check_vars(&self, n: usize) -> Result<(), PredicateError> {
        if n > self.lds.dim() {
            return Err(PredicateError::VariableOutOfRange {
                var: n,
                dim: self.lds.dim(),
            });
        }
        Ok(())
    }
}

/// Hitting set `{t : P(x⁽ᵗ⁾) ≥ 0}`.
///
/// Along phase `r` of the certificate, `x⁽ᴺ⁺ʳ⁺ᵏᵀ⁾_j = s_j·b^{k·α_j}` where `s`
/// is the snapshot row, so `P(x⁽ᴺ⁺ʳ⁺ᵏᵀ⁾) = Σ_g A_g·b^{k·g}` with monomials
/// grouped by growth `g = Σ_j α_j·e_j`. Once `b^k·|A_top| > Σ |A_lower|`
/// the largest nonzero group decides the sign; earlier `k` are evaluated
/// exactly.
pub fn hitting_set_atom(p: &Polynomial, orbit: &CertifiedOrbit) -> Result<SemiLinearSet, PredicateError> {
    orbit.check_vars(p.num_vars())?;
    let cert = &orbit.cert;
    let base = orbit.lds.format().base();
    let n = cert.start;
    let t_len = cert.period;

    // per phase: exact values for k < k0 and the eventual verdict
    let mut phases: Vec<(Vec<bool>, bool)> = Vec::with_capacity(t_len as usize);
    for snap in &cert.snapshot {
        let s: Vec<BigRational> = snap.iter().map(FpNumber::to_rational).collect();
        let mut strata: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (m, c) in p.terms() {
            let z = monomial_value(m, &s);
            if z.is_zero() {
                continue;
            }
            let g: i64 = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| match cert.growth[j] {
                    Growth::Finite(a) => a * e as i64,
                    Growth::NegInf => unreachable!("nonzero snapshot value with -inf growth"),
                })
                .sum();
            *strata.entry(g).or_insert_with(BigRational::zero) += c * z;
        }
        strata.retain(|_, a| !a.is_zero());
        let Some((&top_g, top)) = strata.iter().next_back() else {
            // identically zero along this phase, and 0 ≥ 0
            phases.push((Vec::new(), true));
            continue;
        };
        let lower: BigRational = strata
            .iter()
            .filter(|(&g, _)| g != top_g)
            .map(|(_, a)| a.abs())
            .fold(BigRational::zero(), |a, b| a + b);
        let top_abs = top.abs();
        let b = BigRational::from_integer(BigInt::from(base));
        let mut k0 = 0u64;
        let mut scaled = top_abs.clone();
        while scaled <= lower {
            scaled *= &b;
            k0 += 1;
        }
        let early = (0..k0)
            .map(|k| {
                let v: BigRational = strata
                    .iter()
                    .map(|(&g, a)| a * rational_pow(base, g * k as i64))
                    .fold(BigRational::zero(), |x, y| x + y);
                !v.is_negative()
            })
            .collect();
        phases.push((early, top.is_positive()));
    }

    let k_max = phases.iter().map(|(e, _)| e.len() as u64).max().unwrap_or(0);
    let threshold = n + k_max * t_len;
    Ok(SemiLinearSet::from_fn(threshold, t_len, |t| {
        if t < n {
            return p.eval_sign(&orbit.prefix[t as usize]) != Sign::Negative;
        }
        let r = ((t - n) % t_len) as usize;
        let k = ((t - n) / t_len) as usize;
        let (early, later) = &phases[r];
        early.get(k).copied().unwrap_or(*later)
    }))
}

/// Hitting set `{t : x⁽ᵗ⁾ ∈ Y}`.
pub fn hitting_set(y: &SemialgebraicSet, orbit: &CertifiedOrbit) -> Result<SemiLinearSet, PredicateError> {
    Ok(match y {
        SemialgebraicSet::True => SemiLinearSet::naturals(),
        SemialgebraicSet::False => SemiLinearSet::empty(),
        SemialgebraicSet::Atom(p, Relation::Ge) => hitting_set_atom(p, orbit)?,
        SemialgebraicSet::Atom(p, Relation::Gt) => hitting_set_atom(&-p, orbit)?.complement(),
        SemialgebraicSet::Atom(p, Relation::Eq) => {
            hitting_set_atom(p, orbit)?.intersect(&hitting_set_atom(&-p, orbit)?)
        }
        SemialgebraicSet::Not(x) => hitting_set(x, orbit)?.complement(),
        SemialgebraicSet::And(xs) => xs.iter().try_fold(SemiLinearSet::naturals(), |acc, x| {
            Ok::<_, PredicateError>(acc.intersect(&hitting_set(x, orbit)?))
        })?,
        SemialgebraicSet::Or(xs) => xs.iter().try_fold(SemiLinearSet::empty(), |acc, x| {
            Ok::<_, PredicateError>(acc.union(&hitting_set(x, orbit)?))
        })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpnum::FpFormat;
    use crate::periodicity::{assemble_certificate, DetectOptions};

    fn orbit_of(m: &[Vec<i64>], x: &[i64]) -> CertifiedOrbit {
        let lds = Lds::from_integers(m, x, FpFormat::decimal(1).unwrap()).unwrap();
        let cert = assemble_certificate(&lds, DetectOptions::default()).unwrap();
        CertifiedOrbit::new(lds, cert).unwrap()
    }

    fn fp(s: &str, p: u32) -> FpNumber {
        FpNumber::parse(s, &FpFormat::decimal(p).unwrap(), true).unwrap()
    }

    #[test]
    fn exact_signs() {
        let p = SemialgebraicSet::parse("x1 - 5 >= 0").unwrap();
        let SemialgebraicSet::Atom(poly, _) = p else { panic!() };
        assert_eq!(poly.eval_sign(&[fp("10", 1)]), Sign::Positive);
        let x1 = Polynomial::variable(0);
        let x2 = Polynomial::variable(1);
        assert!((&(&x1 * &x2) - &(&x2 * &x1)).is_zero());
        let q = &x1.pow(2) - &Polynomial::from_int(2);
        assert_eq!(q.eval_sign(&[fp("0.14e1", 2)]), Sign::Negative);
    }

    #[test]
    fn parse_and_render() {
        let y = SemialgebraicSet::parse("!(x1 >= 5) & (x2^2 - 3/2*x1 < 1 | x1 = 2*x2)").unwrap();
        let again = SemialgebraicSet::parse(&y.to_string()).unwrap();
        assert_eq!(again, y);
        assert_eq!(
            SemialgebraicSet::parse("(x1 + 1)^2 >= 0").unwrap(),
            SemialgebraicSet::atom(
                &(&Polynomial::variable(0) + &Polynomial::from_int(1)).pow(2) - &Polynomial::zero(),
                Relation::Ge
            )
        );
        assert!(matches!(
            SemialgebraicSet::parse("x1 >="),
            Err(PredicateError::Parse { .. })
        ));
        let ts = parse_targets("# targets\nbig: x1 >= 5\nsmall: !(x1 >= 5)\n").unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(parse_targets(&render_targets(&ts)).unwrap(), ts);
    }

    #[test]
    fn times_ten_threshold() {
        let orbit = orbit_of(&[vec![10]], &[1]);
        let y = SemialgebraicSet::parse("x1 - 5 >= 0").unwrap();
        let z = hitting_set(&y, &orbit).unwrap();
        assert_eq!(z, SemiLinearSet::linear(1, 1).unwrap());
    }

    #[test]
    fn trivial_targets() {
        let orbit = orbit_of(&[vec![3]], &[1]);
        let pos = SemialgebraicSet::parse("x1 >= 0").unwrap();
        assert_eq!(hitting_set(&pos, &orbit).unwrap(), SemiLinearSet::naturals());
        let neg = SemialgebraicSet::parse("-x1^2 >= 0").unwrap();
        assert!(hitting_set(&neg, &orbit).unwrap().is_empty());
        assert_eq!(
            hitting_set(&SemialgebraicSet::True, &orbit).unwrap(),
            SemiLinearSet::naturals()
        );
        let contra = SemialgebraicSet::parse("x1 >= 5 & !(x1 >= 5)").unwrap();
        assert!(hitting_set(&contra, &orbit).unwrap().is_empty());
    }

    #[test]
    fn equality_hits_once() {
        let orbit = orbit_of(&[vec![3]], &[1]);
        let y = SemialgebraicSet::parse("x1 = 90").unwrap();
        assert_eq!(hitting_set(&y, &orbit).unwrap(), SemiLinearSet::finite(&[4]));
    }

    #[test]
    fn unverified_certificate_rejected() {
        let lds = Lds::from_integers(&[vec![3]], &[1], FpFormat::decimal(1).unwrap()).unwrap();
        let mut cert = assemble_certificate(&lds, DetectOptions::default()).unwrap();
        cert.growth[0] = Growth::Finite(2);
        assert_eq!(
            CertifiedOrbit::new(lds, cert).unwrap_err(),
            PredicateError::UnverifiedCertificate
        );
    }

    #[test]
    fn cancelling_top_stratum_falls_to_next() {
        // x1 grows ×10, x2 stays 1: x1 - x1 + x2 - 1 is identically zero on
        // the orbit, x1*x2 - x1 too
        let orbit = orbit_of(&[vec![10, 0], vec![0, 1]], &[1, 1]);
        let y = SemialgebraicSet::parse("x1*x2 - x1 = 0").unwrap();
        assert_eq!(hitting_set(&y, &orbit).unwrap(), SemiLinearSet::naturals());
        let y = SemialgebraicSet::parse("x1*x2 - x1 + x2 > 1").unwrap();
        assert!(hitting_set(&y, &orbit).unwrap().is_empty());
    }
}
