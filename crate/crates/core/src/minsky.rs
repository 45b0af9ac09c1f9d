//! Two-counter machines compiled into rounded systems (base 10, one digit).
//!
//! A configuration `(ℓ_i, x, y)` is stored in the block of `ℓ_i` as
//! `x_i = 10^x`, `y_i = 10^y`, `a_i = 10^{x+y}` plus a token `one_i = 1`;
//! every other variable is zero. Each machine step takes exactly four system
//! steps. Increments and decrements pass the block through three staging
//! copies and scale on the fourth step. Zero tests use the filter gadgets:
//! `filter₊(u, v)` is `v` when `v ≥ u` and `0` otherwise, built from
//! `temp ← u + v`, `temp2 ← temp − u`, `w ← temp2 + 0.1·temp2'`, with the
//! rounding of `1.1·temp2` doing the comparison; `filter₋(u, v) = v − filter₊(u, v)`.
//! The halting block is staged out and dropped, so the whole vector is zero
//! four steps after the machine reaches a halting state.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::fpnum::{Exponent, FpFormat, FpNumber, TieRule};
use crate::lds::{content_lines, Lds};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinskyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: undeclared state `{name}`")]
    UndeclaredState { line: usize, name: String },
    #[error("machine has no states")]
    Empty,
    #[error("step {step}: decrement of the zero counter {counter} in state {state}")]
    DecOnZero { step: u64, state: String, counter: Counter },
    #[error("boundary {boundary}: expected {expected}, system encodes {found}")]
    DecoderMismatch {
        boundary: u64,
        expected: String,
        found: String,
    },
    #[error("step {t}: boundary value with mantissa outside {{0, 0.1}}")]
    MantissaDiscipline { t: u64 },
    #[error("halted at machine step {step} but the system is not zero at step {t}")]
    HaltNotZero { step: u64, t: u64 },
    #[error("system hit the zero vector at step {t} before the machine halted")]
    EarlyZero { t: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counter {
    X,
    Y,
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counter::X => "x",
            Counter::Y => "y",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Inc(Counter, usize),
    Dec(Counter, usize),
    /// Go to the first state when the counter is zero, else to the second.
    Zero(Counter, usize, usize),
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinskyMachine {
    names: Vec<String>,
    program: Vec<Instruction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: usize,
    pub x: u64,
    pub y: u64,
}

impl MinskyMachine {
    pub fn new(names: Vec<String>, program: Vec<Instruction>) -> Result<Self, MinskyError> {
        if names.is_empty() {
            return Err(MinskyError::Empty);
        }
        assert_eq!(names.len(), program.len());
        Ok(MinskyMachine { names, program })
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, state: usize) -> &str {
        &self.names[state]
    }

    pub fn instruction(&self, state: usize) -> &Instruction {
        &self.program[state]
    }

    pub fn initial(&self) -> Config {
        Config { state: 0, x: 0, y: 0 }
    }

    pub fn is_halted(&self, c: &Config) -> bool {
        self.program[c.state] == Instruction::Halt
    }

    /// One machine step; `None` in a halting state.
    pub fn step(&self, c: &Config, step: u64) -> Result<Option<Config>, MinskyError> {
        let get = |z: Counter| match z {
            Counter::X => c.x,
            Counter::Y => c.y,
        };
        let with = |z: Counter, v: u64, state: usize| match z {
            Counter::X => Config { state, x: v, y: c.y },
            Counter::Y => Config { state, x: c.x, y: v },
        };
        Ok(Some(match self.program[c.state] {
            Instruction::Halt => return Ok(None),
            Instruction::Inc(z, j) => with(z, get(z) + 1, j),
            Instruction::Dec(z, j) => {
                if get(z) == 0 {
                    return Err(MinskyError::DecOnZero {
                        step,
                        state: self.names[c.state].clone(),
                        counter: z,
                    });
                }
                with(z, get(z) - 1, j)
            }
            Instruction::Zero(z, j, k) => with(z, get(z), if get(z) == 0 { j } else { k }),
        }))
    }

    /// Runs until halt or `max_steps`; returns the number of steps taken to
    /// halt, if it does.
    pub fn run(&self, max_steps: u64) -> Result<Option<u64>, MinskyError> {
        let mut c = self.initial();
        for s in 0..=max_steps {
            match self.step(&c, s)? {
                None => return Ok(Some(s)),
                Some(next) => c = next,
            }
        }
        Ok(None)
    }

    pub fn format_config(&self, c: &Config) -> String {
        format!("({}, x={}, y={})", self.names[c.state], c.x, c.y)
    }

    pub fn parse(text: &str) -> Result<Self, MinskyError> {
        parse_machine(text)
    }
}

impl fmt::Display for MinskyMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.program.iter().enumerate() {
            write!(f, "{}: ", self.names[i])?;
            match ins {
                Instruction::Inc(z, j) => writeln!(f, "inc {z} -> {}", self.names[*j])?,
                Instruction::Dec(z, j) => writeln!(f, "dec {z} -> {}", self.names[*j])?,
                Instruction::Zero(z, j, k) => writeln!(f, "zero? {z} -> {} | {}", self.names[*j], self.names[*k])?,
                Instruction::Halt => writeln!(f, "halt")?,
            }
        }
        Ok(())
    }
}

fn parse_machine(text: &str) -> Result<MinskyMachine, MinskyError> {
    let err = |line: usize, message: &str| MinskyError::Parse {
        line,
        message: message.to_string(),
    };
    let mut names = Vec::new();
    let mut bodies = Vec::new();
    let mut index = HashMap::new();
    for (ln, line) in content_lines(text) {
        let (label, body) = line
            .split_once(':')
            .ok_or_else(|| err(ln, "expected `<label>: <instruction>`"))?;
        let label = label.trim().to_string();
        if label.is_empty() || label.contains(char::is_whitespace) {
            return Err(err(ln, "bad state label"));
        }
        if index.insert(label.clone(), names.len()).is_some() {
            return Err(err(ln, &format!("state `{label}` defined twice")));
        }
        names.push(label);
        bodies.push((ln, body.trim().to_string()));
    }
    let lookup = |ln: usize, name: &str| {
        index.get(name).copied().ok_or_else(|| MinskyError::UndeclaredState {
            line: ln,
            name: name.to_string(),
        })
    };
    let counter = |ln: usize, s: &str| match s {
        "x" => Ok(Counter::X),
        "y" => Ok(Counter::Y),
        _ => Err(err(ln, &format!("unknown counter `{s}`"))),
    };
    let mut program = Vec::new();
    for (ln, body) in bodies {
        let words: Vec<&str> = body.split_whitespace().collect();
        let ins = match words.as_slice() {
            ["halt"] => Instruction::Halt,
            ["inc", z, "->", j] => Instruction::Inc(counter(ln, z)?, lookup(ln, j)?),
            ["dec", z, "->", j] => Instruction::Dec(counter(ln, z)?, lookup(ln, j)?),
            ["zero?", z, "->", j, "|", k] => Instruction::Zero(counter(ln, z)?, lookup(ln, j)?, lookup(ln, k)?),
            _ => return Err(err(ln, &format!("cannot read instruction `{body}`"))),
        };
        program.push(ins);
    }
    MinskyMachine::new(names, program)
}

/// Variable indices of the block of one machine state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateBlock {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub one: usize,
}

#[derive(Debug, Clone)]
pub struct CompiledReduction {
    pub lds: Lds,
    pub blocks: Vec<StateBlock>,
    /// Name of every variable, e.g. `x_L1` or `L2.p1.T1`.
    pub names: Vec<String>,
    /// System steps per machine step.
    pub step_ratio: u64,
}

impl CompiledReduction {
    /// Reads `(ℓ_i, x, y)` off a vector at a step boundary; `None` unless the
    /// vector is exactly a valid encoding.
    pub fn decode(&self, v: &[FpNumber]) -> Option<Config> {
        let active: Vec<usize> = (0..self.blocks.len())
            .filter(|&i| {
                let b = &self.blocks[i];
                [b.x, b.y, b.a, b.one].iter().any(|&q| !v[q].is_zero())
            })
            .collect();
        let [state] = active.as_slice() else { return None };
        let b = self.blocks[*state];
        let power = |q: usize| -> Option<u64> {
            let x = &v[q];
            match x.exponent() {
                Exponent::Finite(e) if x.digits() == 1 && !x.is_negative() && e >= 1 => Some(e as u64 - 1),
                _ => None,
            }
        };
        let (x, y, a, one) = (power(b.x)?, power(b.y)?, power(b.a)?, power(b.one)?);
        if a != x + y || one != 0 {
            return None;
        }
        let primaries = [b.x, b.y, b.a, b.one];
        let clean = v
            .iter()
            .enumerate()
            .all(|(q, val)| primaries.contains(&q) || val.is_zero());
        clean.then_some(Config { state: *state, x, y })
    }

    /// The vector encoding `c`.
    pub fn encode(&self, c: &Config) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); self.lds.dim()];
        let b = self.blocks[c.state];
        let ten = |k: u64| BigRational::from_integer(BigInt::from(10).pow(k as u32));
        v[b.x] = ten(c.x);
        v[b.y] = ten(c.y);
        v[b.a] = ten(c.x + c.y);
        v[b.one] = BigRational::one();
        v
    }
}

struct Builder {
    names: Vec<String>,
    entries: Vec<(usize, usize, BigRational)>,
}

impl Builder {
    fn var(&mut self, name: String) -> usize {
        self.names.push(name);
        self.names.len() - 1
    }

    /// `target ← … + coeff·source` at every step.
    fn add(&mut self, target: usize, source: usize, coeff: BigRational) {
        self.entries.push((target, source, coeff));
    }

    fn copy(&mut self, target: usize, source: usize) {
        self.add(target, source, BigRational::one());
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Registers of one filter pair: after three steps `w3` holds `filter₊(u, v)`
/// and `v3` holds `v`.
struct FilterPair {
    w3: usize,
    v3: usize,
}

fn filter_pair(b: &mut Builder, prefix: &str, u: usize, u_coeff: i64, v: usize) -> FilterPair {
    let t1 = b.var(format!("{prefix}.T1"));
    let u1 = b.var(format!("{prefix}.U1"));
    let v1 = b.var(format!("{prefix}.V1"));
    let t2 = b.var(format!("{prefix}.T2"));
    let t2p = b.var(format!("{prefix}.T2'"));
    let v2 = b.var(format!("{prefix}.V2"));
    let w3 = b.var(format!("{prefix}.W3"));
    let v3 = b.var(format!("{prefix}.V3"));
    b.add(t1, u, q(u_coeff, 1));
    b.add(t1, v, q(1, 1));
    b.add(u1, u, q(u_coeff, 1));
    b.copy(v1, v);
    for t in [t2, t2p] {
        b.add(t, t1, q(1, 1));
        b.add(t, u1, q(-1, 1));
    }
    b.copy(v2, v1);
    b.copy(w3, t2);
    b.add(w3, t2p, q(1, 10));
    b.copy(v3, v2);
    FilterPair { w3, v3 }
}

/// `target ← filter₊` of the pair.
fn emit_plus(b: &mut Builder, target: usize, f: &FilterPair) {
    b.copy(target, f.w3);
}

/// `target ← filter₋ = v − filter₊` of the pair.
fn emit_minus(b: &mut Builder, target: usize, f: &FilterPair) {
    b.copy(target, f.v3);
    b.add(target, f.w3, q(-1, 1));
}

pub fn compile(machine: &MinskyMachine) -> CompiledReduction {
    let mut b = Builder {
        names: Vec::new(),
        entries: Vec::new(),
    };
    let blocks: Vec<StateBlock> = (0..machine.num_states())
        .map(|i| {
            let n = machine.name(i);
            StateBlock {
                x: b.var(format!("x_{n}")),
                y: b.var(format!("y_{n}")),
                a: b.var(format!("a_{n}")),
                one: b.var(format!("one_{n}")),
            }
        })
        .collect();

    for (i, ins) in machine.program.iter().enumerate() {
        let n = machine.name(i).to_string();
        let src = blocks[i];
        let staged = |b: &mut Builder, what: &str, from: usize| -> usize {
            let mut cur = from;
            for s in 1..=3 {
                let next = b.var(format!("{n}.{what}{s}"));
                b.copy(next, cur);
                cur = next;
            }
            cur
        };
        match *ins {
            Instruction::Inc(z, j) | Instruction::Dec(z, j) => {
                let scale = if matches!(ins, Instruction::Inc(..)) {
                    q(10, 1)
                } else {
                    q(1, 10)
                };
                let dst = blocks[j];
                let sx = staged(&mut b, "x", src.x);
                let sy = staged(&mut b, "y", src.y);
                let sa = staged(&mut b, "a", src.a);
                let so = staged(&mut b, "one", src.one);
                let (cx, cy) = match z {
                    Counter::X => (scale.clone(), q(1, 1)),
                    Counter::Y => (q(1, 1), scale.clone()),
                };
                b.add(dst.x, sx, cx);
                b.add(dst.y, sy, cy);
                b.add(dst.a, sa, scale);
                b.copy(dst.one, so);
            }
            Instruction::Zero(z, j, k) => {
                let (zj, zk) = (blocks[j], blocks[k]);
                // tested counter c, other counter o
                let (c, o, cj, ck, oj, ok) = match z {
                    Counter::X => (src.x, src.y, zj.x, zk.x, zj.y, zk.y),
                    Counter::Y => (src.y, src.x, zj.y, zk.y, zj.x, zk.x),
                };
                // c < 10 exactly when the counter is zero
                let p1 = filter_pair(&mut b, &format!("{n}.p1"), src.one, 10, c);
                // o ≥ a exactly when the counter is zero
                let p2 = filter_pair(&mut b, &format!("{n}.p2"), src.a, 1, o);
                // a ≥ 10·o exactly when the counter is positive
                let p3 = filter_pair(&mut b, &format!("{n}.p3"), o, 10, src.a);
                let so = staged(&mut b, "one", src.one);
                emit_minus(&mut b, cj, &p1);
                emit_plus(&mut b, ck, &p1);
                emit_plus(&mut b, oj, &p2);
                emit_minus(&mut b, ok, &p2);
                emit_minus(&mut b, zj.a, &p3);
                emit_plus(&mut b, zk.a, &p3);
                // the token follows the branch: one_j ← [c = 1], one_k ← one − [c = 1]
                emit_minus(&mut b, zj.one, &p1);
                b.copy(zk.one, so);
                b.add(zk.one, p1.v3, q(-1, 1));
                b.add(zk.one, p1.w3, q(1, 1));
            }
            Instruction::Halt => {
                staged(&mut b, "x", src.x);
                staged(&mut b, "y", src.y);
                staged(&mut b, "a", src.a);
                staged(&mut b, "one", src.one);
            }
        }
    }

    let dim = b.names.len();
    let mut matrix = vec![vec![BigRational::zero(); dim]; dim];
    for (t, s, c) in b.entries {
        matrix[t][s] += c;
    }
    let mut init = vec![BigRational::zero(); dim];
    let start = blocks[0];
    for v in [start.x, start.y, start.a, start.one] {
        init[v] = BigRational::one();
    }
    let fmt = FpFormat::decimal(1).expect("valid format");
    CompiledReduction {
        lds: Lds::new(matrix, init, fmt).expect("square by construction"),
        blocks,
        names: b.names,
        step_ratio: 4,
    }
}

/// Outcome of running machine and system side by side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosimReport {
    /// Boundaries at which the decoded system matched the machine.
    pub boundaries_checked: u64,
    /// Machine steps taken before reaching a halting state.
    pub halted_after: Option<u64>,
    /// System step at which the zero vector appeared.
    pub zero_at: Option<u64>,
    /// Counter values at each boundary.
    pub trace: Vec<Config>,
}

/// Runs machine and compiled system in lockstep (one machine step per four
/// system steps) for at most `max_steps` machine steps, checking the encoding
/// at every boundary, the mantissa discipline, and that the zero vector
/// appears exactly four steps after the machine halts.
pub fn cosimulate(machine: &MinskyMachine, max_steps: u64) -> Result<CosimReport, MinskyError> {
    let compiled = compile(machine);
    let lds = &compiled.lds;
    let mut v = lds.initial_point();
    let mut t = 0u64;
    let mut config = machine.initial();
    let mut trace = Vec::new();
    for s in 0..=max_steps {
        if v.iter().any(|x| x.digits() > 1) {
            return Err(MinskyError::MantissaDiscipline { t });
        }
        let decoded = compiled.decode(&v);
        if decoded != Some(config) {
            return Err(MinskyError::DecoderMismatch {
                boundary: t,
                expected: machine.format_config(&config),
                found: decoded.map_or("nothing".to_string(), |c| machine.format_config(&c)),
            });
        }
        trace.push(config);
        let next = machine.step(&config, s)?;
        for _ in 0..compiled.step_ratio {
            v = lds.step_unchecked(&v);
            t += 1;
            let zero = v.iter().all(FpNumber::is_zero);
            let last = t.is_multiple_of(compiled.step_ratio);
            match (&next, zero, last) {
                (Some(_), true, _) | (None, true, false) => return Err(MinskyError::EarlyZero { t }),
                (None, false, true) => return Err(MinskyError::HaltNotZero { step: s, t }),
                _ => {}
            }
        }
        match next {
            None => {
                return Ok(CosimReport {
                    boundaries_checked: s + 1,
                    halted_after: Some(s),
                    zero_at: Some(t),
                    trace,
                })
            }
            Some(c) => config = c,
        }
    }
    Ok(CosimReport {
        boundaries_checked: max_steps + 1,
        halted_after: None,
        zero_at: None,
        trace,
    })
}

/// The two filter outputs for inputs `u`, `v`, computed by running the
/// gadget registers as a small system under `tie`: `(filter₊, filter₋)`.
pub fn filter_gadgets(u: &BigRational, v: &BigRational, tie: TieRule) -> (FpNumber, FpNumber) {
    let mut b = Builder {
        names: Vec::new(),
        entries: Vec::new(),
    };
    let iu = b.var("u".into());
    let iv = b.var("v".into());
    b.copy(iu, iu);
    b.copy(iv, iv);
    let pair = filter_pair(&mut b, "f", iu, 1, iv);
    let minus = b.var("w-".into());
    emit_minus(&mut b, minus, &pair);
    let dim = b.names.len();
    let mut matrix = vec![vec![BigRational::zero(); dim]; dim];
    for (t, s, c) in b.entries {
        matrix[t][s] += c;
    }
    let mut init = vec![BigRational::zero(); dim];
    init[iu] = u.clone();
    init[iv] = v.clone();
    let fmt = FpFormat::with_tie(10, 1, tie).expect("valid format");
    let lds = Lds::new(matrix, init, fmt).expect("square");
    let pts = lds.orbit_prefix(4);
    (pts[3].v[pair.w3].clone(), pts[4].v[minus].clone())
}

/// `v` if `v ≥ u`, else `0`, as computed by the three-step gadget.
pub fn filter_plus(u: &BigRational, v: &BigRational, tie: TieRule) -> FpNumber {
    filter_gadgets(u, v, tie).0
}

/// `v` if `v < u`, else `0`, as computed by the four-step gadget.
pub fn filter_minus(u: &BigRational, v: &BigRational, tie: TieRule) -> FpNumber {
    filter_gadgets(u, v, tie).1
}
