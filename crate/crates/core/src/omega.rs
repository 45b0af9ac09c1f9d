//! Characteristic words of orbits as lassos `u·v^ω`, Büchi automata over
//! sets of target indices, and the model-checking verdict.

use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::graph;
use crate::lds::{content_lines, Lds};
use crate::periodicity::{self, DetectOptions, PeriodicityError, PseudoPeriodCertificate};
use crate::predicates::{self, CertifiedOrbit, PredicateError, SemialgebraicSet};
use crate::semilinear::SemiLinearSet;
use crate::structure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OmegaError {
    #[error("letter {letter} uses targets outside the alphabet of size {size}")]
    LetterOutsideAlphabet { letter: String, size: usize },
    #[error("automaton alphabet has {automaton} targets but {targets} were given")]
    AlphabetMismatch { automaton: usize, targets: usize },
    #[error("at most 64 targets are supported")]
    TooManyTargets,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Periodicity(#[from] PeriodicityError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

/// A set of target indices; bit `j − 1` stands for target `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Letter(pub u64);

impl Letter {
    pub fn contains(self, j: usize) -> bool {
        (1..=64).contains(&j) && self.0 >> (j - 1) & 1 == 1
    }

    pub fn from_targets(targets: &[usize]) -> Letter {
        Letter(targets.iter().fold(0, |acc, &j| acc | 1 << (j - 1)))
    }

    pub fn targets(self) -> Vec<usize> {
        (1..=64).filter(|&j| self.contains(j)).collect()
    }

    /// Largest target index used, 0 for `{}`.
    pub fn width(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    fn parse(s: &str) -> Option<Letter> {
        let inner = s.trim().strip_prefix('{')?.strip_suffix('}')?;
        let mut targets = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let j: usize = part.parse().ok()?;
            if !(1..=64).contains(&j) {
                return None;
            }
            targets.push(j);
        }
        Some(Letter::from_targets(&targets))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.targets().iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// The infinite word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LassoWord {
    pub prefix: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Letter>, cycle: Vec<Letter>) -> Self {
        assert!(!cycle.is_empty(), "a lasso needs a nonempty cycle");
        LassoWord { prefix, cycle }
    }

    pub fn letter_at(&self, t: u64) -> Letter {
        let u = self.prefix.len() as u64;
        if t < u {
            self.prefix[t as usize]
        } else {
            self.cycle[((t - u) % self.cycle.len() as u64) as usize]
        }
    }

    /// Shortest equivalent lasso: primitive cycle, prefix rolled into it.
    pub fn normalized(&self) -> LassoWord {
        let n = self.cycle.len();
        let least = (1..=n)
            .find(|&d| n.is_multiple_of(d) && (0..n).all(|i| self.cycle[i] == self.cycle[i % d]))
            .unwrap_or(n);
        let mut prefix = self.prefix.clone();
        let mut cycle = self.cycle[..least].to_vec();
        while let Some(&last) = prefix.last() {
            if last != *cycle.last().expect("nonempty") {
                break;
            }
            prefix.pop();
            cycle.rotate_right(1);
        }
        LassoWord { prefix, cycle }
    }

    /// The word without its first letter.
    pub fn drop_first(&self) -> LassoWord {
        if self.prefix.is_empty() {
            let mut cycle = self.cycle.clone();
            cycle.rotate_left(1);
            LassoWord::new(Vec::new(), cycle)
        } else {
            LassoWord::new(self.prefix[1..].to_vec(), self.cycle.clone())
        }
    }

    /// Largest target index used by any letter.
    pub fn width(&self) -> usize {
        self.prefix
            .iter()
            .chain(&self.cycle)
            .map(|l| l.width())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for LassoWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[Letter]| xs.iter().map(Letter::to_string).collect::<Vec<_>>().join(",");
        write!(f, "u=[{}] v=[{}]", list(&self.prefix), list(&self.cycle))
    }
}

/// The lasso whose letter at `t` is `{j : t ∈ Z_j}`.
pub fn lasso_from_hitting_sets(sets: &[SemiLinearSet]) -> Result<LassoWord, OmegaError> {
    if sets.len() > 64 {
        return Err(OmegaError::TooManyTargets);
    }
    let threshold = sets.iter().map(SemiLinearSet::threshold).max().unwrap_or(0);
    let period = sets.iter().fold(1u64, |a, s| a.lcm(&s.period()));
    let letter = |t: u64| {
        Letter(
            sets.iter()
                .enumerate()
                .filter(|(_, s)| s.member(t))
                .fold(0, |acc, (j, _)| acc | 1 << j),
        )
    };
    let prefix = (0..threshold).map(letter).collect();
    let cycle = (threshold..threshold + period).map(letter).collect();
    Ok(LassoWord::new(prefix, cycle).normalized())
}

/// `C_S = {t : letter(t) = S}` as a boolean combination of the hitting sets.
pub fn letter_class(sets: &[SemiLinearSet], letter: Letter) -> SemiLinearSet {
    sets.iter().enumerate().fold(SemiLinearSet::naturals(), |acc, (j, z)| {
        if letter.contains(j + 1) {
            acc.intersect(z)
        } else {
            acc.intersect(&z.complement())
        }
    })
}

/// Characteristic word of a certified orbit; position `t` is `x⁽ᵗ⁾`.
pub fn characteristic_word(targets: &[SemialgebraicSet], orbit: &CertifiedOrbit) -> Result<LassoWord, OmegaError> {
    let sets = targets
        .iter()
        .map(|y| predicates::hitting_set(y, orbit))
        .collect::<Result<Vec<_>, _>>()?;
    lasso_from_hitting_sets(&sets)
}

/// Which letters a transition accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LetterGuard {
    Exactly(Letter),
    Any,
}

impl LetterGuard {
    pub fn admits(self, l: Letter) -> bool {
        match self {
            LetterGuard::Any => true,
            LetterGuard::Exactly(x) => x == l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub guard: LetterGuard,
    pub to: usize,
}

/// Nondeterministic Büchi automaton over letters `2^{1..k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    states: Vec<String>,
    alphabet: Option<usize>,
    init: Vec<usize>,
    accept: Vec<bool>,
    transitions: Vec<Transition>,
}

impl BuchiAutomaton {
    pub fn new(
        states: Vec<String>,
        alphabet: Option<usize>,
        init: Vec<usize>,
        accepting: &[usize],
        transitions: Vec<Transition>,
    ) -> Self {
        let mut accept = vec![false; states.len()];
        for &a in accepting {
            accept[a] = true;
        }
        BuchiAutomaton {
            states,
            alphabet,
            init,
            accept,
            transitions,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Declared number of targets `k`; letters are subsets of `{1..k}`.
    pub fn alphabet(&self) -> Option<usize> {
        self.alphabet
    }

    /// Largest target index named by a transition guard.
    pub fn letter_width(&self) -> usize {
        self.transitions
            .iter()
            .filter_map(|tr| match tr.guard {
                LetterGuard::Exactly(l) => Some(l.width()),
                LetterGuard::Any => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accept[q]
    }

    pub fn initial(&self) -> &[usize] {
        &self.init
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Successors of `q` on `l`.
    pub fn step(&self, q: usize, l: Letter) -> impl Iterator<Item = usize> + '_ {
        self.transitions
            .iter()
            .filter(move |tr| tr.from == q && tr.guard.admits(l))
            .map(|tr| tr.to)
    }

    pub fn parse(text: &str) -> Result<Self, OmegaError> {
        parse_automaton(text)
    }
}

impl fmt::Display for BuchiAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names =
            |ids: &mut dyn Iterator<Item = usize>| ids.map(|q| self.states[q].clone()).collect::<Vec<_>>().join(" ");
        writeln!(f, "states: {}", self.states.join(" "))?;
        if let Some(k) = self.alphabet {
            writeln!(f, "alphabet: {k}")?;
        }
        writeln!(f, "init: {}", names(&mut self.init.iter().copied()))?;
        writeln!(
            f,
            "accept: {}",
            names(&mut (0..self.states.len()).filter(|&q| self.accept[q]))
        )?;
        for tr in &self.transitions {
            let guard = match tr.guard {
                LetterGuard::Any => "*".to_string(),
                LetterGuard::Exactly(l) => l.to_string(),
            };
            writeln!(
                f,
                "trans: {} --{}--> {}",
                self.states[tr.from], guard, self.states[tr.to]
            )?;
        }
        Ok(())
    }
}

fn parse_automaton(text: &str) -> Result<BuchiAutomaton, OmegaError> {
    let err = |line: usize, message: String| OmegaError::Parse { line, message };
    let mut states: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut alphabet: Option<usize> = None;
    let mut init_names = Vec::new();
    let mut accept_names = Vec::new();
    let mut raw_trans = Vec::new();
    for (ln, line) in content_lines(text) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(ln, "expected `<key>: …`".into()))?;
        let words = || rest.split_whitespace().map(str::to_string);
        match key.trim() {
            "states" => {
                for w in words() {
                    if index.insert(w.clone(), states.len()).is_some() {
                        return Err(err(ln, format!("duplicate state `{w}`")));
                    }
                    states.push(w);
                }
            }
            "alphabet" => {
                alphabet = Some(
                    rest.trim()
                        .parse()
                        .map_err(|_| err(ln, format!("bad alphabet size `{}`", rest.trim())))?,
                )
            }
            "init" => init_names.extend(words().map(|w| (ln, w))),
            "accept" => accept_names.extend(words().map(|w| (ln, w))),
            "trans" => {
                let (from, tail) = rest
                    .split_once("--")
                    .ok_or_else(|| err(ln, "expected `q --{…}--> q'`".into()))?;
                let (guard, to) = tail
                    .split_once("-->")
                    .ok_or_else(|| err(ln, "expected `q --{…}--> q'`".into()))?;
                let guard = match guard.trim() {
                    "*" => LetterGuard::Any,
                    g => LetterGuard::Exactly(Letter::parse(g).ok_or_else(|| err(ln, format!("bad letter `{g}`")))?),
                };
                raw_trans.push((ln, from.trim().to_string(), guard, to.trim().to_string()));
            }
            other => return Err(err(ln, format!("unknown key `{other}`"))),
        }
    }
    let lookup = |ln: usize, name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| err(ln, format!("undeclared state `{name}`")))
    };
    let init = init_names
        .iter()
        .map(|(ln, w)| lookup(*ln, w))
        .collect::<Result<Vec<_>, _>>()?;
    let accepting = accept_names
        .iter()
        .map(|(ln, w)| lookup(*ln, w))
        .collect::<Result<Vec<_>, _>>()?;
    let mut transitions = Vec::new();
    for (ln, from, guard, to) in raw_trans {
        if let LetterGuard::Exactly(l) = guard {
            if let Some(k) = alphabet {
                if l.width() > k {
                    return Err(err(ln, format!("letter {l} exceeds alphabet size {k}")));
                }
            }
        }
        transitions.push(Transition {
            from: lookup(ln, &from)?,
            guard,
            to: lookup(ln, &to)?,
        });
    }
    if states.is_empty() {
        return Err(err(1, "no states declared".into()));
    }
    Ok(BuchiAutomaton::new(states, alphabet, init, &accepting, transitions))
}

/// Whether `w ∈ L(B)`: some reachable node `(state, position)` of the product
/// of `B` with the lasso positions lies on a cycle and is accepting.
pub fn buchi_accepts_lasso(b: &BuchiAutomaton, w: &LassoWord) -> Result<bool, OmegaError> {
    if let Some(k) = b.alphabet() {
        if let Some(bad) = w.prefix.iter().chain(&w.cycle).find(|l| l.width() > k) {
            return Err(OmegaError::LetterOutsideAlphabet {
                letter: bad.to_string(),
                size: k,
            });
        }
    }
    let u = w.prefix.len();
    let n = u + w.cycle.len();
    let s = b.num_states();
    let node = |q: usize, pos: usize| q * n + pos;
    let next_pos = |pos: usize| if pos + 1 < n { pos + 1 } else { u };
    let mut succ = vec![Vec::new(); s * n];
    for q in 0..s {
        for pos in 0..n {
            let l = w.letter_at(pos as u64);
            for q2 in b.step(q, l) {
                succ[node(q, pos)].push(node(q2, next_pos(pos)));
            }
        }
    }
    // reachable from the initial nodes
    let mut seen = vec![false; s * n];
    let mut stack: Vec<usize> = b.initial().iter().map(|&q| node(q, 0)).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &x in &succ[v] {
            if !seen[x] {
                seen[x] = true;
                stack.push(x);
            }
        }
    }
    let comps = graph::strongly_connected_components(&succ);
    Ok(comps.iter().any(|comp| {
        let cyclic = comp.len() > 1 || succ[comp[0]].contains(&comp[0]);
        cyclic && comp.iter().any(|&v| seen[v] && b.is_accepting(v / n))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "SATISFIED",
            Verdict::Violated => "VIOLATED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckOptions {
    pub detect: DetectOptions,
    /// Start the word at `x⁽¹⁾` instead of `x⁽⁰⁾`.
    pub skip_initial: bool,
}

/// Verdict together with everything needed to re-check it.
#[derive(Debug, Clone)]
pub struct ModelCheckReport {
    pub verdict: Verdict,
    pub lasso: LassoWord,
    /// Hitting sets indexed by orbit step, `t ≥ 0`.
    pub hitting_sets: Vec<SemiLinearSet>,
    pub certificate: PseudoPeriodCertificate,
    /// Blow-up factor of the system the certificate refers to; 1 when it is
    /// in original coordinates.
    pub phase_factor: u64,
}

/// Hitting sets of `targets` on a non-negative system. Falls back to the
/// blown-up system when the orbit is only pseudo-periodic phase by phase.
pub fn hitting_sets(
    lds: &Lds,
    targets: &[SemialgebraicSet],
    opts: DetectOptions,
) -> Result<(Vec<SemiLinearSet>, PseudoPeriodCertificate, u64), OmegaError> {
    if !lds.is_non_negative() {
        return Err(PeriodicityError::NegativeEntries.into());
    }
    for y in targets {
        if y.num_vars() > lds.dim() {
            return Err(PredicateError::VariableOutOfRange {
                var: y.num_vars(),
                dim: lds.dim(),
            }
            .into());
        }
    }
    match periodicity::assemble_certificate(lds, opts) {
        Ok(cert) => {
            let orbit = CertifiedOrbit::new(lds.clone(), cert.clone())?;
            let sets = targets
                .iter()
                .map(|y| predicates::hitting_set(y, &orbit))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((sets, cert, 1))
        }
        Err(PeriodicityError::PhaseGrowthMismatch { .. }) => {
            let pc = periodicity::certify_phased(lds, opts)?;
            let p = pc.phased.factor();
            let orbit = CertifiedOrbit::new(pc.phased.lds().clone(), pc.certificate.clone())?;
            let mut sets = Vec::with_capacity(targets.len());
            for y in targets {
                let mut z = SemiLinearSet::empty();
                for i in 0..p {
                    let lifted = structure::lift_target(y, i, lds.dim(), p);
                    z = z.union(&predicates::hitting_set(&lifted, &orbit)?);
                }
                sets.push(z);
            }
            Ok((sets, pc.certificate, p))
        }
        Err(e) => Err(e.into()),
    }
}

/// Decides whether the characteristic word of the orbit is accepted by `b`.
pub fn model_check(
    lds: &Lds,
    targets: &[SemialgebraicSet],
    b: &BuchiAutomaton,
    opts: CheckOptions,
) -> Result<ModelCheckReport, OmegaError> {
    let k = b.alphabet().unwrap_or(targets.len());
    if k != targets.len() || b.letter_width() > targets.len() {
        return Err(OmegaError::AlphabetMismatch {
            automaton: k.max(b.letter_width()),
            targets: targets.len(),
        });
    }
    let (sets, certificate, phase_factor) = hitting_sets(lds, targets, opts.detect)?;
    let mut lasso = lasso_from_hitting_sets(&sets)?;
    if opts.skip_initial {
        lasso = lasso.drop_first().normalized();
    }
    let verdict = if buchi_accepts_lasso(b, &lasso)? {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(ModelCheckReport {
        verdict,
        lasso,
        hitting_sets: sets,
        certificate,
        phase_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpnum::FpFormat;

    fn l(ts: &[usize]) -> Letter {
        Letter::from_targets(ts)
    }

    const ALWAYS: &str = "states: q\ninit: q\naccept: q\ntrans: q --*--> q\n";
    const EVENTUALLY_ALWAYS_1: &str = "states: a b\nalphabet: 1\ninit: a\naccept: b\n\
        trans: a --*--> a\ntrans: a --{1}--> b\ntrans: b --{1}--> b\n";
    const ALWAYS_EMPTY: &str = "states: q\nalphabet: 1\ninit: q\naccept: q\ntrans: q --{}--> q\n";
    const INF_OFTEN_1: &str = "states: a b\nalphabet: 1\ninit: a\naccept: b\n\
        trans: a --*--> a\ntrans: a --{1}--> b\ntrans: b --*--> a\n";

    #[test]
    fn letters_render_and_parse() {
        assert_eq!(l(&[1, 3]).to_string(), "{1,3}");
        assert_eq!(Letter::parse("{ 3, 1 }"), Some(l(&[1, 3])));
        assert_eq!(Letter::parse("{}"), Some(Letter(0)));
        assert_eq!(l(&[2, 5]).width(), 5);
    }

    #[test]
    fn lasso_normalization() {
        let w = LassoWord::new(vec![l(&[]), l(&[1]), l(&[])], vec![l(&[1]), l(&[]), l(&[1]), l(&[])]);
        let n = w.normalized();
        assert_eq!(n, LassoWord::new(vec![], vec![l(&[]), l(&[1])]));
        for t in 0..40 {
            assert_eq!(w.letter_at(t), n.letter_at(t));
        }
        let d = w.drop_first();
        for t in 0..40 {
            assert_eq!(d.letter_at(t), w.letter_at(t + 1));
        }
    }

    #[test]
    fn acceptance_basics() {
        let everything = BuchiAutomaton::parse(ALWAYS).unwrap();
        let w = LassoWord::new(vec![], vec![l(&[1])]);
        assert!(buchi_accepts_lasso(&everything, &w).unwrap());
        let w2 = LassoWord::new(vec![], vec![l(&[2])]);
        let narrow = BuchiAutomaton::parse(&format!("alphabet: 1\n{ALWAYS}")).unwrap();
        assert!(matches!(
            buchi_accepts_lasso(&narrow, &w2),
            Err(OmegaError::LetterOutsideAlphabet { .. })
        ));

        let none = BuchiAutomaton::parse("states: q\nalphabet: 1\ninit: q\naccept:\ntrans: q --*--> q\n").unwrap();
        assert!(!buchi_accepts_lasso(&none, &w).unwrap());

        let inf = BuchiAutomaton::parse(INF_OFTEN_1).unwrap();
        let w = LassoWord::new(vec![l(&[])], vec![l(&[1]), l(&[])]);
        assert!(buchi_accepts_lasso(&inf, &w).unwrap());
        let w = LassoWord::new(vec![l(&[1])], vec![l(&[])]);
        assert!(!buchi_accepts_lasso(&inf, &w).unwrap());
    }

    #[test]
    fn automaton_text_round_trips() {
        let b = BuchiAutomaton::parse(EVENTUALLY_ALWAYS_1).unwrap();
        assert_eq!(BuchiAutomaton::parse(&b.to_string()).unwrap(), b);
        assert!(matches!(
            BuchiAutomaton::parse("states: a\ninit: z\n"),
            Err(OmegaError::Parse { line: 2, .. })
        ));
    }

    fn times_ten() -> Lds {
        Lds::from_integers(&[vec![10]], &[1], FpFormat::decimal(1).unwrap()).unwrap()
    }

    #[test]
    fn word_of_times_ten() {
        let lds = times_ten();
        let cert = periodicity::assemble_certificate(&lds, DetectOptions::default()).unwrap();
        let orbit = CertifiedOrbit::new(lds, cert).unwrap();
        let y = SemialgebraicSet::parse("x1 >= 5").unwrap();
        let w = characteristic_word(std::slice::from_ref(&y), &orbit).unwrap();
        assert_eq!(w, LassoWord::new(vec![l(&[])], vec![l(&[1])]));
        let w = characteristic_word(&[SemialgebraicSet::True], &orbit).unwrap();
        assert_eq!(w, LassoWord::new(vec![], vec![l(&[1])]));
        let w = characteristic_word(&[y.clone(), y.not()], &orbit).unwrap();
        for t in 0..20 {
            let letter = w.letter_at(t);
            assert!(letter == l(&[1]) || letter == l(&[2]));
        }
    }

    #[test]
    fn model_check_examples() {
        let lds = times_ten();
        let ys = vec![SemialgebraicSet::parse("x1 >= 5").unwrap()];
        let check = |text: &str| {
            model_check(
                &lds,
                &ys,
                &BuchiAutomaton::parse(text).unwrap(),
                CheckOptions::default(),
            )
            .unwrap()
            .verdict
        };
        assert_eq!(check(ALWAYS), Verdict::Satisfied);
        assert_eq!(check(EVENTUALLY_ALWAYS_1), Verdict::Satisfied);
        assert_eq!(check(ALWAYS_EMPTY), Verdict::Violated);
    }

    #[test]
    fn letter_classes_partition() {
        let a = SemiLinearSet::linear(1, 2).unwrap();
        let b = SemiLinearSet::from_parts(&[0], 3, &[3]).unwrap();
        let sets = [a.clone(), b.clone()];
        for t in 0..30 {
            let hits: Vec<Letter> = (0..4u64)
                .map(Letter)
                .filter(|&s| letter_class(&sets, s).member(t))
                .collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(hits[0].contains(1), a.member(t));
            assert_eq!(hits[0].contains(2), b.member(t));
        }
    }
}
