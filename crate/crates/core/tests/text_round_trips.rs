mod common;

use common::*;
use fplds::minsky::{Counter, Instruction};
use fplds::omega::{LetterGuard, Transition};
use fplds::predicates::{parse_targets, render_targets, Relation};
use fplds::{
    assemble_certificate, BuchiAutomaton, DetectOptions, FpFormat, FpNumber, Lds, Letter, MinskyMachine,
    PseudoPeriodCertificate, SemialgebraicSet, Target, TieRule,
};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;

fn system() -> impl Strategy<Value = Lds> {
    (
        1usize..=4,
        1u32..=3,
        0usize..4,
        prop::collection::vec((-40i64..=40, 1i64..=9), 16),
    )
        .prop_map(|(d, p, tie, cells)| {
            let fmt = FpFormat::with_tie(10, p, TieRule::ALL[tie]).unwrap();
            let q = |&(n, den): &(i64, i64)| BigRational::new(n.into(), den.into());
            let m = (0..d)
                .map(|i| cells[i * d..(i + 1) * d].iter().map(q).collect())
                .collect();
            let x = cells[..d].iter().map(q).collect();
            Lds::new(m, x, fmt).unwrap()
        })
}

fn machine() -> impl Strategy<Value = MinskyMachine> {
    (1usize..6).prop_flat_map(|n| {
        let counter = prop_oneof![Just(Counter::X), Just(Counter::Y)];
        let instr = prop_oneof![
            (counter.clone(), 0..n).prop_map(|(c, j)| Instruction::Inc(c, j)),
            (counter.clone(), 0..n).prop_map(|(c, j)| Instruction::Dec(c, j)),
            (counter, 0..n, 0..n).prop_map(|(c, j, k)| Instruction::Zero(c, j, k)),
            Just(Instruction::Halt),
        ];
        prop::collection::vec(instr, n).prop_map(move |program| {
            let names = (1..=n).map(|i| format!("L{i}")).collect();
            MinskyMachine::new(names, program).unwrap()
        })
    })
}

fn automaton() -> impl Strategy<Value = BuchiAutomaton> {
    (1usize..5, 1usize..4).prop_flat_map(|(n, k)| {
        let guard = prop_oneof![
            1 => Just(LetterGuard::Any),
            3 => (0u64..1 << k).prop_map(|l| LetterGuard::Exactly(Letter(l))),
        ];
        (
            prop::collection::vec((0..n, guard, 0..n), 0..8),
            prop::collection::vec(0..n, 1..=n),
            prop::collection::vec(0..n, 0..=n),
            any::<bool>(),
        )
            .prop_map(move |(ts, mut init, mut accept, explicit)| {
                init.sort();
                init.dedup();
                accept.sort();
                accept.dedup();
                let states = (0..n).map(|i| format!("q{i}")).collect();
                let transitions = ts
                    .into_iter()
                    .map(|(from, guard, to)| Transition { from, guard, to })
                    .collect();
                BuchiAutomaton::new(states, explicit.then_some(k), init, &accept, transitions)
            })
    })
}

/// Random formula over `dim` variables built from random polynomial atoms.
fn formula(r: &mut rand_chacha::ChaCha8Rng, dim: usize, depth: u32) -> SemialgebraicSet {
    let atom = |r: &mut rand_chacha::ChaCha8Rng| {
        let rel = [Relation::Ge, Relation::Gt, Relation::Eq][r.gen_range(0..3)];
        SemialgebraicSet::atom(RawPoly::random(r, dim, 3).to_polynomial(), rel)
    };
    if depth == 0 {
        return atom(r);
    }
    match r.gen_range(0..4) {
        0 => atom(r),
        1 => formula(r, dim, depth - 1).not(),
        2 => formula(r, dim, depth - 1).and(formula(r, dim, depth - 1)),
        _ => formula(r, dim, depth - 1).or(formula(r, dim, depth - 1)),
    }
}

proptest! {
    #[test]
    fn systems(lds in system()) {
        prop_assert_eq!(Lds::parse(&lds.to_string()).unwrap(), lds);
    }

    #[test]
    fn machines(m in machine()) {
        prop_assert_eq!(MinskyMachine::parse(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn automata(a in automaton()) {
        prop_assert_eq!(BuchiAutomaton::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn targets(seed in any::<u64>(), dim in 1usize..4, count in 1usize..4) {
        let mut r = rng(seed);
        let targets: Vec<Target> = (0..count)
            .map(|i| Target { name: format!("y{i}"), set: formula(&mut r, dim, 2) })
            .collect();
        let text = render_targets(&targets);
        let parsed = parse_targets(&text).unwrap();
        prop_assert_eq!(render_targets(&parsed), text);
        // same membership on random points
        let fmt = FpFormat::new(10, 2).unwrap();
        for _ in 0..20 {
            let v: Vec<FpNumber> = (0..dim)
                .map(|_| fmt.round(&BigRational::from_integer(r.gen_range(-30i64..=30).into())))
                .collect();
            for (a, b) in targets.iter().zip(&parsed) {
                prop_assert_eq!(a.set.contains(&v), b.set.contains(&v));
            }
        }
    }
}

#[test]
fn certificates() {
    let mut r = rng(17);
    for _ in 0..40 {
        let lds = random_system(&mut r, 5, 20, &[1, 2, 3]);
        let cert = assemble_certificate(&lds, DetectOptions::default()).unwrap();
        let back = PseudoPeriodCertificate::parse(&cert.to_string(), lds.format()).unwrap();
        assert_eq!(back, cert);
    }
}
