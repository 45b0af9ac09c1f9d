mod common;

use common::*;
use fplds::fpnum::{self, Exponent, FpFormat, FpNumber, TieRule};
use fplds::Lds;
use num_rational::BigRational;
use proptest::prelude::*;

fn tie() -> impl Strategy<Value = TieRule> {
    (0..4usize).prop_map(|i| TieRule::ALL[i])
}

fn rational() -> impl Strategy<Value = BigRational> {
    (-1_000_000_000i64..=1_000_000_000, 1i64..=1_000_000, -15i64..=15)
        .prop_map(|(n, d, k)| BigRational::new(n.into(), d.into()) * pow(10, k))
}

fn fp(fmt: FpFormat) -> impl Strategy<Value = FpNumber> {
    let b = fmt.base() as u64;
    let lo = b.pow(fmt.precision() - 1);
    prop_oneof![
        1 => Just(fmt.zero()),
        6 => (any::<bool>(), lo..lo * b, prop_oneof![-4i64..4, -400i64..400])
            .prop_map(move |(neg, d, e)| FpNumber::from_parts(&fmt, neg, d, e).unwrap()),
    ]
}

proptest! {
    #[test]
    fn round_agrees_with_oracle(x in rational(), base in prop::sample::select(vec![2u32, 3, 10, 16]), p in 1u32..=5, t in tie()) {
        let fmt = FpFormat::with_tie(base, p, t).unwrap();
        let r = fpnum::round(&x, &fmt);
        let got = match r.exponent() {
            Exponent::NegInf => None,
            Exponent::Finite(e) => Some((r.is_negative(), r.digits(), e)),
        };
        prop_assert_eq!(got, oracle_round(&x, base, p, t));
    }

    #[test]
    fn rounding_is_idempotent_and_monotone(x in rational(), y in rational(), p in 1u32..=4, t in tie()) {
        let fmt = FpFormat::with_tie(10, p, t).unwrap();
        let (rx, ry) = (fpnum::round(&x, &fmt), fpnum::round(&y, &fmt));
        prop_assert_eq!(&fpnum::round(&rx.to_rational(), &fmt), &rx);
        if x <= y {
            prop_assert!(rx.to_rational() <= ry.to_rational());
        }
    }

    #[test]
    fn text_form_round_trips(x in rational(), p in 1u32..=4) {
        let fmt = FpFormat::new(10, p).unwrap();
        let r = fpnum::round(&x, &fmt);
        prop_assert_eq!(FpNumber::parse(&r.to_string(), &fmt, true).unwrap(), r);
    }

    /// A step rounds the exact product once, including rows that mix signs,
    /// fractions and values hundreds of digits apart.
    #[test]
    fn step_rounds_the_exact_product(
        (fmt, points) in (1u32..=3, tie()).prop_flat_map(|(p, t)| {
            let fmt = FpFormat::with_tie(10, p, t).unwrap();
            (Just(fmt), prop::collection::vec(prop::collection::vec(fp(fmt), 3), 8))
        }),
        entries in prop::collection::vec((-30i64..=30, 1i64..=7), 9),
    ) {
        let m: Vec<Vec<BigRational>> = entries
            .chunks(3)
            .map(|row| row.iter().map(|&(n, d)| BigRational::new(n.into(), d.into())).collect())
            .collect();
        let lds = Lds::new(m.clone(), vec![int(1); 3], fmt).unwrap();
        for v in &points {
            let got = lds.step(v).unwrap();
            for (i, row) in m.iter().enumerate() {
                let exact = row
                    .iter()
                    .zip(v)
                    .fold(int(0), |acc, (c, x)| acc + c * x.to_rational());
                prop_assert_eq!(&got[i], &fpnum::round(&exact, &fmt), "row {} at {:?}", i, v);
            }
        }
    }
}
