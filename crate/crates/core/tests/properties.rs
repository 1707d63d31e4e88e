use mhsc::arith::{crt_combine, rational_residue, Modulus, Rational, Residue};
use mhsc::bernoulli::power_sum_formula;
use mhsc::mhs::{mhs, stuffle_check, Index};
use mhsc::sums::{r_nm_fast, r_nm_naive, t_n_fast, t_n_naive};
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

const PRIMES: [u64; 6] = [3, 5, 7, 11, 13, 17];

fn index(max_part: u32, max_depth: usize) -> impl Strategy<Value = Index> {
    prop::collection::vec(1..=max_part, 1..=max_depth).prop_map(|v| Index::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residue_map_is_a_ring_homomorphism(
        a in -500i64..500, b in 1i64..500, c in -500i64..500, d in 1i64..500,
        pi in 1usize..6, e in 1u32..4,
    ) {
        let p = PRIMES[pi];
        prop_assume!(b % p as i64 != 0 && d % p as i64 != 0);
        let m = Modulus::new(p, e).unwrap();
        let x = Rational::new(a.into(), b.into());
        let y = Rational::new(c.into(), d.into());
        let rx = rational_residue(&x, &m).unwrap();
        let ry = rational_residue(&y, &m).unwrap();
        prop_assert_eq!(rational_residue(&(&x + &y), &m).unwrap(), rx.add(&ry).unwrap());
        prop_assert_eq!(rational_residue(&(&x * &y), &m).unwrap(), rx.mul(&ry).unwrap());
        if a % p as i64 != 0 {
            prop_assert_eq!(rx.mul(&rx.inverse().unwrap()).unwrap(), Residue::one(&m));
        }
    }

    #[test]
    fn crt_recovers_the_integer(x in 0u64..(3 * 5 * 7 * 11 * 13 * 17), k in 1usize..=6) {
        let parts: Vec<Residue> =
            PRIMES[..k].iter().map(|&p| Residue::from_u64(x, &Modulus::new(p, 1).unwrap())).collect();
        let (v, q) = crt_combine(&parts).unwrap();
        let prod: u64 = PRIMES[..k].iter().product();
        prop_assert_eq!(q, BigUint::from(prod));
        prop_assert_eq!(v, BigUint::from(x % prod));
    }

    #[test]
    fn stuffle_holds(s in index(3, 2), t in index(3, 2), pi in 1usize..5, n in 2u64..40) {
        let p = PRIMES[pi];
        let m = Modulus::new(p, 2).unwrap();
        prop_assert!(stuffle_check(&s, &t, n, &m).unwrap());
    }

    #[test]
    fn depth_one_sum_is_a_power_sum(k in 1u32..6, n in 2u64..60, pi in 1usize..6) {
        let p = PRIMES[pi];
        let m = Modulus::new(p, 2).unwrap();
        let direct = (1..n).filter(|u| u % p != 0).fold(Rational::from_integer(0.into()), |acc, u| {
            acc + Rational::new(1.into(), BigInt::from(u).pow(k))
        });
        let got = mhs(n, &Index::new(vec![k]).unwrap(), &m).unwrap();
        prop_assert_eq!(got, rational_residue(&direct, &m).unwrap());
    }

    #[test]
    fn composition_sums_match_enumeration(n in 2usize..5, pi in 0usize..4, r in 1u32..3) {
        let p = PRIMES[pi];
        let m = Modulus::new(p, r + 1).unwrap();
        prop_assert_eq!(t_n_fast(n, r, &m).unwrap(), t_n_naive(n, r, &m, 2_000_000).unwrap());
    }

    #[test]
    fn restricted_sums_match_enumeration(n in 2usize..5, k in 1u64..4, pi in 2usize..5) {
        let p = PRIMES[pi];
        let m = Modulus::new(p, 1).unwrap();
        prop_assert_eq!(r_nm_fast(n, k, &m).unwrap(), r_nm_naive(n, k, &m, 2_000_000).unwrap());
    }

    #[test]
    fn power_sum_formula_is_exact(k in 0u64..10, n in 1u64..40) {
        let direct: BigInt = (1..n).map(|j| BigInt::from(j).pow(k as u32)).sum();
        prop_assert_eq!(power_sum_formula(k, n).unwrap(), Rational::from_integer(direct));
    }
}
