//! Property tests for the Pauli algebra and its dense realization.

use mubtomo::pauli::{PauliString, Phase, ProjectivePauli};
use proptest::prelude::*;

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (0..=mask, 0..=mask, 0u8..4).prop_map(move |(x, z, e)| {
        PauliString::from_parts(n, x, z, Phase::from_exponent(e)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn multiplication_is_associative(
        n in 1usize..=4,
        seeds in proptest::array::uniform3(0u64..u64::MAX),
    ) {
        let mask = (1u64 << n) - 1;
        let make = |s: u64| {
            PauliString::from_parts(
                n,
                s & mask,
                (s >> 16) & mask,
                Phase::from_exponent((s >> 32) as u8 % 4),
            )
            .unwrap()
        };
        let (a, b, c) = (make(seeds[0]), make(seeds[1]), make(seeds[2]));
        let left = a.try_mul(&b).unwrap().try_mul(&c).unwrap();
        let right = a.try_mul(&b.try_mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn commutation_agrees_with_dense_commutator(
        (a, b) in (1usize..=3).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    ) {
        let symbolic = a.commutes_with(&b).unwrap();
        let ma = a.to_matrix().unwrap();
        let mb = b.to_matrix().unwrap();
        let comm = (&ma * &mb) - (&mb * &ma);
        let dense = comm.iter().all(|v| v.norm() < 1e-12);
        prop_assert_eq!(symbolic, dense);
    }

    #[test]
    fn dense_product_matches_symbolic(
        (a, b) in (1usize..=3).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    ) {
        let sym = a.try_mul(&b).unwrap().to_matrix().unwrap();
        let dense = a.to_matrix().unwrap() * b.to_matrix().unwrap();
        prop_assert!((sym - dense).norm() < 1e-12);
    }

    #[test]
    fn projective_image_is_a_homomorphism(
        (a, b) in (1usize..=5).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    ) {
        // the projective key of a product depends only on the projective keys
        let p = a.try_mul(&b).unwrap().projective();
        let q = a.projective().try_mul(&b.projective()).unwrap();
        prop_assert_eq!(p, q);
        // and is insensitive to the operands' phases
        let a2 = a.with_phase(Phase::MinusI);
        let p2 = a2.try_mul(&b).unwrap().projective();
        prop_assert_eq!(p, p2);
    }

    #[test]
    fn square_has_positive_phase_for_real_operators(p in (1usize..=5).prop_flat_map(pauli_strategy)) {
        let real = p.with_phase(if p.phase().is_real() { p.phase() } else { Phase::PlusOne });
        let sq = real.try_mul(&real).unwrap();
        prop_assert!(sq.is_identity());
        prop_assert_eq!(sq.phase(), Phase::PlusOne);
    }

    #[test]
    fn text_roundtrip(p in (1usize..=6).prop_flat_map(pauli_strategy)) {
        let text = p.to_string();
        let back: PauliString = text.parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn projective_text_roundtrip(
        (n, x, z) in (1usize..=6).prop_flat_map(|n| {
            let mask = (1u64 << n) - 1;
            (Just(n), 0..=mask, 0..=mask)
        })
    ) {
        let p = ProjectivePauli::from_parts(n, x, z).unwrap();
        let back: ProjectivePauli = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,12}") {
        let _ = text.parse::<PauliString>();
        let _ = text.parse::<ProjectivePauli>();
    }
}

/// Randomized commutation check on three and four qubits, one thousand
/// pairs each.
#[test]
fn commutation_randomized_larger_registers() {
    let mut state = 0x243F_6A88_85A3_08D3u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    for n in 3..=4usize {
        let mask = (1u64 << n) - 1;
        for _ in 0..1000 {
            let a = PauliString::from_parts(n, next() & mask, next() & mask, Phase::PlusOne)
                .unwrap();
            let b = PauliString::from_parts(n, next() & mask, next() & mask, Phase::PlusOne)
                .unwrap();
            let ma = a.to_matrix().unwrap();
            let mb = b.to_matrix().unwrap();
            let dense = ((&ma * &mb) - (&mb * &ma)).norm() < 1e-12;
            assert_eq!(a.commutes_with(&b).unwrap(), dense, "{a} vs {b}");
        }
    }
}

/// Exhaustive commutation check against the dense commutator for every pair
/// on one and two qubits.
#[test]
fn commutation_exhaustive_small_registers() {
    for n in 1..=2usize {
        let mask = (1u64 << n) - 1;
        let all: Vec<PauliString> = (0..=mask)
            .flat_map(|x| {
                (0..=mask).map(move |z| PauliString::from_parts(n, x, z, Phase::PlusOne).unwrap())
            })
            .collect();
        for a in &all {
            let ma = a.to_matrix().unwrap();
            for b in &all {
                let mb = b.to_matrix().unwrap();
                let dense = ((&ma * &mb) - (&mb * &ma)).norm() < 1e-12;
                assert_eq!(a.commutes_with(b).unwrap(), dense, "{a} vs {b}");
            }
        }
    }
}
