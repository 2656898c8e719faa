use mdiew_core::qcore::{c, dagger, frobenius_norm, outcome_tuple, ComplexMatrix};
use mdiew_core::witness::{decompose_operator, reconstruct};
use mdiew_core::{AncillaBasis, CoefficientTensor};
use proptest::prelude::*;

fn hermitian(d: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(d, d, |i, j| {
        let (re, im) = entries[i * d + j];
        c(re, im)
    });
    (&a + dagger(&a)) * c(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_round_trip(values in prop::collection::vec(-5.0f64..5.0, 16), o in 0usize..16) {
        let basis = AncillaBasis::default_basis(2);
        let outcome = outcome_tuple(o, 2);
        let beta = CoefficientTensor::from_values(2, values.clone()).unwrap();
        let op = reconstruct(&beta, &basis, &outcome).unwrap();
        let back = decompose_operator(&op, &basis, &outcome).unwrap();
        for (a, b) in back.values().iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn operators_round_trip(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64), o in 0usize..64) {
        let basis = AncillaBasis::default_basis(3);
        let outcome = outcome_tuple(o, 3);
        let op = hermitian(8, &entries);
        let beta = decompose_operator(&op, &basis, &outcome).unwrap();
        let back = reconstruct(&beta, &basis, &outcome).unwrap();
        prop_assert!(frobenius_norm(&(back - op)) < 1e-9);
    }

    #[test]
    fn decomposition_is_linear(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        s in -3.0f64..3.0,
    ) {
        let basis = AncillaBasis::default_basis(2);
        let outcome = outcome_tuple(7, 2);
        let (ma, mb) = (hermitian(4, &a), hermitian(4, &b));
        let combined = decompose_operator(&(&ma + &mb * c(s, 0.0)), &basis, &outcome).unwrap();
        let ba = decompose_operator(&ma, &basis, &outcome).unwrap();
        let bb = decompose_operator(&mb, &basis, &outcome).unwrap();
        for k in 0..16 {
            prop_assert!((combined.values()[k] - ba.values()[k] - s * bb.values()[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn identity_expands_over_mixed_inputs() {
    // τ₁ = I/2 at every party, so I = 2^N (τ₁ᵀ ⊗ … ⊗ τ₁ᵀ) for every outcome
    let basis = AncillaBasis::default_basis(3);
    for o in [0, 21, 63] {
        let beta = decompose_operator(&ComplexMatrix::identity(8, 8), &basis, &outcome_tuple(o, 3))
            .unwrap();
        assert!((beta.values()[0] - 8.0).abs() < 1e-12);
        assert!(beta.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
