use mdiew_core::states::{random_k_producible, w_state_noise, Seed};
use mdiew_core::structure::{
    certificate_depth, depth_detection, structure_witness_check, ClassSampler, HarnessMeasurement,
};
use mdiew_core::{Partition, SeparableClass, Witness};

#[test]
fn genuine_witness_against_biseparable_under_random_povms() {
    let w = Witness::w_state(2.0 / 3.0).unwrap();
    let s = ClassSampler::KProducible { parties: 3, k: 2 };
    let r =
        structure_witness_check(&w, &s, &HarnessMeasurement::RandomPovm, 1000, Seed(2024)).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.min_value >= -1e-7);
    assert_eq!(r.trials, 1000);
}

#[test]
fn separable_witness_against_fully_separable() {
    let w = Witness::w_state(4.0 / 9.0).unwrap();
    let s = ClassSampler::for_witness(&w);
    assert_eq!(s, ClassSampler::FullySeparable { parties: 3 });
    let r = structure_witness_check(&w, &s, &HarnessMeasurement::RandomPovm, 300, Seed(9)).unwrap();
    assert_eq!(r.violations, 0);
}

#[test]
fn noisy_measurement_keeps_the_guarantee() {
    let w = Witness::ghz(
        3,
        SeparableClass::Bipartition(Partition::bipartition(1, 3).unwrap()),
    )
    .unwrap();
    let s = ClassSampler::for_witness(&w);
    let r =
        structure_witness_check(&w, &s, &HarnessMeasurement::NoisyBsm(0.8), 300, Seed(10)).unwrap();
    assert_eq!(r.violations, 0);
}

#[test]
fn depth_grid() {
    let grid = [
        0.60,
        0.62,
        13.0 / 21.0 - 1e-6,
        13.0 / 21.0 + 1e-6,
        0.65,
        1.0,
    ];
    for p in grid {
        let v = depth_detection(&w_state_noise(p).unwrap(), 2.0 / 3.0).unwrap();
        assert_eq!(v.detected, p > 13.0 / 21.0, "p = {p}");
    }
    for p in [0.3, 23.0 / 63.0 - 1e-6, 23.0 / 63.0 + 1e-6, 0.5] {
        let v = depth_detection(&w_state_noise(p).unwrap(), 4.0 / 9.0).unwrap();
        assert_eq!(v.detected, p > 23.0 / 63.0, "p = {p}");
    }
    for alpha in [2.0 / 3.0, 4.0 / 9.0] {
        assert!(
            !depth_detection(&w_state_noise(0.0).unwrap(), alpha)
                .unwrap()
                .detected
        );
    }
}

#[test]
fn sampler_audit() {
    for seed in 0..100 {
        for k in 1..=3 {
            let s = random_k_producible(4, k, 2, Seed(seed)).unwrap();
            assert!(certificate_depth(&s) <= k);
        }
    }
}
