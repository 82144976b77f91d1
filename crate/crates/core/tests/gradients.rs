mod common;

use lgt_core::space::LossKind;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_gradients_match_finite_differences(seed in any::<u64>(), k in 0usize..LossKind::ALL.len()) {
        let kind = LossKind::ALL[k];
        let err = common::gradient_check(kind, seed);
        prop_assert!(err < 1e-4, "{kind:?} seed {seed}: relative error {err}");
    }
}

#[test]
fn every_loss_kind_passes_twenty_models() {
    for &kind in LossKind::ALL.iter() {
        for seed in 0..20 {
            let err = common::gradient_check(kind, seed);
            assert!(err < 1e-4, "{kind:?} seed {seed}: {err}");
        }
    }
}
