mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rearrangement_preserves_norms(values in raw_field()) {
        rearrangement_property(values)?;
    }

    #[test]
    fn nehari_scale_is_covariant(params in bump_params(), c in 0.05..20.0f64) {
        nehari_covariance_property(params, c)?;
    }

    #[test]
    fn branch_inverses_satisfy_the_cubic(
        a in 0.1..5.0f64,
        b in 0.1..5.0f64,
        s_frac in 0.0..1.0f64,
        s_log in -6.0..6.0f64,
    ) {
        branch_substitution_property(a, b, s_frac, s_log)?;
    }

    #[test]
    fn difference_operators_are_linear_and_second_order(
        coefs in coef_pair(),
        k1 in 1u32..4,
        k2 in 1u32..8,
        phase in 0.0..6.3f64,
    ) {
        derivative_property(coefs, k1, k2, phase)?;
    }
}
