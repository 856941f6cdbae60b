use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use ltp_core::convolution::convolve;
use ltp_core::lp::{lp_norm, weighted_l1_norm};
use ltp_core::spectral::build_dual;
use ltp_core::tempered::{tempered_norm, IterConfig};
use ltp_core::{build_group, Exponent, GFunction, GroupModel};

const MODELS: &[&str] = &[
    "cyclic:6",
    "cyclic:5@probability",
    "dihedral:3",
    "symmetric:3",
    "product:cyclic:2+cyclic:4",
];

fn group(text: &str) -> Arc<GroupModel> {
    build_group(&text.parse().unwrap()).unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

/// A model plus two functions on it.
fn model_and_pair() -> impl Strategy<Value = (Arc<GroupModel>, Vec<Complex64>, Vec<Complex64>)> {
    prop::sample::select(MODELS).prop_flat_map(|spec| {
        let g = group(spec);
        let n = g.size();
        (Just(g), values(n), values(n))
    })
}

fn exponent() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.0, 1.25, 1.5, 2.0, 3.0, 4.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn action_never_beats_the_bracket((g, f, x) in model_and_pair(), p in exponent()) {
        let p = Exponent::new(p).unwrap();
        let f = GFunction::new(g.clone(), f).unwrap();
        let x = GFunction::new(g.clone(), x).unwrap();
        let est = tempered_norm(&f, p, &IterConfig::default()).unwrap();
        prop_assert!(est.lower <= est.upper * (1.0 + 1e-12) + 1e-12);
        prop_assert!(est.upper <= weighted_l1_norm(&f, p) * (1.0 + 1e-12) + 1e-12);
        let nx = lp_norm(&x, p);
        prop_assume!(nx > 1e-9);
        let action = lp_norm(&convolve(&x, &f).unwrap().checked().unwrap(), p) / nx;
        prop_assert!(action <= est.upper * (1.0 + 1e-9) + 1e-12, "{action} > {}", est.upper);
    }

    #[test]
    fn norm_is_absolutely_homogeneous((g, f, _x) in model_and_pair(), re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let two = Exponent::new(2.0).unwrap();
        let f = GFunction::new(g, f).unwrap();
        let c = Complex64::new(re, im);
        let a = tempered_norm(&f, two, &IterConfig::default()).unwrap().lower;
        let b = tempered_norm(&f.scale(c), two, &IterConfig::default()).unwrap().lower;
        prop_assert!((b - c.norm() * a).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn exact_norm_is_submultiplicative((g, f, h) in model_and_pair()) {
        let two = Exponent::new(2.0).unwrap();
        let cfg = IterConfig::default();
        let f = GFunction::new(g.clone(), f).unwrap();
        let h = GFunction::new(g, h).unwrap();
        let fh = convolve(&f, &h).unwrap().checked().unwrap();
        let lhs = tempered_norm(&fh, two, &cfg).unwrap().lower;
        let rhs = tempered_norm(&f, two, &cfg).unwrap().lower * tempered_norm(&h, two, &cfg).unwrap().lower;
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn transform_turns_convolution_into_products((g, f, h) in model_and_pair()) {
        prop_assume!(g.is_abelian());
        let dual = build_dual(&g).unwrap();
        let f = GFunction::new(g.clone(), f).unwrap();
        let h = GFunction::new(g.clone(), h).unwrap();
        prop_assert!(dual.convolution_theorem_check(&f, &h).unwrap() <= 1e-10);
        prop_assert!(dual.round_trip_error(&f).unwrap() <= 1e-12);
    }
}
