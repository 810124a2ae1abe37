//! Property tests for the grid primitives.

use fraclab::grid::ScalarField;
use fraclab::{build_grid, hardy_ratio, truncate, weighted_grad_norm};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn grid_reflection_negates_nodes(n in 3usize..400) {
        let g = build_grid(n).unwrap();
        for i in 0..n {
            prop_assert!((g.nodes[i] + g.nodes[n - 1 - i]).abs() < 1e-14);
            prop_assert!((g.delta[i] - g.delta[n - 1 - i]).abs() < 1e-14);
        }
        prop_assert!((g.h * (n as f64 + 1.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn truncate_idempotent_and_monotone(
        vals in prop::collection::vec(-10.0f64..10.0, 8),
        bump in prop::collection::vec(0.0f64..5.0, 8),
        k in 0.1f64..8.0,
    ) {
        let g = build_grid(8).unwrap();
        let u = ScalarField::new(g.clone(), vals.clone()).unwrap();
        let v = ScalarField::new(
            g.clone(),
            vals.iter().zip(&bump).map(|(a, b)| a + b).collect(),
        ).unwrap();
        let tu = truncate(&u, k).unwrap();
        let ttu = truncate(&tu, k).unwrap();
        prop_assert_eq!(&tu.values, &ttu.values, "truncation must be idempotent");
        // u <= v pointwise implies T_k u <= T_k v
        let tv = truncate(&v, k).unwrap();
        for i in 0..8 {
            prop_assert!(tu.values[i] <= tv.values[i] + 1e-15);
        }
    }

    #[test]
    fn weighted_norm_absolutely_homogeneous(
        vals in prop::collection::vec(-3.0f64..3.0, 32),
        c in -50.0f64..50.0,
        q in 1.0f64..6.0,
        w_exp in 0.0f64..1.0,
    ) {
        let g = build_grid(32).unwrap();
        let u = ScalarField::new(g.clone(), vals.clone()).unwrap();
        let cu = ScalarField::new(g.clone(), vals.iter().map(|v| c * v).collect()).unwrap();
        let n1 = weighted_grad_norm(&u, q, w_exp).unwrap();
        let n2 = weighted_grad_norm(&cu, q, w_exp).unwrap();
        prop_assert!((n2 - c.abs() * n1).abs() <= 1e-10 * (1.0 + n2.abs()));
    }
}

#[test]
fn hardy_family_stays_bounded_under_refinement() {
    // (1-x²)^t for t in {0.6, 0.8, 1.0} all lie in W^{1,2}; the discrete
    // Hardy quotient must stay below a common bound as the grid refines
    let bound = 6.0;
    for n in [200, 400, 800, 1600] {
        let g = build_grid(n).unwrap();
        for t in [0.6, 0.8, 1.0] {
            let phi = ScalarField::from_fn(&g, |x| (1.0 - x * x).powf(t));
            let r = hardy_ratio(&phi, 2.0).unwrap();
            assert!(!r.degenerate);
            assert!(
                r.ratio > 0.0 && r.ratio < bound,
                "t={t}, n={n}: ratio {} escaped the common bound",
                r.ratio
            );
        }
    }
}

#[test]
fn hardy_smooth_profile_matches_exact_integrals() {
    // φ = 1-x²: ∫ φ²/δ² = 14/3 and ∫ |Dφ|² = 8/3 exactly, so the ratio
    // tends to 1.75; it must be stable within 5% between n=200 and n=800
    let exact = (14.0 / 3.0) / (8.0 / 3.0);
    let mut ratios = Vec::new();
    for n in [200, 800] {
        let g = build_grid(n).unwrap();
        let phi = ScalarField::from_fn(&g, |x| 1.0 - x * x);
        ratios.push(hardy_ratio(&phi, 2.0).unwrap().ratio);
    }
    assert!((ratios[0] - ratios[1]).abs() / ratios[1] < 0.05);
    assert!((ratios[1] - exact).abs() / exact < 0.01, "ratio {} vs {exact}", ratios[1]);
}

#[test]
fn hardy_low_power_fails_sobolev_membership() {
    // φ = (1-x²)^0.3 with p = 2: p(1-t) > 1, so neither integral is finite;
    // the numerator must grow without stabilizing while the ratio stays
    // bounded (both sides diverge at the same rate)
    let mut nums = Vec::new();
    let mut ratios = Vec::new();
    for n in [200, 400, 800, 1600] {
        let g = build_grid(n).unwrap();
        let phi = ScalarField::from_fn(&g, |x| (1.0 - x * x).powf(0.3));
        let r = hardy_ratio(&phi, 2.0).unwrap();
        nums.push(r.numerator);
        ratios.push(r.ratio);
    }
    let d1 = nums[3] - nums[2];
    let d2 = nums[2] - nums[1];
    assert!(d1 > 0.0 && d1 > 0.9 * d2, "numerator must keep growing: {nums:?}");
    assert!(ratios.iter().all(|r| *r < 20.0));
}
