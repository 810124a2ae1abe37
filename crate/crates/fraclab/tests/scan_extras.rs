//! Remaining scan examples: the weighted gradient variant, the always-safe
//! a = 1 exponent, and the nonexistence solution surrogate.

use fraclab::diagnostics::{gradient_integrability_scan, nonexistence_scan};
use fraclab::grid::ScalarField;
use fraclab::Verdict;

#[test]
fn weighted_variant_converges_for_all_a() {
    // with the δ^{1-s} weight the gradient is bounded for smooth data, so
    // every tested exponent converges
    let s = 0.75;
    let f_builder = |g: &std::sync::Arc<fraclab::Grid>| Ok(ScalarField::constant(g, 1.0));
    let scan = gradient_integrability_scan(
        s,
        &f_builder,
        &[2.0, 4.0, 6.0],
        &[200, 400, 800, 1600],
        1.0 - s,
    )
    .unwrap();
    assert!(
        scan.verdicts.iter().all(|v| *v == Verdict::Converging),
        "{:?}",
        scan.verdicts
    );
}

#[test]
fn unit_exponent_always_converges() {
    // a = 1 sits below every threshold
    let f_builder = |g: &std::sync::Arc<fraclab::Grid>| Ok(ScalarField::constant(g, 1.0));
    let scan =
        gradient_integrability_scan(0.75, &f_builder, &[1.0], &[200, 400, 800, 1600], 0.0)
            .unwrap();
    assert_eq!(scan.verdicts[0], Verdict::Converging);
}

#[test]
fn nonexistence_scan_carries_solution_surrogate() {
    let scan = nonexistence_scan(0.75, &[2.0, 5.0], &[200, 400, 800]).unwrap();
    let sec = scan.secondary.as_ref().expect("surrogate on small refinements");
    assert_eq!(sec.len(), 2);
    assert_eq!(sec[0].len(), 3);
    assert!(sec.iter().flatten().all(|v| v.is_finite() && *v > 0.0));
    // at p = 5 the gradient norm surrogate grows under refinement too
    assert!(sec[1][2] > sec[1][1] && sec[1][1] > sec[1][0]);
}
