use levysub::levy::RadialProfile;
use levysub::suites::{lemma1_margin, mixed_set_mass};
use levysub::Error;

const EULER: f64 = 0.577_215_664_901_532_9;

// E1(x) by its power series, accurate for the small arguments used here.
fn e1(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..80 {
        term *= -x / k as f64;
        sum += term / k as f64;
    }
    -EULER - x.ln() - sum
}

fn exp_profile() -> RadialProfile {
    RadialProfile::Exponential { c: 1.0, q: 1.0 }
}

#[test]
fn pure_drift_mixture_matches_exponential_integral() {
    // a = 0, γ = 1: G is a point mass at r, so the mass is ∫_{x1}^{x2} e^{-r}/r dr.
    let m = mixed_set_mass(0.0, 1.0, &exp_profile(), &vec![[1.0, 2.0]]).unwrap();
    assert!((m - (e1(1.0) - e1(2.0))).abs() < 1e-10, "{m}");
    let (lhs, rhs) = lemma1_margin(0.0, 1.0, &exp_profile(), 2.0, &vec![[1.0, 2.0]]).unwrap();
    assert!((lhs - (e1(0.5) - e1(1.0))).abs() < 1e-10);
    assert!((rhs - (e1(1.0) - e1(2.0))).abs() < 1e-10);
    assert!(lhs > rhs);
}

#[test]
fn negative_drift_puts_no_mass_on_positive_sets() {
    let m = mixed_set_mass(0.0, -1.0, &exp_profile(), &vec![[1.0, 2.0]]).unwrap();
    assert_eq!(m, 0.0);
}

#[test]
fn span_near_one_gives_near_zero_margin() {
    for (a, g) in [(1.0, 0.0), (1.0, 3.0), (2.0, -1.0)] {
        let (lhs, rhs) = lemma1_margin(a, g, &exp_profile(), 1.0 + 1e-9, &vec![[0.5, 3.0]]).unwrap();
        assert!((lhs - rhs).abs() < 1e-7, "a={a} γ={g}: {}", lhs - rhs);
    }
}

#[test]
fn increasing_profile_is_rejected() {
    let f = RadialProfile::LogPeriodic(levysub::levy::LogPeriodic::new(1.0, 2.0, vec![1.0, 2.0]).unwrap());
    let r = lemma1_margin(1.0, 0.0, &f, 2.0, &vec![[1.0, 2.0]]);
    assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
}

#[test]
fn bad_arguments_are_input_errors() {
    assert!(matches!(lemma1_margin(1.0, 0.0, &exp_profile(), 1.0, &vec![[1.0, 2.0]]), Err(Error::Input(_))));
    assert!(matches!(lemma1_margin(-1.0, 0.0, &exp_profile(), 2.0, &vec![[1.0, 2.0]]), Err(Error::Input(_))));
    assert!(matches!(mixed_set_mass(1.0, 0.0, &exp_profile(), &vec![[2.0, 1.0]]), Err(Error::Input(_))));
}
