//! Special-function checks against independently computed reference values
//! (arbitrary-precision, 30 significant digits) and classical identities.

use mvmatern::{bessel_k, bessel_k_scaled, ln_bessel_k, log_gamma};

/// (ν, x, K_ν(x)) reference triples spanning tiny/large arguments and
/// fractional orders, computed with 30-digit arithmetic.
const BESSEL_K_REFERENCE: &[(f64, f64, f64)] = &[
    (0.5, 0.001, 39.593659513116643),
    (0.5, 1.0, 0.46106850444789456),
    (0.5, 25.0, 3.4811912768406952e-12),
    (0.14, 0.5, 0.93555439234015622),
    (1.0, 2.0, 0.13986588181652243),
    (1.5, 0.3, 7.3456979108035605),
    (2.5163, 7.5, 0.00036972951438627003),
    (0.25, 1e-6, 68.107227889734947),
    (3.75, 0.05, 2250671.3174393838),
    (10.25, 4.0, 172.12401215812498),
    (0.75, 120.0, 8.7840467179091689e-54),
];

/// (ν, x, ln K_ν(x)) for arguments where the plain value under- or overflows.
const LN_BESSEL_K_REFERENCE: &[(f64, f64, f64)] = &[
    (0.75, 120.0, -122.16665781840208),
    (5.0, 700.0, -703.03208292709221),
    (0.5, 25.0, -26.383646559789373),
    (30.5, 2000.0, -2003.3422224707124),
    (0.14, 900.0, -903.17553395798822),
];

/// (x, ln Γ(x)) reference pairs.
const LOG_GAMMA_REFERENCE: &[(f64, f64)] = &[
    (0.1, 2.2527126517342059),
    (0.5, 0.57236494292470009),
    (1.0, 0.0),
    (2.5, 0.28468287047291916),
    (10.0, 12.80182748008147),
    (171.5, 709.14316303092824),
];

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

#[test]
fn bessel_k_matches_reference_values() {
    for &(nu, x, want) in BESSEL_K_REFERENCE {
        let got = bessel_k(nu, x).unwrap();
        assert!(
            rel_err(got, want) < 1e-10,
            "K_{nu}({x}) = {got}, want {want}"
        );
    }
}

#[test]
fn ln_bessel_k_matches_reference_beyond_floating_range() {
    for &(nu, x, want) in LN_BESSEL_K_REFERENCE {
        let got = ln_bessel_k(nu, x).unwrap();
        assert!(
            (got - want).abs() < 1e-9 * want.abs(),
            "ln K_{nu}({x}) = {got}, want {want}"
        );
    }
}

#[test]
fn log_gamma_matches_reference_values() {
    for &(x, want) in LOG_GAMMA_REFERENCE {
        let got = log_gamma(x).unwrap();
        assert!(
            (got - want).abs() < 1e-12 * want.abs().max(1.0),
            "lnGamma({x}) = {got}, want {want}"
        );
    }
}

#[test]
fn scaled_and_log_forms_are_consistent_with_plain() {
    for &(nu, x, _) in BESSEL_K_REFERENCE {
        let plain = bessel_k(nu, x).unwrap();
        let scaled = bessel_k_scaled(nu, x).unwrap();
        let logged = ln_bessel_k(nu, x).unwrap();
        assert!(rel_err(scaled, plain * x.exp()) < 1e-12 || x > 500.0);
        assert!((logged - plain.ln()).abs() < 1e-10 * logged.abs().max(1.0));
    }
}

/// K is even in its order: K_{−ν}(x) = K_ν(x).
#[test]
fn order_symmetry_holds_on_a_grid() {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let nu = 0.05 + 0.1 * i as f64;
        for j in 0..50 {
            let x = 0.02 + 0.45 * j as f64;
            let plus = bessel_k(nu, x).unwrap();
            let minus = bessel_k(-nu, x).unwrap();
            worst = worst.max(rel_err(minus, plus));
        }
    }
    assert!(worst < 1e-12, "worst symmetry residual {worst}");
}

/// Three-term recurrence K_{ν+1}(x) = K_{ν−1}(x) + (2ν/x) K_ν(x), checked in
/// scaled form so large-x underflow cannot mask errors.
#[test]
fn three_term_recurrence_residuals_stay_small() {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let nu = 0.07 + 0.11 * i as f64;
        for j in 0..50 {
            let x = 0.05 + 0.6 * j as f64;
            let km = bessel_k_scaled(nu - 1.0, x).unwrap();
            let k0 = bessel_k_scaled(nu, x).unwrap();
            let kp = bessel_k_scaled(nu + 1.0, x).unwrap();
            let resid = (kp - km - 2.0 * nu / x * k0).abs() / kp.abs();
            worst = worst.max(resid);
        }
    }
    assert!(worst < 1e-8, "worst recurrence residual {worst}");
}

/// Half-integer orders have closed forms: K_{1/2} = √(π/2x)e^{−x},
/// K_{3/2} = K_{1/2}(1 + 1/x), K_{5/2} = K_{1/2}(1 + 3/x + 3/x²).
#[test]
fn half_integer_closed_forms_match_to_over_twelve_digits() {
    for j in 0..60 {
        let x = 0.03 + 0.5 * j as f64;
        let base = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        let want = [base, base * (1.0 + 1.0 / x), base * (1.0 + 3.0 / x + 3.0 / (x * x))];
        for (k, &w) in want.iter().enumerate() {
            let got = bessel_k(0.5 + k as f64, x).unwrap();
            assert!(
                rel_err(got, w) < 1e-12,
                "K_{}({x}) = {got}, want {w}",
                0.5 + k as f64
            );
        }
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(bessel_k(0.5, 0.0).is_err());
    assert!(bessel_k(0.5, -1.0).is_err());
    assert!(bessel_k(f64::NAN, 1.0).is_err());
    assert!(log_gamma(0.0).is_err());
    assert!(log_gamma(-2.0).is_err());
}
