//! Matérn kernel checks: closed forms at half-integer smoothness, finite
//! difference validation of the analytic partials, and positive definiteness
//! of assembled covariance matrices.

use mvmatern::{
    build_covariance, cross_covariance, matern, matern_dalpha, matern_dnu, Observation,
    StructuralParams,
};
use proptest::prelude::*;

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// ν = 1/2 is the exponential kernel; ν = 3/2 and ν = 5/2 have the usual
/// polynomial-times-exponential forms.
#[test]
fn half_integer_smoothness_has_closed_forms() {
    for j in 0..200 {
        // log-spaced h/α from 1e-6 to 30
        let t = 1e-6 * (30.0f64 / 1e-6).powf(j as f64 / 199.0);
        let e = (-t).exp();
        assert!(rel_err(matern(t, 0.5, 1.0).unwrap(), e) < 1e-10, "nu=1/2 at {t}");
        assert!(
            rel_err(matern(t, 1.5, 1.0).unwrap(), (1.0 + t) * e) < 1e-10,
            "nu=3/2 at {t}"
        );
        assert!(
            rel_err(
                matern(t, 2.5, 1.0).unwrap(),
                (1.0 + t + t * t / 3.0) * e
            ) < 1e-10,
            "nu=5/2 at {t}"
        );
    }
}

#[test]
fn kernel_is_one_at_zero_distance_and_decreasing() {
    for &nu in &[0.14, 0.5, 1.0, 2.5163, 7.9] {
        assert_eq!(matern(0.0, nu, 1.3).unwrap(), 1.0);
        let mut prev = 1.0;
        for j in 1..80 {
            let h = 0.05 * j as f64;
            let v = matern(h, nu, 1.3).unwrap();
            assert!(v < prev && v > 0.0, "not decreasing at nu={nu}, h={h}");
            prev = v;
        }
    }
}

/// Rescaling h and α together leaves the correlation unchanged.
#[test]
fn kernel_depends_only_on_the_ratio() {
    for &(h, alpha, s) in &[(0.7, 2.0, 5.0), (3.0, 0.4, 0.01), (11.0, 9.0, 120.0)] {
        let a = matern(h, 1.2, alpha).unwrap();
        let b = matern(h * s, 1.2, alpha * s).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
    }
}

fn central_diff(f: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

#[test]
fn alpha_partial_matches_finite_differences() {
    for &(h, nu, alpha) in &[
        (0.3, 0.5, 1.0),
        (2.0, 1.5, 0.7),
        (0.05, 0.14, 3.0),
        (5.0, 2.5163, 2.2),
        (1.0, 4.75, 0.9),
    ] {
        let analytic = matern_dalpha(h, nu, alpha).unwrap();
        let fd = central_diff(|a| matern(h, nu, a).unwrap(), alpha, 1e-5 * alpha);
        assert!(
            (analytic - fd).abs() < 1e-6 * analytic.abs().max(1e-8),
            "dM/dalpha at h={h}, nu={nu}, alpha={alpha}: {analytic} vs {fd}"
        );
    }
}

#[test]
fn nu_partial_matches_finite_differences() {
    for &(h, nu, alpha) in &[
        (0.3, 0.5, 1.0),
        (2.0, 1.5, 0.7),
        (0.05, 0.8, 3.0),
        (5.0, 2.5163, 2.2),
        (1.0, 4.75, 0.9),
    ] {
        let analytic = matern_dnu(h, nu, alpha).unwrap();
        let fd = central_diff(|v| matern(h, nu + v, alpha).unwrap() , 0.0, 1e-6 * nu.max(0.5));
        assert!(
            (analytic - fd).abs() < 1e-5 * analytic.abs().max(1e-7),
            "dM/dnu at h={h}, nu={nu}, alpha={alpha}: {analytic} vs {fd}"
        );
    }
}

#[test]
fn partials_vanish_at_zero_distance() {
    assert_eq!(matern_dalpha(0.0, 1.1, 2.0).unwrap(), 0.0);
    assert_eq!(matern_dnu(0.0, 1.1, 2.0).unwrap(), 0.0);
}

/// Two co-located observations of different components pick up the cross
/// nugget; separated ones do not.
#[test]
fn cross_covariance_adds_nugget_only_when_colocated() {
    let mut params = StructuralParams::zeros(2, 2);
    params.sigma = nalgebra::dmatrix![1.0, 0.4; 0.4, 2.0];
    params.alpha = nalgebra::dmatrix![1.0, 1.0; 1.0, 1.0];
    params.nu = nalgebra::dmatrix![0.5, 0.75; 0.75, 1.0];
    params.tau = nalgebra::dmatrix![0.3, 0.1; 0.1, 0.2];
    let a = Observation::new(vec![0.25, 0.5], 0);
    let b_near = Observation::new(vec![0.25, 0.5], 1);
    let b_far = Observation::new(vec![0.25, 0.6], 1);
    let co = cross_covariance(&a, &b_near, &params).unwrap();
    let apart = cross_covariance(&a, &b_far, &params).unwrap();
    assert!((co - (0.4 + 0.1)).abs() < 1e-12);
    assert!(apart < 0.4 && apart > 0.0);
    let self_co = cross_covariance(&a, &a, &params).unwrap();
    assert!((self_co - 1.3).abs() < 1e-12);
}

fn valid_bivariate_params(rho: f64, nu1: f64, nu2: f64) -> StructuralParams {
    // Parsimonious-style construction: common range, averaged smoothness,
    // cross correlation within the admissibility bound.
    let mut params = StructuralParams::zeros(2, 2);
    let bound = mvmatern::rho_bound(nu1, nu2, 2).unwrap();
    let sig12 = rho * bound * (1.5f64 * 0.8).sqrt();
    params.sigma = nalgebra::dmatrix![1.5, sig12; sig12, 0.8];
    params.alpha = nalgebra::dmatrix![0.6, 0.6; 0.6, 0.6];
    params.nu = nalgebra::dmatrix![nu1, (nu1 + nu2) / 2.0; (nu1 + nu2) / 2.0, nu2];
    params.tau = nalgebra::dmatrix![0.05, 0.0; 0.0, 0.05];
    params
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any admissible bivariate parsimonious parameter set must give a
    /// positive definite covariance over any point cloud.
    #[test]
    fn assembled_covariance_is_positive_definite(
        rho in -0.95f64..0.95,
        nu1 in 0.2f64..3.0,
        nu2 in 0.2f64..3.0,
        seed in 0u64..1000,
    ) {
        let params = valid_bivariate_params(rho, nu1, nu2);
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let points: Vec<Observation> = (0..40)
            .map(|i| Observation::new(vec![unit(), unit()], i % 2))
            .collect();
        let block = build_covariance(&points, &params).unwrap();
        let chol = nalgebra::Cholesky::new(block.matrix.clone());
        prop_assert!(chol.is_some(), "covariance not PD for rho={rho}, nu=({nu1},{nu2})");
    }

    /// The kernel stays within (0, 1] and the analytic α partial keeps the
    /// sign of increasing range (larger α, slower decay → larger value).
    #[test]
    fn kernel_bounds_and_alpha_monotonicity(
        h in 1e-4f64..20.0,
        nu in 0.05f64..6.0,
        alpha in 0.05f64..8.0,
    ) {
        let v = matern(h, nu, alpha).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        let d = matern_dalpha(h, nu, alpha).unwrap();
        prop_assert!(d >= 0.0, "dM/dalpha < 0 at h={h}, nu={nu}, alpha={alpha}");
    }
}
