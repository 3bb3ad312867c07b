//! Parameterization invariants: every family must produce valid structural
//! parameters from arbitrary unconstrained coordinates, and the documented
//! structure of each family must hold exactly.

use mvmatern::{
    corr_from_unconstrained, cross_len, model_family, rho_bound, validate, MarginalParams,
    ParamsDocument, StructuralParams, MODEL_FAMILY_NAMES,
};
use proptest::prelude::*;

fn theta_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, len)
}

fn expand_all(p: usize, theta_raw: &[f64], zcn: bool) -> Vec<(String, StructuralParams)> {
    MODEL_FAMILY_NAMES
        .iter()
        .map(|name| {
            let family = model_family(name, zcn).unwrap();
            let dim = family.param_count(p).unwrap();
            let theta: Vec<f64> = theta_raw.iter().cycle().take(dim).copied().collect();
            (name.to_string(), family.expand(&theta, p, 2).unwrap())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Validity by construction for the constrained families: arbitrary
    /// coordinates expand into parameters passing every diagnostic. The
    /// unconstrained family guarantees this only pairwise (p = 2); for
    /// larger p its admissibility is a post-fit question by design.
    #[test]
    fn constrained_families_expand_to_valid_parameters(
        p in 2usize..=4,
        theta_raw in theta_strategy(60),
    ) {
        for zcn in [false, true] {
            for (name, params) in expand_all(p, &theta_raw, zcn) {
                if name == "unconstrained" && p > 2 {
                    continue;
                }
                let family = model_family(&name, zcn).unwrap();
                let diag = validate(&params, family.as_ref());
                prop_assert!(
                    diag.all_passed(),
                    "family {name} (zcn={zcn}) failed: {:?}",
                    diag.failed()
                );
            }
        }
    }

    /// The parsimonious family's defining structure: one shared range,
    /// arithmetic-mean smoothness, and cross correlations inside the
    /// Γ-ratio bound.
    #[test]
    fn parsimonious_structure_holds_exactly(
        p in 2usize..=4,
        theta_raw in theta_strategy(40),
    ) {
        let family = model_family("parsimonious", false).unwrap();
        let dim = family.param_count(p).unwrap();
        let theta: Vec<f64> = theta_raw.iter().cycle().take(dim).copied().collect();
        let params = family.expand(&theta, p, 2).unwrap();
        let alpha0 = params.alpha[(0, 0)];
        for i in 0..p {
            for j in 0..=i {
                prop_assert!((params.alpha[(i, j)] - alpha0).abs() <= 1e-12 * alpha0);
                let mean = 0.5 * (params.nu[(i, i)] + params.nu[(j, j)]);
                prop_assert!((params.nu[(i, j)] - mean).abs() <= 1e-12 * mean);
                if i != j {
                    let bound = rho_bound(params.nu[(i, i)], params.nu[(j, j)], 2).unwrap();
                    let rho = params.rho(i, j);
                    prop_assert!(
                        rho.abs() <= bound + 1e-12,
                        "rho {rho} exceeds bound {bound}"
                    );
                }
            }
        }
    }

    /// Forcing the cross nugget to zero removes those coordinates and pins
    /// the off-diagonal nugget entries.
    #[test]
    fn zero_cross_nugget_pins_offdiagonals(
        p in 2usize..=4,
        theta_raw in theta_strategy(60),
    ) {
        for name in ["parsimonious", "flexible-a", "flexible-e", "unconstrained"] {
            let free = model_family(name, false).unwrap();
            let pinned = model_family(name, true).unwrap();
            prop_assert_eq!(
                free.param_count(p).unwrap() - pinned.param_count(p).unwrap(),
                cross_len(p)
            );
            let dim = pinned.param_count(p).unwrap();
            let theta: Vec<f64> = theta_raw.iter().cycle().take(dim).copied().collect();
            let params = pinned.expand(&theta, p, 2).unwrap();
            for i in 0..p {
                for j in 0..i {
                    prop_assert_eq!(params.tau[(i, j)], 0.0);
                }
            }
        }
    }

    /// The independent family carries no cross structure at all.
    #[test]
    fn independent_family_has_zero_cross_covariance(
        p in 2usize..=4,
        theta_raw in theta_strategy(20),
    ) {
        let family = model_family("independent", false).unwrap();
        let dim = family.param_count(p).unwrap();
        prop_assert_eq!(dim, 4 * p);
        let theta: Vec<f64> = theta_raw.iter().cycle().take(dim).copied().collect();
        let params = family.expand(&theta, p, 2).unwrap();
        for i in 0..p {
            for j in 0..i {
                prop_assert_eq!(params.sigma[(i, j)], 0.0);
                prop_assert_eq!(params.tau[(i, j)], 0.0);
            }
        }
    }

    /// Coordinate names match the parameter count and are unique.
    #[test]
    fn coordinate_names_are_consistent(p in 2usize..=4) {
        for name in MODEL_FAMILY_NAMES {
            let family = model_family(name, false).unwrap();
            let names = family.coordinate_names(p);
            prop_assert_eq!(names.len(), family.param_count(p).unwrap());
            let unique: std::collections::BTreeSet<_> = names.iter().collect();
            prop_assert_eq!(unique.len(), names.len());
        }
    }

    /// Spherical parameterization always yields a correlation matrix.
    #[test]
    fn unconstrained_correlations_are_valid(
        p in 2usize..=5,
        z_raw in theta_strategy(10),
        positive in any::<bool>(),
    ) {
        let z: Vec<f64> = z_raw.iter().cycle().take(cross_len(p)).copied().collect();
        let r = corr_from_unconstrained(&z, p, positive).unwrap();
        for i in 0..p {
            prop_assert_eq!(r[(i, i)], 1.0);
            for j in 0..i {
                prop_assert!((r[(i, j)] - r[(j, i)]).abs() < 1e-15);
                prop_assert!(r[(i, j)].abs() < 1.0);
                if positive {
                    prop_assert!(r[(i, j)] > 0.0);
                }
            }
        }
        prop_assert!(nalgebra::Cholesky::new(r).is_some());
    }
}

/// The unconstrained family can leave the admissible region for p ≥ 3;
/// the diagnostics must catch that rather than silently accept it.
#[test]
fn diagnostics_detect_inadmissible_unconstrained_nugget() {
    let family = model_family("unconstrained", false).unwrap();
    let p = 3;
    let dim = family.param_count(p).unwrap();
    // All diagonal coordinates at 0; push every pairwise nugget link far
    // negative so each ρ_τ approaches −1: such a 3×3 "correlation" matrix
    // has an eigenvalue near −1 and is not a covariance.
    let mut theta = vec![0.0; dim];
    for k in dim - 3..dim {
        theta[k] = -50.0;
    }
    let params = family.expand(&theta, p, 2).unwrap();
    let diag = validate(&params, family.as_ref());
    assert!(!diag.all_passed());
    let failed = diag.failed();
    assert!(
        failed.iter().any(|c| c.name.contains("tau") && c.value < -0.5),
        "expected a strongly negative nugget eigenvalue, got {failed:?}"
    );
}

#[test]
fn rho_bound_is_one_at_equal_smoothness_and_symmetric() {
    for &nu in &[0.14, 0.5, 1.0, 3.3] {
        assert!((rho_bound(nu, nu, 2).unwrap() - 1.0).abs() < 1e-12);
    }
    for &(a, b) in &[(0.3, 1.7), (0.5, 0.6), (2.0, 4.5)] {
        let ab = rho_bound(a, b, 2).unwrap();
        let ba = rho_bound(b, a, 2).unwrap();
        assert!((ab - ba).abs() < 1e-14);
        assert!(ab > 0.0 && ab < 1.0);
        // closed form at d = 2: √(ν_ii ν_jj) / mean
        let closed = (a * b).sqrt() / (0.5 * (a + b));
        assert!((ab - closed).abs() < 1e-12);
    }
}

#[test]
fn starting_coordinates_reproduce_the_marginals() {
    let marginals = [
        MarginalParams { sigma: 2.0, alpha: 0.7, nu: 1.2, tau: 0.3 },
        MarginalParams { sigma: 0.5, alpha: 1.4, nu: 0.6, tau: 0.02 },
    ];
    for name in MODEL_FAMILY_NAMES {
        let family = model_family(name, false).unwrap();
        let theta = family.starting_theta(&marginals);
        assert_eq!(theta.len(), family.param_count(2).unwrap(), "family {name}");
        let params = family.expand(theta.as_slice(), 2, 2).unwrap();
        for (c, m) in marginals.iter().enumerate() {
            assert!(
                (params.sigma[(c, c)] - m.sigma).abs() < 1e-8 * m.sigma,
                "family {name} sigma_{c}{c}"
            );
            assert!(
                (params.tau[(c, c)] - m.tau).abs() < 1e-8 * m.tau,
                "family {name} tau_{c}{c}"
            );
        }
        // Shared-range families cannot reproduce distinct marginal ranges,
        // but every layout carries per-component diagonal smoothness.
        for (c, m) in marginals.iter().enumerate() {
            assert!(
                (params.nu[(c, c)] - m.nu).abs() < 1e-8 * m.nu,
                "family {name} nu_{c}{c}"
            );
        }
    }
}

#[test]
fn params_document_round_trips_through_json() {
    let family = model_family("flexible-e", false).unwrap();
    let dim = family.param_count(3).unwrap();
    let theta: Vec<f64> = (0..dim).map(|i| 0.3 * (i as f64).sin()).collect();
    let mut params = family.expand(&theta, 3, 2).unwrap();
    params.mu = nalgebra::dvector![1.5, -2.0, 0.25];
    let doc = ParamsDocument::new("flexible-e", &params, &theta);
    let text = doc.to_json().unwrap();
    let back = ParamsDocument::from_json(&text).unwrap();
    assert_eq!(back.model, "flexible-e");
    let rebuilt = back.to_structural().unwrap();
    assert_eq!(rebuilt.sigma, params.sigma);
    assert_eq!(rebuilt.alpha, params.alpha);
    assert_eq!(rebuilt.nu, params.nu);
    assert_eq!(rebuilt.tau, params.tau);
    assert_eq!(rebuilt.mu, params.mu);
}
