//! The five model families as strategies behind a common trait: each family
//! owns a documented coordinate layout for its unconstrained parameter vector
//! θ and the expansion map from θ to structural parameters that satisfies the
//! family's validity conditions by construction.
//!
//! Shared layout convention (blocks appear in this order when present):
//! marginal log-σ, cross-σ coordinates (V angles or arctan links s), the
//! log-α block, the log-ν block (with log Δ_A, A angles, log Δ_B, B angles,
//! log β where applicable), then the nugget block (marginal log-τ and S
//! angles or arctan links t). Triangle blocks are row-major over the lower
//! triangle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{
    centered_max_eigenvalue, corr_from_unconstrained, cross_index, cross_len,
    min_eigenvalue, rho_bound, tri_len, DiagnosticCheck, Diagnostics, StructuralParams,
};
use crate::special::log_gamma;

/// Marginal Matérn parameters of a single component, used to seed starts.
#[derive(Debug, Clone, Copy)]
pub struct MarginalParams {
    pub sigma: f64,
    pub alpha: f64,
    pub nu: f64,
    pub tau: f64,
}

/// A model family: a parameterization of the multivariate Matérn.
pub trait ModelFamily: Send + Sync {
    /// Registry name, e.g. "parsimonious".
    fn name(&self) -> &'static str;

    /// Whether the cross-nugget coordinates are removed (τ_ij pinned to 0).
    fn zero_cross_nugget(&self) -> bool;

    /// Whether this family models a cross nugget at all.
    fn has_cross_nugget(&self) -> bool {
        true
    }

    /// Length of θ for a p-component model.
    fn param_count(&self, p: usize) -> Result<usize>;

    /// Expands θ into structural parameters satisfying the family's
    /// conditions by construction. Means are set to zero (they are profiled
    /// by the likelihood, not carried in θ).
    fn expand(&self, theta: &[f64], p: usize, d: usize) -> Result<StructuralParams>;

    /// Starting coordinates built from per-component marginal fits, with all
    /// cross coordinates at the canonical zero of their link.
    fn starting_theta(&self, marginals: &[MarginalParams]) -> DVector<f64>;

    /// One name per θ coordinate, in layout order.
    fn coordinate_names(&self, p: usize) -> Vec<String>;

    /// Family-specific validity residuals, appended to the generic checks by
    /// [`validate`].
    fn family_checks(&self, _params: &StructuralParams) -> Vec<DiagnosticCheck> {
        Vec::new()
    }
}

pub const MODEL_FAMILY_NAMES: [&str; 5] = [
    "independent",
    "parsimonious",
    "flexible-a",
    "flexible-e",
    "unconstrained",
];

/// Looks a family up by registry name.
pub fn model_family(name: &str, zero_cross_nugget: bool) -> Result<Box<dyn ModelFamily>> {
    match name {
        "independent" => Ok(Box::new(Independent)),
        "parsimonious" => Ok(Box::new(Parsimonious { zero_cross_nugget })),
        "flexible-a" => Ok(Box::new(Flexible {
            extended: false,
            zero_cross_nugget,
        })),
        "flexible-e" => Ok(Box::new(Flexible {
            extended: true,
            zero_cross_nugget,
        })),
        "unconstrained" => Ok(Box::new(Unconstrained { zero_cross_nugget })),
        _ => Err(Error::UnknownStrategy {
            kind: "model family",
            name: name.to_string(),
            available: MODEL_FAMILY_NAMES.join(", "),
        }),
    }
}

/// Central finite-difference Jacobian of the expansion map, as a
/// (4·p(p+1)/2) × len(θ) matrix over the flattened structural parameters
/// (see [`StructuralParams::flatten`]). Step 1e-6 per coordinate.
pub fn expansion_jacobian(
    family: &dyn ModelFamily,
    theta: &[f64],
    p: usize,
    d: usize,
) -> Result<DMatrix<f64>> {
    const STEP: f64 = 1e-6;
    let q = theta.len();
    let mut jac = DMatrix::zeros(StructuralParams::flat_len(p), q);
    let mut work = theta.to_vec();
    for j in 0..q {
        work[j] = theta[j] + STEP;
        let plus = family.expand(&work, p, d)?.flatten();
        work[j] = theta[j] - STEP;
        let minus = family.expand(&work, p, d)?.flatten();
        work[j] = theta[j];
        jac.set_column(j, &((plus - minus) / (2.0 * STEP)));
    }
    Ok(jac)
}

/// Generic validity diagnostics plus the family's own condition residuals.
pub fn validate(params: &StructuralParams, family: &dyn ModelFamily) -> Diagnostics {
    let p = params.p;
    let mut checks = Vec::new();
    let alpha_min = (0..p)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| params.alpha[(i, j)])
        .fold(f64::INFINITY, f64::min);
    checks.push(DiagnosticCheck::new(
        "alpha_positive",
        alpha_min > 0.0,
        alpha_min,
    ));
    let nu_min = (0..p)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| params.nu[(i, j)])
        .fold(f64::INFINITY, f64::min);
    checks.push(DiagnosticCheck::new("nu_positive", nu_min > 0.0, nu_min));
    let mut rho_max: f64 = 0.0;
    for i in 0..p {
        for j in 0..i {
            rho_max = rho_max.max(params.rho(i, j).abs());
        }
    }
    checks.push(DiagnosticCheck::new(
        "rho_within_unit",
        rho_max <= 1.0 + 1e-12,
        rho_max,
    ));
    // σ and τ must be valid (co)variance matrices: PSD, with a relative
    // tolerance so exact boundary configurations (coincident spherical
    // angles) are not rejected for roundoff.
    for (name, matrix) in [
        ("sigma_positive_semidefinite", &params.sigma),
        ("tau_positive_semidefinite", &params.tau),
    ] {
        let min_eig = min_eigenvalue(matrix);
        let scale = matrix.diagonal().amax().max(1e-300);
        checks.push(DiagnosticCheck::new(name, min_eig >= -1e-10 * scale, min_eig));
    }
    checks.extend(family.family_checks(params));
    Diagnostics { checks }
}

/// A cursor over θ used by the expand implementations; lengths are verified
/// up front against `param_count`.
struct Blocks<'a> {
    theta: &'a [f64],
    pos: usize,
}

impl<'a> Blocks<'a> {
    fn new(theta: &'a [f64]) -> Self {
        Blocks { theta, pos: 0 }
    }

    fn take(&mut self, n: usize) -> &'a [f64] {
        let s = &self.theta[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn take1(&mut self) -> f64 {
        let v = self.theta[self.pos];
        self.pos += 1;
        v
    }
}

fn check_len(family: &'static str, p: usize, expected: usize, got: usize) -> Result<()> {
    if got != expected {
        return Err(Error::ThetaLength {
            family,
            p,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_p(op: &'static str, p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::domain(op, "p must be >= 1"));
    }
    Ok(())
}

/// Errors with the first non-finite structural entry, for the optimizer to
/// treat an exploding trial step as "not improved".
fn ensure_finite(params: StructuralParams) -> Result<StructuralParams> {
    if params.all_finite() {
        return Ok(params);
    }
    for (name, m) in [
        ("sigma", &params.sigma),
        ("alpha", &params.alpha),
        ("nu", &params.nu),
        ("tau", &params.tau),
    ] {
        for i in 0..params.p {
            for j in 0..params.p {
                if !m[(i, j)].is_finite() {
                    return Err(Error::NonFiniteParams {
                        coordinate: format!("{name}[{i},{j}]"),
                    });
                }
            }
        }
    }
    Err(Error::NonFiniteParams {
        coordinate: "mu".to_string(),
    })
}

fn fill_symmetric(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] = v;
    m[(j, i)] = v;
}

/// Cross range from the average-inverse-square rule shared by several
/// families: α_ij = [(α_ii⁻² + α_jj⁻²)/2]^{−1/2}.
fn mean_inverse_square_range(a_ii: f64, a_jj: f64) -> f64 {
    (0.5 * (a_ii.powi(-2) + a_jj.powi(-2))).powf(-0.5)
}

/// Nugget matrix from marginal log-nuggets and an S correlation (identity
/// when the cross nugget is pinned to zero).
fn nugget_from_correlation(tau_diag: &[f64], s: &DMatrix<f64>) -> DMatrix<f64> {
    let p = tau_diag.len();
    DMatrix::from_fn(p, p, |i, j| (tau_diag[i] * tau_diag[j]).sqrt() * s[(i, j)])
}

fn arctan_correlation(link: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * link.atan()
}

fn cross_names(block: &str, p: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(cross_len(p));
    for i in 1..p {
        for j in 0..i {
            names.push(format!("{block}_{}_{}", i + 1, j + 1));
        }
    }
    names
}

fn tri_names(block: &str, p: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(tri_len(p));
    for i in 0..p {
        for j in 0..=i {
            names.push(format!("{block}_{}_{}", i + 1, j + 1));
        }
    }
    names
}

fn diag_names(block: &str, p: usize) -> Vec<String> {
    (0..p).map(|i| format!("{block}_{}", i + 1)).collect()
}

// ---------------------------------------------------------------------------
// Independent
// ---------------------------------------------------------------------------

/// Per-component marginal Matérn models with all cross covariances and cross
/// nuggets fixed at zero.
///
/// Layout: [ln σ_ii ×p | ln α_ii ×p | ln ν_ii ×p | ln τ_ii ×p].
pub struct Independent;

impl ModelFamily for Independent {
    fn name(&self) -> &'static str {
        "independent"
    }

    fn zero_cross_nugget(&self) -> bool {
        true
    }

    fn has_cross_nugget(&self) -> bool {
        false
    }

    fn param_count(&self, p: usize) -> Result<usize> {
        check_p("param_count", p)?;
        Ok(4 * p)
    }

    fn expand(&self, theta: &[f64], p: usize, d: usize) -> Result<StructuralParams> {
        check_len(self.name(), p, self.param_count(p)?, theta.len())?;
        let mut b = Blocks::new(theta);
        let sig: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let alp: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let nu: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let tau: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let mut params = StructuralParams::zeros(p, d);
        for i in 0..p {
            for j in 0..=i {
                if i == j {
                    params.sigma[(i, i)] = sig[i];
                    params.alpha[(i, i)] = alp[i];
                    params.nu[(i, i)] = nu[i];
                    params.tau[(i, i)] = tau[i];
                } else {
                    // Cross slots never enter the likelihood (σ_ij = τ_ij = 0)
                    // but must stay in-domain for the kernel.
                    fill_symmetric(&mut params.alpha, i, j, mean_inverse_square_range(alp[i], alp[j]));
                    fill_symmetric(&mut params.nu, i, j, 0.5 * (nu[i] + nu[j]));
                }
            }
        }
        ensure_finite(params)
    }

    fn starting_theta(&self, marginals: &[MarginalParams]) -> DVector<f64> {
        let p = marginals.len();
        let mut theta = Vec::with_capacity(4 * p);
        theta.extend(marginals.iter().map(|m| m.sigma.ln()));
        theta.extend(marginals.iter().map(|m| m.alpha.ln()));
        theta.extend(marginals.iter().map(|m| m.nu.ln()));
        theta.extend(marginals.iter().map(|m| m.tau.ln()));
        DVector::from_vec(theta)
    }

    fn coordinate_names(&self, p: usize) -> Vec<String> {
        let mut names = diag_names("ln_sigma", p);
        names.extend(diag_names("ln_alpha", p));
        names.extend(diag_names("ln_nu", p));
        names.extend(diag_names("ln_tau", p));
        names
    }

    fn family_checks(&self, params: &StructuralParams) -> Vec<DiagnosticCheck> {
        let p = params.p;
        let mut cross_max: f64 = 0.0;
        for i in 0..p {
            for j in 0..i {
                cross_max = cross_max
                    .max(params.sigma[(i, j)].abs())
                    .max(params.tau[(i, j)].abs());
            }
        }
        vec![DiagnosticCheck::new(
            "cross_terms_zero",
            cross_max == 0.0,
            cross_max,
        )]
    }
}

// ---------------------------------------------------------------------------
// Parsimonious
// ---------------------------------------------------------------------------

/// Common range, averaged smoothnesses, and the Γ-ratio bound on co-located
/// correlations.
///
/// Layout: [ln σ_ii ×p | V angles ×p(p−1)/2 | ln α ×1 | ln ν_ii ×p |
/// ln τ_ii ×p | S angles ×p(p−1)/2 (dropped when the cross nugget is
/// pinned)].
pub struct Parsimonious {
    pub zero_cross_nugget: bool,
}

impl ModelFamily for Parsimonious {
    fn name(&self) -> &'static str {
        "parsimonious"
    }

    fn zero_cross_nugget(&self) -> bool {
        self.zero_cross_nugget
    }

    fn param_count(&self, p: usize) -> Result<usize> {
        check_p("param_count", p)?;
        let c = cross_len(p);
        Ok(3 * p + 1 + c + if self.zero_cross_nugget { 0 } else { c })
    }

    fn expand(&self, theta: &[f64], p: usize, d: usize) -> Result<StructuralParams> {
        check_len(self.name(), p, self.param_count(p)?, theta.len())?;
        let c = cross_len(p);
        let mut b = Blocks::new(theta);
        let sig: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let v = corr_from_unconstrained(b.take(c), p, false)?;
        let alpha = b.take1().exp();
        let nu: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let tau: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let s = if self.zero_cross_nugget {
            DMatrix::identity(p, p)
        } else {
            corr_from_unconstrained(b.take(c), p, false)?
        };
        let mut params = StructuralParams::zeros(p, d);
        params.tau = nugget_from_correlation(&tau, &s);
        for i in 0..p {
            for j in 0..=i {
                fill_symmetric(&mut params.alpha, i, j, alpha);
                fill_symmetric(&mut params.nu, i, j, 0.5 * (nu[i] + nu[j]));
                let rho = v[(i, j)] * rho_bound(nu[i], nu[j], d)?;
                fill_symmetric(&mut params.sigma, i, j, (sig[i] * sig[j]).sqrt() * rho);
            }
        }
        ensure_finite(params)
    }

    fn starting_theta(&self, marginals: &[MarginalParams]) -> DVector<f64> {
        let p = marginals.len();
        let c = cross_len(p);
        let mut theta = Vec::with_capacity(self.param_count(p).unwrap_or(0));
        theta.extend(marginals.iter().map(|m| m.sigma.ln()));
        theta.extend(std::iter::repeat(0.0).take(c));
        // Common range: geometric mean of the marginal ranges.
        theta.push(marginals.iter().map(|m| m.alpha.ln()).sum::<f64>() / p as f64);
        theta.extend(marginals.iter().map(|m| m.nu.ln()));
        theta.extend(marginals.iter().map(|m| m.tau.ln()));
        if !self.zero_cross_nugget {
            theta.extend(std::iter::repeat(0.0).take(c));
        }
        DVector::from_vec(theta)
    }

    fn coordinate_names(&self, p: usize) -> Vec<String> {
        let mut names = diag_names("ln_sigma", p);
        names.extend(cross_names("v_angle", p));
        names.push("ln_alpha".to_string());
        names.extend(diag_names("ln_nu", p));
        names.extend(diag_names("ln_tau", p));
        if !self.zero_cross_nugget {
            names.extend(cross_names("s_angle", p));
        }
        names
    }

    fn family_checks(&self, params: &StructuralParams) -> Vec<DiagnosticCheck> {
        let p = params.p;
        let alpha = params.alpha[(0, 0)];
        let mut alpha_res: f64 = 0.0;
        let mut nu_res: f64 = 0.0;
        let mut bound_excess = f64::NEG_INFINITY;
        for i in 0..p {
            for j in 0..=i {
                alpha_res = alpha_res.max((params.alpha[(i, j)] - alpha).abs());
                let mean = 0.5 * (params.nu[(i, i)] + params.nu[(j, j)]);
                nu_res = nu_res.max((params.nu[(i, j)] - mean).abs());
                if i != j {
                    let bound = rho_bound(params.nu[(i, i)], params.nu[(j, j)], params.d)
                        .unwrap_or(f64::NAN);
                    bound_excess = bound_excess.max(params.rho(i, j).abs() - bound);
                }
            }
        }
        let mut checks = vec![
            DiagnosticCheck::new("common_range", alpha_res <= 1e-12, alpha_res),
            DiagnosticCheck::new("nu_is_marginal_mean", nu_res <= 1e-12, nu_res),
        ];
        if p > 1 {
            checks.push(DiagnosticCheck::new(
                "rho_within_gamma_bound",
                bound_excess <= 1e-12,
                bound_excess,
            ));
        }
        checks
    }
}

// ---------------------------------------------------------------------------
// Flexible-A and Flexible-E
// ---------------------------------------------------------------------------

/// The two flexible parameterizations: smoothnesses ν_ij = ν̄_ij + Δ_A(1−A_ij)
/// and inverse-square ranges α_ij⁻² = (α_ii⁻²+α_jj⁻²)/2 + Δ_B(1−B_ij), with
/// the σ scaling factor u_ij depending on the variant. The extended variant
/// adds β > 0: the range rule gains + β(ν_ij − ν̄_ij) and
/// u_ij = α_ij^{2ν_ij} β^{ν_ij} e^{ν_ij} Γ(ν_ij) replaces
/// u_ij = α_ij^{2Δ_A+ν_ii+ν_jj} Γ(ν_ij) Γ(ν̄_ij + d/2)/Γ(ν_ij + d/2).
///
/// Layout: [ln σ_ii ×p | V angles ×c | ln α_ii ×p | ln ν_ii ×p | ln Δ_A ×1 |
/// A angles ×c′ | ln Δ_B ×1 | B angles ×c′ | (ln β ×1 when extended) |
/// ln τ_ii ×p | S angles ×c (dropped when the cross nugget is pinned)],
/// where c = p(p−1)/2 and c′ = c for p ≥ 3. For p = 2 the A and B matrices
/// are redundant with Δ_A and Δ_B, so their angle blocks are dropped
/// (A_12 = B_12 = 0).
pub struct Flexible {
    pub extended: bool,
    pub zero_cross_nugget: bool,
}

impl Flexible {
    fn angle_len(&self, p: usize) -> usize {
        if p >= 3 {
            cross_len(p)
        } else {
            0
        }
    }

    /// A or B: identity-plus-zeros at p ≤ 2, positive correlation otherwise.
    fn positive_corr(&self, z: &[f64], p: usize) -> Result<DMatrix<f64>> {
        if p >= 3 {
            corr_from_unconstrained(z, p, true)
        } else {
            Ok(DMatrix::identity(p, p))
        }
    }
}

impl ModelFamily for Flexible {
    fn name(&self) -> &'static str {
        if self.extended {
            "flexible-e"
        } else {
            "flexible-a"
        }
    }

    fn zero_cross_nugget(&self) -> bool {
        self.zero_cross_nugget
    }

    fn param_count(&self, p: usize) -> Result<usize> {
        check_p("param_count", p)?;
        let c = cross_len(p);
        let mut q = 4 * p + c + 2 + 2 * self.angle_len(p);
        if self.extended {
            q += 1;
        }
        if !self.zero_cross_nugget {
            q += c;
        }
        Ok(q)
    }

    fn expand(&self, theta: &[f64], p: usize, d: usize) -> Result<StructuralParams> {
        check_len(self.name(), p, self.param_count(p)?, theta.len())?;
        let c = cross_len(p);
        let ac = self.angle_len(p);
        let mut b = Blocks::new(theta);
        let sig: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let v = corr_from_unconstrained(b.take(c), p, false)?;
        let alp: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let nu: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let delta_a = b.take1().exp();
        let a = self.positive_corr(b.take(ac), p)?;
        let delta_b = b.take1().exp();
        let bm = self.positive_corr(b.take(ac), p)?;
        let beta = if self.extended { b.take1().exp() } else { 1.0 };
        let tau: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let s = if self.zero_cross_nugget {
            DMatrix::identity(p, p)
        } else {
            corr_from_unconstrained(b.take(c), p, false)?
        };

        let half_d = d as f64 / 2.0;
        let mut params = StructuralParams::zeros(p, d);
        params.tau = nugget_from_correlation(&tau, &s);
        // Smoothness and range matrices first, then the u-scalings in log
        // space, then σ.
        for i in 0..p {
            for j in 0..=i {
                let mean = 0.5 * (nu[i] + nu[j]);
                let nu_ij = if i == j {
                    nu[i]
                } else {
                    mean + delta_a * (1.0 - a[(i, j)])
                };
                fill_symmetric(&mut params.nu, i, j, nu_ij);
                let mut inv_sq = 0.5 * (alp[i].powi(-2) + alp[j].powi(-2));
                if i != j {
                    inv_sq += delta_b * (1.0 - bm[(i, j)]);
                    if self.extended {
                        inv_sq += beta * (nu_ij - mean);
                    }
                }
                fill_symmetric(&mut params.alpha, i, j, inv_sq.powf(-0.5));
            }
        }
        let mut ln_u = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let nu_ij = params.nu[(i, j)];
                let a_ij = params.alpha[(i, j)];
                let lu = if self.extended {
                    2.0 * nu_ij * a_ij.ln() + nu_ij * beta.ln() + nu_ij + log_gamma(nu_ij)?
                } else {
                    let mean = 0.5 * (nu[i] + nu[j]);
                    (2.0 * delta_a + nu[i] + nu[j]) * a_ij.ln() + log_gamma(nu_ij)?
                        + log_gamma(mean + half_d)?
                        - log_gamma(nu_ij + half_d)?
                };
                fill_symmetric(&mut ln_u, i, j, lu);
            }
        }
        for i in 0..p {
            for j in 0..=i {
                let scale = (ln_u[(i, j)] - 0.5 * (ln_u[(i, i)] + ln_u[(j, j)])).exp();
                let sigma_ij = (sig[i] * sig[j]).sqrt() * v[(i, j)] * scale;
                fill_symmetric(&mut params.sigma, i, j, sigma_ij);
            }
        }
        ensure_finite(params)
    }

    fn starting_theta(&self, marginals: &[MarginalParams]) -> DVector<f64> {
        let p = marginals.len();
        let c = cross_len(p);
        let ac = self.angle_len(p);
        let small_delta = 0.1f64.ln();
        let mut theta = Vec::with_capacity(self.param_count(p).unwrap_or(0));
        theta.extend(marginals.iter().map(|m| m.sigma.ln()));
        theta.extend(std::iter::repeat(0.0).take(c));
        theta.extend(marginals.iter().map(|m| m.alpha.ln()));
        theta.extend(marginals.iter().map(|m| m.nu.ln()));
        theta.push(small_delta);
        theta.extend(std::iter::repeat(0.0).take(ac));
        theta.push(small_delta);
        theta.extend(std::iter::repeat(0.0).take(ac));
        if self.extended {
            theta.push(0.0);
        }
        theta.extend(marginals.iter().map(|m| m.tau.ln()));
        if !self.zero_cross_nugget {
            theta.extend(std::iter::repeat(0.0).take(c));
        }
        DVector::from_vec(theta)
    }

    fn coordinate_names(&self, p: usize) -> Vec<String> {
        let mut names = diag_names("ln_sigma", p);
        names.extend(cross_names("v_angle", p));
        names.extend(diag_names("ln_alpha", p));
        names.extend(diag_names("ln_nu", p));
        names.push("ln_delta_a".to_string());
        if p >= 3 {
            names.extend(cross_names("a_angle", p));
        }
        names.push("ln_delta_b".to_string());
        if p >= 3 {
            names.extend(cross_names("b_angle", p));
        }
        if self.extended {
            names.push("ln_beta".to_string());
        }
        names.extend(diag_names("ln_tau", p));
        if !self.zero_cross_nugget {
            names.extend(cross_names("s_angle", p));
        }
        names
    }

    fn family_checks(&self, params: &StructuralParams) -> Vec<DiagnosticCheck> {
        let p = params.p;
        let inv_sq = DMatrix::from_fn(p, p, |i, j| params.alpha[(i, j)].powi(-2));
        let alpha_eig = centered_max_eigenvalue(&inv_sq);
        let nu_eig = centered_max_eigenvalue(&params.nu);
        vec![
            DiagnosticCheck::new(
                "inverse_square_range_cnsd",
                alpha_eig <= 1e-10,
                alpha_eig,
            ),
            DiagnosticCheck::new("nu_cnsd", nu_eig <= 1e-10, nu_eig),
        ]
    }
}

// ---------------------------------------------------------------------------
// Unconstrained
// ---------------------------------------------------------------------------

/// Free parameterization: log links on every positive parameter (marginal σ
/// and τ, all α_ij, all ν_ij) and arctan links on the cross correlations,
/// σ_ij = √(σ_ii σ_jj)·(2/π)·arctan(s_ij) and likewise τ_ij with t_ij.
///
/// Layout: [ln σ_ii ×p | s_ij ×p(p−1)/2 | ln α_ij ×p(p+1)/2 |
/// ln ν_ij ×p(p+1)/2 | ln τ_ii ×p | t_ij ×p(p−1)/2 (dropped when the cross
/// nugget is pinned)].
pub struct Unconstrained {
    pub zero_cross_nugget: bool,
}

impl ModelFamily for Unconstrained {
    fn name(&self) -> &'static str {
        "unconstrained"
    }

    fn zero_cross_nugget(&self) -> bool {
        self.zero_cross_nugget
    }

    fn param_count(&self, p: usize) -> Result<usize> {
        check_p("param_count", p)?;
        // 2p(p+1) in full; the pinned variant drops the t block.
        let c = cross_len(p);
        Ok(2 * p * (p + 1) - if self.zero_cross_nugget { c } else { 0 })
    }

    fn expand(&self, theta: &[f64], p: usize, d: usize) -> Result<StructuralParams> {
        check_len(self.name(), p, self.param_count(p)?, theta.len())?;
        let c = cross_len(p);
        let t = tri_len(p);
        let mut b = Blocks::new(theta);
        let sig: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let s_link = b.take(c);
        let alp = b.take(t);
        let nu = b.take(t);
        let tau: Vec<f64> = b.take(p).iter().map(|v| v.exp()).collect();
        let t_link = if self.zero_cross_nugget {
            None
        } else {
            Some(b.take(c))
        };
        let mut params = StructuralParams::zeros(p, d);
        for i in 0..p {
            for j in 0..=i {
                let k = crate::params::tri_index(i, j);
                fill_symmetric(&mut params.alpha, i, j, alp[k].exp());
                fill_symmetric(&mut params.nu, i, j, nu[k].exp());
                let (sigma_ij, tau_ij) = if i == j {
                    (sig[i], tau[i])
                } else {
                    let rho = arctan_correlation(s_link[cross_index(i, j)]);
                    let nug = t_link.map_or(0.0, |tl| {
                        arctan_correlation(tl[cross_index(i, j)]) * (tau[i] * tau[j]).sqrt()
                    });
                    ((sig[i] * sig[j]).sqrt() * rho, nug)
                };
                fill_symmetric(&mut params.sigma, i, j, sigma_ij);
                fill_symmetric(&mut params.tau, i, j, tau_ij);
            }
        }
        ensure_finite(params)
    }

    fn starting_theta(&self, marginals: &[MarginalParams]) -> DVector<f64> {
        let p = marginals.len();
        let c = cross_len(p);
        let mut theta = Vec::with_capacity(self.param_count(p).unwrap_or(0));
        theta.extend(marginals.iter().map(|m| m.sigma.ln()));
        theta.extend(std::iter::repeat(0.0).take(c));
        for i in 0..p {
            for j in 0..=i {
                theta.push(0.5 * (marginals[i].alpha.ln() + marginals[j].alpha.ln()));
            }
        }
        for i in 0..p {
            for j in 0..=i {
                theta.push(0.5 * (marginals[i].nu.ln() + marginals[j].nu.ln()));
            }
        }
        theta.extend(marginals.iter().map(|m| m.tau.ln()));
        if !self.zero_cross_nugget {
            theta.extend(std::iter::repeat(0.0).take(c));
        }
        DVector::from_vec(theta)
    }

    fn coordinate_names(&self, p: usize) -> Vec<String> {
        let mut names = diag_names("ln_sigma", p);
        names.extend(cross_names("s_link", p));
        names.extend(tri_names("ln_alpha", p));
        names.extend(tri_names("ln_nu", p));
        names.extend(diag_names("ln_tau", p));
        if !self.zero_cross_nugget {
            names.extend(cross_names("t_link", p));
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_names_match_param_counts() {
        for name in MODEL_FAMILY_NAMES {
            for zcn in [false, true] {
                let family = model_family(name, zcn).unwrap();
                for p in 1..=4 {
                    assert_eq!(
                        family.coordinate_names(p).len(),
                        family.param_count(p).unwrap(),
                        "{name} zcn={zcn} p={p}"
                    );
                }
            }
        }
    }
}
