//! The multivariate Matérn cross-covariance: kernel evaluation, matrix
//! assembly over point sets, and matrix derivatives with respect to an
//! unconstrained parameter vector.
//!
//! Derivatives factor through the structural parameters: analytic partials of
//! each matrix entry with respect to (σ_ij, α_ij, ν_ij, τ_ij), composed with
//! the finite-difference Jacobian of the family's expansion map.

use nalgebra::DMatrix;

use crate::data::{dist2, Observation};
use crate::error::{Error, Result};
use crate::families::{expansion_jacobian, ModelFamily};
use crate::params::{tri_index, tri_len, StructuralParams};
use crate::special::{ln_bessel_k, log_gamma};

const LN_2: f64 = std::f64::consts::LN_2;

/// A covariance matrix over a concrete point set.
#[derive(Debug, Clone)]
pub struct CovarianceBlock {
    pub matrix: DMatrix<f64>,
    pub points: Vec<Observation>,
}

fn check_matern_args(op: &'static str, h: f64, nu: f64, alpha: f64) -> Result<()> {
    if !(h >= 0.0) {
        return Err(Error::domain(op, format!("distance must be >= 0, got {h}")));
    }
    if !(nu > 0.0) {
        return Err(Error::domain(op, format!("nu must be > 0, got {nu}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(op, format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// The Matérn correlation M(h|ν,α) = (h/α)^ν K_ν(h/α) / (2^{ν−1}Γ(ν)),
/// evaluated in log space; M(0) = 1 exactly.
pub fn matern(h: f64, nu: f64, alpha: f64) -> Result<f64> {
    check_matern_args("matern", h, nu, alpha)?;
    if h == 0.0 {
        return Ok(1.0);
    }
    let x = h / alpha;
    if x.is_infinite() {
        return Ok(0.0);
    }
    let ln_m = nu * x.ln() + ln_bessel_k(nu, x)? - (nu - 1.0) * LN_2 - log_gamma(nu)?;
    // Roundoff can push the log a hair above 0 as h → 0.
    Ok(ln_m.min(0.0).exp())
}

/// ∂M/∂α, analytic: d/dx[x^ν K_ν(x)] = −x^ν K_{ν−1}(x) gives
/// ∂M/∂α = x^{ν+1} K_{ν−1}(x) / (2^{ν−1}Γ(ν) α); zero at h = 0.
pub fn matern_dalpha(h: f64, nu: f64, alpha: f64) -> Result<f64> {
    check_matern_args("matern_dalpha", h, nu, alpha)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let x = h / alpha;
    if x.is_infinite() {
        return Ok(0.0);
    }
    let ln_d = (nu + 1.0) * x.ln() + ln_bessel_k(nu - 1.0, x)?
        - (nu - 1.0) * LN_2
        - log_gamma(nu)?
        - alpha.ln();
    Ok(ln_d.exp())
}

/// ∂M/∂ν by central finite difference with absolute step 1e-4 (shrunk near
/// the ν > 0 boundary); zero at h = 0.
pub fn matern_dnu(h: f64, nu: f64, alpha: f64) -> Result<f64> {
    check_matern_args("matern_dnu", h, nu, alpha)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let step = if nu > 2e-4 { 1e-4 } else { nu / 2.0 };
    let plus = matern(h, nu + step, alpha)?;
    let minus = matern(h, nu - step, alpha)?;
    Ok((plus - minus) / (2.0 * step))
}

/// The cross covariance σ_ij M(h|ν_ij,α_ij) + τ_ij·1(h = 0) between two
/// observations; the nugget applies at exactly co-located points, across
/// components as well as within.
pub fn cross_covariance(a: &Observation, b: &Observation, params: &StructuralParams) -> Result<f64> {
    pair_covariance(
        params,
        a.component,
        b.component,
        dist2(&a.location, &b.location),
    )
}

pub(crate) fn pair_covariance(
    params: &StructuralParams,
    i: usize,
    j: usize,
    squared_distance: f64,
) -> Result<f64> {
    let sigma = params.sigma[(i, j)];
    if squared_distance == 0.0 {
        return Ok(sigma + params.tau[(i, j)]);
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let h = squared_distance.sqrt();
    Ok(sigma * matern(h, params.nu[(i, j)], params.alpha[(i, j)])?)
}

/// Assembles the symmetric covariance matrix over a point set.
pub fn build_covariance(points: &[Observation], params: &StructuralParams) -> Result<CovarianceBlock> {
    if points.is_empty() {
        return Err(Error::domain("build_covariance", "empty point list"));
    }
    let n = points.len();
    let mut matrix = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..=k {
            let v = pair_covariance(
                params,
                points[k].component,
                points[l].component,
                dist2(&points[k].location, &points[l].location),
            )?;
            matrix[(k, l)] = v;
            matrix[(l, k)] = v;
        }
    }
    Ok(CovarianceBlock {
        matrix,
        points: points.to_vec(),
    })
}

/// Partial derivatives of one covariance entry with respect to the four
/// structural parameters of its component pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairPartials {
    pub dsigma: f64,
    pub dalpha: f64,
    pub dnu: f64,
    pub dtau: f64,
}

pub(crate) fn pair_partials(
    params: &StructuralParams,
    i: usize,
    j: usize,
    squared_distance: f64,
) -> Result<PairPartials> {
    if squared_distance == 0.0 {
        return Ok(PairPartials {
            dsigma: 1.0,
            dalpha: 0.0,
            dnu: 0.0,
            dtau: 1.0,
        });
    }
    let h = squared_distance.sqrt();
    let sigma = params.sigma[(i, j)];
    let nu = params.nu[(i, j)];
    let alpha = params.alpha[(i, j)];
    Ok(PairPartials {
        dsigma: matern(h, nu, alpha)?,
        dalpha: sigma * matern_dalpha(h, nu, alpha)?,
        dnu: sigma * matern_dnu(h, nu, alpha)?,
        dtau: 0.0,
    })
}

/// Row offsets of the σ, α, ν, τ blocks in the flattened structural layout.
pub(crate) fn structural_offsets(p: usize) -> (usize, usize, usize, usize) {
    let t = tri_len(p);
    (0, t, 2 * t, 3 * t)
}

/// ∂Σ/∂θ_k for every coordinate of θ, as structural entry partials composed
/// with the expansion-map Jacobian.
pub fn build_covariance_derivatives(
    points: &[Observation],
    model: &dyn ModelFamily,
    theta: &[f64],
    p: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if points.is_empty() {
        return Err(Error::domain(
            "build_covariance_derivatives",
            "empty point list",
        ));
    }
    let d = points[0].location.len();
    let params = model.expand(theta, p, d)?;
    let jac = expansion_jacobian(model, theta, p, d)?;
    let (so, ao, no, to) = structural_offsets(p);
    let q = theta.len();
    let n = points.len();
    let mut derivs = vec![DMatrix::zeros(n, n); q];
    for k in 0..n {
        for l in 0..=k {
            let (ci, cj) = (points[k].component, points[l].component);
            let pp = pair_partials(
                &params,
                ci,
                cj,
                dist2(&points[k].location, &points[l].location),
            )?;
            let tri = tri_index(ci.max(cj), ci.min(cj));
            for m in 0..q {
                let v = pp.dsigma * jac[(so + tri, m)]
                    + pp.dalpha * jac[(ao + tri, m)]
                    + pp.dnu * jac[(no + tri, m)]
                    + pp.dtau * jac[(to + tri, m)];
                derivs[m][(k, l)] = v;
                derivs[m][(l, k)] = v;
            }
        }
    }
    Ok(derivs)
}
