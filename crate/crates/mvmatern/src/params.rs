//! Structural parameters of the multivariate Matérn model and the shared
//! link-function machinery used by the model families.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::log_gamma;

/// Number of entries in the lower triangle (diagonal included) of a p×p
/// symmetric matrix.
pub fn tri_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Number of strictly-lower-triangle entries of a p×p matrix.
pub fn cross_len(p: usize) -> usize {
    p * (p - 1) / 2
}

/// Index of entry (i, j), i ≥ j, in the row-major lower triangle.
pub fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

/// Index of entry (i, j), i > j, in the row-major strict lower triangle.
pub fn cross_index(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

pub(crate) fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Symmetric p×p matrices of variances σ, ranges α, smoothnesses ν, and
/// nugget covariances τ, plus per-component means μ, for a model over p
/// components in d spatial dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    pub p: usize,
    pub d: usize,
    pub sigma: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub nu: DMatrix<f64>,
    pub tau: DMatrix<f64>,
    pub mu: DVector<f64>,
}

impl StructuralParams {
    /// All-zero parameter set (means zero; matrices zero) as a fill target.
    pub fn zeros(p: usize, d: usize) -> Self {
        StructuralParams {
            p,
            d,
            sigma: DMatrix::zeros(p, p),
            alpha: DMatrix::zeros(p, p),
            nu: DMatrix::zeros(p, p),
            tau: DMatrix::zeros(p, p),
            mu: DVector::zeros(p),
        }
    }

    /// Length of [`Self::flatten`]'s output: the four lower triangles.
    pub fn flat_len(p: usize) -> usize {
        4 * tri_len(p)
    }

    /// Flattens to [σ tri | α tri | ν tri | τ tri], each triangle row-major
    /// with the diagonal. The means are not included (they are profiled, not
    /// part of the covariance-parameter vector).
    pub fn flatten(&self) -> DVector<f64> {
        let t = tri_len(self.p);
        let mut out = DVector::zeros(4 * t);
        for i in 0..self.p {
            for j in 0..=i {
                let k = tri_index(i, j);
                out[k] = self.sigma[(i, j)];
                out[t + k] = self.alpha[(i, j)];
                out[2 * t + k] = self.nu[(i, j)];
                out[3 * t + k] = self.tau[(i, j)];
            }
        }
        out
    }

    /// Co-located correlation ρ_ij = σ_ij / √(σ_ii σ_jj).
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.sigma[(i, j)] / (self.sigma[(i, i)] * self.sigma[(j, j)]).sqrt()
    }

    /// True when every entry of every matrix and the means are finite.
    pub fn all_finite(&self) -> bool {
        self.sigma.iter().all(|v| v.is_finite())
            && self.alpha.iter().all(|v| v.is_finite())
            && self.nu.iter().all(|v| v.is_finite())
            && self.tau.iter().all(|v| v.is_finite())
            && self.mu.iter().all(|v| v.is_finite())
    }
}

/// Builds a correlation matrix from an unconstrained vector through the
/// spherical parameterization of its Cholesky factor.
///
/// Each strict-lower-triangle slot (row-major order) carries an angle
/// φ = π·logistic(z) in general, or φ = (π/2)·logistic(z) when
/// `positive_only` (every entry of the result is then positive, as required
/// of the A and B matrices). z = 0 maps to the identity in the general case
/// and to off-diagonal entries cos(π/4) ≈ 0.7071 in the positive case
/// (p = 2).
pub fn corr_from_unconstrained(z: &[f64], p: usize, positive_only: bool) -> Result<DMatrix<f64>> {
    if z.len() != cross_len(p) {
        return Err(Error::domain(
            "corr_from_unconstrained",
            format!("expected {} coordinates for p={p}, got {}", cross_len(p), z.len()),
        ));
    }
    let scale = if positive_only {
        std::f64::consts::FRAC_PI_2
    } else {
        std::f64::consts::PI
    };
    let mut l = DMatrix::zeros(p, p);
    l[(0, 0)] = 1.0;
    for i in 1..p {
        let mut sin_prod = 1.0;
        for j in 0..i {
            let phi = scale * logistic(z[cross_index(i, j)]);
            l[(i, j)] = phi.cos() * sin_prod;
            sin_prod *= phi.sin();
        }
        l[(i, i)] = sin_prod;
    }
    let mut r = &l * l.transpose();
    for i in 0..p {
        r[(i, i)] = 1.0;
    }
    Ok(r)
}

/// The parsimonious-model bound on the co-located cross correlation:
/// the Γ-ratio from its σ construction, which reduces to
/// √(ν_ii ν_jj) / ((ν_ii + ν_jj)/2) when d = 2.
pub fn rho_bound(nu_ii: f64, nu_jj: f64, d: usize) -> Result<f64> {
    if !(nu_ii > 0.0 && nu_jj > 0.0) {
        return Err(Error::domain("rho_bound", "smoothnesses must be positive"));
    }
    let half_d = d as f64 / 2.0;
    let mean = 0.5 * (nu_ii + nu_jj);
    let ln = 0.5 * (log_gamma(nu_ii + half_d)? - log_gamma(nu_ii)?)
        + 0.5 * (log_gamma(nu_jj + half_d)? - log_gamma(nu_jj)?)
        + log_gamma(mean)?
        - log_gamma(mean + half_d)?;
    Ok(ln.exp())
}

/// One named validity check with the measured residual or indicator value.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticCheck {
    pub name: String,
    pub passed: bool,
    /// Residual magnitude or offending value; 0.0 for clean boolean checks.
    pub value: f64,
}

impl DiagnosticCheck {
    pub fn new(name: impl Into<String>, passed: bool, value: f64) -> Self {
        DiagnosticCheck {
            name: name.into(),
            passed,
            value,
        }
    }
}

/// Report-only validity diagnostics for a structural parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub checks: Vec<DiagnosticCheck>,
}

impl Diagnostics {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&DiagnosticCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Largest eigenvalue of the doubly-centered version of `m`: positive values
/// mean `m` is not conditionally negative semidefinite.
pub(crate) fn centered_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let p = m.nrows();
    let pf = p as f64;
    // H m H with H = I − 11'/p.
    let ones = DMatrix::from_element(p, p, 1.0 / pf);
    let h = DMatrix::identity(p, p) - ones;
    let centered = &h * m * &h;
    let sym = (&centered + centered.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix, for semidefiniteness checks.
pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// JSON document for a parameter set, with the matrix keys `sigma`, `alpha`,
/// `nu`, `tau`, the mean vector `mu`, the family name `model`, and the
/// unconstrained coordinates `theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub model: String,
    pub d: usize,
    pub sigma: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub tau: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let p = rows.len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::domain(what, "matrix rows must be square"));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

impl ParamsDocument {
    pub fn new(model: &str, params: &StructuralParams, theta: &[f64]) -> Self {
        ParamsDocument {
            model: model.to_string(),
            d: params.d,
            sigma: matrix_rows(&params.sigma),
            alpha: matrix_rows(&params.alpha),
            nu: matrix_rows(&params.nu),
            tau: matrix_rows(&params.tau),
            mu: params.mu.iter().cloned().collect(),
            theta: theta.to_vec(),
        }
    }

    pub fn to_structural(&self) -> Result<StructuralParams> {
        let p = self.sigma.len();
        if self.mu.len() != p {
            return Err(Error::domain("ParamsDocument", "mu length must equal p"));
        }
        Ok(StructuralParams {
            p,
            d: self.d,
            sigma: rows_matrix(&self.sigma, "ParamsDocument.sigma")?,
            alpha: rows_matrix(&self.alpha, "ParamsDocument.alpha")?,
            nu: rows_matrix(&self.nu, "ParamsDocument.nu")?,
            tau: rows_matrix(&self.tau, "ParamsDocument.tau")?,
            mu: DVector::from_vec(self.mu.clone()),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
