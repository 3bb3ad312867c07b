//! Dense reference computations: the exact joint loglikelihood, exact
//! simulation, and finite-difference gradients. These are deliberately
//! simple O(n³) routines used to validate the blockwise approximation and
//! analytic derivatives, and to generate test data.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::build_covariance;
use crate::data::{Observation, SpatialDataset};
use crate::error::{Error, Result};
use crate::params::StructuralParams;

const LN_2PI: f64 = 1.8378770664093453;

/// Largest dataset the dense routines accept.
pub const DENSE_CAP: usize = 3000;

fn observations(dataset: &SpatialDataset) -> Vec<Observation> {
    (0..dataset.len())
        .map(|i| Observation::new(dataset.location(i).to_vec(), dataset.component(i)))
        .collect()
}

fn dense_cholesky(points: &[Observation], params: &StructuralParams) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let block = build_covariance(points, params)?;
    let matrix = block.matrix;
    match Cholesky::new(matrix.clone()) {
        Some(chol) => Ok(chol),
        None => {
            let smallest = matrix.symmetric_eigenvalues().min();
            Err(Error::domain(
                "dense_cholesky",
                format!("covariance matrix is not positive definite (smallest eigenvalue {smallest:.6e})"),
            ))
        }
    }
}

/// Exact joint Gaussian loglikelihood of a dataset under structural
/// parameters, with per-component means taken from `params.mu`.
pub fn exact_loglik(dataset: &SpatialDataset, params: &StructuralParams) -> Result<f64> {
    let n = dataset.len();
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DENSE_CAP });
    }
    let chol = dense_cholesky(&observations(dataset), params)?;
    let mut z = DVector::from_iterator(
        n,
        (0..n).map(|i| dataset.response(i) - params.mu[dataset.component(i)]),
    );
    if !chol.l_dirty().solve_lower_triangular_mut(&mut z) {
        return Err(Error::NotPositiveDefinite { block: None });
    }
    let logdet: f64 = (0..n).map(|i| 2.0 * chol.l_dirty()[(i, i)].ln()).sum();
    Ok(-0.5 * (n as f64 * LN_2PI + logdet + z.norm_squared()))
}

/// Draws one exact realization y = μ + Lε of the field at the given
/// locations and component labels, ε standard normal.
pub fn simulate(
    locations: Vec<Vec<f64>>,
    components: Vec<usize>,
    params: &StructuralParams,
    seed: u64,
) -> Result<SpatialDataset> {
    let n = locations.len();
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DENSE_CAP });
    }
    if components.len() != n {
        return Err(Error::domain(
            "simulate",
            "locations and components must have equal length",
        ));
    }
    let points: Vec<Observation> = locations
        .iter()
        .zip(&components)
        .map(|(loc, &c)| Observation::new(loc.clone(), c))
        .collect();
    let chol = dense_cholesky(&points, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = DVector::from_iterator(
        n,
        (0..n).map(|_| StandardNormal.sample(&mut rng)),
    );
    let noise = chol.l_dirty().lower_triangle() * eps;
    let responses: Vec<f64> = components
        .iter()
        .zip(noise.iter())
        .map(|(&c, e)| params.mu[c] + e)
        .collect();
    SpatialDataset::from_parts(locations, components, responses)
}

/// Central finite-difference gradient of a scalar function of θ.
pub fn fd_gradient<F>(f: F, theta: &[f64], step: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut grad = DVector::zeros(theta.len());
    let mut work = theta.to_vec();
    for j in 0..theta.len() {
        let base = theta[j];
        work[j] = base + step;
        let up = f(&work)?;
        work[j] = base - step;
        let down = f(&work)?;
        work[j] = base;
        grad[j] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// Dense Fisher information for a parameterized model:
/// 𝓘_jl = ½ tr(Σ⁻¹ ∂_jΣ Σ⁻¹ ∂_lΣ).
pub fn exact_fisher(
    dataset: &SpatialDataset,
    derivatives: &[DMatrix<f64>],
    params: &StructuralParams,
) -> Result<DMatrix<f64>> {
    let n = dataset.len();
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded { n, cap: DENSE_CAP });
    }
    let chol = dense_cholesky(&observations(dataset), params)?;
    let q = derivatives.len();
    // S_j = Σ⁻¹ ∂_jΣ
    let scaled: Vec<DMatrix<f64>> = derivatives.iter().map(|d| chol.solve(d)).collect();
    let mut fisher = DMatrix::zeros(q, q);
    for j in 0..q {
        for l in 0..=j {
            let v = 0.5 * (&scaled[j] * &scaled[l]).trace();
            fisher[(j, l)] = v;
            fisher[(l, j)] = v;
        }
    }
    Ok(fisher)
}
