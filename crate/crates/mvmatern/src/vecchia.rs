//! The blockwise likelihood approximation: plans (ordering + conditioning
//! sets), the approximate loglikelihood, its gradient and Fisher
//! information, and profiled per-component means.
//!
//! Each ordered observation contributes the conditional log density of
//! itself given its conditioning set, computed as the difference of two
//! joint Gaussian logliks over u = g(k) ∪ {k} and v = g(k). Factoring Σ_u
//! once with the new observation last also factors Σ_v (the leading block of
//! the factor), so every u-minus-v difference reduces to expressions in the
//! last row of L⁻¹-transformed quantities:
//!
//!   ℓ difference        = −½(ln 2π + 2 ln L_qq + z_q²),
//!   trace difference    = A_j[q,q],
//!   quadratic difference= z_q (2 aⱼ·z − z_q A_j[q,q]),
//!   Fisher difference   = ½(2 aⱼ·a_l − aⱼ[q] a_l[q]),
//!
//! with z = L⁻¹(y_u − μ), A_j = L⁻¹ ∂_jΣ_u L⁻ᵀ, and aⱼ its last row. Means
//! are profiled by weighted least squares over the scaled conditional
//! residuals, which are linear in μ, so value evaluations stay single-pass.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::covariance::{pair_covariance, pair_partials, structural_offsets};
use crate::data::{dist2, SpatialDataset};
use crate::error::{Error, Result};
use crate::families::{expansion_jacobian, ModelFamily};
use crate::neighbors::neighbor_rule;
use crate::ordering::ordering_scheme;
use crate::params::{tri_index, StructuralParams};

const LN_2PI: f64 = 1.8378770664093453;

/// An ordering and its conditioning sets: everything the likelihood needs
/// besides parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VecchiaPlan {
    /// permutation[k] = dataset index placed at position k.
    pub permutation: Vec<usize>,
    /// cond_sets[k] ⊆ {0..k−1}: positions (not dataset indices) of the
    /// conditioning set, sorted ascending.
    pub cond_sets: Vec<Vec<usize>>,
    /// Neighbor budget.
    pub m: usize,
    /// Ordering scheme registry name.
    pub ordering: String,
    /// Neighbor rule registry name.
    pub neighbor_rule: String,
    /// Seed the ordering was drawn with.
    pub seed: u64,
}

impl VecchiaPlan {
    /// Orders the dataset and selects conditioning sets by strategy name.
    pub fn build(
        dataset: &SpatialDataset,
        ordering: &str,
        rule: &str,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let scheme = ordering_scheme(ordering)?;
        let rule_impl = neighbor_rule(rule)?;
        let permutation = scheme.order(dataset, seed);
        let cond_sets = rule_impl.select(dataset, &permutation, m);
        Ok(VecchiaPlan {
            permutation,
            cond_sets,
            m,
            ordering: ordering.to_string(),
            neighbor_rule: rule.to_string(),
            seed,
        })
    }

    /// A plan whose every conditioning set holds all prior observations;
    /// the approximation is then exact.
    pub fn full_conditioning(dataset: &SpatialDataset, ordering: &str, seed: u64) -> Result<Self> {
        let n = dataset.len();
        VecchiaPlan::build(dataset, ordering, "any", n.saturating_sub(1), seed)
    }

    /// Structural consistency with a dataset.
    pub fn check(&self, dataset: &SpatialDataset) -> Result<()> {
        let n = dataset.len();
        if self.permutation.len() != n || self.cond_sets.len() != n {
            return Err(Error::domain(
                "VecchiaPlan::check",
                format!("plan built for n={}, dataset has n={n}", self.permutation.len()),
            ));
        }
        let mut seen = vec![false; n];
        for &i in &self.permutation {
            if i >= n || seen[i] {
                return Err(Error::domain(
                    "VecchiaPlan::check",
                    "permutation is not a bijection on 0..n",
                ));
            }
            seen[i] = true;
        }
        for (k, set) in self.cond_sets.iter().enumerate() {
            if set.len() > self.m.min(k) || set.iter().any(|&pos| pos >= k) {
                return Err(Error::domain(
                    "VecchiaPlan::check",
                    format!("conditioning set at position {k} is invalid"),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A likelihood evaluation: value, optional derivatives, profiled means.
#[derive(Debug, Clone)]
pub struct LikelihoodBundle {
    pub loglik: f64,
    pub gradient: Option<DVector<f64>>,
    pub fisher: Option<DMatrix<f64>>,
    pub profiled_mu: DVector<f64>,
}

/// Rows of one conditioning block: dataset indices of g(k) in position
/// order, then the target observation last.
fn block_rows(plan: &VecchiaPlan, k: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = plan.cond_sets[k]
        .iter()
        .map(|&pos| plan.permutation[pos])
        .collect();
    rows.push(plan.permutation[k]);
    rows
}

fn assemble_covariance(
    dataset: &SpatialDataset,
    params: &StructuralParams,
    rows: &[usize],
) -> Result<DMatrix<f64>> {
    let q = rows.len();
    let mut sigma = DMatrix::zeros(q, q);
    for r in 0..q {
        for c in 0..=r {
            let v = pair_covariance(
                params,
                dataset.component(rows[r]),
                dataset.component(rows[c]),
                dist2(dataset.location(rows[r]), dataset.location(rows[c])),
            )?;
            sigma[(r, c)] = v;
            sigma[(c, r)] = v;
        }
    }
    Ok(sigma)
}

fn cholesky_or_block_error(sigma: DMatrix<f64>, k: usize) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(sigma).ok_or(Error::NotPositiveDefinite { block: Some(k) })
}

struct ProfilePass {
    mu: DVector<f64>,
    loglik: f64,
}

/// One sweep over all blocks: accumulates the weighted-least-squares normal
/// equations for μ from the scaled conditional residuals, then reads the
/// loglikelihood at μ̂ off the same accumulators by linearity.
fn profile_pass(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    params: &StructuralParams,
) -> Result<ProfilePass> {
    let n = dataset.len();
    let p = dataset.n_components();
    let mut normal = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    let mut resid_sq = 0.0;
    let mut logdet = 0.0;
    let mut w = DVector::zeros(p);
    for k in 0..n {
        let rows = block_rows(plan, k);
        let q = rows.len();
        let chol = cholesky_or_block_error(assemble_covariance(dataset, params, &rows)?, k)?;
        let l = chol.l_dirty();
        logdet += 2.0 * l[(q - 1, q - 1)].ln();
        // g = L⁻ᵀ e_q: the last row of L⁻¹ as a column vector.
        let mut g = DVector::zeros(q);
        g[q - 1] = 1.0;
        if !l.tr_solve_lower_triangular_mut(&mut g) {
            return Err(Error::NotPositiveDefinite { block: Some(k) });
        }
        // Scaled residual r̃ = g·y and regressor row w̃ = g·E over components.
        w.fill(0.0);
        let mut r = 0.0;
        for (gr, &row) in g.iter().zip(&rows) {
            r += gr * dataset.response(row);
            w[dataset.component(row)] += gr;
        }
        normal.ger(1.0, &w, &w, 1.0);
        rhs.axpy(r, &w, 1.0);
        resid_sq += r * r;
    }
    let mu = solve_normal_equations(dataset, &normal, &rhs)?;
    let quad = resid_sq - 2.0 * mu.dot(&rhs) + (&normal * &mu).dot(&mu);
    let loglik = -0.5 * (n as f64 * LN_2PI + logdet + quad);
    Ok(ProfilePass { mu, loglik })
}

fn solve_normal_equations(
    dataset: &SpatialDataset,
    normal: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<DVector<f64>> {
    match Cholesky::new(normal.clone()) {
        Some(chol) => Ok(chol.solve(rhs)),
        None => {
            for c in 0..normal.nrows() {
                if normal[(c, c)] <= 0.0 {
                    return Err(Error::EmptyComponent {
                        label: dataset.labels()[c].clone(),
                    });
                }
            }
            Err(Error::domain(
                "profile_means",
                "singular normal equations for the profiled means",
            ))
        }
    }
}

/// The blockwise approximate loglikelihood at profiled means.
pub fn loglik(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    model: &dyn ModelFamily,
    theta: &[f64],
) -> Result<LikelihoodBundle> {
    plan.check(dataset)?;
    let params = model.expand(theta, dataset.n_components(), dataset.dim())?;
    let pass = profile_pass(dataset, plan, &params)?;
    Ok(LikelihoodBundle {
        loglik: pass.loglik,
        gradient: None,
        fisher: None,
        profiled_mu: pass.mu,
    })
}

/// Profiled per-component means at fixed covariance parameters.
pub fn profile_means(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    params: &StructuralParams,
) -> Result<DVector<f64>> {
    plan.check(dataset)?;
    Ok(profile_pass(dataset, plan, params)?.mu)
}

/// Loglikelihood, gradient, and Fisher information in one sweep (after a
/// first sweep that profiles the means).
pub fn loglik_grad_fisher(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    model: &dyn ModelFamily,
    theta: &[f64],
) -> Result<LikelihoodBundle> {
    plan.check(dataset)?;
    let p = dataset.n_components();
    let params = model.expand(theta, p, dataset.dim())?;
    let mu = profile_pass(dataset, plan, &params)?.mu;
    let jac = expansion_jacobian(model, theta, p, dataset.dim())?;
    derivative_pass(dataset, plan, &params, &jac, &mu)
}

fn derivative_pass(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    params: &StructuralParams,
    jac: &DMatrix<f64>,
    mu: &DVector<f64>,
) -> Result<LikelihoodBundle> {
    let n = dataset.len();
    let p = dataset.n_components();
    let (so, ao, no, to) = structural_offsets(p);
    let n_theta = jac.ncols();
    let mut grad = DVector::zeros(n_theta);
    let mut fisher = DMatrix::zeros(n_theta, n_theta);
    let mut loglik = 0.0;
    for k in 0..n {
        let rows = block_rows(plan, k);
        let q = rows.len();
        let comps: Vec<usize> = rows.iter().map(|&i| dataset.component(i)).collect();

        // Covariance and the structural partials of every entry.
        let mut sigma = DMatrix::zeros(q, q);
        let mut dsig = DMatrix::zeros(q, q);
        let mut dalp = DMatrix::zeros(q, q);
        let mut dnu = DMatrix::zeros(q, q);
        let mut dtau = DMatrix::zeros(q, q);
        for r in 0..q {
            for c in 0..=r {
                let d2 = dist2(dataset.location(rows[r]), dataset.location(rows[c]));
                let parts = pair_partials(params, comps[r], comps[c], d2)?;
                let value = params.sigma[(comps[r], comps[c])] * parts.dsigma
                    + params.tau[(comps[r], comps[c])] * parts.dtau;
                sigma[(r, c)] = value;
                sigma[(c, r)] = value;
                dsig[(r, c)] = parts.dsigma;
                dsig[(c, r)] = parts.dsigma;
                dalp[(r, c)] = parts.dalpha;
                dalp[(c, r)] = parts.dalpha;
                dnu[(r, c)] = parts.dnu;
                dnu[(c, r)] = parts.dnu;
                dtau[(r, c)] = parts.dtau;
                dtau[(c, r)] = parts.dtau;
            }
        }

        let chol = cholesky_or_block_error(sigma, k)?;
        let l = chol.l_dirty();
        let mut g = DVector::zeros(q);
        g[q - 1] = 1.0;
        if !l.tr_solve_lower_triangular_mut(&mut g) {
            return Err(Error::NotPositiveDefinite { block: Some(k) });
        }
        let mut z = DVector::from_iterator(
            q,
            rows.iter()
                .map(|&i| dataset.response(i) - mu[dataset.component(i)]),
        );
        if !l.solve_lower_triangular_mut(&mut z) {
            return Err(Error::NotPositiveDefinite { block: Some(k) });
        }
        let z_last = z[q - 1];
        loglik -= 0.5 * (LN_2PI + 2.0 * l[(q - 1, q - 1)].ln() + z_last * z_last);

        // W[:, ρ] = P_ρ g for each structural coordinate ρ, where P_ρ holds
        // the entrywise partials ∂Σ/∂ρ; only the four blocks of the pair's
        // component triangle are hit per entry.
        let mut w = DMatrix::zeros(q, jac.nrows());
        for r in 0..q {
            for c in 0..q {
                let tri = tri_index(comps[r].max(comps[c]), comps[r].min(comps[c]));
                let gc = g[c];
                w[(r, so + tri)] += dsig[(r, c)] * gc;
                w[(r, ao + tri)] += dalp[(r, c)] * gc;
                w[(r, no + tri)] += dnu[(r, c)] * gc;
                w[(r, to + tri)] += dtau[(r, c)] * gc;
            }
        }
        // Columns of a = L⁻¹ (∂_jΣ) g are the last rows of A_j = L⁻¹∂_jΣL⁻ᵀ.
        let mut a = &w * jac;
        if !l.solve_lower_triangular_mut(&mut a) {
            return Err(Error::NotPositiveDefinite { block: Some(k) });
        }
        let a_last = a.row(q - 1).transpose();
        let az = a.tr_mul(&z);
        // grad_j += −½ A_j[q,q] + ½ z_q (2 aⱼ·z − z_q A_j[q,q])
        grad.axpy(z_last, &az, 1.0);
        grad.axpy(-0.5 * (1.0 + z_last * z_last), &a_last, 1.0);
        // fisher_jl += ½ (2 aⱼ·a_l − aⱼ[q] a_l[q])
        fisher.gemm_tr(1.0, &a, &a, 1.0);
        fisher.ger(-0.5, &a_last, &a_last, 1.0);
    }
    Ok(LikelihoodBundle {
        loglik,
        gradient: Some(grad),
        fisher: Some(fisher),
        profiled_mu: mu.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_round_trips_through_json() {
        let locations: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 0.0]).collect();
        let comps = vec![0, 1, 0, 1, 0, 1];
        let dataset =
            SpatialDataset::from_parts(locations, comps, vec![0.0; 6]).unwrap();
        let plan = VecchiaPlan::build(&dataset, "random", "any", 3, 11).unwrap();
        let text = plan.to_json().unwrap();
        let back = VecchiaPlan::from_json(&text).unwrap();
        assert_eq!(plan.permutation, back.permutation);
        assert_eq!(plan.cond_sets, back.cond_sets);
        assert_eq!(plan.m, back.m);
        back.check(&dataset).unwrap();
    }

    #[test]
    fn plan_check_rejects_mismatched_dataset() {
        let locations: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 0.0]).collect();
        let comps = vec![0, 1, 0, 1, 0, 1];
        let dataset =
            SpatialDataset::from_parts(locations, comps, vec![0.0; 6]).unwrap();
        let plan = VecchiaPlan::build(&dataset, "random", "any", 3, 11).unwrap();
        let small = SpatialDataset::from_parts(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0, 1],
            vec![0.0; 2],
        )
        .unwrap();
        assert!(plan.check(&small).is_err());
    }
}
