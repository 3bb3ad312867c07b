//! Fisher scoring on a penalized objective: full Newton-like steps from the
//! conditioned information matrix, halving on failure, a gradient-direction
//! fallback, and warm starts from per-component marginal fits.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::SpatialDataset;
use crate::error::{Error, Result};
use crate::families::{expansion_jacobian, model_family, MarginalParams, ModelFamily};
use crate::params::{tri_index, tri_len, ParamsDocument, StructuralParams};
use crate::vecchia::{loglik, loglik_grad_fisher, profile_means, VecchiaPlan};

/// Scoring-loop tuning knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    pub stop_tol: f64,
    pub eig_ratio_floor: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    pub penalties_on: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 40,
            stop_tol: 1e-4,
            eig_ratio_floor: 1e-5,
            backtrack_factor: 0.5,
            max_backtracks: 10,
            penalties_on: true,
            seed: 0,
        }
    }
}

/// Why the scoring loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The proposed step had s·∇ℓ below the tolerance: converged.
    StepGradTol,
    /// Hit the accepted-iteration cap.
    MaxIter,
    /// Neither scoring nor gradient steps improved the objective.
    GradientStall,
}

/// Objective value split into the penalized quantity the loop maximizes and
/// the plain loglikelihood reported to callers.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveValue {
    pub penalized: f64,
    pub plain: f64,
}

/// A full evaluation: value, ascent gradient, and Fisher information of the
/// penalized objective.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: ObjectiveValue,
    pub gradient: DVector<f64>,
    pub fisher: DMatrix<f64>,
}

/// Anything the scoring loop can maximize.
pub trait ScoringObjective {
    fn dim(&self) -> usize;
    /// Cheap value-only evaluation used for trial steps.
    fn value(&self, theta: &[f64]) -> Result<ObjectiveValue>;
    /// Value, gradient, and Fisher information at an accepted point.
    fn evaluate(&self, theta: &[f64]) -> Result<ObjectiveEval>;
}

/// Raw outcome of the scoring loop, independent of any model.
#[derive(Debug, Clone)]
pub struct ScoringOutcome {
    pub theta: DVector<f64>,
    pub value: ObjectiveValue,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub seconds: f64,
}

/// A fitted model: parameters, likelihood, and loop diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: String,
    pub theta_hat: DVector<f64>,
    /// Structural parameters at `theta_hat`, means profiled in.
    pub params: StructuralParams,
    /// Plain (unpenalized) blockwise loglikelihood at `theta_hat`.
    pub loglik: f64,
    /// Penalized objective at the start and after each accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub seconds: f64,
    pub config: FitConfig,
}

#[derive(Serialize, Deserialize)]
struct FitDocument {
    #[serde(flatten)]
    params: ParamsDocument,
    loglik: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    stop_reason: StopReason,
    seconds: f64,
    config: FitConfig,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        let doc = FitDocument {
            params: ParamsDocument::new(&self.model, &self.params, self.theta_hat.as_slice()),
            loglik: self.loglik,
            trace: self.trace.clone(),
            iterations: self.iterations,
            converged: self.converged,
            stop_reason: self.stop_reason,
            seconds: self.seconds,
            config: self.config.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Floors the eigenvalue spectrum of a symmetric matrix at
/// `floor · λ_max` so the scoring step solve is well conditioned. Falls back
/// to the identity when the spectrum has no positive part.
pub fn condition_fisher(fisher: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = fisher.nrows();
    let eig = fisher.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.max();
    if !(lambda_max > 0.0) {
        return DMatrix::identity(n, n);
    }
    let cut = floor * lambda_max;
    let clipped = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| if l < cut { cut } else { l }),
    );
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&clipped);
    let out = scaled * eig.eigenvectors.transpose();
    // Recomposition is symmetric only up to roundoff; make it exact.
    0.5 * (&out + out.transpose())
}

fn improved(trial: f64, current: f64) -> bool {
    trial.is_finite() && trial > current
}

/// Tries `base + scale · direction` with `scale` starting at 1 and halving
/// (by `backtrack_factor`) up to `max_backtracks` times; returns the first
/// strictly improving point. Retryable evaluation errors count as failures.
fn line_phase(
    objective: &dyn ScoringObjective,
    base: &DVector<f64>,
    direction: &DVector<f64>,
    current: f64,
    config: &FitConfig,
) -> Result<Option<(DVector<f64>, ObjectiveValue)>> {
    let mut scale = 1.0;
    for _ in 0..=config.max_backtracks {
        let trial = base + direction * scale;
        match objective.value(trial.as_slice()) {
            Ok(value) if improved(value.penalized, current) => {
                return Ok(Some((trial, value)));
            }
            Ok(_) => {}
            Err(e) if e.is_retryable() => {}
            Err(e) => return Err(e),
        }
        scale *= config.backtrack_factor;
    }
    Ok(None)
}

/// Maximizes any [`ScoringObjective`] by Fisher scoring with backtracking
/// and a gradient fallback. Returns the best point seen even when the loop
/// stalls or hits the iteration cap.
pub fn fisher_scoring_objective(
    objective: &dyn ScoringObjective,
    theta0: &[f64],
    config: &FitConfig,
) -> Result<ScoringOutcome> {
    if theta0.len() != objective.dim() {
        return Err(Error::domain(
            "fisher_scoring",
            format!(
                "starting point has {} coordinates, objective expects {}",
                theta0.len(),
                objective.dim()
            ),
        ));
    }
    let start = Instant::now();
    let mut theta = DVector::from_column_slice(theta0);
    let mut eval = objective.evaluate(theta.as_slice())?;
    if !eval.value.penalized.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![eval.value.penalized];
    let mut best = (theta.clone(), eval.value);
    let mut iterations = 0;
    let stop_reason = loop {
        if iterations == config.max_iter {
            break StopReason::MaxIter;
        }
        let conditioned = condition_fisher(&eval.fisher, config.eig_ratio_floor);
        let step = match Cholesky::new(conditioned) {
            Some(chol) => chol.solve(&eval.gradient),
            None => eval.gradient.clone(),
        };
        if step.dot(&eval.gradient) < config.stop_tol {
            break StopReason::StepGradTol;
        }
        let mut accepted = line_phase(objective, &theta, &step, eval.value.penalized, config)?;
        if accepted.is_none() {
            let norm = eval.gradient.norm();
            let direction = &eval.gradient / norm;
            accepted = line_phase(objective, &theta, &direction, eval.value.penalized, config)?;
        }
        match accepted {
            None => break StopReason::GradientStall,
            Some((new_theta, _)) => {
                theta = new_theta;
                eval = objective.evaluate(theta.as_slice())?;
                iterations += 1;
                trace.push(eval.value.penalized);
                if eval.value.penalized > best.1.penalized {
                    best = (theta.clone(), eval.value);
                }
            }
        }
    };
    let converged = stop_reason == StopReason::StepGradTol;
    Ok(ScoringOutcome {
        theta: best.0,
        value: best.1,
        trace,
        iterations,
        converged,
        stop_reason,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Boundary penalties on the marginal parameters: quadratic in log ν above
/// ln 8, in log(τ/σ) below −12, and in log σ above ln(10⁶ · sample
/// variance), each with strength 0.01. Returns the penalty value, its
/// gradient in the structural (flattened) coordinates, and a mask of the
/// structural coordinates it can touch.
pub fn penalties(
    params: &StructuralParams,
    sample_vars: &[f64],
) -> (f64, DVector<f64>, Vec<bool>) {
    const STRENGTH: f64 = 0.01;
    let p = params.p;
    let t = tri_len(p);
    let mut value = 0.0;
    let mut grad = DVector::zeros(4 * t);
    let mut mask = vec![false; 4 * t];
    for i in 0..p {
        let idx = tri_index(i, i);
        let (sigma, nu, tau) = (
            params.sigma[(i, i)],
            params.nu[(i, i)],
            params.tau[(i, i)],
        );
        mask[idx] = true;
        mask[2 * t + idx] = true;
        mask[3 * t + idx] = true;
        if sigma <= 0.0 || nu <= 0.0 || tau <= 0.0 {
            continue;
        }
        let excess_nu = nu.ln() - 8f64.ln();
        if excess_nu > 0.0 {
            value -= STRENGTH * excess_nu * excess_nu;
            grad[2 * t + idx] -= 2.0 * STRENGTH * excess_nu / nu;
        }
        let deficit_ratio = -12.0 - (tau / sigma).ln();
        if deficit_ratio > 0.0 {
            value -= STRENGTH * deficit_ratio * deficit_ratio;
            grad[3 * t + idx] += 2.0 * STRENGTH * deficit_ratio / tau;
            grad[idx] -= 2.0 * STRENGTH * deficit_ratio / sigma;
        }
        let var = sample_vars.get(i).copied().unwrap_or(1.0);
        if var > 0.0 {
            let excess_sigma = sigma.ln() - (1e6 * var).ln();
            if excess_sigma > 0.0 {
                value -= STRENGTH * excess_sigma * excess_sigma;
                grad[idx] -= 2.0 * STRENGTH * excess_sigma / sigma;
            }
        }
    }
    (value, grad, mask)
}

/// The blockwise Vecchia loglikelihood as a scoring objective, with
/// boundary penalties folded into the value and gradient.
pub struct VecchiaObjective<'a> {
    dataset: &'a SpatialDataset,
    plan: &'a VecchiaPlan,
    model: &'a dyn ModelFamily,
    penalties_on: bool,
    sample_vars: Vec<f64>,
}

impl<'a> VecchiaObjective<'a> {
    pub fn new(
        dataset: &'a SpatialDataset,
        plan: &'a VecchiaPlan,
        model: &'a dyn ModelFamily,
        penalties_on: bool,
    ) -> Self {
        VecchiaObjective {
            dataset,
            plan,
            model,
            penalties_on,
            sample_vars: dataset.component_variances(),
        }
    }

    fn penalty_value(&self, theta: &[f64]) -> Result<f64> {
        if !self.penalties_on {
            return Ok(0.0);
        }
        let params = self
            .model
            .expand(theta, self.dataset.n_components(), self.dataset.dim())?;
        Ok(penalties(&params, &self.sample_vars).0)
    }
}

impl ScoringObjective for VecchiaObjective<'_> {
    fn dim(&self) -> usize {
        self.model
            .param_count(self.dataset.n_components())
            .unwrap_or(0)
    }

    fn value(&self, theta: &[f64]) -> Result<ObjectiveValue> {
        let plain = loglik(self.dataset, self.plan, self.model, theta)?.loglik;
        if !plain.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(ObjectiveValue {
            penalized: plain + self.penalty_value(theta)?,
            plain,
        })
    }

    fn evaluate(&self, theta: &[f64]) -> Result<ObjectiveEval> {
        let p = self.dataset.n_components();
        let d = self.dataset.dim();
        let bundle = loglik_grad_fisher(self.dataset, self.plan, self.model, theta)?;
        let plain = bundle.loglik;
        if !plain.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        let mut gradient = bundle.gradient.expect("bundle carries gradient");
        let fisher = bundle.fisher.expect("bundle carries fisher");
        let mut penalized = plain;
        if self.penalties_on {
            let params = self.model.expand(theta, p, d)?;
            let (value, structural_grad, _) = penalties(&params, &self.sample_vars);
            let jac = expansion_jacobian(self.model, theta, p, d)?;
            penalized += value;
            gradient += jac.tr_mul(&structural_grad);
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        Ok(ObjectiveEval {
            value: ObjectiveValue { penalized, plain },
            gradient,
            fisher,
        })
    }
}

/// Fits a model family to a dataset by Fisher scoring on the blockwise
/// loglikelihood.
pub fn fisher_scoring(
    dataset: &SpatialDataset,
    plan: &VecchiaPlan,
    model: &dyn ModelFamily,
    theta0: &[f64],
    config: &FitConfig,
) -> Result<FitResult> {
    let objective = VecchiaObjective::new(dataset, plan, model, config.penalties_on);
    let outcome = fisher_scoring_objective(&objective, theta0, config)?;
    let mut params = model.expand(
        outcome.theta.as_slice(),
        dataset.n_components(),
        dataset.dim(),
    )?;
    params.mu = profile_means(dataset, plan, &params)?;
    Ok(FitResult {
        model: model.name().to_string(),
        theta_hat: outcome.theta,
        params,
        loglik: outcome.value.plain,
        trace: outcome.trace,
        iterations: outcome.iterations,
        converged: outcome.converged,
        stop_reason: outcome.stop_reason,
        seconds: outcome.seconds,
        config: config.clone(),
    })
}

/// Starting values: marginal parameters from per-component univariate fits,
/// cross-structure at the canonical zero of each link.
#[derive(Debug, Clone)]
pub struct StartingValues {
    pub theta: DVector<f64>,
    pub marginals: Vec<MarginalParams>,
    /// Labels of components whose marginal fit failed and fell back to
    /// moment heuristics.
    pub fallback_components: Vec<String>,
}

fn heuristic_marginal(subset: &SpatialDataset) -> MarginalParams {
    let var = subset.component_variances()[0].max(1e-12);
    let range = (subset.bounding_diameter() / 4.0).max(1e-6);
    MarginalParams {
        sigma: var,
        alpha: range,
        nu: 0.5,
        tau: 0.1 * var,
    }
}

/// Fits each component's univariate marginal (independent family, p = 1)
/// and assembles the family's starting vector from the results. Components
/// whose fit errors out keep the moment heuristics and are flagged.
pub fn starting_values(
    dataset: &SpatialDataset,
    model: &dyn ModelFamily,
    plan: &VecchiaPlan,
) -> Result<StartingValues> {
    let p = dataset.n_components();
    let univariate = model_family("independent", false)?;
    let mut marginals = Vec::with_capacity(p);
    let mut fallback_components = Vec::new();
    for c in 0..p {
        let (subset, _) = dataset.component_subset(c)?;
        let heuristic = heuristic_marginal(&subset);
        let theta0 = [
            heuristic.sigma.ln(),
            heuristic.alpha.ln(),
            heuristic.nu.ln(),
            heuristic.tau.ln(),
        ];
        let seed = plan.seed.wrapping_add(c as u64);
        let config = FitConfig {
            seed,
            ..FitConfig::default()
        };
        let fitted = VecchiaPlan::build(&subset, "random", "any", plan.m, seed)
            .and_then(|sub_plan| {
                fisher_scoring(&subset, &sub_plan, univariate.as_ref(), &theta0, &config)
            });
        match fitted {
            Ok(fit) => marginals.push(MarginalParams {
                sigma: fit.params.sigma[(0, 0)],
                alpha: fit.params.alpha[(0, 0)],
                nu: fit.params.nu[(0, 0)],
                tau: fit.params.tau[(0, 0)],
            }),
            Err(_) => {
                fallback_components.push(dataset.labels()[c].clone());
                marginals.push(heuristic);
            }
        }
    }
    let theta = model.starting_theta(&marginals);
    Ok(StartingValues {
        theta,
        marginals,
        fallback_components,
    })
}
