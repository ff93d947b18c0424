//! Riemannian direct search.
//!
//! Each iteration builds a polling set `D_k ⊂ T_{x_k} M` and tries the steps
//! `R_{x_k}(α_k d)` in generation order. The first `d` with
//!
//! ```text
//! f(R_{x_k}(α_k d)) < f(x_k) - (c/2) α_k² ‖d‖²
//! ```
//!
//! is accepted and the step grows to `min(γ_inc α_k, α_max)`; if none
//! qualifies the iterate stays put and the step shrinks to `γ_dec α_k`.
//!
//! Evaluation accounting: `f(x_0)` is taken as given and is not charged to
//! the budget; every trial point is charged exactly once.

use std::sync::Arc;

use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BasisMode, Manifold, ManifoldPoint, Retraction};
use crate::rng;
use crate::tangent_pss::{tangent_cosine_measure, PollingStrategy};

pub type Objective = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type Gradient = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollOrder {
    #[default]
    AsGenerated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha0: f64,
    pub alpha_max: f64,
    /// Forcing constant of the sufficient-decrease test.
    pub c: f64,
    pub gamma_dec: f64,
    pub gamma_inc: f64,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub polling: PollingStrategy,
    pub retraction: Retraction,
    pub poll_order: PollOrder,
    pub seed: u64,
    /// Stop once the Riemannian gradient norm falls below this value.
    /// Needs a problem gradient; not used in benchmark runs.
    pub grad_tol: Option<f64>,
    /// Record the gradient norm and the polling-set cosine measure at every
    /// iterate.
    pub record_diagnostics: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha0: 1.0,
            alpha_max: 1.0,
            c: 1.0,
            gamma_dec: 0.5,
            gamma_inc: 2.0,
            budget: 1000,
            polling: PollingStrategy::default(),
            retraction: Retraction::Exponential,
            poll_order: PollOrder::AsGenerated,
            seed: 0,
            grad_tol: None,
            record_diagnostics: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.alpha0 > 0.0 && self.alpha_max > 0.0) {
            return bad("alpha0 and alpha_max must be positive");
        }
        if self.alpha0 > self.alpha_max {
            return bad("alpha0 must not exceed alpha_max");
        }
        if !(self.c > 0.0) {
            return bad("c must be positive");
        }
        if !(self.gamma_dec > 0.0 && self.gamma_dec < 1.0 && self.gamma_inc > 1.0) {
            return bad("need 0 < gamma_dec < 1 < gamma_inc");
        }
        if self.budget < 1 {
            return bad("budget must be at least 1");
        }
        if let Some(tol) = self.grad_tol {
            if !(tol > 0.0) {
                return bad("grad_tol must be positive");
            }
        }
        self.polling.validate()
    }
}

#[derive(Clone)]
pub struct Problem {
    pub manifold: Manifold,
    pub objective: Objective,
    /// Euclidean gradient, used for diagnostics only.
    pub euclid_gradient: Option<Gradient>,
    pub x0: ManifoldPoint,
    pub f_lower: Option<f64>,
    /// Mixed into the solver's random stream.
    pub id: u64,
}

impl Problem {
    pub fn new(manifold: Manifold, x0: ManifoldPoint, objective: Objective) -> Self {
        Problem {
            manifold,
            objective,
            euclid_gradient: None,
            x0,
            f_lower: None,
            id: 0,
        }
    }

    pub fn with_gradient(mut self, gradient: Gradient) -> Self {
        self.euclid_gradient = Some(gradient);
        self
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn eval(&self, x: &ManifoldPoint) -> f64 {
        (self.objective)(x.coords())
    }

    /// Norm of the Riemannian gradient at `x`, if a gradient is available.
    pub fn grad_norm(&self, x: &ManifoldPoint) -> Option<f64> {
        let g = self.euclid_gradient.as_ref()?(x.coords());
        self.manifold.riemannian_gradient(x, &g).ok().map(|t| t.norm())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Step size used during this iteration.
    pub alpha_k: f64,
    /// Objective value at the end of the iteration.
    pub f_k: f64,
    pub success: bool,
    pub accepted_direction_index: Option<usize>,
    pub poll_size: usize,
    pub evals_used_this_iter: usize,
    pub cumulative_evals: usize,
    /// The budget ran out before the poll finished; no step-size update.
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poll_cm: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    GradientTolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub f0: f64,
    pub records: Vec<IterationRecord>,
    pub final_point: Vec<f64>,
    pub final_f: f64,
    pub final_alpha: f64,
    pub evals: usize,
    pub successes: usize,
    pub stop: StopReason,
}

impl SolverTrace {
    /// `(evaluations, best value)` pairs: the start at zero evaluations and
    /// one entry per successful iteration.
    pub fn history(&self) -> Vec<(usize, f64)> {
        std::iter::once((0, self.f0))
            .chain(
                self.records
                    .iter()
                    .filter(|r| r.success)
                    .map(|r| (r.cumulative_evals, r.f_k)),
            )
            .collect()
    }

    pub fn summary(&self) -> String {
        format!(
            "final_f={:.12e} evals={} iterations={} successes={} final_alpha={:.6e} stop={:?}",
            self.final_f,
            self.evals,
            self.records.len(),
            self.successes,
            self.final_alpha,
            self.stop
        )
    }
}

pub fn direct_search(problem: &Problem, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let manifold = &problem.manifold;
    let mut x = manifold.point(problem.x0.coords().clone())?;
    if cfg.grad_tol.is_some() && problem.euclid_gradient.is_none() {
        return Err(Error::MissingGradient);
    }
    let mut f = problem.eval(&x);
    let f0 = f;
    let mut alpha = cfg.alpha0;
    let mut cumulative = 0usize;
    let mut successes = 0usize;
    let mut records = Vec::new();
    let mut stream = rng::stream(rng::derive_seed(
        "direct-search",
        &[cfg.seed, cfg.polling.seed, problem.id],
    ));
    let mut stop = StopReason::Budget;

    for k in 0.. {
        if cumulative >= cfg.budget {
            break;
        }
        let grad_norm = if cfg.record_diagnostics || cfg.grad_tol.is_some() {
            problem.grad_norm(&x)
        } else {
            None
        };
        if let (Some(tol), Some(g)) = (cfg.grad_tol, grad_norm) {
            if g <= tol {
                stop = StopReason::GradientTolerance;
                break;
            }
        }

        let rotation_seed = stream.next_u64();
        let generated = cfg.polling.generate(manifold, &x, rotation_seed)?;
        let poll_cm = if cfg.record_diagnostics {
            let basis = match generated.basis {
                Some(b) => b,
                None => manifold.tangent_basis(&x, BasisMode::Canonical)?,
            };
            tangent_cosine_measure(manifold, &generated.set, &basis)
                .ok()
                .map(|r| r.cosine_measure)
        } else {
            None
        };

        let mut evals = 0;
        let mut accepted = None;
        let mut truncated = false;
        for (i, d) in generated.set.directions.iter().enumerate() {
            if cumulative >= cfg.budget {
                truncated = true;
                break;
            }
            let trial = manifold.retract(&x, &d.scaled(alpha), cfg.retraction);
            let f_trial = problem.eval(&trial);
            cumulative += 1;
            evals += 1;
            let dn = d.norm();
            // NaN never satisfies the comparison, so it counts as a failed poll.
            if f_trial < f - 0.5 * cfg.c * alpha * alpha * dn * dn {
                accepted = Some((i, trial, f_trial));
                break;
            }
        }

        let used_alpha = alpha;
        let success = accepted.is_some();
        let accepted_direction = accepted.as_ref().map(|(i, _, _)| *i);
        if let Some((_, trial, f_trial)) = accepted {
            x = trial;
            f = f_trial;
            alpha = (cfg.gamma_inc * alpha).min(cfg.alpha_max);
            successes += 1;
        } else if !truncated {
            alpha *= cfg.gamma_dec;
        }
        records.push(IterationRecord {
            k,
            alpha_k: used_alpha,
            f_k: f,
            success,
            accepted_direction_index: accepted_direction,
            poll_size: generated.set.len(),
            evals_used_this_iter: evals,
            cumulative_evals: cumulative,
            truncated,
            grad_norm,
            poll_cm,
        });
        if truncated {
            break;
        }
    }

    Ok(SolverTrace {
        f0,
        final_point: x.coords().iter().copied().collect(),
        final_f: f,
        final_alpha: alpha,
        evals: cumulative,
        successes,
        records,
        stop,
    })
}

/// One unsuccessful-iteration check of
/// `‖grad f(x_k)‖ ≤ (L + c)/(2 κ_k) · α_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Relative accuracy assumed for computed objective values.
pub const EVAL_NOISE_REL: f64 = 1e-14;

/// Checks the gradient bound on every fully polled unsuccessful iteration,
/// with `κ_k` the polling set's cosine measure and unit directions.
///
/// Objective values are only known up to `δ = EVAL_NOISE_REL·max(|f_k|, 1)`,
/// so a failed poll certifies `f(R(αd)) ≥ f - (c/2)α² - 2δ`; carrying that
/// through the first-order expansion adds `2δ/(κα)` to the right-hand side.
/// The term only matters once `α²` reaches the rounding level of `f`.
pub fn diagnostic_unsuccessful_bound(
    trace: &SolverTrace,
    problem: &Problem,
    l_est: f64,
    cfg: &SolverConfig,
) -> Result<Vec<BoundCheck>> {
    if problem.euclid_gradient.is_none() {
        return Err(Error::MissingGradient);
    }
    trace
        .records
        .iter()
        .filter(|r| !r.success && !r.truncated)
        .map(|r| {
            let (Some(lhs), Some(kappa)) = (r.grad_norm, r.poll_cm) else {
                return Err(Error::MissingDiagnostics);
            };
            let delta = EVAL_NOISE_REL * r.f_k.abs().max(1.0);
            let rhs = (l_est + cfg.c) / (2.0 * kappa) * r.alpha_k + 2.0 * delta / (kappa * r.alpha_k);
            Ok(BoundCheck {
                k: r.k,
                lhs,
                rhs,
                satisfied: lhs <= rhs * (1.0 + 1e-10) + 1e-300,
            })
        })
        .collect()
}

/// `Σ α_k²` over the recorded iterations.
pub fn diagnostic_step_square_sum(trace: &SolverTrace) -> f64 {
    trace.records.iter().map(|r| r.alpha_k * r.alpha_k).sum()
}
