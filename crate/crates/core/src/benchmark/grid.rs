use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problems::{generate_instance, Family, Instance, ProblemSpec};
use crate::error::{Error, Result};
use crate::euclidean_pss::Generator;
use crate::solver::{direct_search, SolverConfig};
use crate::tangent_pss::{PollingStrategy, Style};

/// Which dimension the evaluation budget scales with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetScale {
    /// `budget_factor · (m + 1)`
    #[default]
    Manifold,
    /// `budget_factor · (n + 1)`
    Ambient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub m_list: Vec<usize>,
    pub codims: Vec<usize>,
    pub families: Vec<Family>,
    pub styles: Vec<Style>,
    pub generators: Vec<Generator>,
    pub rotations: Vec<bool>,
    pub budget_factor: usize,
    pub budget_scale: BudgetScale,
    pub base_seed: u64,
    pub instances_per_cell: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            m_list: vec![2, 4, 8, 16, 32],
            codims: vec![0, 2, 4, 8, 16, 32],
            families: Family::ALL.to_vec(),
            styles: vec![Style::Intrinsic, Style::Projected],
            generators: Generator::NAMED.to_vec(),
            rotations: vec![true],
            budget_factor: 100,
            budget_scale: BudgetScale::Manifold,
            base_seed: 0,
            instances_per_cell: 100,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, empty) in [
            ("m_list", self.m_list.is_empty()),
            ("codims", self.codims.is_empty()),
            ("families", self.families.is_empty()),
            ("styles", self.styles.is_empty()),
            ("generators", self.generators.is_empty()),
            ("rotations", self.rotations.is_empty()),
        ] {
            if empty {
                return bad(format!("{name} must not be empty"));
            }
        }
        if self.m_list.contains(&0) {
            return bad("m_list entries must be positive".into());
        }
        if self.generators.contains(&Generator::Custom) {
            return bad("generators must be named generators".into());
        }
        if self.budget_factor == 0 || self.instances_per_cell == 0 {
            return bad("budget_factor and instances_per_cell must be positive".into());
        }
        Ok(())
    }

    pub fn strategies(&self) -> Vec<PollingStrategy> {
        let mut out = Vec::new();
        for &style in &self.styles {
            for &generator in &self.generators {
                for &rotate in &self.rotations {
                    out.push(PollingStrategy {
                        style,
                        generator,
                        rotate,
                        seed: 0,
                    });
                }
            }
        }
        out
    }

    pub fn budget(&self, m: usize, n: usize) -> usize {
        match self.budget_scale {
            BudgetScale::Manifold => self.budget_factor * (m + 1),
            BudgetScale::Ambient => self.budget_factor * (n + 1),
        }
    }

    /// Every problem of the grid, in output order. Families that need a
    /// positive codimension are skipped in the codimension-0 cells.
    pub fn problems(&self) -> Vec<(ProblemSpec, usize)> {
        let mut out = Vec::new();
        for &m in &self.m_list {
            for &codim in &self.codims {
                for &family in &self.families {
                    if codim < family.min_codim() {
                        continue;
                    }
                    for index in 0..self.instances_per_cell {
                        out.push((
                            ProblemSpec::derived(family, m, m + codim, self.base_seed, index),
                            index,
                        ));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub problem: ProblemSpec,
    pub instance: usize,
    pub solver_id: String,
    pub style: Style,
    pub generator: Generator,
    pub rotate: bool,
    pub budget: usize,
    /// `(cumulative evaluations, best value so far)`.
    pub history: Vec<(usize, f64)>,
    pub f0: f64,
    pub final_f: f64,
    /// Analytic optimal value.
    pub f_star: f64,
    pub evals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn solve(inst: &Instance, index: usize, strategy: PollingStrategy, budget: usize, seed: u64) -> BenchRecord {
    let cfg = SolverConfig {
        budget,
        polling: strategy,
        seed,
        ..SolverConfig::default()
    };
    let f0 = inst.problem.eval(&inst.problem.x0);
    let (history, final_f, evals, error) = match direct_search(&inst.problem, &cfg) {
        Ok(trace) => (trace.history(), trace.final_f, trace.evals, None),
        Err(e) => (vec![(0, f0)], f0, 0, Some(e.to_string())),
    };
    BenchRecord {
        problem: inst.spec,
        instance: index,
        solver_id: strategy.id(),
        style: strategy.style,
        generator: strategy.generator,
        rotate: strategy.rotate,
        budget,
        history,
        f0,
        final_f,
        f_star: inst.f_star,
        evals,
        error,
    }
}

/// Solves every (problem, solver) pair. Output order is fixed by the grid
/// (problem-major, then solver) and does not depend on scheduling.
pub fn run_grid(cfg: &GridConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let problems = cfg.problems();
    let instances = problems
        .par_iter()
        .map(|(spec, index)| generate_instance(*spec).map(|inst| (inst, *index)))
        .collect::<Result<Vec<_>>>()?;
    let strategies = cfg.strategies();
    let jobs: Vec<(usize, PollingStrategy)> = (0..instances.len())
        .flat_map(|i| strategies.iter().map(move |s| (i, *s)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|(i, strategy)| {
            let (inst, index) = &instances[*i];
            let budget = cfg.budget(inst.spec.m, inst.spec.n);
            solve(inst, *index, *strategy, budget, cfg.base_seed)
        })
        .collect())
}

/// [`run_grid`] on a dedicated pool of `threads` workers.
pub fn run_grid_with_threads(cfg: &GridConfig, threads: Option<usize>) -> Result<Vec<BenchRecord>> {
    match threads {
        None => run_grid(cfg),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(|| run_grid(cfg)),
    }
}
