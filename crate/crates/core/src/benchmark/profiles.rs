use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::grid::BenchRecord;
use super::problems::ProblemSpec;
use crate::error::{Error, Result};
use crate::euclidean_pss::Generator;
use crate::tangent_pss::Style;

type ProblemKey = (ProblemSpec, usize);

fn key(r: &BenchRecord) -> ProblemKey {
    (r.problem, r.instance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataProfile {
    pub tau: f64,
    pub alphas: Vec<f64>,
    /// Solver id → fraction of problems solved within `α(m+1)` evaluations,
    /// one entry per alpha.
    pub curves: BTreeMap<String, Vec<f64>>,
    pub problems: usize,
}

impl DataProfile {
    pub fn at(&self, solver_id: &str, alpha: f64) -> Option<f64> {
        let i = self.alphas.iter().rposition(|a| *a <= alpha)?;
        self.curves.get(solver_id).map(|c| c[i])
    }
}

/// Per problem: the best final value over all solvers, replaced by the
/// analytic optimum when that is lower.
pub fn reference_values(records: &[BenchRecord]) -> BTreeMap<ProblemKey, f64> {
    let mut out: BTreeMap<ProblemKey, f64> = BTreeMap::new();
    for r in records {
        let entry = out.entry(key(r)).or_insert(r.f_star);
        if r.error.is_none() {
            *entry = entry.min(r.final_f);
        }
    }
    out
}

/// Largest amount by which the best observed value undercuts the analytic
/// optimum (positive values mean the optimum was beaten).
pub fn proxy_undershoot(records: &[BenchRecord]) -> f64 {
    let mut best: BTreeMap<ProblemKey, (f64, f64)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        let e = best.entry(key(r)).or_insert((f64::INFINITY, r.f_star));
        e.0 = e.0.min(r.final_f);
    }
    best.values()
        .map(|(proxy, analytic)| analytic - proxy)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// First evaluation count at which `f - f* ≤ τ (f0 - f*)`; `Some(0)` when
/// `f0 ≤ f*`, `None` when never reached.
pub fn solve_time(record: &BenchRecord, f_star: f64, tau: f64) -> Option<usize> {
    let gap0 = record.f0 - f_star;
    if gap0 <= 0.0 {
        return Some(0);
    }
    if record.error.is_some() {
        return None;
    }
    record
        .history
        .iter()
        .find(|(_, f)| f - f_star <= tau * gap0)
        .map(|(e, _)| *e)
}

/// `d_s(α)` for `α = 0, 1, …, max_alpha` over the problems in `records`.
pub fn data_profile(records: &[BenchRecord], tau: f64, max_alpha: usize) -> Result<DataProfile> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!("tau must lie in (0, 1), got {tau}")));
    }
    let refs = reference_values(records);
    let solvers: Vec<String> = {
        let mut ids: Vec<String> = records.iter().map(|r| r.solver_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    };
    let f0: BTreeMap<ProblemKey, f64> = records.iter().map(|r| (key(r), r.f0)).collect();
    // solve times in units of m + 1; missing records never solve
    let mut times: BTreeMap<&str, Vec<f64>> = solvers.iter().map(|s| (s.as_str(), Vec::new())).collect();
    let mut by_problem: BTreeMap<ProblemKey, BTreeMap<&str, &BenchRecord>> = BTreeMap::new();
    for r in records {
        by_problem.entry(key(r)).or_default().insert(r.solver_id.as_str(), r);
    }
    for (k, solved_by) in &by_problem {
        let f_star = refs[k];
        let zero_gap = f0[k] - f_star <= 0.0;
        for s in &solvers {
            let t = if zero_gap {
                Some(0)
            } else {
                solved_by.get(s.as_str()).and_then(|r| solve_time(r, f_star, tau))
            };
            let scaled = t.map_or(f64::INFINITY, |t| t as f64 / (k.0.m + 1) as f64);
            times.get_mut(s.as_str()).unwrap().push(scaled);
        }
    }
    let problems = by_problem.len();
    let alphas: Vec<f64> = (0..=max_alpha).map(|a| a as f64).collect();
    let curves = times
        .into_iter()
        .map(|(s, t)| {
            let curve = alphas
                .iter()
                .map(|a| {
                    if problems == 0 {
                        0.0
                    } else {
                        t.iter().filter(|v| **v <= *a).count() as f64 / problems as f64
                    }
                })
                .collect();
            (s.to_string(), curve)
        })
        .collect();
    Ok(DataProfile {
        tau,
        alphas,
        curves,
        problems,
    })
}

/// One data profile per `(m, n - m)` panel.
pub fn profile_panels(
    records: &[BenchRecord],
    tau: f64,
    max_alpha: usize,
) -> Result<BTreeMap<(usize, usize), DataProfile>> {
    let mut groups: BTreeMap<(usize, usize), Vec<BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.problem.m, r.problem.codim())).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(k, rs)| Ok((k, data_profile(&rs, tau, max_alpha)?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadToHeadCell {
    pub generator: Generator,
    pub rotate: bool,
    pub m: usize,
    pub codim: usize,
    /// Pairs where the intrinsic variant ends strictly lower.
    pub wins: usize,
    pub pairs: usize,
    /// `None` when the cell has no complete pair.
    pub fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadToHead {
    pub cells: Vec<HeadToHeadCell>,
    /// Records without a usable partner (missing, duplicated or failed).
    pub unpaired: usize,
}

/// Intrinsic vs projected with the same generator and rotation setting, on
/// the same problem instance.
pub fn head_to_head(records: &[BenchRecord]) -> HeadToHead {
    type PairKey = (Generator, bool, usize, usize, ProblemSpec, usize);
    let mut slots: BTreeMap<PairKey, [Vec<&BenchRecord>; 2]> = BTreeMap::new();
    for r in records {
        let k = (r.generator, r.rotate, r.problem.m, r.problem.codim(), r.problem, r.instance);
        let side = match r.style {
            Style::Intrinsic => 0,
            Style::Projected => 1,
        };
        slots.entry(k).or_default()[side].push(r);
    }
    let mut cells: BTreeMap<(Generator, bool, usize, usize), (usize, usize)> = BTreeMap::new();
    let mut unpaired = 0;
    for ((g, rot, m, codim, _, _), [intr, proj]) in slots {
        let cell = cells.entry((g, rot, m, codim)).or_default();
        let usable = intr.len() == 1
            && proj.len() == 1
            && intr[0].error.is_none()
            && proj[0].error.is_none();
        if !usable {
            unpaired += intr.len() + proj.len();
            continue;
        }
        cell.1 += 1;
        if intr[0].final_f < proj[0].final_f {
            cell.0 += 1;
        }
    }
    HeadToHead {
        cells: cells
            .into_iter()
            .map(|((generator, rotate, m, codim), (wins, pairs))| HeadToHeadCell {
                generator,
                rotate,
                m,
                codim,
                wins,
                pairs,
                fraction: (pairs > 0).then(|| wins as f64 / pairs as f64),
            })
            .collect(),
        unpaired,
    }
}

pub fn profile_csv(profile: &DataProfile) -> String {
    let mut out = String::from("alpha");
    for id in profile.curves.keys() {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (i, a) in profile.alphas.iter().enumerate() {
        let _ = write!(out, "{a}");
        for c in profile.curves.values() {
            let _ = write!(out, ",{}", c[i]);
        }
        out.push('\n');
    }
    out
}

pub fn head_to_head_csv(table: &HeadToHead) -> String {
    let mut out = String::from("generator,rotate,m,codim,wins,pairs,fraction\n");
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.generator.name(),
            c.rotate,
            c.m,
            c.codim,
            c.wins,
            c.pairs,
            c.fraction.map(|f| f.to_string()).unwrap_or_default()
        );
    }
    out
}
