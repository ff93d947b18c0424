//! Exact and sampled cosine measures.
//!
//! `cm(D) = min_{‖v‖=1} max_{d∈D} cos(d, v)`. At a minimizer `v*` with value
//! `λ ≠ 0`, `λ v*` lies in the cone of the active directions, so by
//! Carathéodory it is determined by a linearly independent subset `S` of
//! active directions on which every cosine equals `λ`:
//! `v* = ±u_S` with `u_S ∝ D_S G_S⁻¹ 1` and `|λ| = (1ᵀ G_S⁻¹ 1)^{-1/2}`.
//! When `λ = 0` the minimizer is an extreme ray of `{v : Dᵀv ≤ 0}`, i.e. a
//! normal to `m - 1` independent directions (or any vector orthogonal to
//! `span(D)` when `D` is rank deficient).
//!
//! The exact routine enumerates every independent subset of size `1..=m`
//! depth-first, growing an orthonormal basis of `span(D_S)` one direction at a
//! time. With `Q = D_S L⁻ᵀ` (`G_S = L Lᵀ`) and `L z = 1`, the candidate is
//! `u_S = Q z / ‖z‖` and `γ_S = 1/‖z‖`, both updated in `O(k·m)` per node.
//! Dependent subsets are pruned together with all their supersets.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Largest dimension accepted by [`cosine_measure_exact`].
pub const MAX_EXACT_DIM: usize = 12;

/// Subset budget that admits sets larger than `2m + 8` in low dimension.
pub const MAX_SUBSETS: u64 = 2_000_000;

const ADMISSIBLE_TOL: f64 = 1e-9;
/// Squared pivot below which a subset counts as dependent (condition ~1e12).
const PIVOT_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub cosine_measure: f64,
    /// `|D| · cm⁻²`, only when `cm > 0`.
    pub complexity_measure: Option<f64>,
    pub cardinality: usize,
    /// Unit vector attaining the min-max.
    pub witness: Vec<f64>,
    /// Directions whose cosine with the witness is within 1e-9 of the value.
    pub active_set: Vec<usize>,
}

struct Candidate {
    value: f64,
    witness: DVector<f64>,
    active_set: Vec<usize>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.value < other.value - TIE_TOL {
            return true;
        }
        (self.value - other.value).abs() <= TIE_TOL && self.active_set < other.active_set
    }
}

enum Expect {
    /// All cosines of the subset equal `value`; the global max must match.
    Uniform(f64),
    /// Normal to `m - 1` directions; admissible when nothing is positive.
    NonPositive,
    /// Any point; its value is a valid upper bound.
    Any,
}

struct Search<'a> {
    dirs: &'a [DVector<f64>],
    m: usize,
    best: Option<Candidate>,
    rank: usize,
    cosines: Vec<f64>,
}

impl<'a> Search<'a> {
    fn offer(&mut self, v: &DVector<f64>, expect: Expect) {
        let mut phi = f64::NEG_INFINITY;
        for (c, d) in self.cosines.iter_mut().zip(self.dirs) {
            *c = d.dot(v);
            phi = phi.max(*c);
        }
        let admissible = match expect {
            Expect::Uniform(value) => (phi - value).abs() <= ADMISSIBLE_TOL,
            Expect::NonPositive => phi <= ADMISSIBLE_TOL,
            Expect::Any => true,
        };
        if !admissible {
            return;
        }
        if let Some(best) = &self.best {
            if phi > best.value + TIE_TOL {
                return;
            }
        }
        let active_set = self
            .cosines
            .iter()
            .enumerate()
            .filter(|(_, &c)| c >= phi - ADMISSIBLE_TOL)
            .map(|(i, _)| i)
            .collect();
        let candidate = Candidate {
            value: phi,
            witness: v.clone(),
            active_set,
        };
        if self.best.as_ref().is_none_or(|b| candidate.beats(b)) {
            self.best = Some(candidate);
        }
    }

    fn offer_normal(&mut self, basis: &[DVector<f64>]) {
        let normal = linalg::complement_vector(basis, self.m);
        self.offer(&normal, Expect::NonPositive);
        self.offer(&-normal, Expect::NonPositive);
    }

    fn visit(&mut self, start: usize, q: &mut Vec<DVector<f64>>, z: &mut Vec<f64>, w: &DVector<f64>) {
        for j in start..self.dirs.len() {
            let d = &self.dirs[j];
            let y: Vec<f64> = q.iter().map(|qi| qi.dot(d)).collect();
            let mut r = d.clone();
            linalg::orthogonalize(&mut r, q);
            let pivot = r.norm();
            if pivot * pivot < PIVOT_TOL {
                continue;
            }
            let q_new = r / pivot;
            let z_new = (1.0 - y.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>()) / pivot;
            let w_new = w + &q_new * z_new;

            q.push(q_new);
            z.push(z_new);
            let depth = q.len();
            self.rank = self.rank.max(depth);

            let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gamma = 1.0 / znorm;
            let u = &w_new / znorm;
            self.offer(&u, Expect::Uniform(gamma));
            self.offer(&-u, Expect::Uniform(-gamma));

            if depth + 1 == self.m {
                self.offer_normal(q);
            }
            if depth < self.m {
                self.visit(j + 1, q, z, &w_new);
            }
            q.pop();
            z.pop();
        }
    }
}

fn validate(dirs: &[DVector<f64>]) -> Result<usize> {
    let m = dirs.first().ok_or(Error::EmptySet)?.len();
    if m == 0 {
        return Err(Error::EmptySet);
    }
    for (i, d) in dirs.iter().enumerate() {
        if d.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: d.len(),
            });
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if d.norm() == 0.0 {
            return Err(Error::ZeroDirection(i));
        }
    }
    Ok(m)
}

fn normalized(dirs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    dirs.iter().map(|d| d / d.norm()).collect()
}

/// `Σ_{k=1}^{m} C(size, k)`, saturating.
fn subset_count(size: usize, m: usize) -> u64 {
    let mut total: u64 = 0;
    let mut c: u64 = 1;
    for k in 1..=m.min(size) {
        c = c.saturating_mul((size - k + 1) as u64) / k as u64;
        total = total.saturating_add(c);
    }
    total
}

/// Exact cosine measure with witness, by enumeration of independent subsets.
///
/// Accepts `m ≤ 12` with either `|D| ≤ 2m + 8` or at most
/// [`MAX_SUBSETS`] candidate subsets; fails with
/// [`Error::EnumerationBudget`] otherwise.
pub fn cosine_measure_exact(dirs: &[DVector<f64>]) -> Result<MeasureReport> {
    let m = validate(dirs)?;
    if m > MAX_EXACT_DIM || (dirs.len() > 2 * m + 8 && subset_count(dirs.len(), m) > MAX_SUBSETS) {
        return Err(Error::EnumerationBudget {
            m,
            size: dirs.len(),
        });
    }
    let unit = normalized(dirs);
    let mut search = Search {
        dirs: &unit,
        m,
        best: None,
        rank: 0,
        cosines: vec![0.0; unit.len()],
    };
    if m == 1 {
        search.offer_normal(&[]);
    }
    search.visit(0, &mut Vec::new(), &mut Vec::new(), &DVector::zeros(m));

    if search.rank < m {
        let mut span: Vec<DVector<f64>> = Vec::new();
        for d in &unit {
            let mut r = d.clone();
            linalg::orthogonalize(&mut r, &span);
            let norm = r.norm();
            if norm * norm >= PIVOT_TOL {
                span.push(r / norm);
            }
        }
        let v = linalg::complement_vector(&span, m);
        search.offer(&v, Expect::Any);
    }

    let best = search
        .best
        .ok_or_else(|| Error::Internal("no admissible cosine-measure candidate".into()))?;
    let cm = best.value;
    Ok(MeasureReport {
        cosine_measure: cm,
        complexity_measure: (cm > 0.0).then(|| dirs.len() as f64 / (cm * cm)),
        cardinality: dirs.len(),
        witness: best.witness.iter().copied().collect(),
        active_set: best.active_set,
    })
}

/// Upper estimate of the cosine measure from `samples` uniform unit vectors.
pub fn cosine_measure_sampled(dirs: &[DVector<f64>], samples: usize, seed: u64) -> Result<f64> {
    let m = validate(dirs)?;
    let unit = normalized(dirs);
    let mut stream = rng::stream(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples.max(1) {
        let v = rng::unit_vector(&mut stream, m);
        let phi = unit
            .iter()
            .map(|d| d.dot(&v))
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(phi);
    }
    Ok(best)
}

/// `|D| · cm(D)⁻²`; fails when `D` is not positively spanning.
pub fn complexity_measure(dirs: &[DVector<f64>]) -> Result<f64> {
    let report = cosine_measure_exact(dirs)?;
    report
        .complexity_measure
        .ok_or(Error::NotPositiveSpanning(report.cosine_measure))
}
