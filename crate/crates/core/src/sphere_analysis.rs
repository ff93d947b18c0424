//! Cosine measure of the projected `±basis` polling set on `S^{n-1}`.
//!
//! Projecting `{±e_1, …, ±e_n}` onto `T_x S^{n-1}` and normalizing gives a
//! set whose cosine measure is `1/τ(x)`, with `τ(x)` the largest 2-norm over a
//! polytope whose extreme points are indexed by a pivot `i` in the support of
//! `x` and a sign pattern on the other coordinates. Writing
//! `a_j = x_j √(1 - x_j²)` and `S = Σ_{j≠i} ε_j a_j`, the candidate at
//! `(i, ε)` is admissible when `|S| ≤ a_i` and has squared norm
//!
//! ```text
//! Σ_{j≠i} (1 - x_j²) + S²/x_i²  =  n - 2 + x_i² + S²/x_i².
//! ```
//!
//! So for each pivot only `max |S|` subject to `|S| ≤ a_i` matters: a bounded
//! subset-sum over signs, solved here by meet in the middle.
//!
//! Bounds: `1/√(n-1) ≤ cm(x) ≤ 1/√(n-2+‖x‖∞²) ≤ √n/(n-1)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean_pss::pss_plus_minus;
use crate::geometry::{BasisMode, Manifold, SPHERE_TOL};
use crate::rng;
use crate::tangent_pss::{projected_pss, tangent_cosine_measure, DEFAULT_DROP_TOL};

/// Coordinates with `|x_i|` at or below this count as zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Largest support handled by the enumeration (two halves of at most 2^20
/// sign patterns each).
pub const MAX_SUPPORT: usize = 40;
/// Largest ambient dimension accepted by [`cross_check_generic`].
pub const MAX_GENERIC_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereCmResult {
    pub x: Vec<f64>,
    pub support_size: usize,
    pub tau: f64,
    pub cm: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// `1/√(n-1)`.
pub fn lower_bound(n: usize) -> f64 {
    1.0 / ((n - 1) as f64).sqrt()
}

/// `√n/(n-1)`, the largest value the upper bound takes over the sphere.
pub fn global_upper_bound(n: usize) -> f64 {
    (n as f64).sqrt() / (n - 1) as f64
}

/// Closed form at the points with `k` equal nonzero coordinates:
/// `1/√(n-2+1/k)` for odd `k`, `1/√(n-1)` for even `k`.
pub fn special_point_cm(n: usize, k: usize) -> f64 {
    if k % 2 == 1 {
        1.0 / ((n - 2) as f64 + 1.0 / k as f64).sqrt()
    } else {
        lower_bound(n)
    }
}

/// `(1, …, 1, 0, …, 0)/√k` in `R^n`.
pub fn special_point(n: usize, k: usize) -> DVector<f64> {
    let v = 1.0 / (k as f64).sqrt();
    DVector::from_fn(n, |i, _| if i < k { v } else { 0.0 })
}

fn check_unit(x: &DVector<f64>) -> Result<()> {
    if x.len() < 3 {
        return Err(Error::InvalidManifold(format!(
            "sphere analysis needs n >= 3, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dev = (x.norm() - 1.0).abs();
    if dev > SPHERE_TOL {
        return Err(Error::NotOnManifold(format!("| ‖x‖ - 1 | = {dev:e}")));
    }
    Ok(())
}

/// All signed sums `Σ ε_j a_j`, sorted.
fn signed_sums(a: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0];
    for &v in a {
        sums = sums.iter().flat_map(|s| [s + v, s - v]).collect();
    }
    sums.sort_by(f64::total_cmp);
    sums
}

/// Largest `S` over sign patterns with `S ≤ bound`, if any.
fn max_signed_sum_below(a: &[f64], bound: f64) -> Option<f64> {
    let (left, right) = a.split_at(a.len() / 2);
    let left = signed_sums(left);
    let right = signed_sums(right);
    let mut best: Option<f64> = None;
    for l in &left {
        let target = bound - l;
        let idx = right.partition_point(|r| *r <= target);
        if idx > 0 {
            let s = l + right[idx - 1];
            if best.is_none_or(|b| s > b) {
                best = Some(s);
            }
        }
    }
    best
}

/// Exact cosine measure of the projected `±basis` set at `x ∈ S^{n-1}`.
pub fn cm_projected_plusminus_exact(x: &DVector<f64>) -> Result<SphereCmResult> {
    check_unit(x)?;
    let n = x.len();
    // signed permutation to nonnegative, nonincreasing coordinates
    let mut c: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    c.sort_by(|a, b| b.total_cmp(a));
    let k = c.iter().take_while(|v| **v > ZERO_TOL).count();
    if k > MAX_SUPPORT {
        return Err(Error::SupportBudget { k, max: MAX_SUPPORT });
    }
    let support = &c[..k];
    let inf_norm = support[0];

    let tau2 = if k == 1 {
        (n - 1) as f64
    } else {
        let a: Vec<f64> = support.iter().map(|v| v * (1.0 - v * v).max(0.0).sqrt()).collect();
        let scale: f64 = a.iter().sum();
        let mut best: Option<f64> = None;
        for i in 0..k {
            let xi = support[i];
            let others: Vec<f64> = a.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            let slack = 1e-12 * scale.max(a[i]);
            let Some(s) = max_signed_sum_below(&others, a[i] + slack) else {
                continue;
            };
            if s < -a[i] - slack {
                continue;
            }
            let nu2 = ((s * s) / (xi * xi)).min(1.0 - xi * xi);
            let cand = (n - 2) as f64 + xi * xi + nu2;
            if best.is_none_or(|b| cand > b) {
                best = Some(cand);
            }
        }
        best.ok_or_else(|| Error::Internal("no admissible extreme point".into()))?
    };
    let tau = tau2.sqrt();
    Ok(SphereCmResult {
        x: x.iter().copied().collect(),
        support_size: k,
        tau,
        cm: 1.0 / tau,
        lower_bound: lower_bound(n),
        upper_bound: 1.0 / ((n - 2) as f64 + inf_norm * inf_norm).sqrt(),
    })
}

/// Cosine measure of the actually projected set, measured in a tangent basis.
pub fn cm_projected_plusminus_generic(x: &DVector<f64>) -> Result<f64> {
    check_unit(x)?;
    let n = x.len();
    let sphere = Manifold::unit_sphere(n)?;
    let p = sphere.point(x.clone())?;
    let pss = pss_plus_minus(&DMatrix::identity(n, n))?;
    let set = projected_pss(&sphere, &p, &pss, DEFAULT_DROP_TOL)?;
    let basis = sphere.tangent_basis(&p, BasisMode::Canonical)?;
    Ok(tangent_cosine_measure(&sphere, &set, &basis)?.cosine_measure)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub exact: f64,
    pub generic: f64,
    pub gap: f64,
}

pub fn cross_check_generic(x: &DVector<f64>) -> Result<CrossCheck> {
    if x.len() > MAX_GENERIC_DIM {
        return Err(Error::InvalidConfig(format!(
            "generic cross-check supports n <= {MAX_GENERIC_DIM}, got {}",
            x.len()
        )));
    }
    let exact = cm_projected_plusminus_exact(x)?.cm;
    let generic = cm_projected_plusminus_generic(x)?;
    Ok(CrossCheck {
        exact,
        generic,
        gap: (exact - generic).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub theta: f64,
    pub phi: f64,
    pub x: [f64; 3],
    pub cm: f64,
}

/// Equiangular grid on `S²`: `θ_i = πi/R` for `i = 0..=R`, `φ_j = 2πj/R` for
/// `j < R`, with `x = (sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn sphere_heatmap(resolution: usize) -> Result<Vec<HeatmapRow>> {
    if resolution < 8 {
        return Err(Error::InvalidConfig(format!(
            "heatmap resolution must be at least 8, got {resolution}"
        )));
    }
    let r = resolution;
    (0..(r + 1) * r)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / r, idx % r);
            let theta = std::f64::consts::PI * i as f64 / r as f64;
            let phi = 2.0 * std::f64::consts::PI * j as f64 / r as f64;
            let v = DVector::from_column_slice(&[
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]);
            let v = &v / v.norm();
            let cm = cm_projected_plusminus_exact(&v)?.cm;
            Ok(HeatmapRow {
                theta,
                phi,
                x: [v[0], v[1], v[2]],
                cm,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub lower: f64,
    /// `√n/(n-1)`.
    pub upper: f64,
    pub value_k1: f64,
    pub value_k_nminus1: f64,
    pub value_k_n: f64,
    pub mean_random: f64,
}

/// Special-point values and the mean over `samples` uniform random points
/// (normalized Gaussians) for each `n`.
pub fn cm_range_scan(n_list: &[usize], samples: usize, seed: u64) -> Result<Vec<ScanRow>> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be positive".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            if n < 3 {
                return Err(Error::InvalidConfig(format!("scan needs n >= 3, got {n}")));
            }
            let at = |k| cm_projected_plusminus_exact(&special_point(n, k)).map(|r| r.cm);
            let values = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let mut r = rng::stream(rng::derive_seed("cm-range-scan", &[seed, n as u64, s as u64]));
                    cm_projected_plusminus_exact(&rng::unit_vector(&mut r, n)).map(|res| res.cm)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanRow {
                n,
                lower: lower_bound(n),
                upper: global_upper_bound(n),
                value_k1: at(1)?,
                value_k_nminus1: at(n - 1)?,
                value_k_n: at(n)?,
                mean_random: values.iter().sum::<f64>() / samples as f64,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub n: usize,
    pub chi_projected: usize,
    pub chi_intrinsic: usize,
    /// Projected cardinality at `(1, …, 1)/√n` (`n ≥ 3`).
    pub witness_cardinality: Option<usize>,
    /// Cosine measure at `(1, …, 1)/√n` (`n ≥ 3`).
    pub witness_cm: Option<f64>,
}

/// `χ_projected = 2n(n-1)` against `χ_intrinsic = 2(n-1)²`, with the
/// all-ones witness attaining both the largest cardinality and, for even
/// `n`, the smallest cosine measure.
pub fn complexity_table(n_list: &[usize]) -> Result<Vec<ComplexityRow>> {
    n_list
        .iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::InvalidConfig(format!("table needs n >= 2, got {n}")));
            }
            let (witness_cardinality, witness_cm) = if n >= 3 {
                let e = special_point(n, n);
                let sphere = Manifold::unit_sphere(n)?;
                let p = sphere.point(e.clone())?;
                let set = projected_pss(&sphere, &p, &pss_plus_minus(&DMatrix::identity(n, n))?, DEFAULT_DROP_TOL)?;
                (Some(set.len()), Some(cm_projected_plusminus_exact(&e)?.cm))
            } else {
                (None, None)
            };
            Ok(ComplexityRow {
                n,
                chi_projected: 2 * n * (n - 1),
                chi_intrinsic: 2 * (n - 1) * (n - 1),
                witness_cardinality,
                witness_cm,
            })
        })
        .collect()
}

pub fn heatmap_csv(rows: &[HeatmapRow]) -> String {
    let mut out = String::from("theta,phi,x1,x2,x3,cm\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.theta, r.phi, r.x[0], r.x[1], r.x[2], r.cm);
    }
    out
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("n,lower,upper,value_k1,value_k_nminus1,value_k_n,mean_random\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n, r.lower, r.upper, r.value_k1, r.value_k_nminus1, r.value_k_n, r.mean_random
        );
    }
    out
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut out = String::from("n,chi_projected,chi_intrinsic,witness_cardinality,witness_cm\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.chi_projected,
            r.chi_intrinsic,
            opt(r.witness_cardinality.map(|v| v.to_string())),
            opt(r.witness_cm.map(|v| v.to_string()))
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal enumeration over every pivot and sign pattern.
    fn brute_force_tau(x: &[f64]) -> f64 {
        let n = x.len();
        let support: Vec<usize> = (0..n).filter(|&i| x[i].abs() > ZERO_TOL).collect();
        let mut best = f64::NEG_INFINITY;
        for &i in &support {
            let others: Vec<usize> = support.iter().copied().filter(|&j| j != i).collect();
            for mask in 0u32..(1 << others.len()) {
                let mut nu = 0.0;
                for (b, &j) in others.iter().enumerate() {
                    let eps = if mask >> b & 1 == 1 { -1.0 } else { 1.0 };
                    nu += eps * x[j] * (1.0 - x[j] * x[j]).sqrt();
                }
                nu = -nu / x[i];
                if nu.abs() <= (1.0 - x[i] * x[i]).sqrt() + 1e-12 {
                    let rest: f64 = (0..n).filter(|&j| j != i).map(|j| 1.0 - x[j] * x[j]).sum();
                    best = best.max(rest + nu * nu);
                }
            }
        }
        best.sqrt()
    }

    fn s(v: f64) -> f64 {
        v.sqrt()
    }

    #[test]
    fn special_points_in_four_dimensions() {
        let e1 = special_point(4, 1);
        assert!((cm_projected_plusminus_exact(&e1).unwrap().cm - 1.0 / s(3.0)).abs() < 1e-12);
        let k3 = special_point(4, 3);
        assert!((cm_projected_plusminus_exact(&k3).unwrap().cm - s(3.0 / 7.0)).abs() < 1e-10);
        let k2 = special_point(4, 2);
        assert!((cm_projected_plusminus_exact(&k2).unwrap().cm - 1.0 / s(3.0)).abs() < 1e-10);
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut r = rng::stream(17);
        for n in 3..=10 {
            for _ in 0..20 {
                let x = rng::unit_vector(&mut r, n);
                let fast = cm_projected_plusminus_exact(&x).unwrap().tau;
                let slow = brute_force_tau(x.as_slice());
                assert!((fast - slow).abs() < 1e-10, "n={n}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn sign_and_permutation_invariance() {
        let mut r = rng::stream(5);
        let x = rng::unit_vector(&mut r, 6);
        let base = cm_projected_plusminus_exact(&x).unwrap().cm;
        let y = DVector::from_column_slice(&[-x[3], x[0], x[5], -x[1], x[2], -x[4]]);
        assert!((cm_projected_plusminus_exact(&y).unwrap().cm - base).abs() < 1e-14);
    }

    #[test]
    fn cross_check_examples() {
        let e1 = special_point(3, 1);
        let c = cross_check_generic(&e1).unwrap();
        assert!((c.exact - 1.0 / s(2.0)).abs() < 1e-12 && c.gap < 1e-8);
        let ones = special_point(3, 3);
        let c = cross_check_generic(&ones).unwrap();
        assert!((c.exact - s(3.0) / 2.0).abs() < 1e-10 && c.gap < 1e-8);
        let mut r = rng::stream(9);
        for _ in 0..50 {
            let c = cross_check_generic(&rng::unit_vector(&mut r, 3)).unwrap();
            assert!(c.gap <= 1e-8, "{c:?}");
        }
        assert!(cross_check_generic(&special_point(9, 1)).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(cm_projected_plusminus_exact(&DVector::from_column_slice(&[1.0, 0.0])).is_err());
        assert!(cm_projected_plusminus_exact(&DVector::from_column_slice(&[1.0, 1.0, 0.0])).is_err());
        assert!(matches!(
            cm_projected_plusminus_exact(&special_point(50, 45)),
            Err(Error::SupportBudget { k: 45, .. })
        ));
    }

    #[test]
    fn heatmap_poles_and_symmetry() {
        let rows = sphere_heatmap(16).unwrap();
        assert_eq!(rows.len(), 17 * 16);
        for r in rows.iter().filter(|r| r.theta == 0.0 || r.theta == std::f64::consts::PI) {
            assert!((r.cm - 1.0 / s(2.0)).abs() < 1e-12);
        }
        for r in &rows {
            let abs = DVector::from_iterator(3, r.x.iter().map(|v| v.abs()));
            let abs = &abs / abs.norm();
            assert!((cm_projected_plusminus_exact(&abs).unwrap().cm - r.cm).abs() < 1e-12);
        }
        assert!(sphere_heatmap(7).is_err());
        assert!(heatmap_csv(&rows).starts_with("theta,phi,x1,x2,x3,cm\n"));
    }

    #[test]
    fn scan_at_ten() {
        let rows = cm_range_scan(&[10], 20, 1).unwrap();
        let r = rows[0];
        assert!((r.lower - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.value_k1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.upper - s(10.0) / 9.0).abs() < 1e-15);
        assert!(r.mean_random >= r.lower - 1e-9 && r.mean_random <= r.upper + 1e-9);
        assert_eq!(cm_range_scan(&[10], 20, 1).unwrap(), rows);
    }

    #[test]
    fn complexity_rows() {
        let rows = complexity_table(&[2, 3, 4]).unwrap();
        assert_eq!((rows[0].chi_projected, rows[0].chi_intrinsic), (4, 2));
        assert_eq!((rows[1].chi_projected, rows[1].chi_intrinsic), (12, 8));
        assert_eq!(rows[0].witness_cm, None);
        assert_eq!(rows[2].witness_cardinality, Some(8));
        assert!((rows[2].witness_cm.unwrap() - 1.0 / s(3.0)).abs() < 1e-10);
    }
}
