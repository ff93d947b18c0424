use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldPoint};
use crate::linalg;
use crate::rng;
use crate::solver::Problem;

/// Number of points in the barycenter problems.
pub const BARYCENTER_POINTS: usize = 10;
/// Eigenvalue range of the quadratic's Hessian.
pub const QUADRATIC_SPECTRUM: (f64, f64) = (0.1, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BarycenterAmbient,
    BarycenterOnManifold,
    StronglyConvexQuadratic,
    RayleighSphere,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::BarycenterAmbient,
        Family::BarycenterOnManifold,
        Family::StronglyConvexQuadratic,
        Family::RayleighSphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::BarycenterAmbient => "barycenter_ambient",
            Family::BarycenterOnManifold => "barycenter_on_manifold",
            Family::StronglyConvexQuadratic => "strongly_convex_quadratic",
            Family::RayleighSphere => "rayleigh_sphere",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }

    /// Smallest codimension the family supports.
    pub fn min_codim(self) -> usize {
        match self {
            Family::RayleighSphere => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub instance_seed: u64,
}

impl ProblemSpec {
    /// Spec with a content-addressed seed, so adding solvers or families
    /// never reshuffles existing instances.
    pub fn derived(family: Family, m: usize, n: usize, base_seed: u64, index: usize) -> Self {
        ProblemSpec {
            family,
            m,
            n,
            instance_seed: rng::derive_seed(
                "bench-instance",
                &[base_seed, family.index(), m as u64, n as u64, index as u64],
            ),
        }
    }

    pub fn codim(&self) -> usize {
        self.n - self.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < self.m + self.family.min_codim() {
            return Err(Error::InvalidConfig(format!(
                "{} needs m >= 1 and n >= m + {}, got m = {}, n = {}",
                self.family.name(),
                self.family.min_codim(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }
}

/// A generated problem with its analytic optimum.
#[derive(Clone)]
pub struct Instance {
    pub spec: ProblemSpec,
    pub problem: Problem,
    pub f_star: f64,
    pub x_star: DVector<f64>,
    /// Lipschitz constant of the pulled-back gradient, for diagnostics.
    pub lipschitz: f64,
}

fn haar_frame<R: Rng>(r: &mut R, n: usize, m: usize) -> DMatrix<f64> {
    linalg::haar_orthogonal(r, n).columns(0, m).into_owned()
}

/// `Σ ‖x_i - x‖²` over the points; minimized on a subspace at `ZZᵀ·mean`.
fn barycenter(spec: ProblemSpec, on_manifold: bool) -> Result<Instance> {
    let (m, n) = (spec.m, spec.n);
    let mut r = rng::stream(spec.instance_seed);
    let z = haar_frame(&mut r, n, m);
    let proj = &z * z.transpose();
    let points: Vec<DVector<f64>> = (0..BARYCENTER_POINTS)
        .map(|_| {
            let g = rng::gaussian_vector(&mut r, n);
            if on_manifold {
                &proj * g
            } else {
                g
            }
        })
        .collect();
    let manifold = Manifold::subspace(z)?;
    let x0 = manifold.random_point(&mut r);
    barycenter_from_points(spec, manifold, points, x0)
}

pub fn barycenter_from_points(
    spec: ProblemSpec,
    manifold: Manifold,
    points: Vec<DVector<f64>>,
    x0: ManifoldPoint,
) -> Result<Instance> {
    let Manifold::Subspace { basis: z } = &manifold else {
        return Err(Error::InvalidManifold("barycenter problems live on subspaces".into()));
    };
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = z.nrows();
    let count = points.len() as f64;
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / count;
    let x_star = z * (z.transpose() * mean);
    let pts = Arc::new(points);
    let objective = {
        let pts = pts.clone();
        move |x: &DVector<f64>| pts.iter().map(|p| (p - x).norm_squared()).sum::<f64>()
    };
    let gradient = {
        let pts = pts.clone();
        move |x: &DVector<f64>| pts.iter().fold(DVector::zeros(x.len()), |acc, p| acc + (x - p) * 2.0)
    };
    let f_star = objective(&x_star);
    let problem = Problem::new(manifold, x0, Arc::new(objective))
        .with_gradient(Arc::new(gradient))
        .with_id(spec.instance_seed);
    Ok(Instance {
        spec,
        problem,
        f_star,
        x_star,
        lipschitz: 2.0 * count,
    })
}

/// `½⟨Ax, x⟩ - ⟨b, x⟩` with `A = QΛQᵀ`; on `span(Z)` the minimizer is
/// `Z (ZᵀAZ)⁻¹ Zᵀb`.
fn quadratic(spec: ProblemSpec) -> Result<Instance> {
    let (m, n) = (spec.m, spec.n);
    let mut r = rng::stream(spec.instance_seed);
    let z = haar_frame(&mut r, n, m);
    let q = linalg::haar_orthogonal(&mut r, n);
    let (lo, hi) = QUADRATIC_SPECTRUM;
    let lambda = DVector::from_fn(n, |_, _| r.random_range(lo..hi));
    let a = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let b = rng::gaussian_vector(&mut r, n);
    let manifold = Manifold::subspace(z.clone())?;
    let x0 = manifold.random_point(&mut r);

    let reduced = z.transpose() * &a * &z;
    let chol = reduced.cholesky().ok_or(Error::Cholesky)?;
    let x_star = &z * chol.solve(&(z.transpose() * &b));
    let lipschitz = linalg::symmetric_spectral_norm(&a);
    let a = Arc::new(a);
    let b = Arc::new(b);
    let objective = {
        let (a, b) = (a.clone(), b.clone());
        move |x: &DVector<f64>| 0.5 * x.dot(&(a.as_ref() * x)) - b.dot(x)
    };
    let gradient = {
        let (a, b) = (a.clone(), b.clone());
        move |x: &DVector<f64>| a.as_ref() * x - b.as_ref()
    };
    let f_star = objective(&x_star);
    let problem = Problem::new(manifold, x0, Arc::new(objective))
        .with_gradient(Arc::new(gradient))
        .with_id(spec.instance_seed);
    Ok(Instance {
        spec,
        problem,
        f_star,
        x_star,
        lipschitz,
    })
}

/// `⟨x, Ax⟩` on `S^m × {0}`; the optimum is the smallest eigenvalue of the
/// leading `(m+1) × (m+1)` block.
fn rayleigh(spec: ProblemSpec) -> Result<Instance> {
    let (m, n) = (spec.m, spec.n);
    let mut r = rng::stream(spec.instance_seed);
    let g = rng::gaussian_matrix(&mut r, n, n);
    let a = (&g + g.transpose()) * 0.5;
    let manifold = Manifold::embedded_sphere(m, n)?;
    let x0 = manifold.random_point(&mut r);

    let block = a.view((0, 0), (m + 1, m + 1)).into_owned();
    let eig = block.clone().symmetric_eigen();
    let (imin, f_star) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let mut x_star = DVector::zeros(n);
    x_star.rows_mut(0, m + 1).copy_from(&eig.eigenvectors.column(imin));
    // Exponential-map pullbacks of ⟨x, Ax⟩ have second derivative at most
    // 2‖A‖ plus a curvature term 2ρ(A).
    let lipschitz = 4.0 * linalg::symmetric_spectral_norm(&a);
    let a = Arc::new(a);
    let objective = {
        let a = a.clone();
        move |x: &DVector<f64>| x.dot(&(a.as_ref() * x))
    };
    let gradient = {
        let a = a.clone();
        move |x: &DVector<f64>| a.as_ref() * x * 2.0
    };
    let problem = Problem::new(manifold, x0, Arc::new(objective))
        .with_gradient(Arc::new(gradient))
        .with_id(spec.instance_seed);
    Ok(Instance {
        spec,
        problem,
        f_star,
        x_star,
        lipschitz,
    })
}

/// Deterministic in `spec.instance_seed`.
pub fn generate_instance(spec: ProblemSpec) -> Result<Instance> {
    spec.validate()?;
    match spec.family {
        Family::BarycenterAmbient => barycenter(spec, false),
        Family::BarycenterOnManifold => barycenter(spec, true),
        Family::StronglyConvexQuadratic => quadratic(spec),
        Family::RayleighSphere => rayleigh(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, m: usize, n: usize, seed: u64) -> ProblemSpec {
        ProblemSpec::derived(family, m, n, seed, 0)
    }

    #[test]
    fn barycenter_optimum_matches_a_least_squares_solve() {
        for family in [Family::BarycenterAmbient, Family::BarycenterOnManifold] {
            let inst = generate_instance(spec(family, 3, 7, 2)).unwrap();
            let Manifold::Subspace { basis: z } = &inst.problem.manifold else {
                panic!()
            };
            // minimize Σ‖x_i - Zy‖² over y with a generic solver: 10·ZᵀZ y = Zᵀ Σ x_i
            let f = &inst.problem.objective;
            let grad = inst.problem.euclid_gradient.as_ref().unwrap();
            let g0 = z.transpose() * grad(&DVector::zeros(7));
            let y = (z.transpose() * z * 20.0).lu().solve(&(-g0)).unwrap();
            let x = z * y;
            assert!((f(&x) - inst.f_star).abs() < 1e-10);
            assert!((x - &inst.x_star).norm() < 1e-10);
        }
    }

    #[test]
    fn equal_points_give_zero() {
        let manifold = Manifold::subspace(DMatrix::identity(4, 2)).unwrap();
        let z1 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        let x0 = manifold.random_point(&mut rng::stream(0));
        let inst = barycenter_from_points(
            spec(Family::BarycenterOnManifold, 2, 4, 0),
            manifold,
            vec![z1.clone(); BARYCENTER_POINTS],
            x0,
        )
        .unwrap();
        assert_eq!(inst.f_star, 0.0);
        assert_eq!(inst.x_star, z1);
    }

    #[test]
    fn quadratic_optimum_is_stationary_on_the_subspace() {
        let inst = generate_instance(spec(Family::StronglyConvexQuadratic, 4, 12, 5)).unwrap();
        let grad = inst.problem.euclid_gradient.as_ref().unwrap();
        let Manifold::Subspace { basis: z } = &inst.problem.manifold else {
            panic!()
        };
        assert!((z.transpose() * grad(&inst.x_star)).norm() < 1e-10);
        assert!(inst.f_star <= (inst.problem.objective)(inst.problem.x0.coords()));
        assert!(inst.lipschitz <= 1.0 + 1e-12);
    }

    #[test]
    fn rayleigh_optimum_is_attained() {
        let inst = generate_instance(spec(Family::RayleighSphere, 3, 6, 8)).unwrap();
        let f = &inst.problem.objective;
        assert!((f(&inst.x_star) - inst.f_star).abs() < 1e-10);
        let mut r = rng::stream(1);
        for _ in 0..200 {
            let x = inst.problem.manifold.random_point(&mut r);
            assert!(f(x.coords()) >= inst.f_star - 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic_and_validated() {
        let s = spec(Family::RayleighSphere, 2, 5, 3);
        let a = generate_instance(s).unwrap();
        let b = generate_instance(s).unwrap();
        assert_eq!(a.problem.x0, b.problem.x0);
        assert_eq!(a.f_star, b.f_star);
        assert!(generate_instance(spec(Family::RayleighSphere, 2, 2, 0)).is_err());
        assert!(generate_instance(spec(Family::BarycenterAmbient, 2, 2, 0)).is_ok());
        assert_ne!(
            ProblemSpec::derived(Family::RayleighSphere, 2, 5, 3, 0).instance_seed,
            ProblemSpec::derived(Family::RayleighSphere, 2, 5, 3, 1).instance_seed
        );
    }
}
