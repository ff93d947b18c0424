//! The three manifold families: unit spheres, spheres embedded in a larger
//! ambient space, and linear subspaces.
//!
//! Every manifold is an embedded submanifold of `R^n` and inherits the
//! ambient inner product, so tangent vectors are plain ambient vectors that
//! satisfy the manifold's tangency condition.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Tolerance for on-sphere checks.
pub const SPHERE_TOL: f64 = 1e-12;
/// Tolerance for tangency, subspace membership and orthonormality checks.
pub const TANGENT_TOL: f64 = 1e-10;

const BASIS_RETRIES: u64 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub enum Manifold {
    /// `S^{n-1} ⊂ R^n`.
    UnitSphere { n: usize },
    /// `S^m × {0_{R^{n-m-1}}} ⊂ R^n`: the sphere lives on the first `m + 1`
    /// coordinates, the rest are held at zero.
    EmbeddedSphere { m: usize, n: usize },
    /// `span(z_1, ..., z_m)` for orthonormal columns `z_i` of `basis` (n × m).
    Subspace { basis: DMatrix<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retraction {
    /// `(x + v) / ‖x + v‖` on spheres.
    Metric,
    /// `cos(‖v‖) x + sin(‖v‖) v / ‖v‖` on spheres.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    Canonical,
    Randomized(u64),
}

/// A point known to lie on the manifold that validated it.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint(DVector<f64>);

impl ManifoldPoint {
    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.0
    }
}

/// An ambient vector known to be tangent at the point it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector(DVector<f64>);

impl TangentVector {
    pub fn dir(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dir(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, alpha: f64) -> TangentVector {
        TangentVector(&self.0 * alpha)
    }
}

fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

impl Manifold {
    pub fn unit_sphere(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidManifold(format!(
                "unit sphere needs n >= 2, got {n}"
            )));
        }
        Ok(Manifold::UnitSphere { n })
    }

    pub fn embedded_sphere(m: usize, n: usize) -> Result<Self> {
        if m < 1 || n < m + 1 {
            return Err(Error::InvalidManifold(format!(
                "embedded sphere needs m >= 1 and n >= m + 1, got m = {m}, n = {n}"
            )));
        }
        Ok(Manifold::EmbeddedSphere { m, n })
    }

    pub fn subspace(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() < 1 || basis.nrows() < basis.ncols() {
            return Err(Error::InvalidManifold(format!(
                "subspace basis must be n x m with n >= m >= 1, got {} x {}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let deviation = linalg::orthogonality_deviation(&basis);
        if deviation > 1e-12 {
            return Err(Error::InvalidManifold(format!(
                "subspace basis columns are not orthonormal (deviation {deviation:e})"
            )));
        }
        Ok(Manifold::Subspace { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::UnitSphere { n } => *n,
            Manifold::EmbeddedSphere { n, .. } => *n,
            Manifold::Subspace { basis } => basis.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::UnitSphere { n } => n - 1,
            Manifold::EmbeddedSphere { m, .. } => *m,
            Manifold::Subspace { basis } => basis.ncols(),
        }
    }

    /// Number of leading coordinates carrying the sphere, if any.
    fn sphere_block(&self) -> Option<usize> {
        match self {
            Manifold::UnitSphere { n } => Some(*n),
            Manifold::EmbeddedSphere { m, .. } => Some(m + 1),
            Manifold::Subspace { .. } => None,
        }
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        let n = self.ambient_dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Validates `coords` as a point of the manifold.
    pub fn point(&self, coords: DVector<f64>) -> Result<ManifoldPoint> {
        self.check_dim(&coords)?;
        check_finite(&coords)?;
        let mut coords = coords;
        match self {
            Manifold::UnitSphere { .. } | Manifold::EmbeddedSphere { .. } => {
                let s = self.sphere_block().unwrap();
                let norm = coords.rows(0, s).norm();
                if (norm - 1.0).abs() > SPHERE_TOL {
                    return Err(Error::NotOnManifold(format!(
                        "sphere block has norm {norm}"
                    )));
                }
                for i in s..coords.len() {
                    if coords[i].abs() > SPHERE_TOL {
                        return Err(Error::NotOnManifold(format!(
                            "coordinate {i} must be zero, got {}",
                            coords[i]
                        )));
                    }
                    coords[i] = 0.0;
                }
            }
            Manifold::Subspace { basis } => {
                let inside = basis * (basis.transpose() * &coords);
                let residual = (&coords - inside).norm();
                if residual > TANGENT_TOL * coords.norm().max(1.0) {
                    return Err(Error::NotOnManifold(format!(
                        "distance to subspace {residual:e}"
                    )));
                }
            }
        }
        Ok(ManifoldPoint(coords))
    }

    /// Orthogonal projection of `v` onto `T_x M`.
    pub fn project(&self, x: &ManifoldPoint, v: &DVector<f64>) -> Result<TangentVector> {
        self.check_dim(v)?;
        check_finite(v)?;
        Ok(TangentVector(self.project_raw(x.coords(), v)))
    }

    fn project_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::UnitSphere { .. } | Manifold::EmbeddedSphere { .. } => {
                let s = self.sphere_block().unwrap();
                let xb = x.rows(0, s);
                let vb = v.rows(0, s);
                let c = xb.dot(&vb);
                let mut out = DVector::zeros(v.len());
                for i in 0..s {
                    out[i] = vb[i] - c * xb[i];
                }
                out
            }
            Manifold::Subspace { basis } => basis * (basis.transpose() * v),
        }
    }

    /// Distance from `v` to `T_x M`.
    pub fn tangent_residual(&self, x: &ManifoldPoint, v: &DVector<f64>) -> f64 {
        (v - self.project_raw(x.coords(), v)).norm()
    }

    /// Wraps `v` as a tangent vector at `x` after checking tangency.
    pub fn tangent(&self, x: &ManifoldPoint, v: DVector<f64>) -> Result<TangentVector> {
        self.check_dim(&v)?;
        check_finite(&v)?;
        let residual = self.tangent_residual(x, &v);
        if residual > TANGENT_TOL * v.norm().max(1.0) {
            return Err(Error::NotTangent { residual });
        }
        Ok(TangentVector(v))
    }

    pub fn retract(
        &self,
        x: &ManifoldPoint,
        v: &TangentVector,
        scheme: Retraction,
    ) -> ManifoldPoint {
        let xc = x.coords();
        let vc = v.dir();
        match self {
            Manifold::Subspace { .. } => ManifoldPoint(xc + vc),
            Manifold::UnitSphere { .. } | Manifold::EmbeddedSphere { .. } => {
                let s = self.sphere_block().unwrap();
                let t = vc.norm();
                if t == 0.0 {
                    return x.clone();
                }
                let mut y = match scheme {
                    Retraction::Metric => xc + vc,
                    Retraction::Exponential => xc * t.cos() + vc * (t.sin() / t),
                };
                let norm = y.rows(0, s).norm();
                y.rows_mut(0, s).unscale_mut(norm);
                for i in s..y.len() {
                    y[i] = 0.0;
                }
                ManifoldPoint(y)
            }
        }
    }

    /// Euclidean gradient projected onto the tangent space.
    pub fn riemannian_gradient(
        &self,
        x: &ManifoldPoint,
        euclid_grad: &DVector<f64>,
    ) -> Result<TangentVector> {
        self.project(x, euclid_grad)
    }

    /// Orthonormal basis of `T_x M` with `dim()` vectors.
    pub fn tangent_basis(&self, x: &ManifoldPoint, mode: BasisMode) -> Result<Vec<TangentVector>> {
        match (self, mode) {
            (Manifold::Subspace { basis }, BasisMode::Canonical) => Ok(basis
                .column_iter()
                .map(|c| TangentVector(c.into_owned()))
                .collect()),
            (Manifold::Subspace { basis }, BasisMode::Randomized(seed)) => {
                let q = linalg::haar_orthogonal(&mut rng::stream(seed), basis.ncols());
                let rotated = basis * q;
                Ok(rotated
                    .column_iter()
                    .map(|c| TangentVector(c.into_owned()))
                    .collect())
            }
            (Manifold::UnitSphere { .. }, BasisMode::Canonical) => Ok(self.axis_sphere_basis(x)),
            (Manifold::EmbeddedSphere { .. }, BasisMode::Canonical) => {
                let seed = rng::seed_from_coords("embedded-sphere-basis", x.coords());
                self.qr_sphere_basis(x, seed)
            }
            (_, BasisMode::Randomized(seed)) => self.qr_sphere_basis(x, seed),
        }
    }

    /// Gram-Schmidt of `x` followed by every coordinate axis except the one
    /// most aligned with `x`; the axes left over are independent of `x`.
    fn axis_sphere_basis(&self, x: &ManifoldPoint) -> Vec<TangentVector> {
        let s = self.sphere_block().unwrap();
        let n = self.ambient_dim();
        let xb: DVector<f64> = x.coords().rows(0, s).into_owned();
        let skip = xb.iamax();
        let mut ortho = vec![xb];
        for j in (0..s).filter(|&j| j != skip) {
            let mut r = DVector::zeros(s);
            r[j] = 1.0;
            linalg::orthogonalize(&mut r, &ortho);
            let norm = r.norm();
            ortho.push(r / norm);
        }
        ortho
            .into_iter()
            .skip(1)
            .map(|b| TangentVector(embed(&b, n)))
            .collect()
    }

    /// QR of a Gaussian `s × s` matrix whose first column is the sphere block
    /// of `x`; the trailing columns of `Q` span the tangent space.
    fn qr_sphere_basis(&self, x: &ManifoldPoint, seed: u64) -> Result<Vec<TangentVector>> {
        let s = self.sphere_block().unwrap();
        let n = self.ambient_dim();
        let mut stream = rng::stream(seed);
        for attempt in 0..BASIS_RETRIES {
            stream.set_stream(attempt);
            let mut a = rng::gaussian_matrix(&mut stream, s, s);
            a.set_column(0, &x.coords().rows(0, s));
            let qr = a.qr();
            let r = qr.r();
            if (0..s).any(|i| r[(i, i)].abs() < TANGENT_TOL) {
                continue;
            }
            let q = qr.q();
            return Ok((1..s)
                .map(|j| TangentVector(embed(&q.column(j).into_owned(), n)))
                .collect());
        }
        Err(Error::BasisDegenerate(BASIS_RETRIES as usize))
    }

    /// Random point: normalized Gaussian on spheres, Gaussian coefficients in
    /// the subspace basis otherwise.
    pub fn random_point<R: rand::Rng>(&self, rng: &mut R) -> ManifoldPoint {
        match self {
            Manifold::Subspace { basis } => {
                ManifoldPoint(basis * rng::gaussian_vector(rng, basis.ncols()))
            }
            _ => {
                let s = self.sphere_block().unwrap();
                ManifoldPoint(embed(&rng::unit_vector(rng, s), self.ambient_dim()))
            }
        }
    }
}

fn embed(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::UnitSphere { n } => write!(f, "S^{} in R^{}", n - 1, n),
            Manifold::EmbeddedSphere { m, n } => write!(f, "S^{m} x {{0}} in R^{n}"),
            Manifold::Subspace { basis } => {
                write!(f, "span of {} vectors in R^{}", basis.ncols(), basis.nrows())
            }
        }
    }
}

/// JSON form: `{"kind":"unit_sphere","n":5}`,
/// `{"kind":"embedded_sphere","m":4,"n":8}`, `{"kind":"subspace","Z":[[..],..]}`
/// with `Z` listed row by row (n rows of m entries).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifoldRepr {
    UnitSphere {
        n: usize,
    },
    EmbeddedSphere {
        m: usize,
        n: usize,
    },
    Subspace {
        #[serde(rename = "Z")]
        z: Vec<Vec<f64>>,
    },
}

impl TryFrom<ManifoldRepr> for Manifold {
    type Error = Error;

    fn try_from(repr: ManifoldRepr) -> Result<Self> {
        match repr {
            ManifoldRepr::UnitSphere { n } => Manifold::unit_sphere(n),
            ManifoldRepr::EmbeddedSphere { m, n } => Manifold::embedded_sphere(m, n),
            ManifoldRepr::Subspace { z } => {
                let rows = z.len();
                let cols = z.first().map_or(0, Vec::len);
                if z.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidManifold("ragged Z matrix".into()));
                }
                let flat: Vec<f64> = z.into_iter().flatten().collect();
                Manifold::subspace(DMatrix::from_row_slice(rows, cols, &flat))
            }
        }
    }
}

impl From<Manifold> for ManifoldRepr {
    fn from(m: Manifold) -> Self {
        match m {
            Manifold::UnitSphere { n } => ManifoldRepr::UnitSphere { n },
            Manifold::EmbeddedSphere { m, n } => ManifoldRepr::EmbeddedSphere { m, n },
            Manifold::Subspace { basis } => ManifoldRepr::Subspace {
                z: basis
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        out[i] = 1.0;
        out
    }

    #[test]
    fn sphere_projection_examples() {
        let s = Manifold::unit_sphere(3).unwrap();
        let x = s.point(e(3, 0)).unwrap();
        assert_eq!(s.project(&x, &e(3, 0)).unwrap().norm(), 0.0);
        assert_eq!(s.project(&x, &e(3, 1)).unwrap().dir(), &e(3, 1));

        let x = s.point(v(&[1.0, 1.0, 1.0]) / 3f64.sqrt()).unwrap();
        let p = s.project(&x, &e(3, 0)).unwrap();
        let expected = e(3, 0) - v(&[1.0, 1.0, 1.0]) / 3.0;
        assert!((p.dir() - &expected).norm() < 1e-15);
        assert!((p.norm() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projection_rejects_wrong_dimension() {
        let s = Manifold::unit_sphere(3).unwrap();
        let x = s.point(e(3, 0)).unwrap();
        assert!(matches!(
            s.project(&x, &e(4, 0)),
            Err(Error::DimensionMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn retraction_examples() {
        let s = Manifold::unit_sphere(2).unwrap();
        let x = s.point(e(2, 0)).unwrap();
        let quarter = s.tangent(&x, v(&[0.0, FRAC_PI_2])).unwrap();
        let y = s.retract(&x, &quarter, Retraction::Exponential);
        assert!((y.coords() - e(2, 1)).norm() < 1e-12);

        let unit = s.tangent(&x, v(&[0.0, 1.0])).unwrap();
        let y = s.retract(&x, &unit, Retraction::Metric);
        assert!((y.coords() - v(&[1.0, 1.0]) / 2f64.sqrt()).norm() < 1e-15);

        let zero = s.tangent(&x, v(&[0.0, 0.0])).unwrap();
        assert_eq!(s.retract(&x, &zero, Retraction::Exponential), x);
        assert_eq!(s.retract(&x, &zero, Retraction::Metric), x);
    }

    #[test]
    fn subspace_retractions_are_translations() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let sub = Manifold::subspace(z).unwrap();
        let x = sub.point(v(&[0.5, -1.0, 0.0])).unwrap();
        let d = sub.tangent(&x, v(&[2.0, 3.0, 0.0])).unwrap();
        for scheme in [Retraction::Metric, Retraction::Exponential] {
            assert_eq!(sub.retract(&x, &d, scheme).coords(), &v(&[2.5, 2.0, 0.0]));
        }
    }

    #[test]
    fn subspace_canonical_basis_is_z() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let sub = Manifold::subspace(z.clone()).unwrap();
        let x = sub.point(DVector::zeros(3)).unwrap();
        let b = sub.tangent_basis(&x, BasisMode::Canonical).unwrap();
        assert_eq!(b[0].dir(), &z.column(0).into_owned());
        assert_eq!(b[1].dir(), &z.column(1).into_owned());
    }

    #[test]
    fn circle_canonical_basis_is_e2() {
        let s = Manifold::unit_sphere(2).unwrap();
        let x = s.point(e(2, 0)).unwrap();
        let b = s.tangent_basis(&x, BasisMode::Canonical).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].dir()[1].abs() - 1.0).abs() < 1e-15);
        assert_eq!(b[0].dir()[0], 0.0);
    }

    #[test]
    fn randomized_sphere_basis_is_orthonormal_and_tangent() {
        let s = Manifold::unit_sphere(4).unwrap();
        let x = s.random_point(&mut rng::stream(1));
        let b = s.tangent_basis(&x, BasisMode::Randomized(7)).unwrap();
        assert_eq!(b.len(), 3);
        let dirs: Vec<_> = b.iter().map(|t| t.dir().clone()).collect();
        assert!(linalg::gram_deviation(&dirs) < 1e-10);
        for d in &dirs {
            assert!(d.dot(x.coords()).abs() < 1e-10);
        }
        let again = s.tangent_basis(&x, BasisMode::Randomized(7)).unwrap();
        assert_eq!(b, again);
    }

    #[test]
    fn embedded_sphere_bases_live_on_the_block() {
        let s = Manifold::embedded_sphere(3, 7).unwrap();
        let x = s.random_point(&mut rng::stream(2));
        for mode in [BasisMode::Canonical, BasisMode::Randomized(3)] {
            let b = s.tangent_basis(&x, mode).unwrap();
            assert_eq!(b.len(), 3);
            let dirs: Vec<_> = b.iter().map(|t| t.dir().clone()).collect();
            assert!(linalg::gram_deviation(&dirs) < 1e-10);
            for d in &dirs {
                assert!(s.tangent_residual(&x, d) < 1e-10);
                assert!(d.rows(4, 3).iter().all(|&c| c == 0.0));
            }
        }
        let b1 = s.tangent_basis(&x, BasisMode::Canonical).unwrap();
        let b2 = s.tangent_basis(&x, BasisMode::Canonical).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn gradient_examples() {
        let s = Manifold::unit_sphere(2).unwrap();
        let x = s.point(e(2, 0)).unwrap();
        // f(x) = <x, diag(1,2) x>, euclidean gradient 2Ax = (2, 0) at e1
        let g = s.riemannian_gradient(&x, &v(&[2.0, 0.0])).unwrap();
        assert_eq!(g.norm(), 0.0);

        let s3 = Manifold::unit_sphere(3).unwrap();
        let x = s3.point(e(3, 0)).unwrap();
        let g = s3.riemannian_gradient(&x, &e(3, 1)).unwrap();
        assert_eq!(g.dir(), &e(3, 1));
    }

    #[test]
    fn point_validation() {
        let s = Manifold::unit_sphere(3).unwrap();
        assert!(s.point(v(&[1.0, 1.0, 0.0])).is_err());
        assert!(matches!(s.point(v(&[f64::NAN, 0.0, 0.0])), Err(Error::NonFinite)));
        let es = Manifold::embedded_sphere(1, 4).unwrap();
        assert!(es.point(v(&[1.0, 0.0, 0.5, 0.0])).is_err());
        assert!(Manifold::unit_sphere(1).is_err());
        assert!(Manifold::embedded_sphere(3, 3).is_err());
        assert!(Manifold::subspace(DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn exponential_preserves_norm_up_to_pi() {
        let s = Manifold::unit_sphere(5).unwrap();
        let mut r = rng::stream(9);
        for i in 0..50 {
            let x = s.random_point(&mut r);
            let u = s.project(&x, &rng::gaussian_vector(&mut r, 5)).unwrap();
            let t = PI * (i as f64) / 49.0;
            let step = u.scaled(t / u.norm());
            let y = s.retract(&x, &step, Retraction::Exponential);
            assert!((y.coords().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_forms() {
        let s: Manifold = serde_json::from_str(r#"{"kind":"unit_sphere","n":5}"#).unwrap();
        assert_eq!(s, Manifold::UnitSphere { n: 5 });
        let es: Manifold =
            serde_json::from_str(r#"{"kind":"embedded_sphere","m":4,"n":8}"#).unwrap();
        assert_eq!(es.dim(), 4);
        let sub: Manifold =
            serde_json::from_str(r#"{"kind":"subspace","Z":[[1,0],[0,1],[0,0]]}"#).unwrap();
        assert_eq!((sub.ambient_dim(), sub.dim()), (3, 2));
        let text = serde_json::to_string(&sub).unwrap();
        assert_eq!(text, r#"{"kind":"subspace","Z":[[1.0,0.0],[0.0,1.0],[0.0,0.0]]}"#);
        assert!(serde_json::from_str::<Manifold>(r#"{"kind":"unit_sphere","n":1}"#).is_err());
    }
}
