//! Positive spanning sets of `R^m`.
//!
//! Three generators build a PSS from an orthogonal matrix `B`:
//!
//! | generator        | directions                              | size   | cosine measure                 |
//! |------------------|-----------------------------------------|--------|--------------------------------|
//! | `PlusMinus`      | `±b_i`                                  | `2m`   | `1/√m`                         |
//! | `MinimalSum`     | `b_i`, `-(1/√m) Σ b_i`                  | `m+1`  | `1/√(m² + 2(m-1)√m)`           |
//! | `UniformAngles`  | `B v_i`, `-Σ B v_i` (Cholesky of `G_m`) | `m+1`  | `1/m`                          |

mod measure;

pub use measure::{
    complexity_measure, cosine_measure_exact, cosine_measure_sampled, MeasureReport,
    MAX_EXACT_DIM,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    PlusMinus,
    MinimalSum,
    UniformAngles,
    Custom,
}

impl Generator {
    pub const NAMED: [Generator; 3] = [
        Generator::PlusMinus,
        Generator::MinimalSum,
        Generator::UniformAngles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::PlusMinus => "plus_minus",
            Generator::MinimalSum => "minimal_sum",
            Generator::UniformAngles => "uniform_angles",
            Generator::Custom => "custom",
        }
    }

    pub fn cardinality(self, m: usize) -> Option<usize> {
        match self {
            Generator::PlusMinus => Some(2 * m),
            Generator::MinimalSum | Generator::UniformAngles => Some(m + 1),
            Generator::Custom => None,
        }
    }

    /// Builds the PSS from the orthogonal matrix `basis`.
    pub fn build(self, basis: &DMatrix<f64>) -> Result<EuclideanPss> {
        match self {
            Generator::PlusMinus => pss_plus_minus(basis),
            Generator::MinimalSum => pss_minimal_sum(basis),
            Generator::UniformAngles => pss_uniform_angles(basis),
            Generator::Custom => Err(Error::InvalidConfig(
                "custom sets are built from explicit directions".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanPss {
    dim: usize,
    directions: Vec<DVector<f64>>,
    generator: Generator,
    rotation: Option<DMatrix<f64>>,
}

impl EuclideanPss {
    /// A custom set; directions must be nonzero, finite and share a dimension.
    pub fn from_directions(directions: Vec<DVector<f64>>) -> Result<Self> {
        let dim = directions.first().ok_or(Error::EmptySet)?.len();
        for (i, d) in directions.iter().enumerate() {
            if d.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
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
        Ok(EuclideanPss {
            dim,
            directions,
            generator: Generator::Custom,
            rotation: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[DVector<f64>] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    /// The orthogonal matrix the set was built from, when it is not the identity.
    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    pub fn cosine_measure(&self) -> Result<MeasureReport> {
        cosine_measure_exact(&self.directions)
    }
}

fn check_orthogonal(basis: &DMatrix<f64>) -> Result<()> {
    if basis.nrows() != basis.ncols() || basis.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: basis.nrows(),
            got: basis.ncols(),
        });
    }
    let deviation = linalg::orthogonality_deviation(basis);
    if deviation > 1e-12 {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(())
}

fn named(generator: Generator, basis: &DMatrix<f64>, directions: Vec<DVector<f64>>) -> EuclideanPss {
    let identity = DMatrix::identity(basis.nrows(), basis.ncols());
    EuclideanPss {
        dim: basis.nrows(),
        directions,
        generator,
        rotation: (basis != &identity).then(|| basis.clone()),
    }
}

/// `{b_1, ..., b_m, -b_1, ..., -b_m}`.
pub fn pss_plus_minus(basis: &DMatrix<f64>) -> Result<EuclideanPss> {
    check_orthogonal(basis)?;
    let plus: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let minus: Vec<DVector<f64>> = plus.iter().map(|b| -b).collect();
    Ok(named(
        Generator::PlusMinus,
        basis,
        plus.into_iter().chain(minus).collect(),
    ))
}

/// `{b_1, ..., b_m, -(1/√m) Σ b_i}`.
pub fn pss_minimal_sum(basis: &DMatrix<f64>) -> Result<EuclideanPss> {
    check_orthogonal(basis)?;
    let m = basis.ncols();
    let mut directions: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let sum = directions
        .iter()
        .fold(DVector::zeros(m), |acc: DVector<f64>, b| acc + b);
    directions.push(sum * (-1.0 / (m as f64).sqrt()));
    Ok(named(Generator::MinimalSum, basis, directions))
}

/// `{B v_1, ..., B v_m, -Σ B v_i}` where `v_i` are the columns of `Lᵀ` and
/// `L Lᵀ = G_m` (unit diagonal, `-1/m` elsewhere). All pairwise cosines
/// equal `-1/m`.
pub fn pss_uniform_angles(basis: &DMatrix<f64>) -> Result<EuclideanPss> {
    check_orthogonal(basis)?;
    let m = basis.ncols();
    let off = -1.0 / m as f64;
    let gram = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { off });
    let lower = gram.cholesky().ok_or(Error::Cholesky)?.unpack();
    let lt = lower.transpose();
    let mut directions: Vec<DVector<f64>> = lt.column_iter().map(|v| basis * v).collect();
    let sum = directions
        .iter()
        .fold(DVector::zeros(m), |acc: DVector<f64>, d| acc + d);
    directions.push(-sum);
    Ok(named(Generator::UniformAngles, basis, directions))
}

/// Haar-distributed orthogonal `m × m` matrix, reproducible per seed.
pub fn random_rotation(m: usize, seed: u64) -> DMatrix<f64> {
    linalg::haar_orthogonal(&mut rng::stream(seed), m)
}

/// JSON description of a Euclidean PSS:
/// `{"generator":"plus_minus","m":4,"rotation_seed":7}` or
/// `{"generator":"custom","directions":[[..],..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum PssSpec {
    PlusMinus {
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation_seed: Option<u64>,
    },
    MinimalSum {
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation_seed: Option<u64>,
    },
    UniformAngles {
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation_seed: Option<u64>,
    },
    Custom {
        directions: Vec<Vec<f64>>,
    },
}

impl PssSpec {
    pub fn build(&self) -> Result<EuclideanPss> {
        let (generator, m, seed) = match self {
            PssSpec::PlusMinus { m, rotation_seed } => (Generator::PlusMinus, *m, *rotation_seed),
            PssSpec::MinimalSum { m, rotation_seed } => (Generator::MinimalSum, *m, *rotation_seed),
            PssSpec::UniformAngles { m, rotation_seed } => {
                (Generator::UniformAngles, *m, *rotation_seed)
            }
            PssSpec::Custom { directions } => {
                return EuclideanPss::from_directions(
                    directions
                        .iter()
                        .map(|d| DVector::from_column_slice(d))
                        .collect(),
                )
            }
        };
        if m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        let basis = match seed {
            Some(s) => random_rotation(m, s),
            None => DMatrix::identity(m, m),
        };
        generator.build(&basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn rotation2(deg: f64) -> DMatrix<f64> {
        let t = deg.to_radians();
        DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
    }

    #[test]
    fn plus_minus_layout() {
        let p = pss_plus_minus(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            p.directions(),
            &[v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[-1.0, 0.0]), v(&[0.0, -1.0])]
        );
        assert!(p.rotation().is_none());
        let one = pss_plus_minus(&DMatrix::identity(1, 1)).unwrap();
        assert_eq!(one.directions(), &[v(&[1.0]), v(&[-1.0])]);
    }

    #[test]
    fn rotated_plus_minus_keeps_cosine_measure() {
        let p = pss_plus_minus(&rotation2(30.0)).unwrap();
        let angles: Vec<f64> = p
            .directions()
            .iter()
            .map(|d| d[1].atan2(d[0]).to_degrees().rem_euclid(360.0))
            .collect();
        for (got, want) in angles.iter().zip([30.0, 120.0, 210.0, 300.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let cm = p.cosine_measure().unwrap().cosine_measure;
        assert!((cm - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn minimal_sum_layout() {
        let p = pss_minimal_sum(&DMatrix::identity(2, 2)).unwrap();
        let s = 0.5f64.sqrt();
        assert_eq!(p.directions()[..2], [v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
        assert!((&p.directions()[2] - v(&[-s, -s])).norm() < 1e-15);
        let one = pss_minimal_sum(&DMatrix::identity(1, 1)).unwrap();
        assert_eq!(one.directions(), &[v(&[1.0]), v(&[-1.0])]);
    }

    #[test]
    fn uniform_angles_in_the_plane() {
        let p = pss_uniform_angles(&DMatrix::identity(2, 2)).unwrap();
        let h = 3f64.sqrt() / 2.0;
        let want = [v(&[1.0, 0.0]), v(&[-0.5, h]), v(&[-0.5, -h])];
        for (got, want) in p.directions().iter().zip(&want) {
            assert!((got - want).norm() < 1e-15, "{got} vs {want}");
        }
        let one = pss_uniform_angles(&DMatrix::identity(1, 1)).unwrap();
        assert!((&one.directions()[1] - v(&[-1.0])).norm() < 1e-15);
    }

    #[test]
    fn uniform_angles_pairwise_cosines() {
        for m in 1..=9 {
            let b = random_rotation(m, m as u64);
            let p = pss_uniform_angles(&b).unwrap();
            assert_eq!(p.len(), m + 1);
            for (i, a) in p.directions().iter().enumerate() {
                assert!((a.norm() - 1.0).abs() < 1e-12);
                for c in &p.directions()[i + 1..] {
                    assert!((a.dot(c) + 1.0 / m as f64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn generators_reject_non_orthogonal_input() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        for g in Generator::NAMED {
            assert!(matches!(g.build(&b), Err(Error::NotOrthogonal { .. })));
        }
    }

    #[test]
    fn random_rotation_contract() {
        let one = random_rotation(1, 4);
        assert_eq!(one[(0, 0)].abs(), 1.0);
        assert_eq!(random_rotation(5, 9), random_rotation(5, 9));
        assert_ne!(random_rotation(5, 9), random_rotation(5, 10));
        for seed in 0..20 {
            let q = random_rotation(5, seed);
            assert!(linalg::orthogonality_deviation(&q) < 1e-12);
            let cm = pss_plus_minus(&q).unwrap().cosine_measure().unwrap();
            assert!((cm.cosine_measure - 5f64.sqrt().recip()).abs() < 1e-9);
        }
    }

    #[test]
    fn spec_json_forms() {
        let s: PssSpec =
            serde_json::from_str(r#"{"generator":"plus_minus","m":4,"rotation_seed":7}"#).unwrap();
        let p = s.build().unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.rotation().is_some());
        let c: PssSpec =
            serde_json::from_str(r#"{"generator":"custom","directions":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(c.build().unwrap().generator(), Generator::Custom);
        let zero: PssSpec =
            serde_json::from_str(r#"{"generator":"custom","directions":[[1,0],[0,0]]}"#).unwrap();
        assert!(matches!(zero.build(), Err(Error::ZeroDirection(1))));
    }
}
