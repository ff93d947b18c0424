//! Polling sets on tangent spaces.
//!
//! Two ways to move a PSS of a Euclidean space onto `T_x M`:
//!
//! - **intrinsic**: map a PSS of `R^m` through an orthonormal basis of
//!   `T_x M`. The map is an isometry, so cardinality and cosine measure are
//!   preserved exactly.
//! - **projected**: project a PSS of the ambient `R^n` onto `T_x M`,
//!   normalize, and drop directions whose projection vanishes. The cosine
//!   measure can only improve, but the set has up to `|D|` directions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean_pss::{self, cosine_measure_exact, EuclideanPss, Generator, MeasureReport};
use crate::geometry::{BasisMode, Manifold, ManifoldPoint, TangentVector, TANGENT_TOL};
use crate::linalg;

/// Default relative threshold under which a projected direction counts as zero.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    Intrinsic {
        generator: Generator,
        basis_mode: Option<BasisMode>,
    },
    Projected {
        generator: Generator,
        rotation_seed: Option<u64>,
        drop_tol: f64,
    },
}

#[derive(Clone, Debug)]
pub struct TangentPollingSet {
    pub base: ManifoldPoint,
    pub directions: Vec<TangentVector>,
    pub construction: Construction,
    pub dropped_count: usize,
}

impl TangentPollingSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn check_basis(manifold: &Manifold, x: &ManifoldPoint, basis: &[TangentVector]) -> Result<()> {
    if basis.len() != manifold.dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.dim(),
            got: basis.len(),
        });
    }
    for b in basis {
        let residual = manifold.tangent_residual(x, b.dir());
        if residual > TANGENT_TOL {
            return Err(Error::NotTangent { residual });
        }
    }
    let dirs: Vec<DVector<f64>> = basis.iter().map(|b| b.dir().clone()).collect();
    let deviation = linalg::gram_deviation(&dirs);
    if deviation > TANGENT_TOL {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(())
}

/// Maps each `d ∈ D` to `Σ d_i b_i`.
pub fn intrinsic_pss(
    manifold: &Manifold,
    x: &ManifoldPoint,
    basis: &[TangentVector],
    pss: &EuclideanPss,
) -> Result<TangentPollingSet> {
    check_basis(manifold, x, basis)?;
    if pss.dim() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: pss.dim(),
        });
    }
    let n = manifold.ambient_dim();
    let directions = pss
        .directions()
        .iter()
        .map(|d| {
            let mut out = DVector::zeros(n);
            for (coef, b) in d.iter().zip(basis) {
                out.axpy(*coef, b.dir(), 1.0);
            }
            manifold.tangent(x, out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentPollingSet {
        base: x.clone(),
        directions,
        construction: Construction::Intrinsic {
            generator: pss.generator(),
            basis_mode: None,
        },
        dropped_count: 0,
    })
}

/// Keeps `P_x(d)/‖P_x(d)‖` for every `d` with `‖P_x(d)‖ > drop_tol·‖d‖`.
pub fn projected_pss(
    manifold: &Manifold,
    x: &ManifoldPoint,
    pss: &EuclideanPss,
    drop_tol: f64,
) -> Result<TangentPollingSet> {
    if pss.dim() != manifold.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: manifold.ambient_dim(),
            got: pss.dim(),
        });
    }
    let mut directions = Vec::with_capacity(pss.len());
    let mut dropped = 0;
    for d in pss.directions() {
        let p = manifold.project(x, d)?;
        let norm = p.norm();
        if norm > drop_tol * d.norm() {
            directions.push(p.scaled(1.0 / norm));
        } else {
            dropped += 1;
        }
    }
    if directions.is_empty() {
        return Err(Error::EmptyProjectedSet);
    }
    Ok(TangentPollingSet {
        base: x.clone(),
        directions,
        construction: Construction::Projected {
            generator: pss.generator(),
            rotation_seed: None,
            drop_tol,
        },
        dropped_count: dropped,
    })
}

/// Cosine measure in `T_x M`, computed in the coordinates of `basis`.
pub fn tangent_cosine_measure(
    manifold: &Manifold,
    set: &TangentPollingSet,
    basis: &[TangentVector],
) -> Result<MeasureReport> {
    check_basis(manifold, &set.base, basis)?;
    let coords: Vec<DVector<f64>> = set
        .directions
        .iter()
        .map(|d| DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dir().dot(d.dir()))))
        .collect();
    cosine_measure_exact(&coords)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Intrinsic,
    Projected,
}

impl Style {
    pub fn name(self) -> &'static str {
        match self {
            Style::Intrinsic => "intrinsic",
            Style::Projected => "projected",
        }
    }
}

/// Per-iteration recipe for building a polling set:
/// `{"style":"intrinsic","generator":"plus_minus","rotate":true,"seed":3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PollingStrategy {
    pub style: Style,
    pub generator: Generator,
    #[serde(default)]
    pub rotate: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PollingStrategy {
    fn default() -> Self {
        PollingStrategy {
            style: Style::Intrinsic,
            generator: Generator::PlusMinus,
            rotate: false,
            seed: 0,
        }
    }
}

/// A polling set along with the tangent basis it was expressed in (intrinsic
/// sets only).
pub struct GeneratedSet {
    pub set: TangentPollingSet,
    pub basis: Option<Vec<TangentVector>>,
}

impl PollingStrategy {
    pub fn validate(&self) -> Result<()> {
        if self.generator == Generator::Custom {
            return Err(Error::InvalidConfig(
                "polling strategies need a named generator".into(),
            ));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        format!(
            "{}-{}-{}",
            self.style.name(),
            self.generator.name(),
            if self.rotate { "rot" } else { "fixed" }
        )
    }

    /// Builds the polling set at `x`. With `rotate`, `rotation_seed` picks the
    /// random tangent basis (intrinsic) or the Haar rotation of the ambient
    /// PSS (projected); without it the canonical choices are used.
    pub fn generate(
        &self,
        manifold: &Manifold,
        x: &ManifoldPoint,
        rotation_seed: u64,
    ) -> Result<GeneratedSet> {
        self.validate()?;
        match self.style {
            Style::Intrinsic => {
                let mode = if self.rotate {
                    BasisMode::Randomized(rotation_seed)
                } else {
                    BasisMode::Canonical
                };
                let basis = manifold.tangent_basis(x, mode)?;
                let m = manifold.dim();
                let pss = self.generator.build(&DMatrix::identity(m, m))?;
                let mut set = intrinsic_pss(manifold, x, &basis, &pss)?;
                set.construction = Construction::Intrinsic {
                    generator: self.generator,
                    basis_mode: Some(mode),
                };
                Ok(GeneratedSet {
                    set,
                    basis: Some(basis),
                })
            }
            Style::Projected => {
                let n = manifold.ambient_dim();
                let rotation = if self.rotate {
                    euclidean_pss::random_rotation(n, rotation_seed)
                } else {
                    DMatrix::identity(n, n)
                };
                let pss = self.generator.build(&rotation)?;
                let mut set = projected_pss(manifold, x, &pss, DEFAULT_DROP_TOL)?;
                set.construction = Construction::Projected {
                    generator: self.generator,
                    rotation_seed: self.rotate.then_some(rotation_seed),
                    drop_tol: DEFAULT_DROP_TOL,
                };
                Ok(GeneratedSet { set, basis: None })
            }
        }
    }
}

/// Sampled estimate of a family's complexity measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldComplexity {
    pub sup_cardinality: usize,
    pub inf_cm: f64,
    pub chi: f64,
    pub samples: usize,
}

/// `sup |D_x| · (inf cm_x)⁻²` over the sample points; the infimum over the
/// sample upper-bounds the true infimum over the manifold.
pub fn manifold_complexity_measure<F>(
    manifold: &Manifold,
    points: &[ManifoldPoint],
    mut family: F,
) -> Result<ManifoldComplexity>
where
    F: FnMut(&ManifoldPoint) -> Result<TangentPollingSet>,
{
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sup_cardinality = 0;
    let mut inf_cm = f64::INFINITY;
    for x in points {
        let set = family(x)?;
        let basis = manifold.tangent_basis(x, BasisMode::Canonical)?;
        let cm = tangent_cosine_measure(manifold, &set, &basis)?.cosine_measure;
        sup_cardinality = sup_cardinality.max(set.len());
        inf_cm = inf_cm.min(cm);
    }
    if inf_cm <= 0.0 {
        return Err(Error::NotPositiveSpanning(inf_cm));
    }
    Ok(ManifoldComplexity {
        sup_cardinality,
        inf_cm,
        chi: sup_cardinality as f64 / (inf_cm * inf_cm),
        samples: points.len(),
    })
}
