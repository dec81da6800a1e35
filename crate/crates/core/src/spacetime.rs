//! Space-time precision matrices built from temporal and spatial FEM
//! matrices: the first-order temporal model, the spatial Matérn model with
//! `α = 2`, their Kronecker (separable) product, and the non-separable
//! diffusion model with orders `(α_t, α_s, α_ε) = (1, 2, 1)`.
//!
//! Field vectors are laid out with the spatial index varying fastest:
//! entry `t * n_space + s` belongs to time `t` and vertex `s`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::fem::{fem_1d, fem_2d, FemMatrices, Mesh1D, TemporalBoundary, TriMesh2D};
use crate::ordering::OrderingScheme;
use crate::selinv::marginal_variances;
use crate::sparse::SymmetricSparseMatrix;

pub const ALPHA_T: usize = 1;
pub const ALPHA_S: usize = 2;
pub const ALPHA_EPS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeHyper {
    pub range_time: f64,
    pub range_space: f64,
    pub sigma_u: f64,
    /// γ_t
    pub gt: f64,
    /// γ_s²
    pub gs2: f64,
    /// γ_ε²
    pub ge2: f64,
}

impl SpaceTimeHyper {
    /// `gs2 = 8 / range_space²`; the temporal rate is `2 / range_time`.
    pub fn from_ranges(range_time: f64, range_space: f64, sigma_u: f64, gt: f64, ge2: f64) -> Result<Self> {
        let h = Self { range_time, range_space, sigma_u, gt, gs2: 8.0 / (range_space * range_space), ge2 };
        h.validate()?;
        Ok(h)
    }

    /// Temporal range 20, spatial range 6, unit standard deviation,
    /// `γ_t = 2.23`, `γ_ε² = 0.0805`.
    pub fn reference() -> Self {
        Self::from_ranges(20.0, 6.0, 1.0, 2.23, 0.0805).expect("reference hyperparameters are valid")
    }

    pub fn kappa_t(&self) -> f64 {
        2.0 / self.range_time
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("range_time", self.range_time),
            ("range_space", self.range_space),
            ("sigma_u", self.sigma_u),
            ("gt", self.gt),
            ("gs2", self.gs2),
            ("ge2", self.ge2),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Temporal,
    Spatial,
    Separable,
    Nonseparable,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Temporal => "temporal",
            Model::Spatial => "spatial",
            Model::Separable => "separable",
            Model::Nonseparable => "nonseparable",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(Model::Temporal),
            "spatial" => Ok(Model::Spatial),
            "separable" => Ok(Model::Separable),
            "nonseparable" | "non-separable" => Ok(Model::Nonseparable),
            other => Err(Error::invalid(format!("unknown model '{other}'"))),
        }
    }
}

/// `(κ² M0 + 2κ M1 + M2) / (2κ)` with `M0 = c0`, `M2 = g1` of the temporal mesh.
pub fn temporal_precision(
    tfem: &FemMatrices,
    m1: &TemporalBoundary,
    kappa_t: f64,
) -> Result<SymmetricSparseMatrix> {
    if !(kappa_t > 0.0) {
        return Err(Error::invalid(format!("kappa_t must be positive, got {kappa_t}")));
    }
    if tfem.n() != m1.n() {
        return Err(Error::dims(format!("temporal FEM size {} vs boundary size {}", tfem.n(), m1.n())));
    }
    let k = kappa_t;
    let q = lincomb(&[(k * k, &tfem.c0), (2.0 * k, m1.matrix()), (1.0, tfem.g(1)?)])?;
    Ok(q.scale(1.0 / (2.0 * k)))
}

/// `(γ_s⁴ c0 + 2γ_s² g1 + g2) / (4π γ_s²)`.
pub fn spatial_precision(sfem: &FemMatrices, gs2: f64) -> Result<SymmetricSparseMatrix> {
    if !(gs2 > 0.0) {
        return Err(Error::invalid(format!("gs2 must be positive, got {gs2}")));
    }
    let q = lincomb(&[(gs2 * gs2, &sfem.c0), (2.0 * gs2, sfem.g(1)?), (1.0, sfem.g(2)?)])?;
    Ok(q.scale(1.0 / (4.0 * PI * gs2)))
}

/// `q_t ⊗ q_s`, space fastest.
pub fn separable_precision(q_t: &SymmetricSparseMatrix, q_s: &SymmetricSparseMatrix) -> Result<SymmetricSparseMatrix> {
    SymmetricSparseMatrix::kron(q_t, q_s)
}

/// ```text
/// γ_ε² [ γ_t² M2 ⊗ (γ_s² c0 + g1)
///      + M0 ⊗ (γ_s⁶ c0 + γ_s⁴ g1 + γ_s² g2 + g3)
///      + 2γ_t M1 ⊗ (γ_s⁴ c0 + 2γ_s² g1 + g2) ]
/// ```
pub fn nonseparable_precision(
    tfem: &FemMatrices,
    m1: &TemporalBoundary,
    sfem: &FemMatrices,
    h: &SpaceTimeHyper,
) -> Result<SymmetricSparseMatrix> {
    h.validate()?;
    if tfem.n() != m1.n() {
        return Err(Error::dims(format!("temporal FEM size {} vs boundary size {}", tfem.n(), m1.n())));
    }
    let (gt, s) = (h.gt, h.gs2);
    let (c0, g1, g2, g3) = (&sfem.c0, sfem.g(1)?, sfem.g(2)?, sfem.g(3)?);

    let space1 = lincomb(&[(s, c0), (1.0, g1)])?;
    let space2 = lincomb(&[(s * s * s, c0), (s * s, g1), (s, g2), (1.0, g3)])?;
    let space3 = lincomb(&[(s * s, c0), (2.0 * s, g1), (1.0, g2)])?;

    let t1 = SymmetricSparseMatrix::kron(&tfem.g(1)?.scale(gt * gt), &space1)?;
    let t2 = SymmetricSparseMatrix::kron(&tfem.c0, &space2)?;
    let t3 = SymmetricSparseMatrix::kron(&m1.matrix().scale(2.0 * gt), &space3)?;
    let sum = lincomb(&[(1.0, &t1), (1.0, &t2), (1.0, &t3)])?;
    Ok(sum.scale(h.ge2))
}

fn lincomb(terms: &[(f64, &SymmetricSparseMatrix)]) -> Result<SymmetricSparseMatrix> {
    let (&(w0, first), rest) = terms.split_first().expect("at least one term");
    let mut acc = first.scale(w0);
    for &(w, m) in rest {
        acc = SymmetricSparseMatrix::add_scaled(&acc, m, 1.0, w)?;
    }
    Ok(acc)
}

/// Temporal and spatial FEM matrices with hyperparameters: everything needed
/// to build any of the four model precisions.
#[derive(Debug, Clone)]
pub struct SpaceTimeSetup {
    pub time_mesh: Mesh1D,
    pub space_mesh: TriMesh2D,
    pub tfem: FemMatrices,
    pub m1: TemporalBoundary,
    pub sfem: FemMatrices,
    pub hyper: SpaceTimeHyper,
}

impl SpaceTimeSetup {
    /// Temporal FEM of order 2 and spatial FEM of order 4.
    pub fn new(time_mesh: Mesh1D, space_mesh: TriMesh2D, hyper: SpaceTimeHyper) -> Result<Self> {
        hyper.validate()?;
        let tfem = fem_1d(&time_mesh, 2)?;
        let m1 = TemporalBoundary::new(time_mesh.len())?;
        let sfem = fem_2d(&space_mesh, 4)?;
        Ok(Self { time_mesh, space_mesh, tfem, m1, sfem, hyper })
    }

    pub fn n_time(&self) -> usize {
        self.time_mesh.len()
    }

    pub fn n_space(&self) -> usize {
        self.space_mesh.n_vertices()
    }

    pub fn precision(&self, model: Model) -> Result<SymmetricSparseMatrix> {
        match model {
            Model::Temporal => temporal_precision(&self.tfem, &self.m1, self.hyper.kappa_t()),
            Model::Spatial => spatial_precision(&self.sfem, self.hyper.gs2),
            Model::Separable => separable_precision(
                &temporal_precision(&self.tfem, &self.m1, self.hyper.kappa_t())?,
                &spatial_precision(&self.sfem, self.hyper.gs2)?,
            ),
            Model::Nonseparable => nonseparable_precision(&self.tfem, &self.m1, &self.sfem, &self.hyper),
        }
    }

    /// Latent indices of the interior spatial vertices (farther than one
    /// spatial range from the mesh boundary) at every time point.
    pub fn interior_indices(&self, model: Model) -> Vec<usize> {
        let interior = self.space_mesh.interior_nodes(self.hyper.range_space);
        match model {
            Model::Temporal => (0..self.n_time()).collect(),
            Model::Spatial => interior,
            Model::Separable | Model::Nonseparable => (0..self.n_time())
                .flat_map(|t| interior.iter().map(move |&s| t * self.n_space() + s))
                .collect(),
        }
    }

    /// The `γ_ε²` that makes the median interior marginal variance of the
    /// non-separable model exactly one. The precision is linear in `γ_ε²`,
    /// so variances scale as its inverse and one evaluation suffices.
    pub fn variance_normalizing_ge2(&self, cores: usize) -> Result<f64> {
        let q = self.precision(Model::Nonseparable)?;
        let f = CholeskyFactor::new(&q, OrderingScheme::Amd, cores)?;
        let var = marginal_variances(&f, cores);
        let mut interior: Vec<f64> = self.interior_indices(Model::Nonseparable).iter().map(|&i| var[i]).collect();
        if interior.is_empty() {
            return Err(Error::invalid("mesh has no interior nodes"));
        }
        Ok(self.hyper.ge2 * median(&mut interior))
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
