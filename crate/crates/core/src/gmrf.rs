//! Sampling from `N(0, Q⁻¹)` and conditioning on Gaussian observations.

use rayon::prelude::*;

use crate::cholesky::CholeskyFactor;
use crate::error::{Error, Result};
use crate::ordering::OrderingScheme;
use crate::parallel::with_workers;
use crate::rng::standard_normals;
use crate::sparse::{DenseMatrix, ProjectionMatrix, SymmetricSparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub reordering: OrderingScheme,
    pub cores: usize,
}

impl SampleConfig {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self { seed, n_samples, reordering: OrderingScheme::Amd, cores: 1 }
    }

    pub fn reordering(mut self, scheme: OrderingScheme) -> Self {
        self.reordering = scheme;
        self
    }

    pub fn cores(mut self, cores: usize) -> Self {
        self.cores = cores;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        Ok(())
    }
}

/// Gaussian observations `y = A x + ε`, `ε ~ N(0, σ² I)`.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    a: ProjectionMatrix,
    sigma_eps: f64,
    y: Vec<f64>,
}

impl ObservationModel {
    pub fn new(a: ProjectionMatrix, sigma_eps: f64, y: Vec<f64>) -> Result<Self> {
        if !(sigma_eps > 0.0) || !sigma_eps.is_finite() {
            return Err(Error::invalid(format!("sigma_eps must be positive and finite, got {sigma_eps}")));
        }
        if a.nrows() != y.len() {
            return Err(Error::dims(format!("{} observations for a projection with {} rows", y.len(), a.nrows())));
        }
        Ok(Self { a, sigma_eps, y })
    }

    /// One value per latent site, `NaN` marking unobserved sites. Missing
    /// sites are dropped from the projection.
    pub fn from_masked(values: &[f64], sigma_eps: f64) -> Result<Self> {
        let sites: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
        let y = sites.iter().map(|&i| values[i]).collect();
        Self::new(ProjectionMatrix::selection(&sites, values.len())?, sigma_eps, y)
    }

    pub fn projection(&self) -> &ProjectionMatrix {
        &self.a
    }

    pub fn sigma_eps(&self) -> f64 {
        self.sigma_eps
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_observed(&self) -> usize {
        self.y.len()
    }

    fn check_latent(&self, n: usize) -> Result<()> {
        if self.a.ncols() != n {
            return Err(Error::dims(format!("projection has {} columns, latent size is {n}", self.a.ncols())));
        }
        Ok(())
    }
}

/// Draws `cfg.n_samples` columns `x = Pᵀ L⁻ᵀ z` with `z` from
/// [`standard_normals`]`(seed, column)`.
pub fn sample(q: &SymmetricSparseMatrix, cfg: &SampleConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let factor = CholeskyFactor::new(q, cfg.reordering, cfg.cores)?;
    sample_with_factor(&factor, cfg.seed, cfg.n_samples, cfg.cores)
}

pub fn sample_with_factor(factor: &CholeskyFactor, seed: u64, n_samples: usize, cores: usize) -> Result<DenseMatrix> {
    let n = factor.n();
    let draw = |c: usize| {
        let mut x = standard_normals(seed, c as u64, n);
        factor.solve_upper_in_place(&mut x);
        factor.symbolic().permutation().scatter(&x)
    };
    let columns: Vec<Vec<f64>> = with_workers(cores.max(1), || (0..n_samples).into_par_iter().map(draw).collect());
    DenseMatrix::from_columns(n, &columns)
}

/// `Q + σ⁻² AᵀA` on the union pattern.
pub fn posterior_precision(q_prior: &SymmetricSparseMatrix, obs: &ObservationModel) -> Result<SymmetricSparseMatrix> {
    obs.check_latent(q_prior.n())?;
    if obs.n_observed() == 0 {
        return Ok(q_prior.clone());
    }
    let data = obs.a.normal_product(obs.sigma_eps.powi(-2))?;
    SymmetricSparseMatrix::add_scaled(q_prior, &data, 1.0, 1.0)
}

/// Conditional mean `Q_post⁻¹ σ⁻² Aᵀ y` for a zero prior mean.
pub fn posterior_mean(
    q_prior: &SymmetricSparseMatrix,
    obs: &ObservationModel,
    scheme: OrderingScheme,
    cores: usize,
) -> Result<Vec<f64>> {
    Ok(Posterior::new(q_prior, obs, scheme, cores)?.mean)
}

/// `sample(Q_post) + mean` for each column.
pub fn posterior_sample(
    q_prior: &SymmetricSparseMatrix,
    obs: &ObservationModel,
    cfg: &SampleConfig,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    Posterior::new(q_prior, obs, cfg.reordering, cfg.cores)?.sample(cfg.seed, cfg.n_samples)
}

/// Factorized conditional distribution, reusable for the mean, samples and
/// variances.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub precision: SymmetricSparseMatrix,
    pub factor: CholeskyFactor,
    pub mean: Vec<f64>,
    cores: usize,
}

impl Posterior {
    pub fn new(
        q_prior: &SymmetricSparseMatrix,
        obs: &ObservationModel,
        scheme: OrderingScheme,
        cores: usize,
    ) -> Result<Self> {
        let precision = posterior_precision(q_prior, obs)?;
        let factor = CholeskyFactor::new(&precision, scheme, cores)?;
        let mean = if obs.n_observed() == 0 {
            vec![0.0; q_prior.n()]
        } else {
            let w = obs.sigma_eps.powi(-2);
            let b: Vec<f64> = obs.a.transpose_matvec(&obs.y)?.into_iter().map(|v| w * v).collect();
            factor.solve(&b)?
        };
        Ok(Self { precision, factor, mean, cores })
    }

    pub fn sample(&self, seed: u64, n_samples: usize) -> Result<DenseMatrix> {
        let draws = sample_with_factor(&self.factor, seed, n_samples, self.cores)?;
        let cols: Vec<Vec<f64>> = draws
            .columns()
            .map(|c| c.iter().zip(&self.mean).map(|(x, m)| x + m).collect())
            .collect();
        DenseMatrix::from_columns(self.mean.len(), &cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::standard_normals;

    #[test]
    fn identity_sample_is_the_raw_stream() {
        let x = sample(&SymmetricSparseMatrix::identity(6), &SampleConfig::new(2019, 2)).unwrap();
        assert_eq!(x.col(0), standard_normals(2019, 0, 6).as_slice());
        assert_eq!(x.col(1), standard_normals(2019, 1, 6).as_slice());
    }

    #[test]
    fn scaled_identity_sample_is_halved_stream() {
        let q = SymmetricSparseMatrix::from_diagonal(&[4.0; 5]);
        let x = sample(&q, &SampleConfig::new(3, 1)).unwrap();
        let z = standard_normals(3, 0, 5);
        for (a, b) in x.col(0).iter().zip(&z) {
            assert_eq!(*a, b / 2.0);
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample(&SymmetricSparseMatrix::identity(2), &SampleConfig::new(1, 0)).is_err());
    }

    #[test]
    fn no_observations_keeps_prior() {
        let q = SymmetricSparseMatrix::from_triplets(3, &[(0, 0, 2.0), (1, 0, -1.0), (1, 1, 2.0), (2, 2, 1.0)])
            .unwrap();
        let obs = ObservationModel::from_masked(&[f64::NAN; 3], 0.5).unwrap();
        let qp = posterior_precision(&q, &obs).unwrap();
        assert_eq!(qp.values(), q.values());
        assert_eq!(posterior_mean(&q, &obs, OrderingScheme::Amd, 1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_prior_identity_observation() {
        let obs = ObservationModel::from_masked(&[1.0, 2.0], 1.0).unwrap();
        let qp = posterior_precision(&SymmetricSparseMatrix::identity(2), &obs).unwrap();
        assert_eq!(qp.diag(), vec![2.0, 2.0]);
        assert_eq!(qp.get(1, 0), 0.0);
    }

    #[test]
    fn scalar_posterior_mean_is_precision_weighted() {
        let obs = ObservationModel::from_masked(&[1.0], 1.0).unwrap();
        let mu = posterior_mean(&SymmetricSparseMatrix::identity(1), &obs, OrderingScheme::Amd, 1).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn observation_model_validation() {
        let a = ProjectionMatrix::selection(&[0], 2).unwrap();
        assert!(ObservationModel::new(a.clone(), 0.0, vec![1.0]).is_err());
        assert!(ObservationModel::new(a.clone(), 1.0, vec![1.0, 2.0]).is_err());
        let obs = ObservationModel::new(a, 1.0, vec![1.0]).unwrap();
        assert!(posterior_precision(&SymmetricSparseMatrix::identity(3), &obs).is_err());
    }
}
