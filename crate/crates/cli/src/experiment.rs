//! The space-time forecasting experiment: simulate a field from the
//! non-separable model, observe it with noise at the first time point only,
//! and compare posterior means and posterior draws of the separable and
//! non-separable models.

use std::fs;
use std::path::{Path, PathBuf};

use gmrfkit::fem::{read_mesh, Mesh};
use gmrfkit::gmrf::sample_with_factor;
use gmrfkit::project::Projector;
use gmrfkit::rng::{standard_normals, GENERATOR};
use gmrfkit::spacetime::median;
use gmrfkit::{
    marginal_variances, structured_mesh, CholeskyFactor, Error, Mesh1D, Model, ObservationModel, OrderingScheme,
    Posterior, SpaceTimeHyper, SpaceTimeSetup, TriMesh2D,
};
use serde::Serialize;

use crate::{CliError, Stage};

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Spatial mesh file; a structured mesh is generated when absent.
    pub space_mesh: Option<PathBuf>,
    /// The square region of interest, `domain × domain`.
    pub domain: (f64, f64),
    /// Structured mesh margin around the domain, in spatial ranges.
    pub extension: f64,
    /// Structured mesh vertices per side.
    pub mesh_side: usize,
    pub t_max: usize,
    pub hyper: SpaceTimeHyper,
    pub sigma_eps: f64,
    /// Seed of the simulated truth; the observation noise uses the next
    /// stream of the same seed.
    pub field_seed: u64,
    pub posterior_seed: u64,
    pub sample_reordering: OrderingScheme,
    pub models: Vec<Model>,
    pub raster: (usize, usize),
    pub cores: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            space_mesh: None,
            domain: (0.0, 10.0),
            extension: 2.0,
            mesh_side: 38,
            t_max: 8,
            hyper: SpaceTimeHyper::reference(),
            sigma_eps: 0.01,
            field_seed: 2019,
            posterior_seed: 1,
            sample_reordering: OrderingScheme::Identity,
            models: vec![Model::Separable, Model::Nonseparable],
            raster: (200, 200),
            cores: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(Error::InvalidInput(msg)).stage("experiment");
        if self.t_max < 2 {
            return bad(format!("t_max must be at least 2, got {}", self.t_max));
        }
        if let Some(p) = &self.space_mesh {
            if !p.exists() {
                return bad(format!("mesh file {} does not exist", p.display()));
            }
        }
        if !(self.domain.1 > self.domain.0) {
            return bad("domain must have positive width".into());
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        if let Some(m) = self.models.iter().find(|m| !matches!(m, Model::Separable | Model::Nonseparable)) {
            return bad(format!("model '{m}' is not a space-time model"));
        }
        if !(self.sigma_eps > 0.0) {
            return bad(format!("sigma_eps must be positive, got {}", self.sigma_eps));
        }
        self.hyper.validate().stage("experiment")
    }

    pub fn mesh(&self) -> Result<TriMesh2D, CliError> {
        match &self.space_mesh {
            Some(path) => match read_mesh(path).stage("mesh")? {
                Mesh::Triangles(m) => Ok(m),
                Mesh::Interval(_) => Err(Error::InvalidInput("spatial mesh must be 2D".into())).stage("mesh"),
            },
            None => {
                let pad = self.extension * self.hyper.range_space;
                let r = (self.domain.0 - pad, self.domain.1 + pad);
                structured_mesh(r, r, self.mesh_side, self.mesh_side).stage("mesh")
            }
        }
    }

    pub fn setup(&self) -> Result<SpaceTimeSetup, CliError> {
        let time = Mesh1D::regular(self.t_max).stage("mesh")?;
        SpaceTimeSetup::new(time, self.mesh()?, self.hyper).stage("fem")
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &mut [f64]) -> Self {
        let med = median(values);
        Self { min: values[0], median: med, max: values[values.len() - 1] }
    }
}

#[derive(Debug, Clone)]
pub struct ModelRun {
    pub model: Model,
    pub mean: Vec<f64>,
    pub sim: Vec<f64>,
    pub logdet_prior: f64,
    pub logdet_posterior: f64,
    /// Over interior latent indices.
    pub prior_variance: Spread,
    pub posterior_variance: Spread,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub setup: SpaceTimeSetup,
    pub truth: Vec<f64>,
    /// Data at the first time point, one per spatial vertex.
    pub observed: Vec<f64>,
    pub runs: Vec<ModelRun>,
}

impl ExperimentResult {
    pub fn run(&self, model: Model) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.model == model)
    }

    /// Spatial vertices inside `domain × domain`.
    pub fn domain_nodes(&self, domain: (f64, f64)) -> Vec<usize> {
        let inside = |v: f64| v >= domain.0 && v <= domain.1;
        let verts = self.setup.space_mesh.vertices();
        (0..verts.len()).filter(|&s| inside(verts[s][0]) && inside(verts[s][1])).collect()
    }

    /// Slice of a latent vector at 0-based time `t`.
    pub fn slice<'a>(&self, field: &'a [f64], t: usize) -> &'a [f64] {
        let ns = self.setup.n_space();
        &field[t * ns..(t + 1) * ns]
    }

    /// RMS difference of the separable and non-separable posterior means at
    /// 0-based time `t`, over `nodes`.
    pub fn mean_divergence(&self, t: usize, nodes: &[usize]) -> Option<f64> {
        let a = self.slice(&self.run(Model::Separable)?.mean, t);
        let b = self.slice(&self.run(Model::Nonseparable)?.mean, t);
        Some(rms(nodes.iter().map(|&s| a[s] - b[s])))
    }
}

pub fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        count += 1;
    }
    (sum / count.max(1) as f64).sqrt()
}

pub fn std_dev(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    rms(values.iter().map(|v| v - mean))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, CliError> {
    spec.validate()?;
    let setup = spec.setup()?;
    let cores = spec.cores;
    let (ns, n) = (setup.n_space(), setup.n_space() * setup.n_time());

    let q_nonsep = setup.precision(Model::Nonseparable).stage("build-q")?;
    let truth_factor = CholeskyFactor::new(&q_nonsep, OrderingScheme::Amd, cores).stage("simulate")?;
    let truth = sample_with_factor(&truth_factor, spec.field_seed, 1, cores).stage("simulate")?.col(0).to_vec();
    let noise = standard_normals(spec.field_seed, 1, ns);
    let observed: Vec<f64> = (0..ns).map(|s| truth[s] + spec.sigma_eps * noise[s]).collect();
    let mut masked = vec![f64::NAN; n];
    masked[..ns].copy_from_slice(&observed);
    let obs = ObservationModel::from_masked(&masked, spec.sigma_eps).stage("posterior")?;

    let interior = setup.interior_indices(Model::Nonseparable);
    let spread = |var: &[f64]| Spread::of(&mut interior.iter().map(|&i| var[i]).collect::<Vec<_>>());

    let mut runs = Vec::with_capacity(spec.models.len());
    for &model in &spec.models {
        let q = if model == Model::Nonseparable {
            q_nonsep.clone()
        } else {
            setup.precision(model).stage("build-q")?
        };
        let own;
        let prior = if model == Model::Nonseparable {
            &truth_factor
        } else {
            own = CholeskyFactor::new(&q, OrderingScheme::Amd, cores).stage("factorize")?;
            &own
        };
        let prior_var = marginal_variances(prior, cores);
        let post = Posterior::new(&q, &obs, OrderingScheme::Amd, cores).stage("posterior")?;
        let post_var = marginal_variances(&post.factor, cores);

        let draw = if spec.sample_reordering == OrderingScheme::Amd {
            sample_with_factor(&post.factor, spec.posterior_seed, 1, cores)
        } else {
            CholeskyFactor::new(&post.precision, spec.sample_reordering, cores)
                .and_then(|f| sample_with_factor(&f, spec.posterior_seed, 1, cores))
        }
        .stage("sample")?;
        let sim = draw.col(0).iter().zip(&post.mean).map(|(x, m)| x + m).collect();

        runs.push(ModelRun {
            model,
            logdet_prior: prior.logdet(),
            logdet_posterior: post.factor.logdet(),
            prior_variance: spread(&prior_var),
            posterior_variance: spread(&post_var),
            mean: post.mean,
            sim,
        });
    }
    Ok(ExperimentResult { setup, truth, observed, runs })
}

#[derive(Serialize)]
struct Summary<'a> {
    generator: &'a str,
    t_max: usize,
    n_space: usize,
    n_latent: usize,
    domain: [f64; 2],
    raster: [usize; 2],
    sigma_eps: f64,
    seeds: Seeds,
    hyper: Hyper,
    models: Vec<ModelSummary>,
    /// RMS difference of the two posterior means inside the domain, per time.
    mean_divergence: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Seeds {
    field: u64,
    noise_stream: u64,
    posterior: u64,
    sample_reordering: String,
}

#[derive(Serialize)]
struct Hyper {
    range_time: f64,
    range_space: f64,
    sigma_u: f64,
    kappa_t: f64,
    gt: f64,
    gs2: f64,
    ge2: f64,
}

#[derive(Serialize)]
struct ModelSummary {
    model: String,
    logdet_prior: f64,
    logdet_posterior: f64,
    prior_variance_interior: Spread,
    posterior_variance_interior: Spread,
}

/// Writes `<model>/mean_t<k>.csv` and `<model>/sim_t<k>.csv` for every
/// time point (1-based `k`) and `summary.json`.
pub fn write_experiment(spec: &ExperimentSpec, result: &ExperimentResult, out_dir: &Path) -> Result<(), CliError> {
    let setup = &result.setup;
    let projector =
        Projector::new(&setup.space_mesh, spec.domain, spec.domain, spec.raster.0, spec.raster.1).stage("project")?;
    for run in &result.runs {
        let dir = out_dir.join(run.model.to_string());
        fs::create_dir_all(&dir).map_err(Error::from).stage("write")?;
        for t in 0..setup.n_time() {
            for (name, field) in [("mean", &run.mean), ("sim", &run.sim)] {
                let grid = projector.project(result.slice(field, t), t + 1);
                fs::write(dir.join(format!("{name}_t{}.csv", t + 1)), grid.to_csv())
                    .map_err(Error::from)
                    .stage("write")?;
            }
        }
    }

    let h = &setup.hyper;
    let nodes = result.domain_nodes(spec.domain);
    let summary = Summary {
        generator: GENERATOR,
        t_max: setup.n_time(),
        n_space: setup.n_space(),
        n_latent: setup.n_space() * setup.n_time(),
        domain: [spec.domain.0, spec.domain.1],
        raster: [spec.raster.0, spec.raster.1],
        sigma_eps: spec.sigma_eps,
        seeds: Seeds {
            field: spec.field_seed,
            noise_stream: 1,
            posterior: spec.posterior_seed,
            sample_reordering: spec.sample_reordering.to_string(),
        },
        hyper: Hyper {
            range_time: h.range_time,
            range_space: h.range_space,
            sigma_u: h.sigma_u,
            kappa_t: h.kappa_t(),
            gt: h.gt,
            gs2: h.gs2,
            ge2: h.ge2,
        },
        models: result
            .runs
            .iter()
            .map(|r| ModelSummary {
                model: r.model.to_string(),
                logdet_prior: r.logdet_prior,
                logdet_posterior: r.logdet_posterior,
                prior_variance_interior: r.prior_variance,
                posterior_variance_interior: r.posterior_variance,
            })
            .collect(),
        mean_divergence: (0..setup.n_time()).map(|t| result.mean_divergence(t, &nodes)).collect(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out_dir.join("summary.json"), json + "\n").map_err(Error::from).stage("write")
}
