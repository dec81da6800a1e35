//! Batch command-line front end for `gmrfkit`.
//!
//! Exit codes: 0 success, 1 other failure, 2 parse error (including bad
//! flags), 3 matrix not positive definite, 4 dimension mismatch, 5 memory cap
//! refusal. Errors are reported on stderr as `error[<stage>]: <message>`.

pub mod experiment;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gmrfkit::bench::{run_bench, write_csv, BenchConfig, DEFAULT_DENSE_ROWS};
use gmrfkit::fem::{fem_1d, fem_2d, read_mesh, Mesh};
use gmrfkit::gmrf::sample_with_factor;
use gmrfkit::mmio::{self, format_dense, format_lower, format_symmetric, format_vector};
use gmrfkit::{
    marginal_variances, selected_inverse, CholeskyFactor, DenseMatrix, Error, Mesh1D, Model, ObservationModel,
    OrderingScheme, Posterior, SpaceTimeHyper, SpaceTimeSetup, SymmetricSparseMatrix,
};

use experiment::{run_experiment, write_experiment, ExperimentSpec};

/// Memory cap for `bench`, in bytes or with a `K`, `M` or `G` suffix.
pub const MEM_CAP_ENV: &str = "GMRFKIT_MEM_CAP";
pub const DEFAULT_MEM_CAP: u64 = 4 << 30;

/// A library error tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub source: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.source {
            Error::Parse { .. } => 2,
            Error::NotPositiveDefinite { .. } => 3,
            Error::DimensionMismatch(_) => 4,
            Error::MemoryCap { .. } => 5,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.stage, self.source)
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for gmrfkit::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError { stage, source })
    }
}

#[derive(Debug, Parser)]
#[command(name = "gmrfkit", version, about = "Sparse GMRF kernels and space-time SPDE models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble FEM matrices (c0, g1..gk) for a mesh file.
    Fem {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build a temporal, spatial, separable or non-separable precision.
    BuildQ {
        #[arg(long)]
        model: Model,
        #[arg(long, required_unless_present = "time_mesh")]
        t_max: Option<usize>,
        #[arg(long, conflicts_with = "t_max")]
        time_mesh: Option<PathBuf>,
        #[arg(long, required_if_eq_any = [("model", "spatial"), ("model", "separable"), ("model", "nonseparable")])]
        space_mesh: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cholesky factor L of P Q Pᵀ, written in factor ordering.
    Factorize {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// New-to-old permutation, 1-based.
        #[arg(long)]
        perm_out: Option<PathBuf>,
    },
    /// Solve Q x = b for every column of the right-hand side file.
    Solve {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entries of Q⁻¹ on the pattern of L (or of Q with --on-q).
    Selinv {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        on_q: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draws from N(0, Q⁻¹), one column per sample.
    Sample {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n_samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// log det Q.
    Logdet {
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Condition on direct noisy observations of the latent sites.
    Posterior {
        #[command(flatten)]
        kernel: KernelArgs,
        /// One value per latent site; `NA` marks unobserved sites.
        #[arg(long)]
        obs: PathBuf,
        #[arg(long)]
        sigma_eps: f64,
        #[arg(long)]
        out_mean: Option<PathBuf>,
        #[arg(long)]
        out_samples: Option<PathBuf>,
        #[arg(long)]
        out_variance: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n_samples: usize,
    },
    /// Forecasting experiment with the separable and non-separable models.
    Experiment(ExperimentArgs),
    /// Time factorization and selected inversion of the 3D stencil matrix.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        cores_list: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_DENSE_ROWS)]
        dense_rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Matrix Market file (coordinate real symmetric).
    pub matrix: PathBuf,
    #[arg(long, default_value_t = OrderingScheme::Amd)]
    pub reordering: OrderingScheme,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub cores: u16,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 20.0)]
    pub range_time: f64,
    #[arg(long, default_value_t = 6.0)]
    pub range_space: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 2.23)]
    pub gt: f64,
    #[arg(long, default_value_t = 0.0805)]
    pub ge2: f64,
}

impl HyperArgs {
    fn hyper(&self) -> Result<SpaceTimeHyper, CliError> {
        SpaceTimeHyper::from_ranges(self.range_time, self.range_space, self.sigma_u, self.gt, self.ge2)
            .stage("hyperparameters")
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Spatial mesh file; defaults to a structured mesh around the domain.
    #[arg(long)]
    pub space_mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 38)]
    pub mesh_side: usize,
    #[arg(long, default_value_t = 8)]
    pub t_max: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 0.01)]
    pub sigma_eps: f64,
    #[arg(long, default_value_t = 2019)]
    pub field_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub posterior_seed: u64,
    #[arg(long, default_value_t = OrderingScheme::Identity)]
    pub sample_reordering: OrderingScheme,
    #[arg(long, value_delimiter = ',', default_value = "separable,nonseparable")]
    pub models: Vec<Model>,
    /// Raster points per side.
    #[arg(long, default_value_t = 200)]
    pub raster: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub cores: u16,
}

impl ExperimentArgs {
    pub fn spec(&self) -> Result<ExperimentSpec, CliError> {
        Ok(ExperimentSpec {
            space_mesh: self.space_mesh.clone(),
            mesh_side: self.mesh_side,
            t_max: self.t_max,
            hyper: self.hyper.hyper()?,
            sigma_eps: self.sigma_eps,
            field_seed: self.field_seed,
            posterior_seed: self.posterior_seed,
            sample_reordering: self.sample_reordering,
            models: self.models.clone(),
            raster: (self.raster, self.raster),
            cores: self.cores.into(),
            ..ExperimentSpec::default()
        })
    }
}

/// Parses `GMRFKIT_MEM_CAP`-style sizes: plain bytes or a `K`, `M`, `G`
/// suffix (powers of 1024).
pub fn parse_size(text: &str) -> Option<u64> {
    let t = text.trim();
    let (digits, shift) = match t.char_indices().last()? {
        (i, 'k' | 'K') => (&t[..i], 10),
        (i, 'm' | 'M') => (&t[..i], 20),
        (i, 'g' | 'G') => (&t[..i], 30),
        _ => (t, 0),
    };
    digits.trim().parse::<u64>().ok()?.checked_mul(1 << shift)
}

fn memory_cap() -> Result<u64, CliError> {
    match std::env::var(MEM_CAP_ENV) {
        Ok(v) => parse_size(&v)
            .ok_or_else(|| Error::InvalidInput(format!("{MEM_CAP_ENV}='{v}' is not a size")))
            .stage("bench"),
        Err(_) => Ok(DEFAULT_MEM_CAP),
    }
}

fn read_matrix(path: &Path) -> Result<SymmetricSparseMatrix, CliError> {
    mmio::read_symmetric(path).stage("read")
}

fn factor(kernel: &KernelArgs, q: &SymmetricSparseMatrix) -> Result<CholeskyFactor, CliError> {
    CholeskyFactor::new(q, kernel.reordering, kernel.cores.into()).stage("factorize")
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
    .map_err(Error::from)
    .stage("write")
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fem { mesh, order, out_dir } => {
            let fem = match read_mesh(&mesh).stage("read")? {
                Mesh::Interval(m) => fem_1d(&m, order),
                Mesh::Triangles(m) => fem_2d(&m, order),
            }
            .stage("fem")?;
            fs::create_dir_all(&out_dir).map_err(Error::from).stage("write")?;
            emit(Some(&out_dir.join("c0.mtx")), &format_symmetric(&fem.c0))?;
            for m in 1..=fem.order() {
                let g = fem.g(m).stage("fem")?;
                emit(Some(&out_dir.join(format!("g{m}.mtx"))), &format_symmetric(g))?;
            }
            Ok(())
        }
        Command::BuildQ { model, t_max, time_mesh, space_mesh, hyper, out } => {
            let hyper = hyper.hyper()?;
            let time = match (t_max, time_mesh) {
                (_, Some(p)) => match read_mesh(&p).stage("read")? {
                    Mesh::Interval(m) => m,
                    Mesh::Triangles(_) => return Err(Error::InvalidInput("time mesh must be 1D".into())).stage("read"),
                },
                (Some(t), None) => Mesh1D::regular(t).stage("mesh")?,
                (None, None) => unreachable!("clap requires one of --t-max and --time-mesh"),
            };
            let q = match space_mesh {
                Some(p) => {
                    let space = match read_mesh(&p).stage("read")? {
                        Mesh::Triangles(m) => m,
                        Mesh::Interval(_) => {
                            return Err(Error::InvalidInput("space mesh must be 2D".into())).stage("read")
                        }
                    };
                    SpaceTimeSetup::new(time, space, hyper).stage("fem")?.precision(model)
                }
                None => {
                    let tfem = fem_1d(&time, 2).stage("fem")?;
                    let m1 = gmrfkit::TemporalBoundary::new(time.len()).stage("fem")?;
                    gmrfkit::spacetime::temporal_precision(&tfem, &m1, hyper.kappa_t())
                }
            }
            .stage("build-q")?;
            emit(out.as_deref(), &format_symmetric(&q))
        }
        Command::Factorize { kernel, out, perm_out } => {
            let q = read_matrix(&kernel.matrix)?;
            let f = factor(&kernel, &q)?;
            emit(out.as_deref(), &format_lower(f.symbolic().l_pattern(), f.values()))?;
            if let Some(p) = perm_out {
                let perm: String = f.symbolic().permutation().new_to_old().iter().map(|&i| format!("{}\n", i + 1)).collect();
                emit(Some(&p), &perm)?;
            }
            Ok(())
        }
        Command::Solve { kernel, rhs, out } => {
            let q = read_matrix(&kernel.matrix)?;
            let b = fs::read_to_string(&rhs).map_err(Error::from).and_then(|t| mmio::parse_dense(&t)).stage("read")?;
            let f = factor(&kernel, &q)?;
            let x = f.solve_matrix(&b).stage("solve")?;
            emit(out.as_deref(), &format_dense(&x))
        }
        Command::Selinv { kernel, on_q, out } => {
            let q = read_matrix(&kernel.matrix)?;
            let f = factor(&kernel, &q)?;
            let z = selected_inverse(&f, kernel.cores.into());
            let m = if on_q { z.on_q_pattern() } else { z.to_matrix() };
            emit(out.as_deref(), &format_symmetric(&m))
        }
        Command::Sample { kernel, seed, n_samples, out } => {
            if n_samples == 0 {
                return Err(Error::InvalidInput("n-samples must be at least 1".into())).stage("sample");
            }
            let q = read_matrix(&kernel.matrix)?;
            let f = factor(&kernel, &q)?;
            let x = sample_with_factor(&f, seed, n_samples, kernel.cores.into()).stage("sample")?;
            emit(out.as_deref(), &format_dense(&x))
        }
        Command::Logdet { kernel } => {
            let q = read_matrix(&kernel.matrix)?;
            let f = factor(&kernel, &q)?;
            emit(None, &format!("{:?}\n", f.logdet()))
        }
        Command::Posterior { kernel, obs, sigma_eps, out_mean, out_samples, out_variance, seed, n_samples } => {
            let q = read_matrix(&kernel.matrix)?;
            let values = fs::read_to_string(&obs).map_err(Error::from).and_then(|t| mmio::parse_vector(&t)).stage("read")?;
            let obs = ObservationModel::from_masked(&values, sigma_eps).stage("posterior")?;
            let cores = kernel.cores.into();
            let post = Posterior::new(&q, &obs, kernel.reordering, cores).stage("posterior")?;
            emit(out_mean.as_deref(), &format_vector(&post.mean))?;
            if let Some(p) = out_samples {
                if n_samples == 0 {
                    return Err(Error::InvalidInput("n-samples must be at least 1".into())).stage("sample");
                }
                let draws: DenseMatrix = post.sample(seed, n_samples).stage("sample")?;
                emit(Some(&p), &format_dense(&draws))?;
            }
            if let Some(p) = out_variance {
                emit(Some(&p), &format_vector(&marginal_variances(&post.factor, cores)))?;
            }
            Ok(())
        }
        Command::Experiment(args) => {
            let spec = args.spec()?;
            let result = run_experiment(&spec)?;
            fs::create_dir_all(&args.out_dir).map_err(Error::from).stage("write")?;
            write_experiment(&spec, &result, &args.out_dir)
        }
        Command::Bench { n_list, cores_list, reps, dense_rows, seed, out } => {
            let cap = memory_cap()?;
            let mut records = Vec::new();
            for n in n_list {
                let cfg = BenchConfig { n, dense_rows, cores_list: cores_list.clone(), reps, seed, memory_cap: Some(cap) };
                let run = run_bench(&cfg).stage("bench")?;
                for (cores, logdet) in &run.logdets {
                    eprintln!("n={n} cores={cores} logdet={logdet:?}");
                }
                records.extend(run.records);
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, &records).map_err(Error::from).stage("write")?;
            emit(out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("123"), Some(123));
        assert_eq!(parse_size("4G"), Some(4 << 30));
        assert_eq!(parse_size("512m"), Some(512 << 20));
        assert_eq!(parse_size("x"), None);
        assert_eq!(parse_size(""), None);
    }

    #[test]
    fn exit_codes() {
        let code = |e: Error| CliError { stage: "t", source: e }.exit_code();
        assert_eq!(code(Error::Parse { line: 1, msg: String::new() }), 2);
        assert_eq!(code(Error::NotPositiveDefinite { column: 0, pivot: -1.0 }), 3);
        assert_eq!(code(Error::DimensionMismatch(String::new())), 4);
        assert_eq!(code(Error::MemoryCap { estimated: 2, cap: 1 }), 5);
        assert_eq!(code(Error::InvalidInput(String::new())), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
