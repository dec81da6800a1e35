//! Benchmark inputs shared by the criterion targets.

use gmrfkit::bench::{bench_matrix, BenchConfig};
use gmrfkit::{Model, SpaceTimeHyper, SpaceTimeSetup, SymmetricSparseMatrix};

/// Lattice family matrix of side `n` with the default dense rows.
pub fn lattice(n: usize) -> SymmetricSparseMatrix {
    bench_matrix(&BenchConfig::with_side(n)).expect("valid lattice config")
}

/// Space-time precision on a `side × side` grid over `(-12, 22)²` with `t_max` times.
pub fn space_time(model: Model, side: usize, t_max: usize) -> SymmetricSparseMatrix {
    let mesh = gmrfkit::structured_mesh((-12.0, 22.0), (-12.0, 22.0), side, side).expect("valid mesh");
    let time = gmrfkit::Mesh1D::regular(t_max).expect("valid time mesh");
    SpaceTimeSetup::new(time, mesh, SpaceTimeHyper::reference())
        .and_then(|s| s.precision(model))
        .expect("valid precision")
}
