//! Benchmark matrix family and the multicore timing harness.
//!
//! The sparse block has the structure of a wide 3D Laplace stencil on an
//! `n × n × n` lattice: every node couples to the lattice points at integer
//! offsets with `0 < dx² + dy² + dz² ≤ 5`, which is 56 neighbours in the
//! interior (6 + 12 + 8 + 6 + 24). A number of dense rows couple to
//! everything, standing in for fixed effects. Values are diagonally
//! dominant, so every matrix is SPD.

use std::fmt;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use crate::cholesky::factorize;
use crate::error::{Error, Result};
use crate::ordering::OrderingScheme;
use crate::rng::NormalStream;
use crate::selinv::selected_inverse;
use crate::sparse::{SparsityPattern, SymmetricSparseMatrix};
use crate::symbolic::analyze_with_scheme;

pub const STENCIL_RADIUS2: i64 = 5;
pub const DEFAULT_DENSE_ROWS: usize = 25;
const DENSE_COUPLING: f64 = -1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Cube side.
    pub n: usize,
    pub dense_rows: usize,
    pub cores_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Refuse to build matrices whose estimated storage exceeds this.
    pub memory_cap: Option<u64>,
}

impl BenchConfig {
    pub fn with_side(n: usize) -> Self {
        Self { n, dense_rows: DEFAULT_DENSE_ROWS, cores_list: vec![1], reps: 1, seed: 0, memory_cap: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("cube side must be at least 2"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.cores_list.is_empty() || self.cores_list.contains(&0) {
            return Err(Error::invalid("cores list must be nonempty and positive"));
        }
        if self.cores_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("cores list must be strictly ascending"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n.pow(3) + self.dense_rows
    }
}

/// Offsets `(dx, dy, dz)` with `0 < dx² + dy² + dz² ≤ 5`.
pub fn stencil_offsets() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for dz in -2i64..=2 {
        for dy in -2i64..=2 {
            for dx in -2i64..=2 {
                let r2 = dx * dx + dy * dy + dz * dz;
                if r2 > 0 && r2 <= STENCIL_RADIUS2 {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Offsets pointing to a later node in `x`-fastest lexicographic order.
fn forward_offsets() -> Vec<[i64; 3]> {
    stencil_offsets().into_iter().filter(|d| (d[2], d[1], d[0]) > (0, 0, 0)).collect()
}

/// Strictly-lower entries of the lattice block, counted without building it.
pub fn lattice_lower_entries(n: usize) -> u64 {
    let n = n as i64;
    forward_offsets()
        .iter()
        .map(|d| d.iter().map(|&c| (n - c.abs()).max(0)).product::<i64>() as u64)
        .sum()
}

/// Value bytes of the lattice block's lower triangle (diagonal included) at
/// 8 bytes per value.
pub fn lattice_value_bytes(n: usize) -> u64 {
    8 * (lattice_lower_entries(n) + (n as u64).pow(3))
}

/// Stored lower-triangle entries of the full benchmark matrix.
pub fn bench_nnz(cfg: &BenchConfig) -> u64 {
    let lattice = (cfg.n as u64).pow(3);
    let d = cfg.dense_rows as u64;
    lattice_lower_entries(cfg.n) + lattice + d * lattice + d * (d + 1) / 2
}

/// Bytes to hold the matrix: values plus row indices.
pub fn estimated_bytes(cfg: &BenchConfig) -> u64 {
    let nnz = bench_nnz(cfg);
    nnz * (8 + std::mem::size_of::<usize>() as u64) + 8 * (cfg.dim() as u64 + 1)
}

pub fn bench_matrix(cfg: &BenchConfig) -> Result<SymmetricSparseMatrix> {
    cfg.validate()?;
    if let Some(cap) = cfg.memory_cap {
        let estimated = estimated_bytes(cfg);
        if estimated > cap {
            return Err(Error::MemoryCap { estimated, cap });
        }
    }
    let n = cfg.n;
    let lattice = n.pow(3);
    let dim = cfg.dim();
    let nd = cfg.dense_rows;
    let offsets = forward_offsets();
    let nnz = bench_nnz(cfg) as usize;

    let mut col_ptr = Vec::with_capacity(dim + 1);
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut perturb = NormalStream::new(cfg.seed, 0);
    col_ptr.push(0);

    let idx = |x: usize, y: usize, z: usize| (z * n + y) * n + x;
    let mut rows = Vec::with_capacity(offsets.len());
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                rows.clear();
                for d in &offsets {
                    let (xx, yy, zz) = (x as i64 + d[0], y as i64 + d[1], z as i64 + d[2]);
                    let inside = |c: i64| c >= 0 && c < n as i64;
                    if inside(xx) && inside(yy) && inside(zz) {
                        rows.push(idx(xx as usize, yy as usize, zz as usize));
                    }
                }
                rows.sort_unstable();
                let degree = lattice_degree(n, x, y, z) + nd;
                row_idx.push(idx(x, y, z));
                values.push((degree + 1) as f64 + perturb.next_uniform());
                for &r in &rows {
                    row_idx.push(r);
                    values.push(-1.0);
                }
                for k in 0..nd {
                    row_idx.push(lattice + k);
                    values.push(DENSE_COUPLING);
                }
                col_ptr.push(row_idx.len());
            }
        }
    }
    for k in 0..nd {
        // Σ |off-diagonal| = (dim - 1) · 10⁻³ < diagonal
        row_idx.push(lattice + k);
        values.push(dim as f64 + perturb.next_uniform());
        for r in k + 1..nd {
            row_idx.push(lattice + r);
            values.push(DENSE_COUPLING);
        }
        col_ptr.push(row_idx.len());
    }
    let pattern = SparsityPattern::new(dim, col_ptr, row_idx)?;
    SymmetricSparseMatrix::new(Arc::new(pattern), values)
}

fn lattice_degree(n: usize, x: usize, y: usize, z: usize) -> usize {
    let n = n as i64;
    stencil_offsets()
        .iter()
        .filter(|d| {
            let c = [x as i64 + d[0], y as i64 + d[1], z as i64 + d[2]];
            c.iter().all(|&v| v >= 0 && v < n)
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchOp {
    Factorize,
    Selinv,
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchOp::Factorize => "factorize",
            BenchOp::Selinv => "selinv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub n: usize,
    pub cores: usize,
    pub op: BenchOp,
    pub rep: usize,
    pub seconds: f64,
    pub nnz_q: usize,
    pub nnz_l: usize,
    pub bytes_peak: u64,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub records: Vec<TimingRecord>,
    /// `(cores, log-determinant)` for every entry of the cores list.
    pub logdets: Vec<(usize, f64)>,
}

impl BenchRun {
    /// Median wall time of `op` at `cores`.
    pub fn median_seconds(&self, op: BenchOp, cores: usize) -> Option<f64> {
        let mut t: Vec<f64> =
            self.records.iter().filter(|r| r.op == op && r.cores == cores).map(|r| r.seconds).collect();
        (!t.is_empty()).then(|| crate::spacetime::median(&mut t))
    }
}

/// Analyses once, then times `reps` factorizations and selected inversions
/// for each core count. Records are sorted by `(n, cores, op, rep)`.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchRun> {
    let q = bench_matrix(cfg)?;
    let symbolic = Arc::new(analyze_with_scheme(&q, OrderingScheme::Amd)?);
    let (nnz_q, nnz_l) = (q.nnz(), symbolic.nnz_l());
    let factor_bytes = 8 * nnz_l as u64;

    let mut records = Vec::with_capacity(2 * cfg.reps * cfg.cores_list.len());
    let mut logdets = Vec::with_capacity(cfg.cores_list.len());
    for &cores in &cfg.cores_list {
        let mut factor = None;
        for rep in 0..cfg.reps {
            let start = Instant::now();
            let f = factorize(&q, &symbolic, cores)?;
            let seconds = start.elapsed().as_secs_f64();
            records.push(TimingRecord {
                n: cfg.n,
                cores,
                op: BenchOp::Factorize,
                rep,
                seconds,
                nnz_q,
                nnz_l,
                bytes_peak: factor_bytes,
            });
            factor = Some(f);
        }
        let factor = factor.expect("reps >= 1");
        logdets.push((cores, factor.logdet()));
        for rep in 0..cfg.reps {
            let start = Instant::now();
            let z = selected_inverse(&factor, cores);
            let seconds = start.elapsed().as_secs_f64();
            drop(z);
            records.push(TimingRecord {
                n: cfg.n,
                cores,
                op: BenchOp::Selinv,
                rep,
                seconds,
                nnz_q,
                nnz_l,
                bytes_peak: 2 * factor_bytes,
            });
        }
    }
    records.sort_by_key(|r| (r.n, r.cores, r.op, r.rep));
    Ok(BenchRun { records, logdets })
}

pub const CSV_HEADER: &str = "n,cores,op,rep,seconds,nnz_q,nnz_l,bytes_peak";

pub fn write_csv<W: Write>(mut out: W, records: &[TimingRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{},{}",
            r.n, r.cores, r.op, r.rep, r.seconds, r.nnz_q, r.nnz_l, r.bytes_peak
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_has_56_offsets() {
        let offs = stencil_offsets();
        assert_eq!(offs.len(), 56);
        assert_eq!(forward_offsets().len(), 28);
    }

    #[test]
    fn two_cube_is_complete() {
        let cfg = BenchConfig { dense_rows: 0, ..BenchConfig::with_side(2) };
        let q = bench_matrix(&cfg).unwrap();
        assert_eq!(q.n(), 8);
        assert_eq!(q.nnz(), 8 * 9 / 2);
        assert!(q.pattern().degrees().iter().all(|&d| d == 7));
    }

    #[test]
    fn nnz_formula_matches_construction() {
        for (n, d) in [(3, 0), (4, 2), (5, 25)] {
            let cfg = BenchConfig { dense_rows: d, ..BenchConfig::with_side(n) };
            assert_eq!(bench_matrix(&cfg).unwrap().nnz() as u64, bench_nnz(&cfg));
        }
    }

    #[test]
    fn gershgorin_dominance() {
        let q = bench_matrix(&BenchConfig::with_side(4)).unwrap();
        let d = q.to_dense();
        for i in 0..q.n() {
            let off: f64 = (0..q.n()).filter(|&j| j != i).map(|j| d.get(i, j).abs()).sum();
            assert!(d.get(i, i) > off, "row {i}");
        }
    }

    #[test]
    fn memory_cap_refuses() {
        let cfg = BenchConfig { memory_cap: Some(1024), ..BenchConfig::with_side(6) };
        assert!(matches!(bench_matrix(&cfg), Err(Error::MemoryCap { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(BenchConfig::with_side(1).validate().is_err());
        let c = BenchConfig { cores_list: vec![2, 1], ..BenchConfig::with_side(3) };
        assert!(c.validate().is_err());
        let c = BenchConfig { reps: 0, ..BenchConfig::with_side(3) };
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let r = TimingRecord {
            n: 8,
            cores: 2,
            op: BenchOp::Selinv,
            rep: 1,
            seconds: 0.5,
            nnz_q: 10,
            nnz_l: 20,
            bytes_peak: 320,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[r]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n8,2,selinv,1,0.500000,10,20,320\n"));
    }
}
