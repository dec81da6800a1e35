#![allow(dead_code)]

use gmrfkit::{CholeskyFactor, SymmetricSparseMatrix};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random sparse SPD matrix: off-diagonals uniform in (-1, 1) with the given
/// fill probability, diagonal dominant by a random margin.
pub fn random_spd(n: usize, density: f64, seed: u64) -> SymmetricSparseMatrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let mut row_abs = vec![0.0; n];
    for j in 0..n {
        for i in j + 1..n {
            if rng.gen::<f64>() < density {
                let v: f64 = rng.gen_range(-1.0..1.0);
                triplets.push((i, j, v));
                row_abs[i] += v.abs();
                row_abs[j] += v.abs();
            }
        }
    }
    for (i, s) in row_abs.iter().enumerate() {
        let margin: f64 = rng.gen_range(0.01..1.0);
        triplets.push((i, i, s + margin));
    }
    SymmetricSparseMatrix::from_triplets(n, &triplets).unwrap()
}

pub fn dense(q: &SymmetricSparseMatrix) -> DMatrix<f64> {
    let d = q.to_dense();
    DMatrix::from_column_slice(d.nrows(), d.ncols(), d.as_slice())
}

/// L in factor ordering.
pub fn dense_l(f: &CholeskyFactor) -> DMatrix<f64> {
    let pat = f.symbolic().l_pattern();
    let mut l = DMatrix::zeros(f.n(), f.n());
    for j in 0..pat.n() {
        for p in pat.col_range(j) {
            l[(pat.row_idx()[p], j)] = f.values()[p];
        }
    }
    l
}

/// P Q Pᵀ for the factor's permutation.
pub fn permuted(q: &DMatrix<f64>, f: &CholeskyFactor) -> DMatrix<f64> {
    let p = f.symbolic().permutation().new_to_old();
    DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(p[i], p[j])])
}

pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// 2D grid Laplacian on a `k × k` grid plus `shift · I`.
pub fn grid_laplacian(k: usize, shift: f64) -> SymmetricSparseMatrix {
    let idx = |x: usize, y: usize| y * k + x;
    let mut t = Vec::new();
    for y in 0..k {
        for x in 0..k {
            let mut deg = 0.0;
            if x + 1 < k {
                t.push((idx(x + 1, y), idx(x, y), -1.0));
            }
            if y + 1 < k {
                t.push((idx(x, y + 1), idx(x, y), -1.0));
            }
            for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if xx >= 0 && yy >= 0 && xx < k as i64 && yy < k as i64 {
                    deg += 1.0;
                }
            }
            t.push((idx(x, y), idx(x, y), deg + shift));
        }
    }
    SymmetricSparseMatrix::from_triplets(k * k, &t).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
