mod common;

use std::sync::Arc;

use common::*;
use gmrfkit::bench::{bench_matrix, BenchConfig};
use gmrfkit::{
    analyze, analyze_with_scheme, factorize, marginal_variances, order, selected_inverse, CholeskyFactor, Error,
    OrderingScheme, Permutation, SymmetricSparseMatrix,
};
use nalgebra::DMatrix;

const SCHEMES: [OrderingScheme; 3] = [OrderingScheme::Amd, OrderingScheme::Identity, OrderingScheme::Rcm];

fn cases() -> impl Iterator<Item = (usize, SymmetricSparseMatrix)> {
    [(5, 0.6), (20, 0.2), (47, 0.08), (90, 0.03), (150, 0.02)]
        .into_iter()
        .enumerate()
        .map(|(k, (n, d))| (n, random_spd(n, d, 100 + k as u64)))
}

#[test]
fn multiply_back_matches_permuted_q() {
    for (_, q) in cases() {
        let qd = dense(&q);
        for scheme in SCHEMES {
            let f = CholeskyFactor::new(&q, scheme, 1).unwrap();
            let l = dense_l(&f);
            let err = norm_inf(&(permuted(&qd, &f) - &l * l.transpose()));
            assert!(err <= 1e-9 * norm_inf(&qd), "{scheme:?}: {err:e}");
        }
    }
}

#[test]
fn two_by_two_factor_and_solves() {
    let q = SymmetricSparseMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 0, 2.0), (1, 1, 3.0)]).unwrap();
    let f = CholeskyFactor::new(&q, OrderingScheme::Identity, 1).unwrap();
    let l = dense_l(&f);
    let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
    assert!((l - want).abs().max() < 1e-15);
    let x = f.solve(&[8.0, 7.0]).unwrap();
    assert!((x[0] - 1.25).abs() < 1e-14 && (x[1] - 1.5).abs() < 1e-14);
}

#[test]
fn triangular_and_full_solves_have_small_residuals() {
    for (n, q) in cases() {
        let qd = dense(&q);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        for scheme in SCHEMES {
            let f = CholeskyFactor::new(&q, scheme, 1).unwrap();
            let l = dense_l(&f);

            let x = f.solve_lower(&b).unwrap();
            let r = &l * DMatrix::from_column_slice(n, 1, &x) - DMatrix::from_column_slice(n, 1, &b);
            assert!(r.amax() < 1e-11, "lower {scheme:?} n={n}: {:e}", r.amax());

            let x = f.solve_upper(&b).unwrap();
            let r = l.transpose() * DMatrix::from_column_slice(n, 1, &x) - DMatrix::from_column_slice(n, 1, &b);
            assert!(r.amax() < 1e-11, "upper {scheme:?} n={n}: {:e}", r.amax());

            let x = f.solve(&b).unwrap();
            let r = &qd * DMatrix::from_column_slice(n, 1, &x) - DMatrix::from_column_slice(n, 1, &b);
            assert!(r.amax() < 1e-11, "full {scheme:?} n={n}: {:e}", r.amax());
        }
    }
}

#[test]
fn logdet_matches_dense_cholesky() {
    for (_, q) in cases() {
        let chol = dense(&q).cholesky().unwrap();
        let want = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        for scheme in SCHEMES {
            let got = CholeskyFactor::new(&q, scheme, 1).unwrap().logdet();
            assert!((got - want).abs() < 1e-10, "{scheme:?}: {got} vs {want}");
        }
    }
}

#[test]
fn solves_and_logdet_agree_across_orderings() {
    for (n, q) in cases() {
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let reference = CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap();
        let (x0, ld0) = (reference.solve(&b).unwrap(), reference.logdet());
        for scheme in [OrderingScheme::Identity, OrderingScheme::Rcm] {
            let f = CholeskyFactor::new(&q, scheme, 1).unwrap();
            assert!(rel_close(f.logdet(), ld0, 1e-9));
            let scale = x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in f.solve(&b).unwrap().iter().zip(&x0) {
                assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }
}

#[test]
fn factor_and_inverse_are_bit_identical_across_core_counts() {
    // Large enough for the top supernodes to be split into row chunks.
    let q = bench_matrix(&BenchConfig::with_side(12)).unwrap();
    let s = Arc::new(analyze_with_scheme(&q, OrderingScheme::Amd).unwrap());
    let f1 = factorize(&q, &s, 1).unwrap();
    let z1 = selected_inverse(&f1, 1);
    for cores in [2, 3, 8] {
        let f = factorize(&q, &s, cores).unwrap();
        assert_eq!(f.values(), f1.values(), "factor, {cores} cores");
        assert_eq!(selected_inverse(&f, cores).factor_values(), z1.factor_values(), "selinv, {cores} cores");
    }
}

#[test]
fn refactorization_matches_fresh_runs() {
    let a = random_spd(60, 0.1, 7);
    // Same pattern, different values.
    let mut b = a.clone();
    for (k, v) in b.values_mut().iter_mut().enumerate() {
        *v *= 1.0 + 0.01 * (k % 5) as f64;
    }
    let s = Arc::new(analyze_with_scheme(&a, OrderingScheme::Amd).unwrap());
    let fa = factorize(&a, &s, 1).unwrap();
    let fb = factorize(&b, &s, 1).unwrap();
    assert_eq!(fa.values(), CholeskyFactor::new(&a, OrderingScheme::Amd, 1).unwrap().values());
    assert_eq!(fb.values(), CholeskyFactor::new(&b, OrderingScheme::Amd, 1).unwrap().values());
}

#[test]
fn failing_pivot_is_reported_for_any_core_count() {
    // Indefinite in the last column of a chain.
    let n = 200;
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 2.0)).collect();
    t.extend((1..n).map(|i| (i, i - 1, -1.0)));
    t[n - 1].2 = 0.5;
    let q = SymmetricSparseMatrix::from_triplets(n, &t).unwrap();
    let s = Arc::new(analyze(&q, &Permutation::identity(n)).unwrap());
    for cores in [1, 4] {
        match factorize(&q, &s, cores) {
            Err(Error::NotPositiveDefinite { column, .. }) => assert_eq!(column, n - 1),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}

/// Boolean elimination on the dense pattern.
fn dense_symbolic_count(q: &SymmetricSparseMatrix, perm: &Permutation) -> usize {
    let n = q.n();
    let p = perm.new_to_old();
    let mut nz = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..=i {
            nz[i][j] = q.pattern().find(p[i].max(p[j]), p[i].min(p[j])).is_some();
        }
    }
    for k in 0..n {
        let below: Vec<usize> = (k + 1..n).filter(|&i| nz[i][k]).collect();
        for (a, &i) in below.iter().enumerate() {
            for &j in &below[..=a] {
                nz[i][j] = true;
            }
        }
    }
    (0..n).map(|i| (0..=i).filter(|&j| nz[i][j]).count()).sum()
}

#[test]
fn fill_of_grid_matches_dense_elimination() {
    let q = grid_laplacian(4, 0.0);
    for scheme in SCHEMES {
        let p = order(&q, scheme);
        let s = analyze(&q, &p).unwrap();
        assert_eq!(s.nnz_l(), dense_symbolic_count(&q, s.permutation()), "{scheme:?}");
    }
    let q = random_spd(40, 0.08, 3);
    let s = analyze_with_scheme(&q, OrderingScheme::Amd).unwrap();
    assert_eq!(s.nnz_l(), dense_symbolic_count(&q, s.permutation()));
}

#[test]
fn amd_fill_beats_identity() {
    let grid = grid_laplacian(5, 0.0);
    let amd = analyze_with_scheme(&grid, OrderingScheme::Amd).unwrap().nnz_l();
    let ident = analyze_with_scheme(&grid, OrderingScheme::Identity).unwrap().nnz_l();
    assert!(amd <= ident, "{amd} > {ident}");

    let cube = bench_matrix(&BenchConfig::with_side(8)).unwrap();
    let amd = analyze_with_scheme(&cube, OrderingScheme::Amd).unwrap().nnz_l();
    let ident = analyze_with_scheme(&cube, OrderingScheme::Identity).unwrap().nnz_l();
    assert!(amd <= ident, "{amd} > {ident}");
}

#[test]
fn selected_inverse_matches_dense_inverse() {
    for (_, q) in cases() {
        let inv = dense(&q).try_inverse().unwrap();
        for scheme in SCHEMES {
            let f = CholeskyFactor::new(&q, scheme, 1).unwrap();
            let z = selected_inverse(&f, 1).to_matrix();
            for j in 0..z.n() {
                for p in z.pattern().col_range(j) {
                    let i = z.pattern().row_idx()[p];
                    let (got, want) = (z.values()[p], inv[(i, j)]);
                    assert!(rel_close(got, want, 1e-9), "{scheme:?} ({i},{j}): {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn selected_inverse_on_q_pattern_is_ordering_invariant() {
    let q = random_spd(80, 0.05, 11);
    let z0 = selected_inverse(&CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap(), 1).on_q_pattern();
    for scheme in [OrderingScheme::Identity, OrderingScheme::Rcm] {
        let z = selected_inverse(&CholeskyFactor::new(&q, scheme, 1).unwrap(), 1).on_q_pattern();
        for (a, b) in z.values().iter().zip(z0.values()) {
            assert!(rel_close(*a, *b, 1e-9));
        }
    }
}

#[test]
fn selected_inverse_covers_q_and_is_symmetric() {
    let q = random_spd(50, 0.1, 5);
    let z = selected_inverse(&CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap(), 1);
    for j in 0..q.n() {
        for &i in q.pattern().col(j) {
            let (a, b) = (z.get(i, j).unwrap(), z.get(j, i).unwrap());
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    assert!(z.diag().iter().all(|&d| d > 0.0));
    let full = dense(&z.to_matrix());
    assert_eq!(full, full.transpose());
}

#[test]
fn grid_marginal_variances_match_dense_inverse() {
    let q = grid_laplacian(5, 0.1);
    let inv = dense(&q).try_inverse().unwrap();
    let var = marginal_variances(&CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap(), 1);
    for (i, v) in var.iter().enumerate() {
        assert!((v - inv[(i, i)]).abs() < 1e-10);
    }
}

#[test]
fn tridiagonal_rows_of_q_times_inverse_are_unit() {
    let n = 30;
    let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 2.5 + (i % 3) as f64)).collect();
    t.extend((1..n).map(|i| (i, i - 1, -1.0)));
    let q = SymmetricSparseMatrix::from_triplets(n, &t).unwrap();
    for scheme in SCHEMES {
        let z = selected_inverse(&CholeskyFactor::new(&q, scheme, 1).unwrap(), 1);
        for i in 0..n {
            let s: f64 = (i.saturating_sub(1)..(i + 2).min(n)).map(|j| q.get(i, j) * z.get(j, i).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "{scheme:?} row {i}: {s}");
        }
    }
}
