mod common;

use common::*;
use gmrfkit::mmio::{format_symmetric, parse_symmetric};
use gmrfkit::{ProjectionMatrix, SymmetricSparseMatrix};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn dense_kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

#[test]
fn kron_of_random_spd_matches_dense_kronecker() {
    let (a, b) = (random_spd(4, 0.7, 1), random_spd(4, 0.5, 2));
    let got = dense(&SymmetricSparseMatrix::kron(&a, &b).unwrap());
    let want = dense_kron(&dense(&a), &dense(&b));
    assert!((got - want).amax() < 1e-13);
}

#[test]
fn kron_of_rectangular_blocks_uses_second_factor_fastest() {
    let (a, b) = (random_spd(2, 1.0, 3), random_spd(3, 1.0, 4));
    let k = SymmetricSparseMatrix::kron(&a, &b).unwrap();
    for (i, j, kk, l) in [(0, 1, 2, 0), (1, 1, 1, 2), (1, 0, 0, 0)] {
        assert_eq!(k.get(i * 3 + kk, j * 3 + l), a.get(i, j) * b.get(kk, l));
    }
}

#[test]
fn normal_product_matches_dense_ata() {
    let mut rng = StdRng::seed_from_u64(9);
    let mut t = Vec::new();
    for r in 0..6 {
        for c in 0..10 {
            if rng.gen::<f64>() < 0.3 {
                t.push((r, c, rng.gen_range(-2.0..2.0)));
            }
        }
    }
    let a = ProjectionMatrix::from_triplets(6, 10, &t).unwrap();
    let mut ad = DMatrix::zeros(6, 10);
    for &(r, c, v) in &t {
        ad[(r, c)] = v;
    }
    let got = dense(&a.normal_product(2.5).unwrap());
    let want = ad.transpose() * &ad * 2.5;
    assert!((got - want).amax() < 1e-13);
}

#[test]
fn matvec_matches_dense_product() {
    let q = random_spd(50, 0.1, 21);
    let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
    let got = q.matvec(&x).unwrap();
    let want = dense(&q) * DMatrix::from_column_slice(50, 1, &x);
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn add_scaled_matches_dense_combination() {
    let (a, b) = (random_spd(30, 0.1, 5), random_spd(30, 0.1, 6));
    let got = dense(&SymmetricSparseMatrix::add_scaled(&a, &b, 2.0, -0.5).unwrap());
    let want = dense(&a) * 2.0 - dense(&b) * 0.5;
    assert!((got - want).amax() < 1e-13);
}

#[test]
fn matrix_market_round_trip_is_exact() {
    let q = random_spd(40, 0.1, 8);
    let back = parse_symmetric(&format_symmetric(&q)).unwrap();
    assert_eq!(back.pattern(), q.pattern());
    assert_eq!(back.values(), q.values());
}

#[test]
fn dense_view_is_symmetric() {
    let d = dense(&random_spd(25, 0.2, 4));
    assert_eq!(d, d.transpose());
}
