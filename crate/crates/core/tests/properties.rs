mod common;

use common::*;
use gmrfkit::mmio::{format_symmetric, parse_symmetric};
use gmrfkit::{
    fem_1d, fem_2d, marginal_variances, order, posterior_precision, selected_inverse, structured_mesh,
    CholeskyFactor, Mesh1D, ObservationModel, OrderingScheme, SymmetricSparseMatrix,
};
use proptest::prelude::*;

fn spd() -> impl Strategy<Value = SymmetricSparseMatrix> {
    (1usize..40, 0.0f64..0.5, any::<u64>()).prop_map(|(n, d, seed)| random_spd(n, d, seed))
}

fn scheme() -> impl Strategy<Value = OrderingScheme> {
    prop_oneof![Just(OrderingScheme::Amd), Just(OrderingScheme::Identity), Just(OrderingScheme::Rcm)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stored_pattern_is_sorted_lower_with_diagonal(q in spd()) {
        let p = q.pattern();
        prop_assert_eq!(p.col_ptr().len(), p.n() + 1);
        prop_assert_eq!(*p.col_ptr().last().unwrap(), p.nnz());
        prop_assert_eq!(q.values().len(), p.nnz());
        for j in 0..p.n() {
            let col = p.col(j);
            prop_assert_eq!(col[0], j);
            prop_assert!(col.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn orderings_are_bijections(q in spd(), s in scheme()) {
        let p = order(&q, s);
        let (fwd, inv) = (p.new_to_old(), p.old_to_new());
        for i in 0..q.n() {
            prop_assert_eq!(inv[fwd[i]], i);
            prop_assert_eq!(fwd[inv[i]], i);
        }
    }

    #[test]
    fn matrix_market_round_trip(q in spd()) {
        let back = parse_symmetric(&format_symmetric(&q)).unwrap();
        prop_assert_eq!(back.pattern(), q.pattern());
        prop_assert_eq!(back.values(), q.values());
    }

    #[test]
    fn kron_is_associative_on_patterns(a in spd(), b in spd(), c in spd()) {
        prop_assume!(a.n() * b.n() * c.n() <= 4000);
        let left = SymmetricSparseMatrix::kron(&SymmetricSparseMatrix::kron(&a, &b).unwrap(), &c).unwrap();
        let right = SymmetricSparseMatrix::kron(&a, &SymmetricSparseMatrix::kron(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.pattern(), right.pattern());
    }

    #[test]
    fn kron_commutes_with_scaling(a in spd(), b in spd(), alpha in -3.0f64..3.0) {
        prop_assume!(a.n() * b.n() <= 900);
        let x = SymmetricSparseMatrix::kron(&a.scale(alpha), &b).unwrap();
        let y = SymmetricSparseMatrix::kron(&a, &b).unwrap().scale(alpha);
        for (u, v) in x.values().iter().zip(y.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
        }
    }

    #[test]
    fn factor_reconstructs_q(q in spd(), s in scheme()) {
        let f = CholeskyFactor::new(&q, s, 1).unwrap();
        let qd = dense(&q);
        let l = dense_l(&f);
        prop_assert!(norm_inf(&(permuted(&qd, &f) - &l * l.transpose())) <= 1e-9 * norm_inf(&qd));
    }

    #[test]
    fn selected_inverse_matches_dense(q in spd(), s in scheme()) {
        let inv = dense(&q).try_inverse().unwrap();
        let z = selected_inverse(&CholeskyFactor::new(&q, s, 1).unwrap(), 1).to_matrix();
        for j in 0..z.n() {
            for p in z.pattern().col_range(j) {
                let i = z.pattern().row_idx()[p];
                prop_assert!(rel_close(z.values()[p], inv[(i, j)], 1e-9));
            }
        }
    }

    #[test]
    fn results_do_not_depend_on_core_count(q in spd(), cores in 2usize..9) {
        let f1 = CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap();
        let fk = CholeskyFactor::new(&q, OrderingScheme::Amd, cores).unwrap();
        prop_assert_eq!(f1.values(), fk.values());
        let (z1, zk) = (selected_inverse(&f1, 1), selected_inverse(&fk, cores));
        prop_assert_eq!(z1.factor_values(), zk.factor_values());
    }

    #[test]
    fn observing_reduces_variance(q in spd(), site in any::<prop::sample::Index>(), sigma in 0.01f64..10.0) {
        let mut masked = vec![f64::NAN; q.n()];
        masked[site.index(q.n())] = 1.0;
        let obs = ObservationModel::from_masked(&masked, sigma).unwrap();
        let prior = marginal_variances(&CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap(), 1);
        let qp = posterior_precision(&q, &obs).unwrap();
        let post = marginal_variances(&CholeskyFactor::new(&qp, OrderingScheme::Amd, 1).unwrap(), 1);
        for (a, b) in post.iter().zip(&prior) {
            prop_assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn fem_1d_conserves_length(steps in prop::collection::vec(0.05f64..3.0, 1..20)) {
        let mut nodes = vec![0.0];
        for h in &steps {
            nodes.push(nodes.last().unwrap() + h);
        }
        let len = *nodes.last().unwrap();
        let n = nodes.len();
        let f = fem_1d(&Mesh1D::new(nodes).unwrap(), 3).unwrap();
        prop_assert!((f.c0.diag().iter().sum::<f64>() - len).abs() < 1e-10);
        for m in 1..=3 {
            let r = f.g(m).unwrap().matvec(&vec![1.0; n]).unwrap();
            prop_assert!(r.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn fem_2d_conserves_area(w in 0.5f64..20.0, h in 0.5f64..20.0, nx in 2usize..9, ny in 2usize..9) {
        let f = fem_2d(&structured_mesh((0.0, w), (1.0, 1.0 + h), nx, ny).unwrap(), 3).unwrap();
        prop_assert!((f.c0.diag().iter().sum::<f64>() - w * h).abs() < 1e-10 * (w * h).max(1.0));
        for m in 1..=3 {
            let g = f.g(m).unwrap();
            let r = g.matvec(&vec![1.0; nx * ny]).unwrap();
            let scale = g.norm_inf().max(1.0);
            prop_assert!(r.iter().all(|v| v.abs() < 1e-9 * scale));
            let d = dense(g);
            prop_assert_eq!(&d, &d.transpose());
        }
    }
}
