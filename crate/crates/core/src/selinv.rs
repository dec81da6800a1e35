//! Selected inversion: entries of `Q⁻¹` on the pattern of the Cholesky
//! factor, by the backward Takahashi recursion.
//!
//! With `Z = (L Lᵀ)⁻¹`, `Z L = L⁻ᵀ` is upper triangular. For a supernode
//! with diagonal block `D`, the block `B` below it and the set `b` of rows
//! below,
//!
//! ```text
//! Z(b, s) = -Z(b, b) B D⁻¹
//! Z(s, s) = D⁻ᵀ D⁻¹ - (B D⁻¹)ᵀ Z(b, s)
//! ```
//!
//! Every entry of `Z(b, b)` lies on the pattern of L, in a column that is an
//! ancestor of the supernode, so supernodes are processed from the last to
//! the first.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cholesky::CholeskyFactor;
use crate::parallel::{supernode_schedule, with_workers, Panel, SharedColumns};
use crate::sparse::SymmetricSparseMatrix;
use crate::symbolic::SymbolicFactor;

#[derive(Debug, Clone)]
pub struct SelectedInverse {
    symbolic: Arc<SymbolicFactor>,
    /// `Q⁻¹` in factor ordering on the pattern of L.
    values: Vec<f64>,
}

impl SelectedInverse {
    pub fn n(&self) -> usize {
        self.symbolic.n()
    }

    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    /// Values in factor ordering on [`SymbolicFactor::l_pattern`].
    pub fn factor_values(&self) -> &[f64] {
        &self.values
    }

    /// `(Q⁻¹)_ij` in original indices, if `(i, j)` is on the computed pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let inv = self.symbolic.permutation().old_to_new();
        self.symbolic.l_pattern().find(inv[i], inv[j]).map(|p| self.values[p])
    }

    /// Marginal variances in original ordering.
    pub fn diag(&self) -> Vec<f64> {
        let cp = self.symbolic.l_pattern().col_ptr();
        let inv = self.symbolic.permutation().old_to_new();
        inv.iter().map(|&new| self.values[cp[new]]).collect()
    }

    /// `Q⁻¹` restricted to the pattern of the analysed matrix Q, sharing
    /// its pattern.
    pub fn on_q_pattern(&self) -> SymmetricSparseMatrix {
        let values = self.symbolic.q_to_l().iter().map(|&p| self.values[p]).collect();
        SymmetricSparseMatrix::new(Arc::clone(self.symbolic.source_pattern()), values)
            .expect("one value per stored entry")
    }

    /// All computed entries, mapped back to original ordering.
    pub fn to_matrix(&self) -> SymmetricSparseMatrix {
        let pat = self.symbolic.l_pattern();
        let perm = self.symbolic.permutation().new_to_old();
        let mut triplets = Vec::with_capacity(pat.nnz());
        for j in 0..pat.n() {
            for p in pat.col_range(j) {
                triplets.push((perm[pat.row_idx()[p]], perm[j], self.values[p]));
            }
        }
        SymmetricSparseMatrix::from_triplets(pat.n(), &triplets).expect("indices in range")
    }
}

/// Computes `Q⁻¹` on the pattern of L. Output is bit-identical for every
/// `cores` value.
pub fn selected_inverse(factor: &CholeskyFactor, cores: usize) -> SelectedInverse {
    let symbolic = Arc::clone(factor.symbolic());
    let mut values = vec![0.0; symbolic.nnz_l()];
    let workers = cores.max(1);
    let schedule = supernode_schedule(&symbolic, workers);

    with_workers(workers, || {
        let shared = SharedColumns::new(&mut values);
        let kernel = InverseKernel { sym: &symbolic, l: factor.values(), shared: &shared };
        for &s in schedule.top.iter().rev() {
            let cols = symbolic.supernode(s);
            let below = symbolic.l_pattern().col(cols.start).len() - cols.len();
            kernel.invert(s, schedule.chunks_for(below) > 1);
        }
        schedule.subtrees.par_iter().for_each(|nodes| {
            for &s in nodes.iter().rev() {
                kernel.invert(s, false);
            }
        });
    });
    SelectedInverse { symbolic, values }
}

/// Diagonal of `Q⁻¹` in original ordering.
pub fn marginal_variances(factor: &CholeskyFactor, cores: usize) -> Vec<f64> {
    selected_inverse(factor, cores).diag()
}

/// Rows handled as one unit in the off-diagonal block computations.
const ROW_BLOCK: usize = 64;

/// Dot product with four interleaved partial sums, combined as
/// `(s0 + s1) + (s2 + s3)` and followed by the tail.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let (at, bt) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in at.iter().zip(bt) {
        s += x * y;
    }
    s
}

fn for_blocks<T: Send>(len: usize, parallel: bool, f: impl Fn(std::ops::Range<usize>) -> T + Sync) -> Vec<T> {
    let blocks: Vec<_> = (0..len).step_by(ROW_BLOCK).map(|lo| lo..(lo + ROW_BLOCK).min(len)).collect();
    if parallel {
        blocks.into_par_iter().map(&f).collect()
    } else {
        blocks.into_iter().map(f).collect()
    }
}

struct InverseKernel<'a> {
    sym: &'a SymbolicFactor,
    l: &'a [f64],
    shared: &'a SharedColumns<'a>,
}

impl InverseKernel<'_> {
    /// Fills the columns of supernode `s`, whose ancestors are final.
    ///
    /// With `D` the diagonal block of L, `B` the block below it and `b` the
    /// rows below: `X = B D⁻¹`, `Z(b, s) = -Z(b, b) X` and
    /// `Z(s, s) = D⁻ᵀ D⁻¹ - Xᵀ Z(b, s)`.
    fn invert(&self, s: usize, parallel: bool) {
        let pat = self.sym.l_pattern();
        let (cp, ri) = (pat.col_ptr(), pat.row_idx());
        let cols = self.sym.supernode(s);
        let (f, w) = (cols.start, cols.len());
        let rows = pat.col(f);
        let m = rows.len();
        let nb = m - w;
        let below = &rows[w..];
        // Column c of the factor block, indexed by position - c.
        let lcol = |c: usize| &self.l[cp[f + c]..cp[f + c + 1]];

        // d[c * w + r] = L(r, c), minv = D⁻¹, both column-major.
        let mut d = vec![0.0; w * w];
        for c in 0..w {
            d[c * w + c..c * w + w].copy_from_slice(&lcol(c)[..w - c]);
        }
        let mut minv = vec![0.0; w * w];
        let solve = |b: usize, y: &mut [f64]| {
            // Column b of D⁻¹ by forward substitution; y holds rows b..w.
            y[0] = 1.0;
            for k in b..w {
                let yk = y[k - b] / d[k * w + k];
                y[k - b] = yk;
                for (v, dv) in y[k - b + 1..].iter_mut().zip(&d[k * w + k + 1..k * w + w]) {
                    *v -= yk * dv;
                }
            }
        };
        if parallel {
            minv.par_chunks_mut(w).enumerate().for_each(|(b, col)| solve(b, &mut col[b..]));
        } else {
            minv.chunks_mut(w).enumerate().for_each(|(b, col)| solve(b, &mut col[b..]));
        }

        // Z(b, b) as a full symmetric matrix, zbb[s * nb + u].
        let mut zbb = vec![0.0; nb * nb];
        for sb in 0..nb {
            let col = below[sb];
            // SAFETY: `col` is an ancestor of `s`, final and not written.
            let zc = unsafe { self.shared.get(cp[col]..cp[col + 1]) };
            let rc = &ri[cp[col]..cp[col + 1]];
            let mut p = 0;
            for u in sb..nb {
                while rc[p] != below[u] {
                    p += 1;
                }
                zbb[sb * nb + u] = zc[p];
                zbb[u * nb + sb] = zc[p];
            }
        }

        // X = B D⁻¹, x[c * nb + i].
        let pieces = for_blocks(nb, parallel, |r| {
            let h = r.len();
            let mut xl = vec![0.0; h * w];
            for c in (0..w).rev() {
                let (head, later) = xl.split_at_mut((c + 1) * h);
                let xc = &mut head[c * h..];
                xc.copy_from_slice(&lcol(c)[w - c + r.start..w - c + r.end]);
                for c2 in c + 1..w {
                    let dv = d[c * w + c2];
                    let x2 = &later[(c2 - c - 1) * h..(c2 - c) * h];
                    for (x, y) in xc.iter_mut().zip(x2) {
                        *x -= dv * y;
                    }
                }
                let dc = d[c * w + c];
                for x in xc.iter_mut() {
                    *x /= dc;
                }
            }
            (r, xl)
        });
        let mut x = vec![0.0; nb * w];
        for (r, xl) in &pieces {
            let h = r.len();
            for c in 0..w {
                x[c * nb + r.start..c * nb + r.end].copy_from_slice(&xl[c * h..(c + 1) * h]);
            }
        }
        drop(pieces);

        let panel = Panel { shared: self.shared, cp, f };
        // Z(b, s) = -Z(b, b) X, by blocks of rows. Every entry sums over k
        // in ascending order, whatever the blocking.
        let mut xt = vec![0.0; nb * w];
        for c in 0..w {
            for k in 0..nb {
                xt[k * w + c] = x[c * nb + k];
            }
        }
        for_blocks(nb, parallel, |r| {
            let h = r.len();
            let mut acc = vec![0.0; h * w];
            for i0 in (0..h).step_by(4) {
                let g = (h - i0).min(4);
                let a = &mut acc[i0 * w..(i0 + g) * w];
                for k in 0..nb {
                    let xk = &xt[k * w..(k + 1) * w];
                    for (t, at) in a.chunks_exact_mut(w).enumerate() {
                        let z = zbb[(r.start + i0 + t) * nb + k];
                        for (o, y) in at.iter_mut().zip(xk) {
                            *o += z * y;
                        }
                    }
                }
            }
            for c in 0..w {
                // SAFETY: rows r of the below block of column c belong to
                // this block only.
                let out = unsafe { panel.rows_mut(c, w + r.start, w + r.end) };
                for (t, o) in out.iter_mut().enumerate() {
                    *o = -acc[t * w + c];
                }
            }
        });

        // Z(s, s), one column at a time.
        let diag_col = |b: usize| {
            // SAFETY: column b of `s` is handled by this call only; the
            // diagonal part and the below part are disjoint.
            let zb = unsafe { panel.rows(b, w, m) };
            let out = unsafe { panel.rows_mut(b, b, w) };
            for (o, a) in out.iter_mut().zip(b..w) {
                let mm = dot(&minv[a * w + a..a * w + w], &minv[b * w + a..b * w + w]);
                *o = mm - dot(&x[a * nb..(a + 1) * nb], zb);
            }
        };
        if parallel {
            (0..w).into_par_iter().for_each(diag_col);
        } else {
            (0..w).for_each(diag_col);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::OrderingScheme;

    #[test]
    fn diagonal_inverse() {
        let q = SymmetricSparseMatrix::from_diagonal(&[2.0, 4.0, 5.0]);
        let f = CholeskyFactor::new(&q, OrderingScheme::Amd, 1).unwrap();
        let z = selected_inverse(&f, 1);
        for (got, want) in z.diag().iter().zip([0.5, 0.25, 0.2]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(z.symbolic().nnz_l(), 3);
    }

    #[test]
    fn two_by_two_inverse() {
        let q = SymmetricSparseMatrix::from_triplets(2, &[(0, 0, 4.0), (1, 0, 2.0), (1, 1, 3.0)]).unwrap();
        for scheme in [OrderingScheme::Identity, OrderingScheme::Amd] {
            let f = CholeskyFactor::new(&q, scheme, 1).unwrap();
            let z = selected_inverse(&f, 1);
            assert!((z.get(0, 0).unwrap() - 0.375).abs() < 1e-15);
            assert!((z.get(1, 0).unwrap() + 0.25).abs() < 1e-15);
            assert!((z.get(0, 1).unwrap() + 0.25).abs() < 1e-15);
            assert!((z.get(1, 1).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_has_unit_variances() {
        let f = CholeskyFactor::new(&SymmetricSparseMatrix::identity(4), OrderingScheme::Amd, 2).unwrap();
        assert_eq!(marginal_variances(&f, 2), vec![1.0; 4]);
    }

    #[test]
    fn tridiagonal_row_identity() {
        // For tridiagonal Q the pattern of L holds every Z(i, j) needed by
        // row i of Q Z = I.
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5 + 0.1 * i as f64));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        let q = SymmetricSparseMatrix::from_triplets(n, &t).unwrap();
        let f = CholeskyFactor::new(&q, OrderingScheme::Identity, 1).unwrap();
        let z = selected_inverse(&f, 1);
        for i in 0..n {
            let mut s = 0.0;
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                s += q.get(i, j) * z.get(j, i).unwrap();
            }
            assert!((s - 1.0).abs() < 1e-12, "row {i}: {s}");
        }
    }
}
