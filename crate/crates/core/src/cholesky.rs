//! Numeric sparse Cholesky factorization `P Q Pᵀ = L Lᵀ` (left-looking over
//! fundamental supernodes), triangular solves and the log-determinant.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ordering::OrderingScheme;
use crate::parallel::{chunk_bounds, supernode_schedule, with_workers, Panel, SharedColumns};
use crate::sparse::{DenseMatrix, SymmetricSparseMatrix};
use crate::symbolic::{analyze_with_scheme, SymbolicFactor};

/// Pivots below this fraction of the largest diagonal entry of Q are
/// rejected as numerically singular.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: Arc<SymbolicFactor>,
    values: Vec<f64>,
}

/// First failing column in factor ordering.
#[derive(Debug, Clone, Copy)]
struct PivotFailure {
    column: usize,
    pivot: f64,
}

impl CholeskyFactor {
    /// Orders, analyses and factorizes in one call.
    pub fn new(q: &SymmetricSparseMatrix, scheme: OrderingScheme, cores: usize) -> Result<Self> {
        let symbolic = Arc::new(analyze_with_scheme(q, scheme)?);
        factorize(q, &symbolic, cores)
    }

    pub fn symbolic(&self) -> &Arc<SymbolicFactor> {
        &self.symbolic
    }

    pub fn n(&self) -> usize {
        self.symbolic.n()
    }

    /// Values of L on [`SymbolicFactor::l_pattern`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l_diag(&self) -> impl Iterator<Item = f64> + '_ {
        let cp = self.symbolic.l_pattern().col_ptr();
        (0..self.n()).map(move |j| self.values[cp[j]])
    }

    /// `log|Q| = 2 Σ log L_jj`.
    pub fn logdet(&self) -> f64 {
        2.0 * self.l_diag().map(f64::ln).sum::<f64>()
    }

    /// Solves `L x = b` in factor ordering.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        Ok(x)
    }

    /// Solves `Lᵀ x = b` in factor ordering.
    pub fn solve_upper(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let mut x = b.to_vec();
        self.solve_upper_in_place(&mut x);
        Ok(x)
    }

    /// Solves `Q x = b` in original coordinates.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b.len())?;
        let perm = self.symbolic.permutation();
        let mut x = perm.gather(b);
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        Ok(perm.scatter(&x))
    }

    pub fn solve_lower_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(b, |x| self.solve_lower(x))
    }

    pub fn solve_upper_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(b, |x| self.solve_upper(x))
    }

    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(b, |x| self.solve(x))
    }

    /// `L x` in factor ordering.
    pub fn mul_lower(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let pat = self.symbolic.l_pattern();
        let mut y = vec![0.0; x.len()];
        for j in 0..self.n() {
            for p in pat.col_range(j) {
                y[pat.row_idx()[p]] += self.values[p] * x[j];
            }
        }
        Ok(y)
    }

    fn map_columns(&self, b: &DenseMatrix, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<DenseMatrix> {
        self.check_len(b.nrows())?;
        let cols = b.columns().map(f).collect::<Result<Vec<_>>>()?;
        DenseMatrix::from_columns(b.nrows(), &cols)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::dims(format!("right-hand side of length {len} for a factor of size {}", self.n())));
        }
        Ok(())
    }

    pub(crate) fn solve_lower_in_place(&self, x: &mut [f64]) {
        let pat = self.symbolic.l_pattern();
        let (cp, ri) = (pat.col_ptr(), pat.row_idx());
        for j in 0..self.n() {
            let xj = x[j] / self.values[cp[j]];
            x[j] = xj;
            for p in cp[j] + 1..cp[j + 1] {
                x[ri[p]] -= self.values[p] * xj;
            }
        }
    }

    pub(crate) fn solve_upper_in_place(&self, x: &mut [f64]) {
        let pat = self.symbolic.l_pattern();
        let (cp, ri) = (pat.col_ptr(), pat.row_idx());
        for j in (0..self.n()).rev() {
            let mut acc = x[j];
            for p in cp[j] + 1..cp[j + 1] {
                acc -= self.values[p] * x[ri[p]];
            }
            x[j] = acc / self.values[cp[j]];
        }
    }
}

/// Numeric factorization on a precomputed analysis. Output is bit-identical
/// for every `cores` value.
pub fn factorize(q: &SymmetricSparseMatrix, symbolic: &Arc<SymbolicFactor>, cores: usize) -> Result<CholeskyFactor> {
    if !symbolic.compatible_with(q) {
        return Err(Error::dims("matrix pattern differs from the analysed pattern"));
    }
    let n = symbolic.n();
    let max_diag = q.diag().into_iter().fold(0.0f64, f64::max);
    let threshold = PIVOT_TOLERANCE * max_diag;
    let mut values = vec![0.0; symbolic.nnz_l()];
    let workers = cores.max(1);
    let schedule = supernode_schedule(symbolic, workers);

    let failure = with_workers(workers, || {
        let shared = SharedColumns::new(&mut values);
        let kernel = SupernodeKernel { sym: symbolic, q: q.values(), shared: &shared, threshold };

        let subtree_failure = schedule
            .subtrees
            .par_iter()
            .map(|nodes| {
                let mut map = vec![0usize; n];
                for &s in nodes {
                    kernel.factor(s, &mut map, 1)?;
                }
                Ok(())
            })
            .filter_map(|r: std::result::Result<(), PivotFailure>| r.err())
            .min_by_key(|f| f.column);

        // Top supernodes below the first subtree failure only depend on
        // columns that completed, so the reported column matches a serial run.
        let stop = subtree_failure.map_or(usize::MAX, |f| f.column);
        let mut map = vec![0usize; n];
        for &s in schedule.top.iter().take_while(|&&s| symbolic.supernode(s).start < stop) {
            let rows = symbolic.l_pattern().col(symbolic.supernode(s).start).len();
            if let Err(f) = kernel.factor(s, &mut map, schedule.chunks_for(rows)) {
                return Some(f);
            }
        }
        subtree_failure
    });

    if let Some(f) = failure {
        return Err(Error::NotPositiveDefinite { column: f.column, pivot: f.pivot });
    }
    Ok(CholeskyFactor { symbolic: Arc::clone(symbolic), values })
}

/// Rows of a panel eliminated together in the off-diagonal solve.
const ROW_BLOCK: usize = 128;

struct SupernodeKernel<'a> {
    sym: &'a SymbolicFactor,
    q: &'a [f64],
    shared: &'a SharedColumns<'a>,
    threshold: f64,
}

impl SupernodeKernel<'_> {
    /// Computes the columns of supernode `s` from its finished descendants.
    ///
    /// Entry `(i, j)` receives, for each updating supernode in ascending
    /// order, the sum over that supernode's columns (ascending) of
    /// `L(i, k) L(j, k)`; then the updates from earlier columns of `s`
    /// (ascending) and the division by the pivot. Row chunking never
    /// changes this sequence.
    fn factor(&self, s: usize, map: &mut [usize], chunks: usize) -> std::result::Result<(), PivotFailure> {
        let pat = self.sym.l_pattern();
        let cp = pat.col_ptr();
        let cols = self.sym.supernode(s);
        let (f, w) = (cols.start, cols.len());
        let rows = pat.col(f);
        let m = rows.len();
        for (t, &r) in rows.iter().enumerate() {
            map[r] = t;
        }
        let map: &[usize] = map;
        let panel = Panel { shared: self.shared, cp, f };

        {
            // SAFETY: the columns of `s` are written only by this call.
            let block = unsafe { self.shared.get_mut(cp[f]..cp[f + w]) };
            block.fill(0.0);
            for c in 0..w {
                let off = cp[f + c] - cp[f];
                for &(o, qi) in self.sym.scatter(f + c) {
                    block[off + o] = self.q[qi];
                }
            }
        }

        let bounds = chunk_bounds(m, chunks);
        let update = |r: &std::ops::Range<usize>| self.apply_updates(s, rows, map, &panel, r.clone());
        if bounds.len() == 1 {
            update(&bounds[0]);
        } else {
            bounds.par_iter().for_each(update);
        }

        // Diagonal block.
        let mut diag = vec![0.0; w * w];
        for c in 0..w {
            // SAFETY: rows c..w of the supernode's columns, this thread only.
            let colc = unsafe { panel.rows_mut(c, c, w) };
            for c2 in 0..c {
                let prev = unsafe { panel.rows(c2, c, w) };
                let sc = prev[0];
                for (x, p) in colc.iter_mut().zip(prev) {
                    *x -= sc * p;
                }
            }
            let d = colc[0];
            if !(d > 0.0) || d < self.threshold {
                return Err(PivotFailure { column: f + c, pivot: d });
            }
            let ljj = d.sqrt();
            colc[0] = ljj;
            for x in &mut colc[1..] {
                *x /= ljj;
            }
            for (t, &x) in colc.iter().enumerate() {
                diag[c * w + c + t] = x;
            }
        }

        // Rows below the diagonal block: L_b = A_b L_d⁻ᵀ.
        let solve = |r: &std::ops::Range<usize>| {
            let mut lo = r.start;
            while lo < r.end {
                let hi = (lo + ROW_BLOCK).min(r.end);
                for c in 0..w {
                    // SAFETY: rows lo..hi belong to this chunk.
                    let colc = unsafe { panel.rows_mut(c, lo, hi) };
                    for c2 in 0..c {
                        let prev = unsafe { panel.rows(c2, lo, hi) };
                        let sc = diag[c2 * w + c];
                        for (x, p) in colc.iter_mut().zip(prev) {
                            *x -= sc * p;
                        }
                    }
                    let ljj = diag[c * w + c];
                    for x in colc.iter_mut() {
                        *x /= ljj;
                    }
                }
                lo = hi;
            }
        };
        let bounds = chunk_bounds(m - w, chunks);
        let bounds: Vec<_> = bounds.into_iter().map(|r| r.start + w..r.end + w).collect();
        if bounds.len() == 1 {
            solve(&bounds[0]);
        } else {
            bounds.par_iter().for_each(solve);
        }
        Ok(())
    }

    /// Subtracts the contributions of every updating supernode to rows
    /// `range` (positions within `rows`) of supernode `s`.
    fn apply_updates(&self, s: usize, rows: &[usize], map: &[usize], panel: &Panel, range: std::ops::Range<usize>) {
        if range.is_empty() {
            return;
        }
        let pat = self.sym.l_pattern();
        let cp = pat.col_ptr();
        let (f, w) = (panel.f, self.sym.supernode(s).len());
        let (row_lo, row_hi) = (rows[range.start], rows[range.end - 1]);
        let mut buf = Vec::new();

        for &k in self.sym.updates(s) {
            let kcols = self.sym.supernode(k);
            let (fk, wk) = (kcols.start, kcols.len());
            let rk = pat.col(fk);
            let a = wk + rk[wk..].partition_point(|&r| r < f);
            let nc = rk[a..].partition_point(|&r| r < f + w);
            let plo = a + rk[a..].partition_point(|&r| r < row_lo);
            let phi = a + rk[a..].partition_point(|&r| r <= row_hi);
            if plo >= phi {
                continue;
            }
            let nc = nc.min(phi - a);
            // Target positions of rows plo..phi are consecutive.
            let dense = map[rk[phi - 1]] - map[rk[plo]] == phi - 1 - plo;
            if wk == 1 {
                // A single source column: the sum below is one product, so
                // subtracting it in place gives the same bits.
                // SAFETY: supernode k is finished and no longer written.
                let colk = unsafe { self.shared.get(cp[fk]..cp[fk + 1]) };
                for c in 0..nc {
                    let jc = rk[a + c] - f;
                    let first = plo.max(a + c);
                    let lo = range.start.max(jc);
                    let sc = colk[a + c];
                    // SAFETY: rows of `range` in column jc belong to this chunk.
                    let target = unsafe { panel.rows_mut(jc, lo, range.end) };
                    if dense {
                        let t0 = map[rk[first]] - lo;
                        for (t, xv) in target[t0..t0 + phi - first].iter_mut().zip(&colk[first..phi]) {
                            *t -= xv * sc;
                        }
                    } else {
                        for p in first..phi {
                            target[map[rk[p]] - lo] -= colk[p] * sc;
                        }
                    }
                }
                continue;
            }
            for c0 in (0..nc).step_by(4) {
                let cw = (nc - c0).min(4);
                let pstart = plo.max(a + c0);
                let len = phi - pstart;
                buf.clear();
                buf.resize(4 * len, 0.0);
                let (b0, rest) = buf.split_at_mut(len);
                let (b1, rest) = rest.split_at_mut(len);
                let (b2, b3) = rest.split_at_mut(len);
                for kk in 0..wk {
                    // SAFETY: supernode k is finished and no longer written.
                    let colk = unsafe { self.shared.get(cp[fk + kk]..cp[fk + kk + 1]) };
                    let x = &colk[pstart - kk..phi - kk];
                    let sv = |i: usize| if i < cw { colk[a + c0 + i - kk] } else { 0.0 };
                    let (s0, s1, s2, s3) = (sv(0), sv(1), sv(2), sv(3));
                    match cw {
                        4 => {
                            for t in 0..len {
                                let xv = x[t];
                                b0[t] += xv * s0;
                                b1[t] += xv * s1;
                                b2[t] += xv * s2;
                                b3[t] += xv * s3;
                            }
                        }
                        _ => {
                            for (bi, si) in [&mut *b0, &mut *b1, &mut *b2].into_iter().zip([s0, s1, s2]).take(cw) {
                                for (b, xv) in bi.iter_mut().zip(x) {
                                    *b += xv * si;
                                }
                            }
                        }
                    }
                }
                for (i, bi) in [&*b0, &*b1, &*b2, &*b3].into_iter().enumerate().take(cw) {
                    let c = c0 + i;
                    let jc = rk[a + c] - f;
                    let first = pstart.max(a + c);
                    if first >= phi {
                        continue;
                    }
                    let lo = range.start.max(jc);
                    // SAFETY: rows of `range` in column jc belong to this chunk.
                    let target = unsafe { panel.rows_mut(jc, lo, range.end) };
                    if dense {
                        let t0 = map[rk[first]] - lo;
                        for (t, b) in target[t0..t0 + phi - first].iter_mut().zip(&bi[first - pstart..]) {
                            *t -= b;
                        }
                    } else {
                        for p in first..phi {
                            target[map[rk[p]] - lo] -= bi[p - pstart];
                        }
                    }
                }
            }
        }
    }
}
