//! Symmetric sparse matrices stored as the lower triangle in compressed-column
//! form, plus the general sparse projection matrices used for observations.
//!
//! Patterns are immutable and reference counted: a factorization analysed for
//! one pattern can be reused for every matrix that shares it, and structural
//! zeros are never dropped.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Lower-triangular compressed-column pattern with every diagonal present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn new(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>) -> Result<Self> {
        if col_ptr.len() != n + 1 {
            return Err(Error::invalid(format!(
                "column pointer length {} != n + 1 = {}",
                col_ptr.len(),
                n + 1
            )));
        }
        if col_ptr[0] != 0 || col_ptr[n] != row_idx.len() {
            return Err(Error::invalid("column pointers do not span the row index array"));
        }
        for j in 0..n {
            let (start, end) = (col_ptr[j], col_ptr[j + 1]);
            if end < start {
                return Err(Error::invalid(format!("column pointers decrease at column {j}")));
            }
            let rows = &row_idx[start..end];
            if rows.first() != Some(&j) {
                return Err(Error::invalid(format!("diagonal missing in column {j}")));
            }
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("rows not strictly increasing in column {j}")));
            }
            if rows.last().is_some_and(|&r| r >= n) {
                return Err(Error::invalid(format!("row index out of range in column {j}")));
            }
        }
        Ok(Self { n, col_ptr, row_idx })
    }

    /// Constructor for callers that build the arrays by a procedure that
    /// guarantees the invariants. Checked in debug builds.
    pub(crate) fn from_parts_unchecked(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>) -> Self {
        debug_assert!(Self::new(n, col_ptr.clone(), row_idx.clone()).is_ok());
        Self { n, col_ptr, row_idx }
    }

    pub fn diagonal(n: usize) -> Self {
        Self { n, col_ptr: (0..=n).collect(), row_idx: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    /// Row indices of column `j`, ascending, diagonal first.
    pub fn col(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_range(j)]
    }

    /// Storage position of entry `(i, j)`; either triangle may be addressed.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let range = self.col_range(j);
        self.row_idx[range.clone()].binary_search(&i).ok().map(|p| range.start + p)
    }

    /// Per-row degree of the full symmetric graph, excluding the diagonal.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for j in 0..self.n {
            for &i in &self.col(j)[1..] {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        deg
    }

    /// Adjacency lists of the full symmetric graph (no self loops), each
    /// sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let deg = self.degrees();
        let mut adj: Vec<Vec<usize>> = deg.iter().map(|&d| Vec::with_capacity(d)).collect();
        for j in 0..self.n {
            for &i in &self.col(j)[1..] {
                adj[j].push(i);
            }
        }
        // Upper neighbours arrive in ascending column order, after which the
        // lower neighbours are appended; a merge keeps each list sorted.
        let mut upper: Vec<Vec<usize>> = deg.iter().map(|_| Vec::new()).collect();
        for j in 0..self.n {
            for &i in &self.col(j)[1..] {
                upper[i].push(j);
            }
        }
        for (a, mut u) in adj.iter_mut().zip(upper) {
            u.extend_from_slice(a);
            *a = u;
        }
        adj
    }

    /// Union of two patterns of equal dimension.
    pub fn union(&self, other: &SparsityPattern) -> Result<SparsityPattern> {
        if self.n != other.n {
            return Err(Error::dims(format!("pattern union of {} and {}", self.n, other.n)));
        }
        let mut col_ptr = Vec::with_capacity(self.n + 1);
        let mut row_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        col_ptr.push(0);
        for j in 0..self.n {
            let (a, b) = (self.col(j), other.col(j));
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                row_idx.push(next);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SparsityPattern::from_parts_unchecked(self.n, col_ptr, row_idx))
    }

    /// True when every entry of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SparsityPattern) -> bool {
        self.n == other.n
            && (0..self.n).all(|j| {
                let b = other.col(j);
                self.col(j).iter().all(|i| b.binary_search(i).is_ok())
            })
    }
}

/// Symmetric matrix, lower triangle stored on a shared [`SparsityPattern`].
#[derive(Debug, Clone)]
pub struct SymmetricSparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    pub fn new(pattern: Arc<SparsityPattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::dims(format!(
                "{} values for a pattern with {} entries",
                values.len(),
                pattern.nnz()
            )));
        }
        Ok(Self { pattern, values })
    }

    /// Builds from `(row, col, value)` triplets addressed in either triangle.
    /// Duplicates are summed; missing diagonal entries become structural zeros.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() + n);
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::dims(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            entries.push((c, r, v));
        }
        entries.extend((0..n).map(|d| (d, d, 0.0)));
        entries.sort_by_key(|e| (e.0, e.1));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in entries {
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let pattern = SparsityPattern::from_parts_unchecked(n, col_ptr, row_idx);
        Ok(Self { pattern: Arc::new(pattern), values })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            pattern: Arc::new(SparsityPattern::diagonal(diag.len())),
            values: diag.to_vec(),
        }
    }

    /// Dense column-major input; only the lower triangle is read and exact
    /// zeros off the diagonal are skipped.
    pub fn from_dense(dense: &DenseMatrix) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::dims("dense input is not square"));
        }
        let n = dense.nrows();
        let mut triplets = Vec::new();
        for j in 0..n {
            for i in j..n {
                let v = dense.get(i, j);
                if i == j || v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets)
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn shared_pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.values[self.pattern.col_ptr[j]]).collect()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            pattern: Arc::clone(&self.pattern),
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `alpha * a + beta * b` on the union pattern. Cancelled entries stay
    /// in the pattern.
    pub fn add_scaled(a: &Self, b: &Self, alpha: f64, beta: f64) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::dims(format!("add_scaled of {}x{} and {}x{}", a.n(), a.n(), b.n(), b.n())));
        }
        if Arc::ptr_eq(&a.pattern, &b.pattern) || a.pattern == b.pattern {
            let values = a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + beta * y).collect();
            return Ok(Self { pattern: Arc::clone(&a.pattern), values });
        }
        let pattern = a.pattern.union(&b.pattern)?;
        let mut values = vec![0.0; pattern.nnz()];
        for (src, w) in [(a, alpha), (b, beta)] {
            for j in 0..pattern.n() {
                let target = pattern.col_range(j);
                let rows = &pattern.row_idx[target.clone()];
                let mut t = 0;
                for p in src.pattern.col_range(j) {
                    let r = src.pattern.row_idx[p];
                    while rows[t] != r {
                        t += 1;
                    }
                    values[target.start + t] += w * src.values[p];
                }
            }
        }
        Ok(Self { pattern: Arc::new(pattern), values })
    }

    /// Kronecker product with `b` varying fastest: entry
    /// `(i*m + k, j*m + l) = a(i, j) * b(k, l)`, `m = b.n()`.
    pub fn kron(a: &Self, b: &Self) -> Result<Self> {
        let (na, m) = (a.n(), b.n());
        let n = na
            .checked_mul(m)
            .ok_or_else(|| Error::Overflow(format!("kron dimension {na} x {m}")))?;
        // Full (both triangles) columns of b, rows ascending.
        let b_full = FullColumns::from_symmetric(b);
        let mut nnz = 0usize;
        for j in 0..na {
            let off_diag = a.pattern.col(j).len() - 1;
            nnz = off_diag
                .checked_mul(b_full.nnz())
                .and_then(|x| x.checked_add(b.nnz()))
                .and_then(|x| x.checked_add(nnz))
                .ok_or_else(|| Error::Overflow("kron entry count".into()))?;
        }

        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for j in 0..na {
            for l in 0..m {
                for pa in a.pattern.col_range(j) {
                    let i = a.pattern.row_idx[pa];
                    let av = a.values[pa];
                    if i == j {
                        for pb in b.pattern.col_range(l) {
                            row_idx.push(i * m + b.pattern.row_idx[pb]);
                            values.push(av * b.values[pb]);
                        }
                    } else {
                        let (rows, vals) = b_full.col(l);
                        for (&k, &bv) in rows.iter().zip(vals) {
                            row_idx.push(i * m + k);
                            values.push(av * bv);
                        }
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        let pattern = SparsityPattern::from_parts_unchecked(n, col_ptr, row_idx);
        Ok(Self { pattern: Arc::new(pattern), values })
    }

    /// `y = A x` using both triangles.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::dims(format!("matvec: {}x{} times length {}", self.n(), self.n(), x.len())));
        }
        let mut y = vec![0.0; self.n()];
        for j in 0..self.n() {
            let range = self.pattern.col_range(j);
            let xj = x[j];
            let mut acc = self.values[range.start] * xj;
            for p in range.start + 1..range.end {
                let i = self.pattern.row_idx[p];
                let v = self.values[p];
                y[i] += v * xj;
                acc += v * x[i];
            }
            y[j] += acc;
        }
        Ok(y)
    }

    /// Largest absolute row sum of the full matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n()];
        for j in 0..self.n() {
            for p in self.pattern.col_range(j) {
                let i = self.pattern.row_idx[p];
                rows[i] += self.values[p].abs();
                if i != j {
                    rows[j] += self.values[p].abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n();
        let mut d = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for p in self.pattern.col_range(j) {
                let i = self.pattern.row_idx[p];
                d.set(i, j, self.values[p]);
                d.set(j, i, self.values[p]);
            }
        }
        d
    }

    /// Lower triangle of `a * diag(d) * b` for symmetric `a` and `b` whose
    /// product is symmetric (e.g. `b = a` or both polynomials in one operator).
    pub fn triple_product(a: &Self, d: &[f64], b: &Self) -> Result<Self> {
        let n = a.n();
        if b.n() != n || d.len() != n {
            return Err(Error::dims("triple product operands differ in size"));
        }
        let af = FullColumns::from_symmetric(a);
        let bf = FullColumns::from_symmetric(b);
        let mut acc = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut rows: Vec<usize> = Vec::new();
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            rows.clear();
            let (bk, bv) = bf.col(j);
            for (&k, &bkj) in bk.iter().zip(bv) {
                let w = d[k] * bkj;
                let (ai, av) = af.col(k);
                for (&i, &aik) in ai.iter().zip(av) {
                    if i < j {
                        continue;
                    }
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        rows.push(i);
                    }
                    acc[i] += aik * w;
                }
            }
            if mark[j] != j {
                mark[j] = j;
                acc[j] = 0.0;
                rows.push(j);
            }
            rows.sort_unstable();
            for &i in &rows {
                row_idx.push(i);
                values.push(acc[i]);
            }
            col_ptr.push(row_idx.len());
        }
        let pattern = SparsityPattern::from_parts_unchecked(n, col_ptr, row_idx);
        Ok(Self { pattern: Arc::new(pattern), values })
    }
}

/// Both triangles of a symmetric matrix as plain CSC columns.
pub(crate) struct FullColumns {
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl FullColumns {
    pub(crate) fn from_symmetric(a: &SymmetricSparseMatrix) -> Self {
        let n = a.n();
        let pat = a.pattern();
        let mut count = vec![0usize; n];
        for j in 0..n {
            for &i in pat.col(j) {
                count[j] += 1;
                if i != j {
                    count[i] += 1;
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + count[j];
        }
        let mut next = col_ptr.clone();
        let total = col_ptr[n];
        let mut rows = vec![0usize; total];
        let mut vals = vec![0.0; total];
        // Visiting columns in ascending order emits the upper part of every
        // target column (rows < j) before its own lower part, so each column
        // ends up sorted.
        for j in 0..n {
            for p in pat.col_range(j) {
                let i = pat.row_idx()[p];
                let v = a.values()[p];
                if i != j {
                    rows[next[i]] = j;
                    vals[next[i]] = v;
                    next[i] += 1;
                }
            }
            for p in pat.col_range(j) {
                rows[next[j]] = pat.row_idx()[p];
                vals[next[j]] = a.values()[p];
                next[j] += 1;
            }
        }
        Self { col_ptr, rows, vals }
    }

    fn nnz(&self) -> usize {
        self.rows.len()
    }

    fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.rows[r.clone()], &self.vals[r])
    }
}

/// General sparse matrix in compressed-column form mapping the latent field
/// to observations (rows = observations, columns = latent dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl ProjectionMatrix {
    /// Duplicate `(row, col)` entries are rejected.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries = triplets.to_vec();
        for &(r, c, _) in &entries {
            if r >= nrows || c >= ncols {
                return Err(Error::dims(format!("entry ({r}, {c}) outside {nrows}x{ncols}")));
            }
        }
        entries.sort_by_key(|e| (e.1, e.0));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        for &(_, c, _) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            nrows,
            ncols,
            col_ptr,
            row_idx: entries.iter().map(|e| e.0).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        })
    }

    /// Selection matrix with one unit entry per observed latent index:
    /// row `r` picks `sites[r]`.
    pub fn selection(sites: &[usize], ncols: usize) -> Result<Self> {
        let triplets: Vec<_> = sites.iter().enumerate().map(|(r, &c)| (r, c, 1.0)).collect();
        Self::from_triplets(sites.len(), ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims(format!("{}x{} times length {}", self.nrows, self.ncols, x.len())));
        }
        let mut y = vec![0.0; self.nrows];
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[p]] += self.values[p] * x[c];
            }
        }
        Ok(y)
    }

    /// `Aᵀ y`.
    pub fn transpose_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::dims(format!("({}x{})ᵀ times length {}", self.nrows, self.ncols, y.len())));
        }
        Ok((0..self.ncols)
            .map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|p| self.values[p] * y[self.row_idx[p]])
                    .sum()
            })
            .collect())
    }

    /// `w · AᵀA` as a symmetric matrix of dimension `ncols`.
    pub fn normal_product(&self, w: f64) -> Result<SymmetricSparseMatrix> {
        if !(w > 0.0) {
            return Err(Error::invalid(format!("normal product weight must be positive, got {w}")));
        }
        // Row-wise view of A.
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            row_ptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut next = row_ptr.clone();
        let mut row_cols = vec![0usize; self.nnz()];
        let mut row_vals = vec![0.0; self.nnz()];
        for c in 0..self.ncols {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                row_cols[next[r]] = c;
                row_vals[next[r]] = self.values[p];
                next[r] += 1;
            }
        }

        let n = self.ncols;
        let mut acc = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut rows = Vec::new();
        let mut col_ptr = vec![0usize];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            rows.clear();
            mark[j] = j;
            acc[j] = 0.0;
            rows.push(j);
            // (AᵀA)(i, j) = Σ_r A(r, i) A(r, j)
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[p];
                let arj = self.values[p];
                for q in row_ptr[r]..row_ptr[r + 1] {
                    let i = row_cols[q];
                    if i < j {
                        continue;
                    }
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        rows.push(i);
                    }
                    acc[i] += row_vals[q] * arj;
                }
            }
            rows.sort_unstable();
            for &i in &rows {
                row_idx.push(i);
                values.push(w * acc[i]);
            }
            col_ptr.push(row_idx.len());
        }
        let pattern = SparsityPattern::from_parts_unchecked(n, col_ptr, row_idx);
        SymmetricSparseMatrix::new(Arc::new(pattern), values)
    }
}

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::dims(format!("{} values for a {nrows}x{ncols} matrix", data.len())));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for c in columns {
            if c.len() != nrows {
                return Err(Error::dims(format!("column of length {} in a matrix with {nrows} rows", c.len())));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { nrows, ncols: columns.len(), data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.nrows.max(1)).take(self.ncols)
    }
}
