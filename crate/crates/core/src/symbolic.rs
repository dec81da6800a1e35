//! Elimination tree and symbolic Cholesky analysis.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ordering::{order, OrderingScheme, Permutation};
use crate::sparse::{SparsityPattern, SymmetricSparseMatrix};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    parent: Vec<usize>,
    postorder: Vec<usize>,
}

impl EliminationTree {
    /// Liu's algorithm with path compression. `lower_rows[k]` lists the
    /// columns `j < k` of the strictly lower row `k`.
    fn from_lower_rows(lower_rows: &[Vec<usize>]) -> Self {
        let n = lower_rows.len();
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for (k, row) in lower_rows.iter().enumerate() {
            for &j in row {
                let mut i = j;
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }
        let postorder = postorder(&parent);
        Self { parent, postorder }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        (self.parent[j] != NONE).then_some(self.parent[j])
    }

    pub(crate) fn parents(&self) -> &[usize] {
        &self.parent
    }

    /// Children visited before parents; siblings in ascending order.
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&j| self.parent[j] == NONE)
    }

    /// Children of every node, ascending.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (j, &p) in self.parent.iter().enumerate() {
            if p != NONE {
                children[p].push(j);
            }
        }
        children
    }
}

fn postorder(parent: &[usize]) -> Vec<usize> {
    let n = parent.len();
    let mut head = vec![NONE; n];
    let mut next = vec![NONE; n];
    // Insert in reverse so that each child list is ascending.
    for j in (0..n).rev() {
        if parent[j] != NONE {
            next[j] = head[parent[j]];
            head[parent[j]] = j;
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack = Vec::new();
    for root in (0..n).filter(|&j| parent[j] == NONE) {
        stack.push(root);
        while let Some(&top) = stack.last() {
            let child = head[top];
            if child == NONE {
                stack.pop();
                post.push(top);
            } else {
                head[top] = next[child];
                stack.push(child);
            }
        }
    }
    post
}

/// Everything about a factorization that depends only on the pattern.
#[derive(Debug, Clone)]
pub struct SymbolicFactor {
    n: usize,
    perm: Permutation,
    etree: EliminationTree,
    l_pattern: SparsityPattern,
    /// Pattern of the analysed matrix, for compatibility checks.
    source: Arc<SparsityPattern>,
    /// Storage position in L of every stored entry of Q.
    q_to_l: Vec<usize>,
    /// Supernode `s` spans columns `snode_ptr[s]..snode_ptr[s + 1]`; each of
    /// its columns holds the rows of the first one from its own index on.
    snode_ptr: Vec<usize>,
    col_snode: Vec<usize>,
    /// For each supernode, the earlier supernodes with a row inside its
    /// column range, ascending.
    upd_ptr: Vec<usize>,
    upd: Vec<usize>,
    /// Entries of Q landing in each column of L: `(offset within column,
    /// index into Q values)`.
    scatter_ptr: Vec<usize>,
    scatter: Vec<(usize, usize)>,
}

impl SymbolicFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn etree(&self) -> &EliminationTree {
        &self.etree
    }

    /// Pattern of L in factor ordering, diagonal included.
    pub fn l_pattern(&self) -> &SparsityPattern {
        &self.l_pattern
    }

    pub fn nnz_l(&self) -> usize {
        self.l_pattern.nnz()
    }

    pub fn col_counts(&self) -> Vec<usize> {
        (0..self.n).map(|j| self.l_pattern.col(j).len()).collect()
    }

    pub fn source_pattern(&self) -> &Arc<SparsityPattern> {
        &self.source
    }

    pub(crate) fn q_to_l(&self) -> &[usize] {
        &self.q_to_l
    }

    pub fn n_supernodes(&self) -> usize {
        self.snode_ptr.len() - 1
    }

    /// Columns of supernode `s`.
    pub fn supernode(&self, s: usize) -> std::ops::Range<usize> {
        self.snode_ptr[s]..self.snode_ptr[s + 1]
    }

    /// Supernodes whose columns update supernode `s`.
    pub(crate) fn updates(&self, s: usize) -> &[usize] {
        &self.upd[self.upd_ptr[s]..self.upd_ptr[s + 1]]
    }

    /// Parent of each supernode in the supernodal elimination tree.
    pub(crate) fn snode_parents(&self) -> Vec<usize> {
        let parent = self.etree.parents();
        (0..self.n_supernodes())
            .map(|s| match parent[self.snode_ptr[s + 1] - 1] {
                NONE => NONE,
                p => self.col_snode[p],
            })
            .collect()
    }

    pub(crate) fn scatter(&self, j: usize) -> &[(usize, usize)] {
        &self.scatter[self.scatter_ptr[j]..self.scatter_ptr[j + 1]]
    }

    /// Floating point operation estimate for one numeric factorization.
    pub fn flops(&self) -> f64 {
        (0..self.n)
            .map(|j| {
                let c = self.l_pattern.col(j).len() as f64;
                c * c
            })
            .sum()
    }

    pub fn compatible_with(&self, q: &SymmetricSparseMatrix) -> bool {
        Arc::ptr_eq(&self.source, q.shared_pattern()) || *self.source == *q.pattern()
    }
}

/// Symbolic analysis for `P Q Pᵀ` with the given fill-reducing permutation.
///
/// For permutations coming from `amd` or `rcm` the result is further
/// postordered along the elimination tree, which leaves the fill unchanged
/// and makes every subtree a contiguous column range. A literal identity
/// permutation is kept as is.
pub fn analyze(q: &SymmetricSparseMatrix, perm: &Permutation) -> Result<SymbolicFactor> {
    analyze_with(q, perm, !perm.is_identity())
}

pub fn analyze_with_scheme(q: &SymmetricSparseMatrix, scheme: OrderingScheme) -> Result<SymbolicFactor> {
    let perm = order(q, scheme);
    analyze_with(q, &perm, scheme != OrderingScheme::Identity)
}

fn analyze_with(q: &SymmetricSparseMatrix, perm: &Permutation, postorder: bool) -> Result<SymbolicFactor> {
    let n = q.n();
    if perm.len() != n {
        return Err(Error::dims(format!("permutation of length {} for a matrix of size {n}", perm.len())));
    }
    let mut perm = perm.clone();
    let mut rows = permuted_lower_rows(q.pattern(), &perm);
    let mut etree = EliminationTree::from_lower_rows(&rows);
    if postorder && etree.postorder().iter().enumerate().any(|(i, &p)| i != p) {
        let post = Permutation::from_new_to_old(etree.postorder().to_vec())?;
        perm = perm.then(&post);
        rows = permuted_lower_rows(q.pattern(), &perm);
        etree = EliminationTree::from_lower_rows(&rows);
    }

    // Row patterns of L by elimination-tree reachability.
    let parent = etree.parents();
    let mut mark = vec![NONE; n];
    let mut row_ptr = vec![0usize; n + 1];
    let mut row_cols: Vec<usize> = Vec::new();
    let mut col_counts = vec![1usize; n];
    for k in 0..n {
        mark[k] = k;
        for &j in &rows[k] {
            let mut i = j;
            while mark[i] != k {
                mark[i] = k;
                row_cols.push(i);
                col_counts[i] += 1;
                i = parent[i];
                debug_assert!(i != NONE && i <= k);
            }
        }
        row_ptr[k + 1] = row_cols.len();
    }

    let mut col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        col_ptr[j + 1] = col_ptr[j] + col_counts[j];
    }
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut next = col_ptr.clone();
    for j in 0..n {
        row_idx[next[j]] = j;
        next[j] += 1;
    }
    for i in 0..n {
        for &k in &row_cols[row_ptr[i]..row_ptr[i + 1]] {
            row_idx[next[k]] = i;
            next[k] += 1;
        }
    }
    drop(row_cols);
    let l_pattern = SparsityPattern::from_parts_unchecked(n, col_ptr, row_idx);
    let (snode_ptr, col_snode, upd_ptr, upd) = supernodes(&l_pattern, parent);

    let inv = perm.old_to_new();
    let qp = q.pattern();
    let mut q_to_l = vec![0usize; qp.nnz()];
    let mut per_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for j in 0..n {
        for p in qp.col_range(j) {
            let i = qp.row_idx()[p];
            let (a, b) = (inv[i], inv[j]);
            let (r, c) = if a >= b { (a, b) } else { (b, a) };
            let pos = l_pattern.find(r, c).expect("pattern of L contains pattern of PQPᵀ");
            q_to_l[p] = pos;
            per_col[c].push((pos - l_pattern.col_ptr()[c], p));
        }
    }
    let mut scatter_ptr = vec![0usize; n + 1];
    let mut scatter = Vec::with_capacity(qp.nnz());
    for (c, mut entries) in per_col.into_iter().enumerate() {
        entries.sort_unstable();
        scatter.extend(entries);
        scatter_ptr[c + 1] = scatter.len();
    }

    Ok(SymbolicFactor {
        n,
        perm,
        etree,
        l_pattern,
        source: Arc::clone(q.shared_pattern()),
        q_to_l,
        snode_ptr,
        col_snode,
        upd_ptr,
        upd,
        scatter_ptr,
        scatter,
    })
}

/// Fundamental supernodes (no explicit zeros are added) and, for each, the
/// list of earlier supernodes that update it.
fn supernodes(l: &SparsityPattern, parent: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = l.n();
    let mut snode_ptr = vec![0];
    for j in 1..n {
        let chained = parent[j - 1] == j && l.col(j - 1).len() == l.col(j).len() + 1;
        if !chained {
            snode_ptr.push(j);
        }
    }
    if n > 0 {
        snode_ptr.push(n);
    }
    let ns = snode_ptr.len() - 1;
    let mut col_snode = vec![0; n];
    for s in 0..ns {
        col_snode[snode_ptr[s]..snode_ptr[s + 1]].fill(s);
    }

    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for k in 0..ns {
        let (f, w) = (snode_ptr[k], snode_ptr[k + 1] - snode_ptr[k]);
        let mut last = NONE;
        for &r in &l.col(f)[w..] {
            let t = col_snode[r];
            if t != last {
                targets[t].push(k);
                last = t;
            }
        }
    }
    let mut upd_ptr = vec![0; ns + 1];
    for s in 0..ns {
        upd_ptr[s + 1] = upd_ptr[s] + targets[s].len();
    }
    let upd = targets.concat();
    (snode_ptr, col_snode, upd_ptr, upd)
}

/// Strictly lower rows of `P Q Pᵀ`: for each new row, the new columns `< row`.
fn permuted_lower_rows(pattern: &SparsityPattern, perm: &Permutation) -> Vec<Vec<usize>> {
    let inv = perm.old_to_new();
    let mut rows = vec![Vec::new(); pattern.n()];
    for j in 0..pattern.n() {
        for &i in &pattern.col(j)[1..] {
            let (a, b) = (inv[i], inv[j]);
            if a > b {
                rows[a].push(b);
            } else {
                rows[b].push(a);
            }
        }
    }
    rows
}
