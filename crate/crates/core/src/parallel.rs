//! Elimination-tree task scheduling shared by the factorization and the
//! selected inversion.
//!
//! The tree is the supernodal elimination tree. Work is split into disjoint
//! subtrees, which run concurrently, and the remaining top of the tree,
//! whose supernodes are processed one at a time with their rows divided
//! among workers. Every entry is always accumulated in the same order, so
//! results do not depend on the number of workers.

use std::collections::BinaryHeap;
use std::marker::PhantomData;
use std::ops::Range;

use crate::symbolic::{SymbolicFactor, NONE};

/// Rows of a top-of-tree supernode are split among workers only when each
/// worker gets at least this many.
pub(crate) const MIN_ROWS_PER_CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub(crate) struct Schedule {
    /// Independent subtrees, each listing its nodes in ascending order.
    pub subtrees: Vec<Vec<usize>>,
    /// Remaining nodes, ascending. Every ancestor of a subtree root is here.
    pub top: Vec<usize>,
    pub workers: usize,
}

impl Schedule {
    /// `parent[j] > j` for non-roots; `own_work[j]` is the cost of node `j`
    /// alone.
    pub fn new(parent: &[usize], own_work: &[f64], workers: usize) -> Self {
        let n = parent.len();
        let workers = workers.max(1);
        if workers == 1 || n == 0 {
            return Self { subtrees: Vec::new(), top: (0..n).collect(), workers };
        }
        let mut work = own_work.to_vec();
        let mut children = vec![Vec::new(); n];
        for j in 0..n {
            if parent[j] != NONE {
                let w = work[j];
                work[parent[j]] += w;
                children[parent[j]].push(j);
            }
        }
        let roots = || (0..n).filter(|&j| parent[j] == NONE);
        let total: f64 = roots().map(|r| work[r]).sum();
        let limit = total / (4 * workers) as f64;

        #[derive(PartialEq)]
        struct Task(f64, usize);
        impl Eq for Task {}
        impl PartialOrd for Task {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Task {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
            }
        }

        let mut heap: BinaryHeap<Task> = roots().map(|r| Task(work[r], r)).collect();
        let mut top = Vec::new();
        while let Some(Task(w, root)) = heap.peek().map(|t| Task(t.0, t.1)) {
            if w <= limit {
                break;
            }
            heap.pop();
            top.push(root);
            for &c in &children[root] {
                heap.push(Task(work[c], c));
            }
        }
        top.sort_unstable();

        let mut roots: Vec<usize> = heap.into_iter().map(|t| t.1).collect();
        // Largest first, so that work stealing starts on the long tasks.
        roots.sort_by(|&a, &b| work[b].total_cmp(&work[a]).then(a.cmp(&b)));
        let subtrees = roots
            .into_iter()
            .map(|r| {
                let mut cols = vec![r];
                let mut i = 0;
                while i < cols.len() {
                    cols.extend_from_slice(&children[cols[i]]);
                    i += 1;
                }
                cols.sort_unstable();
                cols
            })
            .collect();
        Self { subtrees, top, workers }
    }

    /// Number of row chunks for a top supernode with `rows` rows.
    pub fn chunks_for(&self, rows: usize) -> usize {
        (rows / MIN_ROWS_PER_CHUNK).clamp(1, self.workers)
    }
}

/// Schedule over the supernodes of `sym`, weighted by squared column counts.
pub(crate) fn supernode_schedule(sym: &SymbolicFactor, workers: usize) -> Schedule {
    let work: Vec<f64> = (0..sym.n_supernodes())
        .map(|s| {
            sym.supernode(s)
                .map(|j| {
                    let c = sym.l_pattern().col(j).len() as f64;
                    c * c
                })
                .sum()
        })
        .collect();
    Schedule::new(&sym.snode_parents(), &work, workers)
}

/// Runs `f` on a dedicated pool with `workers` threads, or inline for one.
pub(crate) fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Offsets `[lo, hi)` of `chunks` near-equal pieces of `len` items.
pub(crate) fn chunk_bounds(len: usize, chunks: usize) -> Vec<Range<usize>> {
    let chunks = chunks.clamp(1, len.max(1));
    (0..chunks)
        .map(|c| (c * len / chunks)..((c + 1) * len / chunks))
        .collect()
}

/// A value array that concurrent tasks address column by column.
///
/// Callers guarantee that a range handed out mutably is not accessed through
/// any other slice while the borrow lives. The elimination tree provides
/// this: a task writes only its own columns and reads columns that no running
/// task writes.
pub(crate) struct SharedColumns<'a> {
    ptr: *mut f64,
    len: usize,
    _marker: PhantomData<&'a mut [f64]>,
}

unsafe impl Send for SharedColumns<'_> {}
unsafe impl Sync for SharedColumns<'_> {}

impl<'a> SharedColumns<'a> {
    pub fn new(values: &'a mut [f64]) -> Self {
        Self { ptr: values.as_mut_ptr(), len: values.len(), _marker: PhantomData }
    }

    /// # Safety
    /// No live mutable slice may overlap `range`.
    pub unsafe fn get(&self, range: Range<usize>) -> &[f64] {
        assert!(range.start <= range.end && range.end <= self.len);
        std::slice::from_raw_parts(self.ptr.add(range.start), range.end - range.start)
    }

    /// # Safety
    /// No other live slice may overlap `range`.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn get_mut(&self, range: Range<usize>) -> &mut [f64] {
        assert!(range.start <= range.end && range.end <= self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(range.start), range.end - range.start)
    }
}

/// Column-major trapezoid of a supernode starting at column `f`: column
/// `c` stores rows `c..m` (positions in the supernode's row list).
pub(crate) struct Panel<'a> {
    pub shared: &'a SharedColumns<'a>,
    pub cp: &'a [usize],
    pub f: usize,
}

impl Panel<'_> {
    /// Positions `lo..hi` of column `c`, `c <= lo`.
    ///
    /// # Safety
    /// No mutable slice overlapping the range may be live.
    pub unsafe fn rows(&self, c: usize, lo: usize, hi: usize) -> &[f64] {
        let base = self.cp[self.f + c] - c;
        self.shared.get(base + lo..base + hi)
    }

    /// # Safety
    /// No other slice overlapping the range may be live.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn rows_mut(&self, c: usize, lo: usize, hi: usize) -> &mut [f64] {
        let base = self.cp[self.f + c] - c;
        self.shared.get_mut(base + lo..base + hi)
    }
}
