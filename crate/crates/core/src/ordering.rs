//! Fill-reducing orderings.
//!
//! All schemes are deterministic; ties are broken by the smallest original
//! index. Under `amd` and `rcm`, rows whose degree exceeds
//! [`dense_threshold`] are pulled out, the scheme runs on the remaining sparse
//! block, and the dense rows are appended last in ascending index order.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sparse::SymmetricSparseMatrix;

/// Bijection between new (factor) indices and original indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `inverse[old] = new`
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect(), inverse: (0..n).collect() }
    }

    /// `perm[new] = old`.
    pub fn from_new_to_old(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::invalid(format!("not a permutation: entry {old} at position {new}")));
            }
            inverse[old] = new;
        }
        Ok(Self { perm, inverse })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn new_to_old(&self) -> &[usize] {
        &self.perm
    }

    pub fn old_to_new(&self) -> &[usize] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Apply `self` first, then relabel its output positions by `then`:
    /// the result maps `new' -> old` with `new' = then.inverse[new]`.
    pub fn then(&self, then: &Permutation) -> Permutation {
        let perm: Vec<usize> = then.perm.iter().map(|&mid| self.perm[mid]).collect();
        Permutation::from_new_to_old(perm).expect("composition of permutations")
    }

    /// `out[new] = x[perm[new]]`
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&old| x[old]).collect()
    }

    /// `out[perm[new]] = x[new]`
    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OrderingScheme {
    #[default]
    Amd,
    Identity,
    Rcm,
}

impl fmt::Display for OrderingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingScheme::Amd => "amd",
            OrderingScheme::Identity => "identity",
            OrderingScheme::Rcm => "rcm",
        })
    }
}

impl FromStr for OrderingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amd" => Ok(OrderingScheme::Amd),
            "identity" => Ok(OrderingScheme::Identity),
            "rcm" => Ok(OrderingScheme::Rcm),
            other => Err(Error::invalid(format!("unknown reordering scheme '{other}'"))),
        }
    }
}

/// Rows with more off-diagonal entries than this are treated as dense.
pub fn dense_threshold(n: usize) -> usize {
    ((10.0 * (n as f64).sqrt()) as usize).max(16)
}

pub fn order(q: &SymmetricSparseMatrix, scheme: OrderingScheme) -> Permutation {
    let n = q.n();
    if scheme == OrderingScheme::Identity {
        return Permutation::identity(n);
    }
    let adj = q.pattern().adjacency();
    let limit = dense_threshold(n);
    let dense: Vec<usize> = (0..n).filter(|&i| adj[i].len() > limit).collect();

    // Induced subgraph on the sparse rows, relabelled 0..m.
    let mut local = vec![usize::MAX; n];
    let mut global = Vec::with_capacity(n - dense.len());
    for i in 0..n {
        if adj[i].len() <= limit {
            local[i] = global.len();
            global.push(i);
        }
    }
    let sub: Vec<Vec<usize>> = global
        .iter()
        .map(|&i| adj[i].iter().filter_map(|&j| (local[j] != usize::MAX).then_some(local[j])).collect())
        .collect();

    let sub_order = match scheme {
        OrderingScheme::Amd => approximate_minimum_degree(&sub),
        OrderingScheme::Rcm => reverse_cuthill_mckee(&sub),
        OrderingScheme::Identity => unreachable!(),
    };
    let mut perm: Vec<usize> = sub_order.into_iter().map(|l| global[l]).collect();
    perm.extend(dense);
    Permutation::from_new_to_old(perm).expect("ordering produced a permutation")
}

/// Approximate minimum degree on a quotient graph with element absorption.
/// `adj` must be symmetric without self loops. Returns `order[new] = old`.
pub fn approximate_minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut var_adj: Vec<Vec<usize>> = adj.to_vec();
    let mut var_elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Elements are named after the variable whose elimination created them.
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_alive = vec![false; n];
    let mut eliminated = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();

    let mut in_pivot = vec![usize::MAX; n];
    let mut w_stamp = vec![usize::MAX; n];
    let mut w = vec![0usize; n];
    let mut order = Vec::with_capacity(n);

    for step in 0..n {
        let (_, p) = queue.pop_first().expect("queue holds every uneliminated variable");
        eliminated[p] = true;
        order.push(p);

        // Lp: variables reachable from p through variables or elements.
        let mut lp = Vec::new();
        in_pivot[p] = step;
        for &j in &var_adj[p] {
            if in_pivot[j] != step {
                in_pivot[j] = step;
                lp.push(j);
            }
        }
        for e in std::mem::take(&mut var_elems[p]) {
            if !elem_alive[e] {
                continue;
            }
            for &j in &elem_vars[e] {
                if !eliminated[j] && in_pivot[j] != step {
                    in_pivot[j] = step;
                    lp.push(j);
                }
            }
            elem_alive[e] = false;
            elem_vars[e] = Vec::new();
        }
        var_adj[p] = Vec::new();
        lp.sort_unstable();

        elem_alive[p] = true;
        for &i in &lp {
            var_elems[i].retain(|&e| elem_alive[e]);
            var_elems[i].push(p);
            // Edges inside Lp are now represented by element p.
            var_adj[i].retain(|&j| in_pivot[j] != step);
        }

        // w(e) = |Le \ Lp| for every element touching Lp.
        for &i in &lp {
            for &e in &var_elems[i] {
                if e == p {
                    continue;
                }
                if w_stamp[e] != step {
                    w_stamp[e] = step;
                    w[e] = elem_vars[e].len();
                }
                w[e] -= 1;
            }
        }

        let remaining = n - step - 1;
        for &i in &lp {
            let mut d = var_adj[i].len() + lp.len() - 1;
            for &e in &var_elems[i] {
                if e == p {
                    continue;
                }
                if w[e] == 0 {
                    // Le ⊆ Lp: absorbed into the new element.
                    elem_alive[e] = false;
                } else {
                    d += w[e];
                }
            }
            var_elems[i].retain(|&e| elem_alive[e]);
            let d = d.min(remaining.saturating_sub(1));
            if d != degree[i] {
                queue.remove(&(degree[i], i));
                degree[i] = d;
                queue.insert((d, i));
            }
        }
        for &i in &lp {
            in_pivot[i] = usize::MAX;
        }
        in_pivot[p] = usize::MAX;
        elem_vars[p] = lp;
    }
    order
}

/// Reverse Cuthill–McKee, one pseudo-peripheral start per component.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (adj[i].len(), i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adj, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (adj[u].len(), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(adj, root);
    loop {
        let candidate = *last
            .iter()
            .min_by_key(|&&u| (adj[u].len(), u))
            .expect("last level is nonempty");
        let (cand_ecc, cand_last) = bfs_levels(adj, candidate);
        if cand_ecc <= ecc {
            return root;
        }
        root = candidate;
        ecc = cand_ecc;
        last = cand_last;
    }
}

/// Eccentricity of `root` and the nodes on its last BFS level.
fn bfs_levels(adj: &[Vec<usize>], root: usize) -> (usize, Vec<usize>) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &adj[v] {
                if level[u] == usize::MAX {
                    level[u] = depth + 1;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}
