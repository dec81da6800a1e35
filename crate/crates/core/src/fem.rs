//! Piecewise-linear finite element matrices on interval and triangle meshes.
//!
//! `c0` is the lumped (diagonal) mass matrix, `g1` the stiffness matrix with
//! free boundaries, and `g_m = g_{m-1} c0⁻¹ g1` for higher orders.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SymmetricSparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a 1D mesh needs at least two nodes"));
        }
        if let Some(i) = (1..nodes.len()).find(|&i| !(nodes[i] > nodes[i - 1])) {
            return Err(Error::invalid(format!("mesh nodes not strictly increasing at index {i}")));
        }
        Ok(Self { nodes })
    }

    /// Nodes `1, 2, …, n`.
    pub fn regular(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|t| t as f64).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh2D {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl TriMesh2D {
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::invalid(format!("triangle {t} references a missing vertex")));
            }
        }
        let mesh = Self { vertices, triangles };
        let (lo, hi) = mesh.bbox();
        let diag2 = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
        for t in 0..mesh.triangles.len() {
            if mesh.area(t) < 1e-14 * diag2 {
                return Err(Error::invalid(format!("triangle {t} is degenerate")));
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Unsigned area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Vertices farther than `margin` from every side of the bounding box.
    /// For the rectangular meshes of [`structured_mesh`] this is the distance
    /// to the mesh boundary.
    pub fn interior_nodes(&self, margin: f64) -> Vec<usize> {
        let (lo, hi) = self.bbox();
        (0..self.vertices.len())
            .filter(|&i| {
                let v = self.vertices[i];
                (0..2).all(|d| v[d] - lo[d] > margin && hi[d] - v[d] > margin)
            })
            .collect()
    }
}

/// Regular grid on `[x0, x1] × [y0, y1]` with `nx × ny` vertices (x fastest),
/// each cell split along its lower-left to upper-right diagonal.
pub fn structured_mesh(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<TriMesh2D> {
    if nx < 2 || ny < 2 {
        return Err(Error::invalid("structured mesh needs at least 2 vertices per side"));
    }
    if !(x_range.1 > x_range.0) || !(y_range.1 > y_range.0) {
        return Err(Error::invalid("structured mesh ranges must be increasing"));
    }
    let coord = |(a, b): (f64, f64), k: usize, m: usize| a + (b - a) * k as f64 / (m - 1) as f64;
    let mut vertices = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            vertices.push([coord(x_range, ix, nx), coord(y_range, iy, ny)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let v00 = iy * nx + ix;
            let (v10, v01, v11) = (v00 + 1, v00 + nx, v00 + nx + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriMesh2D::new(vertices, triangles)
}

#[derive(Debug, Clone)]
pub struct FemMatrices {
    pub c0: SymmetricSparseMatrix,
    /// `g[m - 1]` holds `g_m`.
    pub g: Vec<SymmetricSparseMatrix>,
}

impl FemMatrices {
    pub fn order(&self) -> usize {
        self.g.len()
    }

    /// `g_m` for `m ≥ 1`.
    pub fn g(&self, m: usize) -> Result<&SymmetricSparseMatrix> {
        m.checked_sub(1)
            .and_then(|i| self.g.get(i))
            .ok_or_else(|| Error::invalid(format!("g{m} not assembled (order {})", self.order())))
    }

    pub fn n(&self) -> usize {
        self.c0.n()
    }

    fn from_c0_g1(c0: SymmetricSparseMatrix, g1: SymmetricSparseMatrix, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::invalid("FEM order must be at least 1"));
        }
        let c0_inv: Vec<f64> = c0.diag().iter().map(|d| 1.0 / d).collect();
        let mut g = vec![g1];
        for _ in 1..order {
            let next = SymmetricSparseMatrix::triple_product(g.last().unwrap(), &c0_inv, &g[0])?;
            g.push(next);
        }
        Ok(Self { c0, g })
    }
}

pub fn fem_1d(mesh: &Mesh1D, order: usize) -> Result<FemMatrices> {
    let x = mesh.nodes();
    let n = x.len();
    let mut c0 = vec![0.0; n];
    let mut triplets = Vec::with_capacity(3 * n);
    for e in 0..n - 1 {
        let h = x[e + 1] - x[e];
        c0[e] += h / 2.0;
        c0[e + 1] += h / 2.0;
        triplets.push((e, e, 1.0 / h));
        triplets.push((e + 1, e + 1, 1.0 / h));
        triplets.push((e + 1, e, -1.0 / h));
    }
    let g1 = SymmetricSparseMatrix::from_triplets(n, &triplets)?;
    FemMatrices::from_c0_g1(SymmetricSparseMatrix::from_diagonal(&c0), g1, order)
}

pub fn fem_2d(mesh: &TriMesh2D, order: usize) -> Result<FemMatrices> {
    let n = mesh.n_vertices();
    let mut c0 = vec![0.0; n];
    let mut triplets = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        let p = tri.map(|v| mesh.vertices()[v]);
        // Edge opposite each vertex; ∇φ_a · ∇φ_b |T| = e_a · e_b / (4 |T|).
        let edge = |a: usize| {
            let (u, v) = (p[(a + 1) % 3], p[(a + 2) % 3]);
            [v[0] - u[0], v[1] - u[1]]
        };
        let e = [edge(0), edge(1), edge(2)];
        for a in 0..3 {
            c0[tri[a]] += area / 3.0;
            for b in 0..=a {
                let k = (e[a][0] * e[b][0] + e[a][1] * e[b][1]) / (4.0 * area);
                triplets.push((tri[a], tri[b], k));
            }
        }
    }
    let g1 = SymmetricSparseMatrix::from_triplets(n, &triplets)?;
    FemMatrices::from_c0_g1(SymmetricSparseMatrix::from_diagonal(&c0), g1, order)
}

/// Boundary matrix of the temporal model: `0.5` at the first and last node.
#[derive(Debug, Clone)]
pub struct TemporalBoundary {
    matrix: SymmetricSparseMatrix,
}

impl TemporalBoundary {
    pub fn new(n_times: usize) -> Result<Self> {
        if n_times < 2 {
            return Err(Error::invalid("temporal boundary needs at least two time points"));
        }
        let matrix = SymmetricSparseMatrix::from_triplets(n_times, &[(0, 0, 0.5), (n_times - 1, n_times - 1, 0.5)])?;
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &SymmetricSparseMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

/// Contents of a mesh file.
#[derive(Debug, Clone, PartialEq)]
pub enum Mesh {
    Interval(Mesh1D),
    Triangles(TriMesh2D),
}

/// Reads the plain-text mesh format: a `V T` header, `V` vertex lines
/// (`x y`, or a single coordinate when `T = 0`) and `T` lines of 0-based
/// vertex triples.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty mesh file".into() })?;
    let counts = parse_fields::<usize>(hline, header)?;
    let [nv, nt] = counts[..] else {
        return Err(Error::Parse { line: hline, msg: "header must be 'V T'".into() });
    };
    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse { line: hline, msg: "missing vertex lines".into() })?;
        coords.push((ln, parse_fields::<f64>(ln, l)?));
    }
    if nt == 0 {
        let nodes = coords
            .into_iter()
            .map(|(ln, c)| match c[..] {
                [t] => Ok(t),
                _ => Err(Error::Parse { line: ln, msg: "1D vertex lines hold one coordinate".into() }),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Mesh::Interval(Mesh1D::new(nodes)?));
    }
    let vertices = coords
        .into_iter()
        .map(|(ln, c)| match c[..] {
            [x, y] => Ok([x, y]),
            _ => Err(Error::Parse { line: ln, msg: "2D vertex lines hold two coordinates".into() }),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or(Error::Parse { line: hline, msg: "missing triangle lines".into() })?;
        match parse_fields::<usize>(ln, l)?[..] {
            [a, b, c] => triangles.push([a, b, c]),
            _ => return Err(Error::Parse { line: ln, msg: "triangle lines hold three indices".into() }),
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse { line: ln, msg: "trailing content after triangles".into() });
    }
    Ok(Mesh::Triangles(TriMesh2D::new(vertices, triangles)?))
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    match mesh {
        Mesh::Interval(m) => {
            let _ = writeln!(out, "{} 0", m.len());
            for t in m.nodes() {
                let _ = writeln!(out, "{t:?}");
            }
        }
        Mesh::Triangles(m) => {
            let _ = writeln!(out, "{} {}", m.n_vertices(), m.triangles().len());
            for [x, y] in m.vertices() {
                let _ = writeln!(out, "{x:?} {y:?}");
            }
            for [a, b, c] in m.triangles() {
                let _ = writeln!(out, "{a} {b} {c}");
            }
        }
    }
    out
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|f| f.parse::<T>().map_err(|_| Error::Parse { line, msg: format!("bad field '{f}'") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_spaced_temporal_mass() {
        let f = fem_1d(&Mesh1D::regular(8).unwrap(), 2).unwrap();
        assert_eq!(f.c0.diag(), vec![0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5]);
        assert!((f.c0.get(0, 0) - 0.5 * f.c0.get(1, 1)).abs() < 1e-3);
    }

    #[test]
    fn single_interval_stiffness() {
        let h = 0.25;
        let f = fem_1d(&Mesh1D::new(vec![1.0, 1.0 + h]).unwrap(), 1).unwrap();
        assert_eq!(f.g[0].get(0, 0), 1.0 / h);
        assert_eq!(f.g[0].get(1, 0), -1.0 / h);
        assert_eq!(f.g[0].get(1, 1), 1.0 / h);
    }

    #[test]
    fn non_increasing_nodes_rejected() {
        assert!(Mesh1D::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Mesh1D::new(vec![0.0]).is_err());
    }

    #[test]
    fn right_triangle_by_hand() {
        let mesh = TriMesh2D::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let f = fem_2d(&mesh, 1).unwrap();
        for d in f.c0.diag() {
            assert!((d - 1.0 / 6.0).abs() < 1e-15);
        }
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((f.g[0].get(i, j) - expect[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn unit_square_stiffness_rows_sum_to_zero() {
        let f = fem_2d(&structured_mesh((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap(), 1).unwrap();
        let ones = vec![1.0; 4];
        for v in f.g[0].matvec(&ones).unwrap() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn structured_mesh_counts() {
        let m = structured_mesh((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        assert_eq!((m.n_vertices(), m.triangles().len()), (4, 2));
        let m = structured_mesh((0.0, 2.0), (0.0, 1.0), 3, 2).unwrap();
        assert_eq!((m.n_vertices(), m.triangles().len()), (6, 4));
        assert!(structured_mesh((0.0, 1.0), (0.0, 1.0), 1, 3).is_err());
        assert!(structured_mesh((1.0, 0.0), (0.0, 1.0), 3, 3).is_err());
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        assert!(TriMesh2D::new(v.clone(), vec![[0, 1, 2]]).is_err());
        assert!(TriMesh2D::new(v, vec![[0, 1, 7]]).is_err());
    }

    #[test]
    fn missing_order_reported() {
        let f = fem_1d(&Mesh1D::regular(4).unwrap(), 2).unwrap();
        assert!(f.g(2).is_ok());
        assert!(f.g(3).is_err());
        assert!(f.g(0).is_err());
        assert!(fem_1d(&Mesh1D::regular(4).unwrap(), 0).is_err());
    }

    #[test]
    fn temporal_boundary_entries() {
        let m1 = TemporalBoundary::new(8).unwrap();
        let nonzero: Vec<_> = m1.matrix().values().iter().filter(|&&v| v != 0.0).collect();
        assert_eq!(nonzero, vec![&0.5, &0.5]);
        assert_eq!(m1.matrix().get(0, 0), 0.5);
        assert_eq!(m1.matrix().get(7, 7), 0.5);
        assert!(TemporalBoundary::new(1).is_err());
    }

    #[test]
    fn mesh_file_round_trip() {
        let m = Mesh::Triangles(structured_mesh((0.0, 1.0), (0.0, 0.5), 3, 2).unwrap());
        assert_eq!(parse_mesh(&format_mesh(&m)).unwrap(), m);
        let t = Mesh::Interval(Mesh1D::regular(5).unwrap());
        assert_eq!(parse_mesh(&format_mesh(&t)).unwrap(), t);
        assert!(parse_mesh("3 1\n0 0\n1 0\n").is_err());
        assert!(parse_mesh("2 0\n0 1\n2 3\n").is_err());
    }
}
