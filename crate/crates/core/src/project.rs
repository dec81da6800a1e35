//! Projection of mesh fields onto regular rasters by barycentric
//! interpolation.

use crate::error::{Error, Result};
use crate::fem::TriMesh2D;

/// Field values on a `rows × cols` raster over a bounding box. Row `r`
/// holds `y = y0 + r·dy`, column `c` holds `x = x0 + c·dx`; points outside
/// the mesh are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub time: usize,
    pub rows: usize,
    pub cols: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major.
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    /// CSV with an `x` coordinate header row and a leading `y` column;
    /// outside points are written as `NA`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::with_capacity(self.values.len() * 22);
        out.push_str("y\\x");
        for x in &self.x {
            let _ = write!(out, ",{x:?}");
        }
        out.push('\n');
        for r in 0..self.rows {
            let _ = write!(out, "{:?}", self.y[r]);
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v.is_nan() {
                    out.push_str(",NA");
                } else {
                    let _ = write!(out, ",{v:?}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Barycentric weights of every raster point, computed once per mesh.
#[derive(Debug, Clone)]
pub struct Projector {
    rows: usize,
    cols: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `(vertices, weights)` per raster point, `None` outside the mesh.
    weights: Vec<Option<([usize; 3], [f64; 3])>>,
}

impl Projector {
    /// Raster over `[x0, x1] × [y0, y1]` (both ends included).
    pub fn new(mesh: &TriMesh2D, x_range: (f64, f64), y_range: (f64, f64), rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid("raster needs at least 2x2 points"));
        }
        let lin = |(a, b): (f64, f64), k: usize, m: usize| a + (b - a) * k as f64 / (m - 1) as f64;
        let x: Vec<f64> = (0..cols).map(|c| lin(x_range, c, cols)).collect();
        let y: Vec<f64> = (0..rows).map(|r| lin(y_range, r, rows)).collect();
        let locator = Locator::new(mesh);
        let mut weights = Vec::with_capacity(rows * cols);
        for &py in &y {
            for &px in &x {
                weights.push(locator.locate(mesh, [px, py]));
            }
        }
        Ok(Self { rows, cols, x, y, weights })
    }

    /// Raster over the mesh bounding box.
    pub fn over_mesh(mesh: &TriMesh2D, rows: usize, cols: usize) -> Result<Self> {
        let (lo, hi) = mesh.bbox();
        Self::new(mesh, (lo[0], hi[0]), (lo[1], hi[1]), rows, cols)
    }

    pub fn project(&self, field: &[f64], time: usize) -> FieldGrid {
        let values = self
            .weights
            .iter()
            .map(|w| match w {
                Some((v, b)) => b[0] * field[v[0]] + b[1] * field[v[1]] + b[2] * field[v[2]],
                None => f64::NAN,
            })
            .collect();
        FieldGrid { time, rows: self.rows, cols: self.cols, x: self.x.clone(), y: self.y.clone(), values }
    }
}

/// Uniform bucket grid over triangle bounding boxes.
struct Locator {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(mesh: &TriMesh2D) -> Self {
        let (lo, hi) = mesh.bbox();
        let side = ((mesh.triangles().len() as f64).sqrt().ceil() as usize).max(1);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut buckets = vec![Vec::new(); side * side];
        let index = |v: f64, d: usize| (((v - lo[d]) / cell[d]).floor().max(0.0) as usize).min(dims[d] - 1);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let p = tri.map(|v| mesh.vertices()[v]);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for q in &p {
                for d in 0..2 {
                    a[d] = a[d].min(q[d]);
                    b[d] = b[d].max(q[d]);
                }
            }
            for iy in index(a[1], 1)..=index(b[1], 1) {
                for ix in index(a[0], 0)..=index(b[0], 0) {
                    buckets[iy * dims[0] + ix].push(t);
                }
            }
        }
        Self { lo, cell, dims, buckets }
    }

    fn locate(&self, mesh: &TriMesh2D, p: [f64; 2]) -> Option<([usize; 3], [f64; 3])> {
        let ix = ((p[0] - self.lo[0]) / self.cell[0]).floor();
        let iy = ((p[1] - self.lo[1]) / self.cell[1]).floor();
        // Points on the upper bbox edge belong to the last bucket.
        let clamp = |v: f64, d: usize| {
            if v < -1.0 || v > self.dims[d] as f64 {
                None
            } else {
                Some((v.max(0.0) as usize).min(self.dims[d] - 1))
            }
        };
        let (ix, iy) = (clamp(ix, 0)?, clamp(iy, 1)?);
        let tol = 1e-12;
        for &t in &self.buckets[iy * self.dims[0] + ix] {
            let tri = mesh.triangles()[t];
            let [a, b, c] = tri.map(|v| mesh.vertices()[v]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            let l0 = 1.0 - l1 - l2;
            if l0 >= -tol && l1 >= -tol && l2 >= -tol {
                return Some((tri, [l0, l1, l2]));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::structured_mesh;

    #[test]
    fn constant_field_projects_to_ones() {
        let mesh = structured_mesh((0.0, 3.0), (-1.0, 1.0), 7, 5).unwrap();
        let proj = Projector::over_mesh(&mesh, 23, 31).unwrap();
        let g = proj.project(&vec![1.0; mesh.n_vertices()], 0);
        for v in &g.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_field_is_reproduced() {
        let mesh = structured_mesh((0.0, 2.0), (0.0, 2.0), 5, 5).unwrap();
        let field: Vec<f64> = mesh.vertices().iter().map(|v| 2.0 * v[0] - v[1] + 0.5).collect();
        let g = Projector::over_mesh(&mesh, 9, 13).unwrap().project(&field, 1);
        for r in 0..g.rows {
            for c in 0..g.cols {
                let want = 2.0 * g.x[c] - g.y[r] + 0.5;
                assert!((g.get(r, c) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outside_points_are_nan() {
        let mesh = structured_mesh((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap();
        let g = Projector::new(&mesh, (-1.0, 2.0), (0.0, 1.0), 2, 4)
            .unwrap()
            .project(&[0.0; 9], 0);
        assert!(g.get(0, 0).is_nan());
        assert!(g.get(0, 3).is_nan());
        assert!(!g.get(0, 1).is_nan());
        assert!(g.to_csv().contains(",NA"));
    }
}
