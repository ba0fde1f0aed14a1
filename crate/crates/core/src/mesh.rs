//! Structured triangulations of the unit square.
//!
//! Meshes follow the Friedrichs-Keller pattern: each lattice square is cut
//! by the diagonal running from its lower-left to its upper-right corner.
//! Nodes are numbered row by row, so node `(i, j)` of an `n x n` lattice has
//! index `j * (n + 1) + i` and sits at `(i / n, j / n)`.

use std::collections::HashMap;
use std::io::Write;

use crate::{Error, Point, Result};

const CONTAINS_TOL: f64 = 1e-12;

/// A conforming triangulation of `[0, 1]^2`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: f64,
    level: usize,
    locator: CellBuckets,
}

/// Barycentric location of a point inside a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaryLocation {
    pub cell: usize,
    pub lambda: [f64; 3],
}

impl TriMesh {
    /// Uniform `n x n` Friedrichs-Keller mesh.
    pub fn build_uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "uniform mesh needs n >= 2, got {n}"
            )));
        }
        let stride = n + 1;
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 / nf, j as f64 / nf]);
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * stride + i;
                let b = a + 1;
                let c = a + stride + 1;
                let d = a + stride;
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Ok(Self::from_parts(nodes, cells, 0))
    }

    fn from_parts(nodes: Vec<Point>, cells: Vec<[usize; 3]>, level: usize) -> Self {
        let boundary = nodes.iter().map(|p| on_boundary(*p)).collect();
        let h = cells
            .iter()
            .map(|c| {
                let [a, b, d] = c.map(|v| nodes[v]);
                dist(a, b).max(dist(b, d)).max(dist(d, a))
            })
            .fold(0.0, f64::max);
        let locator = CellBuckets::new(&nodes, &cells);
        Self {
            nodes,
            cells,
            boundary,
            h,
            level,
            locator,
        }
    }

    /// Splits every cell into four congruent children through its edge
    /// midpoints. Nodes of the result are renumbered row by row.
    pub fn refine(&self) -> Self {
        let mut nodes = self.nodes.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (pa, pb) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                nodes.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for &[a, b, c] in &self.cells {
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            cells.push([a, ab, ca]);
            cells.push([ab, b, bc]);
            cells.push([ca, bc, c]);
            cells.push([ab, bc, ca]);
        }

        // lexicographic renumbering by (row, column)
        let key = |p: &Point| ((p[1] * 1e12).round() as i64, (p[0] * 1e12).round() as i64);
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| key(&nodes[i]));
        let mut new_index = vec![0; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let nodes = order.iter().map(|&i| nodes[i]).collect();
        let cells = cells
            .into_iter()
            .map(|c| c.map(|v| new_index[v]))
            .collect();
        Self::from_parts(nodes, cells, self.level + 1)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Maximal cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Signed area of a cell; positive for every cell of a valid mesh.
    pub fn cell_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cells[cell].map(|v| self.nodes[v]);
        0.5 * cross(sub(b, a), sub(c, a))
    }

    /// Ascending indices of nodes not on the boundary.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Finds the lowest-indexed cell containing `point`.
    pub fn locate(&self, point: Point) -> Result<BaryLocation> {
        if !point.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::OutOfDomain {
                x: point[0],
                y: point[1],
            });
        }
        for &cell in self.locator.candidates(point) {
            let lambda = self.barycentric(cell, point);
            if lambda.iter().all(|&l| l >= -CONTAINS_TOL) {
                let clamped = lambda.map(|l| l.max(0.0));
                let sum: f64 = clamped.iter().sum();
                return Ok(BaryLocation {
                    cell,
                    lambda: clamped.map(|l| l / sum),
                });
            }
        }
        Err(Error::Numerical(format!(
            "no cell contains ({}, {})",
            point[0], point[1]
        )))
    }

    fn barycentric(&self, cell: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.cells[cell].map(|v| self.nodes[v]);
        let det = cross(sub(b, a), sub(c, a));
        let lb = cross(sub(p, a), sub(c, a)) / det;
        let lc = cross(sub(b, a), sub(p, a)) / det;
        [1.0 - lb - lc, lb, lc]
    }

    /// Point represented by a barycentric location.
    pub fn reconstruct(&self, loc: &BaryLocation) -> Point {
        let verts = self.cells[loc.cell].map(|v| self.nodes[v]);
        let mut p = [0.0; 2];
        for (v, l) in verts.iter().zip(loc.lambda) {
            p[0] += l * v[0];
            p[1] += l * v[1];
        }
        p
    }

    /// Writes `index,x,y` rows for every node.
    pub fn write_nodes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,x,y")?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(out, "{i},{:.16e},{:.16e}", p[0], p[1])?;
        }
        Ok(())
    }

    /// Writes `index,a,b,c` rows for every cell.
    pub fn write_cells_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,a,b,c")?;
        for (i, [a, b, c]) in self.cells.iter().enumerate() {
            writeln!(out, "{i},{a},{b},{c}")?;
        }
        Ok(())
    }
}

fn on_boundary(p: Point) -> bool {
    const EPS: f64 = 1e-14;
    p[0] <= EPS || p[0] >= 1.0 - EPS || p[1] <= EPS || p[1] >= 1.0 - EPS
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform bucket grid over the unit square; each bucket lists, in ascending
/// order, the cells whose bounding box touches it.
#[derive(Debug, Clone)]
struct CellBuckets {
    size: usize,
    buckets: Vec<Vec<usize>>,
}

impl CellBuckets {
    fn new(nodes: &[Point], cells: &[[usize; 3]]) -> Self {
        let size = ((cells.len() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); size * size];
        let s = size as f64;
        let slot = |v: f64| ((v * s).floor().max(0.0) as usize).min(size - 1);
        for (ci, cell) in cells.iter().enumerate() {
            let pts = cell.map(|v| nodes[v]);
            let lo = [0, 1].map(|d| pts.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min));
            let hi = [0, 1].map(|d| pts.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max));
            for by in slot(lo[1] - 1e-12)..=slot(hi[1] + 1e-12) {
                for bx in slot(lo[0] - 1e-12)..=slot(hi[0] + 1e-12) {
                    buckets[by * size + bx].push(ci);
                }
            }
        }
        Self { size, buckets }
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let s = self.size as f64;
        let slot = |v: f64| ((v * s).floor().max(0.0) as usize).min(self.size - 1);
        &self.buckets[slot(p[1]) * self.size + slot(p[0])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn coord_key(p: Point) -> (i64, i64) {
        ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
    }

    #[test]
    fn uniform_counts() {
        let m = TriMesh::build_uniform(2).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_cells(), 8);
        assert_eq!(m.interior_nodes(), vec![4]);
        assert_eq!(m.nodes()[4], [0.5, 0.5]);

        let m = TriMesh::build_uniform(4).unwrap();
        assert_eq!(m.num_nodes(), 25);
        assert_eq!(m.num_cells(), 32);
        assert_eq!(m.interior_nodes().len(), 9);
        for i in m.interior_nodes() {
            let p = m.nodes()[i];
            assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0);
        }
    }

    #[test]
    fn rejects_tiny_lattice() {
        assert!(matches!(
            TriMesh::build_uniform(1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn areas_positive_and_sum_to_one() {
        for n in [2, 3, 7] {
            let m = TriMesh::build_uniform(n).unwrap();
            let mut total = 0.0;
            for c in 0..m.num_cells() {
                let a = m.cell_area(c);
                assert!(a > 0.0);
                total += a;
            }
            assert!((total - 1.0).abs() < 1e-14);
            assert!((m.h() - 2f64.sqrt() / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn conforming_edges() {
        let m = TriMesh::build_uniform(5).unwrap();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in m.cells() {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        for ((u, v), k) in count {
            let boundary_edge = m.boundary_mask()[u] && m.boundary_mask()[v] && {
                let (p, q) = (m.nodes()[u], m.nodes()[v]);
                (p[0] == q[0] && (p[0] == 0.0 || p[0] == 1.0))
                    || (p[1] == q[1] && (p[1] == 0.0 || p[1] == 1.0))
            };
            assert_eq!(k, if boundary_edge { 1 } else { 2 });
        }
    }

    #[test]
    fn refine_matches_uniform() {
        let coarse = TriMesh::build_uniform(2).unwrap();
        let fine = coarse.refine();
        let direct = TriMesh::build_uniform(4).unwrap();
        assert_eq!(fine.num_nodes(), 25);
        assert_eq!(fine.num_cells(), 32);
        assert_eq!(fine.level(), 1);
        assert!((fine.h() - coarse.h() / 2.0).abs() < 1e-15);
        // lexicographic renumbering reproduces the direct ordering
        for (a, b) in fine.nodes().iter().zip(direct.nodes()) {
            assert!(dist(*a, *b) < 1e-14);
        }
        assert_eq!(fine.boundary_mask(), direct.boundary_mask());
    }

    #[test]
    fn refine_twice_equals_uniform_up_to_permutation() {
        let n = 3;
        let twice = TriMesh::build_uniform(n).unwrap().refine().refine();
        let direct = TriMesh::build_uniform(4 * n).unwrap();
        let nodes_a: BTreeSet<_> = twice.nodes().iter().map(|&p| coord_key(p)).collect();
        let nodes_b: BTreeSet<_> = direct.nodes().iter().map(|&p| coord_key(p)).collect();
        assert_eq!(nodes_a, nodes_b);
        let cell_set = |m: &TriMesh| -> BTreeSet<Vec<(i64, i64)>> {
            m.cells()
                .iter()
                .map(|c| {
                    let mut v: Vec<_> = c.iter().map(|&i| coord_key(m.nodes()[i])).collect();
                    v.sort();
                    v
                })
                .collect()
        };
        assert_eq!(cell_set(&twice), cell_set(&direct));
    }

    #[test]
    fn refinement_is_nested() {
        let coarse = TriMesh::build_uniform(4).unwrap();
        let fine = coarse.refine();
        for p in coarse.nodes() {
            assert!(fine.nodes().iter().any(|q| dist(*p, *q) <= 1e-14));
        }
    }

    #[test]
    fn locate_vertex_and_centroid() {
        let m = TriMesh::build_uniform(4).unwrap();
        let loc = m.locate(m.nodes()[6]).unwrap();
        let mut sorted = loc.lambda;
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, [0.0, 0.0, 1.0]);
        assert!(m.cells()[loc.cell].contains(&6));

        for cell in [0, 5, 17, 31] {
            let [a, b, c] = m.cells()[cell].map(|v| m.nodes()[v]);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            let loc = m.locate(centroid).unwrap();
            assert_eq!(loc.cell, cell);
            for l in loc.lambda {
                assert!((l - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locate_center_of_coarse_mesh() {
        let m = TriMesh::build_uniform(2).unwrap();
        let loc = m.locate([0.5, 0.5]).unwrap();
        let p = m.reconstruct(&loc);
        assert!(dist(p, [0.5, 0.5]) < 1e-12);
        // lowest incident cell
        let lowest = (0..m.num_cells())
            .find(|&c| m.cells()[c].contains(&4))
            .unwrap();
        assert_eq!(loc.cell, lowest);
    }

    #[test]
    fn locate_rejects_outside() {
        let m = TriMesh::build_uniform(2).unwrap();
        assert!(matches!(
            m.locate([1.1, 0.5]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            m.locate([0.5, -1e-9]),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn csv_export_has_one_line_per_item() {
        let m = TriMesh::build_uniform(2).unwrap();
        let mut buf = Vec::new();
        m.write_nodes_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
        let mut buf = Vec::new();
        m.write_cells_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn locate_reconstructs(x in 0.0f64..=1.0, y in 0.0f64..=1.0, n in 2usize..12) {
                let m = TriMesh::build_uniform(n).unwrap();
                let loc = m.locate([x, y]).unwrap();
                let s: f64 = loc.lambda.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(loc.lambda.iter().all(|l| (0.0..=1.0).contains(l)));
                prop_assert!(dist(m.reconstruct(&loc), [x, y]) < 1e-12);
            }
        }
    }
}
