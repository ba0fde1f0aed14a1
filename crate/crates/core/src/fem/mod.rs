//! Piecewise linear finite elements on a [`TriMesh`].
//!
//! Mass and stiffness matrices are assembled over all nodes. Homogeneous
//! Dirichlet conditions are imposed by restricting to the interior index
//! set; the L2 projection keeps the full mass matrix.

pub mod banded;
pub mod sparse;

use std::io::Write;

pub use banded::{BandedCholesky, BandedLu};
pub use sparse::{solve_spd, CsrMatrix, SparseSpd};

use crate::measures::DiscreteMeasure;
use crate::mesh::TriMesh;
use crate::{Error, Point, Result};

/// Nodal coefficients of a P1 function on a mesh of the given level.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub level: usize,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(level: usize, values: Vec<f64>) -> Self {
        Self { level, values }
    }

    pub fn zeros(mesh: &TriMesh) -> Self {
        Self::new(mesh.level(), vec![0.0; mesh.num_nodes()])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Self {
        Self::new(mesh.level(), mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &NodalField) -> NodalField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        NodalField::new(self.level, values)
    }

    pub fn scaled(&self, a: f64) -> NodalField {
        NodalField::new(self.level, self.values.iter().map(|v| a * v).collect())
    }

    /// CSV with header `x,y,value`, one row per node.
    pub fn write_csv<W: Write>(&self, mesh: &TriMesh, mut out: W) -> Result<()> {
        check_len(mesh.num_nodes(), self.len())?;
        writeln!(out, "x,y,value")?;
        for (p, v) in mesh.nodes().iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", p[0], p[1], v)?;
        }
        Ok(())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Gradients of the three barycentric coordinates of a cell, and its area.
fn cell_gradients(mesh: &TriMesh, cell: usize) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = mesh.cells()[cell].map(|v| mesh.nodes()[v]);
    let area = mesh.cell_area(cell);
    let two_area = 2.0 * area;
    let grads = [
        [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
        [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
        [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
    ];
    (grads, area)
}

/// `M_ij = (phi_i, phi_j)` over all nodes.
pub fn assemble_mass(mesh: &TriMesh) -> SparseSpd {
    let mut triplets = Vec::with_capacity(9 * mesh.num_cells());
    for (ci, cell) in mesh.cells().iter().enumerate() {
        let area = mesh.cell_area(ci);
        for (i, &vi) in cell.iter().enumerate() {
            for (j, &vj) in cell.iter().enumerate() {
                let w = if i == j { 2.0 } else { 1.0 };
                triplets.push((vi, vj, w * area / 12.0));
            }
        }
    }
    SparseSpd::new(CsrMatrix::from_triplets(mesh.num_nodes(), triplets))
}

/// `A_ij = (grad phi_i, grad phi_j)` over all nodes. Only the block on
/// interior nodes is positive definite.
pub fn assemble_stiffness(mesh: &TriMesh) -> SparseSpd {
    let mut triplets = Vec::with_capacity(9 * mesh.num_cells());
    for (ci, cell) in mesh.cells().iter().enumerate() {
        let (grads, area) = cell_gradients(mesh, ci);
        for (i, &vi) in cell.iter().enumerate() {
            for (j, &vj) in cell.iter().enumerate() {
                let g = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1];
                triplets.push((vi, vj, area * g));
            }
        }
    }
    SparseSpd::new(CsrMatrix::from_triplets(mesh.num_nodes(), triplets))
}

/// Load vector `b_j = <q, phi_j>` over all nodes.
pub fn delta_load(mesh: &TriMesh, q: &DiscreteMeasure) -> Result<Vec<f64>> {
    let mut b = vec![0.0; mesh.num_nodes()];
    for atom in q.atoms() {
        let loc = mesh.locate(atom.x)?;
        for (&v, l) in mesh.cells()[loc.cell].iter().zip(loc.lambda) {
            b[v] += atom.beta * l;
        }
    }
    Ok(b)
}

/// Barycentric interpolation of nodal values at `point`.
pub fn eval_field(mesh: &TriMesh, v: &NodalField, point: Point) -> Result<f64> {
    check_len(mesh.num_nodes(), v.len())?;
    let loc = mesh.locate(point)?;
    Ok(mesh.cells()[loc.cell]
        .iter()
        .zip(loc.lambda)
        .map(|(&n, l)| l * v.values[n])
        .sum())
}

/// `(f, phi_j)` by the edge-midpoint rule, exact for quadratics.
pub fn load_from_function(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_nodes()];
    for (ci, cell) in mesh.cells().iter().enumerate() {
        let w = mesh.cell_area(ci) / 3.0;
        let p = cell.map(|v| mesh.nodes()[v]);
        let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        // midpoint k lies on the edge opposite vertex k
        let fm = [mid(p[1], p[2]), mid(p[2], p[0]), mid(p[0], p[1])].map(&f);
        for (k, &v) in cell.iter().enumerate() {
            let on_edges: f64 = (0..3).filter(|&e| e != k).map(|e| fm[e]).sum();
            load[v] += w * 0.5 * on_edges;
        }
    }
    load
}

/// L2 projection onto the full P1 space (no boundary conditions).
pub fn l2_project(mesh: &TriMesh, mass: &SparseSpd, f: impl Fn(Point) -> f64) -> Result<NodalField> {
    check_len(mesh.num_nodes(), mass.dim())?;
    let load = load_from_function(mesh, f);
    Ok(NodalField::new(mesh.level(), mass.solve(&load)?))
}

/// `u^T M v`.
pub fn l2_inner(mass: &SparseSpd, u: &NodalField, v: &NodalField) -> Result<f64> {
    check_len(mass.dim(), u.len())?;
    check_len(mass.dim(), v.len())?;
    Ok(mass.matrix().quadratic_form(&u.values, &v.values))
}

pub fn l2_norm(mass: &SparseSpd, u: &NodalField) -> Result<f64> {
    Ok(l2_inner(mass, u, u)?.max(0.0).sqrt())
}

/// A mesh together with its assembled matrices and interior index set.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: TriMesh,
    mass: SparseSpd,
    stiffness: SparseSpd,
    interior: Vec<usize>,
    interior_position: Vec<Option<usize>>,
}

impl FemSpace {
    pub fn new(mesh: TriMesh) -> Self {
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let interior = mesh.interior_nodes();
        let mut interior_position = vec![None; mesh.num_nodes()];
        for (k, &i) in interior.iter().enumerate() {
            interior_position[i] = Some(k);
        }
        Self {
            mesh,
            mass,
            stiffness,
            interior,
            interior_position,
        }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Ok(Self::new(TriMesh::build_uniform(n)?))
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mass(&self) -> &SparseSpd {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseSpd {
        &self.stiffness
    }

    /// Ascending interior node indices.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of a node in the interior index set, if it is interior.
    pub fn interior_position(&self, node: usize) -> Option<usize> {
        self.interior_position[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// Values of a full-length vector on interior nodes.
    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| full[i]).collect()
    }

    /// Extends interior values by zero to all nodes.
    pub fn scatter(&self, interior: &[f64]) -> NodalField {
        let mut values = vec![0.0; self.num_nodes()];
        for (&i, &v) in self.interior.iter().zip(interior) {
            values[i] = v;
        }
        NodalField::new(self.mesh.level(), values)
    }

    pub fn l2_inner(&self, u: &NodalField, v: &NodalField) -> Result<f64> {
        l2_inner(&self.mass, u, v)
    }

    pub fn l2_norm(&self, u: &NodalField) -> Result<f64> {
        l2_norm(&self.mass, u)
    }

    pub fn eval(&self, v: &NodalField, point: Point) -> Result<f64> {
        eval_field(&self.mesh, v, point)
    }

    pub fn l2_project(&self, f: impl Fn(Point) -> f64) -> Result<NodalField> {
        l2_project(&self.mesh, &self.mass, f)
    }

    pub fn delta_load(&self, q: &DiscreteMeasure) -> Result<Vec<f64>> {
        delta_load(&self.mesh, q)
    }

    /// Nodal interpolation of a field given on a coarser nested mesh.
    pub fn interpolate_from(&self, coarse: &FemSpace, v: &NodalField) -> Result<NodalField> {
        check_len(coarse.num_nodes(), v.len())?;
        let values = self
            .mesh
            .nodes()
            .iter()
            .map(|&p| coarse.eval(v, p))
            .collect::<Result<_>>()?;
        Ok(NodalField::new(self.mesh.level(), values))
    }

    /// L2 projection of a field given on a finer nested mesh onto this space.
    pub fn project_from_fine(&self, fine: &FemSpace, v: &NodalField) -> Result<NodalField> {
        check_len(fine.num_nodes(), v.len())?;
        // (v, phi_j) with phi_j expressed exactly on the fine mesh
        let mv = fine.mass.matrix().matvec(&v.values);
        let mut load = vec![0.0; self.num_nodes()];
        for (p, w) in fine.mesh.nodes().iter().zip(&mv) {
            let loc = self.mesh.locate(*p)?;
            for (&n, l) in self.mesh.cells()[loc.cell].iter().zip(loc.lambda) {
                load[n] += l * w;
            }
        }
        Ok(NodalField::new(self.mesh.level(), self.mass.solve(&load)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice_index(n: usize, i: usize, j: usize) -> usize {
        j * (n + 1) + i
    }

    #[test]
    fn mass_sums_to_area() {
        for n in [2, 4, 8, 16] {
            let m = assemble_mass(&TriMesh::build_uniform(n).unwrap());
            let total: f64 = m.matrix().iter().map(|(_, _, v)| v).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(m.matrix().is_symmetric(0.0));
            assert!(m.matrix().iter().all(|(_, _, v)| v >= 0.0));
        }
    }

    #[test]
    fn mass_stencil() {
        let n = 4;
        let s = 1.0 / n as f64;
        let m = assemble_mass(&TriMesh::build_uniform(n).unwrap());
        let c = lattice_index(n, 2, 2);
        assert!((m.matrix().get(c, c) - s * s / 2.0).abs() < 1e-15);
        let (cols, vals) = m.matrix().row(c);
        assert_eq!(cols.len(), 7);
        for (&col, &v) in cols.iter().zip(vals) {
            if col != c {
                assert!((v - s * s / 12.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_stencil() {
        let n = 4;
        let a = assemble_stiffness(&TriMesh::build_uniform(n).unwrap());
        let a = a.matrix();
        let c = lattice_index(n, 2, 2);
        assert!((a.get(c, c) - 4.0).abs() < 1e-14);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert!((a.get(c, lattice_index(n, i, j)) + 1.0).abs() < 1e-14);
        }
        for (i, j) in [(3, 3), (1, 1)] {
            assert!(a.get(c, lattice_index(n, i, j)).abs() < 1e-14);
        }
        for r in 0..a.dim() {
            let (_, vals) = a.row(r);
            assert!(vals.iter().sum::<f64>().abs() < 1e-13);
        }
        assert!(a.is_symmetric(1e-15));
    }

    #[test]
    fn interior_stiffness_is_spd() {
        let space = FemSpace::uniform(4).unwrap();
        let block = space.stiffness().matrix().restrict(space.interior());
        let d = block.to_dense();
        let dm = DMatrix::from_fn(9, 9, |i, j| d[i][j]);
        let eig = SymmetricEigen::new(dm);
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn solve_1x1_interior_system() {
        let space = FemSpace::uniform(2).unwrap();
        let block = space.stiffness().restrict(space.interior());
        let x = block.solve(&[3.0]).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mass_solve_roundtrip_and_residual() {
        let space = FemSpace::uniform(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..space.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let my = space.mass().matrix().matvec(&y);
        let x = space.mass().solve(&my).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }

        let block = space.stiffness().restrict(space.interior());
        let b: Vec<f64> = (0..block.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = block.solve(&b).unwrap();
        let r = block.matrix().matvec(&x);
        let num: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-12);
    }

    #[test]
    fn delta_load_examples() {
        let mesh = TriMesh::build_uniform(4).unwrap();
        let node = lattice_index(4, 1, 2);
        let q = DiscreteMeasure::new(vec![Atom::new(mesh.nodes()[node], 1.0)]);
        let b = delta_load(&mesh, &q).unwrap();
        for (i, v) in b.iter().enumerate() {
            assert_eq!(*v, if i == node { 1.0 } else { 0.0 });
        }

        let cell = mesh.cells()[9];
        let p = cell.map(|v| mesh.nodes()[v]);
        let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let b = delta_load(&mesh, &DiscreteMeasure::new(vec![Atom::new(centroid, 3.0)])).unwrap();
        for (i, v) in b.iter().enumerate() {
            let expected = if cell.contains(&i) { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }

        let q = DiscreteMeasure::new(vec![Atom::new([0.3, 0.7], 2.0), Atom::new([0.61, 0.2], -1.0)]);
        let b1 = delta_load(&mesh, &q).unwrap();
        let b2 = delta_load(&mesh, &q.scaled(-2.5)).unwrap();
        for (x, y) in b1.iter().zip(&b2) {
            assert!((y + 2.5 * x).abs() < 1e-14);
        }
    }

    #[test]
    fn delta_load_rejects_outside_atoms() {
        let mesh = TriMesh::build_uniform(2).unwrap();
        let q = DiscreteMeasure::new(vec![Atom::new([1.5, 0.5], 1.0)]);
        assert!(matches!(delta_load(&mesh, &q), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn duality_pairing() {
        let space = FemSpace::uniform(8).unwrap();
        let z = NodalField::interpolate(space.mesh(), |p| (3.0 * p[0]).sin() * p[1]);
        let q = DiscreteMeasure::new(vec![
            Atom::new([0.13, 0.77], 1.5),
            Atom::new([0.5, 0.5], -2.0),
            Atom::new([0.91, 0.02], 0.25),
        ]);
        let b = space.delta_load(&q).unwrap();
        let lhs: f64 = b.iter().zip(&z.values).map(|(x, y)| x * y).sum();
        let rhs: f64 = q
            .atoms()
            .iter()
            .map(|a| a.beta * space.eval(&z, a.x).unwrap())
            .sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_linears() {
        let space = FemSpace::uniform(6).unwrap();
        let one = space.l2_project(|_| 1.0).unwrap();
        assert!(one.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let lin = space.l2_project(|p| p[0] + p[1]).unwrap();
        for (v, p) in lin.values.iter().zip(space.mesh().nodes()) {
            assert!((v - (p[0] + p[1])).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_does_not_increase_norm() {
        use std::f64::consts::PI;
        let space = FemSpace::uniform(16).unwrap();
        let f = |p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let proj = space.l2_project(f).unwrap();
        let norm_proj = space.l2_norm(&proj).unwrap();
        // exact norm of sin(pi x) sin(pi y) on the unit square is 1/2
        assert!(norm_proj <= 0.5 + 1e-6);
        assert!(norm_proj > 0.49);
    }

    #[test]
    fn eval_and_norms() {
        let space = FemSpace::uniform(4).unwrap();
        let v = NodalField::interpolate(space.mesh(), |p| 2.0 * p[0] - p[1] + 0.5);
        assert_eq!(space.eval(&v, space.mesh().nodes()[7]).unwrap(), v.values[7]);
        for p in [[0.1, 0.9], [0.33, 0.47], [1.0, 0.0]] {
            let got = space.eval(&v, p).unwrap();
            assert!((got - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-14);
        }
        let ones = NodalField::interpolate(space.mesh(), |_| 1.0);
        assert!((space.l2_norm(&ones).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(space.l2_norm(&NodalField::zeros(space.mesh())).unwrap(), 0.0);
        let w = NodalField::interpolate(space.mesh(), |p| p[0] * p[1]);
        assert_eq!(space.l2_inner(&v, &w).unwrap(), space.l2_inner(&w, &v).unwrap());
        let short = NodalField::new(0, vec![1.0]);
        assert!(matches!(
            space.l2_inner(&short, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nested_interpolation_is_exact_at_old_nodes() {
        let coarse = FemSpace::uniform(4).unwrap();
        let fine = FemSpace::new(coarse.mesh().refine());
        let v = NodalField::interpolate(coarse.mesh(), |p| (5.0 * p[0]).cos() + p[1] * p[1]);
        let up = fine.interpolate_from(&coarse, &v).unwrap();
        for (i, p) in coarse.mesh().nodes().iter().enumerate() {
            let j = fine
                .mesh()
                .nodes()
                .iter()
                .position(|q| crate::mesh::dist(*p, *q) < 1e-14)
                .unwrap();
            assert_eq!(up.values[j], v.values[i]);
        }
        // projecting back recovers the coarse field
        let back = coarse.project_from_fine(&fine, &up).unwrap();
        for (a, b) in back.values.iter().zip(&v.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn field_csv_header_and_rows() {
        let space = FemSpace::uniform(2).unwrap();
        let v = NodalField::interpolate(space.mesh(), |p| p[0]);
        let mut buf = Vec::new();
        v.write_csv(space.mesh(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), 9);
    }
}
