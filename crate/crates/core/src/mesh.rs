//! Structured simplicial meshes of the unit square and cube, and the
//! local-to-global numbering of Lagrange nodes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::affine_map_from_vertices;
use crate::tabulation::lattice;

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    pub dim: usize,
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
    /// `d + 1` vertex ids per cell, positively oriented.
    pub cells: Vec<Vec<usize>>,
}

impl StructuredMesh {
    /// `n × n` squares, each split along its `(0,0)–(1,1)` diagonal.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("mesh needs n >= 1".into()));
        }
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(vec![i as f64 * h, j as f64 * h]);
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Ok(Self { dim: 2, n, vertices, cells })
    }

    /// `n³` cubes, each split into the six tetrahedra around its main diagonal.
    pub fn unit_cube(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("mesh needs n >= 1".into()));
        }
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1).pow(3));
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push(vec![i as f64 * h, j as f64 * h, k as f64 * h]);
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for p in PERMS {
                        let mut c = [i, j, k];
                        let mut cell = vec![id(c[0], c[1], c[2])];
                        for axis in p {
                            c[axis] += 1;
                            cell.push(id(c[0], c[1], c[2]));
                        }
                        cells.push(cell);
                    }
                }
            }
        }
        let mut mesh = Self { dim: 3, n, vertices, cells };
        mesh.orient();
        Ok(mesh)
    }

    fn orient(&mut self) {
        for c in 0..self.cells.len() {
            let det = affine_map_from_vertices(&self.cell_vertices(c)).map(|m| m.det_j).unwrap_or(1.0);
            if det < 0.0 {
                let d = self.dim;
                self.cells[c].swap(d - 1, d);
            }
        }
    }

    pub fn cell_vertices(&self, c: usize) -> Vec<Vec<f64>> {
        self.cells[c].iter().map(|&v| self.vertices[v].clone()).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
}

/// `ι(e, λ)`: global degree of freedom of local node `λ` on cell `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalToGlobal {
    pub degree: usize,
    pub nbasis: usize,
    pub n_dofs: usize,
    /// Row-major `cells × nbasis`.
    pub map: Vec<usize>,
    /// Physical coordinates of every global node.
    pub coords: Vec<Vec<f64>>,
}

impl LocalToGlobal {
    pub fn cell(&self, e: usize) -> &[usize] {
        &self.map[e * self.nbasis..(e + 1) * self.nbasis]
    }

    /// Nodes on the boundary of the unit square or cube.
    pub fn boundary_dofs(&self) -> Vec<bool> {
        self.coords
            .iter()
            .map(|x| x.iter().any(|&c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12))
            .collect()
    }
}

/// Numbers nodes so that a node shared between cells gets one id.
///
/// A node is identified by the global vertices of the sub-simplex it lies
/// on together with its barycentric multiplicities; that key does not depend
/// on which cell is looking at it.
pub fn local_to_global(mesh: &StructuredMesh, degree: usize) -> Result<LocalToGlobal> {
    let lat = lattice(degree, mesh.dim)?;
    let nbasis = lat.len();
    let mut ids: HashMap<Vec<(usize, u32)>, usize> = HashMap::new();
    let mut map = Vec::with_capacity(mesh.num_cells() * nbasis);
    let mut coords = Vec::new();
    for cell in &mesh.cells {
        for b in &lat {
            let mut key: Vec<(usize, u32)> =
                b.iter().zip(cell).filter(|(m, _)| **m > 0).map(|(&m, &v)| (v, m)).collect();
            key.sort_unstable();
            let next = ids.len();
            let id = *ids.entry(key).or_insert_with(|| {
                let x = (0..mesh.dim)
                    .map(|k| b.iter().zip(cell).map(|(&m, &v)| m as f64 * mesh.vertices[v][k]).sum::<f64>() / degree as f64)
                    .collect();
                coords.push(x);
                next
            });
            map.push(id);
        }
    }
    Ok(LocalToGlobal { degree, nbasis, n_dofs: ids.len(), map, coords })
}
