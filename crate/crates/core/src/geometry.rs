//! Affine maps from the reference simplex and the per-element geometry tensors.

use crate::error::{Error, Result};

pub const DEGENERACY_TOL: f64 = 1e-14;

/// `ξ ↦ Jξ + x₀`, with `jinv[m][j] = ∂ξ_m/∂x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub j: Vec<Vec<f64>>,
    pub jinv: Vec<Vec<f64>>,
    pub det_j: f64,
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn inverse(m: &[Vec<f64>], d: f64) -> Vec<Vec<f64>> {
    match m.len() {
        2 => vec![vec![m[1][1] / d, -m[0][1] / d], vec![-m[1][0] / d, m[0][0] / d]],
        3 => {
            let mut inv = vec![vec![0.0; 3]; 3];
            for (r, row) in inv.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    // cofactor of (c, r)
                    let rows: Vec<usize> = (0..3).filter(|&i| i != c).collect();
                    let cols: Vec<usize> = (0..3).filter(|&i| i != r).collect();
                    let minor = m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
                        - m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
                    let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                    *v = sign * minor / d;
                }
            }
            inv
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Builds the affine map whose Jacobian columns are `v_i - v_0`.
///
/// Fails with [`Error::DegenerateElement`] when `|det J|` is below
/// `1e-14 · Π ‖v_i - v_0‖`.
pub fn affine_map_from_vertices(vertices: &[Vec<f64>]) -> Result<AffineMap> {
    let dim = vertices.len().saturating_sub(1);
    if !(dim == 2 || dim == 3) {
        return Err(Error::Parameter(format!("expected 3 or 4 vertices, got {}", vertices.len())));
    }
    if let Some(bad) = vertices.iter().find(|v| v.len() != dim) {
        return Err(Error::Dimension { expected: dim, got: bad.len() });
    }
    let origin = vertices[0].clone();
    let j: Vec<Vec<f64>> = (0..dim)
        .map(|r| (0..dim).map(|c| vertices[c + 1][r] - origin[r]).collect())
        .collect();
    let det_j = det(&j);
    let scale: f64 = (1..=dim)
        .map(|i| {
            vertices[i]
                .iter()
                .zip(&origin)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .product();
    let tol = DEGENERACY_TOL * scale;
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must count as degenerate
    if !(det_j.abs() > tol) {
        return Err(Error::DegenerateElement { det: det_j, tol });
    }
    let jinv = inverse(&j, det_j);
    Ok(AffineMap { dim, origin, j, jinv, det_j })
}

impl AffineMap {
    pub fn reference(dim: usize) -> Self {
        let mut verts = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            verts.push(v);
        }
        affine_map_from_vertices(&verts).expect("reference simplex is nondegenerate")
    }

    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| self.origin[r] + (0..self.dim).map(|c| self.j[r][c] * xi[c]).sum::<f64>())
            .collect()
    }

    pub fn abs_det(&self) -> f64 {
        self.det_j.abs()
    }
}

/// A d×d per-element coefficient matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryTensor {
    pub dim: usize,
    pub values: Vec<f64>,
    pub symmetric: bool,
}

impl GeometryTensor {
    pub fn new(dim: usize, values: Vec<f64>, symmetric: bool) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, got: values.len() });
        }
        Ok(Self { dim, values, symmetric })
    }

    /// Symmetric tensor from its upper triangle, row-major.
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        let need = dim * (dim + 1) / 2;
        if upper.len() != need {
            return Err(Error::Dimension { expected: need, got: upper.len() });
        }
        let mut values = vec![0.0; dim * dim];
        let mut k = 0;
        for r in 0..dim {
            for c in r..dim {
                values[r * dim + c] = upper[k];
                values[c * dim + r] = upper[k];
                k += 1;
            }
        }
        Ok(Self { dim, values, symmetric: true })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.dim + c]
    }
}

/// `G = |det J| · J⁻¹ J⁻ᵀ`, built from its upper triangle so it is exactly symmetric.
pub fn geometry_tensor(map: &AffineMap) -> GeometryTensor {
    let d = map.dim;
    let w = map.abs_det();
    let mut upper = Vec::with_capacity(d * (d + 1) / 2);
    for m in 0..d {
        for mp in m..d {
            let s: f64 = (0..d).map(|j| map.jinv[m][j] * map.jinv[mp][j]).sum();
            upper.push(w * s);
        }
    }
    GeometryTensor::from_upper(d, &upper).expect("sized above")
}

/// `G̃ = |det J| · J⁻¹`, the non-symmetric coefficient matrix of the advection form.
pub fn tilde_geometry_tensor(map: &AffineMap) -> GeometryTensor {
    let d = map.dim;
    let w = map.abs_det();
    let values = (0..d * d).map(|k| w * map.jinv[k / d][k % d]).collect();
    GeometryTensor { dim: d, values, symmetric: false }
}

/// Convenience: `G` straight from vertices.
pub fn geometry_from_vertices(vertices: &[Vec<f64>]) -> Result<GeometryTensor> {
    affine_map_from_vertices(vertices).map(|m| geometry_tensor(&m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-14 * (1.0 + y.abs()))
    }

    #[test]
    fn identity_map() {
        let m = AffineMap::reference(2);
        assert_eq!(m.det_j, 1.0);
        assert_eq!(geometry_tensor(&m).values, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(tilde_geometry_tensor(&m).values, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn uniform_scaling_2d() {
        let m = affine_map_from_vertices(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(m.j, vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(m.det_j, 4.0);
        assert!(close(&geometry_tensor(&m).values, &[1.0, 0.0, 0.0, 1.0]));
        assert!(close(&tilde_geometry_tensor(&m).values, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn sheared_triangle() {
        let m = affine_map_from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(m.j, vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(close(&geometry_tensor(&m).values, &[2.0, -1.0, -1.0, 1.0]));
        assert!(close(&tilde_geometry_tensor(&m).values, &[1.0, -1.0, 0.0, 1.0]));
    }

    #[test]
    fn collinear_is_degenerate() {
        let r = affine_map_from_vertices(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(r, Err(Error::DegenerateElement { .. })));
    }

    #[test]
    fn scaled_identity_jacobians() {
        for c in [0.5, 2.0, 3.0] {
            let m2 = affine_map_from_vertices(&[vec![0.0, 0.0], vec![c, 0.0], vec![0.0, c]]).unwrap();
            assert!(close(&geometry_tensor(&m2).values, &[1.0, 0.0, 0.0, 1.0]));
            let m3 = affine_map_from_vertices(&[
                vec![0.0, 0.0, 0.0],
                vec![c, 0.0, 0.0],
                vec![0.0, c, 0.0],
                vec![0.0, 0.0, c],
            ])
            .unwrap();
            let g = geometry_tensor(&m3).values;
            assert!(close(&g, &[c, 0.0, 0.0, 0.0, c, 0.0, 0.0, 0.0, c]));
        }
    }

    #[test]
    fn inverse_in_3d() {
        let v = vec![
            vec![0.1, 0.2, 0.0],
            vec![1.3, 0.1, 0.2],
            vec![0.2, 0.9, -0.1],
            vec![0.3, 0.4, 1.1],
        ];
        let m = affine_map_from_vertices(&v).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let p: f64 = (0..3).map(|k| m.j[r][k] * m.jinv[k][c]).sum();
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((p - e).abs() < 1e-12);
            }
        }
    }
}
