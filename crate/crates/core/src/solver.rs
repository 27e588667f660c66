//! A small Poisson solve used to sanity-check assembled operators.

use crate::assembly::{assemble, ElementKernel};
use crate::error::Result;
use crate::geometry::affine_map_from_vertices;
use crate::mesh::{local_to_global, LocalToGlobal, StructuredMesh};
use crate::quadrature::quadrature_rule;
use crate::sparse::CsrMatrix;
use crate::tabulation::LagrangeBasis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients; stops at `‖r‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> CgReport {
    let n = b.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(p, q)| p * q).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let target = tol * dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let res = dot(&r, &r).sqrt();
        if res <= target {
            return CgReport { iterations: it, residual: res, converged: true };
        }
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt();
    CgReport { iterations: max_iter, residual: res, converged: res <= target }
}

/// Homogeneous Dirichlet conditions by eliminating fixed rows and columns,
/// leaving a unit diagonal.
pub fn apply_dirichlet(a: &mut CsrMatrix, b: &mut [f64], fixed: &[bool]) {
    for r in 0..a.n_rows {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            let c = a.col_idx[k];
            if fixed[r] || fixed[c] {
                a.values[k] = if r == c { 1.0 } else { 0.0 };
            }
        }
        if fixed[r] {
            b[r] = 0.0;
        }
    }
}

/// `b_i = ∫ f φ_i`.
pub fn load_vector(mesh: &StructuredMesh, l2g: &LocalToGlobal, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let basis = LagrangeBasis::new(l2g.degree, mesh.dim)?;
    let rule = quadrature_rule(mesh.dim, 2 * l2g.degree + 2)?;
    let phi: Vec<Vec<f64>> =
        rule.points.iter().map(|x| (0..basis.len()).map(|l| basis.poly(l).eval_f64(x)).collect()).collect();
    let mut b = vec![0.0; l2g.n_dofs];
    for c in 0..mesh.num_cells() {
        let map = affine_map_from_vertices(&mesh.cell_vertices(c))?;
        let dofs = l2g.cell(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * map.abs_det() * f(&map.apply(xi));
            for (l, &g) in dofs.iter().enumerate() {
                b[g] += w * phi[q][l];
            }
        }
    }
    Ok(b)
}

/// `‖u_h - u‖_{L²}` with a rule well above the discretization degree.
pub fn l2_error(mesh: &StructuredMesh, l2g: &LocalToGlobal, uh: &[f64], u: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let basis = LagrangeBasis::new(l2g.degree, mesh.dim)?;
    let rule = quadrature_rule(mesh.dim, 2 * l2g.degree + 4)?;
    let phi: Vec<Vec<f64>> =
        rule.points.iter().map(|x| (0..basis.len()).map(|l| basis.poly(l).eval_f64(x)).collect()).collect();
    let mut err = 0.0;
    for c in 0..mesh.num_cells() {
        let map = affine_map_from_vertices(&mesh.cell_vertices(c))?;
        let dofs = l2g.cell(c);
        for (q, xi) in rule.points.iter().enumerate() {
            let approx: f64 = dofs.iter().zip(&phi[q]).map(|(&g, p)| uh[g] * p).sum();
            let e = approx - u(&map.apply(xi));
            err += rule.weights[q] * map.abs_det() * e * e;
        }
    }
    Ok(err.sqrt())
}

pub fn manufactured_u(x: &[f64]) -> f64 {
    x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
}

/// `-Δu` for [`manufactured_u`].
pub fn manufactured_f(x: &[f64]) -> f64 {
    2.0 * (x[1] * (1.0 - x[1]) + x[0] * (1.0 - x[0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonResult {
    pub n: usize,
    pub dofs: usize,
    pub l2_error: f64,
    pub cg: CgReport,
}

/// Solves `-Δu = f` on the unit square, `u = 0` on the boundary, with the
/// stiffness matrix assembled by `kernel`.
pub fn solve_poisson(n: usize, degree: usize, kernel: &dyn ElementKernel) -> Result<PoissonResult> {
    let mesh = StructuredMesh::unit_square(n)?;
    let l2g = local_to_global(&mesh, degree)?;
    let mut a = assemble(&mesh, &l2g, kernel)?;
    let mut b = load_vector(&mesh, &l2g, manufactured_f)?;
    apply_dirichlet(&mut a, &mut b, &l2g.boundary_dofs());
    let mut x = vec![0.0; l2g.n_dofs];
    let cg = conjugate_gradient(&a, &b, &mut x, 1e-12, 10 * l2g.n_dofs + 100);
    let l2_error = l2_error(&mesh, &l2g, &x, manufactured_u)?;
    Ok(PoissonResult { n, dofs: l2g.n_dofs, l2_error, cg })
}
