//! Quadrature on the unit simplex and the quadrature form of the stiffness
//! tensor.

use crate::error::{Error, Result};
use crate::tabulation::{LagrangeBasis, Poly};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Collapsed-coordinate Gauss product exact for total degree `exactness`.
pub fn quadrature_rule(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    let q = |extra: usize| (exactness + extra + 2) / 2;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        2 => {
            // x = u, y = (1-u) v, dx dy = (1-u) du dv
            let (u, wu) = gauss_legendre(q(1));
            let (v, wv) = gauss_legendre(q(0));
            for (a, wa) in u.iter().zip(&wu) {
                for (b, wb) in v.iter().zip(&wv) {
                    points.push(vec![*a, (1.0 - a) * b]);
                    weights.push(wa * wb * (1.0 - a));
                }
            }
        }
        3 => {
            // x = u, y = (1-u) v, z = (1-u)(1-v) w, jacobian (1-u)²(1-v)
            let (u, wu) = gauss_legendre(q(2));
            let (v, wv) = gauss_legendre(q(1));
            let (s, ws) = gauss_legendre(q(0));
            for (a, wa) in u.iter().zip(&wu) {
                for (b, wb) in v.iter().zip(&wv) {
                    for (c, wc) in s.iter().zip(&ws) {
                        points.push(vec![*a, (1.0 - a) * b, (1.0 - a) * (1.0 - b) * c]);
                        weights.push(wa * wb * wc * (1.0 - a) * (1.0 - a) * (1.0 - b));
                    }
                }
            }
        }
        _ => return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}"))),
    }
    Ok(QuadratureRule { dim, points, weights, exactness })
}

/// Equal weights at the edge midpoints, summing to the simplex volume.
/// Exact for quadratics on triangles, only for linears on tetrahedra.
pub fn midpoint_rule(dim: usize) -> Result<QuadratureRule> {
    let verts: Vec<Vec<f64>> = match dim {
        2 => vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        3 => vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        _ => return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}"))),
    };
    let mut points = Vec::new();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            points.push(verts[i].iter().zip(&verts[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    let (w, exactness) = if dim == 2 { (1.0 / 6.0, 2) } else { (1.0 / 36.0, 1) };
    let weights = vec![w; points.len()];
    Ok(QuadratureRule { dim, points, weights, exactness })
}

/// Basis gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct TabulatedGradients {
    pub dim: usize,
    pub nbasis: usize,
    pub weights: Vec<f64>,
    /// `grad[q][λ][m]`, flattened.
    pub grad: Vec<f64>,
}

impl TabulatedGradients {
    pub fn new(degree: usize, dim: usize, rule: &QuadratureRule) -> Result<Self> {
        if rule.dim != dim {
            return Err(Error::Dimension { expected: dim, got: rule.dim });
        }
        let basis = LagrangeBasis::new(degree, dim)?;
        let grads: Vec<Vec<Poly>> = basis.gradients();
        let n = basis.len();
        let mut grad = Vec::with_capacity(rule.len() * n * dim);
        for x in &rule.points {
            for g in &grads {
                for p in g {
                    grad.push(p.eval_f64(x));
                }
            }
        }
        Ok(Self { dim, nbasis: n, weights: rule.weights.clone(), grad })
    }

    pub fn at(&self, q: usize, l: usize, m: usize) -> f64 {
        self.grad[(q * self.nbasis + l) * self.dim + m]
    }
}

/// Floating-point Laplacian tensor by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTensor {
    pub degree: usize,
    pub dim: usize,
    pub nbasis: usize,
    /// Same layout as the exact tensor: `[λ][μ][m][m′]`.
    pub entries: Vec<f64>,
    /// Set when the rule cannot integrate `∇φ·∇φ` exactly.
    pub underintegrated: bool,
}

pub fn quadrature_k(degree: usize, dim: usize, rule: &QuadratureRule) -> Result<QuadratureTensor> {
    let tab = TabulatedGradients::new(degree, dim, rule)?;
    let (n, d) = (tab.nbasis, dim);
    let mut entries = vec![0.0; n * n * d * d];
    for (q, w) in tab.weights.iter().enumerate() {
        for l in 0..n {
            for mu in 0..n {
                for m in 0..d {
                    for mp in 0..d {
                        entries[((l * n + mu) * d + m) * d + mp] += w * tab.at(q, l, m) * tab.at(q, mu, mp);
                    }
                }
            }
        }
    }
    Ok(QuadratureTensor { degree, dim, nbasis: n, entries, underintegrated: rule.exactness < 2 * (degree - 1) })
}
