//! Exact tabulation of Lagrange bases and reference tensors on the unit simplex.
//!
//! Node ordering used everywhere in this crate: nodes are grouped by the
//! sub-simplex they lie on (vertices, then edges, then faces, then the cell
//! interior). Groups are ordered by the sorted tuple of vertex indices they
//! span, with vertex 0 the origin and vertex `i` the unit vector `e_i`. Inside a
//! group nodes are ordered by descending barycentric index, so edge `(i, j)`
//! lists its nodes walking from vertex `i` toward vertex `j`.

mod poly;

pub use poly::{integrate_monomial, monomials, Exponent, IntegralTable, Poly};

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{self, binomial, Rational};

pub const MAX_DEGREE: usize = 6;

fn check_params(degree: usize, dim: usize, allow_high: bool) -> Result<()> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}")));
    }
    if degree == 0 || (!allow_high && degree > MAX_DEGREE) {
        return Err(Error::Parameter(format!("degree must be in 1..={MAX_DEGREE}, got {degree}")));
    }
    Ok(())
}

/// The unit right simplex: origin plus the unit coordinate vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexRef {
    pub dim: usize,
    pub vertices: Vec<Vec<Rational>>,
}

impl SimplexRef {
    pub fn new(dim: usize) -> Result<Self> {
        check_params(1, dim, false)?;
        let vertices = (0..=dim)
            .map(|v| (0..dim).map(|j| if v == j + 1 { rational::one() } else { rational::zero() }).collect())
            .collect();
        Ok(Self { dim, vertices })
    }

    pub fn measure(&self) -> Rational {
        integrate_monomial(&[0, 0, 0], self.dim)
    }
}

/// Barycentric lattice indices `b` with `Σ b = degree`, in the documented order.
pub fn lattice(degree: usize, dim: usize) -> Result<Vec<Vec<u32>>> {
    check_params(degree, dim, true)?;
    let mut all = Vec::new();
    enumerate(degree as u32, dim + 1, &mut Vec::new(), &mut all);
    all.sort_by(|a, b| {
        let sa = support(a);
        let sb = support(b);
        sa.len()
            .cmp(&sb.len())
            .then_with(|| sa.cmp(&sb))
            .then_with(|| b.cmp(a))
    });
    Ok(all)
}

fn enumerate(remaining: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        cur.push(remaining);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for p in 0..=remaining {
        cur.push(p);
        enumerate(remaining - p, slots - 1, cur, out);
        cur.pop();
    }
}

fn support(b: &[u32]) -> Vec<usize> {
    b.iter().enumerate().filter(|(_, &v)| v > 0).map(|(i, _)| i).collect()
}

/// Equispaced Lagrange nodes `x = (b_1, …, b_d) / degree` in the documented order.
pub fn lagrange_nodes(degree: usize, dim: usize) -> Result<Vec<Vec<Rational>>> {
    check_params(degree, dim, false)?;
    Ok(nodes_from_lattice(&lattice(degree, dim)?, degree))
}

fn nodes_from_lattice(lat: &[Vec<u32>], degree: usize) -> Vec<Vec<Rational>> {
    lat.iter()
        .map(|b| b[1..].iter().map(|&v| rational::rat(v as i64, degree as i64)).collect())
        .collect()
}

/// Nodal basis in monomial form, `φ_λ(x) = Σ_α coeffs[λ][α] x^α`.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub degree: usize,
    pub dim: usize,
    pub nodes: Vec<Vec<Rational>>,
    pub lattice: Vec<Vec<u32>>,
    pub monomials: Vec<Exponent>,
    pub coeffs: Vec<Vec<Rational>>,
}

impl LagrangeBasis {
    pub fn new(degree: usize, dim: usize) -> Result<Self> {
        Self::build(degree, dim, false)
    }

    /// Same as [`LagrangeBasis::new`] but accepts degrees above the supported cap.
    pub fn new_unchecked_degree(degree: usize, dim: usize) -> Result<Self> {
        Self::build(degree, dim, true)
    }

    fn build(degree: usize, dim: usize, allow_high: bool) -> Result<Self> {
        check_params(degree, dim, allow_high)?;
        let lattice = lattice(degree, dim)?;
        let nodes = nodes_from_lattice(&lattice, degree);
        let monomials = monomials(degree, dim);
        let coeffs = solve_coefficients(&nodes, &monomials)?;
        Ok(Self { degree, dim, nodes, lattice, monomials, coeffs })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn poly(&self, lambda: usize) -> Poly {
        Poly::from_dense(&self.monomials, &self.coeffs[lambda])
    }

    pub fn eval(&self, lambda: usize, x: &[Rational]) -> Rational {
        self.poly(lambda).eval(x)
    }

    /// `∂φ_λ/∂ξ_m` for every λ (outer) and m (inner).
    pub fn gradients(&self) -> Vec<Vec<Poly>> {
        (0..self.len())
            .map(|l| {
                let p = self.poly(l);
                (0..self.dim).map(|m| p.derivative(m)).collect()
            })
            .collect()
    }
}

fn solve_coefficients(nodes: &[Vec<Rational>], monomials: &[Exponent]) -> Result<Vec<Vec<Rational>>> {
    // V[μ][α] = node_μ^α ; C Vᵀ = I  =>  C = (V⁻¹)ᵀ
    let vandermonde: Vec<Vec<Rational>> = nodes
        .iter()
        .map(|x| monomials.iter().map(|e| poly::eval_monomial(e, x)).collect())
        .collect();
    let inv = rational::invert(&vandermonde)
        .ok_or_else(|| Error::Internal("singular Vandermonde matrix".into()))?;
    let n = nodes.len();
    Ok((0..n).map(|l| (0..n).map(|a| inv[a][l].clone()).collect()).collect())
}

/// Coefficient matrix of the nodal basis over [`monomials`]`(degree, dim)`.
pub fn basis_coefficients(degree: usize, dim: usize) -> Result<Vec<Vec<Rational>>> {
    Ok(LagrangeBasis::new(degree, dim)?.coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorKind {
    Laplacian,
    Advection,
}

impl TensorKind {
    pub fn name(self) -> &'static str {
        match self {
            TensorKind::Laplacian => "laplacian",
            TensorKind::Advection => "advection",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(TensorKind::Laplacian),
            "advection" => Ok(TensorKind::Advection),
            other => Err(Error::Parameter(format!("unknown form `{other}`"))),
        }
    }
}

/// Exact four-index reference tensor stored row-major.
///
/// Laplacian: `K[λ][μ][m][m′] = ∫ ∂_m φ_λ ∂_{m′} φ_μ`.
/// Advection: `N[λ][μ][ρ][m] = ∫ φ_λ ∂_m φ_μ φ_ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTensor {
    pub kind: TensorKind,
    pub degree: usize,
    pub dim: usize,
    pub nbasis: usize,
    pub entries: Vec<Rational>,
}

impl ReferenceTensor {
    pub fn shape(&self) -> [usize; 4] {
        let (n, d) = (self.nbasis, self.dim);
        match self.kind {
            TensorKind::Laplacian => [n, n, d, d],
            TensorKind::Advection => [n, n, n, d],
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let s = self.shape();
        ((i * s[1] + j) * s[2] + k) * s[3] + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> &Rational {
        &self.entries[self.index(i, j, k, l)]
    }

    pub fn expect_kind(&self, kind: TensorKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::KindMismatch { expected: kind.name(), got: self.kind.name() })
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(rational::to_f64).collect()
    }

    pub fn scaled(&self, factor: &Rational) -> Vec<Rational> {
        self.entries.iter().map(|e| e * factor).collect()
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = lagrange_nodes_any(self.degree, self.dim)
            .iter()
            .map(|x| Value::Array(x.iter().map(rational::to_json).collect()))
            .collect();
        let index_order = match self.kind {
            TensorKind::Laplacian => "lambda,mu,m,m'",
            TensorKind::Advection => "lambda,mu,rho,m",
        };
        json!({
            "kind": self.kind.name(),
            "degree": self.degree,
            "dim": self.dim,
            "ordering": {
                "nodes": "vertices, edges, faces, interior; descending barycentric index within each",
                "index_order": index_order,
                "points": nodes,
            },
            "shape": self.shape(),
            "entries": self.entries.iter().map(rational::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = TensorKind::parse(v["kind"].as_str().ok_or_else(|| Error::Format("missing kind".into()))?)?;
        let field = |k: &str| {
            v[k].as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Format(format!("missing {k}")))
        };
        let degree = field("degree")?;
        let dim = field("dim")?;
        let entries = v["entries"]
            .as_array()
            .ok_or_else(|| Error::Format("missing entries".into()))?
            .iter()
            .map(rational::from_json)
            .collect::<Result<Vec<_>>>()?;
        let nbasis = binomial(degree + dim, dim);
        let t = Self { kind, degree, dim, nbasis, entries };
        let expected: usize = t.shape().iter().product();
        if t.entries.len() != expected {
            return Err(Error::Dimension { expected, got: t.entries.len() });
        }
        Ok(t)
    }
}

fn lagrange_nodes_any(degree: usize, dim: usize) -> Vec<Vec<Rational>> {
    lattice(degree, dim).map(|l| nodes_from_lattice(&l, degree)).unwrap_or_default()
}

/// `M[α][β] = ∫ x^(α+β)` times each column vector, i.e. the Gram operator of the monomials.
fn gram_apply(p: &Poly, basis: &[Exponent], table: &mut IntegralTable) -> Vec<Rational> {
    basis
        .iter()
        .map(|b| {
            p.terms
                .iter()
                .map(|(e, c)| c * table.get(&poly::add_exp(e, b)))
                .fold(Rational::zero(), |a, x| a + x)
        })
        .collect()
}

fn dot_dense(p: &Poly, dense: &[Rational], basis: &[Exponent]) -> Rational {
    // p's exponents are a subset of `basis`
    let mut acc = Rational::zero();
    for (e, c) in &p.terms {
        let idx = basis.iter().position(|b| b == e).expect("exponent in basis");
        acc += c * &dense[idx];
    }
    acc
}

pub fn reference_stiffness_tensor(degree: usize, dim: usize) -> Result<ReferenceTensor> {
    let basis = LagrangeBasis::new(degree, dim)?;
    Ok(stiffness_from_basis(&basis))
}

pub fn stiffness_from_basis(basis: &LagrangeBasis) -> ReferenceTensor {
    let (n, d) = (basis.len(), basis.dim);
    let grads = basis.gradients();
    let mut table = IntegralTable::new(d);
    let flat: Vec<&Poly> = grads.iter().flatten().collect();
    let applied: Vec<Vec<Rational>> = flat
        .iter()
        .map(|p| gram_apply(p, &basis.monomials, &mut table))
        .collect();
    let mut t = ReferenceTensor {
        kind: TensorKind::Laplacian,
        degree: basis.degree,
        dim: d,
        nbasis: n,
        entries: vec![Rational::zero(); n * n * d * d],
    };
    for a in 0..n * d {
        for b in a..n * d {
            let v = dot_dense(flat[a], &applied[b], &basis.monomials);
            let (l, m) = (a / d, a % d);
            let (mu, mp) = (b / d, b % d);
            let i = t.index(l, mu, m, mp);
            let j = t.index(mu, l, mp, m);
            t.entries[j] = v.clone();
            t.entries[i] = v;
        }
    }
    t
}

pub fn reference_advection_tensor(degree: usize, dim: usize) -> Result<ReferenceTensor> {
    let basis = LagrangeBasis::new(degree, dim)?;
    Ok(advection_from_basis(&basis))
}

pub fn advection_from_basis(basis: &LagrangeBasis) -> ReferenceTensor {
    let (n, d) = (basis.len(), basis.dim);
    let polys: Vec<Poly> = (0..n).map(|l| basis.poly(l)).collect();
    let grads = basis.gradients();
    let mut table = IntegralTable::new(d);
    let mut t = ReferenceTensor {
        kind: TensorKind::Advection,
        degree: basis.degree,
        dim: d,
        nbasis: n,
        entries: vec![Rational::zero(); n * n * n * d],
    };
    for l in 0..n {
        for r in l..n {
            let prod = polys[l].mul(&polys[r]);
            let applied = gram_apply(&prod, &basis.monomials, &mut table);
            for mu in 0..n {
                for m in 0..d {
                    let v = dot_dense(&grads[mu][m], &applied, &basis.monomials);
                    let i = t.index(l, mu, r, m);
                    let j = t.index(r, mu, l, m);
                    t.entries[j] = v.clone();
                    t.entries[i] = v;
                }
            }
        }
    }
    t
}
