//! The advection form `c(u; v, w) = ∫ (u·∇v)·w` on affine simplices.
//!
//! Per element, with `γ[m][λ] = Σ_j G̃[m][j] u[j][λ]`, the local matrix is
//! `Kᵉᵘ[μ][ρ] = Σ_{m,λ} γ[m][λ] N[λ][μ][ρ][m]`.

use crate::codegen::{interpret, Instr, KernelIR, Output};
use crate::error::{Error, Result};
use crate::geometry::GeometryTensor;
use crate::optimizer::OpCounts;
use crate::rational::{self, int, Rational};
use crate::tabulation::{ReferenceTensor, TensorKind};

pub use crate::optimizer::advection_blocks;

/// `u[j][λ]`: component `j` of the advecting velocity at local node `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub dim: usize,
    pub nbasis: usize,
    pub values: Vec<f64>,
}

impl CoefficientField {
    pub fn new(dim: usize, nbasis: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * nbasis {
            return Err(Error::Dimension { expected: dim * nbasis, got: values.len() });
        }
        Ok(Self { dim, nbasis, values })
    }

    pub fn zeros(dim: usize, nbasis: usize) -> Self {
        Self { dim, nbasis, values: vec![0.0; dim * nbasis] }
    }
}

/// `γ[m][λ]`, `m` major. This is also the input layout of advection kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub dim: usize,
    pub nbasis: usize,
    pub values: Vec<f64>,
}

impl GammaMatrix {
    pub fn new(dim: usize, nbasis: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * nbasis {
            return Err(Error::Dimension { expected: dim * nbasis, got: values.len() });
        }
        Ok(Self { dim, nbasis, values })
    }

    pub fn get(&self, m: usize, l: usize) -> f64 {
        self.values[m * self.nbasis + l]
    }
}

pub fn gamma(gt: &GeometryTensor, u: &CoefficientField) -> Result<GammaMatrix> {
    if gt.dim != u.dim {
        return Err(Error::Dimension { expected: gt.dim, got: u.dim });
    }
    let (d, n) = (u.dim, u.nbasis);
    let mut values = vec![0.0; d * n];
    for m in 0..d {
        for l in 0..n {
            values[m * n + l] = (0..d).map(|j| gt.get(m, j) * u.values[j * n + l]).sum();
        }
    }
    Ok(GammaMatrix { dim: d, nbasis: n, values })
}

/// Dense `Kᵉᵘ` by full contraction: `d·|𝓛|` multiply-adds per entry.
pub fn naive_keu(n: &ReferenceTensor, g: &GammaMatrix) -> Result<Vec<f64>> {
    n.expect_kind(TensorKind::Advection)?;
    if g.dim != n.dim || g.nbasis != n.nbasis {
        return Err(Error::Dimension { expected: n.dim * n.nbasis, got: g.dim * g.nbasis });
    }
    crate::codegen::contract(n, &g.values)
}

/// Operation count of [`naive_keu`]: one multiply and one add per term.
pub fn naive_keu_ops(dim: usize, nbasis: usize) -> usize {
    2 * dim * nbasis * nbasis * nbasis
}

fn check_linear_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("linear factors need dim 2 or 3, got {dim}")))
    }
}

/// Exact factors of the linear advection tensor, `N[λ][μ][ρ][m] = D[μ][m] F[λ][ρ]`.
///
/// `D[μ][m] = ∂φ_μ/∂ξ_m`: the origin vertex has the row of `-1`s, vertex `i`
/// the unit row `e_i`. `F[λ][ρ] = ∫ φ_λ φ_ρ = (1 + δ_λρ)/(d+2)!`.
pub fn linear_df_factors(dim: usize) -> Result<(Vec<Vec<Rational>>, Vec<Vec<Rational>>)> {
    check_linear_dim(dim)?;
    let n = dim + 1;
    let d = (0..n)
        .map(|mu| {
            (0..dim)
                .map(|m| if mu == 0 { int(-1) } else if mu == m + 1 { int(1) } else { int(0) })
                .collect()
        })
        .collect();
    let denom = Rational::from_integer(rational::factorial(dim as u32 + 2));
    let f = (0..n)
        .map(|l| (0..n).map(|r| int(if l == r { 2 } else { 1 }) / &denom).collect())
        .collect();
    Ok((d, f))
}

/// Edge-midpoint mass matrix `(d·I + (𝟙𝟙ᵀ - I)) / (4(d+1)!)`.
///
/// It matches the exact mass matrix for triangles. For tetrahedra the
/// midpoint rule is not exact on quadratics, so this differs from
/// [`linear_df_factors`]'s `F`.
pub fn midpoint_mass_matrix(dim: usize) -> Result<Vec<Vec<Rational>>> {
    check_linear_dim(dim)?;
    let n = dim + 1;
    let denom = Rational::from_integer(rational::factorial(dim as u32 + 1) * 4u32);
    Ok((0..n)
        .map(|l| (0..n).map(|r| int(if l == r { dim as i64 } else { 1 }) / &denom).collect())
        .collect())
}

/// Operation tally of the hand schedule for tetrahedral linears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct KeuLedger {
    /// Sums, the row-sum column and its negation.
    pub arithmetic: OpCounts,
    /// The uniform `1/120` factor applied inside the kernel.
    pub scaling: OpCounts,
    /// Cost of the same factor when folded into `|det J|` instead.
    pub folded_scaling: usize,
}

/// The hand schedule as IR. Input is `γ` (`m` major); outputs every `(μ, ρ)`.
///
/// ```text
/// γ_m      = Σ_λ γ[m][λ]
/// γ̃[m][ρ] = γ[m][ρ] + γ_m
/// K[i][ρ]  = γ̃[i-1][ρ] / 120            (i = 1..3)
/// K[0][ρ]  = -(K[1][ρ] + K[2][ρ] + K[3][ρ])
/// ```
///
/// With `fold_scale` the `1/120` is left out; the caller applies it to `γ`
/// up front (one multiply on `|det J|`).
pub fn advection_linear3d_ir(fold_scale: bool) -> KernelIR {
    let (d, n) = (3usize, 4usize);
    let mut ins: Vec<Instr> = Vec::new();
    let mut push = |i: Instr| {
        ins.push(i);
        ins.len() - 1
    };
    let g: Vec<usize> = (0..d * n).map(|k| push(Instr::Load { input: k })).collect();
    let sums: Vec<usize> = (0..d)
        .map(|m| {
            let mut acc = push(Instr::Add { a: g[m * n], b: g[m * n + 1] });
            for l in 2..n {
                acc = push(Instr::Add { a: acc, b: g[m * n + l] });
            }
            acc
        })
        .collect();
    let tilde: Vec<usize> = (0..d * n).map(|k| push(Instr::Add { a: g[k], b: sums[k / n] })).collect();
    let scaled: Vec<usize> = if fold_scale {
        tilde
    } else {
        let c = rational::rat(1, 120);
        tilde.iter().map(|&t| push(Instr::Scale { c: c.clone(), src: t })).collect()
    };
    let mut outputs = Vec::with_capacity(n * n);
    for rho in 0..n {
        let s = push(Instr::Add { a: scaled[rho], b: scaled[n + rho] });
        let s = push(Instr::Add { a: s, b: scaled[2 * n + rho] });
        let k0 = push(Instr::Neg { src: s });
        outputs.push(Output { lambda: 0, mu: rho, src: k0 });
    }
    for i in 1..n {
        for rho in 0..n {
            outputs.push(Output { lambda: i, mu: rho, src: scaled[(i - 1) * n + rho] });
        }
    }
    KernelIR { form: TensorKind::Advection, degree: 1, dim: 3, nbasis: n, n_inputs: d * n, instructions: ins, outputs }
}

pub fn optimized_keu_ledger() -> KeuLedger {
    let ir = advection_linear3d_ir(false);
    let mut arithmetic = OpCounts::default();
    let mut scaling = OpCounts::default();
    for i in &ir.instructions {
        if matches!(i, Instr::Scale { .. }) {
            scaling += i.cost();
        } else {
            arithmetic += i.cost();
        }
    }
    KeuLedger { arithmetic, scaling, folded_scaling: 1 }
}

/// Dense 4×4 `Kᵉᵘ` for tetrahedral linears via the hand schedule.
pub fn optimized_keu_linear3d(g: &GammaMatrix) -> Result<Vec<f64>> {
    if g.dim != 3 || g.nbasis != 4 {
        return Err(Error::Dimension { expected: 12, got: g.dim * g.nbasis });
    }
    let ir = advection_linear3d_ir(false);
    let outs = interpret(&ir, &g.values)?;
    let mut dense = vec![0.0; 16];
    ir.unpack(&outs, &mut dense);
    Ok(dense)
}
