//! Global assembly `A[ι(e,λ), ι(e,μ)] += Kᵉ[λ][μ]` with interchangeable
//! element kernels.
//!
//! Work proceeds in chunks of cells. Within a chunk the geometry and local
//! matrices may be computed in parallel; insertion is always serial and in
//! cell order, so the result does not depend on the thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::codegen::{interpret, KernelIR};
use crate::error::{Error, Result};
use crate::geometry::{geometry_from_vertices, GeometryTensor};
use crate::mesh::{LocalToGlobal, StructuredMesh};
use crate::quadrature::{quadrature_rule, TabulatedGradients};
use crate::sparse::CsrMatrix;
use crate::tabulation::{ReferenceTensor, TensorKind};

/// Computes a dense row-major `nbasis²` element matrix from `G`.
pub trait ElementKernel: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn nbasis(&self) -> usize;
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]);
}

/// `Σ_ξ ω_ξ ∇φ_λ(ξ) · G ∇φ_μ(ξ)` evaluated per element.
pub struct QuadratureKernel {
    tab: TabulatedGradients,
}

impl QuadratureKernel {
    pub fn new(degree: usize, dim: usize) -> Result<Self> {
        let rule = quadrature_rule(dim, 2 * degree)?;
        Ok(Self { tab: TabulatedGradients::new(degree, dim, &rule)? })
    }
}

impl ElementKernel for QuadratureKernel {
    fn name(&self) -> &str {
        "quadrature"
    }
    fn dim(&self) -> usize {
        self.tab.dim
    }
    fn nbasis(&self) -> usize {
        self.tab.nbasis
    }
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]) {
        let (n, d) = (self.tab.nbasis, self.tab.dim);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut gphi = vec![0.0; n * d];
        for (q, w) in self.tab.weights.iter().enumerate() {
            for l in 0..n {
                for m in 0..d {
                    gphi[l * d + m] = w * (0..d).map(|k| g.get(m, k) * self.tab.at(q, l, k)).sum::<f64>();
                }
            }
            for l in 0..n {
                for mu in l..n {
                    let s: f64 = (0..d).map(|m| self.tab.at(q, l, m) * gphi[mu * d + m]).sum();
                    out[l * n + mu] += s;
                }
            }
        }
        for l in 0..n {
            for mu in 0..l {
                out[l * n + mu] = out[mu * n + l];
            }
        }
    }
}

/// Full contraction, `d²` multiply-adds per upper-triangle entry.
pub struct NaiveKernel {
    dim: usize,
    nbasis: usize,
    tensor: Vec<f64>,
}

impl NaiveKernel {
    pub fn new(tensor: &ReferenceTensor) -> Result<Self> {
        tensor.expect_kind(TensorKind::Laplacian)?;
        Ok(Self { dim: tensor.dim, nbasis: tensor.nbasis, tensor: tensor.to_f64() })
    }
}

impl ElementKernel for NaiveKernel {
    fn name(&self) -> &str {
        "naive"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn nbasis(&self) -> usize {
        self.nbasis
    }
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]) {
        let (n, dd) = (self.nbasis, self.dim * self.dim);
        for l in 0..n {
            for mu in l..n {
                let k = (l * n + mu) * dd;
                let v: f64 = self.tensor[k..k + dd].iter().zip(&g.values).map(|(a, b)| a * b).sum();
                out[l * n + mu] = v;
                out[mu * n + l] = v;
            }
        }
    }
}

/// Contraction over the nonzero reference entries only.
pub struct ZeroSkipKernel {
    dim: usize,
    nbasis: usize,
    /// Per upper-triangle entry: `(λ, μ, [(q, K)])`.
    terms: Vec<(usize, usize, Vec<(usize, f64)>)>,
}

impl ZeroSkipKernel {
    pub fn new(tensor: &ReferenceTensor) -> Result<Self> {
        tensor.expect_kind(TensorKind::Laplacian)?;
        let (n, d) = (tensor.nbasis, tensor.dim);
        let t = tensor.to_f64();
        let mut terms = Vec::new();
        for l in 0..n {
            for mu in l..n {
                let k = (l * n + mu) * d * d;
                let nz = (0..d * d).filter(|&q| t[k + q] != 0.0).map(|q| (q, t[k + q])).collect();
                terms.push((l, mu, nz));
            }
        }
        Ok(Self { dim: d, nbasis: n, terms })
    }

    pub fn maps(&self) -> usize {
        self.terms.iter().map(|t| t.2.len()).sum()
    }
}

impl ElementKernel for ZeroSkipKernel {
    fn name(&self) -> &str {
        "zero-skip"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn nbasis(&self) -> usize {
        self.nbasis
    }
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]) {
        let n = self.nbasis;
        for (l, mu, nz) in &self.terms {
            let v: f64 = nz.iter().map(|(q, c)| c * g.values[*q]).sum();
            out[l * n + mu] = v;
            out[mu * n + l] = v;
        }
    }
}

/// Runs generated IR through the interpreter.
pub struct IrKernel {
    ir: KernelIR,
}

impl IrKernel {
    pub fn new(ir: KernelIR) -> Result<Self> {
        if ir.form != TensorKind::Laplacian {
            return Err(Error::KindMismatch { expected: "laplacian", got: ir.form.name() });
        }
        ir.validate()?;
        Ok(Self { ir })
    }
}

impl ElementKernel for IrKernel {
    fn name(&self) -> &str {
        "generated-ir"
    }
    fn dim(&self) -> usize {
        self.ir.dim
    }
    fn nbasis(&self) -> usize {
        self.ir.nbasis
    }
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]) {
        let outs = interpret(&self.ir, &g.values).expect("input sized by dim");
        self.ir.unpack(&outs, out);
    }
}

/// A compiled kernel writing the upper triangle in `outputs` order.
#[derive(Clone, Copy)]
pub struct CompiledKernel {
    pub name: &'static str,
    pub dim: usize,
    pub nbasis: usize,
    pub outputs: &'static [(usize, usize)],
    pub func: fn(&[f64], &mut [f64]),
}

impl ElementKernel for CompiledKernel {
    fn name(&self) -> &str {
        self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn nbasis(&self) -> usize {
        self.nbasis
    }
    fn element_matrix(&self, g: &GeometryTensor, out: &mut [f64]) {
        let mut stack = [0.0; 512];
        let mut heap = Vec::new();
        let packed: &mut [f64] = if self.outputs.len() <= stack.len() {
            &mut stack[..self.outputs.len()]
        } else {
            heap.resize(self.outputs.len(), 0.0);
            &mut heap
        };
        (self.func)(&g.values, packed);
        let n = self.nbasis;
        for (&(l, mu), &v) in self.outputs.iter().zip(packed.iter()) {
            out[l * n + mu] = v;
            out[mu * n + l] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyTimings {
    pub geometry: Duration,
    pub local: Duration,
    pub insert: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Worker threads for the geometry and local phases; 1 runs inline.
    pub threads: usize,
    pub chunk: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { threads: 1, chunk: 4096 }
    }
}

pub fn assemble(mesh: &StructuredMesh, l2g: &LocalToGlobal, kernel: &dyn ElementKernel) -> Result<CsrMatrix> {
    assemble_timed(mesh, l2g, kernel, &AssemblyOptions::default()).map(|(a, _)| a)
}

fn geometry_of(mesh: &StructuredMesh, c: usize) -> Result<GeometryTensor> {
    geometry_from_vertices(&mesh.cell_vertices(c)).map_err(|e| Error::DegenerateCell { cell: c, source: Box::new(e) })
}

pub fn assemble_timed(
    mesh: &StructuredMesh,
    l2g: &LocalToGlobal,
    kernel: &dyn ElementKernel,
    opts: &AssemblyOptions,
) -> Result<(CsrMatrix, AssemblyTimings)> {
    if kernel.dim() != mesh.dim {
        return Err(Error::Dimension { expected: mesh.dim, got: kernel.dim() });
    }
    if kernel.nbasis() != l2g.nbasis {
        return Err(Error::Dimension { expected: l2g.nbasis, got: kernel.nbasis() });
    }
    let n = l2g.nbasis;
    let mut a = CsrMatrix::from_pattern(l2g);
    let mut t = AssemblyTimings::default();
    let pool = if opts.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?,
        )
    } else {
        None
    };
    let chunk = opts.chunk.max(1);
    let mut local = vec![0.0; chunk * n * n];
    let cells = mesh.num_cells();
    let mut start = 0;
    while start < cells {
        let end = (start + chunk).min(cells);
        let range = start..end;

        let t0 = Instant::now();
        let geo: Vec<GeometryTensor> = match &pool {
            Some(p) => p.install(|| range.clone().into_par_iter().map(|c| geometry_of(mesh, c)).collect::<Result<_>>())?,
            None => range.clone().map(|c| geometry_of(mesh, c)).collect::<Result<_>>()?,
        };
        let t1 = Instant::now();
        let buf = &mut local[..(end - start) * n * n];
        match &pool {
            Some(p) => p.install(|| {
                buf.par_chunks_mut(n * n).zip(geo.par_iter()).for_each(|(out, g)| kernel.element_matrix(g, out))
            }),
            None => buf.chunks_mut(n * n).zip(&geo).for_each(|(out, g)| kernel.element_matrix(g, out)),
        }
        let t2 = Instant::now();
        for (k, c) in range.enumerate() {
            a.add_element(l2g.cell(c), &buf[k * n * n..(k + 1) * n * n])?;
        }
        let t3 = Instant::now();
        t.geometry += t1 - t0;
        t.local += t2 - t1;
        t.insert += t3 - t2;
        start = end;
    }
    Ok((a, t))
}
