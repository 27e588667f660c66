//! Dependency discovery among the blocks of a reference tensor.
//!
//! Each output entry of the element matrix is the dot product of a small
//! block vector with the per-element input (the geometry tensor, or the γ
//! matrix for advection). The passes in [`run_passes`] look for blocks whose
//! dot product can be derived cheaply from another one: zero, equal,
//! transposed, one nonzero, colinear, one or two entries away, or a linear
//! combination of two others. Everything else is contracted directly.

pub mod combo;
pub mod linalg;
mod passes;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::rational::{self, Rational};
use crate::tabulation::{ReferenceTensor, TensorKind};

pub use combo::{ComboOp, OpCounts};
pub use linalg::{check_lincomb, plane_key};
pub use passes::{run_passes, run_passes_with, PassConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Owner {
    /// Output entry of the element matrix.
    Entry { row: usize, col: usize },
    /// Auxiliary vector offered to the edit-distance passes; not an output.
    Helper { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub owner: Owner,
    pub values: Vec<Rational>,
}

impl BlockVector {
    pub fn normalize_direction(&self) -> Result<BlockVector> {
        Ok(BlockVector { owner: self.owner, values: linalg::direction(&self.values)? })
    }

    pub fn dot_f64(&self, input: &[f64]) -> f64 {
        self.values.iter().zip(input).map(|(c, x)| rational::to_f64(c) * x).sum()
    }

    pub fn dot(&self, input: &[Rational]) -> Rational {
        self.values.iter().zip(input).map(|(c, x)| c * x).sum()
    }
}

pub fn normalize_direction(v: &BlockVector) -> Result<BlockVector> {
    v.normalize_direction()
}

/// Blocks of one tensor together with what the kernel's input looks like.
#[derive(Debug, Clone)]
pub struct BlockSet {
    pub form: TensorKind,
    pub degree: usize,
    pub dim: usize,
    pub nbasis: usize,
    /// Length of the kernel input vector (and of every block).
    pub input_len: usize,
    /// Input is a symmetric d×d matrix stored row-major; enables the transpose pass.
    pub symmetric_input: bool,
    pub blocks: Vec<BlockVector>,
}

impl BlockSet {
    pub fn entries(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b.owner, Owner::Entry { .. })).count()
    }
}

/// Upper-triangle blocks `K[λ][μ]` (λ ≤ μ) of a Laplacian tensor, flattened row-major.
pub fn blocks_of(tensor: &ReferenceTensor) -> Result<BlockSet> {
    tensor.expect_kind(TensorKind::Laplacian)?;
    let (n, d) = (tensor.nbasis, tensor.dim);
    let mut blocks = Vec::with_capacity(n * (n + 1) / 2);
    for l in 0..n {
        for mu in l..n {
            let values = (0..d * d).map(|k| tensor.get(l, mu, k / d, k % d).clone()).collect();
            blocks.push(BlockVector { owner: Owner::Entry { row: l, col: mu }, values });
        }
    }
    Ok(BlockSet {
        form: TensorKind::Laplacian,
        degree: tensor.degree,
        dim: d,
        nbasis: n,
        input_len: d * d,
        symmetric_input: true,
        blocks,
    })
}

/// Per-output vectors of `K^{e,u}[μ][ρ] = Σ_{m,λ} γ[m][λ] N[λ][μ][ρ][m]`, indexed
/// `(m, λ)` with `m` major, followed by one helper per `m`: the all-ones row
/// over λ, scaled by the tensor's smallest nonzero magnitude.
pub fn advection_blocks(tensor: &ReferenceTensor) -> Result<BlockSet> {
    tensor.expect_kind(TensorKind::Advection)?;
    let (n, d) = (tensor.nbasis, tensor.dim);
    let mut blocks = Vec::with_capacity(n * n + d);
    for mu in 0..n {
        for rho in 0..n {
            let values = (0..d * n).map(|k| tensor.get(k % n, mu, rho, k / n).clone()).collect();
            blocks.push(BlockVector { owner: Owner::Entry { row: mu, col: rho }, values });
        }
    }
    let unit = tensor
        .entries
        .iter()
        .filter(|e| !num_traits::Zero::is_zero(*e))
        .map(num_traits::Signed::abs)
        .min()
        .unwrap_or_else(rational::one);
    for m in 0..d {
        let values = (0..d * n)
            .map(|k| if k / n == m { unit.clone() } else { rational::zero() })
            .collect();
        blocks.push(BlockVector { owner: Owner::Helper { index: m }, values });
    }
    Ok(BlockSet {
        form: TensorKind::Advection,
        degree: tensor.degree,
        dim: d,
        nbasis: n,
        input_len: d * n,
        symmetric_input: false,
        blocks,
    })
}

/// How a block's dot product is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DependencyClass {
    Zero,
    Equal { of: usize },
    TransposeOf { of: usize },
    OneEntry { pos: usize, coeff: Rational },
    Colinear { of: usize, alpha: Rational },
    /// `v = sign·w + δ·e_pos`
    EditDist1 { of: usize, negate: bool, pos: usize, delta: Rational },
    /// `v = sign·w + δ₁·e_pos₁ + δ₂·e_pos₂`
    EditDist2 { of: usize, negate: bool, pos1: usize, delta1: Rational, pos2: usize, delta2: Rational },
    LinComb { of1: usize, c1: Rational, of2: usize, c2: Rational },
    Default { terms: Vec<(usize, Rational)> },
}

/// Operand of a node's combination: another node's value or an input entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Node(usize),
    Input(usize),
}

impl DependencyClass {
    pub fn label(&self) -> &'static str {
        match self {
            DependencyClass::Zero => "zero",
            DependencyClass::Equal { .. } => "eq",
            DependencyClass::TransposeOf { .. } => "eq_t",
            DependencyClass::OneEntry { .. } => "one_entry",
            DependencyClass::Colinear { .. } => "col",
            DependencyClass::EditDist1 { .. } => "ed1",
            DependencyClass::EditDist2 { .. } => "ed2",
            DependencyClass::LinComb { .. } => "lc",
            DependencyClass::Default { .. } => "default",
        }
    }

    pub fn references(&self) -> Vec<usize> {
        match self {
            DependencyClass::Equal { of }
            | DependencyClass::TransposeOf { of }
            | DependencyClass::Colinear { of, .. }
            | DependencyClass::EditDist1 { of, .. }
            | DependencyClass::EditDist2 { of, .. } => vec![*of],
            DependencyClass::LinComb { of1, of2, .. } => vec![*of1, *of2],
            _ => Vec::new(),
        }
    }

    /// The node's value as `Σ c · operand`. Aliases (`Equal`, `TransposeOf`)
    /// return `None`: they reuse the referenced value without any work.
    pub fn combination(&self) -> Option<Vec<(Rational, Operand)>> {
        let sign = |neg: bool| if neg { rational::int(-1) } else { rational::one() };
        Some(match self {
            DependencyClass::Zero => Vec::new(),
            DependencyClass::Equal { .. } | DependencyClass::TransposeOf { .. } => return None,
            DependencyClass::OneEntry { pos, coeff } => vec![(coeff.clone(), Operand::Input(*pos))],
            DependencyClass::Colinear { of, alpha } => vec![(alpha.clone(), Operand::Node(*of))],
            DependencyClass::EditDist1 { of, negate, pos, delta } => {
                vec![(sign(*negate), Operand::Node(*of)), (delta.clone(), Operand::Input(*pos))]
            }
            DependencyClass::EditDist2 { of, negate, pos1, delta1, pos2, delta2 } => vec![
                (sign(*negate), Operand::Node(*of)),
                (delta1.clone(), Operand::Input(*pos1)),
                (delta2.clone(), Operand::Input(*pos2)),
            ],
            DependencyClass::LinComb { of1, c1, of2, c2 } => {
                vec![(c1.clone(), Operand::Node(*of1)), (c2.clone(), Operand::Node(*of2))]
            }
            DependencyClass::Default { terms } => {
                terms.iter().map(|(p, c)| (c.clone(), Operand::Input(*p))).collect()
            }
        })
    }

    pub fn plan(&self) -> Vec<ComboOp<Operand>> {
        self.combination().map(|t| combo::plan(&t)).unwrap_or_default()
    }

    /// Upper bound on the multiply-add slots this class may use.
    pub fn slot_bound(&self, input_len: usize) -> usize {
        match self {
            DependencyClass::Zero | DependencyClass::Equal { .. } | DependencyClass::TransposeOf { .. } => 0,
            DependencyClass::OneEntry { .. }
            | DependencyClass::Colinear { .. }
            | DependencyClass::EditDist1 { .. } => 1,
            DependencyClass::EditDist2 { .. } | DependencyClass::LinComb { .. } => 2,
            DependencyClass::Default { .. } => input_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyNode {
    pub block: BlockVector,
    pub class: DependencyClass,
    pub cost: OpCounts,
    /// Multiply-add slots charged to this node.
    pub maps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub zero: usize,
    pub eq: usize,
    pub eq_t: usize,
    pub one_entry: usize,
    pub col: usize,
    pub ed1: usize,
    pub ed2: usize,
    pub lc: usize,
    pub default: usize,
}

impl Histogram {
    pub fn record(&mut self, class: &DependencyClass) {
        let slot = match class {
            DependencyClass::Zero => &mut self.zero,
            DependencyClass::Equal { .. } => &mut self.eq,
            DependencyClass::TransposeOf { .. } => &mut self.eq_t,
            DependencyClass::OneEntry { .. } => &mut self.one_entry,
            DependencyClass::Colinear { .. } => &mut self.col,
            DependencyClass::EditDist1 { .. } => &mut self.ed1,
            DependencyClass::EditDist2 { .. } => &mut self.ed2,
            DependencyClass::LinComb { .. } => &mut self.lc,
            DependencyClass::Default { .. } => &mut self.default,
        };
        *slot += 1;
    }

    pub fn total(&self) -> usize {
        self.zero + self.eq + self.eq_t + self.one_entry + self.col + self.ed1 + self.ed2 + self.lc + self.default
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyGraph {
    pub form: TensorKind,
    pub degree: usize,
    pub dim: usize,
    pub nbasis: usize,
    pub input_len: usize,
    pub symmetric_input: bool,
    pub nodes: Vec<DependencyNode>,
    /// Topological order: every referenced node precedes its dependents.
    pub order: Vec<usize>,
    pub total_maps: usize,
    /// Histogram over output entries only.
    pub histogram: Histogram,
}

impl DependencyGraph {
    pub fn entries(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.block.owner, Owner::Entry { .. })).count()
    }

    pub fn helpers(&self) -> usize {
        self.nodes.len() - self.entries()
    }

    pub fn cost(&self) -> OpCounts {
        let mut c = OpCounts::default();
        for n in &self.nodes {
            c += n.cost;
        }
        c
    }

    /// Evaluates every node exactly through its class relation, in graph order.
    pub fn evaluate_exact(&self, input: &[Rational]) -> Vec<Rational> {
        let mut vals = vec![rational::zero(); self.nodes.len()];
        for &i in &self.order {
            let class = &self.nodes[i].class;
            vals[i] = match class {
                DependencyClass::Equal { of } | DependencyClass::TransposeOf { of } => vals[*of].clone(),
                _ => combo::eval(&class.plan(), |op| match op {
                    Operand::Node(k) => vals[*k].clone(),
                    Operand::Input(p) => input[*p].clone(),
                }),
            };
        }
        vals
    }
}

/// Summary of the optimizer's result for one tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub form: &'static str,
    pub degree: usize,
    pub dim: usize,
    pub entries: usize,
    pub base_maps: usize,
    /// Wire name fixed by the report format.
    #[serde(rename = "ferari_maps")]
    pub optimized_maps: usize,
    pub histogram: Histogram,
    pub helpers: usize,
    pub ops: OpCounts,
}

pub fn map_count(graph: &DependencyGraph) -> CostReport {
    let entries = graph.entries();
    CostReport {
        form: graph.form.name(),
        degree: graph.degree,
        dim: graph.dim,
        entries,
        base_maps: graph.input_len * entries,
        optimized_maps: graph.total_maps,
        histogram: graph.histogram,
        helpers: graph.helpers(),
        ops: graph.cost(),
    }
}

impl CostReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

/// Tabulate, split into blocks and run every pass for `(form, degree, dim)`.
pub fn optimize(form: TensorKind, degree: usize, dim: usize) -> Result<(ReferenceTensor, DependencyGraph)> {
    let (tensor, blocks) = match form {
        TensorKind::Laplacian => {
            let t = crate::tabulation::reference_stiffness_tensor(degree, dim)?;
            let b = blocks_of(&t)?;
            (t, b)
        }
        TensorKind::Advection => {
            let t = crate::tabulation::reference_advection_tensor(degree, dim)?;
            let b = advection_blocks(&t)?;
            (t, b)
        }
    };
    let graph = run_passes(&blocks)?;
    Ok((tensor, graph))
}
