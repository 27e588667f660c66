//! Straight-line kernels: lowering a dependency graph to a flat scalar IR,
//! interpreting it, and printing it as source text.
//!
//! Every temporary is assigned exactly once. Instruction `i` defines
//! temporary `i`; operands always name earlier temporaries. Kernels produce
//! only the outputs the graph owns (the upper triangle for the symmetric
//! Laplacian form, every entry for advection); [`KernelIR::unpack`] fills a
//! dense matrix from them.

mod builtin;
mod emit;

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::GeometryTensor;
use crate::optimizer::{ComboOp, DependencyClass, DependencyGraph, OpCounts, Operand, Owner};
use crate::rational::{self, Rational};
use crate::tabulation::TensorKind;

pub use builtin::{builtin_quadratic_ir, builtin_quadratic_kernel, builtin_quadratic_ledger, SCHEDULE_ORDER_QUADRATIC};
pub use emit::{emit_source, kernel_name, parse_ir_json, Backend, KernelMetadata, KernelSource};

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Load { input: usize },
    Const { value: Rational },
    Neg { src: usize },
    Scale { c: Rational, src: usize },
    Add { a: usize, b: usize },
    /// `a - b`
    Sub { a: usize, b: usize },
    /// `acc + c·src`
    Fma { c: Rational, src: usize, acc: usize },
    /// `c·src - acc`
    Fms { c: Rational, src: usize, acc: usize },
}

impl Instr {
    pub fn operands(&self) -> Vec<usize> {
        match self {
            Instr::Load { .. } | Instr::Const { .. } => vec![],
            Instr::Neg { src } | Instr::Scale { src, .. } => vec![*src],
            Instr::Add { a, b } | Instr::Sub { a, b } => vec![*a, *b],
            Instr::Fma { src, acc, .. } | Instr::Fms { src, acc, .. } => vec![*src, *acc],
        }
    }

    pub fn cost(&self) -> OpCounts {
        let (negs, mults, adds) = match self {
            Instr::Load { .. } | Instr::Const { .. } => (0, 0, 0),
            Instr::Neg { .. } => (1, 0, 0),
            Instr::Scale { .. } => (0, 1, 0),
            Instr::Add { .. } | Instr::Sub { .. } => (0, 0, 1),
            Instr::Fma { .. } | Instr::Fms { .. } => (0, 1, 1),
        };
        OpCounts { negs, mults, adds }
    }

    fn is_arith(&self) -> bool {
        !matches!(self, Instr::Load { .. } | Instr::Const { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Output {
    pub lambda: usize,
    pub mu: usize,
    pub src: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelIR {
    pub form: TensorKind,
    pub degree: usize,
    pub dim: usize,
    pub nbasis: usize,
    /// Laplacian: `G` row-major (d²). Advection: `γ[m][λ]` with `m` major.
    pub n_inputs: usize,
    pub instructions: Vec<Instr>,
    pub outputs: Vec<Output>,
}

impl KernelIR {
    pub fn n_temps(&self) -> usize {
        self.instructions.len()
    }

    pub fn cost(&self) -> OpCounts {
        let mut c = OpCounts::default();
        for i in &self.instructions {
            c += i.cost();
        }
        c
    }

    /// Arithmetic instructions, each one multiply-add slot.
    pub fn maps(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_arith()).count()
    }

    pub fn symmetric(&self) -> bool {
        self.form == TensorKind::Laplacian
    }

    /// Checks single assignment, operand order, input bounds and that every
    /// owned output is stored exactly once.
    pub fn validate(&self) -> Result<()> {
        for (t, ins) in self.instructions.iter().enumerate() {
            if ins.operands().iter().any(|&s| s >= t) {
                return Err(Error::Internal(format!("temporary {t} uses an undefined operand")));
            }
            if let Instr::Load { input } = ins {
                if *input >= self.n_inputs {
                    return Err(Error::Internal(format!("load of input {input} out of range")));
                }
            }
        }
        let mut seen = vec![false; self.nbasis * self.nbasis];
        for o in &self.outputs {
            if o.src >= self.n_temps() || o.lambda >= self.nbasis || o.mu >= self.nbasis {
                return Err(Error::Internal("output out of range".into()));
            }
            if self.symmetric() && o.lambda > o.mu {
                return Err(Error::Internal("symmetric kernel stores below the diagonal".into()));
            }
            let k = o.lambda * self.nbasis + o.mu;
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::Internal(format!("output ({}, {}) stored twice", o.lambda, o.mu)));
            }
        }
        let expected = if self.symmetric() { self.nbasis * (self.nbasis + 1) / 2 } else { self.nbasis * self.nbasis };
        if self.outputs.len() != expected {
            return Err(Error::Dimension { expected, got: self.outputs.len() });
        }
        Ok(())
    }

    /// Writes the outputs into a dense row-major `nbasis²` matrix, mirroring
    /// the upper triangle for symmetric kernels.
    pub fn unpack(&self, outs: &[f64], dense: &mut [f64]) {
        let n = self.nbasis;
        for (o, &v) in self.outputs.iter().zip(outs) {
            dense[o.lambda * n + o.mu] = v;
            if self.symmetric() {
                dense[o.mu * n + o.lambda] = v;
            }
        }
    }
}

/// Lowers a graph to IR, following its topological order and each node's
/// combination plan. Aliases (`Equal`, `TransposeOf`) cost nothing: they
/// reuse the referenced temporary.
pub fn lower(graph: &DependencyGraph) -> Result<KernelIR> {
    let mut instructions: Vec<Instr> = Vec::new();
    let mut loads: HashMap<usize, usize> = HashMap::new();
    let mut zero: Option<usize> = None;
    let mut value: Vec<Option<usize>> = vec![None; graph.nodes.len()];

    for &i in &graph.order {
        let class = &graph.nodes[i].class;
        let temp = match class {
            DependencyClass::Equal { of } | DependencyClass::TransposeOf { of } => {
                value[*of].ok_or_else(|| Error::Internal(format!("node {i} precedes its reference")))?
            }
            _ => {
                let plan = class.plan();
                let mut operand = |op: &Operand, instructions: &mut Vec<Instr>| -> Result<usize> {
                    match *op {
                        Operand::Node(k) => {
                            value[k].ok_or_else(|| Error::Internal(format!("node {i} precedes its reference")))
                        }
                        Operand::Input(p) => Ok(*loads.entry(p).or_insert_with(|| {
                            instructions.push(Instr::Load { input: p });
                            instructions.len() - 1
                        })),
                    }
                };
                if plan.is_empty() {
                    *zero.get_or_insert_with(|| {
                        instructions.push(Instr::Const { value: rational::zero() });
                        instructions.len() - 1
                    })
                } else {
                    let mut acc = usize::MAX;
                    for op in &plan {
                        let ins = match op {
                            ComboOp::Take(s) => {
                                acc = operand(s, &mut instructions)?;
                                continue;
                            }
                            ComboOp::Scale(c, s) => Instr::Scale { c: c.clone(), src: operand(s, &mut instructions)? },
                            ComboOp::Add(s) => Instr::Add { a: acc, b: operand(s, &mut instructions)? },
                            ComboOp::Sub(s) => Instr::Sub { a: acc, b: operand(s, &mut instructions)? },
                            ComboOp::RevSub(s) => Instr::Sub { a: operand(s, &mut instructions)?, b: acc },
                            ComboOp::Fma(c, s) => Instr::Fma { c: c.clone(), src: operand(s, &mut instructions)?, acc },
                            ComboOp::Fms(c, s) => Instr::Fms { c: c.clone(), src: operand(s, &mut instructions)?, acc },
                            ComboOp::Neg => Instr::Neg { src: acc },
                        };
                        instructions.push(ins);
                        acc = instructions.len() - 1;
                    }
                    acc
                }
            }
        };
        value[i] = Some(temp);
    }

    let mut outputs = Vec::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        if let Owner::Entry { row, col } = node.block.owner {
            let src = value[i].ok_or_else(|| Error::Internal(format!("node {i} never computed")))?;
            outputs.push(Output { lambda: row, mu: col, src });
        }
    }
    let ir = KernelIR {
        form: graph.form,
        degree: graph.degree,
        dim: graph.dim,
        nbasis: graph.nbasis,
        n_inputs: graph.input_len,
        instructions,
        outputs,
    };
    ir.validate()?;
    Ok(ir)
}

fn run<T: Clone>(
    ir: &KernelIR,
    input: &[T],
    constant: impl Fn(&Rational) -> T,
    neg: impl Fn(&T) -> T,
    mul: impl Fn(&T, &T) -> T,
    add: impl Fn(&T, &T) -> T,
    sub: impl Fn(&T, &T) -> T,
) -> Result<Vec<T>> {
    if input.len() != ir.n_inputs {
        return Err(Error::Dimension { expected: ir.n_inputs, got: input.len() });
    }
    let mut t: Vec<T> = Vec::with_capacity(ir.n_temps());
    for ins in &ir.instructions {
        let v = match ins {
            Instr::Load { input: p } => input[*p].clone(),
            Instr::Const { value } => constant(value),
            Instr::Neg { src } => neg(&t[*src]),
            Instr::Scale { c, src } => mul(&constant(c), &t[*src]),
            Instr::Add { a, b } => add(&t[*a], &t[*b]),
            Instr::Sub { a, b } => sub(&t[*a], &t[*b]),
            Instr::Fma { c, src, acc } => add(&t[*acc], &mul(&constant(c), &t[*src])),
            Instr::Fms { c, src, acc } => sub(&mul(&constant(c), &t[*src]), &t[*acc]),
        };
        t.push(v);
    }
    Ok(ir.outputs.iter().map(|o| t[o.src].clone()).collect())
}

/// Evaluates the IR in instruction order; results follow `ir.outputs`.
pub fn interpret(ir: &KernelIR, input: &[f64]) -> Result<Vec<f64>> {
    run(ir, input, rational::to_f64, |a| -a, |a, b| a * b, |a, b| a + b, |a, b| a - b)
}

/// Exact evaluation; used to check that the graph relations hold identically.
pub fn interpret_exact(ir: &KernelIR, input: &[Rational]) -> Result<Vec<Rational>> {
    run(ir, input, Rational::clone, |a| -a, |a, b| a * b, |a, b| a + b, |a, b| a - b)
}

/// Interprets a Laplacian kernel on a geometry tensor.
pub fn interpret_geometry(ir: &KernelIR, g: &GeometryTensor) -> Result<Vec<f64>> {
    if g.dim != ir.dim {
        return Err(Error::Dimension { expected: ir.dim, got: g.dim });
    }
    interpret(ir, &g.values)
}

pub fn ir_to_json(ir: &KernelIR) -> Value {
    let instr: Vec<Value> = ir
        .instructions
        .iter()
        .map(|ins| {
            let (op, args, c): (&str, Vec<usize>, Option<&Rational>) = match ins {
                Instr::Load { input } => ("load", vec![*input], None),
                Instr::Const { value } => ("const", vec![], Some(value)),
                Instr::Neg { src } => ("neg", vec![*src], None),
                Instr::Scale { c, src } => ("scale", vec![*src], Some(c)),
                Instr::Add { a, b } => ("add", vec![*a, *b], None),
                Instr::Sub { a, b } => ("sub", vec![*a, *b], None),
                Instr::Fma { c, src, acc } => ("fma", vec![*src, *acc], Some(c)),
                Instr::Fms { c, src, acc } => ("fms", vec![*src, *acc], Some(c)),
            };
            let mut o = json!({ "op": op, "args": args });
            if let Some(c) = c {
                o["const"] = rational::to_json(c);
            }
            o
        })
        .collect();
    json!({
        "format": emit::IR_FORMAT,
        "form": ir.form.name(),
        "degree": ir.degree,
        "dim": ir.dim,
        "nbasis": ir.nbasis,
        "inputs": ir.n_inputs,
        "temps": ir.n_temps(),
        "instructions": instr,
        "outputs": ir.outputs.iter().map(|o| json!({"lambda": o.lambda, "mu": o.mu, "src": o.src})).collect::<Vec<_>>(),
    })
}

/// Dense `nbasis²` element matrix by direct contraction of the reference
/// tensor with the kernel input, as the kernels' reference semantics.
pub fn contract(tensor: &crate::tabulation::ReferenceTensor, input: &[f64]) -> Result<Vec<f64>> {
    let (n, d) = (tensor.nbasis, tensor.dim);
    let t = tensor.to_f64();
    let mut out = vec![0.0; n * n];
    match tensor.kind {
        TensorKind::Laplacian => {
            if input.len() != d * d {
                return Err(Error::Dimension { expected: d * d, got: input.len() });
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o = (0..d * d).map(|q| t[k * d * d + q] * input[q]).sum();
            }
        }
        TensorKind::Advection => {
            if input.len() != d * n {
                return Err(Error::Dimension { expected: d * n, got: input.len() });
            }
            for mu in 0..n {
                for rho in 0..n {
                    let mut s = 0.0;
                    for m in 0..d {
                        for l in 0..n {
                            s += input[m * n + l] * t[tensor.index(l, mu, rho, m)];
                        }
                    }
                    out[mu * n + rho] = s;
                }
            }
        }
    }
    Ok(out)
}
