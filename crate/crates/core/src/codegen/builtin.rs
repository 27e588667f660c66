//! Hand-written schedule for the degree-2 triangle Laplacian.
//!
//! With `a, b, c = G₁₁/6, G₁₂/6, G₂₂/6` the element matrix is assembled from
//! a handful of shared intermediates:
//!
//! ```text
//! γ₁₁ = a + b   γ₁₂ = a + c   γ₂₂ = b + c
//! γ₀ = -4γ₁₁    γ₁ = -4γ₂₂    γ₃ = 8b    γ₂ = γ₃ + 8γ₁₂
//! ```
//!
//! Two entries that would otherwise need their own sums reduce to `2γ₁`
//! and `2γ₀`.

use super::{interpret, Instr, KernelIR, Output};
use crate::error::{Error, Result};
use crate::geometry::GeometryTensor;
use crate::optimizer::OpCounts;
use crate::rational::{int, rat};
use crate::tabulation::TensorKind;

/// Node order the schedule is written in, as indices into this crate's
/// degree-2 triangle ordering: (1,0), (0,1), (0,0), (½,0), (½,½), (0,½).
pub const SCHEDULE_ORDER_QUADRATIC: [usize; 6] = [1, 2, 0, 3, 5, 4];

const PRESCALE_OPS: usize = 3;

pub fn builtin_quadratic_ir() -> KernelIR {
    let mut ins: Vec<Instr> = Vec::new();
    let mut push = |i: Instr| {
        ins.push(i);
        ins.len() - 1
    };
    let g11 = push(Instr::Load { input: 0 });
    let g12 = push(Instr::Load { input: 1 });
    let g22 = push(Instr::Load { input: 3 });
    let sixth = rat(1, 6);
    let a = push(Instr::Scale { c: sixth.clone(), src: g11 });
    let b = push(Instr::Scale { c: sixth.clone(), src: g12 });
    let c = push(Instr::Scale { c: sixth, src: g22 });

    let y11 = push(Instr::Add { a, b });
    let y12 = push(Instr::Add { a, b: c });
    let y22 = push(Instr::Add { a: b, b: c });
    let y0 = push(Instr::Scale { c: int(-4), src: y11 });
    let y1 = push(Instr::Scale { c: int(-4), src: y22 });
    let y3 = push(Instr::Scale { c: int(8), src: b });
    let y2 = push(Instr::Fma { c: int(8), src: y12, acc: y3 });
    let e11 = push(Instr::Scale { c: int(3), src: a });
    let e12 = push(Instr::Neg { src: b });
    let e15 = push(Instr::Scale { c: int(4), src: b });
    let e22 = push(Instr::Scale { c: int(3), src: c });
    let s = push(Instr::Add { a: y11, b: y22 });
    let e33 = push(Instr::Scale { c: int(3), src: s });
    let e45 = push(Instr::Scale { c: int(2), src: y1 });
    let e56 = push(Instr::Scale { c: int(2), src: y0 });
    let zero = push(Instr::Const { value: int(0) });

    // Upper triangle in the schedule's own numbering.
    let table: [[usize; 6]; 6] = [
        [e11, e12, y11, y0, e15, zero],
        [0, e22, y22, zero, e15, y1],
        [0, 0, e33, y0, zero, y1],
        [0, 0, 0, y2, e45, y3],
        [0, 0, 0, 0, y2, e56],
        [0, 0, 0, 0, 0, y2],
    ];
    let mut outputs = Vec::with_capacity(21);
    for (i, row) in table.iter().enumerate() {
        for (j, &src) in row.iter().enumerate().skip(i) {
            let (p, q) = (SCHEDULE_ORDER_QUADRATIC[i], SCHEDULE_ORDER_QUADRATIC[j]);
            outputs.push(Output { lambda: p.min(q), mu: p.max(q), src });
        }
    }
    outputs.sort_by_key(|o| (o.lambda, o.mu));
    KernelIR { form: TensorKind::Laplacian, degree: 2, dim: 2, nbasis: 6, n_inputs: 4, instructions: ins, outputs }
}

/// `(schedule, scaling)`: operations of the schedule proper, producing
/// `6·Kᵉ`, and the multiplies spent folding in the `1/6`.
pub fn builtin_quadratic_ledger() -> (OpCounts, OpCounts) {
    let ir = builtin_quadratic_ir();
    let mut scaling = OpCounts::default();
    let mut schedule = OpCounts::default();
    let mut arith = 0;
    for i in &ir.instructions {
        let c = i.cost();
        if c.total() == 0 {
            continue;
        }
        if arith < PRESCALE_OPS {
            scaling += c;
        } else {
            schedule += c;
        }
        arith += 1;
    }
    (schedule, scaling)
}

/// Dense 6×6 element matrix from the hand schedule.
pub fn builtin_quadratic_kernel(g: &GeometryTensor) -> Result<Vec<f64>> {
    if g.dim != 2 {
        return Err(Error::Dimension { expected: 2, got: g.dim });
    }
    let ir = builtin_quadratic_ir();
    let outs = interpret(&ir, &g.values)?;
    let mut dense = vec![0.0; 36];
    ir.unpack(&outs, &mut dense);
    Ok(dense)
}
