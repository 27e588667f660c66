//! Emits native kernels for the in-scope forms into `$OUT_DIR/kernels.rs`.

use std::fmt::Write;
use std::path::PathBuf;

use stiffopt::codegen::{emit_source, lower, Backend, KernelIR};
use stiffopt::optimizer::optimize;
use stiffopt::tabulation::TensorKind;
use stiffopt::trilinear::advection_linear3d_ir;

const LAPLACIAN: [(usize, usize); 8] = [(1, 2), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2), (1, 3), (2, 3)];

fn module(out: &mut String, name: &str, ir: &KernelIR) -> String {
    let src = emit_source(ir, Backend::Native).expect("lowered IR is valid");
    let (ni, no) = (ir.n_inputs, ir.outputs.len());
    let upper = src.symbol.to_uppercase();
    writeln!(out, "pub mod {name} {{\n{}", src.text).unwrap();
    writeln!(out, "pub const INPUTS: usize = {ni};\npub const MAPS: usize = {};", ir.maps()).unwrap();
    writeln!(out, "pub const OUTPUTS: &[(usize, usize)] = &{upper}_OUTPUTS;").unwrap();
    writeln!(
        out,
        "pub fn run(g: &[f64], out: &mut [f64]) {{\n    {}(g.try_into().expect(\"{ni} inputs\"), (&mut out[..{no}]).try_into().unwrap());\n}}\n}}",
        src.symbol
    )
    .unwrap();
    src.symbol
}

fn main() {
    println!("cargo:rerun-if-changed=build.rs");
    let mut out = String::new();
    let mut table = Vec::new();
    for (p, d) in LAPLACIAN {
        let (_, graph) = optimize(TensorKind::Laplacian, p, d).expect("supported degree");
        let ir = lower(&graph).expect("graph lowers");
        let name = format!("laplacian_p{p}_{d}d");
        let symbol = module(&mut out, &name, &ir);
        table.push(format!(
            "CompiledKernel {{ name: \"{symbol}\", dim: {d}, nbasis: {}, outputs: {name}::OUTPUTS, func: {name}::run }}",
            ir.nbasis
        ));
    }
    let (_, graph) = optimize(TensorKind::Advection, 1, 3).expect("advection p1 3d");
    module(&mut out, "advection_p1_3d", &lower(&graph).expect("graph lowers"));
    module(&mut out, "advection_p1_3d_hand", &advection_linear3d_ir(false));
    module(&mut out, "advection_p1_3d_hand_folded", &advection_linear3d_ir(true));
    writeln!(out, "pub static LAPLACIAN_KERNELS: &[CompiledKernel] = &[\n    {},\n];", table.join(",\n    ")).unwrap();

    let dir = PathBuf::from(std::env::var_os("OUT_DIR").expect("cargo sets OUT_DIR"));
    std::fs::write(dir.join("kernels.rs"), out).expect("write kernels.rs");
}
