//! Compiles the emitted Rust and C sources and compares them with the
//! interpreter. Skips a backend when its compiler is not on PATH.

use std::path::Path;
use std::process::Command;

use stiffopt::codegen::{emit_source, interpret, lower, Backend, KernelIR};
use stiffopt::optimizer::optimize;
use stiffopt::tabulation::TensorKind;
use stiffopt::trilinear::advection_linear3d_ir;

const INPUTS: [[f64; 9]; 3] = [
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    [0.7, -0.3, 0.2, -0.3, 1.9, 0.4, 0.2, 0.4, 1.1],
    [2.5, 0.125, -1.0, 0.125, 0.5, 0.0, -1.0, 0.0, 3.0],
];

fn kernels() -> Vec<KernelIR> {
    let mut v: Vec<KernelIR> = [(1, 2), (2, 2), (4, 2), (1, 3), (2, 3)]
        .iter()
        .map(|&(p, d)| lower(&optimize(TensorKind::Laplacian, p, d).unwrap().1).unwrap())
        .collect();
    v.push(lower(&optimize(TensorKind::Advection, 1, 3).unwrap().1).unwrap());
    v.push(advection_linear3d_ir(false));
    v
}

fn input_for(ir: &KernelIR, k: usize) -> Vec<f64> {
    match ir.form {
        TensorKind::Laplacian => {
            let d = ir.dim;
            (0..d * d).map(|q| INPUTS[k][(q / d) * 3 + q % d]).collect()
        }
        TensorKind::Advection => (0..ir.n_inputs).map(|q| INPUTS[k][q % 9] - 0.1 * q as f64).collect(),
    }
}

fn have(tool: &str) -> bool {
    Command::new(tool).arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

fn run(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn compare(ir: &KernelIR, printed: &str) {
    let mut lines = printed.lines();
    for k in 0..INPUTS.len() {
        let want = interpret(ir, &input_for(ir, k)).unwrap();
        let got: Vec<f64> = lines.next().unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0), "{} {a} vs {b}", ir.form.name());
        }
    }
}

fn fmt_array(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ")
}

fn c_program(ir: &KernelIR) -> String {
    let src = emit_source(ir, Backend::PortableCurly).unwrap();
    let mut s = format!("#include <stdio.h>\n{}\nint main(void) {{\n  double out[{}];\n", src.text, ir.outputs.len());
    for k in 0..INPUTS.len() {
        s += &format!("  {{ const double g[] = {{{}}};\n", fmt_array(&input_for(ir, k)));
        s += &format!("    {}(g, out);\n", src.symbol);
        s += &format!("    for (int i = 0; i < {}; ++i) printf(\"%.17g \", out[i]);\n    printf(\"\\n\"); }}\n", ir.outputs.len());
    }
    s + "  return 0;\n}\n"
}

fn rust_program(ir: &KernelIR) -> String {
    let src = emit_source(ir, Backend::Native).unwrap();
    let mut s = format!("{}\nfn main() {{\n    let mut out = [0.0f64; {}];\n", src.text, ir.outputs.len());
    for k in 0..INPUTS.len() {
        s += &format!("    {}(&[{}], &mut out);\n", src.symbol, fmt_array(&input_for(ir, k)));
        s += "    println!(\"{}\", out.iter().map(|v| format!(\"{v:e}\")).collect::<Vec<_>>().join(\" \"));\n";
    }
    s + "}\n"
}

fn build_and_compare(dir: &Path, ir: &KernelIR, ext: &str, program: String, compile: impl Fn(&Path, &Path) -> Command) {
    let name = emit_source(ir, Backend::Native).unwrap().symbol;
    let src = dir.join(format!("{name}.{ext}"));
    let exe = dir.join(format!("{name}_{ext}"));
    std::fs::write(&src, program).unwrap();
    run(&mut compile(&src, &exe));
    compare(ir, &run(&mut Command::new(&exe)));
}

#[test]
fn portable_curly_compiles_and_matches() {
    if !have("cc") {
        eprintln!("cc not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    for ir in kernels() {
        build_and_compare(dir.path(), &ir, "c", c_program(&ir), |src, exe| {
            let mut c = Command::new("cc");
            c.args(["-std=c99", "-O1", "-Wall", "-Werror", "-o"]).arg(exe).arg(src);
            c
        });
    }
}

#[test]
fn native_compiles_and_matches() {
    let rustc = std::env::var("RUSTC").unwrap_or_else(|_| "rustc".into());
    if !have(&rustc) {
        eprintln!("rustc not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    for ir in kernels() {
        build_and_compare(dir.path(), &ir, "rs", rust_program(&ir), |src, exe| {
            let mut c = Command::new(&rustc);
            c.args(["--edition", "2021", "-D", "warnings", "-o"]).arg(exe).arg(src);
            c
        });
    }
}
