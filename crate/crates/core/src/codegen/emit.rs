//! Source text for a [`KernelIR`].

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

use super::{ir_to_json, Instr, KernelIR, Output};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::tabulation::TensorKind;

pub const IR_FORMAT: &str = "stiffopt-ir/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Rust.
    Native,
    /// C99.
    PortableCurly,
    IrJson,
}

impl Backend {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "native" | "rust" => Ok(Backend::Native),
            "portable-curly" | "c" => Ok(Backend::PortableCurly),
            "ir-json" | "json" => Ok(Backend::IrJson),
            other => Err(Error::UnknownBackend(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Native => "native",
            Backend::PortableCurly => "portable-curly",
            Backend::IrJson => "ir-json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelMetadata {
    pub form: &'static str,
    pub degree: usize,
    pub dim: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub maps: usize,
    pub negs: usize,
    pub mults: usize,
    pub adds: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelSource {
    pub text: String,
    pub symbol: String,
    pub backend: Backend,
    pub metadata: KernelMetadata,
}

pub fn kernel_name(form: TensorKind, degree: usize, dim: usize) -> String {
    format!("k_{}_p{}_{}d", form.name(), degree, dim)
}

/// 17 significant digits: enough to round-trip every f64.
fn lit(c: &Rational) -> String {
    format!("{:.16e}", rational::to_f64(c))
}

fn expr(ins: &Instr, input: &str) -> String {
    match ins {
        Instr::Load { input: p } => format!("{input}[{p}]"),
        Instr::Const { value } => lit(value),
        Instr::Neg { src } => format!("-t{src}"),
        Instr::Scale { c, src } => format!("{} * t{src}", lit(c)),
        Instr::Add { a, b } => format!("t{a} + t{b}"),
        Instr::Sub { a, b } => format!("t{a} - t{b}"),
        Instr::Fma { c, src, acc } => format!("t{acc} + {} * t{src}", lit(c)),
        Instr::Fms { c, src, acc } => format!("{} * t{src} - t{acc}", lit(c)),
    }
}

fn header(ir: &KernelIR, meta: &KernelMetadata, symbol: &str, open: &str, line: &str, close: &str) -> String {
    let layout = match ir.form {
        TensorKind::Laplacian => "inputs: G row-major; outputs: upper triangle (lambda <= mu), row-major",
        TensorKind::Advection => "inputs: gamma[m][lambda], m major; outputs: every (mu, rho), row-major",
    };
    let mut s = String::new();
    let _ = writeln!(s, "{open}{symbol}: {} form, degree {}, dim {}", meta.form, meta.degree, meta.dim);
    let _ = writeln!(s, "{line}{layout}");
    let _ = writeln!(
        s,
        "{line}{} inputs, {} outputs, {} maps ({} negs, {} mults, {} adds){close}",
        meta.inputs, meta.outputs, meta.maps, meta.negs, meta.mults, meta.adds
    );
    s
}

fn outputs_const(outputs: &[Output]) -> String {
    outputs.iter().map(|o| format!("({}, {})", o.lambda, o.mu)).collect::<Vec<_>>().join(", ")
}

pub fn emit_source(ir: &KernelIR, backend: Backend) -> Result<KernelSource> {
    ir.validate()?;
    let symbol = kernel_name(ir.form, ir.degree, ir.dim);
    let cost = ir.cost();
    let metadata = KernelMetadata {
        form: ir.form.name(),
        degree: ir.degree,
        dim: ir.dim,
        inputs: ir.n_inputs,
        outputs: ir.outputs.len(),
        maps: ir.maps(),
        negs: cost.negs,
        mults: cost.mults,
        adds: cost.adds,
    };
    let (ni, no) = (ir.n_inputs, ir.outputs.len());
    let mut text = String::new();
    match backend {
        Backend::Native => {
            text += &header(ir, &metadata, &symbol, "// ", "// ", "");
            let upper = symbol.to_uppercase();
            let _ = writeln!(text, "pub const {upper}_OUTPUTS: [(usize, usize); {no}] = [{}];", outputs_const(&ir.outputs));
            let _ = writeln!(text, "#[allow(clippy::all, unused_variables)]");
            let _ = writeln!(text, "pub fn {symbol}(g: &[f64; {ni}], out: &mut [f64; {no}]) {{");
            for (t, ins) in ir.instructions.iter().enumerate() {
                let _ = writeln!(text, "    let t{t}: f64 = {};", expr(ins, "g"));
            }
            for (k, o) in ir.outputs.iter().enumerate() {
                let _ = writeln!(text, "    out[{k}] = t{};", o.src);
            }
            text += "}\n";
        }
        Backend::PortableCurly => {
            text += &header(ir, &metadata, &symbol, "/* ", " * ", " */");
            let _ = writeln!(text, "void {symbol}(const double *g, double *out)\n{{");
            for (t, ins) in ir.instructions.iter().enumerate() {
                let _ = writeln!(text, "    const double t{t} = {};", expr(ins, "g"));
            }
            for (k, o) in ir.outputs.iter().enumerate() {
                let _ = writeln!(text, "    out[{k}] = t{};", o.src);
            }
            text += "}\n";
        }
        Backend::IrJson => {
            let mut v = ir_to_json(ir);
            v["symbol"] = Value::String(symbol.clone());
            v["metadata"] = serde_json::to_value(&metadata)?;
            text = serde_json::to_string_pretty(&v)?;
            text.push('\n');
        }
    }
    Ok(KernelSource { text, symbol, backend, metadata })
}

fn field(v: &Value, k: &str) -> Result<usize> {
    v[k].as_u64().map(|x| x as usize).ok_or_else(|| Error::Format(format!("missing or invalid `{k}`")))
}

/// Inverse of the `ir-json` backend.
pub fn parse_ir_json(text: &str) -> Result<KernelIR> {
    let v: Value = serde_json::from_str(text)?;
    if v["format"].as_str() != Some(IR_FORMAT) {
        return Err(Error::Format(format!("expected format `{IR_FORMAT}`")));
    }
    let form = TensorKind::parse(v["form"].as_str().ok_or_else(|| Error::Format("missing `form`".into()))?)?;
    let list = |k: &str| v[k].as_array().ok_or_else(|| Error::Format(format!("missing `{k}`")));
    let mut instructions = Vec::new();
    for ins in list("instructions")? {
        let args: Vec<usize> = ins["args"]
            .as_array()
            .ok_or_else(|| Error::Format("instruction without args".into()))?
            .iter()
            .map(|a| a.as_u64().map(|x| x as usize).ok_or_else(|| Error::Format("bad operand".into())))
            .collect::<Result<_>>()?;
        let c = || rational::from_json(&ins["const"]);
        let arg = |i: usize| args.get(i).copied().ok_or_else(|| Error::Format("missing operand".into()));
        let op = ins["op"].as_str().unwrap_or_default();
        instructions.push(match op {
            "load" => Instr::Load { input: arg(0)? },
            "const" => Instr::Const { value: c()? },
            "neg" => Instr::Neg { src: arg(0)? },
            "scale" => Instr::Scale { c: c()?, src: arg(0)? },
            "add" => Instr::Add { a: arg(0)?, b: arg(1)? },
            "sub" => Instr::Sub { a: arg(0)?, b: arg(1)? },
            "fma" => Instr::Fma { c: c()?, src: arg(0)?, acc: arg(1)? },
            "fms" => Instr::Fms { c: c()?, src: arg(0)?, acc: arg(1)? },
            other => return Err(Error::Format(format!("unknown op `{other}`"))),
        });
    }
    let outputs = list("outputs")?
        .iter()
        .map(|o| Ok(Output { lambda: field(o, "lambda")?, mu: field(o, "mu")?, src: field(o, "src")? }))
        .collect::<Result<Vec<_>>>()?;
    let ir = KernelIR {
        form,
        degree: field(&v, "degree")?,
        dim: field(&v, "dim")?,
        nbasis: field(&v, "nbasis")?,
        n_inputs: field(&v, "inputs")?,
        instructions,
        outputs,
    };
    if field(&v, "temps")? != ir.n_temps() {
        return Err(Error::Format("`temps` disagrees with the instruction list".into()));
    }
    ir.validate()?;
    Ok(ir)
}
