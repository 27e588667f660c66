//! `stiffopt` subcommands: tabulate, optimize, codegen, verify, bench.
//!
//! Reports go to stdout as JSON (one document, or JSON lines for `bench`);
//! `--pretty` switches to a human-readable layout. Exit status is 0 when
//! every check passed, 1 on a verification failure or runtime error, 2 on a
//! usage error.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use stiffopt::assembly::{AssemblyOptions, CompiledKernel, ElementKernel, IrKernel, NaiveKernel, QuadratureKernel, ZeroSkipKernel};
use stiffopt::bench::{bench, BenchRow};
use stiffopt::codegen::{
    builtin_quadratic_ir, builtin_quadratic_kernel, contract, emit_source, interpret, interpret_exact, lower, Backend,
    KernelIR,
};
use stiffopt::geometry::{affine_map_from_vertices, geometry_tensor, tilde_geometry_tensor};
use stiffopt::optimizer::{advection_blocks, blocks_of, map_count, run_passes_with, DependencyGraph, Owner, PassConfig};
use stiffopt::rational::{rat, to_f64, Rational};
use stiffopt::tabulation::{reference_advection_tensor, reference_stiffness_tensor, ReferenceTensor, TensorKind};
use stiffopt::trilinear::{advection_linear3d_ir, gamma, naive_keu, optimized_keu_linear3d, CoefficientField};
use stiffopt::Error;

/// Seed used by `verify` when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_050_101;

/// When set, relative `--output` paths and default output files land here.
pub const OUT_DIR_ENV: &str = "STIFFOPT_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stiffopt", version, about = "Exact reference tensors, optimized element kernels and their checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Write the main output to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Target {
    #[arg(long, value_parser = parse_form, default_value = "laplacian")]
    pub form: TensorKind,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub degree: u8,
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3), default_value_t = 2)]
    pub dim: u8,
}

fn parse_form(s: &str) -> Result<TensorKind, String> {
    TensorKind::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact reference tensor as JSON.
    Tabulate(Target),
    /// Run the redundancy passes and print the dependency graph.
    Optimize {
        #[command(flatten)]
        target: Target,
        /// Print only the cost report.
        #[arg(long)]
        report: bool,
        /// Limit the pairs examined by the linear-combination pass.
        #[arg(long)]
        pair_cap: Option<usize>,
    },
    /// Emit a straight-line kernel.
    Codegen {
        #[command(flatten)]
        target: Target,
        /// native | portable-curly | ir-json
        #[arg(long, default_value = "native")]
        backend: String,
        /// Use the hand schedule (laplacian degree 2 dim 2, advection degree 1 dim 3).
        #[arg(long)]
        hand: bool,
        /// Fold the uniform 1/120 factor into γ (advection hand schedule only).
        #[arg(long)]
        fold_scale: bool,
    },
    /// Compare every kernel for the target against naive contraction on random elements.
    Verify {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        elements: usize,
        /// Maximum relative deviation, scaled by the element's largest naive entry.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Time assembly with several element kernels.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6), default_value_t = 2)]
        degree: u8,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3), default_value_t = 2)]
        dim: u8,
        /// Subdivisions per side.
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128])]
        sizes: Vec<usize>,
        /// quadrature, naive, zero-skip, generated-ir, native
        #[arg(long, value_delimiter = ',', default_values_t = ["quadrature".to_string(), "naive".into(), "zero-skip".into(), "generated-ir".into(), "native".into()])]
        kernels: Vec<String>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExitReport {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_) | Error::UnknownBackend(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

struct Outcome {
    text: String,
    default_file: String,
    passed: bool,
    diagnostics: String,
}

impl Outcome {
    fn ok(text: String, default_file: String) -> Self {
        Self { text, default_file, passed: true, diagnostics: String::new() }
    }
}

pub fn run(cli: &Cli) -> ExitReport {
    let outcome = match &cli.command {
        Command::Tabulate(t) => tabulate(t, cli.pretty),
        Command::Optimize { target, report, pair_cap } => optimize_cmd(target, *report, *pair_cap, cli.pretty),
        Command::Codegen { target, backend, hand, fold_scale } => codegen(target, backend, *hand, *fold_scale),
        Command::Verify { target, seed, elements, tolerance } => verify(target, *seed, *elements, *tolerance, cli.pretty),
        Command::Bench { degree, dim, sizes, kernels, threads } => {
            bench_cmd(*degree as usize, *dim as usize, sizes, kernels, *threads, cli.pretty)
        }
    };
    match outcome {
        Err(Failure::Usage(msg)) => ExitReport { status: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Err(Failure::Runtime(msg)) => ExitReport { status: EXIT_FAILED, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Ok(o) => {
            let status = if o.passed { EXIT_OK } else { EXIT_FAILED };
            match write_output(cli.output.as_ref(), &o) {
                Ok(stdout) => ExitReport { status, stdout, stderr: o.diagnostics },
                Err(e) => ExitReport { status: EXIT_FAILED, stdout: String::new(), stderr: format!("error: {e}\n") },
            }
        }
    }
}

/// Resolves the destination file, if any: `--output` (relative to the
/// override directory when set), else a default name in the override directory.
pub fn output_path(output: Option<&PathBuf>, default_file: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match (output, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(default_file)),
        (None, None) => None,
    }
}

fn write_output(output: Option<&PathBuf>, o: &Outcome) -> std::io::Result<String> {
    match output_path(output, &o.default_file) {
        None => Ok(o.text.clone()),
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, &o.text)?;
            Ok(format!("{}\n", json!({ "written": path.display().to_string(), "bytes": o.text.len() })))
        }
    }
}

fn dump(v: &Value) -> String {
    format!("{}\n", serde_json::to_string(v).expect("values serialize"))
}

fn tensor_for(t: &Target) -> Result<ReferenceTensor, Failure> {
    let (p, d) = (t.degree as usize, t.dim as usize);
    Ok(match t.form {
        TensorKind::Laplacian => reference_stiffness_tensor(p, d)?,
        TensorKind::Advection => reference_advection_tensor(p, d)?,
    })
}

fn stem(t: &Target) -> String {
    format!("{}_p{}_{}d", t.form.name(), t.degree, t.dim)
}

fn tabulate(t: &Target, pretty: bool) -> Result<Outcome, Failure> {
    let tensor = tensor_for(t)?;
    let text = if pretty {
        let mut s = String::new();
        let shape = tensor.shape();
        let _ = writeln!(s, "{} degree {} dim {}: shape {:?}", t.form.name(), t.degree, t.dim, shape);
        for (k, e) in tensor.entries.iter().enumerate() {
            let (i, j) = (k / (shape[2] * shape[3]), k % (shape[2] * shape[3]));
            let _ = writeln!(s, "[{}][{}][{}][{}] = {}", i / shape[1], i % shape[1], j / shape[3], j % shape[3], e);
        }
        s
    } else {
        dump(&tensor.to_json())
    };
    Ok(Outcome::ok(text, format!("{}.tensor.json", stem(t))))
}

fn graph_for(t: &Target, pair_cap: Option<usize>) -> Result<DependencyGraph, Failure> {
    let tensor = tensor_for(t)?;
    let blocks = match t.form {
        TensorKind::Laplacian => blocks_of(&tensor)?,
        TensorKind::Advection => advection_blocks(&tensor)?,
    };
    Ok(run_passes_with(&blocks, &PassConfig { lincomb_pair_cap: pair_cap })?)
}

fn owner_json(o: &Owner) -> Value {
    match o {
        Owner::Entry { row, col } => json!({ "entry": [row, col] }),
        Owner::Helper { index } => json!({ "helper": index }),
    }
}

fn optimize_cmd(t: &Target, report_only: bool, pair_cap: Option<usize>, pretty: bool) -> Result<Outcome, Failure> {
    let graph = graph_for(t, pair_cap)?;
    let report = map_count(&graph);
    let text = if pretty {
        let h = &report.histogram;
        let mut s = String::new();
        let _ = writeln!(s, "{} degree {} dim {}", report.form, report.degree, report.dim);
        let _ = writeln!(s, "  entries      {}", report.entries);
        let _ = writeln!(s, "  base MAPs    {}", report.base_maps);
        let _ = writeln!(s, "  optimized    {}", report.optimized_maps);
        let _ = writeln!(s, "  helpers      {}", report.helpers);
        let _ = writeln!(
            s,
            "  zero {} eq {} eq-t {} 1-entry {} col {} ed1 {} ed2 {} lc {} default {}",
            h.zero, h.eq, h.eq_t, h.one_entry, h.col, h.ed1, h.ed2, h.lc, h.default
        );
        if !report_only {
            for &i in &graph.order {
                let n = &graph.nodes[i];
                let _ = writeln!(s, "  #{i:<4} {:<24} {:<8} {:?} maps {}", owner_json(&n.block.owner).to_string(), n.class.label(), n.class.references(), n.maps);
            }
        }
        s
    } else if report_only {
        dump(&report.to_json())
    } else {
        let nodes: Vec<Value> = graph
            .nodes
            .iter()
            .map(|n| json!({ "owner": owner_json(&n.block.owner), "class": n.class.label(), "refs": n.class.references(), "maps": n.maps }))
            .collect();
        dump(&json!({ "report": report.to_json(), "order": graph.order, "nodes": nodes }))
    };
    Ok(Outcome::ok(text, format!("{}.report.json", stem(t))))
}

fn kernel_ir(t: &Target, hand: bool, fold_scale: bool) -> Result<KernelIR, Failure> {
    let (p, d) = (t.degree as usize, t.dim as usize);
    if fold_scale && !(t.form == TensorKind::Advection && hand) {
        return Err(Failure::Usage("--fold-scale needs --hand with --form advection".into()));
    }
    if hand {
        return match (t.form, p, d) {
            (TensorKind::Laplacian, 2, 2) => Ok(builtin_quadratic_ir()),
            (TensorKind::Advection, 1, 3) => Ok(advection_linear3d_ir(fold_scale)),
            _ => Err(Failure::Usage(
                "hand schedules exist for laplacian degree 2 dim 2 and advection degree 1 dim 3".into(),
            )),
        };
    }
    Ok(lower(&graph_for(t, None)?)?)
}

fn codegen(t: &Target, backend: &str, hand: bool, fold_scale: bool) -> Result<Outcome, Failure> {
    let backend = Backend::parse(backend)?;
    let ir = kernel_ir(t, hand, fold_scale)?;
    let src = emit_source(&ir, backend)?;
    let ext = match backend {
        Backend::Native => "rs",
        Backend::PortableCurly => "c",
        Backend::IrJson => "json",
    };
    Ok(Outcome::ok(src.text, format!("{}.{ext}", src.symbol)))
}

/// Worst deviation seen by one check.
struct Check {
    name: &'static str,
    max_rel: f64,
    worst: Option<(usize, usize, Vec<f64>)>,
    samples: usize,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self { name, max_rel: 0.0, worst: None, samples: 0 }
    }

    /// `got` and `want` are dense row-major `n × n`.
    fn record(&mut self, got: &[f64], want: &[f64], n: usize, input: &[f64]) {
        self.samples += 1;
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for (k, (a, b)) in got.iter().zip(want).enumerate() {
            let dev = (a - b).abs() / scale;
            if dev > self.max_rel || dev.is_nan() {
                self.max_rel = if dev.is_nan() { f64::INFINITY } else { dev };
                self.worst = Some((k / n, k % n, input.to_vec()));
            }
        }
    }

    fn json(&self, tol: f64) -> Value {
        let mut v = json!({ "check": self.name, "samples": self.samples, "max_rel_dev": self.max_rel, "passed": self.max_rel <= tol });
        if let Some((l, m, g)) = &self.worst {
            v["worst"] = json!({ "lambda": l, "mu": m, "input": g });
        }
        v
    }
}

fn random_vertices(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let v: Vec<Vec<f64>> = (0..=dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        // reject slivers: they test conditioning, not the kernels
        if let Ok(map) = affine_map_from_vertices(&v) {
            if map.abs_det() > 1e-2 {
                return v;
            }
        }
    }
}

fn verify(t: &Target, seed: u64, elements: usize, tol: f64, pretty: bool) -> Result<Outcome, Failure> {
    if elements == 0 {
        return Err(Failure::Usage("--elements must be positive".into()));
    }
    let (p, d) = (t.degree as usize, t.dim as usize);
    let tensor = tensor_for(t)?;
    let n = tensor.nbasis;
    let ir = lower(&graph_for(t, None)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut dense = vec![0.0; n * n];
    match t.form {
        TensorKind::Laplacian => {
            let quad = QuadratureKernel::new(p, d)?;
            let native = stiffopt_kernels::compiled_kernel(p, d);
            let (mut c_ir, mut c_quad, mut c_native, mut c_hand) = (
                Check::new("generated-ir"),
                Check::new("quadrature"),
                Check::new("emitted-native"),
                Check::new("hand-quadratic"),
            );
            for _ in 0..elements {
                let g = geometry_tensor(&affine_map_from_vertices(&random_vertices(&mut rng, d))?);
                let want = contract(&tensor, &g.values)?;
                ir.unpack(&interpret(&ir, &g.values)?, &mut dense);
                c_ir.record(&dense, &want, n, &g.values);
                quad.element_matrix(&g, &mut dense);
                c_quad.record(&dense, &want, n, &g.values);
                if let Some(k) = &native {
                    k.element_matrix(&g, &mut dense);
                    c_native.record(&dense, &want, n, &g.values);
                }
                if (p, d) == (2, 2) {
                    c_hand.record(&builtin_quadratic_kernel(&g)?, &want, n, &g.values);
                }
            }
            checks.extend([c_ir, c_quad]);
            if native.is_some() {
                checks.push(c_native);
            }
            if (p, d) == (2, 2) {
                checks.push(c_hand);
            }
            checks.push(exact_check(&tensor, &ir, &mut rng)?);
        }
        TensorKind::Advection => {
            let (mut c_ir, mut c_hand, mut c_native, mut c_fold) = (
                Check::new("generated-ir"),
                Check::new("hand-schedule"),
                Check::new("emitted-native"),
                Check::new("hand-schedule-folded"),
            );
            let linear3d = (p, d) == (1, 3);
            let folded = advection_linear3d_ir(true);
            let mut out = vec![0.0; n * n];
            for _ in 0..elements {
                let gt = tilde_geometry_tensor(&affine_map_from_vertices(&random_vertices(&mut rng, d))?);
                let u = CoefficientField::new(d, n, (0..d * n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
                let gm = gamma(&gt, &u)?;
                let want = naive_keu(&tensor, &gm)?;
                c_ir.record(&interpret(&ir, &gm.values)?, &want, n, &gm.values);
                if linear3d {
                    c_hand.record(&optimized_keu_linear3d(&gm)?, &want, n, &gm.values);
                    stiffopt_kernels::advection_linear3d(&gm.values, &mut out);
                    c_native.record(&out, &want, n, &gm.values);
                    let pre: Vec<f64> = gm.values.iter().map(|v| v / 120.0).collect();
                    c_fold.record(&interpret(&folded, &pre)?, &want, n, &gm.values);
                }
            }
            checks.push(c_ir);
            if linear3d {
                checks.extend([c_hand, c_native, c_fold]);
            }
        }
    }
    let passed = checks.iter().all(|c| c.max_rel <= tol);
    let max_rel = checks.iter().fold(0.0f64, |m, c| m.max(c.max_rel));
    let mut diagnostics = String::new();
    for c in checks.iter().filter(|c| c.max_rel > tol) {
        if let Some((l, m, g)) = &c.worst {
            let _ = writeln!(diagnostics, "verify: {} deviates by {:e} at (lambda, mu) = ({l}, {m}) for input {g:?}", c.name, c.max_rel);
        }
    }
    let text = if pretty {
        let mut s = format!("{} degree {p} dim {d}, seed {seed}, {elements} elements, tolerance {tol:e}\n", t.form.name());
        for c in &checks {
            let _ = writeln!(s, "  {:<22} {:>10.3e}  {}", c.name, c.max_rel, if c.max_rel <= tol { "ok" } else { "FAILED" });
        }
        s
    } else {
        dump(&json!({
            "form": t.form.name(), "degree": p, "dim": d, "seed": seed, "elements": elements,
            "tolerance": tol, "max_rel_dev": max_rel, "passed": passed,
            "checks": checks.iter().map(|c| c.json(tol)).collect::<Vec<_>>(),
        }))
    };
    Ok(Outcome { text, default_file: format!("{}.verify.json", stem(t)), passed, diagnostics })
}

/// Rational inputs through the interpreter must reproduce the exact contraction.
fn exact_check(tensor: &ReferenceTensor, ir: &KernelIR, rng: &mut ChaCha8Rng) -> Result<Check, Failure> {
    let d = tensor.dim;
    let mut c = Check::new("exact-rational");
    for _ in 0..10 {
        let mut g: Vec<Rational> = (0..d * d).map(|_| rat(rng.gen_range(-50..50), rng.gen_range(1..30))).collect();
        for i in 0..d {
            for j in 0..i {
                g[i * d + j] = g[j * d + i].clone();
            }
        }
        let outs = interpret_exact(ir, &g)?;
        let gf: Vec<f64> = g.iter().map(to_f64).collect();
        let mut dev = 0.0f64;
        let mut worst = None;
        for (o, v) in ir.outputs.iter().zip(&outs) {
            let direct: Rational = (0..d * d).map(|q| tensor.get(o.lambda, o.mu, q / d, q % d) * &g[q]).sum();
            if &direct != v {
                dev = f64::INFINITY;
                worst = Some((o.lambda, o.mu, gf.clone()));
            }
        }
        c.samples += 1;
        if dev > c.max_rel {
            c.max_rel = dev;
            c.worst = worst;
        }
    }
    Ok(c)
}

fn bench_cmd(degree: usize, dim: usize, sizes: &[usize], names: &[String], threads: usize, pretty: bool) -> Result<Outcome, Failure> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Failure::Usage("--sizes needs positive subdivision counts".into()));
    }
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let tensor = reference_stiffness_tensor(degree, dim)?;
    let mut owned: Vec<Box<dyn ElementKernel>> = Vec::new();
    for name in names {
        owned.push(match name.as_str() {
            "quadrature" => Box::new(QuadratureKernel::new(degree, dim)?),
            "naive" => Box::new(NaiveKernel::new(&tensor)?),
            "zero-skip" => Box::new(ZeroSkipKernel::new(&tensor)?),
            "generated-ir" => {
                let t = Target { form: TensorKind::Laplacian, degree: degree as u8, dim: dim as u8 };
                Box::new(IrKernel::new(lower(&graph_for(&t, None)?)?)?)
            }
            "native" => {
                let k = stiffopt_kernels::compiled_kernel(degree, dim)
                    .ok_or_else(|| Failure::Usage(format!("no native kernel for degree {degree} dim {dim}")))?;
                Box::new(CompiledKernel { name: "native", ..k })
            }
            other => return Err(Failure::Usage(format!("unknown kernel `{other}`"))),
        });
    }
    let kernels: Vec<&dyn ElementKernel> = owned.iter().map(|k| k.as_ref()).collect();
    let rows = bench(sizes, dim, degree, &kernels, &AssemblyOptions { threads, ..Default::default() })?;
    Ok(Outcome::ok(format_rows(&rows, pretty), format!("bench_p{degree}_{dim}d.jsonl")))
}

fn format_rows(rows: &[BenchRow], pretty: bool) -> String {
    let mut s = String::new();
    if pretty {
        let _ = writeln!(s, "{:<14} {:>5} {:>9} {:>12} {:>12} {:>12}  (s per 10^6 cells)", "kernel", "n", "cells", "geometry", "local", "insert");
        for r in rows {
            let _ = writeln!(s, "{:<14} {:>5} {:>9} {:>12.4} {:>12.4} {:>12.4}", r.kernel, r.n, r.cells, r.geometry_time, r.local_time, r.insert_time);
        }
    } else {
        for r in rows {
            s += &dump(&serde_json::to_value(r).expect("rows serialize"));
        }
    }
    s
}
