//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
//!
//! Indented lines under a criterion are diagnostics. Criteria are evaluated
//! exactly as stated, including the ones this implementation does not meet.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiffopt::assembly::{
    assemble, assemble_timed, AssemblyOptions, CompiledKernel, ElementKernel, IrKernel, NaiveKernel, QuadratureKernel,
    ZeroSkipKernel,
};
use stiffopt::codegen::{builtin_quadratic_kernel, builtin_quadratic_ledger, contract, interpret, lower, SCHEDULE_ORDER_QUADRATIC};
use stiffopt::geometry::{affine_map_from_vertices, geometry_tensor, tilde_geometry_tensor, GeometryTensor};
use stiffopt::mesh::{local_to_global, StructuredMesh};
use stiffopt::optimizer::{map_count, optimize, DependencyGraph};
use stiffopt::rational::{int, rat, Rational};
use stiffopt::solver::solve_poisson;
use stiffopt::sparse::CsrMatrix;
use stiffopt::tabulation::{lagrange_nodes, reference_advection_tensor, reference_stiffness_tensor, ReferenceTensor, TensorKind};
use stiffopt::trilinear::{gamma, midpoint_mass_matrix, naive_keu, optimized_keu_ledger, optimized_keu_linear3d, CoefficientField, GammaMatrix};

const SEED: u64 = stiffopt_cli::DEFAULT_SEED;

/// The tensor K (times four), linears in three dimensions. Row (λ, m), column (μ, n);
/// vertices ordered x, y, z, origin.
const TABLE_K3: [[i64; 12]; 12] = [
    [1, 0, 0, 0, 1, 0, 0, 0, 1, -1, -1, -1],
    [0; 12],
    [0; 12],
    [0; 12],
    [1, 0, 0, 0, 1, 0, 0, 0, 1, -1, -1, -1],
    [0; 12],
    [0; 12],
    [0; 12],
    [1, 0, 0, 0, 1, 0, 0, 0, 1, -1, -1, -1],
    [-1, 0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1],
    [-1, 0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1],
    [-1, 0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1],
];

/// The tensor N (times ninety-six), linears in three dimensions. Row (λ, m), column (μ, ρ).
const TABLE_N3: [[i64; 16]; 12] = [
    [3, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 3, 1, 1, 1],
    [0, 0, 0, 0, 3, 1, 1, 1, 0, 0, 0, 0, 3, 1, 1, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 3, 1, 1, 1, 3, 1, 1, 1],
    [1, 3, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 3, 1, 1],
    [0, 0, 0, 0, 1, 3, 1, 1, 0, 0, 0, 0, 1, 3, 1, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 3, 1, 1, 1, 3, 1, 1],
    [1, 1, 3, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 3, 1],
    [0, 0, 0, 0, 1, 1, 3, 1, 0, 0, 0, 0, 1, 1, 3, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 3, 1, 1, 1, 3, 1],
    [1, 1, 1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 3],
    [0, 0, 0, 0, 1, 1, 1, 3, 0, 0, 0, 0, 1, 1, 1, 3],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 3, 1, 1, 1, 3],
];

/// Table vertex order (x, y, z, origin) as indices into this crate's order (origin first).
const TABLE_ORDER_LINEAR_3D: [usize; 4] = [1, 2, 3, 0];

const PUBLISHED_MAPS: [usize; 6] = [7, 15, 45, 176, 443, 867];
const PUBLISHED_BASE: [usize; 6] = [24, 84, 220, 480, 924, 1624];

struct Verdict {
    passed: bool,
    summary: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, summary: impl Into<String>) -> Self {
        Self { passed, summary: summary.into(), notes: Vec::new() }
    }
    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

fn ms(d: Duration) -> String {
    format!("{:.0} ms", d.as_secs_f64() * 1e3)
}

/// Largest difference between `4·K` style matrices, scaled by `factor`, and the table.
fn compare_k3(k: &ReferenceTensor, factor: &Rational) -> usize {
    let mut mismatches = 0;
    for (row, cells) in TABLE_K3.iter().enumerate() {
        for (col, &t) in cells.iter().enumerate() {
            let (l, m) = (TABLE_ORDER_LINEAR_3D[row / 3], row % 3);
            let (mu, n) = (TABLE_ORDER_LINEAR_3D[col / 3], col % 3);
            if k.get(l, mu, m, n) * factor != int(t) {
                mismatches += 1;
            }
        }
    }
    mismatches
}

fn compare_n3(value: impl Fn(usize, usize, usize, usize) -> Rational) -> usize {
    let mut mismatches = 0;
    for (row, cells) in TABLE_N3.iter().enumerate() {
        for (col, &t) in cells.iter().enumerate() {
            let (l, m) = (TABLE_ORDER_LINEAR_3D[row / 3], row % 3);
            let (mu, rho) = (TABLE_ORDER_LINEAR_3D[col / 4], TABLE_ORDER_LINEAR_3D[col % 4]);
            if value(l, mu, rho, m) != int(t) {
                mismatches += 1;
            }
        }
    }
    mismatches
}

fn criterion_1() -> Verdict {
    let t0 = Instant::now();
    let k = reference_stiffness_tensor(1, 3).unwrap();
    let n = reference_advection_tensor(1, 3).unwrap();
    let k_bad = compare_k3(&k, &int(4));
    let n_bad = compare_n3(|l, mu, rho, m| n.get(l, mu, rho, m) * int(96));
    let elapsed = t0.elapsed();
    let passed = k_bad == 0 && n_bad == 0 && elapsed < Duration::from_secs(1);
    // What the printed tables do correspond to.
    let k_six = compare_k3(&k, &int(6));
    let mid = midpoint_mass_matrix(3).unwrap();
    let grad_flipped = |mu: usize, m: usize| if mu == 0 || mu == m + 1 { int(1) } else { int(0) };
    let n_mid = compare_n3(|l, mu, rho, m| grad_flipped(mu, m) * &mid[l][rho] * int(96));
    Verdict::new(
        passed,
        format!("golden tensors: 4K vs printed K table {k_bad}/144 mismatches, 96N vs printed N table {n_bad}/192 mismatches, {}", ms(elapsed)),
    )
    .note(format!("exact 4K entries are ±{} where the table has ±1; 6K differs in {k_six}/144 entries", k.get(1, 1, 0, 0) * int(4)))
    .note(format!(
        "exact 96N diagonal/off-diagonal mass entries are {} and {}; edge-midpoint rule (weights 1/24) with a +1 origin gradient differs in {n_mid}/192 entries",
        n.get(1, 1, 1, 0) * int(96),
        n.get(1, 1, 2, 0) * int(96)
    ))
}

fn criterion_2(graphs: &mut Graphs) -> Verdict {
    let k = reference_stiffness_tensor(2, 2).unwrap();
    let nodes = lagrange_nodes(2, 2).unwrap();
    let schedule_nodes: [(Rational, Rational); 6] = [
        (int(1), int(0)),
        (int(0), int(1)),
        (int(0), int(0)),
        (rat(1, 2), int(0)),
        (rat(1, 2), rat(1, 2)),
        (int(0), rat(1, 2)),
    ];
    let ordering_ok = schedule_nodes
        .iter()
        .enumerate()
        .all(|(i, (x, y))| nodes[SCHEDULE_ORDER_QUADRATIC[i]] == vec![x.clone(), y.clone()]);
    // the relation numbers nodes from 1 in schedule order
    let block = |i: usize, j: usize| -> Vec<Rational> {
        let (l, mu) = (SCHEDULE_ORDER_QUADRATIC[i - 1], SCHEDULE_ORDER_QUADRATIC[j - 1]);
        (0..4).map(|q| k.get(l, mu, q / 2, q % 2).clone()).collect()
    };
    let relation = |a: (usize, usize), b: (usize, usize)| {
        block(a.0, a.1).iter().zip(block(b.0, b.1)).all(|(x, y)| x == &(&y * int(-4)))
    };
    let stated = relation((3, 1), (4, 1));
    let reversed = relation((4, 1), (3, 1));
    let zeros = graphs.get(TensorKind::Laplacian, 2, 2).histogram.zero;
    let passed = ordering_ok && stated && zeros == 3;
    let show = |b: Vec<Rational>| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    Verdict::new(
        passed,
        format!("quadratic pattern: K31 = -4 K41 {}, zero upper-triangle blocks = {zeros} (want 3)", if stated { "holds" } else { "does not hold" }),
    )
    .note(format!("K31 = [{}], K41 = [{}]", show(block(3, 1)), show(block(4, 1))))
    .note(format!("reversed relation K41 = -4 K31 {}", if reversed { "holds" } else { "does not hold" }))
    .note(format!("node ordering permutation {:?} checked against coordinates: {ordering_ok}", SCHEDULE_ORDER_QUADRATIC))
}

#[derive(Default)]
struct Graphs {
    cache: HashMap<(TensorKind, usize, usize), (ReferenceTensor, DependencyGraph, Duration)>,
}

impl Graphs {
    fn entry(&mut self, form: TensorKind, p: usize, d: usize) -> &(ReferenceTensor, DependencyGraph, Duration) {
        self.cache.entry((form, p, d)).or_insert_with(|| {
            let t0 = Instant::now();
            let (t, g) = optimize(form, p, d).unwrap();
            (t, g, t0.elapsed())
        })
    }
    fn get(&mut self, form: TensorKind, p: usize, d: usize) -> &DependencyGraph {
        &self.entry(form, p, d).1
    }
}

fn criterion_3(graphs: &mut Graphs) -> Verdict {
    let mut passed = true;
    let mut total = Duration::ZERO;
    let mut cells = Vec::new();
    for p in 1..=6 {
        let (_, g, took) = graphs.entry(TensorKind::Laplacian, p, 2);
        let r = map_count(g);
        total += *took;
        let bound = if p <= 3 { 1.25 } else { 1.5 } * PUBLISHED_MAPS[p - 1] as f64;
        passed &= r.optimized_maps < r.base_maps && (r.optimized_maps as f64) <= bound && r.base_maps == PUBLISHED_BASE[p - 1];
        cells.push(format!("p{p} {}/{} (published {})", r.optimized_maps, r.base_maps, PUBLISHED_MAPS[p - 1]));
    }
    passed &= total < Duration::from_secs(60);
    Verdict::new(passed, format!("MAP counts: {}, {}", cells.join(", "), ms(total)))
}

fn random_vertices(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let v: Vec<Vec<f64>> = (0..=dim).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        if affine_map_from_vertices(&v).map(|m| m.abs_det() > 1e-2).unwrap_or(false) {
            return v;
        }
    }
}

fn rel_dev(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn laplacian_scope() -> Vec<(usize, usize)> {
    (1..=6).map(|p| (p, 2)).chain([(1, 3), (2, 3)]).collect()
}

fn criterion_4(graphs: &mut Graphs) -> Verdict {
    let t0 = Instant::now();
    let mut worst_ir = 0.0f64;
    let mut worst_native = 0.0f64;
    let mut checked = 0;
    for (p, d) in laplacian_scope() {
        let (t, g, _) = graphs.entry(TensorKind::Laplacian, p, d);
        let ir = lower(g).unwrap();
        let native = stiffopt_kernels::compiled_kernel(p, d).expect("native kernel built");
        let n = t.nbasis;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (p * 10 + d) as u64);
        let mut dense = vec![0.0; n * n];
        for _ in 0..1000 {
            let geo = geometry_tensor(&affine_map_from_vertices(&random_vertices(&mut rng, d)).unwrap());
            let want = contract(t, &geo.values).unwrap();
            ir.unpack(&interpret(&ir, &geo.values).unwrap(), &mut dense);
            worst_ir = worst_ir.max(rel_dev(&dense, &want));
            native.element_matrix(&geo, &mut dense);
            worst_native = worst_native.max(rel_dev(&dense, &want));
        }
        checked += 1;
    }
    let (t, g, _) = graphs.entry(TensorKind::Advection, 1, 3);
    let ir = lower(g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 13);
    let mut out = [0.0; 16];
    for _ in 0..1000 {
        let gt = tilde_geometry_tensor(&affine_map_from_vertices(&random_vertices(&mut rng, 3)).unwrap());
        let u = CoefficientField::new(3, 4, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let gm = gamma(&gt, &u).unwrap();
        let want = naive_keu(t, &gm).unwrap();
        worst_ir = worst_ir.max(rel_dev(&interpret(&ir, &gm.values).unwrap(), &want));
        stiffopt_kernels::advection_linear3d(&gm.values, &mut out);
        worst_native = worst_native.max(rel_dev(&out, &want));
    }
    checked += 1;
    let elapsed = t0.elapsed();
    let passed = worst_ir <= 1e-12 && worst_native <= 1e-12 && elapsed < Duration::from_secs(30);
    Verdict::new(
        passed,
        format!(
            "kernel soundness: {checked} targets x 1000 elements, IR {worst_ir:.2e}, native {worst_native:.2e}, {}",
            ms(elapsed)
        ),
    )
    .note("targets: laplacian p1..p6 2d, p1..p2 3d, advection p1 3d; emitted C is compiled and checked in the core crate's tests")
}

fn criterion_5() -> Verdict {
    let k = reference_stiffness_tensor(2, 2).unwrap();
    let n = reference_advection_tensor(1, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut dq, mut da) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let g = GeometryTensor::new(2, vec![rng.gen_range(0.5..3.0), a, a, rng.gen_range(0.5..3.0)], true).unwrap();
        dq = dq.max(rel_dev(&builtin_quadratic_kernel(&g).unwrap(), &contract(&k, &g.values).unwrap()));
        let gm = GammaMatrix::new(3, 4, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        da = da.max(rel_dev(&optimized_keu_linear3d(&gm).unwrap(), &naive_keu(&n, &gm).unwrap()));
    }
    let (sched, scale) = builtin_quadratic_ledger();
    let adv = optimized_keu_ledger();
    let passed = dq <= 1e-12 && da <= 1e-12 && sched.total() <= 18 && adv.arithmetic.total() <= 39;
    Verdict::new(
        passed,
        format!(
            "hand schedules: quadratic {} ops (bound 18), dev {dq:.2e}; advection {} ops (bound 39), dev {da:.2e}",
            sched.total(),
            adv.arithmetic.total()
        ),
    )
    .note(format!(
        "quadratic ledger {:?} plus {} prescaling multiplies of G",
        sched,
        scale.total()
    ))
    .note(format!(
        "advection ledger {:?} plus {} scaling multiplies ({} when folded into gamma)",
        adv.arithmetic,
        adv.scaling.total(),
        adv.folded_scaling
    ))
}

fn symmetric(a: &CsrMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..a.n_rows {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            worst = worst.max((a.values[k] - a.get(a.col_idx[k], r)).abs());
        }
    }
    worst / a.max_abs()
}

fn criterion_6(graphs: &mut Graphs) -> Verdict {
    let t0 = Instant::now();
    let (mut agree, mut sym, mut rows) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for (p, d) in (1..=6).map(|p| (p, 2)).chain([(1, 3)]) {
        let (t, g, _) = graphs.entry(TensorKind::Laplacian, p, d);
        let kernels: Vec<Box<dyn ElementKernel>> = vec![
            Box::new(QuadratureKernel::new(p, d).unwrap()),
            Box::new(NaiveKernel::new(t).unwrap()),
            Box::new(ZeroSkipKernel::new(t).unwrap()),
            Box::new(IrKernel::new(lower(g).unwrap()).unwrap()),
            Box::new(stiffopt_kernels::compiled_kernel(p, d).unwrap()),
        ];
        for n in [1, 4, 16] {
            let mesh = if d == 2 { StructuredMesh::unit_square(n) } else { StructuredMesh::unit_cube(n) }.unwrap();
            let l2g = local_to_global(&mesh, p).unwrap();
            let mats: Vec<CsrMatrix> = kernels.iter().map(|k| assemble(&mesh, &l2g, k.as_ref()).unwrap()).collect();
            for m in &mats[1..] {
                agree = agree.max(m.max_rel_diff(&mats[0]));
            }
            for m in &mats {
                sym = sym.max(symmetric(m));
                rows = rows.max(m.row_sums().iter().fold(0.0f64, |a, s| a.max(s.abs())) / m.max_abs());
            }
            cases += 1;
        }
    }
    let passed = agree <= 1e-12 && sym <= 1e-12 && rows <= 1e-10;
    Verdict::new(
        passed,
        format!(
            "assembly equivalence: {cases} meshes x 5 kernels, agreement {agree:.2e}, asymmetry {sym:.2e}, row sums {rows:.2e}, {}",
            ms(t0.elapsed())
        ),
    )
    .note("kernels: quadrature, naive, zero-skip, generated-ir, native; laplacian p1..p6 2d and p1 3d on n = 1, 4, 16")
}

fn criterion_7(graphs: &mut Graphs) -> Verdict {
    let t0 = Instant::now();
    let kernel = IrKernel::new(lower(graphs.get(TensorKind::Laplacian, 1, 2)).unwrap()).unwrap();
    let runs: Vec<_> = [8, 16, 32].iter().map(|&n| solve_poisson(n, 1, &kernel).unwrap()).collect();
    let ratios: Vec<f64> = runs.windows(2).map(|w| w[0].l2_error / w[1].l2_error).collect();
    let elapsed = t0.elapsed();
    let passed = ratios.iter().all(|&r| r >= 3.5) && runs.iter().all(|r| r.cg.converged) && elapsed < Duration::from_secs(30);
    Verdict::new(
        passed,
        format!(
            "convergence: L2 errors {} ratios {}, {}",
            runs.iter().map(|r| format!("{:.3e}", r.l2_error)).collect::<Vec<_>>().join(" "),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" "),
            ms(elapsed)
        ),
    )
}

fn criterion_8(graphs: &mut Graphs) -> Verdict {
    let mesh = StructuredMesh::unit_square(128).unwrap();
    let l2g = local_to_global(&mesh, 2).unwrap();
    let native: CompiledKernel = stiffopt_kernels::compiled_kernel(2, 2).unwrap();
    let ir = IrKernel::new(lower(graphs.get(TensorKind::Laplacian, 2, 2)).unwrap()).unwrap();
    let quad = QuadratureKernel::new(2, 2).unwrap();
    let opts = AssemblyOptions::default();
    // best of three, per phase
    let time = |k: &dyn ElementKernel| {
        let mut best = (f64::INFINITY, f64::INFINITY);
        for _ in 0..3 {
            let (_, t) = assemble_timed(&mesh, &l2g, k, &opts).unwrap();
            best.0 = best.0.min(t.local.as_secs_f64());
            best.1 = best.1.min(t.insert.as_secs_f64());
        }
        let per = 1e6 / mesh.num_cells() as f64;
        (best.0 * per, best.1 * per)
    };
    let (q_local, _) = time(&quad);
    let (n_local, n_insert) = time(&native);
    let (i_local, _) = time(&ir);
    let passed = n_local < q_local && n_insert > n_local;
    Verdict::new(
        passed,
        format!(
            "performance n=128 p2: local s/1e6 cells quadrature {q_local:.3}, generated {n_local:.3}; generated insert {n_insert:.3}"
        ),
    )
    .note(format!("interpreted IR local time {i_local:.3}; timings are best of three and hardware dependent"))
}

fn main() {
    let mut graphs = Graphs::default();
    let criteria: Vec<(usize, Verdict)> = vec![
        (1, criterion_1()),
        (2, criterion_2(&mut graphs)),
        (3, criterion_3(&mut graphs)),
        (4, criterion_4(&mut graphs)),
        (5, criterion_5()),
        (6, criterion_6(&mut graphs)),
        (7, criterion_7(&mut graphs)),
        (8, criterion_8(&mut graphs)),
    ];
    let mut failed = 0;
    for (i, v) in &criteria {
        println!("{} {i}. {}", if v.passed { "PASS" } else { "FAIL" }, v.summary);
        for n in &v.notes {
            println!("       {n}");
        }
        failed += usize::from(!v.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
