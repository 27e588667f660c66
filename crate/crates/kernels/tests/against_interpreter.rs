use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stiffopt::assembly::ElementKernel;
use stiffopt::codegen::{contract, interpret, lower};
use stiffopt::geometry::GeometryTensor;
use stiffopt::optimizer::optimize;
use stiffopt::tabulation::{reference_advection_tensor, TensorKind};
use stiffopt::trilinear::{naive_keu, GammaMatrix};
use stiffopt_kernels::{advection_linear3d, advection_p1_3d_hand, advection_p1_3d_hand_folded, laplacian_kernels};

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let s = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / s
}

#[test]
fn compiled_laplacian_matches_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in laplacian_kernels() {
        let degree = (1..=6).find(|&p| stiffopt_kernels::compiled_kernel(p, k.dim).map(|c| c.name) == Some(k.name)).unwrap();
        let (t, graph) = optimize(TensorKind::Laplacian, degree, k.dim).unwrap();
        let ir = lower(&graph).unwrap();
        let d = k.dim;
        for _ in 0..20 {
            let mut v: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..d {
                v[i * d + i] += 3.0;
                for j in 0..i {
                    v[i * d + j] = v[j * d + i];
                }
            }
            let g = GeometryTensor::new(d, v.clone(), true).unwrap();
            let mut dense = vec![0.0; k.nbasis * k.nbasis];
            k.element_matrix(&g, &mut dense);
            assert!(max_rel(&dense, &contract(&t, &v).unwrap()) < 1e-12, "{}", k.name);
            let mut packed = vec![0.0; k.outputs.len()];
            (k.func)(&v, &mut packed);
            assert_eq!(packed, interpret(&ir, &v).unwrap(), "{}", k.name);
        }
    }
}

#[test]
fn compiled_advection_matches_naive() {
    let n = reference_advection_tensor(1, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let values: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let naive = naive_keu(&n, &GammaMatrix::new(3, 4, values.clone()).unwrap()).unwrap();
        let mut out = [0.0; 16];
        advection_linear3d(&values, &mut out);
        assert!(max_rel(&out, &naive) < 1e-12);
        advection_p1_3d_hand::run(&values, &mut out);
        assert!(max_rel(&out, &naive) < 1e-12);
        let pre: Vec<f64> = values.iter().map(|v| v / 120.0).collect();
        advection_p1_3d_hand_folded::run(&pre, &mut out);
        assert!(max_rel(&out, &naive) < 1e-12);
    }
}
