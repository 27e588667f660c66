//! Straight-line element kernels, generated by the `stiffopt` optimizer when
//! this crate is built and compiled as ordinary Rust.
//!
//! Laplacian kernels take `G` row-major and write the upper triangle of
//! `Kᵉ`; advection kernels take `γ[m][λ]` and write every `(μ, ρ)`.

use stiffopt::assembly::CompiledKernel;

#[allow(clippy::excessive_precision, clippy::unreadable_literal)]
mod generated {
    use stiffopt::assembly::CompiledKernel;
    include!(concat!(env!("OUT_DIR"), "/kernels.rs"));
}

pub use generated::*;

/// Every compiled Laplacian kernel.
pub fn laplacian_kernels() -> &'static [CompiledKernel] {
    generated::LAPLACIAN_KERNELS
}

/// The Laplacian kernel for `(degree, dim)`, if one was built.
pub fn compiled_kernel(degree: usize, dim: usize) -> Option<CompiledKernel> {
    laplacian_kernels().iter().copied().find(|k| k.dim == dim && k.nbasis == nbasis(degree, dim))
}

fn nbasis(degree: usize, dim: usize) -> usize {
    (1..=dim).fold(1, |acc, k| acc * (degree + k) / k)
}

/// Advection `Kᵉᵘ` from `γ` (12 inputs, 16 outputs), by the optimizer's schedule.
pub fn advection_linear3d(gamma: &[f64], out: &mut [f64]) {
    advection_p1_3d::run(gamma, out)
}

// Folding the scale into γ never costs more.
const _: () = assert!(advection_p1_3d_hand::MAPS >= advection_p1_3d_hand_folded::MAPS);
