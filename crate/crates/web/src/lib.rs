//! Three operations for the static page in `www/`: the optimizer's cost
//! report, an element stiffness matrix from vertex coordinates, and kernel
//! source for any backend.
//!
//! Exact tabulation runs in the browser, so degrees above 4 are refused to
//! keep the page responsive.

use serde_json::json;
use stiffopt::codegen::{emit_source, interpret_geometry, lower, Backend};
use stiffopt::geometry::geometry_from_vertices;
use stiffopt::optimizer::{map_count, optimize};
use stiffopt::tabulation::TensorKind;
use wasm_bindgen::prelude::*;

pub const MAX_WEB_DEGREE: usize = 4;

fn check(degree: usize, dim: usize) -> Result<(), String> {
    if !(1..=MAX_WEB_DEGREE).contains(&degree) {
        return Err(format!("degree must be 1..={MAX_WEB_DEGREE} here, got {degree}"));
    }
    if !(2..=3).contains(&dim) {
        return Err(format!("dim must be 2 or 3, got {dim}"));
    }
    Ok(())
}

/// Cost report JSON, same schema as `stiffopt optimize --report`.
pub fn report_json(form: &str, degree: usize, dim: usize) -> Result<String, String> {
    check(degree, dim)?;
    let form = TensorKind::parse(form).map_err(|e| e.to_string())?;
    let (_, graph) = optimize(form, degree, dim).map_err(|e| e.to_string())?;
    Ok(map_count(&graph).to_json().to_string())
}

/// `{nbasis, maps, matrix}` with the dense row-major `Kᵉ` of the Laplacian,
/// computed by the generated kernel. `vertices` is flat, `d + 1` points.
pub fn element_matrix_json(degree: usize, vertices: &[f64]) -> Result<String, String> {
    let dim = match vertices.len() {
        6 => 2,
        12 => 3,
        n => return Err(format!("expected 3 points in 2D or 4 in 3D, got {n} coordinates")),
    };
    check(degree, dim)?;
    let points: Vec<Vec<f64>> = vertices.chunks(dim).map(<[f64]>::to_vec).collect();
    let g = geometry_from_vertices(&points).map_err(|e| e.to_string())?;
    let (_, graph) = optimize(TensorKind::Laplacian, degree, dim).map_err(|e| e.to_string())?;
    let ir = lower(&graph).map_err(|e| e.to_string())?;
    let mut dense = vec![0.0; ir.nbasis * ir.nbasis];
    ir.unpack(&interpret_geometry(&ir, &g).map_err(|e| e.to_string())?, &mut dense);
    Ok(json!({ "nbasis": ir.nbasis, "maps": ir.maps(), "matrix": dense }).to_string())
}

/// Kernel source text for `backend` (`native`, `portable-curly` or `ir-json`).
pub fn kernel_source(form: &str, degree: usize, dim: usize, backend: &str) -> Result<String, String> {
    check(degree, dim)?;
    let form = TensorKind::parse(form).map_err(|e| e.to_string())?;
    let backend = Backend::parse(backend).map_err(|e| e.to_string())?;
    let (_, graph) = optimize(form, degree, dim).map_err(|e| e.to_string())?;
    let ir = lower(&graph).map_err(|e| e.to_string())?;
    Ok(emit_source(&ir, backend).map_err(|e| e.to_string())?.text)
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = optimizeReport)]
pub fn optimize_report(form: &str, degree: usize, dim: usize) -> Result<String, JsError> {
    js(report_json(form, degree, dim))
}

#[wasm_bindgen(js_name = elementMatrix)]
pub fn element_matrix(degree: usize, vertices: &[f64]) -> Result<String, JsError> {
    js(element_matrix_json(degree, vertices))
}

#[wasm_bindgen(js_name = emitKernel)]
pub fn emit_kernel(form: &str, degree: usize, dim: usize, backend: &str) -> Result<String, JsError> {
    js(kernel_source(form, degree, dim, backend))
}
