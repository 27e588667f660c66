//! Timing of the assembly phases for several element kernels.

use serde::Serialize;

use crate::assembly::{assemble_timed, AssemblyOptions, ElementKernel};
use crate::error::{Error, Result};
use crate::mesh::{local_to_global, StructuredMesh};

/// One measurement. Times are seconds per 10⁶ cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub kernel: String,
    pub degree: usize,
    pub dim: usize,
    pub n: usize,
    pub cells: usize,
    pub geometry_time: f64,
    /// Element matrices from precomputed `G` only.
    pub local_time: f64,
    pub insert_time: f64,
    pub threads: usize,
    pub checksum: f64,
}

pub fn bench(
    sizes: &[usize],
    dim: usize,
    degree: usize,
    kernels: &[&dyn ElementKernel],
    opts: &AssemblyOptions,
) -> Result<Vec<BenchRow>> {
    if kernels.is_empty() {
        return Err(Error::Parameter("bench needs at least one kernel".into()));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let mesh = match dim {
            2 => StructuredMesh::unit_square(n)?,
            3 => StructuredMesh::unit_cube(n)?,
            _ => return Err(Error::Parameter(format!("dim must be 2 or 3, got {dim}"))),
        };
        let l2g = local_to_global(&mesh, degree)?;
        let per_million = 1e6 / mesh.num_cells() as f64;
        for k in kernels {
            let (a, t) = assemble_timed(&mesh, &l2g, *k, opts)?;
            rows.push(BenchRow {
                kernel: k.name().to_string(),
                degree,
                dim,
                n,
                cells: mesh.num_cells(),
                geometry_time: t.geometry.as_secs_f64() * per_million,
                local_time: t.local.as_secs_f64() * per_million,
                insert_time: t.insert.as_secs_f64() * per_million,
                threads: opts.threads,
                checksum: a.checksum(),
            });
        }
    }
    Ok(rows)
}
