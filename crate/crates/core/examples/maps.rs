//! Prints the MAP count table. Run with `--release`; degree 6 takes a few seconds.

use stiffopt::optimizer::{map_count, optimize};
use stiffopt::tabulation::TensorKind;

fn main() {
    println!("{:<10} {:>3} {:>3} {:>7} {:>9} {:>9}", "form", "p", "d", "entries", "base", "optimized");
    let cases = [(TensorKind::Laplacian, 2, 1..=6), (TensorKind::Laplacian, 3, 1..=2), (TensorKind::Advection, 3, 1..=1)];
    for (form, dim, degrees) in cases {
        for p in degrees {
            let (_, g) = optimize(form, p, dim).expect("supported degree");
            let r = map_count(&g);
            println!("{:<10} {:>3} {:>3} {:>7} {:>9} {:>9}", r.form, p, dim, r.entries, r.base_maps, r.optimized_maps);
        }
    }
}
