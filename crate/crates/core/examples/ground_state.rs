//! Choquard soliton for a few norms: energy, width and the N³ / N⁻¹ scaling.

use sgs_core::grid::GridSpec;
use sgs_core::ground_state::{scaling_sweep, solve_choquard, SolverOptions};
use sgs_core::kernels::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = KernelSpec::coulomb(1.0);
    let opts = SolverOptions::default();

    let spec = GridSpec::new(32, 20.0)?;
    let gs = solve_choquard(&spec, &kernel, 2.0, &opts)?;
    println!(
        "N = 2: E = {:.6}, eigenvalue = {:.6}, width = {:.4}, virial = {:.1e}, {} iterations",
        gs.total_energy,
        gs.eigenvalue,
        gs.width,
        (2.0 * gs.kinetic + gs.potential) / gs.potential.abs(),
        gs.iterations
    );

    let report = scaling_sweep(&GridSpec::new(32, 38.0)?, &kernel, &[1.0, 2.0, 4.0], &opts)?;
    for row in &report.rows {
        println!("N = {:<3} E = {:>10.6}  width = {:.4}", row.norm, row.energy, row.width);
    }
    println!("E ∝ -N^{:.3}, width ∝ N^{:.3}", report.energy_exponent, report.width_exponent);
    Ok(())
}
