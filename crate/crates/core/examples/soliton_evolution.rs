//! Real-time evolution of a soliton under its own potential, next to the same
//! profile spreading freely.

use std::f64::consts::PI;

use sgs_core::evolution::{evolve_linear_pilot, evolve_nls, stability_report, EvolutionConfig};
use sgs_core::grid::GridSpec;
use sgs_core::ground_state::{solve_choquard, SolverOptions};
use sgs_core::kernels::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::new(32, 20.0)?;
    let kernel = KernelSpec::coulomb(1.0);
    let gs = solve_choquard(&spec, &kernel, 2.0, &SolverOptions::default())?;
    let psi0 = gs.phi.to_complex();
    let period = 2.0 * PI / gs.eigenvalue.abs();

    let cfg = EvolutionConfig::new(0.2, 2.0 * period, 5);
    let bound = evolve_nls(&psi0, &kernel, &cfg)?;
    let free = evolve_linear_pilot(&psi0, &cfg)?;
    println!("{:>8} {:>10} {:>10}", "t", "self-bound", "free");
    for (a, b) in bound.iter().zip(&free).step_by(2) {
        println!("{:>8.2} {:>10.4} {:>10.4}", a.time, a.width, b.width);
    }
    let report = stability_report(&bound)?;
    println!("width drift {:.2e}, norm drift {:.2e}", report.width_drift, report.norm_drift);
    Ok(())
}
