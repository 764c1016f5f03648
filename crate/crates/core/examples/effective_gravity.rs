//! Potential of two regularized sources, the fitted 1/r amplitudes, and the
//! SI calibration of the source length for an electron.

use sgs_core::effective_gravity::{calibrate_l, default_window, fit_newtonian, solve_effective_potential, SourceModel};
use sgs_core::grid::GridSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::new(64, 32.0)?;
    let model = SourceModel::with_default_width(vec![[-6.0, 0.0, 0.0], [6.0, 0.0, 0.0]], vec![0.25, 0.4], &spec);
    let phi = solve_effective_potential(&model, &spec)?;
    let window = default_window(&model, &spec);
    let fit = fit_newtonian(&phi, &model, window)?;
    println!("fit window {:.2}..{:.2}", window.0, window.1);
    for (l, s) in model.l_values.iter().zip(&fit.sources) {
        println!("L = {l:.3}: fitted {:.5} (residual {:.1e})", s.amplitude, s.relative_residual);
    }

    let cal = calibrate_l(9.1093837015e-31)?;
    println!("electron: L = {:.4e} m", cal.l_meters);
    Ok(())
}
