//! Walker pair with λ_F = 1: force zones, potential minima against
//! (n/2 - ε)λ_F, and a capture/scattering sweep.

use sgs_core::droplets::{capture_sweep, classify_zones, orbit_equilibria, DropletPair, ForcingSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ForcingSpec::from_faraday_wavelength(1.0, 1.0)?;
    let pair = DropletPair::new(1.0, 1.0, 0.5, 0.5)?;

    for z in classify_zones(&spec, 1.5)? {
        println!("{:.4}..{:.4} {:?}", z.start, z.end, z.kind);
    }

    let orbits = orbit_equilibria(&pair, &spec, 4.4)?;
    println!("ε = {:.4} (95% CI {:.4}..{:.4})", orbits.epsilon, orbits.epsilon_ci.0, orbits.epsilon_ci.1);
    for ((d, n), r) in orbits.equilibrium_radii.iter().zip(&orbits.n_indices).zip(&orbits.residuals) {
        println!("n = {n}: d = {d:.4}, residual {r:+.4}");
    }

    let sweep = capture_sweep(&pair, &spec, 1.3, 7, 10.0)?;
    for row in &sweep.rows {
        println!("b = {:.3}: {:?}", row.impact_parameter, row.outcome);
    }
    Ok(())
}
