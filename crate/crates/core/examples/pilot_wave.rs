//! de Broglie-Bohm trajectories in a two-packet pilot wave, and the Born-rule
//! check on the final positions.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgs_core::evolution::{evolve_linear_pilot, EvolutionConfig};
use sgs_core::grid::GridSpec;
use sgs_core::guidance::{chi_square_test, GaussianPacket, GuidanceOptions, PacketSuperposition, PilotSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::new(32, 28.0)?;
    let pilot = PacketSuperposition::new(vec![
        (Complex64::new(1.0, 0.0), GaussianPacket::new([-3.0, 0.0, 0.0], 1.0, [0.0; 3])?),
        (Complex64::new(0.6, 0.0), GaussianPacket::new([3.0, 0.0, 0.0], 1.0, [0.0; 3])?),
    ])?;
    let mut psi0 = pilot.sample_on_grid(spec, 0.0);
    psi0.scale(1.0 / pilot.norm_sq(0.0).sqrt());

    let t_end = 3.0;
    let snaps = evolve_linear_pilot(&psi0, &EvolutionConfig::new(0.05, t_end, 2))?;
    let series = PilotSeries::new(&snaps)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let starts = pilot.sample_born(2000, &mut rng);
    let paths = series.integrate_ensemble(&starts, &GuidanceOptions::default())?;
    for (x0, path) in starts.iter().zip(&paths).take(5) {
        let x = path.final_position(0).unwrap();
        println!("({:6.3}, {:6.3}, {:6.3}) -> ({:6.3}, {:6.3}, {:6.3})", x0[0], x0[1], x0[2], x[0], x[1], x[2]);
    }

    let edges: Vec<f64> = (0..=16).map(|k| -8.0 + k as f64).collect();
    let probs = pilot.marginal_bin_probabilities(0, &edges, t_end)?;
    let xs: Vec<f64> = paths.iter().map(|p| p.final_position(0).unwrap()[0]).collect();
    let test = chi_square_test(&xs, &edges, &probs)?;
    println!("chi² = {:.2} on {} dof, p = {:.3}", test.statistic, test.dof, test.p_value);
    Ok(())
}
