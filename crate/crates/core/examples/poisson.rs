//! Spectral Poisson solve of a smeared point source, and the isolated
//! Coulomb/Yukawa convolution of a Gaussian density.

use sgs_core::grid::{GridSpec, RealField};
use sgs_core::kernels::{convolve_potential, default_source_width, poisson_solve, regularized_delta, KernelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GridSpec::new(64, 32.0)?;
    let src = regularized_delta([0.0; 3], 4.0 * std::f64::consts::PI, default_source_width(&spec), &spec)?;
    let phi = poisson_solve(&src)?;
    let c = spec.n() / 2;
    println!("{:>6} {:>12} {:>12}", "r", "phi", "phi + 1/r");
    for i in (c + 4..c + 16).step_by(2) {
        let r = spec.coord(i);
        let v = phi.values()[spec.index(i, c, c)];
        println!("{r:>6.2} {v:>12.6} {:>12.6}", v + 1.0 / r);
    }

    let rho = RealField::from_fn(spec, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp());
    for kernel in [KernelSpec::coulomb(1.0), KernelSpec::yukawa(1.0, 3.0)] {
        let v = convolve_potential(&rho, &kernel)?;
        println!("{kernel:?}: V(0) = {:.5}", v.values()[spec.index(c, c, c)]);
    }
    Ok(())
}
