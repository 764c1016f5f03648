//! Interaction kernels, Poisson solves and regularized point sources.
//!
//! Coulomb and Yukawa convolutions use analytic Fourier multipliers of the
//! kernel truncated at `R = L/2`. For any density supported within a ball of
//! diameter `L/2` this reproduces the free-space (isolated) convolution on
//! that ball exactly: periodic images sit at least `R` away and drop out, so
//! self-energies carry no Madelung offset. The singular kernel itself is never
//! sampled on the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fft3, GridSpec, RealField, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    Coulomb,
    Yukawa { screening_length: f64 },
    Helmholtz { wavenumber: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub coupling: f64,
}

impl KernelSpec {
    pub fn coulomb(coupling: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Coulomb,
            coupling,
        }
    }

    pub fn yukawa(coupling: f64, screening_length: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Yukawa { screening_length },
            coupling,
        }
    }

    pub fn helmholtz(coupling: f64, wavenumber: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Helmholtz { wavenumber },
            coupling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::InvalidKernel(format!(
                "coupling must be >= 0, got {}",
                self.coupling
            )));
        }
        match self.kind {
            KernelKind::Coulomb => Ok(()),
            KernelKind::Yukawa { screening_length } => {
                if screening_length.is_finite() && screening_length > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel(format!(
                        "yukawa screening length must be > 0, got {screening_length}"
                    )))
                }
            }
            KernelKind::Helmholtz { wavenumber } => {
                if wavenumber.is_finite() && wavenumber >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel(format!(
                        "helmholtz wavenumber must be >= 0, got {wavenumber}"
                    )))
                }
            }
        }
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        KernelSpec { coupling, ..self }
    }
}

/// Fourier multiplier of the truncated kernel `g(r)·[r < R]`, evaluated at |k|.
fn truncated_multiplier(kind: KernelKind, k: f64, cutoff: f64) -> Result<f64> {
    let r = cutoff;
    match kind {
        KernelKind::Coulomb => {
            if k == 0.0 {
                Ok(2.0 * PI * r * r)
            } else {
                let kr = k * r;
                // 1 - cos(kR) = 2 sin²(kR/2), stable for small kR
                Ok(8.0 * PI * (0.5 * kr).sin().powi(2) / (k * k))
            }
        }
        KernelKind::Yukawa { screening_length } => {
            let mu = 1.0 / screening_length;
            let decay = (-mu * r).exp();
            let bracket = if k == 0.0 {
                1.0 - decay * (1.0 + mu * r)
            } else {
                1.0 - decay * ((k * r).cos() + mu * (k * r).sin() / k)
            };
            Ok(4.0 * PI * bracket / (k * k + mu * mu))
        }
        KernelKind::Helmholtz { .. } => Err(Error::InvalidKernel(
            "the helmholtz kernel is only evaluated in closed form (helmholtz_green)".into(),
        )),
    }
}

/// Precomputed `V[ρ] = -K (g * ρ)` for one grid and kernel.
#[derive(Debug, Clone)]
pub struct PotentialOperator {
    spec: GridSpec,
    kernel: KernelSpec,
    multiplier: Vec<f64>,
}

impl PotentialOperator {
    pub fn new(spec: GridSpec, kernel: KernelSpec) -> Result<Self> {
        spec.validate()?;
        kernel.validate()?;
        let cutoff = 0.5 * spec.box_length();
        let multiplier = spec
            .k_squared()
            .into_iter()
            .map(|k2| truncated_multiplier(kernel.kind, k2.sqrt(), cutoff).map(|m| -kernel.coupling * m))
            .collect::<Result<Vec<_>>>()?;
        Ok(PotentialOperator {
            spec,
            kernel,
            multiplier,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Multiplier including the `-K` prefactor, in FFT layout.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn apply(&self, density: &RealField) -> Result<RealField> {
        if density.spec() != &self.spec {
            return Err(Error::GridMismatch);
        }
        let min = density.min();
        if min < -1e-12 {
            return Err(Error::NegativeDensity { min });
        }
        apply_real_multiplier(density, &self.multiplier)
    }
}

/// Multiply the spectrum of a real field by a real, even multiplier.
pub(crate) fn apply_real_multiplier(f: &RealField, multiplier: &[f64]) -> Result<RealField> {
    let spec = *f.spec();
    let fft = Fft3::for_size(spec.n());
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut data);
    data.iter_mut().zip(multiplier).for_each(|(v, m)| *v *= m);
    fft.inverse(&mut data);
    RealField::from_values(spec, data.into_iter().map(|v| v.re).collect())
}

/// `V^NL(x) = -K ∫ ρ(x') g(|x - x'|) d³x'` for the Coulomb or Yukawa kernel.
pub fn convolve_potential(density: &RealField, kernel: &KernelSpec) -> Result<RealField> {
    PotentialOperator::new(*density.spec(), *kernel)?.apply(density)
}

/// Solve `Δφ = source` in the zero-mean gauge (the k = 0 mode is discarded).
pub fn poisson_solve(source: &RealField) -> Result<RealField> {
    let spec = *source.spec();
    spec.validate()?;
    let multiplier: Vec<f64> = spec
        .k_squared()
        .into_iter()
        .map(|k2| if k2 == 0.0 { 0.0 } else { -1.0 / k2 })
        .collect();
    apply_real_multiplier(source, &multiplier)
}

/// Green function of `k0² + Δ` up to the `-1/4π` factor: `cos(k0 r)/r`.
pub fn helmholtz_green(r: f64, k0: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("helmholtz_green needs r > 0, got {r}")));
    }
    Ok((k0 * r).cos() / r)
}

/// Radial derivative of `cos(k0 r)/r`.
pub fn helmholtz_green_derivative(r: f64, k0: f64) -> f64 {
    -(k0 * r * (k0 * r).sin() + (k0 * r).cos()) / (r * r)
}

/// Default regularization width: two grid spacings.
pub fn default_source_width(spec: &GridSpec) -> f64 {
    2.0 * spec.spacing()
}

/// Normalized Gaussian blob of total weight `weight`, centred at `center`
/// (minimum-image distances, so blobs near a face wrap around).
pub fn regularized_delta(center: Vec3, weight: f64, width: f64, spec: &GridSpec) -> Result<RealField> {
    spec.validate()?;
    if !(width >= 1.5 * spec.spacing()) {
        return Err(Error::InvalidArgument(format!(
            "source width {width} is under-resolved (need >= 1.5 * spacing = {})",
            1.5 * spec.spacing()
        )));
    }
    let norm = weight / (2.0 * PI * width * width).powf(1.5);
    let inv = 1.0 / (2.0 * width * width);
    Ok(RealField::from_fn(*spec, |x| {
        let r2 = spec.distance(x, center).powi(2);
        norm * (-r2 * inv).exp()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_validation() {
        assert!(KernelSpec::coulomb(-1.0).validate().is_err());
        assert!(KernelSpec::yukawa(1.0, 0.0).validate().is_err());
        assert!(KernelSpec::helmholtz(1.0, -0.1).validate().is_err());
        assert!(KernelSpec::helmholtz(1.0, 0.0).validate().is_ok());
    }

    #[test]
    fn helmholtz_grid_convolution_is_refused() {
        let spec = GridSpec::new(8, 1.0).unwrap();
        let rho = RealField::zeros(spec);
        assert!(matches!(
            convolve_potential(&rho, &KernelSpec::helmholtz(1.0, 1.0)),
            Err(Error::InvalidKernel(_))
        ));
    }

    #[test]
    fn negative_density_rejected() {
        let spec = GridSpec::new(8, 1.0).unwrap();
        let mut rho = RealField::zeros(spec);
        rho.values_mut()[3] = -1e-9;
        assert!(matches!(
            convolve_potential(&rho, &KernelSpec::coulomb(1.0)),
            Err(Error::NegativeDensity { .. })
        ));
        rho.values_mut()[3] = -1e-14;
        assert!(convolve_potential(&rho, &KernelSpec::coulomb(1.0)).is_ok());
    }

    #[test]
    fn helmholtz_green_limits() {
        assert_eq!(helmholtz_green(2.0, 0.0).unwrap(), 0.5);
        let k0 = 1.7;
        let r = PI / 2.0 / k0;
        assert!(helmholtz_green(r, k0).unwrap().abs() < 1e-15);
        assert!(helmholtz_green(0.0, 1.0).is_err());
        assert!(helmholtz_green(-1.0, 1.0).is_err());
    }

    #[test]
    fn regularized_delta_normalization() {
        let spec = GridSpec::new(32, 10.0).unwrap();
        let w = default_source_width(&spec);
        let one = regularized_delta([0.3, -1.0, 2.0], 1.0, w, &spec).unwrap();
        assert!((one.integral() - 1.0).abs() < 1e-6);
        let zero = regularized_delta([0.0; 3], 0.0, w, &spec).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let mut two = regularized_delta([-2.0, 0.0, 0.0], 0.7, w, &spec).unwrap();
        two.add_assign(&regularized_delta([2.0, 0.0, 0.0], 0.7, w, &spec).unwrap())
            .unwrap();
        assert!((two.integral() - 1.4).abs() < 1e-6 * 1.4);
        assert!(regularized_delta([0.0; 3], 1.0, 1.4 * spec.spacing(), &spec).is_err());
    }
}
