//! Effective gravitational potential of delta-like soliton sources:
//! `Δφ = 4π Σ Lᵢ δ(x - xᵢ)` with tail `φ ≈ -Σ Lᵢ/|x - xᵢ|`, its radial fit,
//! the SI calibration `L = Gm/2c²` and the multiplicative minimal-coupling
//! transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient_real, interpolate_real, laplacian, spectral_gradient, ComplexField, GridSpec, RealField, Vec3};
use crate::kernels::{default_source_width, poisson_solve, regularized_delta};

/// CODATA 2018 Newtonian constant, m³ kg⁻¹ s⁻².
pub const G_SI: f64 = 6.674_30e-11;
/// Speed of light, m/s.
pub const C_SI: f64 = 299_792_458.0;
/// Order-of-magnitude soliton size quoted in the literature for the electron, in metres.
pub const QUOTED_ELECTRON_SIZE_M: f64 = 1e-55;

const SHELLS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub positions: Vec<Vec3>,
    pub l_values: Vec<f64>,
    pub sigma_s: f64,
    /// Screening length of the self-interaction, if any; sources must be
    /// separated by more than this as well.
    #[serde(default)]
    pub screening_length: Option<f64>,
}

impl SourceModel {
    pub fn new(positions: Vec<Vec3>, l_values: Vec<f64>, sigma_s: f64) -> Self {
        SourceModel {
            positions,
            l_values,
            sigma_s,
            screening_length: None,
        }
    }

    /// Default source width (two grid spacings).
    pub fn with_default_width(positions: Vec<Vec3>, l_values: Vec<f64>, spec: &GridSpec) -> Self {
        Self::new(positions, l_values, default_source_width(spec))
    }

    pub fn minimum_separation(&self) -> f64 {
        (4.0 * self.sigma_s).max(self.screening_length.unwrap_or(0.0))
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        spec.validate()?;
        if self.positions.len() != self.l_values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions but {} L values",
                self.positions.len(),
                self.l_values.len()
            )));
        }
        if let Some(l) = self.l_values.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidArgument(format!("L values must be >= 0, got {l}")));
        }
        if !(self.sigma_s >= 1.5 * spec.spacing()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_s = {} is under-resolved (need >= 1.5 * spacing = {})",
                self.sigma_s,
                1.5 * spec.spacing()
            )));
        }
        let minimum = self.minimum_separation();
        for a in 0..self.positions.len() {
            for b in a + 1..self.positions.len() {
                let separation = spec.distance(self.positions[a], self.positions[b]);
                if separation <= minimum {
                    return Err(Error::SourceOverlap {
                        a,
                        b,
                        separation,
                        minimum,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `Σᵢ 4π Lᵢ δ_σ(x - xᵢ)`
pub fn build_source_field(model: &SourceModel, spec: &GridSpec) -> Result<RealField> {
    model.validate(spec)?;
    let mut total = RealField::zeros(*spec);
    for (x, l) in model.positions.iter().zip(&model.l_values) {
        total.add_assign(&regularized_delta(*x, 4.0 * PI * l, model.sigma_s, spec)?)?;
    }
    Ok(total)
}

/// `φ^G/c²` in the zero-mean gauge.
pub fn solve_effective_potential(model: &SourceModel, spec: &GridSpec) -> Result<RealField> {
    poisson_solve(&build_source_field(model, spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkProfile {
    /// Signed offsets from the barycentre along the axis.
    pub offsets: Vec<f64>,
    /// `∂φ/∂x_axis ÷ φ`
    pub ratio: Vec<f64>,
}

impl KinkProfile {
    /// `max|f(s) + f(-s)| / max|f|`
    pub fn odd_asymmetry(&self) -> f64 {
        let n = self.ratio.len();
        let max = self.ratio.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = (0..n).map(|i| (self.ratio[i] + self.ratio[n - 1 - i]).abs()).fold(0.0, f64::max);
        worst / max
    }

    /// True when the ratio strictly decreases over offsets with |s| <= `half_range`.
    pub fn strictly_decreasing_within(&self, half_range: f64) -> bool {
        let pts: Vec<f64> = self
            .offsets
            .iter()
            .zip(&self.ratio)
            .filter(|(s, _)| s.abs() <= half_range + 1e-12)
            .map(|(_, r)| *r)
            .collect();
        pts.len() >= 2 && pts.windows(2).all(|w| w[1] < w[0])
    }
}

/// Log-derivative of a positive soliton profile along one axis through its
/// barycentre, sampled at grid-spacing offsets out to three rms widths.
pub fn kink_profile(soliton: &RealField, axis: usize) -> Result<KinkProfile> {
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis must be 0, 1 or 2, got {axis}")));
    }
    let spec = *soliton.spec();
    let grad = gradient_real(soliton)?;
    let density = RealField::from_values(spec, soliton.values().iter().map(|v| v * v).collect())?;
    let centre = density.barycentre();
    let width = density.rms_radius() / 3f64.sqrt();
    let h = spec.spacing();
    let steps = ((3.0 * width / h).floor() as isize).min(spec.n() as isize / 2 - 1);
    let floor = 1e-10 * soliton.max_abs();
    let mut offsets = Vec::new();
    let mut ratio = Vec::new();
    for j in -steps..=steps {
        let s = j as f64 * h;
        let mut x = centre;
        x[axis] += s;
        let value = interpolate_real(soliton, x);
        if !(value > floor) {
            return Err(Error::NodeProximity {
                point: x,
                density: value / soliton.max_abs(),
            });
        }
        offsets.push(s);
        ratio.push(interpolate_real(&grad[axis], x) / value);
    }
    Ok(KinkProfile { offsets, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellPoint {
    pub r: f64,
    pub phi_avg: f64,
    pub phi_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFit {
    /// `A` in `φ ≈ -A/r + b r² + c`.
    pub amplitude: f64,
    pub curvature: f64,
    pub offset: f64,
    pub relative_residual: f64,
    pub shells: Vec<ShellPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityFitResult {
    pub fitted_amplitudes: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Worst per-source residual.
    pub relative_residual: f64,
    pub sources: Vec<SourceFit>,
}

/// Default fit window `[4σ_s, L/4]`.
pub fn default_window(model: &SourceModel, spec: &GridSpec) -> (f64, f64) {
    (4.0 * model.sigma_s, 0.25 * spec.box_length())
}

/// Least-squares fit of shell-averaged φ around each source to
/// `-A/r + b r² + c`, using 32 log-spaced shells. The `r²` term carries the
/// neutralizing-background curvature of the zero-mean gauge and `c` the
/// gauge constant plus the (shell-constant) field of the other sources.
/// Shells reaching within `max(d/3, 4σ_s)` of another source are dropped.
pub fn fit_newtonian(phi: &RealField, model: &SourceModel, window: (f64, f64)) -> Result<GravityFitResult> {
    let spec = *phi.spec();
    model.validate(&spec)?;
    let (r_min, r_max) = window;
    let (lo, hi) = default_window(model, &spec);
    if !(r_min >= lo * (1.0 - 1e-12) && r_max <= hi * (1.0 + 1e-12) && r_min < r_max) {
        return Err(Error::InvalidArgument(format!(
            "fit window ({r_min}, {r_max}) must lie within [{lo}, {hi}]"
        )));
    }
    let log_span = (r_max / r_min).ln();
    let mut sources = Vec::with_capacity(model.positions.len());
    for (i, centre) in model.positions.iter().enumerate() {
        let mut r_limit = r_max;
        for (j, other) in model.positions.iter().enumerate() {
            if j != i {
                let d = spec.distance(*centre, *other);
                r_limit = r_limit.min(d - (d / 3.0).max(4.0 * model.sigma_s));
            }
        }
        // per shell: count, Σr, Σφ, Σ1/r, Σr²
        let mut acc = vec![[0.0f64; 5]; SHELLS];
        for (idx, value) in phi.values().iter().enumerate() {
            let r = spec.distance(spec.position(idx), *centre);
            if r < r_min || r >= r_max {
                continue;
            }
            let shell = ((SHELLS as f64 * (r / r_min).ln() / log_span) as usize).min(SHELLS - 1);
            let a = &mut acc[shell];
            a[0] += 1.0;
            a[1] += r;
            a[2] += value;
            a[3] += 1.0 / r;
            a[4] += r * r;
        }
        let rows: Vec<[f64; 4]> = acc
            .iter()
            .enumerate()
            .filter(|(k, a)| {
                let outer = r_min * (log_span * (*k + 1) as f64 / SHELLS as f64).exp();
                a[0] > 0.0 && outer <= r_limit
            })
            .map(|(_, a)| [a[1] / a[0], a[2] / a[0], a[3] / a[0], a[4] / a[0]])
            .collect();
        if rows.len() < 5 {
            return Err(Error::WindowTooNarrow { shells: rows.len() });
        }
        let (coef, offset) = least_squares_centered(&rows);
        let fitted: Vec<f64> = rows.iter().map(|r| coef[0] * r[2] + coef[1] * r[3] + offset).collect();
        let mean_fit = fitted.iter().sum::<f64>() / fitted.len() as f64;
        let resid = rows.iter().zip(&fitted).map(|(r, f)| (r[1] - f).powi(2)).sum::<f64>().sqrt();
        let spread = fitted.iter().map(|f| (f - mean_fit).powi(2)).sum::<f64>().sqrt();
        sources.push(SourceFit {
            amplitude: -coef[0],
            curvature: coef[1],
            offset,
            relative_residual: if spread > 0.0 { resid / spread } else { resid },
            shells: rows
                .iter()
                .zip(&fitted)
                .map(|(r, f)| ShellPoint {
                    r: r[0],
                    phi_avg: r[1],
                    phi_fit: *f,
                })
                .collect(),
        });
    }
    Ok(GravityFitResult {
        fitted_amplitudes: sources.iter().map(|s| s.amplitude).collect(),
        fit_window: window,
        relative_residual: sources.iter().map(|s| s.relative_residual).fold(0.0, f64::max),
        sources,
    })
}

/// Fits `y = a·u + b·w + c` on rows `[r, y, u, w]`; centring makes the slope
/// independent of any constant added to `y`.
fn least_squares_centered(rows: &[[f64; 4]]) -> ([f64; 2], f64) {
    let n = rows.len() as f64;
    let mean = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
    let (my, mu, mw) = (mean(1), mean(2), mean(3));
    let (mut suu, mut suw, mut sww, mut suy, mut swy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let (y, u, w) = (r[1] - my, r[2] - mu, r[3] - mw);
        suu += u * u;
        suw += u * w;
        sww += w * w;
        suy += u * y;
        swy += w * y;
    }
    let det = suu * sww - suw * suw;
    let a = (suy * sww - swy * suw) / det;
    let b = (swy * suu - suy * suw) / det;
    ([a, b], my - a * mu - b * mw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mass: f64,
    /// `L = Gm/2c²`, metres.
    pub l_meters: f64,
    /// `(Gm²/2L) / (mc²)`, one up to rounding.
    pub soliton_rest_energy_check: f64,
    pub quoted_size_m: f64,
}

pub fn calibrate_l(mass: f64) -> Result<CalibrationResult> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be > 0, got {mass}")));
    }
    let l = G_SI * mass / (2.0 * C_SI * C_SI);
    Ok(CalibrationResult {
        mass,
        l_meters: l,
        soliton_rest_energy_check: (G_SI * mass * mass / (2.0 * l)) / (mass * C_SI * C_SI),
        quoted_size_m: QUOTED_ELECTRON_SIZE_M,
    })
}

/// `-G m_A m_B / |x_A - x_B|` for a two-source model; `g` is the
/// gravitational constant in the caller's units.
pub fn interaction_energy(model: &SourceModel, masses: &[f64], g: f64, spec: &GridSpec) -> Result<f64> {
    if model.positions.len() != 2 || masses.len() != 2 {
        return Err(Error::InvalidArgument("interaction energy needs exactly two sources and two masses".into()));
    }
    model.validate(spec)?;
    let d = spec.distance(model.positions[0], model.positions[1]);
    Ok(-g * masses[0] * masses[1] / d)
}

fn check_perturbative(phi_g: &RealField) -> Result<()> {
    let max = phi_g.max_abs();
    if !(max < 0.5) {
        return Err(Error::PerturbationTooLarge { max });
    }
    Ok(())
}

/// Order 0: `(1 - φ)ψ`. Order n ≥ 1: `ψ·Σ_{j=0..n} φʲ`, the truncated
/// expansion of `ψ/(1 - φ)`. Here `φ` is `φ_G/c²`.
pub fn apply_minimal_coupling(psi_hom: &ComplexField, phi_g: &RealField, order: usize) -> Result<ComplexField> {
    if psi_hom.spec() != phi_g.spec() {
        return Err(Error::GridMismatch);
    }
    check_perturbative(phi_g)?;
    let values = psi_hom
        .values()
        .iter()
        .zip(phi_g.values())
        .map(|(psi, &p)| {
            let factor = if order == 0 {
                1.0 - p
            } else {
                let mut sum = 1.0;
                let mut term = 1.0;
                for _ in 0..order {
                    term *= p;
                    sum += term;
                }
                sum
            };
            psi * factor
        })
        .collect();
    ComplexField::from_values(*psi_hom.spec(), values)
}

/// `‖∇ψ·∇φ‖ / ‖½ψΔφ‖`: size of the cross term dropped by the multiplicative
/// transform relative to a retained one. Diagnostic only.
pub fn neglected_term_ratio(psi_hom: &ComplexField, phi_g: &RealField) -> Result<f64> {
    if psi_hom.spec() != phi_g.spec() {
        return Err(Error::GridMismatch);
    }
    let gpsi = spectral_gradient(psi_hom)?;
    let phi_c = phi_g.to_complex();
    let gphi = spectral_gradient(&phi_c)?;
    let lap = laplacian(&phi_c)?;
    let mut cross = 0.0;
    let mut kept = 0.0;
    for idx in 0..psi_hom.values().len() {
        let c: num_complex::Complex64 = (0..3).map(|a| gpsi[a].values()[idx] * gphi[a].values()[idx].re).sum();
        cross += c.norm_sqr();
        kept += (0.5 * psi_hom.values()[idx] * lap.values()[idx].re).norm_sqr();
    }
    Ok((cross / kept).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_detected() {
        let spec = GridSpec::new(32, 16.0).unwrap();
        let model = SourceModel::new(vec![[0.0; 3], [2.5, 0.0, 0.0]], vec![1.0, 1.0], 0.75);
        assert!(matches!(build_source_field(&model, &spec), Err(Error::SourceOverlap { .. })));
        let mut screened = SourceModel::new(vec![[0.0; 3], [4.0, 0.0, 0.0]], vec![1.0, 1.0], 0.75);
        assert!(build_source_field(&screened, &spec).is_ok());
        screened.screening_length = Some(5.0);
        assert!(build_source_field(&screened, &spec).is_err());
    }

    #[test]
    fn calibration_is_linear_in_mass() {
        let a = calibrate_l(1.0).unwrap();
        let b = calibrate_l(2.0).unwrap();
        assert_eq!(b.l_meters, 2.0 * a.l_meters);
        assert!((a.soliton_rest_energy_check - 1.0).abs() < 1e-15);
        assert!(calibrate_l(0.0).is_err());
    }

    #[test]
    fn minimal_coupling_rejects_large_potential() {
        let spec = GridSpec::new(8, 4.0).unwrap();
        let psi = ComplexField::from_fn(spec, |_| num_complex::Complex64::new(1.0, 0.0));
        let phi = RealField::from_fn(spec, |_| 0.6);
        assert!(matches!(apply_minimal_coupling(&psi, &phi, 2), Err(Error::PerturbationTooLarge { .. })));
    }
}
