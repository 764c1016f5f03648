//! Real-time propagation of `i∂ψ/∂t = -½Δψ + V^L ψ + V^NL[|ψ|²] ψ` by Strang
//! splitting: half kinetic step in k-space, full potential step with the
//! nonlinear potential frozen at the current density, half kinetic step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_norm_sq, ComplexField, Fft3, GridSpec, RealField, Vec3};
use crate::kernels::{KernelSpec, PotentialOperator};

/// External potential `V^L`, either sampled on the grid or from an analytic
/// family. Displacements use the minimum image, so analytic families are
/// only meaningful for states localized well inside the box.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ExternalPotential {
    #[default]
    None,
    Uniform {
        value: f64,
    },
    /// `V = g·x`
    Linear {
        gradient: Vec3,
    },
    /// `V = ½ω²|x - c|²`
    Harmonic {
        omega: f64,
        centre: Vec3,
    },
    Grid(RealField),
}

impl ExternalPotential {
    pub fn sample(&self, spec: &GridSpec) -> Result<Option<RealField>> {
        let field = match self {
            ExternalPotential::None => return Ok(None),
            ExternalPotential::Uniform { value } => RealField::from_fn(*spec, |_| *value),
            ExternalPotential::Linear { gradient } => RealField::from_fn(*spec, |x| {
                (0..3).map(|ax| gradient[ax] * x[ax]).sum()
            }),
            ExternalPotential::Harmonic { omega, centre } => RealField::from_fn(*spec, |x| {
                let r2: f64 = (0..3)
                    .map(|ax| spec.wrap_delta(x[ax] - centre[ax]).powi(2))
                    .sum();
                0.5 * omega * omega * r2
            }),
            ExternalPotential::Grid(f) => {
                if f.spec() != spec {
                    return Err(Error::GridMismatch);
                }
                f.clone()
            }
        };
        if !field.is_finite() {
            return Err(Error::InvalidArgument("external potential is not finite".into()));
        }
        Ok(Some(field))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Time step; a negative value integrates backward in time.
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub external: ExternalPotential,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64, snapshot_stride: usize) -> Self {
        EvolutionConfig {
            dt,
            t_end,
            snapshot_stride,
            external: ExternalPotential::None,
        }
    }

    pub fn with_external(mut self, external: ExternalPotential) -> Self {
        self.external = external;
        self
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        let h2 = spec.spacing().powi(2);
        if !(self.dt != 0.0 && self.dt.abs() < h2) {
            return Err(Error::InvalidArgument(format!(
                "dt = {} must satisfy 0 < |dt| < spacing² = {h2}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt.abs()) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} must be >= |dt| = {}",
                self.t_end,
                self.dt.abs()
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt.abs()).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub time: f64,
    pub psi: ComplexField,
    pub norm_sq: f64,
    pub width: f64,
    pub barycentre: Vec3,
}

impl StateSnapshot {
    pub fn capture(time: f64, psi: ComplexField) -> Self {
        let density = psi.density();
        StateSnapshot {
            time,
            norm_sq: l2_norm_sq(&psi),
            width: density.rms_radius(),
            barycentre: density.barycentre(),
            psi,
        }
    }
}

/// Steps a single state forward; holds the precomputed phase factors.
pub struct Propagator {
    spec: GridSpec,
    fft: std::sync::Arc<Fft3>,
    dt: f64,
    half_kinetic: Vec<Complex64>,
    full_kinetic: Vec<Complex64>,
    external: Option<Vec<f64>>,
    nonlinear: Option<PotentialOperator>,
}

impl Propagator {
    pub fn new(spec: GridSpec, kernel: Option<&KernelSpec>, dt: f64, external: &ExternalPotential) -> Result<Self> {
        spec.validate()?;
        let k2 = spec.k_squared();
        let phase = |frac: f64| -> Vec<Complex64> {
            k2.iter()
                .map(|k| Complex64::from_polar(1.0, -0.5 * k * dt * frac))
                .collect()
        };
        let nonlinear = match kernel {
            Some(k) if k.coupling > 0.0 => Some(PotentialOperator::new(spec, *k)?),
            Some(k) => {
                k.validate()?;
                None
            }
            None => None,
        };
        Ok(Propagator {
            spec,
            fft: Fft3::for_size(spec.n()),
            dt,
            half_kinetic: phase(0.5),
            full_kinetic: phase(1.0),
            external: external.sample(&spec)?.map(RealField::into_values),
            nonlinear,
        })
    }

    fn kinetic(&self, psi: &mut [Complex64], factors: &[Complex64]) {
        self.fft.forward(psi);
        psi.iter_mut().zip(factors).for_each(|(v, f)| *v *= f);
        self.fft.inverse(psi);
    }

    fn potential(&self, psi: &mut [Complex64]) -> Result<()> {
        let nl = match &self.nonlinear {
            Some(op) => {
                let rho = RealField::from_values(self.spec, psi.iter().map(|v| v.norm_sqr()).collect())?;
                Some(op.apply(&rho)?.into_values())
            }
            None => None,
        };
        for (idx, v) in psi.iter_mut().enumerate() {
            let mut pot = 0.0;
            if let Some(ext) = &self.external {
                pot += ext[idx];
            }
            if let Some(nl) = &nl {
                pot += nl[idx];
            }
            if pot != 0.0 {
                *v *= Complex64::from_polar(1.0, -pot * self.dt);
            }
        }
        Ok(())
    }

    /// Advance `steps` Strang steps, fusing adjacent half kinetic steps.
    pub fn advance(&self, psi: &mut ComplexField, steps: usize) -> Result<()> {
        if psi.spec() != &self.spec {
            return Err(Error::GridMismatch);
        }
        if steps == 0 {
            return Ok(());
        }
        let values = psi.values_mut();
        self.kinetic(values, &self.half_kinetic);
        for s in 0..steps {
            self.potential(values)?;
            let factors = if s + 1 == steps {
                &self.half_kinetic
            } else {
                &self.full_kinetic
            };
            self.kinetic(values, factors);
        }
        Ok(())
    }
}

/// Runs the evolution, handing every snapshot to `observe` instead of storing it.
pub fn evolve_with(
    psi0: &ComplexField,
    kernel: Option<&KernelSpec>,
    cfg: &EvolutionConfig,
    mut observe: impl FnMut(StateSnapshot) -> Result<()>,
) -> Result<()> {
    let spec = *psi0.spec();
    cfg.validate(&spec)?;
    if !psi0.is_finite() {
        return Err(Error::NonFinite { time: 0.0 });
    }
    let prop = Propagator::new(spec, kernel, cfg.dt, &cfg.external)?;
    let steps = cfg.steps();
    let norm0 = l2_norm_sq(psi0);
    let mut psi = psi0.clone();
    observe(StateSnapshot::capture(0.0, psi.clone()))?;
    let mut done = 0;
    while done < steps {
        let chunk = cfg.snapshot_stride.min(steps - done);
        prop.advance(&mut psi, chunk)?;
        done += chunk;
        let time = done as f64 * cfg.dt;
        if !psi.is_finite() {
            return Err(Error::NonFinite { time });
        }
        let snap = StateSnapshot::capture(time, psi.clone());
        let drift = (snap.norm_sq / norm0 - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::NormDrift { time, drift });
        }
        observe(snap)?;
    }
    Ok(())
}

/// Nonlinear evolution; returns the initial state plus one snapshot per stride
/// (and the final state).
pub fn evolve_nls(psi0: &ComplexField, kernel: &KernelSpec, cfg: &EvolutionConfig) -> Result<Vec<StateSnapshot>> {
    let mut out = Vec::new();
    evolve_with(psi0, Some(kernel), cfg, |s| {
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

/// Linear pilot-wave evolution (no self-interaction).
pub fn evolve_linear_pilot(psi0: &ComplexField, cfg: &EvolutionConfig) -> Result<Vec<StateSnapshot>> {
    let mut out = Vec::new();
    evolve_with(psi0, None, cfg, |s| {
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// max |w(t) - w(0)| / w(0)
    pub width_drift: f64,
    /// max |x̄(t) - x̄(0)| / w(0)
    pub barycentre_drift: f64,
    /// max |N(t) - N(0)| / N(0)
    pub norm_drift: f64,
}

pub fn stability_report(snapshots: &[StateSnapshot]) -> Result<StabilityReport> {
    let mut tracker = StabilityTracker::default();
    snapshots.iter().for_each(|s| tracker.observe(s));
    tracker.report()
}

/// Accumulates a [`StabilityReport`] one snapshot at a time.
#[derive(Debug, Clone, Default)]
pub struct StabilityTracker {
    first: Option<(GridSpec, f64, Vec3, f64)>,
    seen: usize,
    report: Option<StabilityReport>,
}

impl StabilityTracker {
    pub fn observe(&mut self, s: &StateSnapshot) {
        self.seen += 1;
        let Some((spec, w0, b0, n0)) = self.first else {
            self.first = Some((*s.psi.spec(), s.width, s.barycentre, s.norm_sq));
            self.report = Some(StabilityReport {
                width_drift: 0.0,
                barycentre_drift: 0.0,
                norm_drift: 0.0,
            });
            return;
        };
        let r = self.report.as_mut().expect("set with first");
        r.width_drift = r.width_drift.max((s.width - w0).abs() / w0);
        r.barycentre_drift = r.barycentre_drift.max(spec.distance(s.barycentre, b0) / w0);
        r.norm_drift = r.norm_drift.max((s.norm_sq - n0).abs() / n0);
    }

    pub fn report(&self) -> Result<StabilityReport> {
        match self.report {
            Some(r) if self.seen >= 2 => Ok(r),
            _ => Err(Error::InvalidArgument("stability report needs at least two snapshots".into())),
        }
    }
}
