//! Experiment configuration: a TOML file of dotted keys such as
//! `grid.n_per_axis = 64`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::droplets::{DropletPair, ForcingSpec};
use crate::effective_gravity::SourceModel;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Vec3};
use crate::ground_state::SolverOptions;
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GroundState,
    Evolve,
    DbbEnsemble,
    EffectiveGravity,
    Droplet,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GroundState => "ground-state",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::DbbEnsemble => "dbb-ensemble",
            ExperimentKind::EffectiveGravity => "effective-gravity",
            ExperimentKind::Droplet => "droplet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub solver: Option<SolverOptions>,
    #[serde(default)]
    pub ground_state: Option<GroundStateConfig>,
    #[serde(default)]
    pub evolution: Option<EvolutionSection>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub gravity: Option<GravitySection>,
    #[serde(default)]
    pub droplet: Option<DropletSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_per_axis: usize,
    pub box_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Coulomb,
    Yukawa,
    Helmholtz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: KernelName,
    pub coupling: f64,
    #[serde(default)]
    pub screening_length: Option<f64>,
    #[serde(default)]
    pub wavenumber: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateConfig {
    #[serde(default = "one")]
    pub norm: f64,
    /// Also write the profile as a grid dump.
    #[serde(default = "yes")]
    pub dump_profile: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    GroundState,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalKind {
    None,
    Uniform,
    Linear,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    pub kind: ExternalKind,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub gradient: Option<Vec3>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub centre: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    /// Either `t_end` or `periods` (in units of `2π/|E_g|`, ground-state start only).
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub periods: Option<f64>,
    pub snapshot_stride: usize,
    pub initial: InitialState,
    #[serde(default)]
    pub gaussian_width: Option<f64>,
    #[serde(default)]
    pub gaussian_centre: Option<Vec3>,
    #[serde(default)]
    pub gaussian_momentum: Option<Vec3>,
    /// Evolve without self-interaction.
    #[serde(default)]
    pub linear: bool,
    /// Additionally evolve the same initial state without self-interaction.
    #[serde(default)]
    pub compare_linear: bool,
    #[serde(default)]
    pub dump_fields: bool,
    #[serde(default)]
    pub external: Option<ExternalConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_count")]
    pub count: usize,
    pub separation: f64,
    pub sigma: f64,
    /// Amplitudes of the left and right packets.
    pub weights: [f64; 2],
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Histogram range along x; defaults to ±(separation/2 + 4·final width).
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    #[serde(default = "default_points")]
    pub interpolation_points: usize,
    /// Number of full trajectories written to CSV.
    #[serde(default = "default_written")]
    pub write_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravitySection {
    pub positions: Vec<Vec3>,
    pub l_values: Vec<f64>,
    #[serde(default)]
    pub sigma_s: Option<f64>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Mass in kg for the SI calibration of L.
    #[serde(default)]
    pub mass_kg: Option<f64>,
    #[serde(default)]
    pub dump_potential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletSection {
    pub f0: f64,
    pub v: f64,
    pub m_a: f64,
    pub m_b: f64,
    pub l_a: f64,
    pub l_b: f64,
    pub r_max: f64,
    #[serde(default = "default_angles")]
    pub sweep_angles: usize,
    #[serde(default = "default_energy_factor")]
    pub energy_factor: f64,
    #[serde(default = "default_periods")]
    pub periods: f64,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_count() -> usize {
    10_000
}
fn default_bins() -> usize {
    20
}
fn default_points() -> usize {
    6
}
fn default_written() -> usize {
    10
}
fn default_angles() -> usize {
    13
}
fn default_energy_factor() -> f64 {
    1.3
}
fn default_periods() -> f64 {
    20.0
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_hint(text, e.span())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| invalid(name, format!("section is required for experiment '{}'", self.experiment.name())))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = self.section(&self.grid, "grid")?;
        GridSpec::new(g.n_per_axis, g.box_length).map_err(|e| invalid("grid", e))
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = self.section(&self.kernel, "kernel")?;
        let spec = match k.kind {
            KernelName::Coulomb => KernelSpec::coulomb(k.coupling),
            KernelName::Yukawa => KernelSpec::yukawa(
                k.coupling,
                k.screening_length
                    .ok_or_else(|| invalid("kernel.screening_length", "required for the yukawa kernel"))?,
            ),
            KernelName::Helmholtz => KernelSpec::helmholtz(
                k.coupling,
                k.wavenumber
                    .ok_or_else(|| invalid("kernel.wavenumber", "required for the helmholtz kernel"))?,
            ),
        };
        spec.validate().map_err(|e| invalid("kernel", e))?;
        Ok(spec)
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let s = self.solver.unwrap_or_default();
        positive("solver.tol", s.tol)?;
        if s.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be positive"));
        }
        Ok(s)
    }

    pub fn source_model(&self, spec: &GridSpec) -> Result<SourceModel> {
        let g = self.section(&self.gravity, "gravity")?;
        let mut model = match g.sigma_s {
            Some(s) => SourceModel::new(g.positions.clone(), g.l_values.clone(), s),
            None => SourceModel::with_default_width(g.positions.clone(), g.l_values.clone(), spec),
        };
        if let Some(k) = &self.kernel {
            model.screening_length = k.screening_length;
        }
        model.validate(spec).map_err(|e| match e {
            Error::SourceOverlap { .. } => invalid("gravity.positions", format!("SourceOverlap: {e}")),
            other => invalid("gravity", other),
        })?;
        Ok(model)
    }

    pub fn forcing(&self) -> Result<(ForcingSpec, DropletPair)> {
        let d = self.section(&self.droplet, "droplet")?;
        positive("droplet.f0", d.f0)?;
        positive("droplet.v", d.v)?;
        for (key, v) in [("droplet.m_a", d.m_a), ("droplet.m_b", d.m_b), ("droplet.l_a", d.l_a), ("droplet.l_b", d.l_b)] {
            positive(key, v)?;
        }
        Ok((ForcingSpec::new(d.f0, d.v)?, DropletPair::new(d.m_a, d.m_b, d.l_a, d.l_b)?))
    }

    /// Checks every parameter the chosen experiment will use; no computation.
    pub fn validate(&self) -> Result<()> {
        match self.experiment {
            ExperimentKind::GroundState => {
                self.grid_spec()?;
                self.kernel_spec()?;
                self.solver_options()?;
                if let Some(gs) = &self.ground_state {
                    positive("ground_state.norm", gs.norm)?;
                }
            }
            ExperimentKind::Evolve => {
                let spec = self.grid_spec()?;
                let e = self.section(&self.evolution, "evolution")?;
                if !e.linear || e.initial == InitialState::GroundState {
                    self.kernel_spec()?;
                }
                if e.initial == InitialState::GroundState {
                    self.solver_options()?;
                }
                let h2 = spec.spacing().powi(2);
                if !(e.dt > 0.0 && e.dt < h2) {
                    return Err(invalid("evolution.dt", format!("must satisfy 0 < dt < spacing² = {h2}, got {}", e.dt)));
                }
                if e.snapshot_stride == 0 {
                    return Err(invalid("evolution.snapshot_stride", "must be positive"));
                }
                match (e.t_end, e.periods) {
                    (Some(t), None) => {
                        if !(t >= e.dt) {
                            return Err(invalid("evolution.t_end", format!("must be >= dt = {}, got {t}", e.dt)));
                        }
                    }
                    (None, Some(p)) => {
                        positive("evolution.periods", p)?;
                        if e.initial != InitialState::GroundState {
                            return Err(invalid("evolution.periods", "only available with initial = \"ground-state\""));
                        }
                    }
                    _ => return Err(invalid("evolution.t_end", "set exactly one of evolution.t_end and evolution.periods")),
                }
                if e.initial == InitialState::Gaussian {
                    positive(
                        "evolution.gaussian_width",
                        e.gaussian_width
                            .ok_or_else(|| invalid("evolution.gaussian_width", "required for a gaussian start"))?,
                    )?;
                }
                if let Some(x) = &e.external {
                    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(key, "required for this external potential"));
                    match x.kind {
                        ExternalKind::None => {}
                        ExternalKind::Uniform => {
                            need(x.value, "evolution.external.value")?;
                        }
                        ExternalKind::Linear => {
                            x.gradient
                                .ok_or_else(|| invalid("evolution.external.gradient", "required for a linear potential"))?;
                        }
                        ExternalKind::Harmonic => positive("evolution.external.omega", need(x.omega, "evolution.external.omega")?)?,
                    }
                }
            }
            ExperimentKind::DbbEnsemble => {
                let spec = self.grid_spec()?;
                if self.seed.is_none() {
                    return Err(invalid("seed", "required for ensemble sampling"));
                }
                let e = self.section(&self.ensemble, "ensemble")?;
                positive("ensemble.separation", e.separation)?;
                positive("ensemble.sigma", e.sigma)?;
                positive("ensemble.t_end", e.t_end)?;
                for (i, w) in e.weights.iter().enumerate() {
                    positive(&format!("ensemble.weights[{i}]"), *w)?;
                }
                let h2 = spec.spacing().powi(2);
                if !(e.dt > 0.0 && e.dt < h2) {
                    return Err(invalid("ensemble.dt", format!("must satisfy 0 < dt < spacing² = {h2}, got {}", e.dt)));
                }
                if !(e.t_end >= e.dt) {
                    return Err(invalid("ensemble.t_end", "must be >= dt"));
                }
                if e.snapshot_stride == 0 {
                    return Err(invalid("ensemble.snapshot_stride", "must be positive"));
                }
                if e.count == 0 {
                    return Err(invalid("ensemble.count", "must be positive"));
                }
                if e.bins < 2 {
                    return Err(invalid("ensemble.bins", "need at least 2 bins"));
                }
                if !matches!(e.interpolation_points, 2 | 4 | 6) {
                    return Err(invalid("ensemble.interpolation_points", "must be 2, 4 or 6"));
                }
                if let Some([lo, hi]) = e.range {
                    if !(hi > lo) {
                        return Err(invalid("ensemble.range", "upper bound must exceed lower bound"));
                    }
                }
            }
            ExperimentKind::EffectiveGravity => {
                let spec = self.grid_spec()?;
                let model = self.source_model(&spec)?;
                let g = self.section(&self.gravity, "gravity")?;
                if let Some([lo, hi]) = g.window {
                    let (dlo, dhi) = crate::effective_gravity::default_window(&model, &spec);
                    if !(lo >= dlo && hi <= dhi && lo < hi) {
                        return Err(invalid("gravity.window", format!("must lie within [{dlo}, {dhi}]")));
                    }
                }
                if let Some(m) = g.mass_kg {
                    positive("gravity.mass_kg", m)?;
                }
            }
            ExperimentKind::Droplet => {
                let (spec, _) = self.forcing()?;
                let d = self.section(&self.droplet, "droplet")?;
                positive("droplet.r_max", d.r_max)?;
                if d.r_max < spec.faraday_wavelength() {
                    return Err(invalid("droplet.r_max", format!("must exceed the Faraday wavelength {}", spec.faraday_wavelength())));
                }
                if d.sweep_angles < 2 {
                    return Err(invalid("droplet.sweep_angles", "need at least 2"));
                }
                positive("droplet.energy_factor", d.energy_factor)?;
                positive("droplet.periods", d.periods)?;
            }
        }
        Ok(())
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}
