//! de Broglie–Bohm guidance: velocities `v = Im(∇ψ/ψ)` from a pilot wave and
//! RK4 integration of particle paths through a time series of pilot snapshots.

mod packets;
mod two_particle;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::evolution::StateSnapshot;
use crate::grid::{spectral_gradient, ComplexField, Vec3, WideStencil};

pub use packets::{GaussianPacket, PacketSuperposition};
pub use two_particle::{integrate_two_particle, Exchange, SingleParticleState, TwoParticleOptions, TwoParticlePilot};

/// Relative density below which velocities are refused.
pub const NODE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceOptions {
    pub node_floor: f64,
    /// Speed cap; `None` uses the grid Nyquist speed `√3·π/h`.
    pub v_max: Option<f64>,
    /// Velocity scale below which interpolation errors are measured absolutely.
    pub v_floor: f64,
    /// Lagrange nodes per axis used to interpolate ψ and ∇ψ: 2 (trilinear), 4 or 6.
    pub interpolation_points: usize,
}

impl Default for GuidanceOptions {
    fn default() -> Self {
        GuidanceOptions {
            node_floor: NODE_FLOOR,
            v_max: None,
            v_floor: 0.1,
            interpolation_points: 6,
        }
    }
}

fn ratio_velocity(psi: Complex64, grad: &[Complex64; 3], scale: f64, floor: f64, x: Vec3) -> Result<Vec3> {
    let density = psi.norm_sqr();
    if !(density >= floor * scale) || density == 0.0 {
        return Err(Error::NodeProximity {
            point: x,
            density: density / scale,
        });
    }
    Ok(std::array::from_fn(|a| (grad[a] * psi.conj()).im / density))
}

pub(crate) fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// A pilot wave together with its spectral gradient, ready for point queries.
#[derive(Debug, Clone)]
pub struct VelocityField {
    psi: ComplexField,
    grad: [ComplexField; 3],
    max_density: f64,
}

impl VelocityField {
    pub fn new(psi: &ComplexField) -> Result<Self> {
        let grad = spectral_gradient(psi)?;
        let max_density = psi.values().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        Ok(VelocityField {
            psi: psi.clone(),
            grad,
            max_density,
        })
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    fn sample(&self, x: Vec3, points: usize) -> Result<(Complex64, [Complex64; 3])> {
        let spec = self.psi.spec();
        let s = WideStencil::new(spec, x, points)?;
        let (p, g0, g1, g2) = (self.psi.values(), self.grad[0].values(), self.grad[1].values(), self.grad[2].values());
        let mut psi = Complex64::default();
        let mut grad = [Complex64::default(); 3];
        s.for_each(spec, |i, w| {
            psi += p[i] * w;
            grad[0] += g0[i] * w;
            grad[1] += g1[i] * w;
            grad[2] += g2[i] * w;
        });
        Ok((psi, grad))
    }

    pub fn velocity(&self, x: Vec3, opts: &GuidanceOptions) -> Result<Vec3> {
        let (psi, grad) = self.sample(x, opts.interpolation_points)?;
        ratio_velocity(psi, &grad, self.max_density, opts.node_floor, x)
    }
}

/// dB-B velocity of `psi` at `x` (one-off query; builds the gradient each call).
pub fn dbb_velocity(psi: &ComplexField, x: Vec3) -> Result<Vec3> {
    VelocityField::new(psi)?.velocity(x, &GuidanceOptions::default())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticlePath {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

/// Time-stamped positions and velocities of one or more particles.
/// Positions are not wrapped into the box.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub particles: Vec<ParticlePath>,
}

impl Trajectory {
    fn with_particles(count: usize) -> Self {
        Trajectory {
            times: Vec::new(),
            particles: vec![ParticlePath::default(); count],
        }
    }

    pub(crate) fn push(&mut self, t: f64, states: &[(Vec3, Vec3)]) {
        self.times.push(t);
        for (p, (x, v)) in self.particles.iter_mut().zip(states) {
            p.positions.push(*x);
            p.velocities.push(*v);
        }
    }

    pub fn final_position(&self, particle: usize) -> Option<Vec3> {
        self.particles.get(particle)?.positions.last().copied()
    }

    pub fn max_speed(&self) -> f64 {
        self.particles
            .iter()
            .flat_map(|p| p.velocities.iter())
            .map(|v| norm3(*v))
            .fold(0.0, f64::max)
    }

    /// `max|v|·width` (ħ = 1): small values mean the soliton moves slowly on
    /// the scale of its own size.
    pub fn regime_diagnostic(&self, width: f64) -> f64 {
        self.max_speed() * width
    }

    /// CSV with columns `t,x,y,z,vx,vy,vz`, one block of rows per particle.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        out.write_record(["t", "x", "y", "z", "vx", "vy", "vz"]).map_err(csv_err)?;
        for p in &self.particles {
            for (i, t) in self.times.iter().enumerate() {
                let (x, v) = (p.positions[i], p.velocities[i]);
                let row = [*t, x[0], x[1], x[2], v[0], v[1], v[2]].map(|f| format!("{f:.17e}"));
                out.write_record(&row).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Pilot snapshots prepared for trajectory integration; ψ and ∇ψ are linear
/// in time between consecutive snapshots.
#[derive(Debug, Clone)]
pub struct PilotSeries {
    times: Vec<f64>,
    fields: Vec<VelocityField>,
}

impl PilotSeries {
    pub fn new(snapshots: &[StateSnapshot]) -> Result<Self> {
        let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
        let fields = snapshots.iter().map(|s| VelocityField::new(&s.psi)).collect::<Result<Vec<_>>>()?;
        Self::from_fields(times, fields)
    }

    pub fn from_fields(times: Vec<f64>, fields: Vec<VelocityField>) -> Result<Self> {
        if times.len() < 2 || times.len() != fields.len() {
            return Err(Error::InvalidArgument("a pilot series needs at least two snapshots".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
        }
        let spec = *fields[0].psi.spec();
        if fields.iter().any(|f| *f.psi.spec() != spec) {
            return Err(Error::GridMismatch);
        }
        Ok(PilotSeries { times, fields })
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn velocity_in(&self, interval: usize, t: f64, x: Vec3, opts: &GuidanceOptions) -> Result<Vec3> {
        let (a, b) = (&self.fields[interval], &self.fields[interval + 1]);
        let s = ((t - self.times[interval]) / (self.times[interval + 1] - self.times[interval])).clamp(0.0, 1.0);
        let (pa, ga) = a.sample(x, opts.interpolation_points)?;
        let (pb, gb) = b.sample(x, opts.interpolation_points)?;
        let psi = pa * (1.0 - s) + pb * s;
        let grad = std::array::from_fn(|k| ga[k] * (1.0 - s) + gb[k] * s);
        let scale = a.max_density * (1.0 - s) + b.max_density * s;
        let v = ratio_velocity(psi, &grad, scale, opts.node_floor, x)?;
        let cap = opts
            .v_max
            .unwrap_or_else(|| 3f64.sqrt() * std::f64::consts::PI / a.psi.spec().spacing());
        let speed = norm3(v);
        if speed > cap {
            return Err(Error::VelocityCap { speed, cap });
        }
        Ok(v)
    }

    /// Estimates the time-interpolation error of v at `x` over interval `i`
    /// from the second difference across three snapshots (`|Δ²v|/8`, exact
    /// for quadratic time dependence). With only two snapshots the change
    /// of v across the interval is used instead.
    fn check_band(&self, i: usize, x: Vec3, opts: &GuidanceOptions) -> Result<()> {
        let at = |k: usize| -> Result<Vec3> {
            if k + 1 < self.times.len() {
                self.velocity_in(k, self.times[k], x, opts)
            } else {
                self.velocity_in(k - 1, self.times[k], x, opts)
            }
        };
        let (estimate, scale) = if self.times.len() < 3 {
            let (va, vb) = (at(0)?, at(1)?);
            let change = norm3(std::array::from_fn(|k| vb[k] - va[k]));
            (change, norm3(va).max(norm3(vb)))
        } else {
            let first = i.saturating_sub(1).min(self.times.len() - 3);
            let (va, vb, vc) = (at(first)?, at(first + 1)?, at(first + 2)?);
            let second = norm3(std::array::from_fn(|k| va[k] - 2.0 * vb[k] + vc[k])) / 8.0;
            (second, norm3(va).max(norm3(vb)).max(norm3(vc)))
        };
        let scale = scale.max(opts.v_floor);
        if estimate > 0.1 * scale {
            return Err(Error::StepOutOfBand {
                time: self.times[i],
                change: estimate / scale,
            });
        }
        Ok(())
    }

    /// RK4 with four fixed steps per snapshot interval.
    pub fn integrate(&self, x_init: Vec3, opts: &GuidanceOptions) -> Result<Trajectory> {
        let mut traj = Trajectory::with_particles(1);
        let mut x = x_init;
        let v0 = self.velocity_in(0, self.times[0], x, opts)?;
        traj.push(self.times[0], &[(x, v0)]);
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            self.check_band(i, x, opts)?;
            let h = 0.25 * (t1 - t0);
            for step in 0..4 {
                let t = t0 + step as f64 * h;
                let f = |tt: f64, xx: Vec3| self.velocity_in(i, tt, xx, opts);
                let axpy = |base: Vec3, k: Vec3, c: f64| -> Vec3 { std::array::from_fn(|a| base[a] + c * k[a]) };
                let k1 = f(t, x)?;
                let k2 = f(t + 0.5 * h, axpy(x, k1, 0.5 * h))?;
                let k3 = f(t + 0.5 * h, axpy(x, k2, 0.5 * h))?;
                let k4 = f(t + h, axpy(x, k3, h))?;
                x = std::array::from_fn(|a| x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
                if !x.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite { time: t + h });
                }
                let tn = if step == 3 { t1 } else { t + h };
                let v = self.velocity_in(i, tn, x, opts)?;
                traj.push(tn, &[(x, v)]);
            }
        }
        Ok(traj)
    }

    /// Independent trajectories from many starts, integrated in parallel.
    pub fn integrate_ensemble(&self, starts: &[Vec3], opts: &GuidanceOptions) -> Result<Vec<Trajectory>> {
        starts.par_iter().map(|x| self.integrate(*x, opts)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of samples binned by `edges` (outer bins open-ended)
/// against bin probabilities `probs`.
pub fn chi_square_test(samples: &[f64], edges: &[f64], probs: &[f64]) -> Result<ChiSquareTest> {
    let bins = edges.len().saturating_sub(1);
    if bins < 2 || probs.len() != bins || samples.is_empty() {
        return Err(Error::InvalidArgument("chi-square needs >= 2 bins, one probability per bin and samples".into()));
    }
    let mut observed = vec![0u64; bins];
    for s in samples {
        let k = edges[1..bins].partition_point(|e| e <= s);
        observed[k] += 1;
    }
    let total: f64 = probs.iter().sum();
    let n = samples.len() as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p / total * n).collect();
    let statistic = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (*o as f64 - e).powi(2) / e)
        .sum::<f64>();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquareTest {
        observed,
        expected,
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

pub fn integrate_trajectory(pilot_snapshots: &[StateSnapshot], x_init: Vec3) -> Result<Trajectory> {
    PilotSeries::new(pilot_snapshots)?.integrate(x_init, &GuidanceOptions::default())
}
