//! Walker pairs interacting through the Helmholtz pseudo-potential
//! `U(d) = -v²(M_B L_A + M_A L_B) cos(k0 d)/d`: force zones, potential
//! minima and their `(n/2 - ε)λ_F` pattern, and two-body orbits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::grid::Vec3;
use crate::guidance::Trajectory;
use crate::kernels::{helmholtz_green, helmholtz_green_derivative};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    /// Bath forcing frequency.
    pub f0: f64,
    /// Surface-wave speed.
    pub v: f64,
}

impl ForcingSpec {
    pub fn new(f0: f64, v: f64) -> Result<Self> {
        let s = ForcingSpec { f0, v };
        s.validate()?;
        Ok(s)
    }

    /// Forcing chosen so that the Faraday wavelength is `lambda_f`.
    pub fn from_faraday_wavelength(lambda_f: f64, v: f64) -> Result<Self> {
        Self::new(2.0 * v / lambda_f, v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.0 && self.f0.is_finite() && self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "forcing needs f0 > 0 and v > 0, got f0 = {} and v = {}",
                self.f0, self.v
            )));
        }
        Ok(())
    }

    pub fn lambda0(&self) -> f64 {
        self.v / self.f0
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI * self.f0 / self.v
    }

    pub fn faraday_frequency(&self) -> f64 {
        0.5 * self.f0
    }

    pub fn faraday_wavelength(&self) -> f64 {
        self.v / self.faraday_frequency()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropletPair {
    pub m_a: f64,
    pub m_b: f64,
    pub l_a: f64,
    pub l_b: f64,
}

impl DropletPair {
    pub fn new(m_a: f64, m_b: f64, l_a: f64, l_b: f64) -> Result<Self> {
        let p = DropletPair { m_a, m_b, l_a, l_b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.m_a, self.m_b, self.l_a, self.l_b].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("droplet masses and lengths must be > 0: {self:?}")))
        }
    }

    pub fn reduced_mass(&self) -> f64 {
        self.m_a * self.m_b / (self.m_a + self.m_b)
    }

    fn strength(&self, spec: &ForcingSpec) -> f64 {
        spec.v * spec.v * (self.m_b * self.l_a + self.m_a * self.l_b)
    }
}

/// `φ^PG(x) = -v² Σ Lᵢ cos(k0 rᵢ)/rᵢ`
pub fn pseudo_potential(x: Vec3, sources: &[(Vec3, f64)], spec: &ForcingSpec) -> Result<f64> {
    spec.validate()?;
    let mut sum = 0.0;
    for (pos, l) in sources {
        let r = distance(x, *pos);
        if r == 0.0 {
            return Err(Error::InvalidArgument(format!("query point coincides with the source at {pos:?}")));
        }
        sum += l * helmholtz_green(r, spec.k0())?;
    }
    Ok(-spec.v * spec.v * sum)
}

fn check_separation(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("separation must be > 0, got {d}")))
    }
}

/// `U(d)`, with self-interactions excluded.
pub fn pair_interaction(d: f64, pair: &DropletPair, spec: &ForcingSpec) -> Result<f64> {
    check_separation(d)?;
    Ok(-pair.strength(spec) * helmholtz_green(d, spec.k0())?)
}

/// `dU/dd`; positive means the pair attracts.
pub fn pair_interaction_slope(d: f64, pair: &DropletPair, spec: &ForcingSpec) -> Result<f64> {
    check_separation(d)?;
    Ok(-pair.strength(spec) * helmholtz_green_derivative(d, spec.k0()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneKind {
    Attractive,
    Repulsive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub start: f64,
    pub end: f64,
    pub kind: ZoneKind,
}

/// `u sin u + cos u`, whose sign is the sign of dU/dd at `u = k0 d`.
fn force_sign_function(u: f64) -> f64 {
    u * u.sin() + u.cos()
}

/// The n-th positive root (n = 0, 1, …) of `tan u = -1/u`. Each root lies
/// between consecutive extrema `π/2 + nπ` and `3π/2 + nπ` of `u sin u + cos u`,
/// where the function is monotone.
pub fn force_root(n: usize) -> f64 {
    let mut lo = 0.5 * PI + n as f64 * PI;
    let mut hi = lo + PI;
    let f_lo = force_sign_function(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (force_sign_function(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Alternating force zones on `(0, r_max)`, starting with the attractive core.
pub fn classify_zones(spec: &ForcingSpec, r_max: f64) -> Result<Vec<Zone>> {
    spec.validate()?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("r_max must be > 0, got {r_max}")));
    }
    let k0 = spec.k0();
    let mut zones = Vec::new();
    let mut start = 0.0;
    let mut kind = ZoneKind::Attractive;
    for n in 0.. {
        let r = force_root(n) / k0;
        if r >= r_max {
            break;
        }
        zones.push(Zone { start, end: r, kind });
        start = r;
        kind = match kind {
            ZoneKind::Attractive => ZoneKind::Repulsive,
            ZoneKind::Repulsive => ZoneKind::Attractive,
        };
    }
    zones.push(Zone { start, end: r_max, kind });
    Ok(zones)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult {
    pub equilibrium_radii: Vec<f64>,
    pub n_indices: Vec<u32>,
    /// Global offset in `dₙ = (n/2 - ε)λ_F`.
    pub epsilon: f64,
    /// 95% confidence interval of ε (Student t over the per-radius offsets).
    pub epsilon_ci: (f64, f64),
    /// `dₙ/λ_F - (n/2 - ε)` per radius.
    pub residuals: Vec<f64>,
    pub stable: Vec<bool>,
}

impl OrbitResult {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Minima of `U(d)` below `r_max` and their least-squares fit to `(n/2 - ε)λ_F`.
pub fn orbit_equilibria(pair: &DropletPair, spec: &ForcingSpec, r_max: f64) -> Result<OrbitResult> {
    pair.validate()?;
    spec.validate()?;
    let k0 = spec.k0();
    let lambda_f = spec.faraday_wavelength();
    // odd-indexed force roots are where U turns from falling to rising
    let radii: Vec<f64> = (0..)
        .map(|m| force_root(2 * m + 1) / k0)
        .take_while(|r| *r < r_max)
        .collect();
    if radii.is_empty() {
        return Err(Error::NoEquilibria { r_max });
    }
    let n_indices: Vec<u32> = radii.iter().map(|d| (2.0 * d / lambda_f).round() as u32).collect();
    let offsets: Vec<f64> = radii
        .iter()
        .zip(&n_indices)
        .map(|(d, n)| *n as f64 / 2.0 - d / lambda_f)
        .collect();
    let count = offsets.len() as f64;
    let epsilon = offsets.iter().sum::<f64>() / count;
    let epsilon_ci = if offsets.len() > 1 {
        let var = offsets.iter().map(|e| (e - epsilon).powi(2)).sum::<f64>() / (count - 1.0);
        let t = StudentsT::new(0.0, 1.0, count - 1.0)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .inverse_cdf(0.975);
        let half = t * (var / count).sqrt();
        (epsilon - half, epsilon + half)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let residuals = offsets.iter().map(|e| epsilon - e).collect();
    let stable = radii
        .iter()
        .map(|d| {
            // U'' at a stationary point has the sign of d/du (u sin u + cos u) = u cos u
            let u = k0 * d;
            u * u.cos() > 0.0
        })
        .collect();
    Ok(OrbitResult {
        equilibrium_radii: radii,
        n_indices,
        epsilon,
        epsilon_ci,
        residuals,
        stable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyState {
    pub positions: [Vec3; 2],
    pub velocities: [Vec3; 2],
}

impl TwoBodyState {
    /// Centre-of-mass frame: separation `d` along x, relative velocity
    /// `speed·(cos α, sin α, 0)` where α = 0 points A directly away from B.
    pub fn relative(pair: &DropletPair, d: f64, speed: f64, alpha: f64) -> Self {
        let total = pair.m_a + pair.m_b;
        let (fa, fb) = (pair.m_b / total, pair.m_a / total);
        let w = [speed * alpha.cos(), speed * alpha.sin(), 0.0];
        TwoBodyState {
            positions: [[fa * d, 0.0, 0.0], [-fb * d, 0.0, 0.0]],
            velocities: [w.map(|c| fa * c), w.map(|c| -fb * c)],
        }
    }

    pub fn separation(&self) -> f64 {
        distance(self.positions[0], self.positions[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSimulation {
    pub trajectory: Trajectory,
    pub separations: Vec<f64>,
    pub energies: Vec<f64>,
    /// max |E(t) - E(0)| / max(|E(0)|, |U(0)|)
    pub energy_drift: f64,
    /// max |L(t) - L(0)| / |L(0)| (absolute when L(0) = 0)
    pub angular_momentum_drift: f64,
}

fn distance(a: Vec3, b: Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Velocity-Verlet integration of the pair; stops with `CollisionDetected`
/// once the separation falls below `10⁻³·min(λ_F, d(0))`.
pub fn simulate_orbit(pair: &DropletPair, spec: &ForcingSpec, init: &TwoBodyState, t_end: f64, dt: f64) -> Result<OrbitSimulation> {
    pair.validate()?;
    spec.validate()?;
    let d0 = init.separation();
    check_separation(d0)?;
    if !(dt > 0.0 && t_end >= dt) {
        return Err(Error::InvalidArgument(format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")));
    }
    let masses = [pair.m_a, pair.m_b];
    let collision = 1e-3 * spec.faraday_wavelength().min(d0);
    let accelerations = |s: &TwoBodyState, time: f64| -> Result<[Vec3; 2]> {
        let d = s.separation();
        if d < collision {
            return Err(Error::CollisionDetected { time, separation: d });
        }
        let slope = pair_interaction_slope(d, pair, spec)?;
        let e: Vec3 = std::array::from_fn(|a| (s.positions[0][a] - s.positions[1][a]) / d);
        Ok([e.map(|c| -slope * c / masses[0]), e.map(|c| slope * c / masses[1])])
    };
    let energy = |s: &TwoBodyState| -> Result<(f64, f64)> {
        let kinetic: f64 = (0..2)
            .map(|p| 0.5 * masses[p] * s.velocities[p].iter().map(|v| v * v).sum::<f64>())
            .sum();
        let u = pair_interaction(s.separation(), pair, spec)?;
        Ok((kinetic + u, u))
    };
    let ang = |s: &TwoBodyState| -> Vec3 {
        let mut l = [0.0; 3];
        for p in 0..2 {
            let c = cross(s.positions[p], s.velocities[p]);
            for a in 0..3 {
                l[a] += masses[p] * c[a];
            }
        }
        l
    };
    let steps = (t_end / dt).round() as usize;
    let mut state = *init;
    let mut acc = accelerations(&state, 0.0)?;
    let (e0, u0) = energy(&state)?;
    let l0 = ang(&state);
    let l0_norm = distance(l0, [0.0; 3]);
    let e_scale = e0.abs().max(u0.abs());
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        particles: vec![Default::default(); 2],
    };
    let mut out = OrbitSimulation {
        trajectory: Trajectory::default(),
        separations: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
        energy_drift: 0.0,
        angular_momentum_drift: 0.0,
    };
    let record = |traj: &mut Trajectory, out: &mut OrbitSimulation, s: &TwoBodyState, t: f64, e: f64| {
        traj.push(t, &[(s.positions[0], s.velocities[0]), (s.positions[1], s.velocities[1])]);
        out.separations.push(s.separation());
        out.energies.push(e);
    };
    record(&mut traj, &mut out, &state, 0.0, e0);
    for step in 1..=steps {
        let t = step as f64 * dt;
        let before = state;
        for p in 0..2 {
            for a in 0..3 {
                state.velocities[p][a] += 0.5 * dt * acc[p][a];
                state.positions[p][a] += dt * state.velocities[p][a];
            }
        }
        // closest approach during the straight drift, so a fast pair cannot step through
        let r0: Vec3 = std::array::from_fn(|a| before.positions[0][a] - before.positions[1][a]);
        let dr: Vec3 = std::array::from_fn(|a| state.positions[0][a] - state.positions[1][a] - r0[a]);
        let dr2: f64 = dr.iter().map(|v| v * v).sum();
        if dr2 > 0.0 {
            let s = (-(0..3).map(|a| r0[a] * dr[a]).sum::<f64>() / dr2).clamp(0.0, 1.0);
            let closest = distance(std::array::from_fn(|a| r0[a] + s * dr[a]), [0.0; 3]);
            if closest < collision {
                return Err(Error::CollisionDetected {
                    time: t - dt + s * dt,
                    separation: closest,
                });
            }
        }
        acc = accelerations(&state, t)?;
        for p in 0..2 {
            for a in 0..3 {
                state.velocities[p][a] += 0.5 * dt * acc[p][a];
            }
        }
        let (e, _) = energy(&state)?;
        let l = ang(&state);
        out.energy_drift = out.energy_drift.max((e - e0).abs() / e_scale);
        let dl = distance(l, l0);
        out.angular_momentum_drift = out
            .angular_momentum_drift
            .max(if l0_norm > 0.0 { dl / l0_norm } else { dl });
        record(&mut traj, &mut out, &state, t, e);
    }
    out.trajectory = traj;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Separation stayed below the barrier radius for the whole run.
    Captured,
    /// Separation grew monotonically after closest approach and ended beyond its start.
    Scattered,
    Undetermined,
}

pub fn classify_outcome(separations: &[f64], barrier_radius: f64) -> Outcome {
    if separations.iter().all(|d| *d < barrier_radius) {
        return Outcome::Captured;
    }
    let closest = separations
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, d)| if *d < best.1 { (i, *d) } else { best })
        .0;
    let monotone = separations[closest..].windows(2).all(|w| w[1] >= w[0]);
    if monotone && separations.last() > separations.first() {
        Outcome::Scattered
    } else {
        Outcome::Undetermined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub impact_parameter: f64,
    pub alpha: f64,
    pub outcome: Outcome,
    pub energy_drift: f64,
    pub final_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureSweep {
    pub start_separation: f64,
    pub barrier_radius: f64,
    pub speed: f64,
    pub radial_period: f64,
    pub t_end: f64,
    pub rows: Vec<SweepRow>,
}

/// Launches the pair from the first potential minimum at a fixed relative
/// speed whose kinetic energy is `energy_factor` times the height of the
/// next outer barrier above that minimum, sweeping the launch angle (hence
/// the impact parameter `d·|sin α|`) over `[0, π]`. Each run lasts
/// `periods` small-oscillation periods of the well.
pub fn capture_sweep(pair: &DropletPair, spec: &ForcingSpec, energy_factor: f64, angles: usize, periods: f64) -> Result<CaptureSweep> {
    pair.validate()?;
    spec.validate()?;
    if angles < 2 || !(energy_factor > 0.0) || !(periods > 0.0) {
        return Err(Error::InvalidArgument("capture sweep needs >= 2 angles, energy_factor > 0 and periods > 0".into()));
    }
    let k0 = spec.k0();
    let d0 = force_root(1) / k0;
    let barrier = force_root(2) / k0;
    let mu = pair.reduced_mass();
    let height = pair_interaction(barrier, pair, spec)? - pair_interaction(d0, pair, spec)?;
    let speed = (2.0 * energy_factor * height / mu).sqrt();
    // U''(d0) = strength·k0·u·cos(u)/d0² at a stationary point u = k0 d0
    let u = k0 * d0;
    let curvature = pair.strength(spec) * k0 * u * u.cos() / (d0 * d0);
    let radial_period = 2.0 * PI / (curvature / mu).sqrt();
    let t_end = periods * radial_period;
    let dt = radial_period / 2000.0;
    let rows = (0..angles)
        .map(|i| {
            let alpha = PI * i as f64 / (angles - 1) as f64;
            let init = TwoBodyState::relative(pair, d0, speed, alpha);
            let sim = simulate_orbit(pair, spec, &init, t_end, dt)?;
            Ok(SweepRow {
                impact_parameter: d0 * alpha.sin().abs(),
                alpha,
                outcome: classify_outcome(&sim.separations, barrier),
                energy_drift: sim.energy_drift,
                final_separation: *sim.separations.last().unwrap(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CaptureSweep {
        start_separation: d0,
        barrier_radius: barrier,
        speed,
        radial_period,
        t_end,
        rows,
    })
}
