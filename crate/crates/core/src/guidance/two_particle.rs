//! Two-particle pilot waves as closed-form sums of products of one-particle
//! states; gradients are analytic, no 6D grid is involved.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::packets::GaussianPacket;
use super::{ratio_velocity, Trajectory, NODE_FLOOR};
use crate::error::{Error, Result};
use crate::grid::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleParticleState {
    /// `exp(i(k·x - |k|²t/2))`
    PlaneWave { wavevector: Vec3 },
    Packet(GaussianPacket),
}

impl SingleParticleState {
    pub fn value_and_gradient(&self, x: Vec3, t: f64) -> (Complex64, [Complex64; 3]) {
        match self {
            SingleParticleState::PlaneWave { wavevector: k } => {
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let v = Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2] - 0.5 * k2 * t);
                (v, std::array::from_fn(|a| v * Complex64::new(0.0, k[a])))
            }
            SingleParticleState::Packet(g) => g.value_and_gradient(x, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exchange {
    Symmetric,
    Antisymmetric,
}

/// `Ψ(x1, x2, t) = Σ cⱼ aⱼ(x1, t) bⱼ(x2, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticlePilot {
    pub terms: Vec<(Complex64, SingleParticleState, SingleParticleState)>,
}

impl TwoParticlePilot {
    pub fn product(a: SingleParticleState, b: SingleParticleState) -> Self {
        TwoParticlePilot {
            terms: vec![(Complex64::new(1.0, 0.0), a, b)],
        }
    }

    /// `a(x1)b(x2) ± a(x2)b(x1)`
    pub fn symmetrized(a: SingleParticleState, b: SingleParticleState, exchange: Exchange) -> Self {
        let sign = match exchange {
            Exchange::Symmetric => 1.0,
            Exchange::Antisymmetric => -1.0,
        };
        TwoParticlePilot {
            terms: vec![
                (Complex64::new(1.0, 0.0), a, b),
                (Complex64::new(sign, 0.0), b, a),
            ],
        }
    }

    /// Value, gradients with respect to x1 and x2, and the sum of term magnitudes
    /// (the density scale for the node test).
    pub fn evaluate(&self, x1: Vec3, x2: Vec3, t: f64) -> (Complex64, [Complex64; 3], [Complex64; 3], f64) {
        let mut v = Complex64::default();
        let mut g1 = [Complex64::default(); 3];
        let mut g2 = [Complex64::default(); 3];
        let mut scale = 0.0;
        for (c, a, b) in &self.terms {
            let (av, ag) = a.value_and_gradient(x1, t);
            let (bv, bg) = b.value_and_gradient(x2, t);
            v += c * av * bv;
            scale += (c * av * bv).norm();
            for k in 0..3 {
                g1[k] += c * ag[k] * bv;
                g2[k] += c * av * bg[k];
            }
        }
        (v, g1, g2, scale * scale)
    }

    pub fn velocities(&self, x1: Vec3, x2: Vec3, t: f64, node_floor: f64) -> Result<[Vec3; 2]> {
        let (v, g1, g2, scale) = self.evaluate(x1, x2, t);
        Ok([
            ratio_velocity(v, &g1, scale, node_floor, x1)?,
            ratio_velocity(v, &g2, scale, node_floor, x2)?,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoParticleOptions {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_floor")]
    pub node_floor: f64,
}

fn default_floor() -> f64 {
    NODE_FLOOR
}

impl TwoParticleOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        TwoParticleOptions {
            t_end,
            dt,
            node_floor: NODE_FLOOR,
        }
    }
}

/// RK4 on the 6D configuration `(x1, x2)` from t = 0 to `t_end`.
pub fn integrate_two_particle(pilot: &TwoParticlePilot, x1_init: Vec3, x2_init: Vec3, opts: &TwoParticleOptions) -> Result<Trajectory> {
    if !(opts.dt > 0.0 && opts.t_end >= opts.dt) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= t_end, got dt = {} and t_end = {}",
            opts.dt, opts.t_end
        )));
    }
    if pilot.terms.is_empty() {
        return Err(Error::InvalidArgument("two-particle pilot has no terms".into()));
    }
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let h = opts.t_end / steps as f64;
    let f = |t: f64, y: &[Vec3; 2]| pilot.velocities(y[0], y[1], t, opts.node_floor);
    let shift = |y: &[Vec3; 2], k: &[Vec3; 2], c: f64| -> [Vec3; 2] {
        std::array::from_fn(|p| std::array::from_fn(|a| y[p][a] + c * k[p][a]))
    };
    let mut traj = Trajectory::with_particles(2);
    let mut y = [x1_init, x2_init];
    let v = f(0.0, &y)?;
    traj.push(0.0, &[(y[0], v[0]), (y[1], v[1])]);
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &shift(&y, &k1, 0.5 * h))?;
        let k3 = f(t + 0.5 * h, &shift(&y, &k2, 0.5 * h))?;
        let k4 = f(t + h, &shift(&y, &k3, h))?;
        y = std::array::from_fn(|p| {
            std::array::from_fn(|a| y[p][a] + h / 6.0 * (k1[p][a] + 2.0 * k2[p][a] + 2.0 * k3[p][a] + k4[p][a]))
        });
        let tn = (s + 1) as f64 * h;
        let v = f(tn, &y)?;
        traj.push(tn, &[(y[0], v[0]), (y[1], v[1])]);
    }
    Ok(traj)
}
