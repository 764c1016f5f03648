//! Self-bound soliton of the Choquard equation
//! `-½Δφ + V[φ²]φ = E_g φ`, found by normalized imaginary-time gradient flow
//! on the energy `E = ½∫|∇φ|² + ½∫φ² V[φ²]` (units ħ = m = 1).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fft3, GridSpec, RealField};
use crate::kernels::{KernelSpec, PotentialOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative eigen-residual at which the flow stops.
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial step; the flow adapts it and caps it at 0.1·spacing².
    pub initial_step: Option<f64>,
    /// Initial Gaussian rms radius per axis; defaults to box_length/12.
    pub initial_width: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iterations: 50_000,
            initial_step: None,
            initial_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    pub phi: RealField,
    pub eigenvalue: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total_energy: f64,
    pub width: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Energy after every accepted step.
    pub energy_trace: Vec<f64>,
}

/// Scalar summary written alongside the profile dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub n_per_axis: usize,
    pub box_length: f64,
    pub norm: f64,
    pub eigenvalue: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub total_energy: f64,
    pub width: f64,
    pub iterations: usize,
    pub residual: f64,
    pub virial_ratio: f64,
}

impl GroundStateResult {
    pub fn summary(&self) -> GroundStateSummary {
        let spec = self.phi.spec();
        GroundStateSummary {
            n_per_axis: spec.n(),
            box_length: spec.box_length(),
            norm: self.norm(),
            eigenvalue: self.eigenvalue,
            kinetic: self.kinetic,
            potential: self.potential,
            total_energy: self.total_energy,
            width: self.width,
            iterations: self.iterations,
            residual: self.residual,
            virial_ratio: (2.0 * self.kinetic + self.potential) / self.potential.abs(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.phi.values().iter().map(|v| v * v).sum::<f64>() * self.phi.spec().cell_volume()
    }
}

/// Applies the Hamiltonian pieces of a real state with two FFTs: the state
/// and its density are packed into one complex array and separated in
/// k-space using Hermitian symmetry.
struct Hamiltonian {
    spec: GridSpec,
    fft: std::sync::Arc<Fft3>,
    half_k2: Vec<f64>,
    potential: Vec<f64>,
    mirror: Vec<usize>,
}

impl Hamiltonian {
    fn new(op: &PotentialOperator) -> Self {
        let spec = *op.spec();
        let n = spec.n();
        let mirror = (0..spec.len())
            .map(|idx| {
                let (i, j, k) = spec.unravel(idx);
                spec.index((n - i) % n, (n - j) % n, (n - k) % n)
            })
            .collect();
        Hamiltonian {
            spec,
            fft: Fft3::for_size(n),
            half_k2: spec.k_squared().into_iter().map(|k2| 0.5 * k2).collect(),
            potential: op.multiplier().to_vec(),
            mirror,
        }
    }

    /// Writes `-½Δφ + i·V[φ²]` per node into `out`, using `work` as scratch.
    fn apply(&self, phi: &[f64], work: &mut Vec<Complex64>, out: &mut Vec<Complex64>) {
        work.clear();
        work.extend(phi.iter().map(|&p| Complex64::new(p, p * p)));
        self.fft.forward(work);
        out.clear();
        out.extend((0..work.len()).map(|idx| {
            let a = work[idx];
            let b = work[self.mirror[idx]].conj();
            // φ̂ = (a + b)/2, ρ̂ = (a - b)/2i
            let phi_hat = 0.5 * (a + b);
            let rho_hat = 0.5 * (a - b);
            phi_hat * self.half_k2[idx] + rho_hat * self.potential[idx]
        }));
        self.fft.inverse(out);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Default)]
struct Workspace {
    spectrum: Vec<Complex64>,
    applied: Vec<Complex64>,
}

struct Evaluation {
    energies: Energies,
    eigenvalue: f64,
    residual: f64,
    h_phi: Vec<f64>,
}

fn evaluate(ham: &Hamiltonian, phi: &[f64], ws: &mut Workspace, mut h_phi: Vec<f64>) -> Evaluation {
    let dv = ham.spec.cell_volume();
    ham.apply(phi, &mut ws.spectrum, &mut ws.applied);
    h_phi.clear();
    let (mut kin, mut pot, mut norm, mut ph, mut hh) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&p, w) in phi.iter().zip(&ws.applied) {
        let vp = w.im * p;
        let h = w.re + vp;
        kin += p * w.re;
        pot += p * vp;
        norm += p * p;
        ph += p * h;
        hh += h * h;
        h_phi.push(h);
    }
    let eigenvalue = ph / norm;
    // summed directly: the expanded form loses digits near convergence
    let r2: f64 = h_phi
        .iter()
        .zip(phi)
        .map(|(h, p)| (h - eigenvalue * p).powi(2))
        .sum();
    let kinetic = kin * dv;
    let potential = 0.5 * pot * dv;
    Evaluation {
        energies: Energies {
            kinetic,
            potential,
            total: kinetic + potential,
        },
        eigenvalue,
        residual: (r2 / hh).sqrt(),
        h_phi,
    }
}

/// `(T, V, E)` of a real profile: `T = ½∫|∇φ|²`, `V = ½∫φ²·V[φ²]`.
pub fn energy_functional(phi: &RealField, kernel: &KernelSpec) -> Result<Energies> {
    let op = PotentialOperator::new(*phi.spec(), *kernel)?;
    let ham = Hamiltonian::new(&op);
    Ok(evaluate(&ham, phi.values(), &mut Workspace::default(), Vec::new()).energies)
}

fn normalize(phi: &mut [f64], norm: f64, dv: f64) {
    let s = (norm / (dot(phi, phi) * dv)).sqrt();
    phi.iter_mut().for_each(|p| *p *= s);
}

/// Ground state of the given norm on `spec`.
pub fn solve_choquard(
    spec: &GridSpec,
    kernel: &KernelSpec,
    norm: f64,
    opts: &SolverOptions,
) -> Result<GroundStateResult> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidArgument(format!("norm must be positive, got {norm}")));
    }
    let width0 = opts.initial_width.unwrap_or(spec.box_length() / 12.0);
    let initial = RealField::from_fn(*spec, |x| {
        let r2 = x.iter().map(|c| c * c).sum::<f64>();
        (-r2 / (4.0 * width0 * width0)).exp()
    });
    solve_choquard_from(initial, kernel, norm, opts)
}

/// Gradient flow started from a caller-supplied profile.
pub fn solve_choquard_from(
    initial: RealField,
    kernel: &KernelSpec,
    norm: f64,
    opts: &SolverOptions,
) -> Result<GroundStateResult> {
    let spec = *initial.spec();
    let op = PotentialOperator::new(spec, *kernel)?;
    let ham = Hamiltonian::new(&op);
    let dv = spec.cell_volume();
    // explicit flow is stable for step < 2/max(½|k|²) = 4h²/(3π²)
    let step_cap = 0.1 * spec.spacing().powi(2);
    let mut step = opts.initial_step.unwrap_or(step_cap).min(step_cap);

    let mut phi = initial.into_values();
    normalize(&mut phi, norm, dv);
    let mut ws = Workspace::default();
    let mut eval = evaluate(&ham, &phi, &mut ws, Vec::new());
    let mut trial: Vec<f64> = Vec::with_capacity(phi.len());
    let mut spare: Vec<f64> = Vec::with_capacity(phi.len());
    let mut trace = vec![eval.energies.total];
    let mut iterations = 0;

    while eval.residual >= opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::MaxIterationsExceeded {
                iterations,
                residual: eval.residual,
            });
        }
        iterations += 1;
        trial.clear();
        trial.extend(phi.iter().zip(&eval.h_phi).map(|(p, h)| p - step * h));
        normalize(&mut trial, norm, dv);
        let next = evaluate(&ham, &trial, &mut ws, std::mem::take(&mut spare));
        let e_old = eval.energies.total;
        if !next.energies.total.is_finite() {
            return Err(Error::NonFinite { time: iterations as f64 });
        }
        if next.energies.total > e_old + 1e-12 * e_old.abs() {
            spare = next.h_phi;
            step *= 0.5;
            if step < 1e-12 * step_cap {
                return Err(Error::MaxIterationsExceeded {
                    iterations,
                    residual: eval.residual,
                });
            }
            continue;
        }
        std::mem::swap(&mut phi, &mut trial);
        spare = std::mem::replace(&mut eval, next).h_phi;
        trace.push(eval.energies.total);
        step = (step * 1.1).min(step_cap);
    }

    // the continuum ground state is nodeless; only round-off sign noise lives in the tails
    phi.iter_mut().for_each(|p| *p = p.abs());
    let eval = evaluate(&ham, &phi, &mut ws, spare);
    let field = RealField::from_values(spec, phi)?;
    let width = rms_width(&field);
    let limit = spec.box_length() / 8.0;
    if width > limit {
        return Err(Error::WidthTooLarge { width, limit });
    }
    Ok(GroundStateResult {
        phi: field,
        eigenvalue: eval.eigenvalue,
        kinetic: eval.energies.kinetic,
        potential: eval.energies.potential,
        total_energy: eval.energies.total,
        width,
        iterations,
        residual: eval.residual,
        energy_trace: trace,
    })
}

/// rms radius √(∫r²φ²/∫φ²) about the barycentre of φ².
pub fn rms_width(phi: &RealField) -> f64 {
    let density =
        RealField::from_values(*phi.spec(), phi.values().iter().map(|v| v * v).collect())
            .expect("same grid");
    density.rms_radius()
}

/// One row of a norm sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub norm: f64,
    pub energy: f64,
    pub width: f64,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `a` in `E ∝ -N^a`.
    pub energy_exponent: f64,
    /// `b` in `width ∝ N^b`.
    pub width_exponent: f64,
}

/// Ground states for several norms with the Coulomb kernel.
///
/// The box is rescaled as `reference.box_length / (N/N_0)` (with `N_0` the
/// first norm) so every soliton is resolved by the same number of points.
pub fn scaling_sweep(
    reference: &GridSpec,
    kernel: &KernelSpec,
    norms: &[f64],
    opts: &SolverOptions,
) -> Result<ScalingReport> {
    if norms.len() < 2 {
        return Err(Error::InvalidArgument("scaling sweep needs at least two norms".into()));
    }
    let n0 = norms[0];
    let mut rows = Vec::with_capacity(norms.len());
    for &n in norms {
        let spec = GridSpec::new(reference.n(), reference.box_length() * n0 / n)?;
        let mut o = *opts;
        o.initial_width = opts.initial_width.map(|w| w * n0 / n);
        let gs = solve_choquard(&spec, kernel, n, &o)?;
        rows.push(ScalingRow {
            norm: n,
            energy: gs.total_energy,
            width: gs.width,
            eigenvalue: gs.eigenvalue,
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| r.norm.ln()).collect();
    let ln_e: Vec<f64> = rows.iter().map(|r| (-r.energy).ln()).collect();
    let ln_w: Vec<f64> = rows.iter().map(|r| r.width.ln()).collect();
    Ok(ScalingReport {
        energy_exponent: slope(&ln_n, &ln_e),
        width_exponent: slope(&ln_n, &ln_w),
        rows,
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
