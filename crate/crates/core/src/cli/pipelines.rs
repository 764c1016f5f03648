//! The five experiment pipelines. Each writes its products into a directory
//! and reports wall-clock timings per stage.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, ExternalKind, InitialState};
use crate::droplets::{capture_sweep, classify_zones, orbit_equilibria};
use crate::effective_gravity::{calibrate_l, default_window, fit_newtonian, solve_effective_potential};
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, EvolutionConfig, ExternalPotential, StabilityTracker, StateSnapshot};
use crate::grid::{spectral_gradient, write_dump, ComplexField, DumpedField, GridSpec};
use crate::ground_state::{solve_choquard, GroundStateResult};
use crate::guidance::{chi_square_test, GaussianPacket, GuidanceOptions, PacketSuperposition, PilotSeries};

/// Output directory plus bookkeeping of what was written.
pub struct Products {
    dir: PathBuf,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
}

impl Products {
    pub fn new(dir: &Path) -> Self {
        Products {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn timings(&self) -> &[(String, f64)] {
        &self.timings
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn csv<const N: usize>(&mut self, name: &str, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(&row).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    fn dump(&mut self, name: &str, field: &DumpedField) -> Result<()> {
        let mut w = self.create(name)?;
        write_dump(&mut w, field)?;
        w.flush()?;
        Ok(())
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self)?;
        self.timings.push((stage.to_string(), start.elapsed().as_secs_f64()));
        Ok(out)
    }
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn run_pipeline(cfg: &ExperimentConfig, products: &mut Products) -> Result<()> {
    match cfg.experiment {
        ExperimentKind::GroundState => ground_state(cfg, products),
        ExperimentKind::Evolve => evolve(cfg, products),
        ExperimentKind::DbbEnsemble => ensemble(cfg, products),
        ExperimentKind::EffectiveGravity => gravity(cfg, products),
        ExperimentKind::Droplet => droplet(cfg, products),
    }
}

fn solve_and_write(cfg: &ExperimentConfig, out: &mut Products) -> Result<GroundStateResult> {
    let spec = cfg.grid_spec()?;
    let kernel = cfg.kernel_spec()?;
    let opts = cfg.solver_options()?;
    let norm = cfg.ground_state.map_or(1.0, |g| g.norm);
    let gs = out.timed("ground_state", |_| solve_choquard(&spec, &kernel, norm, &opts))?;
    out.json("ground_state.json", &gs.summary())?;
    out.csv(
        "energy_trace.csv",
        ["iteration", "energy"],
        gs.energy_trace.iter().enumerate().map(|(i, e)| [i.to_string(), num(*e)]),
    )?;
    if cfg.ground_state.is_none_or(|g| g.dump_profile) {
        out.dump("profile.sgs", &gs.phi.clone().into())?;
    }
    Ok(gs)
}

fn ground_state(cfg: &ExperimentConfig, out: &mut Products) -> Result<()> {
    solve_and_write(cfg, out).map(|_| ())
}

fn series_row(s: &StateSnapshot) -> [String; 6] {
    [
        num(s.time),
        num(s.norm_sq),
        num(s.width),
        num(s.barycentre[0]),
        num(s.barycentre[1]),
        num(s.barycentre[2]),
    ]
}

const SERIES_HEADER: [&str; 6] = ["t", "norm_sq", "width", "bx", "by", "bz"];

/// `T = ½∫|∇ψ|²`, spectrally.
fn kinetic_energy(psi: &ComplexField) -> Result<f64> {
    let grad = spectral_gradient(psi)?;
    let dv = psi.spec().cell_volume();
    Ok(0.5 * dv * grad.iter().flat_map(|g| g.values().iter()).map(|v| v.norm_sqr()).sum::<f64>())
}

fn evolve(cfg: &ExperimentConfig, out: &mut Products) -> Result<()> {
    let e = cfg.evolution.as_ref().expect("validated");
    let spec = cfg.grid_spec()?;
    let norm = cfg.ground_state.map_or(1.0, |g| g.norm);
    let (psi0, period) = match e.initial {
        InitialState::GroundState => {
            let gs = solve_and_write(cfg, out)?;
            (gs.phi.to_complex(), Some(2.0 * PI / gs.eigenvalue.abs()))
        }
        InitialState::Gaussian => {
            let packet = GaussianPacket::new(
                e.gaussian_centre.unwrap_or([0.0; 3]),
                e.gaussian_width.expect("validated"),
                e.gaussian_momentum.unwrap_or([0.0; 3]),
            )?;
            let mut psi = PacketSuperposition::new(vec![(Complex64::new(1.0, 0.0), packet)])?.sample_on_grid(spec, 0.0);
            psi.normalize_to(norm);
            (psi, None)
        }
    };
    let t_end = match (e.t_end, e.periods, period) {
        (Some(t), _, _) => t,
        (None, Some(p), Some(period)) => p * period,
        _ => return Err(Error::Config("evolution.periods: needs a ground-state start".into())),
    };
    let external = match &e.external {
        None => ExternalPotential::None,
        Some(x) => match x.kind {
            ExternalKind::None => ExternalPotential::None,
            ExternalKind::Uniform => ExternalPotential::Uniform { value: x.value.unwrap_or(0.0) },
            ExternalKind::Linear => ExternalPotential::Linear {
                gradient: x.gradient.unwrap_or([0.0; 3]),
            },
            ExternalKind::Harmonic => ExternalPotential::Harmonic {
                omega: x.omega.unwrap_or(0.0),
                centre: x.centre.unwrap_or([0.0; 3]),
            },
        },
    };
    let evo = EvolutionConfig::new(e.dt, t_end, e.snapshot_stride).with_external(external);
    evo.validate(&spec).map_err(|err| Error::Config(format!("evolution: {err}")))?;
    let kernel = if e.linear { None } else { Some(cfg.kernel_spec()?) };

    let mut rows = Vec::new();
    let mut tracker = StabilityTracker::default();
    let dump_fields = e.dump_fields;
    out.timed("evolve", |out| {
        let mut k = 0usize;
        evolve_with(&psi0, kernel.as_ref(), &evo, |s| {
            rows.push(series_row(&s));
            tracker.observe(&s);
            if dump_fields {
                out.dump(&format!("snapshots/psi_{k:05}.sgs"), &s.psi.into())?;
            }
            k += 1;
            Ok(())
        })
    })?;
    out.csv("series.csv", SERIES_HEADER, rows)?;
    let report = tracker.report()?;
    out.json(
        "stability.json",
        &json!({
            "t_end": t_end,
            "steps": evo.steps(),
            "period": period,
            "nonlinear": kernel.is_some(),
            "width_drift": report.width_drift,
            "barycentre_drift": report.barycentre_drift,
            "norm_drift": report.norm_drift,
        }),
    )?;

    if e.compare_linear {
        // real-valued start: <r²>(t) = <r²>(0) + (2T/N)t² in free space
        let w0 = psi0.density().rms_radius();
        let v2 = 2.0 * kinetic_energy(&psi0)? / crate::grid::l2_norm_sq(&psi0);
        let limit = spec.box_length() / 8.0;
        let mut linear_rows = Vec::new();
        let mut max_dev: f64 = 0.0;
        let mut checkpoint = None;
        let mut last = (0.0, w0, w0);
        let linear_cfg = EvolutionConfig::new(e.dt, t_end, e.snapshot_stride);
        out.timed("evolve_linear", |_| {
            evolve_with(&psi0, None, &linear_cfg, |s| {
                let analytic = (w0 * w0 + v2 * s.time * s.time).sqrt();
                if analytic <= limit {
                    max_dev = max_dev.max((s.width - analytic).abs() / analytic);
                    checkpoint = Some((s.time, s.width, analytic));
                }
                last = (s.time, s.width, analytic);
                let r = series_row(&s);
                linear_rows.push([r[0].clone(), r[1].clone(), r[2].clone(), num(analytic)]);
                Ok(())
            })
        })?;
        out.csv("linear_series.csv", ["t", "norm_sq", "width", "analytic_width"], linear_rows)?;
        let (tc, wc, ac) = checkpoint.unwrap_or(last);
        out.json(
            "linear_comparison.json",
            &json!({
                "initial_width": w0,
                "mean_square_velocity": v2,
                "oracle_limit_width": limit,
                "oracle_max_relative_deviation": max_dev,
                "checkpoint_time": tc,
                "checkpoint_width": wc,
                "checkpoint_analytic_width": ac,
                "checkpoint_growth": wc / w0 - 1.0,
                "final_time": last.0,
                "final_width": last.1,
                "final_growth": last.1 / w0 - 1.0,
                "nonlinear_width_drift": report.width_drift,
            }),
        )?;
    }
    Ok(())
}

fn ensemble(cfg: &ExperimentConfig, out: &mut Products) -> Result<()> {
    let e = cfg.ensemble.as_ref().expect("validated");
    let seed = cfg.seed.expect("validated");
    let spec: GridSpec = cfg.grid_spec()?;
    let half = 0.5 * e.separation;
    let pilot = PacketSuperposition::new(vec![
        (Complex64::new(e.weights[0], 0.0), GaussianPacket::new([-half, 0.0, 0.0], e.sigma, [0.0; 3])?),
        (Complex64::new(e.weights[1], 0.0), GaussianPacket::new([half, 0.0, 0.0], e.sigma, [0.0; 3])?),
    ])?;
    let scale = pilot.norm_sq(0.0).sqrt();
    let mut psi0 = pilot.sample_on_grid(spec, 0.0);
    psi0.scale(1.0 / scale);

    let evo = EvolutionConfig::new(e.dt, e.t_end, e.snapshot_stride);
    let mut snaps = Vec::new();
    out.timed("evolve_pilot", |_| {
        evolve_with(&psi0, None, &evo, |s| {
            snaps.push(s);
            Ok(())
        })
    })?;
    let last = snaps.last().expect("at least the initial snapshot");
    let t_final = last.time;
    let exact = pilot.sample_on_grid(spec, t_final);
    let grid_error = last
        .psi
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b / scale).norm_sqr())
        .sum::<f64>()
        .sqrt()
        * spec.cell_volume().sqrt();
    let width = snaps[0].width;
    let series = PilotSeries::new(&snaps)?;
    drop(snaps);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = pilot.sample_born(e.count, &mut rng);
    let opts = GuidanceOptions {
        interpolation_points: e.interpolation_points,
        ..GuidanceOptions::default()
    };
    let trajectories = out.timed("trajectories", |_| series.integrate_ensemble(&starts, &opts))?;

    let finals: Vec<[f64; 3]> = trajectories.iter().map(|t| t.final_position(0).expect("non-empty")).collect();
    out.csv(
        "final_positions.csv",
        ["index", "x0", "y0", "z0", "x", "y", "z"],
        starts.iter().zip(&finals).enumerate().map(|(i, (s, f))| {
            [i.to_string(), num(s[0]), num(s[1]), num(s[2]), num(f[0]), num(f[1]), num(f[2])]
        }),
    )?;
    if e.write_trajectories > 0 {
        let mut w = out.create("trajectories.csv")?;
        w.write_all(b"particle,")?;
        let mut first = true;
        for (i, t) in trajectories.iter().take(e.write_trajectories).enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let text = String::from_utf8(buf).expect("csv is utf-8");
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            if first {
                writeln!(w, "{header}")?;
                first = false;
            }
            for line in lines {
                writeln!(w, "{i},{line}")?;
            }
        }
        w.flush()?;
    }

    let [lo, hi] = e.range.unwrap_or_else(|| {
        let reach = half + 4.0 * e.sigma.max(pilot.terms[0].1.axis_width(t_final));
        [-reach, reach]
    });
    let edges: Vec<f64> = (0..=e.bins).map(|k| lo + (hi - lo) * k as f64 / e.bins as f64).collect();
    let probs = pilot.marginal_bin_probabilities(0, &edges, t_final)?;
    let xs: Vec<f64> = finals.iter().map(|f| f[0]).collect();
    let test = chi_square_test(&xs, &edges, &probs)?;
    out.csv(
        "histogram.csv",
        ["bin_lo", "bin_hi", "observed", "expected"],
        (0..e.bins).map(|k| {
            let lo_s = if k == 0 { "-inf".to_string() } else { num(edges[k]) };
            let hi_s = if k + 1 == e.bins { "inf".to_string() } else { num(edges[k + 1]) };
            [lo_s, hi_s, test.observed[k].to_string(), num(test.expected[k])]
        }),
    )?;
    let max_speed = trajectories.iter().map(|t| t.max_speed()).fold(0.0, f64::max);
    out.json(
        "ensemble.json",
        &json!({
            "count": e.count,
            "seed": seed,
            "t_final": t_final,
            "bins": e.bins,
            "range": [lo, hi],
            "chi_square": test.statistic,
            "dof": test.dof,
            "p_value": test.p_value,
            "max_speed": max_speed,
            "regime_diagnostic": max_speed * width,
            "grid_vs_analytic_l2": grid_error,
        }),
    )?;
    Ok(())
}

fn gravity(cfg: &ExperimentConfig, out: &mut Products) -> Result<()> {
    let g = cfg.gravity.as_ref().expect("validated");
    let spec = cfg.grid_spec()?;
    let model = cfg.source_model(&spec)?;
    let phi = out.timed("poisson", |_| solve_effective_potential(&model, &spec))?;
    let window = g.window.map_or_else(|| default_window(&model, &spec), |[a, b]| (a, b));
    let fit = out.timed("fit", |_| fit_newtonian(&phi, &model, window))?;
    let errors: Vec<f64> = fit
        .fitted_amplitudes
        .iter()
        .zip(&model.l_values)
        .map(|(a, l)| (a - l).abs() / l)
        .collect();
    out.json(
        "gravity_fit.json",
        &json!({
            "positions": model.positions,
            "l_values": model.l_values,
            "sigma_s": model.sigma_s,
            "fit_window": [window.0, window.1],
            "fitted_amplitudes": fit.fitted_amplitudes,
            "relative_errors": errors,
            "curvatures": fit.sources.iter().map(|s| s.curvature).collect::<Vec<_>>(),
            "offsets": fit.sources.iter().map(|s| s.offset).collect::<Vec<_>>(),
            "relative_residual": fit.relative_residual,
        }),
    )?;
    for (i, s) in fit.sources.iter().enumerate() {
        out.csv(
            &format!("shells_{i}.csv"),
            ["r", "phi_avg", "phi_fit"],
            s.shells.iter().map(|p| [num(p.r), num(p.phi_avg), num(p.phi_fit)]),
        )?;
    }
    if g.dump_potential {
        out.dump("potential.sgs", &phi.into())?;
    }
    if let Some(m) = g.mass_kg {
        out.json("calibration.json", &calibrate_l(m)?)?;
    }
    Ok(())
}

fn droplet(cfg: &ExperimentConfig, out: &mut Products) -> Result<()> {
    let d = cfg.droplet.as_ref().expect("validated");
    let (spec, pair) = cfg.forcing()?;
    let k0 = spec.k0();
    let zones = classify_zones(&spec, d.r_max)?;
    out.json(
        "zones.json",
        &json!({
            "k0": k0,
            "faraday_wavelength": spec.faraday_wavelength(),
            "r_max": d.r_max,
            "zones": zones,
            "boundaries_k0r": zones.iter().skip(1).map(|z| z.start * k0).collect::<Vec<_>>(),
        }),
    )?;
    let orbits = orbit_equilibria(&pair, &spec, d.r_max)?;
    out.json(
        "orbits.json",
        &json!({
            "faraday_wavelength": spec.faraday_wavelength(),
            "max_abs_residual": orbits.max_abs_residual(),
            "result": orbits,
        }),
    )?;
    let sweep = out.timed("capture_sweep", |_| capture_sweep(&pair, &spec, d.energy_factor, d.sweep_angles, d.periods))?;
    out.csv(
        "sweep.csv",
        ["alpha", "impact_parameter", "outcome", "energy_drift", "final_separation"],
        sweep.rows.iter().map(|r| {
            [
                num(r.alpha),
                num(r.impact_parameter),
                serde_json::to_value(r.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                num(r.energy_drift),
                num(r.final_separation),
            ]
        }),
    )?;
    out.json("sweep.json", &sweep)?;
    Ok(())
}
