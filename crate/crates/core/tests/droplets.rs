use std::f64::consts::PI;

use sgs_core::droplets::*;
use sgs_core::error::Error;

/// λ_F = 1, v = 1.
fn forcing() -> ForcingSpec {
    ForcingSpec::from_faraday_wavelength(1.0, 1.0).unwrap()
}

fn unit_pair() -> DropletPair {
    DropletPair::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

/// Nearly static bath: k0 of order 1e-9.
fn newtonian() -> ForcingSpec {
    ForcingSpec::new(1e-9, 1.0).unwrap()
}

/// n-th positive root of `tan u = -1/u`, by Newton on `u sin u + cos u`
/// started from the asymptote `(n+1)π - 1/((n+1)π)`.
fn newton_root(n: usize) -> f64 {
    let g = |u: f64| u * u.sin() + u.cos();
    let dg = |u: f64| u * u.cos();
    let k = (n + 1) as f64 * PI;
    let mut u = k - 1.0 / k;
    for _ in 0..50 {
        u -= g(u) / dg(u);
    }
    u
}

#[test]
fn pseudo_potential_limits() {
    let spec = newtonian();
    let x = [1.0, 2.0, -0.5];
    let r = (1.0f64 + 4.0 + 0.25).sqrt();
    let phi = pseudo_potential(x, &[([0.0; 3], 0.7)], &spec).unwrap();
    assert!((phi + 0.7 / r).abs() < 1e-12);

    let bath = forcing();
    let r0 = 0.5 * PI / bath.k0();
    assert!(pseudo_potential([r0, 0.0, 0.0], &[([0.0; 3], 1.0)], &bath).unwrap().abs() < 1e-15);

    let (a, b) = ([-0.3, 0.1, 0.0], [0.5, -0.2, 0.4]);
    let mid = [0.1, -0.05, 0.2];
    let one = pseudo_potential(mid, &[(a, 2.0)], &bath).unwrap();
    let both = pseudo_potential(mid, &[(a, 2.0), (b, 2.0)], &bath).unwrap();
    assert!((both - 2.0 * one).abs() < 1e-12 * one.abs());

    assert!(pseudo_potential(a, &[(a, 1.0)], &bath).is_err());
}

#[test]
fn pair_interaction_is_symmetric_and_alternates() {
    let spec = forcing();
    let k0 = spec.k0();
    let p = DropletPair::new(1.5, 0.5, 0.2, 3.0).unwrap();
    let swapped = DropletPair::new(0.5, 1.5, 3.0, 0.2).unwrap();
    for d in [0.05, 0.3, 1.7, 4.2] {
        assert_eq!(pair_interaction(d, &p, &spec).unwrap(), pair_interaction(d, &swapped, &spec).unwrap());
    }

    let zeros: Vec<f64> = (0..10).map(|n| (0.5 * PI + n as f64 * PI) / k0).collect();
    for z in &zeros {
        let u = pair_interaction(*z, &p, &spec).unwrap();
        let scale = pair_interaction(0.1 / k0, &p, &spec).unwrap().abs();
        assert!(u.abs() < 1e-14 * scale, "{u}");
    }

    // midpoints of consecutive zero intervals alternate in sign, starting attractive
    let mut edges = vec![0.0];
    edges.extend(&zeros);
    for (i, w) in edges.windows(2).enumerate() {
        let u = pair_interaction(0.5 * (w[0] + w[1]), &p, &spec).unwrap();
        assert_eq!(u < 0.0, i % 2 == 0, "interval {i}");
    }

    assert!(pair_interaction(0.0, &p, &spec).is_err());
    assert!(pair_interaction(-1.0, &p, &spec).is_err());
}

#[test]
fn pair_interaction_scaling() {
    let d = 0.37;
    let spec = forcing();
    let base = pair_interaction(d, &unit_pair(), &spec).unwrap();
    let p = DropletPair::new(2.0, 3.0, 0.5, 4.0).unwrap();
    let weight = 3.0 * 0.5 + 2.0 * 4.0;
    assert!((pair_interaction(d, &p, &spec).unwrap() - base * weight / 2.0).abs() < 1e-12 * base.abs() * weight);

    // doubling v at fixed k0 (f0 doubled too) multiplies U by four
    let faster = ForcingSpec::new(2.0 * spec.f0, 2.0 * spec.v).unwrap();
    assert!((pair_interaction(d, &unit_pair(), &faster).unwrap() - 4.0 * base).abs() < 1e-12 * base.abs());
}

#[test]
fn zone_boundaries_solve_the_root_equation() {
    let spec = forcing();
    let k0 = spec.k0();
    let zones = classify_zones(&spec, 6.0).unwrap();
    assert!(zones.len() > 20);
    assert_eq!(zones[0].start, 0.0);
    assert_eq!(zones.last().unwrap().end, 6.0);
    for (n, w) in zones.windows(2).enumerate() {
        assert_eq!(w[0].end, w[1].start);
        assert_ne!(w[0].kind, w[1].kind);
        let u = k0 * w[0].end;
        assert!((u.tan() + 1.0 / u).abs() < 1e-8, "boundary {n}: u = {u}");
        assert!((u - newton_root(n)).abs() < 1e-10);
    }
    assert_eq!(zones[0].kind, ZoneKind::Attractive);

    // the kind matches the sign of the force just inside each zone
    let pair = unit_pair();
    for z in &zones {
        let r = z.start + 1e-3 * (z.end - z.start);
        let attractive = pair_interaction_slope(r.max(1e-6), &pair, &spec).unwrap() > 0.0;
        assert_eq!(attractive, z.kind == ZoneKind::Attractive);
    }
}

#[test]
fn static_bath_has_one_attractive_zone() {
    let zones = classify_zones(&newtonian(), 50.0).unwrap();
    assert_eq!(zones.len(), 1);
    assert_eq!((zones[0].start, zones[0].end, zones[0].kind), (0.0, 50.0, ZoneKind::Attractive));
}

#[test]
fn distant_boundaries_are_a_quarter_wavelength_apart() {
    let spec = forcing();
    let k0 = spec.k0();
    let zones = classify_zones(&spec, 40.0).unwrap();
    let bounds: Vec<f64> = zones[..zones.len() - 1].iter().map(|z| z.end).collect();
    let tail = &bounds[bounds.len() - 20..];
    for w in tail.windows(2) {
        assert!((w[1] - w[0] - 0.25).abs() < 1e-3 * 0.25);
    }
    // u_n = (n + 1)π - 1/((n + 1)π) + O(n⁻³)
    for (n, r) in bounds.iter().enumerate().skip(bounds.len() - 20) {
        let k = (n + 1) as f64 * PI;
        assert!((k0 * r - (k - 1.0 / k)).abs() < 1.0 / k.powi(3));
    }
}

#[test]
fn minima_follow_the_quantization_pattern() {
    let spec = forcing();
    let res = orbit_equilibria(&unit_pair(), &spec, 6.0).unwrap();
    assert!(res.equilibrium_radii.len() >= 8);
    assert!(res.equilibrium_radii.windows(2).all(|w| w[1] > w[0]));
    assert!(res.stable.iter().all(|s| *s));

    // minima of cos(k0 d)/d from an independent Newton solve
    for (m, d) in res.equilibrium_radii.iter().enumerate() {
        assert!((d - newton_root(2 * m + 1) / spec.k0()).abs() < 1e-12);
        let (below, above) = (pair_interaction(d - 1e-4, &unit_pair(), &spec).unwrap(), pair_interaction(d + 1e-4, &unit_pair(), &spec).unwrap());
        let here = pair_interaction(*d, &unit_pair(), &spec).unwrap();
        assert!(here < below && here < above);
    }
    for w in res.equilibrium_radii.windows(2) {
        if w[0] > 2.0 {
            assert!((w[1] - w[0] - 0.5).abs() < 0.01 * 0.5);
        }
    }
    assert!(res.max_abs_residual() < 0.02, "{:?}", res.residuals);
    assert!(res.epsilon_ci.0 <= res.epsilon && res.epsilon <= res.epsilon_ci.1);
    // radius n/2 - ε, so consecutive n differ by one
    assert!(res.n_indices.windows(2).all(|w| w[1] == w[0] + 1));
    for ((d, n), r) in res.equilibrium_radii.iter().zip(&res.n_indices).zip(&res.residuals) {
        assert!((d - (*n as f64 / 2.0 - res.epsilon) - r).abs() < 1e-12);
    }
}

#[test]
fn epsilon_ignores_overall_scale() {
    let spec = forcing();
    let a = orbit_equilibria(&unit_pair(), &spec, 6.0).unwrap();
    let b = orbit_equilibria(&DropletPair::new(3.0, 7.0, 0.01, 11.0).unwrap(), &spec, 6.0).unwrap();
    assert_eq!(a.equilibrium_radii, b.equilibrium_radii);
    assert_eq!(a.epsilon, b.epsilon);
}

#[test]
fn minima_sit_where_repulsion_turns_into_attraction() {
    let spec = forcing();
    let zones = classify_zones(&spec, 6.0).unwrap();
    let res = orbit_equilibria(&unit_pair(), &spec, 6.0).unwrap();
    for d in &res.equilibrium_radii {
        let i = zones.iter().position(|z| z.end == *d).expect("minimum is a zone boundary");
        assert_eq!(zones[i].kind, ZoneKind::Repulsive);
        assert_eq!(zones[i + 1].kind, ZoneKind::Attractive);
    }
}

#[test]
fn no_equilibria_below_the_first_minimum() {
    let spec = forcing();
    let first = newton_root(1) / spec.k0();
    assert!(matches!(orbit_equilibria(&unit_pair(), &spec, 0.9 * first), Err(Error::NoEquilibria { .. })));
    assert!(matches!(orbit_equilibria(&unit_pair(), &newtonian(), 100.0), Err(Error::NoEquilibria { .. })));
}

#[test]
fn circular_orbit_in_an_attractive_basin_stays_circular() {
    let spec = forcing();
    let pair = unit_pair();
    let mu = pair.reduced_mass();
    let d_min = orbit_equilibria(&pair, &spec, 3.0).unwrap().equilibrium_radii[2];

    // at the minimum itself the circular speed is zero: the pair stays at rest
    let rest = simulate_orbit(&pair, &spec, &TwoBodyState::relative(&pair, d_min, 0.0, 0.0), 10.0, 1e-3).unwrap();
    assert!(rest.separations.iter().all(|d| (d - d_min).abs() < 1e-9));

    // just outside it the slope supplies the centripetal force μv²/d = U'(d)
    let d = d_min + 0.02;
    let slope = pair_interaction_slope(d, &pair, &spec).unwrap();
    let h = 1e-5;
    let curvature = (pair_interaction_slope(d + h, &pair, &spec).unwrap() - pair_interaction_slope(d - h, &pair, &spec).unwrap()) / (2.0 * h);
    assert!(slope > 0.0 && curvature + 3.0 * slope / d > 0.0);
    let speed = (d * slope / mu).sqrt();
    let period = 2.0 * PI * d / speed;
    let radial = 2.0 * PI / ((curvature + 3.0 * slope / d) / mu).sqrt();
    let dt = period.min(radial) / 400.0;
    let sim = simulate_orbit(&pair, &spec, &TwoBodyState::relative(&pair, d, speed, 0.5 * PI), 20.0 * period, dt).unwrap();
    let (lo, hi) = sim.separations.iter().fold((f64::MAX, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    assert!((hi - lo) / d < 0.02, "{lo}..{hi}");
    assert!(sim.energy_drift < 1e-4 && sim.angular_momentum_drift < 1e-10);
}

#[test]
fn slow_pair_in_a_repulsive_zone_scatters() {
    let spec = forcing();
    let pair = unit_pair();
    let k0 = spec.k0();
    // just outside the second barrier, drifting slowly inward
    let d0 = newton_root(2) / k0 + 0.05;
    let barrier = pair_interaction(newton_root(2) / k0, &pair, &spec).unwrap() - pair_interaction(d0, &pair, &spec).unwrap();
    let speed = 0.5 * (2.0 * barrier / pair.reduced_mass()).sqrt();
    let init = TwoBodyState::relative(&pair, d0, speed, 0.8 * PI);
    let sim = simulate_orbit(&pair, &spec, &init, 40.0, 1e-3).unwrap();
    let closest = sim.separations.iter().cloned().fold(f64::MAX, f64::min);
    assert!(closest < d0 && closest > newton_root(2) / k0);
    let turn = sim.separations.iter().position(|d| *d == closest).unwrap();
    assert!(sim.separations[turn..].windows(2).all(|w| w[1] >= w[0]));
    assert!(*sim.separations.last().unwrap() > 2.0 * d0);
    assert_eq!(classify_outcome(&sim.separations, newton_root(2) / k0), Outcome::Scattered);
}

#[test]
fn energy_and_angular_momentum_are_conserved() {
    let spec = forcing();
    let pair = DropletPair::new(1.0, 2.5, 0.7, 0.3).unwrap();
    let init = TwoBodyState::relative(&pair, 1.3, 0.4, 1.1);
    let sim = simulate_orbit(&pair, &spec, &init, 30.0, 5e-4).unwrap();
    assert!(sim.energy_drift < 1e-4, "{}", sim.energy_drift);
    assert!(sim.angular_momentum_drift < 1e-10, "{}", sim.angular_momentum_drift);
    assert_eq!(sim.trajectory.times.len(), sim.separations.len());
    assert_eq!(sim.trajectory.particles.len(), 2);
}

#[test]
fn head_on_fall_is_a_collision() {
    let spec = forcing();
    let pair = unit_pair();
    let init = TwoBodyState::relative(&pair, 0.05, 0.0, 0.0);
    assert!(matches!(simulate_orbit(&pair, &spec, &init, 10.0, 1e-5), Err(Error::CollisionDetected { .. })));
    let touching = TwoBodyState::relative(&pair, 0.0, 0.0, 0.0);
    assert!(simulate_orbit(&pair, &spec, &touching, 1.0, 1e-3).is_err());
}

#[test]
fn static_bath_reproduces_kepler() {
    let spec = newtonian();
    let pair = unit_pair();
    let mu = pair.reduced_mass();
    let strength = 2.0;
    let mut ratios = Vec::new();
    for speed in [1.4, 1.7, 1.9] {
        let init = TwoBodyState::relative(&pair, 1.0, speed, 0.5 * PI);
        let sim = simulate_orbit(&pair, &spec, &init, 40.0, 1e-4).unwrap();
        let s = &sim.separations;
        // apocentres: local maxima of the separation
        let peaks: Vec<usize> = (1..s.len() - 1).filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1]).collect();
        assert!(peaks.len() >= 3);
        let period = (peaks[peaks.len() - 1] - peaks[0]) as f64 * 1e-4 / (peaks.len() - 1) as f64;
        let (lo, hi) = s.iter().fold((f64::MAX, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
        let a = 0.5 * (lo + hi);
        ratios.push(period * period / a.powi(3));
    }
    let kepler = 4.0 * PI * PI * mu / strength;
    for r in &ratios {
        assert!((r - kepler).abs() < 0.01 * kepler, "{r} vs {kepler}");
    }
}
