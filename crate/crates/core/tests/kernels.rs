use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgs_core::grid::*;
use sgs_core::kernels::*;

fn r_of(x: Vec3, c: Vec3) -> f64 {
    ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt()
}

/// Nodes along +x from the origin with 4σ ≤ r ≤ L/4.
fn tail_nodes(spec: &GridSpec, sigma: f64) -> Vec<(usize, f64)> {
    let n = spec.n();
    (0..n)
        .map(|i| (spec.index(i, n / 2, n / 2), spec.coord(i)))
        .filter(|(_, r)| *r >= 4.0 * sigma && *r <= 0.25 * spec.box_length())
        .collect()
}

/// Exact potential e^{-r/λ}/r convolved with a unit Gaussian of width σ.
fn smeared_yukawa(r: f64, sigma: f64, lambda: f64) -> f64 {
    use statrs::function::erf::erfc;
    let a = sigma * sigma / lambda;
    let s2 = std::f64::consts::SQRT_2 * sigma;
    (sigma * sigma / (2.0 * lambda * lambda)).exp() / (2.0 * r)
        * ((-r / lambda).exp() * erfc((a - r) / s2) - (r / lambda).exp() * erfc((a + r) / s2))
}

#[test]
fn yukawa_point_mass_matches_direct_summation() {
    let spec = GridSpec::new(32, 16.0).unwrap();
    // the narrowest resolvable blob leaves a few nodes between 4σ and L/4 on 32³
    let sigma = 1.5 * spec.spacing();
    let (k, lambda) = (0.7, 3.0);
    let rho = regularized_delta([0.0; 3], 1.0, sigma, &spec).unwrap();
    let v = convolve_potential(&rho, &KernelSpec::yukawa(k, lambda)).unwrap();
    let nodes = tail_nodes(&spec, sigma);
    assert!(nodes.len() >= 2);
    let dv = spec.cell_volume();
    for (idx, r) in nodes {
        let x = spec.position(idx);
        // real-space sum over all nodes, skipping the singular self term
        let direct: f64 = (0..spec.len())
            .filter(|j| *j != idx)
            .map(|j| {
                let d = spec.distance(x, spec.position(j));
                rho.values()[j] * (-d / lambda).exp() / d
            })
            .sum::<f64>()
            * -k
            * dv;
        let analytic = -k * smeared_yukawa(r, sigma, lambda);
        assert!((v.values()[idx] - direct).abs() < 0.01 * direct.abs(), "r = {r}");
        assert!((v.values()[idx] - analytic).abs() < 0.01 * analytic.abs(), "r = {r}");
    }
}

#[test]
fn long_screening_length_reduces_to_coulomb() {
    let spec = GridSpec::new(32, 16.0).unwrap();
    let sigma = default_source_width(&spec);
    let rho = regularized_delta([0.0; 3], 1.0, sigma, &spec).unwrap();
    let c = convolve_potential(&rho, &KernelSpec::coulomb(1.0)).unwrap();
    let y = convolve_potential(&rho, &KernelSpec::yukawa(1.0, 1e3 * spec.box_length())).unwrap();
    for idx in 0..spec.len() {
        let x = spec.position(idx);
        if r_of(x, [0.0; 3]) < 0.25 * spec.box_length() {
            assert!((c.values()[idx] - y.values()[idx]).abs() < 1e-3 * c.values()[idx].abs());
        }
    }
}

#[test]
fn uniform_density_gives_flat_potential() {
    let spec = GridSpec::new(16, 10.0).unwrap();
    let rho = RealField::from_fn(spec, |_| 0.3);
    let v = convolve_potential(&rho, &KernelSpec::coulomb(2.0)).unwrap();
    let mean = v.mean();
    assert!(v.values().iter().all(|x| (x - mean).abs() < 1e-12 * mean.abs()));
    for g in gradient_real(&v).unwrap() {
        assert!(g.max_abs() < 1e-12 * mean.abs());
    }
    // the Poisson solve works in the zero-mean gauge, so a uniform source vanishes
    assert!(poisson_solve(&rho).unwrap().max_abs() < 1e-14);
}

#[test]
fn poisson_point_source_tail() {
    let spec = GridSpec::new(64, 32.0).unwrap();
    let sigma = default_source_width(&spec);
    let l_a = 0.35;
    let src = regularized_delta([0.0; 3], 4.0 * PI * l_a, sigma, &spec).unwrap();
    let phi = poisson_solve(&src).unwrap();
    let nodes = tail_nodes(&spec, sigma);
    // zero-mean gauge: the removed mean acts as a uniform background of
    // density -4πL/V, adding -(2πL/3V)r² near the source
    let background = |r: f64| -2.0 * PI * l_a / (3.0 * spec.volume()) * r * r;
    let (i0, r0) = nodes[0];
    for &(idx, r) in &nodes[1..] {
        let got = phi.values()[idx] - background(r) - phi.values()[i0] + background(r0);
        let want = -l_a / r + l_a / r0;
        assert!((got - want).abs() < 0.01 * want.abs(), "r = {r}: {got} vs {want}");
    }
}

#[test]
fn poisson_is_linear() {
    let spec = GridSpec::new(32, 16.0).unwrap();
    let a = regularized_delta([-3.0, 0.0, 0.0], 1.2, 1.0, &spec).unwrap();
    let b = regularized_delta([3.0, 1.0, 0.0], 0.4, 1.0, &spec).unwrap();
    let mut both = a.clone();
    both.add_assign(&b).unwrap();
    let mut sum = poisson_solve(&a).unwrap();
    sum.add_assign(&poisson_solve(&b).unwrap()).unwrap();
    let joint = poisson_solve(&both).unwrap();
    let scale = joint.max_abs();
    for (x, y) in joint.values().iter().zip(sum.values()) {
        assert!((x - y).abs() < 1e-13 * scale);
    }
}

#[test]
fn poisson_residual_and_inverse_of_laplacian() {
    let spec = GridSpec::new(32, 12.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let centres: Vec<Vec3> = (0..4).map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0))).collect();
    let mut s = RealField::zeros(spec);
    for c in &centres {
        s.add_assign(&regularized_delta(*c, rng.random_range(-1.0..1.0), 1.0, &spec).unwrap()).unwrap();
    }
    let mean = s.mean();
    s.add_constant(-mean);
    let phi = poisson_solve(&s).unwrap();
    let lap = laplacian_real(&phi).unwrap();
    let num: f64 = lap.values().iter().zip(s.values()).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = s.values().iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-8);

    // poisson ∘ laplacian = identity on zero-mean fields
    let mut f = RealField::from_fn(spec, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2]) / 3.0).exp() * (1.0 + 0.3 * x[2]));
    let m = f.mean();
    f.add_constant(-m);
    let back = poisson_solve(&laplacian_real(&f).unwrap()).unwrap();
    let num: f64 = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = f.values().iter().map(|b| b * b).sum();
    assert!((num / den).sqrt() < 1e-8);
}

#[test]
fn helmholtz_green_examples() {
    for r in [0.1, 1.0, 7.5] {
        assert_eq!(helmholtz_green(r, 0.0).unwrap(), 1.0 / r);
    }
    let k0 = 2.3;
    assert!(helmholtz_green(PI / 2.0 / k0, k0).unwrap().abs() < 1e-15);
    assert!(helmholtz_green(0.0, k0).is_err());
    assert!(helmholtz_green(-1.0, k0).is_err());
}

#[test]
fn helmholtz_green_solves_radial_helmholtz_equation() {
    let k0 = 1.7;
    let g = |r: f64| helmholtz_green(r, k0).unwrap();
    let h = 1e-4;
    let mut r = 0.1;
    while r <= 10.0 {
        let d1 = (g(r + h) - g(r - h)) / (2.0 * h);
        let d2 = (g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h);
        let residual = k0 * k0 * g(r) + d2 + 2.0 * d1 / r;
        let scale = (k0 * k0 * g(r)).abs() + d2.abs() + (2.0 * d1 / r).abs();
        assert!(residual.abs() < 1e-4 * scale, "r = {r}: {residual}");
        assert!((helmholtz_green_derivative(r, k0) - d1).abs() < 1e-6 * d1.abs().max(1.0));
        r += 0.0731;
    }
}

#[test]
fn helmholtz_green_changes_sign_at_cosine_zeros() {
    let k0 = 0.9;
    for n in 0..6 {
        let r = (PI / 2.0 + n as f64 * PI) / k0;
        let before = helmholtz_green(r * (1.0 - 1e-9), k0).unwrap();
        let after = helmholtz_green(r * (1.0 + 1e-9), k0).unwrap();
        assert!(before * after < 0.0);
    }
}

#[test]
fn regularized_delta_examples() {
    let spec = GridSpec::new(32, 16.0).unwrap();
    let sigma = default_source_width(&spec);
    assert_eq!(sigma, 2.0 * spec.spacing());
    let one = regularized_delta([0.3, -0.2, 1.1], 1.0, sigma, &spec).unwrap();
    assert!((one.integral() - 1.0).abs() < 1e-6);
    assert!(regularized_delta([0.0; 3], 0.0, sigma, &spec).unwrap().values().iter().all(|v| *v == 0.0));
    let w = 0.8;
    let mut two = regularized_delta([-3.0, 0.0, 0.0], w, sigma, &spec).unwrap();
    two.add_assign(&regularized_delta([3.0, 0.0, 0.0], w, sigma, &spec).unwrap()).unwrap();
    assert!((two.integral() - 2.0 * w).abs() < 2e-6 * w);
    assert!(regularized_delta([0.0; 3], 1.0, 1.4 * spec.spacing(), &spec).is_err());
}

#[test]
fn potential_is_attractive_linear_and_proportional_to_coupling() {
    let spec = GridSpec::new(32, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = RealField::from_fn(spec, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp() * rng.random::<f64>());
    let b = regularized_delta([2.0, -1.0, 0.5], 2.0, 1.0, &spec).unwrap();
    for kernel in [KernelSpec::coulomb(1.3), KernelSpec::yukawa(1.3, 2.0)] {
        let va = convolve_potential(&a, &kernel).unwrap();
        let vb = convolve_potential(&b, &kernel).unwrap();
        let scale = va.max_abs().max(vb.max_abs());
        assert!(va.max() <= 1e-12 * scale && vb.max() <= 1e-12 * scale);
        let mut ab = a.clone();
        ab.add_assign(&b).unwrap();
        let vab = convolve_potential(&ab, &kernel).unwrap();
        let doubled = convolve_potential(&a, &kernel.with_coupling(2.6)).unwrap();
        for idx in 0..spec.len() {
            assert!((vab.values()[idx] - va.values()[idx] - vb.values()[idx]).abs() < 1e-12 * scale);
            assert!((doubled.values()[idx] - 2.0 * va.values()[idx]).abs() < 1e-12 * scale);
        }
    }
}

#[test]
fn kernel_spec_invariants() {
    assert!(KernelSpec::coulomb(-0.1).validate().is_err());
    assert!(KernelSpec::yukawa(1.0, 0.0).validate().is_err());
    assert!(KernelSpec::helmholtz(1.0, -1.0).validate().is_err());
    assert!(KernelSpec::helmholtz(1.0, 0.0).validate().is_ok());
    let spec = GridSpec::new(8, 4.0).unwrap();
    let bad = RealField::from_fn(spec, |x| if x[0] == 0.0 && x[1] == 0.0 && x[2] == 0.0 { -1e-9 } else { 0.0 });
    assert!(convolve_potential(&bad, &KernelSpec::coulomb(1.0)).is_err());
}
