//! Closed-form free Gaussian packets (ħ = m = 1) and superpositions of them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, Vec3};

/// Isotropic Gaussian packet, unit norm at all times:
/// `ψ(x,0) ∝ exp(-|x - c|²/4σ² + i p·(x - c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub centre: Vec3,
    pub sigma: f64,
    pub momentum: Vec3,
}

impl GaussianPacket {
    pub fn new(centre: Vec3, sigma: f64, momentum: Vec3) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("packet sigma must be > 0, got {sigma}")));
        }
        Ok(GaussianPacket {
            centre,
            sigma,
            momentum,
        })
    }

    fn alpha(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma * self.sigma, 0.5 * t)
    }

    /// One Cartesian factor of the packet.
    pub fn axis_value(&self, axis: usize, s: f64, t: f64) -> Complex64 {
        let alpha = self.alpha(t);
        let p = self.momentum[axis];
        let u = s - self.centre[axis] - p * t;
        let pref = (2.0 * PI * self.sigma * self.sigma).powf(-0.25) * (self.sigma * self.sigma / alpha).sqrt();
        let expo = -u * u / (4.0 * alpha) + Complex64::i() * (p * (s - self.centre[axis]) - 0.5 * p * p * t);
        pref * expo.exp()
    }

    fn axis_log_derivative(&self, axis: usize, s: f64, t: f64) -> Complex64 {
        let u = s - self.centre[axis] - self.momentum[axis] * t;
        -u / (2.0 * self.alpha(t)) + Complex64::new(0.0, self.momentum[axis])
    }

    pub fn value(&self, x: Vec3, t: f64) -> Complex64 {
        (0..3).map(|a| self.axis_value(a, x[a], t)).product()
    }

    pub fn value_and_gradient(&self, x: Vec3, t: f64) -> (Complex64, [Complex64; 3]) {
        let v = self.value(x, t);
        (v, std::array::from_fn(|a| v * self.axis_log_derivative(a, x[a], t)))
    }

    /// `(A, B, C)` with the axis factor equal to `exp(-A s² + B s + C)`.
    fn axis_log_coefficients(&self, axis: usize, t: f64) -> (Complex64, Complex64, Complex64) {
        let alpha = self.alpha(t);
        let (c, p) = (self.centre[axis], self.momentum[axis]);
        let m = c + p * t;
        let pref = (2.0 * PI * self.sigma * self.sigma).powf(-0.25) * (self.sigma * self.sigma / alpha).sqrt();
        let i = Complex64::i();
        (
            1.0 / (4.0 * alpha),
            m / (2.0 * alpha) + i * p,
            -m * m / (4.0 * alpha) - i * (p * c + 0.5 * p * p * t) + pref.ln(),
        )
    }

    /// `∫ gₐ(s) conj(hₐ(s)) ds` along one axis, in closed form.
    pub fn axis_overlap(&self, other: &GaussianPacket, axis: usize, t: f64) -> Complex64 {
        let (a1, b1, c1) = self.axis_log_coefficients(axis, t);
        let (a2, b2, c2) = other.axis_log_coefficients(axis, t);
        let (a, b, c) = (a1 + a2.conj(), b1 + b2.conj(), c1 + c2.conj());
        (PI / a).sqrt() * (b * b / (4.0 * a) + c).exp()
    }

    /// Analytic rms width per axis at time t.
    pub fn axis_width(&self, t: f64) -> f64 {
        self.sigma * (1.0 + (t / (2.0 * self.sigma * self.sigma)).powi(2)).sqrt()
    }
}

/// `Σ cᵢ gᵢ(x, t)` with free Gaussian packets `gᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSuperposition {
    pub terms: Vec<(Complex64, GaussianPacket)>,
}

impl PacketSuperposition {
    pub fn new(terms: Vec<(Complex64, GaussianPacket)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("superposition needs at least one packet".into()));
        }
        Ok(PacketSuperposition { terms })
    }

    pub fn value(&self, x: Vec3, t: f64) -> Complex64 {
        self.terms.iter().map(|(c, g)| c * g.value(x, t)).sum()
    }

    pub fn value_and_gradient(&self, x: Vec3, t: f64) -> (Complex64, [Complex64; 3]) {
        let mut v = Complex64::default();
        let mut grad = [Complex64::default(); 3];
        for (c, g) in &self.terms {
            let (gv, gg) = g.value_and_gradient(x, t);
            v += c * gv;
            for a in 0..3 {
                grad[a] += c * gg[a];
            }
        }
        (v, grad)
    }

    /// `∫|ψ|²` over all space.
    pub fn norm_sq(&self, t: f64) -> f64 {
        let mut total = Complex64::default();
        for (ci, gi) in &self.terms {
            for (cj, gj) in &self.terms {
                let o: Complex64 = (0..3).map(|a| gi.axis_overlap(gj, a, t)).product();
                total += ci * cj.conj() * o;
            }
        }
        total.re
    }

    /// Marginal density of `|ψ(t)|²/∫|ψ|²` along one axis.
    pub fn marginal_density(&self, axis: usize, s: f64, t: f64) -> f64 {
        let mut total = Complex64::default();
        for (ci, gi) in &self.terms {
            for (cj, gj) in &self.terms {
                let rest: Complex64 = (0..3).filter(|a| *a != axis).map(|a| gi.axis_overlap(gj, a, t)).product();
                total += ci * cj.conj() * gi.axis_value(axis, s, t) * gj.axis_value(axis, s, t).conj() * rest;
            }
        }
        total.re / self.norm_sq(t)
    }

    /// Probability mass of the marginal in each bin between consecutive
    /// `edges`; the first and last bins extend to infinity.
    pub fn marginal_bin_probabilities(&self, axis: usize, edges: &[f64], t: f64) -> Result<Vec<f64>> {
        if edges.len() < 3 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("need at least 3 strictly increasing bin edges".into()));
        }
        let reach = self
            .terms
            .iter()
            .map(|(_, g)| (g.centre[axis] + g.momentum[axis] * t).abs() + 20.0 * g.axis_width(t))
            .fold(0.0, f64::max);
        let narrowest = self.terms.iter().map(|(_, g)| g.axis_width(t)).fold(f64::INFINITY, f64::min);
        let simpson = |lo: f64, hi: f64| -> f64 {
            let m = 2 * ((hi - lo) / (0.02 * narrowest)).ceil().max(100.0) as usize;
            let h = (hi - lo) / m as f64;
            let mut sum = self.marginal_density(axis, lo, t) + self.marginal_density(axis, hi, t);
            for k in 1..m {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                sum += w * self.marginal_density(axis, lo + k as f64 * h, t);
            }
            sum * h / 3.0
        };
        let n = edges.len() - 1;
        Ok((0..n)
            .map(|k| {
                let lo = if k == 0 { edges[0].min(-reach) } else { edges[k] };
                let hi = if k + 1 == n { edges[n].max(reach) } else { edges[k + 1] };
                simpson(lo, hi)
            })
            .collect())
    }

    /// Values at the grid nodes (no periodic images are added).
    pub fn sample_on_grid(&self, spec: GridSpec, t: f64) -> ComplexField {
        ComplexField::from_fn(spec, |x| self.value(x, t))
    }

    /// Exact draws from `|ψ(x, 0)|² / ∫|ψ|²` by rejection from the mixture
    /// `Σ|cᵢ|²|gᵢ|²`, which dominates `|ψ|²/m` for m terms.
    pub fn sample_born<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec3> {
        let weights: Vec<f64> = self.terms.iter().map(|(c, _)| c.norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        let m = self.terms.len() as f64;
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut pick = rng.random::<f64>() * total;
            let mut idx = 0;
            while idx + 1 < weights.len() && pick >= weights[idx] {
                pick -= weights[idx];
                idx += 1;
            }
            let g = &self.terms[idx].1;
            let x: Vec3 = std::array::from_fn(|a| {
                let z: f64 = StandardNormal.sample(rng);
                g.centre[a] + g.sigma * z
            });
            let envelope: f64 = self
                .terms
                .iter()
                .map(|(c, g)| c.norm_sqr() * g.value(x, 0.0).norm_sqr())
                .sum();
            let target = self.value(x, 0.0).norm_sqr();
            if rng.random::<f64>() * m * envelope <= target {
                out.push(x);
            }
        }
        out
    }
}
