//! Periodic cubic grids and the scalar fields that live on them.
//!
//! Nodes sit at `-L/2 + i*h` for `i = 0..n` on each axis, stored row-major
//! with the last (z) axis contiguous. Every solver in the crate works on this
//! substrate.

mod dump;
mod fft;
mod ops;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::{read_dump, write_dump, DumpedField, FieldKind};
pub use fft::Fft3;
pub use ops::{
    gradient_real, interpolate, interpolate_lagrange, interpolate_real, l2_norm_sq, laplacian, laplacian_real,
    spectral_gradient,
};
pub(crate) use ops::WideStencil;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_per_axis: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(n_per_axis: usize, box_length: f64) -> Result<Self> {
        let spec = GridSpec {
            n_per_axis,
            box_length,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_axis < 8 || self.n_per_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_per_axis must be even and >= 8, got {}",
                self.n_per_axis
            )));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive, got {}",
                self.box_length
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_per_axis + j) * self.n_per_axis + k
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n_per_axis;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn position(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Angular wavenumbers in FFT order (`0, 1, .., n/2-1, -n/2, .., -1` times 2π/L).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_per_axis as i64;
        let dk = std::f64::consts::TAU / self.box_length;
        (0..n)
            .map(|i| if i < n / 2 { i as f64 * dk } else { (i - n) as f64 * dk })
            .collect()
    }

    /// |k|² for every mode, in the same layout as the field values.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        let n = self.n_per_axis;
        let mut out = Vec::with_capacity(self.len());
        for a in &k {
            for b in &k {
                for c in &k {
                    out.push(a * a + b * b + c * c);
                }
            }
        }
        debug_assert_eq!(out.len(), n * n * n);
        out
    }

    /// Shortest periodic image of a displacement component.
    pub fn wrap_delta(&self, d: f64) -> f64 {
        let l = self.box_length;
        d - l * (d / l).round()
    }

    /// Minimum-image distance between two points of the periodic box.
    pub fn distance(&self, a: Vec3, b: Vec3) -> f64 {
        (0..3)
            .map(|ax| self.wrap_delta(a[ax] - b[ax]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    spec: GridSpec,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Vec<Complex64>,
}

macro_rules! field_common {
    ($ty:ident, $elem:ty) => {
        impl $ty {
            pub fn from_values(spec: GridSpec, values: Vec<$elem>) -> Result<Self> {
                spec.validate()?;
                if values.len() != spec.len() {
                    return Err(Error::InvalidGrid(format!(
                        "expected {} values, got {}",
                        spec.len(),
                        values.len()
                    )));
                }
                Ok($ty { spec, values })
            }

            pub fn zeros(spec: GridSpec) -> Self {
                $ty {
                    spec,
                    values: vec![<$elem>::default(); spec.len()],
                }
            }

            /// Sample `f(position)` at every node.
            pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Vec3) -> $elem) -> Self {
                let values = (0..spec.len()).map(|idx| f(spec.position(idx))).collect();
                $ty { spec, values }
            }

            pub fn spec(&self) -> &GridSpec {
                &self.spec
            }

            pub fn values(&self) -> &[$elem] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [$elem] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<$elem> {
                self.values
            }

            pub fn scale(&mut self, factor: f64) {
                self.values.iter_mut().for_each(|v| *v *= factor);
            }

            pub fn scaled(mut self, factor: f64) -> Self {
                self.scale(factor);
                self
            }

            pub fn add_assign(&mut self, other: &$ty) -> Result<()> {
                if self.spec != other.spec {
                    return Err(Error::GridMismatch);
                }
                self.values
                    .iter_mut()
                    .zip(&other.values)
                    .for_each(|(a, b)| *a += *b);
                Ok(())
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }
        }
    };
}

field_common!(RealField, f64);
field_common!(ComplexField, Complex64);

impl RealField {
    /// Riemann-sum integral over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn add_constant(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v += c);
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            spec: self.spec,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Value at a node addressed by integer indices (wrapped periodically).
    pub fn at(&self, i: isize, j: isize, k: isize) -> f64 {
        let n = self.spec.n() as isize;
        let w = |a: isize| a.rem_euclid(n) as usize;
        self.values[self.spec.index(w(i), w(j), w(k))]
    }

    /// Centre of mass of the field viewed as a weight, on the periodic box.
    ///
    /// Uses the circular mean per axis so that blobs straddling the boundary
    /// are located correctly.
    pub fn barycentre(&self) -> Vec3 {
        let spec = self.spec;
        let n = spec.n();
        let l = spec.box_length();
        let mut out = [0.0; 3];
        for (ax, slot) in out.iter_mut().enumerate() {
            let mut marginal = vec![0.0; n];
            for (idx, &w) in self.values.iter().enumerate() {
                let (i, j, k) = spec.unravel(idx);
                marginal[[i, j, k][ax]] += w;
            }
            let (mut s, mut c) = (0.0, 0.0);
            for (i, &m) in marginal.iter().enumerate() {
                let theta = std::f64::consts::TAU * (spec.coord(i) + 0.5 * l) / l;
                s += m * theta.sin();
                c += m * theta.cos();
            }
            let theta = s.atan2(c);
            *slot = spec.wrap_delta(theta * l / std::f64::consts::TAU - 0.5 * l);
        }
        out
    }

    /// Root-mean-square radius of the weight about its barycentre.
    pub fn rms_radius(&self) -> f64 {
        let centre = self.barycentre();
        let spec = self.spec;
        let (mut num, mut den) = (0.0, 0.0);
        for (idx, &w) in self.values.iter().enumerate() {
            let r = spec.distance(spec.position(idx), centre);
            num += w * r * r;
            den += w;
        }
        (num / den).sqrt()
    }
}

impl ComplexField {
    pub fn density(&self) -> RealField {
        RealField {
            spec: self.spec,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn real_part(&self) -> RealField {
        RealField {
            spec: self.spec,
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }

    pub fn scale_complex(&mut self, factor: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// ⟨self, other⟩ = Σ conj(self)·other·h³.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.spec.cell_volume())
    }

    /// Rescale so that `l2_norm_sq` equals `norm_sq`.
    pub fn normalize_to(&mut self, norm_sq: f64) {
        let current = ops::l2_norm_sq(self);
        if current > 0.0 {
            self.scale((norm_sq / current).sqrt());
        }
    }
}
