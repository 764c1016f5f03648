use num_complex::Complex64;

use super::{ComplexField, Fft3, GridSpec, RealField, Vec3};
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn spectrum(f: &ComplexField) -> Result<(Vec<Complex64>, std::sync::Arc<Fft3>)> {
    f.spec().validate()?;
    let fft = Fft3::for_size(f.spec().n());
    let mut data = f.values().to_vec();
    fft.forward(&mut data);
    Ok((data, fft))
}

/// Cartesian partial derivatives computed in Fourier space.
///
/// Uses the FFT-order wavenumbers of [`GridSpec::wavenumbers`], including the
/// `-n/2` Nyquist mode, so applying it twice agrees with [`laplacian`].
pub fn spectral_gradient(f: &ComplexField) -> Result<[ComplexField; 3]> {
    let spec = *f.spec();
    let (hat, fft) = spectrum(f)?;
    let k = spec.wavenumbers();
    let n = spec.n();
    let mut out: [Vec<Complex64>; 3] = [hat.clone(), hat.clone(), hat];
    for (ax, comp) in out.iter_mut().enumerate() {
        for (idx, v) in comp.iter_mut().enumerate() {
            let (i, j, l) = (idx / (n * n), (idx / n) % n, idx % n);
            *v *= I * k[[i, j, l][ax]];
        }
        fft.inverse(comp);
    }
    let [gx, gy, gz] = out;
    Ok([
        ComplexField::from_values(spec, gx)?,
        ComplexField::from_values(spec, gy)?,
        ComplexField::from_values(spec, gz)?,
    ])
}

pub fn laplacian(f: &ComplexField) -> Result<ComplexField> {
    let spec = *f.spec();
    let (mut hat, fft) = spectrum(f)?;
    for (v, k2) in hat.iter_mut().zip(spec.k_squared()) {
        *v *= -k2;
    }
    fft.inverse(&mut hat);
    ComplexField::from_values(spec, hat)
}

pub fn laplacian_real(f: &RealField) -> Result<RealField> {
    Ok(laplacian(&f.to_complex())?.real_part())
}

pub fn gradient_real(f: &RealField) -> Result<[RealField; 3]> {
    let [gx, gy, gz] = spectral_gradient(&f.to_complex())?;
    Ok([gx.real_part(), gy.real_part(), gz.real_part()])
}

/// Σ|f|²·h³.
pub fn l2_norm_sq(f: &ComplexField) -> f64 {
    f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * f.spec().cell_volume()
}

struct Stencil {
    idx: [usize; 8],
    w: [f64; 8],
}

fn stencil(spec: &GridSpec, x: Vec3) -> Stencil {
    let n = spec.n();
    let h = spec.spacing();
    let l = spec.box_length();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for ax in 0..3 {
        let u = (x[ax] + 0.5 * l).rem_euclid(l) / h;
        let fl = u.floor();
        base[ax] = (fl as usize) % n;
        frac[ax] = u - fl;
    }
    let mut idx = [0usize; 8];
    let mut w = [0.0; 8];
    for c in 0..8 {
        let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
        idx[c] = spec.index(
            (base[0] + di) % n,
            (base[1] + dj) % n,
            (base[2] + dk) % n,
        );
        let wa = if di == 1 { frac[0] } else { 1.0 - frac[0] };
        let wb = if dj == 1 { frac[1] } else { 1.0 - frac[1] };
        let wc = if dk == 1 { frac[2] } else { 1.0 - frac[2] };
        w[c] = wa * wb * wc;
    }
    Stencil { idx, w }
}

/// Trilinear interpolation from the 8 surrounding nodes; `x` is wrapped into the box.
pub fn interpolate(f: &ComplexField, x: Vec3) -> Complex64 {
    let s = stencil(f.spec(), x);
    let vals = f.values();
    (0..8).map(|c| vals[s.idx[c]] * s.w[c]).sum()
}

pub fn interpolate_real(f: &RealField, x: Vec3) -> f64 {
    let s = stencil(f.spec(), x);
    let vals = f.values();
    (0..8).map(|c| vals[s.idx[c]] * s.w[c]).sum()
}

/// Per-axis node indices and Lagrange weights for `points` nodes per axis
/// around the cell containing `x`.
pub(crate) struct WideStencil {
    pub(crate) points: usize,
    pub(crate) idx: [[usize; 6]; 3],
    pub(crate) w: [[f64; 6]; 3],
}

impl WideStencil {
    pub(crate) fn new(spec: &GridSpec, x: Vec3, points: usize) -> Result<Self> {
        if !matches!(points, 2 | 4 | 6) {
            return Err(Error::InvalidArgument(format!(
                "interpolation needs 2, 4 or 6 points per axis, got {points}"
            )));
        }
        let n = spec.n() as isize;
        let h = spec.spacing();
        let l = spec.box_length();
        let shift = (points / 2) as isize - 1;
        let mut idx = [[0usize; 6]; 3];
        let mut w = [[0.0; 6]; 3];
        for ax in 0..3 {
            let u = (x[ax] + 0.5 * l).rem_euclid(l) / h;
            let fl = u.floor();
            let t = u - fl;
            for i in 0..points {
                idx[ax][i] = (fl as isize + i as isize - shift).rem_euclid(n) as usize;
                let xi = (i as isize - shift) as f64;
                w[ax][i] = (0..points)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let xj = (j as isize - shift) as f64;
                        (t - xj) / (xi - xj)
                    })
                    .product();
            }
        }
        Ok(WideStencil { points, idx, w })
    }

    /// Visits every stencil node as (flat index, weight).
    pub(crate) fn for_each(&self, spec: &GridSpec, mut f: impl FnMut(usize, f64)) {
        let m = self.points;
        for i in 0..m {
            for j in 0..m {
                let wij = self.w[0][i] * self.w[1][j];
                let row = spec.index(self.idx[0][i], self.idx[1][j], 0);
                for k in 0..m {
                    f(row + self.idx[2][k], wij * self.w[2][k]);
                }
            }
        }
    }
}

/// Tensor-product Lagrange interpolation on 2, 4 or 6 nodes per axis
/// (2 is trilinear); `x` is wrapped into the box.
pub fn interpolate_lagrange(f: &ComplexField, x: Vec3, points: usize) -> Result<Complex64> {
    let s = WideStencil::new(f.spec(), x, points)?;
    let vals = f.values();
    let mut sum = Complex64::default();
    s.for_each(f.spec(), |i, w| sum += vals[i] * w);
    Ok(sum)
}
