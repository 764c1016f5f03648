//! Three-dimensional complex FFT on a cubic grid, built from 1D rustfft plans
//! applied axis by axis.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    /// Shared plan for an `n`³ grid.
    pub fn for_size(n: usize) -> Arc<Fft3> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("fft plan cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft3 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the 1/n³ factor, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "field length does not match FFT size");
        let mut scratch = vec![
            Complex64::default();
            plan.get_inplace_scratch_len().max(plan.get_outofplace_scratch_len())
        ];
        ROTATED.with(|cell| {
            let mut tmp = cell.borrow_mut();
            tmp.resize(data.len(), Complex64::default());
            // each pass transforms the contiguous axis, then cycles the axes;
            // the first pass runs out of place so the result lands back in `data`
            plan.process_outofplace_with_scratch(data, &mut tmp, &mut scratch);
            rotate_axes(&tmp, data, n);
            plan.process_with_scratch(data, &mut scratch);
            rotate_axes(data, &mut tmp, n);
            plan.process_with_scratch(&mut tmp, &mut scratch);
            rotate_axes(&tmp, data, n);
        });
    }
}

thread_local! {
    static ROTATED: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// `out[c][a][b] = input[a][b][c]`: moves the contiguous axis to the front.
fn rotate_axes(input: &[Complex64], out: &mut [Complex64], n: usize) {
    const TILE: usize = 8;
    for a in 0..n {
        let plane = &input[a * n * n..(a + 1) * n * n];
        for c0 in (0..n).step_by(TILE) {
            let c1 = (c0 + TILE).min(n);
            for b in 0..n {
                let src = &plane[b * n + c0..b * n + c1];
                for (dc, v) in src.iter().enumerate() {
                    out[((c0 + dc) * n + a) * n + b] = *v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_identity() {
        let n = 8;
        let fft = Fft3::for_size(n);
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_direct_dft() {
        let n = 8;
        let fft = Fft3::for_size(n);
        let input: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new(((i * 7) % 13) as f64, ((i * 3) % 5) as f64))
            .collect();
        let mut data = input.clone();
        fft.forward(&mut data);
        let tau = std::f64::consts::TAU;
        for &(a, b, c) in &[(0usize, 0usize, 0usize), (1, 2, 3), (7, 0, 5), (4, 4, 4)] {
            let mut sum = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let phase = -tau * ((a * i + b * j + c * k) as f64) / n as f64;
                        sum += input[(i * n + j) * n + k] * Complex64::from_polar(1.0, phase);
                    }
                }
            }
            let got = data[(a * n + b) * n + c];
            assert!((got - sum).norm() < 1e-9 * (1.0 + sum.norm()));
        }
    }
}
