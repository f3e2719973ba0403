//! Multidimensional FFTs on the periodic grid, built from 1-D rustfft passes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::exec;

const PANEL: usize = 16;

/// Copy columns j0..j0+w of an n × stride block into w contiguous rows.
fn gather(src: &[Complex64], tmp: &mut [Complex64], n: usize, stride: usize, j0: usize, w: usize) {
    for i in 0..n {
        let row = &src[i * stride + j0..i * stride + j0 + w];
        for (j, &v) in row.iter().enumerate() {
            tmp[j * n + i] = v;
        }
    }
}

pub(crate) struct NdFft {
    n: usize,
    d: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn new(n: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        NdFft { n, d, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    /// Forward transform normalised to Fourier coefficients:
    /// â(m) = N^{-d} Σ_x a(x) e^{-2πi m·x/N}.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
        let s = 1.0 / (data.len() as f64);
        exec::for_each_chunk_mut(data, 1 << 14, |_, c| c.iter_mut().for_each(|z| *z *= s));
    }

    /// Inverse of `forward`: a(x) = Σ_m â(m) e^{2πi m·x/N}.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(self.d as u32));
        for axis in 0..self.d {
            let stride = n.pow((self.d - 1 - axis) as u32);
            let block = stride * n;
            if stride == 1 {
                exec::for_each_chunk_mut(data, n * 64.min(data.len() / n).max(1), |_, c| {
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    fft.process_with_scratch(c, &mut scratch);
                });
                continue;
            }
            // Each block is an n × stride matrix whose columns are the lines.
            // Gather narrow column panels, transform them as contiguous rows
            // and scatter back; panels stay small enough for the L1 cache.
            if data.len() / block > 1 {
                exec::for_each_chunk_mut(data, block, |_, blk| {
                    let mut tmp = vec![Complex64::default(); PANEL * n];
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    for j0 in (0..stride).step_by(PANEL) {
                        let w = PANEL.min(stride - j0);
                        let tmp = &mut tmp[..w * n];
                        gather(blk, tmp, n, stride, j0, w);
                        fft.process_with_scratch(tmp, &mut scratch);
                        for i in 0..n {
                            let row = &mut blk[i * stride + j0..i * stride + j0 + w];
                            for (j, v) in row.iter_mut().enumerate() {
                                *v = tmp[j * n + i];
                            }
                        }
                    }
                });
            } else {
                // A single block: split its columns into panels instead.
                let panel = PANEL.min(stride);
                let cols: Vec<usize> = (0..stride).step_by(panel).collect();
                let src: &[Complex64] = data;
                let results = exec::map_range(cols.len(), |c| {
                    let j0 = cols[c];
                    let w = panel.min(stride - j0);
                    let mut tmp = vec![Complex64::default(); w * n];
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    gather(src, &mut tmp, n, stride, j0, w);
                    fft.process_with_scratch(&mut tmp, &mut scratch);
                    tmp
                });
                for (c, tmp) in results.into_iter().enumerate() {
                    let j0 = cols[c];
                    let w = panel.min(stride - j0);
                    for i in 0..n {
                        for j in 0..w {
                            data[i * stride + j0 + j] = tmp[j * n + i];
                        }
                    }
                }
            }
        }
    }
}

