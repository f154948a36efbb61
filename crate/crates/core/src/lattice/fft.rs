use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

/// Multi-dimensional FFT over all axes of a [`Grid`], built from 1-d plans.
///
/// `inverse` carries the `1/len` normalization so `inverse(forward(f)) = f`.
pub struct FourierTransform {
    n: usize,
    axes: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

const TILE: usize = 32;

impl FourierTransform {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        Self {
            n,
            axes: grid.axes(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.axes as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "field length does not match grid");
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for axis in 0..self.axes {
            let stride = n.pow((self.axes - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            let mut lines = vec![Complex64::default(); n * TILE.min(stride)];
            for chunk in data.chunks_mut(block) {
                let mut col = 0;
                while col < stride {
                    let width = TILE.min(stride - col);
                    for c in 0..width {
                        for j in 0..n {
                            lines[c * n + j] = chunk[j * stride + col + c];
                        }
                    }
                    plan.process_with_scratch(&mut lines[..width * n], &mut scratch);
                    for c in 0..width {
                        for j in 0..n {
                            chunk[j * stride + col + c] = lines[c * n + j];
                        }
                    }
                    col += width;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_plane_wave() {
        let g = Grid::new(2, 1, 3.0, 8, 0.5).unwrap();
        let ft = FourierTransform::new(&g);
        let mut x = [0.0; 2];
        let data: Vec<Complex64> = (0..g.len())
            .map(|i| {
                g.position(i, &mut x);
                Complex64::new(0.0, g.wavenumber(1) * x[0] + g.wavenumber(3) * x[1]).exp()
            })
            .collect();
        let mut spec = data.clone();
        ft.forward(&mut spec);
        // all the weight lands in bin (1, 3)
        let peak = 8 + 3;
        for (i, v) in spec.iter().enumerate() {
            if i != peak {
                assert!(v.norm() < 1e-10, "leak at {i}: {v}");
            }
        }
        ft.inverse(&mut spec);
        for (a, b) in spec.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
