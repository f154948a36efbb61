use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default upper bound on the number of grid nodes a single operator may touch.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// Periodic uniform lattice over `num_particles` blocks of `dim_per_particle` axes.
///
/// Nodes sit at `-L + (j + offset) h` with `h = 2L / n` on every axis. Flat
/// indices are row-major with the last axis fastest, so particle block `p`
/// occupies axes `p*d .. (p+1)*d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    dim_per_particle: usize,
    num_particles: usize,
    half_length: f64,
    points_per_axis: usize,
    offset: f64,
}

impl Grid {
    pub fn new(
        dim_per_particle: usize,
        num_particles: usize,
        half_length: f64,
        points_per_axis: usize,
        offset: f64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim_per_particle) {
            return Err(Error::InvalidGrid(format!(
                "dimension per particle must be 1, 2 or 3 (got {dim_per_particle})"
            )));
        }
        if num_particles == 0 {
            return Err(Error::InvalidGrid("need at least one particle block".into()));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box half-length must be positive (got {half_length})"
            )));
        }
        if points_per_axis < 2 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 2 (got {points_per_axis})"
            )));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::InvalidGrid(format!("offset must lie in [0, 1) (got {offset})")));
        }
        let axes = dim_per_particle * num_particles;
        if axes > 9 {
            return Err(Error::InvalidGrid(format!("{axes} total axes is beyond scope")));
        }
        Ok(Self {
            dim_per_particle,
            num_particles,
            half_length,
            points_per_axis,
            offset,
        })
    }

    /// Single relative-coordinate block with the singularity-avoiding offset 1/2.
    pub fn relative(dim: usize, half_length: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(dim, 1, half_length, points_per_axis, 0.5)
    }

    pub fn dim_per_particle(&self) -> usize {
        self.dim_per_particle
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn axes(&self) -> usize {
        self.dim_per_particle * self.num_particles
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes per particle block, `n^d`.
    pub fn block_len(&self) -> usize {
        self.points_per_axis.pow(self.dim_per_particle as u32)
    }

    /// Weight of one node in the discrete L² inner product, `h^{axes}`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.axes() as i32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.axes() as i32)
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_length + (j as f64 + self.offset) * self.spacing()
    }

    /// Angular wavenumber of FFT bin `bin` (standard FFT ordering).
    pub fn wavenumber(&self, bin: usize) -> f64 {
        let n = self.points_per_axis;
        let signed = if bin < n / 2 { bin as f64 } else { bin as f64 - n as f64 };
        signed * PI / self.half_length
    }

    /// Largest representable |k| component, `pi / h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Splits a flat index into per-axis indices.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for slot in out.iter_mut().rev() {
            *slot = flat % n;
            flat /= n;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let n = self.points_per_axis;
        idx.iter().fold(0, |acc, &j| acc * n + j)
    }

    /// Node coordinates for a flat index.
    pub fn position(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; 9];
        let axes = self.axes();
        self.unflatten(flat, &mut idx[..axes]);
        for (x, &j) in out.iter_mut().zip(&idx[..axes]) {
            *x = self.coordinate(j);
        }
    }

    /// Per-axis index of `-x_j`, if the reflection preserves nodes.
    pub fn reflect_index(&self, j: usize) -> Result<usize> {
        let n = self.points_per_axis as isize;
        let shift = 2.0 * self.offset;
        if (shift - shift.round()).abs() > 1e-12 {
            return Err(Error::ReflectionIncompatible { offset: self.offset });
        }
        let s = shift.round() as isize;
        Ok((n - j as isize - s).rem_euclid(n) as usize)
    }

    /// Minimum-image difference of two per-axis indices, as a coordinate.
    pub fn min_image(&self, a: usize, b: usize) -> f64 {
        let n = self.points_per_axis as isize;
        let mut diff = (a as isize - b as isize).rem_euclid(n);
        if diff >= n / 2 {
            diff -= n;
        }
        diff as f64 * self.spacing()
    }

    /// Same lattice with every length multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.dim_per_particle,
            self.num_particles,
            self.half_length * factor,
            self.points_per_axis,
            self.offset,
        )
    }

    pub fn with_points(&self, points_per_axis: usize) -> Result<Self> {
        Self::new(
            self.dim_per_particle,
            self.num_particles,
            self.half_length,
            points_per_axis,
            self.offset,
        )
    }

    pub fn with_half_length(&self, half_length: f64) -> Result<Self> {
        Self::new(
            self.dim_per_particle,
            self.num_particles,
            half_length,
            self.points_per_axis,
            self.offset,
        )
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        let nodes = self
            .points_per_axis
            .checked_pow(self.axes() as u32)
            .unwrap_or(usize::MAX);
        if nodes > cap {
            return Err(Error::MemoryCap { nodes, cap });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_sizes() {
        let g = Grid::new(2, 2, 5.0, 8, 0.5).unwrap();
        assert_eq!(g.axes(), 4);
        assert_eq!(g.len(), 4096);
        assert!((g.spacing() - 1.25).abs() < 1e-15);
        assert!((g.cell_volume() - 1.25f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(4, 1, 1.0, 8, 0.0).is_err());
        assert!(Grid::new(1, 1, 1.0, 7, 0.0).is_err());
        assert!(Grid::new(1, 1, -1.0, 8, 0.0).is_err());
        assert!(Grid::new(1, 1, 1.0, 8, 1.0).is_err());
    }

    #[test]
    fn half_offset_avoids_origin_and_reflects() {
        let g = Grid::relative(1, 3.0, 16).unwrap();
        for j in 0..16 {
            assert!(g.coordinate(j).abs() > 1e-12);
            let r = g.reflect_index(j).unwrap();
            assert!((g.coordinate(r) + g.coordinate(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_offset_reflection() {
        let g = Grid::new(1, 1, 3.0, 16, 0.0).unwrap();
        for j in 0..16 {
            let r = g.reflect_index(j).unwrap();
            let (x, y) = (g.coordinate(j), g.coordinate(r));
            // -L is its own periodic image
            assert!((x + y).abs() < 1e-12 || (x + y + 6.0).abs() < 1e-12 || (x + y - 6.0).abs() < 1e-12);
        }
        let odd = Grid::new(1, 1, 3.0, 16, 0.3).unwrap();
        assert!(odd.reflect_index(2).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let g = Grid::new(1, 3, 1.0, 6, 0.5).unwrap();
        let mut idx = [0; 3];
        for flat in 0..g.len() {
            g.unflatten(flat, &mut idx);
            assert_eq!(g.flatten(&idx), flat);
        }
    }

    #[test]
    fn memory_cap() {
        let g = Grid::new(3, 2, 1.0, 16, 0.5).unwrap();
        assert!(matches!(g.check_cap(1 << 20), Err(Error::MemoryCap { .. })));
    }
}
