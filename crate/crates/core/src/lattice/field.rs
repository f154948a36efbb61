use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Grid;

/// Complex values on every node of a [`Grid`], with the `h^{axes}`-weighted L² product.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count does not match grid");
        Self { grid, values }
    }

    /// Samples `f` at every node; the closure receives all `axes` coordinates.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let axes = grid.axes();
        let mut x = vec![0.0; axes];
        let values = (0..grid.len())
            .map(|i| {
                grid.position(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Independent standard complex normal entries.
    pub fn random(grid: Grid, rng: &mut impl Rng) -> Self {
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn inner(&self, other: &Field) -> Complex64 {
        dot(&self.values, &other.values) * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        (norm_sq(&self.values) * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn sub(&self, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Field::from_values(self.grid, values)
    }
}

/// Unweighted `sum conj(a) b`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn random_vector(len: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FourierTransform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parseval() {
        let g = Grid::new(2, 1, 4.0, 16, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::random(g, &mut rng);
        let mut spec = f.values().to_vec();
        FourierTransform::new(&g).forward(&mut spec);
        let lhs = norm_sq(f.values());
        let rhs = norm_sq(&spec) / g.len() as f64;
        assert!(((lhs - rhs) / lhs).abs() < 1e-12);
    }

    #[test]
    fn weighted_norm_approximates_continuum() {
        let g = Grid::new(1, 1, 10.0, 256, 0.5).unwrap();
        let f = Field::from_real_fn(g, |x| (-x[0] * x[0]).exp());
        // int e^{-2x^2} = sqrt(pi/2)
        let exact = (std::f64::consts::PI / 2.0).sqrt();
        assert!((f.norm().powi(2) - exact).abs() < 1e-12);
    }
}
