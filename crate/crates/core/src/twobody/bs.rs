use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{birman_schwinger_top, RelativeHamiltonian};
use crate::error::{invalid, Result};
use crate::lattice::Grid;
use crate::potentials::{PotentialSpec, SignClass};
use crate::quadrature::gauss_legendre;

fn require_nonnegative(spec: &PotentialSpec) -> Result<()> {
    if spec.sign_class() != SignClass::Nonnegative {
        return Err(invalid("spec", "Birman–Schwinger operator needs V ≥ 0"));
    }
    Ok(())
}

/// Largest eigenvalue of `V^{1/2} (μ(−Δ) + z)^{-1} V^{1/2}` on a periodic grid.
///
/// `z = 0` drops the zero Fourier mode.
pub fn bs_max_eigenvalue(spec: &PotentialSpec, grid: &Grid, z: f64, mu: f64) -> Result<f64> {
    require_nonnegative(spec)?;
    if z < 0.0 {
        return Err(invalid("z", "must be nonnegative"));
    }
    let h = RelativeHamiltonian::with_mass(*grid, spec.clone(), 1.0, 1.0, mu)?;
    birman_schwinger_top(h.laplacian(), h.interaction(), z, 1e-9, 0xb5)
}

/// Value at `z = 0` of the quadratic in `√z` through three samples.
pub fn richardson_sqrt_z(zs: &[f64; 3], values: &[f64; 3]) -> f64 {
    let s: Vec<f64> = zs.iter().map(|z| z.sqrt()).collect();
    let mut total = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if j != i {
                w *= (0.0 - s[j]) / (s[i] - s[j]);
            }
        }
        total += w * values[i];
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct BsZeroLimit {
    pub z: [f64; 3],
    pub values: [f64; 3],
    pub extrapolated: f64,
    /// direct evaluation at `z = 0` where available
    pub at_zero: f64,
}

pub const BS_Z_SAMPLES: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// `z ↓ 0` limit of the top eigenvalue on a periodic grid.
pub fn bs_zero_limit(spec: &PotentialSpec, grid: &Grid, mu: f64) -> Result<BsZeroLimit> {
    let mut values = [0.0; 3];
    for (v, &z) in values.iter_mut().zip(&BS_Z_SAMPLES) {
        *v = bs_max_eigenvalue(spec, grid, z, mu)?;
    }
    Ok(BsZeroLimit {
        z: BS_Z_SAMPLES,
        values,
        extrapolated: richardson_sqrt_z(&BS_Z_SAMPLES, &values),
        at_zero: bs_max_eigenvalue(spec, grid, 0.0, mu)?,
    })
}

/// Top s-wave eigenvalue of `V^{1/2}(μ(−Δ)+z)^{-1}V^{1/2}` in ℝ³ by Nyström.
///
/// With `u = r f`, the free resolvent acts on s-waves through the kernel
/// `sinh(κ r<) e^{−κ r>}/(μκ)`, `κ = √(z/μ)` (`r</μ` at `z = 0`). Nodes are
/// Gauss–Legendre in `t` with `r = t²`, `panels` panels of 16 points, and the
/// Richardson combination of `panels` and `2·panels` is returned.
pub fn bs_radial_s_wave(spec: &PotentialSpec, z: f64, mu: f64, panels: usize) -> Result<f64> {
    require_nonnegative(spec)?;
    if z < 0.0 || !(mu > 0.0) || panels == 0 {
        return Err(invalid("z", "needs z ≥ 0, μ > 0 and at least one panel"));
    }
    let coarse = radial_nystrom(spec, z, mu, panels)?;
    let fine = radial_nystrom(spec, z, mu, 2 * panels)?;
    Ok(fine + (fine - coarse) / 3.0)
}

fn radial_nystrom(spec: &PotentialSpec, z: f64, mu: f64, panels: usize) -> Result<f64> {
    let (x, w) = gauss_legendre(16);
    let tmax = spec.negligible_radius(1e-24).sqrt();
    let mut edges = vec![0.0];
    if let Some(r) = spec.support_radius() {
        if r.sqrt() < tmax {
            edges.push(r.sqrt());
        }
    }
    edges.push(tmax);
    let mut r = Vec::new();
    let mut a = Vec::new();
    let segs = edges.len() - 1;
    let per = panels.div_ceil(segs).max(1);
    for s in edges.windows(2) {
        let hp = (s[1] - s[0]) / per as f64;
        for p in 0..per {
            let mid = s[0] + (p as f64 + 0.5) * hp;
            for (xi, wi) in x.iter().zip(&w) {
                let t = mid + 0.5 * hp * xi;
                let rr = t * t;
                let v = spec.radial(rr).unwrap_or(0.0).max(0.0);
                r.push(rr);
                a.push((0.5 * hp * wi * 2.0 * t * v / mu).sqrt());
            }
        }
    }
    let kappa = (z / mu).sqrt();
    let green = |p: f64, q: f64| {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        if kappa == 0.0 {
            lo
        } else {
            // sinh(κ lo) e^{−κ hi}/κ written without overflow
            0.5 * ((-kappa * (hi - lo)).exp() - (-kappa * (hi + lo)).exp()) / kappa
        }
    };
    let m = r.len();
    let mat = DMatrix::from_fn(m, m, |i, j| a[i] * green(r[i], r[j]) * a[j]);
    let eig = SymmetricEigen::new(mat);
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn square_well_zero_energy_oracle() {
        // u'' = −(c/β) u on (0,1), u(0) = 0, u'(1) = 0 ⇒ β = 4c/π²
        let c = 1.7;
        let spec = PotentialSpec::square_well(c, 1.0).unwrap();
        let beta = bs_radial_s_wave(&spec, 0.0, 1.0, 24).unwrap();
        assert_relative_eq!(beta, 4.0 * c / (PI * PI), max_relative = 1e-6);
    }

    #[test]
    fn square_well_finite_z_oracle() {
        // bound state at −z: k cot k = −κ with k² = c/β − z, κ = √z
        let c = 1.0;
        let z: f64 = 0.3;
        let spec = PotentialSpec::square_well(c, 1.0).unwrap();
        let beta = bs_radial_s_wave(&spec, z, 1.0, 24).unwrap();
        let k = (c / beta - z).sqrt();
        assert!((k / k.tan() + z.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn mass_factor_and_linearity() {
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let b1 = bs_radial_s_wave(&spec, 0.2, 1.0, 16).unwrap();
        let b2 = bs_radial_s_wave(&spec, 0.4, 2.0, 16).unwrap();
        assert_relative_eq!(b2, b1 / 2.0, max_relative = 1e-10);
        let b3 = bs_radial_s_wave(&spec.scaled_by(3.0), 0.2, 1.0, 16).unwrap();
        assert_relative_eq!(b3, 3.0 * b1, max_relative = 1e-10);
    }

    #[test]
    fn grid_eigenvalue_is_linear_and_decays() {
        let g = Grid::relative(1, 8.0, 128).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let b = bs_max_eigenvalue(&spec, &g, 0.5, 2.0).unwrap();
        let b2 = bs_max_eigenvalue(&spec.scaled_by(2.5), &g, 0.5, 2.0).unwrap();
        assert_relative_eq!(b2, 2.5 * b, max_relative = 1e-7);
        assert!(bs_max_eigenvalue(&spec, &g, 1e6, 2.0).unwrap() < 1e-5);
    }

    #[test]
    fn richardson_is_exact_on_quadratics_in_sqrt_z() {
        let f = |z: f64| 1.0 - 0.7 * z.sqrt() + 0.2 * z;
        let zs = [0.1, 0.01, 0.001];
        let v = [f(zs[0]), f(zs[1]), f(zs[2])];
        assert_relative_eq!(richardson_sqrt_z(&zs, &v), 1.0, max_relative = 1e-12);
    }
}
