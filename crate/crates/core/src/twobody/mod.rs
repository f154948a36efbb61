//! Relative-coordinate two-body problem `−2Δ − λ V_ε`.

mod bs;
mod resonance;
mod spectrum;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use bs::{bs_max_eigenvalue, bs_radial_s_wave, bs_zero_limit, richardson_sqrt_z, BsZeroLimit};
pub use resonance::{resonance_norm_sq, resonance_psi, resonance_residual, ResonanceReport};
pub use spectrum::{birman_schwinger_top, lowest_eigenpair, GroundStateOptions, GroundStateResult, SplitOperator};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_laplacian, Grid, Laplacian, LinearMap, OddProjector};
use crate::potentials::{compute_cv, PotentialSpec, SignClass};

/// `V_ε` sampled at the nodes of a single-block grid, singular nodes capped.
pub fn sample_scaled_potential(grid: &Grid, spec: &PotentialSpec, eps: f64) -> Vec<f64> {
    let mut x = vec![0.0; grid.axes()];
    (0..grid.len())
        .map(|i| {
            grid.position(i, &mut x);
            let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            spec.radial_scaled_capped(eps, t)
        })
        .collect()
}

/// `h = −μΔ − λ V_ε` on a relative-coordinate grid (μ = 2 by default).
#[derive(Clone)]
pub struct RelativeHamiltonian {
    grid: Grid,
    spec: PotentialSpec,
    eps: f64,
    lambda: f64,
    lap: Laplacian,
    interaction: Arc<Vec<f64>>,
}

impl RelativeHamiltonian {
    pub fn new(grid: Grid, spec: PotentialSpec, eps: f64, lambda: f64) -> Result<Self> {
        Self::with_mass(grid, spec, eps, lambda, 2.0)
    }

    pub fn with_mass(grid: Grid, spec: PotentialSpec, eps: f64, lambda: f64, mass: f64) -> Result<Self> {
        if grid.num_particles() != 1 {
            return Err(Error::InvalidGrid("relative grids carry one block".into()));
        }
        if !(eps > 0.0) {
            return Err(invalid("eps", "must be positive"));
        }
        if !(lambda >= 0.0) {
            return Err(invalid("lambda", "must be nonnegative"));
        }
        let lap = build_laplacian(&grid, mass);
        let interaction = sample_scaled_potential(&grid, &spec, eps)
            .into_iter()
            .map(|v| lambda * v)
            .collect();
        Ok(Self {
            grid,
            spec,
            eps,
            lambda,
            lap,
            interaction: Arc::new(interaction),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn coupling(&self) -> f64 {
        self.lambda
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.lap
    }

    /// `λ V_ε` at the nodes.
    pub fn interaction(&self) -> &[f64] {
        &self.interaction
    }

    pub fn split(&self) -> SplitOperator<'_> {
        SplitOperator {
            grid: self.grid,
            kinetic: &self.lap,
            interaction: &self.interaction,
            projector: None,
        }
    }
}

impl LinearMap for RelativeHamiltonian {
    fn dim_in(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.split().apply(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }
    fn descriptor(&self) -> String {
        format!("h(eps={}, lambda={})", self.eps, self.lambda)
    }
}

/// Ground state of `h` by shift-invert Lanczos.
pub fn ground_state(h: &RelativeHamiltonian, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    lowest_eigenpair(&h.split(), opts)
}

/// Ground state of `h` restricted to fields odd under `r ↦ −r`.
pub fn odd_ground_state(h: &RelativeHamiltonian, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    let odd = OddProjector::new(h.grid(), 0)?;
    let mut op = h.split();
    op.projector = Some(&odd);
    lowest_eigenpair(&op, opts)
}

#[derive(Clone, Debug, Serialize)]
pub struct CalibrationRow {
    pub epsilon: f64,
    pub lambda: f64,
    pub energy: f64,
    pub residual: f64,
    pub grid_n: usize,
    pub grid_l: f64,
    /// ground-state evaluations spent after the Birman–Schwinger guess
    pub refinements: usize,
}

/// Coupling `λ` with `E(λ) = target`, for `V ≥ 0`.
///
/// The Birman–Schwinger relation `λ β(|E|) = 1` gives the starting point; a
/// safeguarded regula falsi on `E(λ)` (monotone nonincreasing) finishes it.
pub fn calibrate_coupling(
    grid: &Grid,
    spec: &PotentialSpec,
    eps: f64,
    target: f64,
    tol: f64,
) -> Result<CalibrationRow> {
    if spec.sign_class() != SignClass::Nonnegative {
        return Err(invalid("spec", "calibration needs a nonnegative potential"));
    }
    if !(target < 0.0) {
        return Err(invalid("target", "must be negative"));
    }
    let unit = RelativeHamiltonian::new(*grid, spec.clone(), eps, 1.0)?;
    let beta = birman_schwinger_top(unit.laplacian(), unit.interaction(), -target, 1e-12, 7)?;
    if beta == 0.0 {
        return Err(invalid("spec", "potential vanishes on the grid"));
    }
    let opts = GroundStateOptions {
        tol: 1e-11,
        shift: Some(-2.0 * target),
        ..Default::default()
    };
    let mut evals = 0usize;
    let mut energy_at = |lambda: f64| -> Result<(f64, f64)> {
        evals += 1;
        let h = RelativeHamiltonian::new(*grid, spec.clone(), eps, lambda)?;
        let gs = ground_state(&h, &opts)?;
        Ok((gs.energy, gs.residual))
    };
    let row = |lambda: f64, (energy, residual): (f64, f64), refinements: usize| CalibrationRow {
        epsilon: eps,
        lambda,
        energy,
        residual,
        grid_n: grid.points_per_axis(),
        grid_l: grid.half_length(),
        refinements,
    };

    let lambda0 = 1.0 / beta;
    let e0 = energy_at(lambda0)?;
    if (e0.0 - target).abs() <= tol {
        return Ok(row(lambda0, e0, 0));
    }

    // bracket around the guess, widening geometrically up to the Hardy-based cap
    let d = grid.dim_per_particle() as f64;
    let cv = compute_cv(spec)?;
    let cap = if cv > 0.0 { 4.0 * d * d / cv } else { 4.0 * lambda0 } * 64.0;
    let (mut lo, mut hi) = (lambda0, lambda0);
    let (mut e_lo, mut e_hi) = (e0, e0);
    let mut step = 1.02;
    while !(e_lo.0 > target && e_hi.0 < target) {
        if e_lo.0 <= target {
            lo /= step;
            e_lo = energy_at(lo)?;
        }
        if e_hi.0 >= target {
            hi = (hi * step).min(cap);
            e_hi = energy_at(hi)?;
            if hi >= cap && e_hi.0 >= target {
                return Err(Error::BracketFailure {
                    target,
                    low_energy: e_lo.0,
                    high_energy: e_hi.0,
                });
            }
        }
        step *= step;
        if lo < 1e-12 * lambda0 {
            return Err(Error::BracketFailure {
                target,
                low_energy: e_lo.0,
                high_energy: e_hi.0,
            });
        }
    }

    // Illinois regula falsi
    let mut side = 0i32;
    for _ in 0..100 {
        let (f_lo, f_hi) = (e_lo.0 - target, e_hi.0 - target);
        let mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let em = energy_at(mid)?;
        let fm = em.0 - target;
        if fm.abs() <= tol {
            let used = evals;
            return Ok(row(mid, em, used));
        }
        if fm > 0.0 {
            lo = mid;
            e_lo = em;
            if side == 1 {
                e_hi.0 = target + 0.5 * (e_hi.0 - target);
            }
            side = 1;
        } else {
            hi = mid;
            e_hi = em;
            if side == -1 {
                e_lo.0 = target + 0.5 * (e_lo.0 - target);
            }
            side = -1;
        }
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: (e_lo.0 - e_hi.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{dot, Field};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_ground_state() {
        let g = Grid::relative(1, 5.0, 64).unwrap();
        let h = RelativeHamiltonian::new(g, PotentialSpec::gaussian(1.0, 1.0).unwrap(), 1.0, 0.0).unwrap();
        let gs = ground_state(&h, &GroundStateOptions::default()).unwrap();
        assert!(gs.energy.abs() < 1e-8, "{}", gs.energy);
        let v = gs.vector.values();
        assert!(v.iter().all(|x| (x - v[0]).norm() < 1e-4 * v[0].norm()));
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let g = Grid::relative(2, 4.0, 16).unwrap();
        let h = RelativeHamiltonian::new(g, PotentialSpec::coulombic_cutoff(), 0.5, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::random(g, &mut rng);
        let k = Field::random(g, &mut rng);
        let a = dot(k.values(), &h.apply(f.values()));
        let b = dot(&h.apply(k.values()), f.values());
        assert!((a - b).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn gaussian_well_binds_below_variational_bound() {
        // trial e^{-x²/2}: ⟨h⟩ = 2·(1/2) − λ A ∫e^{-2x²}/∫e^{-x²} = 1 − λA/√2
        let g = Grid::relative(1, 12.0, 256).unwrap();
        let spec = PotentialSpec::gaussian(2.0, 1.0).unwrap();
        let lambda = 1.0;
        let bound = 1.0 - lambda * 2.0 / 2f64.sqrt();
        let h = RelativeHamiltonian::new(g, spec, 1.0, lambda).unwrap();
        let gs = ground_state(&h, &GroundStateOptions::default()).unwrap();
        assert!(gs.energy < bound && gs.energy < 0.0, "{} vs {}", gs.energy, bound);
        // residual measured against the spectral radius of h
        let top = 2.0 * g.nyquist().powi(2) + 2.0;
        assert!(gs.residual < 1e-6 * top, "residual {}", gs.residual);
    }

    #[test]
    fn calibration_recovers_known_coupling() {
        let g = Grid::relative(1, 10.0, 256).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let h = RelativeHamiltonian::new(g, spec.clone(), 0.5, 0.7).unwrap();
        let e = ground_state(&h, &GroundStateOptions::default()).unwrap().energy;
        let cal = calibrate_coupling(&g, &spec, 0.5, e, 1e-9).unwrap();
        assert!((cal.lambda - 0.7).abs() < 1e-6, "{}", cal.lambda);
        let shallower = calibrate_coupling(&g, &spec, 0.5, 0.5 * e, 1e-9).unwrap();
        assert!(shallower.lambda < cal.lambda);
    }

    #[test]
    fn energy_concave_nonincreasing_in_coupling() {
        let g = Grid::relative(1, 8.0, 128).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let es: Vec<f64> = (0..6)
            .map(|k| {
                let h = RelativeHamiltonian::new(g, spec.clone(), 1.0, 0.4 * k as f64).unwrap();
                ground_state(&h, &GroundStateOptions::default()).unwrap().energy
            })
            .collect();
        for w in es.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        for w in es.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-8, "{:?}", es);
        }
    }

    #[test]
    fn birman_schwinger_consistency() {
        // λ = 1/β(z) puts the ground state exactly at −z
        let g = Grid::relative(1, 10.0, 256).unwrap();
        let spec = PotentialSpec::smooth_bump(1.0, 1.0).unwrap();
        let unit = RelativeHamiltonian::new(g, spec.clone(), 1.0, 1.0).unwrap();
        for z in [0.05, 0.3] {
            let beta = birman_schwinger_top(unit.laplacian(), unit.interaction(), z, 1e-13, 1).unwrap();
            let h = RelativeHamiltonian::new(g, spec.clone(), 1.0, 1.0 / beta).unwrap();
            let e = ground_state(&h, &GroundStateOptions::default()).unwrap().energy;
            assert!((e + z).abs() < 1e-6 * z.max(1.0), "z={z} e={e}");
        }
    }

    #[test]
    fn matched_grid_scaling_is_exact() {
        let eps = 0.25;
        let g1 = Grid::relative(2, 4.0, 16).unwrap();
        let ge = g1.scaled(eps).unwrap();
        let spec = PotentialSpec::coulombic_cutoff();
        let h1 = RelativeHamiltonian::new(g1, spec.clone(), 1.0, 2.0).unwrap();
        let he = RelativeHamiltonian::new(ge, spec, eps, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Field::random(g1, &mut rng);
        let a = h1.apply(f.values());
        let b: Vec<_> = he.apply(f.values()).into_iter().map(|v| v * eps * eps).collect();
        let diff: Vec<_> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(crate::lattice::norm(&diff) <= 1e-12 * crate::lattice::norm(&a));
    }
}
