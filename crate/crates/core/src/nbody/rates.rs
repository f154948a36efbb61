use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::kk::{s_norm_check, ShiftedInverse};
use super::{FermionicHamiltonian, RelativeOddSector, Sector};
use crate::error::{invalid, Error, Result};
use crate::lattice::{closure_map, operator_norm, Grid, NormOptions};
use crate::oddsector::GridPolicy;
use crate::potentials::{coupling_at, CouplingSchedule, PotentialSpec, SignClass};
use crate::twobody::{lowest_eigenpair, GroundStateOptions, SplitOperator};

#[derive(Clone, Debug, Serialize)]
pub struct ResolventDifferenceResult {
    pub epsilon: f64,
    pub lambda: f64,
    pub z: f64,
    pub norm: f64,
    pub converged: bool,
    pub tol: f64,
    pub inner_tol: f64,
    pub grid_n: usize,
    pub grid_l: f64,
}

/// `‖(H+z)^{-1} − (H₀+z)^{-1}‖` on the projected subspace.
///
/// With `D = (H+z)^{-1} W R₀`, sign-definite `V` makes `±D` positive
/// semidefinite and it is iterated directly; mixed signs go through `D*D`.
pub fn resolvent_difference_norm<S: Sector + ?Sized>(
    sector: &S,
    z: f64,
    tol: f64,
) -> Result<ResolventDifferenceResult> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveShift(z));
    }
    let grid = sector.grid();
    let inner_tol = tol / 10.0;
    let mut out = ResolventDifferenceResult {
        epsilon: sector.epsilon(),
        lambda: sector.coupling(),
        z,
        norm: 0.0,
        converged: true,
        tol,
        inner_tol,
        grid_n: grid.points_per_axis(),
        grid_l: grid.half_length(),
    };
    if sector.interaction().iter().all(|&w| w == 0.0) {
        return Ok(out);
    }
    let sign = match sector.sign_class() {
        SignClass::Nonnegative => Some(1.0),
        SignClass::Nonpositive => Some(-1.0),
        SignClass::Mixed => None,
    };
    let inv = ShiftedInverse::new(sector, z, inner_tol)?;
    let p = sector.projector();
    let d = |x: &[Complex64]| {
        let mut u = inv.resolvent0(&p.apply(x));
        u.iter_mut()
            .zip(sector.interaction())
            .for_each(|(a, w)| *a *= w * sign.unwrap_or(1.0));
        inv.solve(&u)
    };
    let map = closure_map(grid.len(), "D(z)", d, d);
    let opts = NormOptions::default().with_tol(tol);
    let est = operator_norm(&map, if sign.is_some() { opts.psd() } else { opts });
    inv.finish()?;
    out.norm = est.value;
    out.converged = est.converged;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct RateRow {
    pub epsilon: f64,
    pub lambda: f64,
    pub z: f64,
    pub norm: f64,
    pub delta_used: Option<f64>,
    pub s_norm: Option<f64>,
    pub bound: Option<f64>,
    pub resolved: bool,
    pub converged: bool,
    pub grid_n: usize,
    pub grid_l: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSweepResult {
    pub n_particles: usize,
    pub dim: usize,
    pub schedule: String,
    pub rows: Vec<RateRow>,
}

impl RateSweepResult {
    pub fn resolved(&self) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.resolved && r.norm > 0.0)
            .map(|r| (r.epsilon, r.norm))
            .unzip()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RateOptions {
    pub tol: f64,
    pub with_s_norm: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            with_s_norm: false,
        }
    }
}

fn rate_row<S: Sector + ?Sized>(sector: &S, z: f64, resolved: bool, opts: &RateOptions) -> Result<RateRow> {
    let diff = resolvent_difference_norm(sector, z, opts.tol)?;
    let (delta_used, s_norm, bound) = if opts.with_s_norm {
        let rep = s_norm_check(sector, z, opts.tol)?;
        (rep.delta, Some(rep.norm), rep.bound)
    } else {
        (None, None, None)
    };
    Ok(RateRow {
        epsilon: diff.epsilon,
        lambda: diff.lambda,
        z,
        norm: diff.norm,
        delta_used,
        s_norm,
        bound,
        resolved,
        converged: diff.converged,
        grid_n: diff.grid_n,
        grid_l: diff.grid_l,
    })
}

/// Resolvent-difference norms along an ε-sweep with `λ_ε` from `schedule`.
///
/// Two particles use the relative odd sector; more particles the full product grid.
#[allow(clippy::too_many_arguments)]
pub fn rate_sweep(
    n_particles: usize,
    d: usize,
    spec: &PotentialSpec,
    schedule: &CouplingSchedule,
    z: f64,
    eps: &[f64],
    policy: &GridPolicy,
    opts: &RateOptions,
) -> Result<RateSweepResult> {
    if n_particles < 2 {
        return Err(invalid("n_particles", "need at least two particles"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps", "sweep must be strictly decreasing"));
    }
    let rows: Result<Vec<RateRow>> = eps
        .par_iter()
        .map(|&e| {
            let lambda = coupling_at(schedule, e)?;
            if n_particles == 2 {
                let (grid, resolved) = policy.grid_for(d, 1, spec.width(), e)?;
                rate_row(&RelativeOddSector::new(&grid, spec, e, lambda)?, z, resolved, opts)
            } else {
                let (grid, resolved) = policy.grid_for(d, n_particles, spec.width(), e)?;
                rate_row(&FermionicHamiltonian::new(&grid, spec, e, lambda)?, z, resolved, opts)
            }
        })
        .collect();
    Ok(RateSweepResult {
        n_particles,
        dim: d,
        schedule: schedule.name().to_string(),
        rows: rows?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThomasRow {
    pub epsilon: f64,
    pub half_length: f64,
    pub distinguishable: f64,
    pub fermionic: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThomasReport {
    pub n_particles: usize,
    pub dim: usize,
    pub lambda: f64,
    pub rows: Vec<ThomasRow>,
    /// `max |ε² E(ε) − ε₀² E(ε₀)| / |ε₀² E(ε₀)|` over both sectors
    pub scaling_error: f64,
    pub distinguishable_binds: bool,
    pub fermionic_nonnegative: bool,
}

fn ground(op: &SplitOperator, eps: f64, unit_shift: f64) -> Result<f64> {
    // a shift that scales with ε⁻² keeps the solver path identical across rows
    let opts = GroundStateOptions {
        tol: 1e-12,
        shift: Some(unit_shift / (eps * eps)),
        residual_factor: 1e4,
        ..Default::default()
    };
    Ok(lowest_eigenpair(op, &opts)?.energy)
}

/// Ground states on matched grids (box `ε·L`) for distinguishable particles and fermions.
///
/// Two particles reduce to the relative coordinate at zero total momentum.
pub fn thomas_scaling_check(
    n_particles: usize,
    spec: &PotentialSpec,
    lambda: f64,
    eps: &[f64],
    unit_grid: &Grid,
) -> Result<ThomasReport> {
    if eps.is_empty() {
        return Err(invalid("eps", "need at least one ε"));
    }
    let expected_blocks = if n_particles == 2 { 1 } else { n_particles };
    if unit_grid.num_particles() != expected_blocks {
        return Err(Error::InvalidGrid(format!(
            "{n_particles} particles need a grid with {expected_blocks} blocks"
        )));
    }
    let mut rows = Vec::new();
    for &e in eps {
        let grid = unit_grid.scaled(e)?;
        let (dist, ferm) = if n_particles == 2 {
            let s = RelativeOddSector::new(&grid, spec, e, lambda)?;
            let shift = unit_shift(s.interaction(), e);
            (ground(&s.distinguishable(), e, shift)?, ground(&s.split(), e, shift)?)
        } else {
            let h = FermionicHamiltonian::new(&grid, spec, e, lambda)?;
            let shift = unit_shift(h.interaction(), e);
            (ground(&h.distinguishable(), e, shift)?, ground(&h.split(), e, shift)?)
        };
        rows.push(ThomasRow {
            epsilon: e,
            half_length: grid.half_length(),
            distinguishable: dist,
            fermionic: ferm,
        });
    }
    let first = &rows[0];
    let e0 = first.epsilon * first.epsilon;
    let (d0, f0) = (first.distinguishable * e0, first.fermionic * e0);
    let scaling_error = rows
        .iter()
        .map(|r| {
            let e2 = r.epsilon * r.epsilon;
            let a = (r.distinguishable * e2 - d0).abs() / d0.abs().max(1e-300);
            let b = (r.fermionic * e2 - f0).abs() / f0.abs().max(1e-300);
            a.max(b)
        })
        .fold(0.0, f64::max);
    Ok(ThomasReport {
        n_particles,
        dim: unit_grid.dim_per_particle(),
        lambda,
        distinguishable_binds: rows.iter().all(|r| r.distinguishable < 0.0),
        fermionic_nonnegative: rows.iter().all(|r| r.fermionic >= -1e-8),
        rows,
        scaling_error,
    })
}

fn unit_shift(interaction: &[f64], eps: f64) -> f64 {
    let sup = interaction.iter().fold(0.0f64, |m, &w| m.max(w));
    eps * eps * sup * (1.0 + 1e-9) + 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nbody::FermionicHamiltonian;

    fn gaussian() -> PotentialSpec {
        PotentialSpec::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn free_difference_vanishes() {
        let g = Grid::relative(1, 8.0, 64).unwrap();
        let s = RelativeOddSector::new(&g, &gaussian(), 0.5, 0.0).unwrap();
        assert_eq!(resolvent_difference_norm(&s, 1.0, 1e-8).unwrap().norm, 0.0);
    }

    #[test]
    fn fast_path_matches_full_two_particle_grid() {
        let (l, n) = (6.0, 32);
        let spec = gaussian();
        let full = FermionicHamiltonian::new(&Grid::new(1, 2, l, n, 0.5).unwrap(), &spec, 0.5, 2.0).unwrap();
        let rel = RelativeOddSector::new(&Grid::new(1, 1, l, n, 0.0).unwrap(), &spec, 0.5, 2.0).unwrap();
        let a = resolvent_difference_norm(&full, 1.0, 1e-9).unwrap().norm;
        let b = resolvent_difference_norm(&rel, 1.0, 1e-9).unwrap().norm;
        // zero total momentum is an invariant sector, so it bounds the full value below
        assert!(b <= a * (1.0 + 1e-6), "{b} vs {a}");
        assert!(a <= b * 1.02, "{b} vs {a}");
    }

    #[test]
    fn repulsive_and_attractive_are_bounded_by_two_over_z() {
        let g = Grid::relative(1, 8.0, 128).unwrap();
        for spec in [gaussian(), gaussian().scaled_by(-1.0)] {
            let s = RelativeOddSector::new(&g, &spec, 0.4, 5.0).unwrap();
            let r = resolvent_difference_norm(&s, 1.0, 1e-8).unwrap();
            assert!(r.norm > 0.0 && r.norm <= 2.0);
        }
    }

    #[test]
    fn matched_grids_scale_exactly() {
        let unit = Grid::relative(1, 6.0, 64).unwrap();
        let rep = thomas_scaling_check(2, &gaussian(), 3.0, &[1.0, 0.5, 0.25], &unit).unwrap();
        assert!(rep.scaling_error < 1e-10, "{}", rep.scaling_error);
        assert!(rep.distinguishable_binds);
        let free = thomas_scaling_check(2, &gaussian(), 0.0, &[1.0, 0.5], &unit).unwrap();
        assert!(free.rows.iter().all(|r| r.distinguishable.abs() < 1e-8));
    }
}
