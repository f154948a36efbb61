use std::sync::Mutex;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Sector;
use crate::error::{Error, Result};
use crate::lattice::field::random_vector;
use crate::lattice::{
    closure_map, dot, norm, operator_norm, self_adjoint_fn, solve_shifted, LinearMap, NormOptions, SolveOptions,
};
use crate::potentials::SignClass;
use crate::twobody::{lowest_eigenpair, GroundStateOptions, SplitOperator};

/// `δ` values tried, largest first, for `K − (1+δ)W ≥ 0`.
pub const DELTA_SCAN: [f64; 4] = [1.0, 0.5, 0.25, 0.1];

/// Nodes allowed in dense verification.
pub const DENSE_NODE_CAP: usize = 4096;

/// Applies `(H + z)^{-1}` on the projected subspace, remembering the first failure.
pub(super) struct ShiftedInverse<'a, S: Sector + ?Sized> {
    sector: &'a S,
    z: f64,
    tol: f64,
    pre: crate::lattice::FourierMultiplier,
    failure: Mutex<Option<Error>>,
}

impl<'a, S: Sector + ?Sized> ShiftedInverse<'a, S> {
    pub(super) fn new(sector: &'a S, z: f64, tol: f64) -> Result<Self> {
        Ok(Self {
            sector,
            z,
            tol,
            pre: sector.kinetic().resolvent(z)?,
            failure: Mutex::new(None),
        })
    }

    pub(super) fn solve(&self, x: &[Complex64]) -> Vec<Complex64> {
        let h = self_adjoint_fn(x.len(), "H", |v: &[Complex64]| self.sector.apply_projected(v));
        match solve_shifted(
            &h,
            self.z,
            x,
            self.tol,
            Some(&self.pre),
            SolveOptions { max_iters: 20_000 },
        ) {
            Ok(rep) => rep.solution,
            Err(e) => {
                self.failure.lock().unwrap().get_or_insert(e);
                vec![Complex64::default(); x.len()]
            }
        }
    }

    pub(super) fn resolvent0(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.pre.apply(x)
    }

    pub(super) fn finish(self) -> Result<()> {
        match self.failure.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    /// largest scanned `δ` with `K − (1+δ)W ≥ 0` on the subspace, if any
    pub delta: Option<f64>,
    /// `(δ, lowest Ritz value)` for every `δ` tried
    pub ritz: Vec<(f64, f64)>,
}

/// Measures `δ` by the smallest Ritz value of `K − (1+δ)W` over [`DELTA_SCAN`].
pub fn verify_delta<S: Sector + ?Sized>(sector: &S) -> Result<DeltaReport> {
    let mut ritz = Vec::new();
    for &delta in &DELTA_SCAN {
        let scaled: Vec<f64> = sector.interaction().iter().map(|w| (1.0 + delta) * w).collect();
        let op = SplitOperator {
            grid: *sector.grid(),
            kinetic: sector.kinetic(),
            interaction: &scaled,
            projector: Some(sector.projector()),
        };
        let e = lowest_eigenpair(&op, &GroundStateOptions::default())?.energy;
        ritz.push((delta, e));
        if e >= -1e-8 {
            return Ok(DeltaReport {
                delta: Some(delta),
                ritz,
            });
        }
    }
    Ok(DeltaReport { delta: None, ritz })
}

#[derive(Clone, Debug, Serialize)]
pub struct SNormReport {
    pub norm: f64,
    /// `2` for `V ≤ 0`, `1 + 1/δ` for `V ≥ 0` with verified `δ`, else none
    pub bound: Option<f64>,
    pub delta: Option<f64>,
    pub class: &'static str,
    pub hypothesis: Option<DeltaReport>,
    pub converged: bool,
}

impl SNormReport {
    pub fn holds(&self) -> Option<bool> {
        self.bound.map(|b| self.norm <= b * (1.0 + 1e-9))
    }
}

/// `‖S(z)‖` with `S(z) = 1 + B (H+z)^{-1} A*`, and the applicable bound.
pub fn s_norm_check<S: Sector + ?Sized>(sector: &S, z: f64, tol: f64) -> Result<SNormReport> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveShift(z));
    }
    let class = sector.sign_class();
    let hypothesis = match class {
        SignClass::Nonpositive => None,
        _ => Some(verify_delta(sector)?),
    };
    let delta = hypothesis.as_ref().and_then(|h| h.delta);
    let bound = match class {
        SignClass::Nonpositive => Some(2.0),
        SignClass::Nonnegative => delta.map(|d| 1.0 + 1.0 / d),
        SignClass::Mixed => None,
    };
    let inv = ShiftedInverse::new(sector, z, (tol * 1e-2).min(1e-8))?;
    let dim = sector.grid().len();
    let est = {
        let s = closure_map(
            dim,
            "S(z)",
            |y: &[Complex64]| {
                let mut out = y.to_vec();
                let t = inv.solve(&sector.factor_a_adjoint(y));
                out.iter_mut().zip(sector.factor_b(&t)).for_each(|(a, b)| *a += b);
                out
            },
            |y: &[Complex64]| {
                let mut out = y.to_vec();
                let t = inv.solve(&sector.factor_b_adjoint(y));
                out.iter_mut().zip(sector.factor_a(&t)).for_each(|(a, b)| *a += b);
                out
            },
        );
        operator_norm(&s, NormOptions::default().with_tol(tol))
    };
    inv.finish()?;
    Ok(SNormReport {
        norm: est.value,
        bound,
        delta,
        class: class.as_str(),
        hypothesis,
        converged: est.converged,
    })
}

/// `|⟨φ, Wψ⟩ − ⟨Aφ, Bψ⟩|` relative to `‖W‖_∞ ‖φ‖ ‖ψ‖` on random projected fields.
pub fn ab_identity_residual<S: Sector + ?Sized>(sector: &S, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = sector.grid().len();
    let p = sector.projector();
    let phi = p.apply(&random_vector(dim, &mut rng));
    let psi = p.apply(&random_vector(dim, &mut rng));
    let wpsi: Vec<Complex64> = psi.iter().zip(sector.interaction()).map(|(a, w)| a * w).collect();
    let lhs = dot(&phi, &wpsi);
    let rhs = dot(&sector.factor_a(&phi), &sector.factor_b(&psi));
    let wmax = sector
        .interaction()
        .iter()
        .fold(0.0f64, |m, w| m.max(w.abs()))
        .max(1e-300);
    (lhs - rhs).norm() / (wmax * norm(&phi) * norm(&psi))
}

#[derive(Clone, Debug, Serialize)]
pub struct KkReport {
    /// `‖LHS − RHS‖ / ‖LHS‖` in the operator norm of the subspace
    pub residual: f64,
    pub dimension: usize,
    pub inner_tol: f64,
}

fn scatter(col: &[(usize, f64)], dim: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); dim];
    for &(i, c) in col {
        v[i] += c;
    }
    v
}

fn gather(col: &[(usize, f64)], v: &[Complex64]) -> f64 {
    col.iter().map(|&(i, c)| c * v[i].re).sum()
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Dense check of `(H+z)^{-1} = R₀ + (A R₀)* S(z) B R₀` on the projected subspace.
///
/// The left side is a Cholesky inverse of the assembled `H + z`; the right side
/// is built column by column from the factorization with iterative inner solves.
pub fn kk_identity_residual<S: Sector + ?Sized>(sector: &S, z: f64) -> Result<KkReport> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveShift(z));
    }
    sector.grid().check_cap(DENSE_NODE_CAP)?;
    let dim = sector.grid().len();
    let basis = sector.basis();
    let k = basis.len();
    let columns: Vec<Vec<Complex64>> = basis.iter().map(|c| scatter(c, dim)).collect();

    let mut shifted = DMatrix::<f64>::zeros(k, k);
    for (j, e) in columns.iter().enumerate() {
        let he = sector.apply_projected(e);
        for (i, b) in basis.iter().enumerate() {
            shifted[(i, j)] = gather(b, &he);
        }
        shifted[(j, j)] += z;
    }
    let shifted = (&shifted + shifted.transpose()) * 0.5;
    let lhs = match shifted.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            let low = SymmetricEigen::new(shifted).eigenvalues.min();
            return Err(Error::Indefinite { curvature: low });
        }
    };

    let inner_tol = 1e-12;
    let inv = ShiftedInverse::new(sector, z, inner_tol)?;
    let mut rhs = DMatrix::<f64>::zeros(k, k);
    for (j, e) in columns.iter().enumerate() {
        let u = inv.resolvent0(e);
        let y = sector.factor_b(&u);
        let t = inv.solve(&sector.factor_a_adjoint(&y));
        let mut sy = y;
        sy.iter_mut().zip(sector.factor_b(&t)).for_each(|(a, b)| *a += b);
        let q = inv.resolvent0(&sector.factor_a_adjoint(&sy));
        let col: Vec<Complex64> = u.iter().zip(&q).map(|(a, b)| a + b).collect();
        for (i, b) in basis.iter().enumerate() {
            rhs[(i, j)] = gather(b, &col);
        }
    }
    inv.finish()?;
    let residual = spectral_norm(&(&lhs - &rhs)) / spectral_norm(&lhs);
    Ok(KkReport {
        residual,
        dimension: k,
        inner_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;
    use crate::nbody::{FermionicHamiltonian, RelativeOddSector};
    use crate::potentials::PotentialSpec;

    fn gaussian() -> PotentialSpec {
        PotentialSpec::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn free_identity_is_exact() {
        let g = Grid::new(1, 2, 4.0, 16, 0.5).unwrap();
        let h = FermionicHamiltonian::new(&g, &gaussian(), 0.5, 0.0).unwrap();
        assert!(kk_identity_residual(&h, 1.0).unwrap().residual <= 1e-12);
    }

    #[test]
    fn identity_holds_for_two_fermions() {
        let g = Grid::new(1, 2, 4.0, 16, 0.5).unwrap();
        let h = FermionicHamiltonian::new(&g, &gaussian(), 0.5, 2.0).unwrap();
        let rep = kk_identity_residual(&h, 1.0).unwrap();
        assert_eq!(rep.dimension, 120);
        assert!(rep.residual <= 1e-8, "{}", rep.residual);
    }

    #[test]
    fn ab_factorization() {
        let g = Grid::new(1, 3, 3.0, 8, 0.5).unwrap();
        let h = FermionicHamiltonian::new(&g, &gaussian().scaled_by(-1.0), 0.5, 1.5).unwrap();
        assert!(ab_identity_residual(&h, 9) < 1e-12);
    }

    #[test]
    fn s_norm_bounds() {
        let g = Grid::relative(1, 8.0, 128).unwrap();
        let rep = s_norm_check(
            &RelativeOddSector::new(&g, &gaussian().scaled_by(-1.0), 0.3, 3.0).unwrap(),
            1.0,
            1e-7,
        )
        .unwrap();
        assert_eq!(rep.bound, Some(2.0));
        assert!(rep.holds().unwrap(), "{}", rep.norm);
        let rep = s_norm_check(&RelativeOddSector::new(&g, &gaussian(), 0.3, 3.0).unwrap(), 1.0, 1e-7).unwrap();
        let delta = rep.delta.expect("coupling below the threshold");
        assert_eq!(rep.bound, Some(1.0 + 1.0 / delta));
        assert!(rep.holds().unwrap(), "{}", rep.norm);
        let rep = s_norm_check(&RelativeOddSector::new(&g, &gaussian(), 0.3, 1e-9).unwrap(), 1.0, 1e-9).unwrap();
        assert!((rep.norm - 1.0).abs() < 1e-6);
    }
}
