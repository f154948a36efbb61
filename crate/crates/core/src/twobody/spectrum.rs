use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    lanczos_extreme, operator_norm, self_adjoint_fn, solve_shifted, Extreme, Field, FnMap, Grid, LanczosOptions,
    Laplacian, LinearMap, NormOptions, SolveOptions,
};

/// A Schrödinger-type map `K − W` with Fourier-diagonal `K` and multiplicative `W`.
pub struct SplitOperator<'a> {
    pub grid: Grid,
    pub kinetic: &'a Laplacian,
    /// `W` at the nodes
    pub interaction: &'a [f64],
    /// optional symmetry projector commuting with `K − W`
    pub projector: Option<&'a dyn LinearMap>,
}

impl SplitOperator<'_> {
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.kinetic.apply(x);
        for ((yi, xi), w) in y.iter_mut().zip(x).zip(self.interaction) {
            *yi -= xi * w;
        }
        y
    }

    fn interaction_plus_sup(&self) -> f64 {
        self.interaction.iter().fold(0.0, |m, &w| m.max(w))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GroundStateOptions {
    /// tolerance on Ritz-value increments
    pub tol: f64,
    /// preferred spectral shift `σ`; validated and doubled until `K − W + σ > 0`
    pub shift: Option<f64>,
    pub seed: u64,
    pub max_iters: usize,
    /// Ritz residual must also fall below `residual_factor · tol` (relative)
    pub residual_factor: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            shift: None,
            seed: 0x9a11,
            max_iters: 300,
            residual_factor: 1e2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateResult {
    pub energy: f64,
    #[serde(skip)]
    pub vector: Field,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
}

/// Top eigenvalue of `√W⁺ (K + z)^{-1} √W⁺` (zero mode dropped when `z = 0`).
pub fn birman_schwinger_top(kinetic: &Laplacian, interaction: &[f64], z: f64, tol: f64, seed: u64) -> Result<f64> {
    let root: Arc<Vec<f64>> = Arc::new(interaction.iter().map(|w| w.max(0.0).sqrt()).collect());
    if root.iter().all(|&r| r == 0.0) {
        return Ok(0.0);
    }
    let resolvent = if z == 0.0 {
        kinetic.resolvent_without_zero_mode(0.0)?
    } else {
        kinetic.resolvent(z)?
    };
    let map = FnMap::self_adjoint(root.len(), "v R0 v", move |x: &[Complex64]| {
        let vx: Vec<Complex64> = x.iter().zip(root.iter()).map(|(a, r)| a * r).collect();
        let mut y = resolvent.apply(&vx);
        y.iter_mut().zip(root.iter()).for_each(|(a, r)| *a *= r);
        y
    });
    let est = operator_norm(
        &map,
        NormOptions {
            tol,
            max_iters: 5000,
            restarts: 1,
            seed,
            positive_semidefinite: true,
        },
    );
    Ok(est.value)
}

/// Lowest eigenpair by shift-invert Lanczos on `(K − W + σ)^{-1}`.
///
/// `σ` starts from the hint (or the guaranteed `sup W⁺`-based value) and is
/// doubled until the Birman–Schwinger test certifies `K − W + σ > 0`.
pub fn lowest_eigenpair(op: &SplitOperator, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    let sup = op.interaction_plus_sup();
    let safe = sup * (1.0 + 1e-9) + 1e-3;
    let mut sigma = match opts.shift {
        Some(s) if s > 0.0 => s.min(safe),
        _ => safe,
    };
    while sigma < safe {
        let beta = birman_schwinger_top(op.kinetic, op.interaction, sigma, 1e-9, opts.seed)?;
        if beta < 1.0 - 1e-6 {
            break;
        }
        sigma = (2.0 * sigma).min(safe);
    }

    let n = op.grid.len();
    let pre = op.kinetic.resolvent(sigma)?;
    // roundoff floor of the shifted solve is about eps·cond
    let top = op.kinetic.symbol().iter().fold(0.0f64, |m, &v| m.max(v))
        + op.interaction.iter().fold(0.0f64, |m, &w| m.max(w.abs()));
    let cond = (top + sigma) / sigma;
    let inner_tol = (opts.tol * 1e-3).max(200.0 * f64::EPSILON * cond).min(1e-6);
    let failure: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let shifted = self_adjoint_fn(n, "h", |v: &[Complex64]| op.apply(v));
    let inverse = self_adjoint_fn(n, "(h+σ)^-1", |x: &[Complex64]| {
        match solve_shifted(
            &shifted,
            sigma,
            x,
            inner_tol,
            Some(&pre),
            SolveOptions { max_iters: 20_000 },
        ) {
            Ok(rep) => rep.solution,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                vec![Complex64::default(); x.len()]
            }
        }
    });
    let pair = lanczos_extreme(
        &inverse,
        Extreme::Largest,
        op.projector,
        LanczosOptions {
            max_iters: opts.max_iters,
            tol: opts.tol,
            seed: opts.seed,
            restarts: 3,
            residual_factor: opts.residual_factor,
        },
    )?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    if !(pair.value > 0.0) {
        return Err(Error::LanczosBreakdown { restarts: 3 });
    }
    let energy = 1.0 / pair.value - sigma;
    let mut r = op.apply(&pair.vector);
    r.iter_mut().zip(&pair.vector).for_each(|(a, v)| *a -= v * energy);
    let residual = crate::lattice::norm(&r) / crate::lattice::norm(&pair.vector);
    Ok(GroundStateResult {
        energy,
        vector: Field::from_values(op.grid, pair.vector),
        residual,
        iterations: pair.iterations,
        shift: sigma,
    })
}
