//! Odd-sector norms `‖v_ε (−Δ+z)^{-1}‖_odd`, their ε-sweeps and the truncation split.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::{
    build_laplacian, operator_norm, FourierMultiplier, Grid, LinearMap, NormEstimate, NormOptions, OddProjector,
    DEFAULT_NODE_CAP,
};
use crate::potentials::PotentialSpec;

/// `v_ε(x) = ε^{-d/2} |V(x/ε)|^{1/2}` at the nodes, optionally cut to `|x| ≤ εk` (or outside it).
pub fn sample_root_potential(grid: &Grid, spec: &PotentialSpec, eps: f64, cut: Cut) -> Vec<f64> {
    let d = grid.dim_per_particle() as f64;
    let pref = eps.powf(-d / 2.0);
    let mut x = vec![0.0; grid.axes()];
    (0..grid.len())
        .map(|i| {
            grid.position(i, &mut x);
            let t = x.iter().map(|v| v * v).sum::<f64>().sqrt() / eps;
            let keep = match cut {
                Cut::None => true,
                Cut::Inside(k) => t <= k,
                Cut::Outside(k) => t > k,
            };
            if !keep {
                return 0.0;
            }
            let v = spec
                .radial(t)
                .unwrap_or(spec.v_cap * spec.scale.signum())
                .abs()
                .min(spec.v_cap);
            pref * v.sqrt()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cut {
    None,
    /// keep `|x/ε| ≤ k`
    Inside(f64),
    /// keep `|x/ε| > k`
    Outside(f64),
}

/// `f ↦ v_ε R_0(z) P_odd f` (or without the projector).
pub struct OddSectorOperator {
    weights: Arc<Vec<f64>>,
    resolvent: FourierMultiplier,
    odd: Option<OddProjector>,
}

impl OddSectorOperator {
    pub fn new(grid: &Grid, weights: Vec<f64>, z: f64, odd: bool) -> Result<Self> {
        if grid.num_particles() != 1 {
            return Err(invalid("grid", "odd-sector operators act on a single block"));
        }
        let resolvent = build_laplacian(grid, 1.0).resolvent(z)?;
        let odd = if odd { Some(OddProjector::new(grid, 0)?) } else { None };
        Ok(Self {
            weights: Arc::new(weights),
            resolvent,
            odd,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

impl LinearMap for OddSectorOperator {
    fn dim_in(&self) -> usize {
        self.weights.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let px = match &self.odd {
            Some(p) => p.apply(x),
            None => x.to_vec(),
        };
        let mut y = self.resolvent.apply(&px);
        y.iter_mut().zip(self.weights.iter()).for_each(|(a, w)| *a *= w);
        y
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let vx: Vec<Complex64> = x.iter().zip(self.weights.iter()).map(|(a, w)| a * w).collect();
        let y = self.resolvent.apply(&vx);
        match &self.odd {
            Some(p) => p.apply(&y),
            None => y,
        }
    }
    fn descriptor(&self) -> String {
        if self.odd.is_some() {
            "v R0 P_odd".into()
        } else {
            "v R0".into()
        }
    }
}

fn norm_of(grid: &Grid, weights: Vec<f64>, z: f64, odd: bool, tol: f64, seed: u64) -> Result<NormEstimate> {
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(NormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
            vector: Vec::new(),
        });
    }
    let op = OddSectorOperator::new(grid, weights, z, odd)?;
    Ok(operator_norm(&op, NormOptions::default().with_tol(tol).with_seed(seed)))
}

/// `‖v_ε (−Δ+z)^{-1}‖` on odd functions.
pub fn odd_norm(spec: &PotentialSpec, eps: f64, z: f64, grid: &Grid, tol: f64) -> Result<NormEstimate> {
    check_args(eps, z)?;
    norm_of(
        grid,
        sample_root_potential(grid, spec, eps, Cut::None),
        z,
        true,
        tol,
        0x0dd,
    )
}

/// `‖v_ε (−Δ+z)^{-1}‖` on the whole space.
pub fn full_norm(spec: &PotentialSpec, eps: f64, z: f64, grid: &Grid, tol: f64) -> Result<NormEstimate> {
    check_args(eps, z)?;
    norm_of(
        grid,
        sample_root_potential(grid, spec, eps, Cut::None),
        z,
        false,
        tol,
        0x0dd,
    )
}

/// `(‖(vχ_k)_ε R_0‖_odd, ‖(v − vχ_k)_ε R_0‖)`.
pub fn truncated_split_norms(
    spec: &PotentialSpec,
    eps: f64,
    z: f64,
    k: f64,
    grid: &Grid,
    tol: f64,
) -> Result<(f64, f64)> {
    check_args(eps, z)?;
    if !(k > 0.0) {
        return Err(invalid("k", "must be positive"));
    }
    let near = norm_of(
        grid,
        sample_root_potential(grid, spec, eps, Cut::Inside(k)),
        z,
        true,
        tol,
        0x4ea,
    )?;
    let far = norm_of(
        grid,
        sample_root_potential(grid, spec, eps, Cut::Outside(k)),
        z,
        false,
        tol,
        0xfa5,
    )?;
    Ok((near.value, far.value))
}

fn check_args(eps: f64, z: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !(z > 0.0) {
        return Err(crate::Error::NonPositiveShift(z));
    }
    Ok(())
}

/// How the grid follows ε along a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum GridPolicy {
    /// Box fixed; `n` the smallest power of two with `ε·width/h ≥ nodes_per_width`,
    /// capped so the grid stays below `node_cap` nodes.
    FixedBox {
        half_length: f64,
        nodes_per_width: f64,
        min_points: usize,
        node_cap: usize,
    },
    /// Box `ε·unit_half_length` with fixed `n`; the discrete operator is then the
    /// unit-scale one at shift `ε²z`, up to the factor `ε^{2−d/2}`.
    ScaledBox { unit_half_length: f64, points: usize },
}

impl GridPolicy {
    pub fn fixed(half_length: f64) -> Self {
        GridPolicy::FixedBox {
            half_length,
            nodes_per_width: 8.0,
            min_points: 64,
            node_cap: DEFAULT_NODE_CAP,
        }
    }

    pub fn scaled(unit_half_length: f64, points: usize) -> Self {
        GridPolicy::ScaledBox {
            unit_half_length,
            points,
        }
    }

    /// Grid for one ε and whether the scaled potential is resolved on it.
    pub fn grid_for(&self, d: usize, m: usize, width: f64, eps: f64) -> Result<(Grid, bool)> {
        match *self {
            GridPolicy::FixedBox {
                half_length,
                nodes_per_width,
                min_points,
                node_cap,
            } => {
                let want = (nodes_per_width * 2.0 * half_length / (eps * width)).ceil() as usize;
                let mut n = want.max(min_points).max(2).next_power_of_two();
                let axes = (d * m) as u32;
                let max_n = (node_cap as f64).powf(1.0 / axes as f64).floor() as usize;
                let max_pow2 = if max_n.is_power_of_two() {
                    max_n
                } else {
                    max_n.next_power_of_two() / 2
                };
                let resolved = n <= max_pow2;
                n = n.min(max_pow2);
                Ok((Grid::new(d, m, half_length, n, 0.5)?, resolved))
            }
            GridPolicy::ScaledBox {
                unit_half_length,
                points,
            } => {
                let g = Grid::new(d, m, unit_half_length * eps, points, 0.5)?;
                Ok((g, eps * width / g.spacing() >= 8.0 - 1e-9))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormSweepRow {
    pub epsilon: f64,
    pub z: f64,
    pub norm: f64,
    pub near_k: Option<f64>,
    pub far_k: Option<f64>,
    pub grid_n: usize,
    pub grid_l: f64,
    pub resolved: bool,
    pub converged: bool,
    /// relative change under `n → 2n`, when requested and affordable
    pub refinement_change: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormSweepResult {
    pub dim: usize,
    pub truncation_k: Option<f64>,
    pub rows: Vec<NormSweepRow>,
}

impl NormSweepResult {
    pub fn resolved(&self) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.resolved && r.norm > 0.0)
            .map(|r| (r.epsilon, r.norm))
            .unzip()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub tol: f64,
    pub truncation_k: Option<f64>,
    pub refinement_check: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            truncation_k: None,
            refinement_check: false,
        }
    }
}

/// Odd-sector norm for each ε; rows are independent and run on the rayon pool.
pub fn sweep_odd_norm(
    spec: &PotentialSpec,
    d: usize,
    eps: &[f64],
    z: f64,
    policy: &GridPolicy,
    opts: &SweepOptions,
) -> Result<NormSweepResult> {
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps", "sweep must be strictly decreasing"));
    }
    let rows: Result<Vec<NormSweepRow>> = eps
        .par_iter()
        .map(|&e| {
            let (grid, resolved) = policy.grid_for(d, 1, spec.width(), e)?;
            let est = odd_norm(spec, e, z, &grid, opts.tol)?;
            let (near_k, far_k) = match opts.truncation_k {
                Some(k) => {
                    let (a, b) = truncated_split_norms(spec, e, z, k, &grid, opts.tol)?;
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            let fine = grid.with_points(2 * grid.points_per_axis())?;
            let refinement_change = if opts.refinement_check && fine.check_cap(DEFAULT_NODE_CAP).is_ok() {
                let v = odd_norm(spec, e, z, &fine, opts.tol)?.value;
                Some(if v > 0.0 { (v - est.value).abs() / v } else { 0.0 })
            } else {
                None
            };
            Ok(NormSweepRow {
                epsilon: e,
                z,
                norm: est.value,
                near_k,
                far_k,
                grid_n: grid.points_per_axis(),
                grid_l: grid.half_length(),
                resolved,
                converged: est.converged,
                refinement_change,
            })
        })
        .collect();
    Ok(NormSweepResult {
        dim: d,
        truncation_k: opts.truncation_k,
        rows: rows?,
    })
}

/// Least-squares residual in the log domain of `log y ≈ log C + shape`, `C` free.
pub fn log_residual(y: &[f64], shape: &[f64]) -> f64 {
    let n = y.len() as f64;
    let offset = y.iter().zip(shape).map(|(v, s)| v.ln() - s).sum::<f64>() / n;
    y.iter().zip(shape).map(|(v, s)| (v.ln() - s - offset).powi(2)).sum()
}

/// `(p, residual)` of `log y − extra ≈ log C + p log ε` by least squares.
fn slope_fit(eps: &[f64], y: &[f64], extra: &[f64]) -> (f64, f64) {
    let n = eps.len() as f64;
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let t: Vec<f64> = y.iter().zip(extra).map(|(v, c)| v.ln() - c).collect();
    let (mx, mt) = (x.iter().sum::<f64>() / n, t.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxt: f64 = x.iter().zip(&t).map(|(a, b)| (a - mx) * (b - mt)).sum();
    let p = sxt / sxx;
    let res = x.iter().zip(&t).map(|(a, b)| (b - mt - p * (a - mx)).powi(2)).sum();
    (p, res)
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelComparison {
    /// exponent of the fit `norm² = C ε^p |log ε|`
    pub log_model_exponent: f64,
    pub log_model_residual: f64,
    /// `(s, residual of norm² = C ε^{2s})` for the scanned `s`
    pub pure_powers: Vec<(f64, f64)>,
    pub best_pure_s: f64,
    pub best_pure_residual: f64,
    pub log_model_wins: bool,
}

/// Compares `C ε^p |log ε|` (C, p fitted) against every pure power `C ε^{2s}`,
/// `s ∈ [0, 1)` in steps of `ds`.
pub fn compare_log_model(eps: &[f64], norm_sq: &[f64], ds: f64) -> Result<ModelComparison> {
    if eps.len() < 3 || eps.len() != norm_sq.len() {
        return Err(crate::Error::InsufficientData {
            available: eps.len().min(norm_sq.len()),
            required: 3,
        });
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) || norm_sq.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid("data", "needs ε ∈ (0,1) and positive values"));
    }
    let loglog: Vec<f64> = eps.iter().map(|e| e.ln().abs().ln()).collect();
    let (log_model_exponent, log_model_residual) = slope_fit(eps, norm_sq, &loglog);
    let steps = (1.0 / ds).round() as usize;
    let pure_powers: Vec<(f64, f64)> = (0..steps)
        .map(|i| {
            let s = i as f64 * ds;
            let shape: Vec<f64> = eps.iter().map(|e| 2.0 * s * e.ln()).collect();
            (s, log_residual(norm_sq, &shape))
        })
        .collect();
    let (best_pure_s, best_pure_residual) =
        pure_powers
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Ok(ModelComparison {
        log_model_exponent,
        log_model_residual,
        log_model_wins: log_model_residual <= best_pure_residual,
        pure_powers,
        best_pure_s,
        best_pure_residual,
    })
}

/// Whether `norm(ε)²/ε^{2s}` stays bounded by its value at the largest `ε ≤ eps_max`
/// (up to `slack`) on the points below `eps_max`.
pub fn power_bound_holds(eps: &[f64], norms: &[f64], s: f64, eps_max: f64, slack: f64) -> bool {
    let ratios: Vec<f64> = eps
        .iter()
        .zip(norms)
        .filter(|(e, _)| **e <= eps_max)
        .map(|(e, n)| n * n / e.powf(2.0 * s))
        .collect();
    match ratios.first() {
        None => true,
        Some(&first) => ratios.iter().all(|&r| r <= first * (1.0 + slack)),
    }
}
