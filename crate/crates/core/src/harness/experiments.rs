//! One driver per experiment kind. Everything is computed before any byte is
//! written, so failures leave the output directory untouched.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::fit::{fit_rate, FitModel, RateFitResult};
use crate::harness::output::{emit, Artifact, RunFlags};
use crate::inequalities::{inequality_suite, InequalityReport};
use crate::nbody::{
    ab_identity_residual, kk_identity_residual, rate_sweep, thomas_scaling_check, FermionicHamiltonian, RateOptions,
};
use crate::oddsector::{compare_log_model, sweep_odd_norm, ModelComparison, SweepOptions};
use crate::potentials::{compute_integral, coupling_at, CouplingSchedule};
use crate::twobody::calibrate_coupling;

pub const KK_TOLERANCE: f64 = 1e-8;
/// Rate ratios may grow by at most this factor over their value at the largest ε.
pub const RATIO_GROWTH_LIMIT: f64 = 2.0;
pub const EXPONENT_TOLERANCE: f64 = 0.2;

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub label: String,
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
    pub pass: Option<bool>,
    pub text: String,
}

/// Fit record written next to sweep tables and read back by `report`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub label: String,
    pub kind: String,
    pub n_particles: usize,
    pub dim: usize,
    pub schedule: String,
    pub z: f64,
    pub model: String,
    pub exponent: Option<f64>,
    pub half_width: Option<f64>,
    pub predicted_exponent: Option<f64>,
    /// d = 2 sweeps: whether `C ε^p |log ε|` beats every pure power
    pub log_model_wins: Option<bool>,
    /// d = 2 rate sweeps: `max_ε norm/(λ_ε ε² |log ε|)`
    pub ratio_max: Option<f64>,
    pub ratio_bounded: Option<bool>,
    pub note: Option<String>,
}

/// Exponent of the resolvent-difference bound `λ_ε ε^{d−2+2s}` along the sweep.
///
/// `s = 1` in d = 1 and `s = 1/2` in d = 3; d = 2 carries `ε²|log ε|` and
/// is compared with the power-log model. Schedules add their own exponent.
pub fn predicted_exponent(d: usize, schedule: &CouplingSchedule) -> Option<f64> {
    let base = match d {
        1 => 1.0,
        2 | 3 => 2.0,
        _ => return None,
    };
    let lam = match schedule {
        CouplingSchedule::Constant { .. } | CouplingSchedule::LogReciprocal { .. } => 0.0,
        CouplingSchedule::Linear { .. } => 1.0,
        CouplingSchedule::Table { .. } => return None,
    };
    Some(base + lam)
}

/// Exponent `s` of `‖v_ε R₀‖_odd ~ ε^s`; `None` in d = 2 where the log model applies.
pub fn predicted_odd_exponent(d: usize) -> Option<f64> {
    match d {
        1 => Some(1.0),
        3 => Some(0.5),
        _ => None,
    }
}

fn default_model(d: usize) -> FitModel {
    if d == 2 {
        FitModel::PowerLog
    } else {
        FitModel::Power
    }
}

/// Runs `cfg` on a pool of `flags.workers` threads and writes its artifacts under `flags.out/label`.
pub fn run_experiment(cfg: &ExperimentConfig, flags: &RunFlags) -> Result<RunSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.workers.max(1))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let started = SystemTime::now();
    let mut cfg = cfg.clone();
    cfg.seed = flags.seed;
    let dir = flags.out.join(&cfg.label);
    let outcome = pool.install(|| match cfg.kind {
        ExperimentKind::Calibrate => calibrate(&cfg),
        ExperimentKind::NormSweep => norm_sweep(&cfg),
        ExperimentKind::RateFit => rate_fit(&cfg),
        ExperimentKind::KkCheck => kk_check(&cfg),
        ExperimentKind::Verify => verify(&cfg),
        ExperimentKind::ThomasCheck => thomas(&cfg),
        ExperimentKind::Report => report(&flags.out),
    })?;
    let manifest = emit(&dir, &cfg, flags, started, outcome.grid, &outcome.artifacts)?;
    Ok(RunSummary {
        kind: cfg.kind,
        label: cfg.label.clone(),
        dir,
        manifest,
        rows: outcome.artifacts.iter().map(|a| a.rows).sum(),
        pass: outcome.pass,
        text: outcome.text,
    })
}

struct Outcome {
    artifacts: Vec<Artifact>,
    grid: serde_json::Value,
    pass: Option<bool>,
    text: String,
}

#[derive(Serialize)]
struct CalibrationCsv {
    epsilon: f64,
    lambda: f64,
    energy: f64,
    residual: f64,
    grid_n: usize,
    #[serde(rename = "grid_L")]
    grid_l: f64,
}

fn calibrate(cfg: &ExperimentConfig) -> Result<Outcome> {
    use rayon::prelude::*;
    let policy = cfg.grid.sweep_policy();
    let width = cfg.potential.width();
    let rows: Vec<_> = cfg
        .epsilon
        .par_iter()
        .map(|&e| {
            let (grid, _) = policy.grid_for(cfg.dim, 1, width, e)?;
            calibrate_coupling(&grid, &cfg.potential, e, cfg.target_energy, 1e-10)
        })
        .collect::<Result<_>>()?;
    // delta-well oracle −2∂² − αδ: E = −α²/8 with α = λ ∫V_ε = (λ/ε) ∫V
    let oracle = if cfg.dim == 1 {
        let integral = compute_integral(&cfg.potential, 1)?;
        Some((-8.0 * cfg.target_energy).sqrt() / integral)
    } else {
        None
    };
    let mut text = format!("calibrate d={} target {:.6}\n", cfg.dim, cfg.target_energy);
    let summary: Vec<_> = rows
        .iter()
        .map(|r: &crate::twobody::CalibrationRow| {
            let ratio = oracle.map(|o| r.lambda / (o * r.epsilon));
            let _ = writeln!(
                text,
                "  eps {:.4e}  lambda {:.8e}  energy {:.8e}{}",
                r.epsilon,
                r.lambda,
                r.energy,
                ratio.map(|q| format!("  lambda/oracle {q:.5}")).unwrap_or_default()
            );
            json!({"epsilon": r.epsilon, "lambda": r.lambda, "oracle_ratio": ratio})
        })
        .collect();
    let csv: Vec<CalibrationCsv> = rows
        .iter()
        .map(|r| CalibrationCsv {
            epsilon: r.epsilon,
            lambda: r.lambda,
            energy: r.energy,
            residual: r.residual,
            grid_n: r.grid_n,
            grid_l: r.grid_l,
        })
        .collect();
    let grid = json!(rows
        .iter()
        .map(|r| json!({"epsilon": r.epsilon, "n": r.grid_n, "L": r.grid_l}))
        .collect::<Vec<_>>());
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("calibration.csv", &csv)?,
            Artifact::json(
                "calibration.json",
                &json!({"oracle_lambda_over_eps": oracle, "rows": summary}),
            )?,
        ],
        grid,
        pass: None,
        text,
    })
}

#[derive(Serialize)]
struct NormCsv {
    epsilon: f64,
    z: f64,
    norm: f64,
    near_k: Option<f64>,
    far_k: Option<f64>,
    grid_n: usize,
    resolved_flag: bool,
}

fn show(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".into())
}

fn fit_or_note(eps: &[f64], values: &[f64], model: FitModel, seed: u64) -> (Option<RateFitResult>, Option<String>) {
    match fit_rate(eps, values, model, seed) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn norm_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let policy = cfg.grid.sweep_policy();
    let opts = SweepOptions {
        tol: cfg.tol,
        truncation_k: cfg.truncation_k,
        refinement_check: cfg.refinement_check,
    };
    let (mut csv, mut fits, mut grid) = (Vec::new(), Vec::new(), Vec::new());
    let mut text = String::new();
    let mut pass = true;
    for &z in &cfg.z {
        let sweep = sweep_odd_norm(&cfg.potential, cfg.dim, &cfg.epsilon, z, &policy, &opts)?;
        for r in &sweep.rows {
            csv.push(NormCsv {
                epsilon: r.epsilon,
                z,
                norm: r.norm,
                near_k: r.near_k,
                far_k: r.far_k,
                grid_n: r.grid_n,
                resolved_flag: r.resolved,
            });
            grid.push(json!({"epsilon": r.epsilon, "z": z, "n": r.grid_n, "L": r.grid_l}));
        }
        let (e, n) = sweep.resolved();
        let mut summary = FitSummary {
            label: cfg.label.clone(),
            kind: cfg.kind.to_string(),
            n_particles: 2,
            dim: cfg.dim,
            schedule: "none".into(),
            z,
            model: FitModel::Power.to_string(),
            exponent: None,
            half_width: None,
            predicted_exponent: predicted_odd_exponent(cfg.dim),
            log_model_wins: None,
            ratio_max: None,
            ratio_bounded: None,
            note: None,
        };
        if cfg.dim == 2 {
            let sq: Vec<f64> = n.iter().map(|v| v * v).collect();
            match compare_log_model(&e, &sq, 0.01) {
                Ok(c) => {
                    let ModelComparison {
                        log_model_exponent,
                        log_model_wins,
                        best_pure_s,
                        ..
                    } = c;
                    summary.model = FitModel::PowerLog.to_string();
                    summary.exponent = Some(log_model_exponent);
                    summary.log_model_wins = Some(log_model_wins);
                    pass &= log_model_wins;
                    let _ = writeln!(
                        text,
                        "z={z}: norm² ~ ε^{log_model_exponent:.3}|log ε| (log model wins: {log_model_wins}; best pure s {best_pure_s:.2})"
                    );
                }
                Err(err) => summary.note = Some(err.to_string()),
            }
        } else {
            let (fit, note) = fit_or_note(&e, &n, cfg.fit_model.unwrap_or(FitModel::Power), cfg.seed);
            if let Some(f) = &fit {
                summary.exponent = Some(f.exponent);
                summary.half_width = Some(f.half_width);
                let ok = summary.predicted_exponent.map(|p| (f.exponent - p).abs() <= 0.1);
                pass &= ok.unwrap_or(true);
                let _ = writeln!(
                    text,
                    "z={z}: exponent {:.4} ± {:.4} (predicted {})",
                    f.exponent,
                    f.half_width,
                    show(summary.predicted_exponent)
                );
            }
            summary.note = note;
        }
        if summary.exponent.is_none() {
            pass = false;
        }
        fits.push(summary);
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("norm_sweep.csv", &csv)?,
            Artifact::json("fit.json", &fits)?,
        ],
        grid: json!(grid),
        pass: Some(pass),
        text,
    })
}

#[derive(Serialize)]
struct RateCsv {
    epsilon: f64,
    lambda: f64,
    z: f64,
    norm: f64,
    delta_used: Option<f64>,
    s_norm: Option<f64>,
    bound: Option<f64>,
    resolved_flag: bool,
}

fn rate_fit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let policy = cfg.grid.sweep_policy();
    let opts = RateOptions {
        tol: cfg.tol,
        with_s_norm: cfg.with_s_norm,
    };
    let predicted = predicted_exponent(cfg.dim, &cfg.schedule);
    let model = cfg.fit_model.unwrap_or(default_model(cfg.dim));
    let (mut csv, mut fits, mut grid) = (Vec::new(), Vec::new(), Vec::new());
    let mut text = String::new();
    let mut pass = true;
    for &z in &cfg.z {
        let sweep = rate_sweep(
            cfg.n_particles,
            cfg.dim,
            &cfg.potential,
            &cfg.schedule,
            z,
            &cfg.epsilon,
            &policy,
            &opts,
        )?;
        for r in &sweep.rows {
            csv.push(RateCsv {
                epsilon: r.epsilon,
                lambda: r.lambda,
                z,
                norm: r.norm,
                delta_used: r.delta_used,
                s_norm: r.s_norm,
                bound: r.bound,
                resolved_flag: r.resolved,
            });
            grid.push(json!({"epsilon": r.epsilon, "z": z, "n": r.grid_n, "L": r.grid_l}));
        }
        let (e, n) = sweep.resolved();
        let (fit, note) = fit_or_note(&e, &n, model, cfg.seed);
        let mut summary = FitSummary {
            label: cfg.label.clone(),
            kind: cfg.kind.to_string(),
            n_particles: cfg.n_particles,
            dim: cfg.dim,
            schedule: cfg.schedule.name().into(),
            z,
            model: model.to_string(),
            exponent: fit.as_ref().map(|f| f.exponent),
            half_width: fit.as_ref().map(|f| f.half_width),
            predicted_exponent: predicted,
            log_model_wins: None,
            ratio_max: None,
            ratio_bounded: None,
            note,
        };
        if cfg.dim == 2 {
            let ratios: Vec<f64> = sweep
                .rows
                .iter()
                .filter(|r| r.resolved)
                .map(|r| r.norm / (r.lambda * r.epsilon.powi(2) * r.epsilon.ln().abs()))
                .collect();
            if let Some(&first) = ratios.first() {
                let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
                summary.ratio_max = Some(max);
                summary.ratio_bounded = Some(max <= RATIO_GROWTH_LIMIT * first);
                pass &= max <= RATIO_GROWTH_LIMIT * first;
                let _ = writeln!(text, "z={z}: max norm/(λ ε² |log ε|) = {max:.4e} (first {first:.4e})");
            }
        } else if let (Some(f), Some(p)) = (&fit, predicted) {
            pass &= (f.exponent - p).abs() <= EXPONENT_TOLERANCE;
        }
        if let Some(f) = &fit {
            let _ = writeln!(
                text,
                "z={z}: exponent {:.4} ± {:.4} (predicted {}, model {model})",
                f.exponent,
                f.half_width,
                show(predicted)
            );
        } else {
            pass = false;
        }
        fits.push(summary);
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("rate_sweep.csv", &csv)?,
            Artifact::json("fit.json", &fits)?,
        ],
        grid: json!(grid),
        pass: Some(pass),
        text,
    })
}

#[derive(Serialize)]
struct KkCsv {
    n_particles: usize,
    dim: usize,
    points: usize,
    epsilon: f64,
    lambda: f64,
    z: f64,
    residual: f64,
    ab_residual: f64,
    dimension: usize,
    pass: bool,
}

fn kk_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let eps = cfg.epsilon[0];
    let lambda = coupling_at(&cfg.schedule, eps)?;
    let grid = cfg.grid.single(cfg.dim, cfg.n_particles, 0.5)?;
    let sector = FermionicHamiltonian::new(&grid, &cfg.potential, eps, lambda)?;
    let mut rows = Vec::new();
    for &z in &cfg.z {
        let rep = kk_identity_residual(&sector, z)?;
        let ab = ab_identity_residual(&sector, cfg.seed);
        rows.push(KkCsv {
            n_particles: cfg.n_particles,
            dim: cfg.dim,
            points: grid.points_per_axis(),
            epsilon: eps,
            lambda,
            z,
            residual: rep.residual,
            ab_residual: ab,
            dimension: rep.dimension,
            pass: rep.residual <= KK_TOLERANCE,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    let text = rows
        .iter()
        .map(|r| {
            format!(
                "kk N={} d={} n={} z={}: residual {:.3e} (dim {})\n",
                r.n_particles, r.dim, r.points, r.z, r.residual, r.dimension
            )
        })
        .collect();
    Ok(Outcome {
        artifacts: vec![Artifact::csv("kk.csv", &rows)?],
        grid: json!({"n": grid.points_per_axis(), "L": grid.half_length(), "blocks": grid.num_particles()}),
        pass: Some(pass),
        text,
    })
}

fn verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let reports = inequality_suite(cfg.instances, cfg.seed)?;
    let text = verify_table(&reports);
    let pass = reports.iter().all(|r| r.pass);
    Ok(Outcome {
        artifacts: vec![Artifact::json("verify.json", &reports)?],
        grid: json!({"hardy_mix": crate::inequalities::HARDY_MIX}),
        pass: Some(pass),
        text,
    })
}

/// Pass/fail table grouped by check name.
pub fn verify_table(reports: &[InequalityReport]) -> String {
    let mut groups: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for r in reports {
        let g = groups.entry(&r.name).or_insert((0, 0, 0.0));
        g.0 += 1;
        g.1 += r.pass as usize;
        g.2 = g.2.max(r.ratio);
    }
    let mut out = format!(
        "{:<32} {:>6} {:>6} {:>12}  status\n",
        "check", "count", "pass", "worst ratio"
    );
    for (name, (n, ok, worst)) in groups {
        let _ = writeln!(
            out,
            "{name:<32} {n:>6} {ok:>6} {worst:>12.4e}  {}",
            if ok == n { "PASS" } else { "FAIL" }
        );
    }
    out
}

fn thomas(cfg: &ExperimentConfig) -> Result<Outcome> {
    let lambda = match cfg.schedule {
        CouplingSchedule::Constant { c } => c,
        _ => {
            return Err(Error::ConfigField {
                field: "coupling.schedule".into(),
                message: "thomas-check needs a constant coupling".into(),
            })
        }
    };
    let blocks = if cfg.n_particles == 2 { 1 } else { cfg.n_particles };
    let unit = cfg.grid.single(cfg.dim, blocks, 0.5)?;
    let rep = thomas_scaling_check(cfg.n_particles, &cfg.potential, lambda, &cfg.epsilon, &unit)?;
    let pass = rep.fermionic_nonnegative && rep.distinguishable_binds && rep.scaling_error < 1e-10;
    let mut text = format!(
        "thomas N={} d={} λ={}: scaling error {:.3e}, distinguishable binds {}, fermionic ≥ 0 {}\n",
        rep.n_particles, rep.dim, rep.lambda, rep.scaling_error, rep.distinguishable_binds, rep.fermionic_nonnegative
    );
    for r in &rep.rows {
        let _ = writeln!(
            text,
            "  eps {:.4}  L {:.4}  E_dist {:.8e}  E_ferm {:.8e}",
            r.epsilon, r.half_length, r.distinguishable, r.fermionic
        );
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::csv("thomas.csv", &rep.rows)?,
            Artifact::json("thomas.json", &rep)?,
        ],
        grid: json!({"n": unit.points_per_axis(), "unit_L": unit.half_length(), "blocks": blocks}),
        pass: Some(pass),
        text,
    })
}

/// Collects `*/fit.json` under `out` and compares fitted with predicted exponents.
fn report(out: &Path) -> Result<Outcome> {
    let mut fits: Vec<FitSummary> = Vec::new();
    if out.is_dir() {
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        dirs.sort();
        for d in dirs {
            let p = d.join("fit.json");
            if p.is_file() {
                let v: Vec<FitSummary> = serde_json::from_slice(&std::fs::read(&p)?)?;
                fits.extend(v);
            }
        }
    }
    let mut text = format!(
        "{:<20} {:<11} {:>2} {:>2} {:<15} {:>5} {:<10} {:>9} {:>8} {:>9}  verdict\n",
        "label", "kind", "N", "d", "schedule", "z", "model", "exponent", "±", "predicted"
    );
    for f in &fits {
        let fmt = |v: Option<f64>, w: usize, p: usize| {
            v.map(|x| format!("{x:>w$.p$}"))
                .unwrap_or_else(|| format!("{:>w$}", "-"))
        };
        let verdict = match (f.exponent, f.predicted_exponent, f.ratio_bounded, f.log_model_wins) {
            (_, _, Some(b), _) => if b { "ratio bounded" } else { "ratio grows" }.to_string(),
            (_, _, None, Some(w)) => if w { "log model wins" } else { "pure power wins" }.to_string(),
            (Some(e), Some(p), ..) => {
                let tol = if f.kind == "norm-sweep" {
                    0.1
                } else {
                    EXPONENT_TOLERANCE
                };
                if (e - p).abs() <= tol { "agrees" } else { "disagrees" }.to_string()
            }
            _ => f.note.clone().unwrap_or_else(|| "no fit".into()),
        };
        let _ = writeln!(
            text,
            "{:<20} {:<11} {:>2} {:>2} {:<15} {:>5} {:<10} {} {} {}  {verdict}",
            f.label,
            f.kind,
            f.n_particles,
            f.dim,
            f.schedule,
            f.z,
            f.model,
            fmt(f.exponent, 9, 4),
            fmt(f.half_width, 8, 4),
            fmt(f.predicted_exponent, 9, 2),
        );
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::text("report.txt", text.clone()),
            Artifact::json("fits.json", &fits)?,
        ],
        grid: json!(null),
        pass: None,
        text,
    })
}
