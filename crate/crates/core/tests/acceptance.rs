//! End-to-end acceptance checks. Each test writes one `C<k> PASS|FAIL` line to
//! stdout (bypassing capture) before asserting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fermiscale::harness::{run_experiment, ExperimentConfig, RunFlags, RunSummary};
use fermiscale::inequalities::{collared_field, strong_conv_check};
use fermiscale::lattice::{
    build_laplacian, dot, norm, Antisymmetrizer, Field, FourierTransform, Grid, LinearMap, OddProjector,
};
use fermiscale::nbody::{s_norm_check, RelativeOddSector};
use fermiscale::potentials::{CouplingSchedule, PotentialSpec};
use fermiscale::twobody::{bs_radial_s_wave, resonance_norm_sq, resonance_residual, richardson_sqrt_z};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn verdict(id: &str, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let line = format!(
        "\n{id:<4} {:<4} {name:<34} {:>7.1}s  {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{id} {name}: {detail}");
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(&path, None).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(cfg: &ExperimentConfig, out: &Path, workers: usize) -> (RunSummary, Duration) {
    let t = Instant::now();
    let flags = RunFlags {
        workers,
        seed: cfg.seed,
        out: out.to_path_buf(),
        config_path: None,
    };
    let s = run_experiment(cfg, &flags).unwrap_or_else(|e| panic!("{}: {e}", cfg.label));
    (s, t.elapsed())
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn c01_factorized_resolvent_identity() {
    let out = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut total = Duration::ZERO;
    for name in ["kk_n2.ini", "kk_n3.ini"] {
        let (s, t) = run(&config(name), out.path(), 1);
        total += t;
        ok &= s.pass == Some(true) && t <= Duration::from_secs(60);
        detail.push(format!("{} [{:.1}s] {}", s.label, t.as_secs_f64(), one_line(&s.text)));
    }
    verdict("C1", "factorized resolvent identity", ok, total, &detail.join(" | "));
}

#[test]
fn c02_s_norm_bounds() {
    let start = Instant::now();
    let g = Grid::relative(1, 8.0, 128).unwrap();
    let base = PotentialSpec::gaussian(1.0, 1.0).unwrap();
    let cases = [(0.5, 1.0), (0.4, 2.0), (0.3, 3.0), (0.2, 2.5), (0.15, 1.5)];
    let mut ok = true;
    let (mut worst_neg, mut worst_pos) = (0.0f64, 0.0f64);
    for &(eps, lambda) in &cases {
        let repulsive = s_norm_check(
            &RelativeOddSector::new(&g, &base.scaled_by(-1.0), eps, lambda).unwrap(),
            1.0,
            1e-7,
        )
        .unwrap();
        ok &= repulsive.bound == Some(2.0) && repulsive.holds() == Some(true);
        worst_neg = worst_neg.max(repulsive.norm / 2.0);
        let attractive = s_norm_check(&RelativeOddSector::new(&g, &base, eps, lambda).unwrap(), 1.0, 1e-7).unwrap();
        ok &= attractive.delta.is_some() && attractive.holds() == Some(true);
        if let Some(b) = attractive.bound {
            worst_pos = worst_pos.max(attractive.norm / b);
        }
    }
    let t = start.elapsed();
    ok &= t <= Duration::from_secs(300);
    verdict(
        "C2",
        "S(1) bounds, 5 + 5 instances",
        ok,
        t,
        &format!("worst ‖S‖/2 = {worst_neg:.4} (V ≤ 0), worst ‖S‖/(1+1/δ) = {worst_pos:.4} (V ≥ 0)"),
    );
}

#[test]
fn c03_odd_sector_scaling() {
    let out = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut total = Duration::ZERO;
    for name in ["norm_d1.ini", "norm_d3.ini", "norm_d2.ini"] {
        let cfg = config(name);
        if cfg.dim != 2 {
            ok &= cfg.epsilon.len() == 10;
        }
        let (s, t) = run(&cfg, out.path(), 1);
        total += t;
        ok &= s.pass == Some(true);
        detail.push(format!("d={} {}", cfg.dim, one_line(&s.text)));
    }
    ok &= total <= Duration::from_secs(20 * 60);
    verdict("C3", "odd-sector norm scaling", ok, total, &detail.join(" | "));
}

#[test]
fn c04_resolvent_difference_rates() {
    let out = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut total = Duration::ZERO;
    for name in ["rate_d1_linear.ini", "rate_d3_constant.ini", "rate_d2_log.ini"] {
        let cfg = config(name);
        let (s, t) = run(&cfg, out.path(), 1);
        total += t;
        ok &= s.pass == Some(true);
        detail.push(format!("d={} {}", cfg.dim, one_line(&s.text)));
    }
    ok &= total <= Duration::from_secs(30 * 60);
    verdict("C4", "resolvent-difference rates", ok, total, &detail.join(" | "));
}

#[test]
fn c05_calibration_limit() {
    let out = tempfile::tempdir().unwrap();
    let (s, t) = run(&config("calibrate_d1.ini"), out.path(), 1);
    let v = json(&s.dir.join("calibration.json"));
    let ratio = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| (r["epsilon"].as_f64().unwrap() - 0.02).abs() < 1e-12)
        .and_then(|r| r["oracle_ratio"].as_f64());
    let ok = ratio.is_some_and(|q| (q - 1.0).abs() <= 0.03) && t <= Duration::from_secs(300);
    verdict(
        "C5",
        "calibration against delta well",
        ok,
        t,
        &format!("λ/(ε·oracle) at ε = 0.02: {ratio:?}"),
    );
}

#[test]
fn c06_zero_energy_resonance() {
    let start = Instant::now();
    let spec = PotentialSpec::coulombic_cutoff();
    let zs = [1e-2, 1e-3, 1e-4];
    let mut vals = [0.0; 3];
    for (v, &z) in vals.iter_mut().zip(&zs) {
        *v = bs_radial_s_wave(&spec, z, 1.0, 24).unwrap();
    }
    let top = richardson_sqrt_z(&zs, &vals);
    let coarse = resonance_residual(&Grid::new(3, 1, 8.0, 32, 0.5).unwrap()).unwrap();
    let fine = resonance_residual(&Grid::new(3, 1, 8.0, 64, 0.5).unwrap()).unwrap();
    let halving = fine.residual / coarse.residual;
    let (a, b, c) = (
        resonance_norm_sq(4.0, 32),
        resonance_norm_sq(8.0, 64),
        resonance_norm_sq(16.0, 128),
    );
    let growth = (c - b) / (b - a);
    let t = start.elapsed();
    let ok =
        (top - 1.0).abs() <= 1e-3 && halving <= 0.5 && (growth - 2.0).abs() <= 0.05 && t <= Duration::from_secs(600);
    verdict(
        "C6",
        "zero-energy resonance",
        ok,
        t,
        &format!(
            "BS top at z→0 {top:.6}; residual {:.3e} → {:.3e} (ratio {halving:.3}); ‖ψ‖² increment ratio {growth:.4}",
            coarse.residual, fine.residual
        ),
    );
}

#[test]
fn c07_inequality_suite() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("verify.ini");
    let (s, t) = run(&cfg, out.path(), 1);
    let ok = cfg.instances == 1000 && s.pass == Some(true) && t <= Duration::from_secs(600);
    let failing: Vec<&str> = s.text.lines().filter(|l| l.ends_with("FAIL")).collect();
    let detail = if failing.is_empty() {
        format!("{} check groups pass", s.text.lines().count().saturating_sub(1))
    } else {
        failing.join("; ")
    };
    verdict("C7", "inequality suite (10³ instances)", ok, t, &detail);
}

#[test]
fn c08_thomas_scaling() {
    let out = tempfile::tempdir().unwrap();
    let (s, t) = run(&config("thomas_d3.ini"), out.path(), 1);
    let v = json(&s.dir.join("thomas.json"));
    let err = v["scaling_error"].as_f64().unwrap();
    let binds = v["distinguishable_binds"].as_bool().unwrap();
    let fermi = v["fermionic_nonnegative"].as_bool().unwrap();
    let ok = err < 1e-10 && binds && fermi && t <= Duration::from_secs(600);
    verdict(
        "C8",
        "Thomas scaling, d = 3, N = 2",
        ok,
        t,
        &format!("scaling error {err:.2e}; distinguishable < 0: {binds}; fermionic ≥ −1e-8: {fermi}"),
    );
}

#[test]
fn c09_strong_convergence() {
    let start = Instant::now();
    let g = Grid::new(1, 2, 6.0, 64, 0.5).unwrap();
    let rho = 0.5;
    let phi = collared_field(&g, rho).unwrap();
    let schedule = CouplingSchedule::Constant { c: 1.0 };
    let eps = [1.0, 0.8, 0.6, 0.45, 0.3, 0.2];
    let well = strong_conv_check(&phi, &PotentialSpec::square_well(1.0, 1.0).unwrap(), &schedule, &eps).unwrap();
    let exact = well.iter().all(|r| r.epsilon >= rho || r.value == 0.0) && well[0].value > 0.0;
    let gauss = strong_conv_check(&phi, &PotentialSpec::gaussian(1.0, 1.0).unwrap(), &schedule, &eps).unwrap();
    let decays = gauss.windows(2).all(|w| w[1].value < w[0].value) && gauss[5].value < 1e-3 * gauss[0].value;
    let t = start.elapsed();
    let ok = exact && decays && t <= Duration::from_secs(120);
    let show = |rows: &[fermiscale::inequalities::StrongConvRow]| {
        rows.iter()
            .map(|r| format!("{:.2e}", r.value))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        "C9",
        "strong convergence on collared field",
        ok,
        t,
        &format!("square well [{}]; gaussian [{}]", show(&well), show(&gauss)),
    );
}

fn random(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    Field::random(Grid::new(1, 1, 1.0, len, 0.5).unwrap(), rng).into_values()
}

fn adjoint_gap(map: &dyn LinearMap, rng: &mut ChaCha8Rng) -> f64 {
    let f = random(map.dim_in(), rng);
    let g = random(map.dim_out(), rng);
    let lhs = dot(&g, &map.apply(&f));
    let rhs = dot(&map.apply_adjoint(&g), &f);
    (lhs - rhs).norm() / (norm(&f) * norm(&g)).max(lhs.norm())
}

fn invariant_suite() -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let grids = [
        Grid::new(1, 1, 5.0, 64, 0.5).unwrap(),
        Grid::new(2, 1, 3.0, 16, 0.5).unwrap(),
        Grid::new(3, 1, 2.0, 8, 0.5).unwrap(),
        Grid::new(1, 2, 4.0, 16, 0.0).unwrap(),
        Grid::new(1, 3, 3.0, 8, 0.5).unwrap(),
        Grid::new(2, 2, 3.0, 8, 0.5).unwrap(),
    ];
    let (mut count, mut worst) = (0usize, 0.0f64);
    let mut note = |gap: f64| {
        count += 1;
        worst = worst.max(gap);
    };
    for grid in &grids {
        let lap = build_laplacian(grid, 1.0);
        note(adjoint_gap(&lap, &mut rng));
        note(adjoint_gap(&lap.resolvent(1.0).unwrap(), &mut rng));
        let anti = Antisymmetrizer::new(grid);
        let odd = OddProjector::new(grid, 0).unwrap();
        for p in [&anti as &dyn LinearMap, &odd as &dyn LinearMap] {
            note(adjoint_gap(p, &mut rng));
            let x = random(grid.len(), &mut rng);
            let px = p.apply(&x);
            let ppx = p.apply(&px);
            note(px.iter().zip(&ppx).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / norm(&x));
        }
        let x = random(grid.len(), &mut rng);
        let mut c = x.clone();
        FourierTransform::new(grid).forward(&mut c);
        let lhs: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        note((lhs - rhs).abs() / lhs);
    }
    (count, worst)
}

#[test]
fn c10_determinism_and_invariants() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, file) in [
        ("norm_d1.ini", "norm_sweep.csv"),
        ("rate_d1_linear.ini", "rate_sweep.csv"),
    ] {
        let cfg = config(name);
        let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        let bytes: Vec<Vec<u8>> = dirs
            .iter()
            .zip([1, 1, 2])
            .map(|(d, w)| std::fs::read(run(&cfg, d.path(), w).0.dir.join(file)).unwrap())
            .collect();
        let same = !bytes[0].is_empty() && bytes.iter().all(|b| *b == bytes[0]);
        ok &= same;
        detail.push(format!("{file} identical across 3 runs: {same}"));
    }
    let (count, worst) = invariant_suite();
    ok &= worst <= 1e-10;
    detail.push(format!("{count} adjoint/projector/Parseval checks, worst {worst:.1e}"));
    verdict(
        "C10",
        "determinism and invariants",
        ok,
        start.elapsed(),
        &detail.join("; "),
    );
}
