use fermiscale::harness::{fit_rate, ExperimentConfig, FitModel};
use fermiscale::inequalities::{hardy_check, random_slater_field};
use fermiscale::lattice::{
    antisymmetrize, build_laplacian, dot, norm, Antisymmetrizer, Field, FourierTransform, Grid, LinearMap,
    Multiplication, OddProjector,
};
use fermiscale::nbody::{CoordinateMap, FermionicHamiltonian, RelativeOddSector, Sector};
use fermiscale::potentials::{coupling_at, CouplingSchedule, PotentialSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::random(Grid::new(1, 1, 1.0, len, 0.5).unwrap(), &mut rng).into_values()
}

fn adjoint_gap(map: &dyn LinearMap, seed: u64) -> f64 {
    let f = random(map.dim_in(), seed);
    let g = random(map.dim_out(), seed + 1);
    let lhs = dot(&g, &map.apply(&f));
    let rhs = dot(&map.apply_adjoint(&g), &f);
    (lhs - rhs).norm() / (norm(&f) * norm(&g) * 1.0f64.max(lhs.norm() / (norm(&f) * norm(&g))))
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (4usize..7).prop_map(|k| Grid::new(1, 1, 5.0, 1 << k, 0.5).unwrap()),
        (2usize..5).prop_map(|k| Grid::new(2, 1, 3.0, 1 << k, 0.5).unwrap()),
        (2usize..5).prop_map(|k| Grid::new(1, 2, 4.0, 1 << k, 0.0).unwrap()),
        Just(Grid::new(3, 1, 2.0, 8, 0.5).unwrap()),
        Just(Grid::new(1, 3, 3.0, 8, 0.5).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(grid in grid_strategy(), seed in any::<u64>()) {
        let x = random(grid.len(), seed);
        let mut c = x.clone();
        FourierTransform::new(&grid).forward(&mut c);
        let lhs: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let rhs: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.len() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        FourierTransform::new(&grid).inverse(&mut c);
        let back: f64 = c.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum();
        prop_assert!(back.sqrt() <= 1e-12 * lhs.sqrt());
    }

    #[test]
    fn laplacian_and_resolvent_adjoint(grid in grid_strategy(), seed in any::<u64>(), z in 0.1f64..10.0) {
        let lap = build_laplacian(&grid, 1.0);
        prop_assert!(adjoint_gap(&lap, seed) <= 1e-10);
        let r = lap.resolvent(z).unwrap();
        prop_assert!(adjoint_gap(&r, seed) <= 1e-10);
        let w: Vec<f64> = random(grid.len(), seed ^ 7).iter().map(|c| c.re).collect();
        prop_assert!(adjoint_gap(&Multiplication::new(w, "w"), seed) <= 1e-10);
    }

    #[test]
    fn projectors_idempotent_self_adjoint(grid in grid_strategy(), seed in any::<u64>()) {
        let x = random(grid.len(), seed);
        let anti = Antisymmetrizer::new(&grid);
        let odd = OddProjector::new(&grid, 0).unwrap();
        for p in [&anti as &dyn LinearMap, &odd as &dyn LinearMap] {
            let px = p.apply(&x);
            let ppx = p.apply(&px);
            let gap: f64 = px.iter().zip(&ppx).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(gap <= 1e-12 * norm(&x));
            prop_assert!(adjoint_gap(p, seed) <= 1e-10);
            prop_assert!(norm(&px) <= norm(&x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn laplacian_commutes_with_antisymmetrizer(k in 2usize..5, m in 2usize..4, seed in any::<u64>()) {
        let n: usize = 1 << k;
        prop_assume!(n.pow(m as u32) <= 4096);
        let grid = Grid::new(1, m, 3.0, n, 0.5).unwrap();
        let anti = Antisymmetrizer::new(&grid);
        let lap = build_laplacian(&grid, 1.0);
        let x = random(grid.len(), seed);
        let a = lap.apply(&anti.apply(&x));
        let b = anti.apply(&lap.apply(&x));
        let gap: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(gap <= 1e-10 * norm(&a).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shear_is_isometry(k in 2usize..6, m in 2usize..4, seed in any::<u64>()) {
        let n: usize = 1 << k;
        prop_assume!(n.pow(m as u32) <= 1 << 14);
        let grid = Grid::new(1, m, 4.0, n, 0.5).unwrap();
        let shear = CoordinateMap::new(&grid).unwrap();
        let x = random(grid.len(), seed);
        let y = shear.apply(&x);
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-14 * norm(&x));
        prop_assert!(adjoint_gap(&shear, seed) <= 1e-12);
    }

    #[test]
    fn factorization_w_equals_a_star_b(
        m in 2usize..4,
        eps in 0.3f64..2.0,
        lambda in 0.05f64..2.0,
        signed in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = if signed {
            PotentialSpec::gaussian(-1.0, 1.0).unwrap()
        } else {
            PotentialSpec::smooth_bump(1.0, 1.5).unwrap()
        };
        let n = if m == 2 { 16 } else { 8 };
        let grid = Grid::new(1, m, 3.0, n, 0.5).unwrap();
        let h = FermionicHamiltonian::new(&grid, &spec, eps, lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = antisymmetrize(&Field::random(grid, &mut rng)).into_values();
        let psi = antisymmetrize(&Field::random(grid, &mut rng)).into_values();
        let wpsi: Vec<Complex64> = psi.iter().zip(h.interaction()).map(|(v, w)| v * w).collect();
        let lhs = dot(&phi, &wpsi);
        let rhs = dot(&h.factor_a(&phi), &h.factor_b(&psi));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * norm(&phi) * norm(&psi) * 1.0f64.max(lhs.norm()));
    }

    #[test]
    fn relative_sector_factorization(eps in 0.2f64..2.0, lambda in 0.1f64..5.0, seed in any::<u64>()) {
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let grid = Grid::relative(1, 6.0, 64).unwrap();
        let s = RelativeOddSector::new(&grid, &spec, eps, lambda).unwrap();
        let x = random(grid.len(), seed);
        let px = s.projector().apply(&x);
        let lhs = dot(&px, &px.iter().zip(s.interaction()).map(|(v, w)| v * w).collect::<Vec<_>>());
        let rhs = dot(&s.factor_a(&px), &s.factor_b(&px));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * norm(&px).powi(2) * 1.0f64.max(lhs.norm()));
    }

    #[test]
    fn hardy_on_random_slater_fields(case in 0usize..3, seed in any::<u64>()) {
        let grid = match case {
            0 => Grid::new(1, 2, 4.0, 32, 0.5).unwrap(),
            1 => Grid::new(1, 3, 4.0, 12, 0.5).unwrap(),
            _ => Grid::new(2, 2, 4.0, 8, 0.5).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rep = hardy_check(&random_slater_field(&grid, &mut rng));
        prop_assert!(rep.pass, "{:?}", rep);
    }
}

proptest! {
    #[test]
    fn fit_recovers_exact_power(p in -1.0f64..3.0, c in 0.01f64..100.0, start in 0.05f64..0.5, f in 0.3f64..0.9) {
        let eps: Vec<f64> = (0..8).map(|k| start * f.powi(k)).collect();
        let v: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
        let fit = fit_rate(&eps, &v, FitModel::Power, 0).unwrap();
        prop_assert!((fit.exponent - p).abs() <= 1e-10);
        prop_assert!((fit.prefactor / c - 1.0).abs() <= 1e-9);
        let vl: Vec<f64> = eps.iter().map(|e| c * e.powf(p) * e.ln().abs()).collect();
        let fl = fit_rate(&eps, &vl, FitModel::PowerLog, 0).unwrap();
        prop_assert!((fl.exponent - p).abs() <= 1e-10);
    }

    #[test]
    fn schedules_positive(eps in 1e-6f64..0.99, g in 0.01f64..10.0, a in 0.0f64..5.0) {
        for s in [
            CouplingSchedule::Constant { c: g },
            CouplingSchedule::Linear { g },
            CouplingSchedule::LogReciprocal { a },
        ] {
            let l = coupling_at(&s, eps).unwrap();
            prop_assert!(l > 0.0 && l.is_finite());
        }
    }

    #[test]
    fn geometric_ranges_strictly_decrease(start in 1e-3f64..1.0, factor in 0.05f64..0.95, count in 1usize..30) {
        let text = format!("[experiment]\nkind = verify\n[epsilon]\nstart = {start}\nfactor = {factor}\ncount = {count}\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.epsilon.len(), count);
        prop_assert!(cfg.epsilon.windows(2).all(|w| w[1] < w[0]));
        prop_assert_eq!(cfg.hash(), ExperimentConfig::parse(&text).unwrap().hash());
    }
}
