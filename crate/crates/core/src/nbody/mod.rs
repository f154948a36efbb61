//! Fermionic N-body operators `−Δ − λ Σ_{i<j} V_ε(x_i − x_j)` on product grids.

mod kk;
mod rates;

use std::sync::Arc;

use num_complex::Complex64;

pub use kk::{
    ab_identity_residual, kk_identity_residual, s_norm_check, verify_delta, DeltaReport, KkReport, SNormReport,
    DELTA_SCAN,
};
pub use rates::{
    rate_sweep, resolvent_difference_norm, thomas_scaling_check, RateOptions, RateRow, RateSweepResult,
    ResolventDifferenceResult, ThomasReport, ThomasRow,
};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_laplacian, Antisymmetrizer, Grid, Laplacian, LinearMap, OddProjector, DEFAULT_NODE_CAP};
use crate::potentials::{PotentialSpec, SignClass};
use crate::twobody::SplitOperator;

fn binomial2(n: usize) -> f64 {
    (n * (n - 1) / 2) as f64
}

/// Per-axis index and coordinate of lattice differences `x_j − x_i` (offset 0).
fn lattice_radius(grid: &Grid, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&i, &j)| grid.min_image(j, i).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `Σ_{i<j} V_ε(x_i − x_j)` on an `N`-block grid, with minimum-image differences.
pub fn pair_potential(grid: &Grid, spec: &PotentialSpec, eps: f64) -> Vec<f64> {
    let d = grid.dim_per_particle();
    let m = grid.num_particles();
    let mut idx = vec![0usize; grid.axes()];
    (0..grid.len())
        .map(|flat| {
            grid.unflatten(flat, &mut idx);
            let mut total = 0.0;
            for i in 0..m {
                for j in i + 1..m {
                    let r = lattice_radius(grid, &idx[i * d..(i + 1) * d], &idx[j * d..(j + 1) * d]);
                    total += spec.radial_scaled_capped(eps, r);
                }
            }
            total
        })
        .collect()
}

/// The shear `(x_1, x_2, x_3 …) ↦ (x_2 − x_1, x_1, x_3 …)` on grid indices.
///
/// A permutation of nodes, hence an exact isometry; the relative label is the
/// lattice difference, so its block lives on the offset-0 lattice.
#[derive(Clone)]
pub struct CoordinateMap {
    grid: Grid,
    image: Vec<usize>,
}

impl CoordinateMap {
    pub fn new(grid: &Grid) -> Result<Self> {
        if grid.num_particles() < 2 {
            return Err(Error::InvalidGrid(
                "the coordinate map needs two particle blocks".into(),
            ));
        }
        let d = grid.dim_per_particle();
        let n = grid.points_per_axis();
        let mut idx = vec![0usize; grid.axes()];
        let mut out = vec![0usize; grid.axes()];
        let image = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat, &mut idx);
                out.copy_from_slice(&idx);
                for a in 0..d {
                    out[a] = (idx[d + a] + n - idx[a]) % n;
                    out[d + a] = idx[a];
                }
                grid.flatten(&out)
            })
            .collect();
        Ok(Self { grid: *grid, image })
    }

    /// Radius of the relative label of a range index.
    pub fn relative_radius(&self, flat: usize) -> f64 {
        let d = self.grid.dim_per_particle();
        let mut idx = vec![0usize; self.grid.axes()];
        self.grid.unflatten(flat, &mut idx);
        let zero = vec![0usize; d];
        lattice_radius(&self.grid, &zero, &idx[..d])
    }
}

impl LinearMap for CoordinateMap {
    fn dim_in(&self) -> usize {
        self.image.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); x.len()];
        for (src, &dst) in self.image.iter().enumerate() {
            y[dst] = x[src];
        }
        y
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.image.iter().map(|&dst| x[dst]).collect()
    }
    fn descriptor(&self) -> String {
        "K".into()
    }
}

/// Common face of the full fermionic problem and the two-body relative fast path.
///
/// `H = K − W` on the range of `projector`, with `W = A* J A`.
pub trait Sector: Sync {
    fn grid(&self) -> &Grid;
    fn kinetic(&self) -> &Laplacian;
    /// `W` at the nodes (positive where attractive)
    fn interaction(&self) -> &[f64];
    fn projector(&self) -> &dyn LinearMap;
    /// `A x` on the range space.
    fn factor_a(&self, x: &[Complex64]) -> Vec<Complex64>;
    /// `A* y`, landing in the projected subspace.
    fn factor_a_adjoint(&self, y: &[Complex64]) -> Vec<Complex64>;
    /// `J = sgn V` on the range space.
    fn sign(&self) -> &[f64];
    fn sign_class(&self) -> SignClass;
    fn epsilon(&self) -> f64;
    fn coupling(&self) -> f64;
    /// Orthonormal basis of the projected subspace as sparse columns.
    fn basis(&self) -> Vec<Vec<(usize, f64)>>;

    fn split(&self) -> SplitOperator<'_> {
        SplitOperator {
            grid: *self.grid(),
            kinetic: self.kinetic(),
            interaction: self.interaction(),
            projector: Some(self.projector()),
        }
    }

    /// `P (K − W) P x`.
    fn apply_projected(&self, x: &[Complex64]) -> Vec<Complex64> {
        let p = self.projector();
        p.apply(&self.split().apply(&p.apply(x)))
    }

    fn factor_b(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.factor_a(x);
        y.iter_mut().zip(self.sign()).for_each(|(a, s)| *a *= s);
        y
    }

    fn factor_b_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let jy: Vec<Complex64> = y.iter().zip(self.sign()).map(|(a, s)| a * s).collect();
        self.factor_a_adjoint(&jy)
    }
}

fn check_coupling(eps: f64, lambda: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    Ok(())
}

fn signs_and_roots(values: &[f64], factor: f64) -> (Vec<f64>, Vec<f64>) {
    values
        .iter()
        .map(|&v| (if v < 0.0 { -1.0 } else { 1.0 }, (factor * v.abs()).sqrt()))
        .unzip()
}

/// `H_ε = −Δ − λ Σ_{i<j} V_ε(x_i − x_j)` sandwiched by the antisymmetrizer.
pub struct FermionicHamiltonian {
    grid: Grid,
    spec: PotentialSpec,
    eps: f64,
    lambda: f64,
    lap: Laplacian,
    interaction: Arc<Vec<f64>>,
    anti: Antisymmetrizer,
    shear: CoordinateMap,
    root: Vec<f64>,
    sign: Vec<f64>,
}

/// Builds `H_ε` for `N = grid blocks` particles in `d = grid.dim_per_particle()`.
pub fn build_hamiltonian(grid: &Grid, spec: &PotentialSpec, eps: f64, lambda: f64) -> Result<FermionicHamiltonian> {
    FermionicHamiltonian::new(grid, spec, eps, lambda)
}

impl FermionicHamiltonian {
    pub fn new(grid: &Grid, spec: &PotentialSpec, eps: f64, lambda: f64) -> Result<Self> {
        check_coupling(eps, lambda)?;
        grid.check_cap(DEFAULT_NODE_CAP)?;
        let shear = CoordinateMap::new(grid)?;
        let n = grid.num_particles();
        let interaction: Vec<f64> = pair_potential(grid, spec, eps)
            .into_iter()
            .map(|v| lambda * v)
            .collect();
        // V on the range, indexed by the relative label of the first pair
        let range_v: Vec<f64> = (0..grid.len())
            .map(|i| spec.radial_scaled_capped(eps, shear.relative_radius(i)))
            .collect();
        let (sign, root) = signs_and_roots(&range_v, lambda * binomial2(n));
        Ok(Self {
            grid: *grid,
            spec: spec.clone(),
            eps,
            lambda,
            lap: build_laplacian(grid, 1.0),
            interaction: Arc::new(interaction),
            anti: Antisymmetrizer::new(grid),
            shear,
            root,
            sign,
        })
    }

    pub fn num_particles(&self) -> usize {
        self.grid.num_particles()
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn coordinate_map(&self) -> &CoordinateMap {
        &self.shear
    }

    /// Same operator without the antisymmetric restriction.
    pub fn distinguishable(&self) -> SplitOperator<'_> {
        SplitOperator {
            grid: self.grid,
            kinetic: &self.lap,
            interaction: &self.interaction,
            projector: None,
        }
    }
}

impl Sector for FermionicHamiltonian {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn kinetic(&self) -> &Laplacian {
        &self.lap
    }
    fn interaction(&self) -> &[f64] {
        &self.interaction
    }
    fn projector(&self) -> &dyn LinearMap {
        &self.anti
    }
    fn factor_a(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.shear.apply(&self.anti.apply(x));
        y.iter_mut().zip(&self.root).for_each(|(a, r)| *a *= r);
        y
    }
    fn factor_a_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let vy: Vec<Complex64> = y.iter().zip(&self.root).map(|(a, r)| a * r).collect();
        self.anti.apply(&self.shear.apply_adjoint(&vy))
    }
    fn sign(&self) -> &[f64] {
        &self.sign
    }
    fn sign_class(&self) -> SignClass {
        self.spec.sign_class()
    }
    fn epsilon(&self) -> f64 {
        self.eps
    }
    fn coupling(&self) -> f64 {
        self.lambda
    }
    fn basis(&self) -> Vec<Vec<(usize, f64)>> {
        antisymmetric_basis(&self.grid)
    }
}

impl LinearMap for FermionicHamiltonian {
    fn dim_in(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_projected(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_projected(x)
    }
    fn descriptor(&self) -> String {
        format!(
            "H(N={}, eps={}, lambda={})",
            self.num_particles(),
            self.eps,
            self.lambda
        )
    }
}

/// Normalized antisymmetrized deltas over strictly increasing block indices.
fn antisymmetric_basis(grid: &Grid) -> Vec<Vec<(usize, f64)>> {
    let m = grid.num_particles();
    let bl = grid.block_len();
    let perms = crate::lattice::signed_permutations(m);
    let scale = 1.0 / (perms.len() as f64).sqrt();
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..m).collect();
    if m > bl {
        return out;
    }
    loop {
        let mut col = Vec::with_capacity(perms.len());
        let mut permuted = vec![0usize; m];
        for (perm, sign) in &perms {
            for (slot, &src) in permuted.iter_mut().zip(perm) {
                *slot = combo[src];
            }
            col.push((Antisymmetrizer::flatten_blocks(grid, &permuted), sign * scale));
        }
        out.push(col);
        // next increasing combination
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < bl - m + i {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..m {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Two-body relative problem `−2Δ_r − λ V_ε(r)` on odd functions.
///
/// Separating the centre of mass leaves this operator at zero total momentum;
/// nonzero momenta only add a nonnegative kinetic shift, so it carries the
/// two-fermion resolvent-difference norm.
pub struct RelativeOddSector {
    grid: Grid,
    spec: PotentialSpec,
    eps: f64,
    lambda: f64,
    lap: Laplacian,
    interaction: Vec<f64>,
    odd: OddProjector,
    root: Vec<f64>,
    sign: Vec<f64>,
}

impl RelativeOddSector {
    pub fn new(grid: &Grid, spec: &PotentialSpec, eps: f64, lambda: f64) -> Result<Self> {
        check_coupling(eps, lambda)?;
        if grid.num_particles() != 1 {
            return Err(Error::InvalidGrid("relative grids carry one block".into()));
        }
        grid.check_cap(DEFAULT_NODE_CAP)?;
        let v = crate::twobody::sample_scaled_potential(grid, spec, eps);
        let (sign, root) = signs_and_roots(&v, lambda);
        Ok(Self {
            grid: *grid,
            spec: spec.clone(),
            eps,
            lambda,
            lap: build_laplacian(grid, 2.0),
            interaction: v.iter().map(|x| lambda * x).collect(),
            odd: OddProjector::new(grid, 0)?,
            root,
            sign,
        })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// The relative operator on all of `L²`, parity ignored.
    pub fn distinguishable(&self) -> SplitOperator<'_> {
        SplitOperator {
            grid: self.grid,
            kinetic: &self.lap,
            interaction: &self.interaction,
            projector: None,
        }
    }
}

impl Sector for RelativeOddSector {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn kinetic(&self) -> &Laplacian {
        &self.lap
    }
    fn interaction(&self) -> &[f64] {
        &self.interaction
    }
    fn projector(&self) -> &dyn LinearMap {
        &self.odd
    }
    fn factor_a(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.odd.apply(x);
        y.iter_mut().zip(&self.root).for_each(|(a, r)| *a *= r);
        y
    }
    fn factor_a_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let vy: Vec<Complex64> = y.iter().zip(&self.root).map(|(a, r)| a * r).collect();
        self.odd.apply(&vy)
    }
    fn sign(&self) -> &[f64] {
        &self.sign
    }
    fn sign_class(&self) -> SignClass {
        self.spec.sign_class()
    }
    fn epsilon(&self) -> f64 {
        self.eps
    }
    fn coupling(&self) -> f64 {
        self.lambda
    }
    fn basis(&self) -> Vec<Vec<(usize, f64)>> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (0..self.grid.len())
            .filter_map(|i| {
                let p = self.odd.partner(i);
                (i < p).then(|| vec![(i, s), (p, -s)])
            })
            .collect()
    }
}

impl LinearMap for RelativeOddSector {
    fn dim_in(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_projected(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_projected(x)
    }
    fn descriptor(&self) -> String {
        format!("h_odd(eps={}, lambda={})", self.eps, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{dot, norm, Field};
    use crate::twobody::{lowest_eigenpair, GroundStateOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coordinate_map_is_an_isometry() {
        let g = Grid::new(1, 3, 4.0, 8, 0.5).unwrap();
        let k = CoordinateMap::new(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::random(g, &mut rng);
        let kf = k.apply(f.values());
        // a permutation: only the summation order differs
        assert!((norm(&kf) - norm(f.values())).abs() < 1e-14 * norm(&kf));
        let back = k.apply_adjoint(&kf);
        assert_eq!(back, f.values());
    }

    #[test]
    fn conjugated_range_potential_is_the_pair_term() {
        let g = Grid::new(1, 2, 4.0, 16, 0.5).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 0.8).unwrap();
        let h = FermionicHamiltonian::new(&g, &spec, 0.7, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = crate::lattice::antisymmetrize(&Field::random(g, &mut rng));
        let wf: Vec<Complex64> = f.values().iter().zip(h.interaction()).map(|(a, w)| a * w).collect();
        let ab = h.factor_a_adjoint(&h.factor_b(f.values()));
        let diff: Vec<Complex64> = wf.iter().zip(&ab).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-12 * norm(&wf));
    }

    #[test]
    fn hermitian_and_free_levels() {
        let g = Grid::new(1, 2, 4.0, 16, 0.5).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let h = FermionicHamiltonian::new(&g, &spec, 0.5, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Field::random(g, &mut rng);
        let b = Field::random(g, &mut rng);
        let lhs = dot(b.values(), &h.apply(a.values()));
        let rhs = dot(&h.apply(b.values()), a.values());
        assert!((lhs - rhs).norm() < 1e-10 * norm(a.values()) * norm(b.values()));
        let free = FermionicHamiltonian::new(&g, &spec, 0.5, 0.0).unwrap();
        let e = lowest_eigenpair(&free.distinguishable(), &GroundStateOptions::default()).unwrap();
        assert!(e.energy.abs() < 1e-8);
        let e = lowest_eigenpair(&free.split(), &GroundStateOptions::default()).unwrap();
        assert!(e.energy > 0.1);
    }

    #[test]
    fn antisymmetric_basis_is_orthonormal_and_spans_the_projector() {
        let g = Grid::new(1, 3, 2.0, 6, 0.5).unwrap();
        let basis = antisymmetric_basis(&g);
        assert_eq!(basis.len(), 20);
        let anti = Antisymmetrizer::new(&g);
        let mut trace = 0.0;
        for col in &basis {
            let mut v = vec![Complex64::default(); g.len()];
            for &(i, c) in col {
                v[i] += c;
            }
            assert!((norm(&v) - 1.0).abs() < 1e-14);
            trace += dot(&v, &anti.apply(&v)).re;
        }
        assert!((trace - 20.0).abs() < 1e-12);
    }

    #[test]
    fn two_body_spectrum_is_the_tensor_sum() {
        // zero total momentum is an invariant sector equal to the odd relative
        // problem on the difference lattice; a deep well puts the ground state there
        let n = 32;
        let l = 6.0;
        let g = Grid::new(1, 2, l, n, 0.5).unwrap();
        let spec = PotentialSpec::gaussian(1.0, 1.0).unwrap();
        let h = FermionicHamiltonian::new(&g, &spec, 1.0, 20.0).unwrap();
        let full = lowest_eigenpair(&h.split(), &GroundStateOptions::default())
            .unwrap()
            .energy;
        let rel = RelativeOddSector::new(&Grid::new(1, 1, l, n, 0.0).unwrap(), &spec, 1.0, 20.0).unwrap();
        let r = lowest_eigenpair(&rel.split(), &GroundStateOptions::default())
            .unwrap()
            .energy;
        assert!((full - r).abs() < 1e-6 * r.abs().max(1.0), "{full} vs {r}");
    }
}
