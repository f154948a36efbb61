use num_complex::Complex64;

use super::{Field, Grid, LinearMap};
use crate::error::{Error, Result};

/// Odd-parity projector `(f(r) - f(-r)) / 2` acting on one particle block.
#[derive(Clone)]
pub struct OddProjector {
    partner: Vec<usize>,
}

impl OddProjector {
    pub fn new(grid: &Grid, block: usize) -> Result<Self> {
        if block >= grid.num_particles() {
            return Err(Error::InvalidArgument {
                name: "block",
                reason: format!("grid has {} particle blocks", grid.num_particles()),
            });
        }
        let n = grid.points_per_axis();
        let reflect: Vec<usize> = (0..n).map(|j| grid.reflect_index(j)).collect::<Result<_>>()?;
        let d = grid.dim_per_particle();
        let axes = grid.axes();
        let mut idx = vec![0usize; axes];
        let partner = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat, &mut idx);
                for a in block * d..(block + 1) * d {
                    idx[a] = reflect[idx[a]];
                }
                grid.flatten(&idx)
            })
            .collect();
        Ok(Self { partner })
    }

    /// Flat index of the reflected node.
    pub fn partner(&self, flat: usize) -> usize {
        self.partner[flat]
    }
}

impl LinearMap for OddProjector {
    fn dim_in(&self) -> usize {
        self.partner.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.partner
            .iter()
            .enumerate()
            .map(|(i, &p)| (x[i] - x[p]) * 0.5)
            .collect()
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }
    fn descriptor(&self) -> String {
        "P_odd".into()
    }
}

/// Projects `f` onto functions odd under `r -> -r` in particle block `block`.
pub fn parity_project_odd(f: &Field, block: usize) -> Result<Field> {
    Ok(OddProjector::new(f.grid(), block)?.apply_field(f))
}

/// All permutations of `0..n` with their signs, adjacent entries differing by
/// a swap of the first two positions.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if rest.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            // moving element i to the front costs i transpositions
            let s = if i % 2 == 0 { sign } else { -sign };
            rec(prefix, rest, s, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    if n < 2 {
        out.push(((0..n).collect(), 1.0));
        return out;
    }
    // pair each permutation of the tail with both orders of the head
    let mut tails = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), 1.0, &mut tails);
    for (p, s) in tails {
        if p[0] < p[1] {
            let mut q = p.clone();
            q.swap(0, 1);
            out.push((p, s));
            out.push((q, -s));
        }
    }
    out
}

/// The fermionic projector `(1/N!) Σ_σ sgn(σ) σ` over particle blocks.
#[derive(Clone)]
pub struct Antisymmetrizer {
    grid: Grid,
    perms: Vec<(Vec<usize>, f64)>,
}

impl Antisymmetrizer {
    pub fn new(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            perms: signed_permutations(grid.num_particles()),
        }
    }

    /// Block indices `p_1 … p_N` of a flat index (each in `0..n^d`).
    pub fn blocks(grid: &Grid, mut flat: usize, out: &mut [usize]) {
        let bl = grid.block_len();
        for slot in out.iter_mut().rev() {
            *slot = flat % bl;
            flat /= bl;
        }
    }

    pub fn flatten_blocks(grid: &Grid, blocks: &[usize]) -> usize {
        let bl = grid.block_len();
        blocks.iter().fold(0, |acc, &p| acc * bl + p)
    }
}

impl LinearMap for Antisymmetrizer {
    fn dim_in(&self) -> usize {
        self.grid.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let np = self.grid.num_particles();
        if np == 1 {
            return x.to_vec();
        }
        let norm = 1.0 / self.perms.len() as f64;
        let mut blocks = vec![0usize; np];
        let mut permuted = vec![0usize; np];
        (0..x.len())
            .map(|flat| {
                Self::blocks(&self.grid, flat, &mut blocks);
                let mut acc = Complex64::default();
                for (perm, sign) in &self.perms {
                    for (slot, &src) in permuted.iter_mut().zip(perm) {
                        *slot = blocks[src];
                    }
                    acc += x[Self::flatten_blocks(&self.grid, &permuted)] * *sign;
                }
                acc * norm
            })
            .collect()
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }
    fn descriptor(&self) -> String {
        "P_f".into()
    }
}

/// Antisymmetrizes a field over its particle blocks.
pub fn antisymmetrize(f: &Field) -> Field {
    Antisymmetrizer::new(f.grid()).apply_field(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::field::{dot, norm};
    use crate::lattice::{build_laplacian, LinearMap};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let diff: Vec<_> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&diff) <= tol * norm(b).max(1.0)
    }

    #[test]
    fn permutation_signs() {
        let perms = signed_permutations(3);
        assert_eq!(perms.len(), 6);
        let total: f64 = perms.iter().map(|p| p.1).sum();
        assert_eq!(total, 0.0);
        for (p, s) in &perms {
            let mut inv = 0;
            for i in 0..3 {
                for j in i + 1..3 {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            assert_eq!(*s, if inv % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn odd_projector_basics() {
        let g = Grid::relative(2, 3.0, 12).unwrap();
        let even = Field::from_real_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        assert!(parity_project_odd(&even, 0).unwrap().max_abs() < 1e-15);
        let odd = Field::from_real_fn(g, |x| x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp());
        let p = parity_project_odd(&odd, 0).unwrap();
        assert!(close(p.values(), odd.values(), 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Field::random(g, &mut rng);
        let proj = OddProjector::new(&g, 0).unwrap();
        let once = proj.apply(f.values());
        let twice = proj.apply(&once);
        assert!(close(&twice, &once, 1e-12));
    }

    #[test]
    fn incompatible_offset_rejected() {
        let g = Grid::new(1, 1, 1.0, 8, 0.25).unwrap();
        assert!(matches!(
            parity_project_odd(&Field::zeros(g), 0),
            Err(Error::ReflectionIncompatible { .. })
        ));
    }

    #[test]
    fn antisymmetrizer_basics() {
        let g = Grid::new(1, 2, 3.0, 8, 0.5).unwrap();
        let sym = Field::from_real_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp() * (1.0 + x[0] * x[1]));
        assert!(antisymmetrize(&sym).max_abs() < 1e-15);
        let anti = Field::from_real_fn(g, |x| (x[1] - x[0]) * (-(x[0] * x[0] + x[1] * x[1])).exp());
        assert!(close(antisymmetrize(&anti).values(), anti.values(), 1e-15));
    }

    #[test]
    fn slater_determinant_is_fixed() {
        // three orthonormal Hermite orbitals on a d=1 three-particle grid
        let g = Grid::new(1, 3, 6.0, 16, 0.5).unwrap();
        let orb = |k: usize, x: f64| {
            let e = (-x * x / 2.0).exp();
            match k {
                0 => e,
                1 => x * e,
                _ => (2.0 * x * x - 1.0) * e,
            }
        };
        let det = Field::from_real_fn(g, |x| {
            let m = |i: usize, j: usize| orb(i, x[j]);
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        });
        let p = antisymmetrize(&det);
        assert!(close(p.values(), det.values(), 1e-12));
    }

    #[test]
    fn projectors_idempotent_self_adjoint_and_commute_with_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = Grid::new(1, 3, 2.0, 6, 0.5).unwrap();
        let a = Antisymmetrizer::new(&g);
        let lap = build_laplacian(&g, 1.0);
        let f = Field::random(g, &mut rng);
        let h = Field::random(g, &mut rng);
        let pf = a.apply(f.values());
        assert!(close(&a.apply(&pf), &pf, 1e-12));
        let lhs = dot(h.values(), &pf);
        let rhs = dot(&a.apply(h.values()), f.values());
        assert!((lhs - rhs).norm() < 1e-10 * norm(f.values()) * norm(h.values()));
        assert!(norm(&pf) <= norm(f.values()) * (1.0 + 1e-12));
        let lp = lap.apply(&pf);
        let pl = a.apply(&lap.apply(f.values()));
        assert!(close(&lp, &pl, 1e-10));

        let gr = Grid::relative(3, 2.0, 6).unwrap();
        let odd = OddProjector::new(&gr, 0).unwrap();
        let lapr = build_laplacian(&gr, 2.0);
        let f = Field::random(gr, &mut rng);
        let lp = lapr.apply(&odd.apply(f.values()));
        let pl = odd.apply(&lapr.apply(f.values()));
        assert!(close(&lp, &pl, 1e-10));
    }
}
