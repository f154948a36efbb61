use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, FourierTransform, Grid};
use crate::error::{Error, Result};

/// Matrix-free linear operator on flat node vectors.
///
/// Every map in the laboratory acts on vectors sharing one uniform cell
/// weight, so adjoints and norms can be taken in the unweighted product.
pub trait LinearMap: Send + Sync {
    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize {
        self.dim_in()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64>;

    fn descriptor(&self) -> String;

    fn apply_field(&self, f: &Field) -> Field {
        Field::from_values(*f.grid(), self.apply(f.values()))
    }

    fn apply_adjoint_field(&self, f: &Field) -> Field {
        Field::from_values(*f.grid(), self.apply_adjoint(f.values()))
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn dim_in(&self) -> usize {
        (**self).dim_in()
    }
    fn dim_out(&self) -> usize {
        (**self).dim_out()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        (**self).apply_adjoint(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn dim_in(&self) -> usize {
        (**self).dim_in()
    }
    fn dim_out(&self) -> usize {
        (**self).dim_out()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        (**self).apply_adjoint(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// A real Fourier multiplier `F^{-1} diag(symbol) F` (self-adjoint).
#[derive(Clone)]
pub struct FourierMultiplier {
    grid: Grid,
    fft: Arc<FourierTransform>,
    symbol: Arc<Vec<f64>>,
    label: String,
}

impl FourierMultiplier {
    pub fn new(grid: Grid, fft: Arc<FourierTransform>, symbol: Vec<f64>, label: String) -> Self {
        assert_eq!(symbol.len(), grid.len());
        Self {
            grid,
            fft,
            symbol: Arc::new(symbol),
            label,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn transform(&self) -> &Arc<FourierTransform> {
        &self.fft
    }

    /// Multiplier with symbol `g(s)` applied pointwise to this symbol.
    pub fn map_symbol(&self, g: impl Fn(f64) -> f64, label: String) -> Self {
        Self {
            grid: self.grid,
            fft: Arc::clone(&self.fft),
            symbol: Arc::new(self.symbol.iter().map(|&s| g(s)).collect()),
            label,
        }
    }
}

impl LinearMap for FourierMultiplier {
    fn dim_in(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.fft.forward(&mut buf);
        buf.iter_mut().zip(self.symbol.iter()).for_each(|(v, &s)| *v *= s);
        self.fft.inverse(&mut buf);
        buf
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }

    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

/// Discrete `-(mass_factor) Δ`: a Fourier multiplier with symbol `mass_factor |k|²`.
#[derive(Clone)]
pub struct Laplacian {
    multiplier: FourierMultiplier,
    mass_factor: f64,
}

/// Builds the spectral Laplacian `-(mass_factor) Δ` on `grid`.
pub fn build_laplacian(grid: &Grid, mass_factor: f64) -> Laplacian {
    let fft = Arc::new(FourierTransform::new(grid));
    build_laplacian_with(grid, mass_factor, fft)
}

pub fn build_laplacian_with(grid: &Grid, mass_factor: f64, fft: Arc<FourierTransform>) -> Laplacian {
    let axes = grid.axes();
    let n = grid.points_per_axis();
    let k2_axis: Vec<f64> = (0..n).map(|b| grid.wavenumber(b).powi(2)).collect();
    let mut idx = vec![0usize; axes];
    let symbol = (0..grid.len())
        .map(|flat| {
            grid.unflatten(flat, &mut idx);
            mass_factor * idx.iter().map(|&b| k2_axis[b]).sum::<f64>()
        })
        .collect();
    Laplacian {
        multiplier: FourierMultiplier::new(*grid, fft, symbol, format!("-{mass_factor}*Laplacian")),
        mass_factor,
    }
}

impl Laplacian {
    pub fn grid(&self) -> &Grid {
        self.multiplier.grid()
    }

    pub fn mass_factor(&self) -> f64 {
        self.mass_factor
    }

    pub fn multiplier(&self) -> &FourierMultiplier {
        &self.multiplier
    }

    pub fn symbol(&self) -> &[f64] {
        self.multiplier.symbol()
    }

    /// `(lap + z)^{-1}` as a Fourier multiplier.
    pub fn resolvent(&self, z: f64) -> Result<FourierMultiplier> {
        if !(z > 0.0) {
            return Err(Error::NonPositiveShift(z));
        }
        Ok(self.multiplier.map_symbol(|s| 1.0 / (s + z), format!("R0({z})")))
    }

    /// `(lap + z)^{-1}` with the zero Fourier mode removed; z may be 0.
    pub fn resolvent_without_zero_mode(&self, z: f64) -> Result<FourierMultiplier> {
        if z < 0.0 {
            return Err(Error::NonPositiveShift(z));
        }
        Ok(self
            .multiplier
            .map_symbol(|s| if s == 0.0 { 0.0 } else { 1.0 / (s + z) }, format!("R0'({z})")))
    }
}

impl LinearMap for Laplacian {
    fn dim_in(&self) -> usize {
        self.multiplier.dim_in()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.multiplier.apply(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.multiplier.apply(x)
    }
    fn descriptor(&self) -> String {
        self.multiplier.descriptor()
    }
}

/// Solves `(lap + z) g = f` exactly in the Fourier basis.
pub fn apply_resolvent(lap: &Laplacian, z: f64, f: &Field) -> Result<Field> {
    Ok(lap.resolvent(z)?.apply_field(f))
}

/// Pointwise multiplication by a real function.
#[derive(Clone)]
pub struct Multiplication {
    weights: Arc<Vec<f64>>,
    label: String,
}

impl Multiplication {
    pub fn new(weights: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            weights: Arc::new(weights),
            label: label.into(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl LinearMap for Multiplication {
    fn dim_in(&self) -> usize {
        self.weights.len()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter().zip(self.weights.iter()).map(|(v, &w)| v * w).collect()
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }
    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

type VecFn = Box<dyn Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync>;

/// Operator assembled from a pair of closures.
pub struct FnMap {
    dim_in: usize,
    dim_out: usize,
    forward: VecFn,
    adjoint: VecFn,
    label: String,
}

impl FnMap {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        label: impl Into<String>,
        forward: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + 'static,
        adjoint: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim_in,
            dim_out,
            forward: Box::new(forward),
            adjoint: Box::new(adjoint),
            label: label.into(),
        }
    }

    pub fn self_adjoint(
        dim: usize,
        label: impl Into<String>,
        forward: impl Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync + Clone + 'static,
    ) -> Self {
        Self::new(dim, dim, label, forward.clone(), forward)
    }
}

impl LinearMap for FnMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.forward)(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.adjoint)(x)
    }
    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

/// Borrowing self-adjoint map around a closure.
pub struct SelfAdjointFn<F> {
    dim: usize,
    f: F,
    label: &'static str,
}

pub fn self_adjoint_fn<F>(dim: usize, label: &'static str, f: F) -> SelfAdjointFn<F>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    SelfAdjointFn { dim, f, label }
}

impl<F> LinearMap for SelfAdjointFn<F>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.f)(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.f)(x)
    }
    fn descriptor(&self) -> String {
        self.label.to_string()
    }
}

/// Borrowing map around a forward/adjoint closure pair.
pub struct ClosureMap<F, G> {
    dim: usize,
    forward: F,
    adjoint: G,
    label: &'static str,
}

pub fn closure_map<F, G>(dim: usize, label: &'static str, forward: F, adjoint: G) -> ClosureMap<F, G>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
    G: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    ClosureMap {
        dim,
        forward,
        adjoint,
        label,
    }
}

impl<F, G> LinearMap for ClosureMap<F, G>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
    G: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    fn dim_in(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.forward)(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.adjoint)(x)
    }
    fn descriptor(&self) -> String {
        self.label.to_string()
    }
}

/// `maps[0] ∘ maps[1] ∘ …` (rightmost applied first).
pub struct Composition {
    maps: Vec<Arc<dyn LinearMap>>,
}

impl Composition {
    pub fn new(maps: Vec<Arc<dyn LinearMap>>) -> Self {
        assert!(!maps.is_empty());
        Self { maps }
    }
}

impl LinearMap for Composition {
    fn dim_in(&self) -> usize {
        self.maps.last().map(|m| m.dim_in()).unwrap_or(0)
    }
    fn dim_out(&self) -> usize {
        self.maps[0].dim_out()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut it = self.maps.iter().rev();
        let mut v = it.next().map(|m| m.apply(x)).unwrap_or_default();
        for m in it {
            v = m.apply(&v);
        }
        v
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut it = self.maps.iter();
        let mut v = it.next().map(|m| m.apply_adjoint(x)).unwrap_or_default();
        for m in it {
            v = m.apply_adjoint(&v);
        }
        v
    }
    fn descriptor(&self) -> String {
        self.maps.iter().map(|m| m.descriptor()).collect::<Vec<_>>().join(" . ")
    }
}

/// `a - b` for maps with matching shapes.
pub struct Difference {
    a: Arc<dyn LinearMap>,
    b: Arc<dyn LinearMap>,
}

impl Difference {
    pub fn new(a: Arc<dyn LinearMap>, b: Arc<dyn LinearMap>) -> Self {
        Self { a, b }
    }
}

impl LinearMap for Difference {
    fn dim_in(&self) -> usize {
        self.a.dim_in()
    }
    fn dim_out(&self) -> usize {
        self.a.dim_out()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.a.apply(x);
        y.iter_mut().zip(self.b.apply(x)).for_each(|(p, q)| *p -= q);
        y
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.a.apply_adjoint(x);
        y.iter_mut().zip(self.b.apply_adjoint(x)).for_each(|(p, q)| *p -= q);
        y
    }
    fn descriptor(&self) -> String {
        format!("({}) - ({})", self.a.descriptor(), self.b.descriptor())
    }
}

/// The zero operator.
pub struct ZeroMap(pub usize);

impl LinearMap for ZeroMap {
    fn dim_in(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        vec![Complex64::default(); x.len()]
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        vec![Complex64::default(); x.len()]
    }
    fn descriptor(&self) -> String {
        "0".into()
    }
}
