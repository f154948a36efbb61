//! Periodic Fourier-spectral grids and the matrix-free operator toolkit.

mod fft;
pub(crate) mod field;
mod grid;
mod lanczos;
mod maps;
mod norm_est;
mod projectors;
mod solve;

pub use fft::FourierTransform;
pub use field::{dot, norm, norm_sq, Field};
pub use grid::{Grid, DEFAULT_NODE_CAP};
pub use lanczos::{lanczos_extreme, Extreme, LanczosOptions, RitzPair};
pub use maps::{
    apply_resolvent, build_laplacian, build_laplacian_with, closure_map, self_adjoint_fn, ClosureMap, Composition,
    Difference, FnMap, FourierMultiplier, Laplacian, LinearMap, Multiplication, SelfAdjointFn, ZeroMap,
};
pub use norm_est::{operator_norm, NormEstimate, NormOptions};
pub use projectors::{antisymmetrize, parity_project_odd, signed_permutations, Antisymmetrizer, OddProjector};
pub use solve::{solve_shifted, SolveOptions, SolveReport};
