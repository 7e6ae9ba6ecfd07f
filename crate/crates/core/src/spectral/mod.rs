//! Fields on the channel `[0, π]` with adiabatic walls.
//!
//! A field is stored as a half-range Fourier series together with its samples
//! on a uniform grid that includes both walls. Cosine (even) fields satisfy
//! the Neumann condition exactly, sine (odd) fields the Dirichlet condition.
//! Derivatives, the `|k|` multiplier and primitives act diagonally on the
//! coefficients.

mod field;
mod grid;

pub use field::{transform, Direction, Primitive, SpectralField};
pub use grid::{Grid, GridSpec, Parity, DEFAULT_DEALIAS_FRACTION, DEFAULT_N_MODES};

/// Composite trapezoid rule on the grid samples. For smooth fields whose even
/// or odd `2π`-periodic extension is smooth this is spectrally accurate.
pub fn trapezoid(grid: &Grid, values: &[f64]) -> f64 {
    let n = values.len();
    debug_assert_eq!(n, grid.n_points());
    let h = grid.spec().spacing();
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}
