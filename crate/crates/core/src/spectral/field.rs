use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::{Grid, Parity};

/// Run length used by [`SpectralField::denoised`].
pub const NOISE_WINDOW: usize = 16;

/// Direction argument of [`transform`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Input slice holds physical samples.
    ToSpectral,
    /// Input slice holds half-range coefficients.
    ToPhysical,
}

/// A real function on `[0, π]` stored both as half-range coefficients and as
/// samples on the collocation grid. The two representations are kept
/// consistent: samples are always synthesised from the stored coefficients.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    parity: Parity,
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

/// Builds a field from samples or coefficients.
pub fn transform(
    grid: &Arc<Grid>,
    data: &[f64],
    direction: Direction,
    parity: Parity,
    dealias: bool,
) -> Result<SpectralField> {
    let field = match direction {
        Direction::ToSpectral => SpectralField::from_values(grid, parity, data)?,
        Direction::ToPhysical => {
            if data.len() > grid.n_modes() {
                return Err(Error::LengthMismatch {
                    expected: grid.n_modes(),
                    got: data.len(),
                });
            }
            SpectralField::from_coeffs(grid, parity, data.to_vec())
        }
    };
    Ok(if dealias { field.dealiased() } else { field })
}

impl SpectralField {
    pub fn from_values(grid: &Arc<Grid>, parity: Parity, values: &[f64]) -> Result<Self> {
        let coeffs = grid.analyze(values, parity)?;
        Ok(Self::from_coeffs(grid, parity, coeffs))
    }

    /// Coefficients beyond `n_modes` are rejected; shorter inputs are padded.
    pub fn from_coeffs(grid: &Arc<Grid>, parity: Parity, mut coeffs: Vec<f64>) -> Self {
        assert!(
            coeffs.len() <= grid.n_modes(),
            "{} coefficients exceed n_modes = {}",
            coeffs.len(),
            grid.n_modes()
        );
        coeffs.resize(grid.n_modes(), 0.0);
        if parity == Parity::Odd {
            coeffs[0] = 0.0;
        }
        let values = grid.synthesize(&coeffs, parity);
        Self {
            grid: Arc::clone(grid),
            parity,
            coeffs,
            values,
        }
    }

    /// Samples `f(x_i)` of a closure on the grid.
    pub fn from_fn(grid: &Arc<Grid>, parity: Parity, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.points().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, parity, &values)
    }

    pub fn zeros(grid: &Arc<Grid>, parity: Parity) -> Self {
        Self::from_coeffs(grid, parity, Vec::new())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn map_coeffs(&self, parity: Parity, f: impl Fn(usize, f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(k, &c)| f(k, c)).collect();
        Self::from_coeffs(&self.grid, parity, coeffs)
    }

    /// Zeroes every mode at or above the dealiasing cutoff.
    pub fn dealiased(&self) -> Self {
        let cutoff = self.grid.spec().dealias_cutoff();
        self.map_coeffs(self.parity, |k, c| if k >= cutoff { 0.0 } else { c })
    }

    /// Drops the trailing coefficients once they fall below
    /// `rel_floor · max|c_k|`. Used before taking high derivatives of fields
    /// that carry sampling noise in their tail.
    pub fn filtered(&self, rel_floor: f64) -> Self {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let floor = rel_floor * max;
        let last = self
            .coeffs
            .iter()
            .rposition(|c| c.abs() > floor)
            .unwrap_or(0);
        self.map_coeffs(self.parity, |k, c| if k > last { 0.0 } else { c })
    }

    /// Cuts the series at the first mode from which a run of
    /// [`NOISE_WINDOW`] consecutive coefficients all stay below
    /// `rel_floor · max|c_k|`.
    ///
    /// Unlike [`filtered`](Self::filtered) this also removes a flat noise
    /// plateau sitting just above the floor, and the window tolerates the
    /// vanishing modes of profiles with a shorter period.
    pub fn denoised(&self, rel_floor: f64) -> Self {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let floor = rel_floor * max;
        let n = self.coeffs.len();
        let cut = (1..n)
            .find(|&k| {
                self.coeffs[k..(k + NOISE_WINDOW).min(n)]
                    .iter()
                    .all(|c| c.abs() <= floor)
            })
            .unwrap_or(n);
        self.map_coeffs(self.parity, |k, c| if k >= cut { 0.0 } else { c })
    }

    /// Exact mode-wise derivative of order 1 or 2.
    ///
    /// The first derivative flips parity: `cos(kx) -> -k sin(kx)` and
    /// `sin(kx) -> k cos(kx)`.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        match order {
            1 | 2 => Ok(self.derivative_n(order)),
            _ => Err(Error::InvalidArgument(format!(
                "derivative order must be 1 or 2, got {order}"
            ))),
        }
    }

    /// Mode-wise derivative of any order.
    pub fn derivative_n(&self, order: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..order {
            out = match out.parity {
                Parity::Even => out.map_coeffs(Parity::Odd, |k, a| -(k as f64) * a),
                Parity::Odd => out.map_coeffs(Parity::Even, |k, b| k as f64 * b),
            };
        }
        out
    }

    /// Multiplication by `|k|` in mode space; the `k = 0` mode is annihilated.
    pub fn dl_operator(&self) -> Self {
        self.map_coeffs(self.parity, |k, c| k as f64 * c)
    }

    /// Sets the `k = 0` coefficient to zero. Sine fields have no such mode
    /// and are returned unchanged.
    pub fn remove_mean(&self) -> Self {
        match self.parity {
            Parity::Even => self.map_coeffs(Parity::Even, |k, a| if k == 0 { 0.0 } else { a }),
            Parity::Odd => self.clone(),
        }
    }

    /// Spatial average `(1/π)∫₀^π f dx`.
    pub fn mean(&self) -> f64 {
        match self.parity {
            Parity::Even => self.coeffs[0],
            Parity::Odd => self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .step_by(2)
                .map(|(k, b)| 2.0 * b / (PI * k as f64))
                .sum(),
        }
    }

    /// Primitive `F` with `F(0) = 0` and `F' = f`.
    pub fn antiderivative(&self) -> Primitive {
        match self.parity {
            Parity::Even => {
                let sine = self.map_coeffs(Parity::Odd, |k, a| if k == 0 { 0.0 } else { a / k as f64 });
                Primitive {
                    ramp: self.coeffs[0],
                    field: sine,
                }
            }
            Parity::Odd => {
                let shift: f64 = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, b)| b / k as f64)
                    .sum();
                let cosine = self.map_coeffs(Parity::Even, |k, b| {
                    if k == 0 {
                        shift
                    } else {
                        -b / k as f64
                    }
                });
                Primitive {
                    ramp: 0.0,
                    field: cosine,
                }
            }
        }
    }

    /// `(∫₀^π f² + f'² dx)^{1/2}` by Parseval.
    pub fn h1_norm(&self) -> f64 {
        let mut sum = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let kk = (k * k) as f64;
            sum += if k == 0 {
                PI * c * c
            } else {
                0.5 * PI * (1.0 + kk) * c * c
            };
        }
        sum.sqrt()
    }

    /// `(∫₀^π f² dx)^{1/2}` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k == 0 { PI * c * c } else { 0.5 * PI * c * c })
            .sum();
        sum.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise product on the grid, truncated back to `n_modes`.
    ///
    /// With `n_points >= 2·n_modes` the product of two retained expansions is
    /// resolved on the grid, so the retained coefficients are exact.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_values(&self.grid, self.parity.product(other.parity), &values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0, -1.0)
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, other: &Self, alpha: f64, beta: f64) -> Result<Self> {
        self.same_grid(other)?;
        if self.parity != other.parity {
            return Err(Error::InvalidArgument(
                "cannot combine fields of different parity".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self::from_coeffs(&self.grid, self.parity, coeffs))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_coeffs(self.parity, |_, c| factor * c)
    }

    /// Re-expresses the field on another grid, truncating or zero-padding
    /// the coefficient list.
    pub fn resample(&self, grid: &Arc<Grid>) -> Self {
        let n = grid.n_modes().min(self.coeffs.len());
        Self::from_coeffs(grid, self.parity, self.coeffs[..n].to_vec())
    }

    /// Evaluates the series at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivatives::<1>(x)[0]
    }

    /// `[f, f', ..., f^{(D-1)}]` at `x`, summed directly from the series.
    pub fn eval_derivatives<const D: usize>(&self, x: f64) -> [f64; D] {
        let mut out = [0.0; D];
        let (s1, c1) = x.sin_cos();
        // cos(kx), sin(kx) by the angle-addition recurrence
        let (mut ck, mut sk) = (1.0_f64, 0.0_f64);
        for (k, &a) in self.coeffs.iter().enumerate() {
            if a != 0.0 {
                let kf = k as f64;
                let mut pow = 1.0;
                for (d, slot) in out.iter_mut().enumerate() {
                    // d-th derivative of cos(kx) cycles cos, -sin, -cos, sin
                    let basis = match (self.parity, d % 4) {
                        (Parity::Even, 0) => ck,
                        (Parity::Even, 1) => -sk,
                        (Parity::Even, 2) => -ck,
                        (Parity::Even, _) => sk,
                        (Parity::Odd, 0) => sk,
                        (Parity::Odd, 1) => ck,
                        (Parity::Odd, 2) => -sk,
                        (Parity::Odd, _) => -ck,
                    };
                    *slot += a * pow * basis;
                    pow *= kf;
                }
            }
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
        }
        out
    }
}

/// Primitive `F(x) = ramp·x + field(x)` of a half-range series.
#[derive(Clone, Debug)]
pub struct Primitive {
    pub ramp: f64,
    pub field: SpectralField,
}

impl Primitive {
    pub fn values(&self) -> Vec<f64> {
        self.field
            .grid()
            .points()
            .iter()
            .zip(self.field.values())
            .map(|(x, f)| self.ramp * x + f)
            .collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ramp * x + self.field.eval(x)
    }

    /// The primitive as a cosine field; only possible when there is no ramp
    /// (the integrand was a sine field).
    pub fn into_field(self) -> Result<SpectralField> {
        if self.ramp != 0.0 {
            return Err(Error::InvalidArgument(
                "primitive carries a linear ramp and is not a cosine series".into(),
            ));
        }
        Ok(self.field)
    }
}
