//! Collocation grid on `[0, π]` and the cosine/sine transforms behind it.
//!
//! Samples on `x_i = iπ/(n_points-1)` are extended to the full period
//! `[-π, π)` (evenly for cosine fields, oddly for sine fields) and pushed
//! through a complex FFT of length `2(n_points-1)`. The even extension makes
//! the Neumann walls structural and the odd extension makes Dirichlet walls
//! structural.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_N_MODES: usize = 256;
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Discretisation parameters of the channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_modes: usize,
    pub n_points: usize,
    pub dealias_fraction: f64,
}

impl GridSpec {
    /// Grid with `n_points = 2·n_modes + 1`, which makes the FFT length a
    /// power of two whenever `n_modes` is.
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            n_points: 2 * n_modes + 1,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
        }
    }

    pub fn with_points(n_modes: usize, n_points: usize) -> Self {
        Self {
            n_modes,
            n_points,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidGrid("n_modes must be positive".into()));
        }
        if self.n_points < 2 * self.n_modes {
            return Err(Error::InvalidGrid(format!(
                "n_points = {} must be at least 2*n_modes = {}",
                self.n_points,
                2 * self.n_modes
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction = {} must lie in (0, 1]",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// First mode index removed by dealiasing.
    pub fn dealias_cutoff(&self) -> usize {
        ((self.dealias_fraction * self.n_modes as f64) + 1e-9).floor() as usize
    }

    pub fn spacing(&self) -> f64 {
        PI / (self.n_points - 1) as f64
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::new(DEFAULT_N_MODES)
    }
}

/// Which half-range series a field is expanded in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    /// `Σ a_k cos(kx)`, zero slope at the walls.
    Even,
    /// `Σ b_k sin(kx)`, zero value at the walls.
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn product(self, other: Self) -> Self {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A validated grid together with its FFT plans. Shared behind an `Arc`.
pub struct Grid {
    spec: GridSpec,
    x: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let intervals = spec.n_points - 1;
        let h = PI / intervals as f64;
        let x = (0..spec.n_points)
            .map(|i| if i == intervals { PI } else { i as f64 * h })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(2 * intervals);
        let inverse = planner.plan_fft_inverse(2 * intervals);
        Ok(Arc::new(Self {
            spec,
            x,
            forward,
            inverse,
        }))
    }

    pub fn with_modes(n_modes: usize) -> Result<Arc<Self>> {
        Self::new(GridSpec::new(n_modes))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.spec.n_points
    }

    /// Collocation points `x_i = iπ/(n_points-1)`.
    pub fn points(&self) -> &[f64] {
        &self.x
    }

    fn intervals(&self) -> usize {
        self.spec.n_points - 1
    }

    /// Physical samples to the first `n_modes` half-range coefficients.
    pub fn analyze(&self, values: &[f64], parity: Parity) -> Result<Vec<f64>> {
        if values.len() != self.spec.n_points {
            return Err(Error::LengthMismatch {
                expected: self.spec.n_points,
                got: values.len(),
            });
        }
        let l = self.intervals();
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * l];
        match parity {
            Parity::Even => {
                for (m, &v) in values.iter().enumerate() {
                    buf[m].re = v;
                }
                for m in 1..l {
                    buf[2 * l - m].re = values[m];
                }
            }
            Parity::Odd => {
                for m in 1..l {
                    buf[m].re = values[m];
                    buf[2 * l - m].re = -values[m];
                }
            }
        }
        self.forward.process(&mut buf);
        let scale = 1.0 / l as f64;
        let n = self.spec.n_modes;
        let mut coeffs = vec![0.0; n];
        match parity {
            Parity::Even => {
                for (k, c) in coeffs.iter_mut().enumerate() {
                    let half = k == 0 || k == l;
                    *c = buf[k].re * scale * if half { 0.5 } else { 1.0 };
                }
            }
            Parity::Odd => {
                for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
                    if k < l {
                        *c = -buf[k].im * scale;
                    }
                }
            }
        }
        Ok(coeffs)
    }

    /// Half-range coefficients (any length up to `n_points-1`) to samples.
    pub fn synthesize(&self, coeffs: &[f64], parity: Parity) -> Vec<f64> {
        let l = self.intervals();
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * l];
        match parity {
            Parity::Even => {
                for (k, &a) in coeffs.iter().enumerate().take(l + 1) {
                    if k == 0 {
                        buf[0].re = 2.0 * a;
                    } else if k == l {
                        buf[l].re = 2.0 * a;
                    } else {
                        buf[k].re = a;
                        buf[2 * l - k].re = a;
                    }
                }
            }
            Parity::Odd => {
                for (k, &b) in coeffs.iter().enumerate().take(l).skip(1) {
                    buf[k].im = -b;
                    buf[2 * l - k].im = b;
                }
            }
        }
        self.inverse.process(&mut buf);
        let mut out: Vec<f64> = buf[..=l].iter().map(|c| 0.5 * c.re).collect();
        if parity == Parity::Odd {
            out[0] = 0.0;
            out[l] = 0.0;
        }
        out
    }
}
