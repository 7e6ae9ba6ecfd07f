//! Pole decomposition of steady and evolving MS fronts.
//!
//! A slope profile with `2n` complex poles,
//!
//! ```text
//! v(x) = −ε Σ_k cot((x − z_k)/2),
//! ```
//!
//! solves `εv″ − v v′ + I(v) = 0` when the poles are at rest under
//! `ż_j = −ε Σ_{l≠j} cot((z_j − z_l)/2) − i·sgn(Im z_j)`. Poles come in
//! conjugate pairs. With every pair on the line `Re z = 0` or `Re z = π` the
//! real parts stay fixed and the heights obey `ẏ_j = F_j`, a gradient ascent
//! of a pole Liapunov function.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeOptions};
use crate::phase_plane::{count_sign_changes, Sign};
use crate::spectral::{Grid, GridSpec, Parity, SpectralField};

/// Poles never get closer to the real axis than this.
pub const H_MIN: f64 = 1e-8;
/// Same-line heights closer than this count as a collision.
pub const SEPARATION_FLOOR: f64 = 1e-10;
/// Heights beyond this count as escape to infinity.
pub const DIVERGENCE_HEIGHT: f64 = 50.0;
/// Force level reached by the Newton polish.
pub const POLISH_TOL: f64 = 1e-12;
/// Lower end of the `ε` range of the catalog.
pub const CATALOG_EPSILON_MIN: f64 = 0.05;
const LINE_TOL: f64 = 1e-12;
const CLASSIFY_TOL: f64 = 1e-10;

/// One conjugate pair `line ± i·height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePair {
    pub line: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    pub epsilon: f64,
    pub pairs: Vec<PolePair>,
}

fn on_pi_line(line: f64) -> Option<bool> {
    if line.abs() < LINE_TOL {
        Some(false)
    } else if (line - PI).abs() < LINE_TOL {
        Some(true)
    } else {
        None
    }
}

impl PoleSet {
    pub fn new(epsilon: f64, pairs: Vec<PolePair>) -> Result<Self> {
        let s = Self { epsilon, pairs };
        s.validate()?;
        Ok(s)
    }

    /// Pairs on the line `Re z = 0` followed by pairs on `Re z = π`.
    pub fn two_line(epsilon: f64, heights_0: &[f64], heights_pi: &[f64]) -> Result<Self> {
        let pairs = heights_0
            .iter()
            .map(|&h| PolePair { line: 0.0, height: h })
            .chain(heights_pi.iter().map(|&h| PolePair { line: PI, height: h }))
            .collect();
        Self::new(epsilon, pairs)
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn heights(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.height).collect()
    }

    fn with_heights(&self, heights: &[f64]) -> Self {
        Self {
            epsilon: self.epsilon,
            pairs: self
                .pairs
                .iter()
                .zip(heights)
                .map(|(p, &h)| PolePair { line: p.line, height: h })
                .collect(),
        }
    }

    fn pi_flags(&self) -> Result<Vec<bool>> {
        self.pairs
            .iter()
            .map(|p| {
                on_pi_line(p.line).ok_or_else(|| {
                    Error::InvalidArgument(format!("pole line {} is neither 0 nor pi", p.line))
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.pairs.is_empty() {
            return Err(Error::InvalidArgument("a pole set needs at least one pair".into()));
        }
        for p in &self.pairs {
            if !(p.height > H_MIN) || !p.height.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "pole height {} must exceed {H_MIN:e}",
                    p.height
                )));
            }
        }
        let flags = self.pi_flags()?;
        check_separation(&self.heights(), &flags)
    }

    /// All `2n` poles, representatives first and then their conjugates.
    pub fn complex_poles(&self) -> Vec<Complex64> {
        let up = self.pairs.iter().map(|p| Complex64::new(p.line, p.height));
        let down = self.pairs.iter().map(|p| Complex64::new(p.line, -p.height));
        up.chain(down).collect()
    }
}

fn check_separation(heights: &[f64], pi: &[bool]) -> Result<()> {
    for i in 0..heights.len() {
        for l in i + 1..heights.len() {
            if pi[i] == pi[l] && (heights[i] - heights[l]).abs() < SEPARATION_FLOOR {
                return Err(Error::PoleCollision(format!(
                    "heights {} and {} on one line are closer than {SEPARATION_FLOOR:e}",
                    heights[i], heights[l]
                )));
            }
        }
    }
    Ok(())
}

/// Interaction of two poles a height `d` apart: `coth(d/2)` on one line,
/// `tanh(d/2)` across lines.
fn interaction(d: f64, same_line: bool) -> f64 {
    let t = (0.5 * d).tanh();
    if same_line {
        1.0 / t
    } else {
        t
    }
}

/// Derivative of [`interaction`] in `d`.
fn interaction_slope(d: f64, same_line: bool) -> f64 {
    if same_line {
        let s = (0.5 * d).sinh();
        -0.5 / (s * s)
    } else {
        let c = (0.5 * d).cosh();
        0.5 / (c * c)
    }
}

fn forces(epsilon: f64, y: &[f64], pi: &[bool], out: &mut [f64]) {
    let n = y.len();
    for j in 0..n {
        // the conjugate of pole j sits on its own line at −y_j
        let mut s = 1.0 / y[j].tanh();
        for l in 0..n {
            if l == j {
                continue;
            }
            let same = pi[j] == pi[l];
            s += interaction(y[j] - y[l], same) + interaction(y[j] + y[l], same);
        }
        out[j] = epsilon * s - 1.0;
    }
}

/// Height velocities `F_j` of the upper poles.
pub fn force_f(poles: &PoleSet) -> Result<Vec<f64>> {
    poles.validate()?;
    let pi = poles.pi_flags()?;
    let mut f = vec![0.0; poles.n()];
    forces(poles.epsilon, &poles.heights(), &pi, &mut f);
    Ok(f)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `ż_j = −ε Σ_{l≠j} cot((z_j − z_l)/2) − i·sgn(Im z_j)` for arbitrary poles.
pub fn complex_velocity(z: &[Complex64], epsilon: f64) -> Result<Vec<Complex64>> {
    for (j, a) in z.iter().enumerate() {
        if a.im == 0.0 {
            return Err(Error::InvalidArgument("poles must lie off the real axis".into()));
        }
        for b in &z[j + 1..] {
            if (a - b).norm() < SEPARATION_FLOOR {
                return Err(Error::PoleCollision(format!("poles {a} and {b} coincide")));
            }
        }
    }
    Ok(z.iter()
        .enumerate()
        .map(|(j, zj)| {
            let s: Complex64 = z
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != j)
                .map(|(_, zl)| {
                    let h = (zj - zl) * 0.5;
                    h.cos() / h.sin()
                })
                .sum();
            -s * epsilon - Complex64::new(0.0, zj.im.signum())
        })
        .collect())
}

fn log_interaction(d: f64, same_line: bool) -> f64 {
    let h = 0.5 * d.abs();
    // ln sinh h and ln cosh h without overflow
    let tail = (-2.0 * h).exp();
    if same_line {
        h + (-tail).ln_1p() - std::f64::consts::LN_2
    } else {
        h + tail.ln_1p() - std::f64::consts::LN_2
    }
}

/// `U = ε Σ_{j≠l} ln|ψ(y_j − y_l)| − Σ_j |y_j|` over ordered pairs of the
/// given poles, `ψ = sinh(·/2)` on one line and `cosh(·/2)` across lines.
///
/// Each entry of `poles` is `(on_pi_line, y)`, with `y` of either sign. The
/// gradient is `∂U/∂y_j = ε Σ_{l≠j} ψ′/ψ − sgn(y_j)`, the force on pole `j`.
pub fn liapunov_free(epsilon: f64, poles: &[(bool, f64)]) -> f64 {
    let mut u = 0.0;
    for (j, &(pj, yj)) in poles.iter().enumerate() {
        for (l, &(pl, yl)) in poles.iter().enumerate() {
            if l != j {
                u += epsilon * log_interaction(yj - yl, pj == pl);
            }
        }
        u -= yj.abs();
    }
    u
}

fn all_poles(pi: &[bool], y: &[f64]) -> Vec<(bool, f64)> {
    pi.iter()
        .zip(y)
        .map(|(&p, &h)| (p, h))
        .chain(pi.iter().zip(y).map(|(&p, &h)| (p, -h)))
        .collect()
}

/// Pole Liapunov function over all `2n` poles (both conjugates).
pub fn pole_liapunov(poles: &PoleSet) -> Result<f64> {
    poles.validate()?;
    let pi = poles.pi_flags()?;
    Ok(liapunov_free(poles.epsilon, &all_poles(&pi, &poles.heights())))
}

/// `∂F_i/∂y_j` in the representative heights.
fn jacobian(epsilon: f64, y: &[f64], pi: &[bool]) -> DMatrix<f64> {
    let n = y.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let s = y[i].sinh();
        let mut diag = -1.0 / (s * s);
        for l in 0..n {
            if l == i {
                continue;
            }
            let same = pi[i] == pi[l];
            let minus = interaction_slope(y[i] - y[l], same);
            let plus = interaction_slope(y[i] + y[l], same);
            diag += minus + plus;
            m[(i, l)] = epsilon * (plus - minus);
        }
        m[(i, i)] = epsilon * diag;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Maximum,
    Saddle,
    InconclusiveByGershgorin,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Maximum => "MAXIMUM",
            Classification::Saddle => "SADDLE",
            Classification::InconclusiveByGershgorin => "INCONCLUSIVE_BY_GERSHGORIN",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianReport {
    /// `∂F_i/∂y_j`, row-major.
    pub matrix: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `(center, radius)` per row.
    pub gershgorin: Vec<(f64, f64)>,
    pub classification: Classification,
    /// True when every Geršgorin interval lies in `(−∞, 0)`.
    pub gershgorin_certified: bool,
}

fn classify_matrix(m: &DMatrix<f64>) -> HessianReport {
    let n = m.nrows();
    let mut eig: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let gershgorin: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let r = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            (m[(i, i)], r)
        })
        .collect();
    let classification = if eig.iter().all(|&e| e < -CLASSIFY_TOL) {
        Classification::Maximum
    } else if eig.iter().any(|&e| e < -CLASSIFY_TOL) && eig.iter().any(|&e| e > CLASSIFY_TOL) {
        Classification::Saddle
    } else {
        Classification::InconclusiveByGershgorin
    };
    HessianReport {
        matrix: (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect(),
        eigenvalues: eig,
        gershgorin_certified: gershgorin.iter().all(|(c, r)| c + r < 0.0),
        gershgorin,
        classification,
    }
}

/// Hessian of the reduced Liapunov function at a steady configuration.
pub fn hessian_classify(poles: &PoleSet) -> Result<HessianReport> {
    let f = force_f(poles)?;
    if max_abs(&f) >= 1e-10 {
        return Err(Error::Precondition(format!(
            "hessian needs a steady configuration, |F| = {:e}",
            max_abs(&f)
        )));
    }
    let pi = poles.pi_flags()?;
    Ok(classify_matrix(&jacobian(poles.epsilon, &poles.heights(), &pi)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoleFlowReport {
    pub times: Vec<f64>,
    /// Heights at each sample.
    pub trajectory: Vec<Vec<f64>>,
    pub liapunov_values: Vec<f64>,
    /// `Σ F²` over all `2n` poles at each sample, the exact `dU/dt`.
    pub ascent_rates: Vec<f64>,
    pub final_force_norm: f64,
    pub converged: bool,
}

impl PoleFlowReport {
    /// Largest decrease of `U` between consecutive samples.
    pub fn max_dip(&self) -> f64 {
        self.liapunov_values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }
}

fn check_state(y: &[f64], pi: &[bool]) -> Result<()> {
    for &h in y {
        if !h.is_finite() || h > DIVERGENCE_HEIGHT {
            return Err(Error::PoleDivergence(format!(
                "height {h} escaped beyond {DIVERGENCE_HEIGHT}"
            )));
        }
        if h <= H_MIN {
            return Err(Error::PoleCollision(format!("height {h} reached the real axis")));
        }
    }
    check_separation(y, pi)
}

/// Newton iteration on `F = 0` with the analytic Jacobian.
fn polish(epsilon: f64, y: &mut [f64], pi: &[bool]) -> Result<f64> {
    let n = y.len();
    let mut f = vec![0.0; n];
    forces(epsilon, y, pi, &mut f);
    for _ in 0..50 {
        if max_abs(&f) < POLISH_TOL {
            break;
        }
        let j = jacobian(epsilon, y, pi);
        let step = j
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or_else(|| Error::Eigen("singular Jacobian during Newton polish".into()))?;
        for (yi, s) in y.iter_mut().zip(step.iter()) {
            *yi -= s;
        }
        check_state(y, pi)?;
        forces(epsilon, y, pi, &mut f);
    }
    Ok(max_abs(&f))
}

/// Integrates `ẏ = F(y)` until `‖F‖_∞ < tol` or `t_max`, then polishes the
/// end point with Newton's method.
pub fn flow_to_steady(poles: &PoleSet, t_max: f64, tol: f64) -> Result<(PoleSet, PoleFlowReport)> {
    poles.validate()?;
    let pi = poles.pi_flags()?;
    let eps = poles.epsilon;
    let pi_rhs = pi.clone();
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| forces(eps, y, &pi_rhs, dy);
    let opts = OdeOptions {
        rtol: 1e-10,
        atol: 1e-12,
        h_init: 1e-3,
        ..OdeOptions::default()
    };
    let mut solver = Dopri5::new(rhs, 0.0, &poles.heights(), opts);
    let mut report = PoleFlowReport {
        times: Vec::new(),
        trajectory: Vec::new(),
        liapunov_values: Vec::new(),
        ascent_rates: Vec::new(),
        final_force_norm: f64::INFINITY,
        converged: false,
    };
    let mut f = vec![0.0; poles.n()];
    let mut record = |t: f64, y: &[f64], report: &mut PoleFlowReport| -> f64 {
        forces(eps, y, &pi, &mut f);
        report.times.push(t);
        report.trajectory.push(y.to_vec());
        report.liapunov_values.push(liapunov_free(eps, &all_poles(&pi, y)));
        report.ascent_rates.push(2.0 * f.iter().map(|x| x * x).sum::<f64>());
        max_abs(&f)
    };
    let mut fnorm = record(0.0, solver.y(), &mut report);
    while fnorm >= tol && solver.t() < t_max {
        solver.step(Some(t_max))?;
        check_state(solver.y(), &pi)?;
        fnorm = record(solver.t(), solver.y(), &mut report);
    }
    let mut y = solver.y().to_vec();
    let pi = poles.pi_flags()?;
    let final_norm = if fnorm < tol {
        polish(eps, &mut y, &pi)?
    } else {
        // Near the window edge the steady heights grow like ½ln(1/(1−ε(2n−1)))
        // and the flow slows exponentially; Newton from the stalled point still
        // converges there, so accept it only when it does.
        let mut trial = y.clone();
        match polish(eps, &mut trial, &pi) {
            Ok(r) if r < POLISH_TOL => {
                y = trial;
                r
            }
            _ => fnorm,
        }
    };
    report.final_force_norm = final_norm;
    report.converged = final_norm < POLISH_TOL;
    Ok((poles.with_heights(&y), report))
}

const FLOW_T_MAX: f64 = 1e5;
const FLOW_TOL: f64 = 1e-8;

fn check_window(n_pairs: usize, epsilon: f64) -> Result<()> {
    if n_pairs == 0 || !(epsilon > 0.0) || epsilon * (2 * n_pairs - 1) as f64 >= 1.0 {
        return Err(Error::Window { n_pairs, epsilon });
    }
    Ok(())
}

fn line_value(sign: Sign) -> f64 {
    match sign {
        Sign::Plus => 0.0,
        Sign::Minus => PI,
    }
}

/// Steady state of the flow from the given start, all pairs on one line.
pub fn coalescent_from(epsilon: f64, line: f64, init: &[f64]) -> Result<(PoleSet, PoleFlowReport)> {
    let start = PoleSet::new(
        epsilon,
        init.iter().map(|&h| PolePair { line, height: h }).collect(),
    )?;
    let (mut out, report) = flow_to_steady(&start, FLOW_T_MAX, FLOW_TOL)?;
    if !report.converged {
        return Err(Error::Ode(format!(
            "coalescent flow stalled with |F| = {:e}",
            report.final_force_norm
        )));
    }
    out.pairs
        .sort_by(|a, b| a.height.total_cmp(&b.height));
    Ok((out, report))
}

/// The unique coalescent steady state with `n_pairs` pairs on `line`,
/// started from the ladder `y_j = 0.5·j`.
pub fn coalescent_steady(n_pairs: usize, epsilon: f64, line: f64) -> Result<PoleSet> {
    check_window(n_pairs, epsilon)?;
    on_pi_line(line)
        .ok_or_else(|| Error::InvalidArgument(format!("line {line} is neither 0 nor pi")))?;
    let init: Vec<f64> = (1..=n_pairs).map(|j| 0.5 * j as f64).collect();
    coalescent_from(epsilon, line, &init).map(|(p, _)| p)
}

/// Reruns the coalescent construction from a seeded random ladder and
/// returns the largest height difference to the deterministic result.
pub fn coalescent_uniqueness_gap(n_pairs: usize, epsilon: f64, seed: u64) -> Result<f64> {
    let base = coalescent_steady(n_pairs, epsilon, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init: Vec<f64> = Vec::with_capacity(n_pairs);
    let mut h = 0.0;
    for _ in 0..n_pairs {
        h += rng.random_range(0.1..1.5);
        init.push(h);
    }
    let (other, _) = coalescent_from(epsilon, 0.0, &init)?;
    Ok(base
        .heights()
        .iter()
        .zip(other.heights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Bi-coalescent steady state from the given heights (`n0` on line 0 then
/// `n_pi` on line π) and its Hessian classification.
pub fn bicoalescent_steady(
    n0: usize,
    n_pi: usize,
    epsilon: f64,
    init_heights: &[f64],
) -> Result<(PoleSet, HessianReport)> {
    if n0 == 0 || n_pi == 0 {
        return Err(Error::InvalidArgument("both lines need at least one pair".into()));
    }
    if init_heights.len() != n0 + n_pi {
        return Err(Error::LengthMismatch {
            expected: n0 + n_pi,
            got: init_heights.len(),
        });
    }
    let start = PoleSet::two_line(epsilon, &init_heights[..n0], &init_heights[n0..])?;
    let (out, report) = flow_to_steady(&start, FLOW_T_MAX, FLOW_TOL)?;
    if !report.converged {
        return Err(Error::Ode(format!(
            "bi-coalescent flow stalled with |F| = {:e}",
            report.final_force_norm
        )));
    }
    let h = hessian_classify(&out)?;
    Ok((out, h))
}

/// Sine coefficients of the slope profile of `poles`:
/// `b_m = −4ε Σ_pairs e^{−m y} cos(m·line)`.
pub fn profile_coefficients(poles: &PoleSet, n_modes: usize) -> Vec<f64> {
    let mut b = vec![0.0; n_modes];
    for p in &poles.pairs {
        let flip = on_pi_line(p.line) == Some(true);
        for (m, c) in b.iter_mut().enumerate().skip(1) {
            let s = if flip && m % 2 == 1 { -1.0 } else { 1.0 };
            *c -= 4.0 * poles.epsilon * s * (-(m as f64) * p.height).exp();
        }
    }
    b
}

/// Slope profile on the grid from the pairwise closed form
/// `cot((x−a−iy)/2) + cot((x−a+iy)/2) = 2 sin(x−a)/(cosh y − cos(x−a))`.
pub fn profile_from_poles(poles: &PoleSet, grid: &Arc<Grid>) -> Result<SpectralField> {
    poles.validate()?;
    let values: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| {
            poles
                .pairs
                .iter()
                .map(|p| {
                    let s = x - p.line;
                    -poles.epsilon * 2.0 * s.sin() / (p.height.cosh() - s.cos())
                })
                .sum()
        })
        .collect();
    let mut f = SpectralField::from_values(grid, Parity::Odd, &values)?;
    if f.values()[0] != 0.0 {
        f = SpectralField::from_coeffs(grid, Parity::Odd, f.into_coeffs());
    }
    Ok(f)
}

/// `max |εv″ − v v′ + I(v)|` over interior points, product dealiased.
pub fn ms_residual(v: &SpectralField, epsilon: f64) -> Result<f64> {
    let d1 = v.derivative_n(1);
    let d2 = v.derivative_n(2);
    let nl = v.product(&d1)?.dealiased();
    let r = d2.scale(epsilon).sub(&nl)?.add(&v.dl_operator())?;
    let n = r.values().len();
    Ok(r.values()[1..n - 1].iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// The profile `v(kx)` built from a steady state at `kε`; it is steady at `ε`
/// and carries `2k` copies of the base poles, shrunk by `1/k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaledProfile {
    pub k: usize,
    pub base: PoleSet,
}

impl RescaledProfile {
    pub fn new(base: PoleSet, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("rescaling factor must be positive".into()));
        }
        let f = force_f(&base)?;
        if max_abs(&f) >= 1e-10 {
            return Err(Error::Precondition(format!(
                "base configuration is not steady, |F| = {:e}",
                max_abs(&f)
            )));
        }
        Ok(Self { k, base })
    }

    /// `ε` at which the rescaled profile is steady.
    pub fn epsilon(&self) -> f64 {
        self.base.epsilon / self.k as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let kx = self.k as f64 * x;
        self.base
            .pairs
            .iter()
            .map(|p| {
                let s = kx - p.line;
                -self.base.epsilon * 2.0 * s.sin() / (p.height.cosh() - s.cos())
            })
            .sum()
    }

    /// Sine series: mode `m` of the base moves to mode `k·m`.
    pub fn field(&self, grid: &Arc<Grid>) -> SpectralField {
        let n = grid.n_modes();
        let base = profile_coefficients(&self.base, n.div_ceil(self.k));
        let mut c = vec![0.0; n];
        for (m, b) in base.iter().enumerate() {
            if m * self.k < n {
                c[m * self.k] = *b;
            }
        }
        SpectralField::from_coeffs(grid, Parity::Odd, c)
    }

    /// Heights of the rescaled poles.
    pub fn heights(&self) -> Vec<f64> {
        let k = self.k as f64;
        self.base.pairs.iter().map(|p| p.height / k).collect()
    }
}

pub fn rescale_solution(base: PoleSet, k: usize) -> Result<RescaledProfile> {
    RescaledProfile::new(base, k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    /// Pairs per line copy in the base coalescent state.
    pub j: usize,
    pub k: usize,
    pub sign: Sign,
    /// Total number of poles, conjugates included.
    pub n_poles: usize,
    /// Heights of the rescaled pairs within one copy.
    pub heights: Vec<f64>,
    pub delta_phi: f64,
    pub velocity: f64,
    pub residual: f64,
    pub classification: Classification,
}

/// Largest `m` with `x(2m−1) < 1`; zero if there is none. This is the `m`
/// of the window `1/(2m+1) ≤ x < 1/(2m−1)`.
pub fn window_index(x: f64) -> usize {
    if !(x > 0.0) || x >= 1.0 {
        return 0;
    }
    let mut m = ((1.0 / x + 1.0) / 2.0).floor() as usize;
    while m > 0 && x * (2 * m - 1) as f64 >= 1.0 {
        m -= 1;
    }
    while x * ((2 * m + 1) as f64) < 1.0 {
        m += 1;
    }
    m
}

/// `2 Σ_{m=1}^{n} ⌊2n/(2m−1)⌋`.
pub fn catalog_count_formula(n: usize) -> usize {
    2 * (1..=n).map(|m| (2 * n) / (2 * m - 1)).sum::<usize>()
}

/// All coalescent and rescaled solutions at `ε`: for every `k` with
/// `kε < 1` and every `j ≤ window_index(kε)`, the `j`-pair coalescent state
/// at `kε` rescaled by `k`, on either line.
pub fn enumerate_family(epsilon: f64, spec: GridSpec) -> Result<Vec<CatalogEntry>> {
    if !(epsilon > CATALOG_EPSILON_MIN && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "catalog epsilon {epsilon} outside ({CATALOG_EPSILON_MIN}, 1)"
        )));
    }
    let grid = Grid::new(spec)?;
    let mut bases = Vec::new();
    let mut k = 1;
    while (k as f64) * epsilon < 1.0 {
        for j in 1..=window_index(k as f64 * epsilon) {
            bases.push((j, k));
        }
        k += 1;
    }
    let entries: Vec<Vec<CatalogEntry>> = bases
        .par_iter()
        .map(|&(j, k)| -> Result<Vec<CatalogEntry>> {
            let ke = k as f64 * epsilon;
            let base = coalescent_steady(j, ke, 0.0)?;
            let classification = hessian_classify(&base)?.classification;
            [Sign::Plus, Sign::Minus]
                .into_iter()
                .map(|sign| {
                    let mut b = base.clone();
                    for p in &mut b.pairs {
                        p.line = line_value(sign);
                    }
                    let r = RescaledProfile::new(b, k)?;
                    let v = r.field(&grid);
                    let theta = v.antiderivative().into_field()?;
                    let t = theta.values();
                    let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
                    Ok(CatalogEntry {
                        j,
                        k,
                        sign,
                        n_poles: 2 * j * k,
                        heights: r.heights(),
                        delta_phi: hi - lo,
                        velocity: ms_velocity(&v),
                        residual: ms_residual(&v, epsilon)?,
                        classification,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(entries.into_iter().flatten().collect())
}

/// Front velocity `−½·mean(v²)` of a steady MS slope profile.
pub fn ms_velocity(v: &SpectralField) -> f64 {
    -0.25 * v.coeffs().iter().map(|b| b * b).sum::<f64>()
}

/// Interior zeros of a sampled profile.
pub fn interior_zeros(v: &SpectralField) -> usize {
    count_sign_changes(v.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(eps: f64, y: f64) -> PoleSet {
        PoleSet::two_line(eps, &[y], &[]).unwrap()
    }

    #[test]
    fn single_pair_force() {
        let f = force_f(&single(0.3, 0.7)).unwrap();
        assert_abs_diff_eq!(f[0], 0.3 / 0.7f64.tanh() - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn opposite_lines_force() {
        let y = 0.4;
        let f = force_f(&PoleSet::two_line(0.2, &[y], &[y]).unwrap()).unwrap();
        let expect = 2.0 * 0.2 / (2.0 * y).tanh() - 1.0;
        assert_abs_diff_eq!(f[0], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(f[1], expect, epsilon = 1e-14);
    }

    #[test]
    fn complex_velocity_matches_force() {
        let p = PoleSet::two_line(0.25, &[0.3, 0.9], &[0.5]).unwrap();
        let z = p.complex_poles();
        let w = complex_velocity(&z, 0.25).unwrap();
        let f = force_f(&p).unwrap();
        for j in 0..3 {
            assert!(w[j].re.abs() < 1e-12);
            assert_abs_diff_eq!(w[j].im, f[j], epsilon = 1e-12);
            // conjugates move as conjugates
            assert_abs_diff_eq!(w[j + 3].im, -f[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_identity() {
        let eps = 0.2;
        let poles = vec![(false, 0.4), (false, 1.1), (true, 0.7), (false, -0.4), (false, -1.1), (true, -0.7)];
        let p = PoleSet::two_line(eps, &[0.4, 1.1], &[0.7]).unwrap();
        let f = force_f(&p).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let (mut a, mut b) = (poles.clone(), poles.clone());
            a[j].1 += h;
            b[j].1 -= h;
            let g = (liapunov_free(eps, &a) - liapunov_free(eps, &b)) / (2.0 * h);
            assert_abs_diff_eq!(g, f[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn single_pair_steady_and_hessian() {
        let (s, rep) = flow_to_steady(&single(0.2, 1.0), 1e4, 1e-8).unwrap();
        assert!(rep.converged);
        let y = s.pairs[0].height;
        assert_abs_diff_eq!(y, 0.2f64.atanh(), epsilon = 1e-10);
        assert!(rep.max_dip() <= 1e-10);
        let h = hessian_classify(&s).unwrap();
        assert_abs_diff_eq!(h.eigenvalues[0], -0.2 / y.sinh().powi(2), epsilon = 1e-9);
        assert_eq!(h.classification, Classification::Maximum);
    }

    #[test]
    fn liapunov_peaks_at_single_pair_steady() {
        let eps: f64 = 0.2;
        let ystar: f64 = 0.2f64.atanh();
        let u = |y: f64| pole_liapunov(&single(eps, y)).unwrap();
        let best = (1..5000)
            .map(|i| i as f64 * 1e-3)
            .max_by(|a, b| u(*a).total_cmp(&u(*b)))
            .unwrap();
        assert!((best - ystar).abs() < 1e-3);
    }

    #[test]
    fn equal_heights_across_lines() {
        let (s, h) = bicoalescent_steady(1, 1, 0.2, &[0.5, 0.5]).unwrap();
        for p in &s.pairs {
            assert_abs_diff_eq!(p.height, 0.5 * 0.4f64.atanh(), epsilon = 1e-10);
        }
        // reduced eigenvalues ε(sech²y − csch²y) and ε(1 − csch²y)
        let y = s.pairs[0].height;
        let mut expect = [
            0.2 * (1.0 / y.cosh().powi(2) - 1.0 / y.sinh().powi(2)),
            0.2 * (1.0 - 1.0 / y.sinh().powi(2)),
        ];
        expect.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn coalescent_pair_is_unique_maximum() {
        let p = coalescent_steady(2, 0.25, 0.0).unwrap();
        assert!(max_abs(&force_f(&p).unwrap()) < 1e-12);
        assert!(coalescent_uniqueness_gap(2, 0.25, 7).unwrap() < 1e-8);
        let h = hessian_classify(&p).unwrap();
        assert_eq!(h.classification, Classification::Maximum);
        assert!(h.gershgorin_certified);
        assert!(matches!(coalescent_steady(2, 0.5, 0.0), Err(Error::Window { .. })));
    }

    #[test]
    fn profile_closed_form_and_series_agree() {
        let g = Grid::with_modes(64).unwrap();
        let p = PoleSet::two_line(0.2, &[0.6], &[0.9]).unwrap();
        let v = profile_from_poles(&p, &g).unwrap();
        let b = profile_coefficients(&p, 64);
        for (a, c) in v.coeffs().iter().zip(&b) {
            assert_abs_diff_eq!(*a, *c, epsilon = 1e-13);
        }
        assert_eq!(v.values()[0], 0.0);
        assert!(v.values()[128].abs() < 1e-14);
        // odd about the pole line
        let single = profile_from_poles(&single(0.2, 0.6), &g).unwrap();
        assert_abs_diff_eq!(single.eval(0.3), -single.eval(-0.3), epsilon = 1e-13);
        let far = profile_from_poles(&PoleSet::two_line(0.2, &[40.0], &[]).unwrap(), &g).unwrap();
        assert!(far.max_abs() < 1e-15);
    }

    #[test]
    fn steady_profiles_solve_the_ms_equation() {
        let g = Grid::with_modes(256).unwrap();
        let p = coalescent_steady(1, 0.2, 0.0).unwrap();
        let v = profile_from_poles(&p, &g).unwrap();
        assert!(ms_residual(&v, 0.2).unwrap() < 1e-8);
        let r = rescale_solution(coalescent_steady(1, 0.4, 0.0).unwrap(), 2).unwrap();
        let v2 = r.field(&g);
        assert!(ms_residual(&v2, 0.2).unwrap() < 1e-8);
        assert_eq!(interior_zeros(&v2), 1);
        assert_eq!(ms_residual(&SpectralField::zeros(&g, Parity::Odd), 0.2).unwrap(), 0.0);
    }

    #[test]
    fn rescaled_matches_equal_height_pair() {
        let g = Grid::with_modes(256).unwrap();
        let r = rescale_solution(coalescent_steady(1, 0.4, 0.0).unwrap(), 2).unwrap();
        let (bi, _) = bicoalescent_steady(1, 1, 0.2, &[0.5, 0.5]).unwrap();
        let vb = profile_from_poles(&bi, &g).unwrap();
        let vr = r.field(&g);
        for (a, b) in vb.values().iter().zip(vr.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
        for &x in &[0.1, 0.7, 2.9] {
            assert_abs_diff_eq!(r.eval(x), vr.eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn window_and_count() {
        assert_eq!(window_index(0.34), 1);
        assert_eq!(window_index(0.25), 2);
        assert_eq!(window_index(0.2), 2);
        assert_eq!(window_index(1.0), 0);
        assert_eq!(catalog_count_formula(1), 4);
        assert_eq!(catalog_count_formula(2), 10);
        assert_eq!(catalog_count_formula(3), 18);
    }

    #[test]
    fn catalog_sizes() {
        let spec = GridSpec::new(64);
        assert_eq!(enumerate_family(0.34, spec).unwrap().len(), 4);
        assert_eq!(enumerate_family(0.6, spec).unwrap().len(), 2);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(PoleSet::two_line(0.2, &[0.5, 0.5], &[]).is_err());
        assert!(PoleSet::two_line(0.2, &[0.0], &[]).is_err());
        assert!(PoleSet::new(0.2, vec![PolePair { line: 1.0, height: 0.3 }]).is_err());
        assert!(hessian_classify(&single(0.2, 1.0)).is_err());
    }

    #[test]
    fn coalescent_state_near_window_edge() {
        // the flow alone stalls here; the Newton fallback must finish the job
        for eps in [0.9999999, 1.0 - f64::EPSILON] {
            let p = coalescent_steady(1, eps, 0.0).unwrap();
            assert!(max_abs(&force_f(&p).unwrap()) < POLISH_TOL, "eps {eps}");
        }
        assert!(enumerate_family(0.49999999999999994, GridSpec::new(64)).is_ok());
    }
}
