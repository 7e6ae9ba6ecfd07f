//! Steady states of the derivative equation through its planar system.
//!
//! A steady `u = v` solves `εv″ − v v′ + v = 0`. With `w = v′` and `p = v`
//! this becomes
//!
//! ```text
//! w′ = p (w − 1) / ε,   p′ = w,
//! ```
//!
//! whose orbits through `(w0, 0)` are closed for `0 < w0 < 1`. A solution
//! with `v(0) = v(π) = 0` and `j − 1` interior zeros is an orbit whose
//! period equals `2π/j`.
//!
//! The branches approach `w0 = 1` exponentially fast as `ε` decreases
//! (`1 − w0` is below `1e−16` long before `ε = 0.1`), so orbits are
//! integrated in the coordinate `q = −ln(1 − w)`:
//!
//! ```text
//! q′ = −p / ε,   p′ = 1 − e^{−q},
//! ```
//!
//! which is smooth and keeps the orbit label `q0` resolvable where `w0`
//! has already rounded to one.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{locate_crossing, Dopri5, OdeOptions};
use crate::spectral::{Grid, GridSpec, Parity, SpectralField};
use crate::stability::{comparison_test, Verdict, PROFILE_TOLERANCE};

/// Lower end of the supported `ε` range for steady states.
pub const EPSILON_MIN: f64 = 0.02;
const Q0_LO: f64 = 1e-8;
/// Largest orbit label tried before a branch is declared out of range.
const Q0_MAX: f64 = 1e4;
const EVENT_TOL: f64 = 1e-14;
/// Relative coefficient level below which a steady profile's tail is noise.
pub const STEADY_NOISE_FLOOR: f64 = 1e-15;

fn orbit_options() -> OdeOptions {
    OdeOptions {
        h_init: 1e-4,
        ..OdeOptions::tight()
    }
}

fn rhs(epsilon: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    move |_x, y, dy| {
        dy[0] = -y[1] / epsilon;
        dy[1] = -(-y[0]).exp_m1();
    }
}

/// `q = −ln(1 − w)`.
pub fn log_gap(w: f64) -> f64 {
    -(-w).ln_1p()
}

/// `w = 1 − e^{−q}`.
pub fn slope_from_log_gap(q: f64) -> f64 {
    -(-q).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub s: f64,
    pub w: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub epsilon: f64,
    pub w0: f64,
    /// Orbit label `q0 = −ln(1 − w0)`.
    pub q0: f64,
    pub period: f64,
    /// Durations of the quarters split at `w = 0` and `p = 0`.
    pub quarters: [f64; 4],
    /// Turning value of `w` on the far side of the orbit.
    pub w_min: f64,
}

fn check_orbit_args(epsilon: f64, w0: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if w0 >= 1.0 {
        return Err(Error::OpenOrbit { w0 });
    }
    if !(w0 > 0.0) {
        return Err(Error::InvalidArgument(format!("w0 must lie in (0, 1), got {w0}")));
    }
    Ok(())
}

fn check_label(epsilon: f64, q0: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if q0 == f64::INFINITY {
        return Err(Error::OpenOrbit { w0: 1.0 });
    }
    if !(q0 > 0.0 && q0.is_finite()) {
        return Err(Error::InvalidArgument(format!("orbit label must be positive, got {q0}")));
    }
    Ok(())
}

/// Period of the closed orbit through `(w0, 0)`.
pub fn orbit_period(epsilon: f64, w0: f64) -> Result<PeriodResult> {
    check_orbit_args(epsilon, w0)?;
    orbit_period_log(epsilon, log_gap(w0))
}

/// Period of the closed orbit labelled by `q0 = −ln(1 − w0)`.
pub fn orbit_period_log(epsilon: f64, q0: f64) -> Result<PeriodResult> {
    check_label(epsilon, q0)?;
    let mut solver = Dopri5::new(rhs(epsilon), 0.0, &[q0, 0.0], orbit_options());
    let mut quarters = [0.0; 4];
    let mut w_min = 0.0;
    let mut start = 0.0;
    for (quarter, slot) in quarters.iter_mut().enumerate() {
        // quarters alternate between the events w = 0 and p = 0
        let idx = quarter % 2;
        let mut prev = solver.y()[idx];
        loop {
            solver.step(None)?;
            let cur = solver.y()[idx];
            if cur == 0.0 || (cur < 0.0) != (prev < 0.0) && prev != 0.0 {
                break;
            }
            prev = cur;
        }
        let hit = locate_crossing(&mut solver, |y| y[idx], EVENT_TOL);
        let mut y = hit.y;
        y[idx] = 0.0;
        if quarter == 1 {
            w_min = slope_from_log_gap(y[0]);
        }
        *slot = hit.t - start;
        start = hit.t;
        solver.reset(hit.t, &y);
    }
    Ok(PeriodResult {
        epsilon,
        w0: slope_from_log_gap(q0),
        q0,
        period: quarters.iter().sum(),
        quarters,
        w_min,
    })
}

/// Samples the orbit through `(w0, 0)` exactly at the abscissae `xs`
/// (ascending, starting at or after 0).
pub fn sample_orbit(epsilon: f64, w0: f64, xs: &[f64]) -> Result<Vec<OrbitSample>> {
    check_orbit_args(epsilon, w0)?;
    sample_orbit_log(epsilon, log_gap(w0), xs)
}

/// [`sample_orbit`] for the orbit labelled by `q0`.
pub fn sample_orbit_log(epsilon: f64, q0: f64, xs: &[f64]) -> Result<Vec<OrbitSample>> {
    check_label(epsilon, q0)?;
    let mut solver = Dopri5::new(rhs(epsilon), 0.0, &[q0, 0.0], orbit_options());
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if x < solver.t() {
            return Err(Error::InvalidArgument("sample abscissae must ascend".into()));
        }
        solver.advance_to(x)?;
        out.push(OrbitSample {
            s: x,
            w: slope_from_log_gap(solver.y()[0]),
            p: solver.y()[1],
        });
    }
    Ok(out)
}

/// Root `w0 = g_j(ε)` of `T(ε, w0) = 2π/j`.
///
/// Rounds to `1.0` once the branch is closer to one than double precision
/// resolves; [`branch_solve_log`] keeps full accuracy there.
pub fn branch_solve(j: usize, epsilon: f64) -> Result<f64> {
    branch_solve_log(j, epsilon).map(slope_from_log_gap)
}

/// Orbit label `q0 = −ln(1 − g_j(ε))` of branch `j`.
pub fn branch_solve_log(j: usize, epsilon: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidArgument("branch index j must be positive".into()));
    }
    if !(epsilon > 0.0) || epsilon * (j * j) as f64 >= 1.0 {
        return Err(Error::NoBranch { j, epsilon });
    }
    let target = 2.0 * PI / j as f64;
    let g = |q0: f64| orbit_period_log(epsilon, q0).map(|r| r.period - target);
    let mut lo = Q0_LO;
    let mut g_lo = g(lo)?;
    if g_lo > 0.0 {
        return Err(Error::Ode(format!(
            "period at q0 = {lo} already exceeds 2pi/{j} at epsilon = {epsilon}"
        )));
    }
    // T grows without bound in q0; double until the root is bracketed
    let mut hi = 1.0;
    let mut g_hi = g(hi)?;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        if hi > Q0_MAX {
            return Err(Error::BranchOutOfRange { j, epsilon });
        }
        g_hi = g(hi)?;
    }
    while hi - lo >= 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    // secant polish inside the final bracket
    let (mut a, mut ga, mut b, mut gb) = (lo, g_lo, hi, g_hi);
    for _ in 0..3 {
        if gb == ga {
            break;
        }
        let c = (b - gb * (b - a) / (gb - ga)).clamp(lo, hi);
        let gc = g(c)?;
        (a, ga, b, gb) = (b, gb, c, gc);
        if gc == 0.0 {
            break;
        }
    }
    Ok(if gb.abs() <= ga.abs() { b } else { a })
}

/// Number of nontrivial steady states: `2k` with `1/(k+1)² ≤ ε < 1/k²`.
pub fn steady_count(epsilon: f64) -> usize {
    if !(epsilon > 0.0) || epsilon >= 1.0 {
        return 0;
    }
    let mut k = (1.0 / epsilon.sqrt()).floor() as usize;
    // guard the float estimate of k against roundoff at the thresholds
    while epsilon < 1.0 / ((k + 1) * (k + 1)) as f64 {
        k += 1;
    }
    while k > 0 && epsilon >= 1.0 / (k * k) as f64 {
        k -= 1;
    }
    2 * k
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "p" => Ok(Sign::Plus),
            "-" | "minus" | "m" => Ok(Sign::Minus),
            other => Err(Error::InvalidArgument(format!("unknown sign '{other}'"))),
        }
    }
}

/// A nontrivial equilibrium of the derivative equation.
#[derive(Clone, Debug)]
pub struct RsSteadyState {
    pub j: usize,
    pub sign: Sign,
    pub epsilon: f64,
    /// Branch datum `g_j(ε)`.
    pub w0: f64,
    /// `−ln(1 − w0)`.
    pub q0: f64,
    /// `v′(0)`; equals `w0` for the `+` state.
    pub wall_slope: f64,
    /// `v` as a sine series.
    pub v: SpectralField,
    /// `ϑ = ∫₀ˣ v` as a cosine series.
    pub theta: SpectralField,
    /// `V = εv′(0) − ϑ̄`.
    pub velocity: f64,
    /// `−½·mean(v²)`, the second form of the velocity.
    pub velocity_energy: f64,
}

impl RsSteadyState {
    /// `max |εv″ − v v′ + v|` on the grid.
    pub fn residual(&self) -> f64 {
        rs_residual(&self.v, self.epsilon)
    }

    pub fn interior_zeros(&self) -> usize {
        count_sign_changes(self.v.values())
    }

    pub fn delta_phi(&self) -> f64 {
        let t = self.theta.values();
        let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// `max |εv″ − v v′ + v|` for a sine-series profile.
pub fn rs_residual(v: &SpectralField, epsilon: f64) -> f64 {
    let v = v.filtered(1e-15);
    let d1 = v.derivative_n(1);
    let d2 = v.derivative_n(2);
    v.values()
        .iter()
        .zip(d1.values())
        .zip(d2.values())
        .map(|((&v, &v1), &v2)| (epsilon * v2 - v * v1 + v).abs())
        .fold(0.0, f64::max)
}

/// Sign changes of interior samples, ignoring values at roundoff level.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-9 * scale.max(1e-300);
    let n = values.len();
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for &v in &values[1..n.saturating_sub(1)] {
        if v.abs() <= floor {
            continue;
        }
        let pos = v > 0.0;
        if let Some(l) = last {
            if l != pos {
                changes += 1;
            }
        }
        last = Some(pos);
    }
    changes
}

/// Builds `v_j^±` on the grid described by `spec`.
pub fn steady_solution(j: usize, sign: Sign, epsilon: f64, spec: GridSpec) -> Result<RsSteadyState> {
    let grid = Grid::new(spec)?;
    steady_solution_on(j, sign, epsilon, &grid)
}

pub fn steady_solution_on(j: usize, sign: Sign, epsilon: f64, grid: &Arc<Grid>) -> Result<RsSteadyState> {
    let q0 = branch_solve_log(j, epsilon)?;
    // Sampling is stretched by the computed period over 2π/j, which differs
    // from one by the root tolerance. The samples then close exactly at
    // x = π instead of leaving a 1e−12 jump that would pollute every mode.
    let stretch = orbit_period_log(epsilon, q0)?.period * j as f64 / (2.0 * PI);
    // v⁻ is the same orbit entered half a period later
    let shift = match sign {
        Sign::Plus => 0.0,
        Sign::Minus => PI / j as f64,
    };
    let xs: Vec<f64> = grid.points().iter().map(|x| (x + shift) * stretch).collect();
    let samples = sample_orbit_log(epsilon, q0, &xs)?;
    // This run takes different steps than the period run, so its zeros land
    // 1e−12 away from the walls. Shift the abscissa affinely, to first order,
    // so both walls are exact zeros of the sampled orbit.
    let n = samples.len();
    let (first, last) = (samples[0], samples[n - 1]);
    let alpha = -first.p / first.w;
    let beta = (-last.p / last.w - alpha) / PI;
    let mut values: Vec<f64> = samples
        .iter()
        .zip(grid.points())
        .map(|(s, x)| s.p + s.w * (alpha + beta * x))
        .collect();
    let wall_slope = first.w;
    values[0] = 0.0;
    values[n - 1] = 0.0;
    // integrator noise sits as a flat ~1e−14 plateau in the tail and is
    // amplified by k² in every residual; cut it off
    let v = SpectralField::from_values(grid, Parity::Odd, &values)?.denoised(STEADY_NOISE_FLOOR);
    let theta = v.antiderivative().into_field()?;
    let velocity = epsilon * wall_slope - theta.mean();
    let mean_sq: f64 = 0.5 * v.coeffs().iter().map(|b| b * b).sum::<f64>();
    Ok(RsSteadyState {
        j,
        sign,
        epsilon,
        w0: slope_from_log_gap(q0),
        q0,
        wall_slope,
        v,
        theta,
        velocity,
        velocity_energy: -0.5 * mean_sq,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BifurcationRow {
    pub epsilon: f64,
    pub j: usize,
    pub sign: Sign,
    pub w0: f64,
    pub delta_phi: f64,
    pub velocity: f64,
    pub verdict: Verdict,
}

/// Rows `(ε, j, ±, w0, Δφ, V, verdict)` for every live branch `j ≤ j_max`.
///
/// Branches that do not exist at a given `ε`, or fall outside the supported
/// `w0` range, are left out.
pub fn bifurcation_diagram(epsilons: &[f64], j_max: usize, spec: GridSpec) -> Result<Vec<BifurcationRow>> {
    for &e in epsilons {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {e} outside (0, 1)")));
        }
    }
    let grid = Grid::new(spec)?;
    let tasks: Vec<(usize, f64, usize, Sign)> = epsilons
        .iter()
        .enumerate()
        .flat_map(|(i, &e)| {
            (1..=j_max).flat_map(move |j| [Sign::Plus, Sign::Minus].map(move |s| (i, e, j, s)))
        })
        .filter(|&(_, e, j, _)| e * ((j * j) as f64) < 1.0)
        .collect();
    let rows: Vec<Option<BifurcationRow>> = tasks
        .par_iter()
        .map(|&(_, e, j, s)| -> Result<Option<BifurcationRow>> {
            let st = match steady_solution_on(j, s, e, &grid) {
                Ok(st) => st,
                Err(Error::BranchOutOfRange { .. }) => return Ok(None),
                Err(err) => return Err(err),
            };
            let residual = st.residual();
            if !(residual <= PROFILE_TOLERANCE) {
                return Err(Error::InvalidGrid(format!(
                    "{} modes do not resolve branch j = {j} at epsilon = {e} (residual {residual:.1e}); increase n_modes",
                    grid.n_modes()
                )));
            }
            let verdict = comparison_test(&st.v, e)?.verdict;
            Ok(Some(BifurcationRow {
                epsilon: e,
                j,
                sign: s,
                w0: st.w0,
                delta_phi: st.delta_phi(),
                velocity: st.velocity,
                verdict,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}
