//! Time integration of the front equations.
//!
//! Three equations share one integrator:
//!
//! * `Rs`: `φ_t = εφ_xx − ½φ_x² + φ − φ̄` on cosine fields,
//! * `Ms`: `φ_t = εφ_xx − ½φ_x² + I(φ)` on cosine fields, `I` the `|k|` multiplier,
//! * `Uform`: `u_t = εu_xx − u u_x + u` on sine fields (`u = φ_x`).
//!
//! The linear part is diagonal in mode space and is propagated exactly by a
//! fourth-order exponential time-differencing Runge–Kutta scheme (ETDRK4).
//! The quadratic term is evaluated on the grid and dealiased with the 2/3
//! rule.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{trapezoid, Grid, GridSpec, Parity, SpectralField};

pub const DEFAULT_DT: f64 = 1e-3;
pub const BLOW_UP_LIMIT: f64 = 1e8;
/// Margin keeping `ln(1 − u_x)` away from its singularity.
pub const LOG_DOMAIN_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Rs,
    Ms,
    Uform,
}

impl Equation {
    /// Parity of the evolved field.
    pub fn parity(self) -> Parity {
        match self {
            Equation::Rs | Equation::Ms => Parity::Even,
            Equation::Uform => Parity::Odd,
        }
    }
}

impl std::str::FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(Equation::Rs),
            "ms" => Ok(Equation::Ms),
            "uform" | "u" => Ok(Equation::Uform),
            other => Err(Error::InvalidArgument(format!("unknown equation '{other}'"))),
        }
    }
}

/// Growth rate of mode `k` under the linear part.
pub fn linear_symbol(equation: Equation, epsilon: f64, k: usize) -> f64 {
    let kf = k as f64;
    match equation {
        Equation::Rs if k == 0 => 0.0,
        Equation::Rs | Equation::Uform => 1.0 - epsilon * kf * kf,
        Equation::Ms => kf - epsilon * kf * kf,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionProblem {
    pub equation: Equation,
    pub epsilon: f64,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
}

impl EvolutionProblem {
    pub fn new(equation: Equation, epsilon: f64, grid: GridSpec) -> Self {
        Self {
            equation,
            epsilon,
            grid,
            dt: DEFAULT_DT,
            t_end: 1.0,
            sample_every: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Field snapshot at one time.
#[derive(Clone, Debug)]
pub struct FrontState {
    pub time: f64,
    pub field: SpectralField,
}

/// Per-mode ETDRK4 coefficients for one `(equation, ε, dt)`.
struct Etdrk4 {
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl Etdrk4 {
    fn new(symbols: &[f64], h: f64) -> Self {
        // contour averages avoid the cancellation in the φ-functions near z = 0
        const M: usize = 64;
        let roots: Vec<Complex64> = (0..M)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / M as f64))
            .collect();
        let n = symbols.len();
        let mut s = Self {
            e: vec![0.0; n],
            e2: vec![0.0; n],
            q: vec![0.0; n],
            f1: vec![0.0; n],
            f2: vec![0.0; n],
            f3: vec![0.0; n],
        };
        for (k, &lam) in symbols.iter().enumerate() {
            let z = lam * h;
            s.e[k] = z.exp();
            s.e2[k] = (0.5 * z).exp();
            let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
            for r in &roots {
                let zr = Complex64::new(z, 0.0) + r;
                let ez = zr.exp();
                let z3 = zr * zr * zr;
                q += (((zr * 0.5).exp() - 1.0) / zr).re;
                f1 += ((-4.0 - zr + ez * (4.0 - 3.0 * zr + zr * zr)) / z3).re;
                f2 += ((2.0 + zr + ez * (zr - 2.0)) / z3).re;
                f3 += ((-4.0 - 3.0 * zr - zr * zr + ez * (4.0 - zr)) / z3).re;
            }
            let m = M as f64;
            if z.abs() > 1.0 {
                // direct formulas are well conditioned away from the origin
                let ez = z.exp();
                let z3 = z * z * z;
                s.q[k] = h * ((0.5 * z).exp() - 1.0) / z;
                s.f1[k] = h * (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                s.f2[k] = h * (2.0 + z + ez * (z - 2.0)) / z3;
                s.f3[k] = h * (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            } else {
                s.q[k] = h * q / m;
                s.f1[k] = h * f1 / m;
                s.f2[k] = h * f2 / m;
                s.f3[k] = h * f3 / m;
            }
        }
        s
    }
}

/// Quadratic term of each equation, evaluated pseudo-spectrally.
struct Nonlinear {
    grid: Arc<Grid>,
    equation: Equation,
    cutoff: usize,
    work: Vec<f64>,
}

impl Nonlinear {
    fn new(grid: &Arc<Grid>, equation: Equation) -> Self {
        Self {
            grid: Arc::clone(grid),
            equation,
            cutoff: grid.spec().dealias_cutoff(),
            work: vec![0.0; grid.n_modes()],
        }
    }

    fn eval(&mut self, state: &[f64], out: &mut [f64]) {
        match self.equation {
            Equation::Rs | Equation::Ms => {
                // −½ φ_x², φ_x = −Σ k a_k sin(kx)
                for (k, (w, a)) in self.work.iter_mut().zip(state).enumerate() {
                    *w = -(k as f64) * a;
                }
                let slope = self.grid.synthesize(&self.work, Parity::Odd);
                let sq: Vec<f64> = slope.iter().map(|s| -0.5 * s * s).collect();
                let c = self.grid.analyze(&sq, Parity::Even).expect("grid length");
                out.copy_from_slice(&c);
            }
            Equation::Uform => {
                // −u u_x = −½ (u²)_x
                let u = self.grid.synthesize(state, Parity::Odd);
                let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
                let c = self.grid.analyze(&sq, Parity::Even).expect("grid length");
                for (k, (o, ck)) in out.iter_mut().zip(&c).enumerate() {
                    *o = 0.5 * k as f64 * ck;
                }
                out[0] = 0.0;
            }
        }
        for o in out.iter_mut().skip(self.cutoff) {
            *o = 0.0;
        }
    }
}

fn check_finite(grid: &Arc<Grid>, parity: Parity, coeffs: &[f64], time: f64) -> Result<()> {
    let l1: f64 = coeffs.iter().map(|c| c.abs()).sum();
    if l1.is_finite() && l1 <= BLOW_UP_LIMIT {
        return Ok(());
    }
    let field = SpectralField::from_coeffs(grid, parity, coeffs.to_vec());
    let bad_value = field.values().iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_LIMIT);
    if !l1.is_finite() || bad_value {
        return Err(Error::BlowUp {
            time,
            reason: if l1.is_finite() {
                format!("sample magnitude exceeded {BLOW_UP_LIMIT:e}")
            } else {
                "non-finite coefficients".into()
            },
            state: Box::new(FrontState { time, field }),
        });
    }
    Ok(())
}

/// Integrates `problem` from `initial` and returns the sampled trajectory.
///
/// The initial state is always the first sample and the final state always
/// the last one.
pub fn integrate(problem: &EvolutionProblem, initial: &SpectralField) -> Result<Vec<FrontState>> {
    problem.validate()?;
    let grid = initial.grid();
    if *grid.spec() != problem.grid {
        return Err(Error::GridMismatch);
    }
    let parity = problem.equation.parity();
    if initial.parity() != parity {
        return Err(Error::Precondition(format!(
            "{:?} evolves {:?} fields, initial data is {:?}",
            problem.equation,
            parity,
            initial.parity()
        )));
    }
    let n = grid.n_modes();
    let symbols: Vec<f64> = (0..n)
        .map(|k| linear_symbol(problem.equation, problem.epsilon, k))
        .collect();
    let coef = Etdrk4::new(&symbols, problem.dt);
    let mut nl = Nonlinear::new(grid, problem.equation);

    let mut v = initial.coeffs().to_vec();
    let (mut nv, mut na, mut nb, mut nc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let n_steps = problem.n_steps();
    let mut out = vec![FrontState {
        time: 0.0,
        field: initial.clone(),
    }];
    for step in 1..=n_steps {
        nl.eval(&v, &mut nv);
        for k in 0..n {
            a[k] = coef.e2[k] * v[k] + coef.q[k] * nv[k];
        }
        nl.eval(&a, &mut na);
        for k in 0..n {
            b[k] = coef.e2[k] * v[k] + coef.q[k] * na[k];
        }
        nl.eval(&b, &mut nb);
        for k in 0..n {
            c[k] = coef.e2[k] * a[k] + coef.q[k] * (2.0 * nb[k] - nv[k]);
        }
        nl.eval(&c, &mut nc);
        for k in 0..n {
            v[k] = coef.e[k] * v[k]
                + coef.f1[k] * nv[k]
                + 2.0 * coef.f2[k] * (na[k] + nb[k])
                + coef.f3[k] * nc[k];
        }
        if parity == Parity::Odd {
            v[0] = 0.0;
        }
        let time = step as f64 * problem.dt;
        check_finite(grid, parity, &v, time)?;
        if step % problem.sample_every == 0 || step == n_steps {
            out.push(FrontState {
                time,
                field: SpectralField::from_coeffs(grid, parity, v.clone()),
            });
        }
    }
    Ok(out)
}

/// Band-limited pseudo-random field: modes `1..=max_mode` with coefficients
/// uniform in `[−amplitude, amplitude]`, reproducible from `seed`.
pub fn seeded_noise(
    grid: &Arc<Grid>,
    parity: Parity,
    seed: u64,
    max_mode: usize,
    amplitude: f64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = max_mode.min(grid.n_modes() - 1);
    let mut coeffs = vec![0.0; top + 1];
    for c in coeffs.iter_mut().skip(1) {
        *c = rng.random_range(-amplitude..=amplitude);
    }
    SpectralField::from_coeffs(grid, parity, coeffs)
}

/// Rebuilds the propagating front `φ` from a trajectory of the derivative
/// equation:
/// `φ(t,x) = θ(t,x) − ∫₀ᵗ (θ̄(τ) − ε θ_xx(τ,0)) dτ` with `θ = ∫₀ˣ u`.
///
/// The time integral uses the trapezoid rule on the trajectory samples.
pub fn front_from_derivative(trajectory: &[FrontState], epsilon: f64) -> Result<Vec<FrontState>> {
    let mut out = Vec::with_capacity(trajectory.len());
    let mut drift = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in trajectory {
        if s.field.parity() != Parity::Odd {
            return Err(Error::Precondition("expected a trajectory of u-fields".into()));
        }
        let theta = s.field.antiderivative().into_field()?;
        let wall_curvature: f64 = s
            .field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, b)| k as f64 * b)
            .sum();
        let rate = theta.mean() - epsilon * wall_curvature;
        if let Some((t0, r0)) = prev {
            drift += 0.5 * (s.time - t0) * (rate + r0);
        }
        prev = Some((s.time, rate));
        let mut coeffs = theta.coeffs().to_vec();
        coeffs[0] -= drift;
        out.push(FrontState {
            time: s.time,
            field: SpectralField::from_coeffs(s.field.grid(), Parity::Even, coeffs),
        });
    }
    Ok(out)
}

/// Shape diagnostics of a front `φ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontMetrics {
    pub mean_position: f64,
    /// Location of the minimum of `φ` (the leading point, since upward
    /// propagation is toward negative `φ`).
    pub tip_x: f64,
    /// Locations of the local maxima of `φ`.
    pub cusp_xs: Vec<f64>,
    pub delta_phi: f64,
}

fn refine_extremum(x: &[f64], f: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 == f.len() {
        return x[i];
    }
    let (fm, f0, fp) = (f[i - 1], f[i], f[i + 1]);
    let denom = fm - 2.0 * f0 + fp;
    if denom == 0.0 {
        return x[i];
    }
    let h = x[i + 1] - x[i];
    (x[i] + 0.5 * h * (fm - fp) / denom).clamp(0.0, PI)
}

pub fn front_metrics(state: &FrontState) -> FrontMetrics {
    let f = state.field.values();
    let x = state.field.grid().points();
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in f.iter().enumerate() {
        if v < f[imin] {
            imin = i;
        }
        if v > f[imax] {
            imax = i;
        }
    }
    let delta_phi = f[imax] - f[imin];
    let scale = 1e-12 * (1.0 + delta_phi);
    let mut cusp_xs = Vec::new();
    if delta_phi > scale {
        let n = f.len();
        for i in 0..n {
            let left = if i == 0 { f[1] } else { f[i - 1] };
            let right = if i + 1 == n { f[n - 2] } else { f[i + 1] };
            if f[i] > left + scale && f[i] >= right + scale
                || (f[i] >= left + scale && f[i] > right + scale)
            {
                cusp_xs.push(refine_extremum(x, f, i));
            }
        }
    }
    FrontMetrics {
        mean_position: state.field.mean(),
        tip_x: refine_extremum(x, f, imin),
        cusp_xs,
        delta_phi,
    }
}

/// Least-squares slope of `φ̄(t)` over the samples inside `window`.
pub fn measured_speed(trajectory: &[FrontState], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = trajectory
        .iter()
        .filter(|s| s.time >= window.0 && s.time <= window.1)
        .map(|s| (s.time, s.field.mean()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples inside [{}, {}]",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("samples share a single time".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiapunovSample {
    pub time: f64,
    /// `None` when `max u_x ≥ 1 − δ` and the functional is undefined.
    pub value: Option<f64>,
}

impl LiapunovSample {
    pub fn defined(&self) -> bool {
        self.value.is_some()
    }
}

/// `(1−w)ln(1−w) + w`, accurate for small `w`.
fn entropy_term(w: f64) -> f64 {
    (1.0 - w) * (-w).ln_1p() + w
}

/// `U(u) = ∫₀^π [−u²/(2ε) + (1−u_x)ln(1−u_x) + u_x] dx`.
pub fn rs_liapunov(state: &FrontState, epsilon: f64) -> Result<LiapunovSample> {
    let u = &state.field;
    if u.parity() != Parity::Odd {
        return Err(Error::Precondition("the functional acts on u-fields".into()));
    }
    let slope = u.derivative_n(1);
    let max_slope = slope.values().iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w));
    if max_slope >= 1.0 - LOG_DOMAIN_MARGIN {
        return Ok(LiapunovSample {
            time: state.time,
            value: None,
        });
    }
    let density: Vec<f64> = u
        .values()
        .iter()
        .zip(slope.values())
        .map(|(&p, &w)| -p * p / (2.0 * epsilon) + entropy_term(w))
        .collect();
    Ok(LiapunovSample {
        time: state.time,
        value: Some(trapezoid(u.grid(), &density)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LiapunovReport {
    pub samples: Vec<LiapunovSample>,
    /// Largest `U(t_{i+1}) − U(t_i)` over consecutive defined samples.
    pub max_increase: f64,
    pub scale: f64,
    pub monotone: bool,
}

/// Checks that `U` is nonincreasing along a trajectory of the derivative
/// equation, judged on the subsequence where it is defined.
pub fn liapunov_monotone_report(trajectory: &[FrontState], epsilon: f64) -> Result<LiapunovReport> {
    let samples = trajectory
        .iter()
        .map(|s| rs_liapunov(s, epsilon))
        .collect::<Result<Vec<_>>>()?;
    let defined: Vec<f64> = samples.iter().filter_map(|s| s.value).collect();
    let scale = defined.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let max_increase = defined
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_increase = if max_increase.is_finite() { max_increase } else { 0.0 };
    Ok(LiapunovReport {
        monotone: max_increase <= 1e-10 * scale,
        samples,
        max_increase,
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_symbols() {
        assert_eq!(linear_symbol(Equation::Rs, 2.0, 1), -1.0);
        assert_abs_diff_eq!(linear_symbol(Equation::Ms, 0.4, 2), 0.4, epsilon = 1e-15);
        assert_eq!(linear_symbol(Equation::Rs, 0.3, 0), 0.0);
        assert_eq!(linear_symbol(Equation::Ms, 0.3, 0), 0.0);
        assert_abs_diff_eq!(linear_symbol(Equation::Uform, 0.5, 2), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn etdrk4_coefficients_reduce_to_rk4_at_zero() {
        let c = Etdrk4::new(&[0.0, -1e-9, -3.0, -4000.0], 0.01);
        for k in 0..2 {
            assert_abs_diff_eq!(c.q[k], 0.005, epsilon = 1e-13);
            assert_abs_diff_eq!(c.f1[k], 0.01 / 6.0, epsilon = 1e-13);
            assert_abs_diff_eq!(c.f2[k], 0.01 / 6.0, epsilon = 1e-13);
            assert_abs_diff_eq!(c.f3[k], 0.01 / 6.0, epsilon = 1e-13);
        }
        assert!(c.e[3] < 1e-15 && c.f1[3].is_finite());
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = Grid::with_modes(32).unwrap();
        let mut p = EvolutionProblem::new(Equation::Rs, 0.5, *g.spec());
        p.t_end = 0.2;
        p.sample_every = 50;
        let traj = integrate(&p, &SpectralField::zeros(&g, Parity::Even)).unwrap();
        assert_eq!(traj.len(), 5);
        assert!(traj.iter().all(|s| s.field.max_abs() == 0.0));
    }

    #[test]
    fn mode_one_grows_at_linear_rate() {
        let g = Grid::with_modes(32).unwrap();
        let mut p = EvolutionProblem::new(Equation::Rs, 0.5, *g.spec());
        p.t_end = 0.5;
        p.sample_every = 500;
        let init = SpectralField::from_coeffs(&g, Parity::Even, vec![0.0, 1e-6]);
        let traj = integrate(&p, &init).unwrap();
        let last = traj.last().unwrap();
        let rate = (last.field.coeffs()[1] / 1e-6).ln() / last.time;
        assert!((rate - 0.5).abs() / 0.5 < 1e-3, "rate {rate}");
    }

    #[test]
    fn rejects_wrong_parity_and_grid() {
        let g = Grid::with_modes(16).unwrap();
        let p = EvolutionProblem::new(Equation::Uform, 0.5, *g.spec());
        assert!(integrate(&p, &SpectralField::zeros(&g, Parity::Even)).is_err());
        let other = Grid::with_modes(8).unwrap();
        assert!(matches!(
            integrate(&p, &SpectralField::zeros(&other, Parity::Odd)),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn blow_up_is_reported_with_state() {
        // backward diffusion at ε < 0 is rejected, so force growth via a huge
        // unstable amplitude in the MS equation at tiny ε
        let g = Grid::with_modes(16).unwrap();
        let mut p = EvolutionProblem::new(Equation::Ms, 1e-6, *g.spec());
        p.t_end = 40.0;
        p.dt = 0.01;
        let init = SpectralField::from_coeffs(&g, Parity::Even, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1e5]);
        match integrate(&p, &init) {
            Err(Error::BlowUp { state, time, .. }) => {
                assert_eq!(state.time, time);
                assert!(time > 0.0);
            }
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.len())),
        }
    }

    #[test]
    fn metrics_of_simple_fronts() {
        let g = Grid::with_modes(16).unwrap();
        let flat = FrontState {
            time: 0.0,
            field: SpectralField::from_fn(&g, Parity::Even, |_| 2.0).unwrap(),
        };
        let m = front_metrics(&flat);
        assert!(m.delta_phi.abs() < 1e-13);
        assert!(m.cusp_xs.is_empty());

        let cos = FrontState {
            time: 0.0,
            field: SpectralField::from_fn(&g, Parity::Even, f64::cos).unwrap(),
        };
        let m = front_metrics(&cos);
        assert_abs_diff_eq!(m.delta_phi, 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(m.tip_x, PI, epsilon = 1e-14);
        assert_eq!(m.cusp_xs, vec![0.0]);
    }

    #[test]
    fn speed_of_trivial_solution_is_zero() {
        let g = Grid::with_modes(16).unwrap();
        let traj: Vec<FrontState> = (0..5)
            .map(|i| FrontState {
                time: i as f64,
                field: SpectralField::zeros(&g, Parity::Even),
            })
            .collect();
        assert_eq!(measured_speed(&traj, (0.0, 4.0)).unwrap(), 0.0);
        assert!(measured_speed(&traj, (0.5, 0.9)).is_err());
    }

    #[test]
    fn liapunov_domain_and_zero() {
        let g = Grid::with_modes(16).unwrap();
        let zero = FrontState {
            time: 0.0,
            field: SpectralField::zeros(&g, Parity::Odd),
        };
        assert_eq!(rs_liapunov(&zero, 0.5).unwrap().value, Some(0.0));
        // u = 1.2 sin x has max u_x = 1.2
        let steep = FrontState {
            time: 0.0,
            field: SpectralField::from_coeffs(&g, Parity::Odd, vec![0.0, 1.2]),
        };
        assert!(!rs_liapunov(&steep, 0.5).unwrap().defined());
        let phi = FrontState {
            time: 0.0,
            field: SpectralField::zeros(&g, Parity::Even),
        };
        assert!(rs_liapunov(&phi, 0.5).is_err());
    }

    #[test]
    fn liapunov_report_skips_undefined_samples() {
        let g = Grid::with_modes(16).unwrap();
        let mk = |t: f64, a: f64| FrontState {
            time: t,
            field: SpectralField::from_coeffs(&g, Parity::Odd, vec![0.0, a]),
        };
        let traj = vec![mk(0.0, 1.5), mk(1.0, 0.3), mk(2.0, 1.3), mk(3.0, 0.2)];
        let r = liapunov_monotone_report(&traj, 0.5).unwrap();
        assert_eq!(r.samples.iter().filter(|s| s.defined()).count(), 2);
        // at ε = 0.5 the functional decreases with amplitude for small u
        assert!(r.monotone == (r.max_increase <= 1e-10 * r.scale));
    }

    #[test]
    fn seeded_noise_is_reproducible_and_band_limited() {
        let g = Grid::with_modes(32).unwrap();
        let a = seeded_noise(&g, Parity::Even, 3, 10, 1e-2);
        let b = seeded_noise(&g, Parity::Even, 3, 10, 1e-2);
        assert_eq!(a.coeffs(), b.coeffs());
        assert_eq!(a.coeffs()[0], 0.0);
        assert!(a.coeffs()[11..].iter().all(|&c| c == 0.0));
        assert!(a.coeffs()[1..=10].iter().all(|c| c.abs() <= 1e-2));
    }
}
