//! Adaptive Dormand–Prince 5(4) integrator with continuous output.
//!
//! The stepper is driven one accepted step at a time so callers can watch
//! for sign changes of event functions, land exactly on requested abscissae
//! and stop whenever they like.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn tight() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            ..Self::default()
        }
    }
}

/// Integrates `y' = f(t, y)` forward in `t`.
pub struct Dopri5<F> {
    rhs: F,
    opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    steps: usize,
    // continuous output of the last accepted step
    t_prev: f64,
    h_prev: f64,
    rcont: [Vec<f64>; 5],
    stages: Vec<Vec<f64>>,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(mut rhs: F, t0: f64, y0: &[f64], opts: OdeOptions) -> Self {
        let n = y0.len();
        let mut k1 = vec![0.0; n];
        rhs(t0, y0, &mut k1);
        Self {
            rhs,
            opts,
            t: t0,
            y: y0.to_vec(),
            k1,
            h: opts.h_init,
            steps: 0,
            t_prev: t0,
            h_prev: 0.0,
            rcont: std::array::from_fn(|_| y0.to_vec()),
            stages: vec![vec![0.0; n]; 7],
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Derivative at the current point.
    pub fn dy(&self) -> &[f64] {
        &self.k1
    }

    /// One Dormand–Prince step of size `h` from the current point without
    /// accepting it. Writes the 5th-order solution into `out` and returns the
    /// scaled error norm.
    fn trial(&mut self, h: f64, out: &mut [f64]) -> f64 {
        let n = self.y.len();
        let t = self.t;
        let (y, k1) = (&self.y, &self.k1);
        let mut tmp = vec![0.0; n];
        let [k2, k3, k4, k5, k6, k7, _] = &mut self.stages[..] else {
            unreachable!()
        };
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        (self.rhs)(t + C2 * h, &tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        (self.rhs)(t + C3 * h, &tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        (self.rhs)(t + C4 * h, &tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        (self.rhs)(t + C5 * h, &tmp, k5);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        (self.rhs)(t + h, &tmp, k6);
        for i in 0..n {
            out[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        (self.rhs)(t + h, out, k7);
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(out[i].abs());
            err += (e / sc) * (e / sc);
        }
        (err / n as f64).sqrt()
    }

    /// Takes one accepted step, never stepping past `t_stop` when given.
    pub fn step(&mut self, t_stop: Option<f64>) -> Result<()> {
        let n = self.y.len();
        let mut y_new = vec![0.0; n];
        let mut h = self.h.min(self.opts.h_max);
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::Ode(format!(
                    "exceeded {} steps at t = {}",
                    self.opts.max_steps, self.t
                )));
            }
            let mut landing = false;
            if let Some(ts) = t_stop {
                let remaining = ts - self.t;
                if remaining <= h * (1.0 + 1e-12) {
                    h = remaining;
                    landing = true;
                }
            }
            if h < self.opts.h_min && !landing {
                return Err(Error::Ode(format!("step size underflow at t = {}", self.t)));
            }
            let err = self.trial(h, &mut y_new);
            if !err.is_finite() {
                h *= 0.2;
                continue;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            if err <= 1.0 {
                self.steps += 1;
                self.accept(h, &y_new, landing.then(|| t_stop.unwrap()));
                if !landing || fac < 1.0 {
                    self.h = h * fac;
                }
                return Ok(());
            }
            h *= fac.min(1.0);
        }
    }

    fn accept(&mut self, h: f64, y_new: &[f64], landed_at: Option<f64>) {
        let n = y_new.len();
        let [k2, k3, k4, k5, k6, k7, _] = &self.stages[..] else {
            unreachable!()
        };
        let _ = k2;
        for i in 0..n {
            let ydiff = y_new[i] - self.y[i];
            let bspl = h * self.k1[i] - ydiff;
            self.rcont[0][i] = self.y[i];
            self.rcont[1][i] = ydiff;
            self.rcont[2][i] = bspl;
            self.rcont[3][i] = ydiff - h * k7[i] - bspl;
            self.rcont[4][i] = h
                * (D1 * self.k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        self.t_prev = self.t;
        self.h_prev = h;
        self.t = landed_at.unwrap_or(self.t + h);
        self.y.copy_from_slice(y_new);
        self.k1.copy_from_slice(k7);
    }

    /// Continuous output inside the last accepted step.
    pub fn dense(&self, t: f64) -> Vec<f64> {
        let theta = if self.h_prev > 0.0 {
            (t - self.t_prev) / self.h_prev
        } else {
            0.0
        };
        let theta1 = 1.0 - theta;
        (0..self.y.len())
            .map(|i| {
                self.rcont[0][i]
                    + theta
                        * (self.rcont[1][i]
                            + theta1
                                * (self.rcont[2][i]
                                    + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])))
            })
            .collect()
    }

    /// Integrates up to exactly `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            self.step(Some(t_end))?;
        }
        Ok(())
    }

    /// State reached by a single unadaptive step of size `h` from the
    /// current point. Used to refine event locations to full step accuracy.
    pub fn probe(&mut self, h: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y.len()];
        if h == 0.0 {
            out.copy_from_slice(&self.y);
        } else {
            self.trial(h, &mut out);
        }
        out
    }

    /// Restarts from a new point, keeping the current step-size estimate.
    pub fn reset(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.t_prev = t;
        self.h_prev = 0.0;
        self.y.copy_from_slice(y);
        (self.rhs)(t, y, &mut self.k1);
    }
}

/// Result of [`locate_crossing`].
#[derive(Clone, Debug)]
pub struct Crossing {
    pub t: f64,
    pub y: Vec<f64>,
}

/// Finds the root of `g(y)` inside the last accepted step of `solver`.
///
/// The caller has seen `g` change sign between `t_prev` and `t`. The root is
/// first bracketed on the continuous output and then polished with secant
/// iterations on exact single steps taken from `t_prev`, so the located
/// point carries the accuracy of the step rather than of the interpolant.
pub fn locate_crossing<F, G>(solver: &mut Dopri5<F>, g: G, t_tol: f64) -> Crossing
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: Fn(&[f64]) -> f64,
{
    let (t_a, t_b) = (solver.t_prev(), solver.t());
    let y_end = solver.y().to_vec();
    let mut lo = t_a;
    let mut hi = t_b;
    let mut g_lo = g(&solver.dense(lo));
    // bisection on the interpolant
    for _ in 0..200 {
        if hi - lo <= t_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(&solver.dense(mid));
        if (gm < 0.0) == (g_lo < 0.0) && gm != 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    let guess = 0.5 * (lo + hi);
    // rewind to the step start and polish on exact steps
    let y_start = solver.dense(t_a);
    let t_end = solver.t();
    solver.reset(t_a, &y_start);
    let mut t0 = (guess - t_a - 4.0 * t_tol).max(0.0);
    let mut t1 = (guess - t_a + 4.0 * t_tol).min(t_b - t_a);
    let mut g0 = g(&solver.probe(t0));
    let mut g1 = g(&solver.probe(t1));
    for _ in 0..30 {
        if g1 == g0 || (t1 - t0).abs() < 1e-16 * (1.0 + t_b.abs()) {
            break;
        }
        let t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
        let t2 = t2.clamp(0.0, t_b - t_a);
        t0 = t1;
        g0 = g1;
        t1 = t2;
        g1 = g(&solver.probe(t1));
        if g1 == 0.0 {
            break;
        }
    }
    let y = solver.probe(t1);
    // restore the solver to the end of the original step
    solver.reset(t_end, &y_end);
    Crossing { t: t_a + t1, y }
}
