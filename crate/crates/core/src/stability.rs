//! Linear stability of the trivial and nontrivial steady states.
//!
//! About a steady profile `v` of the derivative equation the linearization is
//! `Lξ = εξ″ − vξ′ + (1 − v′)ξ` with Dirichlet walls. It is symmetric for the
//! weight `ρ = exp(−ϑ/ε)`, `ϑ = ∫₀ˣ v`, which is what makes a real spectrum and
//! a comparison (Sturm) argument available.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{locate_crossing, Dopri5, OdeOptions};
use crate::phase_plane::rs_residual;
use crate::spectral::{Parity, SpectralField};

/// Steady residual a profile must meet before it is linearized.
pub const PROFILE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Stable,
    Unstable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "STABLE",
            Verdict::Unstable => "UNSTABLE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperatorKind {
    RsAboutV,
    MsAboutV,
    TrivialRs,
    TrivialMs,
}

#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub kind: OperatorKind,
    pub epsilon: f64,
    /// Steady profile; a sine series. Absent for the trivial kinds.
    pub v: Option<SpectralField>,
}

impl LinearizedOperator {
    pub fn trivial_rs(epsilon: f64) -> Self {
        Self {
            kind: OperatorKind::TrivialRs,
            epsilon,
            v: None,
        }
    }

    pub fn trivial_ms(epsilon: f64) -> Self {
        Self {
            kind: OperatorKind::TrivialMs,
            epsilon,
            v: None,
        }
    }

    pub fn rs_about(v: SpectralField, epsilon: f64) -> Self {
        Self {
            kind: OperatorKind::RsAboutV,
            epsilon,
            v: Some(v),
        }
    }

    pub fn ms_about(v: SpectralField, epsilon: f64) -> Self {
        Self {
            kind: OperatorKind::MsAboutV,
            epsilon,
            v: Some(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub kind: OperatorKind,
    pub epsilon: f64,
    /// Real eigenvalues (real parts for non-symmetric discretizations),
    /// descending. The translational eigenvalue, when identified, is not
    /// included here.
    pub eigenvalues: Vec<f64>,
    pub n_grid: usize,
    pub weight_used: bool,
    /// Smallest-magnitude eigenvalue of the pole linearization.
    pub translational: Option<f64>,
    /// Largest `|Im λ|` seen, zero for symmetric discretizations.
    pub max_imag: f64,
}

impl SpectrumReport {
    pub fn largest(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Which trivial spectrum to list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrivialEquation {
    Rs,
    Ms,
}

/// `λ_n = 1 − εn²` or `η_n = n − εn²` for `n = 1..=n_max`, descending.
pub fn trivial_spectrum(equation: TrivialEquation, epsilon: f64, n_max: usize) -> Result<SpectrumReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut eig: Vec<f64> = (1..=n_max)
        .map(|n| {
            let n = n as f64;
            match equation {
                TrivialEquation::Rs => 1.0 - epsilon * n * n,
                TrivialEquation::Ms => n - epsilon * n * n,
            }
        })
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(SpectrumReport {
        kind: match equation {
            TrivialEquation::Rs => OperatorKind::TrivialRs,
            TrivialEquation::Ms => OperatorKind::TrivialMs,
        },
        epsilon,
        eigenvalues: eig,
        n_grid: n_max,
        weight_used: false,
        translational: None,
        max_imag: 0.0,
    })
}

fn require_profile(v: &SpectralField, epsilon: f64) -> Result<()> {
    if v.parity() != Parity::Odd {
        return Err(Error::Precondition("steady profile must be a sine series".into()));
    }
    let r = rs_residual(v, epsilon);
    if !(r <= PROFILE_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "steady residual {r:e} exceeds {PROFILE_TOLERANCE:e}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    /// Grid abscissae reached before the scan stopped.
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub first_zero: Option<f64>,
    pub verdict: Verdict,
}

/// Solves `L[v]φ = 0`, `φ(0) = 0`, `φ′(0) = 1`, and reads stability from
/// the first interior zero of `φ`: none means the top eigenvalue is negative.
pub fn comparison_test(v: &SpectralField, epsilon: f64) -> Result<ComparisonVerdict> {
    require_profile(v, epsilon)?;
    let vf = v.filtered(1e-15);
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let [val, slope] = vf.eval_derivatives::<2>(x);
        dy[0] = y[1];
        dy[1] = (val * y[1] - (1.0 - slope) * y[0]) / epsilon;
    };
    let mut solver = Dopri5::new(rhs, 0.0, &[0.0, 1.0], OdeOptions::default());
    let xs = v.grid().points();
    let mut out_x = vec![0.0];
    let mut out_phi = vec![0.0];
    let mut first_zero = None;
    let mut next = 1;
    'scan: while solver.t() < PI {
        let prev = solver.y()[0];
        solver.step(Some(PI))?;
        let cur = solver.y()[0];
        // φ leaves the origin upward, so any later sign change is a zero
        if solver.t_prev() > 0.0 && prev > 0.0 && cur <= 0.0 || solver.t_prev() == 0.0 && cur < 0.0 {
            let hit = locate_crossing(&mut solver, |y| y[0], 1e-10);
            while next < xs.len() && xs[next] < hit.t {
                out_x.push(xs[next]);
                out_phi.push(solver.dense(xs[next])[0]);
                next += 1;
            }
            if hit.t < PI {
                first_zero = Some(hit.t);
            }
            break 'scan;
        }
        while next < xs.len() && xs[next] <= solver.t() {
            out_x.push(xs[next]);
            out_phi.push(solver.dense(xs[next])[0]);
            next += 1;
        }
    }
    Ok(ComparisonVerdict {
        x: out_x,
        phi: out_phi,
        verdict: if first_zero.is_some() {
            Verdict::Unstable
        } else {
            Verdict::Stable
        },
        first_zero,
    })
}

/// Applies `L[v]ξ = εξ″ − vξ′ + (1 − v′)ξ` to grid samples.
fn apply_linearization(v: &SpectralField, xi: &SpectralField, epsilon: f64) -> Vec<f64> {
    let v1 = v.derivative_n(1);
    let xi1 = xi.derivative_n(1);
    let xi2 = xi.derivative_n(2);
    (0..v.values().len())
        .map(|i| {
            epsilon * xi2.values()[i] - v.values()[i] * xi1.values()[i]
                + (1.0 - v1.values()[i]) * xi.values()[i]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiReport {
    pub c: f64,
    pub chi_prime_at_0: f64,
    /// `max |L[v]χ + 2c(v′)²v|` over the grid.
    pub residual: f64,
    /// `min χ` over `[δ, π − δ]`.
    pub min_chi: f64,
    pub chi: Vec<f64>,
}

/// Margin from the walls used for the positivity of `χ`.
pub const CHI_MARGIN: f64 = 0.01;

/// Positive witness `χ = c(2v − εv″)` for `v > 0`, normalized by `χ′(0) = 1`.
///
/// It satisfies `L[v]χ = −2c(v′)²v` by the steady equation, which places the
/// top eigenvalue of `L[v]` below zero.
pub fn chi_witness(v: &SpectralField, epsilon: f64) -> Result<ChiReport> {
    require_profile(v, epsilon)?;
    let n = v.values().len();
    if v.values()[1..n - 1].iter().any(|&s| s <= 0.0) {
        return Err(Error::Precondition("chi witness needs v > 0 on (0, pi)".into()));
    }
    let vf = v.filtered(1e-13);
    let raw = vf.scale(2.0).sub(&vf.derivative_n(2).scale(epsilon))?;
    let slope0 = raw.derivative_n(1).coeffs().iter().sum::<f64>();
    let c = 1.0 / slope0;
    let chi = raw.scale(c);
    let chi_prime_at_0 = chi.derivative_n(1).coeffs().iter().sum::<f64>();
    let lchi = apply_linearization(&vf, &chi, epsilon);
    let v1 = vf.derivative_n(1);
    let residual = (0..n)
        .map(|i| {
            let w = v1.values()[i];
            (lchi[i] + 2.0 * c * w * w * vf.values()[i]).abs()
        })
        .fold(0.0, f64::max);
    let min_chi = v
        .grid()
        .points()
        .iter()
        .zip(chi.values())
        .filter(|(x, _)| **x >= CHI_MARGIN && **x <= PI - CHI_MARGIN)
        .map(|(_, c)| *c)
        .fold(f64::INFINITY, f64::min);
    Ok(ChiReport {
        c,
        chi_prime_at_0,
        residual,
        min_chi,
        chi: chi.values().to_vec(),
    })
}

/// `max |L[v]v′|` over interior points.
///
/// Holds by differentiating the steady equation; `v′` itself is not an
/// eigenfunction because it does not vanish at the walls.
pub fn translational_residual(v: &SpectralField, epsilon: f64) -> Result<f64> {
    if v.parity() != Parity::Odd {
        return Err(Error::Precondition("steady profile must be a sine series".into()));
    }
    let vf = v.filtered(1e-13);
    let lv = apply_linearization(&vf, &vf.derivative_n(1), epsilon);
    let n = lv.len();
    Ok(lv[1..n - 1].iter().fold(0.0, |m, r| m.max(r.abs())))
}

/// Eigenvalues of a discretization of `op` on `n_grid` intervals (or modes).
pub fn discrete_spectrum(op: &LinearizedOperator, n_grid: usize) -> Result<SpectrumReport> {
    if n_grid < 64 {
        return Err(Error::InvalidArgument(format!("n_grid = {n_grid} must be at least 64")));
    }
    match op.kind {
        OperatorKind::TrivialRs | OperatorKind::TrivialMs => trivial_galerkin(op, n_grid),
        OperatorKind::RsAboutV => rs_finite_difference(op, n_grid),
        OperatorKind::MsAboutV => ms_galerkin(op, n_grid),
    }
}

fn descending(mut e: Vec<f64>) -> Vec<f64> {
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// Mode-basis matrix of the linearization about zero. The basis starts at
/// `k = 1`; the constant mode is neutral and carries no growth information.
fn trivial_galerkin(op: &LinearizedOperator, n_modes: usize) -> Result<SpectrumReport> {
    let grid = crate::spectral::Grid::with_modes(n_modes + 1)?;
    let eps = op.epsilon;
    let m = n_modes;
    let mut a = DMatrix::zeros(m, m);
    for col in 0..m {
        let k = col + 1;
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        let phi = SpectralField::from_coeffs(&grid, Parity::Even, c);
        let diffusion = phi.derivative_n(2).scale(eps);
        let image = match op.kind {
            OperatorKind::TrivialRs => diffusion.add(&phi.remove_mean())?,
            _ => diffusion.add(&phi.dl_operator())?,
        };
        for row in 0..m {
            a[(row, col)] = image.coeffs()[row + 1];
        }
    }
    let eig = SymmetricEigen::new(a).eigenvalues;
    Ok(SpectrumReport {
        kind: op.kind,
        epsilon: eps,
        eigenvalues: descending(eig.iter().copied().collect()),
        n_grid: n_modes,
        weight_used: false,
        translational: None,
        max_imag: 0.0,
    })
}

/// Second-order finite differences on the Dirichlet interior points,
/// symmetrized with `ρ^{1/2}` in log arithmetic.
fn rs_finite_difference(op: &LinearizedOperator, n_grid: usize) -> Result<SpectrumReport> {
    let v = op
        .v
        .as_ref()
        .ok_or_else(|| Error::Precondition("RS_ABOUT_V needs a profile".into()))?;
    let eps = op.epsilon;
    require_profile(v, eps)?;
    let vf = v.filtered(1e-15);
    let theta = vf.antiderivative().into_field()?;
    let h = PI / n_grid as f64;
    let m = n_grid - 1;
    // log-weight ℓ = −ϑ/ε at nodes and midpoints
    let ell = |x: f64| -theta.eval(x) / eps;
    let node: Vec<f64> = (0..=n_grid).map(|i| ell(i as f64 * h)).collect();
    let mid: Vec<f64> = (0..n_grid).map(|i| ell((i as f64 + 0.5) * h)).collect();
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        let i = r + 1;
        let x = i as f64 * h;
        let [_, slope] = vf.eval_derivatives::<2>(x);
        let up = (mid[i] - node[i]).exp();
        let down = (mid[i - 1] - node[i]).exp();
        a[(r, r)] = -eps * (up + down) / (h * h) + (1.0 - slope);
        if r + 1 < m {
            let off = eps * (mid[i] - 0.5 * (node[i] + node[i + 1])).exp() / (h * h);
            a[(r, r + 1)] = off;
            a[(r + 1, r)] = off;
        }
    }
    let eig = SymmetricEigen::try_new(a, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigen-solver did not converge".into()))?
        .eigenvalues;
    Ok(SpectrumReport {
        kind: op.kind,
        epsilon: eps,
        eigenvalues: descending(eig.iter().copied().collect()),
        n_grid,
        weight_used: true,
        translational: None,
        max_imag: 0.0,
    })
}

/// Cosine Galerkin matrix of `ξ ↦ εξ″ − vξ′ + I(ξ)` on modes `0..n_modes`.
fn ms_galerkin(op: &LinearizedOperator, n_modes: usize) -> Result<SpectrumReport> {
    let v = op
        .v
        .as_ref()
        .ok_or_else(|| Error::Precondition("MS_ABOUT_V needs a profile".into()))?;
    if v.parity() != Parity::Odd {
        return Err(Error::Precondition("MS profile must be a sine series".into()));
    }
    let eps = op.epsilon;
    let b = v.coeffs();
    let m = n_modes;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        a[(k, k)] += kf - eps * kf * kf;
        // −v·(cos kx)′ = k Σ b_j sin(jx) sin(kx)
        for (j, &bj) in b.iter().enumerate().skip(1) {
            let lo = j.abs_diff(k);
            if lo < m {
                a[(lo, k)] += 0.5 * kf * bj;
            }
            if j + k < m {
                a[(j + k, k)] -= 0.5 * kf * bj;
            }
        }
    }
    let eig = a.complex_eigenvalues();
    if eig.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let t_idx = eig
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let translational = eig[t_idx].re;
    let max_imag = eig.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()));
    let rest = eig
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t_idx)
        .map(|(_, z)| z.re)
        .collect();
    Ok(SpectrumReport {
        kind: op.kind,
        epsilon: eps,
        eigenvalues: descending(rest),
        n_grid: n_modes,
        weight_used: false,
        translational: Some(translational),
        max_imag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_plane::{steady_solution, Sign};
    use crate::spectral::{Grid, GridSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_trivial_spectra() {
        let r = trivial_spectrum(TrivialEquation::Rs, 2.0, 3).unwrap();
        assert_eq!(r.eigenvalues, vec![-1.0, -7.0, -17.0]);
        let m = trivial_spectrum(TrivialEquation::Ms, 0.4, 3).unwrap();
        for (a, b) in m.eigenvalues.iter().zip([0.6, 0.4, -0.6]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_eq!(trivial_spectrum(TrivialEquation::Rs, 1.0, 1).unwrap().eigenvalues, vec![0.0]);
    }

    #[test]
    fn galerkin_reproduces_trivial_spectra() {
        for (op, eq) in [
            (LinearizedOperator::trivial_rs(2.0), TrivialEquation::Rs),
            (LinearizedOperator::trivial_ms(0.3), TrivialEquation::Ms),
        ] {
            let d = discrete_spectrum(&op, 64).unwrap();
            let c = trivial_spectrum(eq, op.epsilon, 10).unwrap();
            for (a, b) in d.eigenvalues.iter().zip(&c.eigenvalues) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_profile_is_stable_above_one() {
        let g = Grid::with_modes(32).unwrap();
        let zero = SpectralField::zeros(&g, Parity::Odd);
        let c = comparison_test(&zero, 2.0).unwrap();
        assert_eq!(c.verdict, Verdict::Stable);
        // φ = √ε sin(x/√ε)
        for (x, p) in c.x.iter().zip(&c.phi) {
            assert_abs_diff_eq!(*p, 2f64.sqrt() * (x / 2f64.sqrt()).sin(), epsilon = 1e-8);
        }
        let c = comparison_test(&zero, 0.5).unwrap();
        assert_eq!(c.verdict, Verdict::Unstable);
        assert_abs_diff_eq!(c.first_zero.unwrap(), PI * 0.5f64.sqrt(), epsilon = 1e-9);
        assert_eq!(translational_residual(&zero, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn first_branch_is_stable_and_second_is_not() {
        let spec = GridSpec::new(128);
        let v1 = steady_solution(1, Sign::Plus, 0.5, spec).unwrap();
        assert_eq!(comparison_test(&v1.v, 0.5).unwrap().verdict, Verdict::Stable);
        let s1 = discrete_spectrum(&LinearizedOperator::rs_about(v1.v.clone(), 0.5), 256).unwrap();
        assert!(s1.largest() < 0.0);

        let v2 = steady_solution(2, Sign::Plus, 0.2, spec).unwrap();
        let c2 = comparison_test(&v2.v, 0.2).unwrap();
        assert_eq!(c2.verdict, Verdict::Unstable);
        assert!(c2.first_zero.unwrap() < PI);
        let s2 = discrete_spectrum(&LinearizedOperator::rs_about(v2.v.clone(), 0.2), 256).unwrap();
        assert!(s2.largest() > 0.0);
    }

    #[test]
    fn chi_witness_properties() {
        let st = steady_solution(1, Sign::Plus, 0.5, GridSpec::new(128)).unwrap();
        let r = chi_witness(&st.v, 0.5).unwrap();
        assert!(r.residual < 1e-6, "residual {}", r.residual);
        assert!(r.min_chi > 0.0);
        assert_abs_diff_eq!(r.chi_prime_at_0, 1.0, epsilon = 1e-12);
        let neg = steady_solution(1, Sign::Minus, 0.5, GridSpec::new(128)).unwrap();
        assert!(matches!(chi_witness(&neg.v, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn translational_identity() {
        let st = steady_solution(2, Sign::Plus, 0.2, GridSpec::new(128)).unwrap();
        assert!(translational_residual(&st.v, 0.2).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_non_steady_profiles() {
        let g = Grid::with_modes(32).unwrap();
        let bogus = SpectralField::from_coeffs(&g, Parity::Odd, vec![0.0, 0.3]);
        assert!(matches!(comparison_test(&bogus, 0.5), Err(Error::Precondition(_))));
        assert!(discrete_spectrum(&LinearizedOperator::trivial_rs(1.0), 10).is_err());
    }
}
