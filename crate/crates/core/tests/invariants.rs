use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use flamelab::evolution::{integrate, seeded_noise, Equation, EvolutionProblem};
use flamelab::phase_plane::{sample_orbit, steady_solution_on, Sign};
use flamelab::poles::{
    bicoalescent_steady, complex_velocity, flow_to_steady, force_f, liapunov_free, PoleSet,
};
use flamelab::spectral::{Grid, GridSpec, Parity, SpectralField};
use flamelab::stability::{
    chi_witness, comparison_test, discrete_spectrum, trivial_spectrum, LinearizedOperator,
    TrivialEquation,
};

fn coeffs(max_mode: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..=max_mode)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dl_operator_is_exact(k in 1usize..42) {
        let g = Grid::with_modes(64).unwrap();
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        let f = SpectralField::from_coeffs(&g, Parity::Even, c);
        let d = f.dl_operator();
        for (j, a) in d.coeffs().iter().enumerate() {
            let expect = if j == k { k as f64 } else { 0.0 };
            prop_assert!((a - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_inverts_antiderivative(c in coeffs(40), odd in any::<bool>()) {
        let g = Grid::with_modes(64).unwrap();
        let mut c = c;
        let parity = if odd { Parity::Odd } else { Parity::Even };
        c[0] = 0.0;
        let f = SpectralField::from_coeffs(&g, parity, c);
        let back = f.antiderivative().into_field().unwrap().derivative_n(1);
        let err = back.sub(&f).unwrap().max_abs();
        prop_assert!(err <= 1e-10, "error {err:e}");
    }

    #[test]
    fn dealiased_products_are_exact(a in coeffs(20), b in coeffs(20)) {
        // cutoff of 64 modes is 42; both factors stay below it
        let g = Grid::with_modes(64).unwrap();
        let fa = SpectralField::from_coeffs(&g, Parity::Even, a.clone());
        let fb = SpectralField::from_coeffs(&g, Parity::Even, b.clone());
        let p = fa.product(&fb).unwrap().dealiased();
        // cos(ix)cos(jx) = ½cos((i−j)x) + ½cos((i+j)x)
        let mut exact = vec![0.0; 64];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                exact[i.abs_diff(j)] += 0.5 * x * y;
                exact[i + j] += 0.5 * x * y;
            }
        }
        for (got, want) in p.coeffs().iter().zip(&exact) {
            prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn pole_gradient_identity(
        eps in 0.05..0.5f64,
        steps in prop::collection::vec(0.1..0.8f64, 1..5),
        split in 0usize..5,
    ) {
        let mut y = 0.0;
        let heights: Vec<f64> = steps.iter().map(|s| { y += s; y }).collect();
        let n0 = split.min(heights.len() - 1) + 1;
        let set = PoleSet::two_line(eps, &heights[..n0], &heights[n0..]).unwrap();
        let f = force_f(&set).unwrap();
        let mut poles: Vec<(bool, f64)> =
            set.pairs.iter().map(|p| (p.line != 0.0, p.height)).collect();
        let conj: Vec<(bool, f64)> = poles.iter().map(|&(l, y)| (l, -y)).collect();
        poles.extend(conj);
        let h = 1e-6;
        for (j, fj) in f.iter().enumerate() {
            let (mut a, mut b) = (poles.clone(), poles.clone());
            a[j].1 += h;
            b[j].1 -= h;
            let g = (liapunov_free(eps, &a) - liapunov_free(eps, &b)) / (2.0 * h);
            prop_assert!((g - fj).abs() <= 1e-6);
        }
    }

    #[test]
    fn two_line_sets_keep_their_lines(
        eps in 0.05..0.5f64,
        steps in prop::collection::vec(0.1..0.8f64, 1..5),
        split in 0usize..5,
    ) {
        let mut y = 0.0;
        let heights: Vec<f64> = steps.iter().map(|s| { y += s; y }).collect();
        let n0 = split.min(heights.len());
        let n0 = if n0 == 0 { 1 } else { n0 };
        let set = PoleSet::two_line(eps, &heights[..n0], &heights[n0..]).unwrap();
        let z = set.complex_poles();
        let w = complex_velocity(&z, eps).unwrap();
        let f = force_f(&set).unwrap();
        let n = set.n();
        for j in 0..n {
            prop_assert!(w[j].re.abs() <= 1e-12 && w[j + n].re.abs() <= 1e-12);
            prop_assert!((w[j].im - f[j]).abs() <= 1e-12);
            prop_assert!((w[j + n] - w[j].conj()).norm() <= 1e-12);
        }
    }
}

#[test]
fn complex_velocity_rejects_coincident_poles() {
    let z = [Complex64::new(0.0, 0.5), Complex64::new(0.0, 0.5)];
    assert!(complex_velocity(&z, 0.2).is_err());
}

fn solution_at(problem: &EvolutionProblem, init: &SpectralField) -> SpectralField {
    integrate(problem, init).unwrap().pop().unwrap().field
}

#[test]
fn etdrk4_converges_at_fourth_order() {
    // kept out of the stiff regime dt·εk² ≫ 1, where the observed order dips
    // below four before recovering
    let spec = GridSpec::new(16);
    let grid = Grid::new(spec).unwrap();
    let init = seeded_noise(&grid, Parity::Even, 1, 4, 0.3);
    let run = |dt: f64| {
        let mut p = EvolutionProblem::new(Equation::Ms, 0.3, spec);
        p.dt = dt;
        p.t_end = 1.0;
        p.sample_every = 1_000_000;
        solution_at(&p, &init)
    };
    let reference = run(1.0 / 5120.0);
    let errs: Vec<f64> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| run(dt).sub(&reference).unwrap().max_abs())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() < 0.3, "observed order {order} from {errs:?}");
    }
}

#[test]
fn rs_front_stays_centered() {
    let spec = GridSpec::new(32);
    let grid = Grid::new(spec).unwrap();
    let init = seeded_noise(&grid, Parity::Even, 2, 6, 0.2);
    let mut p = EvolutionProblem::new(Equation::Rs, 0.4, spec);
    p.sample_every = 50;
    for s in integrate(&p, &init).unwrap() {
        assert!(s.field.remove_mean().mean().abs() <= 1e-13);
    }
}

#[test]
fn orbits_are_reversible() {
    let eps: f64 = 0.3;
    let t = flamelab::phase_plane::orbit_period(eps, 0.8).unwrap().period;
    let xs: Vec<f64> = (0..=400).map(|i| t * i as f64 / 400.0).collect();
    let s = sample_orbit(eps, 0.8, &xs).unwrap();
    let half = s.len() / 2;
    let first = s[..=half].iter().fold(0.0_f64, |m, o| m.max(o.p.abs()));
    let second = s[half..].iter().fold(0.0_f64, |m, o| m.max(o.p.abs()));
    assert!((first - second).abs() <= 1e-9);
    // p → −p about the half period
    for i in 0..=half {
        assert!((s[i].p + s[s.len() - 1 - i].p).abs() <= 1e-9);
    }
}

#[test]
fn steady_states_stay_fixed_under_evolution() {
    let spec = GridSpec::new(128);
    let grid = Grid::new(spec).unwrap();
    for (j, eps) in [(1, 0.5), (2, 0.2)] {
        let s = steady_solution_on(j, Sign::Plus, eps, &grid).unwrap();
        let mut p = EvolutionProblem::new(Equation::Uform, eps, spec);
        p.sample_every = 1000;
        let u = solution_at(&p, &s.v);
        let drift = u.sub(&s.v).unwrap().h1_norm();
        assert!(drift <= 1e-6, "j = {j}: drift {drift:e}");
    }
}

#[test]
fn verdicts_match_spectra_beyond_discretization_error() {
    let grid = Grid::with_modes(256).unwrap();
    for (j, eps) in [(1, 0.5), (1, 0.2), (2, 0.2), (2, 0.12)] {
        let v = steady_solution_on(j, Sign::Plus, eps, &grid).unwrap().v;
        let verdict = comparison_test(&v, eps).unwrap().verdict;
        let top = |n: usize| {
            discrete_spectrum(&LinearizedOperator::rs_about(v.clone(), eps), n)
                .unwrap()
                .largest()
        };
        let (a, b) = (top(512), top(1024));
        let err = (a - b).abs();
        assert!(a.abs() > 10.0 * err, "j = {j}, eps = {eps}: {a} vs {b}");
        assert_eq!(a > 0.0, verdict.to_string() == "UNSTABLE", "j = {j}, eps = {eps}");
    }
}

#[test]
fn comparison_solution_dominates_the_witness() {
    let grid = Grid::with_modes(256).unwrap();
    for eps in [0.5, 0.3] {
        let v = steady_solution_on(1, Sign::Plus, eps, &grid).unwrap().v;
        let cmp = comparison_test(&v, eps).unwrap();
        let chi = chi_witness(&v, eps).unwrap();
        let xs = grid.points();
        let delta = 0.01;
        let mut checked = 0;
        for (i, &x) in xs.iter().enumerate() {
            if x > PI - delta || i >= cmp.phi.len() {
                continue;
            }
            let bound = chi.chi[i] / chi.chi_prime_at_0;
            assert!(cmp.phi[i] >= bound - 1e-8, "x = {x}: {} < {bound}", cmp.phi[i]);
            checked += 1;
        }
        assert!(checked > 100);
    }
}

#[test]
fn trivial_galerkin_matches_closed_forms() {
    for eps in [0.05, 0.4, 2.0] {
        for (op, eq) in [
            (LinearizedOperator::trivial_rs(eps), TrivialEquation::Rs),
            (LinearizedOperator::trivial_ms(eps), TrivialEquation::Ms),
        ] {
            let closed = trivial_spectrum(eq, eps, 10).unwrap().eigenvalues;
            let mut galerkin = discrete_spectrum(&op, 64).unwrap().eigenvalues;
            galerkin.truncate(64);
            for c in closed {
                let best = galerkin.iter().map(|g| (g - c).abs()).fold(f64::INFINITY, f64::min);
                assert!(best <= 1e-6, "eps = {eps}: {c} missing");
            }
        }
    }
}

#[test]
fn liapunov_rate_matches_squared_forces() {
    let set = PoleSet::two_line(0.15, &[0.3, 0.9], &[0.6]).unwrap();
    let (_, rep) = flow_to_steady(&set, 5.0, 1e-9).unwrap();
    let mut checked = 0;
    for i in 1..rep.times.len() - 1 {
        let dt = rep.times[i + 1] - rep.times[i - 1];
        if dt > 0.05 || rep.ascent_rates[i] < 1e-6 {
            continue;
        }
        let fd = (rep.liapunov_values[i + 1] - rep.liapunov_values[i - 1]) / dt;
        assert!((fd - rep.ascent_rates[i]).abs() <= 0.05 * rep.ascent_rates[i], "{fd} vs {}", rep.ascent_rates[i]);
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn equal_height_pair_matches_rescaled_single_pair() {
    let grid = Grid::with_modes(128).unwrap();
    for eps in [0.15, 0.2, 0.3] {
        let base = flamelab::poles::coalescent_steady(1, 2.0 * eps, 0.0).unwrap();
        let r = flamelab::poles::rescale_solution(base, 2).unwrap();
        let (bi, _) = bicoalescent_steady(1, 1, eps, &[0.5, 0.5]).unwrap();
        for &x in grid.points() {
            let a = flamelab::poles::RescaledProfile::eval(&r, x);
            let b: f64 = bi
                .pairs
                .iter()
                .map(|p| -eps * 2.0 * (x - p.line).sin() / (p.height.cosh() - (x - p.line).cos()))
                .sum();
            assert!((a - b).abs() <= 1e-10);
        }
    }
}
