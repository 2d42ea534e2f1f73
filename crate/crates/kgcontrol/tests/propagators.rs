//! Frozen oracles for the exact flows, the split-step integrator and the
//! algebraic identities between the generators.

use std::f64::consts::PI;

use kgcontrol::propagators::{exp_b, exp_bstar, exp_f, free_propagate, Integrator, StepRule};
use kgcontrol::state::{energy_distance, energy_norm, State};
use kgcontrol::{make_field, BackgroundPotential, ControlVector, Schedule, TorusField, TorusGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(1, n).unwrap()
}

fn state(g: &TorusGrid, w: &str, v: &str) -> State {
    State::new(make_field(g, w).unwrap(), make_field(g, v).unwrap()).unwrap()
}

fn random_state(g: &TorusGrid, band: i64, rng: &mut ChaCha8Rng) -> State {
    let mut field = || {
        let mut c = vec![Complex64::default(); g.len()];
        for (idx, slot) in c.iter_mut().enumerate() {
            let f = g.frequency(idx);
            if f[..g.dim()].iter().all(|k| k.abs() <= band) {
                *slot = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        TorusField::from_spectral(g, c).unwrap()
    };
    let w = field();
    let v = field();
    State::new(w, v).unwrap()
}

fn rel(a: &State, b: &State) -> f64 {
    energy_distance(a, b).unwrap() / energy_norm(b).max(1e-300)
}

#[test]
fn massive_free_flow_of_constant_velocity() {
    let g = grid(32);
    for t in [0.3, 1.7, -2.2] {
        let out = free_propagate(&state(&g, "0", "1"), t, true);
        let expect = State::new(TorusField::constant(&g, t.sin()), TorusField::constant(&g, t.cos())).unwrap();
        assert!(energy_distance(&out, &expect).unwrap() < 1e-14);
    }
}

#[test]
fn massless_zero_mode_grows_linearly() {
    let g = grid(32);
    let out = free_propagate(&state(&g, "0", "2.5"), 0.8, false);
    let expect = State::new(TorusField::constant(&g, 2.0), TorusField::constant(&g, 2.5)).unwrap();
    assert!(energy_distance(&out, &expect).unwrap() < 1e-14);
}

#[test]
fn free_flow_is_a_group() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random_state(&g, 12, &mut rng);
    for massive in [true, false] {
        let back = free_propagate(&free_propagate(&w, 3.1, massive), -3.1, massive);
        assert!(rel(&back, &w) < 1e-12);
    }
}

#[test]
fn multiplier_flow_oracles() {
    let g = grid(64);
    let w = state(&g, "1 + 0.3*cos(x)", "sin(2*x)");
    let zero = TorusField::zeros(&g);
    assert_eq!(exp_b(&w, &zero).unwrap(), w);
    let kicked = exp_b(&state(&g, "1", "0"), &make_field(&g, "sin(x)").unwrap()).unwrap();
    assert!(energy_distance(&kicked, &state(&g, "1", "sin(x)")).unwrap() < 1e-14);
    let phi = make_field(&g, "cos(x)").unwrap();
    let psi = make_field(&g, "0.5*sin(3*x)").unwrap();
    let twice = exp_b(&exp_b(&w, &phi).unwrap(), &psi).unwrap();
    let once = exp_b(&w, &phi.add(&psi).unwrap()).unwrap();
    assert!(energy_distance(&twice, &once).unwrap() < 1e-12);
}

#[test]
fn profile_shift_oracles() {
    let g = grid(64);
    let w = state(&g, "1 + 0.3*cos(x)", "sin(2*x)");
    assert_eq!(exp_bstar(&w, 0.0), w);
    let shifted = exp_bstar(&w, 1.0);
    assert!(energy_distance(&shifted, &state(&g, "1 + 0.3*cos(x) + sin(2*x)", "sin(2*x)")).unwrap() < 1e-13);
    // (0, φ) → e^{−φB}... chain: (0, φ) −B*→ (φ, φ) −(−1)B→ (φ, 0)? The
    // displayed chain reaches (0, φ) from (−φ, φ) with a unit profile shift.
    let start = state(&g, "-cos(x)", "cos(x)");
    let end = exp_bstar(&start, 1.0);
    assert!(energy_distance(&end, &state(&g, "0", "cos(x)")).unwrap() < 1e-14);
}

#[test]
fn dilation_oracles() {
    let g = grid(64);
    let w = state(&g, "1 + 0.3*cos(x)", "sin(2*x)");
    assert_eq!(exp_f(&w, 0.0).unwrap(), w);
    let d = exp_f(&w, 2f64.ln()).unwrap();
    assert!(energy_distance(&d, &state(&g, "0.5 + 0.15*cos(x)", "2*sin(2*x)")).unwrap() < 1e-14);
    assert!(rel(&exp_f(&d, -(2f64.ln())).unwrap(), &w) < 1e-15);
    assert!(exp_f(&w, 51.0).is_err());
}

#[test]
fn splitting_is_exact_without_multiplier() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = random_state(&g, 10, &mut rng);
    let integ = Integrator::new(&BackgroundPotential::zero(&g), StepRule::fixed(0.01));
    let out = integ.evolve_segment(&w, &ControlVector::zero(1), 0.37).unwrap();
    assert!(rel(&out, &free_propagate(&w, 0.37, true)) < 1e-12);
}

#[test]
fn rejects_nonpositive_duration_and_step() {
    let g = grid(16);
    let w = state(&g, "1", "0");
    let integ = Integrator::new(&BackgroundPotential::zero(&g), StepRule::default());
    assert!(integ.evolve_segment(&w, &ControlVector::zero(1), 0.0).is_err());
    assert!(kgcontrol::propagators::evolve_segment(&w, &BackgroundPotential::zero(&g), &ControlVector::zero(1), 0.1, 0.0).is_err());
}

/// Richardson comparison of Strang steps against a dt/8 reference.
fn strang_ratio() -> f64 {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_state(&g, 6, &mut rng);
    let v = BackgroundPotential::new(make_field(&g, "cos(x)").unwrap());
    let u = ControlVector::new(1, vec![1.0, 0.3, -0.2]).unwrap();
    let run = |dt: f64| Integrator::new(&v, StepRule::fixed(dt)).evolve_segment(&w, &u, 0.5).unwrap();
    let dt = 0.05;
    let reference = run(dt / 8.0);
    let e1 = energy_distance(&run(dt), &reference).unwrap();
    let e2 = energy_distance(&run(dt / 2.0), &reference).unwrap();
    e1 / e2
}

#[test]
fn strang_splitting_is_second_order() {
    let ratio = strang_ratio();
    // The dt/8 reference carries error 1/64 of e(dt), which biases the
    // plain ratio; 4 ± 0.5 still holds comfortably.
    assert!((ratio - 4.0).abs() <= 0.5, "error ratio {ratio}");
}

#[test]
fn energy_growth_is_bounded_by_multiplier_size() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = random_state(&g, 6, &mut rng);
    let v = BackgroundPotential::new(make_field(&g, "cos(x)").unwrap());
    let u = ControlVector::new(1, vec![1.0, 0.3, -0.2]).unwrap();
    let out = Integrator::new(&v, StepRule::default()).evolve_segment(&w, &u, 0.5).unwrap();
    // ‖m‖_∞ ≤ 1 + 1 + 0.3 + 0.2; the multiplier operator norm on H¹×L² is at most that.
    let bound = (2.5f64 * 0.5).exp();
    assert!(energy_norm(&out) <= bound * energy_norm(&w));
}

#[test]
fn short_large_pulse_approaches_the_multiplier_flow() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_state(&g, 6, &mut rng);
    let target = exp_b(&w, &TorusField::constant(&g, 2.0)).unwrap();
    let integ = Integrator::new(&BackgroundPotential::zero(&g), StepRule::default());
    let err = |tau: f64| {
        let mut s = Schedule::new(1);
        s.push(tau, ControlVector::unit(1, 0, 2.0 / tau)).unwrap();
        rel(&integ.run(&w, &s).unwrap(), &target)
    };
    assert!(err(1e-3) < err(1e-2));
}

#[test]
fn simulation_concatenates() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = random_state(&g, 6, &mut rng);
    let integ = Integrator::new(&BackgroundPotential::new(make_field(&g, "0.5*sin(x)").unwrap()), StepRule::default());
    let mut a = Schedule::new(1);
    a.push(0.2, ControlVector::new(1, vec![1.0, 0.0, 2.0]).unwrap()).unwrap();
    let mut b = Schedule::new(1);
    b.push(0.3, ControlVector::new(1, vec![-1.0, 0.5, 0.0]).unwrap()).unwrap();
    let split = integ.run(&integ.run(&w, &a).unwrap(), &b).unwrap();
    let joined = integ.run(&w, &a.clone().then(&b).unwrap()).unwrap();
    assert!(rel(&split, &joined) < 1e-14);
    let traj = integ.simulate(&w, &Schedule::new(1)).unwrap();
    assert_eq!(traj.points.len(), 1);
    assert_eq!(traj.points[0].0, 0.0);
}

#[test]
fn reversed_splitting_returns_to_start() {
    let g = grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = random_state(&g, 6, &mut rng);
    let integ = Integrator::new(&BackgroundPotential::new(make_field(&g, "cos(x)").unwrap()), StepRule::fixed(0.01));
    let u = ControlVector::new(1, vec![2.0, -1.0, 0.5]).unwrap();
    let fwd = integ.evolve_segment(&w, &u, 0.4).unwrap();
    let back = integ.evolve_reverse(&fwd, &u, 0.4).unwrap();
    assert!(rel(&back, &w) < 1e-10);
}

/// Pointwise flow of the trace-free matrix `[[γ, 0], [c, −γ]]` for time `h`.
fn pointwise_flow(state: &State, gamma: &[f64], lower: &[f64], h: f64) -> State {
    let g = state.grid();
    let (w, v) = (state.profile().physical(), state.velocity().physical());
    let mut nw = vec![0.0; g.len()];
    let mut nv = vec![0.0; g.len()];
    for i in 0..g.len() {
        let (gam, c) = (gamma[i], lower[i]);
        let (ch, sh) = if gam.abs() < 1e-12 { (1.0, h) } else { ((h * gam).cosh(), (h * gam).sinh() / gam) };
        nw[i] = ch * w[i] + sh * gam * w[i];
        nv[i] = sh * c * w[i] + ch * v[i] - sh * gam * v[i];
    }
    State::new(TorusField::from_physical(g, nw).unwrap(), TorusField::from_physical(g, nv).unwrap()).unwrap()
}

/// Strang splitting of `A + N` with `N = [[γ, 0], [c, −γ]]` pointwise.
fn split_flow(state: &State, gamma: &[f64], lower: &[f64], t: f64, steps: usize) -> State {
    let h = t / steps as f64;
    let mut s = state.clone();
    for _ in 0..steps {
        s = free_propagate(&s, 0.5 * h, true);
        s = pointwise_flow(&s, gamma, lower, h);
        s = free_propagate(&s, 0.5 * h, true);
    }
    s
}

#[test]
fn conjugation_by_multiplier_flow_matches_the_shifted_generator() {
    let g = grid(64);
    let w = state(&g, "1 + 0.3*cos(x)", "0.2*sin(2*x)");
    let v = make_field(&g, "0.5*cos(x)").unwrap();
    let t = 0.1;
    for gamma_src in ["0.7", "sin(x)"] {
        let gamma = make_field(&g, gamma_src).unwrap();
        let lhs = {
            let s = exp_b(&w, &gamma).unwrap();
            let integ = Integrator::new(&BackgroundPotential::new(v.clone()), StepRule::fixed(t / 400.0));
            let s = integ.evolve_segment(&s, &ControlVector::zero(1), t).unwrap();
            exp_b(&s, &gamma.scale(-1.0)).unwrap()
        };
        let gam = gamma.physical().to_vec();
        let lower: Vec<f64> = v.physical().iter().zip(&gam).map(|(vi, gi)| vi - gi * gi).collect();
        let rhs = split_flow(&w, &gam, &lower, t, 400);
        assert!(rel(&lhs, &rhs) < 1e-5, "γ = {gamma_src}: {}", rel(&lhs, &rhs));
    }
}

#[test]
fn conjugated_squared_drift_is_a_dilation_generator() {
    let g = grid(64);
    let w = state(&g, "1 + 0.3*cos(x)", "0.2*sin(2*x)");
    let v = make_field(&g, "0.5*cos(x)").unwrap();
    let (gamma, t) = (1.3, 0.1);
    let integ = Integrator::new(&BackgroundPotential::new(v.clone()), StepRule::fixed(t / 400.0));
    let lhs = {
        let s = exp_b(&w, &TorusField::constant(&g, gamma)).unwrap();
        let s = integ.evolve_segment(&s, &ControlVector::unit(1, 0, gamma * gamma), t).unwrap();
        exp_b(&s, &TorusField::constant(&g, -gamma)).unwrap()
    };
    let gam = vec![gamma; g.len()];
    let rhs = split_flow(&w, &gam, v.physical(), t, 400);
    assert!(rel(&lhs, &rhs) < 1e-5, "{}", rel(&lhs, &rhs));
}

type M2 = [[f64; 2]; 2];

fn mm(a: M2, b: M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn bracket(a: M2, b: M2) -> M2 {
    let (x, y) = (mm(a, b), mm(b, a));
    [[x[0][0] - y[0][0], x[0][1] - y[0][1]], [x[1][0] - y[1][0], x[1][1] - y[1][1]]]
}

#[test]
fn generator_commutators_on_each_mode() {
    let b: M2 = [[0.0, 0.0], [1.0, 0.0]];
    let f: M2 = [[-1.0, 0.0], [0.0, 1.0]];
    for n in 0..6 {
        let lap_minus_one = -(1.0 + (n * n) as f64);
        let a: M2 = [[0.0, 1.0], [lap_minus_one, 0.0]];
        assert_eq!(bracket(b, a), f);
        assert_eq!(bracket(b, bracket(b, a)), [[0.0, 0.0], [-2.0, 0.0]]);
        let mut ad = a;
        for j in 1..5 {
            ad = bracket(f, ad);
            let expect: M2 = [[0.0, (-2f64).powi(j)], [2f64.powi(j) * lap_minus_one, 0.0]];
            assert_eq!(ad, expect);
        }
    }
    // Sanity for the exact dilation: e^{δF} = diag(e^{−δ}, e^{δ}).
    let _ = PI;
}
