use kgcontrol::field::norm_lp;
use kgcontrol::state::energy_norm;
use kgcontrol::strategy::{large_time_bound, positivity_time, select_a, PlanParams, Planner};
use kgcontrol::zero_sets::{state_zero_mask, zero_mask, zero_measure};
use kgcontrol::{make_field, BackgroundPotential, State, TorusField, TorusGrid};

fn grid(dim: usize, n: usize) -> TorusGrid {
    TorusGrid::new(dim, n).unwrap()
}

fn state(g: &TorusGrid, profile: &str, velocity: &str) -> State {
    State::new(make_field(g, profile).unwrap(), make_field(g, velocity).unwrap()).unwrap()
}

fn planner(g: &TorusGrid) -> Planner {
    Planner::new(&BackgroundPotential::zero(g), PlanParams::default())
}

#[test]
fn velocity_plan_with_unit_profile() {
    let g = grid(1, 64);
    let start = state(&g, "1", "0");
    let report = planner(&g).plan_velocity(&start, &make_field(&g, "sin(x)").unwrap(), 0.05).unwrap();
    assert!(report.is_clean(), "{report:?}");
    assert!(report.metric("division residual").unwrap() < 1e-5);
    assert!(report.achieved_error < 0.05, "{}", report.achieved_error);
    assert_eq!(report.total_time, report.schedule.total_time());
}

#[test]
fn velocity_plan_divides_off_the_zero_set() {
    let g = grid(1, 64);
    let start = state(&g, "sin(x)", "0");
    let p = planner(&g);
    let report = p.plan_velocity(&start, &make_field(&g, "sin(x)*cos(x)").unwrap(), 0.05).unwrap();
    assert!(report.is_clean(), "{:?}", report.failed_checks());
    assert!(report.metric("division residual").unwrap() < 1e-3);
    assert!(report.achieved_error < 0.05);

    let bad = p.plan_velocity(&start, &TorusField::constant(&g, 1.0), 0.05).unwrap();
    assert_eq!(bad.failed_checks(), vec!["velocity change vanishes on Z(w0)"]);
}

#[test]
fn three_arrow_plan_reaches_a_smooth_target() {
    let g = grid(1, 64);
    let start = state(&g, "1", "0");
    let target = state(&g, "1 + 0.2*cos(x)", "0.1*sin(2*x)");
    let eps = 0.1 * energy_norm(&target);
    let report = planner(&g).plan_stac(&start, &target, eps).unwrap();
    assert!(report.achieved_error <= eps, "{} vs {eps}: {:#?}", report.achieved_error, report.stages);
    assert!(report.total_time < 0.2, "{}", report.total_time);
    assert_eq!(report.stages.len(), 3);
}

#[test]
fn identical_states_need_no_schedule() {
    let g = grid(1, 32);
    let w = state(&g, "1 + 0.1*cos(x)", "sin(x)");
    let report = planner(&g).plan_stac(&w, &w, 0.01).unwrap();
    assert!(report.schedule.is_empty());
    assert_eq!(report.achieved_error, 0.0);
}

#[test]
fn zeros_of_the_profile_trigger_a_shift() {
    let g = grid(1, 64);
    let start = state(&g, "sin(x)", "cos(x)");
    let target = state(&g, "1 + 0.2*cos(x)", "0");
    let report = planner(&g).plan_stac(&start, &target, 0.5 * energy_norm(&target)).unwrap();
    assert_eq!(report.stages[0].name, "select a");
    assert!(report.hypotheses[0].passed);
}

#[test]
fn select_a_examples() {
    let g = grid(1, 64);
    let eta = 1e-6;
    let w = state(&g, "sin(x)", "cos(x)");
    let a = select_a(&w, eta).unwrap();
    assert_eq!(a, select_a(&w, eta).unwrap());
    let combined = w.profile().axpy(a, w.velocity()).unwrap();
    assert_eq!(zero_measure(&zero_mask(&combined, eta)), 0.0);
    assert_eq!(select_a(&state(&g, "sin(x)", "0"), eta).unwrap(), 1.0);

    let w = state(&g, "1 - arc(0.5, 2)", "1 - arc(3, 5)");
    let a = select_a(&w, eta).unwrap();
    let combined = w.profile().axpy(a, w.velocity()).unwrap();
    assert_eq!(zero_measure(&zero_mask(&combined, eta)), zero_measure(&state_zero_mask(&w, eta)));
    assert!(select_a(&State::zeros(&g), eta).is_err());
}

#[test]
fn reach_zero_phi_hypothesis() {
    let g = grid(1, 64);
    let p = planner(&g);
    let bad = p.plan_reach_zero_phi(&state(&g, "sin(x)", "1"), &make_field(&g, "abs(sin(x))").unwrap(), 0.1);
    let bad = bad.unwrap();
    assert!(bad.failed_checks().contains(&"Z(w0) = Z(W0) = Z(phi)"));
}

#[test]
fn reach_zero_phi_for_a_positive_profile() {
    let g = grid(1, 64);
    let start = state(&g, "1 + 0.3*cos(x)", "0");
    let phi = start.profile().clone();
    let target = State::new(TorusField::zeros(&g), phi.clone()).unwrap();
    let eps = 0.2 * energy_norm(&target);
    let report = planner(&g).plan_reach_zero_phi(&start, &phi, eps).unwrap();
    assert_eq!(report.stages.len(), 4);
    assert!(report.achieved_error <= eps, "{}", report.achieved_error);
}

#[test]
fn min_time_rejects_three_dimensions() {
    let g = grid(3, 8);
    let w = State::zeros(&g);
    assert!(planner(&g).plan_min_time(&w, &w, 0.1, 0.1).is_err());
}

#[test]
fn min_time_without_zeros_is_the_small_time_plan() {
    let g = grid(1, 64);
    let start = state(&g, "1", "0");
    let target = state(&g, "1 + 0.2*cos(x)", "0.1*sin(2*x)");
    let eps = 0.1 * energy_norm(&target);
    let report = planner(&g).plan_min_time(&start, &target, eps, 0.1).unwrap();
    assert_eq!(report.metric("r(W0)"), Some(0.0));
    assert!(report.stages.iter().all(|s| s.name.starts_with("stac")));
    assert!(report.achieved_error <= eps);
}

#[test]
fn large_time_bounds() {
    let g = grid(1, 64);
    let b = large_time_bound(&make_field(&g, "1 + 0.5*cos(x)").unwrap()).unwrap();
    assert!((b.mean - 1.0).abs() < 1e-14);
    assert!((b.fourier_sum - 0.5).abs() < 1e-14);
    assert!((b.t1 - 0.5).abs() < 1e-14);
    let flat = large_time_bound(&TorusField::constant(&g, 1.0)).unwrap();
    assert_eq!(flat.t1, 0.0);
    assert!(large_time_bound(&make_field(&g, "cos(x)").unwrap()).is_err());
}

#[test]
fn positivity_times() {
    let g = grid(1, 512);
    let arc = make_field(&g, "1 - sball(pi, 0.6, 0.2)").unwrap();
    let report = positivity_time(&arc, 1e-6).unwrap();
    let t = report.time.unwrap();
    assert!(t > 0.6 && t <= 0.7 + 1e-12, "{t}");
    assert!((report.inscribed_radius - 0.6).abs() <= 2.0 * g.spacing(), "{}", report.inscribed_radius);

    let one = positivity_time(&TorusField::constant(&g, 1.0), 1e-6).unwrap();
    assert_eq!(one.time, Some(0.05));
    assert_eq!(one.bound, Some(0.0));
    assert!(positivity_time(&make_field(&g, "cos(x)").unwrap(), 1e-6).is_err());
}

#[test]
fn positivity_time_in_two_dimensions() {
    let g = grid(2, 128);
    let ball = make_field(&g, "1 - sball(pi, pi, 0.6, 0.3)").unwrap();
    let t = positivity_time(&ball, 1e-6).unwrap().time.unwrap();
    assert!(t > 0.6 && t <= 0.7 + 1e-12, "{t}");
    assert!(norm_lp(&ball, f64::INFINITY).unwrap() > 0.0);
}
