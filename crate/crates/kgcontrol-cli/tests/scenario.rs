use kgcontrol_cli::scenario::{PlannerKind, TargetSpec};
use kgcontrol_cli::{ExitStatus, HarnessError, Overrides, Scenario};

const VELOCITY: &str = r#"
name = "velocity"
planner = "velocity"
eps = 0.05

[grid]
dim = 1
n = 64

[start]
profile = "1"

[target]
kind = "velocity"
velocity = "sin(x)"
"#;

#[test]
fn parses_a_velocity_scenario() {
    let s = Scenario::parse(VELOCITY).unwrap();
    assert_eq!(s.planner, PlannerKind::Velocity);
    assert_eq!(s.start.velocity, "0");
    assert!(matches!(s.target, Some(TargetSpec::Velocity { .. })));
    let grid = s.make_grid().unwrap();
    assert_eq!(s.start(&grid).unwrap().profile().min(), 1.0);
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let broken = VELOCITY.replace("n = 64", "n = = 64");
    let err = Scenario::parse(&broken).unwrap_err();
    assert_eq!(err.status(), ExitStatus::Usage);
    assert!(err.to_string().contains("line 8"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let err = Scenario::parse(&VELOCITY.replace("eps = 0.05", "eps = 0.05\nepsilon = 1")).unwrap_err();
    assert!(err.to_string().contains("epsilon"), "{err}");
}

#[test]
fn field_diagnostics_name_the_field() {
    let wrong_kind = VELOCITY.replace("kind = \"velocity\"\nvelocity", "kind = \"phi\"\nphi");
    match Scenario::parse(&wrong_kind).unwrap_err() {
        HarnessError::Field { field, .. } => assert_eq!(field, "target.kind"),
        other => panic!("{other:?}"),
    }
    let s = Scenario::parse(&VELOCITY.replace("profile = \"1\"", "profile = \"1 + \"")).unwrap();
    let grid = s.make_grid().unwrap();
    match s.start(&grid).unwrap_err() {
        HarnessError::Field { field, message } => {
            assert_eq!(field, "start.profile");
            assert!(message.contains("column"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let no_eps = VELOCITY.replace("eps = 0.05", "");
    assert!(matches!(Scenario::parse(&no_eps), Err(HarnessError::Field { field, .. }) if field == "eps"));
}

#[test]
fn ladders_must_decrease() {
    let s = format!("{VELOCITY}\n[plan]\ntau_ladder = [1e-3, 1e-2]\n");
    assert!(matches!(Scenario::parse(&s), Err(HarnessError::Field { field, .. }) if field == "plan.tau_ladder"));
    let mut ok = Scenario::parse(VELOCITY).unwrap();
    let bad = Overrides { tau_ladder: Some(vec![0.1, 0.1]), ..Overrides::default() };
    assert!(ok.apply(&bad).is_err());
}

#[test]
fn hash_ignores_the_output_directory_only() {
    let a = Scenario::parse(VELOCITY).unwrap();
    let mut b = a.clone();
    b.apply(&Overrides { out_dir: Some("elsewhere".into()), ..Overrides::default() }).unwrap();
    assert_eq!(a.hash(), b.hash());
    b.apply(&Overrides { seed: Some(9), ..Overrides::default() }).unwrap();
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn serialization_round_trips() {
    let s = Scenario::parse(&format!("{VELOCITY}\n[[schedule]]\nduration = 0.1\ncontrol = [1, 0, 0]\n")).unwrap();
    assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
}

#[test]
fn schedules_match_the_dimension() {
    let s = format!("{VELOCITY}\n[[schedule]]\nduration = 0.1\ncontrol = [1, 0]\n");
    assert!(matches!(Scenario::parse(&s), Err(HarnessError::Field { field, .. }) if field == "schedule[0].control"));
}

#[test]
fn sweep_parameters_are_checked() {
    let s = format!("{VELOCITY}\n[sweep.parameters]\nwidth = [1.0]\n");
    assert!(Scenario::parse(&s).is_err());
    let s = Scenario::parse(&format!("{VELOCITY}\n[sweep.parameters]\nn = [32.5]\n")).unwrap();
    assert!(s.with_parameter("n", 32.5).is_err());
    assert_eq!(s.with_parameter("n", 32.0).unwrap().grid.n, 32);
}
