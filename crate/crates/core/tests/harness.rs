use smooth_track::baselines::{dp_reach_distance, optimal_reach, DpOptions, OptimalReachSpec};
use smooth_track::harness::{
    arc_sequence_scenario, compute_metrics, run_closed_loop, ControllerSpec, InitialState,
    MetricsOptions, PlantSpec, Scenario,
};
use smooth_track::plant::{DisturbanceSpec, SpeedProfile};
use smooth_track::ref_path::PathSpec;
use smooth_track::smc::{ControllerParams, WheelError};

fn csv_bytes(sc: &Scenario) -> Vec<u8> {
    let mut buf = Vec::new();
    run_closed_loop(sc).unwrap().write_csv(&mut buf).unwrap();
    buf
}

fn straight(controller: ControllerSpec, e: f64) -> Scenario {
    Scenario {
        name: "straight".into(),
        path: PathSpec::from_rows(&[(0.0, 300.0)]),
        plant: PlantSpec::Kinematic {
            wheelbase: 2.7,
            delta_max: 0.5,
        },
        speed: SpeedProfile::Constant { v: 5.0 },
        initial: InitialState {
            e,
            ..InitialState::default()
        },
        controller,
        controller_rate_hz: 50.0,
        plant_dt: 1e-3,
        disturbance: DisturbanceSpec::default(),
        duration: 20.0,
        abort_bound: 20.0,
    }
}

fn c1() -> ControllerSpec {
    ControllerSpec::Proposed(ControllerParams::c1(0.1, 2.245, 1.5, 0.3))
}

#[test]
fn noisy_runs_are_bit_identical() {
    let mut sc = arc_sequence_scenario();
    sc.duration = 6.0;
    assert_eq!(csv_bytes(&sc), csv_bytes(&sc));
}

#[test]
fn seed_changes_the_trace() {
    let mut sc = arc_sequence_scenario();
    sc.duration = 3.0;
    let a = csv_bytes(&sc);
    sc.disturbance.seed += 1;
    assert_ne!(a, csv_bytes(&sc));
}

#[test]
fn on_path_start_stays_on_path() {
    let t = run_closed_loop(&straight(c1(), 0.0)).unwrap();
    let worst = t.rows.iter().map(|r| r.e.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "max |e| = {worst}");
}

#[test]
fn halving_the_plant_step_keeps_metrics() {
    let mut sc = arc_sequence_scenario();
    sc.duration = 12.0;
    let opts = MetricsOptions::default();
    let a = compute_metrics(&run_closed_loop(&sc).unwrap(), &opts);
    sc.plant_dt *= 0.5;
    let b = compute_metrics(&run_closed_loop(&sc).unwrap(), &opts);
    for (name, x, y) in [
        ("t_reach", a.t_reach, b.t_reach),
        ("reach_distance", a.reach_distance, b.reach_distance),
        ("max_e_l_post", a.max_e_l_post, b.max_e_l_post),
        ("std_ddelta", a.std_ddelta, b.std_ddelta),
        ("std_dddelta", a.std_dddelta, b.std_dddelta),
    ] {
        let rel = (x - y).abs() / x.abs().max(1e-12);
        assert!(rel < 5e-3, "{name}: {x} vs {y}");
    }
}

#[test]
fn kinematic_c1_reaches_the_band() {
    let t = run_closed_loop(&straight(c1(), 2.0)).unwrap();
    let m = compute_metrics(&t, &MetricsOptions::default());
    assert!(m.reached && !m.diverged);
    assert!(m.max_e_l_post < 0.05);
}

#[test]
fn optimal_matches_grid_search() {
    let cases = [
        (-0.5, 0.0, 1.0),
        (-0.5, 0.6, 1.0),
        (1.0, 0.0, 2.5),
        (0.3, -0.4, 1.5),
    ];
    for (e, psi, lambda) in cases {
        let delta_max: f64 = 0.5;
        let spec = OptimalReachSpec {
            init: WheelError::new(e, psi),
            delta0: 0.0,
            delta_max,
            ddelta_max: 2.0 * delta_max.tan() / lambda,
            eps: 0.05,
            switches: 4,
        };
        let opt = optimal_reach(&spec, lambda).unwrap().distance;
        let dp = dp_reach_distance(&spec, lambda, &DpOptions::default()).unwrap();
        assert!(
            (opt - dp).abs() <= 0.03 * dp,
            "e {e} psi {psi}: {opt} vs {dp}"
        );
    }
}

#[test]
fn shipped_scenarios_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            Scenario::load(&p).unwrap();
            n += 1;
        }
    }
    assert!(n >= 3);
    assert_eq!(
        Scenario::load(format!("{dir}/arc_sequence.toml")).unwrap(),
        arc_sequence_scenario()
    );
}
