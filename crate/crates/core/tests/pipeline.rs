use dfrc::config::{SystemConfig, TargetSpec};
use dfrc::estimator::{run_pipeline, PipelineOptions, SolverChoice, TargetEstimate};
use dfrc::frame::{random_frame, PrivatePeriod};
use dfrc::radar_sim::simulate_rx;
use proptest::prelude::*;

fn nearest(list: &[TargetEstimate], theta: f64) -> f64 {
    list.iter().map(|e| (e.theta_deg - theta).abs()).fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_never_worsens_angle(theta in -40i32..=40, l in 1usize..25, p in -10i64..=10, seed in 0u64..1000) {
        let cfg = SystemConfig::desk();
        let bins = cfg.derive();
        let target = TargetSpec::new(theta as f64, l as f64 * bins.range_bin, p as f64 * bins.velocity_bin);
        let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, seed).unwrap();
        let cube = simulate_rx(&frame, &[target], &cfg).unwrap();
        let r = run_pipeline(&cube, &frame, &cfg, &PipelineOptions::default()).unwrap();
        prop_assert!(!r.refined.is_empty());
        let coarse = nearest(&r.coarse, theta as f64);
        let refined = nearest(&r.refined, theta as f64);
        prop_assert!(refined <= coarse + 1e-12, "refined {} vs coarse {}", refined, coarse);
        prop_assert_eq!(refined, 0.0);
        prop_assert!(r.refined.iter().all(|e| e.range_bin == l));
    }
}

#[test]
fn solvers_agree_on_separated_targets() {
    // both angles sit on the coarse and refinement grids
    let cfg = SystemConfig::desk();
    let bins = cfg.derive();
    let targets = [
        TargetSpec::new(0.0, 10.0 * bins.range_bin, 2.0 * bins.velocity_bin),
        TargetSpec::new(30.0, 4.0 * bins.range_bin, -3.0 * bins.velocity_bin),
    ];
    let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 4).unwrap();
    let cube = simulate_rx(&frame, &targets, &cfg).unwrap();
    let mut angles = Vec::new();
    for solver in [SolverChoice::Omp, SolverChoice::Fista] {
        let mut opts = PipelineOptions::default();
        opts.refine.solver = solver;
        let r = run_pipeline(&cube, &frame, &cfg, &opts).unwrap();
        angles.push(r.refined.iter().map(|e| (e.theta_deg, e.range_bin, e.doppler_bin)).collect::<Vec<_>>());
    }
    assert_eq!(angles[0], vec![(0.0, 10, 2), (30.0, 4, -3)]);
    assert_eq!(angles[0], angles[1]);
}

#[test]
fn noise_keeps_the_strong_target() {
    let cfg = SystemConfig::desk();
    let bins = cfg.derive();
    let target = TargetSpec::new(14.0, 3.0 * bins.range_bin, bins.velocity_bin);
    let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 8).unwrap();
    let cube = dfrc::radar_sim::add_noise(&simulate_rx(&frame, &[target], &cfg).unwrap(), 20.0, 3);
    let mut opts = PipelineOptions::default();
    opts.refine.residual_rel = 0.2;
    let r = run_pipeline(&cube, &frame, &cfg, &opts).unwrap();
    assert!(r.refined.iter().any(|e| e.theta_deg == 14.0 && e.range_bin == 3 && e.doppler_bin == 1), "{:?}", r.refined);
}
