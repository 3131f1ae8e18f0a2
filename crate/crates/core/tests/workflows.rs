use surfflow::config::{parse_config_str, RunConfig};
use surfflow::driver::{monotone, run_to_end, Simulation};
use surfflow::flow::FlowKind;
use surfflow::mesh::Shape;

fn sphere(kind: FlowKind, refinement: usize, tau: f64, t: f64, dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::new(kind, Shape::Sphere { radius: 3.0 }, tau, t);
    c.refinement = refinement;
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn sphere_imcf_hawking_mass_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let c = sphere(FlowKind::Imcf, 4, 0.05, 1.0, dir.path());
    let (summary, report) = monotone(&c).unwrap();
    let hm = summary.series.column("hawking_mass").unwrap();
    assert!(hm.iter().all(|m| m.abs() <= 1e-6), "{hm:?}");
    assert!(report.passed());
}

#[test]
fn sphere_h2_flow_schulze_vanishes_under_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let mut peaks = Vec::new();
    for (r, tau) in [(1, 0.05), (2, 0.025), (3, 0.0125)] {
        let c = sphere(FlowKind::PowerMcf { alpha: 2.0 }, r, tau, 0.1, dir.path());
        let (summary, report) = monotone(&c).unwrap();
        assert!(report.schulze_applies);
        let m = summary.series.column("schulze").unwrap();
        assert!(m[0].abs() < 1e-12);
        peaks.push(m.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    }
    assert!(peaks[1] < peaks[0] / 4.0 && peaks[2] < peaks[1] / 4.0, "{peaks:?}");
}

#[test]
fn log_mcf_shrinks_sphere_without_clamping() {
    let c = parse_config_str(
        "flow = log_mcf\nh_tilde = 10\ngeometry = sphere\nradius = 2\nrefinement = 1\ntau = 0.02\nfinal_time = 0.2",
    )
    .unwrap();
    let mut sim = Simulation::new(c).unwrap();
    let s = run_to_end(&mut sim, None).unwrap();
    let area = s.series.column("area").unwrap();
    assert!(area.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(s.clamp_total, 0);
}

#[test]
fn genus5_power_imcf_steps() {
    let mut c = RunConfig::new(FlowKind::PowerImcf { alpha: 2.0 }, Shape::Genus5, 0.0015625, 0.0125);
    c.refinement = 0;
    let mut sim = Simulation::new(c).unwrap();
    assert_eq!(sim.initial_mesh().topology().euler_characteristic(), -8);
    let s = run_to_end(&mut sim, None).unwrap();
    assert_eq!(s.steps, 8);
}

#[test]
fn pointwise_velocity_tracks_ritz_on_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let ritz = sphere(FlowKind::Imcf, 2, 0.05, 0.5, dir.path());
    let mut pointwise = ritz.clone();
    pointwise.velocity_mode = surfflow::stepper::VelocityMode::Pointwise;
    let mut a = Simulation::new(ritz).unwrap();
    let mut b = Simulation::new(pointwise).unwrap();
    run_to_end(&mut a, None).unwrap();
    run_to_end(&mut b, None).unwrap();
    let r = |s: &Simulation| s.state().x.to_points().iter().map(|p| p.norm()).sum::<f64>() / s.state().num_nodes() as f64;
    let exact = 3.0 * (0.25_f64).exp();
    assert!((r(&a) - exact).abs() < 1e-2);
    assert!((r(&b) - exact).abs() < 1e-2);
}

fn bootstrap_rates(q: usize) -> Vec<f64> {
    let errs: Vec<f64> = (0..4)
        .map(|i| {
            let tau = 0.2 / 2f64.powi(i);
            let mut c = RunConfig::new(FlowKind::Imcf, Shape::Sphere { radius: 3.0 }, tau, 1.0);
            c.refinement = 4;
            c.bdf_order = q;
            let sim = Simulation::new(c).unwrap();
            let s = *sim.levels_oldest_first().last().unwrap();
            let exact = 3.0 * (s.time / 2.0).exp();
            s.x.to_points().iter().map(|p| (p.norm() - exact).abs()).fold(0.0, f64::max)
        })
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn bootstrap_startup_level_accuracy() {
    let bdf2 = bootstrap_rates(2);
    assert!(bdf2.iter().all(|r| (r - 2.0).abs() < 0.1), "{bdf2:?}");
    // higher ladders inherit the second-order error of the first rung
    let bdf3 = bootstrap_rates(3);
    assert!(bdf3.iter().all(|&r| r > 1.9), "{bdf3:?}");
}
