use darksource::dynamics::{emission_efficiency, integrate_series, run_protocol};
use darksource::models::{paper_protocol_schedule, ProtocolConfig};

#[test]
fn protocol_trajectory_stays_physical() {
    let cfg = ProtocolConfig::default();
    let run = run_protocol(&cfg, 1, false).unwrap();
    let tr = &run.trajectory;
    assert!(tr.traces.iter().all(|t| (t - 1.0).abs() < 1e-6));
    assert!(tr.flux.iter().all(|f| *f >= -1e-12));
    assert!(tr.populations.iter().flatten().all(|p| (-1e-9..=1.0 + 1e-9).contains(p)));
    assert!(tr.purity.iter().all(|p| *p <= 1.0 + 1e-9));
}

#[test]
fn efficiency_is_the_integrated_flux() {
    let cfg = ProtocolConfig::default();
    let run = run_protocol(&cfg, 1, false).unwrap();
    let tr = &run.trajectory;
    for w in run.windows {
        let direct = integrate_series(&tr.times, &tr.flux, w.0, w.1);
        assert!((emission_efficiency(tr, w).unwrap() - direct).abs() < 1e-12);
    }
    // Nothing leaves through the coupler outside the emission stages.
    let before = integrate_series(&tr.times, &tr.flux, 0.0, cfg.t_emission_start);
    assert!(before.abs() < 1e-12);
}

#[test]
fn schedule_ends_where_it_started() {
    let cfg = ProtocolConfig::default();
    let s = paper_protocol_schedule(&cfg).unwrap();
    let (a, b) = (s.params_at(0.0), s.params_at(cfg.period));
    assert!((a.g1 - b.g1).abs() < 1e-12 && (a.detuning() - b.detuning()).abs() < 1e-12);
    assert!(s.on_dark_manifold());
}

#[test]
fn more_periods_repeat_the_emission() {
    let cfg = ProtocolConfig::default();
    let run = run_protocol(&cfg, 3, false).unwrap();
    assert_eq!(run.periods.len(), 3);
    for p in &run.periods[1..] {
        assert!((p.efficiency_second - run.periods[0].efficiency_second).abs() < 0.01);
        assert!((p.efficiency_first - run.periods[0].efficiency_first).abs() < 0.01);
    }
}
