use std::io::Write;

use darksource::correlations::{
    hbt_g2, hom_correlation, indistinguishability, protocol_regression, Channel, MeritReport,
    RegressionOptions, PEAK_THRESHOLD,
};
use darksource::darkstates::{dark_state, quasi_exact_solve};
use darksource::dynamics::{
    fit_waveform, run_protocol, stark_fast_transfer, window_series, FitResult, ProtocolRun, WaveformModel,
};
use darksource::hilbert::SystemSpace;
use darksource::models::{
    paper_protocol_schedule, stark_protocol_schedule, HamiltonianTerms, ModelKind, ModelParams, ProtocolConfig,
};
use darksource::spectrum::{min_gap_to_dark_at, sweep_spectrum, GapReport, SweepOptions, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::OutputDir;
use crate::{
    effective_config, CliError, CorrelateArgs, DarkstateArgs, Experiment, Global, ProtocolArgs, ScheduleArg,
    SpectrumArgs,
};

/// Spectra need more photons than the dynamics: the dark level must stay
/// converged up to g = ω.
pub const SPECTRUM_MIN_FOCK: usize = 32;
/// Default residual tolerance of the dark-state checks.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn open_output(global: &Global, command: Vec<String>, cfg: &ProtocolConfig) -> Result<OutputDir, CliError> {
    let text = serde_json::to_string(cfg)?;
    OutputDir::create(&global.out, command, &text)
}

fn with_tolerance(mut cfg: ProtocolConfig, tol: Option<f64>) -> Result<ProtocolConfig, CliError> {
    if let Some(tol) = tol {
        if !(tol > 0.0) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
        cfg.rtol = tol;
        cfg.atol = tol * 1e-2;
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct DarkLevel {
    track: usize,
    parity: i8,
    energy: f64,
    spread: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    model: ModelKind,
    sweep_param: String,
    fock_cutoff: usize,
    points: usize,
    convergence_checked: bool,
    /// Lowest levels excluded from the convergence check (spectral collapse).
    low_levels_unchecked: bool,
    dark_levels: Vec<DarkLevel>,
    tracking_breaks: usize,
    gap: Option<GapReport>,
}

pub fn spectrum(global: &Global, args: &SpectrumArgs, command: Vec<String>) -> Result<(), CliError> {
    let mut cfg = effective_config(global)?;
    if global.fock.is_none() {
        cfg.fock_cutoff = cfg.fock_cutoff.max(SPECTRUM_MIN_FOCK);
    }
    if args.points < 2 {
        return Err(CliError::Usage("a sweep needs at least 2 points".into()));
    }
    let kind = ModelKind::from(args.model);
    if args.u.is_some() && kind != ModelKind::RabiStark && args.schedule != Some(ScheduleArg::Stark) {
        return Err(CliError::Usage("--u applies to the Rabi-Stark model only".into()));
    }
    if let Some(u) = args.u {
        cfg.stark.u = u;
    }
    let spec = match args.schedule {
        None => {
            if !(args.g_max > args.g_min) || args.g_min < 0.0 {
                return Err(CliError::Usage("need 0 ≤ --g-min < --g-max".into()));
            }
            SweepSpec::coupling(args.g_min, args.g_max, args.points)
        }
        Some(ScheduleArg::Rabi) => {
            SweepSpec::schedule(paper_protocol_schedule(&cfg)?, 0.0, cfg.t_adiabatic1, args.points)
        }
        Some(ScheduleArg::Stark) => {
            SweepSpec::schedule(stark_protocol_schedule(&cfg)?, 0.0, cfg.stark.t_adiabatic, args.points)
        }
    };
    let detuning = args.delta1.map_or(cfg.detuning_start, |d1| 2.0 * d1 - cfg.omega);
    let u = if kind == ModelKind::RabiStark { cfg.stark.u } else { 0.0 };
    let template = ModelParams::manifold(kind, detuning, 0.0, u);
    let mut options = SweepOptions {
        check_convergence: !args.no_convergence_check,
        ..SweepOptions::default()
    };
    if let Some(tol) = global.tol {
        options.convergence_tol = tol;
    }
    // At U1 + U2 = ω the states |n↓↓⟩ collapse onto −ω for every n, so the
    // lowest levels have no cutoff limit. Only the dark levels are checked.
    let stark_sweep = kind == ModelKind::RabiStark || args.schedule == Some(ScheduleArg::Stark);
    let collapse = stark_sweep && 2.0 * cfg.stark.u >= cfg.omega - 1e-12;
    if collapse {
        options.converged_levels = 0;
    }

    let space = SystemSpace::new(cfg.fock_cutoff)?;
    let sweep = sweep_spectrum(space, &template, &spec, &options)?;
    // The one-photon dark level: E = ω for Rabi(-Stark), E = 0 for JC.
    let dark_energy = if kind == ModelKind::Jc && args.schedule.is_none() { 0.0 } else { cfg.omega };
    let gap = match min_gap_to_dark_at(&sweep, dark_energy, 1e-6) {
        Ok(g) => Some(g),
        Err(darksource::Error::NoDarkLevel) => None,
        Err(e) => return Err(e.into()),
    };
    let report = SpectrumReport {
        model: if args.schedule == Some(ScheduleArg::Stark) { ModelKind::RabiStark } else { kind },
        sweep_param: sweep.sweep_param.clone(),
        fock_cutoff: sweep.fock_cutoff,
        points: sweep.points.len(),
        convergence_checked: options.check_convergence,
        low_levels_unchecked: collapse,
        dark_levels: sweep
            .dark_tracks()
            .map(|t| DarkLevel {
                track: t.id,
                parity: t.parity,
                energy: t.energies[0],
                spread: t.spread(),
            })
            .collect(),
        tracking_breaks: sweep.breaks.len(),
        gap,
    };

    let mut out = open_output(global, command, &cfg)?;
    out.csv("spectrum.csv", |w| sweep.write_csv(w))?;
    out.json("gap.json", &report)?;
    out.finish()?;
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum FitOutcome {
    Fit(FitResult),
    Failed { error: String },
}

impl From<darksource::Result<FitResult>> for FitOutcome {
    fn from(r: darksource::Result<FitResult>) -> Self {
        match r {
            Ok(f) => FitOutcome::Fit(f),
            Err(e) => FitOutcome::Failed { error: e.to_string() },
        }
    }
}

#[derive(Serialize)]
struct PeriodFits {
    period: usize,
    /// Exponential fit of the first photon; params [A, decay rate].
    first: FitOutcome,
    /// Gaussian fit of the second photon; params [A, t0, s], t0 from the window start.
    second: FitOutcome,
}

#[derive(Serialize)]
struct FitReport {
    expected_decay_rate: f64,
    periods: Vec<PeriodFits>,
}

fn shifted(w: (f64, f64), by: f64) -> (f64, f64) {
    (w.0 + by, w.1 + by)
}

fn write_flux(run: &ProtocolRun, w: &mut Vec<u8>) -> std::io::Result<()> {
    writeln!(w, "t[1/omega],flux[omega],period,window")?;
    let tr = &run.trajectory;
    for (t, f) in tr.times.iter().zip(&tr.flux) {
        let k = ((t / run.period).floor() as usize).min(run.periods.len().saturating_sub(1));
        let local = t - k as f64 * run.period;
        let window = run
            .windows
            .iter()
            .position(|w| local >= w.0 && local < w.1)
            .map_or(0, |i| i + 1);
        writeln!(w, "{t:.6},{f:.12e},{k},{window}")?;
    }
    Ok(())
}

fn write_schedule(run: &ProtocolRun, w: &mut Vec<u8>) -> std::io::Result<()> {
    writeln!(w, "t[1/omega],delta1[omega],delta2[omega],g1[omega],g2[omega],u1[omega],u2[omega],kappa_c[omega]")?;
    for &t in &run.trajectory.times {
        let p = run.schedule.params_at(t);
        writeln!(
            w,
            "{t:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            p.delta1, p.delta2, p.g1, p.g2, p.u1, p.u2, p.kappa_c
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StarkSummary {
    u: f64,
    t_adiabatic: f64,
    final_fidelity: f64,
}

pub fn protocol(global: &Global, args: &ProtocolArgs, command: Vec<String>) -> Result<(), CliError> {
    let cfg = with_tolerance(effective_config(global)?, global.tol)?;
    if args.periods == 0 {
        return Err(CliError::Usage("--periods must be at least 1".into()));
    }
    let run = run_protocol(&cfg, args.periods, args.stark)?;
    let fits = FitReport {
        expected_decay_rate: cfg.kappa_in + cfg.kappa_c_on,
        periods: (0..args.periods)
            .map(|k| {
                let start = k as f64 * run.period;
                let (t1, f1) = window_series(&run.trajectory, shifted(run.windows[0], start));
                let (t2, f2) = window_series(&run.trajectory, shifted(run.windows[1], start));
                PeriodFits {
                    period: k,
                    first: fit_waveform(&t1, &f1, WaveformModel::Exponential).into(),
                    second: fit_waveform(&t2, &f2, WaveformModel::Gaussian).into(),
                }
            })
            .collect(),
    };
    let stark = if args.stark { Some(stark_fast_transfer(&cfg)?) } else { None };

    let mut out = open_output(global, command, &cfg)?;
    out.csv("trajectory.csv", |w| run.trajectory.write_csv(w))?;
    out.csv("schedule.csv", |w| write_schedule(&run, w))?;
    out.csv("flux.csv", |w| write_flux(&run, w))?;
    out.json("fits.json", &fits)?;
    out.json("efficiency.json", &run)?;
    if let Some(st) = &stark {
        out.csv("stark_transfer.csv", |w| {
            writeln!(w, "t[1/omega],fidelity_target,fidelity_dark")?;
            for ((t, f), d) in st.times.iter().zip(&st.fidelity).zip(&st.dark_fidelity) {
                writeln!(w, "{t:.6},{f:.12e},{d:.12e}")?;
            }
            Ok(())
        })?;
        out.json(
            "stark_transfer.json",
            &StarkSummary {
                u: st.u,
                t_adiabatic: cfg.stark.t_adiabatic,
                final_fidelity: st.final_fidelity,
            },
        )?;
    }
    out.finish()?;
    Ok(())
}

fn channel_efficiencies(cfg: &ProtocolConfig, stark: bool, channel: Channel) -> Result<Vec<f64>, CliError> {
    let run = run_protocol(cfg, 1, stark)?;
    let p = &run.periods[0];
    Ok(match channel {
        Channel::Both => vec![p.efficiency_first, p.efficiency_second],
        Channel::First => vec![p.efficiency_first],
        Channel::Second => vec![p.efficiency_second],
    })
}

pub fn correlate(global: &Global, args: &CorrelateArgs, command: Vec<String>) -> Result<(), CliError> {
    let cfg = with_tolerance(effective_config(global)?, global.tol)?;
    if args.periods == 0 {
        return Err(CliError::Usage("--periods must be at least 1".into()));
    }
    let mut options = RegressionOptions::from_config(&cfg);
    if let Some(dt) = args.dt {
        options.dt = dt;
    }
    let channel = Channel::from(args.channel);
    let data = protocol_regression(&cfg, args.stark, args.periods, &options)?;
    let efficiencies = channel_efficiencies(&cfg, args.stark, channel)?;

    let mut out = open_output(global, command, &cfg)?;
    match args.experiment {
        Experiment::Hbt => {
            let (grid, marginal, mut report) = hbt_g2(&data, channel);
            report.efficiencies = efficiencies;
            out.csv("g2_grid.csv", |w| grid.write_csv(w))?;
            out.csv("g2_marginal.csv", |w| marginal.write_csv(w))?;
            out.json("merit.json", &report)?;
        }
        Experiment::Hom => {
            let (grid, marginal) = hom_correlation(&data, channel);
            let report = MeritReport {
                channel,
                g2_zero: marginal.value[0],
                indistinguishability: Some(indistinguishability(&data, channel)?),
                efficiencies,
                peak_positions: marginal.peaks(PEAK_THRESHOLD),
            };
            out.csv("hom_grid.csv", |w| grid.write_csv(w))?;
            out.csv("hom_marginal.csv", |w| marginal.write_csv(w))?;
            out.json("merit.json", &report)?;
        }
        Experiment::Indist => {
            let (_, _, mut report) = hbt_g2(&data, channel);
            report.indistinguishability = Some(indistinguishability(&data, channel)?);
            report.efficiencies = efficiencies;
            out.json("merit.json", &report)?;
        }
    }
    out.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct ManifoldCheck {
    kind: ModelKind,
    points: usize,
    energy: f64,
    max_residual: f64,
    worst: ModelParams,
}

#[derive(Serialize)]
struct AnsatzSummary {
    kind: ModelKind,
    u: f64,
    on_manifold_points: usize,
    on_manifold_solved: usize,
    /// 1 − |⟨closed form|null vector⟩| at worst.
    max_overlap_defect: f64,
    max_null_residual: f64,
    off_manifold_offset: f64,
    off_manifold_points: usize,
    off_manifold_solved: usize,
    /// Off-manifold points at Δ1 − Δ2 + U1 − U2 = 0, where |1⟩ ⊗ singlet is
    /// an exact E = ω eigenstate for any Δ1 + Δ2.
    off_manifold_singlet: usize,
}

#[derive(Serialize)]
struct DarkstateReport {
    tolerance: f64,
    manifold: Vec<ManifoldCheck>,
    ansatz: Vec<AnsatzSummary>,
    violations: Vec<String>,
}

fn manifold_residuals(space: SystemSpace, points: usize, seed: u64) -> Result<Vec<ManifoldCheck>, CliError> {
    let terms = HamiltonianTerms::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for kind in [ModelKind::Rabi, ModelKind::RabiStark, ModelKind::Jc] {
        let mut check: Option<ManifoldCheck> = None;
        for _ in 0..points {
            let detuning = rng.gen_range(-1.0..=1.0);
            let g = rng.gen_range(0.0..=1.0);
            let u = if kind == ModelKind::RabiStark { rng.gen_range(0.0..=0.5) } else { 0.0 };
            let p = ModelParams::manifold(kind, detuning, g, u);
            let dark = dark_state(space, &p)?;
            let v = dark.vector();
            let r = (terms.hamiltonian(&p).matrix() * v - v * darksource::hilbert::C64::new(dark.energy, 0.0)).norm();
            if check.as_ref().is_none_or(|c| r > c.max_residual) {
                check = Some(ManifoldCheck { kind, points, energy: dark.energy, max_residual: r, worst: p });
            }
        }
        out.extend(check);
    }
    Ok(out)
}

fn ansatz_scan(
    kind: ModelKind,
    u: f64,
    n: usize,
    offset: f64,
    rows: &mut Vec<u8>,
) -> Result<AnsatzSummary, CliError> {
    let mut s = AnsatzSummary {
        kind,
        u,
        on_manifold_points: 0,
        on_manifold_solved: 0,
        max_overlap_defect: 0.0,
        max_null_residual: 0.0,
        off_manifold_offset: offset,
        off_manifold_points: 0,
        off_manifold_solved: 0,
        off_manifold_singlet: 0,
    };
    let axis = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            let detuning = axis(i, -1.0, 1.0);
            // g = 0 is excluded: the bare ansatz matrix is then diagonal and
            // trivially singular.
            let g = axis(j, 0.0, 1.0).max(1.0 / n as f64);
            let on = ModelParams::manifold(kind, detuning, g, u);
            let off = ModelParams {
                delta1: on.delta1 + 0.5 * offset,
                delta2: on.delta2 + 0.5 * offset,
                ..on
            };
            for (on_manifold, p) in [(true, on), (false, off)] {
                let solution = quasi_exact_solve(&p, p.omega);
                let label = if on_manifold { "on" } else { "off" };
                write!(rows, "{kind},{label},{detuning:.6},{g:.6},{u:.6}")?;
                if on_manifold {
                    s.on_manifold_points += 1;
                } else {
                    s.off_manifold_points += 1;
                }
                let Some(v) = solution else {
                    writeln!(rows, ",0,,,,,")?;
                    continue;
                };
                if !on_manifold {
                    if p.dark_detuning().abs() < 1e-12 {
                        s.off_manifold_singlet += 1;
                    } else {
                        s.off_manifold_solved += 1;
                    }
                    writeln!(rows, ",1,,,,,")?;
                    continue;
                }
                s.on_manifold_solved += 1;
                let m = darksource::darkstates::ansatz_matrix(&p, p.omega).matrix;
                s.max_null_residual = s.max_null_residual.max((&m * &v).norm());
                let expected = [p.dark_detuning(), 0.0, g, -g];
                let norm = expected.iter().map(|x| x * x).sum::<f64>().sqrt();
                let overlap = expected.iter().zip(v.iter()).map(|(e, c)| c * (*e / norm)).sum::<darksource::hilbert::C64>();
                s.max_overlap_defect = s.max_overlap_defect.max(1.0 - overlap.norm());
                // Rescaled so the |1↓↑⟩ coefficient equals g.
                let scale = g / v[2];
                write!(rows, ",1")?;
                for c in v.iter() {
                    write!(rows, ",{:.12e}", (c * scale).re)?;
                }
                writeln!(rows, ",{:.12e}", 1.0 - overlap.norm())?;
            }
        }
    }
    Ok(s)
}

pub fn darkstate(global: &Global, args: &DarkstateArgs, command: Vec<String>) -> Result<(), CliError> {
    let cfg = effective_config(global)?;
    if !args.check_manifold && !args.ansatz_scan {
        return Err(CliError::Usage("choose --check-manifold and/or --ansatz-scan".into()));
    }
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let tolerance = global.tol.unwrap_or(RESIDUAL_TOL);
    let space = SystemSpace::new(cfg.fock_cutoff)?;
    let mut report = DarkstateReport {
        tolerance,
        manifold: Vec::new(),
        ansatz: Vec::new(),
        violations: Vec::new(),
    };
    if args.check_manifold {
        report.manifold = manifold_residuals(space, args.points, cfg.seed)?;
        for c in &report.manifold {
            if !(c.max_residual < tolerance) {
                report.violations.push(format!("{} residual {:.3e}", c.kind, c.max_residual));
            }
        }
    }
    let mut rows = Vec::new();
    if args.ansatz_scan {
        writeln!(rows, "model,manifold,detuning[omega],g[omega],u[omega],solved,c0,c1,c2,c3,overlap_defect")?;
        for (kind, u) in [(ModelKind::Rabi, 0.0), (ModelKind::RabiStark, args.u)] {
            let s = ansatz_scan(kind, u, args.points, args.offset, &mut rows)?;
            if s.on_manifold_solved != s.on_manifold_points {
                report.violations.push(format!("{kind}: unsolved on-manifold points"));
            }
            if s.off_manifold_solved != 0 {
                report.violations.push(format!("{kind}: off-manifold solutions"));
            }
            if !(s.max_null_residual < tolerance) {
                report.violations.push(format!("{kind}: null residual {:.3e}", s.max_null_residual));
            }
            report.ansatz.push(s);
        }
    }

    let mut out = open_output(global, command, &cfg)?;
    if args.ansatz_scan {
        out.write("ansatz_scan.csv", rows)?;
    }
    out.json("darkstate.json", &report)?;
    out.finish()?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(report.violations.join("; ")))
    }
}
