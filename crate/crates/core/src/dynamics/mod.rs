//! Time-dependent Lindblad evolution along a schedule, the multi-period
//! protocol runner and photon-flux bookkeeping.

mod fit;
mod integrator;
mod liouvillian;

use std::io::Write;

use serde::Serialize;

pub use fit::{fit_waveform, FitResult, WaveformModel};
pub use integrator::{Dopri5, Tolerances};
pub use liouvillian::{LindbladSpec, Liouvillian};

use crate::darkstates::{dark_state, singlet};
use crate::error::{Error, Result};
use crate::hilbert::{
    fidelity, pauli_on, BasisState, CMatrix, PauliAxis, QuantumState, Qubit, Spin, SystemSpace,
    C64,
};
use crate::models::protocol::Preparation;
use crate::models::schedule::{Interp, ScheduleBuilder};
use crate::models::{
    paper_protocol_schedule, stark_protocol_schedule, DriveParams, ModelKind, ProtocolConfig,
    Schedule, ScheduleParams,
};

/// Maximum tolerated |Tr ρ − 1| before integration is declared failed.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

impl LindbladSpec {
    pub fn from_config(cfg: &ProtocolConfig) -> Self {
        Self {
            kappa_in: cfg.kappa_in,
            gamma: cfg.gamma,
            gamma_phi: cfg.gamma_phi,
        }
    }
}

/// Interaction-picture propagation that stops at every schedule kink.
pub struct Propagator<'a> {
    pub liouvillian: Liouvillian<'a>,
    solver: Dopri5,
}

impl<'a> Propagator<'a> {
    pub fn new(
        space: SystemSpace,
        schedule: &'a Schedule,
        lindblad: LindbladSpec,
        tol: Tolerances,
    ) -> Self {
        let dim = space.dim();
        Self {
            liouvillian: Liouvillian::new(space, schedule, lindblad),
            solver: Dopri5::new(dim * dim, tol),
        }
    }

    pub fn with_drive(mut self, drive: Option<DriveParams>) -> Self {
        self.liouvillian = self.liouvillian.with_drive(drive);
        self
    }

    pub fn steps(&self) -> (usize, usize) {
        (self.solver.accepted, self.solver.rejected)
    }

    /// Advances interaction-picture data `x` (column-major) from t0 to t1.
    pub fn advance(&mut self, x: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        let mut stops = self.liouvillian.kinks(t0, t1);
        stops.push(t1);
        let mut t = t0;
        let liou = &mut self.liouvillian;
        let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| liou.rhs(t, y, dy);
        for s in stops {
            if s - t > 1e-12 {
                self.solver.integrate(&mut rhs, x, t, s)?;
            }
            t = s;
        }
        Ok(())
    }
}

/// Tagged populations recorded along trajectories.
pub const POPULATION_TAGS: [&str; 5] = ["0_up_up", "0_down_down", "1_singlet", "0_singlet", "1_down_down"];

#[derive(Clone, Debug, Default, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<CMatrix>,
    pub photons: Vec<f64>,
    pub kappa_c: Vec<f64>,
    pub flux: Vec<f64>,
    pub populations: Vec<[f64; 5]>,
    pub traces: Vec<f64>,
    pub purity: Vec<f64>,
}

impl Trajectory {
    fn append(&mut self, mut other: Trajectory) {
        // Drop a duplicated boundary sample.
        if let (Some(&a), Some(&b)) = (self.times.last(), other.times.first()) {
            if (a - b).abs() < 1e-12 {
                self.times.pop();
                self.states.pop();
                self.photons.pop();
                self.kappa_c.pop();
                self.flux.pop();
                self.populations.pop();
                self.traces.pop();
                self.purity.pop();
            }
        }
        self.times.append(&mut other.times);
        self.states.append(&mut other.states);
        self.photons.append(&mut other.photons);
        self.kappa_c.append(&mut other.kappa_c);
        self.flux.append(&mut other.flux);
        self.populations.append(&mut other.populations);
        self.traces.append(&mut other.traces);
        self.purity.append(&mut other.purity);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }

    pub fn state_at(&self, t: f64) -> Option<&CMatrix> {
        let i = self.index_of(t)?;
        if (self.times[i] - t).abs() > 1e-9 {
            return None;
        }
        self.states.get(i)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t[1/omega]")?;
        for tag in POPULATION_TAGS {
            write!(w, ",p_{tag}")?;
        }
        writeln!(w, ",n_photons,kappa_c[omega],flux[omega],trace")?;
        for i in 0..self.len() {
            write!(w, "{:.6}", self.times[i])?;
            for p in self.populations[i] {
                write!(w, ",{p:.12e}")?;
            }
            writeln!(
                w,
                ",{:.12e},{:.12e},{:.12e},{:.12e}",
                self.photons[i], self.kappa_c[i], self.flux[i], self.traces[i]
            )?;
        }
        Ok(())
    }
}

struct Observables {
    space: SystemSpace,
    photons: Vec<f64>,
    tags: Vec<crate::hilbert::CVector>,
}

impl Observables {
    fn new(space: SystemSpace) -> Result<Self> {
        let b = |n, s1, s2| QuantumState::basis(space, BasisState::new(n, s1, s2));
        let vec = |s: QuantumState| s.vector().expect("pure").clone();
        Ok(Self {
            space,
            photons: space.basis().map(|b| b.photons as f64).collect(),
            tags: vec![
                vec(b(0, Spin::Up, Spin::Up)?),
                vec(b(0, Spin::Down, Spin::Down)?),
                vec(singlet(space, 1)?),
                vec(singlet(space, 0)?),
                vec(b(1, Spin::Down, Spin::Down)?),
            ],
        })
    }

    fn record(&self, traj: &mut Trajectory, t: f64, rho: CMatrix, kappa_c: f64, store: bool) -> Result<()> {
        let trace: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
        if (trace - 1.0).abs() > TRACE_DRIFT_LIMIT {
            return Err(Error::Integration {
                time: t,
                reason: format!("trace drifted to {trace}"),
            });
        }
        let n: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re * self.photons[i]).sum();
        let mut pops = [0.0; 5];
        for (p, v) in pops.iter_mut().zip(&self.tags) {
            *p = v.dotc(&(&rho * v)).re;
        }
        let purity = rho.iter().map(|c| c.norm_sqr()).sum();
        traj.times.push(t);
        traj.photons.push(n);
        traj.kappa_c.push(kappa_c);
        traj.flux.push(kappa_c * n);
        traj.populations.push(pops);
        traj.traces.push(trace);
        traj.purity.push(purity);
        if store {
            traj.states.push(rho);
        }
        let _ = self.space;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    pub store_states: bool,
    pub drive: Option<DriveParams>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            store_states: true,
            drive: None,
        }
    }
}

/// Solves the master equation from `initial` at t_span.0 to t_span.1 and
/// samples it at the grid points inside the span (plus both ends).
pub fn evolve(
    initial: &QuantumState,
    schedule: &Schedule,
    lindblad: &LindbladSpec,
    t_span: (f64, f64),
    output_grid: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    lindblad.validate()?;
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument("t_span must be ordered".into()));
    }
    let space = initial.space();
    let rho0 = initial.density_matrix();
    let mut prop = Propagator::new(space, schedule, *lindblad, options.tol).with_drive(options.drive);
    let obs = Observables::new(space)?;

    let mut grid: Vec<f64> = output_grid
        .iter()
        .copied()
        .filter(|&t| t > t0 && t < t1)
        .collect();
    grid.insert(0, t0);
    if t1 > t0 {
        grid.push(t1);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut traj = Trajectory::default();
    let mut x: Vec<C64> = prop.liouvillian.to_interaction(t0, &rho0).as_slice().to_vec();
    let dim = space.dim();
    let mut t = t0;
    for &s in &grid {
        prop.advance(&mut x, t, s)?;
        t = s;
        let rho_i = CMatrix::from_column_slice(dim, dim, &x);
        let rho = prop.liouvillian.to_lab(s, &rho_i);
        obs.record(&mut traj, s, rho, schedule.kappa_c(s), options.store_states)?;
    }
    Ok(traj)
}

/// Uniform grid over [t0, t1] with step dt, always including t1.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt).round() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).filter(|&t| t <= t1 + 1e-9).collect();
    if g.last().is_none_or(|&l| (l - t1).abs() > 1e-9) {
        g.push(t1);
    }
    g
}

/// X1 X2 ρ X1 X2: the ideal π pulses that flip both qubits.
pub fn flip_both(space: SystemSpace, rho: &CMatrix) -> CMatrix {
    let x = pauli_on(space, Qubit::One, PauliAxis::X)
        .mul(&pauli_on(space, Qubit::Two, PauliAxis::X))
        .expect("same space")
        .into_matrix();
    &x * rho * &x
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodRecord {
    pub index: usize,
    pub start: f64,
    /// Fidelity to |1⟩⊗singlet at the end of the first adiabatic ramp.
    pub transfer_fidelity: f64,
    pub efficiency_first: f64,
    pub efficiency_second: f64,
    /// Fidelity to |0↓↓⟩ at the end of the period.
    pub reset_fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolRun {
    pub stark: bool,
    pub period: f64,
    pub transfer_time: f64,
    pub windows: [(f64, f64); 2],
    pub periods: Vec<PeriodRecord>,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub schedule: Schedule,
}

fn protocol_schedule(config: &ProtocolConfig, stark: bool) -> Result<Schedule> {
    if stark {
        stark_protocol_schedule(config)
    } else {
        paper_protocol_schedule(config)
    }
}

/// Runs `periods` consecutive protocol periods starting from |0↓↓⟩.
/// Every period begins with the qubit excitation (ideal flip or simulated
/// pump pulses) and the state is carried over between periods.
pub fn run_protocol(config: &ProtocolConfig, periods: usize, stark: bool) -> Result<ProtocolRun> {
    config.validate()?;
    if periods < 1 {
        return Err(Error::InvalidArgument("periods must be at least 1".into()));
    }
    let schedule = protocol_schedule(config, stark)?;
    let space = SystemSpace::new(config.fock_cutoff)?;
    let lindblad = LindbladSpec::from_config(config);
    let tol = Tolerances {
        rtol: config.rtol,
        atol: config.atol,
        ..Tolerances::default()
    };
    let options = EvolveOptions { tol, ..EvolveOptions::default() };
    let period = schedule.period();
    let transfer_time = if stark { config.stark.t_adiabatic } else { config.t_adiabatic1 };
    let target = singlet(space, 1)?;
    let ground = QuantumState::basis(space, BasisState::new(0, Spin::Down, Spin::Down))?;

    let excitation = Excitation::from_config(config);
    let mut rho = ground.density_matrix();
    let mut traj = Trajectory::default();
    let mut records = Vec::with_capacity(periods);
    for k in 0..periods {
        let start = k as f64 * period;
        rho = excitation.apply(space, &rho)?;
        let mut grid = uniform_grid(start, start + period, config.dt_output);
        grid.push(start + transfer_time);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let initial = QuantumState::density_unchecked(space, rho.clone());
        let part = evolve(&initial, &schedule, &lindblad, (start, start + period), &grid, &options)?;
        let at = |t: f64| -> Result<QuantumState> {
            let m = part
                .state_at(t)
                .ok_or_else(|| Error::InvalidState(format!("no sample at t = {t}")))?;
            Ok(QuantumState::density_unchecked(space, m.clone()))
        };
        let (w1, w2) = (config.window_first(), config.window_second());
        records.push(PeriodRecord {
            index: k,
            start,
            transfer_fidelity: fidelity(&at(start + transfer_time)?, &target)?,
            efficiency_first: emission_efficiency(&part, (start + w1.0, start + w1.1))?,
            efficiency_second: emission_efficiency(&part, (start + w2.0, start + w2.1))?,
            reset_fidelity: fidelity(&at(start + period)?, &ground)?,
        });
        rho = part.states.last().expect("non-empty").clone();
        traj.append(part);
    }
    Ok(ProtocolRun {
        stark,
        period,
        transfer_time,
        windows: [config.window_first(), config.window_second()],
        periods: records,
        trajectory: traj,
        schedule,
    })
}

/// Qubit excitation at the start of every period, as a linear map on
/// operators (so it also acts on conditioned operators in regression runs).
#[derive(Clone, Debug)]
pub enum Excitation {
    None,
    /// Instantaneous X1 X2.
    Flip,
    /// Simulated pump pulses with the couplings off. The free rotation
    /// accumulated during the pulses is removed, so the protocol sees the
    /// state as if prepared instantaneously at the period start.
    Pulsed(Box<ProtocolConfig>),
}

impl Excitation {
    pub fn from_config(config: &ProtocolConfig) -> Self {
        match config.preparation {
            Preparation::Ideal => Excitation::Flip,
            Preparation::Pulsed => Excitation::Pulsed(Box::new(config.clone())),
        }
    }

    pub fn apply(&self, space: SystemSpace, x: &CMatrix) -> Result<CMatrix> {
        match self {
            Excitation::None => Ok(x.clone()),
            Excitation::Flip => Ok(flip_both(space, x)),
            Excitation::Pulsed(config) => {
                let drive = config.drive();
                let start = ScheduleParams::manifold(config.omega, config.detuning_start, 0.0, 0.0, 0.0);
                let hold = ScheduleBuilder::start(config.omega, start)
                    .to(drive.t_off, start, Interp::Linear, ModelKind::Rabi)
                    .build()?;
                let tol = Tolerances { rtol: config.rtol, atol: config.atol, ..Tolerances::default() };
                let mut prop = Propagator::new(space, &hold, LindbladSpec::from_config(config), tol)
                    .with_drive(Some(drive));
                let mut v = x.as_slice().to_vec();
                prop.advance(&mut v, 0.0, drive.t_off)?;
                Ok(CMatrix::from_column_slice(space.dim(), space.dim(), &v))
            }
        }
    }
}

/// Propagation across period boundaries: the excitation fires whenever
/// k·T (k ≥ 1) is reached, so the state at k·T is the prepared one.
pub struct PeriodicPropagator<'a> {
    pub inner: Propagator<'a>,
    excitation: &'a Excitation,
    period: f64,
}

impl<'a> PeriodicPropagator<'a> {
    pub fn new(inner: Propagator<'a>, excitation: &'a Excitation) -> Self {
        let period = inner.liouvillian.schedule().period();
        Self { inner, excitation, period }
    }

    pub fn advance(&mut self, x: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        let dim = self.inner.liouvillian.dim();
        let mut t = t0;
        let mut k = (t0 / self.period + 1e-9).floor() + 1.0;
        while k * self.period <= t1 + 1e-9 {
            let tk = k * self.period;
            self.inner.advance(x, t, tk)?;
            if !matches!(self.excitation, Excitation::None) {
                let liou = &self.inner.liouvillian;
                let lab = liou.to_lab(tk, &CMatrix::from_column_slice(dim, dim, x));
                let kicked = self.excitation.apply(liou.space(), &lab)?;
                x.copy_from_slice(liou.to_interaction(tk, &kicked).as_slice());
            }
            t = tk;
            k += 1.0;
        }
        self.inner.advance(x, t, t1)
    }
}

/// η = ∫ κ_c(t) ⟨a†a⟩ dt over `window` by the trapezoid rule on the
/// trajectory samples (linearly interpolated at the window edges).
pub fn emission_efficiency(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    let (first, last) = match (traj.times.first(), traj.times.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::InvalidArgument("empty trajectory".into())),
    };
    if a < first - 1e-9 || b > last + 1e-9 || b < a {
        return Err(Error::InvalidArgument(format!(
            "window [{a}, {b}] outside trajectory [{first}, {last}]"
        )));
    }
    Ok(integrate_series(&traj.times, &traj.flux, a, b))
}

/// Trapezoid integral of samples (t_i, y_i) over [a, b].
pub fn integrate_series(t: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let interp = |x: f64| -> f64 {
        let i = t.partition_point(|&s| s < x);
        if i == 0 {
            return y[0];
        }
        if i >= t.len() {
            return y[t.len() - 1];
        }
        let w = (x - t[i - 1]) / (t[i] - t[i - 1]);
        y[i - 1] + w * (y[i] - y[i - 1])
    };
    let mut pts = vec![(a, interp(a))];
    for (ti, yi) in t.iter().zip(y) {
        if *ti > a && *ti < b {
            pts.push((*ti, *yi));
        }
    }
    pts.push((b, interp(b)));
    pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct StarkTransfer {
    pub u: f64,
    pub times: Vec<f64>,
    /// Fidelity to |1⟩⊗singlet.
    pub fidelity: Vec<f64>,
    /// Fidelity to the instantaneous dark state of the Rabi-Stark model.
    pub dark_fidelity: Vec<f64>,
    pub final_fidelity: f64,
}

/// Fast transfer along the Rabi-Stark dark state from |0↑↑⟩ over the
/// configured ramp.
pub fn stark_fast_transfer(config: &ProtocolConfig) -> Result<StarkTransfer> {
    config.validate()?;
    let schedule = stark_protocol_schedule(config)?;
    let space = SystemSpace::new(config.fock_cutoff)?;
    let t_end = config.stark.t_adiabatic;
    let grid = uniform_grid(0.0, t_end, (t_end / 120.0).min(config.dt_output));
    let initial = QuantumState::basis(space, BasisState::new(0, Spin::Up, Spin::Up))?;
    let tol = Tolerances { rtol: config.rtol, atol: config.atol, ..Tolerances::default() };
    let traj = evolve(
        &initial,
        &schedule,
        &LindbladSpec::from_config(config),
        (0.0, t_end),
        &grid,
        &EvolveOptions { tol, ..EvolveOptions::default() },
    )?;
    let target = singlet(space, 1)?;
    let mut fid = Vec::with_capacity(traj.len());
    let mut dark_fid = Vec::with_capacity(traj.len());
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let state = QuantumState::density_unchecked(space, rho.clone());
        fid.push(fidelity(&state, &target)?);
        let dark = dark_state(space, &schedule.model_at(*t))?;
        dark_fid.push(fidelity(&state, &dark.state)?);
    }
    Ok(StarkTransfer {
        u: config.stark.u,
        final_fidelity: *fid.last().expect("non-empty"),
        times: traj.times,
        fidelity: fid,
        dark_fidelity: dark_fid,
    })
}

/// Flux samples of one window, times shifted to start at the window.
pub fn window_series(traj: &Trajectory, window: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    traj.times
        .iter()
        .zip(&traj.flux)
        .filter(|(t, _)| **t >= window.0 - 1e-9 && **t <= window.1 + 1e-9)
        .map(|(t, f)| (*t - window.0, *f))
        .unzip()
}
