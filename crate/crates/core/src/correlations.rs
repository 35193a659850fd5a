//! Two-time correlations by the quantum regression theorem.
//!
//! A conditioned operator X = Aρ(t)A† (or Aρ(t)) obeys the same master
//! equation as ρ, so ⟨A†(t) M(t+τ) A(t)⟩ = Tr[M Λ(t→t+τ) X]. Each start
//! time is propagated up to the next period boundary. There the family of
//! conditioned operators is compressed by an SVD, and only the surviving
//! basis operators are carried through later periods.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    Excitation, LindbladSpec, PeriodicPropagator, Propagator, Tolerances,
};
use crate::error::{Error, Result};
use crate::hilbert::{
    annihilator, creator, number, BasisState, CMatrix, Operator, QuantumState, Spin, SystemSpace,
    C64,
};
use crate::models::{paper_protocol_schedule, stark_protocol_schedule, ProtocolConfig, Schedule};

/// Relative singular-value cutoff for the period-boundary compression.
pub const COMPRESSION_TOL: f64 = 1e-13;

/// Everything the regression needs besides the operators.
#[derive(Clone, Debug)]
pub struct RegressionContext {
    pub space: SystemSpace,
    pub schedule: Schedule,
    pub lindblad: LindbladSpec,
    pub tol: Tolerances,
    pub excitation: Excitation,
    /// ρ(0), already prepared.
    pub initial: CMatrix,
    /// Correlations are not followed past this time.
    pub horizon: f64,
    /// Use the SVD compression at period boundaries (exact up to
    /// COMPRESSION_TOL); `false` propagates every start time directly.
    pub compress: bool,
}

impl RegressionContext {
    pub fn protocol(config: &ProtocolConfig, stark: bool, periods: usize) -> Result<Self> {
        config.validate()?;
        if periods < 1 {
            return Err(Error::InvalidArgument("periods must be at least 1".into()));
        }
        let schedule = if stark {
            stark_protocol_schedule(config)?
        } else {
            paper_protocol_schedule(config)?
        };
        let space = SystemSpace::new(config.fock_cutoff)?;
        let excitation = Excitation::from_config(config);
        let ground = QuantumState::basis(space, BasisState::new(0, Spin::Down, Spin::Down))?;
        let initial = excitation.apply(space, &ground.density_matrix())?;
        Ok(Self {
            space,
            horizon: periods as f64 * schedule.period(),
            schedule,
            lindblad: LindbladSpec::from_config(config),
            tol: Tolerances {
                rtol: config.rtol,
                atol: config.atol,
                ..Tolerances::default()
            },
            excitation,
            initial,
            compress: true,
        })
    }

    fn propagator(&self) -> PeriodicPropagator<'_> {
        let inner = Propagator::new(self.space, &self.schedule, self.lindblad, self.tol);
        PeriodicPropagator::new(inner, &self.excitation)
    }

    fn period(&self) -> f64 {
        self.schedule.period()
    }

    /// Lab-frame ρ at the requested increasing times.
    pub fn states_at(&self, times: &[f64]) -> Result<Vec<CMatrix>> {
        let mut prop = self.propagator();
        let dim = self.space.dim();
        let liou = &prop.inner.liouvillian;
        let mut x = liou.to_interaction(0.0, &self.initial).as_slice().to_vec();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &s in times {
            if s < t {
                return Err(Error::InvalidArgument("times must increase".into()));
            }
            prop.advance(&mut x, t, s)?;
            t = s;
            out.push(
                prop.inner
                    .liouvillian
                    .to_lab(s, &CMatrix::from_column_slice(dim, dim, &x)),
            );
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    /// A ρ A†
    Sandwich,
    /// A ρ
    Left,
}

/// Samples G(t, τ) on a grid. Rows are start times, columns delays.
/// Entries with t + τ beyond the horizon are zero (nothing is recorded
/// after the run ends).
#[derive(Clone, Debug)]
pub struct CorrelationGrid<T: nalgebra::Scalar> {
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub values: DMatrix<T>,
}

impl CorrelationGrid<f64> {
    /// G(τ) = ∫ G(t, τ) dt by the trapezoid rule.
    pub fn marginal(&self) -> Vec<f64> {
        (0..self.tau_grid.len())
            .map(|j| trapezoid(&self.t_grid, |i| self.values[(i, j)]))
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t[1/omega],tau[1/omega],value")?;
        for (i, t) in self.t_grid.iter().enumerate() {
            for (j, tau) in self.tau_grid.iter().enumerate() {
                writeln!(w, "{t:.6},{tau:.6},{:.12e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }
}

fn trapezoid(x: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    x.windows(2)
        .enumerate()
        .map(|(i, w)| 0.5 * (f(i) + f(i + 1)) * (w[1] - w[0]))
        .sum()
}

/// Time key used to share observable samples between start times.
fn key(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

/// ⟨A†(t) M(t+τ) A(t)⟩ (Sandwich) or Tr[M Λ(Aρ(t))] (Left; with A = a and
/// M = a† this is ⟨a†(t+τ) a(t)⟩).
pub fn two_time_correlator(
    ctx: &RegressionContext,
    a: &Operator,
    conditioning: Conditioning,
    observable: &Operator,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<CorrelationGrid<C64>> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grids must increase strictly".into()));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) || tau_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("grids must be non-negative".into()));
    }
    if t_grid.last().is_some_and(|&t| t > ctx.horizon) {
        return Err(Error::InvalidArgument("start times beyond the horizon".into()));
    }
    ctx.space.check_same(&a.space())?;
    ctx.space.check_same(&observable.space())?;
    let dim = ctx.space.dim();
    let am = a.matrix();
    let m = observable.matrix();
    let rhos = ctx.states_at(t_grid)?;
    let period = ctx.period();
    let trace_with = |prop: &PeriodicPropagator<'_>, s: f64, x: &[C64]| -> C64 {
        let lab = prop
            .inner
            .liouvillian
            .to_lab(s, &CMatrix::from_column_slice(dim, dim, x));
        (m * lab).trace()
    };

    struct Row {
        values: Vec<C64>,
        /// Conditioned operator (interaction frame) just before the next
        /// period boundary, when the delays reach past it.
        carry: Option<(f64, Vec<C64>)>,
    }

    let rows: Vec<Row> = t_grid
        .par_iter()
        .zip(rhos.par_iter())
        .map(|(&t, rho)| -> Result<Row> {
            let x_lab = match conditioning {
                Conditioning::Sandwich => am * rho * am.adjoint(),
                Conditioning::Left => am * rho,
            };
            let mut prop = ctx.propagator();
            let mut x = prop.inner.liouvillian.to_interaction(t, &x_lab).as_slice().to_vec();
            let boundary = ((t / period + 1e-9).floor() + 1.0) * period;
            let mut values = vec![C64::new(0.0, 0.0); tau_grid.len()];
            let mut now = t;
            for (j, &tau) in tau_grid.iter().enumerate() {
                let s = t + tau;
                if s > ctx.horizon + 1e-9 {
                    break;
                }
                if ctx.compress && s >= boundary - 1e-9 {
                    prop.inner.advance(&mut x, now, boundary)?;
                    return Ok(Row { values, carry: Some((boundary, x)) });
                }
                prop.advance(&mut x, now, s)?;
                now = s;
                values[j] = trace_with(&prop, s, &x);
            }
            Ok(Row { values, carry: None })
        })
        .collect::<Result<_>>()?;

    let mut values = DMatrix::from_fn(t_grid.len(), tau_grid.len(), |i, j| rows[i].values[j]);

    // Group carried operators by boundary and finish them in a shared basis.
    let mut groups: BTreeMap<i64, (f64, Vec<usize>)> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if let Some((b, _)) = &r.carry {
            groups.entry(key(*b)).or_insert((*b, Vec::new())).1.push(i);
        }
    }
    for (_, (boundary, members)) in groups {
        let stack = DMatrix::from_fn(dim * dim, members.len(), |r, c| {
            rows[members[c]].carry.as_ref().expect("carried").1[r]
        });
        let svd = stack.clone().svd(true, false);
        let u = svd.u.expect("requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| smax > 0.0 && svd.singular_values[k] > COMPRESSION_TOL * smax)
            .collect();
        // Sample times needed after the boundary.
        let mut times: BTreeMap<i64, f64> = BTreeMap::new();
        for &i in &members {
            for &tau in tau_grid {
                let s = t_grid[i] + tau;
                if s >= boundary - 1e-9 && s <= ctx.horizon + 1e-9 {
                    times.insert(key(s), s);
                }
            }
        }
        let sample_times: Vec<f64> = times.values().copied().collect();
        let basis_traces: Vec<Vec<C64>> = keep
            .par_iter()
            .map(|&k| -> Result<Vec<C64>> {
                let mut prop = ctx.propagator();
                let liou = &prop.inner.liouvillian;
                let mut x: Vec<C64> = u.column(k).iter().copied().collect();
                let lab = liou.to_lab(boundary, &CMatrix::from_column_slice(dim, dim, &x));
                let kicked = ctx.excitation.apply(ctx.space, &lab)?;
                x = liou.to_interaction(boundary, &kicked).as_slice().to_vec();
                let mut now = boundary;
                let mut out = Vec::with_capacity(sample_times.len());
                for &s in &sample_times {
                    prop.advance(&mut x, now, s)?;
                    now = s;
                    out.push(trace_with(&prop, s, &x));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let index: BTreeMap<i64, usize> = times.keys().enumerate().map(|(n, k)| (*k, n)).collect();
        for (c, &i) in members.iter().enumerate() {
            let coeff: Vec<C64> = keep
                .iter()
                .map(|&k| u.column(k).dotc(&stack.column(c)))
                .collect();
            for (j, &tau) in tau_grid.iter().enumerate() {
                let s = t_grid[i] + tau;
                if s < boundary - 1e-9 || s > ctx.horizon + 1e-9 {
                    continue;
                }
                let n = index[&key(s)];
                values[(i, j)] = coeff
                    .iter()
                    .zip(&basis_traces)
                    .map(|(c, tr)| c * tr[n])
                    .sum();
            }
        }
    }

    Ok(CorrelationGrid {
        t_grid: t_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        values,
    })
}

/// Which photons are routed to the detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Both,
    First,
    Second,
}

impl std::str::FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Channel::Both),
            "first" => Ok(Channel::First),
            "second" => Ok(Channel::Second),
            other => Err(Error::InvalidArgument(format!("unknown channel '{other}'"))),
        }
    }
}

/// Raw regression data of one protocol run: ⟨a†a†aa⟩ and ⟨a†(t+τ)a(t)⟩
/// over start times covering one period's emission, plus the one-time
/// quantities needed for weighting.
#[derive(Clone, Debug)]
pub struct RegressionData {
    pub period: f64,
    pub windows: [(f64, f64); 2],
    pub g2: CorrelationGrid<f64>,
    pub g1: CorrelationGrid<C64>,
    /// κ_c and ⟨a†a⟩ on the shared time lattice s = k·dt.
    pub dt: f64,
    pub kappa: Vec<f64>,
    pub photons: Vec<f64>,
}

impl RegressionData {
    fn lattice(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    fn window_index(&self, channel: Channel, t: f64) -> Option<i64> {
        let k = (t / self.period + 1e-9).floor();
        let local = t - k * self.period;
        let inside = |w: (f64, f64)| local >= w.0 - 1e-9 && local < w.1 - 1e-9;
        let hit = match channel {
            Channel::Both => true,
            Channel::First => inside(self.windows[0]),
            Channel::Second => inside(self.windows[1]),
        };
        hit.then_some(k as i64)
    }

    /// Detected photon flux N(t) = κ_c(t)⟨a†a⟩(t) in the channel.
    fn flux(&self, channel: Channel, t: f64) -> f64 {
        let n = self.lattice(t);
        match (self.window_index(channel, t), self.kappa.get(n)) {
            (Some(_), Some(k)) => k * self.photons[n],
            _ => 0.0,
        }
    }

    fn weight(&self, channel: Channel, t: f64, s: f64) -> f64 {
        match (self.window_index(channel, t), self.window_index(channel, s)) {
            (Some(_), Some(_)) => {
                let (i, j) = (self.lattice(t), self.lattice(s));
                match (self.kappa.get(i), self.kappa.get(j)) {
                    (Some(a), Some(b)) => a * b,
                    _ => 0.0,
                }
            }
            _ => 0.0,
        }
    }

    /// Detected coincidences κ(t)κ(t+τ)⟨a†(t)a†(t+τ)a(t+τ)a(t)⟩.
    pub fn hbt_grid(&self, channel: Channel) -> CorrelationGrid<f64> {
        let g = &self.g2;
        let values = DMatrix::from_fn(g.t_grid.len(), g.tau_grid.len(), |i, j| {
            let (t, tau) = (g.t_grid[i], g.tau_grid[j]);
            self.weight(channel, t, t + tau) * g.values[(i, j)]
        });
        CorrelationGrid { t_grid: g.t_grid.clone(), tau_grid: g.tau_grid.clone(), values }
    }

    /// √(κ(t)κ(t+τ))⟨a†(t+τ)a(t)⟩ in the channel.
    fn coherence(&self, channel: Channel, i: usize, j: usize) -> C64 {
        let (t, tau) = (self.g1.t_grid[i], self.g1.tau_grid[j]);
        self.g1.values[(i, j)] * self.weight(channel, t, t + tau).sqrt()
    }

    /// ½[G²(t,τ) + N(t)N(t+τ) − |G¹(t,τ)|²] for two identical streams.
    pub fn hom_grid(&self, channel: Channel) -> CorrelationGrid<f64> {
        let hbt = self.hbt_grid(channel);
        let values = DMatrix::from_fn(hbt.t_grid.len(), hbt.tau_grid.len(), |i, j| {
            let (t, tau) = (hbt.t_grid[i], hbt.tau_grid[j]);
            let nn = self.flux(channel, t) * self.flux(channel, t + tau);
            0.5 * (hbt.values[(i, j)] + nn - self.coherence(channel, i, j).norm_sqr())
        });
        CorrelationGrid { t_grid: hbt.t_grid, tau_grid: hbt.tau_grid, values }
    }

    /// I = ∫∫|G¹|² / ∫∫ N(t)N(t+τ) with t and t+τ inside the same window
    /// of the first period.
    pub fn indistinguishability(&self, channel: Channel) -> Result<f64> {
        let g = &self.g1;
        let same = |t: f64, s: f64| {
            t < self.period && self.window_index(channel, t).is_some()
                && self.window_index(channel, t) == self.window_index(channel, s)
        };
        let mut num = Vec::with_capacity(g.t_grid.len());
        let mut den = Vec::with_capacity(g.t_grid.len());
        for (i, &t) in g.t_grid.iter().enumerate() {
            let inner = |f: &dyn Fn(usize) -> f64| trapezoid(&g.tau_grid, |j| {
                if same(t, t + g.tau_grid[j]) { f(j) } else { 0.0 }
            });
            num.push(inner(&|j| self.coherence(channel, i, j).norm_sqr()));
            den.push(inner(&|j| self.flux(channel, t) * self.flux(channel, t + g.tau_grid[j])));
        }
        let num = trapezoid(&g.t_grid, |i| num[i]);
        let den = trapezoid(&g.t_grid, |i| den[i]);
        if !(den > 0.0) {
            return Err(Error::NoEmission);
        }
        Ok(num / den)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RegressionOptions {
    /// Grid step for both t and τ.
    pub dt: f64,
    /// Longest delay, in periods.
    pub tau_periods: f64,
}

impl RegressionOptions {
    pub fn from_config(config: &ProtocolConfig) -> Self {
        Self { dt: config.dt_correlation, tau_periods: 1.5 }
    }
}

/// Runs the regression for start times covering the first period's
/// emission (κ_c > 0) and delays up to `tau_periods` periods.
pub fn protocol_regression(
    config: &ProtocolConfig,
    stark: bool,
    periods: usize,
    options: &RegressionOptions,
) -> Result<RegressionData> {
    let ctx = RegressionContext::protocol(config, stark, periods)?;
    let dt = options.dt;
    let period = ctx.period();
    if !(dt > 0.0) || ((period / dt).round() * dt - period).abs() > 1e-9 {
        return Err(Error::InvalidArgument("dt must divide the period".into()));
    }
    let lattice = |a: f64, b: f64| -> Vec<f64> {
        let (i0, i1) = ((a / dt).ceil() as usize, (b / dt).floor() as usize);
        (i0..=i1).map(|i| i as f64 * dt).collect()
    };
    let t_grid: Vec<f64> = lattice(config.t_emission_start, period - dt);
    let tau_grid = lattice(0.0, options.tau_periods * period);
    let all = lattice(0.0, ctx.horizon);
    let states = ctx.states_at(&all)?;
    let nop = number(ctx.space);
    let photons: Vec<f64> = states.iter().map(|r| (nop.matrix() * r).trace().re).collect();
    let kappa: Vec<f64> = all.iter().map(|&t| ctx.schedule.kappa_c(t)).collect();

    let a = annihilator(ctx.space);
    let g2 = two_time_correlator(&ctx, &a, Conditioning::Sandwich, &nop, &t_grid, &tau_grid)?;
    let g1 = two_time_correlator(&ctx, &a, Conditioning::Left, &creator(ctx.space), &t_grid, &tau_grid)?;
    let g2 = CorrelationGrid {
        values: g2.values.map(|v| v.re),
        t_grid: g2.t_grid,
        tau_grid: g2.tau_grid,
    };
    Ok(RegressionData {
        period,
        windows: [config.window_first(), config.window_second()],
        g2,
        g1,
        dt,
        kappa,
        photons,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MeritReport {
    pub channel: Channel,
    /// Normalized G²(0) (HBT) or G²_HOM(0) (HOM).
    pub g2_zero: f64,
    pub indistinguishability: Option<f64>,
    pub efficiencies: Vec<f64>,
    pub peak_positions: Vec<f64>,
}

/// Normalized marginal and report.
#[derive(Clone, Debug, Serialize)]
pub struct Marginal {
    pub tau: Vec<f64>,
    pub value: Vec<f64>,
    pub normalization: f64,
}

impl Marginal {
    fn from_grid(grid: &CorrelationGrid<f64>) -> Self {
        let raw = grid.marginal();
        let normalization = raw.iter().copied().fold(0.0, f64::max);
        let scale = if normalization > 0.0 { 1.0 / normalization } else { 0.0 };
        Self {
            tau: grid.tau_grid.clone(),
            value: raw.iter().map(|v| v * scale).collect(),
            normalization,
        }
    }

    /// Local maxima above `threshold` (normalized units).
    pub fn peaks(&self, threshold: f64) -> Vec<f64> {
        let v = &self.value;
        (1..v.len().saturating_sub(1))
            .filter(|&j| v[j] > threshold && v[j] >= v[j - 1] && v[j] > v[j + 1])
            .map(|j| self.tau[j])
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau[1/omega],normalized")?;
        for (t, v) in self.tau.iter().zip(&self.value) {
            writeln!(w, "{t:.6},{v:.12e}")?;
        }
        Ok(())
    }
}

/// Peaks lower than this fraction of the highest one are not reported.
pub const PEAK_THRESHOLD: f64 = 0.1;

pub fn hbt_g2(data: &RegressionData, channel: Channel) -> (CorrelationGrid<f64>, Marginal, MeritReport) {
    let grid = data.hbt_grid(channel);
    let marginal = Marginal::from_grid(&grid);
    let report = MeritReport {
        channel,
        g2_zero: marginal.value[0],
        indistinguishability: None,
        efficiencies: Vec::new(),
        peak_positions: marginal.peaks(PEAK_THRESHOLD),
    };
    (grid, marginal, report)
}

/// Same as [`hbt_g2`]; the channel selects the routed photons.
pub fn channel_separated_g2(
    data: &RegressionData,
    channel: Channel,
) -> (CorrelationGrid<f64>, Marginal, MeritReport) {
    hbt_g2(data, channel)
}

pub fn hom_correlation(data: &RegressionData, channel: Channel) -> (CorrelationGrid<f64>, Marginal) {
    let grid = data.hom_grid(channel);
    let marginal = Marginal::from_grid(&grid);
    (grid, marginal)
}

pub fn indistinguishability(data: &RegressionData, channel: Channel) -> Result<f64> {
    data.indistinguishability(channel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::schedule::{ScheduleBuilder, ScheduleParams};
    use crate::models::ModelKind;

    fn cavity(kappa: f64, horizon: f64, initial: CMatrix, space: SystemSpace) -> RegressionContext {
        let p = ScheduleParams { kappa_c: kappa, ..ScheduleParams::manifold(1.0, 0.6, 0.0, 0.0, 0.0) };
        let schedule = ScheduleBuilder::start(1.0, p).hold(horizon, ModelKind::Jc).build().unwrap();
        RegressionContext {
            space,
            schedule,
            lindblad: LindbladSpec::closed(),
            tol: Tolerances::default(),
            excitation: Excitation::None,
            initial,
            horizon,
            compress: true,
        }
    }

    #[test]
    fn single_photon_never_coincides() {
        let space = SystemSpace::new(3).unwrap();
        let rho = QuantumState::basis(space, BasisState::new(1, Spin::Down, Spin::Down)).unwrap();
        let ctx = cavity(0.2, 20.0, rho.density_matrix(), space);
        let g = two_time_correlator(
            &ctx,
            &annihilator(space),
            Conditioning::Sandwich,
            &number(space),
            &[0.0, 1.0, 2.5],
            &[0.0, 0.5, 3.0],
        )
        .unwrap();
        assert!(g.values.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn compression_matches_direct_propagation() {
        // Short period so that delays cross several boundaries.
        let space = SystemSpace::new(3).unwrap();
        let p0 = ScheduleParams { kappa_c: 0.05, ..ScheduleParams::manifold(1.0, 0.0, 0.0, 0.0, 0.0) };
        let p1 = ScheduleParams { g1: 0.2, g2: 0.2, ..p0 };
        let schedule = ScheduleBuilder::start(1.0, p0)
            .to(4.0, p1, crate::models::Interp::Smoothstep, ModelKind::Jc)
            .to(8.0, p0, crate::models::Interp::Smoothstep, ModelKind::Jc)
            .build()
            .unwrap();
        let rho = QuantumState::superposition(
            space,
            &[
                (BasisState::new(1, Spin::Up, Spin::Down), C64::new(0.6, 0.0)),
                (BasisState::new(2, Spin::Down, Spin::Down), C64::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let mut ctx = RegressionContext {
            space,
            schedule,
            lindblad: LindbladSpec { kappa_in: 0.01, gamma: [0.02, 0.01], gamma_phi: [0.01, 0.03] },
            tol: Tolerances::default(),
            excitation: Excitation::Flip,
            initial: rho.density_matrix(),
            horizon: 24.0,
            compress: true,
        };
        let t: Vec<f64> = (0..14).map(|i| 0.5 * i as f64).collect();
        let tau: Vec<f64> = (0..30).map(|i| 0.5 * i as f64).collect();
        let a = annihilator(space);
        for (cond, m) in [(Conditioning::Sandwich, number(space)), (Conditioning::Left, creator(space))] {
            ctx.compress = true;
            let fast = two_time_correlator(&ctx, &a, cond, &m, &t, &tau).unwrap();
            ctx.compress = false;
            let slow = two_time_correlator(&ctx, &a, cond, &m, &t, &tau).unwrap();
            let err = (&fast.values - &slow.values).iter().map(|c| c.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{cond:?}: {err}");
        }
    }

    #[test]
    fn zero_delay_matches_equal_time_moments() {
        let space = SystemSpace::new(4).unwrap();
        let rho = QuantumState::superposition(
            space,
            &[
                (BasisState::new(0, Spin::Down, Spin::Down), C64::new(0.5, 0.0)),
                (BasisState::new(2, Spin::Down, Spin::Down), C64::new(0.5, 0.5)),
                (BasisState::new(1, Spin::Down, Spin::Down), C64::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        let ctx = cavity(0.1, 10.0, rho.density_matrix(), space);
        let t = [0.0, 2.0, 4.0];
        let a = annihilator(space);
        let g1 = two_time_correlator(&ctx, &a, Conditioning::Left, &creator(space), &t, &[0.0]).unwrap();
        let g2 = two_time_correlator(&ctx, &a, Conditioning::Sandwich, &number(space), &t, &[0.0]).unwrap();
        let states = ctx.states_at(&t).unwrap();
        let n = number(space);
        for (i, r) in states.iter().enumerate() {
            let nn = (n.matrix() * r).trace();
            let n2 = (n.matrix() * (n.matrix() - CMatrix::identity(space.dim(), space.dim())) * r).trace();
            assert!((g1.values[(i, 0)] - nn).norm() < 1e-8);
            assert!(g1.values[(i, 0)].im.abs() < 1e-10);
            assert!((g2.values[(i, 0)] - n2).norm() < 1e-8);
        }
    }
}
