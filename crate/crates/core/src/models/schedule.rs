//! Piecewise time dependence of every model parameter plus the coupler
//! decay rate κ_c(t).

use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelParams, MANIFOLD_TOL};
use crate::error::{Error, Result};

/// One snapshot of the time-dependent knobs at a breakpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
    pub u1: f64,
    pub u2: f64,
    pub kappa_c: f64,
}

impl ScheduleParams {
    /// Dark-manifold snapshot with Δ1 − Δ2 = `detuning`, Δ1 + Δ2 = `omega`.
    pub fn manifold(omega: f64, detuning: f64, g: f64, u: f64, kappa_c: f64) -> Self {
        Self {
            delta1: 0.5 * (omega + detuning),
            delta2: 0.5 * (omega - detuning),
            g1: g,
            g2: g,
            u1: u,
            u2: u,
            kappa_c,
        }
    }

    fn to_array(self) -> [f64; 7] {
        [
            self.delta1, self.delta2, self.g1, self.g2, self.u1, self.u2, self.kappa_c,
        ]
    }

    fn from_array(a: [f64; 7]) -> Self {
        Self {
            delta1: a[0],
            delta2: a[1],
            g1: a[2],
            g2: a[3],
            u1: a[4],
            u2: a[5],
            kappa_c: a[6],
        }
    }

    fn lerp(&self, other: &Self, w: f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| a[i] + (b[i] - a[i]) * w))
    }

    fn scale_diff(&self, other: &Self, w: f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| (b[i] - a[i]) * w))
    }

    pub fn detuning(&self) -> f64 {
        self.delta1 - self.delta2
    }

    pub fn with_kind(&self, omega: f64, kind: ModelKind) -> ModelParams {
        ModelParams {
            omega,
            delta1: self.delta1,
            delta2: self.delta2,
            g1: self.g1,
            g2: self.g2,
            u1: self.u1,
            u2: self.u2,
            kind,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    #[default]
    Smoothstep,
}

impl Interp {
    /// Weight w(s) for s ∈ [0, 1].
    fn weight(self, s: f64) -> f64 {
        match self {
            Interp::Linear => s,
            Interp::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }

    fn weight_rate(self, s: f64) -> f64 {
        match self {
            Interp::Linear => 1.0,
            Interp::Smoothstep => 6.0 * s * (1.0 - s),
        }
    }

    /// ∫₀ˢ w(x) dx.
    fn weight_integral(self, s: f64) -> f64 {
        match self {
            Interp::Linear => 0.5 * s * s,
            Interp::Smoothstep => s * s * s - 0.5 * s * s * s * s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub interp: Interp,
    pub kind: ModelKind,
}

/// Integrated diagonal coefficients ∫Δ1, ∫Δ2, ∫U1, ∫U2 where the Stark
/// parts count only on Rabi-Stark segments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagonalIntegral {
    pub delta1: f64,
    pub delta2: f64,
    pub u1: f64,
    pub u2: f64,
}

impl DiagonalIntegral {
    fn add(self, o: Self) -> Self {
        Self {
            delta1: self.delta1 + o.delta1,
            delta2: self.delta2 + o.delta2,
            u1: self.u1 + o.u1,
            u2: self.u2 + o.u2,
        }
    }

    fn scaled(self, k: f64) -> Self {
        Self {
            delta1: self.delta1 * k,
            delta2: self.delta2 * k,
            u1: self.u1 * k,
            u2: self.u2 * k,
        }
    }
}

/// Breakpoints at `times[0] = 0 < … < times[last] = period`, one segment
/// between each pair. Evaluation outside [0, period) wraps periodically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    omega: f64,
    times: Vec<f64>,
    snapshots: Vec<ScheduleParams>,
    segments: Vec<Segment>,
    dark_manifold: bool,
    #[serde(skip)]
    cumulative: Vec<DiagonalIntegral>,
}

impl Schedule {
    pub fn new(
        omega: f64,
        times: Vec<f64>,
        snapshots: Vec<ScheduleParams>,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Schedule("omega must be positive".into()));
        }
        if times.len() < 2 {
            return Err(Error::Schedule("need at least two breakpoints".into()));
        }
        if snapshots.len() != times.len() || segments.len() + 1 != times.len() {
            return Err(Error::Schedule(format!(
                "{} breakpoints need {} snapshots and {} segments, got {} and {}",
                times.len(),
                times.len(),
                times.len() - 1,
                snapshots.len(),
                segments.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Schedule("first breakpoint must be at t = 0".into()));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Schedule(format!(
                "breakpoint times must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        if snapshots
            .iter()
            .flat_map(|s| s.to_array())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Schedule("non-finite parameter".into()));
        }
        if snapshots.iter().any(|s| s.kappa_c < 0.0) {
            return Err(Error::Schedule("kappa_c must be non-negative".into()));
        }
        let dark_manifold = snapshots.iter().all(|s| {
            (s.delta1 + s.delta2 - omega).abs() <= MANIFOLD_TOL
                && (s.g1 - s.g2).abs() <= MANIFOLD_TOL
        });
        let mut schedule = Self {
            omega,
            times,
            snapshots,
            segments,
            dark_manifold,
            cumulative: Vec::new(),
        };
        schedule.rebuild_cumulative();
        Ok(schedule)
    }

    fn rebuild_cumulative(&mut self) {
        let mut acc = DiagonalIntegral::default();
        self.cumulative = vec![acc];
        for i in 0..self.segments.len() {
            acc = acc.add(self.segment_integral(i, self.times[i + 1]));
            self.cumulative.push(acc);
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[ScheduleParams] {
        &self.snapshots
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Δ1 + Δ2 = ω and g1 = g2 at every breakpoint, hence at every t.
    pub fn on_dark_manifold(&self) -> bool {
        self.dark_manifold
    }

    /// Splits `t` into (completed periods, time inside the period, segment).
    fn locate(&self, t: f64) -> (f64, f64, usize) {
        let period = self.period();
        let mut k = (t / period).floor();
        let mut local = t - k * period;
        // Guard rounding so that local stays in [0, period).
        if local >= period {
            k += 1.0;
            local -= period;
        }
        if local < 0.0 {
            local = 0.0;
        }
        let seg = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&local).expect("finite"))
        {
            Ok(i) => i.min(self.segments.len() - 1),
            Err(i) => i - 1,
        };
        (k, local, seg)
    }

    fn fraction(&self, seg: usize, local: f64) -> (f64, f64) {
        let (t0, t1) = (self.times[seg], self.times[seg + 1]);
        let len = t1 - t0;
        (((local - t0) / len).clamp(0.0, 1.0), len)
    }

    pub fn segment_at(&self, t: f64) -> Segment {
        self.segments[self.locate(t).2]
    }

    pub fn kind_at(&self, t: f64) -> ModelKind {
        self.segment_at(t).kind
    }

    pub fn params_at(&self, t: f64) -> ScheduleParams {
        let (_, local, seg) = self.locate(t);
        let (s, _) = self.fraction(seg, local);
        let w = self.segments[seg].interp.weight(s);
        self.snapshots[seg].lerp(&self.snapshots[seg + 1], w)
    }

    pub fn model_at(&self, t: f64) -> ModelParams {
        self.params_at(t).with_kind(self.omega, self.kind_at(t))
    }

    pub fn kappa_c(&self, t: f64) -> f64 {
        self.params_at(t).kappa_c
    }

    /// Time derivatives of every parameter (right derivative at breakpoints).
    pub fn rates_at(&self, t: f64) -> ScheduleParams {
        let (_, local, seg) = self.locate(t);
        let (s, len) = self.fraction(seg, local);
        let w = self.segments[seg].interp.weight_rate(s) / len;
        self.snapshots[seg].scale_diff(&self.snapshots[seg + 1], w)
    }

    fn segment_integral(&self, seg: usize, local: f64) -> DiagonalIntegral {
        let (s, len) = self.fraction(seg, local);
        let a = &self.snapshots[seg];
        let b = &self.snapshots[seg + 1];
        let wi = self.segments[seg].interp.weight_integral(s) * len;
        let lin = |x0: f64, x1: f64| x0 * s * len + (x1 - x0) * wi;
        let stark = self.segments[seg].kind == ModelKind::RabiStark;
        DiagonalIntegral {
            delta1: lin(a.delta1, b.delta1),
            delta2: lin(a.delta2, b.delta2),
            u1: if stark { lin(a.u1, b.u1) } else { 0.0 },
            u2: if stark { lin(a.u2, b.u2) } else { 0.0 },
        }
    }

    /// ∫₀ᵗ of the diagonal coefficients, periodic extension included.
    pub fn diagonal_integral(&self, t: f64) -> DiagonalIntegral {
        let (k, local, seg) = self.locate(t);
        let full = *self.cumulative.last().expect("built in new");
        full.scaled(k)
            .add(self.cumulative[seg])
            .add(self.segment_integral(seg, local))
    }

    /// Switch κ_c off everywhere (keeps all other knobs).
    pub fn without_output_coupling(&self) -> Self {
        let mut s = self.clone();
        for snap in &mut s.snapshots {
            snap.kappa_c = 0.0;
        }
        s
    }

    /// Returns the breakpoint times inside [t0, t1] including periodic
    /// repeats; integrators stop there so that kinks are never stepped over.
    pub fn breakpoints_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        let period = self.period();
        let mut out = Vec::new();
        let k0 = (t0 / period).floor() as i64;
        let k1 = (t1 / period).floor() as i64;
        for k in k0..=k1 {
            for &bt in &self.times {
                let t = k as f64 * period + bt;
                if t > t0 && t < t1 && out.last().is_none_or(|&l: &f64| t > l) {
                    out.push(t);
                }
            }
        }
        out
    }
}

/// Builder for schedules made of consecutive segments.
#[derive(Clone, Debug)]
pub struct ScheduleBuilder {
    omega: f64,
    times: Vec<f64>,
    snapshots: Vec<ScheduleParams>,
    segments: Vec<Segment>,
}

impl ScheduleBuilder {
    pub fn start(omega: f64, initial: ScheduleParams) -> Self {
        Self {
            omega,
            times: vec![0.0],
            snapshots: vec![initial],
            segments: Vec::new(),
        }
    }

    pub fn last(&self) -> ScheduleParams {
        *self.snapshots.last().expect("non-empty")
    }

    pub fn now(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    /// Appends a segment ending at absolute time `t` with values `to`.
    pub fn to(mut self, t: f64, to: ScheduleParams, interp: Interp, kind: ModelKind) -> Self {
        self.times.push(t);
        self.snapshots.push(to);
        self.segments.push(Segment { interp, kind });
        self
    }

    /// Holds the current values until `t` (no-op if already there).
    pub fn hold(self, t: f64, kind: ModelKind) -> Self {
        if t == self.now() {
            return self;
        }
        let last = self.last();
        self.to(t, last, Interp::Linear, kind)
    }

    pub fn build(self) -> Result<Schedule> {
        Schedule::new(self.omega, self.times, self.snapshots, self.segments)
    }
}
