//! Protocol configuration and the two period schedules built from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schedule::{Interp, Schedule, ScheduleBuilder, ScheduleParams};
use super::{DriveParams, ModelKind};
use crate::error::{Error, Result};

/// One knot of a ramp, at fraction `at` ∈ [0, 1] of the ramp duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampKnot {
    pub at: f64,
    /// Coupling g = g1 = g2 in units of ω.
    pub g: f64,
    /// Δ1 − Δ2 in units of ω.
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampShape {
    pub knots: Vec<RampKnot>,
    #[serde(default)]
    pub interp: Interp,
}

impl RampShape {
    fn validate(&self, what: &str) -> Result<()> {
        let k = &self.knots;
        if k.len() < 2 {
            return Err(Error::Schedule(format!("{what}: ramp needs at least two knots")));
        }
        if k[0].at != 0.0 || k[k.len() - 1].at != 1.0 {
            return Err(Error::Schedule(format!("{what}: knots must span [0, 1]")));
        }
        if k.windows(2).any(|w| !(w[1].at > w[0].at)) {
            return Err(Error::Schedule(format!("{what}: knot positions must increase")));
        }
        if k.iter().any(|k| k.g < 0.0 || !k.g.is_finite() || !k.detuning.is_finite()) {
            return Err(Error::Schedule(format!("{what}: invalid knot values")));
        }
        Ok(())
    }

    pub fn first(&self) -> RampKnot {
        self.knots[0]
    }

    pub fn last(&self) -> RampKnot {
        self.knots[self.knots.len() - 1]
    }

    pub fn peak_g(&self) -> f64 {
        self.knots.iter().map(|k| k.g).fold(0.0, f64::max)
    }

    /// Appends the ramp to `b`, spanning [b.now(), b.now() + duration].
    fn append(
        &self,
        mut b: ScheduleBuilder,
        omega: f64,
        duration: f64,
        u: f64,
        kappa_c: f64,
        kind: ModelKind,
    ) -> ScheduleBuilder {
        let t0 = b.now();
        for k in &self.knots[1..] {
            let snap = ScheduleParams::manifold(omega, k.detuning, k.g, u, kappa_c);
            b = b.to(t0 + k.at * duration, snap, self.interp, kind);
        }
        b
    }
}

/// Piecewise-linear Rabi ramp chosen to minimise the closed-system
/// transfer infidelity at 68 ω⁻¹ (0.9988 at fock cutoff 8).
pub fn default_rabi_ramp() -> RampShape {
    let g = [0.0, 0.2367, 0.8152, 0.8821, 0.3292, 0.554];
    let d = [0.6, 0.7537, 0.9503, 0.9296, 0.1718, 0.0];
    RampShape {
        knots: (0..6)
            .map(|i| RampKnot { at: i as f64 / 5.0, g: g[i], detuning: d[i] })
            .collect(),
        interp: Interp::Linear,
    }
}

/// Linear Rabi-Stark ramp (U = 0.5 ω) reaching 0.9994 at 12 ω⁻¹. It ends at
/// g = 0.75 ω where the dark level is 0.541 ω away from its neighbours.
pub fn default_stark_ramp() -> RampShape {
    RampShape {
        knots: vec![
            RampKnot { at: 0.0, g: 0.0, detuning: 0.6 },
            RampKnot { at: 0.25, g: 0.29, detuning: 1.0 },
            RampKnot { at: 0.5, g: 0.76, detuning: 0.585 },
            RampKnot { at: 0.75, g: 0.77, detuning: 0.223 },
            RampKnot { at: 1.0, g: 0.75, detuning: 0.0 },
        ],
        interp: Interp::Linear,
    }
}

/// JC return ramp: g switches on at zero detuning and stays constant while
/// the detuning opens, so the cavity photon leaks out at a roughly constant
/// rate while the qubits are steered back. g drops to zero over the last
/// fifth. Tuned for reset fidelity (0.996) with a near-Gaussian waveform
/// centred about 48 ω⁻¹ into the second window.
pub fn default_jc_ramp() -> RampShape {
    let g = 0.4554;
    let at = [0.0, 0.04, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0];
    let gs = [0.0, g, g, g, g, g, g, 0.0];
    let d = [0.0, 0.0, 0.0, 0.1525, 0.3168, 0.5418, 1.0, 0.6];
    RampShape {
        knots: (0..at.len())
            .map(|i| RampKnot { at: at[i], g: gs[i], detuning: d[i] })
            .collect(),
        interp: Interp::Linear,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarkConfig {
    /// U1 = U2.
    pub u: f64,
    pub t_adiabatic: f64,
    /// Time to release g back to zero at zero detuning.
    pub t_release: f64,
    /// Time to switch U off once g = 0.
    pub t_unshift: f64,
    pub ramp: RampShape,
}

impl Default for StarkConfig {
    fn default() -> Self {
        Self {
            u: 0.5,
            t_adiabatic: 12.0,
            t_release: 8.0,
            t_unshift: 2.0,
            ramp: default_stark_ramp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    /// Flip both qubits at the start of every period.
    #[default]
    Ideal,
    /// Simulate the resonant π pulses of the pump drive.
    Pulsed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub omega: f64,
    pub fock_cutoff: usize,
    /// Δ1 − Δ2 at the start of the period (Δ1 + Δ2 = ω always).
    pub detuning_start: f64,

    pub t_adiabatic1: f64,
    pub t_emission_start: f64,
    pub t_emission_end: f64,
    pub t_adiabatic2: f64,
    pub period: f64,
    /// Duration of the κ_c smoothstep switch.
    pub t_switch: f64,

    pub rabi_ramp: RampShape,
    pub jc_ramp: RampShape,
    pub stark: StarkConfig,

    pub kappa_in: f64,
    pub kappa_c_on: f64,
    pub gamma: [f64; 2],
    pub gamma_phi: [f64; 2],

    pub preparation: Preparation,
    /// Pump amplitude Ω for pulsed preparation.
    pub drive_amplitude: f64,

    pub rtol: f64,
    pub atol: f64,
    /// Output sampling step for trajectories.
    pub dt_output: f64,
    /// t and τ grid spacing for two-time correlations.
    pub dt_correlation: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            fock_cutoff: 8,
            detuning_start: 0.6,
            t_adiabatic1: 68.0,
            t_emission_start: 100.0,
            t_emission_end: 150.0,
            t_adiabatic2: 68.0,
            period: 260.0,
            t_switch: 2.0,
            rabi_ramp: default_rabi_ramp(),
            jc_ramp: default_jc_ramp(),
            stark: StarkConfig::default(),
            kappa_in: 1e-4,
            kappa_c_on: 0.1,
            gamma: [1e-5, 1e-5],
            gamma_phi: [2e-5, 2e-5],
            preparation: Preparation::Ideal,
            drive_amplitude: 0.05,
            rtol: 1e-8,
            atol: 1e-10,
            dt_output: 0.5,
            dt_correlation: 0.5,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(s).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn g_max(&self) -> f64 {
        self.rabi_ramp.peak_g()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidArgument("omega must be positive".into()));
        }
        if self.fock_cutoff < 1 {
            return Err(Error::InvalidArgument("fock_cutoff must be at least 1".into()));
        }
        let rates = [self.kappa_in, self.kappa_c_on]
            .into_iter()
            .chain(self.gamma)
            .chain(self.gamma_phi);
        for r in rates {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::InvalidArgument("rates must be non-negative".into()));
            }
        }
        let phases = [
            0.0,
            self.t_adiabatic1,
            self.t_emission_start,
            self.t_emission_end,
            self.t_emission_end + self.t_adiabatic2,
            self.period,
        ];
        if phases.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Schedule(format!(
                "phase boundaries must increase: {phases:?}"
            )));
        }
        if !(self.t_switch > 0.0)
            || self.t_switch >= self.t_emission_end - self.t_emission_start
            || self.t_switch >= self.period - self.t_emission_end - self.t_adiabatic2
        {
            return Err(Error::Schedule("t_switch does not fit its phase".into()));
        }
        self.rabi_ramp.validate("rabi_ramp")?;
        self.jc_ramp.validate("jc_ramp")?;
        self.stark.ramp.validate("stark.ramp")?;
        let ends = [
            (self.rabi_ramp.first(), Some(0.0), self.detuning_start, "rabi_ramp start"),
            (self.rabi_ramp.last(), None, 0.0, "rabi_ramp end"),
            (self.jc_ramp.first(), Some(0.0), 0.0, "jc_ramp start"),
            (self.jc_ramp.last(), Some(0.0), self.detuning_start, "jc_ramp end"),
            (self.stark.ramp.first(), Some(0.0), self.detuning_start, "stark ramp start"),
            (self.stark.ramp.last(), None, 0.0, "stark ramp end"),
        ];
        for (knot, g, d, what) in ends {
            let g_ok = g.is_none_or(|g| (knot.g - g).abs() <= 1e-12);
            if !g_ok || (knot.detuning - d).abs() > 1e-12 {
                return Err(Error::Schedule(format!("{what} must be at detuning {d}")));
            }
        }
        if self.stark.u < 0.0 || 2.0 * self.stark.u > self.omega {
            return Err(Error::InvalidArgument(
                "Stark coupling must satisfy 0 <= U1 + U2 <= omega".into(),
            ));
        }
        let s = &self.stark;
        if !(s.t_adiabatic > 0.0 && s.t_release > 0.0 && s.t_unshift > 0.0) {
            return Err(Error::Schedule("Stark phase durations must be positive".into()));
        }
        if s.t_adiabatic + s.t_release + s.t_unshift >= self.t_emission_start {
            return Err(Error::Schedule(
                "Stark transfer must finish before the emission window".into(),
            ));
        }
        if self.dt_output <= 0.0 || self.dt_correlation <= 0.0 {
            return Err(Error::InvalidArgument("grid steps must be positive".into()));
        }
        if self.preparation == Preparation::Pulsed && !(self.drive_amplitude > 0.0) {
            return Err(Error::InvalidArgument("pulsed preparation needs Ω > 0".into()));
        }
        Ok(())
    }

    /// Pump pulses for pulsed preparation: a resonant π pulse on each qubit,
    /// starting at t = 0, with the cavity far detuned (g = 0).
    pub fn drive(&self) -> DriveParams {
        let d = self.detuning_start;
        DriveParams {
            rabi_amplitude: self.drive_amplitude,
            wq1: self.omega + d,
            wq2: self.omega - d,
            t_on: 0.0,
            t_off: std::f64::consts::PI / self.drive_amplitude,
        }
    }

    pub fn window_first(&self) -> (f64, f64) {
        (self.t_emission_start, self.t_emission_end)
    }

    pub fn window_second(&self) -> (f64, f64) {
        (self.t_emission_end, self.period)
    }

    fn start_params(&self) -> ScheduleParams {
        ScheduleParams::manifold(self.omega, self.detuning_start, 0.0, 0.0, 0.0)
    }

    /// Emission, JC return and idle phases shared by both protocols.
    fn append_emission(&self, b: ScheduleBuilder) -> ScheduleBuilder {
        let w = self.omega;
        let on = self.kappa_c_on;
        let t_ramp_end = self.t_emission_end + self.t_adiabatic2;
        let resonant = ScheduleParams::manifold(w, 0.0, 0.0, 0.0, 0.0);
        let lit = ScheduleParams { kappa_c: on, ..resonant };
        let b = b
            .hold(self.t_emission_start, ModelKind::Jc)
            .to(self.t_emission_start + self.t_switch, lit, Interp::Smoothstep, ModelKind::Jc)
            .hold(self.t_emission_end, ModelKind::Jc);
        let b = self.jc_ramp.append(b, w, self.t_adiabatic2, 0.0, on, ModelKind::Jc);
        let end = ScheduleParams::manifold(w, self.detuning_start, 0.0, 0.0, 0.0);
        let end_lit = ScheduleParams { kappa_c: on, ..end };
        debug_assert!((b.now() - t_ramp_end).abs() < 1e-9);
        b.to(self.period - self.t_switch, end_lit, Interp::Linear, ModelKind::Jc)
            .to(self.period, end, Interp::Smoothstep, ModelKind::Jc)
    }
}

/// One period of the Rabi/JC protocol: Rabi ramp, release of g at zero
/// detuning, emission, JC return ramp with the coupler open, idle.
pub fn paper_protocol_schedule(config: &ProtocolConfig) -> Result<Schedule> {
    config.validate()?;
    let w = config.omega;
    let b = ScheduleBuilder::start(w, config.start_params());
    let b = config
        .rabi_ramp
        .append(b, w, config.t_adiabatic1, 0.0, 0.0, ModelKind::Rabi);
    let released = ScheduleParams::manifold(w, 0.0, 0.0, 0.0, 0.0);
    let b = b.to(config.t_emission_start, released, Interp::Smoothstep, ModelKind::Rabi);
    config.append_emission(b).build()
}

/// The same period with the Rabi ramp replaced by the fast Rabi-Stark ramp
/// followed by release of g and removal of the Stark shift.
pub fn stark_protocol_schedule(config: &ProtocolConfig) -> Result<Schedule> {
    config.validate()?;
    let w = config.omega;
    let s = &config.stark;
    let start = ScheduleParams {
        u1: s.u,
        u2: s.u,
        ..config.start_params()
    };
    let b = ScheduleBuilder::start(w, start);
    let b = s
        .ramp
        .append(b, w, s.t_adiabatic, s.u, 0.0, ModelKind::RabiStark);
    let released = ScheduleParams::manifold(w, 0.0, 0.0, s.u, 0.0);
    let t_rel = s.t_adiabatic + s.t_release;
    let b = b.to(t_rel, released, Interp::Smoothstep, ModelKind::RabiStark);
    let unshifted = ScheduleParams::manifold(w, 0.0, 0.0, 0.0, 0.0);
    let b = b.to(t_rel + s.t_unshift, unshifted, Interp::Smoothstep, ModelKind::RabiStark);
    config.append_emission(b).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rabi_schedule_phases() {
        let cfg = ProtocolConfig::default();
        let s = paper_protocol_schedule(&cfg).unwrap();
        assert!(s.on_dark_manifold());
        assert_eq!(s.period(), 260.0);
        let p0 = s.params_at(0.0);
        assert!((p0.delta1 - 0.8).abs() < 1e-15 && (p0.delta2 - 0.2).abs() < 1e-15);
        assert_eq!((p0.g1, p0.kappa_c), (0.0, 0.0));
        let p = s.params_at(68.0);
        assert!((p.delta1 - 0.5).abs() < 1e-15 && (p.delta2 - 0.5).abs() < 1e-15);
        assert!((p.g1 - cfg.rabi_ramp.last().g).abs() < 1e-15);
        let e = s.params_at(120.0);
        assert_eq!(e.g1, 0.0);
        assert!((e.kappa_c - 0.1).abs() < 1e-15);
        assert!((e.kappa_c / cfg.kappa_in - 1000.0).abs() < 1e-9);
        assert_eq!(s.kind_at(120.0), ModelKind::Jc);
        assert_eq!(s.kind_at(30.0), ModelKind::Rabi);
        assert!((s.params_at(240.0).kappa_c - 0.1).abs() < 1e-15);
        assert!(s.params_at(259.999_999).kappa_c < 1e-9);
    }

    #[test]
    fn stark_schedule_holds_u() {
        let cfg = ProtocolConfig::default();
        let s = stark_protocol_schedule(&cfg).unwrap();
        for i in 0..=24 {
            let p = s.params_at(0.5 * i as f64);
            assert_eq!((p.u1, p.u2), (0.5, 0.5));
        }
        assert_eq!(s.kind_at(5.0), ModelKind::RabiStark);
        assert!((s.params_at(12.0).detuning()).abs() < 1e-15);
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = ProtocolConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ProtocolConfig::from_toml_str(&text).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ProtocolConfig::from_json_str(&json).unwrap(), cfg);
        let partial = ProtocolConfig::from_toml_str("t_adiabatic1 = 60.0\n").unwrap();
        assert_eq!(partial.t_adiabatic1, 60.0);
        assert!(ProtocolConfig::from_toml_str("t_emission_start = 50.0\n").is_err());
        assert!(ProtocolConfig::from_toml_str("bogus = 1\n").is_err());
        let mut bad = cfg.clone();
        bad.stark.u = 0.6;
        assert!(bad.validate().is_err());
    }
}
