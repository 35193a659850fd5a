//! Two-qubit Rabi, Jaynes-Cummings and Rabi-Stark Hamiltonians and the
//! qubit pump drive. All energies are in units of the resonator frequency.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilator, number, pauli_on, sigma_minus_on, Operator, PauliAxis, Qubit, SystemSpace, C64,
};

pub mod protocol;
pub mod schedule;

pub use protocol::{paper_protocol_schedule, stark_protocol_schedule, ProtocolConfig};
pub use schedule::{Interp, Schedule, ScheduleParams};

/// Tolerance used for the dark-manifold conditions Δ1+Δ2 = ω, g1 = g2.
pub const MANIFOLD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rabi,
    Jc,
    RabiStark,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rabi" => Ok(ModelKind::Rabi),
            "jc" => Ok(ModelKind::Jc),
            "rabi_stark" | "stark" => Ok(ModelKind::RabiStark),
            other => Err(Error::InvalidArgument(format!("unknown model kind '{other}'"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Rabi => "rabi",
            ModelKind::Jc => "jc",
            ModelKind::RabiStark => "rabi_stark",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g1: f64,
    pub g2: f64,
    #[serde(default)]
    pub u1: f64,
    #[serde(default)]
    pub u2: f64,
    pub kind: ModelKind,
}

impl ModelParams {
    /// Rabi model on the dark manifold: Δ1 + Δ2 = ω = 1, g1 = g2 = g,
    /// Δ1 − Δ2 = `detuning`.
    pub fn rabi_manifold(detuning: f64, g: f64) -> Self {
        Self::manifold(ModelKind::Rabi, detuning, g, 0.0)
    }

    pub fn manifold(kind: ModelKind, detuning: f64, g: f64, u: f64) -> Self {
        Self {
            omega: 1.0,
            delta1: 0.5 * (1.0 + detuning),
            delta2: 0.5 * (1.0 - detuning),
            g1: g,
            g2: g,
            u1: u,
            u2: u,
            kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega, self.delta1, self.delta2, self.g1, self.g2, self.u1, self.u2,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite model parameter".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidArgument("omega must be positive".into()));
        }
        Ok(())
    }

    /// Δ1 + Δ2 = ω and g1 = g2.
    pub fn on_dark_manifold(&self) -> bool {
        (self.delta1 + self.delta2 - self.omega).abs() <= MANIFOLD_TOL
            && (self.g1 - self.g2).abs() <= MANIFOLD_TOL
    }

    /// U1 + U2 ≤ ω. Always true for the Rabi and JC models.
    pub fn stark_stable(&self) -> bool {
        match self.kind {
            ModelKind::RabiStark => self.u1 + self.u2 <= self.omega + MANIFOLD_TOL,
            _ => true,
        }
    }

    /// Stark couplings as seen by the Hamiltonian (zero unless Rabi-Stark).
    pub fn effective_stark(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::RabiStark => (self.u1, self.u2),
            _ => (0.0, 0.0),
        }
    }

    /// Coefficient of |0↑↑⟩ in the dark state: Δ1 − Δ2 + U1 − U2.
    pub fn dark_detuning(&self) -> f64 {
        let (u1, u2) = self.effective_stark();
        self.delta1 - self.delta2 + u1 - u2
    }
}

/// The fixed operator pieces every Hamiltonian in this crate is built from.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub space: SystemSpace,
    pub number: Operator,
    pub sz1: Operator,
    pub sz2: Operator,
    /// σjx (a + a†)
    pub rabi1: Operator,
    pub rabi2: Operator,
    /// σj† a + σj a†
    pub jc1: Operator,
    pub jc2: Operator,
    /// a†a σjz
    pub stark1: Operator,
    pub stark2: Operator,
    pub a: Operator,
    pub sm1: Operator,
    pub sm2: Operator,
}

impl HamiltonianTerms {
    pub fn new(space: SystemSpace) -> Self {
        let a = annihilator(space);
        let x = a.add(&a.dagger()).expect("same space");
        let n = number(space);
        let sz1 = pauli_on(space, Qubit::One, PauliAxis::Z);
        let sz2 = pauli_on(space, Qubit::Two, PauliAxis::Z);
        let sx1 = pauli_on(space, Qubit::One, PauliAxis::X);
        let sx2 = pauli_on(space, Qubit::Two, PauliAxis::X);
        let sm1 = sigma_minus_on(space, Qubit::One);
        let sm2 = sigma_minus_on(space, Qubit::Two);
        let jc = |sm: &Operator| {
            let rot = sm.dagger().mul(&a).expect("same space");
            rot.add(&rot.dagger())
                .expect("same space")
                .into_hermitian()
                .expect("JC coupling is Hermitian")
        };
        let hermitian = |op: Operator| op.into_hermitian().expect("product of commuting Hermitians");
        Self {
            space,
            rabi1: hermitian(sx1.mul(&x).expect("same space")),
            rabi2: hermitian(sx2.mul(&x).expect("same space")),
            jc1: jc(&sm1),
            jc2: jc(&sm2),
            stark1: hermitian(n.mul(&sz1).expect("same space")),
            stark2: hermitian(n.mul(&sz2).expect("same space")),
            number: n,
            sz1,
            sz2,
            a,
            sm1,
            sm2,
        }
    }

    pub fn coupling(&self, kind: ModelKind) -> (&Operator, &Operator) {
        match kind {
            ModelKind::Jc => (&self.jc1, &self.jc2),
            ModelKind::Rabi | ModelKind::RabiStark => (&self.rabi1, &self.rabi2),
        }
    }

    /// H = ω a†a + Σ_j [Δj σjz + gj C_j + Uj a†a σjz] where C_j is the Rabi
    /// or JC coupling for `params.kind`.
    pub fn hamiltonian(&self, params: &ModelParams) -> Operator {
        let (c1, c2) = self.coupling(params.kind);
        let (u1, u2) = params.effective_stark();
        let mut h = self.number.scaled(params.omega);
        let terms = [
            (params.delta1, &self.sz1),
            (params.delta2, &self.sz2),
            (params.g1, c1),
            (params.g2, c2),
            (u1, &self.stark1),
            (u2, &self.stark2),
        ];
        for (coeff, op) in terms {
            if coeff != 0.0 {
                h.axpy(coeff, op).expect("same space");
            }
        }
        h
    }

    /// ∂H/∂t for parameter rates at fixed model kind.
    pub fn derivative(&self, kind: ModelKind, rates: &ModelParams) -> Operator {
        let mut rates = *rates;
        rates.kind = kind;
        self.hamiltonian(&rates)
    }
}

pub fn hamiltonian(space: SystemSpace, params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    Ok(HamiltonianTerms::new(space).hamiltonian(params))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Ω
    pub rabi_amplitude: f64,
    pub wq1: f64,
    pub wq2: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_off > self.t_on) {
            return Err(Error::InvalidArgument("drive window needs t_off > t_on".into()));
        }
        if self.rabi_amplitude < 0.0 {
            return Err(Error::InvalidArgument("drive amplitude must be non-negative".into()));
        }
        Ok(())
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.t_on && t <= self.t_off
    }

    /// Complex amplitudes multiplying σj† at time `t`: (Ω/2) e^{−i ω_qj t};
    /// the σj parts are their conjugates.
    pub fn raising_amplitudes(&self, t: f64) -> (C64, C64) {
        if !self.active(t) || self.rabi_amplitude == 0.0 {
            return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        }
        let half = 0.5 * self.rabi_amplitude;
        (
            C64::from_polar(half, -self.wq1 * t),
            C64::from_polar(half, -self.wq2 * t),
        )
    }
}

/// (Ω/2)(σ1† e^{−iω_q1 t} + σ2† e^{−iω_q2 t} + h.c.) inside the pulse
/// window, zero outside.
pub fn drive_hamiltonian(space: SystemSpace, drive: &DriveParams, t: f64) -> Operator {
    let (c1, c2) = drive.raising_amplitudes(t);
    let mut m = nalgebra::DMatrix::<C64>::zeros(space.dim(), space.dim());
    for (sm, c) in [
        (sigma_minus_on(space, Qubit::One), c1),
        (sigma_minus_on(space, Qubit::Two), c2),
    ] {
        let raise = sm.matrix().adjoint() * c;
        m += &raise + raise.adjoint();
    }
    Operator::hermitian(space, m).expect("drive is Hermitian by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_space, parity_operator, BasisState, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, kind: ModelKind) -> ModelParams {
        ModelParams {
            omega: 1.0,
            delta1: rng.gen_range(0.0..1.0),
            delta2: rng.gen_range(0.0..1.0),
            g1: rng.gen_range(0.0..1.0),
            g2: rng.gen_range(0.0..1.0),
            u1: rng.gen_range(-0.5..0.5),
            u2: rng.gen_range(-0.5..0.5),
            kind,
        }
    }

    #[test]
    fn hamiltonians_are_hermitian_and_conserve_parity() {
        let space = make_space(6).unwrap();
        let terms = HamiltonianTerms::new(space);
        let p = parity_operator(space);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [ModelKind::Rabi, ModelKind::Jc, ModelKind::RabiStark] {
            for _ in 0..20 {
                let h = terms.hamiltonian(&random_params(&mut rng, kind));
                assert!(h.is_hermitian());
                assert!(h.hermiticity_defect() < 1e-12);
                assert!(h.commutator(&p).unwrap().norm_max() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_energy_of_up_up() {
        let space = make_space(4).unwrap();
        let params = ModelParams::rabi_manifold(0.6, 0.0);
        let h = hamiltonian(space, &params).unwrap();
        let s = BasisState::new(0, Spin::Up, Spin::Up);
        assert!((h.entry(s, s).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stark_boundary_makes_down_down_ladder_degenerate() {
        let space = make_space(8).unwrap();
        let params = ModelParams::manifold(ModelKind::RabiStark, 0.6, 0.0, 0.5);
        let h = hamiltonian(space, &params).unwrap();
        for n in 0..=8 {
            let s = BasisState::new(n, Spin::Down, Spin::Down);
            assert!((h.entry(s, s).unwrap().re + 1.0).abs() < 1e-14);
        }
        assert!(params.stark_stable());
        let unstable = ModelParams::manifold(ModelKind::RabiStark, 0.6, 0.0, 0.6);
        assert!(!unstable.stark_stable());
    }

    #[test]
    fn jc_is_rabi_minus_counter_rotating() {
        let space = make_space(6).unwrap();
        let terms = HamiltonianTerms::new(space);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = &terms.a;
        let counter = |sm: &Operator| {
            let c = sm.dagger().mul(&a.dagger()).unwrap();
            c.add(&c.dagger()).unwrap()
        };
        for _ in 0..20 {
            let mut p = random_params(&mut rng, ModelKind::Rabi);
            let rabi = terms.hamiltonian(&p);
            p.kind = ModelKind::Jc;
            let jc = terms.hamiltonian(&p);
            let mut diff = rabi.sub(&jc).unwrap();
            diff.axpy(-p.g1, &counter(&terms.sm1)).unwrap();
            diff.axpy(-p.g2, &counter(&terms.sm2)).unwrap();
            assert!(diff.norm_max() < 1e-12);
        }
    }

    #[test]
    fn drive_window() {
        let space = make_space(2).unwrap();
        let drive = DriveParams {
            rabi_amplitude: 0.1,
            wq1: 1.6,
            wq2: 0.4,
            t_on: 0.0,
            t_off: 10.0,
        };
        assert_eq!(drive_hamiltonian(space, &drive, 11.0).norm_max(), 0.0);
        assert!(drive_hamiltonian(space, &drive, 1.0).norm_max() > 0.0);
        let off = DriveParams {
            rabi_amplitude: 0.0,
            ..drive
        };
        assert_eq!(drive_hamiltonian(space, &off, 1.0).norm_max(), 0.0);
        let bad = DriveParams { t_off: -1.0, ..drive };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("jc".parse::<ModelKind>().unwrap(), ModelKind::Jc);
        assert_eq!("rabi-stark".parse::<ModelKind>().unwrap(), ModelKind::RabiStark);
        assert!("dicke".parse::<ModelKind>().is_err());
    }
}
