//! Closed-form one-photon dark states, the 6×4 one-photon ansatz system and
//! the vanishing matrix element of Ḣ between the dark state and degenerate
//! partner levels.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    BasisState, CMatrix, CVector, QuantumState, Spin, SystemSpace, C64,
};
use crate::models::{HamiltonianTerms, ModelKind, ModelParams};

/// Relative threshold on the smallest singular value of the ansatz matrix.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct DarkState {
    /// Δ1 − Δ2 (+ U1 − U2 for Rabi-Stark); multiplies |0↑↑⟩ (|1↓↓⟩ for JC).
    pub coeff_up_up: f64,
    /// g; multiplies the singlet part.
    pub coeff_singlet: f64,
    pub kind: ModelKind,
    /// ω for Rabi and Rabi-Stark, ω − Δ1 − Δ2 = 0 for JC.
    pub energy: f64,
    pub state: QuantumState,
}

impl DarkState {
    pub fn vector(&self) -> &CVector {
        self.state.vector().expect("dark states are pure")
    }
}

fn require_manifold(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !params.on_dark_manifold() {
        return Err(Error::Precondition(format!(
            "dark state needs Δ1+Δ2 = ω and g1 = g2 (got Δ1+Δ2 = {}, g1 = {}, g2 = {})",
            params.delta1 + params.delta2,
            params.g1,
            params.g2
        )));
    }
    Ok(())
}

/// The closed-form dark state for `params.kind`.
///
/// At the isolated point Δ1 − Δ2 (+ U1 − U2) = 0, g = 0 the formula is 0/0;
/// the limit along zero detuning (the pure singlet) is returned there.
pub fn dark_state(space: SystemSpace, params: &ModelParams) -> Result<DarkState> {
    require_manifold(params)?;
    let g = params.g1;
    let (c0, anchor, singlet_n, energy) = match params.kind {
        ModelKind::Rabi | ModelKind::RabiStark => (
            params.dark_detuning(),
            BasisState::new(0, Spin::Up, Spin::Up),
            1,
            params.omega,
        ),
        ModelKind::Jc => (
            params.delta1 - params.delta2,
            BasisState::new(1, Spin::Down, Spin::Down),
            0,
            params.omega - params.delta1 - params.delta2,
        ),
    };
    let (a, b) = if c0 == 0.0 && g == 0.0 { (0.0, 1.0) } else { (c0, g) };
    let terms = [
        (anchor, C64::new(a, 0.0)),
        (BasisState::new(singlet_n, Spin::Down, Spin::Up), C64::new(b, 0.0)),
        (BasisState::new(singlet_n, Spin::Up, Spin::Down), C64::new(-b, 0.0)),
    ];
    Ok(DarkState {
        coeff_up_up: c0,
        coeff_singlet: g,
        kind: params.kind,
        energy,
        state: QuantumState::superposition(space, &terms)?,
    })
}

/// |n⟩ ⊗ (|↓↑⟩ − |↑↓⟩)/√2.
pub fn singlet(space: SystemSpace, photons: usize) -> Result<QuantumState> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    QuantumState::superposition(
        space,
        &[
            (BasisState::new(photons, Spin::Down, Spin::Up), h),
            (BasisState::new(photons, Spin::Up, Spin::Down), -h),
        ],
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct AnsatzMatrix {
    #[serde(skip)]
    pub matrix: CMatrix,
    pub row_labels: [&'static str; 6],
    pub col_labels: [&'static str; 4],
}

/// Coefficients of (H − E)|ψ⟩ for |ψ⟩ = c0|0↑↑⟩ + c1|0↓↓⟩ + c2|1↓↑⟩ + c3|1↑↓⟩,
/// projected onto the even-parity states that the Rabi(-Stark) coupling
/// can reach.
pub fn ansatz_matrix(params: &ModelParams, energy: f64) -> AnsatzMatrix {
    let ModelParams {
        omega: w,
        delta1: d1,
        delta2: d2,
        g1,
        g2,
        ..
    } = *params;
    let (u1, u2) = params.effective_stark();
    let r2 = std::f64::consts::SQRT_2;
    #[rustfmt::skip]
    let rows = [
        d1 + d2 - energy, 0.0, g1, g2,
        0.0, -d1 - d2 - energy, g2, g1,
        g1, g2, w - d1 + d2 - u1 + u2 - energy, 0.0,
        g2, g1, 0.0, w + d1 - d2 + u1 - u2 - energy,
        0.0, 0.0, r2 * g1, r2 * g2,
        0.0, 0.0, r2 * g2, r2 * g1,
    ];
    AnsatzMatrix {
        matrix: DMatrix::from_row_slice(6, 4, &rows).map(|x| C64::new(x, 0.0)),
        row_labels: ["0,up,up", "0,down,down", "1,down,up", "1,up,down", "2,up,up", "2,down,down"],
        col_labels: ["c0:0,up,up", "c1:0,down,down", "c2:1,down,up", "c3:1,up,down"],
    }
}

/// Null vector of the ansatz matrix when it is rank deficient, with the
/// global phase fixed so that the largest component is real and positive.
pub fn quasi_exact_solve(params: &ModelParams, energy: f64) -> Option<DVector<C64>> {
    let m = ansatz_matrix(params, energy).matrix;
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let (imin, smin) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        // Every vector solves the zero system; report the dark-state direction.
        return None;
    }
    if smin >= RANK_TOL * smax {
        return None;
    }
    let mut v: DVector<C64> = v_t.row(imin).adjoint().into_owned();
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let phase = pivot.conj() / pivot.norm();
    v *= phase;
    Some(v)
}

/// Parameter velocities entering Ḣ on the dark manifold: Δ̇2 = −Δ̇1, ġ1 = ġ2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DarkRates {
    pub delta1_dot: f64,
    pub g_dot: f64,
}

/// Ḣ = Δ̇1(σ1z − σ2z) + ġ(C1 + C2) with C the coupling of `kind`.
pub fn dark_hamiltonian_rate(terms: &HamiltonianTerms, kind: ModelKind, rates: DarkRates) -> CMatrix {
    let (c1, c2) = terms.coupling(kind);
    let mut m = (terms.sz1.matrix() - terms.sz2.matrix()) * C64::new(rates.delta1_dot, 0.0);
    m += (c1.matrix() + c2.matrix()) * C64::new(rates.g_dot, 0.0);
    m
}

/// ⟨partner|Ḣ|ψ_dark⟩ at `params`.
pub fn dark_matrix_element(
    space: SystemSpace,
    params: &ModelParams,
    rates: DarkRates,
    partner: &CVector,
) -> Result<C64> {
    require_manifold(params)?;
    if partner.len() != space.dim() {
        return Err(Error::SpaceMismatch {
            left: space.fock_cutoff(),
            right: partner.len() / 4 - 1,
        });
    }
    if rates.delta1_dot == 0.0 && rates.g_dot == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let dark = dark_state(space, params)?;
    let terms = HamiltonianTerms::new(space);
    let hdot = dark_hamiltonian_rate(&terms, params.kind, rates);
    Ok(partner.dotc(&(hdot * dark.vector())))
}
