//! Truncated Fock ⊗ qubit ⊗ qubit Hilbert space, elementary operators and
//! quantum states.
//!
//! Basis ordering is photon-number major, then qubit 1, then qubit 2, with
//! `Down` before `Up`: `index = 4 n + 2 s1 + s2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for the Hermitian flag on operators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on norms and traces of states.
pub const STATE_TOL: f64 = 1e-10;

const N_QUBITS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    fn bit(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    /// Eigenvalue of σz.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Down => -1.0,
            Spin::Up => 1.0,
        }
    }
}

/// A product basis state |n, s1, s2⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub photons: usize,
    pub q1: Spin,
    pub q2: Spin,
}

impl BasisState {
    pub fn new(photons: usize, q1: Spin, q2: Spin) -> Self {
        Self { photons, q1, q2 }
    }

    fn spin(&self, qubit: Qubit) -> Spin {
        match qubit {
            Qubit::One => self.q1,
            Qubit::Two => self.q2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    One,
    Two,
}

impl Qubit {
    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            1 => Ok(Qubit::One),
            2 => Ok(Qubit::Two),
            _ => Err(Error::InvalidArgument(format!(
                "qubit index must be 1 or 2, got {index}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Descriptor of the truncated space: photon numbers `0..=fock_cutoff`
/// times two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemSpace {
    fock_cutoff: usize,
}

impl SystemSpace {
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(Error::InvalidArgument(
                "fock cutoff must be at least 1".to_string(),
            ));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn n_qubits(&self) -> usize {
        N_QUBITS
    }

    pub fn dim(&self) -> usize {
        (self.fock_cutoff + 1) << N_QUBITS
    }

    pub fn index(&self, state: BasisState) -> Result<usize> {
        if state.photons > self.fock_cutoff {
            return Err(Error::InvalidArgument(format!(
                "photon number {} exceeds cutoff {}",
                state.photons, self.fock_cutoff
            )));
        }
        Ok(4 * state.photons + 2 * state.q1.bit() + state.q2.bit())
    }

    /// Panics if `index >= dim`.
    pub fn basis_state(&self, index: usize) -> BasisState {
        assert!(index < self.dim(), "basis index {index} out of range");
        BasisState {
            photons: index / 4,
            q1: Spin::from_bit((index / 2) % 2),
            q2: Spin::from_bit(index % 2),
        }
    }

    pub fn basis(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |i| self.basis_state(i))
    }

    pub(crate) fn check_same(&self, other: &SystemSpace) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                left: self.fock_cutoff,
                right: other.fock_cutoff,
            });
        }
        Ok(())
    }
}

pub fn make_space(fock_cutoff: usize) -> Result<SystemSpace> {
    SystemSpace::new(fock_cutoff)
}

/// A dense operator bound to a [`SystemSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SystemSpace,
    matrix: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn from_matrix(space: SystemSpace, matrix: CMatrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, space dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            space,
            matrix,
            hermitian: false,
        })
    }

    /// Builds an operator whose Hermitian flag is verified against
    /// [`HERMITIAN_TOL`].
    pub fn hermitian(space: SystemSpace, matrix: CMatrix) -> Result<Self> {
        let op = Self::from_matrix(space, matrix)?;
        op.into_hermitian()
    }

    pub fn zeros(space: SystemSpace) -> Self {
        let dim = space.dim();
        Self {
            space,
            matrix: CMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn identity(space: SystemSpace) -> Self {
        let dim = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    fn diagonal(space: SystemSpace, f: impl Fn(BasisState) -> f64) -> Self {
        let dim = space.dim();
        let mut matrix = CMatrix::zeros(dim, dim);
        for (i, b) in space.basis().enumerate() {
            matrix[(i, i)] = C64::new(f(b), 0.0);
        }
        Self {
            space,
            matrix,
            hermitian: true,
        }
    }

    pub fn space(&self) -> SystemSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Largest entry of |A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Sets the Hermitian flag after checking it.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect >= HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "operator is not Hermitian (defect {defect:e})"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            space: self.space,
            matrix: &self.matrix * C64::new(factor, 0.0),
            hermitian: self.hermitian,
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix - &other.matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
            hermitian: false,
        })
    }

    /// Adds `factor * other` in place.
    pub fn axpy(&mut self, factor: f64, other: &Operator) -> Result<()> {
        self.space.check_same(&other.space)?;
        self.matrix += &other.matrix * C64::new(factor, 0.0);
        self.hermitian &= other.hermitian;
        Ok(())
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
            hermitian: false,
        })
    }

    pub fn apply(&self, vector: &CVector) -> CVector {
        &self.matrix * vector
    }

    pub fn norm_max(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn entry(&self, row: BasisState, col: BasisState) -> Result<C64> {
        Ok(self.matrix[(self.space.index(row)?, self.space.index(col)?)])
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Photon annihilation operator `a` with ⟨n−1|a|n⟩ = √n.
pub fn annihilator(space: SystemSpace) -> Operator {
    let dim = space.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    for (col, b) in space.basis().enumerate() {
        if b.photons > 0 {
            let row = col - 4;
            matrix[(row, col)] = C64::new((b.photons as f64).sqrt(), 0.0);
        }
    }
    Operator {
        space,
        matrix,
        hermitian: false,
    }
}

pub fn creator(space: SystemSpace) -> Operator {
    annihilator(space).dagger()
}

/// a†a.
pub fn number(space: SystemSpace) -> Operator {
    Operator::diagonal(space, |b| b.photons as f64)
}

/// Pauli operator on qubit `qubit_index` (1 or 2), identity elsewhere.
pub fn pauli(space: SystemSpace, qubit_index: usize, axis: PauliAxis) -> Result<Operator> {
    let qubit = Qubit::from_index(qubit_index)?;
    Ok(pauli_on(space, qubit, axis))
}

pub(crate) fn pauli_on(space: SystemSpace, qubit: Qubit, axis: PauliAxis) -> Operator {
    if axis == PauliAxis::Z {
        return Operator::diagonal(space, |b| b.spin(qubit).sz());
    }
    let dim = space.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    let flip = match qubit {
        Qubit::One => 2,
        Qubit::Two => 1,
    };
    for (col, b) in space.basis().enumerate() {
        let row = col ^ flip;
        // σy|↑⟩ = i|↓⟩, σy|↓⟩ = −i|↑⟩
        let value = match (axis, b.spin(qubit)) {
            (PauliAxis::X, _) => C64::new(1.0, 0.0),
            (PauliAxis::Y, Spin::Up) => C64::new(0.0, 1.0),
            (PauliAxis::Y, Spin::Down) => C64::new(0.0, -1.0),
            (PauliAxis::Z, _) => unreachable!(),
        };
        matrix[(row, col)] = value;
    }
    Operator {
        space,
        matrix,
        hermitian: true,
    }
}

/// Qubit lowering operator σ⁻ = |↓⟩⟨↑| on qubit `qubit_index`.
pub fn sigma_minus(space: SystemSpace, qubit_index: usize) -> Result<Operator> {
    let qubit = Qubit::from_index(qubit_index)?;
    Ok(sigma_minus_on(space, qubit))
}

pub(crate) fn sigma_minus_on(space: SystemSpace, qubit: Qubit) -> Operator {
    let dim = space.dim();
    let mut matrix = CMatrix::zeros(dim, dim);
    let flip = match qubit {
        Qubit::One => 2,
        Qubit::Two => 1,
    };
    for (col, b) in space.basis().enumerate() {
        if b.spin(qubit) == Spin::Up {
            matrix[(col ^ flip, col)] = C64::new(1.0, 0.0);
        }
    }
    Operator {
        space,
        matrix,
        hermitian: false,
    }
}

pub fn sigma_plus(space: SystemSpace, qubit_index: usize) -> Result<Operator> {
    Ok(sigma_minus(space, qubit_index)?.dagger())
}

/// Parity P = σ1z σ2z exp(iπ a†a); diagonal with entries ±1.
pub fn parity_operator(space: SystemSpace) -> Operator {
    Operator::diagonal(space, parity_of)
}

pub fn parity_of(b: BasisState) -> f64 {
    let photon_sign = if b.photons.is_multiple_of(2) { 1.0 } else { -1.0 };
    b.q1.sz() * b.q2.sz() * photon_sign
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Pure(CVector),
    Density(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: SystemSpace,
    data: StateData,
}

impl QuantumState {
    /// Pure state; the vector must already be normalized to [`STATE_TOL`].
    pub fn pure(space: SystemSpace, vector: CVector) -> Result<Self> {
        if vector.len() != space.dim() {
            return Err(Error::InvalidState(format!(
                "vector length {} does not match dimension {}",
                vector.len(),
                space.dim()
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self {
            space,
            data: StateData::Pure(vector),
        })
    }

    pub fn pure_normalized(space: SystemSpace, vector: CVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Self::pure(space, vector.unscale(norm))
    }

    pub fn density(space: SystemSpace, matrix: CMatrix) -> Result<Self> {
        validate_density(space, &matrix)?;
        Ok(Self {
            space,
            data: StateData::Density(matrix),
        })
    }

    /// Wraps a density matrix without the eigenvalue check; trace and
    /// Hermiticity are still enforced.
    pub(crate) fn density_unchecked(space: SystemSpace, matrix: CMatrix) -> Self {
        Self {
            space,
            data: StateData::Density(matrix),
        }
    }

    pub fn basis(space: SystemSpace, state: BasisState) -> Result<Self> {
        let mut v = CVector::zeros(space.dim());
        v[space.index(state)?] = C64::new(1.0, 0.0);
        Self::pure(space, v)
    }

    /// Normalized superposition of basis states.
    pub fn superposition(space: SystemSpace, terms: &[(BasisState, C64)]) -> Result<Self> {
        let mut v = CVector::zeros(space.dim());
        for (b, c) in terms {
            v[space.index(*b)?] += *c;
        }
        Self::pure_normalized(space, v)
    }

    pub fn maximally_mixed(space: SystemSpace) -> Self {
        let dim = space.dim();
        let m = CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Self {
            space,
            data: StateData::Density(m),
        }
    }

    pub fn space(&self) -> SystemSpace {
        self.space
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn vector(&self) -> Option<&CVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self {
            space: self.space,
            data: StateData::Density(self.density_matrix()),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Density(m) => m.trace().re,
        }
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared().powi(2),
            StateData::Density(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    pub fn population(&self, state: BasisState) -> Result<f64> {
        let i = self.space.index(state)?;
        Ok(match &self.data {
            StateData::Pure(v) => v[i].norm_sqr(),
            StateData::Density(m) => m[(i, i)].re,
        })
    }
}

fn validate_density(space: SystemSpace, m: &CMatrix) -> Result<()> {
    let dim = space.dim();
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::InvalidState("density matrix has wrong shape".into()));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let defect = max_abs(&(m - m.adjoint()));
    if defect > STATE_TOL {
        return Err(Error::InvalidState(format!(
            "density matrix not Hermitian (defect {defect:e})"
        )));
    }
    let min_eig = min_eigenvalue(m);
    if min_eig < -STATE_TOL {
        return Err(Error::InvalidState(format!(
            "density matrix has negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Tr(ρA) or ⟨ψ|A|ψ⟩.
pub fn expectation(state: &QuantumState, op: &Operator) -> Result<C64> {
    state.space.check_same(&op.space)?;
    Ok(match &state.data {
        StateData::Pure(v) => v.dotc(&(&op.matrix * v)),
        StateData::Density(m) => trace_product(m, &op.matrix),
    })
}

/// Tr(A B) without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// ⟨t|ρ|t⟩ (density) or |⟨t|ψ⟩|² (pure). The target must be pure.
pub fn fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    state.space.check_same(&target.space)?;
    let t = target.vector().ok_or_else(|| {
        Error::InvalidArgument("fidelity target must be a pure state".into())
    })?;
    let f = match &state.data {
        StateData::Pure(v) => t.dotc(v).norm_sqr(),
        StateData::Density(m) => t.dotc(&(m * t)).re,
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Column-major, real/imag interleaved serialization of a complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let data = m.iter().flat_map(|z| [z.re, z.im]).collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != 2 * self.rows * self.cols {
            return Err(Error::InvalidArgument(format!(
                "record holds {} reals, expected {}",
                self.data.len(),
                2 * self.rows * self.cols
            )));
        }
        let values = self.data.chunks_exact(2).map(|p| C64::new(p[0], p[1]));
        Ok(CMatrix::from_iterator(self.rows, self.cols, values))
    }

    /// Little-endian f64 bytes of `data`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|x| x.to_le_bytes()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: usize, s1: Spin, s2: Spin) -> BasisState {
        BasisState::new(n, s1, s2)
    }

    use Spin::{Down, Up};

    #[test]
    fn dimensions() {
        assert_eq!(make_space(1).unwrap().dim(), 8);
        assert_eq!(make_space(8).unwrap().dim(), 36);
        assert!(matches!(make_space(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn basis_round_trip() {
        let space = make_space(5).unwrap();
        for i in 0..space.dim() {
            assert_eq!(space.index(space.basis_state(i)).unwrap(), i);
        }
        assert_eq!(space.index(b(0, Down, Up)).unwrap(), 1);
        assert_eq!(space.index(b(1, Up, Down)).unwrap(), 6);
        assert!(space.index(b(6, Down, Down)).is_err());
    }

    #[test]
    fn ladder_elements() {
        let space = make_space(4).unwrap();
        let a = annihilator(space);
        assert_eq!(a.entry(b(0, Up, Down), b(1, Up, Down)).unwrap(), C64::new(1.0, 0.0));
        let e = a.entry(b(2, Down, Down), b(3, Down, Down)).unwrap();
        assert!((e.re - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let space = make_space(6).unwrap();
        let a = annihilator(space);
        let c = a.commutator(&a.dagger()).unwrap();
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let n = space.basis_state(i).photons;
                let expected = if i == j && n < 6 { 1.0 } else { 0.0 };
                if n < 6 {
                    assert!((c.matrix()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-14);
                }
            }
        }
        // the edge row picks up −N_max
        let edge = space.index(b(6, Up, Up)).unwrap();
        assert!((c.matrix()[(edge, edge)].re + 6.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_actions() {
        let space = make_space(2).unwrap();
        let s1z = pauli(space, 1, PauliAxis::Z).unwrap();
        let up = QuantumState::basis(space, b(1, Up, Down)).unwrap();
        let v = s1z.apply(up.vector().unwrap());
        assert_eq!(&v, up.vector().unwrap());
        assert!(pauli(space, 3, PauliAxis::X).is_err());
        assert!(sigma_minus(space, 0).is_err());

        // σx σy = i σz on the same qubit
        for q in [1, 2] {
            let x = pauli(space, q, PauliAxis::X).unwrap();
            let y = pauli(space, q, PauliAxis::Y).unwrap();
            let z = pauli(space, q, PauliAxis::Z).unwrap();
            let xy = x.mul(&y).unwrap();
            let iz = z.matrix() * C64::new(0.0, 1.0);
            assert!(max_abs(&(xy.matrix() - iz)) < 1e-15);
        }

        let sm = sigma_minus(space, 2).unwrap();
        let x = pauli(space, 2, PauliAxis::X).unwrap();
        let y = pauli(space, 2, PauliAxis::Y).unwrap();
        // σ⁻ = (σx − iσy)/2
        let expected = (x.matrix() - y.matrix() * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
        assert!(max_abs(&(sm.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn parity_examples() {
        let space = make_space(3).unwrap();
        let p = parity_operator(space);
        let val = |s| p.entry(s, s).unwrap().re;
        assert_eq!(val(b(0, Up, Up)), 1.0);
        assert_eq!(val(b(1, Up, Down)), 1.0);
        assert_eq!(val(b(1, Up, Up)), -1.0);
        let p2 = p.mul(&p).unwrap();
        assert!(max_abs(&(p2.matrix() - CMatrix::identity(space.dim(), space.dim()))) == 0.0);
    }

    #[test]
    fn expectation_and_fidelity() {
        let space = make_space(1).unwrap();
        let s = QuantumState::basis(space, b(0, Up, Up)).unwrap();
        assert_eq!(fidelity(&s, &s).unwrap(), 1.0);
        assert_eq!(expectation(&s, &number(space)).unwrap(), C64::new(0.0, 0.0));
        let mixed = QuantumState::maximally_mixed(space);
        assert!((fidelity(&mixed, &s).unwrap() - 0.125).abs() < 1e-15);
        assert!(fidelity(&s, &mixed).is_err());
        let other = make_space(2).unwrap();
        assert!(matches!(
            expectation(&s, &number(other)),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn mismatched_operators_do_not_combine() {
        let a = number(make_space(1).unwrap());
        let b = number(make_space(2).unwrap());
        assert!(a.add(&b).is_err());
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn density_validation() {
        let space = make_space(1).unwrap();
        let mut m = CMatrix::zeros(8, 8);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(QuantumState::density(space, m).is_err());
        assert!(QuantumState::pure(space, CVector::zeros(8)).is_err());
    }

    #[test]
    fn record_round_trip() {
        let space = make_space(1).unwrap();
        let y = pauli(space, 1, PauliAxis::Y).unwrap();
        let rec = MatrixRecord::from_matrix(y.matrix());
        assert_eq!(rec.data.len(), 128);
        assert_eq!(&rec.to_matrix().unwrap(), y.matrix());
        assert_eq!(rec.to_bytes().len(), 128 * 8);
    }
}
