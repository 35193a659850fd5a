//! Lindblad generator in the interaction picture of the diagonal part of H.
//!
//! With D(t) = ω a†a + Σ_j (Δj + Uj a†a) σjz and φ_i(t) = ∫₀ᵗ D_ii, the
//! state X_I = U† X U (U = diag e^{−iφ}) only feels the off-diagonal
//! couplings, whose entries pick up phases e^{i(φ_j − φ_k)}. The fast
//! diagonal rotation is handled exactly, so the integrator step is set by
//! the coupling dynamics alone.

use crate::hilbert::{CMatrix, SystemSpace, C64};
use crate::models::{DriveParams, HamiltonianTerms, ModelKind, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LindbladSpec {
    pub kappa_in: f64,
    pub gamma: [f64; 2],
    pub gamma_phi: [f64; 2],
}

impl LindbladSpec {
    pub fn closed() -> Self {
        Self {
            kappa_in: 0.0,
            gamma: [0.0; 2],
            gamma_phi: [0.0; 2],
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let all = [self.kappa_in, self.gamma[0], self.gamma[1], self.gamma_phi[0], self.gamma_phi[1]];
        if all.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(crate::Error::InvalidArgument("Lindblad rates must be non-negative".into()));
        }
        Ok(())
    }
}

type Sparse = Vec<(usize, usize, f64)>;

fn nonzeros(m: &CMatrix) -> Sparse {
    let mut out = Vec::new();
    for k in 0..m.ncols() {
        for j in 0..m.nrows() {
            let v = m[(j, k)];
            debug_assert_eq!(v.im, 0.0);
            if v.re != 0.0 {
                out.push((j, k, v.re));
            }
        }
    }
    out
}

/// Right-hand side builder. Works for any operator X (not only density
/// matrices), as needed by the regression theorem.
pub struct Liouvillian<'a> {
    schedule: &'a Schedule,
    space: SystemSpace,
    lindblad: LindbladSpec,
    drive: Option<DriveParams>,
    dim: usize,
    omega: f64,
    photons: Vec<f64>,
    sz1: Vec<f64>,
    sz2: Vec<f64>,
    rabi: [Sparse; 2],
    jc: [Sparse; 2],
    /// σj† entries (row has qubit j up).
    raise: [Sparse; 2],
    a_max_row: usize,
    /// Rows where σ1 / σ2 jumps land (qubit down).
    down: [Vec<bool>; 2],
    // scratch
    phase: Vec<C64>,
    v: Vec<(usize, usize, C64)>,
    jump: Vec<C64>,
}

impl<'a> Liouvillian<'a> {
    pub fn new(space: SystemSpace, schedule: &'a Schedule, lindblad: LindbladSpec) -> Self {
        let terms = HamiltonianTerms::new(space);
        let dim = space.dim();
        let basis: Vec<_> = space.basis().collect();
        let raise = |sm: &CMatrix| nonzeros(&sm.transpose());
        Self {
            schedule,
            space,
            lindblad,
            drive: None,
            dim,
            omega: schedule.omega(),
            photons: basis.iter().map(|b| b.photons as f64).collect(),
            sz1: basis.iter().map(|b| b.q1.sz()).collect(),
            sz2: basis.iter().map(|b| b.q2.sz()).collect(),
            rabi: [nonzeros(terms.rabi1.matrix()), nonzeros(terms.rabi2.matrix())],
            jc: [nonzeros(terms.jc1.matrix()), nonzeros(terms.jc2.matrix())],
            raise: [raise(terms.sm1.matrix()), raise(terms.sm2.matrix())],
            a_max_row: dim - 4,
            down: [
                basis.iter().map(|b| b.q1.sz() < 0.0).collect(),
                basis.iter().map(|b| b.q2.sz() < 0.0).collect(),
            ],
            phase: vec![C64::new(0.0, 0.0); dim],
            v: Vec::with_capacity(8 * dim),
            jump: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn with_drive(mut self, drive: Option<DriveParams>) -> Self {
        self.drive = drive;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> SystemSpace {
        self.space
    }

    pub fn schedule(&self) -> &Schedule {
        self.schedule
    }

    /// Times where the generator has kinks inside (t0, t1).
    pub fn kinks(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut k = self.schedule.breakpoints_between(t0, t1);
        if let Some(d) = &self.drive {
            for t in [d.t_on, d.t_off] {
                if t > t0 && t < t1 {
                    k.push(t);
                }
            }
            k.sort_by(f64::total_cmp);
            k.dedup();
        }
        k
    }

    /// φ_i(t) for every basis state.
    pub fn phases(&self, t: f64) -> Vec<f64> {
        let int = self.schedule.diagonal_integral(t);
        (0..self.dim)
            .map(|i| {
                let n = self.photons[i];
                self.omega * n * t
                    + self.sz1[i] * (int.delta1 + n * int.u1)
                    + self.sz2[i] * (int.delta2 + n * int.u2)
            })
            .collect()
    }

    fn update_phase(&mut self, t: f64) {
        let phi = self.phases(t);
        for (p, f) in self.phase.iter_mut().zip(phi) {
            *p = C64::from_polar(1.0, f);
        }
    }

    /// Lab → interaction picture: X_I[j,k] = X[j,k] e^{i(φ_j − φ_k)}.
    pub fn to_interaction(&self, t: f64, x: &CMatrix) -> CMatrix {
        let p: Vec<C64> = self.phases(t).into_iter().map(|f| C64::from_polar(1.0, f)).collect();
        CMatrix::from_fn(self.dim, self.dim, |j, k| x[(j, k)] * p[j] * p[k].conj())
    }

    pub fn to_lab(&self, t: f64, x: &CMatrix) -> CMatrix {
        let p: Vec<C64> = self.phases(t).into_iter().map(|f| C64::from_polar(1.0, f)).collect();
        CMatrix::from_fn(self.dim, self.dim, |j, k| x[(j, k)] * p[j].conj() * p[k])
    }

    /// dX/dt in the interaction picture, X stored column-major.
    pub fn rhs(&mut self, t: f64, x: &[C64], dx: &mut [C64]) {
        let dim = self.dim;
        let params = self.schedule.params_at(t);
        let kind = self.schedule.kind_at(t);
        self.update_phase(t);
        let ph = &self.phase;

        self.v.clear();
        let couplings = match kind {
            ModelKind::Jc => &self.jc,
            _ => &self.rabi,
        };
        for (q, g) in [(0, params.g1), (1, params.g2)] {
            if g != 0.0 {
                for &(j, k, c) in &couplings[q] {
                    self.v.push((j, k, ph[j] * ph[k].conj() * (g * c)));
                }
            }
        }
        if let Some(d) = &self.drive {
            let (c1, c2) = d.raising_amplitudes(t);
            for (q, c) in [(0, c1), (1, c2)] {
                if c.norm() == 0.0 {
                    continue;
                }
                for &(j, k, s) in &self.raise[q] {
                    let val = ph[j] * ph[k].conj() * c * s;
                    self.v.push((j, k, val));
                    self.v.push((k, j, val.conj()));
                }
            }
        }

        // Diagonal damping: −½(Γ_j + Γ_k) − dephasing.
        let kappa = self.lindblad.kappa_in + params.kappa_c;
        let [g1, g2] = self.lindblad.gamma;
        let [p1, p2] = self.lindblad.gamma_phi;
        let gamma_diag = |i: usize| -> f64 {
            kappa * self.photons[i]
                + g1 * 0.5 * (1.0 + self.sz1[i])
                + g2 * 0.5 * (1.0 + self.sz2[i])
        };
        for k in 0..dim {
            let gk = gamma_diag(k);
            for j in 0..dim {
                let mut rate = 0.5 * (gamma_diag(j) + gk);
                // (γφ/2)(σz X σz − X): −γφ where the spins differ.
                if self.sz1[j] != self.sz1[k] {
                    rate += p1;
                }
                if self.sz2[j] != self.sz2[k] {
                    rate += p2;
                }
                dx[j + k * dim] = x[j + k * dim] * (-rate);
            }
        }

        // −i[V, X]
        let mi = C64::new(0.0, -1.0);
        for &(j, k, v) in &self.v {
            let a = mi * v;
            // (V X)[j, l] += v X[k, l]
            for l in 0..dim {
                dx[j + l * dim] += a * x[k + l * dim];
            }
            // (X V)[l, k] += X[l, j] v
            let (src, dst) = (j * dim, k * dim);
            for l in 0..dim {
                let xv = x[src + l];
                dx[dst + l] -= a * xv;
            }
        }

        // Jumps L X L† for a (i → i+4), σ1 (up → down: i+2 → i), σ2 (i+1 → i).
        if kappa != 0.0 {
            for i in 0..self.a_max_row {
                self.jump[i] = ph[i] * ph[i + 4].conj() * self.photons[i + 4].sqrt();
            }
            self.add_jump(kappa, 4, |i| i < dim - 4, x, dx);
        }
        for (q, (rate, off)) in [(g1, 2usize), (g2, 1usize)].into_iter().enumerate() {
            if rate == 0.0 {
                continue;
            }
            let down = &self.down[q];
            for i in 0..dim {
                if down[i] {
                    self.jump[i] = ph[i] * ph[i + off].conj();
                }
            }
            self.add_jump(rate, off, |i| down[i], x, dx);
        }
    }

    /// dx[j,m] += rate · J_j X[j+off, m+off] conj(J_m) over rows with `valid`.
    fn add_jump(&self, rate: f64, off: usize, valid: impl Fn(usize) -> bool, x: &[C64], dx: &mut [C64]) {
        let dim = self.dim;
        for m in 0..dim {
            if !valid(m) {
                continue;
            }
            let jm = self.jump[m].conj() * rate;
            let src = (m + off) * dim;
            for j in 0..dim {
                if valid(j) {
                    dx[j + m * dim] += self.jump[j] * x[src + j + off] * jm;
                }
            }
        }
    }
}
