//! Closed-form and brute-force references. These never call the modules
//! they are compared against; matrices are built from explicit basis loops.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Photon number, |first-order coherence| and second-order correlation of
/// a cavity prepared in |1⟩ and damped at rate κ.
#[derive(Clone, Copy, Debug)]
pub struct DampedCavity {
    pub n: f64,
    pub g1: f64,
    pub g2: f64,
}

pub fn damped_cavity_oracle(kappa: f64, t: f64, tau: f64) -> DampedCavity {
    DampedCavity {
        n: (-kappa * t).exp(),
        g1: (-kappa * (t + 0.5 * tau)).exp(),
        g2: 0.0,
    }
}

/// ⟨a†(t)a†(t+τ)a(t+τ)a(t)⟩ for a damped coherent state |α⟩: it factorizes
/// into n(t) n(t+τ) = |α|⁴ e^{−κ(2t+τ)}.
pub fn coherent_g2_oracle(alpha: f64, kappa: f64, t: f64, tau: f64) -> f64 {
    alpha.powi(4) * (-kappa * (2.0 * t + tau)).exp()
}

/// Coefficients of the coherent state |α⟩ on |0⟩..|cutoff⟩.
pub fn coherent_amplitudes(alpha: f64, cutoff: usize) -> Vec<f64> {
    let mut c = vec![(-0.5 * alpha * alpha).exp()];
    for n in 1..=cutoff {
        let prev = c[n - 1];
        c.push(prev * alpha / (n as f64).sqrt());
    }
    c
}

/// Raw model parameters for the brute-force builders.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub omega: f64,
    pub delta: [f64; 2],
    pub g: [f64; 2],
    pub u: [f64; 2],
    /// Keep only the rotating terms.
    pub rotating: bool,
}

fn spin(s: usize) -> f64 {
    if s == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Every eigenvalue at g = 0: nω + Σ_j s_j (Δ_j + n U_j), sorted.
pub fn diagonal_spectrum_oracle(p: &Params, cutoff: usize) -> Vec<f64> {
    let mut e = Vec::new();
    for n in 0..=cutoff {
        for s1 in 0..2 {
            for s2 in 0..2 {
                let nf = n as f64;
                e.push(
                    nf * p.omega
                        + spin(s1) * (p.delta[0] + nf * p.u[0])
                        + spin(s2) * (p.delta[1] + nf * p.u[1]),
                );
            }
        }
    }
    e.sort_by(f64::total_cmp);
    e
}

/// Singular values above threshold·σ_max.
pub fn svd_rank_oracle(m: &DMatrix<C64>, threshold: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > threshold * top).count()
}

/// Dense H in the basis |n, s1, s2⟩ → 4n + 2 s1 + s2 (down = 0).
pub fn brute_hamiltonian(p: &Params, cutoff: usize) -> DMatrix<C64> {
    let dim = 4 * (cutoff + 1);
    let idx = |n: usize, s1: usize, s2: usize| 4 * n + 2 * s1 + s2;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..=cutoff {
        for s1 in 0..2 {
            for s2 in 0..2 {
                let nf = n as f64;
                let i = idx(n, s1, s2);
                h[(i, i)] += C64::new(
                    nf * p.omega
                        + spin(s1) * (p.delta[0] + nf * p.u[0])
                        + spin(s2) * (p.delta[1] + nf * p.u[1]),
                    0.0,
                );
                if n == cutoff {
                    continue;
                }
                // a† raises n; the qubit operator flips one spin.
                let amp = ((n + 1) as f64).sqrt();
                for (q, g) in p.g.iter().enumerate() {
                    let (t1, t2) = if q == 0 { (1 - s1, s2) } else { (s1, 1 - s2) };
                    let lowering = if q == 0 { s1 == 1 } else { s2 == 1 };
                    // Rotating part: a† σ only; counter-rotating: a† σ†.
                    if p.rotating && !lowering {
                        continue;
                    }
                    let j = idx(n + 1, t1, t2);
                    h[(j, i)] += C64::new(g * amp, 0.0);
                    h[(i, j)] += C64::new(g * amp, 0.0);
                }
            }
        }
    }
    h
}

/// Central difference of H along a parameter path.
pub fn finite_difference_rate(path: impl Fn(f64) -> Params, t: f64, h: f64, cutoff: usize) -> DMatrix<C64> {
    (brute_hamiltonian(&path(t + h), cutoff) - brute_hamiltonian(&path(t - h), cutoff)) / C64::new(2.0 * h, 0.0)
}

/// Upper-state population of a resonantly driven two-level system that
/// starts in the ground state.
pub fn rabi_flop_oracle(rabi: f64, t: f64) -> f64 {
    (0.5 * rabi * t).sin().powi(2)
}

/// Eigenvalues of a Hermitian matrix, sorted.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
