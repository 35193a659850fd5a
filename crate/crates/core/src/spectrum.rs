//! Parity-resolved spectra along parameter sweeps, overlap-based level
//! tracking, gaps to the dark level and the adiabaticity ratio.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::darkstates::{dark_state, DarkRates};
use crate::error::{Error, Result};
use crate::hilbert::{parity_of, CMatrix, CVector, Operator, SystemSpace, C64};
use crate::models::{HamiltonianTerms, ModelParams, Schedule};

/// Levels whose energy varies by less than this across a sweep are dark.
pub const FLAT_TOL: f64 = 1e-8;
/// Eigenvector overlap below which level matching is flagged as broken.
pub const TRACK_OVERLAP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// g1 = g2 = value.
    Coupling,
    /// Δ1 − Δ2 = value at fixed Δ1 + Δ2.
    Detuning,
    /// U1 = U2 = value.
    Stark,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepSpec {
    Axis { axis: SweepAxis, values: Vec<f64> },
    /// Instantaneous parameters of a schedule at the given times.
    Schedule { schedule: Schedule, times: Vec<f64> },
}

impl SweepSpec {
    pub fn coupling(lo: f64, hi: f64, points: usize) -> Self {
        SweepSpec::Axis {
            axis: SweepAxis::Coupling,
            values: linspace(lo, hi, points),
        }
    }

    pub fn schedule(schedule: Schedule, t0: f64, t1: f64, points: usize) -> Self {
        SweepSpec::Schedule {
            schedule,
            times: linspace(t0, t1, points),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepSpec::Axis { axis: SweepAxis::Coupling, .. } => "g",
            SweepSpec::Axis { axis: SweepAxis::Detuning, .. } => "detuning",
            SweepSpec::Axis { axis: SweepAxis::Stark, .. } => "u",
            SweepSpec::Schedule { .. } => "t",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            SweepSpec::Axis { values, .. } => values,
            SweepSpec::Schedule { times, .. } => times,
        }
    }

    fn params(&self, template: &ModelParams, i: usize) -> ModelParams {
        match self {
            SweepSpec::Axis { axis, values } => {
                let v = values[i];
                let mut p = *template;
                match axis {
                    SweepAxis::Coupling => {
                        p.g1 = v;
                        p.g2 = v;
                    }
                    SweepAxis::Detuning => {
                        let sum = p.delta1 + p.delta2;
                        p.delta1 = 0.5 * (sum + v);
                        p.delta2 = 0.5 * (sum - v);
                    }
                    SweepAxis::Stark => {
                        p.u1 = v;
                        p.u2 = v;
                    }
                }
                p
            }
            SweepSpec::Schedule { schedule, times } => schedule.model_at(times[i]),
        }
    }
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Basis indices of one parity sector.
#[derive(Clone, Debug)]
pub struct ParityBlocks {
    pub even: Vec<usize>,
    pub odd: Vec<usize>,
}

impl ParityBlocks {
    pub fn new(space: SystemSpace) -> Self {
        let (even, odd) = (0..space.dim()).partition(|&i| parity_of(space.basis_state(i)) > 0.0);
        Self { even, odd }
    }

    pub fn block(&self, parity: i8) -> &[usize] {
        if parity > 0 {
            &self.even
        } else {
            &self.odd
        }
    }
}

fn real_part(m: &CMatrix) -> Result<DMatrix<f64>> {
    if m.iter().any(|c| c.im != 0.0) {
        return Err(Error::InvalidArgument("expected a real Hamiltonian".into()));
    }
    Ok(m.map(|c| c.re))
}

/// Ascending eigenpairs of one parity block. Vectors are embedded in the
/// full space.
pub fn block_eigen(h: &DMatrix<f64>, idx: &[usize]) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sub = h.select_rows(idx).select_columns(idx);
    let eig = SymmetricEigen::new(sub);
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let dim = h.nrows();
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| {
            let mut v = DVector::zeros(dim);
            for (r, &i) in idx.iter().enumerate() {
                v[i] = eig.eigenvectors[(r, k)];
            }
            v
        })
        .collect();
    (vals, vecs)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumPoint {
    pub value: f64,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

/// A level followed across the sweep; `indices[k]` is its position in the
/// sorted block spectrum at point k.
#[derive(Clone, Debug, Serialize)]
pub struct Track {
    pub id: usize,
    pub parity: i8,
    pub indices: Vec<usize>,
    pub energies: Vec<f64>,
    pub dark: bool,
}

impl Track {
    pub fn spread(&self) -> f64 {
        let lo = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingBreak {
    pub point: usize,
    pub track: usize,
    pub overlap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSweep {
    pub sweep_param: String,
    pub fock_cutoff: usize,
    pub points: Vec<SpectrumPoint>,
    pub tracks: Vec<Track>,
    pub breaks: Vec<TrackingBreak>,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    /// Recompute at twice the cutoff and compare tracked levels.
    pub check_convergence: bool,
    /// Levels compared by the convergence check: this many lowest per
    /// parity, plus every dark level.
    pub converged_levels: usize,
    pub convergence_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            check_convergence: true,
            converged_levels: 4,
            convergence_tol: 1e-8,
        }
    }
}

impl SpectrumSweep {
    pub fn dark_tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.dark)
    }

    pub fn block(&self, point: usize, parity: i8) -> &[f64] {
        let p = &self.points[point];
        if parity > 0 {
            &p.even
        } else {
            &p.odd
        }
    }

    /// One row per grid point and parity: sweep value, parity, energies.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let width = self
            .points
            .iter()
            .map(|p| p.even.len().max(p.odd.len()))
            .max()
            .unwrap_or(0);
        let unit = if self.sweep_param == "t" { "1/omega" } else { "omega" };
        write!(w, "{}[{unit}],parity", self.sweep_param)?;
        for k in 0..width {
            write!(w, ",e{k}[omega]")?;
        }
        writeln!(w)?;
        for p in &self.points {
            for (parity, levels) in [(1, &p.even), (-1, &p.odd)] {
                write!(w, "{:.12e},{parity}", p.value)?;
                for e in levels.iter() {
                    write!(w, ",{e:.12e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn sweep_once(
    space: SystemSpace,
    template: &ModelParams,
    spec: &SweepSpec,
) -> Result<SpectrumSweep> {
    let n = spec.values().len();
    if n == 0 {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let terms = HamiltonianTerms::new(space);
    let blocks = ParityBlocks::new(space);
    let mut points = Vec::with_capacity(n);
    let mut tracks: Vec<Track> = Vec::new();
    let mut breaks = Vec::new();
    let mut prev: Vec<(i8, Vec<DVector<f64>>)> = Vec::new();

    for i in 0..n {
        let params = spec.params(template, i);
        params.validate()?;
        let h = real_part(terms.hamiltonian(&params).matrix())?;
        let mut point = SpectrumPoint {
            value: spec.values()[i],
            even: Vec::new(),
            odd: Vec::new(),
        };
        let mut current = Vec::new();
        for parity in [1i8, -1] {
            let (vals, vecs) = block_eigen(&h, blocks.block(parity));
            if i == 0 {
                for (k, &e) in vals.iter().enumerate() {
                    tracks.push(Track {
                        id: tracks.len(),
                        parity,
                        indices: vec![k],
                        energies: vec![e],
                        dark: false,
                    });
                }
            } else {
                let old = &prev.iter().find(|(p, _)| *p == parity).expect("same blocks").1;
                let assignment = match_levels(old, &vecs);
                for track in tracks.iter_mut().filter(|t| t.parity == parity) {
                    let last = *track.indices.last().expect("non-empty");
                    let (k, overlap) = assignment[last];
                    if overlap < TRACK_OVERLAP {
                        breaks.push(TrackingBreak {
                            point: i,
                            track: track.id,
                            overlap,
                        });
                    }
                    track.indices.push(k);
                    track.energies.push(vals[k]);
                }
            }
            if parity > 0 {
                point.even = vals;
            } else {
                point.odd = vals;
            }
            current.push((parity, vecs));
        }
        prev = current;
        points.push(point);
    }
    for t in &mut tracks {
        t.dark = n > 1 && t.spread() < FLAT_TOL;
    }
    Ok(SpectrumSweep {
        sweep_param: spec.name().to_string(),
        fock_cutoff: space.fock_cutoff(),
        points,
        tracks,
        breaks,
    })
}

/// For each old level, the new level with maximal overlap. Conflicts are
/// resolved greedily in order of decreasing overlap so the map stays a
/// permutation.
fn match_levels(old: &[DVector<f64>], new: &[DVector<f64>]) -> Vec<(usize, f64)> {
    let n = old.len();
    let mut pairs = Vec::with_capacity(n * n);
    for (i, a) in old.iter().enumerate() {
        for (j, b) in new.iter().enumerate() {
            pairs.push((a.dot(b).abs(), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![(usize::MAX, 0.0); n];
    let mut taken = vec![false; n];
    for (ov, i, j) in pairs {
        if out[i].0 == usize::MAX && !taken[j] {
            out[i] = (j, ov);
            taken[j] = true;
        }
    }
    out
}

/// Parity-blocked spectra over the sweep with continuity tracking and
/// flagging of flat (dark) levels. With `check_convergence` the sweep is
/// repeated at doubled cutoff and the low-lying and dark levels must agree
/// to `convergence_tol`.
pub fn sweep_spectrum(
    space: SystemSpace,
    template: &ModelParams,
    spec: &SweepSpec,
    options: &SweepOptions,
) -> Result<SpectrumSweep> {
    let mut sweep = sweep_once(space, template, spec)?;
    if !options.check_convergence {
        return Ok(sweep);
    }
    let fine = SystemSpace::new(2 * space.fock_cutoff())?;
    let terms = HamiltonianTerms::new(fine);
    let blocks = ParityBlocks::new(fine);
    let shift_of = |vals: &[f64], e: f64| {
        vals.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min)
    };
    let mut artifacts = Vec::new();
    for (i, point) in sweep.points.iter().enumerate() {
        let h = real_part(terms.hamiltonian(&spec.params(template, i)).matrix())?;
        for parity in [1i8, -1] {
            let coarse = if parity > 0 { &point.even } else { &point.odd };
            let (vals, _) = block_eigen(&h, blocks.block(parity));
            for (k, &level) in coarse.iter().enumerate().take(options.converged_levels) {
                let shift = shift_of(&vals, level);
                if shift > options.convergence_tol {
                    return Err(Error::Convergence(format!(
                        "level {k} (parity {parity}) at {}={} moves by {shift:.3e} when the \
                         cutoff doubles to {}",
                        sweep.sweep_param,
                        point.value,
                        fine.fock_cutoff()
                    )));
                }
            }
            // Flat levels that do not survive the larger space live on the
            // truncation edge and are not dark states of the model.
            for t in sweep.dark_tracks().filter(|t| t.parity == parity) {
                if shift_of(&vals, coarse[t.indices[i]]) > options.convergence_tol {
                    artifacts.push(t.id);
                }
            }
        }
    }
    for id in artifacts {
        sweep.tracks[id].dark = false;
    }
    Ok(sweep)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub min_gap: f64,
    /// Sweep value where the minimum occurs.
    pub location: f64,
    /// (dark track id, neighbouring track id).
    pub level_pair: (usize, usize),
    pub dark_energy: f64,
}

/// Minimum distance from the dark level to any other level of the same
/// parity across the sweep.
pub fn min_gap_to_dark(sweep: &SpectrumSweep) -> Result<GapReport> {
    gap_over(sweep, sweep.dark_tracks())
}

/// As [`min_gap_to_dark`], restricted to dark levels within `tol` of `energy`.
pub fn min_gap_to_dark_at(sweep: &SpectrumSweep, energy: f64, tol: f64) -> Result<GapReport> {
    gap_over(
        sweep,
        sweep.dark_tracks().filter(|t| (t.energies[0] - energy).abs() <= tol),
    )
}

fn gap_over<'a>(sweep: &SpectrumSweep, tracks: impl Iterator<Item = &'a Track>) -> Result<GapReport> {
    let mut best: Option<GapReport> = None;
    for dark in tracks {
        for (i, point) in sweep.points.iter().enumerate() {
            let levels = sweep.block(i, dark.parity);
            let k_dark = dark.indices[i];
            let e = levels[k_dark];
            for (k, &other) in levels.iter().enumerate() {
                if k == k_dark {
                    continue;
                }
                let gap = (other - e).abs();
                if best.as_ref().is_none_or(|b| gap < b.min_gap) {
                    let neighbour = sweep
                        .tracks
                        .iter()
                        .find(|t| t.parity == dark.parity && t.indices[i] == k)
                        .map_or(usize::MAX, |t| t.id);
                    best = Some(GapReport {
                        min_gap: gap,
                        location: point.value,
                        level_pair: (dark.id, neighbour),
                        dark_energy: e,
                    });
                }
            }
        }
    }
    best.ok_or(Error::NoDarkLevel)
}

/// ∂H/∂t of the schedule at `t` from the analytic segment derivatives.
pub fn hamiltonian_rate(terms: &HamiltonianTerms, schedule: &Schedule, t: f64) -> Operator {
    let kind = schedule.kind_at(t);
    let r = schedule.rates_at(t);
    terms.derivative(kind, &r.with_kind(0.0, kind))
}

/// Central finite difference of H(t) with step `h`.
pub fn hamiltonian_rate_fd(
    terms: &HamiltonianTerms,
    schedule: &Schedule,
    t: f64,
    h: f64,
) -> Operator {
    let plus = terms.hamiltonian(&schedule.model_at(t + h));
    let minus = terms.hamiltonian(&schedule.model_at(t - h));
    plus.sub(&minus).expect("same space").scaled(0.5 / h)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdiabaticReport {
    /// max over other levels of |⟨E_n|Ḣ|ψ⟩| / (E_n − E)².
    pub ratio: f64,
    /// Index (ascending full spectrum) of the level attaining the maximum.
    pub worst_level: Option<usize>,
    /// A degenerate level with non-vanishing coupling was found.
    pub infinite: bool,
    pub reference_energy: f64,
}

/// Numerators below this count as zero when the denominator vanishes.
const DEGENERATE_NUMERATOR: f64 = 1e-9;
const DEGENERATE_GAP: f64 = 1e-9;

/// Eq.-(6)-style adiabaticity ratio of level `level` (ascending index in the
/// full spectrum) of H(t).
pub fn adiabaticity_ratio(
    space: SystemSpace,
    schedule: &Schedule,
    t: f64,
    level: usize,
) -> Result<AdiabaticReport> {
    let terms = HamiltonianTerms::new(space);
    let h = real_part(terms.hamiltonian(&schedule.model_at(t)).matrix())?;
    let (vals, vecs) = full_eigen(&h);
    let v = vecs
        .get(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} out of range")))?;
    let hdot = hamiltonian_rate(&terms, schedule, t);
    ratio_against(&vals, &vecs, vals[level], &to_complex(v), hdot.matrix(), Some(level))
}

/// Same ratio for the closed-form dark state of the instantaneous model.
pub fn dark_adiabaticity_ratio(
    space: SystemSpace,
    schedule: &Schedule,
    t: f64,
) -> Result<AdiabaticReport> {
    let params = schedule.model_at(t);
    let dark = dark_state(space, &params)?;
    let terms = HamiltonianTerms::new(space);
    let h = real_part(terms.hamiltonian(&params).matrix())?;
    let (vals, vecs) = full_eigen(&h);
    let psi = dark.vector().clone();
    let hdot = hamiltonian_rate(&terms, schedule, t);
    // Skip the eigenvector that is the dark state itself.
    let own = vecs
        .iter()
        .map(|v| to_complex(v).dotc(&psi).norm())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k);
    ratio_against(&vals, &vecs, dark.energy, &psi, hdot.matrix(), own)
}

fn full_eigen(h: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let idx: Vec<usize> = (0..h.nrows()).collect();
    block_eigen(h, &idx)
}

fn to_complex(v: &DVector<f64>) -> CVector {
    v.map(|x| C64::new(x, 0.0))
}

fn ratio_against(
    vals: &[f64],
    vecs: &[DVector<f64>],
    energy: f64,
    psi: &CVector,
    hdot: &CMatrix,
    skip: Option<usize>,
) -> Result<AdiabaticReport> {
    let hpsi = hdot * psi;
    let mut report = AdiabaticReport {
        ratio: 0.0,
        worst_level: None,
        infinite: false,
        reference_energy: energy,
    };
    for (n, (e, v)) in vals.iter().zip(vecs).enumerate() {
        if Some(n) == skip {
            continue;
        }
        let num = to_complex(v).dotc(&hpsi).norm();
        let gap = e - energy;
        if gap.abs() < DEGENERATE_GAP {
            if num > DEGENERATE_NUMERATOR {
                report.infinite = true;
                report.ratio = f64::INFINITY;
                report.worst_level = Some(n);
            }
            continue;
        }
        let r = num / (gap * gap);
        if !report.infinite && r > report.ratio {
            report.ratio = r;
            report.worst_level = Some(n);
        }
    }
    Ok(report)
}

/// A coupling value where another even-parity level crosses the dark level.
#[derive(Clone, Debug, Serialize)]
pub struct DarkCrossing {
    pub g: f64,
    /// Distance of the crossing level from the dark energy after refinement.
    pub residual: f64,
    #[serde(skip)]
    pub partner: CVector,
}

/// Locates the couplings in [g_lo, g_hi] where a level crosses the dark
/// energy, for the manifold point `template` (its g is overridden). The
/// dark state is shifted out of the way so only the other levels are
/// followed; each sign change of E_k(g) − E_dark is refined by bisection.
pub fn dark_crossings(
    space: SystemSpace,
    template: &ModelParams,
    g_lo: f64,
    g_hi: f64,
    points: usize,
) -> Result<Vec<DarkCrossing>> {
    let terms = HamiltonianTerms::new(space);
    let blocks = ParityBlocks::new(space);
    let probe = dark_state(space, &ModelParams { g1: g_lo, g2: g_lo, ..*template })?;
    let anchor = probe
        .vector()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .expect("non-empty");
    let parity: i8 = if parity_of(space.basis_state(anchor)) > 0.0 { 1 } else { -1 };
    let e_dark = probe.energy;
    let idx = blocks.block(parity).to_vec();

    let levels = |g: f64| -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let p = ModelParams { g1: g, g2: g, ..*template };
        let dark = dark_state(space, &p)?;
        let d = dark.vector().map(|c| c.re);
        let mut h = real_part(terms.hamiltonian(&p).matrix())?;
        // Push the dark state far above the spectrum.
        h += (&d * d.transpose()) * 1e3;
        Ok(block_eigen(&h, &idx))
    };

    let grid = linspace(g_lo, g_hi, points.max(2));
    let mut out = Vec::new();
    let mut prev = levels(grid[0])?.0;
    for w in grid.windows(2) {
        let next = levels(w[1])?.0;
        for k in 0..prev.len() {
            let (fa, fb) = (prev[k] - e_dark, next[k] - e_dark);
            if fa == 0.0 || fa.signum() == fb.signum() {
                continue;
            }
            let (mut a, mut b, mut fa) = (w[0], w[1], fa);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = levels(m)?.0[k] - e_dark;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            let g = 0.5 * (a + b);
            let (vals, vecs) = levels(g)?;
            out.push(DarkCrossing {
                g,
                residual: (vals[k] - e_dark).abs(),
                partner: to_complex(&vecs[k]),
            });
        }
        prev = next;
    }
    Ok(out)
}

/// Convenience wrapper: ⟨partner|Ḣ|ψ_dark⟩ at every crossing.
pub fn crossing_matrix_elements(
    space: SystemSpace,
    template: &ModelParams,
    crossings: &[DarkCrossing],
    rates: DarkRates,
) -> Result<Vec<C64>> {
    crossings
        .iter()
        .map(|c| {
            let p = ModelParams { g1: c.g, g2: c.g, ..*template };
            crate::darkstates::dark_matrix_element(space, &p, rates, &c.partner)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::make_space;
    use crate::models::{paper_protocol_schedule, ModelKind, ProtocolConfig};

    #[test]
    fn blocked_matches_full_solve() {
        let space = make_space(6).unwrap();
        let p = ModelParams::manifold(ModelKind::RabiStark, 0.3, 0.7, 0.2);
        let h = real_part(hamiltonian_matrix(space, &p).matrix()).unwrap();
        let blocks = ParityBlocks::new(space);
        let mut blocked: Vec<f64> = block_eigen(&h, &blocks.even).0;
        blocked.extend(block_eigen(&h, &blocks.odd).0);
        blocked.sort_by(f64::total_cmp);
        let full = full_eigen(&h).0;
        for (a, b) in blocked.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn hamiltonian_matrix(space: SystemSpace, p: &ModelParams) -> Operator {
        crate::models::hamiltonian(space, p).unwrap()
    }

    #[test]
    fn rabi_sweep_has_flat_dark_level() {
        let space = make_space(10).unwrap();
        let p = ModelParams::rabi_manifold(0.6, 0.0);
        let opts = SweepOptions { converged_levels: 0, ..Default::default() };
        let sweep = sweep_spectrum(space, &p, &SweepSpec::coupling(0.0, 1.0, 41), &opts).unwrap();
        let dark: Vec<_> = sweep.dark_tracks().collect();
        assert_eq!(dark.len(), 1);
        assert_eq!(dark[0].parity, 1);
        assert!(dark[0].energies.iter().all(|e| (e - 1.0).abs() < 1e-8));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let space = make_space(2).unwrap();
        let spec = SweepSpec::Axis { axis: SweepAxis::Coupling, values: vec![] };
        assert!(sweep_spectrum(space, &ModelParams::rabi_manifold(0.6, 0.0), &spec, &SweepOptions::default()).is_err());
    }

    #[test]
    fn analytic_rate_matches_finite_difference() {
        let cfg = ProtocolConfig::default();
        let s = paper_protocol_schedule(&cfg).unwrap();
        let terms = HamiltonianTerms::new(make_space(4).unwrap());
        for &t in &[5.0, 33.3, 80.0, 160.0, 200.0] {
            let a = hamiltonian_rate(&terms, &s, t);
            let b = hamiltonian_rate_fd(&terms, &s, t, 1e-6);
            assert!(a.sub(&b).unwrap().norm_max() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn static_schedule_has_zero_ratio() {
        use crate::models::schedule::{ScheduleBuilder, ScheduleParams};
        let space = make_space(4).unwrap();
        let s = ScheduleBuilder::start(1.0, ScheduleParams::manifold(1.0, 0.4, 0.2, 0.0, 0.0))
            .hold(10.0, ModelKind::Rabi)
            .build()
            .unwrap();
        let r = dark_adiabaticity_ratio(space, &s, 5.0).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(!r.infinite);
        let r = adiabaticity_ratio(space, &s, 5.0, 3).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let space = make_space(2).unwrap();
        let opts = SweepOptions { check_convergence: false, ..Default::default() };
        let sweep = sweep_spectrum(space, &ModelParams::rabi_manifold(0.6, 0.0), &SweepSpec::coupling(0.0, 0.5, 3), &opts).unwrap();
        let mut buf = Vec::new();
        sweep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("g[omega],parity,e0[omega]"));
        assert_eq!(text.lines().count(), 1 + 3 * 2);
    }
}
