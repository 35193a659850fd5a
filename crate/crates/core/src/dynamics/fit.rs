use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformModel {
    /// A·exp(−k t), fitted from the peak of the samples onward.
    Exponential,
    /// A·exp(−(t − t₀)²/2s²)
    Gaussian,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub model: WaveformModel,
    /// Exponential: [A, k]. Gaussian: [A, t₀, s].
    pub params: Vec<f64>,
    pub rms_residual: f64,
    /// rms residual divided by the peak of the data.
    pub relative_rms: f64,
}

struct Problem<'a> {
    model: WaveformModel,
    t: &'a [f64],
    y: &'a [f64],
    p: DVector<f64>,
}

impl Problem<'_> {
    fn value_and_grad(&self, t: f64) -> (f64, Vec<f64>) {
        let p = &self.p;
        match self.model {
            WaveformModel::Exponential => {
                let e = (-p[1] * t).exp();
                (p[0] * e, vec![e, -p[0] * t * e])
            }
            WaveformModel::Gaussian => {
                let (a, t0, s) = (p[0], p[1], p[2]);
                let d = t - t0;
                let e = (-d * d / (2.0 * s * s)).exp();
                (a * e, vec![e, a * e * d / (s * s), a * e * d * d / (s * s * s)])
            }
        }
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            self.t.len(),
            self.t.iter().zip(self.y).map(|(t, y)| self.value_and_grad(*t).0 - y),
        ))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let np = self.p.len();
        let mut j = DMatrix::zeros(self.t.len(), np);
        for (r, t) in self.t.iter().enumerate() {
            for (c, g) in self.value_and_grad(*t).1.into_iter().enumerate() {
                j[(r, c)] = g;
            }
        }
        Some(j)
    }
}

fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i)
}

fn initial_guess(model: WaveformModel, t: &[f64], y: &[f64]) -> Vec<f64> {
    let imax = argmax(y);
    let ymax = y[imax];
    match model {
        WaveformModel::Exponential => {
            // Log-slope between the peak and the first sample below half of it.
            let half = (imax..y.len()).find(|&i| y[i] < 0.5 * ymax);
            let k = match half {
                Some(i) if t[i] > t[imax] => (ymax / y[i]).ln() / (t[i] - t[imax]),
                _ => 1.0 / (t[t.len() - 1] - t[0]).max(1e-12),
            };
            vec![ymax * (k * t[imax]).exp(), k]
        }
        WaveformModel::Gaussian => {
            let w: f64 = y.iter().map(|v| v.max(0.0)).sum();
            let var = t
                .iter()
                .zip(y)
                .map(|(ti, v)| v.max(0.0) * (ti - t[imax]).powi(2))
                .sum::<f64>()
                / w.max(f64::MIN_POSITIVE);
            vec![ymax, t[imax], var.sqrt().max(1e-6)]
        }
    }
}

/// Least-squares fit of a sampled photon waveform.
pub fn fit_waveform(t: &[f64], y: &[f64], model: WaveformModel) -> Result<FitResult> {
    let np = match model {
        WaveformModel::Exponential => 2,
        WaveformModel::Gaussian => 3,
    };
    if t.len() != y.len() || t.len() < np + 1 {
        return Err(Error::DegenerateFit(format!(
            "need more than {np} samples of equal length (got {} and {})",
            t.len(),
            y.len()
        )));
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::DegenerateFit("waveform is identically zero".into()));
    }
    let start = match model {
        WaveformModel::Exponential => argmax(y),
        WaveformModel::Gaussian => 0,
    };
    let (t, y) = (&t[start..], &y[start..]);
    if t.len() < np + 1 {
        return Err(Error::DegenerateFit("too few samples after the peak".into()));
    }
    let problem = Problem {
        model,
        t,
        y,
        p: DVector::from_vec(initial_guess(model, t, y)),
    };
    let (problem, report) = LevenbergMarquardt::new().minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::DegenerateFit(format!("{:?}", report.termination)));
    }
    let res = problem.residuals().expect("residuals");
    let rms = (res.norm_squared() / t.len() as f64).sqrt();
    Ok(FitResult {
        model,
        params: problem.p.iter().copied().collect(),
        rms_residual: rms,
        relative_rms: rms / peak,
    })
}
