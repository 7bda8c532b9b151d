//! Variance of the ensemble prediction under independent, constant-variance noise.
//!
//! The ensemble variance splits into a noise term `σ²_ε μᵀμ` and a
//! weight-variability term estimated by `σ̂²_f̂ / M`. `μᵀμ` is estimated from
//! the `z_m` vectors, either naively (`‖μ̂‖²`) or with the `Tr{Q̂}/M` bias removed.

use crate::elm::{ElmEnsemble, PredictionBundle, TrainedElm};
use crate::error::{ElmError, Result};
use crate::numerics::Vector;
use crate::variance::VarianceValue;

#[inline]
pub(crate) fn column(m: &crate::numerics::Mat, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn require_members(bundle: &PredictionBundle, at_least: usize, what: &str) -> Result<usize> {
    let m = bundle.ensemble_size();
    if m < at_least {
        return Err(ElmError::DegreesOfFreedom(format!("{what} needs at least {at_least} members, got {m}")));
    }
    Ok(m)
}

/// Unbiased sample variance (divisor M-1) of the member predictions at each point.
pub fn sigma2_fhat(bundle: &PredictionBundle) -> Result<Vector> {
    let m = require_members(bundle, 2, "the least-squares bias variation")?;
    let preds = &bundle.member_predictions;
    Ok(Vector::from_iterator(
        bundle.n_points(),
        preds.column_iter().map(|c| {
            let mean = c.sum() / m as f64;
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        }),
    ))
}

fn mean_z(bundle: &PredictionBundle, q: usize) -> Vec<f64> {
    let m = bundle.ensemble_size() as f64;
    let mut mu = vec![0.0; bundle.n_train()];
    for z in &bundle.z {
        for (acc, v) in mu.iter_mut().zip(column(z, q)) {
            *acc += v;
        }
    }
    mu.iter_mut().for_each(|v| *v /= m);
    mu
}

/// `‖μ̂‖² = (1/M²) Σ_{m,l} z_mᵀ z_l` at each point.
pub fn mu_norm2_naive(bundle: &PredictionBundle) -> Vector {
    Vector::from_fn(bundle.n_points(), |q, _| {
        let mu = mean_z(bundle, q);
        dot(&mu, &mu)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedMuNorm {
    /// `M/(M-1) ‖μ̂‖² - 1/(M(M-1)) Σ ‖z_m‖²`.
    pub value: Vector,
    /// Total variation `Tr{Q̂}` of the z vectors.
    pub trace_q: Vector,
}

/// Bias-corrected `μᵀμ` estimate together with `Tr{Q̂}`.
pub fn mu_norm2_corrected(bundle: &PredictionBundle) -> Result<CorrectedMuNorm> {
    let m = require_members(bundle, 2, "the corrected mu norm")? as f64;
    let q_count = bundle.n_points();
    let mut value = Vector::zeros(q_count);
    let mut trace_q = Vector::zeros(q_count);
    for q in 0..q_count {
        let mu = mean_z(bundle, q);
        let mu2 = dot(&mu, &mu);
        let mut sum_sq = 0.0;
        let mut spread = 0.0;
        for z in &bundle.z {
            let zc = column(z, q);
            sum_sq += dot(zc, zc);
            spread += zc.iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        value[q] = m / (m - 1.0) * mu2 - sum_sq / (m * (m - 1.0));
        trace_q[q] = spread / (m - 1.0);
    }
    Ok(CorrectedMuNorm { value, trace_q })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub sigma2_eps: f64,
    /// Averaged effective number of parameters (exactly N without regularization).
    pub gamma_hat: f64,
}

/// Pooled residual variance over the members, with `n - γ̂` degrees of freedom.
pub fn noise_variance(ensemble: &ElmEnsemble) -> Result<NoiseEstimate> {
    noise_variance_of(&ensemble.members)
}

pub fn noise_variance_of(members: &[TrainedElm]) -> Result<NoiseEstimate> {
    let first = members
        .first()
        .ok_or_else(|| ElmError::InvalidParameter("noise variance of an empty ensemble".into()))?;
    let m = members.len() as f64;
    let n = first.n_train() as f64;
    let neurons = first.neurons() as f64;
    let gamma_hat = if first.alpha == 0.0 {
        neurons
    } else {
        members.iter().map(|e| e.effective_dof().gamma).sum::<f64>() / m
    };
    if n <= gamma_hat {
        return Err(ElmError::DegreesOfFreedom(format!(
            "{n} training points leave no residual degrees of freedom (effective parameters {gamma_hat:.3})"
        )));
    }
    let rss: f64 = members.iter().map(TrainedElm::rss).sum();
    Ok(NoiseEstimate { sigma2_eps: rss / (m * (n - gamma_hat)), gamma_hat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoPoint {
    pub sigma2_fhat: f64,
    pub mu_norm2_naive: f64,
    pub mu_norm2_corrected: f64,
    pub trace_q: f64,
    pub sigma2_nho: f64,
    pub sigma2_br: VarianceValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoskedasticReport {
    pub sigma2_eps: f64,
    pub gamma_hat: f64,
    pub ensemble_size: usize,
    pub points: Vec<HomoPoint>,
}

/// Naive (`σ̂²_NHo`) and bias-reduced (`σ̂²_BR`) homoskedastic variance at every query point.
pub fn homoskedastic_variance(ensemble: &ElmEnsemble, bundle: &PredictionBundle) -> Result<HomoskedasticReport> {
    check_sizes(ensemble, bundle)?;
    let noise = noise_variance(ensemble)?;
    let fhat = sigma2_fhat(bundle)?;
    let naive = mu_norm2_naive(bundle);
    let corrected = mu_norm2_corrected(bundle)?;
    let m = bundle.ensemble_size() as f64;
    let points = (0..bundle.n_points())
        .map(|q| {
            let lsb = fhat[q] / m;
            HomoPoint {
                sigma2_fhat: fhat[q],
                mu_norm2_naive: naive[q],
                mu_norm2_corrected: corrected.value[q],
                trace_q: corrected.trace_q[q],
                sigma2_nho: noise.sigma2_eps * naive[q] + lsb,
                sigma2_br: VarianceValue::new(noise.sigma2_eps * corrected.value[q] + lsb),
            }
        })
        .collect();
    Ok(HomoskedasticReport {
        sigma2_eps: noise.sigma2_eps,
        gamma_hat: noise.gamma_hat,
        ensemble_size: bundle.ensemble_size(),
        points,
    })
}

/// Fallback for a single model: the conditional least-squares variance
/// `σ̂²_ε zᵀz`. It ignores the variability due to the random input weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModelVariance {
    pub sigma2_eps: f64,
    pub variance: Vector,
    pub weight_variability_captured: bool,
}

pub fn single_model_variance(ensemble: &ElmEnsemble, bundle: &PredictionBundle) -> Result<SingleModelVariance> {
    check_sizes(ensemble, bundle)?;
    let noise = noise_variance(ensemble)?;
    let naive = mu_norm2_naive(bundle);
    Ok(SingleModelVariance {
        sigma2_eps: noise.sigma2_eps,
        variance: naive * noise.sigma2_eps,
        weight_variability_captured: bundle.ensemble_size() > 1,
    })
}

pub(crate) fn check_sizes(ensemble: &ElmEnsemble, bundle: &PredictionBundle) -> Result<()> {
    if ensemble.size() != bundle.ensemble_size() || ensemble.n_train() != bundle.n_train() {
        return Err(ElmError::Dimension(format!(
            "bundle has {} members over {} training points, ensemble has {} over {}",
            bundle.ensemble_size(),
            bundle.n_train(),
            ensemble.size(),
            ensemble.n_train()
        )));
    }
    Ok(())
}
