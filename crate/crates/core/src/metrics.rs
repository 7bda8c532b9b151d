//! Scores for variance estimates and predictions across experiment repetitions.

use serde::{Deserialize, Serialize};

use crate::error::{ElmError, Result};

/// Median, with the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(ElmError::InvalidParameter("median of an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(ElmError::NonFinite("median input"));
    }
    let mut v = values.to_vec();
    let mid = v.len() / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if values.len() % 2 == 1 {
        return Ok(upper);
    }
    let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(0.5 * (lower + upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrorScores {
    /// Median estimated standard deviation.
    pub se: f64,
    /// Median absolute error against the true standard deviation.
    pub e: f64,
    /// Median relative error.
    pub re: f64,
}

/// Scores of estimated standard deviations against true ones over a set of points.
pub fn se_e_re(estimates: &[f64], truth: &[f64]) -> Result<StdErrorScores> {
    if estimates.len() != truth.len() {
        return Err(ElmError::Dimension(format!(
            "{} estimates but {} true values",
            estimates.len(),
            truth.len()
        )));
    }
    if let Some(i) = truth.iter().position(|&t| !(t > 0.0)) {
        return Err(ElmError::InvalidParameter(format!(
            "true standard deviation at point {i} is {}, relative error undefined",
            truth[i]
        )));
    }
    let abs: Vec<f64> = estimates.iter().zip(truth).map(|(s, t)| (s - t).abs()).collect();
    let rel: Vec<f64> = abs.iter().zip(truth).map(|(a, t)| a / t).collect();
    Ok(StdErrorScores { se: median(estimates)?, e: median(&abs)?, re: median(&rel)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionScores {
    pub mse: f64,
    /// MSE relative to the spread of `y` around its mean; above 1 is worse than predicting the mean.
    pub re: f64,
}

pub fn mse_re(y: &[f64], yhat: &[f64]) -> Result<PredictionScores> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(ElmError::Dimension(format!("mse of {} targets and {} predictions", y.len(), yhat.len())));
    }
    let n = y.len() as f64;
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    let mean = y.iter().sum::<f64>() / n;
    let spread = y.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    if spread == 0.0 {
        return Err(ElmError::InvalidParameter("relative error undefined for constant targets".into()));
    }
    Ok(PredictionScores { mse, re: mse / spread })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub estimator: String,
    /// Interval half-width multiplier (1.96 for nominal 95%).
    pub z: f64,
    pub coverage: Vec<f64>,
    pub repetitions: usize,
}

/// Streaming tally of how often `f̂ ± z·σ̂` contains the truth at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCounter {
    z: f64,
    hits: Vec<usize>,
    repetitions: usize,
}

impl CoverageCounter {
    pub fn new(points: usize, z: f64) -> Self {
        CoverageCounter { z, hits: vec![0; points], repetitions: 0 }
    }

    pub fn record(&mut self, f_true: &[f64], prediction: &[f64], sd: &[f64]) -> Result<()> {
        let n = self.hits.len();
        if f_true.len() != n || prediction.len() != n || sd.len() != n {
            return Err(ElmError::Dimension("coverage inputs differ in length".into()));
        }
        for i in 0..n {
            if (prediction[i] - f_true[i]).abs() <= self.z * sd[i] {
                self.hits[i] += 1;
            }
        }
        self.repetitions += 1;
        Ok(())
    }

    pub fn finish(&self, estimator: &str) -> CoverageCurve {
        let r = self.repetitions.max(1) as f64;
        CoverageCurve {
            estimator: estimator.to_string(),
            z: self.z,
            coverage: self.hits.iter().map(|&h| h as f64 / r).collect(),
            repetitions: self.repetitions,
        }
    }
}

/// Per point, the fraction of repetitions `k` with `|f̂_k - f| ≤ z·σ̂_k`.
pub fn coverage(
    f_true: &[f64],
    predictions: &[Vec<f64>],
    sd: &[Vec<f64>],
    z: f64,
    estimator: &str,
) -> Result<CoverageCurve> {
    if predictions.len() < 2 || predictions.len() != sd.len() {
        return Err(ElmError::InvalidParameter(format!(
            "coverage needs at least 2 repetitions with matching widths, got {} and {}",
            predictions.len(),
            sd.len()
        )));
    }
    let mut counter = CoverageCounter::new(f_true.len(), z);
    for (p, s) in predictions.iter().zip(sd) {
        counter.record(f_true, p, s)?;
    }
    Ok(counter.finish(estimator))
}

/// Mean and sample standard deviation over repetitions; the deviation is
/// absent for a single repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: Option<f64>,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Result<MeanSd> {
        if values.is_empty() {
            return Err(ElmError::InvalidParameter("summary of an empty list".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.len() > 1)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Ok(MeanSd { mean, sd })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Standard-error scores of one estimator in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub repetition: usize,
    pub ensemble_size: usize,
    pub split: Split,
    pub estimator: String,
    pub se: f64,
    pub e: f64,
    pub re: f64,
}
