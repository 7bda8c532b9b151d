//! Common vocabulary for the variance estimators and a single entry point that
//! evaluates any subset of them on one prediction bundle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elm::{ElmEnsemble, PredictionBundle};
use crate::error::{ElmError, Result};
use crate::hetero::{s_estimators, SEstimator};
use crate::homo::{homoskedastic_variance, sigma2_fhat};
use crate::numerics::Mat;

/// An estimated variance. Unbiased estimators can dip below zero; the raw
/// number is kept alongside the floored one so that nothing is hidden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceValue {
    pub raw: f64,
    /// `max(raw, 0)`.
    pub value: f64,
    pub negative: bool,
}

impl VarianceValue {
    pub fn new(raw: f64) -> Self {
        Self { raw, value: raw.max(0.0), negative: raw < 0.0 }
    }

    pub fn std_dev(&self) -> f64 {
        self.value.sqrt()
    }
}

/// Exact jackknife covariance, or its diagonal-only approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceForm {
    #[default]
    Exact,
    Approximate,
}

impl FromStr for CovarianceForm {
    type Err = ElmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "approx" | "approximate" | "approximated" => Ok(Self::Approximate),
            other => Err(ElmError::InvalidParameter(format!("unknown covariance form '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    /// Naive homoskedastic.
    NHo,
    /// Bias-reduced homoskedastic.
    BR,
    S1,
    /// Naive heteroskedastic.
    NHe,
    S2,
    S3,
}

impl Estimator {
    pub const ALL: [Estimator; 6] =
        [Estimator::NHo, Estimator::BR, Estimator::S1, Estimator::NHe, Estimator::S2, Estimator::S3];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::NHo => "NHo",
            Estimator::BR => "BR",
            Estimator::S1 => "S1",
            Estimator::NHe => "NHe",
            Estimator::S2 => "S2",
            Estimator::S3 => "S3",
        }
    }

    pub fn is_heteroskedastic(self) -> bool {
        self.hetero().is_some()
    }

    /// Smallest ensemble for which the estimator is defined.
    pub fn min_members(self) -> usize {
        match self {
            Estimator::S1 => 1,
            Estimator::S3 => 3,
            _ => 2,
        }
    }

    fn hetero(self) -> Option<SEstimator> {
        match self {
            Estimator::S1 => Some(SEstimator::S1),
            Estimator::NHe => Some(SEstimator::NHe),
            Estimator::S2 => Some(SEstimator::S2),
            Estimator::S3 => Some(SEstimator::S3),
            _ => None,
        }
    }

    /// Parse a comma separated list such as `"BR,S2,S3"`; `"all"` selects every estimator.
    pub fn parse_list(s: &str) -> Result<Vec<Estimator>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<Estimator> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let e: Estimator = part.parse()?;
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(ElmError::InvalidParameter("no estimator requested".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = ElmError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ElmError::InvalidParameter(format!("unknown estimator '{s}'")))
    }
}

/// Requested estimators evaluated at every query point. `values[e][q]` is `None`
/// when estimator `e` is undefined for this ensemble size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub estimators: Vec<Estimator>,
    pub form: CovarianceForm,
    pub ensemble_size: usize,
    pub prediction: Vec<f64>,
    /// Spread of the member predictions; absent for a single member.
    pub sigma2_fhat: Option<Vec<f64>>,
    pub values: Vec<Vec<Option<VarianceValue>>>,
    pub sigma2_eps: Option<f64>,
    pub notes: Vec<String>,
}

impl EstimateTable {
    pub fn column(&self, e: Estimator) -> Option<&[Option<VarianceValue>]> {
        self.estimators.iter().position(|&x| x == e).map(|i| self.values[i].as_slice())
    }
}

pub fn estimate(
    ensemble: &ElmEnsemble,
    bundle: &PredictionBundle,
    estimators: &[Estimator],
    form: CovarianceForm,
) -> Result<EstimateTable> {
    let m = bundle.ensemble_size();
    let q = bundle.n_points();
    let mut notes = Vec::new();
    for &e in estimators {
        if m < e.min_members() {
            notes.push(format!("{e} needs at least {} members, ensemble has {m}", e.min_members()));
        }
    }

    let needs_homo = estimators.iter().any(|e| matches!(e, Estimator::NHo | Estimator::BR)) && m >= 2;
    let homo = if needs_homo { Some(homoskedastic_variance(ensemble, bundle)?) } else { None };
    let needs_hetero = estimators.iter().any(|e| e.is_heteroskedastic());
    let hetero = if needs_hetero {
        Some(s_estimators(ensemble, bundle, form == CovarianceForm::Approximate)?)
    } else {
        None
    };

    let values = estimators
        .iter()
        .map(|&e| {
            (0..q)
                .map(|i| match e {
                    Estimator::NHo => homo.as_ref().map(|h| VarianceValue::new(h.points[i].sigma2_nho)),
                    Estimator::BR => homo.as_ref().map(|h| h.points[i].sigma2_br),
                    _ => hetero.as_ref().and_then(|h| h.points[i].variance(e.hetero().unwrap(), form)),
                })
                .collect()
        })
        .collect();

    if let Some(h) = &homo {
        let negatives = h.points.iter().filter(|p| p.sigma2_br.negative).count();
        if negatives > 0 && estimators.contains(&Estimator::BR) {
            notes.push(format!("BR estimate negative at {negatives} of {q} points, floored at zero"));
        }
    }
    Ok(EstimateTable {
        estimators: estimators.to_vec(),
        form,
        ensemble_size: m,
        prediction: bundle.prediction.iter().copied().collect(),
        sigma2_fhat: if m >= 2 { Some(sigma2_fhat(bundle)?.iter().copied().collect()) } else { None },
        values,
        sigma2_eps: homo.map(|h| h.sigma2_eps),
        notes,
    })
}

/// Upper bound on `M · n · chunk` floats of `z` vectors held at once by [`estimate_at`].
const Z_BUDGET: usize = 4_000_000;

/// [`estimate`] at the columns of `query`, processed in chunks so that memory
/// stays bounded for large query sets.
pub fn estimate_at(
    ensemble: &ElmEnsemble,
    query: &Mat,
    estimators: &[Estimator],
    form: CovarianceForm,
) -> Result<EstimateTable> {
    let chunk = (Z_BUDGET / (ensemble.size() * ensemble.n_train()).max(1)).max(1);
    estimate_in_chunks(ensemble, query, estimators, form, chunk)
}

fn estimate_in_chunks(
    ensemble: &ElmEnsemble,
    query: &Mat,
    estimators: &[Estimator],
    form: CovarianceForm,
    chunk: usize,
) -> Result<EstimateTable> {
    let q = query.ncols();
    let mut table: Option<EstimateTable> = None;
    let mut start = 0;
    while start < q || table.is_none() {
        let len = chunk.min(q - start);
        let bundle = ensemble.predict(&query.columns(start, len).into_owned())?;
        let part = estimate(ensemble, &bundle, estimators, form)?;
        match &mut table {
            None => table = Some(part),
            Some(t) => {
                t.prediction.extend(part.prediction);
                if let (Some(a), Some(b)) = (&mut t.sigma2_fhat, part.sigma2_fhat) {
                    a.extend(b);
                }
                for (a, b) in t.values.iter_mut().zip(part.values) {
                    a.extend(b);
                }
                for note in part.notes {
                    if !t.notes.contains(&note) {
                        t.notes.push(note);
                    }
                }
            }
        }
        start += len;
        if q == 0 {
            break;
        }
    }
    Ok(table.expect("at least one chunk"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elm::{fit_ensemble, ElmConfig};
    use crate::numerics::{rng_from_seed, uniform_fill, Mat, Vector};

    #[test]
    fn floor_and_flag() {
        let v = VarianceValue::new(-0.25);
        assert_eq!(v.value, 0.0);
        assert!(v.negative);
        assert_eq!(v.raw, -0.25);
        let v = VarianceValue::new(0.25);
        assert_eq!((v.value, v.negative, v.std_dev()), (0.25, false, 0.5));
    }

    #[test]
    fn parse_names_and_lists() {
        assert_eq!("br".parse::<Estimator>().unwrap(), Estimator::BR);
        assert_eq!(Estimator::parse_list("S2, S3,S2").unwrap(), vec![Estimator::S2, Estimator::S3]);
        assert_eq!(Estimator::parse_list("all").unwrap().len(), 6);
        assert!(Estimator::parse_list("S4").is_err());
        assert!(Estimator::parse_list(" , ").is_err());
        for e in Estimator::ALL {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert_eq!("approximated".parse::<CovarianceForm>().unwrap(), CovarianceForm::Approximate);
    }

    fn small_ensemble(m: usize) -> (ElmEnsemble, PredictionBundle) {
        let mut rng = rng_from_seed(8);
        let x = uniform_fill(&mut rng, 1, 30, 0.0, 3.0).unwrap();
        let y = Vector::from_fn(30, |i, _| x[(0, i)].sin()) + uniform_fill(&mut rng, 30, 1, -0.3, 0.3).unwrap().column(0);
        let ens = fit_ensemble(&ElmConfig::new(4, 0.0), m, &x, &y, 1).unwrap();
        let bundle = ens.predict(&Mat::from_row_slice(1, 4, &[0.1, 1.0, 2.0, 2.9])).unwrap();
        (ens, bundle)
    }

    #[test]
    fn unavailable_estimators_are_reported() {
        let (ens, bundle) = small_ensemble(2);
        let table = estimate(&ens, &bundle, &Estimator::ALL, CovarianceForm::Exact).unwrap();
        assert!(table.column(Estimator::S3).unwrap().iter().all(Option::is_none));
        assert!(table.column(Estimator::S2).unwrap().iter().all(Option::is_some));
        assert!(table.notes.iter().any(|n| n.starts_with("S3")));
    }

    #[test]
    fn table_matches_direct_reports() {
        let (ens, bundle) = small_ensemble(5);
        let table = estimate(&ens, &bundle, &[Estimator::BR, Estimator::S2], CovarianceForm::Approximate).unwrap();
        let homo = homoskedastic_variance(&ens, &bundle).unwrap();
        let het = s_estimators(&ens, &bundle, true).unwrap();
        for q in 0..4 {
            assert_eq!(table.values[0][q].unwrap(), homo.points[q].sigma2_br);
            assert_eq!(table.values[1][q].unwrap(), het.points[q].variance(SEstimator::S2, CovarianceForm::Approximate).unwrap());
        }
        assert_eq!(table.prediction.len(), 4);
        assert_eq!(table.sigma2_fhat.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn chunked_matches_single_pass() {
        let (ens, _) = small_ensemble(3);
        let query = Mat::from_fn(1, 25, |_, j| j as f64 * 0.12);
        let whole = estimate(&ens, &ens.predict(&query).unwrap(), &Estimator::ALL, CovarianceForm::Exact).unwrap();
        assert_eq!(whole, estimate_at(&ens, &query, &Estimator::ALL, CovarianceForm::Exact).unwrap());
        let chunked = estimate_in_chunks(&ens, &query, &Estimator::ALL, CovarianceForm::Exact, 4).unwrap();
        assert_eq!(whole.prediction, chunked.prediction);
        assert_eq!(whole.sigma2_fhat, chunked.sigma2_fhat);
        assert_eq!(whole.values, chunked.values);
    }
}
