//! Variance of the ensemble prediction under independent noise of unknown,
//! input-dependent variance, built on the HC3 (jackknife) covariance estimate
//!
//! ```text
//! Σ̂_m = (n-1)/n · [Ω̂_m - r̃_m r̃_mᵀ / n],   r̃_i = r_i / (1 - p_i),   Ω̂_m = diag(r̃²)
//! ```
//!
//! `Σ̂_m` is never formed: it is kept as a diagonal plus a rank-one correction,
//! so every quadratic form costs O(n). The approximate form drops the rank-one
//! term and the `(n-1)/n` factor, leaving `Ω̂_m`.

use crate::elm::{ElmEnsemble, PredictionBundle, TrainedElm};
use crate::error::{ElmError, Result};
use crate::homo::{check_sizes, column, dot, sigma2_fhat};
use crate::numerics::{Mat, Vector};
use crate::variance::{CovarianceForm, VarianceValue};

/// Leverages at or above this value make the jackknife scaling undefined.
pub const LEVERAGE_LIMIT: f64 = 1.0 - 1e-8;

/// Per-member ingredients of the jackknife covariance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct HcMaterial {
    pub scaled_residuals: Vector,
    /// Diagonal of `Ω̂`.
    pub omega: Vector,
    pub form: CovarianceForm,
}

pub fn hc_material(member: &TrainedElm, approximate: bool) -> Result<HcMaterial> {
    let form = if approximate { CovarianceForm::Approximate } else { CovarianceForm::Exact };
    material_from_parts(&member.residuals, &member.leverage, form)
}

pub fn material_from_parts(residuals: &Vector, leverage: &Vector, form: CovarianceForm) -> Result<HcMaterial> {
    if residuals.len() != leverage.len() {
        return Err(ElmError::Dimension(format!(
            "{} residuals but {} leverages",
            residuals.len(),
            leverage.len()
        )));
    }
    if let Some((index, &p)) = leverage.iter().enumerate().find(|(_, &p)| !(p < LEVERAGE_LIMIT)) {
        return Err(ElmError::Leverage { index, leverage: p });
    }
    let scaled_residuals = residuals.zip_map(leverage, |r, p| r / (1.0 - p));
    let omega = scaled_residuals.map(|v| v * v);
    Ok(HcMaterial { scaled_residuals, omega, form })
}

impl HcMaterial {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    fn scale(&self) -> f64 {
        match self.form {
            CovarianceForm::Exact => (self.n() as f64 - 1.0) / self.n() as f64,
            CovarianceForm::Approximate => 1.0,
        }
    }

    /// `aᵀ Σ̂ b` without forming `Σ̂`.
    pub fn quad(&self, a: &[f64], b: &[f64]) -> f64 {
        let diag: f64 = a.iter().zip(b).zip(self.omega.iter()).map(|((x, y), w)| x * w * y).sum();
        match self.form {
            CovarianceForm::Approximate => diag,
            CovarianceForm::Exact => {
                let r = self.scaled_residuals.as_slice();
                self.scale() * (diag - dot(a, r) * dot(r, b) / self.n() as f64)
            }
        }
    }

    /// `Σ̂ a`, written into `out`.
    pub fn apply_into(&self, a: &[f64], out: &mut [f64]) {
        match self.form {
            CovarianceForm::Approximate => {
                for ((o, x), w) in out.iter_mut().zip(a).zip(self.omega.iter()) {
                    *o = w * x;
                }
            }
            CovarianceForm::Exact => {
                let r = self.scaled_residuals.as_slice();
                let c = self.scale();
                let ra = dot(r, a) / self.n() as f64;
                for i in 0..a.len() {
                    out[i] = c * (self.omega[i] * a[i] - r[i] * ra);
                }
            }
        }
    }

    /// Dense `n × n` matrix; for diagnostics and small problems only.
    pub fn to_dense(&self) -> Mat {
        let n = self.n();
        let mut m = Mat::from_diagonal(&self.omega);
        if self.form == CovarianceForm::Exact {
            let r = &self.scaled_residuals;
            m -= r * r.transpose() / n as f64;
            m *= self.scale();
        }
        m
    }
}

/// `aᵀ Σ̂ b` with length checks.
pub fn quad_form_sigma(material: &HcMaterial, a: &Vector, b: &Vector) -> Result<f64> {
    if a.len() != material.n() || b.len() != material.n() {
        return Err(ElmError::Dimension(format!(
            "quadratic form of size {} applied to vectors of length {} and {}",
            material.n(),
            a.len(),
            b.len()
        )));
    }
    Ok(material.quad(a.as_slice(), b.as_slice()))
}

/// The four combination schemes at one query point. Absent values need more members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SValues {
    /// `(1/M) Σ_m z_mᵀ Σ̂_m z_m`.
    pub s1: f64,
    /// `ν̂ᵀ μ̂`, all cross terms.
    pub nhe: Option<f64>,
    /// Cross terms with `m ≠ l`.
    pub s2: Option<f64>,
    /// Triples of distinct members.
    pub s3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroPoint {
    pub exact: Option<SValues>,
    pub approx: SValues,
    /// `σ̂²_f̂ / M`, zero for a single member.
    pub fhat_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SEstimator {
    S1,
    NHe,
    S2,
    S3,
}

impl SValues {
    pub fn get(&self, which: SEstimator) -> Option<f64> {
        match which {
            SEstimator::S1 => Some(self.s1),
            SEstimator::NHe => self.nhe,
            SEstimator::S2 => self.s2,
            SEstimator::S3 => self.s3,
        }
    }
}

impl HeteroPoint {
    /// Final variance `Ŝ + σ̂²_f̂/M` for one estimator and covariance form.
    pub fn variance(&self, which: SEstimator, form: CovarianceForm) -> Option<VarianceValue> {
        let s = match form {
            CovarianceForm::Exact => self.exact.as_ref()?.get(which)?,
            CovarianceForm::Approximate => self.approx.get(which)?,
        };
        Some(VarianceValue::new(s + self.fhat_term))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroskedasticReport {
    pub ensemble_size: usize,
    pub approximated_only: bool,
    /// False when a single member leaves the weight-variability term unestimated.
    pub weight_variability_captured: bool,
    pub points: Vec<HeteroPoint>,
}

/// Evaluate Ŝ1, Ŝ_NHe, Ŝ2 and Ŝ3 for the z vectors of one query point.
///
/// Ŝ2 and Ŝ3 use the closed forms
/// `Ŝ2 = (M ν̂ᵀμ̂ - Ŝ1)/(M-1)` and
/// `Ŝ3 = (M² μ̂ᵀÛμ̂ - M V̂ - 2(M-1) Ŝ2) / ((M-1)(M-2))`.
pub fn s_values(zs: &[&[f64]], materials: &[HcMaterial]) -> SValues {
    let m = zs.len();
    let n = zs[0].len();
    let mf = m as f64;
    let mut mu = vec![0.0; n];
    let mut nu = vec![0.0; n];
    let mut applied = vec![0.0; n];
    let mut s1 = 0.0;
    for (z, mat) in zs.iter().zip(materials) {
        mat.apply_into(z, &mut applied);
        s1 += dot(z, &applied);
        for i in 0..n {
            mu[i] += z[i];
            nu[i] += applied[i];
        }
    }
    mu.iter_mut().for_each(|v| *v /= mf);
    nu.iter_mut().for_each(|v| *v /= mf);
    s1 /= mf;

    if m < 2 {
        return SValues { s1, nhe: None, s2: None, s3: None };
    }
    let nhe = dot(&nu, &mu);
    let s2 = (mf * nhe - s1) / (mf - 1.0);
    if m < 3 {
        return SValues { s1, nhe: Some(nhe), s2: Some(s2), s3: None };
    }

    // Û = (1/M) Σ_k Σ̂_k; quadratic forms in Û average those in each Σ̂_k.
    let pooled = |v: &[f64]| materials.iter().map(|mat| mat.quad(v, v)).sum::<f64>() / mf;
    let mu_u_mu = pooled(&mu);
    let v_hat = zs.iter().map(|z| pooled(z)).sum::<f64>() / mf;
    let s3 = (mf * mf * mu_u_mu - mf * v_hat - 2.0 * (mf - 1.0) * s2) / ((mf - 1.0) * (mf - 2.0));
    SValues { s1, nhe: Some(nhe), s2: Some(s2), s3: Some(s3) }
}

/// Heteroskedastic variance estimates at every query point of `bundle`.
/// With `approximate` set only the `Ω̂` form is computed; otherwise both forms are.
pub fn s_estimators(ensemble: &ElmEnsemble, bundle: &PredictionBundle, approximate: bool) -> Result<HeteroskedasticReport> {
    check_sizes(ensemble, bundle)?;
    let m = bundle.ensemble_size();
    let approx_mats =
        ensemble.members.iter().map(|e| hc_material(e, true)).collect::<Result<Vec<_>>>()?;
    let exact_mats = if approximate {
        None
    } else {
        Some(ensemble.members.iter().map(|e| hc_material(e, false)).collect::<Result<Vec<_>>>()?)
    };
    let fhat = if m >= 2 { Some(sigma2_fhat(bundle)?) } else { None };

    let points = (0..bundle.n_points())
        .map(|q| {
            let zs: Vec<&[f64]> = bundle.z.iter().map(|z| column(z, q)).collect();
            HeteroPoint {
                exact: exact_mats.as_ref().map(|mats| s_values(&zs, mats)),
                approx: s_values(&zs, &approx_mats),
                fhat_term: fhat.as_ref().map_or(0.0, |f| f[q] / m as f64),
            }
        })
        .collect();
    Ok(HeteroskedasticReport {
        ensemble_size: m,
        approximated_only: approximate,
        weight_variability_captured: m >= 2,
        points,
    })
}
