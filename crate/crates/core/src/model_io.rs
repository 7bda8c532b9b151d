//! Self-describing JSON container for fitted ensembles.
//!
//! The container stores the config, training data and, per member, the seed,
//! input weights, output weights, singular values, residuals and leverages.
//! Loading refits every member from its stored weights, then checks that the
//! stored quantities agree with the refit so that a tampered or truncated
//! file is rejected instead of silently producing different variances.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::elm::{hidden_map, ElmConfig, ElmEnsemble, TrainedElm};
use crate::error::{ElmError, Result};
use crate::numerics::{Mat, Vector};

pub const FORMAT: &str = "elm-uq-ensemble";
pub const FORMAT_VERSION: u32 = 1;

/// Largest relative disagreement tolerated between stored and refitted reals.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub seed: u64,
    pub weights: Mat,
    pub beta: Vector,
    pub singular_values: Vector,
    pub residuals: Vector,
    pub leverage: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContainer {
    pub format: String,
    pub version: u32,
    pub config: ElmConfig,
    pub x: Mat,
    pub y: Vector,
    pub members: Vec<MemberRecord>,
}

impl ModelContainer {
    pub fn from_ensemble(ens: &ElmEnsemble) -> Self {
        ModelContainer {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            config: ens.config.clone(),
            x: ens.x.clone(),
            y: ens.y.clone(),
            members: ens
                .members
                .iter()
                .map(|m| MemberRecord {
                    seed: m.seed,
                    weights: m.weights.clone(),
                    beta: m.beta.clone(),
                    singular_values: m.svd.singular_values.clone(),
                    residuals: m.residuals.clone(),
                    leverage: m.leverage.clone(),
                })
                .collect(),
        }
    }

    /// Rebuild the ensemble and verify the stored quantities against the refit.
    pub fn into_ensemble(self) -> Result<ElmEnsemble> {
        if self.format != FORMAT {
            return Err(ElmError::InvalidParameter(format!("not an ensemble file (format '{}')", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(ElmError::InvalidParameter(format!("unsupported ensemble file version {}", self.version)));
        }
        if self.members.is_empty() {
            return Err(ElmError::InvalidParameter("ensemble file has no members".into()));
        }
        self.config.validate()?;
        let inputs = match &self.config.scaler {
            Some(s) => s.apply(&self.x)?,
            None => self.x.clone(),
        };
        let members = self
            .members
            .into_iter()
            .enumerate()
            .map(|(i, rec)| {
                let h = hidden_map(&rec.weights, &inputs, self.config.activation)?;
                let elm = TrainedElm::from_hidden(
                    rec.seed,
                    rec.weights,
                    self.config.activation,
                    self.config.alpha,
                    self.config.scaler.clone(),
                    &h,
                    &self.y,
                )?;
                for (name, stored, fresh) in [
                    ("output weights", &rec.beta, &elm.beta),
                    ("singular values", &rec.singular_values, &elm.svd.singular_values),
                    ("residuals", &rec.residuals, &elm.residuals),
                    ("leverages", &rec.leverage, &elm.leverage),
                ] {
                    check_close(i, name, stored, fresh)?;
                }
                Ok(elm)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ElmEnsemble { config: self.config, members, x: self.x, y: self.y })
    }
}

fn check_close(member: usize, name: &str, stored: &Vector, fresh: &Vector) -> Result<()> {
    if stored.len() != fresh.len() {
        return Err(ElmError::Dimension(format!(
            "member {member}: stored {name} have length {}, expected {}",
            stored.len(),
            fresh.len()
        )));
    }
    let scale = fresh.amax().max(1.0);
    let drift = (stored - fresh).amax() / scale;
    if !(drift <= CONSISTENCY_TOLERANCE) {
        return Err(ElmError::InvalidParameter(format!(
            "member {member}: stored {name} disagree with the refit (relative drift {drift:.3e})"
        )));
    }
    Ok(())
}

pub fn save<W: Write>(ens: &ElmEnsemble, out: W) -> Result<()> {
    serde_json::to_writer(out, &ModelContainer::from_ensemble(ens))
        .map_err(|e| ElmError::InvalidParameter(format!("cannot write ensemble: {e}")))
}

pub fn load<R: Read>(input: R) -> Result<ElmEnsemble> {
    let container: ModelContainer = serde_json::from_reader(input)
        .map_err(|e| ElmError::InvalidParameter(format!("cannot read ensemble file: {e}")))?;
    container.into_ensemble()
}
