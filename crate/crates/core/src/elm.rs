//! Extreme learning machines: random sigmoid/tanh features followed by a
//! (ridge) least-squares readout, and ensembles of independently re-drawn ELMs.
//!
//! Each trained member keeps the thin SVD of its hidden-layer matrix `H`. The
//! one factorization gives the output weights, the leverages, the effective
//! degrees of freedom and the `z = H^{αT} h` vectors used by the variance
//! estimators.

use serde::{Deserialize, Serialize};

use crate::error::{ElmError, Result};
use crate::numerics::{derive_seed, rng_from_seed, thin_svd, uniform_fill, Mat, Rng, ThinSvd, Vector};
use crate::par::map_indexed;

/// Relative singular-value threshold below which an unregularized fit is refused.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            Activation::Tanh => t.tanh(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = ElmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" | "logistic" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(ElmError::InvalidParameter(format!("unknown activation '{other}'"))),
        }
    }
}

/// Optional per-coordinate affine map `x ↦ (x - offset) * scale`, applied
/// before the hidden layer. Not used unless set on the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaler {
    /// Scaler sending the observed range of every input coordinate to `[0, 1]`.
    pub fn min_max(x: &Mat) -> Self {
        let mut offset = Vec::with_capacity(x.nrows());
        let mut scale = Vec::with_capacity(x.nrows());
        for row in x.row_iter() {
            let lo = row.min();
            let hi = row.max();
            offset.push(lo);
            scale.push(if hi > lo { 1.0 / (hi - lo) } else { 1.0 });
        }
        InputScaler { offset, scale }
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        if x.nrows() != self.offset.len() {
            return Err(ElmError::Dimension(format!(
                "scaler expects {} input rows, got {}",
                self.offset.len(),
                x.nrows()
            )));
        }
        Ok(Mat::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.offset[i]) * self.scale[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    pub neurons: usize,
    /// Tikhonov factor; zero selects the plain least-squares readout.
    pub alpha: f64,
    pub activation: Activation,
    pub weight_low: f64,
    pub weight_high: f64,
    /// Seed used by [`fit_single`] callers that do not manage their own stream.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<InputScaler>,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            neurons: 10,
            alpha: 0.0,
            activation: Activation::Sigmoid,
            weight_low: -1.0,
            weight_high: 1.0,
            seed: 0,
            scaler: None,
        }
    }
}

impl ElmConfig {
    pub fn new(neurons: usize, alpha: f64) -> Self {
        ElmConfig { neurons, alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.neurons == 0 {
            return Err(ElmError::InvalidParameter("number of neurons must be at least 1".into()));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(ElmError::InvalidParameter(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.weight_low < self.weight_high) {
            return Err(ElmError::InvalidParameter(format!(
                "weight range [{}, {}) is empty",
                self.weight_low, self.weight_high
            )));
        }
        Ok(())
    }

    fn prepare_inputs(&self, x: &Mat) -> Result<Mat> {
        match &self.scaler {
            Some(s) => s.apply(x),
            None => Ok(x.clone()),
        }
    }
}

/// Hidden-layer matrix `H` (n × N) with `H_ij = g(x_iᵀ w_j + b_j)`.
///
/// `weights` is `(d+1) × N`: input weights stacked over a final row of biases.
/// `x` is `d × n`, one training point per column.
pub fn hidden_map(weights: &Mat, x: &Mat, activation: Activation) -> Result<Mat> {
    let d = x.nrows();
    if weights.nrows() != d + 1 {
        return Err(ElmError::Dimension(format!(
            "weights have {} rows, inputs have dimension {d} (expected {} rows)",
            weights.nrows(),
            d + 1
        )));
    }
    let bias = weights.row(d);
    let mut h = x.transpose() * weights.rows(0, d);
    for mut row in h.row_iter_mut() {
        for (v, b) in row.iter_mut().zip(bias.iter()) {
            *v = activation.apply(*v + b);
        }
    }
    Ok(h)
}

/// One fitted ELM.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedElm {
    pub seed: u64,
    /// `(d+1) × N` input weights and biases.
    pub weights: Mat,
    pub beta: Vector,
    pub svd: ThinSvd,
    /// Eigenvalues of `HᵀH` (squared singular values, zero padded to length N).
    pub lambda: Vector,
    pub residuals: Vector,
    /// Diagonal of `P = H H^α`.
    pub leverage: Vector,
    pub alpha: f64,
    pub activation: Activation,
    pub scaler: Option<InputScaler>,
}

/// Traces of the smoother `P` and the per-member degrees-of-freedom term `2Tr{P} - Tr{P²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDof {
    pub trace_p: f64,
    pub trace_p2: f64,
    pub gamma: f64,
}

impl TrainedElm {
    /// Fit the readout on a given hidden-layer matrix. `weights` is kept for prediction.
    pub fn from_hidden(
        seed: u64,
        weights: Mat,
        activation: Activation,
        alpha: f64,
        scaler: Option<InputScaler>,
        h: &Mat,
        y: &Vector,
    ) -> Result<Self> {
        let (n, neurons) = h.shape();
        if y.len() != n {
            return Err(ElmError::Dimension(format!("{n} training points but {} targets", y.len())));
        }
        if n == 0 {
            return Err(ElmError::DegreesOfFreedom("no training points".into()));
        }
        if weights.ncols() != neurons {
            return Err(ElmError::Dimension(format!(
                "{} weight columns for {neurons} hidden neurons",
                weights.ncols()
            )));
        }
        if alpha == 0.0 && n <= neurons {
            return Err(ElmError::DegreesOfFreedom(format!(
                "unregularized fit needs more training points than neurons (n = {n}, N = {neurons}); \
                 use alpha > 0"
            )));
        }
        let svd = thin_svd(h)?;
        if alpha == 0.0 {
            let ratio = svd.rank_ratio();
            if ratio < RANK_TOLERANCE {
                return Err(ElmError::RankDeficient { ratio });
            }
        }

        let s = &svd.singular_values;
        let k = s.len();
        let shrink = Vector::from_fn(k, |j, _| s[j] / (s[j] * s[j] + alpha));
        let uty = svd.u.tr_mul(y);
        let beta = &svd.v * uty.component_mul(&shrink);

        let mut leverage = Vector::zeros(n);
        for j in 0..k {
            let w = s[j] * s[j] / (s[j] * s[j] + alpha);
            for i in 0..n {
                leverage[i] += svd.u[(i, j)] * svd.u[(i, j)] * w;
            }
        }
        let residuals = y - h * &beta;
        let mut lambda = Vector::zeros(neurons);
        for j in 0..k {
            lambda[j] = s[j] * s[j];
        }

        Ok(TrainedElm { seed, weights, beta, svd, lambda, residuals, leverage, alpha, activation, scaler })
    }

    pub fn neurons(&self) -> usize {
        self.weights.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn n_train(&self) -> usize {
        self.residuals.len()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.norm_squared()
    }

    /// Hidden activations at query points (`d × q` in, `q × N` out).
    pub fn hidden(&self, x0: &Mat) -> Result<Mat> {
        let x0 = match &self.scaler {
            Some(s) => s.apply(x0)?,
            None => {
                if x0.nrows() != self.input_dim() {
                    return Err(ElmError::Dimension(format!(
                        "query points have dimension {}, model expects {}",
                        x0.nrows(),
                        self.input_dim()
                    )));
                }
                x0.clone()
            }
        };
        hidden_map(&self.weights, &x0, self.activation)
    }

    pub fn predict(&self, x0: &Mat) -> Result<Vector> {
        Ok(self.hidden(x0)? * &self.beta)
    }

    /// Columns are `z = H^{αT} h` for each row `h` of `h0` (result is `n × q`).
    pub fn z_matrix(&self, h0: &Mat) -> Mat {
        let s = &self.svd.singular_values;
        let mut coeff = self.svd.v.tr_mul(&h0.transpose());
        for (j, mut row) in coeff.row_iter_mut().enumerate() {
            row.scale_mut(s[j] / (s[j] * s[j] + self.alpha));
        }
        &self.svd.u * coeff
    }

    pub fn effective_dof(&self) -> EffectiveDof {
        let mut trace_p = 0.0;
        let mut trace_p2 = 0.0;
        for &l in self.lambda.iter() {
            let r = if l == 0.0 && self.alpha == 0.0 { 0.0 } else { l / (l + self.alpha) };
            trace_p += r;
            trace_p2 += r * r;
        }
        EffectiveDof { trace_p, trace_p2, gamma: 2.0 * trace_p - trace_p2 }
    }

    /// `N - Σ (α / (λ_i + α))²`, the closed form of `2Tr{P} - Tr{P²}`.
    pub fn gamma_shortcut(&self) -> f64 {
        if self.alpha == 0.0 {
            return self.neurons() as f64;
        }
        let lost: f64 = self.lambda.iter().map(|&l| (self.alpha / (l + self.alpha)).powi(2)).sum();
        self.neurons() as f64 - lost
    }
}

/// Fit a single ELM, drawing its input weights from `rng`.
pub fn fit_single(config: &ElmConfig, x: &Mat, y: &Vector, rng: &mut Rng) -> Result<TrainedElm> {
    fit_single_seeded(config, x, y, 0, rng)
}

fn fit_single_seeded(config: &ElmConfig, x: &Mat, y: &Vector, seed: u64, rng: &mut Rng) -> Result<TrainedElm> {
    config.validate()?;
    if x.ncols() != y.len() {
        return Err(ElmError::Dimension(format!("{} input columns but {} targets", x.ncols(), y.len())));
    }
    let inputs = config.prepare_inputs(x)?;
    let weights = uniform_fill(rng, inputs.nrows() + 1, config.neurons, config.weight_low, config.weight_high)?;
    let h = hidden_map(&weights, &inputs, config.activation)?;
    TrainedElm::from_hidden(seed, weights, config.activation, config.alpha, config.scaler.clone(), &h, y)
}

/// Fit a member whose weights are drawn from the stream keyed by `seed`.
pub fn fit_member(config: &ElmConfig, x: &Mat, y: &Vector, seed: u64) -> Result<TrainedElm> {
    let mut rng = rng_from_seed(seed);
    fit_single_seeded(config, x, y, seed, &mut rng)
}

/// M independently re-drawn ELMs on the same data, averaged at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmEnsemble {
    pub config: ElmConfig,
    pub members: Vec<TrainedElm>,
    /// `d × n` training inputs.
    pub x: Mat,
    pub y: Vector,
}

/// Seed of member `m` in an ensemble keyed by `master_seed`.
pub fn member_seed(master_seed: u64, m: usize) -> u64 {
    derive_seed(master_seed, m as u64)
}

pub fn fit_ensemble(config: &ElmConfig, m: usize, x: &Mat, y: &Vector, master_seed: u64) -> Result<ElmEnsemble> {
    if m == 0 {
        return Err(ElmError::InvalidParameter("ensemble needs at least one member".into()));
    }
    let seeds: Vec<u64> = (0..m).map(|i| member_seed(master_seed, i)).collect();
    fit_ensemble_with_seeds(config, &seeds, x, y)
}

/// Ensemble with explicitly chosen member seeds (repeating a seed repeats the member).
pub fn fit_ensemble_with_seeds(config: &ElmConfig, seeds: &[u64], x: &Mat, y: &Vector) -> Result<ElmEnsemble> {
    if seeds.is_empty() {
        return Err(ElmError::InvalidParameter("ensemble needs at least one member".into()));
    }
    config.validate()?;
    let members = map_indexed(seeds.len(), |i| fit_member(config, x, y, seeds[i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ElmEnsemble { config: config.clone(), members, x: x.clone(), y: y.clone() })
}

/// Redraws allowed per member in [`fit_ensemble_redrawing`].
pub const MAX_REDRAWS: u64 = 8;

/// Like [`fit_ensemble_with_seeds`], but a member whose weight draw leaves an
/// unregularized `H` rank deficient is refitted with weights from a derived
/// seed. Meant for Monte Carlo loops, where one degenerate draw in 10⁵ would
/// otherwise abort the run. Returns the ensemble and the number of redraws.
pub fn fit_ensemble_redrawing(config: &ElmConfig, seeds: &[u64], x: &Mat, y: &Vector) -> Result<(ElmEnsemble, usize)> {
    if seeds.is_empty() {
        return Err(ElmError::InvalidParameter("ensemble needs at least one member".into()));
    }
    config.validate()?;
    let fitted = map_indexed(seeds.len(), |i| -> Result<(TrainedElm, usize)> {
        let mut attempt = 0;
        loop {
            let seed = if attempt == 0 { seeds[i] } else { derive_seed(seeds[i], attempt) };
            match fit_member(config, x, y, seed) {
                Err(ElmError::RankDeficient { .. }) if attempt < MAX_REDRAWS => attempt += 1,
                other => return other.map(|m| (m, attempt as usize)),
            }
        }
    });
    let mut members = Vec::with_capacity(seeds.len());
    let mut redraws = 0;
    for f in fitted {
        let (m, r) = f?;
        members.push(m);
        redraws += r;
    }
    Ok((ElmEnsemble { config: config.clone(), members, x: x.clone(), y: y.clone() }, redraws))
}

/// Per-query-point quantities for every member.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    /// Per member, `q × N` hidden activations at the query points.
    pub h: Vec<Mat>,
    /// Per member, `n × q`; column `j` is `z_m` for query point `j`.
    pub z: Vec<Mat>,
    /// `M × q` member predictions.
    pub member_predictions: Mat,
    /// Ensemble prediction (mean over members) at each query point.
    pub prediction: Vector,
}

impl PredictionBundle {
    pub fn ensemble_size(&self) -> usize {
        self.z.len()
    }

    pub fn n_points(&self) -> usize {
        self.prediction.len()
    }

    pub fn n_train(&self) -> usize {
        self.z.first().map_or(0, |z| z.nrows())
    }

    /// Bundle restricted to the first `m` members.
    pub fn prefix(&self, m: usize) -> PredictionBundle {
        let m = m.min(self.ensemble_size()).max(1);
        let member_predictions = self.member_predictions.rows(0, m).into_owned();
        let prediction = mean_rows(&member_predictions);
        PredictionBundle {
            h: self.h[..m].to_vec(),
            z: self.z[..m].to_vec(),
            member_predictions,
            prediction,
        }
    }
}

fn mean_rows(m: &Mat) -> Vector {
    let rows = m.nrows() as f64;
    Vector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / rows))
}

impl ElmEnsemble {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn n_train(&self) -> usize {
        self.y.len()
    }

    pub fn neurons(&self) -> usize {
        self.config.neurons
    }

    /// Ensemble restricted to its first `m` members.
    pub fn prefix(&self, m: usize) -> ElmEnsemble {
        ElmEnsemble {
            config: self.config.clone(),
            members: self.members[..m.min(self.members.len()).max(1)].to_vec(),
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }

    /// Ensemble predictions only, without the `z` vectors.
    pub fn predict_values(&self, x0: &Mat) -> Result<Vector> {
        let mut acc = Vector::zeros(x0.ncols());
        for member in &self.members {
            acc += member.predict(x0)?;
        }
        Ok(acc / self.members.len() as f64)
    }

    /// Ensemble fit at the training points.
    pub fn fitted(&self) -> Vector {
        let mut acc = Vector::zeros(self.y.len());
        for member in &self.members {
            acc += &self.y - &member.residuals;
        }
        acc / self.members.len() as f64
    }

    pub fn predict(&self, x0: &Mat) -> Result<PredictionBundle> {
        let expected = self.x.nrows();
        if x0.nrows() != expected {
            return Err(ElmError::Dimension(format!(
                "query points have dimension {}, training inputs have {expected}",
                x0.nrows()
            )));
        }
        let parts = map_indexed(self.members.len(), |m| -> Result<(Mat, Mat, Vector)> {
            let member = &self.members[m];
            let h = member.hidden(x0)?;
            let z = member.z_matrix(&h);
            let pred = &h * &member.beta;
            Ok((h, z, pred))
        });
        let q = x0.ncols();
        let mut h_all = Vec::with_capacity(parts.len());
        let mut z_all = Vec::with_capacity(parts.len());
        let mut member_predictions = Mat::zeros(parts.len(), q);
        for (m, part) in parts.into_iter().enumerate() {
            let (h, z, pred) = part?;
            member_predictions.row_mut(m).copy_from(&pred.transpose());
            h_all.push(h);
            z_all.push(z);
        }
        let prediction = mean_rows(&member_predictions);
        Ok(PredictionBundle { h: h_all, z: z_all, member_predictions, prediction })
    }
}

/// Outcome of a grid search, with the mean score of every grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSelection<T> {
    pub selected: T,
    pub scores: Vec<(T, f64)>,
}

fn shuffled_indices(n: usize, rng: &mut Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

fn select_columns(x: &Mat, idx: &[usize]) -> Mat {
    Mat::from_fn(x.nrows(), idx.len(), |i, j| x[(i, idx[j])])
}

fn select_entries(y: &Vector, idx: &[usize]) -> Vector {
    Vector::from_fn(idx.len(), |j, _| y[idx[j]])
}

/// Repeated k-fold cross-validation over the number of neurons. Returns the
/// grid value with the smallest mean validation squared error; ties go to the
/// smaller network.
pub fn select_neurons_cv(
    grid: &[usize],
    folds: usize,
    repeats: usize,
    base: &ElmConfig,
    x: &Mat,
    y: &Vector,
    seed: u64,
) -> Result<GridSelection<usize>> {
    if grid.is_empty() {
        return Err(ElmError::EmptyGrid);
    }
    let n = y.len();
    if folds < 2 || folds > n {
        return Err(ElmError::InvalidParameter(format!("{folds} folds for {n} points")));
    }
    if repeats == 0 {
        return Err(ElmError::InvalidParameter("at least one cross-validation repeat".into()));
    }
    let smallest_train = n - n.div_ceil(folds);
    if base.alpha == 0.0 {
        if let Some(&bad) = grid.iter().find(|&&g| g >= smallest_train) {
            return Err(ElmError::DegreesOfFreedom(format!(
                "{bad} neurons with only {smallest_train} points per training fold"
            )));
        }
    }

    let mut totals = vec![0.0; grid.len()];
    let mut count = 0usize;
    for rep in 0..repeats {
        let rep_seed = derive_seed(seed, rep as u64);
        let order = shuffled_indices(n, &mut rng_from_seed(rep_seed));
        for fold in 0..folds {
            let lo = fold * n / folds;
            let hi = (fold + 1) * n / folds;
            let valid: Vec<usize> = order[lo..hi].to_vec();
            let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            let (xt, yt) = (select_columns(x, &train), select_entries(y, &train));
            let (xv, yv) = (select_columns(x, &valid), select_entries(y, &valid));
            let fold_seed = derive_seed(rep_seed, 1 + fold as u64);
            let errors = map_indexed(grid.len(), |g| -> Result<f64> {
                let config = ElmConfig { neurons: grid[g], ..base.clone() };
                let member = fit_member(&config, &xt, &yt, derive_seed(fold_seed, g as u64))?;
                let pred = member.predict(&xv)?;
                Ok((pred - &yv).norm_squared() / yv.len() as f64)
            });
            for (t, e) in totals.iter_mut().zip(errors) {
                *t += e?;
            }
            count += 1;
        }
    }
    let scores: Vec<(usize, f64)> = grid.iter().zip(&totals).map(|(&g, &t)| (g, t / count as f64)).collect();
    let selected = scores
        .iter()
        .fold(None::<(usize, f64)>, |best, &(g, s)| match best {
            Some((bg, bs)) if bs < s || (bs == s && bg <= g) => Some((bg, bs)),
            _ => Some((g, s)),
        })
        .map(|(g, _)| g)
        .expect("non-empty grid");
    Ok(GridSelection { selected, scores })
}

/// Generalized cross-validation over the Tikhonov factor,
/// `GCV(α) = n·RSS(α) / (n - Tr{P(α)})²`, averaged over `draws` weight draws.
/// One SVD per draw serves every grid value. Ties go to the earlier grid value.
pub fn select_alpha_gcv(
    grid: &[f64],
    base: &ElmConfig,
    draws: usize,
    x: &Mat,
    y: &Vector,
    seed: u64,
) -> Result<GridSelection<f64>> {
    if grid.is_empty() {
        return Err(ElmError::EmptyGrid);
    }
    if let Some(bad) = grid.iter().find(|a| !(**a >= 0.0)) {
        return Err(ElmError::InvalidParameter(format!("negative alpha {bad} in grid")));
    }
    if draws == 0 {
        return Err(ElmError::InvalidParameter("at least one weight draw".into()));
    }
    base.validate()?;
    let inputs = base.prepare_inputs(x)?;
    let n = y.len() as f64;
    let per_draw = map_indexed(draws, |dr| -> Result<Vec<f64>> {
        let mut rng = rng_from_seed(derive_seed(seed, dr as u64));
        let w = uniform_fill(&mut rng, inputs.nrows() + 1, base.neurons, base.weight_low, base.weight_high)?;
        let h = hidden_map(&w, &inputs, base.activation)?;
        let svd = thin_svd(&h)?;
        let uty = svd.u.tr_mul(y);
        let y_norm2 = y.norm_squared();
        Ok(grid
            .iter()
            .map(|&alpha| {
                let mut trace = 0.0;
                let mut fit_norm2 = 0.0;
                let mut cross = 0.0;
                for (j, &s) in svd.singular_values.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    let r = s * s / (s * s + alpha);
                    trace += r;
                    fit_norm2 += (r * uty[j]).powi(2);
                    cross += r * uty[j] * uty[j];
                }
                let rss = (y_norm2 - 2.0 * cross + fit_norm2).max(0.0);
                let dof = n - trace;
                if dof <= 0.0 {
                    f64::INFINITY
                } else {
                    n * rss / (dof * dof)
                }
            })
            .collect())
    });
    let mut totals = vec![0.0; grid.len()];
    for scores in per_draw {
        for (t, s) in totals.iter_mut().zip(scores?) {
            *t += s;
        }
    }
    let scores: Vec<(f64, f64)> = grid.iter().zip(&totals).map(|(&a, &t)| (a, t / draws as f64)).collect();
    let mut best = 0;
    for (i, &(_, s)) in scores.iter().enumerate() {
        if s < scores[best].1 {
            best = i;
        }
    }
    Ok(GridSelection { selected: scores[best].0, scores })
}
