//! Repeated-experiment harness: fixed design, ground-truth baseline, then `K`
//! repetitions that redraw noise and weights and score every variance estimator.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::elm::{fit_ensemble_redrawing, member_seed, ElmConfig, ElmEnsemble};
use crate::error::{ElmError, Result};
use crate::metrics::{mse_re, se_e_re, CoverageCounter, CoverageCurve, MeanSd, MetricRow, Split};
use crate::numerics::{derive_seed, rng_from_seed, Mat, Vector};
use crate::par::map_indexed;
use crate::synthetic::{fmt_real, ground_truth, with_outputs, GeneratorKind, GeneratorSpec, GroundTruth, GroundTruthSettings, NoiseFamily};
use crate::variance::{estimate, CovarianceForm, Estimator};

/// Upper bound on `M · n · query-chunk` floats held in `z` matrices at once.
const Z_BUDGET: usize = 4_000_000;
const REPETITION_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    pub noise: NoiseFamily,
    pub n_train: usize,
    pub n_test: usize,
    /// Evenly spaced points along [`GeneratorKind::grid`], scored for coverage only.
    pub grid_points: usize,
    /// Points whose raw ground-truth predictions are exported as `g` samples.
    pub probes: Vec<Vec<f64>>,
    pub elm: ElmConfig,
    pub ensemble_sizes: Vec<usize>,
    pub repetitions: usize,
    pub gt_replications: usize,
    pub estimators: Vec<Estimator>,
    pub form: CovarianceForm,
    /// Interval half-width multiplier for coverage.
    pub z: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Settings of the published protocol for each generator, at desk scale
    /// (`K = 200`, `R = 2000`). The 1-D problem maps its domain onto `[0, 1]`
    /// before the hidden layer.
    pub fn defaults_for(generator: GeneratorKind) -> Self {
        let (n_train, neurons, grid_points, probe, form) = match generator {
            GeneratorKind::Trapeze1d => (60, 4, 200, vec![PI / 4.0], CovarianceForm::Exact),
            GeneratorKind::FriedmanHomo => (500, 91, 101, vec![0.5; 5], CovarianceForm::Approximate),
            GeneratorKind::FriedmanHetero => (1000, 109, 101, vec![0.5; 5], CovarianceForm::Approximate),
        };
        ExperimentConfig {
            generator,
            noise: generator.default_noise(),
            n_train,
            n_test: 1000,
            grid_points,
            probes: vec![probe],
            elm: ElmConfig { scaler: generator.domain_scaler(), ..ElmConfig::new(neurons, 0.0) },
            ensemble_sizes: vec![5, 10, 20, 100],
            repetitions: 200,
            gt_replications: 2000,
            estimators: Estimator::ALL.to_vec(),
            form,
            z: 1.96,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.elm.validate()?;
        if self.n_train == 0 {
            return Err(ElmError::InvalidParameter("experiment needs training points".into()));
        }
        if self.repetitions == 0 {
            return Err(ElmError::InvalidParameter("experiment needs at least one repetition".into()));
        }
        if self.ensemble_sizes.is_empty() || self.ensemble_sizes.contains(&0) {
            return Err(ElmError::InvalidParameter("ensemble sizes must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(ElmError::InvalidParameter("no estimator requested".into()));
        }
        let d = self.generator.input_dim();
        if let Some(p) = self.probes.iter().find(|p| p.len() != d) {
            return Err(ElmError::Dimension(format!("probe {p:?} is not {d}-dimensional")));
        }
        Ok(())
    }

    fn sizes(&self) -> Vec<usize> {
        let mut s = self.ensemble_sizes.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Column ranges of the query matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLayout {
    pub train: Range<usize>,
    pub test: Range<usize>,
    pub grid: Range<usize>,
    pub probes: Range<usize>,
}

impl QueryLayout {
    fn new(n_train: usize, n_test: usize, grid: usize, probes: usize) -> Self {
        let a = n_train;
        let b = a + n_test;
        let c = b + grid;
        QueryLayout { train: 0..a, test: a..b, grid: b..c, probes: c..c + probes }
    }

    pub fn len(&self) -> usize {
        self.probes.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, s: Split) -> Range<usize> {
        match s {
            Split::Train => self.train.clone(),
            Split::Test => self.test.clone(),
        }
    }

    pub fn region(&self, i: usize) -> &'static str {
        if self.train.contains(&i) {
            "train"
        } else if self.test.contains(&i) {
            "test"
        } else if self.grid.contains(&i) {
            "grid"
        } else {
            "probe"
        }
    }
}

/// Everything needed to rerun repetitions: the fixed design and query points.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub spec: GeneratorSpec,
    pub x_train: Mat,
    pub x_test: Mat,
    pub query: Mat,
    pub layout: QueryLayout,
}

pub fn design(config: &ExperimentConfig) -> Result<Design> {
    config.validate()?;
    let kind = config.generator;
    let spec = GeneratorSpec { kind, n: config.n_train, noise: config.noise, seed: config.seed, noise_free: false };
    let x_train = kind.sample_inputs(config.n_train, &mut rng_from_seed(derive_seed(config.seed, 0)));
    let x_test = kind.sample_inputs(config.n_test, &mut rng_from_seed(derive_seed(config.seed, 1)));
    let grid = kind.grid(config.grid_points);
    let d = kind.input_dim();
    let probes = Mat::from_fn(d, config.probes.len(), |i, j| config.probes[j][i]);
    let layout = QueryLayout::new(config.n_train, config.n_test, config.grid_points, config.probes.len());
    let mut query = Mat::zeros(d, layout.len());
    for (block, range) in [(&x_train, &layout.train), (&x_test, &layout.test), (&grid, &layout.grid), (&probes, &layout.probes)] {
        if !range.is_empty() {
            query.columns_mut(range.start, range.len()).copy_from(block);
        }
    }
    Ok(Design { spec, x_train, x_test, query, layout })
}

/// Outcome of one repetition. Standard deviations are floored at zero and
/// `NaN` where the estimator is undefined for that ensemble size.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionOutcome {
    /// `[size][estimator][point]`.
    pub sd: Vec<Vec<Vec<f64>>>,
    /// `[size][point]`.
    pub prediction: Vec<Vec<f64>>,
    /// `[size]` (train, test) prediction scores; test is `None` without test points.
    pub scores: Vec<(crate::metrics::PredictionScores, Option<crate::metrics::PredictionScores>)>,
    /// `[size][estimator]` count of points with a negative raw estimate.
    pub negatives: Vec<Vec<usize>>,
    /// Members refitted because their first weight draw was rank deficient.
    pub redraws: usize,
}

/// Fit one repetition on `design` and evaluate every requested estimator.
pub fn run_repetition(config: &ExperimentConfig, design: &Design, k: usize) -> Result<RepetitionOutcome> {
    let rep_seed = derive_seed(derive_seed(config.seed, 3), k as u64);
    let data = with_outputs(&design.spec, design.x_train.clone(), derive_seed(rep_seed, 0));
    let sizes = config.sizes();
    let max_m = *sizes.last().unwrap();
    let seeds: Vec<u64> = (0..max_m).map(|m| member_seed(derive_seed(rep_seed, 1), m)).collect();
    let (full, redraws) = fit_ensemble_redrawing(&config.elm, &seeds, &data.x, &data.y)?;
    let ensembles: Vec<ElmEnsemble> = sizes.iter().map(|&m| full.prefix(m)).collect();

    let test = (config.n_test > 0).then(|| with_outputs(&design.spec, design.x_test.clone(), derive_seed(rep_seed, 2)));
    let q = design.layout.len();
    let n_est = config.estimators.len();
    let mut sd = vec![vec![vec![f64::NAN; q]; n_est]; sizes.len()];
    let mut prediction = vec![vec![0.0; q]; sizes.len()];
    let mut negatives = vec![vec![0usize; n_est]; sizes.len()];

    let chunk = (Z_BUDGET / (max_m * config.n_train).max(1)).max(1);
    let mut start = 0;
    while start < q {
        let len = chunk.min(q - start);
        let bundle = full.predict(&design.query.columns(start, len).into_owned())?;
        for (s, (&m, ens)) in sizes.iter().zip(&ensembles).enumerate() {
            let sub = bundle.prefix(m);
            prediction[s][start..start + len].copy_from_slice(sub.prediction.as_slice());
            let table = estimate(ens, &sub, &config.estimators, config.form)?;
            for (e, col) in table.values.iter().enumerate() {
                for (j, v) in col.iter().enumerate() {
                    if let Some(v) = v {
                        sd[s][e][start + j] = v.std_dev();
                        negatives[s][e] += v.negative as usize;
                    }
                }
            }
        }
        start += len;
    }

    let scores = ensembles
        .iter()
        .enumerate()
        .map(|(s, ens)| -> Result<_> {
            let train = mse_re(data.y.as_slice(), ens.fitted().as_slice())?;
            let test_scores = match &test {
                Some(t) => Some(mse_re(t.y.as_slice(), &prediction[s][design.layout.test.clone()])?),
                None => None,
            };
            Ok((train, test_scores))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepetitionOutcome { sd, prediction, scores, negatives, redraws })
}

/// Mean and spread of one score over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub ensemble_size: usize,
    pub split: Split,
    /// Estimator name, `truth` for the ground-truth baseline, `model` for prediction scores.
    pub source: String,
    pub metric: String,
    pub stat: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub repetition: usize,
    pub ensemble_size: usize,
    pub split: Split,
    pub mse: f64,
    pub re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub ensemble_size: usize,
    pub curve: CoverageCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub design: Design,
    pub ground_truth: GroundTruth,
    pub rows: Vec<MetricRow>,
    pub prediction_rows: Vec<PredictionRow>,
    pub summary: Vec<SummaryRow>,
    pub coverage: Vec<CoverageEntry>,
    /// `[size][estimator]` negative raw estimates summed over repetitions and points.
    pub negatives: Vec<Vec<usize>>,
    pub notes: Vec<String>,
}

impl ExperimentResult {
    pub fn mean_of(&self, m: usize, split: Split, source: &str, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.ensemble_size == m && r.split == split && r.source == source && r.metric == metric)
            .map(|r| r.stat.mean)
    }

    pub fn coverage_for(&self, m: usize, estimator: Estimator) -> Option<&CoverageCurve> {
        self.coverage
            .iter()
            .find(|c| c.ensemble_size == m && c.curve.estimator == estimator.name())
            .map(|c| &c.curve)
    }
}

/// Run the whole protocol: ground truth, then every repetition.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let design = design(config)?;
    let sizes = config.sizes();
    let settings = GroundTruthSettings {
        elm: config.elm.clone(),
        ensemble_sizes: sizes.clone(),
        replications: config.gt_replications,
        seed: derive_seed(config.seed, 2),
        tracked: design.layout.probes.clone().collect(),
        fixed_weights: false,
    };
    let gt = ground_truth(&design.spec, &design.x_train, &design.query, &settings)?;
    let truth_sd: Vec<Vector> = sizes.iter().map(|&m| gt.sd(m).unwrap()).collect();

    let mut notes = Vec::new();
    for &e in &config.estimators {
        for &m in &sizes {
            if m < e.min_members() {
                notes.push(format!("{e} skipped for M={m}: needs at least {} members", e.min_members()));
            }
        }
    }

    let n_est = config.estimators.len();
    let q = design.layout.len();
    let mut counters: Vec<Vec<CoverageCounter>> =
        sizes.iter().map(|_| (0..n_est).map(|_| CoverageCounter::new(q, config.z)).collect()).collect();
    let mut negatives = vec![vec![0usize; n_est]; sizes.len()];
    let mut redraws = 0;
    let mut rows = Vec::new();
    let mut prediction_rows = Vec::new();
    let splits: Vec<Split> =
        [Split::Train, Split::Test].into_iter().filter(|s| !design.layout.split(*s).is_empty()).collect();

    let mut start = 0;
    while start < config.repetitions {
        let len = REPETITION_CHUNK.min(config.repetitions - start);
        let outcomes = map_indexed(len, |i| run_repetition(config, &design, start + i));
        for (i, outcome) in outcomes.into_iter().enumerate() {
            let k = start + i;
            let out = outcome?;
            redraws += out.redraws;
            for (s, &m) in sizes.iter().enumerate() {
                let (train, test) = out.scores[s];
                prediction_rows.push(PredictionRow { repetition: k, ensemble_size: m, split: Split::Train, mse: train.mse, re: train.re });
                if let Some(t) = test {
                    prediction_rows.push(PredictionRow { repetition: k, ensemble_size: m, split: Split::Test, mse: t.mse, re: t.re });
                }
                for (e, &est) in config.estimators.iter().enumerate() {
                    negatives[s][e] += out.negatives[s][e];
                    if m < est.min_members() {
                        continue;
                    }
                    counters[s][e].record(gt.f.as_slice(), &out.prediction[s], &out.sd[s][e])?;
                    for &split in &splits {
                        let r = design.layout.split(split);
                        let scores = se_e_re(&out.sd[s][e][r.clone()], &truth_sd[s].as_slice()[r])?;
                        rows.push(MetricRow {
                            repetition: k,
                            ensemble_size: m,
                            split,
                            estimator: est.name().to_string(),
                            se: scores.se,
                            e: scores.e,
                            re: scores.re,
                        });
                    }
                }
            }
        }
        start += len;
    }

    let summary = summarize(&rows, &prediction_rows, &gt, &design.layout, &sizes, &config.estimators, &splits)?;
    let coverage = sizes
        .iter()
        .enumerate()
        .flat_map(|(s, &m)| {
            config
                .estimators
                .iter()
                .enumerate()
                .filter(move |(_, est)| m >= est.min_members())
                .map(|(e, est)| (s, m, e, *est))
                .collect::<Vec<_>>()
        })
        .map(|(s, m, e, est)| CoverageEntry { ensemble_size: m, curve: counters[s][e].finish(est.name()) })
        .collect();

    for (s, &m) in sizes.iter().enumerate() {
        for (e, est) in config.estimators.iter().enumerate() {
            if negatives[s][e] > 0 {
                notes.push(format!("{est} at M={m}: {} negative raw estimates floored at zero", negatives[s][e]));
            }
        }
    }
    if redraws > 0 {
        notes.push(format!("{redraws} rank-deficient member weight draws redrawn across repetitions"));
    }
    if gt.redraws > 0 {
        notes.push(format!("{} rank-deficient member weight draws redrawn in the ground truth", gt.redraws));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        design,
        ground_truth: gt,
        rows,
        prediction_rows,
        summary,
        coverage,
        negatives,
        notes,
    })
}

fn summarize(
    rows: &[MetricRow],
    prediction_rows: &[PredictionRow],
    gt: &GroundTruth,
    layout: &QueryLayout,
    sizes: &[usize],
    estimators: &[Estimator],
    splits: &[Split],
) -> Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    for &m in sizes {
        let truth = gt.sd(m).unwrap();
        for &split in splits {
            let r = layout.split(split);
            let se = crate::metrics::median(&truth.as_slice()[r])?;
            out.push(SummaryRow { ensemble_size: m, split, source: "truth".into(), metric: "se".into(), stat: MeanSd { mean: se, sd: None } });
            for est in estimators.iter().filter(|e| m >= e.min_members()) {
                let sel: Vec<&MetricRow> =
                    rows.iter().filter(|r| r.ensemble_size == m && r.split == split && r.estimator == est.name()).collect();
                for metric in ["se", "e", "re"] {
                    let vals: Vec<f64> = sel.iter().map(|r| match metric { "se" => r.se, "e" => r.e, _ => r.re }).collect();
                    out.push(SummaryRow { ensemble_size: m, split, source: est.name().into(), metric: metric.into(), stat: MeanSd::of(&vals)? });
                }
            }
            let preds: Vec<&PredictionRow> =
                prediction_rows.iter().filter(|r| r.ensemble_size == m && r.split == split).collect();
            if !preds.is_empty() {
                let mse: Vec<f64> = preds.iter().map(|r| r.mse).collect();
                let re: Vec<f64> = preds.iter().map(|r| r.re).collect();
                out.push(SummaryRow { ensemble_size: m, split, source: "model".into(), metric: "MSE".into(), stat: MeanSd::of(&mse)? });
                out.push(SummaryRow { ensemble_size: m, split, source: "model".into(), metric: "RE".into(), stat: MeanSd::of(&re)? });
            }
        }
    }
    Ok(out)
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// `M,split,source,metric,mean,sd`; `sd` is empty for a single repetition.
pub fn write_summary_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "M,split,source,metric,mean,sd")?;
    for r in &result.summary {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.ensemble_size,
            r.split.name(),
            r.source,
            r.metric,
            fmt_real(r.stat.mean),
            opt_real(r.stat.sd)
        )?;
    }
    Ok(())
}

pub fn write_rows_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "repetition,M,split,estimator,se,e,re")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.repetition,
            r.ensemble_size,
            r.split.name(),
            r.estimator,
            fmt_real(r.se),
            fmt_real(r.e),
            fmt_real(r.re)
        )?;
    }
    writeln!(out)?;
    writeln!(out, "repetition,M,split,MSE,RE")?;
    for r in &result.prediction_rows {
        writeln!(out, "{},{},{},{},{}", r.repetition, r.ensemble_size, r.split.name(), fmt_real(r.mse), fmt_real(r.re))?;
    }
    Ok(())
}

/// One row per query point and coverage curve, with the ground truth alongside.
pub fn write_coverage_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    let d = result.design.query.nrows();
    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(out, "M,estimator,point,region,{},f,true_mean,true_sd,coverage", xs.join(","))?;
    let gt = &result.ground_truth;
    for entry in &result.coverage {
        let gi = gt.index_of(entry.ensemble_size).unwrap();
        for (j, c) in entry.curve.coverage.iter().enumerate() {
            let x: Vec<String> = (0..d).map(|i| fmt_real(result.design.query[(i, j)])).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                entry.ensemble_size,
                entry.curve.estimator,
                j,
                result.design.layout.region(j),
                x.join(","),
                fmt_real(gt.f[j]),
                fmt_real(gt.mean[gi][j]),
                fmt_real(gt.variance[gi][j].sqrt()),
                fmt_real(*c)
            )?;
        }
    }
    Ok(())
}

/// Standardized ground-truth errors `g = (f̂ - f)/sd[f̂]` at the probe points.
pub fn write_g_samples_csv<W: Write>(result: &ExperimentResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "M,probe,replication,g")?;
    let gt = &result.ground_truth;
    for &m in &gt.ensemble_sizes {
        for (p, samples) in gt.g_samples(m).unwrap_or_default().iter().enumerate() {
            for (r, g) in samples.iter().enumerate() {
                writeln!(out, "{m},{p},{r},{}", fmt_real(*g))?;
            }
        }
    }
    Ok(())
}
