//! Browser bindings for the 1-D demo page. Every export takes its parameters
//! as a JSON object (missing keys fall back to defaults) and returns JSON.

use elm_uq::elm::{fit_ensemble, ElmConfig, ElmEnsemble};
use elm_uq::experiment::{run_experiment, ExperimentConfig};
use elm_uq::numerics::derive_seed;
use elm_uq::synthetic::{ground_truth, sample_trapeze1d, Dataset, GeneratorKind, GeneratorSpec, GroundTruthSettings};
use elm_uq::variance::{estimate_at, CovarianceForm, Estimator};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const KIND: GeneratorKind = GeneratorKind::Trapeze1d;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoParams {
    pub n: usize,
    pub neurons: usize,
    pub members: usize,
    pub alpha: f64,
    pub seed: u64,
    pub grid: usize,
    pub z: f64,
    pub reps: usize,
    pub gt_reps: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams { n: 60, neurons: 4, members: 10, alpha: 0.0, seed: 1, grid: 121, z: 1.96, reps: 40, gt_reps: 200 }
    }
}

impl DemoParams {
    pub fn from_json(json: &str) -> Result<Self, String> {
        if json.trim().is_empty() {
            return Ok(DemoParams::default());
        }
        serde_json::from_str(json).map_err(|e| format!("bad parameters: {e}"))
    }

    fn check(&self) -> Result<(), String> {
        if self.n == 0 || self.n > 5000 {
            return Err("n must be between 1 and 5000".into());
        }
        if self.members == 0 || self.members > 200 {
            return Err("members must be between 1 and 200".into());
        }
        if self.grid < 2 || self.grid > 2000 {
            return Err("grid must be between 2 and 2000".into());
        }
        if self.z.is_nan() || self.z <= 0.0 {
            return Err("z must be positive".into());
        }
        Ok(())
    }

    fn elm(&self) -> ElmConfig {
        ElmConfig { scaler: KIND.domain_scaler(), ..ElmConfig::new(self.neurons, self.alpha) }
    }

    fn fit(&self) -> Result<(Dataset, ElmEnsemble), String> {
        self.check()?;
        let data = sample_trapeze1d(self.n, self.seed).map_err(err)?;
        let ens = fit_ensemble(&self.elm(), self.members, &data.x, &data.y, derive_seed(self.seed, 1)).map_err(err)?;
        Ok((data, ens))
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Debug, Serialize)]
pub struct FitBand {
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
    pub grid_x: Vec<f64>,
    pub truth: Vec<f64>,
    pub prediction: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub sigma2_eps: Option<f64>,
    pub notes: Vec<String>,
}

/// One ensemble fit with the interval `f̂ ± z·σ̂_BR` on an even grid.
pub fn fit_band(p: &DemoParams) -> Result<FitBand, String> {
    let (data, ens) = p.fit()?;
    let grid = KIND.grid(p.grid);
    let est = estimate_at(&ens, &grid, &[Estimator::BR], CovarianceForm::Exact).map_err(err)?;
    let sd: Vec<f64> = est.values[0].iter().map(|v| v.map_or(f64::NAN, |v| v.std_dev())).collect();
    let lower = est.prediction.iter().zip(&sd).map(|(f, s)| f - p.z * s).collect();
    let upper = est.prediction.iter().zip(&sd).map(|(f, s)| f + p.z * s).collect();
    Ok(FitBand {
        train_x: data.x.row(0).iter().copied().collect(),
        train_y: data.y.iter().copied().collect(),
        grid_x: grid.row(0).iter().copied().collect(),
        truth: KIND.mean(&grid).iter().copied().collect(),
        prediction: est.prediction,
        lower,
        upper,
        sigma2_eps: est.sigma2_eps,
        notes: est.notes,
    })
}

#[derive(Debug, Serialize)]
pub struct EstimatorProfile {
    pub name: String,
    /// One value per grid point (standard deviation or coverage); `None` where undefined.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub grid_x: Vec<f64>,
    pub true_sd: Vec<f64>,
    pub estimators: Vec<EstimatorProfile>,
    pub notes: Vec<String>,
}

/// Every estimator's standard deviation on the grid next to a simulated
/// ground truth from `gt_reps` refits on fresh noise.
pub fn compare_estimators(p: &DemoParams) -> Result<Comparison, String> {
    let (data, ens) = p.fit()?;
    let grid = KIND.grid(p.grid);
    let est = estimate_at(&ens, &grid, &Estimator::ALL, CovarianceForm::Exact).map_err(err)?;
    let spec = GeneratorSpec::new(KIND, p.n, p.seed);
    let settings = GroundTruthSettings {
        elm: p.elm(),
        ensemble_sizes: vec![p.members],
        replications: p.gt_reps,
        seed: derive_seed(p.seed, 2),
        tracked: Vec::new(),
        fixed_weights: false,
    };
    let gt = ground_truth(&spec, &data.x, &grid, &settings).map_err(err)?;
    Ok(Comparison {
        grid_x: grid.row(0).iter().copied().collect(),
        true_sd: gt.sd(p.members).expect("size requested").iter().copied().collect(),
        estimators: est
            .estimators
            .iter()
            .zip(&est.values)
            .map(|(e, col)| EstimatorProfile {
                name: e.name().into(),
                values: col.iter().map(|v| v.map(|v| v.std_dev())).collect(),
            })
            .collect(),
        notes: est.notes,
    })
}

#[derive(Debug, Serialize)]
pub struct CoverageDemo {
    pub grid_x: Vec<f64>,
    pub true_bias: Vec<f64>,
    pub nominal: f64,
    pub curves: Vec<EstimatorProfile>,
}

/// Empirical coverage of `f̂ ± z·σ̂` on the grid over `reps` repetitions.
pub fn coverage_curves(p: &DemoParams) -> Result<CoverageDemo, String> {
    p.check()?;
    let mut c = ExperimentConfig::defaults_for(KIND);
    c.n_train = p.n;
    c.n_test = 0;
    c.grid_points = p.grid;
    c.elm = p.elm();
    c.ensemble_sizes = vec![p.members];
    c.repetitions = p.reps;
    c.gt_replications = p.gt_reps;
    c.estimators = vec![Estimator::BR, Estimator::S2];
    c.z = p.z;
    c.seed = p.seed;
    let result = run_experiment(&c).map_err(err)?;
    let grid = result.design.layout.grid.clone();
    let bias = result.ground_truth.bias(p.members).expect("size requested");
    let curves = c
        .estimators
        .iter()
        .filter_map(|&e| {
            result.coverage_for(p.members, e).map(|curve| EstimatorProfile {
                name: e.name().into(),
                values: curve.coverage[grid.clone()].iter().map(|&v| Some(v)).collect(),
            })
        })
        .collect();
    Ok(CoverageDemo {
        grid_x: result.design.query.row(0).columns_range(grid.clone()).iter().copied().collect(),
        true_bias: bias.rows_range(grid).iter().copied().collect(),
        nominal: erf_coverage(p.z),
        curves,
    })
}

/// `P(|Z| ≤ z)` for a standard normal `Z`.
fn erf_coverage(z: f64) -> f64 {
    libm::erf(z / std::f64::consts::SQRT_2)
}

fn run<T: Serialize>(params: &str, f: fn(&DemoParams) -> Result<T, String>) -> Result<String, String> {
    let p = DemoParams::from_json(params)?;
    serde_json::to_string(&f(&p)?).map_err(err)
}

#[wasm_bindgen(js_name = fitBand)]
pub fn fit_band_js(params: &str) -> Result<String, JsError> {
    run(params, fit_band).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareEstimators)]
pub fn compare_estimators_js(params: &str) -> Result<String, JsError> {
    run(params, compare_estimators).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = coverageCurves)]
pub fn coverage_curves_js(params: &str) -> Result<String, JsError> {
    run(params, coverage_curves).map_err(|e| JsError::new(&e))
}
