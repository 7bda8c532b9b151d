//! Synthetic regression problems with known truth, ground-truth variance of the
//! ensemble predictor by mass retraining, and the two-ELM correlation diagnostic.
//!
//! Every experiment uses a fixed design: inputs are drawn once and reused,
//! while noise and network weights are redrawn for each replication.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::elm::{fit_ensemble_redrawing, member_seed, ElmConfig, ElmEnsemble, InputScaler, PredictionBundle};
use crate::error::{ElmError, Result};
use crate::homo::{column, dot, mu_norm2_corrected};
use crate::numerics::{derive_seed, rng_from_seed, uniform_fill, Mat, Rng, Vector};
use crate::par::map_indexed;

pub const TRAPEZE_NOISE_VARIANCE: f64 = 0.1;
pub const FRIEDMAN_NOISE_VARIANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `y = sin(x) + ε` on `[0, 2π]` with a linearly decreasing input density.
    Trapeze1d,
    /// Friedman's five-input function with constant noise variance 0.5.
    FriedmanHomo,
    /// Friedman's function with noise variance `0.5 + 2 sin²(π‖x‖∞)`.
    FriedmanHetero,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Trapeze1d => "trapeze1d",
            GeneratorKind::FriedmanHomo => "friedman_homo",
            GeneratorKind::FriedmanHetero => "friedman_hetero",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            GeneratorKind::Trapeze1d => 1,
            _ => 5,
        }
    }

    pub fn default_noise(self) -> NoiseFamily {
        match self {
            GeneratorKind::Trapeze1d => NoiseFamily::Uniform,
            _ => NoiseFamily::Gaussian,
        }
    }

    pub fn is_heteroskedastic(self) -> bool {
        self == GeneratorKind::FriedmanHetero
    }

    /// `n` inputs from the problem's input distribution, as a `d × n` matrix.
    pub fn sample_inputs(self, n: usize, rng: &mut Rng) -> Mat {
        match self {
            GeneratorKind::Trapeze1d => {
                let u = Uniform::new(0.0, 1.0).expect("unit interval");
                Mat::from_iterator(1, n, (0..n).map(|_| trapeze_inverse_cdf(u.sample(rng))))
            }
            _ => uniform_fill(rng, n, 5, 0.0, 1.0).expect("unit interval").transpose(),
        }
    }

    /// True regression function at each column of `x`.
    pub fn mean(self, x: &Mat) -> Vector {
        Vector::from_iterator(
            x.ncols(),
            x.column_iter().map(|c| match self {
                GeneratorKind::Trapeze1d => c[0].sin(),
                _ => friedman_mean(c.as_slice()),
            }),
        )
    }

    /// Noise variance at each column of `x`.
    pub fn noise_variance(self, x: &Mat) -> Vector {
        Vector::from_iterator(
            x.ncols(),
            x.column_iter().map(|c| match self {
                GeneratorKind::Trapeze1d => TRAPEZE_NOISE_VARIANCE,
                GeneratorKind::FriedmanHomo => FRIEDMAN_NOISE_VARIANCE,
                GeneratorKind::FriedmanHetero => hetero_noise_variance(c.as_slice()),
            }),
        )
    }

    /// Affine map of the input domain onto `[0, 1]`; `None` when it already is the unit cube.
    pub fn domain_scaler(self) -> Option<InputScaler> {
        match self {
            GeneratorKind::Trapeze1d => Some(InputScaler { offset: vec![0.0], scale: vec![1.0 / (2.0 * PI)] }),
            _ => None,
        }
    }

    /// `points` evenly spaced inputs along the natural one-dimensional slice of
    /// the domain: `[0, 2π]` for the 1-D problem, the diagonal `t·(1,…,1)` of
    /// the unit cube otherwise.
    pub fn grid(self, points: usize) -> Mat {
        let (d, hi) = match self {
            GeneratorKind::Trapeze1d => (1, 2.0 * PI),
            _ => (5, 1.0),
        };
        let step = if points > 1 { hi / (points - 1) as f64 } else { 0.0 };
        Mat::from_fn(d, points, |_, j| j as f64 * step)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = ElmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "trapeze1d" | "trapeze" => Ok(GeneratorKind::Trapeze1d),
            "friedman_homo" => Ok(GeneratorKind::FriedmanHomo),
            "friedman_hetero" => Ok(GeneratorKind::FriedmanHetero),
            other => Err(ElmError::InvalidParameter(format!("unknown generator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// Centered uniform with the requested variance, i.e. on `±√(3σ²)`.
    Uniform,
    Gaussian,
}

impl FromStr for NoiseFamily {
    type Err = ElmError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(NoiseFamily::Uniform),
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            other => Err(ElmError::InvalidParameter(format!("unknown noise family '{other}'"))),
        }
    }
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Gaussian => "gaussian",
        }
    }

    /// One independent draw per entry of `variance`.
    pub fn draw(self, variance: &Vector, rng: &mut Rng) -> Vector {
        match self {
            NoiseFamily::Gaussian => variance.map(|v| {
                let e: f64 = StandardNormal.sample(rng);
                v.sqrt() * e
            }),
            NoiseFamily::Uniform => {
                let u = Uniform::new(-1.0, 1.0).expect("unit interval");
                variance.map(|v| (3.0 * v).sqrt() * u.sample(rng))
            }
        }
    }
}

/// Inverse CDF of the density `ρ(x) = 3/(4π) - x/(4π²)` on `[0, 2π]`.
/// `F(x) = 3x/(4π) - x²/(8π²)`; the root that stays in `[0, 2π]` is `π(3 - √(9 - 8u))`.
pub fn trapeze_inverse_cdf(u: f64) -> f64 {
    PI * (3.0 - (9.0 - 8.0 * u).sqrt())
}

pub fn trapeze_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 2.0 * PI);
    3.0 * x / (4.0 * PI) - x * x / (8.0 * PI * PI)
}

pub fn friedman_mean(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

pub fn hetero_noise_variance(x: &[f64]) -> f64 {
    let sup = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    0.5 + 2.0 * (PI * sup).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub noise: NoiseFamily,
    pub seed: u64,
    /// Outputs equal the true function exactly.
    #[serde(default)]
    pub noise_free: bool,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorSpec { kind, n, noise: kind.default_noise(), seed, noise_free: false }
    }
}

/// Inputs with noisy outputs and the truth they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `d × n`.
    pub x: Mat,
    pub y: Vector,
    pub f: Vector,
    pub noise_var: Vector,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Delimited dump with header `x1,…,xd,y,f,sigma2_eps`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.x.nrows();
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.extend(["y".into(), "f".into(), "sigma2_eps".into()]);
        writeln!(out, "{}", header.join(","))?;
        for j in 0..self.n() {
            let mut row: Vec<String> = (0..d).map(|i| fmt_real(self.x[(i, j)])).collect();
            row.push(fmt_real(self.y[j]));
            row.push(fmt_real(self.f[j]));
            row.push(fmt_real(self.noise_var[j]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Inputs come from the stream `derive_seed(seed, 0)`, noise from `derive_seed(seed, 1)`.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(ElmError::InvalidParameter("dataset needs at least one point".into()));
    }
    let x = spec.kind.sample_inputs(spec.n, &mut rng_from_seed(derive_seed(spec.seed, 0)));
    Ok(with_outputs(spec, x, derive_seed(spec.seed, 1)))
}

/// Fresh outputs on fixed inputs `x`.
pub fn with_outputs(spec: &GeneratorSpec, x: Mat, noise_seed: u64) -> Dataset {
    let f = spec.kind.mean(&x);
    let noise_var = spec.kind.noise_variance(&x);
    let y = if spec.noise_free {
        f.clone()
    } else {
        &f + spec.noise.draw(&noise_var, &mut rng_from_seed(noise_seed))
    };
    Dataset { x, y, f, noise_var }
}

pub fn sample_trapeze1d(n: usize, seed: u64) -> Result<Dataset> {
    generate(&GeneratorSpec::new(GeneratorKind::Trapeze1d, n, seed))
}

pub fn sample_friedman(kind: GeneratorKind, n: usize, seed: u64) -> Result<Dataset> {
    if kind == GeneratorKind::Trapeze1d {
        return Err(ElmError::InvalidParameter("sample_friedman needs a Friedman generator".into()));
    }
    generate(&GeneratorSpec::new(kind, n, seed))
}

/// Empirical mean and variance of the ensemble predictor over independent
/// retrainings, for several ensemble sizes at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub query: Mat,
    pub f: Vector,
    pub noise_var: Vector,
    pub replications: usize,
    pub ensemble_sizes: Vec<usize>,
    /// One vector per ensemble size.
    pub mean: Vec<Vector>,
    pub variance: Vec<Vector>,
    /// Indices of query points whose raw predictions were kept.
    pub tracked: Vec<usize>,
    /// `samples[size][tracked point]` holds one prediction per replication.
    pub samples: Vec<Vec<Vec<f64>>>,
    /// Members refitted because their first weight draw was rank deficient.
    pub redraws: usize,
}

impl GroundTruth {
    pub fn index_of(&self, m: usize) -> Option<usize> {
        self.ensemble_sizes.iter().position(|&s| s == m)
    }

    pub fn sd(&self, m: usize) -> Option<Vector> {
        self.index_of(m).map(|i| self.variance[i].map(f64::sqrt))
    }

    pub fn bias(&self, m: usize) -> Option<Vector> {
        self.index_of(m).map(|i| &self.mean[i] - &self.f)
    }

    /// Approximate Monte Carlo standard error of each variance entry, `v·√(2/(R-1))`.
    pub fn variance_std_error(&self, m: usize) -> Option<Vector> {
        let factor = (2.0 / (self.replications as f64 - 1.0)).sqrt();
        self.index_of(m).map(|i| &self.variance[i] * factor)
    }

    /// Standardized errors `g = (f̂ - f)/sd[f̂]` at the tracked points.
    pub fn g_samples(&self, m: usize) -> Option<Vec<Vec<f64>>> {
        let i = self.index_of(m)?;
        Some(
            self.tracked
                .iter()
                .zip(&self.samples[i])
                .map(|(&q, s)| {
                    let sd = self.variance[i][q].sqrt();
                    s.iter().map(|v| (v - self.f[q]) / sd).collect()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSettings {
    pub elm: ElmConfig,
    /// Ensemble sizes to evaluate; each replication fits the largest and reads
    /// the others off its leading members.
    pub ensemble_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub tracked: Vec<usize>,
    /// Reuse the same member weights in every replication, leaving noise as the only source of variation.
    pub fixed_weights: bool,
}

const ACCUMULATION_CHUNK: usize = 32;

/// Retrain on `spec`'s fixed design `x` with fresh noise `R` times and
/// measure the spread of the ensemble prediction at `query`.
pub fn ground_truth(spec: &GeneratorSpec, x: &Mat, query: &Mat, settings: &GroundTruthSettings) -> Result<GroundTruth> {
    let r = settings.replications;
    if r < 2 {
        return Err(ElmError::InvalidParameter(format!("ground truth needs at least 2 replications, got {r}")));
    }
    let mut sizes = settings.ensemble_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.first().is_none_or(|&s| s == 0) {
        return Err(ElmError::InvalidParameter("ensemble sizes must be at least 1".into()));
    }
    if let Some(&bad) = settings.tracked.iter().find(|&&t| t >= query.ncols()) {
        return Err(ElmError::Dimension(format!("tracked point {bad} outside {} query points", query.ncols())));
    }
    let max_m = *sizes.last().unwrap();
    let q = query.ncols();
    let fixed_seeds: Vec<u64> = (0..max_m).map(|m| member_seed(derive_seed(settings.seed, u64::MAX), m)).collect();

    let one = |k: usize| -> Result<(Vec<Vector>, usize)> {
        let rep_seed = derive_seed(settings.seed, k as u64);
        let data = with_outputs(spec, x.clone(), derive_seed(rep_seed, 0));
        let seeds: Vec<u64> = if settings.fixed_weights {
            fixed_seeds.clone()
        } else {
            (0..max_m).map(|m| member_seed(derive_seed(rep_seed, 1), m)).collect()
        };
        let (ens, redraws) = fit_ensemble_redrawing(&settings.elm, &seeds, &data.x, &data.y)?;
        Ok((prefix_means(&ens, query, &sizes)?, redraws))
    };

    let mut acc: Vec<Welford> = sizes.iter().map(|_| Welford::new(q)).collect();
    let mut samples = vec![vec![Vec::with_capacity(r); settings.tracked.len()]; sizes.len()];
    let mut redraws = 0;
    let mut start = 0;
    while start < r {
        let len = ACCUMULATION_CHUNK.min(r - start);
        let chunk = map_indexed(len, |i| one(start + i));
        for reps in chunk {
            let (preds, r) = reps?;
            redraws += r;
            for (s, pred) in preds.into_iter().enumerate() {
                for (t, &idx) in settings.tracked.iter().enumerate() {
                    samples[s][t].push(pred[idx]);
                }
                acc[s].push(&pred);
            }
        }
        start += len;
    }

    let f = spec.kind.mean(query);
    let noise_var = spec.kind.noise_variance(query);
    Ok(GroundTruth {
        query: query.clone(),
        f,
        noise_var,
        replications: r,
        ensemble_sizes: sizes,
        mean: acc.iter().map(|a| a.mean.clone()).collect(),
        variance: acc.iter().map(Welford::variance).collect(),
        tracked: settings.tracked.clone(),
        samples,
        redraws,
    })
}

/// Prediction of each leading sub-ensemble of `ens`, one vector per size.
pub fn prefix_means(ens: &ElmEnsemble, query: &Mat, sizes: &[usize]) -> Result<Vec<Vector>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut running = Vector::zeros(query.ncols());
    let mut used = 0;
    for &m in sizes {
        for member in &ens.members[used..m] {
            running += member.predict(query)?;
        }
        used = m;
        out.push(&running / m as f64);
    }
    Ok(out)
}

/// Running mean and sum of squared deviations per coordinate.
#[derive(Debug, Clone)]
struct Welford {
    count: usize,
    mean: Vector,
    m2: Vector,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford { count: 0, mean: Vector::zeros(len), m2: Vector::zeros(len) }
    }

    fn push(&mut self, v: &Vector) {
        self.count += 1;
        let c = self.count as f64;
        for i in 0..v.len() {
            let delta = v[i] - self.mean[i];
            self.mean[i] += delta / c;
            self.m2[i] += delta * (v[i] - self.mean[i]);
        }
    }

    fn variance(&self) -> Vector {
        &self.m2 / (self.count as f64 - 1.0)
    }
}

/// Plug-in estimate of the correlation between two ELMs trained on the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub value: f64,
    /// False when the estimate falls outside `[0, 1]`.
    pub valid: bool,
}

/// `μ̂ᵀμ̂ / (Tr{Q̂} + μ̂ᵀμ̂ + f̂ᵀQ̂f̂/σ̂²_ε)` at each query point, with the bias-corrected
/// `μ̂ᵀμ̂` and the ensemble fit `f̂` at the training points in place of `f`.
pub fn elm_pair_correlation(
    ensemble: &ElmEnsemble,
    bundle: &PredictionBundle,
    sigma2_eps: f64,
) -> Result<Vec<PairCorrelation>> {
    let m = bundle.ensemble_size();
    if m < 2 {
        return Err(ElmError::DegreesOfFreedom(format!("pair correlation needs at least 2 members, got {m}")));
    }
    if !(sigma2_eps > 0.0) {
        return Err(ElmError::InvalidParameter(format!("noise variance must be positive, got {sigma2_eps}")));
    }
    let corrected = mu_norm2_corrected(bundle)?;
    let fitted = ensemble.fitted();
    let fhat = fitted.as_slice();
    let out = (0..bundle.n_points())
        .map(|q| {
            let projections: Vec<f64> = bundle.z.iter().map(|z| dot(column(z, q), fhat)).collect();
            let mean = projections.iter().sum::<f64>() / m as f64;
            let f_q_f = projections.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            let mu2 = corrected.value[q];
            let value = mu2 / (corrected.trace_q[q] + mu2 + f_q_f / sigma2_eps);
            PairCorrelation { value, valid: (0.0..=1.0).contains(&value) }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elm::{fit_ensemble, fit_ensemble_with_seeds};
    use crate::homo::noise_variance;
    use approx::assert_relative_eq;

    #[test]
    fn trapeze_density_and_cdf() {
        // The density is a trapezoid of unit area.
        let area = (3.0 / (4.0 * PI) + 1.0 / (4.0 * PI)) / 2.0 * 2.0 * PI;
        assert_relative_eq!(area, 1.0, epsilon = 1e-15);
        assert_relative_eq!(trapeze_cdf(2.0 * PI), 1.0, epsilon = 1e-15);
        for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
            assert_relative_eq!(trapeze_cdf(trapeze_inverse_cdf(u)), u, epsilon = 1e-12);
        }
        assert_eq!(trapeze_inverse_cdf(0.0), 0.0);
        assert_relative_eq!(trapeze_inverse_cdf(1.0), 2.0 * PI, epsilon = 1e-15);
    }

    #[test]
    fn trapeze_inputs_pass_kolmogorov_smirnov() {
        let n = 100_000;
        let x = GeneratorKind::Trapeze1d.sample_inputs(n, &mut rng_from_seed(1));
        let mut v: Vec<f64> = x.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        let d = v
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let c = trapeze_cdf(xi);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value 1.628/√n.
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn trapeze_histogram_decreases() {
        let x = GeneratorKind::Trapeze1d.sample_inputs(60_000, &mut rng_from_seed(2));
        let mut counts = [0usize; 4];
        for v in x.iter() {
            counts[((v / (2.0 * PI)) * 4.0).min(3.0) as usize] += 1;
        }
        assert!(counts.windows(2).all(|w| w[0] > w[1]), "{counts:?}");
    }

    #[test]
    fn uniform_noise_variance() {
        let var = Vector::from_element(1_000_000, TRAPEZE_NOISE_VARIANCE);
        let e = NoiseFamily::Uniform.draw(&var, &mut rng_from_seed(3));
        let mean = e.mean();
        let v = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
        assert!((v - 0.1).abs() < 0.001, "{v}");
        assert!(e.iter().all(|x| x.abs() < 0.3f64.sqrt()));
    }

    #[test]
    fn friedman_values() {
        assert_relative_eq!(friedman_mean(&[0.0; 5]), 5.0, epsilon = 1e-14);
        assert_relative_eq!(friedman_mean(&[0.5; 5]), 10.0 * (PI / 4.0).sin() + 7.5, epsilon = 1e-12);
        assert_relative_eq!(friedman_mean(&[0.5; 5]), 14.5711, epsilon = 1e-4);
        assert_relative_eq!(friedman_mean(&[1.0, 1.0, 0.5, 1.0, 1.0]), 15.0, epsilon = 1e-12);
    }

    #[test]
    fn hetero_variance_values() {
        assert_eq!(hetero_noise_variance(&[0.0; 5]), 0.5);
        assert_relative_eq!(hetero_noise_variance(&[0.1, 0.5, 0.2, 0.0, 0.3]), 2.5, epsilon = 1e-14);
        assert_relative_eq!(hetero_noise_variance(&[1.0, 0.2, 0.2, 0.2, 0.2]), 0.5, epsilon = 1e-14);
        let x = GeneratorKind::FriedmanHetero.sample_inputs(1000, &mut rng_from_seed(4));
        let v = GeneratorKind::FriedmanHetero.noise_variance(&x);
        assert!(v.iter().all(|s| (0.5..=2.5).contains(s)));
    }

    #[test]
    fn noise_free_outputs_equal_truth() {
        let mut spec = GeneratorSpec::new(GeneratorKind::FriedmanHomo, 50, 9);
        spec.noise_free = true;
        let d = generate(&spec).unwrap();
        assert_eq!(d.y, d.f);
        for j in 0..50 {
            assert_eq!(d.f[j], friedman_mean(d.x.column(j).as_slice()));
        }
    }

    #[test]
    fn friedman_homo_residual_variance() {
        let d = sample_friedman(GeneratorKind::FriedmanHomo, 1_000_000, 5).unwrap();
        let r = &d.y - &d.f;
        let v = r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64;
        assert!((v - 0.5).abs() < 0.005, "{v}");
        assert!(d.x.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn friedman_hetero_center_noisier_than_corners() {
        let d = sample_friedman(GeneratorKind::FriedmanHetero, 200_000, 6).unwrap();
        let (mut center, mut corner) = (Vec::new(), Vec::new());
        for j in 0..d.n() {
            let sup = d.x.column(j).amax();
            let e = d.y[j] - d.f[j];
            if (sup - 0.5).abs() < 0.05 {
                center.push(e * e);
            } else if sup > 0.97 {
                corner.push(e * e);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&center) > 2.0 * mean(&corner), "{} vs {}", mean(&center), mean(&corner));
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = sample_trapeze1d(30, 8).unwrap();
        let b = sample_trapeze1d(30, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_trapeze1d(30, 9).unwrap());
        assert!(sample_trapeze1d(0, 1).is_err());
        assert!(sample_friedman(GeneratorKind::Trapeze1d, 10, 1).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_round_trips() {
        let d = sample_friedman(GeneratorKind::FriedmanHetero, 3, 1).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x1,x2,x3,x4,x5,y,f,sigma2_eps");
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first[0], d.x[(0, 0)]);
        assert_eq!(first[5], d.y[0]);
    }

    #[test]
    fn grid_spans_domain() {
        let g = GeneratorKind::Trapeze1d.grid(5);
        assert_relative_eq!(g[(0, 4)], 2.0 * PI);
        let g = GeneratorKind::FriedmanHomo.grid(3);
        assert_eq!(g.column(1).as_slice(), &[0.5; 5]);
    }

    fn small_settings(sizes: Vec<usize>, r: usize) -> GroundTruthSettings {
        GroundTruthSettings {
            elm: ElmConfig::new(4, 0.0),
            ensemble_sizes: sizes,
            replications: r,
            seed: 11,
            tracked: vec![0, 3],
            fixed_weights: false,
        }
    }

    #[test]
    fn ground_truth_without_noise_or_weight_change_is_constant() {
        let mut spec = GeneratorSpec::new(GeneratorKind::Trapeze1d, 40, 3);
        spec.noise_free = true;
        let data = generate(&spec).unwrap();
        let mut settings = small_settings(vec![3], 10);
        settings.fixed_weights = true;
        let gt = ground_truth(&spec, &data.x, &GeneratorKind::Trapeze1d.grid(7), &settings).unwrap();
        assert!(gt.variance[0].iter().all(|v| v.abs() < 1e-20));
        assert_eq!(gt.samples[0][1].len(), 10);
    }

    #[test]
    fn ground_truth_is_deterministic_and_checks_inputs() {
        let spec = GeneratorSpec::new(GeneratorKind::Trapeze1d, 40, 3);
        let data = generate(&spec).unwrap();
        let grid = GeneratorKind::Trapeze1d.grid(9);
        let a = ground_truth(&spec, &data.x, &grid, &small_settings(vec![5, 2], 40)).unwrap();
        let b = ground_truth(&spec, &data.x, &grid, &small_settings(vec![2, 5], 40)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ensemble_sizes, vec![2, 5]);
        assert!(a.variance.iter().all(|v| v.iter().all(|&x| x >= 0.0)));
        assert!(ground_truth(&spec, &data.x, &grid, &small_settings(vec![2], 1)).is_err());
        assert!(ground_truth(&spec, &data.x, &grid, &small_settings(vec![0], 5)).is_err());
        let mut bad = small_settings(vec![2], 5);
        bad.tracked = vec![9];
        assert!(ground_truth(&spec, &data.x, &grid, &bad).is_err());
    }

    #[test]
    fn ground_truth_matches_direct_replication_loop() {
        let spec = GeneratorSpec::new(GeneratorKind::Trapeze1d, 30, 4);
        let data = generate(&spec).unwrap();
        let grid = GeneratorKind::Trapeze1d.grid(4);
        let settings = small_settings(vec![3], 50);
        let gt = ground_truth(&spec, &data.x, &grid, &settings).unwrap();
        let preds: Vec<Vector> = (0..50)
            .map(|k| {
                let rep = derive_seed(settings.seed, k);
                let d = with_outputs(&spec, data.x.clone(), derive_seed(rep, 0));
                fit_ensemble(&settings.elm, 3, &d.x, &d.y, derive_seed(rep, 1)).unwrap().predict_values(&grid).unwrap()
            })
            .collect();
        for j in 0..4 {
            let mean = preds.iter().map(|p| p[j]).sum::<f64>() / 50.0;
            let var = preds.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / 49.0;
            assert_relative_eq!(gt.mean[0][j], mean, epsilon = 1e-12);
            assert_relative_eq!(gt.variance[0][j], var, max_relative = 1e-9);
            assert_eq!(gt.samples[0][0][7], preds[7][0]);
        }
        let g = gt.g_samples(3).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].len(), 50);
    }

    #[test]
    fn larger_ensembles_vary_less() {
        let spec = GeneratorSpec::new(GeneratorKind::Trapeze1d, 60, 5);
        let data = generate(&spec).unwrap();
        let grid = GeneratorKind::Trapeze1d.grid(12);
        let gt = ground_truth(&spec, &data.x, &grid, &small_settings(vec![1, 20], 200)).unwrap();
        let below = (0..12).filter(|&j| gt.variance[1][j] < gt.variance[0][j]).count();
        assert!(below >= 11, "{below}");
    }

    fn correlation_fixture(seeds: &[u64]) -> (ElmEnsemble, PredictionBundle) {
        let d = sample_trapeze1d(40, 7).unwrap();
        let ens = fit_ensemble_with_seeds(&ElmConfig::new(4, 0.0), seeds, &d.x, &d.y).unwrap();
        let bundle = ens.predict(&GeneratorKind::Trapeze1d.grid(5)).unwrap();
        (ens, bundle)
    }

    #[test]
    fn identical_members_are_perfectly_correlated() {
        let (ens, bundle) = correlation_fixture(&[4, 4, 4]);
        for c in elm_pair_correlation(&ens, &bundle, 0.1).unwrap() {
            assert_relative_eq!(c.value, 1.0, epsilon = 1e-9);
            assert!(c.valid || (c.value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn correlation_limits_in_noise_variance() {
        let (ens, bundle) = correlation_fixture(&[1, 2, 3, 4, 5, 6]);
        let tiny = elm_pair_correlation(&ens, &bundle, 1e-12).unwrap();
        assert!(tiny.iter().all(|c| c.value.abs() < 1e-6));
        let huge = elm_pair_correlation(&ens, &bundle, 1e6).unwrap();
        let corrected = mu_norm2_corrected(&bundle).unwrap();
        for (q, c) in huge.iter().enumerate() {
            let limit = corrected.value[q] / (corrected.value[q] + corrected.trace_q[q]);
            assert_relative_eq!(c.value, limit, max_relative = 1e-4);
        }
        let sigma = noise_variance(&ens).unwrap().sigma2_eps;
        assert!(elm_pair_correlation(&ens.prefix(1), &bundle.prefix(1), sigma).is_err());
    }
}
