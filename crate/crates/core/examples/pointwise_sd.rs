use elm_uq::elm::{fit_ensemble, ElmConfig};
use elm_uq::synthetic::{sample_trapeze1d, GeneratorKind};
use elm_uq::variance::{estimate_at, CovarianceForm, Estimator};

fn main() -> elm_uq::Result<()> {
    let data = sample_trapeze1d(60, 1)?;
    let config = ElmConfig { scaler: GeneratorKind::Trapeze1d.domain_scaler(), ..ElmConfig::new(4, 0.0) };
    let ensemble = fit_ensemble(&config, 10, &data.x, &data.y, 42)?;

    let grid = GeneratorKind::Trapeze1d.grid(5);
    let est = estimate_at(&ensemble, &grid, &[Estimator::BR, Estimator::S2], CovarianceForm::Exact)?;
    for (i, f) in est.prediction.iter().enumerate() {
        let sd = est.values[0][i].map(|v| v.std_dev());
        println!("x = {:.2}  f̂ = {f:.3}  sd_BR = {sd:?}", grid[(0, i)]);
    }
    Ok(())
}
