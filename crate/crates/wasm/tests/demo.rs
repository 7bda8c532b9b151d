use elm_uq_wasm::{compare_estimators, coverage_curves, fit_band, DemoParams};

fn small() -> DemoParams {
    DemoParams { grid: 25, reps: 8, gt_reps: 30, ..DemoParams::default() }
}

#[test]
fn band_brackets_the_prediction() {
    let b = fit_band(&small()).unwrap();
    assert_eq!(b.grid_x.len(), 25);
    assert_eq!(b.train_x.len(), 60);
    for i in 0..25 {
        assert!(b.lower[i] <= b.prediction[i] && b.prediction[i] <= b.upper[i]);
    }
    assert!(b.sigma2_eps.unwrap() > 0.0);
}

#[test]
fn comparison_lists_every_estimator() {
    let c = compare_estimators(&small()).unwrap();
    let names: Vec<&str> = c.estimators.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["NHo", "BR", "S1", "NHe", "S2", "S3"]);
    assert!(c.true_sd.iter().all(|s| *s > 0.0));
    assert!(c.estimators.iter().all(|e| e.values.iter().all(Option::is_some)));

    let two = compare_estimators(&DemoParams { members: 2, ..small() }).unwrap();
    assert!(two.estimators[5].values.iter().all(Option::is_none));
    assert!(!two.notes.is_empty());
}

#[test]
fn coverage_is_a_fraction_on_the_grid() {
    let c = coverage_curves(&small()).unwrap();
    assert_eq!(c.grid_x.len(), 25);
    assert_eq!(c.true_bias.len(), 25);
    assert_eq!(c.curves.len(), 2);
    for curve in &c.curves {
        assert!(curve.values.iter().all(|v| (0.0..=1.0).contains(&v.unwrap())));
    }
}

#[test]
fn outputs_serialize_and_bad_input_is_an_error() {
    let b = fit_band(&small()).unwrap();
    let json = serde_json::to_string(&b).unwrap();
    assert!(json.contains("\"prediction\""));
    assert!(fit_band(&DemoParams { members: 0, ..small() }).is_err());
    assert!(fit_band(&DemoParams { n: 3, neurons: 10, ..small() }).is_err());
}
