use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use elm_uq::elm::{fit_ensemble, select_alpha_gcv, select_neurons_cv, Activation, ElmConfig, ElmEnsemble, InputScaler};
use elm_uq::experiment::{
    design, run_experiment, write_coverage_csv, write_g_samples_csv, write_rows_csv, write_summary_csv, Design,
    ExperimentConfig,
};
use elm_uq::homo::noise_variance;
use elm_uq::model_io;
use elm_uq::numerics::{derive_seed, Mat, Vector};
use elm_uq::synthetic::{
    fmt_real, generate, ground_truth, GeneratorKind, GeneratorSpec, GroundTruth, GroundTruthSettings, NoiseFamily,
};
use elm_uq::variance::{estimate_at, CovarianceForm, Estimator};

use crate::config::{parse_list, pick, FileConfig, Resolved};
use crate::error::{CliError, CliResult};
use crate::io::{read_table, write_file, Table};
use crate::manifest::Manifest;
use crate::table::VarianceTable;
use crate::{
    Cli, Command, ExperimentArgs, FitArgs, GenerateArgs, GroundTruthArgs, ModelArgs, PredictArgs, SelectCommand,
    SelectSource, VarianceArgs,
};

const DEFAULT_M: usize = 10;
const DEFAULT_NEURONS: usize = 10;
const DEFAULT_ALPHA_GRID: &str = "1e-8,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1,10,100";

struct Ctx {
    out: PathBuf,
    seed_flag: Option<u64>,
    file: FileConfig,
}

impl Ctx {
    /// The run seed and whether the user supplied it.
    fn seed(&self) -> (u64, bool) {
        if let Some(s) = self.seed_flag.or(self.file.seed) {
            return (s, true);
        }
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        let s = derive_seed(nanos, std::process::id() as u64);
        eprintln!("elm-uq: no seed given, using generated seed {s}");
        (s, false)
    }

    fn path(&self, flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
        flag.or_else(|| file.clone()).ok_or_else(|| CliError::Usage(format!("--{name} is required")))
    }

    fn finish(&self, manifest: &mut Manifest, outputs: &[PathBuf]) -> CliResult<()> {
        for p in outputs {
            manifest.output(p);
        }
        manifest.output(Path::new("manifest.json"));
        manifest.write(&self.out)?;
        for p in outputs {
            println!("wrote {}", p.display());
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let file = FileConfig::load(cli.global.config.as_deref())?;
    if let Some(t) = cli.global.threads.or(file.threads) {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    let out = cli.global.out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Ctx { out, seed_flag: cli.global.seed, file };
    match cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Fit(a) => cmd_fit(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Variance(a) => cmd_variance(&ctx, a),
        Command::Experiment(a) => cmd_experiment(&ctx, a),
        Command::GroundTruth(a) => cmd_ground_truth(&ctx, a),
        Command::Select(s) => cmd_select(&ctx, s),
    }
}

fn parse<T: FromStr>(s: &str, what: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn generator(flag: Option<String>, file: &FileConfig) -> CliResult<GeneratorKind> {
    parse(&pick(flag, file.generator.clone(), "trapeze1d".into()), "--generator")
}

fn noise(flag: Option<String>, file: &FileConfig, kind: GeneratorKind) -> CliResult<NoiseFamily> {
    match flag.or_else(|| file.noise.clone()) {
        Some(s) => parse(&s, "--noise"),
        None => Ok(kind.default_noise()),
    }
}

fn sizes(flag: Option<String>, file: &FileConfig) -> CliResult<Option<Vec<usize>>> {
    let list = match flag {
        Some(s) => parse_list(&s, "ensemble size")?,
        None => match file.m.clone() {
            Some(m) => m.into_vec()?,
            None => return Ok(None),
        },
    };
    if list.contains(&0) {
        return Err(CliError::Usage("ensemble sizes must be at least 1".into()));
    }
    Ok(Some(list))
}

fn estimators(flag: Option<String>, file: &FileConfig) -> CliResult<Vec<Estimator>> {
    Ok(Estimator::parse_list(&pick(flag, file.estimators.clone(), "all".into()))?)
}

fn form(flag: Option<String>, file: &FileConfig, default: CovarianceForm) -> CliResult<CovarianceForm> {
    match flag.or_else(|| file.form.clone()) {
        Some(s) => parse(&s, "--form"),
        None => Ok(default),
    }
}

fn elm_config(args: ModelArgs, file: &FileConfig, base: ElmConfig) -> CliResult<ElmConfig> {
    let activation = match args.activation.or_else(|| file.activation.clone()) {
        Some(s) => parse::<Activation>(&s, "--activation")?,
        None => base.activation,
    };
    let cfg = ElmConfig {
        neurons: pick(args.neurons, file.neurons, base.neurons),
        alpha: pick(args.alpha, file.alpha, base.alpha),
        activation,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn record_elm(r: &mut Resolved, cfg: &ElmConfig) {
    r.set("neurons", cfg.neurons).set("alpha", cfg.alpha).set("activation", cfg.activation);
    if let Some(s) = &cfg.scaler {
        r.set("scaler", s);
    }
}

fn load_model(path: &Path) -> CliResult<ElmEnsemble> {
    let f = File::open(path).map_err(|e| CliError::data(path.display(), e))?;
    model_io::load(BufReader::new(f)).map_err(|e| CliError::data(path.display(), e))
}

fn read_query(path: &Path, ens: &ElmEnsemble) -> CliResult<Mat> {
    let Table { x, .. } = read_table(path, false)?;
    if x.nrows() != ens.x.nrows() {
        return Err(CliError::Data(format!(
            "{}: {} input columns, model expects {}",
            path.display(),
            x.nrows(),
            ens.x.nrows()
        )));
    }
    Ok(x)
}

fn x_header(d: usize) -> String {
    (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn x_cells(x: &Mat, j: usize) -> String {
    (0..x.nrows()).map(|i| fmt_real(x[(i, j)])).collect::<Vec<_>>().join(",")
}

fn cmd_generate(ctx: &Ctx, a: GenerateArgs) -> CliResult<()> {
    let f = &ctx.file;
    let kind = generator(a.generator, f)?;
    let defaults = ExperimentConfig::defaults_for(kind);
    let seed = ctx.seed();
    let spec = GeneratorSpec {
        kind,
        n: pick(a.n, f.n, defaults.n_train),
        noise: noise(a.noise, f, kind)?,
        seed: seed.0,
        noise_free: a.noise_free || f.noise_free.unwrap_or(false),
    };
    let data = generate(&spec)?;
    let mut r = Resolved::new();
    r.set("generator", kind.name()).set("n", spec.n).set("noise", spec.noise.name()).set("noise_free", spec.noise_free);
    let mut manifest = Manifest::new("generate", Some(seed), r);
    let path = write_file(&ctx.out, "data.csv", |w| data.write_csv(w))?;
    ctx.finish(&mut manifest, &[path])
}

fn cmd_fit(ctx: &Ctx, a: FitArgs) -> CliResult<()> {
    let f = &ctx.file;
    let data_path = ctx.path(a.data, &f.data, "data")?;
    let table = read_table(&data_path, true)?;
    let y = table.y.expect("target column checked");
    let m = match sizes(a.m, f)?.as_deref() {
        None => DEFAULT_M,
        Some([m]) => *m,
        Some(_) => return Err(CliError::Usage("fit takes a single ensemble size".into())),
    };
    let scaler = match pick(a.scale, f.scale.clone(), "none".into()).as_str() {
        "none" => None,
        "minmax" => Some(InputScaler::min_max(&table.x)),
        other => return Err(CliError::Usage(format!("--scale must be none or minmax, got '{other}'"))),
    };
    let cfg = elm_config(a.model, f, ElmConfig { scaler, ..ElmConfig::new(DEFAULT_NEURONS, 0.0) })?;
    let seed = ctx.seed();
    let ens = fit_ensemble(&cfg, m, &table.x, &y, seed.0)?;
    let noise = noise_variance(&ens)?;

    let mut r = Resolved::new();
    r.set("data", data_path.display().to_string()).set("m", m).set("n", y.len());
    record_elm(&mut r, &cfg);
    let mut manifest = Manifest::new("fit", Some(seed), r);

    let model = write_file(&ctx.out, "model.json", |w| {
        model_io::save(&ens, &mut *w).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;
    let n = y.len() as f64;
    let report = write_file(&ctx.out, "fit_report.csv", |w| {
        writeln!(w, "member,seed,rss,trace_p,trace_p2,gamma,sigma2_eps")?;
        let mut rss_total = 0.0;
        for (i, mem) in ens.members.iter().enumerate() {
            let dof = mem.effective_dof();
            let rss = mem.rss();
            rss_total += rss;
            let s2 = if n > dof.gamma { fmt_real(rss / (n - dof.gamma)) } else { "NA".into() };
            writeln!(
                w,
                "{i},{},{},{},{},{},{s2}",
                mem.seed,
                fmt_real(rss),
                fmt_real(dof.trace_p),
                fmt_real(dof.trace_p2),
                fmt_real(dof.gamma)
            )?;
        }
        writeln!(
            w,
            "ensemble,,{},,,{},{}",
            fmt_real(rss_total / m as f64),
            fmt_real(noise.gamma_hat),
            fmt_real(noise.sigma2_eps)
        )
    })?;
    println!("fitted {m} members: gamma_hat {:.6}, sigma2_eps {:.6}", noise.gamma_hat, noise.sigma2_eps);
    ctx.finish(&mut manifest, &[model, report])
}

fn cmd_predict(ctx: &Ctx, a: PredictArgs) -> CliResult<()> {
    let f = &ctx.file;
    let model_path = ctx.path(a.model, &f.model, "model")?;
    let query_path = ctx.path(a.query, &f.query, "query")?;
    let ens = load_model(&model_path)?;
    let q = read_query(&query_path, &ens)?;
    let pred = ens.predict_values(&q)?;
    let mut r = Resolved::new();
    r.set("model", model_path.display().to_string()).set("query", query_path.display().to_string());
    let mut manifest = Manifest::new("predict", None, r);
    let path = write_file(&ctx.out, "predictions.csv", |w| {
        writeln!(w, "point,{},f_hat", x_header(q.nrows()))?;
        for j in 0..q.ncols() {
            writeln!(w, "{j},{},{}", x_cells(&q, j), fmt_real(pred[j]))?;
        }
        Ok(())
    })?;
    ctx.finish(&mut manifest, &[path])
}

fn cmd_variance(ctx: &Ctx, a: VarianceArgs) -> CliResult<()> {
    let f = &ctx.file;
    let model_path = ctx.path(a.model, &f.model, "model")?;
    let query_path = ctx.path(a.query, &f.query, "query")?;
    let ests = estimators(a.estimators, f)?;
    let form = form(a.form, f, CovarianceForm::Exact)?;
    let ens = load_model(&model_path)?;
    let q = read_query(&query_path, &ens)?;
    let est = estimate_at(&ens, &q, &ests, form)?;
    let table = VarianceTable::from_estimates(&est);

    let mut r = Resolved::new();
    r.set("model", model_path.display().to_string())
        .set("query", query_path.display().to_string())
        .set("estimators", ests.iter().map(|e| e.name()).collect::<Vec<_>>())
        .set("form", format!("{form:?}").to_lowercase());
    let mut manifest = Manifest::new("variance", None, r);
    for note in &est.notes {
        eprintln!("elm-uq: {note}");
    }
    manifest.notes = est.notes.clone();
    let path = write_file(&ctx.out, "variance.csv", |w| table.write(w))?;
    ctx.finish(&mut manifest, &[path])
}

struct Protocol {
    config: ExperimentConfig,
    resolved: Resolved,
    seed: (u64, bool),
}

#[allow(clippy::too_many_arguments)]
fn protocol(
    ctx: &Ctx,
    gen: Option<String>,
    noise_flag: Option<String>,
    n: Option<usize>,
    n_test: Option<usize>,
    grid: Option<usize>,
    model: ModelArgs,
    m: Option<String>,
    gt_reps: Option<usize>,
) -> CliResult<Protocol> {
    let f = &ctx.file;
    let kind = generator(gen, f)?;
    let mut c = ExperimentConfig::defaults_for(kind);
    c.noise = noise(noise_flag, f, kind)?;
    c.n_train = pick(n, f.n, c.n_train);
    c.n_test = pick(n_test, f.n_test, c.n_test);
    c.grid_points = pick(grid, f.grid, c.grid_points);
    c.elm = elm_config(model, f, c.elm.clone())?;
    if let Some(s) = sizes(m, f)? {
        c.ensemble_sizes = s;
    }
    c.gt_replications = pick(gt_reps, f.gt_reps, c.gt_replications);
    let seed = ctx.seed();
    c.seed = seed.0;

    let mut r = Resolved::new();
    r.set("generator", kind.name())
        .set("noise", c.noise.name())
        .set("n", c.n_train)
        .set("n_test", c.n_test)
        .set("grid", c.grid_points)
        .set("probes", &c.probes)
        .set("m", &c.ensemble_sizes)
        .set("gt_reps", c.gt_replications);
    record_elm(&mut r, &c.elm);
    Ok(Protocol { config: c, resolved: r, seed })
}

fn write_ground_truth(ctx: &Ctx, gt: &GroundTruth, d: &Design) -> CliResult<PathBuf> {
    let q = &gt.query;
    write_file(&ctx.out, "ground_truth.csv", |w| {
        writeln!(w, "M,point,region,{},f,noise_var,mean,variance,sd,variance_se", x_header(q.nrows()))?;
        for (i, &m) in gt.ensemble_sizes.iter().enumerate() {
            let se = gt.variance_std_error(m).expect("size present");
            for j in 0..q.ncols() {
                let v = gt.variance[i][j];
                writeln!(
                    w,
                    "{m},{j},{},{},{},{},{},{},{},{}",
                    d.layout.region(j),
                    x_cells(q, j),
                    fmt_real(gt.f[j]),
                    fmt_real(gt.noise_var[j]),
                    fmt_real(gt.mean[i][j]),
                    fmt_real(v),
                    fmt_real(v.sqrt()),
                    fmt_real(se[j])
                )?;
            }
        }
        Ok(())
    })
}

fn cmd_experiment(ctx: &Ctx, a: ExperimentArgs) -> CliResult<()> {
    let f = &ctx.file;
    let Protocol { mut config, mut resolved, seed } =
        protocol(ctx, a.generator, a.noise, a.n, a.n_test, a.grid, a.model, a.m, a.gt_reps)?;
    config.repetitions = pick(a.reps, f.reps, config.repetitions);
    config.estimators = estimators(a.estimators, f)?;
    config.form = form(a.form, f, config.form)?;
    config.z = pick(a.z, f.z, config.z);
    if !(config.z > 0.0) {
        return Err(CliError::Usage(format!("--z must be positive, got {}", config.z)));
    }
    resolved
        .set("reps", config.repetitions)
        .set("estimators", config.estimators.iter().map(|e| e.name()).collect::<Vec<_>>())
        .set("form", format!("{:?}", config.form).to_lowercase())
        .set("z", config.z);
    let mut manifest = Manifest::new("experiment", Some(seed), resolved);

    let result = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            let err = CliError::from(e);
            manifest.status = format!("failed: {err}");
            ctx.finish(&mut manifest, &[])?;
            return Err(err);
        }
    };
    let mut outputs = vec![
        write_file(&ctx.out, "summary.csv", |w| write_summary_csv(&result, w))?,
        write_file(&ctx.out, "repetitions.csv", |w| write_rows_csv(&result, w))?,
        write_file(&ctx.out, "coverage.csv", |w| write_coverage_csv(&result, w))?,
        write_file(&ctx.out, "g_samples.csv", |w| write_g_samples_csv(&result, w))?,
    ];
    outputs.push(write_ground_truth(ctx, &result.ground_truth, &result.design)?);
    manifest.notes = result.notes.clone();
    for note in &result.notes {
        eprintln!("elm-uq: {note}");
    }
    print_overview(&result);
    ctx.finish(&mut manifest, &outputs)
}

fn print_overview(result: &elm_uq::experiment::ExperimentResult) {
    use elm_uq::metrics::Split;
    for &m in &result.ground_truth.ensemble_sizes {
        let truth = result.mean_of(m, Split::Train, "truth", "se").unwrap_or(f64::NAN);
        let mut line = format!("M={m} train: truth se {truth:.4}");
        for e in &result.config.estimators {
            if let (Some(se), Some(re)) =
                (result.mean_of(m, Split::Train, e.name(), "se"), result.mean_of(m, Split::Train, e.name(), "re"))
            {
                line.push_str(&format!(" | {e} se {se:.4} re {re:.4}"));
            }
        }
        println!("{line}");
    }
}

fn cmd_ground_truth(ctx: &Ctx, a: GroundTruthArgs) -> CliResult<()> {
    let Protocol { config, resolved, seed } =
        protocol(ctx, a.generator, a.noise, a.n, a.n_test, a.grid, a.model, a.m, a.gt_reps)?;
    let d = design(&config)?;
    let mut sizes = config.ensemble_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let settings = GroundTruthSettings {
        elm: config.elm.clone(),
        ensemble_sizes: sizes,
        replications: config.gt_replications,
        seed: derive_seed(config.seed, 2),
        tracked: Vec::new(),
        fixed_weights: false,
    };
    let gt = ground_truth(&d.spec, &d.x_train, &d.query, &settings)?;
    let mut manifest = Manifest::new("ground-truth", Some(seed), resolved);
    let path = write_ground_truth(ctx, &gt, &d)?;
    ctx.finish(&mut manifest, &[path])
}

/// `(inputs, targets)` pairs to select on.
type DataSets = Vec<(Mat, Vector)>;

/// Score per candidate per data set: label, score, whether it was that set's pick.
type ScoreTable = Vec<Vec<(String, f64, bool)>>;

/// Data sets to select on: the given file, or independent synthetic draws.
fn selection_data(ctx: &Ctx, src: SelectSource, seed: u64, r: &mut Resolved) -> CliResult<(DataSets, Option<GeneratorKind>)> {
    let f = &ctx.file;
    if let Some(path) = src.data.or_else(|| if src.generator.is_none() { f.data.clone() } else { None }) {
        let t = read_table(&path, true)?;
        r.set("data", path.display().to_string());
        return Ok((vec![(t.x, t.y.expect("target column checked"))], None));
    }
    let kind = generator(src.generator, f)?;
    let n = pick(src.n, f.n, ExperimentConfig::defaults_for(kind).n_train);
    let generations = pick(src.generations, f.generations, 1);
    if generations == 0 {
        return Err(CliError::Usage("--generations must be at least 1".into()));
    }
    r.set("generator", kind.name()).set("n", n).set("generations", generations);
    let sets = (0..generations)
        .map(|g| {
            let spec = GeneratorSpec::new(kind, n, derive_seed(derive_seed(seed, g as u64), 0));
            generate(&spec).map(|d| (d.x, d.y))
        })
        .collect::<elm_uq::Result<Vec<_>>>()?;
    Ok((sets, Some(kind)))
}

fn cmd_select(ctx: &Ctx, cmd: SelectCommand) -> CliResult<()> {
    let f = &ctx.file;
    let seed = ctx.seed();
    let mut r = Resolved::new();
    let (what, scores): (&str, ScoreTable) = match cmd {
        SelectCommand::Neurons { source, values, alpha, folds, repeats } => {
            let grid: Vec<usize> = parse_list(
                &values.or_else(|| f.values.clone()).ok_or_else(|| CliError::Usage("--values is required".into()))?,
                "neuron count",
            )?;
            let folds = pick(folds, f.folds, 10);
            let repeats = pick(repeats, f.repeats, 1);
            let (sets, kind) = selection_data(ctx, source, seed.0, &mut r)?;
            let base = elm_config(
                ModelArgs { alpha, ..Default::default() },
                f,
                ElmConfig { scaler: kind.and_then(|k| k.domain_scaler()), ..ElmConfig::new(DEFAULT_NEURONS, 0.0) },
            )?;
            r.set("values", &grid).set("folds", folds).set("repeats", repeats).set("alpha", base.alpha);
            let out = sets
                .iter()
                .enumerate()
                .map(|(g, (x, y))| {
                    let s = select_neurons_cv(&grid, folds, repeats, &base, x, y, derive_seed(derive_seed(seed.0, g as u64), 1))?;
                    Ok(s.scores.iter().map(|&(v, sc)| (v.to_string(), sc, v == s.selected)).collect())
                })
                .collect::<CliResult<Vec<_>>>()?;
            ("neurons", out)
        }
        SelectCommand::Alpha { source, values, neurons, draws } => {
            let grid: Vec<f64> =
                parse_list(&values.or_else(|| f.values.clone()).unwrap_or_else(|| DEFAULT_ALPHA_GRID.into()), "alpha")?;
            let draws = pick(draws, f.draws, 10);
            let (sets, kind) = selection_data(ctx, source, seed.0, &mut r)?;
            let base = elm_config(
                ModelArgs { neurons, ..Default::default() },
                f,
                ElmConfig { scaler: kind.and_then(|k| k.domain_scaler()), ..ElmConfig::new(DEFAULT_NEURONS, 0.0) },
            )?;
            r.set("values", &grid).set("draws", draws).set("neurons", base.neurons);
            let out = sets
                .iter()
                .enumerate()
                .map(|(g, (x, y))| {
                    let s = select_alpha_gcv(&grid, &base, draws, x, y, derive_seed(derive_seed(seed.0, g as u64), 1))?;
                    Ok(s.scores.iter().map(|&(v, sc)| (fmt_real(v), sc, v == s.selected)).collect())
                })
                .collect::<CliResult<Vec<_>>>()?;
            ("alpha", out)
        }
    };

    let path = write_file(&ctx.out, "selection.csv", |w| {
        writeln!(w, "generation,{what},score,selected")?;
        for (g, rows) in scores.iter().enumerate() {
            for (v, s, sel) in rows {
                writeln!(w, "{g},{v},{},{}", fmt_real(*s), u8::from(*sel))?;
            }
        }
        Ok(())
    })?;

    let (best_mean, modal) = summarize_selection(&scores);
    let summary = format!("{what}: lowest mean score at {best_mean}, most frequent choice {modal}");
    println!("{summary}");
    let mut manifest = Manifest::new(&format!("select {what}"), Some(seed), r);
    manifest.notes.push(summary);
    ctx.finish(&mut manifest, &[path])
}

/// Value with the lowest score averaged over generations, and the value chosen
/// most often. Both break ties by grid order.
fn summarize_selection(scores: &[Vec<(String, f64, bool)>]) -> (String, String) {
    let grid: Vec<&String> = scores[0].iter().map(|(v, _, _)| v).collect();
    let mean = |k: usize| scores.iter().map(|g| g[k].1).sum::<f64>() / scores.len() as f64;
    let best = (0..grid.len()).fold(0, |b, k| if mean(k) < mean(b) { k } else { b });
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for g in scores {
        if let Some(k) = g.iter().position(|(_, _, sel)| *sel) {
            *counts.entry(k).or_default() += 1;
        }
    }
    let modal = counts.iter().fold((0, 0), |(bk, bc), (&k, &c)| if c > bc { (k, c) } else { (bk, bc) }).0;
    (grid[best].clone(), grid[modal].clone())
}
