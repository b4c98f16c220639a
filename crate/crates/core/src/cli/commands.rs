use std::path::Path;
use std::time::Instant;

use log::info;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::Output;
use super::{
    exit_code, Cli, Command, PannArgs, ReproduceTarget, SynthesisArgs, TrainTarget, TwoPortArgs,
    EXIT_USER,
};
use crate::error::{Error, Result};
use crate::geometry::{wavelength, ArrayGeometry, DipoleSpec};
use crate::mom::network::matrix_rows;
use crate::mom::{frequency_sweep, matrix_csv, solve_port_impedance, sweep_csv, z_to_s};
use crate::pann::{history_csv, train_pann};
use crate::pc_lstm::{
    predict_two_port, relative_errors, train_two_port, two_port_history_csv, ModelBundle,
};
use crate::reference::{
    complex_relative_error, CASE_MAX_SECONDS, CASE_TOLERANCE, IMPEDANCE_CASES, PANN_LOSS_TOLERANCE,
    PANN_MAX_SECONDS, PANN_REFERENCE_EPOCHS, PANN_REFERENCE_LOSS, SURROGATE_TOLERANCE,
    SYNTHESIS_MAX_SECONDS, SYNTHESIS_TARGETS,
};
use crate::synthesis::{
    gen_dataset, gen_two_port_dataset, packed_csv, sample_spacings, synthesis_errors,
    synthesis_history_csv, synthesize_array, train_synthesis, Dataset, Sample, SynthesisModel,
};

/// A failed command: exit code and message.
#[derive(Debug)]
pub(super) struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn user(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USER,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Tags an error with the pipeline stage that produced it.
fn stage<T>(name: &str, r: Result<T>) -> Outcome<T> {
    r.map_err(|e| Failure {
        code: exit_code(&e),
        message: format!("stage '{name}' failed: {e}"),
    })
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::MomSolve { .. } => "mom-solve",
        Command::Sweep { .. } => "sweep",
        Command::Train(TrainTarget::Pann(_)) => "train pann",
        Command::Train(TrainTarget::Twoport(_)) => "train twoport",
        Command::Train(TrainTarget::Synthesis(_)) => "train synthesis",
        Command::Predict { .. } => "predict",
        Command::Synthesize { .. } => "synthesize",
        Command::GenData { .. } => "gen-data",
        Command::Benchmark { .. } => "benchmark",
        Command::Reproduce { .. } => "reproduce",
    }
}

/// Applies command-line overrides on top of the file or default config.
fn apply_flags(command: &Command, config: &mut RunConfig) {
    match command {
        Command::MomSolve { ref_ohms, .. } | Command::Sweep { ref_ohms, .. } => {
            if let Some(r) = ref_ohms {
                config.ref_ohms = *r;
            }
        }
        Command::Train(TrainTarget::Pann(PannArgs {
            epochs,
            lr,
            alpha,
            fixed_weights,
            segments,
        })) => {
            let p = &mut config.pann;
            p.epochs = epochs.unwrap_or(p.epochs);
            p.learning_rate = lr.unwrap_or(p.learning_rate);
            p.alpha = alpha.unwrap_or(p.alpha);
            p.segments = segments.unwrap_or(p.segments);
            if *fixed_weights {
                p.adaptive = false;
            }
        }
        Command::Train(TrainTarget::Twoport(TwoPortArgs {
            samples,
            epochs,
            lr,
            kernel_side,
            kernel_decay,
            ..
        })) => {
            let t = &mut config.two_port;
            config.data.two_port_samples = samples.unwrap_or(config.data.two_port_samples);
            t.epochs = epochs.unwrap_or(t.epochs);
            t.learning_rate = lr.unwrap_or(t.learning_rate);
            t.kernel_side = kernel_side.unwrap_or(t.kernel_side);
            t.kernel_decay = kernel_decay.unwrap_or(t.kernel_decay);
        }
        Command::Train(TrainTarget::Synthesis(SynthesisArgs {
            samples,
            epochs,
            lr,
            ..
        })) => {
            let s = &mut config.synthesis;
            config.data.synthesis_samples = samples.unwrap_or(config.data.synthesis_samples);
            s.epochs = epochs.unwrap_or(s.epochs);
            s.learning_rate = lr.unwrap_or(s.learning_rate);
        }
        Command::GenData {
            elements,
            samples: Some(n),
        } => {
            if *elements == 2 {
                config.data.two_port_samples = *n;
            } else {
                config.data.synthesis_samples = *n;
            }
        }
        _ => {}
    }
}

pub(super) fn execute(cli: &Cli, argv: &[String]) -> Outcome {
    let mut config = match &cli.config {
        Some(p) => {
            RunConfig::load(p).map_err(|e| Failure::user(format!("config {}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.propagate_seed();
    apply_flags(&cli.command, &mut config);
    let mut out = Output::create(&cli.out)?;
    let result = run_command(&cli.command, &config, &mut out);
    let error = result.as_ref().err().map(|f| f.message.clone());
    out.finish(
        command_name(&cli.command),
        argv.get(1..).unwrap_or(&[]),
        &config,
        error,
    )?;
    result
}

fn run_command(command: &Command, config: &RunConfig, out: &mut Output) -> Outcome {
    if !(config.ref_ohms.is_finite() && config.ref_ohms > 0.0) {
        return Err(Failure::user(format!(
            "reference impedance must be positive, got {}",
            config.ref_ohms
        )));
    }
    match command {
        Command::MomSolve { geometry, .. } => mom_solve(config, out, geometry),
        Command::Sweep {
            geometry,
            f_start,
            f_stop,
            points,
            ..
        } => sweep(config, out, geometry, *f_start, *f_stop, *points),
        Command::Train(TrainTarget::Pann(_)) => train_pann_cmd(config, out),
        Command::Train(TrainTarget::Twoport(args)) => train_twoport_cmd(config, out, args),
        Command::Train(TrainTarget::Synthesis(args)) => train_synthesis_cmd(config, out, args),
        Command::Predict { bundle, geometry } => predict(out, bundle, geometry),
        Command::Synthesize {
            bundle,
            model,
            geometry,
        } => synthesize(config, out, bundle, model.as_deref(), geometry),
        Command::GenData { elements, .. } => gen_data(config, out, *elements),
        Command::Benchmark {
            bundle,
            model,
            repeats,
        } => benchmark(config, out, bundle, model, *repeats),
        Command::Reproduce { table, bundle } => match table {
            ReproduceTarget::Table1 => reproduce_table1(config, out),
            ReproduceTarget::Table2 => reproduce_table2(config, out, bundle.as_deref()),
            ReproduceTarget::Fig12 => reproduce_fig12(config, out, bundle.as_deref()),
        },
    }
}

fn read_geometry(out: &mut Output, path: &Path) -> Outcome<ArrayGeometry> {
    let text = out.read_input(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::user(format!("geometry {}: {e}", path.display())))
}

fn read_bundle(out: &mut Output, path: &Path) -> Outcome<ModelBundle> {
    let text = out.read_input(path)?;
    ModelBundle::from_json(&text)
        .map_err(|e| Failure::user(format!("bundle {}: {e}", path.display())))
}

fn read_model(out: &mut Output, path: &Path) -> Outcome<SynthesisModel> {
    let text = out.read_input(path)?;
    SynthesisModel::from_json(&text)
        .map_err(|e| Failure::user(format!("model {}: {e}", path.display())))
}

fn read_dataset(out: &mut Output, path: &Path) -> Outcome<Dataset> {
    let text = out.read_input(path)?;
    Dataset::read_jsonl(text.as_bytes())
        .map_err(|e| Failure::user(format!("dataset {}: {e}", path.display())))
}

fn dipole(config: &RunConfig) -> Result<DipoleSpec> {
    DipoleSpec::half_wave(
        config.data.frequency_hz,
        config.data.radius_wavelengths,
        config.data.segments,
    )
}

fn matrix_json(m: &crate::linalg::CMatrix, frequency_hz: f64) -> serde_json::Value {
    json!({
        "frequency_hz": frequency_hz,
        "ports": m.rows,
        "entries": matrix_rows(m),
    })
}

fn mom_solve(config: &RunConfig, out: &mut Output, path: &Path) -> Outcome {
    let g = read_geometry(out, path)?;
    let z = solve_port_impedance(&g)?;
    let s = z_to_s(&z, config.ref_ohms)?;
    out.write("zport.csv", z.to_csv())?;
    out.write_json("zport.json", &z.to_json())?;
    out.write("s.csv", matrix_csv(&s))?;
    let mut s_json = matrix_json(&s, z.frequency_hz);
    s_json["ref_ohms"] = json!(config.ref_ohms);
    out.write_json("s.json", &s_json)?;
    info!("solved {} ports into {}", z.ports(), out.dir().display());
    Ok(())
}

fn sweep(
    config: &RunConfig,
    out: &mut Output,
    path: &Path,
    f_start: f64,
    f_stop: f64,
    points: usize,
) -> Outcome {
    let g = read_geometry(out, path)?;
    let pts = frequency_sweep(&g, f_start, f_stop, points, config.ref_ohms)?;
    out.write("sweep.csv", sweep_csv(&pts))?;
    info!("swept {} frequencies", pts.len());
    Ok(())
}

fn train_pann_cmd(config: &RunConfig, out: &mut Output) -> Outcome {
    let t = train_pann(&config.pann)?;
    out.write("pann.json", t.model.to_json()?)?;
    out.write("loss_history.csv", history_csv(&t.history))?;
    out.write_json("pann_eval.json", &t.final_eval)?;
    info!(
        "PANN trained for {} epochs, final L_total {:.3e}",
        t.model.epoch, t.final_eval.l_total
    );
    Ok(())
}

fn two_port_samples(config: &RunConfig, out: &mut Output, args: &TwoPortArgs) -> Outcome<Dataset> {
    match (&args.data, args.generate) {
        (Some(_), true) => Err(Failure::user("give --data or --generate, not both")),
        (Some(p), false) => read_dataset(out, p),
        (None, true) => Ok(generate_two_port(config)?),
        (None, false) => Err(Failure::user(
            "missing training data: pass --data <dataset.jsonl> or --generate",
        )),
    }
}

fn generate_two_port(config: &RunConfig) -> Result<Dataset> {
    gen_two_port_dataset(
        config.data.two_port_samples,
        config.data.two_port_range,
        dipole(config)?,
        config.data.frequency_hz,
        config.seed,
    )
}

fn generate_synthesis(config: &RunConfig) -> Result<Vec<Dataset>> {
    config
        .data
        .synthesis_sizes
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            gen_dataset(
                config.data.synthesis_samples,
                m,
                dipole(config)?,
                config.data.frequency_hz,
                &config.synthesis.constraints,
                config.seed + k as u64,
            )
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ErrorStats {
    count: usize,
    mean: f64,
    max: f64,
}

fn stats(errors: &[f64]) -> Option<ErrorStats> {
    if errors.is_empty() {
        return None;
    }
    Some(ErrorStats {
        count: errors.len(),
        mean: errors.iter().sum::<f64>() / errors.len() as f64,
        max: errors.iter().cloned().fold(0.0, f64::max),
    })
}

/// Trains the two-port model and writes its bundle, history and holdout errors.
fn fit_two_port(config: &RunConfig, out: &mut Output, samples: &[Sample]) -> Outcome<ModelBundle> {
    let t = stage(
        "two-port training",
        train_two_port(samples, &config.two_port),
    )?;
    out.write("bundle.json", t.bundle.to_json()?)?;
    out.write("twoport_history.csv", two_port_history_csv(&t.history))?;
    let holdout: Vec<Sample> = t
        .holdout_indices
        .iter()
        .map(|&i| samples[i].clone())
        .collect();
    let errors = if t.bundle.is_trained() {
        stage("evaluation", relative_errors(&t.bundle, &holdout))?
    } else {
        Vec::new()
    };
    let mut csv = String::from("index,spacing_wavelengths,relative_error\n");
    for ((i, s), e) in t.holdout_indices.iter().zip(&holdout).zip(&errors) {
        let d = s.geometry.spacings_m()[0] / s.geometry.wavelength();
        csv.push_str(&format!("{i},{d:.17e},{e:.17e}\n"));
    }
    out.write("holdout.csv", csv)?;
    let summary = json!({
        "epochs": t.bundle.epoch,
        "final_loss": t.final_loss,
        "train_samples": t.train_indices.len(),
        "holdout": stats(&errors),
        "bundle_hash": t.bundle.hash()?,
    });
    out.write_json("twoport_summary.json", &summary)?;
    info!(
        "two-port model trained, final loss {:.3e}, holdout {:?}",
        t.final_loss,
        stats(&errors)
    );
    Ok(t.bundle)
}

fn train_twoport_cmd(config: &RunConfig, out: &mut Output, args: &TwoPortArgs) -> Outcome {
    let data = two_port_samples(config, out, args)?;
    fit_two_port(config, out, &data.samples)?;
    Ok(())
}

/// Trains the refinement network and writes the model, history and per-size holdout errors.
fn fit_synthesis(
    config: &RunConfig,
    out: &mut Output,
    bundle: &ModelBundle,
    datasets: &[Dataset],
) -> Outcome<(SynthesisModel, Vec<(usize, f64, Option<ErrorStats>)>)> {
    let refs: Vec<&[Sample]> = datasets.iter().map(|d| d.samples.as_slice()).collect();
    let t = stage(
        "synthesis training",
        train_synthesis(bundle, &refs, &config.synthesis),
    )?;
    out.write("synthesis_model.json", t.model.to_json()?)?;
    out.write("synthesis_history.csv", synthesis_history_csv(&t.history))?;
    let mut csv = String::from("elements,index,normalized_rms\n");
    let mut per_size = Vec::new();
    for ((d, (_, holdout)), fl) in datasets.iter().zip(&t.splits).zip(&t.final_losses) {
        let samples: Vec<Sample> = holdout.iter().map(|&i| d.samples[i].clone()).collect();
        let errors = if t.model.epoch > 0 {
            stage("evaluation", synthesis_errors(bundle, &t.model, &samples))?
        } else {
            Vec::new()
        };
        for (i, e) in holdout.iter().zip(&errors) {
            csv.push_str(&format!("{},{},{:.17e}\n", fl.elements, i, e));
        }
        per_size.push((fl.elements, fl.loss, stats(&errors)));
    }
    out.write("synthesis_holdout.csv", csv)?;
    let summary: Vec<_> = per_size
        .iter()
        .map(|(m, loss, s)| json!({"elements": m, "final_loss": loss, "holdout": s}))
        .collect();
    out.write_json("synthesis_summary.json", &summary)?;
    Ok((t.model, per_size))
}

fn train_synthesis_cmd(config: &RunConfig, out: &mut Output, args: &SynthesisArgs) -> Outcome {
    let bundle = read_bundle(out, &args.bundle)?;
    let datasets =
        match (args.data.is_empty(), args.generate) {
            (false, true) => return Err(Failure::user("give --data or --generate, not both")),
            (false, false) => args
                .data
                .iter()
                .map(|p| read_dataset(out, p))
                .collect::<Outcome<Vec<_>>>()?,
            (true, true) => generate_synthesis(config)?,
            (true, false) => return Err(Failure::user(
                "missing training data: pass --data <dataset.jsonl> (once per size) or --generate",
            )),
        };
    let (_, per_size) = fit_synthesis(config, out, &bundle, &datasets)?;
    for (m, loss, s) in per_size {
        info!("M={m}: final loss {loss:.3e}, holdout {s:?}");
    }
    Ok(())
}

fn predict(out: &mut Output, bundle: &Path, geometry: &Path) -> Outcome {
    let bundle = read_bundle(out, bundle)?;
    let g = read_geometry(out, geometry)?;
    if g.element_count() != 2 {
        return Err(Failure::user(format!(
            "predict needs a two-element geometry, got {} elements",
            g.element_count()
        )));
    }
    let p = predict_two_port(&bundle, &g)?;
    let doc = json!({
        "geometry": g,
        "z_port": matrix_json(&p.reconstructed, g.frequency_hz),
        "provenance": {
            "bundle_hash": bundle.hash()?,
            "warnings": p.warnings,
        },
    });
    out.write_json("prediction.json", &doc)?;
    Ok(())
}

fn synthesize(
    config: &RunConfig,
    out: &mut Output,
    bundle: &Path,
    model: Option<&Path>,
    geometry: &Path,
) -> Outcome {
    let bundle = read_bundle(out, bundle)?;
    let model = model.map(|p| read_model(out, p)).transpose()?;
    let g = read_geometry(out, geometry)?;
    let bundle_hash = bundle.hash()?;
    if let Some(m) = &model {
        if m.two_port_hash != bundle_hash {
            return Err(Failure::user(
                "refinement model was trained against a different two-port bundle",
            ));
        }
    }
    let constraints = model
        .as_ref()
        .map_or(&config.synthesis.constraints, |m| &m.constraints);
    let s = synthesize_array(&bundle, model.as_ref(), &g, constraints)?;
    out.write("synthesis.csv", packed_csv(&s.packed))?;
    let doc = json!({
        "geometry": g,
        "z_port": matrix_json(&s.reconstructed, g.frequency_hz),
        "provenance": {
            "bundle_hash": bundle_hash,
            "refined": model.is_some() && g.element_count() > 2,
            "warnings": s.warnings,
        },
    });
    out.write_json("synthesis_matrix.json", &doc)?;
    Ok(())
}

fn gen_data(config: &RunConfig, out: &mut Output, elements: usize) -> Outcome {
    let data = match elements {
        0 | 1 => {
            return Err(Failure::user(format!(
                "gen-data needs at least 2 elements, got {elements}"
            )))
        }
        2 => generate_two_port(config)?,
        m => gen_dataset(
            config.data.synthesis_samples,
            m,
            dipole(config)?,
            config.data.frequency_hz,
            &config.synthesis.constraints,
            config.seed,
        )?,
    };
    let mut buf = Vec::new();
    data.write_jsonl(&mut buf)?;
    out.write("dataset.jsonl", buf)?;
    out.write_json(
        "dataset_summary.json",
        &json!({"elements": elements, "samples": data.len(), "skipped": data.skipped}),
    )?;
    info!(
        "generated {} samples ({} skipped)",
        data.len(),
        data.skipped.len()
    );
    Ok(())
}

/// Rounds to `digits` significant digits.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let shift = digits - 1 - x.abs().log10().floor() as i32;
    let factor = 10f64.powi(shift.abs());
    if shift >= 0 {
        (x * factor).round() / factor
    } else {
        (x / factor).round() * factor
    }
}

fn median_seconds(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut t = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        t.push(start.elapsed().as_secs_f64());
    }
    t.sort_by(f64::total_cmp);
    Ok(t[t.len() / 2])
}

pub const BENCHMARK_SIZES: [usize; 3] = [2, 10, 30];

fn benchmark(
    config: &RunConfig,
    out: &mut Output,
    bundle: &Path,
    model: &Path,
    repeats: usize,
) -> Outcome {
    if repeats == 0 {
        return Err(Failure::user("repeats must be at least 1"));
    }
    let bundle = read_bundle(out, bundle)?;
    let model = read_model(out, model)?;
    let lam = wavelength(config.data.frequency_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sizes = Vec::new();
    for m in BENCHMARK_SIZES {
        let spacings: Vec<f64> = sample_spacings(m, &model.constraints, &mut rng)?
            .iter()
            .map(|d| d * lam)
            .collect();
        let g = ArrayGeometry::from_spacings(dipole(config)?, &spacings, config.data.frequency_hz)?;
        let mom = median_seconds(repeats, || solve_port_impedance(&g).map(|_| ()))?;
        let inference = median_seconds(repeats, || {
            synthesize_array(&bundle, Some(&model), &g, &model.constraints).map(|_| ())
        })?;
        sizes.push(json!({
            "elements": m,
            "mom_solve_seconds": mom,
            "inference_seconds": inference,
            "ratio": round_significant(mom / inference, 3),
        }));
        info!("M={m}: MoM {mom:.4e} s, inference {inference:.4e} s");
    }
    let doc = json!({
        "repeats": repeats,
        "statistic": "median",
        "sizes": sizes,
        "reference_context": "the reference reports about 7x speedup over a commercial full-wave solver; not measured here",
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
    text.push('\n');
    out.write_volatile("benchmark.json", text)?;
    Ok(())
}

/// One line of a reproduction report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub item: String,
    pub computed: String,
    pub reference: String,
    pub metric: String,
    pub value: f64,
    pub limit: Option<f64>,
    pub verdict: String,
}

impl ReportRow {
    fn new(
        item: String,
        computed: String,
        reference: String,
        metric: &str,
        value: f64,
        limit: Option<f64>,
    ) -> Self {
        let verdict = match limit {
            Some(l) if value <= l => "PASS",
            Some(_) => "FAIL",
            None => "n/a",
        };
        ReportRow {
            item,
            computed,
            reference,
            metric: metric.to_string(),
            value,
            limit,
            verdict: verdict.to_string(),
        }
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:.3}{:+.3}j", z.re, z.im)
}

fn fmt_limit(l: Option<f64>) -> String {
    l.map_or_else(|| "-".to_string(), |l| format!("{l:e}"))
}

fn write_report(
    out: &mut Output,
    title: &str,
    rows: &[ReportRow],
    timings: &[(String, f64, f64)],
) -> Result<()> {
    let mut csv = String::from("item,computed,reference,metric,value,limit,verdict\n");
    let mut md = format!(
        "# Reproduction report: {title}\n\n| item | computed | reference | metric | value | limit | verdict |\n|---|---|---|---|---|---|---|\n"
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{:e},{},{}\n",
            r.item,
            r.computed,
            r.reference,
            r.metric,
            r.value,
            fmt_limit(r.limit),
            r.verdict
        ));
        md.push_str(&format!(
            "| {} | {} | {} | {} | {:.4e} | {} | {} |\n",
            r.item,
            r.computed,
            r.reference,
            r.metric,
            r.value,
            fmt_limit(r.limit),
            r.verdict
        ));
    }
    md.push_str("\nWall-clock runtimes are in timings.csv.\n");
    out.write("report.csv", csv)?;
    out.write("report.md", md)?;
    let mut t = String::from("stage,seconds,limit_seconds,verdict\n");
    for (name, secs, limit) in timings {
        let verdict = if secs <= limit { "PASS" } else { "FAIL" };
        t.push_str(&format!("{name},{secs:.3},{limit},{verdict}\n"));
    }
    out.write_volatile("timings.csv", t)?;
    let failed = rows.iter().filter(|r| r.verdict == "FAIL").count();
    info!("{title}: {} rows, {failed} outside tolerance", rows.len());
    Ok(())
}

fn reproduce_table1(config: &RunConfig, out: &mut Output) -> Outcome {
    let start = Instant::now();
    let t = stage("pann training", train_pann(&config.pann))?;
    let secs = start.elapsed().as_secs_f64();
    out.write("pann.json", t.model.to_json()?)?;
    out.write("loss_history.csv", history_csv(&t.history))?;
    let rows = vec![
        ReportRow::new(
            "PANN final L_total".into(),
            format!("{:.3e}", t.final_eval.l_total),
            format!("{PANN_REFERENCE_LOSS:e}"),
            "loss",
            t.final_eval.l_total,
            Some(PANN_LOSS_TOLERANCE),
        ),
        ReportRow::new(
            "PANN training epochs".into(),
            t.model.epoch.to_string(),
            PANN_REFERENCE_EPOCHS.to_string(),
            "epochs",
            t.model.epoch as f64,
            Some(PANN_REFERENCE_EPOCHS as f64),
        ),
    ];
    write_report(
        out,
        "table1",
        &rows,
        &[("pann training".into(), secs, PANN_MAX_SECONDS)],
    )?;
    Ok(())
}

fn reproduce_table2(config: &RunConfig, out: &mut Output, bundle: Option<&Path>) -> Outcome {
    let bundle = bundle.map(|p| read_bundle(out, p)).transpose()?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for case in IMPEDANCE_CASES {
        let g = stage("geometry", case.geometry(config.data.segments))?;
        let start = Instant::now();
        let z = stage(
            &format!("{} MoM solve", case.name),
            solve_port_impedance(&g),
        )?;
        timings.push((
            format!("{} MoM solve", case.name),
            start.elapsed().as_secs_f64(),
            CASE_MAX_SECONDS,
        ));
        let (z11, z12) = (z.get(0, 0), z.get(0, 1));
        for (label, computed, reference) in [("Z11", z11, case.z11), ("Z12", z12, case.z12)] {
            rows.push(ReportRow::new(
                format!("{} {label} MoM", case.name),
                fmt_complex(computed),
                fmt_complex(reference),
                "complex relative error",
                complex_relative_error(computed, reference),
                Some(CASE_TOLERANCE),
            ));
        }
        if let Some(b) = &bundle {
            let p = stage("two-port prediction", predict_two_port(b, &g))?;
            for (label, learned, oracle) in [("Z11", p.z11, z11), ("Z12", p.z12, z12)] {
                rows.push(ReportRow::new(
                    format!("{} {label} learned vs MoM", case.name),
                    fmt_complex(learned),
                    fmt_complex(oracle),
                    "complex relative error",
                    complex_relative_error(learned, oracle),
                    Some(SURROGATE_TOLERANCE),
                ));
            }
        }
    }
    write_report(out, "table2", &rows, &timings)?;
    Ok(())
}

fn reproduce_fig12(config: &RunConfig, out: &mut Output, bundle: Option<&Path>) -> Outcome {
    let start = Instant::now();
    let bundle = match bundle {
        Some(p) => read_bundle(out, p)?,
        None => {
            let data = stage("two-port data", generate_two_port(config))?;
            fit_two_port(config, out, &data.samples)?
        }
    };
    let datasets = stage("synthesis data", generate_synthesis(config))?;
    let (_, per_size) = fit_synthesis(config, out, &bundle, &datasets)?;
    let mut rows = Vec::new();
    for (m, loss, holdout) in per_size {
        let target = SYNTHESIS_TARGETS.iter().find(|t| t.0 == m);
        rows.push(ReportRow::new(
            format!("M={m} final normalized loss"),
            format!("{loss:.3e}"),
            target.map_or("-".into(), |t| format!("{:e}", t.1)),
            "loss",
            loss,
            target.map(|t| t.2),
        ));
        let mean = holdout.as_ref().map_or(f64::NAN, |s| s.mean);
        rows.push(ReportRow::new(
            format!("M={m} holdout normalized RMS (mean)"),
            format!("{:.3}%", 100.0 * mean),
            "-".into(),
            "normalized RMS",
            mean,
            target.map(|t| t.3),
        ));
    }
    write_report(
        out,
        "fig12",
        &rows,
        &[(
            "full pipeline".into(),
            start.elapsed().as_secs_f64(),
            SYNTHESIS_MAX_SECONDS,
        )],
    )?;
    Ok(())
}
