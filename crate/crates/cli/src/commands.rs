use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use repgeo::ingest::{
    load_run, read_tensor, sample_rows, write_tensor, LayerSource, Run, Tensor, TensorError, INPUT_LAYER, OUTPUT_LAYER,
};
use repgeo::profile::{
    adjacent_ii_profile, detect_double_hunchback, detect_transition, id_profile, ii_to_input_profile, summarize_run,
    training_phase_split, write_series_csv, LayerProfile, SweepEntry, DEFAULT_PEAK_MARGIN,
};
use repgeo::synth::{generate, ManifoldSpec, Synthetic};
use repgeo::{estimate_id_2nn, information_imbalance, relative_ii_difference, PointCloud};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CrossArgs, IdArgs, IiArgs, IiMode, ReportArgs, Sampling, SweepArgs, SynthArgs};
use crate::error::{io_err, CliError};
use crate::report::{is_tensor_file, Recorder};

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn open_run(rec: &mut Recorder, path: &Path, sampling: &Sampling) -> Result<Run, CliError> {
    let run = load_run(path)?;
    rec.digest_input(path)?;
    match sampling.n {
        Some(n) => Ok(run.subsample(n, sampling.seed)?),
        None => Ok(run),
    }
}

fn open_tensor(rec: &mut Recorder, path: &Path, sampling: &Sampling) -> Result<PointCloud, CliError> {
    let tensor_err = |source: TensorError| CliError::Tensor { path: path.to_owned(), source };
    let tensor = read_tensor(path).map_err(tensor_err)?;
    rec.digest_input(path)?;
    let n = tensor.dims().first().copied().unwrap_or(0);
    let cloud = tensor.to_cloud((0..n).collect()).map_err(tensor_err)?;
    match sampling.n {
        Some(m) if m < 3 || m > cloud.len() => {
            Err(CliError::Usage(format!("--n {m} must lie in [3, {}] for {}", cloud.len(), path.display())))
        }
        Some(m) => Ok(cloud.select(&sample_rows(cloud.len(), m, sampling.seed))?),
        None => Ok(cloud),
    }
}

fn write_profile(rec: &mut Recorder, rel: String, profile: &LayerProfile) -> Result<(), CliError> {
    let path = rec.output(rel)?;
    let file = File::create(&path).map_err(io_err(&path))?;
    profile.write_csv(file).map_err(|source| CliError::Csv { path, source })
}

fn write_series(rec: &mut Recorder, rel: String, series: &[(u32, f64)]) -> Result<(), CliError> {
    let path = rec.output(rel)?;
    let file = File::create(&path).map_err(io_err(&path))?;
    write_series_csv(series, file).map_err(|source| CliError::Csv { path, source })
}

pub fn id(args: &IdArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    if is_tensor_file(&args.input) {
        let cloud = open_tensor(rec, &args.input, &args.sampling)?;
        let estimate = rec.timed("id", || Ok(estimate_id_2nn(&cloud, args.discard_fraction)?))?;
        return Ok(json!({ "n": cloud.len(), "dim": cloud.dim(), "estimate": to_value(&estimate) }));
    }
    let run = open_run(rec, &args.input, &args.sampling)?;
    let epoch = args.epoch.unwrap_or_else(|| run.last_epoch());
    let profile = rec.timed(format!("id_profile e{epoch}"), || Ok(id_profile(&run, epoch, args.discard_fraction)?))?;
    write_profile(rec, format!("id_e{epoch:04}.csv"), &profile)?;
    let hunchback = detect_double_hunchback(&profile.values, DEFAULT_PEAK_MARGIN);
    Ok(json!({ "profile": to_value(&profile), "hunchback": to_value(&hunchback) }))
}

pub fn ii(args: &IiArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    let run = open_run(rec, &args.run, &args.sampling)?;
    let epoch = args.epoch.unwrap_or_else(|| run.last_epoch());
    match args.mode {
        IiMode::ToInput => {
            let p = rec.timed(format!("ii_to_input e{epoch}"), || Ok(ii_to_input_profile(&run, epoch)?))?;
            write_profile(rec, format!("ii_to_input_e{epoch:04}.csv"), &p)?;
            Ok(json!({ "profile": to_value(&p) }))
        }
        IiMode::Adjacent => {
            let p = rec.timed(format!("ii_adjacent e{epoch}"), || Ok(adjacent_ii_profile(&run, epoch)?))?;
            write_profile(rec, format!("ii_adjacent_e{epoch:04}.csv"), &p)?;
            Ok(json!({ "profile": to_value(&p) }))
        }
        IiMode::Pair => {
            let (a, b) = match (args.a, args.b) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(CliError::Usage("--mode pair needs --a and --b".into())),
            };
            let r = rec.timed(format!("ii l{a} l{b} e{epoch}"), || {
                Ok(information_imbalance(&run.cloud(a, epoch)?, &run.cloud(b, epoch)?)?)
            })?;
            let rel = relative_ii_difference(r.delta_ab, r.delta_ba).ok();
            Ok(json!({ "epoch": epoch, "layer_a": a, "layer_b": b, "imbalance": to_value(&r), "relative_difference": rel }))
        }
    }
}

fn cross_side(rec: &mut Recorder, path: &Path, args: &CrossArgs) -> Result<(PointCloud, Value), CliError> {
    if is_tensor_file(path) {
        let cloud = open_tensor(rec, path, &args.sampling)?;
        return Ok((cloud, json!({ "path": path })));
    }
    let run = open_run(rec, path, &args.sampling)?;
    let epoch = args.epoch.unwrap_or_else(|| run.last_epoch());
    let cloud = run.cloud(args.layer, epoch)?;
    Ok((cloud, json!({ "path": path, "layer": args.layer, "epoch": epoch, "bottleneck_size": run.bottleneck_size() })))
}

pub fn cross(args: &CrossArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    let (a, side_a) = cross_side(rec, &args.a, args)?;
    let (b, side_b) = cross_side(rec, &args.b, args)?;
    let r = rec.timed("cross", || Ok(information_imbalance(&a, &b)?))?;
    let rel = relative_ii_difference(r.delta_ab, r.delta_ba).ok();
    Ok(json!({ "a": side_a, "b": side_b, "imbalance": to_value(&r), "relative_difference": rel }))
}

pub fn sweep(args: &SweepArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    let mut entries = Vec::with_capacity(args.runs.len());
    for path in &args.runs {
        let run = open_run(rec, path, &args.sampling)?;
        let epoch = args.epoch.unwrap_or_else(|| run.last_epoch());
        let entry = rec.timed(format!("summarize k{}", run.bottleneck_size()), || {
            Ok(summarize_run(&run, epoch, args.discard_fraction, args.tau)?)
        })?;
        entries.push(entry);
    }
    let report = detect_transition(entries)?;
    let path = rec.output("sweep.csv")?;
    write_sweep_csv(&path, &report.entries)?;
    Ok(to_value(&report))
}

fn write_sweep_csv(path: &Path, entries: &[SweepEntry]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv { path: path.to_owned(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["bottleneck_size", "epoch", "input_id", "bottleneck_ii", "output_ii", "is_double"]).map_err(csv_err)?;
    for e in entries {
        w.write_record([
            e.bottleneck_size.to_string(),
            e.epoch.to_string(),
            e.input_id.to_string(),
            e.bottleneck_ii.to_string(),
            e.output_ii.to_string(),
            e.hunchback.is_double.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn synth(args: &SynthArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    let spec = ManifoldSpec {
        kind: args.kind.into(),
        intrinsic_dim: args.d,
        ambient_dim: args.ambient,
        n: args.n,
        noise: args.noise,
        seed: args.seed,
    };
    let generated = rec.timed("generate", || Ok(generate(&spec)?))?;
    let clouds = match &generated {
        Synthetic::Single(c) => vec![("cloud.rga", c)],
        Synthetic::Pair(x, y) => vec![("x.rga", x), ("y.rga", y)],
    };
    let mut files = Vec::new();
    for (name, cloud) in clouds {
        let path = rec.output(name)?;
        write_tensor(&path, &Tensor::from_cloud(cloud))
            .map_err(|source| CliError::Tensor { path: path.clone(), source })?;
        files.push(name);
    }
    let spec_path = rec.output("spec.json")?;
    let text = serde_json::to_string_pretty(&spec).expect("specs serialize");
    std::fs::write(&spec_path, text).map_err(io_err(&spec_path))?;
    Ok(json!({ "spec": to_value(&spec), "files": files }))
}

pub fn report(args: &ReportArgs, rec: &mut Recorder) -> Result<Value, CliError> {
    let mut runs = Vec::with_capacity(args.runs.len());
    let mut last_entries = Vec::with_capacity(args.runs.len());
    for (i, path) in args.runs.iter().enumerate() {
        let run = open_run(rec, path, &args.sampling)?;
        let label = format!("run{i:02}_k{}", run.bottleneck_size());
        let mut epochs = Vec::new();
        let mut output_to_input = Vec::new();
        for &epoch in run.epochs() {
            let (ids, ii, adj) = rec.timed(format!("{label} e{epoch}"), || {
                Ok((
                    id_profile(&run, epoch, args.discard_fraction)?,
                    ii_to_input_profile(&run, epoch)?,
                    adjacent_ii_profile(&run, epoch)?,
                ))
            })?;
            write_profile(rec, format!("{label}/id_e{epoch:04}.csv"), &ids)?;
            write_profile(rec, format!("{label}/ii_to_input_e{epoch:04}.csv"), &ii)?;
            write_profile(rec, format!("{label}/ii_adjacent_e{epoch:04}.csv"), &adj)?;
            output_to_input.push((epoch, ii.values[OUTPUT_LAYER]));
            if epoch == run.last_epoch() {
                last_entries.push(SweepEntry::from_profiles(&ids, &ii, args.tau)?);
            }
            epochs.push(json!({
                "epoch": epoch,
                "input_id": ids.values[INPUT_LAYER],
                "id_profile": ids.values,
                "hunchback": to_value(&detect_double_hunchback(&ids.values, args.tau)),
                "ii_to_input": ii.values,
                "ii_adjacent": adj.values,
            }));
        }
        write_series(rec, format!("{label}/output_to_input.csv"), &output_to_input)?;
        let kl = run.loss_log()?.map(|log| log.kl_series());
        if let Some(kl) = &kl {
            write_series(rec, format!("{label}/kl.csv"), kl)?;
        }
        runs.push(json!({
            "label": label,
            "path": path,
            "bottleneck_size": run.bottleneck_size(),
            "n": run.n(),
            "epochs": epochs,
            "output_to_input": output_to_input,
            "output_to_input_split": training_phase_split(&output_to_input),
            "kl": kl,
            "kl_split": kl.as_deref().and_then(training_phase_split),
        }));
    }
    let sizes: BTreeSet<usize> = last_entries.iter().map(|e| e.bottleneck_size).collect();
    let transition = if sizes.len() >= 3 && sizes.len() == last_entries.len() {
        let t = detect_transition(last_entries)?;
        let path = rec.output("sweep.csv")?;
        write_sweep_csv(&path, &t.entries)?;
        Some(t)
    } else {
        None
    };
    Ok(json!({ "runs": runs, "transition": transition.as_ref().map(to_value) }))
}
