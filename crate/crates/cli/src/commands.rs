use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qxg_core::bench::{run_bench, scaling_study, BenchConfig, BenchReport, ScalingReport, SCALING_SIZES};
use qxg_core::builder::{export_graph, import_json, Builder, ExportFormat, Qxg};
use qxg_core::calculi::CalculiConfig;
use qxg_core::explainer::{
    build_dataset, cause_recovery, evaluate, explain, load_model, save_model, train,
    CauseRecovery, EncodingSpec, EvalReport, LabeledGraph, ModelBundle,
};
use qxg_core::scene::{parse_trace, trace_to_string, ActionAnnotation, Scene, Trace};
use qxg_core::synthgen::{generate_corpus, split_of, ScenarioKind, ScenarioSpec, Split};
use serde::Serialize;

use crate::config::AppConfig;
use crate::{
    BenchArgs, BuildArgs, Command, EvalArgs, ExplainArgs, GenArgs, GraphFormat, InspectArgs,
    SplitArg, TrainArgs,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Explain(a) => explain_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Inspect(a) => inspect_cmd(a),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn read_trace(path: &Path) -> Result<Trace> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_trace(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

/// Trace files (`*.jsonl`) of a directory, by file name.
fn read_trace_dir(dir: &Path, split: SplitArg) -> Result<Vec<(PathBuf, Trace)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let trace = read_trace(&p)?;
        if split.accepts(split_of(&trace.scene.scene_id)) {
            out.push((p, trace));
        }
    }
    Ok(out)
}

fn build_graph(
    scene: &Scene,
    calculi: &CalculiConfig,
    cutoff: Option<f64>,
    until: Option<u32>,
    verbose: bool,
) -> Result<Qxg> {
    let mut builder = Builder::new(calculi.clone())
        .with_scene_id(scene.scene_id.clone())
        .with_distance_cutoff(cutoff);
    for frame in &scene.frames {
        if until.is_some_and(|u| frame.index > u) {
            break;
        }
        let stats = builder.push_frame(frame)?;
        if verbose {
            eprintln!("{}", serde_json::to_string(&stats)?);
        }
    }
    Ok(builder.finalize())
}

fn labeled(
    traces: &[(PathBuf, Trace)],
    calculi: &CalculiConfig,
    cutoff: Option<f64>,
) -> Result<Vec<LabeledGraph>> {
    traces
        .iter()
        .map(|(p, t)| {
            Ok(LabeledGraph {
                qxg: build_graph(&t.scene, calculi, cutoff, None, false)
                    .with_context(|| format!("building {}", p.display()))?,
                annotations: t.actions.clone(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    scene_id: String,
    kind: ScenarioKind,
    split: Split,
    action: String,
    frame: u32,
    actor: String,
    cause: Option<String>,
    nearest: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    master_seed: u64,
    n_frames: usize,
    n_distractors: usize,
    jitter_sigma: f64,
    scenes: Vec<ManifestEntry>,
}

fn gen(a: GenArgs) -> Result<()> {
    let app = AppConfig::load(a.config.as_deref())?;
    let seed = a.seed.unwrap_or(app.seed);
    let kinds = if a.kinds.is_empty() {
        ScenarioKind::ALL.to_vec()
    } else {
        a.kinds.clone()
    };
    let base = ScenarioSpec {
        n_frames: a.frames,
        n_distractors: a.distractors,
        jitter_sigma: a.jitter,
        ..ScenarioSpec::default()
    };
    let corpus = generate_corpus(&kinds, a.scenes as usize, &base, seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut scenes = Vec::with_capacity(corpus.len());
    for g in &corpus {
        let gt = &g.ground_truth;
        let file = format!("{}.jsonl", gt.scene_id);
        write_atomic(&a.out.join(&file), trace_to_string(&g.trace).as_bytes())?;
        scenes.push(ManifestEntry {
            file,
            scene_id: gt.scene_id.clone(),
            kind: gt.kind,
            split: split_of(&gt.scene_id),
            action: gt.action.clone(),
            frame: gt.frame_index,
            actor: gt.actor_id.clone(),
            cause: gt.cause_id.clone(),
            nearest: gt.nearest_id.clone(),
        });
    }
    let manifest = Manifest {
        master_seed: seed,
        n_frames: a.frames,
        n_distractors: a.distractors,
        jitter_sigma: a.jitter,
        scenes,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&a.out.join("manifest.json"), text.as_bytes())?;
    eprintln!("wrote {} traces to {}", corpus.len(), a.out.display());
    Ok(())
}

fn build_cmd(a: BuildArgs) -> Result<()> {
    let app = AppConfig::load(a.config.as_deref())?;
    let trace = read_trace(&a.trace)?;
    let qxg = build_graph(
        &trace.scene,
        &app.calculi,
        app.distance_cutoff,
        a.until,
        a.verbose,
    )?;
    eprintln!(
        "{}: {} nodes, {} edges",
        qxg.scene_id(),
        qxg.node_count(),
        qxg.edge_count()
    );
    let format = match a.format {
        GraphFormat::Json => ExportFormat::Json,
        GraphFormat::Dot => ExportFormat::Dot,
    };
    emit(a.out.as_deref(), &export_graph(&qxg, format))
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut app = AppConfig::load(a.config.as_deref())?;
    if let Some(s) = a.seed {
        app.seed = s;
    }
    if let Some(t) = a.t {
        app.t = t as usize;
    }
    if let Some(n) = a.trees {
        app.hyperparams.n_trees = n as usize;
    }
    let traces = read_trace_dir(&a.traces, a.split)?;
    if traces.is_empty() {
        bail!("no traces in {} for the selected split", a.traces.display());
    }
    let corpus = labeled(&traces, &app.calculi, app.distance_cutoff)?;
    let spec = EncodingSpec::new(app.t, &app.calculi);
    let ds = build_dataset(&corpus, &spec);
    for w in &ds.warnings {
        eprintln!("warning: {w}");
    }
    for (ann, e) in &ds.failures {
        eprintln!("warning: {} frame {}: {e}", ann.scene_id, ann.frame_index);
    }
    let model = train(&ds, &app.calculi, &app.hyperparams, app.seed)?;
    for (action, (pos, neg)) in ds.counts() {
        println!("{action}: {pos} positives, {neg} negatives");
    }
    write_atomic(&a.out, save_model(&model).as_bytes())?;
    eprintln!(
        "trained {} actions on {} scenes -> {}",
        model.actions.len(),
        traces.len(),
        a.out.display()
    );
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelBundle> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_model(&text).with_context(|| format!("loading {}", path.display()))
}

fn explain_cmd(a: ExplainArgs) -> Result<()> {
    let app = AppConfig::load(a.config.as_deref())?;
    let trace = read_trace(&a.trace)?;
    let model = read_model(&a.model)?;
    let first = trace.actions.first();
    let pick = |given: Option<String>, from: fn(&ActionAnnotation) -> String, what: &str| {
        given
            .or_else(|| first.map(from))
            .with_context(|| format!("--{what} not given and the trace has no action line"))
    };
    let annotation = ActionAnnotation {
        scene_id: trace.scene.scene_id.clone(),
        frame_index: match a.frame {
            Some(f) => f,
            None => first
                .map(|f| f.frame_index)
                .context("--frame not given and the trace has no action line")?,
        },
        actor_id: pick(a.actor, |f| f.actor_id.clone(), "actor")?,
        action: pick(a.action, |f| f.action.clone(), "action")?,
    };
    let qxg = build_graph(
        &trace.scene,
        &model.calculi,
        app.distance_cutoff,
        Some(annotation.frame_index),
        false,
    )?;
    let candidates = explain(
        &qxg,
        &annotation,
        &model,
        a.top_k.unwrap_or(app.top_k),
        a.threshold.unwrap_or(app.threshold),
    )?;
    let mut text = serde_json::to_string_pretty(&candidates)?;
    text.push('\n');
    emit(a.out.as_deref(), text.as_bytes())
}

#[derive(Serialize)]
struct EvalOutput {
    metrics: EvalReport,
    cause_recovery: Option<CauseRecovery>,
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let app = AppConfig::load(a.config.as_deref())?;
    let model = read_model(&a.model)?;
    let traces = read_trace_dir(&a.traces, a.split)?;
    let corpus = labeled(&traces, &model.calculi, app.distance_cutoff)?;
    let metrics = evaluate(&model, &corpus, a.threshold.unwrap_or(app.threshold))?;
    for w in &metrics.warnings {
        eprintln!("warning: {w}");
    }

    let mut cases = Vec::new();
    for ((_, trace), lg) in traces.iter().zip(&corpus) {
        for c in &trace.causes {
            let Some(cause) = c.cause_id.as_deref() else {
                continue;
            };
            if let Some(ann) = trace
                .actions
                .iter()
                .find(|x| x.frame_index == c.frame_index && x.actor_id == c.actor_id)
            {
                if model.actions.contains_key(&ann.action) {
                    cases.push((&lg.qxg, ann, cause));
                }
            }
        }
    }
    let recovery = if cases.is_empty() {
        None
    } else {
        Some(cause_recovery(&model, cases)?)
    };

    let out = EvalOutput {
        metrics,
        cause_recovery: recovery,
    };
    let mut json = serde_json::to_string_pretty(&out)?;
    json.push('\n');
    if let Some(p) = &a.out {
        write_atomic(p, json.as_bytes())?;
    }
    if a.json {
        print!("{json}");
    } else {
        print!("{}", out.metrics.table());
        if let Some(r) = &out.cause_recovery {
            println!(
                "top-1 cause recovery: {}/{} ({:.1}%)",
                r.hits,
                r.total,
                100.0 * r.rate
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    bench: BenchReport,
    scaling: Option<ScalingReport>,
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        objects: a.objects as usize,
        frames: a.frames as usize,
        repeats: a.repeats as usize,
        seed: a.seed,
    };
    let bench = run_bench(&cfg);
    let scaling = a
        .scaling
        .then(|| scaling_study(&SCALING_SIZES, cfg.frames, cfg.repeats, cfg.seed));
    println!(
        "{}",
        serde_json::to_string_pretty(&BenchOutput { bench, scaling })?
    );
    Ok(())
}

#[derive(Serialize)]
struct TraceSummary {
    scene_id: String,
    frames: usize,
    objects: usize,
    max_objects_per_frame: usize,
    actions: Vec<ActionAnnotation>,
    causes: usize,
}

#[derive(Serialize)]
struct GraphSummary {
    scene_id: String,
    nodes: usize,
    edges: usize,
    relations: usize,
}

#[derive(Serialize)]
struct ForestSummary {
    trees: usize,
    max_depth: usize,
    nodes: usize,
}

#[derive(Serialize)]
struct ModelSummary {
    version: u32,
    seed: u64,
    t: usize,
    feature_len: usize,
    actions: std::collections::BTreeMap<String, ForestSummary>,
}

fn inspect_cmd(a: InspectArgs) -> Result<()> {
    let json = if let Some(p) = &a.trace {
        let t = read_trace(p)?;
        let mut ids: Vec<&str> = t
            .scene
            .frames
            .iter()
            .flat_map(|f| f.objects.iter().map(|o| o.id.as_str()))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        serde_json::to_string_pretty(&TraceSummary {
            scene_id: t.scene.scene_id.clone(),
            frames: t.scene.frames.len(),
            objects: ids.len(),
            max_objects_per_frame: t.scene.frames.iter().map(|f| f.objects.len()).max().unwrap_or(0),
            actions: t.actions.clone(),
            causes: t.causes.len(),
        })?
    } else if let Some(p) = &a.graph {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let g = import_json(&text).with_context(|| format!("importing {}", p.display()))?;
        serde_json::to_string_pretty(&GraphSummary {
            scene_id: g.scene_id().to_string(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            relations: g.edges().map(|(_, _, r)| r.len()).sum(),
        })?
    } else if let Some(p) = &a.model {
        let m = read_model(p)?;
        serde_json::to_string_pretty(&ModelSummary {
            version: m.version,
            seed: m.seed,
            t: m.t,
            feature_len: m.encoding.feature_len(),
            actions: m
                .actions
                .iter()
                .map(|(k, f)| {
                    (
                        k.clone(),
                        ForestSummary {
                            trees: f.trees.len(),
                            max_depth: f.trees.iter().map(|t| t.depth()).max().unwrap_or(0),
                            nodes: f.trees.iter().map(|t| t.nodes().len()).sum(),
                        },
                    )
                })
                .collect(),
        })?
    } else {
        unreachable!("clap requires one input");
    };
    println!("{json}");
    Ok(())
}
