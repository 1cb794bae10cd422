use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use glyphline::classifiers::{
    ClassLabel, ClassifierHandle, DatasetManifest, Evaluation, ManifestEntry, PluginClassifier, Role, TrainedModel,
};
use glyphline::imaging::RasterImage;
use glyphline::neuralnet::SolverConfig;
use glyphline::pipeline::{render_overlay, run_pipeline, Models, PipelineReport, RunOptions, Stage};
use glyphline::synth::{
    generate_glyph_corpus, generate_region_corpus, generate_seal, GroundTruth, Layout, SyntheticSealSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{EvalArgs, GlobalArgs, LayoutArg, ModelArgs, RunArgs, StageArgs, SynthArgs, SynthKind, TrainArgs};
use crate::config::FileConfig;
use crate::output::{collect_images, sha256_hex, write_atomic};
use crate::scoring::EndToEndSummary;
use crate::{describe, Status, UsageError};

/// Ground-truth sidecar written next to each synthetic seal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SealRecord {
    /// Image file name, relative to the record.
    pub image: String,
    pub spec: SyntheticSealSpec,
    pub truth: GroundTruth,
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn require_exists(p: &Path, what: &str) -> Result<()> {
    if !p.exists() {
        return Err(UsageError(format!("{what} {} does not exist", p.display())).into());
    }
    Ok(())
}

fn load_handle(path: Option<&Path>, plugin: Option<&str>, role: Role) -> Result<Option<ClassifierHandle>> {
    if let Some(p) = path {
        require_exists(p, "model")?;
        let h = ClassifierHandle::load(p).map_err(|e| UsageError(e.to_string()))?;
        if h.role() != role {
            bail!(UsageError(format!("{} holds a {} model, expected {role}", p.display(), h.role())));
        }
        return Ok(Some(h));
    }
    if let Some(cmd) = plugin {
        let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
        let p = PluginClassifier::spawn(&argv).map_err(|e| UsageError(e.to_string()))?;
        return Ok(Some(ClassifierHandle::from_plugin(role, p)));
    }
    Ok(None)
}

struct LoadedModels {
    region: Option<ClassifierHandle>,
    glyph: Option<ClassifierHandle>,
}

impl LoadedModels {
    /// Loads what `stage` needs; a missing required model is a usage error.
    fn for_stage(args: &ModelArgs, stage: Stage) -> Result<Self> {
        let region = load_handle(args.region_model.as_deref(), args.region_plugin.as_deref(), Role::Region3)?;
        let glyph = load_handle(args.glyph_model.as_deref(), args.glyph_plugin.as_deref(), Role::Glyph2)?;
        if stage >= Stage::Regions && region.is_none() {
            bail!(UsageError(format!(
                "stage {stage} needs --region-model or --region-plugin"
            )));
        }
        if stage >= Stage::Glyphs && glyph.is_none() {
            bail!(UsageError(format!("stage {stage} needs --glyph-model or --glyph-plugin")));
        }
        Ok(Self { region, glyph })
    }

    fn models(&self) -> Models<'_> {
        Models {
            region: self.region.as_ref(),
            glyph: self.glyph.as_ref(),
        }
    }
}

fn overlay_path(report_path: &Path) -> PathBuf {
    report_path.with_extension("overlay.png")
}

#[derive(Debug, Serialize)]
struct Failure {
    input: String,
    error: String,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    reports: Vec<String>,
    failed: Vec<Failure>,
}

pub fn cmd_run(global: &GlobalArgs, args: &RunArgs) -> Result<Status> {
    let cfg = FileConfig::resolve(global)?;
    for p in &args.inputs {
        require_exists(p, "input")?;
    }
    let images = collect_images(&args.inputs)?;
    if images.is_empty() {
        bail!(UsageError("no input images found".into()));
    }
    let mut stems = BTreeSet::new();
    for p in &images {
        let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if !stems.insert(stem.clone()) {
            bail!(UsageError(format!("two inputs share the report name {stem}.json")));
        }
    }
    let loaded = LoadedModels::for_stage(&args.models, args.stage)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let opts = RunOptions {
        stop_after: args.stage,
        record_timings: args.timings,
    };

    let results: Vec<(PathBuf, Result<String>)> = images
        .par_iter()
        .map(|p| {
            let r = (|| {
                let img = RasterImage::load(p)?;
                let report = run_pipeline(&p.display().to_string(), &img, loaded.models(), &cfg.pipeline, opts);
                let name = format!("{}.json", p.file_stem().unwrap_or_default().to_string_lossy());
                let out = args.out.join(&name);
                write_atomic(&out, report.to_json()?.as_bytes())?;
                if args.overlay {
                    write_atomic(&overlay_path(&out), &render_overlay(&img, &report).encode_png()?)?;
                }
                log::info!("{}: {} glyphs", p.display(), report.glyphs.len());
                Ok(name)
            })();
            (p.clone(), r)
        })
        .collect();

    let mut summary = RunSummary {
        reports: Vec::new(),
        failed: Vec::new(),
    };
    for (p, r) in results {
        match r {
            Ok(name) => summary.reports.push(name),
            Err(e) => {
                let error = describe(&e);
                eprintln!("skipped {}: {error}", p.display());
                summary.failed.push(Failure {
                    input: p.display().to_string(),
                    error,
                });
            }
        }
    }
    write_atomic(&args.out.join("summary.json"), &json_bytes(&summary)?)?;
    println!("{} reports written to {}, {} failed", summary.reports.len(), args.out.display(), summary.failed.len());
    Ok(if summary.failed.is_empty() {
        Status::Success
    } else {
        Status::Partial
    })
}

pub fn cmd_stage(global: &GlobalArgs, args: &StageArgs) -> Result<Status> {
    let cfg = FileConfig::resolve(global)?;
    require_exists(&args.input, "input")?;
    let loaded = LoadedModels::for_stage(&args.models, args.name)?;
    let img = RasterImage::load(&args.input)?;
    let opts = RunOptions {
        stop_after: args.name,
        record_timings: args.timings,
    };
    let report = run_pipeline(&args.input.display().to_string(), &img, loaded.models(), &cfg.pipeline, opts);
    let json = report.to_json()?;
    match &args.out {
        Some(out) => {
            write_atomic(out, json.as_bytes())?;
            if args.overlay {
                write_atomic(&overlay_path(out), &render_overlay(&img, &report).encode_png()?)?;
            }
        }
        None => print!("{json}"),
    }
    Ok(if report.errors.is_empty() {
        Status::Success
    } else {
        Status::Partial
    })
}

fn load_manifest(path: &Path, seed: u64) -> Result<DatasetManifest> {
    require_exists(path, "manifest")?;
    DatasetManifest::load(path, seed).map_err(|e| UsageError(e.to_string()).into())
}

fn load_crops(entries: &[ManifestEntry], labels: &[usize]) -> Result<Vec<(RasterImage, usize)>> {
    entries
        .par_iter()
        .zip(labels)
        .map(|(e, &l)| Ok((RasterImage::load(&e.path)?, l)))
        .collect()
}

/// Training summary printed by `train`.
#[derive(Debug, Serialize)]
pub struct TrainReport {
    pub role: Role,
    pub train_samples: usize,
    pub val_samples: usize,
    pub iterations: u64,
    pub best_iteration: u64,
    pub best_val_accuracy: Option<f64>,
    pub model: String,
    pub trace: String,
    pub sha256: String,
}

fn trace_csv(run: &TrainedModel) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &run.outcome.trace {
        w.serialize(row)?;
    }
    Ok(w.into_inner()?)
}

pub fn cmd_train(global: &GlobalArgs, args: &TrainArgs) -> Result<Status> {
    let cfg = FileConfig::resolve(global)?;
    let mut solver = cfg.solver.unwrap_or_else(|| match args.role {
        Role::Region3 => SolverConfig::region_classifier(),
        Role::Glyph2 => SolverConfig::glyph_classifier(),
    });
    if let Some(s) = global.seed {
        solver.rng_seed = s;
    }
    if let Some(n) = args.max_iter {
        solver.max_iter = n;
    }
    if let Some(a) = args.stop_at {
        solver.stop_at_val_accuracy = Some(a);
    }
    solver.validate().map_err(|e| UsageError(e.to_string()))?;

    let manifest = load_manifest(&args.manifest, solver.rng_seed)?;
    let labels = manifest.check_classes(args.role)?;
    let samples = load_crops(&manifest.entries, &labels)?;
    let run = glyphline::classifiers::train_role(args.role, &samples, manifest.train_fraction, manifest.seed, &solver)?;

    let model = run.model.to_json()?;
    write_atomic(&args.out, model.as_bytes())?;
    let trace = args
        .trace
        .clone()
        .unwrap_or_else(|| args.out.with_extension("trace.csv"));
    write_atomic(&trace, &trace_csv(&run)?)?;
    let report = TrainReport {
        role: args.role,
        train_samples: run.train_len,
        val_samples: run.val_len,
        iterations: run.outcome.trace.len() as u64,
        best_iteration: run.outcome.best_iteration,
        best_val_accuracy: run.outcome.best_val_accuracy,
        model: args.out.display().to_string(),
        trace: trace.display().to_string(),
        sha256: sha256_hex(model.as_bytes()),
    };
    print!("{}", String::from_utf8(json_bytes(&report)?)?);
    Ok(Status::Success)
}

/// Records of a `synth --kind seals` directory, sorted by file name.
pub fn read_seal_records(dir: &Path) -> Result<Vec<(PathBuf, SealRecord)>> {
    require_exists(dir, "seal directory")?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        if let Ok(rec) = serde_json::from_str::<SealRecord>(&text) {
            out.push((dir.join(&rec.image), rec));
        }
    }
    if out.is_empty() {
        bail!(UsageError(format!("no seal records in {}", dir.display())));
    }
    Ok(out)
}

pub fn cmd_eval(global: &GlobalArgs, args: &EvalArgs) -> Result<Status> {
    let cfg = FileConfig::resolve(global)?;
    let json = if let (Some(model), Some(manifest)) = (&args.model, &args.manifest) {
        require_exists(model, "model")?;
        let h = ClassifierHandle::load(model).map_err(|e| UsageError(e.to_string()))?;
        let m = load_manifest(manifest, global.seed.unwrap_or(0))?;
        let labels = m
            .class_indices(h.role())
            .map_err(|e| UsageError(format!("manifest labels do not fit the {} model: {e}", h.role())))?;
        let crops = load_crops(&m.entries, &labels)?;
        let images: Vec<RasterImage> = crops.into_iter().map(|c| c.0).collect();
        json_bytes(&Evaluation::run(&h, &images, &labels)?)?
    } else if let Some(dir) = &args.seals {
        let records = read_seal_records(dir)?;
        let stage = if args.models.glyph_model.is_some() || args.models.glyph_plugin.is_some() {
            Stage::Glyphs
        } else {
            Stage::Symbols
        };
        let loaded = LoadedModels::for_stage(&args.models, stage)?;
        let opts = RunOptions {
            stop_after: stage,
            record_timings: false,
        };
        let pairs: Vec<(PipelineReport, GroundTruth)> = records
            .par_iter()
            .map(|(img_path, rec)| {
                let img = RasterImage::load(img_path)?;
                let name = img_path.file_name().unwrap_or_default().to_string_lossy();
                Ok((run_pipeline(&name, &img, loaded.models(), &cfg.pipeline, opts), rec.truth.clone()))
            })
            .collect::<Result<_>>()?;
        json_bytes(&EndToEndSummary::new(&pairs))?
    } else {
        bail!(UsageError("eval needs --model with --manifest, or --seals".into()));
    };
    if let Some(out) = &args.out {
        write_atomic(out, &json)?;
    }
    print!("{}", String::from_utf8(json)?);
    Ok(Status::Success)
}

fn write_corpus<L: ClassLabel>(dir: &Path, prefix: &str, items: &[(RasterImage, L)]) -> Result<usize> {
    let mut entries = Vec::with_capacity(items.len());
    for (i, (img, label)) in items.iter().enumerate() {
        let name = format!("{prefix}_{i:05}.png");
        write_atomic(&dir.join(&name), &img.encode_png()?)?;
        entries.push(ManifestEntry {
            path: name.into(),
            label: label.name().into(),
        });
    }
    let mut csv = Vec::new();
    DatasetManifest::write_csv(&entries, &mut csv)?;
    write_atomic(&dir.join("manifest.csv"), &csv)?;
    Ok(entries.len())
}

pub fn cmd_synth(global: &GlobalArgs, args: &SynthArgs) -> Result<Status> {
    // Nothing here is configurable, but a broken config file is still an error.
    FileConfig::resolve(global)?;
    if args.count == 0 {
        bail!(UsageError("--count must be at least 1".into()));
    }
    if !(args.noise >= 0.0) {
        bail!(UsageError("--noise must be non-negative".into()));
    }
    let seed = global.seed.unwrap_or(0);
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let written = match args.kind {
        SynthKind::Seals => {
            if args.glyphs == 0 || args.jars.is_some_and(|j| j > args.glyphs) {
                bail!(UsageError("need at least one glyph and no more jars than glyphs".into()));
            }
            (0..args.count)
                .into_par_iter()
                .map(|i| {
                    let layout = match args.layout {
                        LayoutArg::Horizontal => Layout::Horizontal,
                        LayoutArg::Vertical => Layout::Vertical,
                        LayoutArg::Mixed if i % 5 == 4 => Layout::Vertical,
                        LayoutArg::Mixed => Layout::Horizontal,
                    };
                    let spec = SyntheticSealSpec {
                        glyph_count: args.glyphs,
                        jar_count: args.jars,
                        layout,
                        icon: !args.no_icon,
                        noise: args.noise,
                        seed: seed.wrapping_add(i as u64),
                        ..Default::default()
                    };
                    let seal = generate_seal(&spec);
                    let image = format!("seal_{i:04}.png");
                    write_atomic(&args.out.join(&image), &seal.image.encode_png()?)?;
                    let rec = SealRecord {
                        image,
                        spec,
                        truth: seal.truth,
                    };
                    write_atomic(&args.out.join(format!("seal_{i:04}.json")), &json_bytes(&rec)?)
                })
                .collect::<Result<Vec<()>>>()?
                .len()
        }
        SynthKind::Glyphs => write_corpus(&args.out, "glyph", &generate_glyph_corpus(args.count, seed))?,
        SynthKind::Regions => write_corpus(&args.out, "region", &generate_region_corpus(args.count, seed))?,
    };
    println!("{written} images written to {}", args.out.display());
    Ok(Status::Success)
}
