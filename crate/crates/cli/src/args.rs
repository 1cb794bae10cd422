use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glyphline::classifiers::Role;
use glyphline::pipeline::{ReadingOrder, ScaleMode, Stage};

#[derive(Parser, Debug)]
#[command(name = "glyphline", version, about = "OCR for seal inscriptions: seal, proposals, text regions, symbols, glyph labels")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// JSON or TOML file with optional `pipeline` and `solver` tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for corpus generation, dataset splits and weight initialisation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Long side used for region proposals: 512, 256 or none.
    #[arg(long, global = true)]
    pub scale: Option<ScaleMode>,
    /// Glyph order within a text box: lr, rl or auto.
    #[arg(long = "reading-order", global = true)]
    pub reading_order: Option<ReadingOrder>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the pipeline over image files or directories of images.
    Run(RunArgs),
    /// Run a single image up to one stage and emit its report.
    Stage(StageArgs),
    /// Train a region or glyph classifier from a `path,label` manifest.
    Train(TrainArgs),
    /// Score a classifier on a manifest, or the whole pipeline on generated seals.
    Eval(EvalArgs),
    /// Generate synthetic seals or classifier corpora with ground truth.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Region classifier model file.
    #[arg(long)]
    pub region_model: Option<PathBuf>,
    /// Glyph classifier model file.
    #[arg(long)]
    pub glyph_model: Option<PathBuf>,
    /// External region classifier command line (whitespace separated).
    #[arg(long, conflicts_with = "region_model")]
    pub region_plugin: Option<String>,
    /// External glyph classifier command line (whitespace separated).
    #[arg(long, conflicts_with = "glyph_model")]
    pub glyph_plugin: Option<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Images, or directories whose png / jpeg files are all processed.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for `<name>.json` reports and the run summary.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Also write `<name>.overlay.png` with the boxes drawn in.
    #[arg(long)]
    pub overlay: bool,
    /// Last stage to run: seal, proposals, regions, symbols or glyphs.
    #[arg(long, default_value = "glyphs")]
    pub stage: Stage,
    /// Record wall-clock stage timings in the reports.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct StageArgs {
    /// seal, proposals, regions, symbols or glyphs.
    pub name: Stage,
    pub input: PathBuf,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Report file; printed to stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write an overlay next to `--out`.
    #[arg(long, requires = "out")]
    pub overlay: bool,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// region3 or glyph2.
    #[arg(long)]
    pub role: Role,
    /// CSV with a `path,label` header.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Loss / learning-rate / accuracy trace; defaults to `<out>.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub max_iter: Option<u64>,
    /// Stop once validation accuracy reaches this value.
    #[arg(long)]
    pub stop_at: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Classifier to score against `--manifest`.
    #[arg(long, requires = "manifest")]
    pub model: Option<PathBuf>,
    #[arg(long, conflicts_with = "seals")]
    pub manifest: Option<PathBuf>,
    /// Directory written by `synth --kind seals`; runs the full pipeline.
    #[arg(long, required_unless_present = "manifest")]
    pub seals: Option<PathBuf>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Write the JSON result here as well as to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Whole seal images with `.json` ground truth.
    Seals,
    /// Single-glyph crops, jar / no-jar, with a manifest.
    Glyphs,
    /// Region crops, text / no-text / both, with a manifest.
    Regions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Horizontal,
    Vertical,
    /// Every fifth seal vertical.
    Mixed,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "seals")]
    pub kind: SynthKind,
    /// Seals to draw; for glyphs, crops per class; for regions, seals to cut.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, short)]
    pub out: PathBuf,
    /// 0 clean, 0.5 moderate wear, 1 heavy.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub glyphs: usize,
    /// Exact number of jar glyphs per seal.
    #[arg(long)]
    pub jars: Option<usize>,
    #[arg(long, value_enum, default_value = "horizontal")]
    pub layout: LayoutArg,
    #[arg(long)]
    pub no_icon: bool,
}
