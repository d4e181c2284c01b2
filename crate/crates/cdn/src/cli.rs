//! The `cdn` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cdn_core::data::{default_sizes, filter_corpus, split_sizes};
use cdn_core::eval::{
    diversity_sweep, drug_hit_report, evaluate_run, generate_runs, latent_class_distances, pooled_histograms, GenerationRun, MetricsReport,
};
use cdn_core::model::{train_with, Cdn, Checkpoint, DecoderMode, DiversityConfig, ModelConfig, TrainingMeta};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::manifest::Manifest;
use crate::parallel::Rayon;
use crate::{checkpoint, io, report};

#[derive(Debug, Parser)]
#[command(name = "cdn", version, about = "Prototype-conditioned molecule generation with conditional diversity networks")]
pub struct Cli {
    /// Worker threads; defaults to one per core. Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a SMILES corpus.
    Train(TrainArgs),
    /// Generate candidates around one or more prototypes.
    Generate(GenerateArgs),
    /// Evaluation reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Compare latent distances within and across molecule classes.
    AnalyzeLatent(LatentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Full-size dimensions.
    Full,
    /// Embed 32, 16 filters per width, latent 64, LSTM 64.
    Reduced,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// One SMILES per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Config override as key=value; repeatable.
    #[arg(long = "config", value_name = "KEY=VALUE")]
    pub config: Vec<String>,
    #[arg(long, value_enum, default_value = "full")]
    pub preset: Preset,
    /// Molecules to keep out of every split (matched by normalized form).
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Validation set size; defaults to 5,000 above 10,000 molecules, else 5%.
    #[arg(long)]
    pub validation_size: Option<usize>,
    /// Test set size, with the same default.
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Argmax,
    Sampling,
}

impl From<Mode> for DecoderMode {
    fn from(m: Mode) -> DecoderMode {
        match m {
            Mode::Argmax => DecoderMode::Argmax,
            Mode::Sampling => DecoderMode::Sampling,
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false, args = ["prototype", "prototypes"])]
pub struct Prototypes {
    /// A single prototype SMILES.
    #[arg(long)]
    pub prototype: Option<String>,
    /// A file of prototypes, one per line.
    #[arg(long)]
    pub prototypes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Candidates per prototype.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Prototypes,
    /// Noise variance multiplier D.
    #[arg(long, default_value_t = 1.0)]
    pub diversity: f32,
    #[arg(long, value_enum, default_value = "argmax")]
    pub decoder: Mode,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Accuracy, validity and novelty over a prototype set.
    Recon(ReconArgs),
    /// Listed drugs rediscovered from other prototypes.
    Drugs(DrugsArgs),
    /// Metrics over a grid of diversities and decoder modes.
    Sweep(SweepArgs),
    /// Edit-distance histograms per diversity value.
    Distances(DistancesArgs),
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Prototypes,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub diversities: Vec<f32>,
    #[arg(long, value_enum, default_value = "argmax")]
    pub decoder: Mode,
}

#[derive(Debug, Args)]
pub struct DrugsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Prototypes,
    /// Approved drugs, one SMILES per line.
    #[arg(long)]
    pub fda: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub diversity: f32,
    #[arg(long, value_enum, default_value = "argmax")]
    pub decoder: Mode,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Prototypes,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub diversities: Vec<f32>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "argmax,sampling")]
    pub modes: Vec<Mode>,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: Prototypes,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub diversities: Vec<f32>,
    #[arg(long, value_enum, default_value = "argmax")]
    pub decoder: Mode,
}

#[derive(Debug, Args)]
pub struct LatentArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// `name<TAB>SMILES` per line.
    #[arg(long)]
    pub classes: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// A problem with the flags themselves; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    if let Some(n) = cli.threads {
        // The global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Train(a) => staged("train", a.seed.unwrap_or(0), &a.out, |m| train(a, m)),
        Command::Generate(a) => staged("generate", a.common.seed, &a.common.out, |m| generate(a, m)),
        Command::Eval(EvalCommand::Recon(a)) => staged("eval recon", a.common.seed, &a.common.out, |m| recon(a, m)),
        Command::Eval(EvalCommand::Drugs(a)) => staged("eval drugs", a.common.seed, &a.common.out, |m| drugs(a, m)),
        Command::Eval(EvalCommand::Sweep(a)) => staged("eval sweep", a.common.seed, &a.common.out, |m| sweep(a, m)),
        Command::Eval(EvalCommand::Distances(a)) => staged("eval distances", a.common.seed, &a.common.out, |m| distances(a, m)),
        Command::AnalyzeLatent(a) => staged("analyze-latent", a.seed, &a.out, |m| analyze_latent(a, m)),
    }
}

/// Creates the output directory, runs `body` and writes the manifest
/// whether or not `body` succeeds.
fn staged<F>(command: &str, seed: u64, out: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut Manifest) -> Result<()>,
{
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifest = Manifest::new(command, seed);
    let result = body(&mut manifest);
    manifest.status = match &result {
        Ok(()) => "ok".into(),
        Err(e) => format!("failed: {e:#}"),
    };
    manifest.write(out)?;
    result
}

fn write(dir: &Path, name: &str, contents: &str, m: &mut Manifest) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    m.output(name);
    Ok(())
}

fn check_positive(name: &str, v: f32) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(UsageError(format!("--{name} must be positive, got {v}")).into());
    }
    Ok(())
}

fn train(a: &TrainArgs, m: &mut Manifest) -> Result<()> {
    let mut cfg = match a.preset {
        Preset::Full => ModelConfig::default(),
        Preset::Reduced => ModelConfig::reduced(),
    };
    for kv in &a.config {
        let (k, v) = kv.split_once('=').ok_or_else(|| UsageError(format!("--config {kv:?}: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v).map_err(|e| UsageError(e.to_string()))?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    m.seed = cfg.seed;
    for (k, v) in cfg.entries() {
        m.set(&format!("config.{k}"), v);
    }
    m.input(&a.corpus)?;
    let text = io::read_text(&a.corpus)?;
    let (corpus, stats) = filter_corpus(text.lines(), cfg.max_len)?;
    info!(
        "corpus: {} read, {} kept, {} duplicates, {} too long, {} invalid",
        stats.read, stats.kept, stats.duplicates, stats.too_long, stats.invalid
    );
    m.set("corpus.read", stats.read);
    m.set("corpus.kept", stats.kept);
    m.set("corpus.duplicates", stats.duplicates);
    m.set("corpus.too_long", stats.too_long);
    m.set("corpus.invalid", stats.invalid);
    let exclusion = match &a.exclude {
        Some(p) => {
            m.input(p)?;
            io::read_smiles(p)?
        }
        None => Vec::new(),
    };
    let (dv, dt) = default_sizes(corpus.len());
    let (nv, nt) = (a.validation_size.unwrap_or(dv), a.test_size.unwrap_or(dt));
    m.set("split.validation_size", nv);
    m.set("split.test_size", nt);
    let split = split_sizes(&corpus, cfg.seed, &exclusion, nv, nt);
    info!("split: {} train, {} validation, {} test", split.train.len(), split.validation.len(), split.test.len());
    io::write_lines(&a.out.join("train.smi"), &split.train)?;
    io::write_lines(&a.out.join("validation.smi"), &split.validation)?;
    io::write_lines(&a.out.join("test.smi"), &split.test)?;
    for f in ["train.smi", "validation.smi", "test.smi"] {
        m.output(f);
    }

    let (model, rep) = train_with(&split, cfg, &Rayon, |e| {
        info!(
            "epoch {}: train {:.4} (rec {:.4}, kl {:.2}), validation rec {:.4}{}",
            e.epoch,
            e.train.total,
            e.train.reconstruction,
            e.train.kl,
            e.validation.reconstruction,
            if e.improved { " *" } else { "" }
        );
    })?;
    write(&a.out, "loss_curve.csv", &report::loss_curve_csv(rep.baseline_validation, &rep.epochs), m)?;
    let meta = TrainingMeta { epoch: rep.best_epoch, best_validation_loss: rep.best_validation };
    checkpoint::save(&a.out.join("checkpoint.cdn"), &Checkpoint::from_model(&model, meta))?;
    m.output("checkpoint.cdn");
    m.set("result.best_epoch", rep.best_epoch);
    m.set("result.best_validation", report::num(rep.best_validation as f64));
    m.set("result.epochs_run", rep.epochs.len());
    Ok(())
}

fn load_model(path: &Path, m: &mut Manifest) -> Result<Cdn> {
    m.input(path)?;
    let ck = checkpoint::load(path)?;
    Ok(ck.into_model()?)
}

fn prototypes(src: &Prototypes, model: &Cdn, m: &mut Manifest) -> Result<Vec<String>> {
    let list = match (&src.prototype, &src.prototypes) {
        (Some(p), _) => {
            m.set("prototype", p);
            vec![p.trim().to_string()]
        }
        (None, Some(path)) => {
            m.input(path)?;
            io::read_smiles(path)?
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    if list.is_empty() {
        bail!("no prototypes given");
    }
    for (i, p) in list.iter().enumerate() {
        model.encode_smiles(p).map_err(|e| anyhow!("prototype {} ({p:?}) cannot be encoded: {e}", i + 1))?;
    }
    Ok(list)
}

fn common_settings(c: &Common, m: &mut Manifest) -> Result<()> {
    if c.samples == 0 {
        return Err(UsageError("--samples must be at least 1".into()).into());
    }
    m.set("samples", c.samples);
    m.set("seed", c.seed);
    Ok(())
}

fn generate(a: &GenerateArgs, m: &mut Manifest) -> Result<()> {
    common_settings(&a.common, m)?;
    check_positive("diversity", a.diversity)?;
    m.set("diversity", a.diversity);
    m.set("decoder", DecoderMode::from(a.decoder).as_str());
    let model = load_model(&a.common.checkpoint, m)?;
    let protos = prototypes(&a.source, &model, m)?;
    let cfg = DiversityConfig { diversity: a.diversity, k: a.common.samples, mode: a.decoder.into(), seed: a.common.seed };
    let runs = generate_runs(&model, &protos, &cfg, &Rayon)?;
    write(&a.common.out, "candidates.tsv", &report::candidates_tsv(&runs), m)?;
    let reports: Vec<MetricsReport> = runs.iter().map(evaluate_run).collect();
    let row = report::metrics_row(MetricsReport::mean(&reports), cfg.diversity, cfg.mode, cfg.k);
    write(&a.common.out, "metrics.csv", &report::metrics_csv(&[row]), m)
}

fn recon(a: &ReconArgs, m: &mut Manifest) -> Result<()> {
    common_settings(&a.common, m)?;
    for &d in &a.diversities {
        check_positive("diversities", d)?;
    }
    m.set("diversities", format!("{:?}", a.diversities));
    m.set("decoder", DecoderMode::from(a.decoder).as_str());
    let model = load_model(&a.common.checkpoint, m)?;
    let protos = prototypes(&a.source, &model, m)?;
    let rows = diversity_sweep(&model, &protos, &a.diversities, &[a.decoder.into()], a.common.samples, a.common.seed, &Rayon)?;
    write(&a.common.out, "metrics.csv", &report::metrics_csv(&rows), m)
}

fn sweep(a: &SweepArgs, m: &mut Manifest) -> Result<()> {
    common_settings(&a.common, m)?;
    for &d in &a.diversities {
        check_positive("diversities", d)?;
    }
    let modes: Vec<DecoderMode> = a.modes.iter().map(|&x| x.into()).collect();
    m.set("diversities", format!("{:?}", a.diversities));
    m.set("modes", modes.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(","));
    let model = load_model(&a.common.checkpoint, m)?;
    let protos = prototypes(&a.source, &model, m)?;
    let rows = diversity_sweep(&model, &protos, &a.diversities, &modes, a.common.samples, a.common.seed, &Rayon)?;
    write(&a.common.out, "sweep.csv", &report::metrics_csv(&rows), m)
}

fn drugs(a: &DrugsArgs, m: &mut Manifest) -> Result<()> {
    common_settings(&a.common, m)?;
    check_positive("diversity", a.diversity)?;
    m.set("diversity", a.diversity);
    m.set("decoder", DecoderMode::from(a.decoder).as_str());
    m.input(&a.fda)?;
    let fda = io::read_smiles(&a.fda)?;
    if fda.is_empty() {
        bail!("{} lists no drugs", a.fda.display());
    }
    let model = load_model(&a.common.checkpoint, m)?;
    let protos = prototypes(&a.source, &model, m)?;
    let cfg = DiversityConfig { diversity: a.diversity, k: a.common.samples, mode: a.decoder.into(), seed: a.common.seed };
    let runs: Vec<GenerationRun> = generate_runs(&model, &protos, &cfg, &Rayon)?;
    let hits = drug_hit_report(&runs, &fda);
    write(&a.common.out, "drug_hits.csv", &report::drug_hits_csv(&hits), m)?;
    write(&a.common.out, "drug_hits.tsv", &report::drug_hits_tsv(&hits), m)
}

fn distances(a: &DistancesArgs, m: &mut Manifest) -> Result<()> {
    common_settings(&a.common, m)?;
    for &d in &a.diversities {
        check_positive("diversities", d)?;
    }
    m.set("diversities", format!("{:?}", a.diversities));
    m.set("decoder", DecoderMode::from(a.decoder).as_str());
    let model = load_model(&a.common.checkpoint, m)?;
    let protos = prototypes(&a.source, &model, m)?;
    let mut summary = Vec::new();
    for &d in &a.diversities {
        let cfg = DiversityConfig { diversity: d, k: a.common.samples, mode: a.decoder.into(), seed: a.common.seed };
        let runs = generate_runs(&model, &protos, &cfg, &Rayon)?;
        let (p, w) = pooled_histograms(&runs);
        for h in [&p, &w] {
            write(&a.common.out, &format!("histogram_D{d}_{}.csv", h.kind.as_str()), &report::histogram_csv(h), m)?;
        }
        summary.push((d, p));
        summary.push((d, w));
    }
    write(&a.common.out, "distances.csv", &report::distance_summary_csv(&summary), m)
}

fn analyze_latent(a: &LatentArgs, m: &mut Manifest) -> Result<()> {
    m.set("seed", a.seed);
    let model = load_model(&a.checkpoint, m)?;
    m.input(&a.classes)?;
    let classes = io::read_classes(&a.classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = latent_class_distances(&classes, &model, &mut rng)?;
    write(&a.out, "class_distances.csv", &report::class_distances_csv(&r), m)
}
