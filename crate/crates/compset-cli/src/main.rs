//! `compset`: one binary, eight file-to-file subcommands that compose into
//! the attribution pipeline:
//!
//!     align -> extract-spacing -> select-words -> train -> evaluate/report
//!
//! plus `synth` for planted-truth corpora and `predict` for applying a
//! trained model. Every command that writes files also writes a manifest
//! with input digests taken before processing.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use compset::corpus::{
    align_word_level, build_pages, drop_exact_matches, extract_spacings, tokenize, AlignedPair,
    Page,
};
use compset::em::{predict, train, TrainConfig, TrainResult};
use compset::eval::{
    many_to_one_accuracy, one_to_one_accuracy, random_baseline, render_markdown, report,
    Attribution,
};
use compset::features::{
    default_name_blocklist, hinman_wordlist, select_auto_wordlist, FeatureKinds, WordList,
    DEFAULT_MAX_DOMINANT, DEFAULT_MIN_FREQ,
};
use compset::io;
use compset::model::{CandidateTable, ModelParams, OrthoMode};
use compset::synth::{default_vocabulary, generate, SynthConfig};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "compset", version, about = "Unsupervised compositor attribution")]
struct Cli {
    /// Worker threads for training and scoring (default: all cores)
    #[arg(long, global = true, env = "COMPSET_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align modern and diplomatic page transcriptions into word pairs
    Align(AlignArgs),
    /// Measure post-comma whitespace widths from glyph boxes
    ExtractSpacing(ExtractSpacingArgs),
    /// Build a word list of spelling-variant words from aligned pairs
    SelectWords(SelectWordsArgs),
    /// Fit the mixture model with EM and write model + attribution
    Train(TrainArgs),
    /// Label pages with a trained model
    Predict(PredictArgs),
    /// Score a predicted attribution against a gold one
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus with known compositors
    Synth(SynthArgs),
    /// Summarize a trained model's per-compositor behavior
    Report(ReportArgs),
}

#[derive(Args, Serialize)]
struct AlignArgs {
    /// Directory of modernized page files (page id = file stem)
    #[arg(long)]
    modern: Option<PathBuf>,
    /// Directory of diplomatic page files
    #[arg(long)]
    diplomatic: Option<PathBuf>,
    /// TSV manifest: page_id <TAB> modern_path <TAB> diplomatic_path
    #[arg(long, conflicts_with_all = ["modern", "diplomatic"])]
    pages_tsv: Option<PathBuf>,
    /// Drop pairs whose spellings already agree
    #[arg(long)]
    drop_exact_matches: bool,
    /// Output pages JSONL
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ExtractSpacingArgs {
    /// Glyph-box JSONL: {"page","line","glyph","x0","x1"}
    #[arg(long)]
    glyphs: PathBuf,
    /// Widths above this are clamped down to it
    #[arg(long, default_value_t = 40)]
    s_max: u32,
    /// Output pages JSONL (spacing lists, empty pair lists)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum WordlistMode {
    Auto,
    Hinman,
}

#[derive(Args, Serialize)]
struct SelectWordsArgs {
    /// Pages JSONL with aligned pairs
    #[arg(long)]
    pages: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    mode: WordlistMode,
    /// Minimum corpus frequency (auto mode, strict >)
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    min_freq: u64,
    /// Maximum dominant-form fraction (auto mode, strict <)
    #[arg(long, default_value_t = DEFAULT_MAX_DOMINANT)]
    max_dominant: f64,
    /// Extra blocklist file, one lowercase name per line (default: built-in
    /// character names)
    #[arg(long)]
    blocklist: Option<PathBuf>,
    /// Disable the built-in name blocklist
    #[arg(long)]
    no_blocklist: bool,
    /// Output wordlist TSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Loglinear,
    Basic,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
enum FeaturesArg {
    #[value(name = "edit")]
    Edit,
    #[value(name = "word")]
    Word,
    #[value(name = "edit+word")]
    EditWord,
}

impl FeaturesArg {
    fn kinds(self) -> FeatureKinds {
        match self {
            FeaturesArg::Edit => FeatureKinds::EDIT_ONLY,
            FeaturesArg::Word => FeatureKinds::WORD_ONLY,
            FeaturesArg::EditWord => FeatureKinds::ALL,
        }
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    /// Pages JSONL with aligned pairs (and optionally spacings)
    #[arg(long)]
    pages: PathBuf,
    /// Additional pages JSONL carrying spacing lists, merged by page id
    #[arg(long)]
    spacings: Option<PathBuf>,
    /// `auto`, `hinman`, or a wordlist TSV path
    #[arg(long, default_value = "auto")]
    wordlist: String,
    /// Minimum corpus frequency for `auto` word selection
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    min_freq: u64,
    /// Maximum dominant-form fraction for `auto` word selection
    #[arg(long, default_value_t = DEFAULT_MAX_DOMINANT)]
    max_dominant: f64,
    #[arg(long, short = 'c', default_value_t = 2)]
    compositors: usize,
    #[arg(long, default_value_t = 75)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(long, default_value_t = 25)]
    inner_iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    l2_lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    theta_alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    basic_alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    s_max: u32,
    /// Ignore the spacing channel
    #[arg(long)]
    no_spacing: bool,
    /// Orthographic channel parameterization
    #[arg(long, value_enum, default_value = "loglinear")]
    mode: ModeArg,
    /// Feature kinds for the log-linear channel (incompatible with --mode
    /// basic)
    #[arg(long, value_enum)]
    features: Option<FeaturesArg>,
    /// Tie the compositor prior to uniform instead of learning it
    #[arg(long)]
    fixed_uniform_prior: bool,
    /// Drop pairs whose spellings already agree before training
    #[arg(long)]
    drop_exact_matches: bool,
    /// Output directory: model.json, attribution.tsv, training_log.jsonl,
    /// wordlist.tsv, manifest.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Wordlist TSV the model was trained with
    #[arg(long)]
    wordlist: PathBuf,
    #[arg(long)]
    pages: PathBuf,
    #[arg(long)]
    spacings: Option<PathBuf>,
    /// Output attribution TSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Predicted attribution TSV
    #[arg(long)]
    pred: PathBuf,
    /// Gold attribution TSV
    #[arg(long)]
    gold: PathBuf,
    /// Cluster count for the random baseline (default: distinct predicted
    /// labels)
    #[arg(long, short = 'c')]
    compositors: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    baseline_trials: usize,
    #[arg(long, default_value_t = 0)]
    baseline_seed: u64,
    /// Also write the metrics as JSON
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long, short = 'c', default_value_t = 3)]
    compositors: usize,
    #[arg(long, default_value_t = 40)]
    pages_per_compositor: usize,
    #[arg(long, default_value_t = 25)]
    pairs_per_page: usize,
    #[arg(long, default_value_t = 20)]
    spacings_per_page: usize,
    /// Planted weight magnitude; 0 = indistinguishable compositors
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Per-compositor spacing mode widths, cycled
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 6, 12])]
    spacing_modes: Vec<u32>,
    #[arg(long, default_value_t = 40)]
    s_max: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vocabulary as a wordlist TSV (default: built-in spelling variants)
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    /// Output directory: pages.jsonl, gold.tsv, planted_model.json,
    /// wordlist.tsv, manifest.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    wordlist: PathBuf,
    #[arg(long)]
    pages: PathBuf,
    #[arg(long)]
    spacings: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Output Markdown path; a .json twin is written next to it
    #[arg(long)]
    out: PathBuf,
}

enum CmdError {
    /// Bad flag combination or value: exit 1.
    Usage(String),
    /// Unreadable or malformed inputs: exit 2.
    Data(String),
    /// Library error; exit code depends on the kind.
    Lib(compset::Error),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Data(m) => f.write_str(m),
            CmdError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<compset::Error> for CmdError {
    fn from(e: compset::Error) -> Self {
        CmdError::Lib(e)
    }
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Data(_) => 2,
            CmdError::Lib(e) => match e {
                compset::Error::InvalidConfig(_) => 1,
                compset::Error::AllRestartsFailed { .. } | compset::Error::NonFinite { .. } => 3,
                _ => 2,
            },
        }
    }
}

type CmdResult<T = ()> = Result<T, CmdError>;

fn data_err(context: &str, e: impl fmt::Display) -> CmdError {
    CmdError::Data(format!("{context}: {e}"))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        compset::configure_threads(threads);
    }
    let outcome = match cli.command {
        Command::Align(args) => cmd_align(args),
        Command::ExtractSpacing(args) => cmd_extract_spacing(args),
        Command::SelectWords(args) => cmd_select_words(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn snapshot<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("args serialize")
}

/// Manifest path for a command whose output is a single file.
fn sibling_manifest(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest(manifest: RunManifest, path: &Path) -> CmdResult {
    manifest
        .write(path)
        .map_err(|e| data_err(&path.display().to_string(), e))
}

/// Page files in a directory, keyed by file stem.
fn page_files(dir: &Path) -> CmdResult<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| data_err(&dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| data_err(&dir.display().to_string(), e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        files.insert(stem.to_string(), path);
    }
    Ok(files)
}

fn read_page_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| data_err(&path.display().to_string(), e))
}

fn cmd_align(args: AlignArgs) -> CmdResult {
    let mut manifest = RunManifest::new("align", snapshot(&args), None);
    // (page_id, modern path, diplomatic path), sorted by page id
    let inputs: Vec<(String, PathBuf, PathBuf)> = if let Some(tsv) = &args.pages_tsv {
        manifest
            .digest_input(tsv)
            .map_err(|e| data_err(&tsv.display().to_string(), e))?;
        let text = read_page_text(tsv)?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(CmdError::Data(format!(
                    "{}:{}: expected page_id<TAB>modern<TAB>diplomatic",
                    tsv.display(),
                    lineno + 1
                )));
            }
            rows.push((
                fields[0].to_string(),
                PathBuf::from(fields[1]),
                PathBuf::from(fields[2]),
            ));
        }
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    } else {
        let (Some(modern_dir), Some(diplomatic_dir)) = (&args.modern, &args.diplomatic) else {
            return Err(CmdError::Usage(
                "need either --pages-tsv or both --modern and --diplomatic".into(),
            ));
        };
        let modern = page_files(modern_dir)?;
        let diplomatic = page_files(diplomatic_dir)?;
        let missing_d: Vec<&String> = modern.keys().filter(|k| !diplomatic.contains_key(*k)).collect();
        let missing_m: Vec<&String> = diplomatic.keys().filter(|k| !modern.contains_key(*k)).collect();
        if !missing_d.is_empty() || !missing_m.is_empty() {
            return Err(CmdError::Data(format!(
                "page sets differ; missing diplomatic: {missing_d:?}, missing modern: {missing_m:?}"
            )));
        }
        modern
            .into_iter()
            .map(|(id, m)| {
                let d = diplomatic[&id].clone();
                (id, m, d)
            })
            .collect()
    };
    if inputs.is_empty() {
        return Err(CmdError::Data("no pages found".into()));
    }
    for (_, m, d) in &inputs {
        manifest
            .digest_input(m)
            .map_err(|e| data_err(&m.display().to_string(), e))?;
        manifest
            .digest_input(d)
            .map_err(|e| data_err(&d.display().to_string(), e))?;
    }

    let mut pages = Vec::with_capacity(inputs.len());
    for (page_id, modern_path, diplomatic_path) in &inputs {
        let modern_tokens = tokenize(page_id, &read_page_text(modern_path)?);
        let diplomatic_tokens = tokenize(page_id, &read_page_text(diplomatic_path)?);
        let mut pairs = align_word_level(&modern_tokens, &diplomatic_tokens);
        if args.drop_exact_matches {
            pairs = drop_exact_matches(pairs);
        }
        pages.push(Page {
            page_id: page_id.clone(),
            pairs,
            spacings: Vec::new(),
        });
    }
    io::write_pages(&args.out, &pages)?;
    println!("aligned {} pages -> {}", pages.len(), args.out.display());
    write_manifest(manifest, &sibling_manifest(&args.out))
}

fn cmd_extract_spacing(args: ExtractSpacingArgs) -> CmdResult {
    let mut manifest = RunManifest::new("extract-spacing", snapshot(&args), None);
    manifest
        .digest_input(&args.glyphs)
        .map_err(|e| data_err(&args.glyphs.display().to_string(), e))?;
    let boxes = io::read_glyph_boxes(&args.glyphs)?;
    let extraction = extract_spacings(&boxes, args.s_max);
    if extraction.clamped_negative > 0 {
        log::warn!(
            "{} overlapping glyph pairs clamped to width 0",
            extraction.clamped_negative
        );
    }
    if extraction.clamped_over_max > 0 {
        log::warn!(
            "{} widths clamped down to s_max {}",
            extraction.clamped_over_max,
            args.s_max
        );
    }
    let pages: Vec<Page> = extraction
        .widths
        .into_iter()
        .map(|(page_id, spacings)| Page {
            page_id,
            pairs: Vec::new(),
            spacings,
        })
        .collect();
    let total: usize = pages.iter().map(|p| p.spacings.len()).sum();
    io::write_pages(&args.out, &pages)?;
    println!(
        "measured {total} comma spacings on {} pages -> {}",
        pages.len(),
        args.out.display()
    );
    write_manifest(manifest, &sibling_manifest(&args.out))
}

fn load_blocklist(args: &SelectWordsArgs) -> CmdResult<BTreeSet<String>> {
    if args.no_blocklist {
        return Ok(BTreeSet::new());
    }
    let mut blocklist = default_name_blocklist();
    if let Some(path) = &args.blocklist {
        let text = read_page_text(path)?;
        blocklist.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(stri_lower),
        );
    }
    Ok(blocklist)
}

fn stri_lower(s: &str) -> String {
    s.to_lowercase()
}

fn all_pairs(pages: &[Page]) -> Vec<AlignedPair> {
    pages.iter().flat_map(|p| p.pairs.iter().cloned()).collect()
}

fn cmd_select_words(args: SelectWordsArgs) -> CmdResult {
    let mut manifest = RunManifest::new("select-words", snapshot(&args), None);
    manifest
        .digest_input(&args.pages)
        .map_err(|e| data_err(&args.pages.display().to_string(), e))?;
    let pages = io::read_pages(&args.pages)?;
    let pairs = all_pairs(&pages);
    let wordlist = match args.mode {
        WordlistMode::Auto => {
            let blocklist = load_blocklist(&args)?;
            select_auto_wordlist(&pairs, args.min_freq, args.max_dominant, &blocklist)?
        }
        WordlistMode::Hinman => hinman_wordlist(&pairs),
    };
    io::write_wordlist(&args.out, &wordlist)?;
    println!("selected {} words -> {}", wordlist.len(), args.out.display());
    write_manifest(manifest, &sibling_manifest(&args.out))
}

/// Resolves `auto`/`hinman`/path, reusing the train-time thresholds.
fn resolve_wordlist(
    spec: &str,
    pairs: &[AlignedPair],
    min_freq: u64,
    max_dominant: f64,
) -> CmdResult<WordList> {
    match spec {
        "auto" => Ok(select_auto_wordlist(
            pairs,
            min_freq,
            max_dominant,
            &default_name_blocklist(),
        )?),
        "hinman" => Ok(hinman_wordlist(pairs)),
        path => Ok(io::read_wordlist(Path::new(path))?),
    }
}

/// Combines pair pages with spacing pages (merged by page id) and filters
/// pairs through the word list.
fn assemble_pages(
    pages: Vec<Page>,
    spacing_pages: Option<Vec<Page>>,
    wordlist: &WordList,
) -> Vec<Page> {
    let aligned: Vec<(String, Vec<AlignedPair>)> = pages
        .iter()
        .map(|p| (p.page_id.clone(), p.pairs.clone()))
        .collect();
    let mut spacings: BTreeMap<String, Vec<u32>> = pages
        .iter()
        .filter(|p| !p.spacings.is_empty())
        .map(|p| (p.page_id.clone(), p.spacings.clone()))
        .collect();
    for page in spacing_pages.into_iter().flatten() {
        spacings
            .entry(page.page_id)
            .or_default()
            .extend(page.spacings);
    }
    build_pages(&aligned, &spacings, wordlist)
}

fn ensure_out_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| data_err(&dir.display().to_string(), e))
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    if args.mode == ModeArg::Basic && args.features.is_some() {
        return Err(CmdError::Usage(
            "--features selects log-linear features; it cannot be combined with --mode basic"
                .into(),
        ));
    }
    let mut manifest = RunManifest::new("train", snapshot(&args), Some(args.seed));
    manifest
        .digest_input(&args.pages)
        .map_err(|e| data_err(&args.pages.display().to_string(), e))?;
    if let Some(sp) = &args.spacings {
        manifest
            .digest_input(sp)
            .map_err(|e| data_err(&sp.display().to_string(), e))?;
    }
    if !matches!(args.wordlist.as_str(), "auto" | "hinman") {
        manifest
            .digest_input(Path::new(&args.wordlist))
            .map_err(|e| data_err(&args.wordlist, e))?;
    }

    let mut raw_pages = io::read_pages(&args.pages)?;
    let spacing_pages = args.spacings.as_ref().map(|p| io::read_pages(p)).transpose()?;
    let wordlist = resolve_wordlist(
        &args.wordlist,
        &all_pairs(&raw_pages),
        args.min_freq,
        args.max_dominant,
    )?;
    if args.drop_exact_matches {
        for page in &mut raw_pages {
            page.pairs = drop_exact_matches(std::mem::take(&mut page.pairs));
        }
    }
    let pages = assemble_pages(raw_pages, spacing_pages, &wordlist);

    let config = TrainConfig {
        num_compositors: args.compositors,
        em_iterations: args.iterations,
        restarts: args.restarts,
        mstep_inner_iterations: args.inner_iterations,
        l2_lambda: args.l2_lambda,
        theta_alpha: args.theta_alpha,
        basic_alpha: args.basic_alpha,
        seed: args.seed,
        s_max: args.s_max,
        ortho_mode: match args.mode {
            ModeArg::Loglinear => OrthoMode::Loglinear,
            ModeArg::Basic => OrthoMode::Basic,
        },
        feature_kinds: args.features.map_or(FeatureKinds::ALL, FeaturesArg::kinds),
        use_spacing: !args.no_spacing,
        ..TrainConfig::default()
    };
    let config = TrainConfig {
        fixed_uniform_prior: args.fixed_uniform_prior,
        ..config
    };

    ensure_out_dir(&args.out_dir)?;
    let result = train(&pages, &wordlist, &config)?;
    write_train_outputs(&args.out_dir, &result, &wordlist, &config)?;
    println!(
        "trained C={} on {} pages: log-likelihood {:.4} (restart {} of {})",
        config.num_compositors,
        pages.len(),
        result.log_likelihood,
        result.restart_index,
        config.restarts
    );
    write_manifest(manifest, &args.out_dir.join("manifest.json"))
}

fn write_train_outputs(
    out_dir: &Path,
    result: &TrainResult,
    wordlist: &WordList,
    config: &TrainConfig,
) -> CmdResult {
    let table = CandidateTable::build(wordlist, config.feature_kinds);
    io::save_model(&out_dir.join("model.json"), &result.params, &table)?;
    io::write_wordlist(&out_dir.join("wordlist.tsv"), wordlist)?;
    let attribution = Attribution {
        labels: result
            .assignments
            .iter()
            .map(|(page, c)| (page.clone(), c.to_string()))
            .collect(),
    };
    io::write_attribution(&out_dir.join("attribution.tsv"), &attribution)?;
    io::write_training_log(&out_dir.join("training_log.jsonl"), &result.restart_traces)?;
    if !result.failures.is_empty() {
        log::warn!(
            "{} of {} restarts failed; see manifest inputs for reproduction",
            result.failures.len(),
            result.failures.len() + result.restart_traces.iter().filter(|t| !t.is_empty()).count()
        );
    }
    Ok(())
}

/// Prediction and reporting rebuild the candidate table with every feature
/// kind so any model's feature names resolve.
fn load_model_for_scoring(
    model_path: &Path,
    wordlist: &WordList,
) -> CmdResult<(ModelParams, CandidateTable)> {
    let table = CandidateTable::build(wordlist, FeatureKinds::ALL);
    let params = io::load_model(model_path, &table)?;
    Ok((params, table))
}

fn cmd_predict(args: PredictArgs) -> CmdResult {
    let mut manifest = RunManifest::new("predict", snapshot(&args), None);
    for path in [&args.model, &args.wordlist, &args.pages]
        .into_iter()
        .chain(args.spacings.as_ref())
    {
        manifest
            .digest_input(path)
            .map_err(|e| data_err(&path.display().to_string(), e))?;
    }
    let wordlist = io::read_wordlist(&args.wordlist)?;
    let (params, table) = load_model_for_scoring(&args.model, &wordlist)?;
    let raw_pages = io::read_pages(&args.pages)?;
    let spacing_pages = args.spacings.as_ref().map(|p| io::read_pages(p)).transpose()?;
    let pages = assemble_pages(raw_pages, spacing_pages, &wordlist);
    let attribution = predict(&params, &table, &pages)?;
    io::write_attribution(&args.out, &attribution)?;
    println!(
        "labeled {} pages -> {}",
        attribution.len(),
        args.out.display()
    );
    write_manifest(manifest, &sibling_manifest(&args.out))
}

fn cmd_evaluate(args: EvaluateArgs) -> CmdResult {
    let pred = io::read_attribution(&args.pred)?;
    let gold = io::read_attribution(&args.gold)?;
    let one = one_to_one_accuracy(&pred, &gold)?;
    let many = many_to_one_accuracy(&pred, &gold)?;
    let c = args.compositors.unwrap_or_else(|| {
        pred.labels.values().collect::<BTreeSet<_>>().len()
    });
    let (base_one, base_many) = random_baseline(&gold, c, args.baseline_trials, args.baseline_seed)?;
    println!("one-to-one accuracy   {one:.4}");
    println!("many-to-one accuracy  {many:.4}");
    println!(
        "random baseline (C={c}, {} trials)  {base_one:.4} / {base_many:.4}",
        args.baseline_trials
    );
    if let Some(json_path) = &args.json_out {
        let doc = serde_json::json!({
            "one_to_one": one,
            "many_to_one": many,
            "baseline_compositors": c,
            "baseline_one_to_one": base_one,
            "baseline_many_to_one": base_many,
        });
        fs::write(json_path, format!("{:#}\n", doc))
            .map_err(|e| data_err(&json_path.display().to_string(), e))?;
        let mut manifest = RunManifest::new("evaluate", snapshot(&args), None);
        manifest
            .digest_input(&args.pred)
            .map_err(|e| data_err(&args.pred.display().to_string(), e))?;
        manifest
            .digest_input(&args.gold)
            .map_err(|e| data_err(&args.gold.display().to_string(), e))?;
        write_manifest(manifest, &sibling_manifest(json_path))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let mut manifest = RunManifest::new("synth", snapshot(&args), Some(args.seed));
    let vocabulary = match &args.vocabulary {
        Some(path) => {
            manifest
                .digest_input(path)
                .map_err(|e| data_err(&path.display().to_string(), e))?;
            io::read_wordlist(path)?
                .iter()
                .map(|(m, ds)| (m.clone(), ds.iter().cloned().collect()))
                .collect()
        }
        None => default_vocabulary(),
    };
    let config = SynthConfig {
        num_compositors: args.compositors,
        pages_per_compositor: args.pages_per_compositor,
        pairs_per_page: args.pairs_per_page,
        spacings_per_page: args.spacings_per_page,
        vocabulary,
        separation: args.separation,
        spacing_modes: args.spacing_modes.clone(),
        s_max: args.s_max,
        seed: args.seed,
    };
    let (pages, gold, planted) = generate(&config)?;
    ensure_out_dir(&args.out_dir)?;
    let wordlist = WordList::from_entries(
        config
            .vocabulary
            .iter()
            .map(|(m, ds)| (m.clone(), ds.iter().cloned())),
    );
    let table = CandidateTable::build(&wordlist, FeatureKinds::ALL);
    io::write_pages(&args.out_dir.join("pages.jsonl"), &pages)?;
    io::write_attribution(&args.out_dir.join("gold.tsv"), &gold)?;
    io::write_wordlist(&args.out_dir.join("wordlist.tsv"), &wordlist)?;
    io::save_model(&args.out_dir.join("planted_model.json"), &planted, &table)?;
    println!(
        "generated {} pages for {} compositors -> {}",
        pages.len(),
        config.num_compositors,
        args.out_dir.display()
    );
    write_manifest(manifest, &args.out_dir.join("manifest.json"))
}

fn cmd_report(args: ReportArgs) -> CmdResult {
    let mut manifest = RunManifest::new("report", snapshot(&args), None);
    for path in [&args.model, &args.wordlist, &args.pages]
        .into_iter()
        .chain(args.spacings.as_ref())
    {
        manifest
            .digest_input(path)
            .map_err(|e| data_err(&path.display().to_string(), e))?;
    }
    let wordlist = io::read_wordlist(&args.wordlist)?;
    let (params, table) = load_model_for_scoring(&args.model, &wordlist)?;
    let raw_pages = io::read_pages(&args.pages)?;
    let spacing_pages = args.spacings.as_ref().map(|p| io::read_pages(p)).transpose()?;
    let pages = assemble_pages(raw_pages, spacing_pages, &wordlist);
    let doc = report(&params, &table, &pages, args.top_k)?;
    fs::write(&args.out, render_markdown(&doc))
        .map_err(|e| data_err(&args.out.display().to_string(), e))?;
    let json_path = args.out.with_extension("json");
    let json = serde_json::to_string_pretty(&doc).expect("report serializes");
    fs::write(&json_path, json + "\n")
        .map_err(|e| data_err(&json_path.display().to_string(), e))?;
    println!(
        "report -> {} (JSON twin {})",
        args.out.display(),
        json_path.display()
    );
    write_manifest(manifest, &sibling_manifest(&args.out))
}
