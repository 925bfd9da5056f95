use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use vecprobe::cbow::VectorFormat;
use vecprobe::pipeline::{
    self, ExperimentChoice, ExperimentParams, PipelineError, RunConfig, CORPUS_FILE, EXIT_USAGE, MANIFESTS_FILE,
};
use vecprobe::synth::{self, SynthConfig};

const WORKERS_ENV: &str = "VECPROBE_WORKERS";

#[derive(Parser)]
#[command(name = "vecprobe", version, about = "Pseudoword experiments on CBOW word embeddings")]
struct Cli {
    /// File of `key = value` lines using the long flag names as keys.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower-case raw text and strip everything but letters.
    Normalize {
        #[command(flatten)]
        opts: Opts,
        /// Output file; defaults to `<out-dir>/corpus.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the vocabulary and frequency-band table of a normalized corpus.
    Vocab {
        #[command(flatten)]
        opts: Opts,
    },
    /// Inject pseudowords into a normalized corpus.
    Experiment {
        kind: Kind,
        #[command(flatten)]
        opts: Opts,
        /// Manifest file of earlier experiments on the input corpus; its
        /// entries are carried into the new manifest file.
        #[arg(long)]
        manifests: Option<PathBuf>,
    },
    /// Train a CBOW model with negative sampling.
    Train {
        #[command(flatten)]
        opts: Opts,
        /// Also write vectors in the text format.
        #[arg(long)]
        text: bool,
        /// Print progress lines on standard error.
        #[arg(long)]
        progress: bool,
    },
    /// Compute lengths, cosines and fits for the pseudowords of a manifest.
    Analyze {
        #[command(flatten)]
        opts: Opts,
        /// Directory written by `train`.
        #[arg(long)]
        model_dir: Option<PathBuf>,
        #[arg(long)]
        manifests: Option<PathBuf>,
    },
    /// Normalize, run experiments, train and analyze in one go.
    Run {
        #[command(flatten)]
        opts: Opts,
        /// Words for the frequency experiment.
        #[arg(long, value_delimiter = ',')]
        frequency_words: Vec<String>,
        /// Words for the noise experiment.
        #[arg(long, value_delimiter = ',')]
        noise_words: Vec<String>,
        /// Add the VOID experiment.
        #[arg(long)]
        void: bool,
    },
    /// Generate a synthetic raw-text corpus.
    Synth {
        #[command(flatten)]
        opts: Opts,
        /// Approximate output size.
        #[arg(long, default_value_t = 10 << 20)]
        bytes: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Frequency,
    Noise,
    Void,
    Mix,
}

impl From<Kind> for ExperimentChoice {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Frequency => ExperimentChoice::Frequency,
            Kind::Noise => ExperimentChoice::Noise,
            Kind::Void => ExperimentChoice::Void,
            Kind::Mix => ExperimentChoice::Mix,
        }
    }
}

#[derive(Args, Default)]
struct Opts {
    #[arg(long)]
    seed: Option<u64>,
    /// Input corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    words: Option<Vec<String>>,
    /// Geometric decay rate of the frequency experiment.
    #[arg(long)]
    p: Option<f64>,
    /// Number of pseudowords per family.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    void_frequency: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
    /// Minimum count of an experiment word.
    #[arg(long)]
    floor: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Training threads; defaults to $VECPROBE_WORKERS, then 1.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f32>,
    #[arg(long)]
    table_size: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Parsed `key = value` file. Blank lines and `#` comments are ignored.
struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "corpus",
    "words",
    "p",
    "n",
    "void-frequency",
    "min-count",
    "floor",
    "dim",
    "window",
    "negatives",
    "epochs",
    "workers",
    "learning-rate",
    "table-size",
    "out-dir",
];

impl ConfigFile {
    fn empty() -> Self {
        Self { values: BTreeMap::new() }
    }

    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", k + 1))?;
            let key = key.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key `{key}`", k + 1);
            }
            values.insert(key, value.trim().to_owned());
        }
        Ok(Self { values })
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::empty()),
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::parse(&text).with_context(|| p.display().to_string())
            }
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}")))
            .transpose()
    }
}

/// Flags merged over the config file, environment and defaults.
struct Settings {
    run: RunConfig,
    corpus: Option<PathBuf>,
    out_dir: PathBuf,
}

fn resolve(opts: &Opts, file: &ConfigFile) -> Result<Settings> {
    macro_rules! pick {
        ($field:ident, $key:literal) => {
            match opts.$field.clone() {
                Some(v) => Some(v),
                None => file.get($key)?,
            }
        };
    }
    let mut run = RunConfig::default();
    let defaults = ExperimentParams::default();
    run.seed = pick!(seed, "seed").unwrap_or(run.seed);
    let words = match &opts.words {
        Some(w) => w.clone(),
        None => file
            .values
            .get("words")
            .map(|s| s.split(',').map(|w| w.trim().to_owned()).filter(|w| !w.is_empty()).collect())
            .unwrap_or_default(),
    };
    run.experiment = ExperimentParams {
        words,
        p: pick!(p, "p").unwrap_or(defaults.p),
        n: pick!(n, "n"),
        void_frequency: pick!(void_frequency, "void-frequency").unwrap_or(defaults.void_frequency),
        floor: pick!(floor, "floor").unwrap_or(defaults.floor),
    };
    let t = &mut run.training;
    t.min_count = pick!(min_count, "min-count").unwrap_or(t.min_count);
    t.dimension = pick!(dim, "dim").unwrap_or(t.dimension);
    t.window = pick!(window, "window").unwrap_or(t.window);
    t.negatives = pick!(negatives, "negatives").unwrap_or(t.negatives);
    t.epochs = pick!(epochs, "epochs").unwrap_or(t.epochs);
    t.table_size = pick!(table_size, "table-size").unwrap_or(t.table_size);
    if let Some(lr) = pick!(learning_rate, "learning-rate") {
        t.initial_learning_rate = lr;
        t.final_learning_rate_floor = lr * 1e-4;
    }
    t.workers = match pick!(workers, "workers") {
        Some(w) => w,
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => v.trim().parse().with_context(|| format!("${WORKERS_ENV}"))?,
            Err(_) => 1,
        },
    };
    t.seed = run.seed;
    Ok(Settings {
        corpus: pick!(corpus, "corpus"),
        out_dir: pick!(out_dir, "out-dir").unwrap_or_else(|| PathBuf::from(".")),
        run,
    })
}

impl Settings {
    fn corpus(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("--corpus is required".into()).into())
    }
}

fn execute(cli: Cli) -> Result<()> {
    let file = ConfigFile::load(cli.config.as_deref()).map_err(usage)?;
    match cli.command {
        Command::Normalize { opts, out } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let out = out.unwrap_or_else(|| s.out_dir.join(CORPUS_FILE));
            let stats = pipeline::normalize_file(s.corpus()?, &out)?;
            eprintln!(
                "normalized {} lines into {} lines, {} tokens",
                stats.lines_in, stats.lines_out, stats.tokens_out
            );
        }
        Command::Vocab { opts } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let vocab = pipeline::vocabulary_stage(s.corpus()?, s.run.training.min_count, &s.out_dir)?;
            eprintln!("vocabulary of {} words", vocab.len());
        }
        Command::Experiment { kind, opts, manifests } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let prior = match manifests {
                Some(p) => pipeline::read_manifest_file(&p)?,
                None => Vec::new(),
            };
            let fresh = pipeline::experiment_stage(s.corpus()?, prior, kind.into(), &s.run, &s.out_dir)?;
            for m in &fresh {
                println!("{}", m.base_word);
                print!("{}", m.count_table());
                for w in &m.warnings {
                    eprintln!("warning: {w}");
                }
            }
        }
        Command::Train { opts, text, progress } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let mut training = s.run.training();
            training.progress = progress;
            let mut formats = vec![VectorFormat::Binary];
            if text {
                formats.push(VectorFormat::Text);
            }
            let (model, stats) = pipeline::train_stage(s.corpus()?, &training, &formats, &s.out_dir)?;
            eprintln!(
                "trained {} words x {} dims on {} tokens per epoch",
                model.vocab().len(),
                model.dim(),
                stats.train_words
            );
        }
        Command::Analyze { opts, model_dir, manifests } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let model_dir = model_dir.unwrap_or_else(|| s.out_dir.clone());
            let manifests = manifests.unwrap_or_else(|| s.out_dir.join(MANIFESTS_FILE));
            let (report, paths) = pipeline::analyze_stage(&model_dir, &manifests, &s.out_dir)?;
            for p in paths {
                println!("{}", p.display());
            }
            if !report.series.excluded.is_empty() {
                println!("excluded below the cutoff:");
                for e in &report.series.excluded {
                    println!("  {} ({})", e.pseudoword, e.frequency);
                }
            }
        }
        Command::Run {
            opts,
            frequency_words,
            noise_words,
            void,
        } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let mut plan = Vec::new();
            if void {
                plan.push((ExperimentChoice::Void, Vec::new()));
            }
            if !frequency_words.is_empty() {
                plan.push((ExperimentChoice::Frequency, frequency_words));
            }
            if !noise_words.is_empty() {
                plan.push((ExperimentChoice::Noise, noise_words));
            }
            let layout = pipeline::run_pipeline(s.corpus()?, &plan, &s.run, &s.out_dir)?;
            println!("{}", layout.report_dir().display());
        }
        Command::Synth { opts, bytes, out } => {
            let s = resolve(&opts, &file).map_err(usage)?;
            let cfg = SynthConfig {
                seed: s.run.seed,
                target_bytes: bytes,
                ..Default::default()
            };
            let mut w = std::io::BufWriter::new(fs::File::create(&out).with_context(|| out.display().to_string())?);
            let stats = synth::generate(&cfg, &mut w)?;
            std::io::Write::flush(&mut w)?;
            eprintln!("wrote {} lines, {} words", stats.lines, stats.words);
        }
    }
    Ok(())
}

fn usage(e: anyhow::Error) -> anyhow::Error {
    PipelineError::Usage(format!("{e:#}")).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(EXIT_USAGE, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
