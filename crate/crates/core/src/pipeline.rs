//! File-level stages of a full run and their exit-code contract.
//!
//! Each stage reads its inputs from disk and writes its outputs into a
//! directory, so stages can run as separate processes. Randomized stages
//! derive their generators from the master seed and a stage name.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, Report};
use crate::cbow::vectors::vector_path;
use crate::cbow::{self, CbowError, EmbeddingModel, Layer, TrainingConfig, VectorFormat};
use crate::corpus::{self, build_vocabulary, frequency_bands, CorpusError, SentenceCorpus, Vocabulary};
use crate::pseudoword::{
    self, build_frequency_experiment, build_noise_experiment, build_void_experiment, mix_words,
    ExperimentManifest, FrequencyExperiment, NoiseExperiment, PseudowordError, VoidSpec,
};
use crate::rng::stage_rng;

pub const CORPUS_FILE: &str = "corpus.txt";
pub const MANIFESTS_FILE: &str = "manifests.json";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const BANDS_FILE: &str = "bands.csv";
pub const TRAINING_FILE: &str = "training.json";
pub const VECTORS_STEM: &str = "vectors";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pseudoword(#[from] PseudowordError),
    #[error(transparent)]
    Cbow(#[from] CbowError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Consistency(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

impl PipelineError {
    /// 2 for usage, configuration and input errors, 3 for experiment or
    /// training preconditions, 4 for model/manifest mismatches.
    pub fn exit_code(&self) -> i32 {
        use PseudowordError as P;
        match self {
            PipelineError::Usage(_) | PipelineError::File { .. } | PipelineError::Corpus(_) => EXIT_USAGE,
            PipelineError::Pseudoword(P::InvalidParameter(_) | P::IndexOutOfRange { .. }) => EXIT_USAGE,
            PipelineError::Pseudoword(_) => EXIT_PRECONDITION,
            PipelineError::Cbow(CbowError::Config(_) | CbowError::Io(_) | CbowError::Format { .. }) => EXIT_USAGE,
            PipelineError::Cbow(_) => EXIT_PRECONDITION,
            PipelineError::Analysis(AnalysisError::Consistency(_) | AnalysisError::MissingLabels(_)) => {
                EXIT_CONSISTENCY
            }
            PipelineError::Analysis(_) => EXIT_USAGE,
            PipelineError::Consistency(_) => EXIT_CONSISTENCY,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::File {
        path: path.to_owned(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(file_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(file_err(path))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(file_err(path))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentChoice {
    Frequency,
    Noise,
    Void,
    Mix,
}

impl ExperimentChoice {
    pub fn default_n(self) -> usize {
        match self {
            ExperimentChoice::Frequency | ExperimentChoice::Void => 20,
            ExperimentChoice::Noise | ExperimentChoice::Mix => 7,
        }
    }
}

/// Parameters shared by the experiment builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub words: Vec<String>,
    pub p: f64,
    /// Family size; `None` picks the experiment's own default.
    pub n: Option<usize>,
    pub void_frequency: f64,
    /// Minimum base-word count.
    pub floor: u64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            words: Vec::new(),
            p: 0.5,
            n: None,
            void_frequency: 0.005,
            floor: 10_000,
        }
    }
}

/// Everything a run needs. `training.min_count` doubles as the cutoff
/// that experiment manifests flag against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub experiment: ExperimentParams,
    pub training: TrainingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            experiment: ExperimentParams::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl RunConfig {
    /// Training settings with the master seed applied.
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.training.clone()
        }
    }
}

pub fn normalize_file(input: &Path, output: &Path) -> Result<corpus::NormalizeStats> {
    let r = open(input)?;
    let mut w = create(output)?;
    let stats = corpus::normalize(r, &mut w)?;
    w.flush().map_err(file_err(output))?;
    Ok(stats)
}

pub fn read_corpus(path: &Path) -> Result<SentenceCorpus> {
    Ok(SentenceCorpus::from_reader(open(path)?)?)
}

/// Writes `vocab.tsv` and `bands.csv` into `out_dir`.
pub fn vocabulary_stage(corpus_path: &Path, min_count: u64, out_dir: &Path) -> Result<Vocabulary> {
    let corpus = read_corpus(corpus_path)?;
    let vocab = build_vocabulary(&corpus, min_count);
    let vpath = out_dir.join(VOCAB_FILE);
    let mut w = create(&vpath)?;
    vocab.write_tsv(&mut w).map_err(file_err(&vpath))?;
    w.flush().map_err(file_err(&vpath))?;
    let bpath = out_dir.join(BANDS_FILE);
    let mut w = create(&bpath)?;
    frequency_bands(&vocab).write_csv(&mut w).map_err(file_err(&bpath))?;
    w.flush().map_err(file_err(&bpath))?;
    Ok(vocab)
}

pub fn read_manifest_file(path: &Path) -> Result<Vec<ExperimentManifest>> {
    pseudoword::read_manifests(open(path)?).map_err(file_err(path))
}

pub fn write_manifest_file(path: &Path, manifests: &[ExperimentManifest]) -> Result<()> {
    let mut w = create(path)?;
    pseudoword::write_manifests(&mut w, manifests).map_err(file_err(path))?;
    w.flush().map_err(file_err(path))
}

/// Applies one experiment to `corpus` in place and returns its manifests.
pub fn apply_experiment(
    corpus: &mut SentenceCorpus,
    kind: ExperimentChoice,
    cfg: &RunConfig,
) -> Result<Vec<ExperimentManifest>> {
    let e = &cfg.experiment;
    let n = e.n.unwrap_or(kind.default_n());
    let min_count = cfg.training.min_count;
    Ok(match kind {
        ExperimentChoice::Frequency => build_frequency_experiment(
            corpus,
            &FrequencyExperiment {
                words: e.words.clone(),
                p: e.p,
                n,
                min_count,
                floor: e.floor,
            },
            cfg.seed,
        )?,
        ExperimentChoice::Noise => build_noise_experiment(
            corpus,
            &NoiseExperiment {
                words: e.words.clone(),
                n,
                min_count,
                floor: e.floor,
            },
            cfg.seed,
        )?,
        ExperimentChoice::Void => {
            let spec = VoidSpec::new(e.void_frequency)?;
            vec![build_void_experiment(corpus, &spec, e.p, n, min_count, cfg.seed)?]
        }
        ExperimentChoice::Mix => {
            let [a, b] = e.words.as_slice() else {
                return Err(PipelineError::Usage("mix takes exactly two words".into()));
            };
            let mut rng = stage_rng(cfg.seed, &format!("mix/{a}/{b}"));
            vec![mix_words(corpus, a, b, n, &mut rng)?]
        }
    })
}

/// Reads `corpus_path`, applies the experiment, and writes the modified
/// corpus plus `prior` and the new manifests into `out_dir`.
pub fn experiment_stage(
    corpus_path: &Path,
    prior: Vec<ExperimentManifest>,
    kind: ExperimentChoice,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<ExperimentManifest>> {
    let mut corpus = read_corpus(corpus_path)?;
    let fresh = apply_experiment(&mut corpus, kind, cfg)?;
    let cpath = out_dir.join(CORPUS_FILE);
    fs::create_dir_all(out_dir).map_err(file_err(out_dir))?;
    corpus.write_path(&cpath)?;
    let mut all = prior;
    all.extend(fresh.iter().cloned());
    write_manifest_file(&out_dir.join(MANIFESTS_FILE), &all)?;
    Ok(fresh)
}

/// Trains on the corpus and writes the vocabulary, the training settings
/// and both layers into `out_dir`.
pub fn train_stage(
    corpus_path: &Path,
    training: &TrainingConfig,
    formats: &[VectorFormat],
    out_dir: &Path,
) -> Result<(EmbeddingModel, cbow::TrainingStats)> {
    training.validate()?;
    let corpus = read_corpus(corpus_path)?;
    let vocab = build_vocabulary(&corpus, training.min_count);
    let (model, stats) = cbow::train(&corpus, &vocab, training)?;
    save_model(&model, formats, out_dir)?;
    Ok((model, stats))
}

pub fn save_model(model: &EmbeddingModel, formats: &[VectorFormat], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(file_err(out_dir))?;
    let vpath = out_dir.join(VOCAB_FILE);
    model.vocab().write_path(&vpath)?;
    let tpath = out_dir.join(TRAINING_FILE);
    let mut w = create(&tpath)?;
    serde_json::to_writer_pretty(&mut w, model.config()).map_err(|e| file_err(&tpath)(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(file_err(&tpath))?;
    for &format in formats {
        for layer in Layer::ALL {
            cbow::save_vectors(model, layer, vector_path(out_dir, VECTORS_STEM, layer, format), format)?;
        }
    }
    Ok(())
}

/// Rebuilds a model from a directory written by [`save_model`] with the
/// binary format present.
pub fn load_model(dir: &Path) -> Result<EmbeddingModel> {
    let vocab = Vocabulary::read_path(dir.join(VOCAB_FILE))?;
    let tpath = dir.join(TRAINING_FILE);
    let config: TrainingConfig =
        serde_json::from_reader(open(&tpath)?).map_err(|e| file_err(&tpath)(e.into()))?;
    let mut layers = Vec::new();
    for layer in Layer::ALL {
        let path = vector_path(dir, VECTORS_STEM, layer, VectorFormat::Binary);
        if !path.exists() {
            return Err(PipelineError::Usage(format!("{} not found", path.display())));
        }
        let e = cbow::load_vectors(&path, VectorFormat::Binary)?;
        let words_match = e.words.len() == vocab.len()
            && e.words.iter().zip(vocab.entries()).all(|(a, b)| *a == b.word);
        if !words_match || e.dim != config.dimension {
            return Err(PipelineError::Consistency(format!(
                "{} does not match the vocabulary and training settings",
                path.display()
            )));
        }
        layers.push(e.data);
    }
    let syn1neg = layers.pop().unwrap();
    let syn0 = layers.pop().unwrap();
    Ok(EmbeddingModel::from_parts(vocab, config, syn0, syn1neg)?)
}

/// Analyzes a saved model against a manifest file and writes the report.
pub fn analyze_stage(model_dir: &Path, manifests_path: &Path, out_dir: &Path) -> Result<(Report, Vec<PathBuf>)> {
    let model = load_model(model_dir)?;
    let manifests = read_manifest_file(manifests_path)?;
    let report = analysis::analyze(&model, &manifests)?;
    let paths = analysis::emit_report(&report, out_dir)?;
    Ok((report, paths))
}

/// Layout of a full run's output directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn normalized(&self) -> PathBuf {
        self.root.join("normalized.txt")
    }
    pub fn experiment_dir(&self) -> PathBuf {
        self.root.join("experiment")
    }
    pub fn model_dir(&self) -> PathBuf {
        self.root.join("model")
    }
    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

/// Normalize, apply each experiment in turn, train and analyze. Every
/// experiment draws the shared `cfg.experiment` parameters except `words`,
/// which come from `plan`.
pub fn run_pipeline(
    raw_corpus: &Path,
    plan: &[(ExperimentChoice, Vec<String>)],
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<RunLayout> {
    let layout = RunLayout {
        root: out_dir.to_owned(),
    };
    normalize_file(raw_corpus, &layout.normalized())?;
    let mut corpus = read_corpus(&layout.normalized())?;
    let mut manifests = Vec::new();
    for (kind, words) in plan {
        let step = RunConfig {
            experiment: ExperimentParams {
                words: words.clone(),
                ..cfg.experiment.clone()
            },
            ..cfg.clone()
        };
        manifests.extend(apply_experiment(&mut corpus, *kind, &step)?);
    }
    let exp_dir = layout.experiment_dir();
    fs::create_dir_all(&exp_dir).map_err(file_err(&exp_dir))?;
    corpus.write_path(exp_dir.join(CORPUS_FILE))?;
    write_manifest_file(&exp_dir.join(MANIFESTS_FILE), &manifests)?;
    drop(corpus);
    train_stage(
        &exp_dir.join(CORPUS_FILE),
        &cfg.training(),
        &[VectorFormat::Binary, VectorFormat::Text],
        &layout.model_dir(),
    )?;
    analyze_stage(&layout.model_dir(), &exp_dir.join(MANIFESTS_FILE), &layout.report_dir())?;
    Ok(layout)
}
