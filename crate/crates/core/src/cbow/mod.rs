//! Continuous bag-of-words training with negative sampling.
//!
//! The model keeps both weight layers: `syn0` holds the word vectors and
//! `syn1neg` the output weights of the negative-sampling objective. Each
//! in-vocabulary token is predicted from the mean of the `syn0` rows of a
//! randomly shrunk window around it, never crossing a line boundary.

pub mod kernel;
pub mod unigram;
pub mod vectors;

use std::io;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{SentenceCorpus, Vocabulary};
use crate::rng::{stage_rng, StageRng};

pub use unigram::UnigramTable;
pub use vectors::{load_vectors, save_vectors, Embeddings, VectorFormat};

#[derive(Debug, Error)]
pub enum CbowError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("corpus contains no in-vocabulary tokens")]
    NoTrainingTokens,
    #[error("{0}")]
    Domain(String),
    #[error("malformed vector file at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub initial_learning_rate: f32,
    /// Lower bound of the linearly decaying learning rate.
    pub final_learning_rate_floor: f32,
    /// Must stay off; frequent-word subsampling is not implemented.
    pub subsampling: bool,
    pub seed: u64,
    pub workers: usize,
    pub unigram_power: f64,
    pub table_size: usize,
    /// Tokens between loss-trace points.
    pub report_interval: u64,
    /// Print progress lines on standard error.
    pub progress: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            dimension: 100,
            window: 10,
            negatives: 5,
            epochs: 10,
            min_count: 128,
            initial_learning_rate: 0.05,
            final_learning_rate_floor: 0.05 * 1e-4,
            subsampling: false,
            seed: 1,
            workers: 1,
            unigram_power: 0.75,
            table_size: 100_000_000,
            report_interval: 100_000,
            progress: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), CbowError> {
        let fail = |m: &str| Err(CbowError::Config(m.to_owned()));
        if self.dimension == 0 {
            return fail("dimension must be positive");
        }
        if self.window == 0 {
            return fail("window must be positive");
        }
        if self.negatives == 0 {
            return fail("negatives must be positive");
        }
        if self.min_count == 0 {
            return fail("min_count must be positive");
        }
        if self.workers == 0 {
            return fail("workers must be positive");
        }
        if self.table_size == 0 {
            return fail("table_size must be positive");
        }
        if !(self.initial_learning_rate > 0.0) || !(self.final_learning_rate_floor > 0.0) {
            return fail("learning rates must be positive");
        }
        if self.subsampling {
            return fail("subsampling is not supported");
        }
        if !(self.unigram_power.is_finite()) {
            return fail("unigram_power must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Syn0,
    Syn1Neg,
}

impl Layer {
    pub const ALL: [Layer; 2] = [Layer::Syn0, Layer::Syn1Neg];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Syn0 => "syn0",
            Layer::Syn1Neg => "syn1neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    config: TrainingConfig,
    syn0: Vec<f32>,
    syn1neg: Vec<f32>,
}

impl EmbeddingModel {
    /// Assembles a model from stored layers. Both matrices must be
    /// `vocab.len() * config.dimension` long.
    pub fn from_parts(
        vocab: Vocabulary,
        config: TrainingConfig,
        syn0: Vec<f32>,
        syn1neg: Vec<f32>,
    ) -> Result<Self, CbowError> {
        let want = vocab.len() * config.dimension;
        if syn0.len() != want || syn1neg.len() != want {
            return Err(CbowError::Domain(format!(
                "layer sizes {} / {} do not match {} words x {} dims",
                syn0.len(),
                syn1neg.len(),
                vocab.len(),
                config.dimension
            )));
        }
        Ok(Self {
            vocab,
            config,
            syn0,
            syn1neg,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dimension
    }

    pub fn matrix(&self, layer: Layer) -> &[f32] {
        match layer {
            Layer::Syn0 => &self.syn0,
            Layer::Syn1Neg => &self.syn1neg,
        }
    }

    pub fn row(&self, layer: Layer, ordinal: usize) -> &[f32] {
        let d = self.dim();
        &self.matrix(layer)[ordinal * d..(ordinal + 1) * d]
    }

    pub fn vector(&self, layer: Layer, word: &str) -> Option<&[f32]> {
        self.vocab.ordinal(word).map(|i| self.row(layer, i))
    }

    pub fn is_finite(&self) -> bool {
        self.syn0.iter().chain(&self.syn1neg).all(|x| x.is_finite())
    }
}

/// `syn0` uniform in `[-0.5/D, 0.5/D)`, `syn1neg` zero.
pub fn init_model<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    config: &TrainingConfig,
    rng: &mut R,
) -> Result<EmbeddingModel, CbowError> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(CbowError::EmptyVocabulary);
    }
    let dim = config.dimension;
    let n = vocab.len() * dim;
    let syn0 = (0..n)
        .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
        .collect();
    Ok(EmbeddingModel {
        vocab: vocab.clone(),
        config: config.clone(),
        syn0,
        syn1neg: vec![0.0; n],
    })
}

/// Loss of one CBOW example under the current model, in `f64`.
pub fn nce_loss(
    context: &[usize],
    target: usize,
    negatives: &[usize],
    model: &EmbeddingModel,
) -> Result<f64, CbowError> {
    if context.is_empty() {
        return Err(CbowError::Domain("empty context".into()));
    }
    if negatives.contains(&target) {
        return Err(CbowError::Domain("negatives must exclude the target".into()));
    }
    let v = model.vocab.len();
    if context.iter().chain(negatives).chain([&target]).any(|&o| o >= v) {
        return Err(CbowError::Domain("ordinal out of range".into()));
    }
    let widen = |m: &[f32]| m.iter().map(|&x| x as f64).collect::<Vec<_>>();
    Ok(kernel::nce_loss(
        &widen(&model.syn0),
        &widen(&model.syn1neg),
        model.dim(),
        context,
        target,
        negatives,
    ))
}

/// Draws `k` negatives from the table, redrawing any that hit `target`.
fn draw_negatives<R: Rng + ?Sized>(
    table: &UnigramTable,
    vocab_size: usize,
    target: usize,
    k: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    if vocab_size < 2 {
        return;
    }
    for _ in 0..k {
        let mut tries = 0;
        let neg = loop {
            let d = table.sample(rng);
            if d != target {
                break d;
            }
            tries += 1;
            if tries == 64 {
                // Table too coarse to hold anything but the target.
                let d = rng.random_range(0..vocab_size - 1);
                break if d >= target { d + 1 } else { d };
            }
        };
        out.push(neg);
    }
}

/// One SGD step on a single example, drawing `config.negatives` negatives.
/// Returns the example's loss before the update.
pub fn train_step<R: Rng + ?Sized>(
    model: &mut EmbeddingModel,
    table: &UnigramTable,
    context: &[usize],
    target: usize,
    lr: f32,
    rng: &mut R,
) -> f32 {
    let dim = model.dim();
    let mut negs = Vec::new();
    draw_negatives(table, model.vocab.len(), target, model.config.negatives, rng, &mut negs);
    let (mut h, mut e) = (vec![0.0; dim], vec![0.0; dim]);
    kernel::sgd_update(
        &mut model.syn0,
        &mut model.syn1neg,
        dim,
        context,
        target,
        &negs,
        lr,
        &mut h,
        &mut e,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    /// Tokens processed (over all epochs and workers) when recorded.
    pub tokens: u64,
    pub learning_rate: f32,
    /// Mean example loss since the previous point of the same worker.
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingStats {
    pub train_words: u64,
    pub processed_tokens: u64,
    pub updates: u64,
    pub loss_trace: Vec<LossPoint>,
}

/// Corpus re-encoded as vocabulary ordinals with out-of-vocabulary tokens
/// removed; lines that become empty are dropped.
struct EncodedCorpus {
    tokens: Vec<u32>,
    line_ends: Vec<usize>,
}

impl EncodedCorpus {
    fn new(corpus: &SentenceCorpus, vocab: &Vocabulary) -> Self {
        let map: Vec<u32> = corpus
            .symbols()
            .iter()
            .map(|s| vocab.ordinal(s).map_or(u32::MAX, |o| o as u32))
            .collect();
        let mut tokens = Vec::with_capacity(corpus.num_tokens());
        let mut line_ends = Vec::with_capacity(corpus.num_lines());
        for line in corpus.lines() {
            let before = tokens.len();
            tokens.extend(line.iter().map(|&t| map[t as usize]).filter(|&o| o != u32::MAX));
            if tokens.len() > before {
                line_ends.push(tokens.len());
            }
        }
        Self { tokens, line_ends }
    }

    fn line(&self, k: usize) -> &[u32] {
        let start = if k == 0 { 0 } else { self.line_ends[k - 1] };
        &self.tokens[start..self.line_ends[k]]
    }

    /// Splits the lines into `parts` contiguous ranges of similar token mass.
    fn partition(&self, parts: usize) -> Vec<std::ops::Range<usize>> {
        let total = self.tokens.len();
        let mut ranges = Vec::with_capacity(parts);
        let mut start = 0;
        for p in 1..=parts {
            let goal = total * p / parts;
            let end = if p == parts {
                self.line_ends.len()
            } else {
                start + self.line_ends[start..].partition_point(|&e| e <= goal)
            };
            ranges.push(start..end);
            start = end;
        }
        ranges
    }
}

struct Schedule {
    initial: f32,
    floor: f32,
    total_work: u64,
}

impl Schedule {
    fn rate(&self, processed: u64) -> f32 {
        let r = self.initial * (1.0 - processed as f32 / (self.total_work + 1) as f32);
        r.max(self.floor)
    }
}

/// Pointer to a matrix shared by hogwild workers.
#[derive(Clone, Copy)]
struct SharedMatrix {
    ptr: *mut f32,
    len: usize,
}

// SAFETY: workers update rows without synchronization. Lost or torn
// updates between threads are tolerated by the algorithm; the matrix
// outlives every worker through the thread scope.
unsafe impl Send for SharedMatrix {}
unsafe impl Sync for SharedMatrix {}

impl SharedMatrix {
    fn new(v: &mut [f32]) -> Self {
        Self {
            ptr: v.as_mut_ptr(),
            len: v.len(),
        }
    }

    #[allow(clippy::mut_from_ref)]
    unsafe fn slice(&self) -> &mut [f32] {
        std::slice::from_raw_parts_mut(self.ptr, self.len)
    }
}

struct Worker<'a> {
    corpus: &'a EncodedCorpus,
    lines: std::ops::Range<usize>,
    table: &'a UnigramTable,
    config: &'a TrainingConfig,
    vocab_size: usize,
    schedule: &'a Schedule,
    processed: &'a AtomicU64,
    rng: StageRng,
}

impl Worker<'_> {
    fn run(mut self, syn0: &mut [f32], syn1neg: &mut [f32]) -> (u64, Vec<LossPoint>) {
        let cfg = self.config;
        let dim = cfg.dimension;
        let (mut h, mut e) = (vec![0f32; dim], vec![0f32; dim]);
        let mut context = Vec::with_capacity(2 * cfg.window);
        let mut negs = Vec::with_capacity(cfg.negatives);
        let mut trace = Vec::new();
        let (mut updates, mut loss_sum, mut loss_n) = (0u64, 0f64, 0u64);
        let mut since_report = 0u64;
        let mut lr = self.schedule.rate(self.processed.load(Ordering::Relaxed));
        for _ in 0..cfg.epochs {
            for k in self.lines.clone() {
                let line = self.corpus.line(k);
                for pos in 0..line.len() {
                    let b = self.rng.random_range(1..=cfg.window);
                    let lo = pos.saturating_sub(b);
                    let hi = (pos + b + 1).min(line.len());
                    context.clear();
                    context.extend(
                        (lo..hi).filter(|&j| j != pos).map(|j| line[j] as usize),
                    );
                    if context.is_empty() {
                        continue;
                    }
                    let target = line[pos] as usize;
                    draw_negatives(self.table, self.vocab_size, target, cfg.negatives, &mut self.rng, &mut negs);
                    let loss = kernel::sgd_update(
                        syn0, syn1neg, dim, &context, target, &negs, lr, &mut h, &mut e,
                    );
                    loss_sum += loss as f64;
                    loss_n += 1;
                    updates += 1;
                }
                let n = line.len() as u64;
                let done = self.processed.fetch_add(n, Ordering::Relaxed) + n;
                lr = self.schedule.rate(done);
                since_report += n;
                if since_report >= cfg.report_interval && loss_n > 0 {
                    let point = LossPoint {
                        tokens: done,
                        learning_rate: lr,
                        mean_loss: loss_sum / loss_n as f64,
                    };
                    if cfg.progress {
                        eprintln!(
                            "progress tokens={} lr={:.6} loss={:.4}",
                            point.tokens, point.learning_rate, point.mean_loss
                        );
                    }
                    trace.push(point);
                    since_report = 0;
                    loss_sum = 0.0;
                    loss_n = 0;
                }
            }
        }
        if loss_n > 0 {
            trace.push(LossPoint {
                tokens: self.processed.load(Ordering::Relaxed),
                learning_rate: lr,
                mean_loss: loss_sum / loss_n as f64,
            });
        }
        (updates, trace)
    }
}

/// Trains a model on `corpus`. Tokens outside `vocab` are dropped before
/// windows are formed. With one worker the result is a pure function of
/// the inputs; with more, workers update shared weights without locks and
/// runs are only statistically equivalent.
pub fn train(
    corpus: &SentenceCorpus,
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<(EmbeddingModel, TrainingStats), CbowError> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(CbowError::EmptyVocabulary);
    }
    let encoded = EncodedCorpus::new(corpus, vocab);
    let train_words = encoded.tokens.len() as u64;
    if train_words == 0 {
        return Err(CbowError::NoTrainingTokens);
    }
    let mut model = init_model(vocab, config, &mut stage_rng(config.seed, "cbow/init"))?;
    let mut stats = TrainingStats {
        train_words,
        ..Default::default()
    };
    if config.epochs == 0 {
        return Ok((model, stats));
    }
    let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
    let table = UnigramTable::new(&counts, config.unigram_power, config.table_size);
    let schedule = Schedule {
        initial: config.initial_learning_rate,
        floor: config.final_learning_rate_floor,
        total_work: config.epochs as u64 * train_words,
    };
    let processed = AtomicU64::new(0);
    let workers = config.workers.min(encoded.line_ends.len()).max(1);
    let make_worker = |k: usize, lines| Worker {
        corpus: &encoded,
        lines,
        table: &table,
        config,
        vocab_size: vocab.len(),
        schedule: &schedule,
        processed: &processed,
        rng: stage_rng(config.seed, &format!("cbow/train/{k}")),
    };
    let ranges = encoded.partition(workers);
    let results: Vec<(u64, Vec<LossPoint>)> = if workers == 1 {
        let w = make_worker(0, ranges[0].clone());
        vec![w.run(&mut model.syn0, &mut model.syn1neg)]
    } else {
        let s0 = SharedMatrix::new(&mut model.syn0);
        let s1 = SharedMatrix::new(&mut model.syn1neg);
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .into_iter()
                .enumerate()
                .map(|(k, r)| {
                    let w = make_worker(k, r);
                    scope.spawn(move || {
                        // SAFETY: see `SharedMatrix`.
                        let (a, b) = unsafe { (s0.slice(), s1.slice()) };
                        w.run(a, b)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    for (updates, trace) in results {
        stats.updates += updates;
        stats.loss_trace.extend(trace);
    }
    stats.loss_trace.sort_by_key(|p| p.tokens);
    stats.processed_tokens = processed.into_inner();
    if !model.is_finite() {
        return Err(CbowError::Domain("training diverged to non-finite weights".into()));
    }
    Ok((model, stats))
}
