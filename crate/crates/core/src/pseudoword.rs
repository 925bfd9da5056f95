//! Pseudoword injection: index distributions, the replacement procedure,
//! uniform interspersion and the experiment builders layered on top.
//!
//! A base word `cat` is replaced occurrence by occurrence with `CAT_i`,
//! where `i` is drawn from either a truncated geometric distribution
//! (frequency experiment) or a linear taper (noise experiment). Noise is
//! added by interspersing extra copies of a token at uniformly random gaps.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{self, Read, Write};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_pseudoword, SentenceCorpus};
use crate::rng::stage_rng;

#[derive(Debug, Error, PartialEq)]
pub enum PseudowordError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("index {i} outside 1..={n}")]
    IndexOutOfRange { i: usize, n: usize },
    #[error("`{0}` is already a pseudoword")]
    AlreadyPseudoword(String),
    #[error("pseudoword label `{0}` already occurs in the corpus")]
    LabelCollision(String),
    #[error("word `{word}` occurs {count} times, below the floor of {floor}")]
    BelowFloor { word: String, count: u64, floor: u64 },
    #[error("word `{0}` does not occur in the corpus")]
    MissingWord(String),
}

type Result<T> = std::result::Result<T, PseudowordError>;

fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        Err(PseudowordError::IndexOutOfRange { i, n })
    } else {
        Ok(())
    }
}

/// `P(i) = p^(i-1) (1-p) / (1 - p^n)` on `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGeometric {
    p: f64,
    n: usize,
}

impl TruncatedGeometric {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(PseudowordError::InvalidParameter(format!(
                "p = {p} must lie in (0, 1)"
            )));
        }
        if n == 0 {
            return Err(PseudowordError::InvalidParameter("n must be positive".into()));
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pmf(&self, i: usize) -> Result<f64> {
        check_index(i, self.n)?;
        let n = i32::try_from(self.n).unwrap_or(i32::MAX);
        Ok(self.p.powi(i as i32 - 1) * (1.0 - self.p) / (1.0 - self.p.powi(n)))
    }
}

/// `P(i) = 2 (n - i) / (n (n - 1))` on `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearTaper {
    n: usize,
}

impl LinearTaper {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(PseudowordError::InvalidParameter(format!(
                "linear taper needs n >= 2, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pmf(&self, i: usize) -> Result<f64> {
        check_index(i, self.n)?;
        let n = self.n as f64;
        Ok(2.0 * (n - i as f64) / (n * (n - 1.0)))
    }
}

pub fn pmf_truncated_geometric(p: f64, n: usize, i: usize) -> Result<f64> {
    TruncatedGeometric::new(p, n)?.pmf(i)
}

pub fn pmf_linear(n: usize, i: usize) -> Result<f64> {
    LinearTaper::new(n)?.pmf(i)
}

/// Share of the `i`-th noise pseudoword's occurrences that come from the
/// noise distribution: `(i - 1) / (n - 1)`.
pub fn noise_proportion(n: usize, i: usize) -> Result<f64> {
    if n < 2 {
        return Err(PseudowordError::InvalidParameter(format!(
            "noise grid needs n >= 2, got {n}"
        )));
    }
    check_index(i, n)?;
    Ok((i - 1) as f64 / (n - 1) as f64)
}

/// Distribution over pseudoword indices, as recorded in manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    TruncatedGeometric { p: f64, n: usize },
    LinearTaper { n: usize },
}

impl DistributionSpec {
    pub fn geometric(p: f64, n: usize) -> Result<Self> {
        TruncatedGeometric::new(p, n)?;
        Ok(Self::TruncatedGeometric { p, n })
    }

    pub fn linear(n: usize) -> Result<Self> {
        LinearTaper::new(n)?;
        Ok(Self::LinearTaper { n })
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::TruncatedGeometric { n, .. } | Self::LinearTaper { n } => n,
        }
    }

    pub fn pmf(&self, i: usize) -> Result<f64> {
        match *self {
            Self::TruncatedGeometric { p, n } => pmf_truncated_geometric(p, n, i),
            Self::LinearTaper { n } => pmf_linear(n, i),
        }
    }

    pub fn pmf_table(&self) -> Result<Vec<f64>> {
        (1..=self.n()).map(|i| self.pmf(i)).collect()
    }

    pub fn sampler(&self) -> Result<IndexSampler> {
        Ok(IndexSampler::from_pmf(&self.pmf_table()?))
    }
}

/// Inverse-CDF sampler over `1..=n` with a precomputed cumulative table.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSampler {
    cdf: Vec<f64>,
}

impl IndexSampler {
    /// Builds the sampler from non-negative weights (not necessarily
    /// normalized). Indices with zero weight are never drawn.
    pub fn from_pmf(pmf: &[f64]) -> Self {
        assert!(!pmf.is_empty(), "empty pmf");
        assert!(pmf.iter().all(|&w| w >= 0.0 && w.is_finite()), "bad pmf weight");
        let total: f64 = pmf.iter().sum();
        assert!(total > 0.0, "pmf has no mass");
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|&w| {
                acc += w;
                acc / total
            })
            .collect();
        // Pin the tail to exactly 1 from the last index with mass onward.
        let last = pmf.iter().rposition(|&w| w > 0.0).unwrap();
        for c in &mut cdf[last..] {
            *c = 1.0;
        }
        Self { cdf }
    }

    pub fn n(&self) -> usize {
        self.cdf.len()
    }

    /// Draws a 1-based index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) + 1
    }
}

pub fn sample_index<R: Rng + ?Sized>(dist: &DistributionSpec, rng: &mut R) -> Result<usize> {
    Ok(dist.sampler()?.sample(rng))
}

/// `CAT` for `cat`.
pub fn label_stem(word: &str) -> String {
    word.to_uppercase()
}

/// `CAT_3` for stem `CAT` and index 3.
pub fn pseudoword_label(stem: &str, i: usize) -> String {
    format!("{stem}_{i}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Frequency,
    Noise,
    Void,
    Mix,
}

/// What an experiment did to the corpus. Vectors are indexed by
/// pseudoword index minus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub kind: ExperimentKind,
    pub base_word: String,
    #[serde(rename = "labels")]
    pub pseudoword_labels: Vec<String>,
    /// Occurrences of the base word turned into each pseudoword.
    pub replaced_counts: Vec<u64>,
    /// Copies of each pseudoword added at random positions.
    pub interspersed_counts: Vec<u64>,
    /// Noise share per index; empty for experiments without added noise.
    pub noise_proportions: Vec<f64>,
    #[serde(rename = "seed")]
    pub rng_seed: u64,
    /// Stage stream the generator was drawn from.
    #[serde(default)]
    pub stream: String,
    pub distribution: DistributionSpec,
    /// Count of the base word when the experiment started (after
    /// equalization for mixes; the inserted count for VOID).
    pub source_count: u64,
    pub expected_counts: Vec<f64>,
    /// Pseudowords whose expected count is under the training cutoff.
    #[serde(default)]
    pub below_min_count: Vec<bool>,
    /// Replaced occurrences beyond the noise target that were left in place.
    #[serde(default)]
    pub excess_counts: Vec<u64>,
    /// Second word of a mix and its per-index replaced counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_with: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixed_counts: Vec<u64>,
    /// Occurrences deleted while equalizing a mix.
    #[serde(default)]
    pub removed_count: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExperimentManifest {
    fn empty(kind: ExperimentKind, base_word: &str, stem: &str, dist: DistributionSpec) -> Self {
        let n = dist.n();
        Self {
            kind,
            base_word: base_word.to_owned(),
            pseudoword_labels: (1..=n).map(|i| pseudoword_label(stem, i)).collect(),
            replaced_counts: vec![0; n],
            interspersed_counts: vec![0; n],
            noise_proportions: Vec::new(),
            rng_seed: 0,
            stream: String::new(),
            distribution: dist,
            source_count: 0,
            expected_counts: vec![0.0; n],
            below_min_count: vec![false; n],
            excess_counts: vec![0; n],
            mixed_with: None,
            mixed_counts: Vec::new(),
            removed_count: 0,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pseudoword_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudoword_labels.is_empty()
    }

    /// Count of each pseudoword in the modified corpus.
    pub fn final_counts(&self) -> Vec<u64> {
        (0..self.len())
            .map(|k| {
                self.replaced_counts[k]
                    + self.interspersed_counts[k]
                    + self.mixed_counts.get(k).copied().unwrap_or(0)
            })
            .collect()
    }

    pub fn noise_proportion(&self, index: usize) -> Option<f64> {
        self.noise_proportions.get(index.checked_sub(1)?).copied()
    }

    fn flag_cutoff(&mut self, min_count: u64) {
        self.below_min_count = self
            .expected_counts
            .iter()
            .map(|&e| e < min_count as f64)
            .collect();
    }

    /// Human-readable per-pseudoword table.
    pub fn count_table(&self) -> String {
        let mut s = String::new();
        let finals = self.final_counts();
        let _ = writeln!(
            s,
            "{:<24} {:>10} {:>10} {:>10} {:>12} {:>6}",
            "pseudoword", "replaced", "added", "final", "expected", "noise"
        );
        for k in 0..self.len() {
            let noise = self
                .noise_proportions
                .get(k)
                .map(|p| format!("{p:.3}"))
                .unwrap_or_else(|| "-".into());
            let replaced = self.replaced_counts[k] + self.mixed_counts.get(k).copied().unwrap_or(0);
            let _ = writeln!(
                s,
                "{:<24} {:>10} {:>10} {:>10} {:>12.1} {:>6}{}",
                self.pseudoword_labels[k],
                replaced,
                self.interspersed_counts[k],
                finals[k],
                self.expected_counts[k],
                noise,
                if self.below_min_count.get(k) == Some(&true) { "  (below cutoff)" } else { "" }
            );
        }
        s
    }
}

pub fn write_manifests<W: Write>(w: W, manifests: &[ExperimentManifest]) -> io::Result<()> {
    serde_json::to_writer_pretty(w, manifests).map_err(io::Error::other)
}

pub fn read_manifests<R: Read>(r: R) -> io::Result<Vec<ExperimentManifest>> {
    serde_json::from_reader(r).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn check_labels_free(corpus: &SentenceCorpus, labels: &[String]) -> Result<()> {
    let counts = corpus.symbol_counts();
    for l in labels {
        if let Some(id) = corpus.id_of(l) {
            if counts[id as usize] > 0 {
                return Err(PseudowordError::LabelCollision(l.clone()));
            }
        }
    }
    Ok(())
}

/// Replaces every occurrence of `word` by `WORD_i` with `i` drawn
/// independently from `dist`. The total token count is unchanged.
///
/// An absent word leaves the corpus untouched and yields a manifest with a
/// warning. The returned manifest carries no seed; builders fill it in.
pub fn replace_word<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    word: &str,
    dist: &DistributionSpec,
    rng: &mut R,
) -> Result<ExperimentManifest> {
    replace_with_stem(corpus, word, &label_stem(word), dist, rng)
}

fn replace_with_stem<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    word: &str,
    stem: &str,
    dist: &DistributionSpec,
    rng: &mut R,
) -> Result<ExperimentManifest> {
    if is_pseudoword(word) {
        return Err(PseudowordError::AlreadyPseudoword(word.to_owned()));
    }
    let kind = match dist {
        DistributionSpec::TruncatedGeometric { .. } => ExperimentKind::Frequency,
        DistributionSpec::LinearTaper { .. } => ExperimentKind::Noise,
    };
    let mut manifest = ExperimentManifest::empty(kind, word, stem, *dist);
    check_labels_free(corpus, &manifest.pseudoword_labels)?;
    let Some(word_id) = corpus.id_of(word) else {
        manifest.warnings.push(format!("`{word}` is absent; corpus unchanged"));
        return Ok(manifest);
    };
    let sampler = dist.sampler()?;
    let label_ids: Vec<u32> = manifest
        .pseudoword_labels
        .iter()
        .map(|l| corpus.intern(l))
        .collect();
    for tok in corpus.tokens_mut() {
        if *tok == word_id {
            let i = sampler.sample(rng);
            *tok = label_ids[i - 1];
            manifest.replaced_counts[i - 1] += 1;
        }
    }
    let total: u64 = manifest.replaced_counts.iter().sum();
    if total == 0 {
        manifest.warnings.push(format!("`{word}` is absent; corpus unchanged"));
    }
    manifest.source_count = total;
    manifest.expected_counts = dist
        .pmf_table()?
        .into_iter()
        .map(|p| p * total as f64)
        .collect();
    Ok(manifest)
}

/// Replaces the occurrences of `word` so that exactly `counts[i-1]` of them
/// become `WORD_i`; which occurrence gets which index is a uniformly random
/// permutation. `counts` must sum to the number of occurrences.
pub fn replace_word_exact<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    word: &str,
    counts: &[u64],
    rng: &mut R,
) -> Result<Vec<String>> {
    if is_pseudoword(word) {
        return Err(PseudowordError::AlreadyPseudoword(word.to_owned()));
    }
    let stem = label_stem(word);
    let labels: Vec<String> = (1..=counts.len()).map(|i| pseudoword_label(&stem, i)).collect();
    check_labels_free(corpus, &labels)?;
    let occurrences = corpus.count(word);
    if counts.iter().sum::<u64>() != occurrences {
        return Err(PseudowordError::InvalidParameter(format!(
            "allocation sums to {} but `{word}` occurs {occurrences} times",
            counts.iter().sum::<u64>()
        )));
    }
    let Some(word_id) = corpus.id_of(word) else {
        return Ok(labels);
    };
    let mut assigned: Vec<u32> = Vec::with_capacity(occurrences as usize);
    for (l, &c) in labels.iter().zip(counts) {
        let id = corpus.intern(l);
        assigned.extend(std::iter::repeat_n(id, c as usize));
    }
    assigned.shuffle(rng);
    let mut next = assigned.into_iter();
    for tok in corpus.tokens_mut() {
        if *tok == word_id {
            *tok = next.next().expect("allocation covers every occurrence");
        }
    }
    Ok(labels)
}

/// Splits `total` into integer parts proportional to `weights` by the
/// largest-remainder rule (ties go to the lower index).
pub fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut parts: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut left = total - parts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        parts[k] += 1;
        left -= 1;
    }
    parts
}

/// Inserts `extra_count` copies of `token`, each at a gap chosen uniformly
/// among all token gaps of the corpus (a line of `L` tokens has `L + 1`).
pub fn intersperse<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    token: &str,
    extra_count: u64,
    rng: &mut R,
) {
    intersperse_many(corpus, &[(token, extra_count)], rng);
}

/// Intersperses several tokens in one pass. The result has the same
/// distribution as inserting the copies one at a time, each at a uniformly
/// chosen gap of the growing corpus.
pub fn intersperse_many<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    insertions: &[(&str, u64)],
    rng: &mut R,
) {
    let total: u64 = insertions.iter().map(|&(_, c)| c).sum();
    if total == 0 {
        return;
    }
    let mut inserted: Vec<u32> = Vec::with_capacity(total as usize);
    for &(tok, count) in insertions {
        let id = corpus.intern(tok);
        inserted.extend(std::iter::repeat_n(id, count as usize));
    }
    inserted.shuffle(rng);

    let n_lines = corpus.num_lines();
    if n_lines == 0 {
        let len = inserted.len();
        corpus.set_layout(inserted, vec![len]);
        return;
    }
    // Original items are the tokens plus one separator between consecutive
    // lines; a uniform k-subset of slots marks where insertions land.
    let items = corpus.num_tokens() + n_lines - 1;
    let slots = items + inserted.len();
    let mut positions = index::sample(rng, slots, inserted.len()).into_vec();
    positions.sort_unstable();

    let mut tokens = Vec::with_capacity(slots - (n_lines - 1));
    let mut line_ends = Vec::with_capacity(n_lines);
    let mut pos = positions.into_iter().peekable();
    let mut labels = inserted.into_iter();
    let mut slot = 0usize;
    let mut drain = |slot: &mut usize, tokens: &mut Vec<u32>| {
        while pos.peek() == Some(slot) {
            pos.next();
            tokens.push(labels.next().expect("one label per position"));
            *slot += 1;
        }
    };
    for (k, line) in corpus.lines().enumerate() {
        if k > 0 {
            drain(&mut slot, &mut tokens);
            line_ends.push(tokens.len());
            slot += 1;
        }
        for &t in line {
            drain(&mut slot, &mut tokens);
            tokens.push(t);
            slot += 1;
        }
    }
    drain(&mut slot, &mut tokens);
    line_ends.push(tokens.len());
    debug_assert_eq!(slot, slots);
    corpus.set_layout(tokens, line_ends);
}

/// Number of copies to add to a corpus of `n_tokens` so that they make up
/// `relative_frequency` of the result: `round(f N / (1 - f))`.
pub fn void_insert_count(n_tokens: u64, relative_frequency: f64) -> u64 {
    let f = relative_frequency;
    (f * n_tokens as f64 / (1.0 - f)).round_ties_even() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoidSpec {
    pub label: String,
    pub relative_frequency: f64,
}

impl Default for VoidSpec {
    fn default() -> Self {
        Self {
            label: "VOID".into(),
            relative_frequency: 0.005,
        }
    }
}

impl VoidSpec {
    pub fn new(relative_frequency: f64) -> Result<Self> {
        let spec = Self {
            relative_frequency,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let f = self.relative_frequency;
        if !(f > 0.0 && f < 1.0) {
            return Err(PseudowordError::InvalidParameter(format!(
                "relative frequency {f} must lie in (0, 1)"
            )));
        }
        if self.label.is_empty() || self.label.chars().any(char::is_whitespace) {
            return Err(PseudowordError::InvalidParameter(format!(
                "bad VOID label `{}`",
                self.label
            )));
        }
        Ok(())
    }
}

/// Intersperses the meaningless token so it makes up the requested share of
/// the final corpus. Returns the number of copies inserted.
pub fn insert_void<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    spec: &VoidSpec,
    rng: &mut R,
) -> Result<u64> {
    spec.validate()?;
    if corpus.count(&spec.label) > 0 {
        return Err(PseudowordError::LabelCollision(spec.label.clone()));
    }
    let k = void_insert_count(corpus.num_tokens() as u64, spec.relative_frequency);
    intersperse(corpus, &spec.label, k, rng);
    Ok(k)
}

fn check_floor(corpus: &SentenceCorpus, words: &[String], floor: u64) -> Result<()> {
    let mut seen = HashSet::new();
    for w in words {
        if is_pseudoword(w) {
            return Err(PseudowordError::AlreadyPseudoword(w.clone()));
        }
        if !seen.insert(w) {
            return Err(PseudowordError::InvalidParameter(format!("`{w}` listed twice")));
        }
        let count = corpus.count(w);
        if count < floor {
            return Err(PseudowordError::BelowFloor {
                word: w.clone(),
                count,
                floor,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyExperiment {
    pub words: Vec<String>,
    pub p: f64,
    pub n: usize,
    /// Training cutoff used to flag pseudowords expected to vanish.
    pub min_count: u64,
    /// Minimum count a word needs to be eligible.
    pub floor: u64,
}

impl Default for FrequencyExperiment {
    fn default() -> Self {
        Self {
            words: Vec::new(),
            p: 0.5,
            n: 20,
            min_count: 128,
            floor: 10_000,
        }
    }
}

/// Replaces each word by a truncated-geometric family of pseudowords.
/// Each word draws from its own stream `frequency/<word>`.
pub fn build_frequency_experiment(
    corpus: &mut SentenceCorpus,
    exp: &FrequencyExperiment,
    seed: u64,
) -> Result<Vec<ExperimentManifest>> {
    let dist = DistributionSpec::geometric(exp.p, exp.n)?;
    check_floor(corpus, &exp.words, exp.floor)?;
    exp.words
        .iter()
        .map(|w| {
            let stream = format!("frequency/{w}");
            let mut rng = stage_rng(seed, &stream);
            let mut m = replace_word(corpus, w, &dist, &mut rng)?;
            m.rng_seed = seed;
            m.stream = stream;
            m.flag_cutoff(exp.min_count);
            Ok(m)
        })
        .collect()
}

/// Intersperses VOID at the requested relative frequency, then splits it
/// into a truncated-geometric family like any other frequency word.
pub fn build_void_experiment(
    corpus: &mut SentenceCorpus,
    spec: &VoidSpec,
    p: f64,
    n: usize,
    min_count: u64,
    seed: u64,
) -> Result<ExperimentManifest> {
    let dist = DistributionSpec::geometric(p, n)?;
    let stem = spec.label.to_uppercase();
    let labels: Vec<String> = (1..=n).map(|i| pseudoword_label(&stem, i)).collect();
    check_labels_free(corpus, &labels)?;
    let inserted = insert_void(corpus, spec, &mut stage_rng(seed, "void/intersperse"))?;
    let stream = "void/replace".to_string();
    let mut m = replace_with_stem(corpus, &spec.label, &stem, &dist, &mut stage_rng(seed, &stream))?;
    debug_assert_eq!(m.source_count, inserted);
    m.kind = ExperimentKind::Void;
    m.rng_seed = seed;
    m.stream = stream;
    m.flag_cutoff(min_count);
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseExperiment {
    pub words: Vec<String>,
    pub n: usize,
    pub min_count: u64,
    pub floor: u64,
}

impl Default for NoiseExperiment {
    fn default() -> Self {
        Self {
            words: Vec::new(),
            n: 7,
            min_count: 128,
            floor: 10_000,
        }
    }
}

/// Noise target for a family: `round(2F/n)`, ties to even.
pub fn noise_target(source_count: u64, n: usize) -> u64 {
    (2.0 * source_count as f64 / n as f64).round_ties_even() as u64
}

/// Replaces each word through the linear taper, then tops every
/// pseudoword up to `round(2F/n)` occurrences with interspersed copies.
///
/// Replacement indices are assigned by exact allocation rather than
/// independent draws: index 1 receives exactly `round(2F/n)` occurrences
/// (it is noise-free and its expected share is already `2F/n`), and the
/// rest are apportioned over indices `2..=n` by the taper weights. The
/// assignment of indices to occurrences is a random permutation.
pub fn build_noise_experiment(
    corpus: &mut SentenceCorpus,
    exp: &NoiseExperiment,
    seed: u64,
) -> Result<Vec<ExperimentManifest>> {
    let dist = DistributionSpec::linear(exp.n)?;
    let pmf = dist.pmf_table()?;
    check_floor(corpus, &exp.words, exp.floor.max(1))?;
    let mut manifests = Vec::with_capacity(exp.words.len());
    for w in &exp.words {
        let stream = format!("noise/{w}");
        let mut rng = stage_rng(seed, &stream);
        let source = corpus.count(w);
        let target = noise_target(source, exp.n);
        let mut counts = vec![target.min(source)];
        counts.extend(apportion(source - counts[0], &pmf[1..]));
        replace_word_exact(corpus, w, &counts, &mut rng)?;

        let mut m = ExperimentManifest::empty(ExperimentKind::Noise, w, &label_stem(w), dist);
        m.source_count = source;
        m.replaced_counts = counts;
        for k in 0..m.len() {
            let replaced = m.replaced_counts[k];
            m.interspersed_counts[k] = target.saturating_sub(replaced);
            m.excess_counts[k] = replaced.saturating_sub(target);
            if m.excess_counts[k] > 0 {
                m.warnings.push(format!(
                    "{} replaced {} times, {} above the target {}",
                    m.pseudoword_labels[k], replaced, m.excess_counts[k], target
                ));
            }
        }
        let plan: Vec<(&str, u64)> = m
            .pseudoword_labels
            .iter()
            .zip(&m.interspersed_counts)
            .map(|(l, &c)| (l.as_str(), c))
            .collect();
        intersperse_many(corpus, &plan, &mut rng);
        m.noise_proportions = (1..=exp.n).map(|i| noise_proportion(exp.n, i)).collect::<Result<_>>()?;
        m.expected_counts = vec![target as f64; exp.n];
        m.rng_seed = seed;
        m.stream = stream;
        m.flag_cutoff(exp.min_count);
        manifests.push(m);
    }
    Ok(manifests)
}

/// Deletes `remove` uniformly chosen occurrences of `id`.
fn downsample<R: Rng + ?Sized>(corpus: &mut SentenceCorpus, id: u32, remove: usize, rng: &mut R) {
    let positions: Vec<usize> = corpus
        .tokens()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t == id)
        .map(|(k, _)| k)
        .collect();
    let mut doomed = vec![false; corpus.num_tokens()];
    for k in index::sample(rng, positions.len(), remove) {
        doomed[positions[k]] = true;
    }
    let mut tokens = Vec::with_capacity(corpus.num_tokens() - remove);
    let mut line_ends = Vec::with_capacity(corpus.num_lines());
    let mut start = 0;
    for &end in corpus.line_ends() {
        tokens.extend((start..end).filter(|&k| !doomed[k]).map(|k| corpus.tokens()[k]));
        line_ends.push(tokens.len());
        start = end;
    }
    corpus.set_layout(tokens, line_ends);
}

/// Mixes the contexts of two words into a family `A-B-MIX_i`.
///
/// The more frequent word is first down-sampled to the rarer count. Then
/// `word_a` is replaced through the linear taper and `word_b` through the
/// reversed taper, so pseudoword `i` draws a share `(i-1)/(n-1)` of its
/// occurrences from `word_b` while all indices share the expected count
/// `2F/n`.
pub fn mix_words<R: Rng + ?Sized>(
    corpus: &mut SentenceCorpus,
    word_a: &str,
    word_b: &str,
    n: usize,
    rng: &mut R,
) -> Result<ExperimentManifest> {
    let taper = LinearTaper::new(n)?;
    for w in [word_a, word_b] {
        if is_pseudoword(w) {
            return Err(PseudowordError::AlreadyPseudoword(w.to_owned()));
        }
    }
    if word_a == word_b {
        return Err(PseudowordError::InvalidParameter("cannot mix a word with itself".into()));
    }
    let counts = corpus.symbol_counts();
    let present = |w: &str| corpus.id_of(w).filter(|&id| counts[id as usize] > 0);
    let id_a = present(word_a).ok_or_else(|| PseudowordError::MissingWord(word_a.into()))?;
    let id_b = present(word_b).ok_or_else(|| PseudowordError::MissingWord(word_b.into()))?;
    let (fa, fb) = (counts[id_a as usize], counts[id_b as usize]);

    let stem = format!("{}-{}-MIX", label_stem(word_a), label_stem(word_b));
    let dist = DistributionSpec::LinearTaper { n };
    let mut m = ExperimentManifest::empty(ExperimentKind::Mix, word_a, &stem, dist);
    check_labels_free(corpus, &m.pseudoword_labels)?;

    let f = fa.min(fb);
    let removed = fa.max(fb) - f;
    if removed > 0 {
        let id = if fa > fb { id_a } else { id_b };
        downsample(corpus, id, removed as usize, rng);
    }

    let pmf: Vec<f64> = (1..=n).map(|i| taper.pmf(i)).collect::<Result<_>>()?;
    let reversed: Vec<f64> = pmf.iter().rev().copied().collect();
    let (sample_a, sample_b) = (IndexSampler::from_pmf(&pmf), IndexSampler::from_pmf(&reversed));
    let label_ids: Vec<u32> = m.pseudoword_labels.iter().map(|l| corpus.intern(l)).collect();
    let mut from_b = vec![0u64; n];
    for tok in corpus.tokens_mut() {
        if *tok == id_a {
            let i = sample_a.sample(rng);
            *tok = label_ids[i - 1];
            m.replaced_counts[i - 1] += 1;
        } else if *tok == id_b {
            let i = sample_b.sample(rng);
            *tok = label_ids[i - 1];
            from_b[i - 1] += 1;
        }
    }
    m.mixed_with = Some(word_b.to_owned());
    m.mixed_counts = from_b;
    m.removed_count = removed;
    m.source_count = f;
    m.noise_proportions = (1..=n).map(|i| noise_proportion(n, i)).collect::<Result<_>>()?;
    m.expected_counts = vec![2.0 * f as f64 / n as f64; n];
    Ok(m)
}
