//! Corpus ingestion: text normalization, the interned sentence store,
//! vocabulary construction and frequency-band statistics.
//!
//! A normalized corpus holds one sentence per line with tokens separated by
//! single spaces. Ordinary tokens are lower-case alphabetic strings;
//! pseudoword tokens such as `CAT_3` or `CAT-DOG-MIX_2` pass through
//! normalization untouched.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: u64 },
    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Returns true for tokens of the form `STEM_<digits>` where the stem is
/// upper-case letters, optionally joined by single hyphens.
pub fn is_pseudoword(token: &str) -> bool {
    let Some((stem, index)) = token.rsplit_once('_') else {
        return false;
    };
    if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    if stem.is_empty() {
        return false;
    }
    stem.split('-').all(|part| {
        !part.is_empty() && part.chars().all(|c| c.is_alphabetic() && c.is_uppercase())
    })
}

/// Normalizes a single line into space-separated tokens. Returns an empty
/// string when nothing survives.
pub fn normalize_line(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let push = |tok: &str, out: &mut String| {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    };
    for chunk in line.split_whitespace() {
        if is_pseudoword(chunk) {
            push(chunk, &mut out);
            continue;
        }
        let lowered = chunk.to_lowercase();
        for tok in lowered.split(|c: char| !c.is_alphabetic()) {
            if !tok.is_empty() {
                push(tok, &mut out);
            }
        }
    }
    out
}

/// Line counts produced by [`normalize`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeStats {
    pub lines_in: u64,
    pub lines_out: u64,
    pub tokens_out: u64,
}

/// Streams raw UTF-8 text into normalized form, dropping empty lines.
pub fn normalize<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
) -> Result<NormalizeStats, CorpusError> {
    let mut stats = NormalizeStats::default();
    for_each_line(&mut reader, |line| {
        stats.lines_in += 1;
        let norm = normalize_line(line);
        if !norm.is_empty() {
            stats.lines_out += 1;
            stats.tokens_out += norm.split(' ').count() as u64;
            writer.write_all(norm.as_bytes())?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    })?;
    writer.flush()?;
    Ok(stats)
}

/// Calls `f` with every line of `reader` (without the line terminator),
/// reporting the absolute byte offset of the first invalid UTF-8 sequence.
fn for_each_line<R, F>(reader: &mut R, mut f: F) -> Result<(), CorpusError>
where
    R: BufRead,
    F: FnMut(&str) -> Result<(), CorpusError>,
{
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(s) => s,
            Err(e) => {
                return Err(CorpusError::Encoding {
                    offset: offset + e.valid_up_to() as u64,
                })
            }
        };
        f(line.trim_end_matches(['\n', '\r']))?;
        offset += n as u64;
    }
}

/// An in-memory normalized corpus with interned tokens.
///
/// Lines are stored back to back in a single token buffer; `line_ends`
/// holds the exclusive end offset of every line. Empty lines are never
/// stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentenceCorpus {
    symbols: Vec<String>,
    lookup: HashMap<String, u32>,
    tokens: Vec<u32>,
    line_ends: Vec<usize>,
}

impl SentenceCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads already-normalized text: tokens are split on whitespace and
    /// kept verbatim.
    pub fn from_reader<R: BufRead>(mut reader: R) -> Result<Self, CorpusError> {
        let mut corpus = Self::new();
        for_each_line(&mut reader, |line| {
            corpus.push_line(line.split_whitespace());
            Ok(())
        })?;
        Ok(corpus)
    }

    /// Reads raw text, normalizing each line on the way in.
    pub fn from_raw_reader<R: BufRead>(mut reader: R) -> Result<Self, CorpusError> {
        let mut corpus = Self::new();
        for_each_line(&mut reader, |line| {
            corpus.push_line(normalize_line(line).split_whitespace());
            Ok(())
        })?;
        Ok(corpus)
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_reader(text.as_bytes()).expect("in-memory str is valid UTF-8")
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for line in self.lines() {
            for (k, &id) in line.iter().enumerate() {
                if k > 0 {
                    w.write_all(b" ")?;
                }
                w.write_all(self.symbols[id as usize].as_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("symbols are UTF-8")
    }

    /// Appends one sentence. Empty token sequences are ignored.
    pub fn push_line<'a>(&mut self, tokens: impl IntoIterator<Item = &'a str>) {
        let start = self.tokens.len();
        for tok in tokens {
            let id = self.intern(tok);
            self.tokens.push(id);
        }
        if self.tokens.len() > start {
            self.line_ends.push(self.tokens.len());
        }
    }

    /// Returns the id for `word`, adding it to the symbol table if new.
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.lookup.get(word) {
            return id;
        }
        let id = u32::try_from(self.symbols.len()).expect("symbol table overflow");
        self.symbols.push(word.to_owned());
        self.lookup.insert(word.to_owned(), id);
        id
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.lookup.get(word).copied()
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    /// All interned symbols, including ones that no longer occur.
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_lines(&self) -> usize {
        self.line_ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn line_ends(&self) -> &[usize] {
        &self.line_ends
    }

    pub fn lines(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.line_ends.len()).map(move |k| {
            let start = if k == 0 { 0 } else { self.line_ends[k - 1] };
            &self.tokens[start..self.line_ends[k]]
        })
    }

    /// Occurrence count of every interned symbol, indexed by id.
    pub fn symbol_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.symbols.len()];
        for &t in &self.tokens {
            counts[t as usize] += 1;
        }
        counts
    }

    pub fn count(&self, word: &str) -> u64 {
        match self.id_of(word) {
            Some(id) => self.tokens.iter().filter(|&&t| t == id).count() as u64,
            None => 0,
        }
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [u32] {
        &mut self.tokens
    }

    /// Replaces the token buffer and line layout. Empty lines are removed.
    pub(crate) fn set_layout(&mut self, tokens: Vec<u32>, line_ends: Vec<usize>) {
        debug_assert_eq!(line_ends.last().copied().unwrap_or(0), tokens.len());
        let mut ends = Vec::with_capacity(line_ends.len());
        let mut prev = 0;
        for e in line_ends {
            if e > prev {
                ends.push(e);
            }
            prev = e;
        }
        self.tokens = tokens;
        self.line_ends = ends;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

/// Words retained under a minimum-count cutoff, ordered by descending
/// count with lexicographic tie-breaking. Ordinals are dense.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary `(word, count)` pairs, keeping the
    /// ones with `count >= min_count`. Duplicate words are summed.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (w, c) in counts {
            *merged.entry(w.into()).or_default() += c;
        }
        let mut entries: Vec<VocabEntry> = merged
            .into_iter()
            .filter(|&(_, c)| c >= min_count && c > 0)
            .map(|(word, count)| VocabEntry { word, count })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        Self::from_sorted(entries)
    }

    fn from_sorted(entries: Vec<VocabEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        Self { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn ordinal(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, ordinal: usize) -> &str {
        &self.entries[ordinal].word
    }

    pub fn count(&self, ordinal: usize) -> u64 {
        self.entries[ordinal].count
    }

    pub fn count_of(&self, word: &str) -> Option<u64> {
        self.ordinal(word).map(|i| self.entries[i].count)
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Writes `word<TAB>count` lines in ordinal order.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{}", e.word, e.count)?;
        }
        Ok(())
    }

    pub fn write_path(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_tsv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads a vocabulary file. Ordinals follow file order, which must
    /// already be sorted by descending count.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| CorpusError::Format {
                what: "vocabulary",
                line: k + 1,
                message,
            };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected word<TAB>count".into()))?;
            let count: u64 = count.trim().parse().map_err(|e| bad(format!("{e}")))?;
            if count == 0 {
                return Err(bad("zero count".into()));
            }
            if let Some(prev) = entries.last().map(|e: &VocabEntry| e.count) {
                if count > prev {
                    return Err(bad("counts are not in descending order".into()));
                }
            }
            entries.push(VocabEntry {
                word: word.to_owned(),
                count,
            });
        }
        Ok(Self::from_sorted(entries))
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::read_tsv(BufReader::new(File::open(path)?))
    }
}

/// Counts every token of `corpus` and keeps the words occurring at least
/// `min_count` times.
pub fn build_vocabulary(corpus: &SentenceCorpus, min_count: u64) -> Vocabulary {
    let counts = corpus.symbol_counts();
    Vocabulary::from_counts(
        corpus
            .symbols()
            .iter()
            .zip(counts)
            .map(|(w, c)| (w.as_str(), c)),
        min_count.max(1),
    )
}

/// Maximum number of example words listed per band.
pub const BAND_EXAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandRow {
    /// Inclusive lower bound, `2^k`.
    pub low: u64,
    /// Exclusive upper bound, `2^(k+1)`.
    pub high: u64,
    pub word_count: usize,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyBandTable {
    /// Non-empty bands in ascending order.
    pub rows: Vec<BandRow>,
}

impl FrequencyBandTable {
    pub fn total_words(&self) -> usize {
        self.rows.iter().map(|r| r.word_count).sum()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "band_low,band_high,word_count,examples")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.low,
                r.high,
                r.word_count,
                r.examples.join(" ")
            )?;
        }
        Ok(())
    }
}

/// Band index of a positive count: `floor(log2(count))`.
pub fn band_of(count: u64) -> u32 {
    debug_assert!(count > 0);
    63 - count.leading_zeros()
}

/// Histograms the vocabulary into power-of-two frequency bands. Examples
/// are the first words of each band in ordinal order.
pub fn frequency_bands(vocab: &Vocabulary) -> FrequencyBandTable {
    let mut bands: Vec<(usize, Vec<String>)> = vec![(0, Vec::new()); 64];
    for e in vocab.entries() {
        let k = band_of(e.count) as usize;
        let (n, ex) = &mut bands[k];
        *n += 1;
        if ex.len() < BAND_EXAMPLES {
            ex.push(e.word.clone());
        }
    }
    let rows = bands
        .into_iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(k, (word_count, examples))| BandRow {
            low: 1u64 << k,
            high: 1u64.checked_shl(k as u32 + 1).unwrap_or(u64::MAX),
            word_count,
            examples,
        })
        .collect();
    FrequencyBandTable { rows }
}
