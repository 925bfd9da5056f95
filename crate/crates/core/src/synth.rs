//! Synthetic raw-text generator for desk-scale runs.
//!
//! Each line is a sentence about one topic. Tokens are function words,
//! general words or words of the sentence's topic, each class Zipfian.
//! Words of one topic therefore share a context distribution that differs
//! from every other topic's, which is the structure embedding experiments
//! need. Output carries capitals, commas, digits and hyphens so that the
//! normalizer has work to do.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pseudoword::IndexSampler;
use crate::rng::stage_rng;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Letters-only name of word `id`; distinct ids give distinct names.
pub fn synth_word(id: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    // Offsetting by `base` guarantees at least two syllables.
    let mut k = id + base;
    let mut syllables = Vec::new();
    while k > 0 {
        let s = k % base;
        syllables.push([CONSONANTS[s / VOWELS.len()], VOWELS[s % VOWELS.len()]]);
        k /= base;
    }
    syllables.iter().rev().flatten().map(|&b| b as char).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Generation stops at the first line boundary past this many bytes.
    pub target_bytes: u64,
    pub topics: usize,
    /// Zipf exponent of topic popularity; 0 makes topics equally likely.
    pub topic_exponent: f64,
    pub topic_words: usize,
    pub function_words: usize,
    pub general_words: usize,
    pub zipf_exponent: f64,
    pub function_share: f64,
    pub general_share: f64,
    /// Chance that a topic token comes from a freshly drawn topic
    /// instead of the sentence's own.
    pub topic_drift: f64,
    pub min_sentence: usize,
    pub max_sentence: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            target_bytes: 10 << 20,
            topics: 200,
            topic_exponent: 1.0,
            topic_words: 300,
            function_words: 100,
            general_words: 5000,
            zipf_exponent: 1.0,
            function_share: 0.5,
            general_share: 0.3,
            topic_drift: 0.0,
            min_sentence: 6,
            max_sentence: 24,
        }
    }
}

impl SynthConfig {
    pub fn function_word(&self, rank: usize) -> String {
        synth_word(rank)
    }

    pub fn general_word(&self, rank: usize) -> String {
        synth_word(self.function_words + rank)
    }

    /// Word of `topic` at 0-based frequency `rank` within the topic.
    pub fn topic_word(&self, topic: usize, rank: usize) -> String {
        synth_word(self.function_words + self.general_words + topic * self.topic_words + rank)
    }

    fn validate(&self) -> io::Result<()> {
        let ok = self.topics > 0
            && self.topic_words > 0
            && self.function_words > 0
            && self.general_words > 0
            && self.zipf_exponent.is_finite()
            && self.topic_exponent.is_finite()
            && self.function_share >= 0.0
            && self.general_share >= 0.0
            && self.function_share + self.general_share < 1.0
            && (0.0..=1.0).contains(&self.topic_drift)
            && self.min_sentence >= 1
            && self.min_sentence <= self.max_sentence;
        if ok {
            Ok(())
        } else {
            Err(io::Error::new(io::ErrorKind::InvalidInput, "invalid synthetic corpus configuration"))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthStats {
    pub lines: u64,
    pub words: u64,
    pub bytes: u64,
}

fn zipf(n: usize, s: f64) -> IndexSampler {
    let w: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-s)).collect();
    IndexSampler::from_pmf(&w)
}

/// Writes raw text until `target_bytes` is reached. Deterministic in the
/// configuration.
pub fn generate<W: Write>(cfg: &SynthConfig, w: &mut W) -> io::Result<SynthStats> {
    cfg.validate()?;
    let mut rng = stage_rng(cfg.seed, "synth");
    let function = zipf(cfg.function_words, cfg.zipf_exponent);
    let general = zipf(cfg.general_words, cfg.zipf_exponent);
    let topic = zipf(cfg.topic_words, cfg.zipf_exponent);
    let popularity = zipf(cfg.topics, cfg.topic_exponent);
    let names: Vec<String> = (0..cfg.function_words + cfg.general_words + cfg.topics * cfg.topic_words)
        .map(synth_word)
        .collect();
    let mut stats = SynthStats::default();
    let mut line = String::new();
    while stats.bytes < cfg.target_bytes {
        line.clear();
        let t = popularity.sample(&mut rng) - 1;
        let len = rng.random_range(cfg.min_sentence..=cfg.max_sentence);
        for k in 0..len {
            let u: f64 = rng.random();
            let id = if u < cfg.function_share {
                function.sample(&mut rng) - 1
            } else if u < cfg.function_share + cfg.general_share {
                cfg.function_words + general.sample(&mut rng) - 1
            } else {
                let tt = if cfg.topic_drift > 0.0 && rng.random::<f64>() < cfg.topic_drift {
                    popularity.sample(&mut rng) - 1
                } else {
                    t
                };
                cfg.function_words + cfg.general_words + tt * cfg.topic_words + topic.sample(&mut rng) - 1
            };
            if k > 0 {
                let sep = rng.random::<f64>();
                line.push_str(if sep < 0.01 { "-" } else if sep < 0.06 { ", " } else { " " });
            }
            let word = &names[id];
            if k == 0 {
                let mut chars = word.chars();
                line.extend(chars.next().map(|c| c.to_ascii_uppercase()));
                line.push_str(chars.as_str());
            } else {
                line.push_str(word);
            }
            if rng.random::<f64>() < 0.01 {
                line.push_str(&format!(" {}", rng.random_range(1..2100)));
            }
            stats.words += 1;
        }
        line.push_str(".\n");
        if rng.random::<f64>() < 0.02 {
            line.push('\n');
        }
        w.write_all(line.as_bytes())?;
        stats.bytes += line.len() as u64;
        stats.lines += 1;
    }
    Ok(stats)
}
