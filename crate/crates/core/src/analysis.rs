//! Vector lengths, cosine matrices and linear fits over pseudoword
//! families, plus the CSV/JSON report writer.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbow::{EmbeddingModel, Layer};
use crate::pseudoword::ExperimentManifest;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown word `{0}`")]
    UnknownWord(String),
    #[error("labels missing from the vocabulary: {}", .0.join(", "))]
    MissingLabels(Vec<String>),
    #[error("{0}")]
    Domain(String),
    #[error("manifest does not match model: {0}")]
    Consistency(String),
    #[error("degenerate fit: all x values are equal")]
    DegenerateFit,
    #[error("malformed report at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Euclidean norm, accumulated in `f64`.
pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

pub fn vector_length(model: &EmbeddingModel, layer: Layer, word: &str) -> Result<f64> {
    model
        .vector(layer, word)
        .map(norm)
        .ok_or_else(|| AnalysisError::UnknownWord(word.to_owned()))
}

/// `u·v / (|u||v|)`, clamped to `[-1, 1]`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(AnalysisError::Domain(format!("length mismatch {} vs {}", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(AnalysisError::Domain("cosine of a zero vector".into()));
    }
    let dot: f64 = u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosineMatrix {
    pub labels: Vec<String>,
    /// Row-major, `labels.len()` squared.
    pub values: Vec<f64>,
}

impl CosineMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.len() + b]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Values rounded to the precision the CSV writer keeps.
    pub fn rounded(&self) -> Self {
        Self {
            labels: self.labels.clone(),
            values: self.values.iter().map(|&v| round_sig9(v)).collect(),
        }
    }

    /// Header row `label,L1,..,Ln`, then one row per label.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "label")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (a, l) in self.labels.iter().enumerate() {
            write!(w, "{l}")?;
            for b in 0..self.len() {
                write!(w, ",{}", fmt_g9(self.get(a, b)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let bad = |line, m: &str| AnalysisError::Format {
            line,
            message: m.to_owned(),
        };
        let header = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let mut fields = header.split(',');
        if fields.next() != Some("label") {
            return Err(bad(1, "header must start with `label`"));
        }
        let labels: Vec<String> = fields.map(str::to_owned).collect();
        let mut values = Vec::with_capacity(labels.len() * labels.len());
        for (a, line) in lines.enumerate() {
            let line = line?;
            let no = a + 2;
            let mut fields = line.split(',');
            if labels.get(a).map(String::as_str) != fields.next() {
                return Err(bad(no, "row label does not match header"));
            }
            let before = values.len();
            for f in fields {
                values.push(f.parse::<f64>().map_err(|_| bad(no, "value is not a number"))?);
            }
            if values.len() - before != labels.len() {
                return Err(bad(no, "row width does not match header"));
            }
        }
        if values.len() != labels.len() * labels.len() {
            return Err(bad(labels.len() + 1, "missing rows"));
        }
        Ok(Self { labels, values })
    }
}

/// Pairwise cosines of the given labels' rows in `layer`, in label order.
pub fn cosine_matrix(model: &EmbeddingModel, layer: Layer, labels: &[String]) -> Result<CosineMatrix> {
    let missing: Vec<String> = labels
        .iter()
        .filter(|l| model.vocab().ordinal(l).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisError::MissingLabels(missing));
    }
    let rows: Vec<&[f32]> = labels.iter().map(|l| model.vector(layer, l).unwrap()).collect();
    let n = rows.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let c = cosine(rows[a], rows[b])
                .map_err(|e| AnalysisError::Domain(format!("{} / {}: {e}", labels[a], labels[b])))?;
            values[a * n + b] = c;
            values[b * n + a] = c;
        }
    }
    Ok(CosineMatrix {
        labels: labels.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub base: String,
    pub pseudoword: String,
    pub index: usize,
    pub frequency: u64,
    pub noise_proportion: Option<f64>,
    pub syn0_norm: f64,
    pub syn1neg_norm: f64,
}

/// Pseudoword left out of a series because it fell below the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub pseudoword: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LengthSeries {
    pub rows: Vec<LengthRow>,
    pub excluded: Vec<Excluded>,
}

impl LengthSeries {
    /// Rows of one base word, in index order.
    pub fn family<'a>(&'a self, base: &'a str) -> impl Iterator<Item = &'a LengthRow> + 'a {
        self.rows.iter().filter(move |r| r.base == base)
    }

    /// Base words in first-appearance order.
    pub fn bases(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.base.as_str()) {
                out.push(&r.base);
            }
        }
        out
    }
}

/// One row per pseudoword whose final count reaches the model's cutoff.
/// Every retained pseudoword must be in the vocabulary with exactly its
/// manifest count, and no excluded one may be.
pub fn length_series(model: &EmbeddingModel, manifests: &[ExperimentManifest]) -> Result<LengthSeries> {
    let min_count = model.config().min_count;
    let vocab = model.vocab();
    let mut series = LengthSeries::default();
    for m in manifests {
        for (k, (label, freq)) in m.pseudoword_labels.iter().zip(m.final_counts()).enumerate() {
            let in_vocab = vocab.count_of(label);
            if freq < min_count {
                if let Some(c) = in_vocab {
                    return Err(AnalysisError::Consistency(format!(
                        "{label} has count {c} in the model but {freq} in the manifest"
                    )));
                }
                series.excluded.push(Excluded {
                    pseudoword: label.clone(),
                    frequency: freq,
                });
                continue;
            }
            match in_vocab {
                Some(c) if c == freq => {}
                Some(c) => {
                    return Err(AnalysisError::Consistency(format!(
                        "{label} has count {c} in the model but {freq} in the manifest"
                    )))
                }
                None => {
                    return Err(AnalysisError::Consistency(format!(
                        "{label} (count {freq}) is missing from the model"
                    )))
                }
            }
            series.rows.push(LengthRow {
                base: m.base_word.clone(),
                pseudoword: label.clone(),
                index: k + 1,
                frequency: freq,
                noise_proportion: m.noise_proportion(k + 1),
                syn0_norm: vector_length(model, Layer::Syn0, label)?,
                syn1neg_norm: vector_length(model, Layer::Syn1Neg, label)?,
            });
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Frequency,
    Log2Frequency,
    NoiseProportion,
}

impl Regressor {
    fn of(self, row: &LengthRow) -> Option<f64> {
        match self {
            Regressor::Frequency => Some(row.frequency as f64),
            Regressor::Log2Frequency => Some((row.frequency as f64).log2()),
            Regressor::NoiseProportion => row.noise_proportion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when all y are equal; `r_squared` is then 1 by convention.
    pub constant_y: bool,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Domain("xs and ys differ in length".into()));
    }
    if xs.is_empty() || xs.iter().all(|&x| x == xs[0]) {
        return Err(AnalysisError::DegenerateFit);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let constant_y = ss_tot == 0.0;
    let r_squared = if constant_y { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        constant_y,
    })
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[k]] {
                j += 1;
            }
            let avg = (k + j) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=j] {
                r[i] = avg;
            }
            k = j + 1;
        }
        r
    }
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub base: String,
    pub layer: Layer,
    pub x_variable: Regressor,
    pub points: usize,
    #[serde(flatten)]
    pub fit: LinearFit,
}

/// Norm-vs-regressor fits for every family, layer and applicable
/// regressor. Families with fewer than two distinct x values are skipped.
pub fn family_fits(series: &LengthSeries) -> Vec<FamilyFit> {
    let mut out = Vec::new();
    for base in series.bases() {
        let rows: Vec<&LengthRow> = series.family(base).collect();
        for layer in Layer::ALL {
            for reg in [Regressor::Frequency, Regressor::Log2Frequency, Regressor::NoiseProportion] {
                let pts: Option<Vec<(f64, f64)>> = rows
                    .iter()
                    .map(|r| {
                        let y = match layer {
                            Layer::Syn0 => r.syn0_norm,
                            Layer::Syn1Neg => r.syn1neg_norm,
                        };
                        reg.of(r).map(|x| (x, y))
                    })
                    .collect();
                let Some(pts) = pts else { continue };
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                if let Ok(fit) = fit_linear(&xs, &ys) {
                    out.push(FamilyFit {
                        base: base.to_owned(),
                        layer,
                        x_variable: reg,
                        points: xs.len(),
                        fit,
                    });
                }
            }
        }
    }
    out
}

fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap()
}

/// `%.9g` formatting: nine significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-4, 1e9)`.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s.to_owned()
        }
    };
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mant), exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

fn round_fit(f: &FamilyFit) -> FamilyFit {
    let mut f = f.clone();
    f.fit.slope = round_sig9(f.fit.slope);
    f.fit.intercept = round_sig9(f.fit.intercept);
    f.fit.r_squared = round_sig9(f.fit.r_squared);
    f
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub series: LengthSeries,
    /// Named matrices, written as `cosine_<name>.csv`.
    pub matrices: Vec<(String, CosineMatrix)>,
    pub fits: Vec<FamilyFit>,
}

#[derive(Serialize)]
struct FitsFile<'a> {
    fits: Vec<FamilyFit>,
    excluded: &'a [Excluded],
}

pub const LENGTHS_HEADER: &str = "base,index,frequency,noise_proportion,syn0_norm,syn1neg_norm";

pub fn write_lengths_csv<W: Write>(series: &LengthSeries, w: &mut W) -> io::Result<()> {
    writeln!(w, "{LENGTHS_HEADER}")?;
    for r in &series.rows {
        let mut line = String::new();
        let _ = write!(line, "{},{},{},", r.base, r.index, r.frequency);
        if let Some(p) = r.noise_proportion {
            line.push_str(&fmt_g9(p));
        }
        let _ = write!(line, ",{},{}", fmt_g9(r.syn0_norm), fmt_g9(r.syn1neg_norm));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Writes `lengths.csv`, one `cosine_<name>.csv` per matrix and
/// `fits.json` (which also lists the excluded pseudowords) into `dir`.
/// Returns the paths written.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut create = |name: String| -> io::Result<(BufWriter<File>, PathBuf)> {
        let p = dir.join(name);
        paths.push(p.clone());
        Ok((BufWriter::new(File::create(&p)?), p))
    };
    let (mut w, _) = create("lengths.csv".into())?;
    write_lengths_csv(&report.series, &mut w)?;
    w.flush()?;
    for (name, m) in &report.matrices {
        let (mut w, _) = create(format!("cosine_{name}.csv"))?;
        m.write_csv(&mut w)?;
        w.flush()?;
    }
    let (mut w, _) = create("fits.json".into())?;
    let file = FitsFile {
        fits: report.fits.iter().map(round_fit).collect(),
        excluded: &report.series.excluded,
    };
    serde_json::to_writer_pretty(&mut w, &file).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(paths)
}

/// Series, per-family syn0 cosine matrices and fits for `manifests`.
pub fn analyze(model: &EmbeddingModel, manifests: &[ExperimentManifest]) -> Result<Report> {
    let series = length_series(model, manifests)?;
    let mut matrices = Vec::new();
    for m in manifests {
        let labels: Vec<String> = series
            .rows
            .iter()
            .filter(|r| r.base == m.base_word && m.pseudoword_labels.contains(&r.pseudoword))
            .map(|r| r.pseudoword.clone())
            .collect();
        if labels.is_empty() {
            continue;
        }
        let stem = m.pseudoword_labels[0].rsplit_once('_').map_or("", |(s, _)| s).to_owned();
        matrices.push((stem, cosine_matrix(model, Layer::Syn0, &labels)?));
    }
    let fits = family_fits(&series);
    Ok(Report {
        series,
        matrices,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbow::TrainingConfig;
    use crate::corpus::Vocabulary;
    use proptest::prelude::*;

    fn model(words: &[(&str, u64)], rows: &[[f32; 2]]) -> EmbeddingModel {
        let vocab = Vocabulary::from_counts(words.iter().map(|&(w, c)| (w, c)), 1);
        let cfg = TrainingConfig {
            dimension: 2,
            min_count: 2,
            ..Default::default()
        };
        let syn0: Vec<f32> = rows.iter().flatten().copied().collect();
        let syn1 = syn0.iter().map(|x| x * 2.0).collect();
        EmbeddingModel::from_parts(vocab, cfg, syn0, syn1).unwrap()
    }

    #[test]
    fn lengths_and_cosines() {
        let m = model(&[("a", 5), ("b", 4), ("z", 3)], &[[3.0, 4.0], [0.0, 1.0], [0.0, 0.0]]);
        assert_eq!(vector_length(&m, Layer::Syn0, "a").unwrap(), 5.0);
        assert_eq!(vector_length(&m, Layer::Syn1Neg, "a").unwrap(), 10.0);
        assert_eq!(vector_length(&m, Layer::Syn0, "z").unwrap(), 0.0);
        assert!(matches!(vector_length(&m, Layer::Syn0, "q"), Err(AnalysisError::UnknownWord(_))));
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.70710678).abs() < 1e-8);
        assert!(cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cosine_matrix_shapes_and_errors() {
        let m = model(&[("a", 5), ("b", 4)], &[[3.0, 4.0], [1.0, 0.0]]);
        let one = cosine_matrix(&m, Layer::Syn0, &["a".into()]).unwrap();
        assert_eq!(one.values, vec![1.0]);
        let dup = cosine_matrix(&m, Layer::Syn0, &["a".into(), "a".into()]).unwrap();
        assert!((dup.get(0, 1) - 1.0).abs() < 1e-12);
        match cosine_matrix(&m, Layer::Syn0, &["a".into(), "X_1".into(), "X_2".into()]) {
            Err(AnalysisError::MissingLabels(l)) => assert_eq!(l, vec!["X_1", "X_2"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = CosineMatrix {
            labels: vec!["A_1".into(), "A_2".into()],
            values: vec![1.0, 0.123456789123, 0.123456789123, 1.0],
        };
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "label,A_1,A_2\nA_1,1,0.123456789\nA_2,0.123456789,1\n");
        assert_eq!(CosineMatrix::read_csv(&buf[..]).unwrap(), m.rounded());
        assert!(CosineMatrix::read_csv(&b"label,A\nA,1,2\n"[..]).is_err());
    }

    #[test]
    fn g9_formatting() {
        assert_eq!(fmt_g9(0.5), "0.5");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(2.0 / 3.0 * 100.0), "66.6666667");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(0.0000123), "1.23e-05");
        assert_eq!(fmt_g9(0.000123), "0.000123");
        assert_eq!(fmt_g9(-2.5), "-2.5");
    }

    #[test]
    fn fits() {
        let f = fit_linear(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!((f.slope, f.intercept, f.r_squared), (2.0, 1.0, 1.0));
        let c = fit_linear(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((c.slope, c.r_squared, c.constant_y), (0.0, 1.0, true));
        assert!(matches!(fit_linear(&[1.0, 1.0], &[0.0, 2.0]), Err(AnalysisError::DegenerateFit)));
    }

    #[test]
    fn spearman_ranks() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 25.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 1.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_report_has_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&Report::default(), dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let csv = std::fs::read_to_string(dir.path().join("lengths.csv")).unwrap();
        assert_eq!(csv, format!("{LENGTHS_HEADER}\n"));
    }

    proptest! {
        #[test]
        fn collinear_fit_is_exact(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 2usize..30) {
            let xs: Vec<f64> = (0..n).map(|k| k as f64 * 0.5 - 3.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let f = fit_linear(&xs, &ys).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                prop_assert!((f.slope * x + f.intercept - y).abs() < 1e-10);
            }
            prop_assert!((f.r_squared - 1.0).abs() < 1e-12);
        }

        #[test]
        fn length_is_homogeneous(v in proptest::collection::vec(-1.0f32..1.0, 1..50), c in -4.0f32..4.0) {
            let scaled: Vec<f32> = v.iter().map(|x| x * c).collect();
            prop_assert!((norm(&scaled) - c.abs() as f64 * norm(&v)).abs() < 1e-6);
        }

        #[test]
        fn cosine_matrix_is_symmetric(rows in proptest::collection::vec([0.1f32..1.0, -1.0f32..1.0], 1..6)) {
            let words: Vec<(String, u64)> = (0..rows.len()).map(|k| (format!("w{k}"), 100 - k as u64)).collect();
            let refs: Vec<(&str, u64)> = words.iter().map(|(w, c)| (w.as_str(), *c)).collect();
            let m = model(&refs, &rows);
            let labels: Vec<String> = words.iter().map(|(w, _)| w.clone()).collect();
            let cm = cosine_matrix(&m, Layer::Syn0, &labels).unwrap();
            for a in 0..cm.len() {
                prop_assert!((cm.get(a, a) - 1.0).abs() < 1e-6);
                for b in 0..cm.len() {
                    prop_assert_eq!(cm.get(a, b), cm.get(b, a));
                    prop_assert!(cm.get(a, b).abs() <= 1.0);
                }
            }
        }
    }
}
