//! Reader and writer for word-vector files.
//!
//! Both formats start with a `V D` header line. The text format follows
//! with one `word v1 .. vD` line per word; the binary format writes the
//! word, a space, `D` little-endian `f32` values and a newline.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{CbowError, EmbeddingModel, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    Text,
    Binary,
}

impl VectorFormat {
    pub fn extension(self) -> &'static str {
        match self {
            VectorFormat::Text => "txt",
            VectorFormat::Binary => "bin",
        }
    }
}

/// Vectors read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub words: Vec<String>,
    pub dim: usize,
    /// Row-major `words.len() * dim` matrix.
    pub data: Vec<f32>,
}

impl Embeddings {
    pub fn row(&self, k: usize) -> &[f32] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }
}

/// `<dir>/<stem>.<layer>.<ext>`, e.g. `vectors.syn0.bin`.
pub fn vector_path(dir: &Path, stem: &str, layer: Layer, format: VectorFormat) -> PathBuf {
    dir.join(format!("{stem}.{}.{}", layer.name(), format.extension()))
}

/// Parses a `V D` header line.
pub fn parse_header(line: &str) -> Result<(usize, usize), CbowError> {
    let bad = |m: &str| CbowError::Format {
        line: 1,
        message: m.to_owned(),
    };
    let mut it = line.split_whitespace();
    let v = it.next().ok_or_else(|| bad("missing vocabulary size"))?;
    let d = it.next().ok_or_else(|| bad("missing dimension"))?;
    if it.next().is_some() {
        return Err(bad("trailing fields in header"));
    }
    let v = v.parse().map_err(|_| bad("vocabulary size is not an integer"))?;
    let d = d.parse().map_err(|_| bad("dimension is not an integer"))?;
    Ok((v, d))
}

pub fn write_vectors<'a, W, I>(
    w: &mut W,
    words: I,
    data: &[f32],
    dim: usize,
    format: VectorFormat,
) -> Result<(), CbowError>
where
    W: Write,
    I: ExactSizeIterator<Item = &'a str>,
{
    assert_eq!(words.len() * dim, data.len(), "matrix shape mismatch");
    writeln!(w, "{} {}", words.len(), dim)?;
    for (word, row) in words.zip(data.chunks_exact(dim.max(1))) {
        w.write_all(word.as_bytes())?;
        match format {
            VectorFormat::Text => {
                for v in row {
                    write!(w, " {v}")?;
                }
            }
            VectorFormat::Binary => {
                w.write_all(b" ")?;
                for v in row {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_vectors(
    model: &EmbeddingModel,
    layer: Layer,
    path: impl AsRef<Path>,
    format: VectorFormat,
) -> Result<(), CbowError> {
    let mut w = BufWriter::new(File::create(path)?);
    let words = model.vocab().entries().iter().map(|e| e.word.as_str());
    write_vectors(&mut w, words, model.matrix(layer), model.dim(), format)?;
    w.flush()?;
    Ok(())
}

fn read_line<R: BufRead>(r: &mut R, line: usize) -> Result<String, CbowError> {
    let mut buf = Vec::new();
    r.read_until(b'\n', &mut buf)?;
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    String::from_utf8(buf).map_err(|_| CbowError::Format {
        line,
        message: "invalid UTF-8".into(),
    })
}

pub fn read_vectors<R: BufRead>(mut r: R, format: VectorFormat) -> Result<Embeddings, CbowError> {
    let (n, dim) = parse_header(&read_line(&mut r, 1)?)?;
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for k in 0..n {
        let line_no = k + 2;
        let bad = |m: String| CbowError::Format {
            line: line_no,
            message: m,
        };
        match format {
            VectorFormat::Text => {
                let line = read_line(&mut r, line_no)?;
                let mut fields = line.split(' ');
                let word = fields.next().filter(|w| !w.is_empty()).ok_or_else(|| bad("missing word".into()))?;
                words.push(word.to_owned());
                let before = data.len();
                for f in fields {
                    data.push(f.parse::<f32>().map_err(|e| bad(format!("{e}: `{f}`")))?);
                }
                if data.len() - before != dim {
                    return Err(bad(format!("expected {dim} values, got {}", data.len() - before)));
                }
            }
            VectorFormat::Binary => {
                let mut wbuf = Vec::new();
                r.read_until(b' ', &mut wbuf)?;
                if wbuf.pop() != Some(b' ') || wbuf.is_empty() {
                    return Err(bad("truncated record".into()));
                }
                let word = String::from_utf8(wbuf).map_err(|_| bad("invalid UTF-8 word".into()))?;
                words.push(word);
                let mut raw = vec![0u8; dim * 4];
                r.read_exact(&mut raw)?;
                data.extend(raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])));
                let mut nl = [0u8; 1];
                r.read_exact(&mut nl)?;
                if nl[0] != b'\n' {
                    return Err(bad("missing record terminator".into()));
                }
            }
        }
    }
    Ok(Embeddings { words, dim, data })
}

pub fn load_vectors(path: impl AsRef<Path>, format: VectorFormat) -> Result<Embeddings, CbowError> {
    read_vectors(BufReader::new(File::open(path)?), format)
}
